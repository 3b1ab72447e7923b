use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{estimate_qber, sift, Protocol, QberEstimate, RoundOutput, RoundRecord, SiftedKey};
use crate::adversary::{eve_information, AdversaryReport, EveRecord};
use crate::config::ExperimentConfig;
use crate::devices::RngSeed;
use crate::optics::Outcome;
use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub d1: u64,
    pub d2: u64,
    pub none: u64,
    pub both: u64,
}

impl OutcomeCounts {
    pub fn tally(records: &[RoundRecord]) -> Self {
        let mut c = OutcomeCounts::default();
        for r in records {
            match r.outcome {
                Outcome::D1 => c.d1 += 1,
                Outcome::D2 => c.d2 += 1,
                Outcome::None => c.none += 1,
                Outcome::Both => c.both += 1,
            }
        }
        c
    }

    pub fn get(&self, o: Outcome) -> u64 {
        match o {
            Outcome::D1 => self.d1,
            Outcome::D2 => self.d2,
            Outcome::None => self.none,
            Outcome::Both => self.both,
        }
    }

    pub fn total(&self) -> u64 {
        self.d1 + self.d2 + self.none + self.both
    }
}

/// Everything a finished experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub records: Vec<RoundRecord>,
    pub eve_records: Vec<EveRecord>,
    pub counts: OutcomeCounts,
    pub sifted: SiftedKey,
    pub qber: QberEstimate,
    /// Sifted key with the disclosed positions removed.
    pub final_alice_key: Vec<Bit>,
    pub final_bob_key: Vec<Bit>,
    pub adversary: AdversaryReport,
}

/// Runs `config.rounds` rounds with uniformly random bits for both parties.
///
/// `workers > 1` evaluates blocks in parallel (feature `parallel`); the
/// result does not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentRun> {
    run_inner(config, None, workers)
}

/// Like [`run_experiment`] but with fixed `(alice, bob)` bits per round.
/// Runs `bits.len()` rounds.
pub fn run_experiment_with_bits(
    config: &ExperimentConfig,
    bits: &[(Bit, Bit)],
    workers: usize,
) -> Result<ExperimentRun> {
    run_inner(config, Some(bits), workers)
}

fn run_inner(
    config: &ExperimentConfig,
    bits: Option<&[(Bit, Bit)]>,
    workers: usize,
) -> Result<ExperimentRun> {
    let protocol = Protocol::from_config(config)?;
    let rounds = bits.map_or(config.rounds, |b| b.len() as u64);
    if rounds == 0 {
        return Err(Error::OutOfRange {
            name: "rounds",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let seed = config.rng_seed();
    let outputs = run_blocks(&protocol, seed, rounds, bits, workers)?;

    let (records, eve_records): (Vec<_>, Vec<_>) =
        outputs.into_iter().map(|o| (o.record, o.eve)).unzip();
    let counts = OutcomeCounts::tally(&records);
    let sifted = sift(&records);
    let qber = estimate_qber(
        &sifted.alice,
        &sifted.bob,
        config.sample_fraction,
        config.qber_threshold,
        &mut seed.qber_stream(),
    )?;
    let (final_alice_key, final_bob_key) = remove_positions(&sifted, &qber.positions);
    let adversary = eve_information(&protocol.eve, &records, &eve_records);
    Ok(ExperimentRun {
        records,
        eve_records,
        counts,
        sifted,
        qber,
        final_alice_key,
        final_bob_key,
        adversary,
    })
}

fn remove_positions(key: &SiftedKey, positions: &[usize]) -> (Vec<Bit>, Vec<Bit>) {
    let mut disclosed = positions.iter().peekable();
    let mut alice = Vec::with_capacity(key.alice.len() - positions.len());
    let mut bob = Vec::with_capacity(alice.capacity());
    for (i, (&a, &b)) in key.alice.iter().zip(&key.bob).enumerate() {
        if disclosed.peek() == Some(&&i) {
            disclosed.next();
            continue;
        }
        alice.push(a);
        bob.push(b);
    }
    (alice, bob)
}

fn run_block(
    protocol: &Protocol,
    seed: RngSeed,
    block: u64,
    rounds: u64,
    bits: Option<&[(Bit, Bit)]>,
) -> Result<Vec<RoundOutput>> {
    let start = block * RngSeed::BLOCK_ROUNDS;
    let end = (start + RngSeed::BLOCK_ROUNDS).min(rounds);
    let mut rng = seed.block_stream(block);
    (start..end)
        .map(|index| {
            let (alice, bob) = match bits {
                Some(b) => b[index as usize],
                None => (
                    Bit::from(rng.random::<bool>()),
                    Bit::from(rng.random::<bool>()),
                ),
            };
            protocol.run_round(index, alice, bob, &mut rng)
        })
        .collect()
}

fn run_blocks(
    protocol: &Protocol,
    seed: RngSeed,
    rounds: u64,
    bits: Option<&[(Bit, Bit)]>,
    workers: usize,
) -> Result<Vec<RoundOutput>> {
    let blocks = rounds.div_ceil(RngSeed::BLOCK_ROUNDS);

    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
        let per_block: Vec<Result<Vec<RoundOutput>>> = pool.install(|| {
            (0..blocks)
                .into_par_iter()
                .map(|b| run_block(protocol, seed, b, rounds, bits))
                .collect()
        });
        let mut out = Vec::with_capacity(rounds as usize);
        for block in per_block {
            out.extend(block?);
        }
        return Ok(out);
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;

    let mut out = Vec::with_capacity(rounds as usize);
    for b in 0..blocks {
        out.extend(run_block(protocol, seed, b, rounds, bits)?);
    }
    Ok(out)
}
