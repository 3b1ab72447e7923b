//! Output documents: the experiment report, the public classical transcript
//! and round-log rows.

use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryReport;
use crate::analysis::{EfficiencyConstants, REFERENCE_EFFICIENCIES};
use crate::config::ExperimentConfig;
use crate::protocol::{ExperimentRun, OutcomeCounts, QberEstimate, RoundRecord};
use crate::Bit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub counts: OutcomeCounts,
    /// `(d1 + d2) / rounds`.
    pub sifting_efficiency: f64,
    /// `both / rounds`.
    pub both_rate: f64,
    pub qber: QberEstimate,
    pub sifted_key_length: u64,
    pub final_key_length: u64,
    pub adversary: AdversaryReport,
    pub reference_efficiencies: EfficiencyConstants,
    pub seed: u64,
    pub workers: u64,
    pub wall_clock_ms: f64,
}

impl ExperimentReport {
    pub fn from_run(
        config: &ExperimentConfig,
        run: &ExperimentRun,
        workers: usize,
        wall_clock_ms: f64,
    ) -> Self {
        let rounds = run.counts.total().max(1) as f64;
        ExperimentReport {
            config: config.clone(),
            counts: run.counts,
            sifting_efficiency: (run.counts.d1 + run.counts.d2) as f64 / rounds,
            both_rate: run.counts.both as f64 / rounds,
            qber: run.qber.clone(),
            sifted_key_length: run.sifted.alice.len() as u64,
            final_key_length: run.final_alice_key.len() as u64,
            adversary: run.adversary,
            reference_efficiencies: REFERENCE_EFFICIENCIES,
            seed: config.seed,
            workers: workers as u64,
            wall_clock_ms,
        }
    }
}

/// One disclosed key position used for error estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosedBit {
    pub position: u64,
    pub round: u64,
    pub alice_bit: Bit,
    pub bob_bit: Bit,
}

/// Everything sent over the classical channel. Nothing else leaves either
/// party: kept rounds and which detector fired are never announced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicTranscript {
    /// Rounds Alice announces as discarded (no click or double click).
    pub discarded_rounds: Vec<u64>,
    /// Key bits disclosed by both parties for the error estimate.
    pub disclosed: Vec<DisclosedBit>,
}

impl PublicTranscript {
    pub fn from_run(run: &ExperimentRun) -> Self {
        let discarded_rounds = run
            .records
            .iter()
            .filter(|r| !r.kept)
            .map(|r| r.index)
            .collect();
        let disclosed = run
            .qber
            .positions
            .iter()
            .map(|&p| DisclosedBit {
                position: p as u64,
                round: run.sifted.rounds[p],
                alice_bit: run.sifted.alice[p],
                bob_bit: run.sifted.bob[p],
            })
            .collect();
        PublicTranscript {
            discarded_rounds,
            disclosed,
        }
    }
}

/// CSV header of the round log.
pub const ROUND_LOG_HEADER: [&str; 7] = [
    "index",
    "alice_bit",
    "bob_bit",
    "outcome",
    "kept",
    "alice_key",
    "bob_key",
];

/// One row of the round log; absent key bits are empty fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundLogRow {
    pub index: u64,
    pub alice_bit: u8,
    pub bob_bit: u8,
    pub outcome: &'static str,
    pub kept: bool,
    pub alice_key: Option<u8>,
    pub bob_key: Option<u8>,
}

impl From<&RoundRecord> for RoundLogRow {
    fn from(r: &RoundRecord) -> Self {
        RoundLogRow {
            index: r.index,
            alice_bit: r.alice_bit.as_u8(),
            bob_bit: r.bob_bit.as_u8(),
            outcome: r.outcome.as_str(),
            kept: r.kept,
            alice_key: r.alice_key_bit.map(Bit::as_u8),
            bob_key: r.bob_key_bit.map(Bit::as_u8),
        }
    }
}
