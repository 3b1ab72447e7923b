//! The two-party protocol engine.
//!
//! A round runs Alice's encoding through the interferometer, lets Eve act on
//! arm `b`, applies Bob's phase (`bob_bit·π` plus static offset and noise) and
//! reads the detectors. If exactly one detector fires the round is kept: on
//! D1 Alice keeps her bit, on D2 she flips it. Bob's key bit is always his
//! own phase bit. Nondetections and double clicks are announced and dropped.

mod experiment;

pub use experiment::{run_experiment, run_experiment_with_bits, ExperimentRun, OutcomeCounts};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::adversary::{self, ArmBAccess, ArmBField, EveRecord, EveStrategy};
use crate::config::{ExperimentConfig, Source};
use crate::devices::{sample_outcome, sample_phase_noise, ChannelModel, DetectorModel};
use crate::field::{self, clicks_from_intensities, ClickProbabilities, FieldState};
use crate::optics::mach_zehnder::{PathField, PathState};
use crate::optics::{self, Arm, Outcome, OutcomeDistribution, Polarization, PureState, Transform};
use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferometerMode {
    /// Polarization-encoded folded interferometer.
    #[default]
    Michelson,
    /// Path-encoded variant with two 50:50 splitters.
    MachZehnder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub alice_bit: Bit,
    pub bob_bit: Bit,
    pub outcome: Outcome,
    pub kept: bool,
    pub alice_key_bit: Option<Bit>,
    pub bob_key_bit: Option<Bit>,
}

impl RoundRecord {
    /// Applies the sifting rule to one readout.
    pub fn sifted(index: u64, alice_bit: Bit, bob_bit: Bit, outcome: Outcome) -> Self {
        let alice_key_bit = key_bit_from_outcome(alice_bit, outcome).ok();
        let kept = alice_key_bit.is_some();
        RoundRecord {
            index,
            alice_bit,
            bob_bit,
            outcome,
            kept,
            alice_key_bit,
            bob_key_bit: kept.then_some(bob_bit),
        }
    }
}

/// Alice's key bit: her own bit on D1, its complement on D2.
pub fn key_bit_from_outcome(alice_bit: Bit, outcome: Outcome) -> Result<Bit> {
    match outcome {
        Outcome::D1 => Ok(alice_bit),
        Outcome::D2 => Ok(alice_bit.flip()),
        other => Err(Error::NotKept(other)),
    }
}

pub fn bob_phase(bob_bit: Bit) -> f64 {
    if bob_bit.is_one() {
        PI
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftedKey {
    pub alice: Vec<Bit>,
    pub bob: Vec<Bit>,
    /// Round index of every key position.
    pub rounds: Vec<u64>,
    pub efficiency: f64,
    pub discarded_none: u64,
    pub discarded_both: u64,
}

/// Keeps D1/D2 rounds. `efficiency = kept / total`.
pub fn sift(records: &[RoundRecord]) -> SiftedKey {
    let mut key = SiftedKey {
        alice: Vec::new(),
        bob: Vec::new(),
        rounds: Vec::new(),
        efficiency: 0.0,
        discarded_none: 0,
        discarded_both: 0,
    };
    for r in records {
        match (r.alice_key_bit, r.bob_key_bit) {
            (Some(a), Some(b)) => {
                key.alice.push(a);
                key.bob.push(b);
                key.rounds.push(r.index);
            }
            _ if r.outcome == Outcome::Both => key.discarded_both += 1,
            _ => key.discarded_none += 1,
        }
    }
    if !records.is_empty() {
        key.efficiency = key.alice.len() as f64 / records.len() as f64;
    }
    key
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberEstimate {
    pub sampled: u64,
    pub errors: u64,
    pub qber: f64,
    pub abort: bool,
    pub threshold: f64,
    /// Sifted-key positions disclosed for the estimate, ascending.
    #[serde(skip)]
    pub positions: Vec<usize>,
}

/// Discloses a random `sample_fraction` of the sifted key (at least one bit
/// when the key is not empty) and counts disagreements.
pub fn estimate_qber<R: Rng + ?Sized>(
    alice_key: &[Bit],
    bob_key: &[Bit],
    sample_fraction: f64,
    threshold: f64,
    rng: &mut R,
) -> Result<QberEstimate> {
    if alice_key.len() != bob_key.len() {
        return Err(Error::LengthMismatch {
            alice: alice_key.len(),
            bob: bob_key.len(),
        });
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::OutOfRange {
            name: "sample_fraction",
            value: sample_fraction,
            expected: "(0, 1]",
        });
    }
    let len = alice_key.len();
    // Guard against 0.1 * 10_000 = 1000.0000000000001 rounding up.
    let amount = ((len as f64 * sample_fraction) - 1e-9)
        .ceil()
        .clamp(0.0, len as f64) as usize;
    let mut positions = index::sample(rng, len, amount).into_vec();
    positions.sort_unstable();
    let errors = positions
        .iter()
        .filter(|&&p| alice_key[p] != bob_key[p])
        .count() as u64;
    let sampled = positions.len() as u64;
    let qber = if sampled > 0 {
        errors as f64 / sampled as f64
    } else {
        0.0
    };
    Ok(QberEstimate {
        sampled,
        errors,
        qber,
        abort: qber > threshold,
        threshold,
        positions,
    })
}

/// Photon state between the two passes of the splitting element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Arms {
    Michelson(PureState),
    MachZehnder(PathState),
}

impl ArmBAccess for Arms {
    fn arm_b_readings(&self) -> Vec<(Option<Polarization>, f64)> {
        match self {
            Arms::Michelson(s) => s.arm_b_readings(),
            Arms::MachZehnder(s) => s.arm_b_readings(),
        }
    }

    fn without_arm_b(&self) -> Self {
        match self {
            Arms::Michelson(s) => Arms::Michelson(s.without_arm_b()),
            Arms::MachZehnder(s) => Arms::MachZehnder(s.without_arm_b()),
        }
    }

    fn fresh_photon_in_arm_b(&self, reading: Option<Polarization>) -> Self {
        match self {
            Arms::Michelson(s) => Arms::Michelson(s.fresh_photon_in_arm_b(reading)),
            Arms::MachZehnder(s) => Arms::MachZehnder(s.fresh_photon_in_arm_b(reading)),
        }
    }

    fn norm_sqr(&self) -> f64 {
        match self {
            Arms::Michelson(s) => s.norm_sqr(),
            Arms::MachZehnder(s) => s.norm_sqr(),
        }
    }

    fn renormalized(&self) -> Self {
        match self {
            Arms::Michelson(s) => Arms::Michelson(s.renormalized()),
            Arms::MachZehnder(s) => Arms::MachZehnder(s.renormalized()),
        }
    }
}

/// Coherent field between the two passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FieldArms {
    Michelson(FieldState),
    MachZehnder(PathField),
}

impl ArmBField for FieldArms {
    fn scale_arm_b(&mut self, t: f64) -> f64 {
        match self {
            FieldArms::Michelson(f) => ArmBField::scale_arm_b(f, t),
            FieldArms::MachZehnder(f) => f.scale_arm_b(t),
        }
    }

    fn arm_b_amplitude(&self) -> num_complex::Complex64 {
        match self {
            FieldArms::Michelson(f) => f.arm_b_amplitude(),
            FieldArms::MachZehnder(f) => f.arm_b_amplitude(),
        }
    }
}

/// One intercept-resend measurement branch on a concrete carrier.
pub(crate) struct PhotonBranch {
    pub probability: f64,
    pub arms: Arms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutput {
    pub record: RoundRecord,
    pub eve: EveRecord,
}

/// Validated device, channel and adversary setup shared by the Monte Carlo
/// engine and the exact oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub mode: InterferometerMode,
    pub source: Source,
    pub channel: ChannelModel,
    pub detector: DetectorModel,
    pub eve: EveStrategy,
}

impl Protocol {
    pub fn new(
        mode: InterferometerMode,
        source: Source,
        channel: ChannelModel,
        detector: DetectorModel,
        eve: EveStrategy,
    ) -> Result<Self> {
        eve.validate()?;
        match (source, eve) {
            (Source::SinglePhoton, EveStrategy::PnsTap { .. }) => {
                return Err(Error::Unsupported(
                    "a PNS tap needs a coherent source".into(),
                ))
            }
            (Source::Coherent { .. }, EveStrategy::InterceptResend) => {
                return Err(Error::Unsupported(
                    "intercept-resend is modeled for single photons only".into(),
                ))
            }
            (Source::Coherent { mu }, _) if !(mu >= 0.0 && mu.is_finite()) => {
                return Err(Error::OutOfRange {
                    name: "mu",
                    value: mu,
                    expected: "[0, inf)",
                })
            }
            _ => {}
        }
        Ok(Protocol {
            mode,
            source,
            channel,
            detector,
            eve,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Protocol::new(
            cfg.mode,
            cfg.source_model(),
            cfg.channel()?,
            cfg.detector()?,
            cfg.eve_strategy(),
        )
    }

    /// Encode, split and attenuate.
    pub(crate) fn photon_arms(&self, alice: Bit) -> Result<Arms> {
        let ch = &self.channel;
        Ok(match self.mode {
            InterferometerMode::Michelson => {
                let s = optics::propagate(
                    &optics::encode_photon(alice),
                    &[
                        Transform::Hwp,
                        Transform::PbsForward,
                        Transform::ArmLoss(Arm::A, ch.t_a),
                        Transform::ArmLoss(Arm::B, ch.t_b),
                    ],
                )?;
                Arms::Michelson(s)
            }
            InterferometerMode::MachZehnder => Arms::MachZehnder(
                PathState::enter(alice)
                    .with_loss(Arm::A, ch.t_a)?
                    .with_loss(Arm::B, ch.t_b)?,
            ),
        })
    }

    /// Eve's measurement branches on the carrier (a single unit branch when
    /// she is not intercepting).
    pub(crate) fn photon_branches(&self, arms: &Arms) -> Vec<PhotonBranch> {
        match self.eve {
            EveStrategy::InterceptResend => adversary::intercept_branches(arms)
                .into_iter()
                .map(|b| PhotonBranch {
                    probability: b.probability,
                    arms: b.state,
                })
                .collect(),
            _ => vec![PhotonBranch {
                probability: 1.0,
                arms: *arms,
            }],
        }
    }

    /// Arm-`b` phase, recombination and ideal readout.
    pub(crate) fn close_photon(&self, arms: &Arms, phase: f64) -> Result<OutcomeDistribution> {
        match arms {
            Arms::Michelson(s) => {
                let s = optics::propagate(
                    s,
                    &[
                        Transform::ArmPhase(Arm::B, phase),
                        Transform::PbsBackward,
                        Transform::Hwp,
                        Transform::Route,
                    ],
                )?;
                Ok(optics::ideal_click_probabilities(&s))
            }
            Arms::MachZehnder(s) => Ok(s.with_phase(Arm::B, phase).recombine()),
        }
    }

    pub(crate) fn field_arms(&self, alice: Bit, mu: f64) -> Result<FieldArms> {
        let ch = &self.channel;
        Ok(match self.mode {
            InterferometerMode::Michelson => FieldArms::Michelson(field::propagate_field(
                &field::field_from_source(mu, alice)?,
                &[
                    Transform::Hwp,
                    Transform::PbsForward,
                    Transform::ArmLoss(Arm::A, ch.t_a),
                    Transform::ArmLoss(Arm::B, ch.t_b),
                ],
            )?),
            InterferometerMode::MachZehnder => FieldArms::MachZehnder(
                PathField::enter(mu, alice)
                    .with_loss(Arm::A, ch.t_a)?
                    .with_loss(Arm::B, ch.t_b)?,
            ),
        })
    }

    pub(crate) fn tap_field(&self, arms: &FieldArms) -> Result<(FieldArms, EveRecord)> {
        match self.eve {
            EveStrategy::PnsTap { transmittance } => {
                let (out, rec) = adversary::pns_tap(arms, transmittance)?;
                Ok((out, EveRecord::Tap(rec)))
            }
            _ => Ok((*arms, EveRecord::None)),
        }
    }

    pub(crate) fn close_field(&self, arms: &FieldArms, phase: f64) -> Result<ClickProbabilities> {
        let (i1, i2) = match arms {
            FieldArms::Michelson(f) => {
                let f = field::propagate_field(
                    f,
                    &[
                        Transform::ArmPhase(Arm::B, phase),
                        Transform::PbsBackward,
                        Transform::Hwp,
                        Transform::Route,
                    ],
                )?;
                (
                    f.location_intensity(optics::Location::DetPort1),
                    f.location_intensity(optics::Location::DetPort2),
                )
            }
            FieldArms::MachZehnder(f) => f.with_phase(Arm::B, phase).port_intensities(),
        };
        Ok(clicks_from_intensities(i1, i2, &self.detector))
    }

    /// Runs one Monte Carlo round.
    ///
    /// Stream usage per round: one normal (phase noise), one uniform for an
    /// intercept, then four uniforms for single-photon detection or two for
    /// coherent detection.
    pub fn run_round<R: Rng + ?Sized>(
        &self,
        index: u64,
        alice: Bit,
        bob: Bit,
        rng: &mut R,
    ) -> Result<RoundOutput> {
        let phase = bob_phase(bob) + sample_phase_noise(&self.channel, rng);
        let (outcome, eve) = match self.source {
            Source::SinglePhoton => {
                let mut arms = self.photon_arms(alice)?;
                let mut eve = EveRecord::None;
                if let EveStrategy::InterceptResend = self.eve {
                    let (state, record) = adversary::intercept_resend(&arms, rng);
                    arms = state;
                    eve = EveRecord::Intercept(record);
                }
                let dist = self.close_photon(&arms, phase)?;
                (sample_outcome(&dist, &self.detector, rng), eve)
            }
            Source::Coherent { mu } => {
                let arms = self.field_arms(alice, mu)?;
                let (arms, eve) = self.tap_field(&arms)?;
                let clicks = self.close_field(&arms, phase)?;
                let c1 = rng.random::<f64>() < clicks.d1;
                let c2 = rng.random::<f64>() < clicks.d2;
                (crate::devices::click_pattern(c1, c2), eve)
            }
        };
        Ok(RoundOutput {
            record: RoundRecord::sifted(index, alice, bob, outcome),
            eve,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EveKind, ExperimentConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Bit::{One, Zero};

    fn ideal(mode: InterferometerMode) -> Protocol {
        Protocol::from_config(&ExperimentConfig {
            mode,
            ..ExperimentConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn key_bit_rule() {
        assert_eq!(key_bit_from_outcome(Zero, Outcome::D1).unwrap(), Zero);
        assert_eq!(key_bit_from_outcome(Zero, Outcome::D2).unwrap(), One);
        assert_eq!(key_bit_from_outcome(One, Outcome::D2).unwrap(), Zero);
        assert_eq!(
            key_bit_from_outcome(One, Outcome::None),
            Err(Error::NotKept(Outcome::None))
        );
        assert_eq!(
            key_bit_from_outcome(One, Outcome::Both),
            Err(Error::NotKept(Outcome::Both))
        );
    }

    #[test]
    fn ideal_rounds_route_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mode in [
            InterferometerMode::Michelson,
            InterferometerMode::MachZehnder,
        ] {
            let p = ideal(mode);
            let cases = [
                (Zero, Zero, Outcome::D1, Zero),
                (Zero, One, Outcome::D2, One),
                (One, Zero, Outcome::D2, Zero),
                (One, One, Outcome::D1, One),
            ];
            for (i, (a, b, outcome, key)) in cases.into_iter().enumerate() {
                for _ in 0..50 {
                    let r = p.run_round(i as u64, a, b, &mut rng).unwrap().record;
                    assert_eq!(r.outcome, outcome, "{mode:?} {a}{b}");
                    assert!(r.kept);
                    assert_eq!(r.alice_key_bit, Some(key));
                    assert_eq!(r.bob_key_bit, Some(key));
                }
            }
        }
    }

    #[test]
    fn record_invariants() {
        for o in Outcome::ALL {
            let r = RoundRecord::sifted(7, One, Zero, o);
            assert_eq!(r.kept, o.is_kept());
            assert_eq!(r.alice_key_bit.is_some(), r.kept);
            assert_eq!(r.bob_key_bit, r.kept.then_some(Zero));
        }
    }

    #[test]
    fn sift_examples() {
        let d1: Vec<_> = [Zero, One, One]
            .iter()
            .enumerate()
            .map(|(i, &a)| RoundRecord::sifted(i as u64, a, a, Outcome::D1))
            .collect();
        let k = sift(&d1);
        assert_eq!(k.efficiency, 1.0);
        assert_eq!(k.alice, vec![Zero, One, One]);
        assert_eq!(k.alice, k.bob);

        let none: Vec<_> = (0..5)
            .map(|i| RoundRecord::sifted(i, Zero, One, Outcome::None))
            .collect();
        let k = sift(&none);
        assert_eq!(k.efficiency, 0.0);
        assert!(k.alice.is_empty() && k.bob.is_empty());
        assert_eq!(k.discarded_none, 5);

        let mixed = [
            RoundRecord::sifted(0, Zero, Zero, Outcome::D1),
            RoundRecord::sifted(1, Zero, One, Outcome::D2),
            RoundRecord::sifted(2, One, One, Outcome::Both),
            RoundRecord::sifted(3, One, Zero, Outcome::D2),
        ];
        let k = sift(&mixed);
        assert_eq!(k.efficiency, 0.75);
        assert_eq!(k.alice.len(), 3);
        assert_eq!(k.rounds, vec![0, 1, 3]);
        assert_eq!(k.discarded_both, 1);
        assert_eq!(k.discarded_none, 0);
        assert!(sift(&[]).alice.is_empty());
    }

    #[test]
    fn qber_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<Bit> = (0..200).map(|i| Bit::from(i % 3 == 0)).collect();

        let same = estimate_qber(&a, &a, 0.3, 0.11, &mut rng).unwrap();
        assert_eq!((same.errors, same.qber, same.abort), (0, 0.0, false));
        assert_eq!(same.sampled, 60);
        assert!(same.positions.windows(2).all(|w| w[0] < w[1]));

        let flipped: Vec<Bit> = a.iter().map(|b| b.flip()).collect();
        let all = estimate_qber(&a, &flipped, 1.0, 0.11, &mut rng).unwrap();
        assert_eq!((all.sampled, all.qber, all.abort), (200, 1.0, true));

        let half: Vec<Bit> = a
            .iter()
            .enumerate()
            .map(|(i, b)| if i % 2 == 0 { b.flip() } else { *b })
            .collect();
        assert_eq!(
            estimate_qber(&a, &half, 1.0, 0.11, &mut rng).unwrap().qber,
            0.5
        );

        assert!(matches!(
            estimate_qber(&a, &a[..10], 0.5, 0.11, &mut rng),
            Err(Error::LengthMismatch {
                alice: 200,
                bob: 10
            })
        ));
        assert!(estimate_qber(&a, &a, 0.0, 0.11, &mut rng).is_err());
        let empty = estimate_qber(&[], &[], 0.1, 0.11, &mut rng).unwrap();
        assert_eq!((empty.sampled, empty.abort), (0, false));
    }

    #[test]
    fn sample_size_is_not_inflated_by_rounding() {
        let key = vec![Zero; 10_000];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            estimate_qber(&key, &key, 0.1, 0.11, &mut rng)
                .unwrap()
                .sampled,
            1000
        );
        let key = vec![Zero; 7];
        assert_eq!(
            estimate_qber(&key, &key, 0.1, 0.11, &mut rng)
                .unwrap()
                .sampled,
            1
        );
    }

    #[test]
    fn ideal_experiment_is_perfect() {
        let cfg = ExperimentConfig::default();
        let run = run_experiment(&cfg, 1).unwrap();
        assert_eq!(run.counts.total(), 10_000);
        assert_eq!(run.sifted.efficiency, 1.0);
        assert_eq!(run.qber.qber, 0.0);
        assert_eq!(run.qber.sampled, 1000);
        assert_eq!(run.final_alice_key.len(), 9000);
        assert_eq!(run.final_alice_key, run.final_bob_key);
    }

    #[test]
    fn half_efficient_detectors_keep_half() {
        let cfg = ExperimentConfig {
            eta: 0.5,
            seed: 5,
            ..ExperimentConfig::default()
        };
        let run = run_experiment(&cfg, 1).unwrap();
        assert!(
            (run.sifted.efficiency - 0.5).abs() < 0.016,
            "{}",
            run.sifted.efficiency
        );
        assert_eq!(run.counts.both, 0);
        assert_eq!(run.sifted.alice, run.sifted.bob);
    }

    #[test]
    fn fixed_bits_are_used_verbatim() {
        let bits = [(Zero, One), (One, One), (One, Zero)];
        let run = run_experiment_with_bits(&ExperimentConfig::default(), &bits, 1).unwrap();
        let got: Vec<_> = run
            .records
            .iter()
            .map(|r| (r.alice_bit, r.bob_bit, r.outcome))
            .collect();
        assert_eq!(
            got,
            vec![
                (Zero, One, Outcome::D2),
                (One, One, Outcome::D1),
                (One, Zero, Outcome::D2)
            ]
        );
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = ExperimentConfig {
            rounds: 5000,
            eve: EveKind::InterceptResend,
            eta: 0.9,
            dark: 0.01,
            phase_noise_sigma: 0.3,
            seed: 77,
            ..ExperimentConfig::default()
        };
        let one = run_experiment(&cfg, 1).unwrap();
        assert_eq!(one, run_experiment(&cfg, 4).unwrap());
        assert_eq!(one, run_experiment(&cfg, 3).unwrap());
        let other = run_experiment(&ExperimentConfig { seed: 78, ..cfg }, 1).unwrap();
        assert_ne!(one.records, other.records);
    }

    #[test]
    fn invalid_combinations_are_rejected() {
        let p = Protocol::new(
            InterferometerMode::Michelson,
            Source::SinglePhoton,
            ChannelModel::IDEAL,
            DetectorModel::IDEAL,
            EveStrategy::PnsTap { transmittance: 0.5 },
        );
        assert!(matches!(p, Err(Error::Unsupported(_))));
        let p = Protocol::new(
            InterferometerMode::Michelson,
            Source::Coherent { mu: -1.0 },
            ChannelModel::IDEAL,
            DetectorModel::IDEAL,
            EveStrategy::None,
        );
        assert!(matches!(p, Err(Error::OutOfRange { name: "mu", .. })));
    }
}
