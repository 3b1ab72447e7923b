//! Eavesdropping strategies.
//!
//! Eve only reaches the arm that runs to Bob's site. Everything in this
//! module goes through [`ArmBAccess`] and [`ArmBField`], which expose arm `b`
//! and nothing else; the state implementations live next to the state types.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::check_unit;
use crate::optics::Polarization;
use crate::protocol::RoundRecord;
use crate::{Bit, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum EveStrategy {
    #[default]
    None,
    /// Measure which-path (and polarization) on arm `b`, resend toward Bob.
    InterceptResend,
    /// Beam-splitter tap of the given transmittance on arm `b`.
    PnsTap { transmittance: f64 },
}

impl EveStrategy {
    pub fn validate(&self) -> Result<()> {
        if let EveStrategy::PnsTap { transmittance } = *self {
            check_unit("tap_transmittance", transmittance)?;
        }
        Ok(())
    }
}

/// Single-photon states seen from arm `b`.
pub trait ArmBAccess: Sized {
    /// Born weight of every distinguishable photon reading in arm `b`.
    /// `None` means the reading carries no polarization.
    fn arm_b_readings(&self) -> Vec<(Option<Polarization>, f64)>;
    /// Projection onto "no photon in arm `b`", not renormalized.
    fn without_arm_b(&self) -> Self;
    /// A fresh photon of the given reading placed in arm `b` of an
    /// otherwise empty carrier.
    fn fresh_photon_in_arm_b(&self, reading: Option<Polarization>) -> Self;
    fn norm_sqr(&self) -> f64;
    fn renormalized(&self) -> Self;
}

/// Coherent fields seen from arm `b`.
pub trait ArmBField: Sized + Copy {
    /// Scales arm `b` by `sqrt(t)`, returning the removed intensity.
    fn scale_arm_b(&mut self, t: f64) -> f64;
    /// The largest-magnitude amplitude in arm `b`.
    fn arm_b_amplitude(&self) -> Complex64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterceptRecord {
    pub saw_photon: bool,
    pub polarization: Option<Polarization>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptBranch<S> {
    pub probability: f64,
    pub state: S,
    pub record: InterceptRecord,
}

/// All measurement branches of an intercept-resend on arm `b`.
pub fn intercept_branches<S: ArmBAccess>(state: &S) -> Vec<InterceptBranch<S>> {
    let mut out: Vec<InterceptBranch<S>> = state
        .arm_b_readings()
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(reading, w)| InterceptBranch {
            probability: w,
            state: state.fresh_photon_in_arm_b(reading),
            record: InterceptRecord {
                saw_photon: true,
                polarization: reading,
            },
        })
        .collect();
    let rest = state.without_arm_b();
    let w = rest.norm_sqr();
    if w > 0.0 {
        out.push(InterceptBranch {
            probability: w,
            state: rest.renormalized(),
            record: InterceptRecord {
                saw_photon: false,
                polarization: None,
            },
        });
    }
    out
}

/// Samples one intercept branch. Consumes exactly one uniform.
pub fn intercept_resend<S: ArmBAccess + Clone, R: Rng + ?Sized>(
    state: &S,
    rng: &mut R,
) -> (S, InterceptRecord) {
    let u: f64 = rng.random();
    let branches = intercept_branches(state);
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut acc = 0.0;
    let last = branches.len().saturating_sub(1);
    for (i, b) in branches.iter().enumerate() {
        acc += b.probability / total;
        if u < acc || i == last {
            return (b.state.clone(), b.record);
        }
    }
    // Only reachable for a zero state.
    (
        state.without_arm_b(),
        InterceptRecord {
            saw_photon: false,
            polarization: None,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapRecord {
    /// Mean photon number diverted to Eve.
    pub intensity: f64,
    /// Eve's guess from the phase of the tapped light.
    pub guess: Bit,
}

/// Taps arm `b` with transmittance `t`.
pub fn pns_tap<F: ArmBField>(field: &F, t: f64) -> Result<(F, TapRecord)> {
    check_unit("tap_transmittance", t)?;
    let mut out = *field;
    let tapped = field.arm_b_amplitude() * (1.0 - t).sqrt();
    let intensity = out.scale_arm_b(t);
    let guess = Bit::from(tapped.re < 0.0);
    Ok((out, TapRecord { intensity, guess }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EveRecord {
    None,
    Intercept(InterceptRecord),
    Tap(TapRecord),
}

impl EveRecord {
    /// Eve's guess of the key bit, if the round left her with any record.
    pub fn key_guess(&self) -> Option<Bit> {
        match *self {
            EveRecord::None => None,
            EveRecord::Intercept(r) if r.saw_photon => {
                Some(r.polarization.map_or(Bit::Zero, Polarization::bit))
            }
            EveRecord::Intercept(_) => None,
            EveRecord::Tap(r) if r.intensity > 0.0 => Some(r.guess),
            EveRecord::Tap(_) => None,
        }
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            EveRecord::Tap(r) => r.intensity,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntensityStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdversaryReport {
    /// Rounds in which Eve obtained a photon or nonzero tapped intensity.
    pub intercepted_rounds: u64,
    /// Kept rounds in which Eve had a guess.
    pub guess_rounds: u64,
    pub guess_agreements: u64,
    /// `agreements / guess_rounds − 0.5`, zero when Eve never guessed.
    pub guess_advantage: f64,
    pub eve_intensity: IntensityStats,
}

/// What Eve's records say about Bob's sifted key bits.
pub fn eve_information(
    strategy: &EveStrategy,
    records: &[RoundRecord],
    eve: &[EveRecord],
) -> AdversaryReport {
    if matches!(strategy, EveStrategy::None) {
        return AdversaryReport::default();
    }
    let mut report = AdversaryReport::default();
    let mut stats = IntensityStats {
        mean: 0.0,
        min: f64::INFINITY,
        max: 0.0,
    };
    for (rec, e) in records.iter().zip(eve) {
        let guess = e.key_guess();
        if guess.is_some() {
            report.intercepted_rounds += 1;
        }
        if let (Some(g), Some(bob)) = (guess, rec.bob_key_bit) {
            report.guess_rounds += 1;
            report.guess_agreements += u64::from(g == bob);
        }
        let i = e.intensity();
        stats.mean += i;
        stats.min = stats.min.min(i);
        stats.max = stats.max.max(i);
    }
    if records.is_empty() {
        stats.min = 0.0;
    } else {
        stats.mean /= records.len() as f64;
    }
    report.eve_intensity = stats;
    if report.guess_rounds > 0 {
        report.guess_advantage = report.guess_agreements as f64 / report.guess_rounds as f64 - 0.5;
    }
    report
}
