//! Detector, channel and random-number models.
//!
//! Every round draws a fixed number of variates from its stream regardless of
//! parameter values, so changing e.g. `dark` from 0 to 1e-9 perturbs outcomes
//! but never shifts the stream alignment of later rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, check_unit};
use crate::optics::{Outcome, OutcomeDistribution};
use crate::Result;

/// Threshold detector pair with shared efficiency and per-gate dark-count
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta: f64,
    pub dark: f64,
}

impl DetectorModel {
    pub const IDEAL: DetectorModel = DetectorModel {
        eta: 1.0,
        dark: 0.0,
    };

    pub fn new(eta: f64, dark: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        check_range("dark", dark, 0.0, 1.0, false, "[0, 1)")?;
        Ok(DetectorModel { eta, dark })
    }

    /// Exact readout statistics after efficiency and dark counts, obtained by
    /// summing over every (photon port, survival, dark D1, dark D2) pattern.
    pub fn apply(&self, ideal: &OutcomeDistribution) -> OutcomeDistribution {
        let mut out = OutcomeDistribution::default();
        let ports = [
            (ideal.p_d1, true, false),
            (ideal.p_d2, false, true),
            (ideal.p_both, true, true),
            (ideal.p_none, false, false),
        ];
        for (p_port, hit1, hit2) in ports {
            if p_port == 0.0 {
                continue;
            }
            for survives in [true, false] {
                let w_s = if survives { self.eta } else { 1.0 - self.eta };
                for dark1 in [true, false] {
                    let w1 = if dark1 { self.dark } else { 1.0 - self.dark };
                    for dark2 in [true, false] {
                        let w2 = if dark2 { self.dark } else { 1.0 - self.dark };
                        let c1 = (hit1 && survives) || dark1;
                        let c2 = (hit2 && survives) || dark2;
                        let cell = OutcomeDistribution::certain(click_pattern(c1, c2));
                        out.add_weighted(&cell, p_port * w_s * w1 * w2);
                    }
                }
            }
        }
        out
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel::IDEAL
    }
}

pub(crate) fn click_pattern(d1: bool, d2: bool) -> Outcome {
    match (d1, d2) {
        (true, true) => Outcome::Both,
        (true, false) => Outcome::D1,
        (false, true) => Outcome::D2,
        (false, false) => Outcome::None,
    }
}

/// Arm transmittances and interferometer phase stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub t_a: f64,
    pub t_b: f64,
    /// Standard deviation of the per-round Gaussian phase on arm `b`, radians.
    pub phase_noise_sigma: f64,
    /// Fixed phase offset on arm `b`, radians.
    pub static_phase: f64,
}

impl ChannelModel {
    pub const IDEAL: ChannelModel = ChannelModel {
        t_a: 1.0,
        t_b: 1.0,
        phase_noise_sigma: 0.0,
        static_phase: 0.0,
    };

    pub fn new(t_a: f64, t_b: f64, phase_noise_sigma: f64, static_phase: f64) -> Result<Self> {
        check_unit("t_a", t_a)?;
        check_unit("t_b", t_b)?;
        check_range(
            "phase_noise_sigma",
            phase_noise_sigma,
            0.0,
            f64::INFINITY,
            false,
            "[0, inf)",
        )?;
        check_range(
            "static_phase",
            static_phase,
            f64::NEG_INFINITY,
            f64::INFINITY,
            false,
            "a finite angle",
        )?;
        Ok(ChannelModel {
            t_a,
            t_b,
            phase_noise_sigma,
            static_phase,
        })
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::IDEAL
    }
}

/// Master seed and stream derivation.
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`. Monte Carlo
/// rounds are grouped into blocks of [`RngSeed::BLOCK_ROUNDS`]; block `k`
/// uses stream `k`. The error-estimation sampler uses stream `u64::MAX`.
/// Streams depend only on the seed and the block index, so the transcript is
/// identical for any number of workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub const BLOCK_ROUNDS: u64 = 1024;
    const QBER_STREAM: u64 = u64::MAX;

    pub fn block_stream(self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(block);
        rng
    }

    pub fn qber_stream(self) -> ChaCha8Rng {
        self.block_stream(Self::QBER_STREAM)
    }
}

/// Draws one readout. Consumes exactly four uniforms: port choice,
/// efficiency, then dark counts on D1 and D2.
pub fn sample_outcome<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    det: &DetectorModel,
    rng: &mut R,
) -> Outcome {
    let u: f64 = rng.random();
    let survives = rng.random::<f64>() < det.eta;
    let dark1 = rng.random::<f64>() < det.dark;
    let dark2 = rng.random::<f64>() < det.dark;

    let (hit1, hit2) = if u < dist.p_d1 {
        (true, false)
    } else if u < dist.p_d1 + dist.p_d2 {
        (false, true)
    } else if u < dist.p_d1 + dist.p_d2 + dist.p_both {
        (true, true)
    } else {
        (false, false)
    };
    click_pattern((hit1 && survives) || dark1, (hit2 && survives) || dark2)
}

/// `static_phase + N(0, sigma²)`. Always consumes one normal variate.
pub fn sample_phase_noise<R: Rng + ?Sized>(ch: &ChannelModel, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    ch.static_phase + ch.phase_noise_sigma * z
}
