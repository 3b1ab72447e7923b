//! Exact oracle and security metrics.
//!
//! The oracle pushes the same pipeline used by the Monte Carlo engine through
//! every stochastic branch and sums the weighted outcome distributions:
//!
//! * Eve's intercept branches are enumerated with their Born weights.
//! * Loss needs no branching: it is already folded into the vacuum element.
//! * Gaussian phase noise is averaged in closed form for single photons.
//!   Each readout probability is `A + C cos θ + S sin θ` in the arm-b phase
//!   `θ`, so `E[p(s + n)] = (p(s) + p(s+π))/2 + e^{−σ²/2}(p(s) − p(s+π))/2`.
//!   For coherent pulses the click probabilities are not trigonometric
//!   polynomials and the average uses trapezoidal quadrature on ±12σ.
//! * Detector efficiency and dark counts are enumerated pattern by pattern in
//!   [`DetectorModel::apply`](crate::devices::DetectorModel::apply).

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Source};
use crate::optics::joint::{
    build_joint_state, photon_sector_overlap, reduced_density_path_b, trace_overlap,
};
use crate::optics::OutcomeDistribution;
use crate::protocol::{bob_phase, Protocol};
use crate::report::ExperimentReport;
use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub alice_bit: Bit,
    pub bob_bit: Bit,
    #[serde(flatten)]
    pub distribution: OutcomeDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTable {
    pub config: ExperimentConfig,
    pub rows: Vec<ExactRow>,
}

impl ExactTable {
    pub fn row(&self, alice: Bit, bob: Bit) -> &OutcomeDistribution {
        &self
            .rows
            .iter()
            .find(|r| r.alice_bit == alice && r.bob_bit == bob)
            .expect("table has all four bit pairs")
            .distribution
    }

    /// Per-round outcome probabilities when both bits are uniform.
    pub fn mean_distribution(&self) -> OutcomeDistribution {
        let mut m = OutcomeDistribution::default();
        for r in &self.rows {
            m.add_weighted(&r.distribution, 1.0 / self.rows.len() as f64);
        }
        m
    }
}

/// Exact table for a single-photon configuration.
pub fn exact_distribution(config: &ExperimentConfig) -> Result<ExactTable> {
    let protocol = Protocol::from_config(config)?;
    if !matches!(protocol.source, Source::SinglePhoton) {
        return Err(Error::Unsupported(
            "exact_distribution handles single-photon sources; use exact_field_distribution".into(),
        ));
    }
    table(config, |alice, bob| photon_row(&protocol, alice, bob))
}

/// Exact table for a coherent-source configuration.
pub fn exact_field_distribution(config: &ExperimentConfig) -> Result<ExactTable> {
    let protocol = Protocol::from_config(config)?;
    let Source::Coherent { mu } = protocol.source else {
        return Err(Error::Unsupported(
            "exact_field_distribution handles coherent sources; use exact_distribution".into(),
        ));
    };
    table(config, |alice, bob| field_row(&protocol, mu, alice, bob))
}

/// Dispatches on the configured source.
pub fn exact_table(config: &ExperimentConfig) -> Result<ExactTable> {
    match config.source_model() {
        Source::SinglePhoton => exact_distribution(config),
        Source::Coherent { .. } => exact_field_distribution(config),
    }
}

fn table(
    config: &ExperimentConfig,
    mut row: impl FnMut(Bit, Bit) -> Result<OutcomeDistribution>,
) -> Result<ExactTable> {
    let rows = Bit::PAIRS
        .iter()
        .map(|&(alice_bit, bob_bit)| {
            Ok(ExactRow {
                alice_bit,
                bob_bit,
                distribution: row(alice_bit, bob_bit)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactTable {
        config: config.clone(),
        rows,
    })
}

fn photon_row(protocol: &Protocol, alice: Bit, bob: Bit) -> Result<OutcomeDistribution> {
    let ch = &protocol.channel;
    let base = bob_phase(bob) + ch.static_phase;
    let damping = (-ch.phase_noise_sigma.powi(2) / 2.0).exp();
    let arms = protocol.photon_arms(alice)?;
    let mut ideal = OutcomeDistribution::default();
    for branch in protocol.photon_branches(&arms) {
        let at = protocol.close_photon(&branch.arms, base)?;
        let averaged = if ch.phase_noise_sigma == 0.0 {
            at
        } else {
            let opposite = protocol.close_photon(&branch.arms, base + std::f64::consts::PI)?;
            let mut avg = OutcomeDistribution::default();
            avg.add_weighted(&at, 0.5 * (1.0 + damping));
            avg.add_weighted(&opposite, 0.5 * (1.0 - damping));
            avg
        };
        ideal.add_weighted(&averaged, branch.probability);
    }
    Ok(protocol.detector.apply(&ideal))
}

const QUADRATURE_HALF_WIDTH: f64 = 12.0;
const QUADRATURE_STEPS_PER_SIGMA: usize = 16;

fn field_row(protocol: &Protocol, mu: f64, alice: Bit, bob: Bit) -> Result<OutcomeDistribution> {
    let ch = &protocol.channel;
    let base = bob_phase(bob) + ch.static_phase;
    let arms = protocol.field_arms(alice, mu)?;
    let (arms, _) = protocol.tap_field(&arms)?;
    if ch.phase_noise_sigma == 0.0 {
        return Ok(protocol.close_field(&arms, base)?.outcomes());
    }
    let k_max = (QUADRATURE_HALF_WIDTH * QUADRATURE_STEPS_PER_SIGMA as f64) as i64;
    let h = 1.0 / QUADRATURE_STEPS_PER_SIGMA as f64;
    let mut acc = OutcomeDistribution::default();
    let mut total_weight = 0.0;
    for k in -k_max..=k_max {
        let z = k as f64 * h;
        let w = (-0.5 * z * z).exp();
        let d = protocol
            .close_field(&arms, base + ch.phase_noise_sigma * z)?
            .outcomes();
        acc.add_weighted(&d, w);
        total_weight += w;
    }
    let mut out = OutcomeDistribution::default();
    out.add_weighted(&acc, 1.0 / total_weight);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityMetrics {
    /// `Tr[ρ₀ ρ₁]` of the arm-b reduced states.
    pub trace_overlap: f64,
    /// The one-photon part of `trace_overlap` (vacuum rows and columns
    /// projected out).
    pub photon_sector_overlap: f64,
    /// `|⟨Ψ₀|Ψ₁⟩|` of the full two-path states.
    pub global_overlap: f64,
    pub nonorthogonal: bool,
}

pub fn security_metrics() -> SecurityMetrics {
    let psi0 = build_joint_state(Bit::Zero);
    let psi1 = build_joint_state(Bit::One);
    let (r0, r1) = (reduced_density_path_b(&psi0), reduced_density_path_b(&psi1));
    let overlap = trace_overlap(&r0, &r1);
    SecurityMetrics {
        trace_overlap: overlap,
        photon_sector_overlap: photon_sector_overlap(&r0, &r1),
        global_overlap: psi0.inner(&psi1).norm(),
        nonorthogonal: overlap > 0.0,
    }
}

/// Reference sifting efficiencies: counterfactual protocol, its improved
/// variant, and the interference protocol in the ideal case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyConstants {
    pub noh: f64,
    pub sun_wen: f64,
    pub present: f64,
}

pub const REFERENCE_EFFICIENCIES: EfficiencyConstants = EfficiencyConstants {
    noh: 0.125,
    sun_wen: 0.5,
    present: 1.0,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub protocol: String,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyComparison {
    /// Kept rounds over total rounds.
    pub measured: f64,
    pub rows: Vec<ComparisonRow>,
}

pub fn efficiency_comparison(report: &ExperimentReport) -> EfficiencyComparison {
    let r = REFERENCE_EFFICIENCIES;
    let row = |protocol: &str, efficiency| ComparisonRow {
        protocol: protocol.to_string(),
        efficiency,
    };
    EfficiencyComparison {
        measured: report.sifting_efficiency,
        rows: vec![
            row("noh", r.noh),
            row("sun_wen", r.sun_wen),
            row("present", r.present),
            row("measured", report.sifting_efficiency),
        ],
    }
}
