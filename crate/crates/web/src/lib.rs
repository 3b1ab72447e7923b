//! Browser bindings for the simulator.
//!
//! Each exported function takes plain numbers or a JSON config and returns a
//! JSON string. The `*_json` functions hold the logic and are callable from
//! native tests; the `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use iqkd::analysis::{exact_table, security_metrics, ExactTable};
use iqkd::config::{EveKind, ExperimentConfig, SourceKind};
use iqkd::optics::Outcome;
use iqkd::protocol::{run_experiment, OutcomeCounts};
use iqkd::Bit;

/// Upper bound on Monte Carlo rounds per call so the page stays responsive.
pub const MAX_ROUNDS: u64 = 500_000;

#[derive(Serialize)]
struct PairCounts {
    alice_bit: Bit,
    bob_bit: Bit,
    #[serde(flatten)]
    counts: OutcomeCounts,
}

#[derive(Serialize)]
struct TableResponse {
    exact: ExactTable,
    monte_carlo: Vec<PairCounts>,
    sifting_efficiency: f64,
    qber: f64,
    abort: bool,
}

fn config_from_json(text: &str) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::from_json_str(text, "page").map_err(|e| e.to_string())?;
    if cfg.rounds > MAX_ROUNDS {
        return Err(format!("rounds is limited to {MAX_ROUNDS} in the browser"));
    }
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Exact outcome table next to Monte Carlo counts split by bit pair.
pub fn outcome_table_json(config: &str) -> Result<String, String> {
    let cfg = config_from_json(config)?;
    let exact = exact_table(&cfg).map_err(|e| e.to_string())?;
    let run = run_experiment(&cfg, 1).map_err(|e| e.to_string())?;
    let monte_carlo = Bit::PAIRS
        .iter()
        .map(|&(a, b)| {
            let rows: Vec<_> = run
                .records
                .iter()
                .filter(|r| r.alice_bit == a && r.bob_bit == b)
                .copied()
                .collect();
            PairCounts {
                alice_bit: a,
                bob_bit: b,
                counts: OutcomeCounts::tally(&rows),
            }
        })
        .collect();
    to_json(&TableResponse {
        exact,
        monte_carlo,
        sifting_efficiency: run.sifted.efficiency,
        qber: run.qber.qber,
        abort: run.qber.abort,
    })
}

#[derive(Serialize)]
struct SweepPoint {
    transmittance: f64,
    /// Click probability of the nominally dark detector for matched bits.
    dark_port_click: f64,
    both_rate: f64,
    eve_intensity: f64,
}

/// Exact PNS-tap signature for `steps + 1` tap transmittances in [0, 1].
pub fn pns_sweep_json(mu: f64, eta: f64, dark: f64, steps: u32) -> Result<String, String> {
    let steps = steps.clamp(1, 200);
    let points = (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            let cfg = ExperimentConfig {
                source: SourceKind::Coherent,
                mu,
                eta,
                dark,
                eve: EveKind::PnsTap,
                tap_transmittance: t,
                ..ExperimentConfig::default()
            };
            let table = exact_table(&cfg).map_err(|e| e.to_string())?;
            let matched = table.row(Bit::Zero, Bit::Zero);
            Ok(SweepPoint {
                transmittance: t,
                dark_port_click: matched.get(Outcome::D2) + matched.get(Outcome::Both),
                both_rate: table.mean_distribution().p_both,
                eve_intensity: (1.0 - t) * mu / 2.0,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&points)
}

#[derive(Serialize)]
struct NoisePoint {
    sigma: f64,
    measured: f64,
    expected: f64,
    rounds: u64,
}

/// Monte Carlo wrong-detector rate against `(1 − exp(−σ²/2))/2`.
pub fn phase_noise_scan_json(
    max_sigma: f64,
    steps: u32,
    rounds: u64,
    seed: u64,
) -> Result<String, String> {
    if !(max_sigma > 0.0 && max_sigma.is_finite()) {
        return Err("max sigma must be positive".into());
    }
    let steps = steps.clamp(1, 50);
    let rounds = rounds.clamp(1, MAX_ROUNDS / steps as u64);
    let points = (1..=steps)
        .map(|i| {
            let sigma = max_sigma * i as f64 / steps as f64;
            let cfg = ExperimentConfig {
                rounds,
                phase_noise_sigma: sigma,
                seed,
                ..ExperimentConfig::default()
            };
            let run = run_experiment(&cfg, 1).map_err(|e| e.to_string())?;
            let wrong = run
                .records
                .iter()
                .filter(|r| {
                    r.outcome
                        != if r.alice_bit == r.bob_bit {
                            Outcome::D1
                        } else {
                            Outcome::D2
                        }
                })
                .count();
            Ok(NoisePoint {
                sigma,
                measured: wrong as f64 / rounds as f64,
                expected: (1.0 - (-sigma * sigma / 2.0).exp()) / 2.0,
                rounds,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&points)
}

pub fn security_json() -> String {
    serde_json::to_string(&security_metrics()).expect("metrics serialize")
}

#[wasm_bindgen]
pub fn outcome_table(config: &str) -> Result<String, JsError> {
    outcome_table_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pns_sweep(mu: f64, eta: f64, dark: f64, steps: u32) -> Result<String, JsError> {
    pns_sweep_json(mu, eta, dark, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phase_noise_scan(
    max_sigma: f64,
    steps: u32,
    rounds: u32,
    seed: u32,
) -> Result<String, JsError> {
    phase_noise_scan_json(max_sigma, steps, rounds as u64, seed as u64)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn security() -> String {
    security_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn table_has_four_pairs_and_matching_counts() {
        let v: Value =
            serde_json::from_str(&outcome_table_json(r#"{"rounds": 2000, "seed": 2}"#).unwrap())
                .unwrap();
        assert_eq!(v["exact"]["rows"].as_array().unwrap().len(), 4);
        let mc = v["monte_carlo"].as_array().unwrap();
        let total: u64 = mc
            .iter()
            .map(|p| {
                ["d1", "d2", "none", "both"]
                    .iter()
                    .map(|k| p[k].as_u64().unwrap())
                    .sum::<u64>()
            })
            .sum();
        assert_eq!(total, 2000);
        for p in mc {
            let wrong = if p["alice_bit"] == p["bob_bit"] {
                "d2"
            } else {
                "d1"
            };
            assert_eq!(p[wrong], 0);
        }
        assert_eq!(v["sifting_efficiency"], 1.0);
    }

    #[test]
    fn bad_input_is_reported_not_panicked() {
        assert!(outcome_table_json("{").is_err());
        assert!(outcome_table_json(r#"{"eta": 2}"#)
            .unwrap_err()
            .contains("eta"));
        assert!(outcome_table_json(r#"{"rounds": 100000000}"#).is_err());
        assert!(pns_sweep_json(-1.0, 1.0, 0.0, 4).is_err());
        assert!(phase_noise_scan_json(0.0, 4, 100, 0).is_err());
    }

    #[test]
    fn pns_sweep_endpoints() {
        let v: Value = serde_json::from_str(&pns_sweep_json(4.0, 1.0, 0.0, 100).unwrap()).unwrap();
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), 101);
        assert_eq!(pts[100]["dark_port_click"], 0.0);
        let at81 = &pts[81];
        assert!(
            (at81["dark_port_click"].as_f64().unwrap() - (1.0 - (-0.01f64).exp())).abs() < 1e-12
        );
        let clicks: Vec<f64> = pts
            .iter()
            .map(|p| p["dark_port_click"].as_f64().unwrap())
            .collect();
        assert!(clicks.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn noise_scan_tracks_theory() {
        let v: Value =
            serde_json::from_str(&phase_noise_scan_json(1.0, 4, 20_000, 1).unwrap()).unwrap();
        for p in v.as_array().unwrap() {
            let (m, e) = (
                p["measured"].as_f64().unwrap(),
                p["expected"].as_f64().unwrap(),
            );
            assert!(
                (m - e).abs() < 5.0 * (e * (1.0 - e) / 20_000.0).sqrt(),
                "{p}"
            );
        }
    }

    #[test]
    fn security_is_stable() {
        assert_eq!(security_json(), security_json());
    }
}
