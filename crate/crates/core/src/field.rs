//! Coherent-pulse model for the multiphoton regime.
//!
//! A pulse is a classical amplitude per optical mode (`√photons`). Linear
//! optics act on it exactly as on single-photon amplitudes; loss simply
//! scales the amplitude. Each detector is a threshold detector whose click
//! probability depends only on the mean photon number reaching it.

use num_complex::Complex64;

use crate::devices::{click_pattern, DetectorModel};
use crate::error::{check_range, check_unit};
use crate::optics::{
    self, Arm, Location, ModeLabel, OutcomeDistribution, Polarization, Transform, MODE_COUNT,
};
use crate::{Bit, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldState {
    alpha: [Complex64; MODE_COUNT],
}

impl FieldState {
    pub fn zero() -> Self {
        FieldState {
            alpha: [Complex64::new(0.0, 0.0); MODE_COUNT],
        }
    }

    pub fn amplitude(&self, mode: ModeLabel) -> Complex64 {
        self.alpha[mode.index()]
    }

    pub fn set_amplitude(&mut self, mode: ModeLabel, alpha: Complex64) {
        self.alpha[mode.index()] = alpha;
    }

    /// Total mean photon number `Σ|α|²`.
    pub fn intensity(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn location_intensity(&self, location: Location) -> f64 {
        [Polarization::H, Polarization::V]
            .iter()
            .map(|&p| self.amplitude(ModeLabel::new(location, p)).norm_sqr())
            .sum()
    }

    pub fn apply(&self, step: &Transform) -> Result<FieldState> {
        let mut out = *self;
        let a = &mut out.alpha;
        match *step {
            Transform::Hwp => optics::hwp_modes(a),
            Transform::PbsForward => optics::pbs_forward_modes(a)?,
            Transform::PbsBackward => {
                optics::pbs_backward_modes(a);
            }
            Transform::ArmPhase(arm, phase) => optics::phase_modes(a, arm, phase),
            Transform::ArmLoss(arm, t) => {
                check_unit("transmittance", t)?;
                optics::loss_modes(a, arm, t);
            }
            Transform::Route => optics::route_modes(a)?,
        }
        Ok(out)
    }

    /// Scales arm `b` by `sqrt(t)` and returns the removed intensity.
    pub(crate) fn scale_arm_b(&mut self, t: f64) -> f64 {
        optics::loss_modes(&mut self.alpha, Arm::B, t)
    }

    pub(crate) fn arm_b_amplitudes(&self) -> [Complex64; 2] {
        [
            self.amplitude(ModeLabel::new(Location::ArmB, Polarization::H)),
            self.amplitude(ModeLabel::new(Location::ArmB, Polarization::V)),
        ]
    }
}

impl crate::adversary::ArmBField for FieldState {
    fn scale_arm_b(&mut self, t: f64) -> f64 {
        FieldState::scale_arm_b(self, t)
    }

    fn arm_b_amplitude(&self) -> Complex64 {
        let [h, v] = self.arm_b_amplitudes();
        if v.norm_sqr() > h.norm_sqr() {
            v
        } else {
            h
        }
    }
}

/// Pulse of mean photon number `mu` polarized according to `bit`.
pub fn field_from_source(mu: f64, bit: Bit) -> Result<FieldState> {
    check_range("mu", mu, 0.0, f64::INFINITY, false, "[0, inf)")?;
    let mut f = FieldState::zero();
    f.set_amplitude(
        ModeLabel::new(Location::Common, Polarization::from_bit(bit)),
        Complex64::new(mu.sqrt(), 0.0),
    );
    Ok(f)
}

pub fn propagate_field(field: &FieldState, steps: &[Transform]) -> Result<FieldState> {
    steps.iter().try_fold(*field, |f, step| f.apply(step))
}

/// Independent click probabilities of the two detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbabilities {
    pub d1: f64,
    pub d2: f64,
}

impl ClickProbabilities {
    /// Readout classes under independent detectors.
    pub fn outcomes(&self) -> OutcomeDistribution {
        let mut out = OutcomeDistribution::default();
        for c1 in [true, false] {
            for c2 in [true, false] {
                let w1 = if c1 { self.d1 } else { 1.0 - self.d1 };
                let w2 = if c2 { self.d2 } else { 1.0 - self.d2 };
                out.add_weighted(
                    &OutcomeDistribution::certain(click_pattern(c1, c2)),
                    w1 * w2,
                );
            }
        }
        out
    }
}

/// `P(click) = 1 − (1 − dark)·exp(−eta·n)` for mean photon number `n`.
pub fn threshold_click_probability(intensity: f64, det: &DetectorModel) -> f64 {
    1.0 - (1.0 - det.dark) * (-det.eta * intensity).exp()
}

pub fn clicks_from_intensities(i1: f64, i2: f64, det: &DetectorModel) -> ClickProbabilities {
    ClickProbabilities {
        d1: threshold_click_probability(i1, det),
        d2: threshold_click_probability(i2, det),
    }
}

/// Reads the detector-port intensities of a routed field.
pub fn threshold_click_probabilities(
    field: &FieldState,
    det: &DetectorModel,
) -> ClickProbabilities {
    clicks_from_intensities(
        field.location_intensity(Location::DetPort1),
        field.location_intensity(Location::DetPort2),
        det,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{encode_photon, ideal_click_probabilities, propagate};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pipeline(bob: Bit, tap: f64) -> Vec<Transform> {
        vec![
            Transform::Hwp,
            Transform::PbsForward,
            Transform::ArmLoss(Arm::B, tap),
            Transform::ArmPhase(Arm::B, if bob.is_one() { PI } else { 0.0 }),
            Transform::PbsBackward,
            Transform::Hwp,
            Transform::Route,
        ]
    }

    #[test]
    fn source_examples() {
        let f = field_from_source(4.0, Bit::Zero).unwrap();
        assert_eq!(
            f.amplitude(ModeLabel::new(Location::Common, Polarization::H)),
            Complex64::new(2.0, 0.0)
        );
        assert_eq!(
            field_from_source(0.0, Bit::One).unwrap(),
            FieldState::zero()
        );
        assert_abs_diff_eq!(
            field_from_source(2.5, Bit::One).unwrap().intensity(),
            2.5,
            epsilon = 1e-12
        );
        assert!(field_from_source(-1.0, Bit::Zero).is_err());
    }

    #[test]
    fn field_routing_mirrors_single_photon() {
        for (alice, bob) in Bit::PAIRS {
            let steps = pipeline(bob, 1.0);
            let f = propagate_field(&field_from_source(3.0, alice).unwrap(), &steps).unwrap();
            let photon =
                ideal_click_probabilities(&propagate(&encode_photon(alice), &steps).unwrap());
            assert_abs_diff_eq!(
                f.location_intensity(Location::DetPort1),
                3.0 * photon.p_d1,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                f.location_intensity(Location::DetPort2),
                3.0 * photon.p_d2,
                epsilon = 1e-12
            );
            let (lit, dark) = if alice == bob {
                (Location::DetPort1, Location::DetPort2)
            } else {
                (Location::DetPort2, Location::DetPort1)
            };
            assert_abs_diff_eq!(f.location_intensity(lit), 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(f.location_intensity(dark), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tap_scales_arm_b_amplitude() {
        let f = propagate_field(
            &field_from_source(4.0, Bit::Zero).unwrap(),
            &[Transform::Hwp, Transform::PbsForward],
        )
        .unwrap();
        let tapped = f.apply(&Transform::ArmLoss(Arm::B, 0.81)).unwrap();
        let hb = ModeLabel::new(Location::ArmB, Polarization::H);
        assert_abs_diff_eq!(
            tapped.amplitude(hb).re,
            0.9 * f.amplitude(hb).re,
            epsilon = 1e-15
        );
        // intensity = mu * (t_a + t_b) / 2 for a balanced split
        assert_abs_diff_eq!(
            tapped.intensity(),
            4.0 * (1.0 + 0.81) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn threshold_examples() {
        let ideal = DetectorModel::IDEAL;
        assert_eq!(threshold_click_probability(0.0, &ideal), 0.0);
        assert_abs_diff_eq!(
            threshold_click_probability(2f64.ln(), &ideal),
            0.5,
            epsilon = 1e-15
        );

        let f = propagate_field(
            &field_from_source(4.0, Bit::Zero).unwrap(),
            &pipeline(Bit::Zero, 0.81),
        )
        .unwrap();
        let p = threshold_click_probabilities(&f, &ideal);
        // residual amplitude at the dark port: (sqrt(mu)/2)(1 - sqrt(T))
        let residual = 4.0 * (1.0 - 0.81f64.sqrt()).powi(2) / 4.0;
        assert_abs_diff_eq!(p.d2, 1.0 - (-residual).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.d2, 0.00995016625083195, epsilon = 1e-12);
        assert!(p.outcomes().is_valid());
    }

    #[test]
    fn dark_port_clicks_grow_as_tap_opens() {
        let mut last = -1.0;
        for t in [1.0, 0.9, 0.7, 0.5, 0.3] {
            let f = propagate_field(
                &field_from_source(4.0, Bit::One).unwrap(),
                &pipeline(Bit::One, t),
            )
            .unwrap();
            let p = threshold_click_probabilities(&f, &DetectorModel::IDEAL);
            if t == 1.0 {
                assert!(p.d2.abs() < 1e-12);
                assert!(p.outcomes().p_both.abs() < 1e-12);
            }
            assert!(p.d2 > last);
            last = p.d2;
        }
    }
}
