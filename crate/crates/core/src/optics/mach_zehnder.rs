//! Polarization-free Mach-Zehnder variant.
//!
//! Alice injects the photon into input port 0 or 1 of a 50:50 splitter; the
//! two arms are `a` (local) and `b` (through Bob). A second 50:50 splitter
//! sends `(a + b)/√2` to D1 and `(b − a)/√2` to D2. The state space is
//! `{vacuum, arm_a, arm_b}`.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use super::{Arm, OutcomeDistribution};
use crate::error::check_unit;
use crate::{Bit, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub vacuum: f64,
    pub arm_a: Complex64,
    pub arm_b: Complex64,
}

impl PathState {
    /// Photon entering input port `bit`, just after the first splitter.
    pub fn enter(bit: Bit) -> Self {
        let s = FRAC_1_SQRT_2;
        let a = if bit.is_one() { -s } else { s };
        PathState {
            vacuum: 0.0,
            arm_a: Complex64::new(a, 0.0),
            arm_b: Complex64::new(s, 0.0),
        }
    }

    pub fn in_arm_b() -> Self {
        PathState {
            vacuum: 0.0,
            arm_a: Complex64::new(0.0, 0.0),
            arm_b: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum * self.vacuum + self.arm_a.norm_sqr() + self.arm_b.norm_sqr()
    }

    fn arm_mut(&mut self, arm: Arm) -> &mut Complex64 {
        match arm {
            Arm::A => &mut self.arm_a,
            Arm::B => &mut self.arm_b,
        }
    }

    pub fn with_phase(&self, arm: Arm, phase: f64) -> Self {
        let mut out = *self;
        *out.arm_mut(arm) *= Complex64::from_polar(1.0, phase);
        out
    }

    pub fn with_loss(&self, arm: Arm, transmittance: f64) -> Result<Self> {
        check_unit("transmittance", transmittance)?;
        let mut out = *self;
        let amp = out.arm_mut(arm);
        let removed = amp.norm_sqr() * (1.0 - transmittance);
        *amp *= transmittance.sqrt();
        out.vacuum = (out.vacuum * out.vacuum + removed).sqrt();
        Ok(out)
    }

    pub fn renormalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return *self;
        }
        PathState {
            vacuum: self.vacuum / n,
            arm_a: self.arm_a / n,
            arm_b: self.arm_b / n,
        }
    }

    /// Second splitter and ideal readout.
    pub fn recombine(&self) -> OutcomeDistribution {
        let (d1, d2) = output_amplitudes(self.arm_a, self.arm_b);
        OutcomeDistribution {
            p_d1: d1.norm_sqr(),
            p_d2: d2.norm_sqr(),
            p_none: self.vacuum * self.vacuum,
            p_both: 0.0,
        }
    }
}

/// Coherent amplitudes in the two arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathField {
    pub arm_a: Complex64,
    pub arm_b: Complex64,
}

impl PathField {
    pub fn enter(mu: f64, bit: Bit) -> Self {
        let amp = mu.sqrt();
        let p = PathState::enter(bit);
        PathField {
            arm_a: p.arm_a * amp,
            arm_b: p.arm_b * amp,
        }
    }

    pub fn intensity(&self) -> f64 {
        self.arm_a.norm_sqr() + self.arm_b.norm_sqr()
    }

    fn arm_mut(&mut self, arm: Arm) -> &mut Complex64 {
        match arm {
            Arm::A => &mut self.arm_a,
            Arm::B => &mut self.arm_b,
        }
    }

    pub fn with_phase(&self, arm: Arm, phase: f64) -> Self {
        let mut out = *self;
        *out.arm_mut(arm) *= Complex64::from_polar(1.0, phase);
        out
    }

    pub fn with_loss(&self, arm: Arm, transmittance: f64) -> Result<Self> {
        check_unit("transmittance", transmittance)?;
        let mut out = *self;
        *out.arm_mut(arm) *= transmittance.sqrt();
        Ok(out)
    }

    /// Mean photon numbers arriving at (D1, D2).
    pub fn port_intensities(&self) -> (f64, f64) {
        let (d1, d2) = output_amplitudes(self.arm_a, self.arm_b);
        (d1.norm_sqr(), d2.norm_sqr())
    }
}

impl crate::adversary::ArmBAccess for PathState {
    fn arm_b_readings(&self) -> Vec<(Option<super::Polarization>, f64)> {
        vec![(None, self.arm_b.norm_sqr())]
    }

    fn without_arm_b(&self) -> Self {
        PathState {
            arm_b: Complex64::new(0.0, 0.0),
            ..*self
        }
    }

    fn fresh_photon_in_arm_b(&self, _reading: Option<super::Polarization>) -> Self {
        PathState::in_arm_b()
    }

    fn norm_sqr(&self) -> f64 {
        PathState::norm_sqr(self)
    }

    fn renormalized(&self) -> Self {
        PathState::renormalized(self)
    }
}

impl crate::adversary::ArmBField for PathField {
    fn scale_arm_b(&mut self, t: f64) -> f64 {
        let removed = self.arm_b.norm_sqr() * (1.0 - t);
        self.arm_b *= t.sqrt();
        removed
    }

    fn arm_b_amplitude(&self) -> Complex64 {
        self.arm_b
    }
}

fn output_amplitudes(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    ((a + b) * FRAC_1_SQRT_2, (b - a) * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn equal_bits_reach_d1() {
        for (alice, bob) in Bit::PAIRS {
            let phase = if bob.is_one() { PI } else { 0.0 };
            let d = PathState::enter(alice)
                .with_phase(Arm::B, phase)
                .recombine();
            let (want1, want2) = if alice == bob { (1.0, 0.0) } else { (0.0, 1.0) };
            assert_abs_diff_eq!(d.p_d1, want1, epsilon = 1e-15);
            assert_abs_diff_eq!(d.p_d2, want2, epsilon = 1e-15);
        }
    }

    #[test]
    fn loss_moves_weight_to_vacuum() {
        let s = PathState::enter(Bit::Zero).with_loss(Arm::B, 0.64).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        let d = s.recombine();
        assert_abs_diff_eq!(d.p_d1, 0.81, epsilon = 1e-15);
        assert_abs_diff_eq!(d.p_d2, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(d.p_none, 0.18, epsilon = 1e-15);
        assert!(s.with_loss(Arm::A, 2.0).is_err());
    }

    #[test]
    fn field_conserves_intensity() {
        let f = PathField::enter(4.0, Bit::One).with_phase(Arm::B, 0.7);
        assert_abs_diff_eq!(f.intensity(), 4.0, epsilon = 1e-12);
        let (i1, i2) = f.port_intensities();
        assert_abs_diff_eq!(i1 + i2, 4.0, epsilon = 1e-12);
    }
}
