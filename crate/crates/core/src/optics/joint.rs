//! Two-path tensor picture: each arm is a three-level system
//! `{vacuum, H, V}` and the photon lives in `path_a ⊗ path_b`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use super::TOLERANCE;
use crate::{Bit, Error, Result};

/// Single-path basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathMode {
    Vac,
    H,
    V,
}

impl PathMode {
    pub const ALL: [PathMode; 3] = [PathMode::Vac, PathMode::H, PathMode::V];

    pub fn index(self) -> usize {
        match self {
            PathMode::Vac => 0,
            PathMode::H => 1,
            PathMode::V => 2,
        }
    }
}

/// Amplitudes over the nine-element basis `|a⟩|b⟩`, stored at `3·a + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPathState {
    amps: [Complex64; 9],
}

impl JointPathState {
    pub fn from_amplitudes(amps: [Complex64; 9]) -> Self {
        JointPathState { amps }
    }

    pub fn from_terms(terms: &[(PathMode, PathMode, Complex64)]) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 9];
        for &(a, b, z) in terms {
            amps[3 * a.index() + b.index()] += z;
        }
        JointPathState { amps }
    }

    pub fn amplitude(&self, a: PathMode, b: PathMode) -> Complex64 {
        self.amps[3 * a.index() + b.index()]
    }

    pub fn amplitudes(&self) -> &[Complex64; 9] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Weight on components carrying exactly one photon across both paths.
    pub fn single_photon_weight(&self) -> f64 {
        let mut w = 0.0;
        for a in PathMode::ALL {
            for b in PathMode::ALL {
                if (a == PathMode::Vac) != (b == PathMode::Vac) {
                    w += self.amplitude(a, b).norm_sqr();
                }
            }
        }
        w
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &JointPathState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }
}

/// `(|0⟩_a|H⟩_b ± |V⟩_a|0⟩_b)/√2`, `+` for bit 0 and `−` for bit 1.
pub fn build_joint_state(bit: Bit) -> JointPathState {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let sign = if bit.is_one() { -1.0 } else { 1.0 };
    JointPathState::from_terms(&[
        (PathMode::Vac, PathMode::H, s),
        (PathMode::V, PathMode::Vac, s * sign),
    ])
}

/// State of one path over `{vacuum, H, V}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Matrix3<Complex64>);

impl DensityMatrix {
    pub fn projector(mode: PathMode) -> Self {
        let mut m = Matrix3::zeros();
        m[(mode.index(), mode.index())] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn entry(&self, row: PathMode, col: PathMode) -> Complex64 {
        self.0[(row.index(), col.index())]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn is_hermitian(&self) -> bool {
        (self.0 - self.0.adjoint())
            .iter()
            .all(|z| z.norm() <= TOLERANCE)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize first so round-off cannot produce a non-Hermitian input.
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        let detail = if !self.is_hermitian() {
            Some("not Hermitian".to_string())
        } else if (tr - Complex64::new(1.0, 0.0)).norm() > TOLERANCE {
            Some(format!("trace {tr} differs from 1"))
        } else if self.min_eigenvalue() < -TOLERANCE {
            Some(format!("negative eigenvalue {}", self.min_eigenvalue()))
        } else {
            None
        };
        match detail {
            Some(detail) => Err(Error::PipelineMisuse {
                op: "DensityMatrix::validate",
                detail,
            }),
            None => Ok(()),
        }
    }
}

/// `Tr_a |ψ⟩⟨ψ|`: `ρ_b[j,k] = Σ_i ψ[i,j] ψ*[i,k]`.
pub fn reduced_density_path_b(joint: &JointPathState) -> DensityMatrix {
    let mut rho = Matrix3::zeros();
    for j in PathMode::ALL {
        for k in PathMode::ALL {
            rho[(j.index(), k.index())] = PathMode::ALL
                .iter()
                .map(|&i| joint.amplitude(i, j) * joint.amplitude(i, k).conj())
                .sum();
        }
    }
    DensityMatrix(rho)
}

/// `Tr[r0 · r1]`. Real for Hermitian inputs; the imaginary part is dropped.
pub fn trace_overlap(r0: &DensityMatrix, r1: &DensityMatrix) -> f64 {
    (r0.0 * r1.0).trace().re
}

/// `Tr[P r0 P r1]` with `P` the projector onto the one-photon modes `{H, V}`,
/// i.e. [`trace_overlap`] without the vacuum contributions.
pub fn photon_sector_overlap(r0: &DensityMatrix, r1: &DensityMatrix) -> f64 {
    let mut p = Matrix3::<Complex64>::zeros();
    p[(PathMode::H.index(), PathMode::H.index())] = Complex64::new(1.0, 0.0);
    p[(PathMode::V.index(), PathMode::V.index())] = Complex64::new(1.0, 0.0);
    (p * r0.0 * p * r1.0).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    // Oracle: build the 9x9 projector and sum its diagonal path-a blocks.
    fn oracle_partial_trace(joint: &JointPathState) -> DMatrix<Complex64> {
        let psi = DVector::from_column_slice(joint.amplitudes());
        let full = &psi * psi.adjoint();
        let mut out = DMatrix::zeros(3, 3);
        for a in 0..3 {
            out += full.view((3 * a, 3 * a), (3, 3));
        }
        out
    }

    #[test]
    fn joint_states_match_definition() {
        let s = FRAC_1_SQRT_2;
        let psi0 = build_joint_state(Bit::Zero);
        assert_eq!(psi0.amplitude(PathMode::Vac, PathMode::H).re, s);
        assert_eq!(psi0.amplitude(PathMode::V, PathMode::Vac).re, s);
        let psi1 = build_joint_state(Bit::One);
        assert_eq!(psi1.amplitude(PathMode::Vac, PathMode::H).re, s);
        assert_eq!(psi1.amplitude(PathMode::V, PathMode::Vac).re, -s);
        for p in [psi0, psi1] {
            assert_abs_diff_eq!(p.norm_sqr(), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(p.single_photon_weight(), 1.0, epsilon = 1e-15);
        }
        assert!(psi0.inner(&psi1).norm() < 1e-15);
    }

    #[test]
    fn reduced_states_have_equal_diagonals_and_no_coherence() {
        for bit in Bit::BOTH {
            let rho = reduced_density_path_b(&build_joint_state(bit));
            assert_abs_diff_eq!(rho.entry(PathMode::H, PathMode::H).re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(
                rho.entry(PathMode::Vac, PathMode::Vac).re,
                0.5,
                epsilon = 1e-15
            );
            assert_eq!(rho.entry(PathMode::Vac, PathMode::H).norm(), 0.0);
            rho.validate().unwrap();
            let oracle = oracle_partial_trace(&build_joint_state(bit));
            for r in 0..3 {
                for c in 0..3 {
                    assert!((oracle[(r, c)] - rho.0[(r, c)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn product_state_reduces_to_projector() {
        let prod =
            JointPathState::from_terms(&[(PathMode::Vac, PathMode::H, Complex64::new(1.0, 0.0))]);
        assert_eq!(
            reduced_density_path_b(&prod),
            DensityMatrix::projector(PathMode::H)
        );
    }

    #[test]
    fn overlap_examples() {
        let r0 = reduced_density_path_b(&build_joint_state(Bit::Zero));
        let r1 = reduced_density_path_b(&build_joint_state(Bit::One));
        // Each reduced state is diag(1/2, 1/2, 0), so the overlap is
        // 1/4 from the vacuum entry plus 1/4 from the H entry.
        let oracle = (oracle_partial_trace(&build_joint_state(Bit::Zero))
            * oracle_partial_trace(&build_joint_state(Bit::One)))
        .trace();
        assert_abs_diff_eq!(trace_overlap(&r0, &r1), oracle.re, epsilon = TOLERANCE);
        assert_abs_diff_eq!(trace_overlap(&r0, &r1), 0.5, epsilon = TOLERANCE);
        assert_abs_diff_eq!(photon_sector_overlap(&r0, &r1), 0.25, epsilon = TOLERANCE);
        let h = DensityMatrix::projector(PathMode::H);
        assert_eq!(trace_overlap(&h, &h), 1.0);
        assert_eq!(
            trace_overlap(&h, &DensityMatrix::projector(PathMode::V)),
            0.0
        );
    }

    #[test]
    fn validate_rejects_bad_matrices() {
        let mut m = DensityMatrix::projector(PathMode::H);
        m.0[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(m.validate().is_err());
        let mut m = DensityMatrix::projector(PathMode::H);
        m.0[(0, 0)] = Complex64::new(0.5, 0.0);
        assert!(m.validate().is_err());
        let mut m = DensityMatrix::projector(PathMode::H);
        m.0[(0, 0)] = Complex64::new(-0.5, 0.0);
        m.0[(2, 2)] = Complex64::new(0.5, 0.0);
        assert!(m.validate().is_err());
    }

    proptest! {
        #[test]
        fn partial_trace_is_a_density_matrix(amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9)) {
            let mut a = [Complex64::new(0.0, 0.0); 9];
            for (slot, (re, im)) in a.iter_mut().zip(amps) {
                *slot = Complex64::new(re, im);
            }
            let n = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            for z in &mut a { *z /= n; }
            let joint = JointPathState::from_amplitudes(a);
            let rho = reduced_density_path_b(&joint);
            prop_assert!(rho.validate().is_ok());
            let oracle = oracle_partial_trace(&joint);
            for r in 0..3 { for c in 0..3 {
                prop_assert!((oracle[(r, c)] - rho.0[(r, c)]).norm() < TOLERANCE);
            }}
        }
    }
}
