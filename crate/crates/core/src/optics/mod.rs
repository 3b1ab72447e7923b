//! Exact single-photon optics over a fixed mode basis.
//!
//! A photon lives in one of ten `(location, polarization)` modes or in the
//! vacuum element. The basis order is fixed:
//!
//! | index | element            |
//! |-------|--------------------|
//! | 0     | vacuum             |
//! | 1, 2  | `Common` H, V      |
//! | 3, 4  | `ArmA` H, V        |
//! | 5, 6  | `ArmB` H, V        |
//! | 7, 8  | `DetPort1` H, V    |
//! | 9, 10 | `DetPort2` H, V    |
//!
//! Loss is folded into the vacuum element, which is kept real and
//! non-negative. Detection probabilities never involve vacuum/photon cross
//! terms, so a pure vector with this bookkeeping is statistically exact.

pub mod joint;
pub mod mach_zehnder;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::check_unit;
use crate::{Bit, Error, Result};

/// Global numerical tolerance for norms, traces and golden values.
pub const TOLERANCE: f64 = 1e-12;

/// Number of photon-carrying modes (everything but vacuum).
pub const MODE_COUNT: usize = 10;

/// Dimension of the single-photon space including vacuum.
pub const BASIS_DIM: usize = MODE_COUNT + 1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// H carries logic 0, V carries logic 1.
    pub fn from_bit(bit: Bit) -> Self {
        match bit {
            Bit::Zero => Polarization::H,
            Bit::One => Polarization::V,
        }
    }

    pub fn bit(self) -> Bit {
        match self {
            Polarization::H => Bit::Zero,
            Polarization::V => Bit::One,
        }
    }

    fn offset(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Common,
    ArmA,
    ArmB,
    DetPort1,
    DetPort2,
}

impl Location {
    pub const ALL: [Location; 5] = [
        Location::Common,
        Location::ArmA,
        Location::ArmB,
        Location::DetPort1,
        Location::DetPort2,
    ];

    fn ordinal(self) -> usize {
        match self {
            Location::Common => 0,
            Location::ArmA => 1,
            Location::ArmB => 2,
            Location::DetPort1 => 3,
            Location::DetPort2 => 4,
        }
    }
}

/// One interferometer arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    pub fn location(self) -> Location {
        match self {
            Arm::A => Location::ArmA,
            Arm::B => Location::ArmB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub location: Location,
    pub polarization: Polarization,
}

impl ModeLabel {
    pub const fn new(location: Location, polarization: Polarization) -> Self {
        ModeLabel {
            location,
            polarization,
        }
    }

    /// Position among the photon modes, `0..MODE_COUNT`. The position in the
    /// full basis is this plus one.
    pub fn index(self) -> usize {
        2 * self.location.ordinal() + self.polarization.offset()
    }

    pub fn all() -> impl Iterator<Item = ModeLabel> {
        Location::ALL.into_iter().flat_map(|loc| {
            [Polarization::H, Polarization::V]
                .into_iter()
                .map(move |p| ModeLabel::new(loc, p))
        })
    }
}

/// Detector readout classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    D1,
    D2,
    None,
    Both,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::D1, Outcome::D2, Outcome::None, Outcome::Both];

    /// Exactly one detector fired.
    pub fn is_kept(self) -> bool {
        matches!(self, Outcome::D1 | Outcome::D2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::D1 => "D1",
            Outcome::D2 => "D2",
            Outcome::None => "None",
            Outcome::Both => "Both",
        }
    }
}

/// Exact probabilities over the four readout classes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p_d1: f64,
    pub p_d2: f64,
    pub p_none: f64,
    pub p_both: f64,
}

impl OutcomeDistribution {
    pub fn new(p_d1: f64, p_d2: f64, p_none: f64, p_both: f64) -> Self {
        OutcomeDistribution {
            p_d1,
            p_d2,
            p_none,
            p_both,
        }
    }

    pub fn certain(outcome: Outcome) -> Self {
        let mut d = OutcomeDistribution::default();
        *d.get_mut(outcome) = 1.0;
        d
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::D1 => self.p_d1,
            Outcome::D2 => self.p_d2,
            Outcome::None => self.p_none,
            Outcome::Both => self.p_both,
        }
    }

    fn get_mut(&mut self, outcome: Outcome) -> &mut f64 {
        match outcome {
            Outcome::D1 => &mut self.p_d1,
            Outcome::D2 => &mut self.p_d2,
            Outcome::None => &mut self.p_none,
            Outcome::Both => &mut self.p_both,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p_d1 + self.p_d2 + self.p_none + self.p_both
    }

    pub fn is_valid(&self) -> bool {
        Outcome::ALL
            .iter()
            .all(|&o| (-TOLERANCE..=1.0 + TOLERANCE).contains(&self.get(o)))
            && (self.sum() - 1.0).abs() <= TOLERANCE
    }

    /// `self += weight * other`.
    pub fn add_weighted(&mut self, other: &OutcomeDistribution, weight: f64) {
        for o in Outcome::ALL {
            *self.get_mut(o) += weight * other.get(o);
        }
    }

    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        Outcome::ALL
            .iter()
            .map(|&o| (self.get(o) - other.get(o)).abs())
            .fold(0.0, f64::max)
    }
}

/// Single-photon state: a real vacuum amplitude plus ten complex mode
/// amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    vacuum: f64,
    modes: [Complex64; MODE_COUNT],
}

impl PureState {
    pub fn vacuum_state() -> Self {
        PureState {
            vacuum: 1.0,
            modes: [ZERO; MODE_COUNT],
        }
    }

    pub fn single(mode: ModeLabel) -> Self {
        Self::from_modes(0.0, &[(mode, Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from a vacuum amplitude and sparse mode amplitudes.
    /// Repeated modes accumulate. No normalization is applied.
    pub fn from_modes(vacuum: f64, amps: &[(ModeLabel, Complex64)]) -> Self {
        let mut modes = [ZERO; MODE_COUNT];
        for &(m, a) in amps {
            modes[m.index()] += a;
        }
        PureState {
            vacuum: vacuum.abs(),
            modes,
        }
    }

    /// Full basis vector, vacuum first.
    pub fn to_vec(&self) -> Vec<Complex64> {
        std::iter::once(Complex64::new(self.vacuum, 0.0))
            .chain(self.modes.iter().copied())
            .collect()
    }

    /// Inverse of [`PureState::to_vec`]. The vacuum entry must be real and
    /// non-negative.
    pub fn from_vec(v: &[Complex64]) -> Result<Self> {
        if v.len() != BASIS_DIM {
            return Err(Error::PipelineMisuse {
                op: "PureState::from_vec",
                detail: format!("expected {BASIS_DIM} amplitudes, got {}", v.len()),
            });
        }
        if v[0].im.abs() > TOLERANCE || v[0].re < -TOLERANCE {
            return Err(Error::PipelineMisuse {
                op: "PureState::from_vec",
                detail: format!("vacuum amplitude {} must be real and non-negative", v[0]),
            });
        }
        let mut modes = [ZERO; MODE_COUNT];
        modes.copy_from_slice(&v[1..]);
        Ok(PureState {
            vacuum: v[0].re.max(0.0),
            modes,
        })
    }

    pub fn amplitude(&self, mode: ModeLabel) -> Complex64 {
        self.modes[mode.index()]
    }

    pub fn vacuum_amplitude(&self) -> f64 {
        self.vacuum
    }

    pub fn vacuum_probability(&self) -> f64 {
        self.vacuum * self.vacuum
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum_probability() + self.modes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Photon weight at one location, summed over polarizations.
    pub fn location_weight(&self, location: Location) -> f64 {
        [Polarization::H, Polarization::V]
            .iter()
            .map(|&p| self.amplitude(ModeLabel::new(location, p)).norm_sqr())
            .sum()
    }

    /// Rescales to unit norm. A zero state stays zero.
    pub fn renormalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return *self;
        }
        let mut out = *self;
        out.vacuum /= n;
        for a in &mut out.modes {
            *a /= n;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &PureState) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn modes_mut(&mut self) -> &mut [Complex64; MODE_COUNT] {
        &mut self.modes
    }

    /// Adds `weight` of probability to the vacuum element.
    pub(crate) fn absorb_into_vacuum(&mut self, weight: f64) {
        self.vacuum = (self.vacuum * self.vacuum + weight).max(0.0).sqrt();
    }
}

fn idx(location: Location, polarization: Polarization) -> usize {
    ModeLabel::new(location, polarization).index()
}

fn occupied(modes: &[Complex64; MODE_COUNT], location: Location) -> bool {
    [Polarization::H, Polarization::V]
        .iter()
        .any(|&p| modes[idx(location, p)].norm_sqr() > TOLERANCE * TOLERANCE)
}

fn require_only(
    modes: &[Complex64; MODE_COUNT],
    allowed: &[Location],
    op: &'static str,
) -> Result<()> {
    for loc in Location::ALL {
        if !allowed.contains(&loc) && occupied(modes, loc) {
            return Err(Error::PipelineMisuse {
                op,
                detail: format!("photon amplitude present at {loc:?}"),
            });
        }
    }
    Ok(())
}

// The mode-vector maps below are shared with the coherent field model.

pub(crate) fn hwp_modes(modes: &mut [Complex64; MODE_COUNT]) {
    for loc in Location::ALL {
        let (h, v) = (idx(loc, Polarization::H), idx(loc, Polarization::V));
        let (a, b) = (modes[h], modes[v]);
        modes[h] = (a + b) * FRAC_1_SQRT_2;
        modes[v] = (a - b) * FRAC_1_SQRT_2;
    }
}

pub(crate) fn pbs_forward_modes(modes: &mut [Complex64; MODE_COUNT]) -> Result<()> {
    require_only(modes, &[Location::Common], "apply_pbs_forward")?;
    let h = std::mem::replace(&mut modes[idx(Location::Common, Polarization::H)], ZERO);
    let v = std::mem::replace(&mut modes[idx(Location::Common, Polarization::V)], ZERO);
    modes[idx(Location::ArmB, Polarization::H)] = h;
    modes[idx(Location::ArmA, Polarization::V)] = v;
    Ok(())
}

/// Returns the weight that leaves through the unmonitored ports.
pub(crate) fn pbs_backward_modes(modes: &mut [Complex64; MODE_COUNT]) -> f64 {
    let take = |m: &mut [Complex64; MODE_COUNT], l, p| std::mem::replace(&mut m[idx(l, p)], ZERO);
    let bh = take(modes, Location::ArmB, Polarization::H);
    let av = take(modes, Location::ArmA, Polarization::V);
    let bv = take(modes, Location::ArmB, Polarization::V);
    let ah = take(modes, Location::ArmA, Polarization::H);
    modes[idx(Location::Common, Polarization::H)] += bh;
    modes[idx(Location::Common, Polarization::V)] += av;
    bv.norm_sqr() + ah.norm_sqr()
}

pub(crate) fn phase_modes(modes: &mut [Complex64; MODE_COUNT], arm: Arm, phase: f64) {
    let f = Complex64::from_polar(1.0, phase);
    for p in [Polarization::H, Polarization::V] {
        modes[idx(arm.location(), p)] *= f;
    }
}

/// Scales the arm by `sqrt(t)` and returns the removed weight.
pub(crate) fn loss_modes(modes: &mut [Complex64; MODE_COUNT], arm: Arm, t: f64) -> f64 {
    let s = t.sqrt();
    let mut removed = 0.0;
    for p in [Polarization::H, Polarization::V] {
        let a = &mut modes[idx(arm.location(), p)];
        removed += a.norm_sqr() * (1.0 - t);
        *a *= s;
    }
    removed
}

pub(crate) fn route_modes(modes: &mut [Complex64; MODE_COUNT]) -> Result<()> {
    require_only(
        modes,
        &[Location::Common, Location::DetPort1, Location::DetPort2],
        "route_to_detectors",
    )?;
    let h = std::mem::replace(&mut modes[idx(Location::Common, Polarization::H)], ZERO);
    let v = std::mem::replace(&mut modes[idx(Location::Common, Polarization::V)], ZERO);
    modes[idx(Location::DetPort1, Polarization::H)] += h;
    modes[idx(Location::DetPort2, Polarization::V)] += v;
    Ok(())
}

/// Alice's source: bit 0 is `|H⟩`, bit 1 is `|V⟩`, both in the common mode.
pub fn encode_photon(bit: Bit) -> PureState {
    PureState::single(ModeLabel::new(
        Location::Common,
        Polarization::from_bit(bit),
    ))
}

/// Half-wave plate at 22.5°: `H → (H+V)/√2`, `V → (H−V)/√2` at every location.
pub fn apply_hwp(state: &PureState) -> PureState {
    let mut out = *state;
    hwp_modes(out.modes_mut());
    out
}

/// First pass through PBS₁: H is sent down arm `b`, V down arm `a`.
pub fn apply_pbs_forward(state: &PureState) -> Result<PureState> {
    let mut out = *state;
    pbs_forward_modes(out.modes_mut())?;
    Ok(out)
}

/// Return pass through PBS₁. `(ArmB,H)` and `(ArmA,V)` recombine into the
/// common mode; `(ArmB,V)` and `(ArmA,H)` exit an unmonitored port and are
/// counted as loss. Amplitude at other locations is left where it is.
pub fn apply_pbs_backward(state: &PureState) -> PureState {
    let mut out = *state;
    let lost = pbs_backward_modes(out.modes_mut());
    out.absorb_into_vacuum(lost);
    out
}

pub fn apply_arm_phase(state: &PureState, arm: Arm, phase: f64) -> PureState {
    let mut out = *state;
    phase_modes(out.modes_mut(), arm, phase);
    out
}

/// Attenuates one arm to transmittance `t`; the removed weight moves to
/// vacuum so the state stays normalized.
pub fn apply_arm_loss(state: &PureState, arm: Arm, transmittance: f64) -> Result<PureState> {
    check_unit("transmittance", transmittance)?;
    let mut out = *state;
    let removed = loss_modes(out.modes_mut(), arm, transmittance);
    out.absorb_into_vacuum(removed);
    Ok(out)
}

/// Circulator plus PBS₂: common H goes to D1, common V to D2.
pub fn route_to_detectors(state: &PureState) -> Result<PureState> {
    let mut out = *state;
    route_modes(out.modes_mut())?;
    Ok(out)
}

/// Born-rule readout for an ideal detector pair. Any photon weight that is
/// not at a detector port never clicks and is reported as `p_none` together
/// with the vacuum weight.
pub fn ideal_click_probabilities(state: &PureState) -> OutcomeDistribution {
    let p_d1 = state.location_weight(Location::DetPort1);
    let p_d2 = state.location_weight(Location::DetPort2);
    let stray: f64 = [Location::Common, Location::ArmA, Location::ArmB]
        .iter()
        .map(|&l| state.location_weight(l))
        .sum();
    OutcomeDistribution {
        p_d1,
        p_d2,
        p_none: state.vacuum_probability() + stray,
        p_both: 0.0,
    }
}

impl crate::adversary::ArmBAccess for PureState {
    fn arm_b_readings(&self) -> Vec<(Option<Polarization>, f64)> {
        [Polarization::H, Polarization::V]
            .into_iter()
            .map(|p| {
                (
                    Some(p),
                    self.amplitude(ModeLabel::new(Location::ArmB, p)).norm_sqr(),
                )
            })
            .collect()
    }

    fn without_arm_b(&self) -> Self {
        let mut out = *self;
        for p in [Polarization::H, Polarization::V] {
            out.modes[idx(Location::ArmB, p)] = ZERO;
        }
        out
    }

    fn fresh_photon_in_arm_b(&self, reading: Option<Polarization>) -> Self {
        PureState::single(ModeLabel::new(
            Location::ArmB,
            reading.unwrap_or(Polarization::H),
        ))
    }

    fn norm_sqr(&self) -> f64 {
        PureState::norm_sqr(self)
    }

    fn renormalized(&self) -> Self {
        PureState::renormalized(self)
    }
}

/// One optical element, for describing pipelines as data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Hwp,
    PbsForward,
    PbsBackward,
    ArmPhase(Arm, f64),
    ArmLoss(Arm, f64),
    Route,
}

impl Transform {
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        match *self {
            Transform::Hwp => Ok(apply_hwp(state)),
            Transform::PbsForward => apply_pbs_forward(state),
            Transform::PbsBackward => Ok(apply_pbs_backward(state)),
            Transform::ArmPhase(arm, phase) => Ok(apply_arm_phase(state, arm, phase)),
            Transform::ArmLoss(arm, t) => apply_arm_loss(state, arm, t),
            Transform::Route => route_to_detectors(state),
        }
    }
}

pub fn propagate(state: &PureState, steps: &[Transform]) -> Result<PureState> {
    steps.iter().try_fold(*state, |s, step| step.apply(&s))
}
