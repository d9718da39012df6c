//! Amplitude-level model of the interferometer for one photon per slot.
//!
//! Bob's source feeds a beam splitter. The reflected branch (path `a`) runs to
//! Bob's own Faraday mirror; the transmitted branch (path `b`) goes to Alice,
//! where a polarizing beam splitter sends `|H⟩` straight to the optical switch
//! (direct bin) and `|V⟩` through the optical loop (loop bin). Alice opens the
//! switch in the bin selected by her bit, diverting whatever is there into
//! D2. Surviving amplitude returns and recombines at Bob's beam splitter,
//! whose two output ports carry D0 and D1.
//!
//! Conventions:
//! * transmission multiplies by `√t`, reflection by `i√r`;
//! * after the round trip path `a` carries a relative phase of `-1` with
//!   respect to path `b`, so an undisturbed photon always exits towards D0;
//! * path `a` keeps the input polarization, so polarization components never
//!   interfere with each other on return.

use num_complex::Complex64;
use num_traits::Num;
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on normalization and on `r + t = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeamSplitter {
    reflectivity: f64,
    transmissivity: f64,
}

impl BeamSplitter {
    /// The half-silvered mirror both parties agree to use.
    pub const BALANCED: BeamSplitter = BeamSplitter {
        reflectivity: 0.5,
        transmissivity: 0.5,
    };

    pub fn new(reflectivity: f64) -> Result<Self> {
        Self::from_parts(reflectivity, 1.0 - reflectivity)
    }

    pub fn with_transmissivity(transmissivity: f64) -> Result<Self> {
        Self::from_parts(1.0 - transmissivity, transmissivity)
    }

    pub fn from_parts(reflectivity: f64, transmissivity: f64) -> Result<Self> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(reflectivity)
            || !in_unit(transmissivity)
            || libm::fabs(reflectivity + transmissivity - 1.0) > NORM_TOLERANCE
        {
            return Err(Error::InvalidBeamSplitter {
                reflectivity,
                transmissivity,
            });
        }
        Ok(Self {
            reflectivity,
            transmissivity,
        })
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    /// A mirror that never splits the photon (`r` or `t` is zero).
    pub fn is_degenerate(&self) -> bool {
        self.reflectivity == 0.0 || self.transmissivity == 0.0
    }

    fn transmit(&self) -> Complex64 {
        Complex64::new(libm::sqrt(self.transmissivity), 0.0)
    }

    fn reflect(&self) -> Complex64 {
        I * libm::sqrt(self.reflectivity)
    }
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::BALANCED
    }
}

/// Polarization of a single photon in the `{|H⟩, |V⟩}` basis.
///
/// Fields are public so adversarial (even malformed) inputs can be built;
/// [`bs_forward`] rejects anything that is not normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polarization {
    pub h: Complex64,
    pub v: Complex64,
}

impl Polarization {
    pub const H: Polarization = Polarization { h: ONE, v: ZERO };
    pub const V: Polarization = Polarization { h: ZERO, v: ONE };

    pub fn new(h: Complex64, v: Complex64) -> Result<Self> {
        let pol = Self { h, v };
        pol.check()?;
        Ok(pol)
    }

    /// `|+⟩ = (|H⟩ + |V⟩)/√2`
    pub fn diagonal() -> Self {
        let c = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { h: c, v: c }
    }

    /// `|−⟩ = (|H⟩ − |V⟩)/√2`
    pub fn antidiagonal() -> Self {
        let c = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { h: c, v: -c }
    }

    /// Honest encoding of Bob's bit: 0 → `|H⟩`, 1 → `|V⟩`.
    pub fn for_bit(bit: bool) -> Self {
        if bit {
            Self::V
        } else {
            Self::H
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    fn check(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if libm::fabs(norm - 1.0) > NORM_TOLERANCE || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(())
    }
}

/// Arrival window at Alice's switch, plus the deadline by which Bob's
/// detectors must have fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TimeBin {
    /// `|H⟩` through the PBS, reaches the switch at Δt0.
    Direct,
    /// `|V⟩` through the optical loop, reaches the switch at Δt1.
    Loop,
    /// Return deadline Δt2 at Bob's detectors.
    Return,
}

impl TimeBin {
    pub fn index(self) -> u8 {
        match self {
            TimeBin::Direct => 0,
            TimeBin::Loop => 1,
            TimeBin::Return => 2,
        }
    }

    /// Switch bin an honest Alice opens for her bit.
    pub fn for_bit(bit: bool) -> Self {
        if bit {
            TimeBin::Loop
        } else {
            TimeBin::Direct
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SwitchSchedule {
    pub direct: bool,
    pub looped: bool,
}

impl SwitchSchedule {
    pub const CLOSED: SwitchSchedule = SwitchSchedule {
        direct: false,
        looped: false,
    };
    pub const BOTH: SwitchSchedule = SwitchSchedule {
        direct: true,
        looped: true,
    };

    /// a = 0 opens the direct bin, a = 1 the loop bin.
    pub fn honest(a_bit: bool) -> Self {
        Self {
            direct: !a_bit,
            looped: a_bit,
        }
    }

    pub fn is_open(&self, bin: TimeBin) -> bool {
        match bin {
            TimeBin::Direct => self.direct,
            TimeBin::Loop => self.looped,
            TimeBin::Return => false,
        }
    }

    pub fn open_bins(&self) -> usize {
        usize::from(self.direct) + usize::from(self.looped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Detector {
    D0,
    D1,
    D2,
    /// No detector fired by the return deadline.
    None,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::D0 => "D0",
            Detector::D1 => "D1",
            Detector::D2 => "D2",
            Detector::None => "NONE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionOutcome {
    pub detector: Detector,
    pub bin: TimeBin,
}

impl DetectionOutcome {
    pub const NONE: DetectionOutcome = DetectionOutcome {
        detector: Detector::None,
        bin: TimeBin::Return,
    };

    fn at_return(detector: Detector) -> Self {
        Self {
            detector,
            bin: TimeBin::Return,
        }
    }
}

/// Single-photon state between the first and second beam-splitter passes.
///
/// `path_a` holds the `(H, V)` amplitudes of the arm towards FM0; `direct` and
/// `looped` the amplitudes of path `b` in the two switch bins. All zero means
/// the photon has been absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState {
    pub path_a: [Complex64; 2],
    pub direct: Complex64,
    pub looped: Complex64,
}

impl PhotonState {
    pub const VACUUM: PhotonState = PhotonState {
        path_a: [ZERO, ZERO],
        direct: ZERO,
        looped: ZERO,
    };

    pub fn norm_sqr(&self) -> f64 {
        self.path_a_weight() + self.b_weight()
    }

    pub fn path_a_weight(&self) -> f64 {
        self.path_a[0].norm_sqr() + self.path_a[1].norm_sqr()
    }

    pub fn b_weight(&self) -> f64 {
        self.direct.norm_sqr() + self.looped.norm_sqr()
    }

    pub fn is_vacuum(&self) -> bool {
        self.norm_sqr() == 0.0
    }

    pub fn bin(&self, bin: TimeBin) -> Complex64 {
        match bin {
            TimeBin::Direct => self.direct,
            TimeBin::Loop => self.looped,
            TimeBin::Return => ZERO,
        }
    }

    fn clear_bin(&mut self, bin: TimeBin) {
        match bin {
            TimeBin::Direct => self.direct = ZERO,
            TimeBin::Loop => self.looped = ZERO,
            TimeBin::Return => {}
        }
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            path_a: [self.path_a[0] * k, self.path_a[1] * k],
            direct: self.direct * k,
            looped: self.looped * k,
        }
    }

    fn normalized(&self) -> Self {
        let norm = self.norm_sqr();
        if norm == 0.0 {
            Self::VACUUM
        } else {
            self.scaled(1.0 / libm::sqrt(norm))
        }
    }
}

/// First beam-splitter pass: path `a` gets `i√r` times the input
/// polarization, path `b` gets `√t` split by the PBS into the two bins.
pub fn bs_forward(input: &Polarization, bs: &BeamSplitter) -> Result<PhotonState> {
    input.check()?;
    let (refl, trans) = (bs.reflect(), bs.transmit());
    Ok(PhotonState {
        path_a: [refl * input.h, refl * input.v],
        direct: trans * input.h,
        looped: trans * input.v,
    })
}

/// Outcome weights of Alice's switch before any sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchBranches {
    /// Probability that D2 fires in the direct and loop bins.
    pub click: [f64; 2],
    /// Normalized state left over when D2 stays silent.
    pub survivor: PhotonState,
}

impl SwitchBranches {
    pub fn survive_probability(&self) -> f64 {
        1.0 - self.click[0] - self.click[1]
    }
}

/// Exact branch weights for `state` meeting `schedule`.
pub fn switch_branches(state: &PhotonState, schedule: SwitchSchedule) -> SwitchBranches {
    let total = state.norm_sqr();
    let mut click = [0.0; 2];
    let mut survivor = *state;
    if total > 0.0 {
        for (k, bin) in [TimeBin::Direct, TimeBin::Loop].into_iter().enumerate() {
            if schedule.is_open(bin) {
                click[k] = survivor.bin(bin).norm_sqr() / total;
                survivor.clear_bin(bin);
            }
        }
    }
    SwitchBranches {
        click,
        survivor: survivor.normalized(),
    }
}

/// Alice's switch as a sequence of projective "photon in this bin?" tests,
/// in arrival order. A click empties the state; otherwise the measured bin is
/// projected out and the remainder renormalized. Closed bins and bins with no
/// amplitude leave the state untouched.
pub fn apply_switch<R: Rng + ?Sized>(
    state: PhotonState,
    schedule: SwitchSchedule,
    rng: &mut R,
) -> (PhotonState, Option<DetectionOutcome>) {
    let mut state = state;
    for bin in [TimeBin::Direct, TimeBin::Loop] {
        if !schedule.is_open(bin) {
            continue;
        }
        let weight = state.bin(bin).norm_sqr();
        if weight == 0.0 {
            continue;
        }
        let total = state.norm_sqr();
        if rng.random::<f64>() * total < weight {
            let click = DetectionOutcome {
                detector: Detector::D2,
                bin,
            };
            return (PhotonState::VACUUM, Some(click));
        }
        state.clear_bin(bin);
        state = state.normalized();
    }
    (state, None)
}

/// Second beam-splitter pass. Returns `(P(D0), P(D1))`.
///
/// Path `b` (either bin) maps to D0 with `√t` and D1 with `i√r`; path `a`
/// returns with a relative `-1` and maps to D0 with `i√r`, D1 with `√t`.
/// Each polarization component is combined separately.
pub fn bs_return(state: &PhotonState, bs: &BeamSplitter) -> (f64, f64) {
    let (refl, trans) = (bs.reflect(), bs.transmit());
    let b_arm = [state.direct, state.looped];
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    for (&a, &b) in state.path_a.iter().zip(&b_arm) {
        let a = -a;
        p0 += (trans * b + refl * a).norm_sqr();
        p1 += (refl * b + trans * a).norm_sqr();
    }
    (p0, p1)
}

fn sample_return<R: Rng + ?Sized>(p0: f64, p1: f64, rng: &mut R) -> DetectionOutcome {
    let u = rng.random::<f64>();
    if u < p0 {
        DetectionOutcome::at_return(Detector::D0)
    } else if u < p0 + p1 {
        DetectionOutcome::at_return(Detector::D1)
    } else {
        DetectionOutcome::NONE
    }
}

/// One photon of polarization `input` through the whole apparatus.
pub fn run_photon<R: Rng + ?Sized>(
    input: &Polarization,
    schedule: SwitchSchedule,
    bs: &BeamSplitter,
    rng: &mut R,
) -> Result<DetectionOutcome> {
    let state = bs_forward(input, bs)?;
    let (state, click) = apply_switch(state, schedule, rng);
    if let Some(click) = click {
        return Ok(click);
    }
    let (p0, p1) = bs_return(&state, bs);
    Ok(sample_return(p0, p1, rng))
}

/// A photon injected from Alice's side into path `b`, heading back to Bob.
/// It reaches D0 with probability `t` and D1 with probability `r`.
pub fn run_remote_photon<R: Rng + ?Sized>(
    input: &Polarization,
    bs: &BeamSplitter,
    rng: &mut R,
) -> Result<DetectionOutcome> {
    input.check()?;
    let state = PhotonState {
        path_a: [ZERO, ZERO],
        direct: input.h,
        looped: input.v,
    };
    let (p0, p1) = bs_return(&state, bs);
    Ok(sample_return(p0, p1, rng))
}

/// Honest slot: Bob encodes `b_bit`, Alice gates the bin for `a_bit`.
pub fn run_slot<R: Rng + ?Sized>(
    a_bit: bool,
    b_bit: bool,
    bs: &BeamSplitter,
    rng: &mut R,
) -> DetectionOutcome {
    run_photon(
        &Polarization::for_bit(b_bit),
        SwitchSchedule::honest(a_bit),
        bs,
        rng,
    )
    .expect("basis states are normalized")
}

/// Per-slot detector probabilities, generic so that rational reflectivities
/// can be evaluated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeDistribution<T> {
    pub d0: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Copy + Num> OutcomeDistribution<T> {
    pub fn total(&self) -> T {
        self.d0 + self.d1 + self.d2
    }

    pub fn probability(&self, detector: Detector) -> T {
        match detector {
            Detector::D0 => self.d0,
            Detector::D1 => self.d1,
            Detector::D2 => self.d2,
            Detector::None => T::zero(),
        }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.d0, self.d1, self.d2]
    }
}

/// Closed form: `a ≠ b` always lands in D0; `a = b` gives `(r², rt, t)`.
pub fn outcome_distribution_exact<T: Copy + Num>(
    a_bit: bool,
    b_bit: bool,
    reflectivity: T,
) -> OutcomeDistribution<T> {
    let r = reflectivity;
    let t = T::one() - r;
    if a_bit != b_bit {
        OutcomeDistribution {
            d0: T::one(),
            d1: T::zero(),
            d2: T::zero(),
        }
    } else {
        OutcomeDistribution {
            d0: r * r,
            d1: r * t,
            d2: t,
        }
    }
}

pub fn outcome_distribution(
    a_bit: bool,
    b_bit: bool,
    bs: &BeamSplitter,
) -> OutcomeDistribution<f64> {
    let r = bs.reflectivity();
    let t = bs.transmissivity();
    if a_bit != b_bit {
        OutcomeDistribution {
            d0: 1.0,
            d1: 0.0,
            d2: 0.0,
        }
    } else {
        OutcomeDistribution {
            d0: r * r,
            d1: r * t,
            d2: t,
        }
    }
}

/// Detector clicks collected in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotClicks {
    pub d0: u32,
    pub d1: u32,
    pub d2_direct: u32,
    pub d2_loop: u32,
    /// Photons that reached no detector.
    pub none: u32,
}

impl SlotClicks {
    pub fn record(&mut self, outcome: DetectionOutcome) {
        match (outcome.detector, outcome.bin) {
            (Detector::D0, _) => self.d0 += 1,
            (Detector::D1, _) => self.d1 += 1,
            (Detector::D2, TimeBin::Loop) => self.d2_loop += 1,
            (Detector::D2, _) => self.d2_direct += 1,
            (Detector::None, _) => self.none += 1,
        }
    }

    pub fn d2(&self) -> u32 {
        self.d2_direct + self.d2_loop
    }

    /// Clicks at any detector.
    pub fn clicks(&self) -> u32 {
        self.d0 + self.d1 + self.d2()
    }

    pub fn count(&self, detector: Detector) -> u32 {
        match detector {
            Detector::D0 => self.d0,
            Detector::D1 => self.d1,
            Detector::D2 => self.d2(),
            Detector::None => self.none,
        }
    }

    /// Every recorded event; a slot without any event yields one `NONE`.
    pub fn events(&self) -> impl Iterator<Item = DetectionOutcome> + '_ {
        let at = |detector, bin, n: u32| {
            core::iter::repeat_n(DetectionOutcome { detector, bin }, n as usize)
        };
        let silent = u32::from(self.clicks() == 0 && self.none == 0);
        at(Detector::D2, TimeBin::Direct, self.d2_direct)
            .chain(at(Detector::D2, TimeBin::Loop, self.d2_loop))
            .chain(at(Detector::D0, TimeBin::Return, self.d0))
            .chain(at(Detector::D1, TimeBin::Return, self.d1))
            .chain(at(Detector::None, TimeBin::Return, self.none + silent))
    }
}

/// `k` independent, distinguishable photons through the same honest slot.
pub fn run_slot_multiphoton<R: Rng + ?Sized>(
    k: u32,
    a_bit: bool,
    b_bit: bool,
    bs: &BeamSplitter,
    rng: &mut R,
) -> Result<SlotClicks> {
    if k == 0 {
        return Err(crate::error::invalid("k", "at least one photon per slot"));
    }
    let mut clicks = SlotClicks::default();
    for _ in 0..k {
        clicks.record(run_slot(a_bit, b_bit, bs, rng));
    }
    Ok(clicks)
}
