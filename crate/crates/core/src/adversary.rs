//! Dishonest behaviours for either party, each with its closed-form prediction.
//!
//! Alice can intercept (hold the switch open in both bins on chosen slots),
//! intercept and resend, or simply forge an opening. Bob can use a skewed beam
//! splitter, multi-photon pulses or off-basis polarizations.
//!
//! Alice's interception slots are chosen uniformly per sequence, independently
//! of Bob's bits. A cheating Alice never aborts on her own D2 check.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::optics::{BeamSplitter, Polarization};
use crate::protocol::{
    bob_verify_opening, run_commit_phase, xor_all, CommitmentParams, CommitmentTranscript,
    OpeningMessage, Party, Phase,
};
use crate::rng::{derive_seed, substream, Stream};
use crate::security::comparison_probs;

/// Alice's behaviour during the commit phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AliceStrategy {
    #[default]
    Honest,
    /// Open both bins on `slots` slots per sequence and keep what is caught.
    Intercept { slots: usize },
    /// As `Intercept`, re-emitting a photon of the caught polarization.
    InterceptResend { slots: usize },
}

impl AliceStrategy {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            AliceStrategy::Intercept { slots } | AliceStrategy::InterceptResend { slots }
                if slots > n =>
            {
                Err(invalid(
                    "n0",
                    "cannot intercept more slots than a sequence has",
                ))
            }
            _ => Ok(()),
        }
    }

    fn intercepted_slots(&self) -> usize {
        match *self {
            AliceStrategy::Honest => 0,
            AliceStrategy::Intercept { slots } | AliceStrategy::InterceptResend { slots } => slots,
        }
    }

    pub fn resends(&self) -> bool {
        matches!(self, AliceStrategy::InterceptResend { .. })
    }

    pub fn runs_d2_check(&self) -> bool {
        matches!(self, AliceStrategy::Honest)
    }

    /// Which slots of sequence `i` Alice intercepts.
    pub fn interception_mask(&self, seed: u64, sequence: usize, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        let k = self.intercepted_slots().min(n);
        if k > 0 {
            let mut rng = substream(seed, Stream::Interception { sequence });
            for j in index::sample(&mut rng, n, k) {
                mask[j] = true;
            }
        }
        mask
    }
}

/// Bob's behaviour during the commit phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum BobStrategy {
    #[default]
    Honest,
    IllegalBeamSplitter {
        transmissivity: f64,
    },
    Multiphoton {
        photons: u32,
    },
    IllegalPolarization {
        state: Polarization,
    },
}

impl BobStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BobStrategy::IllegalBeamSplitter { transmissivity } => {
                BeamSplitter::with_transmissivity(transmissivity).map(|_| ())
            }
            BobStrategy::Multiphoton { photons: 0 } => {
                Err(invalid("k", "at least one photon per slot"))
            }
            BobStrategy::IllegalPolarization { state } => {
                Polarization::new(state.h, state.v).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn beam_splitter(&self, agreed: &BeamSplitter) -> Result<BeamSplitter> {
        match *self {
            BobStrategy::IllegalBeamSplitter { transmissivity } => {
                BeamSplitter::with_transmissivity(transmissivity)
            }
            _ => Ok(*agreed),
        }
    }

    pub fn photons_per_slot(&self) -> u32 {
        match *self {
            BobStrategy::Multiphoton { photons } => photons,
            _ => 1,
        }
    }

    pub fn polarization(&self, bit: bool) -> Polarization {
        match *self {
            BobStrategy::IllegalPolarization { state } => state,
            _ => Polarization::for_bit(bit),
        }
    }
}

/// One party's deviation from the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AttackStrategy {
    AliceIntercept {
        n0: usize,
    },
    AliceInterceptResend {
        n0: usize,
    },
    /// Honest commit phase followed by a forged opening.
    AliceHonestAlter,
    BobIllegalBs {
        transmissivity: f64,
    },
    BobMultiphoton {
        k: u32,
    },
    BobIllegalPolarization {
        state: Polarization,
    },
}

impl AttackStrategy {
    pub fn party(&self) -> Party {
        match self {
            AttackStrategy::AliceIntercept { .. }
            | AttackStrategy::AliceInterceptResend { .. }
            | AttackStrategy::AliceHonestAlter => Party::Alice,
            _ => Party::Bob,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            AttackStrategy::AliceIntercept { n0 } | AttackStrategy::AliceInterceptResend { n0 }
                if n0 > n =>
            {
                Err(invalid("n0", "must lie in [0, n]"))
            }
            AttackStrategy::BobIllegalBs { transmissivity }
                if !(transmissivity > 0.0 && transmissivity < 1.0) =>
            {
                Err(invalid("t_prime", "must lie in (0, 1)"))
            }
            AttackStrategy::BobMultiphoton { k } if k < 2 => Err(invalid(
                "k",
                "a multi-photon pulse has at least two photons",
            )),
            AttackStrategy::BobIllegalPolarization { state } => {
                Polarization::new(state.h, state.v).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Commit-phase behaviour of both parties under this attack.
    pub fn behaviours(&self) -> (AliceStrategy, BobStrategy) {
        match *self {
            AttackStrategy::AliceIntercept { n0 } => {
                (AliceStrategy::Intercept { slots: n0 }, BobStrategy::Honest)
            }
            AttackStrategy::AliceInterceptResend { n0 } => (
                AliceStrategy::InterceptResend { slots: n0 },
                BobStrategy::Honest,
            ),
            AttackStrategy::AliceHonestAlter => (AliceStrategy::Honest, BobStrategy::Honest),
            AttackStrategy::BobIllegalBs { transmissivity } => (
                AliceStrategy::Honest,
                BobStrategy::IllegalBeamSplitter { transmissivity },
            ),
            AttackStrategy::BobMultiphoton { k } => (
                AliceStrategy::Honest,
                BobStrategy::Multiphoton { photons: k },
            ),
            AttackStrategy::BobIllegalPolarization { state } => (
                AliceStrategy::Honest,
                BobStrategy::IllegalPolarization { state },
            ),
        }
    }
}

/// Click totals at D0, D1 and D2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorTotals<T> {
    pub d0: T,
    pub d1: T,
    pub d2: T,
}

impl DetectorTotals<f64> {
    fn scaled(self, k: f64) -> Self {
        Self {
            d0: self.d0 * k,
            d1: self.d1 * k,
            d2: self.d2 * k,
        }
    }

    pub fn total(&self) -> f64 {
        self.d0 + self.d1 + self.d2
    }
}

impl DetectorTotals<u64> {
    pub fn total(&self) -> u64 {
        self.d0 + self.d1 + self.d2
    }
}

fn split(bs: &BeamSplitter) -> (f64, f64) {
    (bs.reflectivity(), bs.transmissivity())
}

/// Per-sequence click totals under interception of `n0` slots, as published:
/// `N(β0) = (n−n0)/2 + r²n/2`, `N(β1) = rtn/2`, `N(α) = n0/2 + tn/2`.
pub fn intercept_totals_published(n: usize, n0: usize, bs: &BeamSplitter) -> DetectorTotals<f64> {
    let (r, t) = split(bs);
    let (n, n0) = (n as f64, n0 as f64);
    DetectorTotals {
        d0: 0.5 * (n - n0) + 0.5 * r * r * n,
        d1: 0.5 * r * t * n,
        d2: 0.5 * n0 + 0.5 * t * n,
    }
}

/// Expected per-sequence totals when the optics above are applied slot by
/// slot: an intercepted slot gives `(r², rt, t)` whatever the bits.
pub fn intercept_totals_model(n: usize, n0: usize, bs: &BeamSplitter) -> DetectorTotals<f64> {
    let (r, t) = split(bs);
    let (rest, n0) = ((n - n0) as f64, n0 as f64);
    DetectorTotals {
        d0: rest * (1.0 + r * r) / 2.0 + n0 * r * r,
        d1: rest * r * t / 2.0 + n0 * r * t,
        d2: rest * t / 2.0 + n0 * t,
    }
}

/// `p′(Aalter) = N(β0) / (n − N(α))`; `(5n − 4n0)/(6n − 4n0)` when balanced.
pub fn intercept_alter_probability(n: usize, n0: usize, bs: &BeamSplitter) -> f64 {
    let tot = intercept_totals_published(n, n0, bs);
    tot.d0 / (n as f64 - tot.d2)
}

/// Published totals under intercept/resend of `n0` slots; they add up to `n + n0`.
pub fn resend_totals_published(n: usize, n0: usize, bs: &BeamSplitter) -> DetectorTotals<f64> {
    let (r, t) = split(bs);
    let (n, n0) = (n as f64, n0 as f64);
    DetectorTotals {
        d0: 0.5 * (n - n0 + t * n0) + 0.5 * (r * r * n + t * n0),
        d1: 0.5 * r * n0 + 0.5 * (r * t * n + r * n0),
        d2: 0.5 * n0 + 0.5 * t * n,
    }
}

/// Optics-model totals under intercept/resend. Alice re-emits on every
/// intercepted slot; the echo lands on D0/D1 with `(t, r)`. A missed photon
/// has collapsed onto path `a` and lands with `(r, t)` as well.
pub fn resend_totals_model(n: usize, n0: usize, bs: &BeamSplitter) -> DetectorTotals<f64> {
    let (r, t) = split(bs);
    let (rest, n0) = ((n - n0) as f64, n0 as f64);
    DetectorTotals {
        d0: rest * (1.0 + r * r) / 2.0 + n0 * (t + r * r),
        d1: rest * r * t / 2.0 + n0 * r * (1.0 + t),
        d2: rest * t / 2.0 + n0 * t,
    }
}

/// `p″(Aalter) = N′(β0) / (n − (N′(α) − n0))`; `5n/(6n + 4n0)` when balanced.
pub fn resend_alter_probability(n: usize, n0: usize, bs: &BeamSplitter) -> f64 {
    let tot = resend_totals_published(n, n0, bs);
    tot.d0 / (n as f64 - (tot.d2 - n0 as f64))
}

/// Per-sequence totals of an honest run with splitter `bs` and `k` photons per slot.
pub fn honest_totals(n: usize, k: u32, bs: &BeamSplitter) -> DetectorTotals<f64> {
    let (r, t) = split(bs);
    DetectorTotals {
        d0: (1.0 + r * r) / 2.0,
        d1: r * t / 2.0,
        d2: t / 2.0,
    }
    .scaled(n as f64 * f64::from(k))
}

/// Probability that at least one of `k` photons reaches D2 in a slot.
pub fn d2_slot_rate(k: u32, bs: &BeamSplitter) -> f64 {
    0.5 * (1.0 - libm::pow(bs.reflectivity(), f64::from(k)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rate {
    pub expected: Option<f64>,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackReport {
    pub strategy: AttackStrategy,
    pub params: CommitmentParams,
    pub committed_bit: bool,
    /// Closed-form expected totals from the published analysis (all sequences).
    pub expected: DetectorTotals<f64>,
    /// Expected totals implied by the optics model (all sequences).
    pub model: DetectorTotals<f64>,
    pub empirical: DetectorTotals<u64>,
    /// Fraction of slots with a D2 click.
    pub d2_slot_rate: Rate,
    /// Fraction of slots Bob considers confirmed.
    pub confirmation_rate: Rate,
    /// Alice's chance to flip one sequence undetected.
    pub p_alter: Option<f64>,
    /// Same over all `m` sequences.
    pub p_alter_run: Option<f64>,
    /// Chance the counterparty notices, per sequence and per run.
    pub p_detect_sequence: f64,
    pub p_detect: f64,
    /// Alice's D2 check aborted this run.
    pub aborted: bool,
    /// Bob accepted the forged opening in this run.
    pub alter_accepted: Option<bool>,
}

fn committed_bit(params: &CommitmentParams) -> bool {
    substream(params.master_seed, Stream::CommitBit).random()
}

/// Runs `strategy` once and compares against its predictions.
pub fn run_attack(strategy: AttackStrategy, params: &CommitmentParams) -> Result<AttackReport> {
    params.validate()?;
    strategy.validate(params.n)?;
    let (alice, bob) = strategy.behaviours();
    let bit = committed_bit(params);
    let transcript = run_commit_phase(params, bit, &alice, &bob)?;
    let summary = transcript.summary();
    let (m, n) = (params.m, params.n);
    let agreed = params.bs;
    let honest_probs = comparison_probs(&agreed)?;

    let (expected, model, d2_rate, confirmation) = match strategy {
        AttackStrategy::AliceIntercept { n0 } => {
            let published = intercept_totals_published(n, n0, &agreed);
            let model = intercept_totals_model(n, n0, &agreed);
            (published, model, published.d2 / n as f64, None)
        }
        AttackStrategy::AliceInterceptResend { n0 } => {
            let published = resend_totals_published(n, n0, &agreed);
            let model = resend_totals_model(n, n0, &agreed);
            (published, model, published.d2 / n as f64, None)
        }
        AttackStrategy::AliceHonestAlter | AttackStrategy::BobIllegalPolarization { .. } => {
            let tot = honest_totals(n, 1, &agreed);
            (tot, tot, d2_slot_rate(1, &agreed), Some(honest_probs.p))
        }
        AttackStrategy::BobIllegalBs { transmissivity } => {
            let bs = BeamSplitter::with_transmissivity(transmissivity)?;
            let tot = honest_totals(n, 1, &bs);
            let p = comparison_probs(&bs).ok().map(|c| c.p);
            (tot, tot, d2_slot_rate(1, &bs), p)
        }
        AttackStrategy::BobMultiphoton { k } => {
            let tot = honest_totals(n, k, &agreed);
            (tot, tot, d2_slot_rate(k, &agreed), None)
        }
    };

    let (p_alter, p_detect_sequence, alter_accepted) = match strategy.party() {
        Party::Alice => {
            let p = match strategy {
                AttackStrategy::AliceIntercept { n0 } => {
                    intercept_alter_probability(n, n0, &agreed)
                }
                AttackStrategy::AliceInterceptResend { n0 } => {
                    resend_alter_probability(n, n0, &agreed)
                }
                _ => (1.0 - honest_probs.p) / (1.0 - honest_probs.q),
            };
            let accepted = forge_and_verify(&transcript, params.master_seed)?;
            (Some(p), 1.0 - p, Some(accepted))
        }
        Party::Bob => {
            let p_seq = params.d2_window().rejection_probability(n as u64, d2_rate);
            (None, p_seq, None)
        }
    };
    let p_alter_run = p_alter.map(|p| libm::pow(p, m as f64));
    let p_detect = match p_alter_run {
        Some(p) => 1.0 - p,
        None => 1.0 - libm::pow(1.0 - p_detect_sequence, m as f64),
    };

    Ok(AttackReport {
        strategy,
        params: *params,
        committed_bit: bit,
        expected: expected.scaled(m as f64),
        model: model.scaled(m as f64),
        empirical: DetectorTotals {
            d0: summary.d0,
            d1: summary.d1,
            d2: summary.d2,
        },
        d2_slot_rate: Rate {
            expected: Some(d2_rate),
            empirical: summary.alpha_rate(),
        },
        confirmation_rate: Rate {
            expected: confirmation,
            empirical: summary.confirmation_rate(),
        },
        p_alter,
        p_alter_run,
        p_detect_sequence,
        p_detect,
        aborted: transcript.phase() == Phase::Aborted,
        alter_accepted,
    })
}

pub fn alice_intercept(n0: usize, params: &CommitmentParams) -> Result<AttackReport> {
    run_attack(AttackStrategy::AliceIntercept { n0 }, params)
}

pub fn alice_intercept_resend(n0: usize, params: &CommitmentParams) -> Result<AttackReport> {
    run_attack(AttackStrategy::AliceInterceptResend { n0 }, params)
}

pub fn bob_illegal_bs(transmissivity: f64, params: &CommitmentParams) -> Result<AttackReport> {
    run_attack(AttackStrategy::BobIllegalBs { transmissivity }, params)
}

pub fn bob_multiphoton(k: u32, params: &CommitmentParams) -> Result<AttackReport> {
    run_attack(AttackStrategy::BobMultiphoton { k }, params)
}

pub fn bob_illegal_polarization(
    state: Polarization,
    params: &CommitmentParams,
) -> Result<AttackReport> {
    run_attack(AttackStrategy::BobIllegalPolarization { state }, params)
}

/// Forged opening for `target_bit`.
///
/// A photon Alice caught on an intercepted slot tells her Bob's bit (by its
/// time bin) and Bob will read that slot as `a = b`, so she claims his bit
/// there. If the parity still differs from `target_bit` she flips one bit,
/// chosen uniformly among the slots where her D2 stayed silent. For an honest
/// commit phase this is exactly one flip per sequence. The claimed D2 record
/// lists the slots where she knows Bob saw nothing.
pub fn alice_optimal_alter<R: Rng + ?Sized>(
    transcript: &CommitmentTranscript,
    target_bit: bool,
    rng: &mut R,
) -> Result<OpeningMessage> {
    if target_bit == transcript.committed_bit() {
        return Err(invalid("target_bit", "must differ from the committed bit"));
    }
    let mut sequences = Vec::with_capacity(transcript.m());
    let mut d2_record = Vec::with_capacity(transcript.m());
    let mut unknown = Vec::with_capacity(transcript.n());
    for i in 0..transcript.m() {
        let seq = transcript.sequence(i);
        let mut bits: Vec<bool> = seq
            .iter()
            .map(|r| match r.alice.intercepted && r.alice.alpha {
                true => r.clicks.d2_loop > 0,
                false => r.alice.bit,
            })
            .collect();
        if xor_all(&bits) != target_bit {
            unknown.clear();
            unknown.extend(
                seq.iter()
                    .enumerate()
                    .filter(|(_, r)| !r.alice.alpha)
                    .map(|(j, _)| j),
            );
            if unknown.is_empty() {
                return Err(Error::AttackImpossible { sequence: i });
            }
            bits[unknown[rng.random_range(0..unknown.len())]] ^= true;
        }
        sequences.push(bits);
        d2_record.push(seq.iter().map(|r| r.alice.knows_confirmed()).collect());
    }
    Ok(OpeningMessage {
        bit: target_bit,
        sequences,
        d2_record,
    })
}

fn forge_and_verify(transcript: &CommitmentTranscript, seed: u64) -> Result<bool> {
    if transcript.phase() != Phase::Committed {
        return Ok(false);
    }
    let target = !transcript.committed_bit();
    match alice_optimal_alter(transcript, target, &mut substream(seed, Stream::Alter)) {
        Ok(opening) => Ok(bob_verify_opening(transcript, &opening)?.is_accept()),
        Err(Error::AttackImpossible { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Params for trial `index` of an experiment seeded by `params`.
pub fn trial_params(params: &CommitmentParams, index: u64) -> CommitmentParams {
    params.with_seed(derive_seed(params.master_seed, Stream::Trial { index }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlterEstimate {
    pub trials: u64,
    /// Trials Alice's own honest check aborted; excluded from the rate.
    pub aborted: u64,
    pub accepted: u64,
}

impl AlterEstimate {
    pub fn rate(&self) -> f64 {
        self.accepted as f64 / (self.trials - self.aborted) as f64
    }
}

/// Monte Carlo of the whole commit → forge → verify loop.
pub fn estimate_alter_success(
    alice: AliceStrategy,
    params: &CommitmentParams,
    trials: u64,
) -> Result<AlterEstimate> {
    let mut est = AlterEstimate {
        trials,
        ..AlterEstimate::default()
    };
    for index in 0..trials {
        let p = trial_params(params, index);
        let t = run_commit_phase(&p, committed_bit(&p), &alice, &BobStrategy::Honest)?;
        if t.phase() == Phase::Aborted {
            est.aborted += 1;
        } else if forge_and_verify(&t, p.master_seed)? {
            est.accepted += 1;
        }
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionEstimate {
    pub runs: u64,
    pub aborted_runs: u64,
    pub sequences: u64,
    pub failing_sequences: u64,
}

impl DetectionEstimate {
    pub fn run_rate(&self) -> f64 {
        self.aborted_runs as f64 / self.runs as f64
    }

    pub fn sequence_rate(&self) -> f64 {
        self.failing_sequences as f64 / self.sequences as f64
    }
}

/// How often an honest Alice's D2 check catches `bob`.
pub fn estimate_detection(
    bob: BobStrategy,
    params: &CommitmentParams,
    runs: u64,
) -> Result<DetectionEstimate> {
    let mut est = DetectionEstimate {
        runs,
        ..DetectionEstimate::default()
    };
    for index in 0..runs {
        let p = trial_params(params, index);
        let t = run_commit_phase(&p, committed_bit(&p), &AliceStrategy::Honest, &bob)?;
        let check = t.d2_check().expect("honest Alice runs her check");
        est.sequences += check.counts.len() as u64;
        est.failing_sequences += check.failing.len() as u64;
        est.aborted_runs += u64::from(!check.passed());
    }
    Ok(est)
}
