//! Commit and opening phases.
//!
//! Alice commits to `b` by choosing `m` random `n`-bit strings whose XOR is
//! `b`; Bob draws `m` uniform strings. Slot `(i, j)` runs one photon through
//! the interferometer with Bob encoding `b[i][j]` and Alice gating the switch
//! with `a[i][j]`. Slots are processed in lexicographic order.

use alloc::vec::Vec;
use rand::Rng;

use crate::adversary::{AliceStrategy, BobStrategy};
use crate::error::{invalid, Error, Result};
use crate::optics::{
    run_photon, run_remote_photon, BeamSplitter, Detector, Polarization, SlotClicks,
    SwitchSchedule, TimeBin,
};
use crate::rng::{substream, Stream};
use crate::stats::CountWindow;

pub const DEFAULT_CHECK_SIGMA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CommitmentParams {
    /// Number of sequences.
    pub m: usize,
    /// Bits per sequence.
    pub n: usize,
    /// The beam splitter both parties agreed on.
    pub bs: BeamSplitter,
    /// Half-width of Alice's D2 acceptance window, in binomial standard deviations.
    pub d2_check_sigma: f64,
    pub master_seed: u64,
}

impl CommitmentParams {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        let params = Self {
            m,
            n,
            bs: BeamSplitter::BALANCED,
            d2_check_sigma: DEFAULT_CHECK_SIGMA,
            master_seed: 1,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_beam_splitter(mut self, bs: BeamSplitter) -> Self {
        self.bs = bs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("m", "at least one sequence"));
        }
        if self.n < 2 {
            return Err(invalid("n", "at least two bits per sequence"));
        }
        if self.d2_check_sigma.is_nan() || self.d2_check_sigma <= 0.0 {
            return Err(invalid("d2_check_sigma", "must be positive"));
        }
        Ok(())
    }

    /// Alice's acceptance window on the number of D2 clicks per sequence.
    pub fn d2_window(&self) -> CountWindow {
        let rate = self.bs.transmissivity() / 2.0;
        CountWindow::binomial(self.n, rate, self.d2_check_sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Party {
    Alice,
    Bob,
}

/// `m` bit strings of length `n`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequenceSet {
    pub owner: Party,
    /// Alice's committed bit; `None` for Bob.
    pub committed: Option<bool>,
    m: usize,
    n: usize,
    bits: Vec<bool>,
}

impl BitSequenceSet {
    /// Alice's sequences from explicit rows; each row must have parity `b`.
    pub fn alice_from_rows(b: bool, rows: &[Vec<bool>]) -> Result<Self> {
        let set = Self::from_rows(Party::Alice, Some(b), rows)?;
        if set.n < 2 {
            return Err(invalid("n", "at least two bits per sequence"));
        }
        if (0..set.m).any(|i| set.parity(i) != b) {
            return Err(invalid(
                "rows",
                "every sequence must XOR to the committed bit",
            ));
        }
        Ok(set)
    }

    pub fn bob_from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        Self::from_rows(Party::Bob, None, rows)
    }

    fn from_rows(owner: Party, committed: Option<bool>, rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(invalid("rows", "need at least one non-empty sequence"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("rows", "sequences must have equal length"));
        }
        Ok(Self {
            owner,
            committed,
            m: rows.len(),
            n,
            bits: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn sequence(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    pub fn sequences(&self) -> impl Iterator<Item = &[bool]> {
        self.bits.chunks(self.n)
    }

    pub fn parity(&self, i: usize) -> bool {
        xor_all(self.sequence(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        self.sequences().map(<[bool]>::to_vec).collect()
    }
}

pub fn xor_all(bits: &[bool]) -> bool {
    bits.iter().fold(false, |acc, &x| acc ^ x)
}

/// Uniform over the `2^(n−1)` strings of parity `b`, independently per sequence.
pub fn alice_generate<R: Rng + ?Sized>(
    b: bool,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<BitSequenceSet> {
    if n < 2 {
        return Err(invalid("n", "at least two bits per sequence"));
    }
    if m == 0 {
        return Err(invalid("m", "at least one sequence"));
    }
    let mut bits = Vec::with_capacity(m * n);
    for _ in 0..m {
        let mut parity = b;
        for _ in 0..n - 1 {
            let bit: bool = rng.random();
            parity ^= bit;
            bits.push(bit);
        }
        bits.push(parity);
    }
    Ok(BitSequenceSet {
        owner: Party::Alice,
        committed: Some(b),
        m,
        n,
        bits,
    })
}

pub fn bob_generate<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> BitSequenceSet {
    BitSequenceSet {
        owner: Party::Bob,
        committed: None,
        m,
        n,
        bits: (0..m * n).map(|_| rng.random()).collect(),
    }
}

/// What Alice learns in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AliceView {
    pub bit: bool,
    /// D2 fired.
    pub alpha: bool,
    /// Alice held the switch open in both bins.
    pub intercepted: bool,
    /// Alice re-emitted a photon towards Bob.
    pub resent: bool,
}

impl AliceView {
    /// Alice is certain Bob confirmed this slot: she absorbed the photon and
    /// sent nothing back, so Bob saw no click.
    pub fn knows_confirmed(&self) -> bool {
        self.alpha && !self.resent
    }
}

/// What Bob learns in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BobView {
    pub bit: bool,
    pub beta0: bool,
    pub beta1: bool,
    /// Neither D0 nor D1 fired by the deadline; in the lossless setting the
    /// photon must have gone to D2.
    pub d2_inferred: bool,
}

impl BobView {
    fn from_clicks(bit: bool, clicks: &SlotClicks) -> Self {
        let beta0 = clicks.d0 > 0;
        let beta1 = clicks.d1 > 0;
        Self {
            bit,
            beta0,
            beta1,
            d2_inferred: !beta0 && !beta1,
        }
    }

    /// Bob is sure `a = b` for this slot.
    pub fn confirms(&self) -> bool {
        self.beta1 || self.d2_inferred
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotRecord {
    pub sequence: usize,
    pub slot: usize,
    pub clicks: SlotClicks,
    pub alice: AliceView,
    pub bob: BobView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Phase {
    Committed,
    Opened,
    Aborted,
}

/// Outcome of Alice's per-sequence D2 count check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct D2Check {
    pub window: CountWindow,
    pub counts: Vec<u64>,
    pub failing: Vec<usize>,
}

impl D2Check {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentTranscript {
    m: usize,
    n: usize,
    committed_bit: bool,
    records: Vec<SlotRecord>,
    d2_check: Option<D2Check>,
    phase: Phase,
}

impl CommitmentTranscript {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn committed_bit(&self) -> bool {
        self.committed_bit
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn record(&self, i: usize, j: usize) -> &SlotRecord {
        &self.records[i * self.n + j]
    }

    pub fn sequence(&self, i: usize) -> &[SlotRecord] {
        &self.records[i * self.n..(i + 1) * self.n]
    }

    /// Alice's check, if she ran it (a cheating Alice skips her own check).
    pub fn d2_check(&self) -> Option<&D2Check> {
        self.d2_check.as_ref()
    }

    /// Closes the commitment after an opening has been evaluated.
    pub fn into_opened(mut self) -> Self {
        if self.phase == Phase::Committed {
            self.phase = Phase::Opened;
        }
        self
    }

    pub fn summary(&self) -> TranscriptSummary {
        let mut s = TranscriptSummary {
            slots: self.records.len() as u64,
            ..TranscriptSummary::default()
        };
        for r in &self.records {
            s.d0 += u64::from(r.clicks.d0);
            s.d1 += u64::from(r.clicks.d1);
            s.d2 += u64::from(r.clicks.d2());
            s.none += u64::from(r.clicks.none);
            s.alpha_slots += u64::from(r.alice.alpha);
            s.confirmed_slots += u64::from(r.bob.confirms());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TranscriptSummary {
    pub slots: u64,
    pub d0: u64,
    pub d1: u64,
    pub d2: u64,
    pub none: u64,
    /// Slots where Alice's D2 fired.
    pub alpha_slots: u64,
    /// Slots where Bob is sure `a = b`.
    pub confirmed_slots: u64,
}

impl TranscriptSummary {
    pub fn clicks(&self) -> u64 {
        self.d0 + self.d1 + self.d2
    }

    pub fn alpha_rate(&self) -> f64 {
        self.alpha_slots as f64 / self.slots as f64
    }

    pub fn confirmation_rate(&self) -> f64 {
        self.confirmed_slots as f64 / self.slots as f64
    }
}

/// Full commit phase with freshly generated sequences.
pub fn run_commit_phase(
    params: &CommitmentParams,
    bit: bool,
    alice: &AliceStrategy,
    bob: &BobStrategy,
) -> Result<CommitmentTranscript> {
    params.validate()?;
    let seed = params.master_seed;
    let a = alice_generate(
        bit,
        params.m,
        params.n,
        &mut substream(seed, Stream::AliceBits),
    )?;
    let b = bob_generate(params.m, params.n, &mut substream(seed, Stream::BobBits));
    run_commit_with(params, &a, &b, alice, bob)
}

/// Commit phase over given sequences.
pub fn run_commit_with(
    params: &CommitmentParams,
    alice_bits: &BitSequenceSet,
    bob_bits: &BitSequenceSet,
    alice: &AliceStrategy,
    bob: &BobStrategy,
) -> Result<CommitmentTranscript> {
    params.validate()?;
    let (m, n) = (params.m, params.n);
    for set in [alice_bits, bob_bits] {
        if set.m() != m || set.n() != n {
            return Err(Error::DimensionMismatch {
                m,
                n,
                found_m: set.m(),
                found_n: set.n(),
            });
        }
    }
    let committed_bit = alice_bits
        .committed
        .ok_or(invalid("alice_bits", "missing committed bit"))?;
    alice.validate(n)?;
    bob.validate()?;
    let bob_bs = bob.beam_splitter(&params.bs)?;
    let photons = bob.photons_per_slot();
    let seed = params.master_seed;

    let mut records = Vec::with_capacity(m * n);
    for i in 0..m {
        let intercepted = alice.interception_mask(seed, i, n);
        for (j, &hit) in intercepted.iter().enumerate() {
            let a = alice_bits.get(i, j);
            let b = bob_bits.get(i, j);
            let schedule = if hit {
                SwitchSchedule::BOTH
            } else {
                SwitchSchedule::honest(a)
            };
            let pol = bob.polarization(b);
            let mut clicks = SlotClicks::default();
            let mut resends = 0;
            for k in 0..photons as usize {
                let stream = Stream::Photon {
                    sequence: i,
                    slot: j,
                    photon: k,
                };
                let outcome = run_photon(&pol, schedule, &bob_bs, &mut substream(seed, stream))?;
                clicks.record(outcome);
                if hit && alice.resends() {
                    // caught: the polarization of its bin; missed: her own bit
                    let echo = if outcome.detector == Detector::D2 {
                        Polarization::for_bit(outcome.bin == TimeBin::Loop)
                    } else {
                        Polarization::for_bit(a)
                    };
                    let stream = Stream::Resend {
                        sequence: i,
                        slot: j,
                        photon: k,
                    };
                    clicks.record(run_remote_photon(
                        &echo,
                        &bob_bs,
                        &mut substream(seed, stream),
                    )?);
                    resends += 1;
                }
            }
            records.push(SlotRecord {
                sequence: i,
                slot: j,
                clicks,
                alice: AliceView {
                    bit: a,
                    alpha: clicks.d2() > 0,
                    intercepted: hit,
                    resent: resends > 0,
                },
                bob: BobView::from_clicks(b, &clicks),
            });
        }
    }

    let mut transcript = CommitmentTranscript {
        m,
        n,
        committed_bit,
        records,
        d2_check: None,
        phase: Phase::Committed,
    };
    if alice.runs_d2_check() {
        let check = alice_check_d2(&transcript, params);
        if !check.passed() {
            transcript.phase = Phase::Aborted;
        }
        transcript.d2_check = Some(check);
    }
    Ok(transcript)
}

/// Per sequence, accept iff the number of D2 slots lies within
/// `n·t/2 ± σ·√(n·(t/2)(1−t/2))` for the agreed splitter (`n/4 ± 4σ` honestly).
pub fn alice_check_d2(transcript: &CommitmentTranscript, params: &CommitmentParams) -> D2Check {
    let window = params.d2_window();
    let counts: Vec<u64> = (0..transcript.m)
        .map(|i| {
            transcript
                .sequence(i)
                .iter()
                .filter(|r| r.alice.alpha)
                .count() as u64
        })
        .collect();
    let failing = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| !window.contains(c))
        .map(|(i, _)| i)
        .collect();
    D2Check {
        window,
        counts,
        failing,
    }
}

/// Alice's reveal: the bit, her sequences and her D2 record.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OpeningMessage {
    pub bit: bool,
    pub sequences: Vec<Vec<bool>>,
    pub d2_record: Vec<Vec<bool>>,
}

/// Opening an honest Alice sends for `claimed_bit` without touching her sequences.
pub fn opening_for(transcript: &CommitmentTranscript, claimed_bit: bool) -> OpeningMessage {
    let rows = |f: fn(&SlotRecord) -> bool| {
        (0..transcript.m)
            .map(|i| transcript.sequence(i).iter().map(f).collect())
            .collect()
    };
    OpeningMessage {
        bit: claimed_bit,
        sequences: rows(|r| r.alice.bit),
        d2_record: rows(|r| r.alice.knows_confirmed()),
    }
}

pub fn honest_opening(transcript: &CommitmentTranscript) -> OpeningMessage {
    opening_for(transcript, transcript.committed_bit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", rename_all = "snake_case"))]
pub enum RejectReason {
    /// The claimed sequence does not XOR to the claimed bit.
    Parity { sequence: usize },
    /// Bob knows `a = b` here but the claimed bit differs from his.
    ConfirmedSlot { sequence: usize, slot: usize },
    /// Claimed D2 record disagrees with Bob's no-click inference.
    D2Record { sequence: usize, slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Bob's check of an opening, using only his side of the transcript.
pub fn bob_verify_opening(
    transcript: &CommitmentTranscript,
    opening: &OpeningMessage,
) -> Result<Verdict> {
    if transcript.phase != Phase::Committed {
        return Err(Error::WrongPhase(transcript.phase));
    }
    let (m, n) = (transcript.m, transcript.n);
    for rows in [&opening.sequences, &opening.d2_record] {
        let found_n = rows.iter().map(Vec::len).find(|&len| len != n).unwrap_or(n);
        if rows.len() != m || found_n != n {
            return Err(Error::DimensionMismatch {
                m,
                n,
                found_m: rows.len(),
                found_n,
            });
        }
    }
    for (i, seq) in opening.sequences.iter().enumerate() {
        if xor_all(seq) != opening.bit {
            return Ok(Verdict::Reject(RejectReason::Parity { sequence: i }));
        }
    }
    for i in 0..m {
        for (j, record) in transcript.sequence(i).iter().enumerate() {
            let bob = &record.bob;
            if bob.confirms() && opening.sequences[i][j] != bob.bit {
                return Ok(Verdict::Reject(RejectReason::ConfirmedSlot {
                    sequence: i,
                    slot: j,
                }));
            }
            if opening.d2_record[i][j] != bob.d2_inferred {
                return Ok(Verdict::Reject(RejectReason::D2Record {
                    sequence: i,
                    slot: j,
                }));
            }
        }
    }
    Ok(Verdict::Accept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::Detector;
    use alloc::vec;

    fn honest(params: &CommitmentParams, bit: bool) -> CommitmentTranscript {
        run_commit_phase(params, bit, &AliceStrategy::Honest, &BobStrategy::Honest).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(CommitmentParams::new(1, 2).is_ok());
        assert!(CommitmentParams::new(0, 2).is_err());
        assert!(CommitmentParams::new(1, 1).is_err());
        let w = CommitmentParams::new(1, 130).unwrap().d2_window();
        assert_eq!(w.center, 32.5);
    }

    #[test]
    fn short_sequences_enumerate_parity_class() {
        let mut rng = substream(9, Stream::AliceBits);
        for b in [false, true] {
            let set = alice_generate(b, 400, 2, &mut rng).unwrap();
            let mut seen = [0usize; 4];
            for s in set.sequences() {
                assert_eq!(xor_all(s), b);
                seen[usize::from(s[0]) * 2 + usize::from(s[1])] += 1;
            }
            let allowed: &[usize] = if b { &[1, 2] } else { &[0, 3] };
            for (idx, &count) in seen.iter().enumerate() {
                if allowed.contains(&idx) {
                    assert!(count > 150, "{idx}: {count}");
                } else {
                    assert_eq!(count, 0);
                }
            }
        }
        assert!(alice_generate(false, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn bob_single_bit() {
        let set = bob_generate(1, 1, &mut substream(3, Stream::BobBits));
        assert_eq!((set.m(), set.n()), (1, 1));
        assert_eq!(set.owner, Party::Bob);
        assert_eq!(set.committed, None);
    }

    #[test]
    fn from_rows_checks_parity() {
        assert!(BitSequenceSet::alice_from_rows(true, &[vec![true, false]]).is_ok());
        assert!(BitSequenceSet::alice_from_rows(true, &[vec![true, true]]).is_err());
        assert!(BitSequenceSet::bob_from_rows(&[vec![true], vec![true, false]]).is_err());
    }

    #[test]
    fn honest_views_consistent() {
        let params = CommitmentParams::new(4, 64).unwrap().with_seed(11);
        let t = honest(&params, true);
        assert_eq!(t.records().len(), 4 * 64);
        for r in t.records() {
            assert_eq!(r.clicks.clicks(), 1);
            assert_eq!(r.bob.d2_inferred, r.alice.alpha);
            let ones = u8::from(r.bob.beta0) + u8::from(r.bob.beta1) + u8::from(r.alice.alpha);
            assert_eq!(ones, 1);
            if r.alice.bit != r.bob.bit {
                assert!(r.bob.beta0);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let params = CommitmentParams::new(2, 16).unwrap().with_seed(5);
        assert_eq!(honest(&params, false), honest(&params, false));
        let other = honest(&params.with_seed(6), false);
        assert_ne!(honest(&params, false), other);
    }

    #[test]
    fn forced_zero_sequences_never_confirm_mismatch() {
        let params = CommitmentParams::new(1, 50).unwrap();
        let zeros = vec![vec![false; 50]];
        let a = BitSequenceSet::alice_from_rows(false, &zeros).unwrap();
        let b = BitSequenceSet::bob_from_rows(&zeros).unwrap();
        let t = run_commit_with(
            &params,
            &a,
            &b,
            &AliceStrategy::Honest,
            &BobStrategy::Honest,
        )
        .unwrap();
        for r in t.records() {
            assert_eq!(r.alice.bit, r.bob.bit);
        }
        // every slot matches, so no D0-with-certainty slots
        let s = t.summary();
        assert!(s.d2 > 10 && s.d1 > 0);
    }

    #[test]
    fn dimension_mismatch_in_forced_run() {
        let params = CommitmentParams::new(2, 4).unwrap();
        let a = BitSequenceSet::alice_from_rows(false, &[vec![false; 4]]).unwrap();
        let b = BitSequenceSet::bob_from_rows(&[vec![false; 4], vec![true; 4]]).unwrap();
        assert!(matches!(
            run_commit_with(
                &params,
                &a,
                &b,
                &AliceStrategy::Honest,
                &BobStrategy::Honest
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn honest_opening_accepts() {
        for seed in 0..50 {
            let params = CommitmentParams::new(3, 24).unwrap().with_seed(seed);
            let t = honest(&params, seed % 2 == 0);
            if t.phase() == Phase::Aborted {
                continue;
            }
            assert_eq!(
                bob_verify_opening(&t, &honest_opening(&t)).unwrap(),
                Verdict::Accept
            );
        }
    }

    #[test]
    fn unmodified_sequences_with_other_bit_fail_parity() {
        let params = CommitmentParams::new(2, 16).unwrap();
        let t = honest(&params, false);
        let v = bob_verify_opening(&t, &opening_for(&t, true)).unwrap();
        assert_eq!(v, Verdict::Reject(RejectReason::Parity { sequence: 0 }));
    }

    fn find(t: &CommitmentTranscript, pred: impl Fn(&SlotRecord) -> bool) -> Vec<(usize, usize)> {
        t.records()
            .iter()
            .filter(|r| pred(r))
            .map(|r| (r.sequence, r.slot))
            .collect()
    }

    #[test]
    fn flipping_a_d1_slot_is_caught() {
        let params = CommitmentParams::new(1, 64).unwrap().with_seed(21);
        let t = honest(&params, false);
        let (i, j) = find(&t, |r| r.bob.beta1)[0];
        let mut opening = honest_opening(&t);
        opening.sequences[i][j] ^= true;
        opening.bit ^= true;
        assert_eq!(
            bob_verify_opening(&t, &opening).unwrap(),
            Verdict::Reject(RejectReason::ConfirmedSlot {
                sequence: i,
                slot: j
            })
        );
    }

    #[test]
    fn flipping_a_d0_slot_goes_unnoticed() {
        let params = CommitmentParams::new(1, 64).unwrap().with_seed(22);
        let t = honest(&params, true);
        let (i, j) = find(&t, |r| r.bob.beta0)[0];
        let mut opening = honest_opening(&t);
        opening.sequences[i][j] ^= true;
        opening.bit = false;
        assert_eq!(bob_verify_opening(&t, &opening).unwrap(), Verdict::Accept);
    }

    #[test]
    fn wrong_d2_record_rejected() {
        let params = CommitmentParams::new(1, 64).unwrap().with_seed(23);
        let t = honest(&params, true);
        let mut opening = honest_opening(&t);
        let (i, j) = find(&t, |r| r.clicks.count(Detector::D0) == 1)[0];
        opening.d2_record[i][j] = true;
        assert_eq!(
            bob_verify_opening(&t, &opening).unwrap(),
            Verdict::Reject(RejectReason::D2Record {
                sequence: i,
                slot: j
            })
        );
    }

    #[test]
    fn malformed_opening_is_an_error() {
        let params = CommitmentParams::new(2, 8).unwrap();
        let t = honest(&params, false);
        let mut opening = honest_opening(&t);
        opening.sequences[1].pop();
        assert!(matches!(
            bob_verify_opening(&t, &opening),
            Err(Error::DimensionMismatch { found_n: 7, .. })
        ));
        let mut opening = honest_opening(&t);
        opening.d2_record.pop();
        assert!(matches!(
            bob_verify_opening(&t, &opening),
            Err(Error::DimensionMismatch { found_m: 1, .. })
        ));
    }

    #[test]
    fn opened_transcript_refuses_second_opening() {
        let params = CommitmentParams::new(1, 8).unwrap();
        let t = honest(&params, false).into_opened();
        assert_eq!(
            bob_verify_opening(&t, &honest_opening(&t)),
            Err(Error::WrongPhase(Phase::Opened))
        );
    }

    #[test]
    fn aborted_run_is_tagged_and_kept() {
        // a fully transmitting illegal splitter pushes D2 to ~n/2
        let params = CommitmentParams::new(2, 200).unwrap().with_seed(4);
        let bob = BobStrategy::IllegalBeamSplitter {
            transmissivity: 0.99,
        };
        let t = run_commit_phase(&params, false, &AliceStrategy::Honest, &bob).unwrap();
        assert_eq!(t.phase(), Phase::Aborted);
        assert_eq!(t.records().len(), 400);
        assert!(!t.d2_check().unwrap().passed());
    }
}
