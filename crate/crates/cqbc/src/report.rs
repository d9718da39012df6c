//! Report types and their JSON/CSV renderings.

use cqbc_core::adversary::AttackReport;
use cqbc_core::protocol::{
    CommitmentParams, CommitmentTranscript, D2Check, TranscriptSummary, Verdict,
};
use cqbc_core::security::{ComparisonProbs, ConcealingAdvantage, SolverStep};
use serde::Serialize;

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Table1Cell {
    /// `"a=b"` or `"a!=b"`.
    pub case: &'static str,
    pub detector: &'static str,
    pub analytic: f64,
    pub empirical: f64,
    pub count: u64,
    pub deviation: f64,
    /// Four binomial standard deviations of the empirical rate.
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub r: f64,
    pub t: f64,
    pub trials: u64,
    pub seed: u64,
    pub sigmas: f64,
    pub warnings: Vec<String>,
    pub cells: Vec<Table1Cell>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommitReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub params: CommitmentParams,
    pub bit: u8,
    pub claim: u8,
    pub summary: TranscriptSummary,
    pub d2_rate: f64,
    pub confirmation_rate: f64,
    pub check: Option<D2Check>,
    pub aborted: bool,
    /// Absent when Alice aborted before opening.
    pub verdict: Option<Verdict>,
    pub accepted: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonteCarlo {
    /// Forge-and-verify runs.
    Alter {
        /// `per_sequence` runs single-sequence trials and raises the rate to
        /// the `m`-th power; `brute` runs the full `m`-sequence protocol.
        mode: &'static str,
        trials: u64,
        aborted: u64,
        accepted: u64,
        rate: f64,
        expected: f64,
        run_rate: f64,
        run_expected: f64,
    },
    /// Honest-Alice D2 checks against a cheating Bob.
    Detection {
        runs: u64,
        aborted_runs: u64,
        sequences: u64,
        failing_sequences: u64,
        run_rate: f64,
        sequence_rate: f64,
        expected_run: f64,
        expected_sequence: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub quantity: &'static str,
    pub expected: Option<f64>,
    pub model: Option<f64>,
    pub empirical: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackCommandReport {
    pub schema_version: u32,
    pub command: &'static str,
    #[serde(flatten)]
    pub report: AttackReport,
    pub monte_carlo: MonteCarlo,
    pub comparison: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectCheck {
    pub binding: f64,
    pub concealing: f64,
    pub binding_at_m_minus_1: Option<f64>,
    pub concealing_at_n_minus_1: Option<f64>,
    pub minimal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub r: f64,
    pub t: f64,
    pub target_binding: f64,
    pub target_concealing: f64,
    pub m: usize,
    pub n: usize,
    pub probs: ComparisonProbs<f64>,
    pub binding: f64,
    pub concealing: ConcealingAdvantage,
    pub direct_check: DirectCheck,
    pub notes: Vec<String>,
    pub trace: Vec<SolverStep>,
}

pub fn to_json<T: Serialize>(report: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
    out.push(b'\n');
    out
}

fn csv_rows<I, R>(rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: Serialize,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Serialize)]
struct TranscriptRow {
    i: usize,
    j: usize,
    a: u8,
    b: u8,
    detector: &'static str,
    time_bin: u8,
}

/// One row per detector event; a slot with several clicks has several rows.
pub fn transcript_csv(transcript: &CommitmentTranscript) -> Vec<u8> {
    let rows = transcript.records().iter().flat_map(|rec| {
        rec.clicks.events().map(move |e| TranscriptRow {
            i: rec.sequence,
            j: rec.slot,
            a: u8::from(rec.alice.bit),
            b: u8::from(rec.bob.bit),
            detector: e.detector.label(),
            time_bin: e.bin.index(),
        })
    });
    let mut out = csv_rows(rows);
    if transcript.records().is_empty() {
        out = b"i,j,a,b,detector,time_bin\n".to_vec();
    }
    out
}

#[derive(Serialize)]
struct TraceRow {
    bound: &'static str,
    m: usize,
    n: usize,
    value: f64,
    target: f64,
    satisfied: bool,
}

pub fn trace_csv(trace: &[SolverStep]) -> Vec<u8> {
    csv_rows(trace.iter().map(|s| TraceRow {
        bound: s.bound.label(),
        m: s.m,
        n: s.n,
        value: s.value,
        target: s.target,
        satisfied: s.satisfied,
    }))
}

pub fn table1_csv(cells: &[Table1Cell]) -> Vec<u8> {
    csv_rows(cells)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Vec<u8> {
    csv_rows(rows)
}
