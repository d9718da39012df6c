use cqbc_core::adversary::{
    estimate_alter_success, estimate_detection, run_attack, AliceStrategy, AttackReport,
    AttackStrategy, BobStrategy,
};
use cqbc_core::optics::{outcome_distribution, run_slot, BeamSplitter, Detector};
use cqbc_core::protocol::{
    bob_verify_opening, opening_for, run_commit_phase, CommitmentParams, Party, Phase,
};
use cqbc_core::rng::{substream, Stream};
use cqbc_core::security::{
    binding_advantage, choose_parameters, comparison_probs, concealing_advantage,
};

use crate::config::{
    Format, Settings, DEFAULT_ATTACK_TRIALS, DEFAULT_TABLE1_TRIALS, DEFAULT_TARGET_BINDING,
    DEFAULT_TARGET_CONCEALING, MIN_TABLE1_TRIALS,
};
use crate::error::CliError;
use crate::report::*;

const TABLE1_SIGMAS: f64 = 4.0;

/// Bytes for `--out` (or stdout) and for `--transcript`, plus warnings.
#[derive(Debug, Default)]
pub struct Rendered {
    pub primary: Vec<u8>,
    pub transcript: Option<Vec<u8>>,
    pub warnings: Vec<String>,
}

fn degenerate_warning(bs: &BeamSplitter) -> Option<String> {
    bs.is_degenerate().then(|| {
        format!(
            "degenerate beam splitter (r = {}): one arm carries no amplitude",
            bs.reflectivity()
        )
    })
}

pub fn table1(settings: &Settings) -> Result<Table1Report, CliError> {
    let trials = settings.trials.unwrap_or(DEFAULT_TABLE1_TRIALS);
    if trials < MIN_TABLE1_TRIALS {
        return Err(CliError::Usage(format!(
            "--trials must be at least {MIN_TABLE1_TRIALS} for table1"
        )));
    }
    let bs = settings.beam_splitter()?;
    let seed = settings.seed();
    let mut cells = Vec::new();
    for (tag, equal) in [(0u64, true), (1, false)] {
        let mut rng = substream(seed, Stream::Custom { tag, index: 0 });
        let mut counts = [0u64; 3];
        for i in 0..trials {
            let a = i % 2 == 1;
            let b = if equal { a } else { !a };
            match run_slot(a, b, &bs, &mut rng).detector {
                Detector::D0 => counts[0] += 1,
                Detector::D1 => counts[1] += 1,
                Detector::D2 | Detector::None => counts[2] += 1,
            }
        }
        let analytic = outcome_distribution(false, !equal, &bs).as_array();
        for (k, detector) in [Detector::D0, Detector::D1, Detector::D2]
            .into_iter()
            .enumerate()
        {
            let p = analytic[k];
            let empirical = counts[k] as f64 / trials as f64;
            let tolerance = TABLE1_SIGMAS * (p * (1.0 - p) / trials as f64).sqrt();
            let deviation = empirical - p;
            cells.push(Table1Cell {
                case: if equal { "a=b" } else { "a!=b" },
                detector: detector.label(),
                analytic: p,
                empirical,
                count: counts[k],
                deviation,
                tolerance,
                pass: deviation.abs() <= tolerance,
            });
        }
    }
    Ok(Table1Report {
        schema_version: SCHEMA_VERSION,
        command: "table1",
        r: bs.reflectivity(),
        t: bs.transmissivity(),
        trials,
        seed,
        sigmas: TABLE1_SIGMAS,
        warnings: degenerate_warning(&bs).into_iter().collect(),
        all_pass: cells.iter().all(|c| c.pass),
        cells,
    })
}

pub fn commit(settings: &Settings) -> Result<(CommitReport, Vec<u8>), CliError> {
    let params = settings.commitment()?;
    let bit = settings.bit.unwrap_or(0);
    let claim = settings.claim.unwrap_or(bit);
    let transcript = run_commit_phase(
        &params,
        bit == 1,
        &AliceStrategy::Honest,
        &BobStrategy::Honest,
    )?;
    let csv = transcript_csv(&transcript);
    let summary = transcript.summary();
    let aborted = transcript.phase() == Phase::Aborted;
    let verdict = if aborted {
        None
    } else {
        Some(bob_verify_opening(
            &transcript,
            &opening_for(&transcript, claim == 1),
        )?)
    };
    let report = CommitReport {
        schema_version: SCHEMA_VERSION,
        command: "commit",
        params,
        bit,
        claim,
        summary,
        d2_rate: summary.alpha_rate(),
        confirmation_rate: summary.confirmation_rate(),
        check: transcript.d2_check().cloned(),
        aborted,
        accepted: verdict.is_some_and(|v| v.is_accept()),
        verdict,
        warnings: degenerate_warning(&params.bs).into_iter().collect(),
    };
    Ok((report, csv))
}

fn monte_carlo(
    strategy: AttackStrategy,
    params: &CommitmentParams,
    trials: u64,
    brute: bool,
    p_alter: Option<f64>,
    p_detect_sequence: f64,
) -> Result<MonteCarlo, CliError> {
    let (alice, bob) = strategy.behaviours();
    let m = params.m as i32;
    Ok(match strategy.party() {
        Party::Alice => {
            let expected = p_alter.unwrap_or(f64::NAN);
            let (mode, est) = if brute {
                ("brute", estimate_alter_success(alice, params, trials)?)
            } else {
                let single = CommitmentParams { m: 1, ..*params };
                (
                    "per_sequence",
                    estimate_alter_success(alice, &single, trials)?,
                )
            };
            let rate = est.rate();
            MonteCarlo::Alter {
                mode,
                trials,
                aborted: est.aborted,
                accepted: est.accepted,
                rate,
                expected: if brute { expected.powi(m) } else { expected },
                run_rate: if brute { rate } else { rate.powi(m) },
                run_expected: expected.powi(m),
            }
        }
        Party::Bob => {
            let est = estimate_detection(bob, params, trials)?;
            MonteCarlo::Detection {
                runs: est.runs,
                aborted_runs: est.aborted_runs,
                sequences: est.sequences,
                failing_sequences: est.failing_sequences,
                run_rate: est.run_rate(),
                sequence_rate: est.sequence_rate(),
                expected_run: 1.0 - (1.0 - p_detect_sequence).powi(m),
                expected_sequence: p_detect_sequence,
            }
        }
    })
}

fn comparison(report: &AttackReport, mc: &MonteCarlo) -> Vec<ComparisonRow> {
    let row = |quantity, expected, model, empirical| ComparisonRow {
        quantity,
        expected,
        model,
        empirical,
    };
    let e = &report.expected;
    let md = &report.model;
    let emp = &report.empirical;
    let mut rows = vec![
        row("clicks_d0", Some(e.d0), Some(md.d0), Some(emp.d0 as f64)),
        row("clicks_d1", Some(e.d1), Some(md.d1), Some(emp.d1 as f64)),
        row("clicks_d2", Some(e.d2), Some(md.d2), Some(emp.d2 as f64)),
        row(
            "d2_slot_rate",
            report.d2_slot_rate.expected,
            None,
            Some(report.d2_slot_rate.empirical),
        ),
        row(
            "confirmation_rate",
            report.confirmation_rate.expected,
            None,
            Some(report.confirmation_rate.empirical),
        ),
    ];
    match *mc {
        MonteCarlo::Alter {
            rate,
            expected,
            run_rate,
            run_expected,
            ..
        } => {
            rows.push(row("p_alter", Some(expected), None, Some(rate)));
            rows.push(row("p_alter_run", Some(run_expected), None, Some(run_rate)));
        }
        MonteCarlo::Detection {
            run_rate,
            sequence_rate,
            expected_run,
            expected_sequence,
            ..
        } => {
            rows.push(row(
                "p_detect_sequence",
                Some(expected_sequence),
                None,
                Some(sequence_rate),
            ));
            rows.push(row("p_detect", Some(expected_run), None, Some(run_rate)));
        }
    }
    rows
}

pub fn attack(settings: &Settings) -> Result<AttackCommandReport, CliError> {
    let params = settings.commitment()?;
    let strategy = settings.attack(params.n)?;
    let trials = settings.trials.unwrap_or(DEFAULT_ATTACK_TRIALS);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let report = run_attack(strategy, &params)?;
    let mc = monte_carlo(
        strategy,
        &params,
        trials,
        settings.brute.unwrap_or(false),
        report.p_alter,
        report.p_detect_sequence,
    )?;
    Ok(AttackCommandReport {
        schema_version: SCHEMA_VERSION,
        command: "attack",
        comparison: comparison(&report, &mc),
        report,
        monte_carlo: mc,
    })
}

pub fn params(settings: &Settings) -> Result<ParamsReport, CliError> {
    let bs = settings.beam_splitter()?;
    let tb = settings.target_binding.unwrap_or(DEFAULT_TARGET_BINDING);
    let tc = settings
        .target_concealing
        .unwrap_or(DEFAULT_TARGET_CONCEALING);
    let choice = choose_parameters(tb, tc, &bs)?;
    let probs = comparison_probs(&bs)?;
    let (m, n) = (choice.m, choice.n);
    let binding = binding_advantage(m, probs.p, probs.q)?;
    let concealing = concealing_advantage(m, n, probs.p_prime)?.advantage;
    let binding_below = (m > 1)
        .then(|| binding_advantage(m - 1, probs.p, probs.q))
        .transpose()?;
    let concealing_below = (n > 2)
        .then(|| concealing_advantage(m, n - 1, probs.p_prime).map(|c| c.advantage))
        .transpose()?;
    let minimal = binding <= tb
        && concealing <= tc
        && binding_below.is_none_or(|b| b > tb)
        && concealing_below.is_none_or(|c| c > tc);
    let c = choice.concealing;
    let notes = vec![format!(
        "concealing advantage is eps/2 = {:e}; to first order m*p'^n/2 = {:e}. \
         The simplified form m*p'^n = {:e} drops the factor 1/2 and overstates it twofold.",
        c.advantage, c.first_order, c.unhalved_first_order
    )];
    Ok(ParamsReport {
        schema_version: SCHEMA_VERSION,
        command: "params",
        r: bs.reflectivity(),
        t: bs.transmissivity(),
        target_binding: tb,
        target_concealing: tc,
        m,
        n,
        probs,
        binding: choice.binding,
        concealing: choice.concealing,
        direct_check: DirectCheck {
            binding,
            concealing,
            binding_at_m_minus_1: binding_below,
            concealing_at_n_minus_1: concealing_below,
            minimal,
        },
        notes,
        trace: choice.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Table1,
    Commit,
    Attack,
    Params,
}

/// Runs `command` and renders its output in the requested format.
pub fn execute(command: Command, settings: &Settings) -> Result<Rendered, CliError> {
    let format = settings.format();
    let mut out = Rendered::default();
    match command {
        Command::Table1 => {
            let r = table1(settings)?;
            out.warnings.clone_from(&r.warnings);
            out.primary = match format {
                Format::Json => to_json(&r),
                Format::Csv => table1_csv(&r.cells),
            };
        }
        Command::Commit => {
            let (r, csv) = commit(settings)?;
            out.warnings.clone_from(&r.warnings);
            match format {
                Format::Json => {
                    out.primary = to_json(&r);
                    out.transcript = Some(csv);
                }
                Format::Csv => out.primary = csv,
            }
        }
        Command::Attack => {
            let r = attack(settings)?;
            out.primary = match format {
                Format::Json => to_json(&r),
                Format::Csv => comparison_csv(&r.comparison),
            };
        }
        Command::Params => {
            let r = params(settings)?;
            out.warnings.clone_from(&r.notes);
            out.primary = match format {
                Format::Json => to_json(&r),
                Format::Csv => trace_csv(&r.trace),
            };
        }
    }
    Ok(out)
}
