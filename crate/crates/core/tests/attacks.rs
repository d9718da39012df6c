use cqbc_core::adversary::{
    alice_intercept, alice_intercept_resend, bob_multiphoton, estimate_alter_success,
    estimate_detection, intercept_alter_probability, resend_alter_probability, AliceStrategy,
    BobStrategy,
};
use cqbc_core::optics::BeamSplitter;
use cqbc_core::protocol::CommitmentParams;

/// What Bob sees in one slot and what Alice learned there.
#[derive(Clone, Copy)]
struct Branch {
    prob: f64,
    bob_confirms: bool,
    alice_caught: bool,
}

fn branches(a: bool, b: bool, intercepted: bool, resend: bool, r: f64) -> Vec<Branch> {
    let t = 1.0 - r;
    let br = |prob, bob_confirms, alice_caught| Branch {
        prob,
        bob_confirms,
        alice_caught,
    };
    match (intercepted, resend) {
        (false, _) if a != b => vec![br(1.0, false, false)],
        (false, _) => vec![
            br(r * r, false, false),
            br(r * t, true, false),
            br(t, true, true),
        ],
        (true, false) => vec![
            br(t, true, true),
            br(r * r, false, false),
            br(r * t, true, false),
        ],
        (true, true) => {
            // the echo lands on D1 with probability r; any D1 counts as a confirmation
            let mut out = vec![br(t * t, false, true), br(t * r, true, true)];
            let d1_orig = t;
            let no_d1 = (1.0 - d1_orig) * (1.0 - r);
            out.push(br(r * no_d1, false, false));
            out.push(br(r * (1.0 - no_d1), true, false));
            out
        }
    }
}

/// Exact acceptance probability of the optimal forged opening for one
/// sequence, summing over every bit pattern, outcome and flip choice.
fn alter_oracle(n: usize, n0: usize, resend: bool, r: f64) -> f64 {
    let mut total = 0.0;
    let alice_strings: Vec<u32> = (0..1u32 << n).filter(|x| x.count_ones() % 2 == 0).collect();
    let weight = 1.0 / (alice_strings.len() as f64 * (1u32 << n) as f64);
    for &a in &alice_strings {
        for b in 0..1u32 << n {
            let bit = |x: u32, j: usize| (x >> j) & 1 == 1;
            let per_slot: Vec<Vec<Branch>> = (0..n)
                .map(|j| branches(bit(a, j), bit(b, j), j < n0, resend, r))
                .collect();
            let mut idx = vec![0usize; n];
            'outcomes: loop {
                let mut prob = weight;
                let mut claim = vec![false; n];
                let mut unknown = Vec::new();
                for j in 0..n {
                    let br = per_slot[j][idx[j]];
                    prob *= br.prob;
                    claim[j] = if br.alice_caught && j < n0 {
                        bit(b, j)
                    } else {
                        bit(a, j)
                    };
                    if !br.alice_caught {
                        unknown.push(j);
                    }
                }
                let ok = |c: &[bool]| {
                    (0..n).all(|j| !per_slot[j][idx[j]].bob_confirms || c[j] == bit(b, j))
                };
                let parity = claim.iter().filter(|&&x| x).count() % 2 == 1;
                if parity {
                    total += prob * f64::from(u8::from(ok(&claim)));
                } else if !unknown.is_empty() {
                    let good = unknown
                        .iter()
                        .filter(|&&j| {
                            let mut c = claim.clone();
                            c[j] ^= true;
                            ok(&c)
                        })
                        .count();
                    total += prob * good as f64 / unknown.len() as f64;
                }
                for k in 0..n {
                    idx[k] += 1;
                    if idx[k] < per_slot[k].len() {
                        continue 'outcomes;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
    }
    total
}

fn assert_matches(estimate: f64, exact: f64, trials: u64) {
    let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!(
        (estimate - exact).abs() <= 4.0 * sd + 1e-12,
        "simulated {estimate} exact {exact}"
    );
}

#[test]
fn forged_opening_success_matches_exact_enumeration() {
    let trials = 100_000;
    let params = CommitmentParams::new(1, 4).unwrap().with_seed(31);
    for (n0, resend) in [
        (0, false),
        (1, false),
        (2, false),
        (1, true),
        (2, true),
        (4, true),
    ] {
        let alice = match (n0, resend) {
            (0, _) => AliceStrategy::Honest,
            (k, false) => AliceStrategy::Intercept { slots: k },
            (k, true) => AliceStrategy::InterceptResend { slots: k },
        };
        let est = estimate_alter_success(alice, &params, trials).unwrap();
        let exact = alter_oracle(4, n0, resend, 0.5);
        let used = trials - est.aborted;
        assert_matches(est.rate(), exact, used);
    }
}

#[test]
fn interception_never_helps_in_simulation() {
    let n = 130;
    let base = CommitmentParams::new(1, n).unwrap().with_seed(32);
    let honest = estimate_alter_success(AliceStrategy::Honest, &base, 3_000)
        .unwrap()
        .rate();
    let mut prev = honest;
    for n0 in [2, 8, 32] {
        let rate = estimate_alter_success(AliceStrategy::Intercept { slots: n0 }, &base, 3_000)
            .unwrap()
            .rate();
        assert!(rate < prev, "n0={n0}: {rate} !< {prev}");
        assert!(rate < intercept_alter_probability(n, n0, &BeamSplitter::BALANCED));
        prev = rate;
    }
    let resend = estimate_alter_success(AliceStrategy::InterceptResend { slots: 8 }, &base, 3_000)
        .unwrap()
        .rate();
    assert!(resend < honest);
    assert!(resend < resend_alter_probability(n, 8, &BeamSplitter::BALANCED));
}

#[test]
fn attack_totals_follow_the_optics_model() {
    let params = CommitmentParams::new(1, 10_000).unwrap().with_seed(33);
    for report in [
        alice_intercept(2000, &params).unwrap(),
        alice_intercept_resend(2000, &params).unwrap(),
    ] {
        let (m, e) = (report.model, report.empirical);
        for (model, got) in [(m.d0, e.d0), (m.d1, e.d1), (m.d2, e.d2)] {
            // loose bound: totals are sums of per-slot multinomials with rate at most 1
            assert!(
                (got as f64 - model).abs() < 4.0 * (model.max(1.0)).sqrt(),
                "{got} vs {model}"
            );
        }
    }
    let resend = alice_intercept_resend(2000, &params).unwrap();
    assert_eq!(resend.empirical.total(), 12_000);
    assert!((resend.expected.total() - 12_000.0).abs() < 1e-9);
}

#[test]
fn cheating_bob_is_caught_by_the_count_check() {
    let params = CommitmentParams::new(70, 130).unwrap().with_seed(34);
    let skewed = estimate_detection(
        BobStrategy::IllegalBeamSplitter {
            transmissivity: 0.8,
        },
        &params,
        100,
    )
    .unwrap();
    assert!(skewed.run_rate() > 0.95);
    let two = estimate_detection(BobStrategy::Multiphoton { photons: 2 }, &params, 100).unwrap();
    assert!(two.run_rate() > 0.8);
    let report = bob_multiphoton(2, &params).unwrap();
    assert!((report.d2_slot_rate.expected.unwrap() - 0.375).abs() < 1e-12);
    assert!(report.p_detect > 0.8);
}
