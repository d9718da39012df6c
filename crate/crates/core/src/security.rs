//! Closed-form security numbers, the parameter solver and a brute-force
//! concealing oracle.

use alloc::vec::Vec;
use num_traits::Num;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::optics::{outcome_distribution, run_slot, BeamSplitter, Detector};
use crate::protocol::alice_generate;
use crate::rng::{substream, Stream};

/// Per-slot probabilities of the comparison step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonProbs<T> {
    /// Bob learns `a = b` for certain.
    pub p: T,
    /// Bob guesses `a` correctly, guessing `a ≠ b` on every D0 click.
    pub p_prime: T,
    /// Alice knows Bob confirmed.
    pub q: T,
    /// `P(a ≠ b | D0)`.
    pub posterior: T,
}

/// Exact version for any number field, with `t = 1 − r`.
pub fn comparison_probs_exact<T: Copy + Num>(r: T) -> ComparisonProbs<T> {
    let one = T::one();
    let two = one + one;
    let t = one - r;
    let p = (r * t + t) / two;
    ComparisonProbs {
        p,
        p_prime: p + one / two,
        q: t / two,
        posterior: one / (one + r * r),
    }
}

pub fn comparison_probs(bs: &BeamSplitter) -> Result<ComparisonProbs<f64>> {
    if bs.is_degenerate() {
        return Err(Error::DegenerateBeamSplitter(bs.reflectivity()));
    }
    let r = bs.reflectivity();
    let t = bs.transmissivity();
    let p = (r * t + t) / 2.0;
    Ok(ComparisonProbs {
        p,
        p_prime: p + 0.5,
        q: t / 2.0,
        posterior: 1.0 / (1.0 + r * r),
    })
}

fn check_order(p: f64, q: f64) -> Result<()> {
    if (0.0..p).contains(&q) && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOrder { p, q })
    }
}

fn ln_binding(m: usize, p: f64, q: f64) -> f64 {
    m as f64 * (libm::log1p(-p) - libm::log1p(-q))
}

/// Alice's chance to open the other bit unnoticed: `((1−p)/(1−q))^m`.
pub fn binding_advantage(m: usize, p: f64, q: f64) -> Result<f64> {
    check_order(p, q)?;
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    Ok(libm::exp(ln_binding(m, p, q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcealingAdvantage {
    /// `1 − (1 − p′ⁿ)ᵐ`, Bob's chance of learning `b`.
    pub epsilon: f64,
    /// `ε/2`.
    pub advantage: f64,
    /// `m·p′ⁿ/2`.
    pub first_order: f64,
    /// `m·p′ⁿ`, the simplified form without the halving; twice the first-order advantage.
    pub unhalved_first_order: f64,
}

fn ln_pow(base: f64, n: usize) -> f64 {
    n as f64 * libm::log(base)
}

pub fn concealing_advantage(m: usize, n: usize, p_prime: f64) -> Result<ConcealingAdvantage> {
    if !(p_prime > 0.0 && p_prime < 1.0) {
        return Err(invalid("p_prime", "must lie in (0, 1)"));
    }
    if m == 0 || n == 0 {
        return Err(invalid("m, n", "must be at least 1"));
    }
    let pn = libm::exp(ln_pow(p_prime, n));
    let epsilon = -libm::expm1(m as f64 * libm::log1p(-pn));
    let unhalved = m as f64 * pn;
    Ok(ConcealingAdvantage {
        epsilon,
        advantage: epsilon / 2.0,
        first_order: unhalved / 2.0,
        unhalved_first_order: unhalved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecurityReport {
    pub r: f64,
    pub t: f64,
    pub m: usize,
    pub n: usize,
    pub probs: ComparisonProbs<f64>,
    pub binding: f64,
    pub concealing: ConcealingAdvantage,
}

pub fn security_report(m: usize, n: usize, bs: &BeamSplitter) -> Result<SecurityReport> {
    let probs = comparison_probs(bs)?;
    Ok(SecurityReport {
        r: bs.reflectivity(),
        t: bs.transmissivity(),
        m,
        n,
        probs,
        binding: binding_advantage(m, probs.p, probs.q)?,
        concealing: concealing_advantage(m, n, probs.p_prime)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bound {
    Binding,
    Concealing,
}

impl Bound {
    pub fn label(&self) -> &'static str {
        match self {
            Bound::Binding => "binding",
            Bound::Concealing => "concealing",
        }
    }
}

/// One evaluation made by the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverStep {
    pub bound: Bound,
    pub m: usize,
    pub n: usize,
    pub value: f64,
    pub target: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterChoice {
    pub m: usize,
    pub n: usize,
    pub binding: f64,
    pub concealing: ConcealingAdvantage,
    pub trace: Vec<SolverStep>,
}

/// Largest `m` or `n` the solver will try: 2^32, or `usize::MAX` on 32-bit targets.
pub const SOLVER_CAP: usize = if usize::BITS > 32 {
    1 << (usize::BITS / 2)
} else {
    usize::MAX
};

fn check_target(name: &'static str, bound: &'static str, target: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&target) {
        return Err(invalid(name, "must lie in (0, 1]"));
    }
    if target == 0.0 {
        return Err(Error::Infeasible { bound, target });
    }
    Ok(())
}

/// Smallest `x ≥ start` with `ok(x)`, by doubling then bisection.
fn smallest<F>(start: usize, bound: &'static str, target: f64, mut ok: F) -> Result<usize>
where
    F: FnMut(usize) -> bool,
{
    let mut bad = None;
    let mut probe = start;
    loop {
        if ok(probe) {
            break;
        }
        if probe >= SOLVER_CAP {
            return Err(Error::Infeasible { bound, target });
        }
        bad = Some(probe);
        probe = probe.saturating_mul(2).min(SOLVER_CAP);
    }
    let Some(mut lo) = bad else {
        return Ok(probe);
    };
    let mut hi = probe;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `m` meeting the binding target, then smallest `n ≥ 2` meeting
/// the concealing target at that `m`.
pub fn choose_parameters(
    target_binding: f64,
    target_concealing: f64,
    bs: &BeamSplitter,
) -> Result<ParameterChoice> {
    check_target("target_binding", "binding", target_binding)?;
    check_target("target_concealing", "concealing", target_concealing)?;
    let probs = comparison_probs(bs)?;
    check_order(probs.p, probs.q)?;
    let mut trace = Vec::new();

    let ln_target = libm::log(target_binding);
    let m = smallest(1, "binding", target_binding, |m| {
        let ln = ln_binding(m, probs.p, probs.q);
        let satisfied = ln <= ln_target;
        trace.push(SolverStep {
            bound: Bound::Binding,
            m,
            n: 0,
            value: libm::exp(ln),
            target: target_binding,
            satisfied,
        });
        satisfied
    })?;

    let mut failure = None;
    let n = smallest(
        2,
        "concealing",
        target_concealing,
        |n| match concealing_advantage(m, n, probs.p_prime) {
            Ok(c) => {
                let satisfied = c.advantage <= target_concealing;
                trace.push(SolverStep {
                    bound: Bound::Concealing,
                    m,
                    n,
                    value: c.advantage,
                    target: target_concealing,
                    satisfied,
                });
                satisfied
            }
            Err(e) => {
                failure = Some(e);
                true
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }

    Ok(ParameterChoice {
        m,
        n,
        binding: binding_advantage(m, probs.p, probs.q)?,
        concealing: concealing_advantage(m, n, probs.p_prime)?,
        trace,
    })
}

/// Per-slot outcome laws `[D0, D1, D2]` when `a ≠ b` and when `a = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotChannel {
    pub differ: [f64; 3],
    pub equal: [f64; 3],
}

impl SlotChannel {
    pub fn from_beam_splitter(bs: &BeamSplitter) -> Self {
        Self {
            differ: outcome_distribution(false, true, bs).as_array(),
            equal: outcome_distribution(false, false, bs).as_array(),
        }
    }

    /// Bob always knows whether `a = b`.
    pub const TRANSPARENT: Self = Self {
        differ: [1.0, 0.0, 0.0],
        equal: [0.0, 1.0, 0.0],
    };

    /// Moves both laws a fraction `lambda` of the way towards their midpoint.
    pub fn blend(&self, lambda: f64) -> Self {
        let mut out = *self;
        for k in 0..3 {
            let mid = (self.differ[k] + self.equal[k]) / 2.0;
            out.differ[k] += lambda * (mid - self.differ[k]);
            out.equal[k] += lambda * (mid - self.equal[k]);
        }
        out
    }

    fn law(&self, a: bool, b: bool) -> &[f64; 3] {
        if a == b {
            &self.equal
        } else {
            &self.differ
        }
    }
}

pub const ORACLE_MAX_N: usize = 4;

fn bits_of(x: usize, n: usize) -> impl Iterator<Item = bool> {
    (0..n).map(move |j| (x >> j) & 1 == 1)
}

/// Total-variation distance between Bob's view of one sequence (his bits and
/// the per-slot outcome) under `b = 0` and under `b = 1`, by enumeration.
pub fn concealing_oracle_bruteforce(n: usize, bs: &BeamSplitter) -> Result<f64> {
    concealing_oracle_with_channel(n, &SlotChannel::from_beam_splitter(bs))
}

pub fn concealing_oracle_with_channel(n: usize, channel: &SlotChannel) -> Result<f64> {
    if !(2..=ORACLE_MAX_N).contains(&n) {
        return Err(Error::OracleRange(n));
    }
    let strings = 1usize << n;
    let outcomes = 3usize.pow(n as u32);
    let p_alice = 1.0 / (strings / 2) as f64;
    let p_bob = 1.0 / strings as f64;
    let mut tv = 0.0;
    for bob in 0..strings {
        for o in 0..outcomes {
            let mut law = [0.0f64; 2];
            for alice in 0..strings {
                let parity = alice.count_ones() % 2 == 1;
                let mut pr = p_alice * p_bob;
                let mut code = o;
                for (a, b) in bits_of(alice, n).zip(bits_of(bob, n)) {
                    pr *= channel.law(a, b)[code % 3];
                    code /= 3;
                }
                law[usize::from(parity)] += pr;
            }
            tv += (law[0] - law[1]).abs();
        }
    }
    Ok(tv / 2.0)
}

fn outcome_code(detector: Detector) -> usize {
    match detector {
        Detector::D0 => 0,
        Detector::D1 => 1,
        Detector::D2 | Detector::None => 2,
    }
}

/// Monte Carlo estimate of the oracle's distance from `samples` simulated
/// sequences per committed bit. Views are reduced to the outcome string and
/// the parity of Bob's bits, a sufficient statistic for `b`.
pub fn concealing_tv_monte_carlo(
    n: usize,
    bs: &BeamSplitter,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if !(2..=ORACLE_MAX_N).contains(&n) {
        return Err(Error::OracleRange(n));
    }
    let cells = 2 * 3usize.pow(n as u32);
    let mut counts = [alloc::vec![0u64; cells], alloc::vec![0u64; cells]];
    for (class, hist) in counts.iter_mut().enumerate() {
        let committed = class == 1;
        for index in 0..samples {
            let tag = if committed { 1 } else { 0 };
            let mut rng = substream(seed, Stream::Custom { tag, index });
            let alice = alice_generate(committed, 1, n, &mut rng)?;
            let mut code = 0;
            let mut bob_parity = false;
            for j in (0..n).rev() {
                let b: bool = rng.random();
                bob_parity ^= b;
                let outcome = run_slot(alice.get(0, j), b, bs, &mut rng);
                code = code * 3 + outcome_code(outcome.detector);
            }
            hist[code * 2 + usize::from(bob_parity)] += 1;
        }
    }
    let total = samples as f64;
    let diff: f64 = counts[0]
        .iter()
        .zip(&counts[1])
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(diff / total / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn balanced_probabilities_are_exact() {
        let c = comparison_probs_exact(Ratio::new(1i64, 2));
        assert_eq!(c.p, Ratio::new(3, 8));
        assert_eq!(c.p_prime, Ratio::new(7, 8));
        assert_eq!(c.q, Ratio::new(1, 4));
        assert_eq!(c.posterior, Ratio::new(4, 5));
    }

    #[test]
    fn skewed_probabilities() {
        let c = comparison_probs(&BeamSplitter::new(0.3).unwrap()).unwrap();
        assert!((c.p - 0.455).abs() < 1e-12);
        assert!((c.q - 0.35).abs() < 1e-12);
        let exact = comparison_probs_exact(Ratio::new(3i64, 10));
        assert_eq!(exact.p, Ratio::new(91, 200));
        assert!(comparison_probs(&BeamSplitter::new(0.0).unwrap()).is_err());
        assert!(comparison_probs(&BeamSplitter::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn binding_values() {
        let b = binding_advantage(70, 0.375, 0.25).unwrap();
        assert!((b - libm::pow(5.0 / 6.0, 70.0)).abs() < 1e-18);
        assert!((2.7e-6..=2.9e-6).contains(&b));
        assert!((binding_advantage(1, 0.375, 0.25).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!(binding_advantage(3, 0.25, 0.25).is_err());
        assert!(binding_advantage(0, 0.375, 0.25).is_err());
        let near = binding_advantage(50, 0.3, 0.3 - 1e-12).unwrap();
        assert!((near - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concealing_values() {
        let c = concealing_advantage(70, 130, 0.875).unwrap();
        assert!((0.9e-6..=1.1e-6).contains(&c.advantage));
        assert!((c.advantage - c.first_order).abs() / c.advantage < 1e-6);
        assert_eq!(c.unhalved_first_order, 2.0 * c.first_order);
        assert_eq!(c.advantage, c.epsilon / 2.0);
        let single = concealing_advantage(1, 1, 0.6).unwrap();
        assert!((single.advantage - 0.3).abs() < 1e-15);
        assert!(concealing_advantage(1, 1, 1.0).is_err());
    }

    #[test]
    fn stable_evaluation_beats_naive_form() {
        // 1 − (1 − x)^m loses every digit once x is below machine epsilon
        let c = concealing_advantage(3, 400, 0.875).unwrap();
        let x = libm::pow(0.875, 400.0);
        assert!(x < f64::EPSILON);
        assert_eq!(1.0 - libm::pow(1.0 - x, 3.0), 0.0);
        assert!((c.epsilon - 3.0 * x).abs() / (3.0 * x) < 1e-12);
    }

    #[test]
    fn solver_reproduces_reference_pair() {
        let choice = choose_parameters(3e-6, 1.1e-6, &BeamSplitter::BALANCED).unwrap();
        assert_eq!((choice.m, choice.n), (70, 130));
        assert!(binding_advantage(69, 0.375, 0.25).unwrap() > 3e-6);
        assert!(concealing_advantage(70, 129, 0.875).unwrap().advantage > 1.1e-6);
        assert!(choice.trace.iter().any(|s| s.bound == Bound::Concealing));
        assert!(choice.trace.iter().any(|s| s.n == 130 && s.satisfied));
    }

    #[test]
    fn solver_vacuous_and_strict_targets() {
        let c = choose_parameters(1.0, 1.0, &BeamSplitter::BALANCED).unwrap();
        assert_eq!((c.m, c.n), (1, 2));
        let c = choose_parameters(1e-9, 1e-9, &BeamSplitter::BALANCED).unwrap();
        assert_eq!(c.m, 114);
        assert!(c.binding <= 1e-9 && binding_advantage(113, 0.375, 0.25).unwrap() > 1e-9);
        assert!(c.concealing.advantage <= 1e-9);
        assert!(concealing_advantage(114, c.n - 1, 0.875).unwrap().advantage > 1e-9);
    }

    #[test]
    fn solver_errors() {
        let bal = BeamSplitter::BALANCED;
        assert!(matches!(
            choose_parameters(0.0, 1e-6, &bal),
            Err(Error::Infeasible {
                bound: "binding",
                ..
            })
        ));
        assert!(matches!(
            choose_parameters(1e-6, 1.5, &bal),
            Err(Error::InvalidParameter { .. })
        ));
        let nearly_opaque = BeamSplitter::new(1.0 - 1e-15).unwrap();
        assert!(matches!(
            choose_parameters(1e-300, 0.5, &nearly_opaque),
            Err(Error::Infeasible { .. })
        ));
    }

    fn closed_form_tv(n: usize, r: f64) -> f64 {
        libm::pow((1.0 - r) * (1.0 + r), n as f64)
    }

    #[test]
    fn oracle_matches_product_formula() {
        for r in [0.5, 0.3, 0.8] {
            let bs = BeamSplitter::new(r).unwrap();
            for n in 2..=4 {
                let tv = concealing_oracle_bruteforce(n, &bs).unwrap();
                assert!((tv - closed_form_tv(n, r)).abs() < 1e-12, "n={n} r={r}");
                assert!(tv > 0.0 && tv < 1.0);
            }
        }
        assert!(concealing_oracle_bruteforce(5, &BeamSplitter::BALANCED).is_err());
        assert!(concealing_oracle_bruteforce(1, &BeamSplitter::BALANCED).is_err());
    }

    #[test]
    fn oracle_transparent_channel_is_fully_revealing() {
        let tv = concealing_oracle_with_channel(2, &SlotChannel::TRANSPARENT).unwrap();
        assert!((tv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_shrinks_as_laws_merge() {
        let base = SlotChannel::from_beam_splitter(&BeamSplitter::BALANCED);
        let mut prev = f64::INFINITY;
        for step in 0..=10 {
            let tv = concealing_oracle_with_channel(3, &base.blend(step as f64 / 10.0)).unwrap();
            assert!(tv < prev);
            prev = tv;
        }
        assert!(prev.abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_tv_small_sample() {
        let bs = BeamSplitter::BALANCED;
        let est = concealing_tv_monte_carlo(2, &bs, 50_000, 4).unwrap();
        assert!((est - 0.5625).abs() < 0.02, "{est}");
    }

    proptest! {
        #[test]
        fn probability_order(r in 1e-6f64..1.0 - 1e-6) {
            let c = comparison_probs(&BeamSplitter::new(r).unwrap()).unwrap();
            prop_assert!(c.q < c.p && c.p < c.p_prime && c.p_prime < 1.0);
        }

        #[test]
        fn binding_monotone(m in 1usize..500, p in 0.2f64..0.9, gap in 0.01f64..0.19, dq in 1e-4f64..0.009) {
            let q = p - gap;
            let here = binding_advantage(m, p, q).unwrap();
            prop_assert!(binding_advantage(m + 1, p, q).unwrap() < here);
            prop_assert!(binding_advantage(m, p, q + dq).unwrap() > here);
        }

        #[test]
        fn concealing_monotone(m in 1usize..200, n in 1usize..200, pp in 0.5f64..0.99) {
            let here = concealing_advantage(m, n, pp).unwrap();
            prop_assert!(here.advantage <= 0.5 && here.advantage >= 0.0);
            // strictness is lost once ε rounds to 1
            prop_assume!(here.epsilon < 0.999);
            prop_assert!(concealing_advantage(m, n + 1, pp).unwrap().advantage < here.advantage);
            prop_assert!(concealing_advantage(m + 1, n, pp).unwrap().advantage > here.advantage);
        }

        #[test]
        fn solver_is_minimal(eb in -12.0f64..-1.0, ec in -12.0f64..-1.0, r in 0.2f64..0.8) {
            let bs = BeamSplitter::new(r).unwrap();
            let (tb, tc) = (libm::pow(10.0, eb), libm::pow(10.0, ec));
            let c = choose_parameters(tb, tc, &bs).unwrap();
            let probs = comparison_probs(&bs).unwrap();
            prop_assert!(c.binding <= tb);
            if c.m > 1 {
                prop_assert!(binding_advantage(c.m - 1, probs.p, probs.q).unwrap() > tb);
            }
            prop_assert!(c.concealing.advantage <= tc);
            if c.n > 2 {
                prop_assert!(concealing_advantage(c.m, c.n - 1, probs.p_prime).unwrap().advantage > tc);
            }
        }
    }
}
