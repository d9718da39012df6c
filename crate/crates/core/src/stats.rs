//! Binomial tails and the acceptance window used by Alice's D2 check.

/// Natural log of the binomial pmf.
pub fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let ln_choose = libm::lgamma(n as f64 + 1.0)
        - libm::lgamma(k as f64 + 1.0)
        - libm::lgamma((n - k) as f64 + 1.0);
    let term = |count: u64, prob: f64| {
        if count == 0 {
            0.0
        } else if prob <= 0.0 {
            f64::NEG_INFINITY
        } else {
            count as f64 * libm::log(prob)
        }
    };
    ln_choose + term(k, p) + term(n - k, 1.0 - p)
}

pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    libm::exp(ln_binomial_pmf(n, k, p))
}

/// `P(lo <= X <= hi)` for `X ~ Bin(n, p)`; bounds are clamped to `[0, n]`.
pub fn binomial_within(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    let hi = hi.min(n);
    if lo > hi {
        return 0.0;
    }
    (lo..=hi)
        .map(|k| binomial_pmf(n, k, p))
        .sum::<f64>()
        .min(1.0)
}

/// Symmetric window `center ± width` on a count.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountWindow {
    pub center: f64,
    pub half_width: f64,
}

impl CountWindow {
    /// `n·rate ± sigmas·√(n·rate·(1−rate))`
    pub fn binomial(n: usize, rate: f64, sigmas: f64) -> Self {
        let n = n as f64;
        Self {
            center: n * rate,
            half_width: sigmas * libm::sqrt(n * rate * (1.0 - rate)),
        }
    }

    pub fn contains(&self, count: u64) -> bool {
        libm::fabs(count as f64 - self.center) <= self.half_width
    }

    /// Smallest and largest accepted integer counts, `None` if none are.
    pub fn integer_bounds(&self) -> Option<(u64, u64)> {
        let lo = libm::ceil(self.center - self.half_width).max(0.0);
        let hi = libm::floor(self.center + self.half_width);
        (hi >= lo).then_some((lo as u64, hi as u64))
    }

    /// Probability that a `Bin(n, p)` count falls outside the window.
    pub fn rejection_probability(&self, n: u64, p: f64) -> f64 {
        match self.integer_bounds() {
            Some((lo, hi)) => (1.0 - binomial_within(n, p, lo, hi)).max(0.0),
            None => 1.0,
        }
    }
}
