//! Elementary inequalities behind the recovery bounds, evaluated
//! numerically so they can be checked on grids.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The three sides of the binomial-sum chain
/// `sum_{k=1}^{floor(n/2)} C(n,k) x^{k(n-k)} <= 2((1 + x^{n/2})^n - 1) <= 2 n x^{n/2} exp(n x^{n/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialSumBounds {
    pub lhs: f64,
    pub mid: f64,
    pub outer: f64,
}

impl BinomialSumBounds {
    pub fn chain_holds(&self) -> bool {
        self.lhs <= self.mid && self.mid <= self.outer
    }

    /// The same chain with the factor 2 removed from the two right-hand sides.
    pub fn tight_chain_holds(&self) -> bool {
        self.lhs <= 0.5 * self.mid && self.mid <= self.outer
    }
}

pub fn binomial_sum_bounds(n: usize, x: f64) -> Result<BinomialSumBounds> {
    if n < 2 {
        return Err(invalid("binomial sum bounds need n >= 2"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(BinomialSumBounds { lhs: 0.0, mid: 0.0, outer: 0.0 });
    }
    let nf = n as f64;
    let ln_x = x.ln();
    // terms in log space: ln C(n,k) + k(n-k) ln x
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(n / 2);
    for k in 1..=n / 2 {
        ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
        terms.push(ln_binom + (k * (n - k)) as f64 * ln_x);
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lhs = max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>();

    let y = x.powf(nf / 2.0);
    let mid = 2.0 * (nf * y.ln_1p()).exp_m1();
    let outer = 2.0 * nf * y * (nf * y).exp();
    Ok(BinomialSumBounds { lhs, mid, outer })
}

/// `((1 + x/r)^r, e^x)`, defined for integer `r >= 1` and `x > -r`.
pub fn exp_limit_pair(r: u32, x: f64) -> Result<(f64, f64)> {
    if r == 0 || x <= -(r as f64) {
        return Err(invalid(format!("need r >= 1 and x > -r, got r = {r}, x = {x}")));
    }
    let rf = r as f64;
    Ok(((rf * (x / rf).ln_1p()).exp(), x.exp()))
}
