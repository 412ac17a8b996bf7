use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Edge probabilities: `p` within a community, `q` between communities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    p: f64,
    q: f64,
}

impl SbmParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(SbmParams { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when both probabilities lie strictly inside (0, 1).
    pub fn is_interior(&self) -> bool {
        self.p > 0.0 && self.p < 1.0 && self.q > 0.0 && self.q < 1.0
    }

    /// Communities are not identifiable from the graph when `p == q`.
    pub fn is_degenerate(&self) -> bool {
        self.p == self.q
    }
}

pub(crate) fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} is not a probability in [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// `p = a log(n)/n`, `q = b log(n)/n`.
    ChernoffHellinger,
    /// `p = c/n`, `q = d/n`.
    KestenStigum,
}

/// Sparsity-phase coefficients, turned into edge probabilities at a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub phase: Phase,
    pub coeff1: f64,
    pub coeff2: f64,
}

impl PhaseParams {
    pub fn new(phase: Phase, coeff1: f64, coeff2: f64) -> Result<Self> {
        if !(coeff1 >= 0.0 && coeff2 >= 0.0 && coeff1.is_finite() && coeff2.is_finite()) {
            return Err(invalid(format!(
                "phase coefficients must be finite and nonnegative, got ({coeff1}, {coeff2})"
            )));
        }
        Ok(PhaseParams { phase, coeff1, coeff2 })
    }

    /// Edge probabilities at graph size `n`, clamped to [0, 1].
    pub fn at(&self, n: usize) -> Result<SbmParams> {
        if n < 2 {
            return Err(invalid("phase parameters need n >= 2"));
        }
        let nf = n as f64;
        let scale = match self.phase {
            Phase::ChernoffHellinger => nf.ln() / nf,
            Phase::KestenStigum => 1.0 / nf,
        };
        SbmParams::new(
            (self.coeff1 * scale).clamp(0.0, 1.0),
            (self.coeff2 * scale).clamp(0.0, 1.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(SbmParams::new(1.2, 0.1).is_err());
        assert!(SbmParams::new(0.5, -0.1).is_err());
        assert!(SbmParams::new(f64::NAN, 0.1).is_err());
        assert!(SbmParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn phase_conversion_clamps() {
        let ks = PhaseParams::new(Phase::KestenStigum, 5.0, 1.0).unwrap();
        let p = ks.at(10).unwrap();
        assert!((p.p() - 0.5).abs() < 1e-15 && (p.q() - 0.1).abs() < 1e-15);
        assert_eq!(ks.at(3).unwrap().p(), 1.0);

        let ch = PhaseParams::new(Phase::ChernoffHellinger, 2.0, 1.0).unwrap();
        let p = ch.at(100).unwrap();
        assert!((p.p() - 2.0 * 100f64.ln() / 100.0).abs() < 1e-15);
        assert!(PhaseParams::new(Phase::KestenStigum, -1.0, 0.0).is_err());
    }
}
