//! Scalar expressions whose divergence in `n` characterizes exact or
//! almost-exact recovery. Callers judge divergence by sweeping `n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sbm::{Phase, PhaseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `((sqrt a - sqrt b)^2 - 2) log n + log log n`, equal-size exact recovery threshold.
    MnsExact,
    /// `(c - d)^2 / (2 (c + d))`, conjectured almost-exact threshold.
    Decelle,
    /// Same expression as `Decelle`, read against divergence.
    MnsDetect,
    /// `a n (log a + (sqrt c - sqrt d)^2 / 4 - 1)`.
    Kvw,
    /// `((sqrt a - sqrt b)^2 - a b log(n) / (2n) - 4) log n`.
    ChExact,
    /// `((sqrt a - sqrt b)^2 - 4) log n`.
    ChExactSimple,
    /// `(sqrt c - sqrt d)^2 - 4 C (1 - log a)`.
    KsFixedFraction,
    /// `(sqrt c - sqrt d)^2 + 4 C log a`.
    KsVanishing,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 8] = [
        ConditionKind::MnsExact,
        ConditionKind::Decelle,
        ConditionKind::MnsDetect,
        ConditionKind::Kvw,
        ConditionKind::ChExact,
        ConditionKind::ChExactSimple,
        ConditionKind::KsFixedFraction,
        ConditionKind::KsVanishing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ConditionKind::MnsExact => "mns_exact",
            ConditionKind::Decelle => "decelle",
            ConditionKind::MnsDetect => "mns_detect",
            ConditionKind::Kvw => "kvw",
            ConditionKind::ChExact => "ch_exact",
            ConditionKind::ChExactSimple => "ch_exact_simple",
            ConditionKind::KsFixedFraction => "ks_fixed_fraction",
            ConditionKind::KsVanishing => "ks_vanishing",
        }
    }

    /// Sparsity phase whose coefficients the expression takes.
    pub fn phase(&self) -> Phase {
        match self {
            ConditionKind::MnsExact | ConditionKind::ChExact | ConditionKind::ChExactSimple => {
                Phase::ChernoffHellinger
            }
            _ => Phase::KestenStigum,
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| invalid(format!("unknown condition kind {s:?}")))
    }
}

/// Optional extras: the error fraction `a` and the constant `C > 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionExtras {
    pub a: Option<f64>,
    pub c: Option<f64>,
}

pub fn condition_value(kind: ConditionKind, coeffs: &PhaseParams, n: usize, extras: ConditionExtras) -> Result<f64> {
    if n < 2 {
        return Err(invalid("condition values need n >= 2"));
    }
    if coeffs.phase != kind.phase() {
        return Err(invalid(format!("{kind} takes {:?} coefficients", kind.phase())));
    }
    let (x, y) = (coeffs.coeff1, coeffs.coeff2);
    let gap = (x.sqrt() - y.sqrt()).powi(2);
    let ln_n = (n as f64).ln();
    let fraction = || -> Result<f64> {
        let a = extras.a.ok_or_else(|| invalid(format!("{kind} needs the error fraction a")))?;
        if !(a > 0.0 && a < 0.5) {
            return Err(invalid(format!("a = {a} must lie in (0, 1/2)")));
        }
        Ok(a)
    };
    let constant = || -> Result<f64> {
        let c = extras.c.ok_or_else(|| invalid(format!("{kind} needs the constant C")))?;
        if c <= 1.0 {
            return Err(invalid(format!("C = {c} must exceed 1")));
        }
        Ok(c)
    };
    Ok(match kind {
        ConditionKind::MnsExact => (gap - 2.0) * ln_n + ln_n.ln(),
        ConditionKind::Decelle | ConditionKind::MnsDetect => {
            if x + y == 0.0 {
                0.0
            } else {
                (x - y).powi(2) / (2.0 * (x + y))
            }
        }
        ConditionKind::Kvw => {
            let a = fraction()?;
            a * n as f64 * (a.ln() + 0.25 * gap - 1.0)
        }
        ConditionKind::ChExact => (gap - x * y * ln_n / (2.0 * n as f64) - 4.0) * ln_n,
        ConditionKind::ChExactSimple => (gap - 4.0) * ln_n,
        ConditionKind::KsFixedFraction => gap - 4.0 * constant()? * (1.0 - fraction()?.ln()),
        ConditionKind::KsVanishing => gap + 4.0 * constant()? * fraction()?.ln(),
    })
}
