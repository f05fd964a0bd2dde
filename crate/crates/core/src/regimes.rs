//! Deterministic thresholds and the stochastic zero / interior / one regimes.

use crate::error::{Error, Result};
use crate::shock::ShockSpec;
use serde::{Deserialize, Serialize};

/// Outcome of the deterministic threshold question for productivity `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeterministicThreshold {
    /// Consumption is sustainable forever iff `x >= min_stock`.
    MinStock { min_stock: f64 },
    /// `r <= 1`: no initial stock sustains any `c > 0`.
    Unsustainable,
}

/// Number of periods, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Periods {
    Finite(u64),
    Forever,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// Smallest initial stock that sustains `c` forever when every unit
/// invested returns exactly `r`: `c r / (r - 1)`.
pub fn deterministic_min_stock(r: f64, c: f64) -> Result<DeterministicThreshold> {
    check_positive("r", r)?;
    check_positive("c", c)?;
    if r <= 1.0 {
        Ok(DeterministicThreshold::Unsustainable)
    } else {
        Ok(DeterministicThreshold::MinStock {
            min_stock: c * r / (r - 1.0),
        })
    }
}

/// `sum_{n<N} r^{-n}`.
fn geometric_partial(r: f64, n: u64) -> f64 {
    if r == 1.0 {
        n as f64
    } else {
        let q = 1.0 / r;
        // (1 - q^n) / (1 - q), written to stay accurate for q near 1
        let ln_q = q.ln();
        (-(n as f64 * ln_q).exp_m1()) / (-ln_q.exp_m1())
    }
}

/// Ruin index of the deterministic economy: the largest `N` with
/// `sum_{n=0}^{N-1} r^{-n} < x/c`, i.e. the first period in which the stock
/// is no longer above `c`. `Forever` when `x` reaches the sustainable stock.
pub fn deterministic_horizon(r: f64, x: f64, c: f64) -> Result<Periods> {
    check_positive("r", r)?;
    check_positive("c", c)?;
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "x must be finite, got {x}"
        )));
    }
    let ratio = x / c;
    if ratio <= 1.0 {
        return Ok(Periods::Finite(0));
    }
    if r > 1.0 && ratio >= r / (r - 1.0) {
        return Ok(Periods::Forever);
    }
    // closed form for the crossing point, then settle the integer exactly
    let guess = if r == 1.0 {
        ratio.ceil() - 1.0
    } else {
        // S_N < ratio  <=>  q^N > 1 - ratio (1 - q), q = 1/r
        let q = 1.0 / r;
        let level = 1.0 - ratio * (1.0 - q);
        let limit = level.ln() / q.ln();
        (limit.ceil() - 1.0).max(0.0)
    };
    let mut n = if guess.is_finite() {
        guess as u64
    } else {
        u64::MAX / 2
    };
    while n > 0 && geometric_partial(r, n) >= ratio {
        n -= 1;
    }
    while geometric_partial(r, n + 1) < ratio {
        n += 1;
    }
    Ok(Periods::Finite(n))
}

/// What is known about `rho(x)` from the support of the shock alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub elog: f64,
    pub m: f64,
    #[serde(with = "crate::ext")]
    pub big_m: f64,
    /// Essential infimum of the perpetuity `Z`.
    #[serde(with = "crate::ext")]
    pub d1: f64,
    /// Essential supremum of `Z`.
    #[serde(with = "crate::ext")]
    pub d2: f64,
    /// `E ln eps <= 0`: ruin is certain from every stock.
    pub ruin_certain: bool,
    /// Survival is certain once `x/c` exceeds this (`d2 + 1`), `inf` if never.
    #[serde(with = "crate::ext")]
    pub certain_survival_multiplier: f64,
    /// Ruin is certain while `x/c` is below this (`d1 + 1`), `inf` if always.
    #[serde(with = "crate::ext")]
    pub certain_ruin_multiplier: f64,
}

/// Essential bound of `sum_n b^{-n}` for a shock bound `b`: `1/(b-1)` if
/// `b > 1`, else infinite.
fn perpetuity_bound(b: f64) -> f64 {
    if b > 1.0 {
        1.0 / (b - 1.0)
    } else {
        f64::INFINITY
    }
}

pub fn classify(spec: &ShockSpec) -> Regime {
    let elog = spec.expected_log();
    let support = spec.support_bounds();
    let d1 = perpetuity_bound(support.big_m);
    let d2 = perpetuity_bound(support.m);
    let ruin_certain = elog <= 0.0;
    Regime {
        elog,
        m: support.m,
        big_m: support.big_m,
        d1,
        d2,
        ruin_certain,
        certain_survival_multiplier: if ruin_certain {
            f64::INFINITY
        } else {
            d2 + 1.0
        },
        certain_ruin_multiplier: if ruin_certain {
            f64::INFINITY
        } else {
            d1 + 1.0
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalClass {
    /// `rho(x) = 0`.
    Zero,
    /// `0 < rho(x) < 1`.
    Interior,
    /// `rho(x) = 1`.
    One,
    /// `x/c - 1` sits exactly on `d1` or `d2`, where the support alone does
    /// not settle the answer.
    BoundaryUndetermined,
}

pub fn trichotomy(regime: &Regime, x: f64, c: f64) -> Result<SurvivalClass> {
    check_positive("c", c)?;
    if regime.ruin_certain || x <= c {
        return Ok(SurvivalClass::Zero);
    }
    let u = x / c - 1.0;
    let non_degenerate = regime.m < regime.big_m;
    Ok(if u < regime.d1 {
        SurvivalClass::Zero
    } else if u > regime.d2 {
        SurvivalClass::One
    } else if u == regime.d2 && regime.m > 1.0 && non_degenerate {
        // Z = d2 needs every shock to sit at m, a null event
        SurvivalClass::One
    } else if u == regime.d1 || u == regime.d2 {
        SurvivalClass::BoundaryUndetermined
    } else {
        SurvivalClass::Interior
    })
}
