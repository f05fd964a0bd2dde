//! Chebyshev lower bounds on the probability of sustaining `c`.
//!
//! For every order `r`, `P(Z >= x/c - 1) <= beta_r / (x/c - 1)^r`. The
//! order giving the smallest right-hand side changes at the boundaries
//! `b_r = c (1 + beta_{r+1} / beta_r)`: order `r` is used on
//! `(b_{r-1}, b_r]` with `b_0 = c`. Beyond the last finite boundary the top
//! order stays in use.

use crate::error::{Error, Result};
use crate::moments::{finite_moments, infinite_moments, last_subunit_gamma, MomentSeq};
use crate::shock::ShockSpec;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Survival horizon: `n` periods (`Z_n`) or forever (`Z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            return Ok(Horizon::Infinite);
        }
        match s.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(Horizon::Finite(n)),
            _ => Err(Error::Parse(format!(
                "horizon must be a positive integer or inf, got {s:?}"
            ))),
        }
    }
}

/// Which moment orders a finite horizon may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderCap {
    /// Orders with `gamma_r < 1`, the same range the perpetuity has finite
    /// moments on. This is what the published finite-horizon tables use.
    #[default]
    SubunitGamma,
    /// Every order up to `rmax`.
    Rmax,
}

/// Moments `beta_1..` of `Z` or `Z_n` that a schedule may draw on.
pub fn horizon_moments(
    spec: &ShockSpec,
    horizon: Horizon,
    rmax: u32,
    cap: OrderCap,
) -> Result<MomentSeq> {
    match horizon {
        Horizon::Infinite => Ok(infinite_moments(spec, rmax)?.moments().clone()),
        Horizon::Finite(n) => {
            let orders = match cap {
                OrderCap::SubunitGamma => last_subunit_gamma(spec, rmax).max(1),
                OrderCap::Rmax => rmax,
            };
            Ok(finite_moments(spec, orders, n)?.column(n))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSchedule {
    pub c: f64,
    /// `b_1..b_max_order` followed by `inf`.
    #[serde(with = "crate::ext::vec")]
    pub boundaries: Vec<f64>,
    pub max_order: u32,
    /// Fewer than two finite moments: only order 1 is available.
    pub degenerate: bool,
    moments: MomentSeq,
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "c must be finite and > 0, got {c}"
        )))
    }
}

/// `c (1 + beta_{r+1} / beta_r)` from log-moments.
fn boundary(c: f64, ln_lo: f64, ln_hi: f64) -> f64 {
    if ln_hi == f64::INFINITY {
        f64::INFINITY
    } else {
        c * (1.0 + (ln_hi - ln_lo).exp())
    }
}

pub fn schedule(moments: &MomentSeq, c: f64) -> Result<BoundSchedule> {
    check_c(c)?;
    let finite = moments.finite_prefix();
    if finite < 2 {
        return Ok(BoundSchedule {
            c,
            boundaries: vec![f64::INFINITY],
            max_order: 1,
            degenerate: true,
            moments: if moments.rmax() == 0 {
                MomentSeq::from_ln(vec![f64::INFINITY])
            } else {
                moments.truncated(1)
            },
        });
    }
    let max_order = finite - 1;
    let mut boundaries: Vec<f64> = (1..=max_order)
        .map(|r| boundary(c, moments.ln_beta(r), moments.ln_beta(r + 1)))
        .collect();
    boundaries.push(f64::INFINITY);
    Ok(BoundSchedule {
        c,
        boundaries,
        max_order,
        degenerate: false,
        moments: moments.truncated(finite),
    })
}

impl BoundSchedule {
    /// Order used at `x`; `None` when `x <= c`.
    pub fn order_at(&self, x: f64) -> Option<u32> {
        if x <= self.c || x.is_nan() {
            return None;
        }
        // ties go to the lower interval
        let idx = self.boundaries.partition_point(|&b| b < x);
        Some((idx as u32 + 1).min(self.max_order))
    }

    /// `ln(beta_r / (x/c - 1)^r)`.
    pub fn ln_ruin_term(&self, r: u32, x: f64) -> f64 {
        let u = x / self.c - 1.0;
        self.moments.ln_beta(r) - r as f64 * u.ln()
    }

    pub fn moments(&self) -> &MomentSeq {
        &self.moments
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    Informative,
    /// Chebyshev gives nothing here; the lower bound was clamped to 0.
    Vacuous,
    /// `x <= c`: no surplus to invest, ruin is immediate.
    NoSurplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalBound {
    pub x: f64,
    pub order: Option<u32>,
    /// `max(0, 1 - beta_r / (x/c - 1)^r)`.
    pub survival: f64,
    /// `beta_r / (x/c - 1)^r` before clamping; may exceed 1.
    #[serde(with = "crate::ext")]
    pub ruin_raw: f64,
    /// `min(1, ruin_raw)`.
    pub ruin: f64,
    pub flag: BoundFlag,
}

pub fn survival_lower_bound(schedule: &BoundSchedule, x: f64) -> SurvivalBound {
    let Some(order) = schedule.order_at(x) else {
        return SurvivalBound {
            x,
            order: None,
            survival: 0.0,
            ruin_raw: 1.0,
            ruin: 1.0,
            flag: BoundFlag::NoSurplus,
        };
    };
    let ruin_raw = schedule.ln_ruin_term(order, x).exp();
    let survival = 1.0 - ruin_raw;
    SurvivalBound {
        x,
        order: Some(order),
        survival: survival.max(0.0),
        ruin_raw,
        ruin: ruin_raw.min(1.0),
        flag: if survival > 0.0 {
            BoundFlag::Informative
        } else {
            BoundFlag::Vacuous
        },
    }
}

/// Upper bound on the ruin probability; same evaluation as
/// [`survival_lower_bound`], read from the other side.
pub fn ruin_upper_bound(schedule: &BoundSchedule, x: f64) -> SurvivalBound {
    survival_lower_bound(schedule, x)
}

/// Boundaries `b_r` for `r = 1..=rows`, one column per horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub spec: ShockSpec,
    pub c: f64,
    pub horizons: Vec<Horizon>,
    pub rows: u32,
    /// `values[h][r - 1]`.
    pub values: Vec<Vec<f64>>,
}

impl BoundaryTable {
    pub fn get(&self, r: u32, h: usize) -> f64 {
        self.values[h][r as usize - 1]
    }
}

pub fn boundary_table(
    spec: &ShockSpec,
    c: f64,
    horizons: &[Horizon],
    rows: u32,
) -> Result<BoundaryTable> {
    check_c(c)?;
    if rows == 0 {
        return Err(Error::InvalidParameter("rows must be >= 1".to_string()));
    }
    let values = horizons
        .iter()
        .map(|&h| {
            let m = horizon_moments(spec, h, rows + 1, OrderCap::Rmax)?;
            Ok((1..=rows)
                .map(|r| boundary(c, m.ln_beta(r), m.ln_beta(r + 1)))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(BoundaryTable {
        spec: *spec,
        c,
        horizons: horizons.to_vec(),
        rows,
        values,
    })
}
