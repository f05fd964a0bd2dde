//! Survival analysis for a consumption level `c` sustained from stochastic
//! wealth `X_{n+1} = eps_{n+1} (X_n - c)_+`.
//!
//! Survival from stock `x` is `P(Z < x/c - 1)` for the perpetuity
//! `Z = sum_n (eps_1 ... eps_n)^{-1}`; the modules here cover the shock laws,
//! the zero/interior/one classification, the moments of `Z` and its partial
//! sums, Chebyshev-type lower bounds, and Monte Carlo estimates.

pub mod bounds;
pub mod error;
pub mod ext;
pub mod io;
pub mod logspace;
pub mod moments;
pub mod montecarlo;
pub mod regimes;
pub mod reproduce;
pub mod shock;

pub use bounds::{
    boundary_table, horizon_moments, schedule, survival_lower_bound, BoundSchedule, BoundaryTable,
    Horizon, OrderCap, SurvivalBound,
};
pub use error::{Error, Result};
pub use moments::{finite_moments, infinite_moments, FiniteMomentGrid, MomentSeq, MomentTable};
pub use montecarlo::{sample_z, EcdfEstimate, SimConfig, Truncation};
pub use regimes::{classify, trichotomy, Regime, SurvivalClass};
pub use shock::{match_inverse_moments, Family, ShockSpec};
