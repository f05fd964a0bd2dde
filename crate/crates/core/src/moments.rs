//! Moments of the perpetuity `Z = sum_n (eps_1 ... eps_n)^{-1}` and of its
//! partial sums `Z_n`.
//!
//! Both recursions come from `Z = eps_1^{-1} (1 + W)` with `W` an
//! independent copy of `Z` (or of `Z_{n-1}`). Every term in them is
//! positive, so they are run entirely on logarithms: orders around 60 are
//! routine and the binomial weights alone reach 1e17 there.

use crate::error::{Error, Result};
use crate::logspace::{ln_binomial, ln_one_minus_exp, log_sum_exp};
use crate::shock::ShockSpec;
use serde::{Deserialize, Serialize};

/// A sequence `beta_1..beta_R` of moments stored as logarithms.
///
/// Index 0 is never stored; `beta_0 = 1` is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeq {
    #[serde(with = "crate::ext::vec")]
    ln_beta: Vec<f64>,
}

impl MomentSeq {
    pub fn from_ln(ln_beta: Vec<f64>) -> Self {
        MomentSeq { ln_beta }
    }

    pub fn from_linear(beta: &[f64]) -> Self {
        MomentSeq {
            ln_beta: beta.iter().map(|b| b.ln()).collect(),
        }
    }

    /// Highest order held.
    pub fn rmax(&self) -> u32 {
        self.ln_beta.len() as u32
    }

    pub fn ln_beta(&self, r: u32) -> f64 {
        match r {
            0 => 0.0,
            _ => self.ln_beta[r as usize - 1],
        }
    }

    pub fn beta(&self, r: u32) -> f64 {
        self.ln_beta(r).exp()
    }

    /// Number of leading finite moments.
    pub fn finite_prefix(&self) -> u32 {
        self.ln_beta.iter().take_while(|v| v.is_finite()).count() as u32
    }

    /// Drops every order above `r`.
    pub fn truncated(&self, r: u32) -> MomentSeq {
        let keep = (r as usize).min(self.ln_beta.len());
        MomentSeq {
            ln_beta: self.ln_beta[..keep].to_vec(),
        }
    }
}

/// Inverse moments `gamma_r` and perpetuity moments `beta_r = E Z^r` for
/// `r = 1..=rmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub spec: ShockSpec,
    #[serde(with = "crate::ext::vec")]
    ln_gamma: Vec<f64>,
    moments: MomentSeq,
    /// Smallest order with `gamma_r >= 1`; every `beta_r` from there on is
    /// infinite.
    pub first_infinite: Option<u32>,
}

/// The inverse moments `ln gamma_1..ln gamma_rmax`.
fn ln_gammas(spec: &ShockSpec, rmax: u32) -> Vec<f64> {
    (1..=rmax).map(|r| spec.ln_inverse_moment(r)).collect()
}

/// `r_cap` such that `gamma_r < 1` for every `r <= r_cap`, searched up to
/// `limit`. Zero when already `gamma_1 >= 1`.
pub fn last_subunit_gamma(spec: &ShockSpec, limit: u32) -> u32 {
    (1..=limit)
        .take_while(|&r| spec.ln_inverse_moment(r) < 0.0)
        .count() as u32
}

pub fn infinite_moments(spec: &ShockSpec, rmax: u32) -> Result<MomentTable> {
    spec.validate()?;
    if rmax == 0 {
        return Err(Error::InvalidParameter("rmax must be >= 1".to_string()));
    }
    if spec.expected_log() <= 0.0 {
        return Err(Error::Domain(format!(
            "E ln eps = {} <= 0: Z is a.s. infinite, the moment recursion does not apply",
            spec.expected_log()
        )));
    }
    let ln_gamma = ln_gammas(spec, rmax);
    let first_infinite = ln_gamma
        .iter()
        .position(|&g| g >= 0.0)
        .map(|i| i as u32 + 1);

    // ln_beta[j] holds ln beta_j, with beta_0 = 1
    let mut ln_beta = vec![0.0f64];
    for r in 1..=rmax {
        let lg = ln_gamma[r as usize - 1];
        let v = if first_infinite.is_some_and(|f| r >= f) {
            f64::INFINITY
        } else {
            // (1 - gamma_r) beta_r = gamma_r sum_{j<r} C(r,j) beta_j
            let s = log_sum_exp((0..r).map(|j| ln_binomial(r, j) + ln_beta[j as usize]));
            lg - ln_one_minus_exp(lg) + s
        };
        ln_beta.push(v);
    }
    ln_beta.remove(0);
    Ok(MomentTable {
        spec: *spec,
        ln_gamma,
        moments: MomentSeq::from_ln(ln_beta),
        first_infinite,
    })
}

impl MomentTable {
    pub fn rmax(&self) -> u32 {
        self.ln_gamma.len() as u32
    }

    pub fn gamma(&self, r: u32) -> f64 {
        self.ln_gamma(r).exp()
    }

    pub fn ln_gamma(&self, r: u32) -> f64 {
        if r == 0 {
            0.0
        } else {
            self.ln_gamma[r as usize - 1]
        }
    }

    pub fn beta(&self, r: u32) -> f64 {
        self.moments.beta(r)
    }

    pub fn ln_beta(&self, r: u32) -> f64 {
        self.moments.ln_beta(r)
    }

    pub fn moments(&self) -> &MomentSeq {
        &self.moments
    }
}

/// `beta_r^(n) = E Z_n^r` for `r = 1..=rmax`, `n = 1..=nmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMomentGrid {
    pub spec: ShockSpec,
    rmax: u32,
    nmax: u32,
    /// Column-major: entry `(r, n)` at `(n - 1) * rmax + (r - 1)`.
    #[serde(with = "crate::ext::vec")]
    ln_beta: Vec<f64>,
}

pub fn finite_moments(spec: &ShockSpec, rmax: u32, nmax: u32) -> Result<FiniteMomentGrid> {
    spec.validate()?;
    if rmax == 0 || nmax == 0 {
        return Err(Error::InvalidParameter(
            "rmax and nmax must be >= 1".to_string(),
        ));
    }
    let ln_gamma = ln_gammas(spec, rmax);
    let binom: Vec<Vec<f64>> = (0..=rmax)
        .map(|r| (0..=r).map(|j| ln_binomial(r, j)).collect())
        .collect();

    let mut grid = Vec::with_capacity((rmax * nmax) as usize);
    // previous column including order 0: Z_0 = 0, so beta_0 = 1, beta_r = 0
    let mut prev = vec![f64::NEG_INFINITY; rmax as usize + 1];
    prev[0] = 0.0;
    for _ in 1..=nmax {
        let mut col = vec![0.0f64; rmax as usize + 1];
        for r in 1..=rmax as usize {
            let s = log_sum_exp((0..=r).map(|j| binom[r][j] + prev[j]));
            col[r] = ln_gamma[r - 1] + s;
        }
        grid.extend_from_slice(&col[1..]);
        prev = col;
    }
    Ok(FiniteMomentGrid {
        spec: *spec,
        rmax,
        nmax,
        ln_beta: grid,
    })
}

impl FiniteMomentGrid {
    pub fn rmax(&self) -> u32 {
        self.rmax
    }

    pub fn nmax(&self) -> u32 {
        self.nmax
    }

    /// `ln beta_r^(n)`, with `beta_0^(n) = 1` and `beta_r^(0) = 0` for `r >= 1`.
    pub fn ln_beta(&self, r: u32, n: u32) -> f64 {
        match (r, n) {
            (0, _) => 0.0,
            (_, 0) => f64::NEG_INFINITY,
            _ => self.ln_beta[((n - 1) * self.rmax + (r - 1)) as usize],
        }
    }

    pub fn beta(&self, r: u32, n: u32) -> f64 {
        self.ln_beta(r, n).exp()
    }

    /// Moments of `Z_n` as a sequence over `r`.
    pub fn column(&self, n: u32) -> MomentSeq {
        assert!(
            n >= 1 && n <= self.nmax,
            "horizon {n} outside 1..={}",
            self.nmax
        );
        let start = ((n - 1) * self.rmax) as usize;
        MomentSeq::from_ln(self.ln_beta[start..start + self.rmax as usize].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Straight transcription of both recursions in ordinary arithmetic.
    fn naive_infinite(spec: &ShockSpec, rmax: u32) -> Vec<f64> {
        let mut beta = vec![1.0f64];
        for r in 1..=rmax {
            let g = spec.inverse_moment(r);
            if g >= 1.0 || beta[r as usize - 1].is_infinite() {
                beta.push(f64::INFINITY);
                continue;
            }
            let mut s = 0.0;
            let mut binom = 1.0f64;
            for j in 0..r {
                s += binom * beta[j as usize];
                binom = binom * (r - j) as f64 / (j + 1) as f64;
            }
            beta.push(g / (1.0 - g) * s);
        }
        beta
    }

    fn naive_finite(spec: &ShockSpec, rmax: u32, n: u32) -> Vec<f64> {
        let mut prev = vec![0.0f64; rmax as usize + 1];
        prev[0] = 1.0;
        for _ in 0..n {
            let mut col = vec![1.0f64; rmax as usize + 1];
            for r in 1..=rmax {
                let mut s = 0.0;
                let mut binom = 1.0f64;
                for j in 0..=r {
                    s += binom * prev[j as usize];
                    binom = binom * (r - j) as f64 / (j + 1) as f64;
                }
                col[r as usize] = spec.inverse_moment(r) * s;
            }
            prev = col;
        }
        prev
    }

    #[test]
    fn pareto_table_values() {
        let t = infinite_moments(&ShockSpec::pareto(0.1, 0.9).unwrap(), 4).unwrap();
        let want = [0.1124, 0.0765, 0.0725, 0.0849];
        for (r, w) in (1..=4).zip(want) {
            assert!((t.beta(r) - w).abs() < 5e-4, "r={r}: {}", t.beta(r));
        }
        assert!((t.beta(1) - t.gamma(1) / (1.0 - t.gamma(1))).abs() < 1e-15);
        assert_eq!(t.first_infinite, None);
    }

    #[test]
    fn pareto_first_infinite_order_is_61() {
        let t = infinite_moments(&ShockSpec::pareto(0.1, 0.9).unwrap(), 61).unwrap();
        assert_eq!(t.first_infinite, Some(61));
        assert!(t.beta(60).is_finite() && t.beta(60) > 0.0);
        assert_eq!(t.beta(61), f64::INFINITY);
    }

    #[test]
    fn lognormal_fourth_moment_is_infinite() {
        // two-moment match to Pareto(0.1, 0.9)
        let p = ShockSpec::pareto(0.1, 0.9).unwrap();
        let ln = crate::shock::match_inverse_moments(
            crate::shock::Family::Lognormal,
            p.inverse_moment(1),
            p.inverse_moment(2),
        )
        .unwrap();
        let t = infinite_moments(&ln, 4).unwrap();
        assert!((t.beta(3) - 0.3847).abs() < 5e-4, "{}", t.beta(3));
        assert_eq!(t.beta(4), f64::INFINITY);
        assert_eq!(t.first_infinite, Some(4));

        // with the rounded parameters the structure is the same
        let rounded = infinite_moments(&ShockSpec::lognormal(3.17, 1.75).unwrap(), 4).unwrap();
        assert_eq!(rounded.first_infinite, Some(4));
        assert!((rounded.beta(3) - 0.3847).abs() < 1e-2);
    }

    #[test]
    fn constant_shock_is_degenerate() {
        let t = infinite_moments(&ShockSpec::constant(2.0).unwrap(), 6).unwrap();
        for r in 1..=6 {
            assert!(rel(t.beta(r), 1.0) < 1e-12);
        }
    }

    #[test]
    fn nonpositive_log_mean_is_a_domain_error() {
        let err = infinite_moments(&ShockSpec::lognormal(-0.1, 0.04).unwrap(), 3).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(infinite_moments(&ShockSpec::constant(1.0).unwrap(), 3).is_err());
    }

    #[test]
    fn log_domain_agrees_with_linear() {
        let p = ShockSpec::pareto(0.1, 0.9).unwrap();
        let t = infinite_moments(&p, 20).unwrap();
        let naive = naive_infinite(&p, 20);
        for r in 1..=20 {
            assert!(rel(t.beta(r), naive[r as usize]) < 1e-10, "r={r}");
        }
        let ln = ShockSpec::lognormal(0.2146, 0.0645).unwrap();
        let g = finite_moments(&ln, 8, 20).unwrap();
        for n in [1, 2, 5, 20] {
            let naive = naive_finite(&ln, 8, n);
            for r in 1..=8 {
                assert!(rel(g.beta(r, n), naive[r as usize]) < 1e-10, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn finite_explicit_forms() {
        let s = ShockSpec::gamma(17.0, 40.0 / 3.0).unwrap();
        let g = finite_moments(&s, 3, 3).unwrap();
        let (g1, g2, g3) = (
            s.inverse_moment(1),
            s.inverse_moment(2),
            s.inverse_moment(3),
        );
        assert!(rel(g.beta(1, 1), g1) < 1e-13);
        assert!(rel(g.beta(3, 1), g3) < 1e-13);
        assert!(rel(g.beta(1, 2), g1 * (1.0 + g1)) < 1e-13);
        assert!(rel(g.beta(2, 2), g2 * (1.0 + 2.0 * g1 + g2)) < 1e-13);
        assert!(rel(g.beta(3, 2), g3 * (1.0 + 3.0 * g1 + 3.0 * g2 + g3)) < 1e-13);
        assert!(rel(g.beta(1, 3), g1 + g1 * g1 + g1 * g1 * g1) < 1e-13);
        let b22 = g2 * (1.0 + 2.0 * g1 + 2.0 * g1 * g1 + g2 + 2.0 * g1 * g2 + g2 * g2);
        assert!(rel(g.beta(2, 3), b22) < 1e-13);
        assert_eq!(g.beta(0, 3), 1.0);
        assert_eq!(g.beta(2, 0), 0.0);
    }

    #[test]
    fn first_moment_is_a_geometric_sum() {
        let s = ShockSpec::lognormal(0.2146, 0.0645).unwrap();
        let g1 = (-0.2146f64 + 0.0645 / 2.0).exp();
        let oracle = g1 * (1.0 - g1.powi(20)) / (1.0 - g1);
        let grid = finite_moments(&s, 1, 20).unwrap();
        assert!(rel(grid.beta(1, 20), oracle) < 1e-12);
        assert!((grid.beta(1, 20) - 4.8696).abs() < 5e-3);
    }

    #[test]
    fn constant_partial_sums() {
        let g = finite_moments(&ShockSpec::constant(2.0).unwrap(), 5, 12).unwrap();
        for n in 1..=12 {
            let z = 1.0 - 0.5f64.powi(n as i32);
            for r in 1..=5 {
                assert!(rel(g.beta(r, n), z.powi(r as i32)) < 1e-12, "r={r} n={n}");
            }
        }
    }

    #[test]
    fn gamma_rows_above_shape_are_infinite() {
        let g = finite_moments(&ShockSpec::gamma(3.0, 4.0).unwrap(), 5, 4).unwrap();
        for n in 1..=4 {
            assert!(g.beta(2, n).is_finite());
            assert_eq!(g.beta(3, n), f64::INFINITY);
            assert_eq!(g.beta(5, n), f64::INFINITY);
        }
    }

    #[test]
    fn finite_horizon_converges_to_perpetuity() {
        let specs = [
            ShockSpec::lognormal(0.2146, 0.0645).unwrap(),
            ShockSpec::pareto(3.0, 0.9).unwrap(),
            ShockSpec::gamma(17.0, 40.0 / 3.0).unwrap(),
        ];
        for s in specs {
            let inf = infinite_moments(&s, 5).unwrap();
            let fin = finite_moments(&s, 5, 200).unwrap();
            for r in 1..=5 {
                assert!(rel(fin.beta(r, 200), inf.beta(r)) < 1e-6, "{s} r={r}");
                for n in 1..200 {
                    assert!(fin.beta(r, n) <= fin.beta(r, n + 1));
                }
                assert!(fin.beta(r, 200) <= inf.beta(r) * (1.0 + 1e-12));
            }
        }
    }
}
