//! Shock laws for the output-capital ratio `eps`.
//!
//! Everything downstream needs `eps` only through its inverse moments
//! `gamma_r = E eps^{-r}`, its log-mean and its essential support, plus the
//! ability to draw `1/eps`.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};
use std::fmt;
use std::str::FromStr;

/// Distribution of a single shock `eps_1`.
///
/// Gamma uses the rate parameterisation: density
/// `theta^alpha / Gamma(alpha) * x^(alpha-1) * exp(-theta x)`.
/// `Constant` is a point mass, kept as an exactly solvable reference case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ShockSpec {
    /// `ln eps ~ N(mu, sigma2)`.
    Lognormal {
        mu: f64,
        sigma2: f64,
    },
    /// Density `beta k^beta / x^(beta+1)` on `x >= k`.
    Pareto {
        beta: f64,
        k: f64,
    },
    Gamma {
        alpha: f64,
        theta: f64,
    },
    Constant {
        a: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lognormal,
    Pareto,
    Gamma,
    Constant,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lognormal" => Ok(Family::Lognormal),
            "pareto" => Ok(Family::Pareto),
            "gamma" => Ok(Family::Gamma),
            "constant" => Ok(Family::Constant),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            Family::Lognormal => "lognormal",
            Family::Pareto => "pareto",
            Family::Gamma => "gamma",
            Family::Constant => "constant",
        })
    }
}

/// Essential infimum `m` and supremum `big_m` of `eps_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBounds {
    pub m: f64,
    #[serde(with = "crate::ext")]
    pub big_m: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl ShockSpec {
    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        ShockSpec::Lognormal { mu, sigma2 }.validated()
    }

    pub fn pareto(beta: f64, k: f64) -> Result<Self> {
        ShockSpec::Pareto { beta, k }.validated()
    }

    pub fn gamma(alpha: f64, theta: f64) -> Result<Self> {
        ShockSpec::Gamma { alpha, theta }.validated()
    }

    pub fn constant(a: f64) -> Result<Self> {
        ShockSpec::Constant { a }.validated()
    }

    /// Checks the parameter invariants. Values built through serde or the
    /// enum literals directly should pass through here before use.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ShockSpec::Lognormal { mu, sigma2 } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "mu must be finite, got {mu}"
                    )));
                }
                positive("sigma2", sigma2)
            }
            ShockSpec::Pareto { beta, k } => positive("beta", beta).and(positive("k", k)),
            ShockSpec::Gamma { alpha, theta } => {
                positive("alpha", alpha).and(positive("theta", theta))
            }
            ShockSpec::Constant { a } => positive("a", a),
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.validate().map(|_| self)
    }

    pub fn family(&self) -> Family {
        match self {
            ShockSpec::Lognormal { .. } => Family::Lognormal,
            ShockSpec::Pareto { .. } => Family::Pareto,
            ShockSpec::Gamma { .. } => Family::Gamma,
            ShockSpec::Constant { .. } => Family::Constant,
        }
    }

    /// `ln gamma_r = ln E eps^{-r}`; `+inf` when the moment does not exist.
    pub fn ln_inverse_moment(&self, r: u32) -> f64 {
        let rf = r as f64;
        match *self {
            ShockSpec::Lognormal { mu, sigma2 } => -rf * mu + rf * rf * sigma2 / 2.0,
            ShockSpec::Pareto { beta, k } => beta.ln() - rf * k.ln() - (beta + rf).ln(),
            ShockSpec::Gamma { alpha, theta } => {
                if rf < alpha {
                    rf * theta.ln() + ln_gamma(alpha - rf) - ln_gamma(alpha)
                } else {
                    f64::INFINITY
                }
            }
            ShockSpec::Constant { a } => -rf * a.ln(),
        }
    }

    /// `gamma_r = E eps^{-r}`, possibly `+inf`.
    pub fn inverse_moment(&self, r: u32) -> f64 {
        self.ln_inverse_moment(r).exp()
    }

    /// `E ln eps`.
    pub fn expected_log(&self) -> f64 {
        match *self {
            ShockSpec::Lognormal { mu, .. } => mu,
            ShockSpec::Pareto { beta, k } => k.ln() + 1.0 / beta,
            ShockSpec::Gamma { alpha, theta } => digamma(alpha) - theta.ln(),
            ShockSpec::Constant { a } => a.ln(),
        }
    }

    pub fn support_bounds(&self) -> SupportBounds {
        match *self {
            ShockSpec::Lognormal { .. } | ShockSpec::Gamma { .. } => SupportBounds {
                m: 0.0,
                big_m: f64::INFINITY,
            },
            ShockSpec::Pareto { k, .. } => SupportBounds {
                m: k,
                big_m: f64::INFINITY,
            },
            ShockSpec::Constant { a } => SupportBounds { m: a, big_m: a },
        }
    }

    /// A reusable sampler for `1/eps`.
    pub fn inverse_sampler(&self) -> InverseSampler {
        let kind = match *self {
            ShockSpec::Lognormal { mu, sigma2 } => SamplerKind::Lognormal {
                mu,
                sigma: sigma2.sqrt(),
            },
            ShockSpec::Pareto { beta, k } => SamplerKind::Pareto {
                inv_beta: 1.0 / beta,
                inv_k: 1.0 / k,
            },
            ShockSpec::Gamma { alpha, theta } => SamplerKind::Gamma(
                Gamma::new(alpha, 1.0 / theta).expect("validated gamma parameters"),
            ),
            ShockSpec::Constant { a } => SamplerKind::Constant(1.0 / a),
        };
        InverseSampler { kind }
    }
}

/// One draw of `1/eps` from `rng`.
pub fn sample_inverse<R: Rng + ?Sized>(spec: &ShockSpec, rng: &mut R) -> f64 {
    spec.inverse_sampler().sample(rng)
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Lognormal { mu: f64, sigma: f64 },
    Pareto { inv_beta: f64, inv_k: f64 },
    Gamma(Gamma<f64>),
    Constant(f64),
}

/// Draws `1/eps`. Consumes the stream the same way for every call, so a
/// replicate's draws are a pure function of its stream.
#[derive(Debug, Clone)]
pub struct InverseSampler {
    kind: SamplerKind,
}

impl Distribution<f64> for InverseSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (-(mu + sigma * z)).exp()
            }
            // 1/eps has density beta k^beta y^(beta-1) on (0, 1/k]: invert the cdf.
            SamplerKind::Pareto { inv_beta, inv_k } => {
                let u = 1.0 - rng.random::<f64>();
                inv_k * u.powf(*inv_beta)
            }
            SamplerKind::Gamma(g) => 1.0 / g.sample(rng),
            SamplerKind::Constant(w) => *w,
        }
    }
}

/// Chooses the member of `family` with `E eps^{-1} = gamma1` and
/// `E eps^{-2} = gamma2`.
pub fn match_inverse_moments(family: Family, gamma1: f64, gamma2: f64) -> Result<ShockSpec> {
    positive("gamma1", gamma1)?;
    positive("gamma2", gamma2)?;
    let t = gamma2 / (gamma1 * gamma1);
    if t <= 1.0 {
        return Err(Error::Infeasible(format!(
            "need gamma2 > gamma1^2, got gamma1={gamma1}, gamma2={gamma2}"
        )));
    }
    match family {
        Family::Lognormal => {
            let sigma2 = t.ln();
            ShockSpec::lognormal(sigma2 / 2.0 - gamma1.ln(), sigma2)
        }
        Family::Pareto => {
            let beta = (t / (t - 1.0)).sqrt() - 1.0;
            ShockSpec::pareto(beta, beta / (gamma1 * (beta + 1.0)))
        }
        Family::Gamma => {
            if t >= 2.0 {
                return Err(Error::Infeasible(format!(
                    "gamma family needs gamma2/gamma1^2 < 2, got {t}"
                )));
            }
            let alpha = (2.0 * t - 1.0) / (t - 1.0);
            ShockSpec::gamma(alpha, gamma1 * (alpha - 1.0))
        }
        Family::Constant => Err(Error::Infeasible(
            "a point mass has gamma2 = gamma1^2 exactly".to_string(),
        )),
    }
}

impl fmt::Display for ShockSpec {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            ShockSpec::Lognormal { mu, sigma2 } => {
                write!(f, "family=lognormal,mu={mu},sigma2={sigma2}")
            }
            ShockSpec::Pareto { beta, k } => write!(f, "family=pareto,beta={beta},k={k}"),
            ShockSpec::Gamma { alpha, theta } => {
                write!(f, "family=gamma,alpha={alpha},theta={theta}")
            }
            ShockSpec::Constant { a } => write!(f, "family=constant,a={a}"),
        }
    }
}

/// Parses the flat record written by `Display`, e.g.
/// `family=pareto,beta=0.1,k=0.9`. Separators may be commas or whitespace.
impl FromStr for ShockSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut family = None;
        let mut params: Vec<(String, f64)> = Vec::new();
        for field in s
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|f| !f.is_empty())
        {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {field:?}")))?;
            let key = key.trim().to_ascii_lowercase();
            if key == "family" {
                family = Some(value.parse::<Family>()?);
                continue;
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{key}: not a number: {value:?}")))?;
            params.push((key, v));
        }
        let family = family.ok_or_else(|| Error::Parse("missing family=...".to_string()))?;
        let expected: &[&str] = match family {
            Family::Lognormal => &["mu", "sigma2"],
            Family::Pareto => &["beta", "k"],
            Family::Gamma => &["alpha", "theta"],
            Family::Constant => &["a"],
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !expected.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unexpected key {k:?} for {family}")));
        }
        let get = |name: &str| {
            params
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Parse(format!("{family}: missing {name}")))
        };
        match family {
            Family::Lognormal => ShockSpec::lognormal(get("mu")?, get("sigma2")?),
            Family::Pareto => ShockSpec::pareto(get("beta")?, get("k")?),
            Family::Gamma => ShockSpec::gamma(get("alpha")?, get("theta")?),
            Family::Constant => ShockSpec::constant(get("a")?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn inverse_moment_examples() {
        let ln = ShockSpec::lognormal(3.17, 1.75).unwrap();
        assert!(close(ln.inverse_moment(3), 0.1971, 5e-3));

        let p = ShockSpec::pareto(0.1, 0.9).unwrap();
        assert!(close(p.inverse_moment(2), 0.1 / (0.81 * 2.1), 1e-15));
        assert!(close(p.inverse_moment(2), 0.0588, 5e-5));

        let c = ShockSpec::constant(2.0).unwrap();
        assert_eq!(c.inverse_moment(5), 0.03125);

        let g = ShockSpec::gamma(17.0, 13.3333).unwrap();
        assert!(close(g.inverse_moment(1), 13.3333 / 16.0, 1e-12));
        assert!(close(g.inverse_moment(1), 0.8333, 1e-4));
    }

    #[test]
    fn gamma_moments_blow_up_at_shape() {
        let g = ShockSpec::gamma(3.0, 2.0).unwrap();
        assert!(g.inverse_moment(2).is_finite());
        assert_eq!(g.inverse_moment(3), f64::INFINITY);
        assert_eq!(g.ln_inverse_moment(4), f64::INFINITY);
        // integer shape: theta^r / ((a-1)...(a-r))
        assert!(close(g.inverse_moment(2), 4.0 / 2.0, 1e-12));
    }

    #[test]
    fn expected_log_examples() {
        let p = ShockSpec::pareto(0.1, 0.9).unwrap();
        assert!(close(p.expected_log(), 0.9f64.ln() + 10.0, 1e-12));
        assert!(close(p.expected_log(), 9.8946, 1e-4));
        assert_eq!(
            ShockSpec::lognormal(3.17, 1.75).unwrap().expected_log(),
            3.17
        );
        assert_eq!(ShockSpec::constant(1.0).unwrap().expected_log(), 0.0);
    }

    /// Simpson's rule on [lo, hi] with n (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn expected_log_by_quadrature() {
        // Pareto: x = k e^t, t ~ Exp(beta).
        let (beta, k) = (0.1f64, 0.9f64);
        let q = simpson(
            |t| (k.ln() + t) * beta * (-beta * t).exp(),
            0.0,
            600.0,
            60_000,
        );
        let p = ShockSpec::pareto(beta, k).unwrap();
        assert!(close(q, p.expected_log(), 1e-8), "{q}");

        // Gamma: integrate ln x against the rate-parameterised density.
        for &(alpha, theta) in &[(17.0f64, 40.0f64 / 3.0), (2.5, 0.7), (0.9, 1.3)] {
            let norm = alpha * theta.ln() - ln_gamma(alpha);
            // work in y = ln x to tame the singularity at 0
            let f = |y: f64| y * (norm + alpha * y - theta * y.exp()).exp();
            let q = simpson(f, -60.0, 10.0, 200_000);
            let g = ShockSpec::gamma(alpha, theta).unwrap();
            assert!(
                close(q, g.expected_log(), 1e-9),
                "alpha={alpha}: {q} vs {}",
                g.expected_log()
            );
        }
    }

    #[test]
    fn support_examples() {
        let p = ShockSpec::pareto(0.1, 0.9).unwrap().support_bounds();
        assert_eq!((p.m, p.big_m), (0.9, f64::INFINITY));
        let l = ShockSpec::lognormal(0.0, 1.0).unwrap().support_bounds();
        assert_eq!((l.m, l.big_m), (0.0, f64::INFINITY));
        let c = ShockSpec::constant(2.0).unwrap().support_bounds();
        assert_eq!((c.m, c.big_m), (2.0, 2.0));
    }

    #[test]
    fn constant_draw_is_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = ShockSpec::constant(2.0).unwrap();
        for _ in 0..10 {
            assert_eq!(sample_inverse(&c, &mut rng), 0.5);
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let s = ShockSpec::lognormal(0.2146, 0.0645).unwrap();
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..5).map(|_| sample_inverse(&s, &mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let b: Vec<f64> = (0..5).map(|_| sample_inverse(&s, &mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn matching_examples() {
        let (g1, g2) = (0.8333, 0.7407);
        match match_inverse_moments(Family::Lognormal, g1, g2).unwrap() {
            ShockSpec::Lognormal { mu, sigma2 } => {
                assert!(close(mu, 0.2146, 5e-4), "{mu}");
                assert!(close(sigma2, 0.0645, 5e-4), "{sigma2}");
            }
            other => panic!("{other:?}"),
        }
        // exact moments of Pareto(3, 0.9): 5/6 and 20/27
        let exact = (5.0 / 6.0, 20.0 / 27.0);
        match match_inverse_moments(Family::Pareto, exact.0, exact.1).unwrap() {
            ShockSpec::Pareto { beta, k } => {
                assert!(close(beta, 3.0, 1e-9) && close(k, 0.9, 1e-9), "{beta} {k}");
            }
            other => panic!("{other:?}"),
        }
        match match_inverse_moments(Family::Gamma, exact.0, exact.1).unwrap() {
            ShockSpec::Gamma { alpha, theta } => {
                assert!(
                    close(alpha, 17.0, 1e-9) && close(theta, 13.3333, 1e-4),
                    "{alpha} {theta}"
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matching_rejects_infeasible() {
        assert!(matches!(
            match_inverse_moments(Family::Lognormal, 0.5, 0.25),
            Err(Error::Infeasible(_))
        ));
        // t = 2.5 is fine for lognormal and Pareto but not gamma
        assert!(match_inverse_moments(Family::Pareto, 0.2, 0.1).is_ok());
        assert!(matches!(
            match_inverse_moments(Family::Gamma, 0.2, 0.1),
            Err(Error::Infeasible(_))
        ));
        assert!(match_inverse_moments(Family::Constant, 0.5, 0.3).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ShockSpec::lognormal(1.0, 0.0).is_err());
        assert!(ShockSpec::pareto(-1.0, 0.9).is_err());
        assert!(ShockSpec::gamma(1.0, f64::NAN).is_err());
        assert!(ShockSpec::constant(0.0).is_err());
        assert!(ShockSpec::Lognormal {
            mu: f64::INFINITY,
            sigma2: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn flat_record_round_trip() {
        let s: ShockSpec = "family=pareto,beta=0.1,k=0.9".parse().unwrap();
        assert_eq!(s, ShockSpec::Pareto { beta: 0.1, k: 0.9 });
        assert_eq!(s.to_string().parse::<ShockSpec>().unwrap(), s);
        let g: ShockSpec = "family=gamma alpha=17 theta=13.3333".parse().unwrap();
        assert_eq!(
            g,
            ShockSpec::Gamma {
                alpha: 17.0,
                theta: 13.3333
            }
        );
        assert!("family=pareto,beta=0.1".parse::<ShockSpec>().is_err());
        assert!("family=pareto,beta=0.1,k=0.9,mu=1"
            .parse::<ShockSpec>()
            .is_err());
        assert!("beta=0.1,k=0.9".parse::<ShockSpec>().is_err());
        assert!("family=constant,a=-2".parse::<ShockSpec>().is_err());
    }

    #[test]
    fn json_form_is_flat() {
        let s = ShockSpec::lognormal(0.5, 0.25).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"family":"lognormal","mu":0.5,"sigma2":0.25}"#);
        assert_eq!(serde_json::from_str::<ShockSpec>(&j).unwrap(), s);
    }
}
