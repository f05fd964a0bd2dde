//! Experiment configuration: an optional TOML file, overridden by flags.
//!
//! ```toml
//! c = 1.0
//! x = [3.5, 7.5, 9.5]
//! horizons = [3, 5, "inf"]
//! rmax = 20
//! seed = 7
//! replicates = 3000
//! truncation = "adaptive"   # or a term count, e.g. 500
//! format = "csv"
//! out = "bounds.csv"
//!
//! [[spec]]
//! family = "pareto"
//! beta = 3.0
//! k = 0.9
//! ```

use crate::error::CliError;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use sustain_core::montecarlo::{Truncation, DEFAULT_REPLICATES};
use sustain_core::{Horizon, ShockSpec, SimConfig};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_RMAX: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A horizon or truncation written either as a number or as text.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumOrText {
    Num(u32),
    Text(String),
}

impl NumOrText {
    fn text(&self) -> String {
        match self {
            NumOrText::Num(n) => n.to_string(),
            NumOrText::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub spec: Vec<ShockSpec>,
    pub c: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub horizons: Option<Vec<NumOrText>>,
    pub rmax: Option<u32>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub truncation: Option<NumOrText>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Flag values; `None` defers to the file, then to the default.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML experiment file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Shock law as a flat record, e.g. family=pareto,beta=3,k=0.9 (repeatable)
    #[arg(long = "spec", global = true)]
    pub specs: Vec<String>,
    /// Consumption level
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Initial stock; repeatable or comma separated
    #[arg(long = "x", global = true, value_delimiter = ',')]
    pub xs: Vec<f64>,
    /// Horizon n or inf; repeatable or comma separated
    #[arg(long = "horizon", global = true, value_delimiter = ',')]
    pub horizons: Vec<String>,
    #[arg(long, global = true)]
    pub rmax: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Number of terms, or "adaptive"
    #[arg(long, global = true)]
    pub truncation: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub specs: Vec<ShockSpec>,
    pub c: f64,
    /// Ascending, deduplicated.
    pub xs: Vec<f64>,
    /// Ascending with `inf` last; empty means the command's default.
    pub horizons: Vec<Horizon>,
    pub rmax: u32,
    pub sim: SimConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn parse_horizon(s: &str) -> Result<Horizon, CliError> {
    Horizon::from_str(s).map_err(|e| CliError::Config(format!("horizons: {e}")))
}

fn parse_truncation(s: &str) -> Result<Truncation, CliError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("adaptive") {
        return Ok(Truncation::adaptive());
    }
    match s.parse::<u32>() {
        Ok(n) if n >= 1 => Ok(Truncation::Fixed { n }),
        _ => Err(CliError::Config(format!(
            "truncation must be a positive term count or \"adaptive\", got {s:?}"
        ))),
    }
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(file, args)
    }

    pub fn merge(file: FileConfig, args: &CommonArgs) -> Result<Self, CliError> {
        let specs = if args.specs.is_empty() {
            file.spec
        } else {
            args.specs
                .iter()
                .map(|s| {
                    ShockSpec::from_str(s).map_err(|e| CliError::Config(format!("--spec: {e}")))
                })
                .collect::<Result<_, _>>()?
        };
        for (i, s) in specs.iter().enumerate() {
            s.validate()
                .map_err(|e| CliError::Config(format!("spec[{i}]: {e}")))?;
        }

        let c = args.c.or(file.c).unwrap_or(1.0);
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Config(format!(
                "c must be positive and finite, got {c}"
            )));
        }

        let mut xs = if args.xs.is_empty() {
            file.x.unwrap_or_default()
        } else {
            args.xs.clone()
        };
        if let Some(bad) = xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(CliError::Config(format!(
                "x values must be positive and finite, got {bad}"
            )));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();

        let horizon_text: Vec<String> = if args.horizons.is_empty() {
            file.horizons
                .unwrap_or_default()
                .iter()
                .map(NumOrText::text)
                .collect()
        } else {
            args.horizons.clone()
        };
        let mut horizons = horizon_text
            .iter()
            .map(|s| parse_horizon(s))
            .collect::<Result<Vec<_>, _>>()?;
        horizons.sort();
        horizons.dedup();

        let rmax = args.rmax.or(file.rmax).unwrap_or(DEFAULT_RMAX);
        if rmax == 0 {
            return Err(CliError::Config("rmax must be >= 1".into()));
        }

        let truncation = match (&args.truncation, &file.truncation) {
            (Some(s), _) => parse_truncation(s)?,
            (None, Some(t)) => parse_truncation(&t.text())?,
            (None, None) => Truncation::adaptive(),
        };
        let replicates = args
            .replicates
            .or(file.replicates)
            .unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return Err(CliError::Config("replicates must be >= 1".into()));
        }
        let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);

        Ok(ExperimentConfig {
            specs,
            c,
            xs,
            horizons,
            rmax,
            sim: SimConfig {
                replicates,
                truncation,
                seed,
            },
            format: args.format.or(file.format).unwrap_or_default(),
            out: args.out.clone().or(file.out),
        })
    }

    pub fn require_specs(&self) -> Result<(), CliError> {
        if self.specs.is_empty() {
            return Err(CliError::Config(
                "no shock law given (use --spec or [[spec]])".into(),
            ));
        }
        Ok(())
    }

    pub fn require_xs(&self) -> Result<(), CliError> {
        if self.xs.is_empty() {
            return Err(CliError::Config(
                "no initial stock given (use --x or x = [...])".into(),
            ));
        }
        Ok(())
    }

    pub fn horizons_or(&self, default: &[Horizon]) -> Vec<Horizon> {
        if self.horizons.is_empty() {
            default.to_vec()
        } else {
            self.horizons.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
c = 2.0
x = [9.5, 3.5, 3.5]
horizons = ["inf", 5, 3]
seed = 11
truncation = 40

[[spec]]
family = "pareto"
beta = 3.0
k = 0.9

[[spec]]
family = "constant"
a = 2
"#;

    #[test]
    fn file_values_are_normalised() {
        let cfg = ExperimentConfig::merge(FileConfig::parse(FILE).unwrap(), &CommonArgs::default())
            .unwrap();
        assert_eq!(cfg.specs.len(), 2);
        assert_eq!(cfg.specs[1], ShockSpec::Constant { a: 2.0 });
        assert_eq!(cfg.xs, vec![3.5, 9.5]);
        assert_eq!(
            cfg.horizons,
            vec![Horizon::Finite(3), Horizon::Finite(5), Horizon::Infinite]
        );
        assert_eq!(cfg.sim.truncation, Truncation::Fixed { n: 40 });
        assert_eq!(cfg.sim.seed, 11);
        assert_eq!(cfg.rmax, DEFAULT_RMAX);
    }

    #[test]
    fn flags_override_the_file() {
        let args = CommonArgs {
            specs: vec!["family=lognormal,mu=0.2,sigma2=0.06".into()],
            c: Some(1.0),
            seed: Some(3),
            truncation: Some("adaptive".into()),
            ..CommonArgs::default()
        };
        let cfg = ExperimentConfig::merge(FileConfig::parse(FILE).unwrap(), &args).unwrap();
        assert_eq!(
            cfg.specs,
            vec![ShockSpec::Lognormal {
                mu: 0.2,
                sigma2: 0.06
            }]
        );
        assert_eq!(cfg.c, 1.0);
        assert_eq!(cfg.sim.seed, 3);
        assert_eq!(cfg.sim.truncation, Truncation::adaptive());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = FileConfig::parse("c = 1.0\nreplicatse = 5\n").unwrap_err();
        assert!(e.to_string().contains("replicatse"), "{e}");
        let e = FileConfig::parse("c = \"one\"\n").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");

        let bad = FileConfig::parse("[[spec]]\nfamily = \"pareto\"\nbeta = -1\nk = 1\n").unwrap();
        let e = ExperimentConfig::merge(bad, &CommonArgs::default()).unwrap_err();
        assert!(e.to_string().contains("spec[0]"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            CommonArgs {
                c: Some(0.0),
                ..CommonArgs::default()
            },
            CommonArgs {
                xs: vec![-1.0],
                ..CommonArgs::default()
            },
            CommonArgs {
                horizons: vec!["0".into()],
                ..CommonArgs::default()
            },
            CommonArgs {
                truncation: Some("forever".into()),
                ..CommonArgs::default()
            },
            CommonArgs {
                specs: vec!["family=weibull,k=1".into()],
                ..CommonArgs::default()
            },
        ] {
            assert!(
                ExperimentConfig::merge(FileConfig::default(), &args).is_err(),
                "{args:?}"
            );
        }
    }
}
