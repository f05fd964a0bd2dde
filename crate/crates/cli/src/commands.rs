use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use sustain_core::bounds::{BoundFlag, Horizon, OrderCap};
use sustain_core::io::{write_rows, write_samples, Metadata};
use sustain_core::moments::last_subunit_gamma;
use sustain_core::montecarlo::{sample_z, GENERATOR};
use sustain_core::reproduce::{
    self, DeltaReport, LognormalParams, ReproduceOptions, ReproducedTable,
};
use sustain_core::{
    boundary_table, classify, finite_moments, horizon_moments, infinite_moments, schedule,
    survival_lower_bound, ShockSpec,
};

pub const CLI_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Orders searched when locating the first infinite moment of `Z`.
const FIRST_INFINITE_SEARCH: u32 = 100_000;

/// JSON output: header metadata plus rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub metadata: Metadata,
    pub rows: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub spec_index: usize,
    pub spec: String,
    pub elog: f64,
    pub m: f64,
    #[serde(with = "sustain_core::ext")]
    pub big_m: f64,
    #[serde(with = "sustain_core::ext")]
    pub d1: f64,
    #[serde(with = "sustain_core::ext")]
    pub d2: f64,
    pub ruin_certain: bool,
    /// Ruin is certain for stocks below this.
    #[serde(with = "sustain_core::ext")]
    pub ruin_below_x: f64,
    /// Survival is certain for stocks above this.
    #[serde(with = "sustain_core::ext")]
    pub survival_above_x: f64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentOut {
    pub spec_index: usize,
    pub spec: String,
    pub n: String,
    pub r: u32,
    #[serde(with = "sustain_core::ext")]
    pub gamma_r: f64,
    #[serde(with = "sustain_core::ext")]
    pub beta_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOut {
    pub spec_index: usize,
    pub spec: String,
    pub n: String,
    pub x: f64,
    pub order: Option<u32>,
    pub max_order: u32,
    pub lower_bound: f64,
    #[serde(with = "sustain_core::ext")]
    pub ruin_upper_raw: f64,
    pub ruin_upper: f64,
    pub flag: BoundFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOut {
    pub spec_index: usize,
    pub spec: String,
    pub r: u32,
    pub n: String,
    #[serde(with = "sustain_core::ext")]
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOut {
    pub spec_index: usize,
    pub spec: String,
    pub x: f64,
    pub survival: f64,
    pub std_error: f64,
    pub max_terms_used: u32,
}

/// JSON form of a reproduced table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceDoc {
    pub metadata: Metadata,
    pub table: ReproducedTable,
    pub deltas: DeltaReport,
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn base_metadata(cfg: &ExperimentConfig, command: &str) -> Metadata {
    let specs: Vec<String> = cfg.specs.iter().map(|s| s.to_string()).collect();
    Metadata::new()
        .with("cli", format!("sustain-cli {CLI_VERSION}"))
        .with("command", command)
        .with("specs", specs.join(" ; "))
        .with("c", cfg.c)
}

fn sim_metadata(meta: Metadata, cfg: &ExperimentConfig) -> Result<Metadata, CliError> {
    Ok(meta
        .with("seed", cfg.sim.seed)
        .with("replicates", cfg.sim.replicates)
        .with("truncation", serde_json::to_string(&cfg.sim.truncation)?)
        .with("generator", GENERATOR))
}

fn emit<T: Serialize>(
    cfg: &ExperimentConfig,
    meta: Metadata,
    rows: Vec<T>,
) -> Result<(), CliError> {
    let mut w = open(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => write_rows(&mut w, &meta, &rows)?,
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut w,
                &Document {
                    metadata: meta,
                    rows,
                },
            )?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn summary(c: f64, regime: &sustain_core::Regime) -> String {
    let lo = c * regime.certain_ruin_multiplier;
    let hi = c * regime.certain_survival_multiplier;
    if regime.ruin_certain {
        "ruin certain (E log eps <= 0)".to_string()
    } else if regime.d1 == 0.0 && regime.d2.is_infinite() {
        "interior for all x>c".to_string()
    } else if regime.d2.is_infinite() {
        format!("zero for x<{lo}, interior above")
    } else if regime.d1 == 0.0 {
        format!("interior for c<x<{hi}, one for x>{hi}")
    } else if lo == hi {
        format!("zero for x<{lo}, one for x>{hi}")
    } else {
        format!("zero for x<{lo}, interior between, one for x>{hi}")
    }
}

pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.require_specs()?;
    let rows = cfg
        .specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let r = classify(spec);
            let (ruin_below_x, survival_above_x) = if r.ruin_certain {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (
                    cfg.c * r.certain_ruin_multiplier,
                    cfg.c * r.certain_survival_multiplier,
                )
            };
            ClassifyRow {
                spec_index: i,
                spec: spec.to_string(),
                elog: r.elog,
                m: r.m,
                big_m: r.big_m,
                d1: r.d1,
                d2: r.d2,
                ruin_certain: r.ruin_certain,
                ruin_below_x,
                survival_above_x,
                summary: summary(cfg.c, &r),
            }
        })
        .collect();
    emit(cfg, base_metadata(cfg, "classify"), rows)
}

/// First order at which `beta_r` of `Z` is infinite, as text.
fn first_infinite(spec: &ShockSpec) -> String {
    let k = last_subunit_gamma(spec, FIRST_INFINITE_SEARCH);
    if k < FIRST_INFINITE_SEARCH {
        (k + 1).to_string()
    } else {
        "none".to_string()
    }
}

pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.require_specs()?;
    let horizons = cfg.horizons_or(&[Horizon::Infinite]);
    let nmax = horizons
        .iter()
        .filter_map(|h| match h {
            Horizon::Finite(n) => Some(*n),
            Horizon::Infinite => None,
        })
        .max();
    let mut rows = Vec::new();
    for (i, spec) in cfg.specs.iter().enumerate() {
        let inf = if horizons.contains(&Horizon::Infinite) {
            Some(infinite_moments(spec, cfg.rmax)?)
        } else {
            None
        };
        let grid = nmax
            .map(|n| finite_moments(spec, cfg.rmax, n))
            .transpose()?;
        for r in 1..=cfg.rmax {
            for h in &horizons {
                let beta_r = match h {
                    Horizon::Finite(n) => {
                        grid.as_ref().expect("finite horizons present").beta(r, *n)
                    }
                    Horizon::Infinite => inf.as_ref().expect("infinite horizon present").beta(r),
                };
                rows.push(MomentOut {
                    spec_index: i,
                    spec: spec.to_string(),
                    n: h.to_string(),
                    r,
                    gamma_r: spec.inverse_moment(r),
                    beta_r,
                });
            }
        }
    }
    let fi: Vec<String> = cfg.specs.iter().map(first_infinite).collect();
    let meta = base_metadata(cfg, "moments")
        .with("rmax", cfg.rmax)
        .with("first_infinite", fi.join(";"));
    emit(cfg, meta, rows)
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.require_specs()?;
    cfg.require_xs()?;
    let horizons = cfg.horizons_or(&[Horizon::Infinite]);
    let mut rows = Vec::new();
    for (i, spec) in cfg.specs.iter().enumerate() {
        for h in &horizons {
            let m = horizon_moments(spec, *h, cfg.rmax, OrderCap::SubunitGamma)?;
            let sch = schedule(&m, cfg.c)?;
            for &x in &cfg.xs {
                let b = survival_lower_bound(&sch, x);
                rows.push(BoundOut {
                    spec_index: i,
                    spec: spec.to_string(),
                    n: h.to_string(),
                    x,
                    order: b.order,
                    max_order: sch.max_order,
                    lower_bound: b.survival,
                    ruin_upper_raw: b.ruin_raw,
                    ruin_upper: b.ruin,
                    flag: b.flag,
                });
            }
        }
    }
    let meta = base_metadata(cfg, "bounds")
        .with("rmax", cfg.rmax)
        .with("order_cap", "subunit_gamma");
    emit(cfg, meta, rows)
}

pub fn cmd_boundaries(cfg: &ExperimentConfig, rows_wanted: u32) -> Result<(), CliError> {
    cfg.require_specs()?;
    let horizons = cfg.horizons_or(&[
        Horizon::Finite(3),
        Horizon::Finite(5),
        Horizon::Finite(10),
        Horizon::Finite(20),
        Horizon::Infinite,
    ]);
    let mut rows = Vec::new();
    for (i, spec) in cfg.specs.iter().enumerate() {
        let t = boundary_table(spec, cfg.c, &horizons, rows_wanted)?;
        for r in 1..=rows_wanted {
            for (h, horizon) in horizons.iter().enumerate() {
                rows.push(BoundaryOut {
                    spec_index: i,
                    spec: spec.to_string(),
                    r,
                    n: horizon.to_string(),
                    boundary: t.get(r, h),
                });
            }
        }
    }
    emit(
        cfg,
        base_metadata(cfg, "boundaries").with("rows", rows_wanted),
        rows,
    )
}

/// `out` for a single spec, `out` with `-{index}` before the extension
/// otherwise.
fn indexed_path(out: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{index}"),
    };
    out.with_file_name(name)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.require_specs()?;
    let estimates = cfg
        .specs
        .iter()
        .map(|spec| sample_z(spec, &cfg.sim))
        .collect::<Result<Vec<_>, _>>()?;
    match cfg.format {
        Format::Csv => {
            for (i, est) in estimates.iter().enumerate() {
                let path = cfg
                    .out
                    .as_deref()
                    .map(|p| indexed_path(p, i, estimates.len()));
                let mut w = open(path.as_deref())?;
                write_samples(&mut w, est)?;
                w.flush()?;
            }
            Ok(())
        }
        Format::Json => {
            let mut rows = Vec::new();
            for (i, est) in estimates.iter().enumerate() {
                for &x in &cfg.xs {
                    rows.push(EstimateOut {
                        spec_index: i,
                        spec: est.spec.to_string(),
                        x,
                        survival: est.survival(x, cfg.c),
                        std_error: est.std_error(x, cfg.c),
                        max_terms_used: est.max_terms_used,
                    });
                }
            }
            emit(
                cfg,
                sim_metadata(base_metadata(cfg, "simulate"), cfg)?,
                rows,
            )
        }
    }
}

/// Companion delta file next to `out`: `table3.csv` gives `table3.deltas.json`.
pub fn deltas_path(out: &Path) -> PathBuf {
    out.with_extension("deltas.json")
}

pub fn cmd_reproduce(cfg: &ExperimentConfig, table: u8, rounded: bool) -> Result<(), CliError> {
    let opts = ReproduceOptions {
        seed: cfg.sim.seed,
        replicates: cfg.sim.replicates,
        params: if rounded {
            LognormalParams::Rounded
        } else {
            LognormalParams::Matched
        },
    };
    let t = reproduce::reproduce(table, &opts)?;
    let meta = t
        .metadata()
        .with("cli", format!("sustain-cli {CLI_VERSION}"))
        .with("lognormal_params", serde_json::to_string(&opts.params)?);
    let deltas = t.delta_report();
    eprintln!(
        "table {table}: max |delta| analytic {:.3e} (relative {:.3e}), monte carlo {:.4}",
        deltas.max_abs_delta_analytic,
        deltas.max_rel_delta_analytic,
        deltas.max_abs_delta_monte_carlo
    );
    match cfg.format {
        Format::Csv => {
            let mut w = open(cfg.out.as_deref())?;
            t.to_text_table().write_csv(&mut w, &meta)?;
            w.flush()?;
            if let Some(out) = &cfg.out {
                let p = deltas_path(out);
                let mut w = open(Some(&p))?;
                serde_json::to_writer_pretty(&mut w, &deltas)?;
                writeln!(w)?;
                w.flush()?;
            }
        }
        Format::Json => {
            let mut w = open(cfg.out.as_deref())?;
            serde_json::to_writer_pretty(
                &mut w,
                &ReproduceDoc {
                    metadata: meta,
                    table: t,
                    deltas,
                },
            )?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}
