//! Runs one configuration under several schemes and writes CSV reports.
//!
//! Layout of `<output>/<name>/`:
//!
//! * `config.toml`: the resolved configuration;
//! * `<scheme>_curve.csv`: `load_factor,control_value,reaction`;
//! * `<scheme>_stats.csv`: one row per accepted increment;
//! * `summary.csv`: totals per scheme and ratios against the staggered run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fescale_core::twoscale::{run, Scheme, SolveReport};

use crate::config::RunConfig;
use crate::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scheme}: {source}")]
    Solver {
        scheme: Scheme,
        #[source]
        source: fescale_core::twoscale::TwoScaleError,
    },
    #[error("{}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Result of one scheme.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub report: SolveReport,
    /// Committed equivalent plastic strain, per RVE and micro point.
    pub alpha_bar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: String,
    pub directory: PathBuf,
    pub runs: Vec<SchemeRun>,
}

impl SuiteOutcome {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.report.converged)
    }

    pub fn get(&self, scheme: Scheme) -> Option<&SchemeRun> {
        self.runs.iter().find(|r| r.report.scheme == scheme)
    }
}

/// Solves `config` once per scheme.
pub fn solve(config: &RunConfig) -> Result<Vec<SchemeRun>, SuiteError> {
    config
        .schemes
        .iter()
        .map(|&scheme| {
            let mut model = config.build_model()?;
            let report =
                run(&mut model, scheme, &config.settings).map_err(|source| SuiteError::Solver { scheme, source })?;
            Ok(SchemeRun {
                report,
                alpha_bar: model.committed_alpha_bar(),
            })
        })
        .collect()
}

/// Solves every scheme and writes the reports under `config.output`.
pub fn run_suite(config: &RunConfig) -> Result<SuiteOutcome, SuiteError> {
    let runs = solve(config)?;
    let directory = config.output.join(&config.name);
    write_reports(&directory, config, &runs)?;
    Ok(SuiteOutcome {
        name: config.name.clone(),
        directory,
        runs,
    })
}

fn write(path: PathBuf, text: &str) -> Result<(), SuiteError> {
    std::fs::write(&path, text).map_err(|source| SuiteError::Write { path, source })
}

pub fn write_reports(directory: &Path, config: &RunConfig, runs: &[SchemeRun]) -> Result<(), SuiteError> {
    std::fs::create_dir_all(directory).map_err(|source| SuiteError::Write {
        path: directory.to_path_buf(),
        source,
    })?;
    write(directory.join("config.toml"), &config.to_toml())?;
    for r in runs {
        let name = r.report.scheme.name();
        write(directory.join(format!("{name}_curve.csv")), &curve_csv(&r.report))?;
        write(directory.join(format!("{name}_stats.csv")), &stats_csv(&r.report))?;
    }
    write(directory.join("summary.csv"), &summary_csv(runs))
}

pub fn curve_csv(report: &SolveReport) -> String {
    let mut out = String::from("load_factor,control_value,reaction\n");
    for p in &report.curve {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            p.load_factor, p.control_value, p.reaction
        );
    }
    out
}

pub fn stats_csv(report: &SolveReport) -> String {
    let mut out = String::from("increment,dt,macro_iters,micro_iters_total,factorizations,wall_ms,cut_events\n");
    for r in &report.increments {
        let _ = writeln!(
            out,
            "{},{:.16e},{},{},{},{:.3},{}",
            r.index, r.dt, r.macro_iterations, r.micro_iterations, r.factorizations, r.wall_ms, r.cut_events
        );
    }
    out
}

/// Totals per scheme. Ratios are taken against the staggered run when one is
/// present and left empty otherwise.
pub fn summary_csv(runs: &[SchemeRun]) -> String {
    let mut out = String::from(
        "scheme,converged,increments,macro_iters,micro_iters_total,factorizations,wall_ms,cut_events,\
         factorization_ratio,micro_iter_ratio,wall_ratio\n",
    );
    let base = runs
        .iter()
        .find(|r| r.report.scheme == Scheme::Staggered)
        .map(|r| &r.report);
    let ratio = |a: f64, b: f64| {
        if b > 0.0 {
            format!("{:.6}", a / b)
        } else {
            String::new()
        }
    };
    for r in runs {
        let t = Totals::of(&r.report);
        let (fr, mr, wr) = match base {
            Some(b) => {
                let bt = Totals::of(b);
                (
                    ratio(t.factorizations as f64, bt.factorizations as f64),
                    ratio(t.micro as f64, bt.micro as f64),
                    ratio(t.wall_ms, bt.wall_ms),
                )
            }
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{},{fr},{mr},{wr}",
            r.report.scheme.name(),
            r.report.converged,
            r.report.increments.len(),
            t.macro_iters,
            t.micro,
            t.factorizations,
            t.wall_ms,
            t.cuts,
        );
    }
    out
}

/// Sums over the per-increment rows, so the summary always agrees with the
/// stats files.
struct Totals {
    macro_iters: usize,
    micro: usize,
    factorizations: usize,
    wall_ms: f64,
    cuts: usize,
}

impl Totals {
    fn of(report: &SolveReport) -> Self {
        let inc = &report.increments;
        Totals {
            macro_iters: inc.iter().map(|r| r.macro_iterations).sum(),
            micro: inc.iter().map(|r| r.micro_iterations).sum(),
            factorizations: inc.iter().map(|r| r.factorizations).sum(),
            wall_ms: inc.iter().map(|r| r.wall_ms).sum(),
            cuts: inc.iter().map(|r| r.cut_events).sum(),
        }
    }
}

/// Largest pointwise difference between two curves, relative to the largest
/// magnitude in `a`. `None` if the curves have different load factors.
pub fn curve_distance(a: &SolveReport, b: &SolveReport) -> Option<f64> {
    if a.curve.len() != b.curve.len() {
        return None;
    }
    let scale_c = a
        .curve
        .iter()
        .map(|p| p.control_value.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let scale_r = a
        .curve
        .iter()
        .map(|p| p.reaction.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (p, q) in a.curve.iter().zip(&b.curve) {
        if (p.load_factor - q.load_factor).abs() > 1e-12 {
            return None;
        }
        worst = worst
            .max((p.control_value - q.control_value).abs() / scale_c)
            .max((p.reaction - q.reaction).abs() / scale_r);
    }
    Some(worst)
}

/// Largest difference in committed plastic strain, relative to the largest
/// value in `a` (absolute if `a` stayed elastic).
pub fn alpha_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
