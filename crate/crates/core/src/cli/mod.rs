//! Configuration-driven runner behind the `spde-lab` binary.
//!
//! ```text
//! spde-lab <command> [--config run.toml] [--out path] [--format csv|json]
//!          [--seed u64] [--threads n|auto] [section.key=value ...]
//! ```
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 a failed
//! `oracle-check` or `perturbation-check`, 4 file I/O failure.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

pub use config::{parse_threads, Format, ModelKind, Quantity, RunConfig};
pub use report::{
    emit_report, OracleReport, OracleRow, PathReport, PerturbationReport, PerturbationRow,
};

use crate::error::{Error, Result};
use crate::experiments::{
    functional, lower_bound_sweep, perturbation_check, run_indexed, strong_rate_report, weak_lower_bound_sweep,
    weak_rate_report, McConfig, Threads,
};
use crate::models::ModelSpec;
use crate::noise::{derive_seed, NoiseBundle};
use crate::oracles::{exp_functional, expected_sq_norm, ModeVariances, VarianceSource};
use crate::schemes::{simulate_path_with, LinearAdditiveSampler};
use crate::spectral::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// One path at the finest `grid.N`.
    Simulate,
    /// Coupled weak errors and their fitted order.
    WeakRate,
    /// Coupled strong errors and their fitted order.
    StrongRate,
    /// Exact Gaussian gaps against their explicit lower bounds.
    LowerBound,
    /// Monte Carlo moments of the linear additive model against closed forms.
    OracleCheck,
    /// Sensitivity of paths to the initial value.
    PerturbationCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::WeakRate => "weak-rate",
            Command::StrongRate => "strong-rate",
            Command::LowerBound => "lower-bound",
            Command::OracleCheck => "oracle-check",
            Command::PerturbationCheck => "perturbation-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spde-lab", version, about = "Euler-type schemes for stochastic evolution equations")]
pub struct Cli {
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path (overrides `output.path`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Run seed (overrides `mc.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker count or `auto`; falls back to SPDE_LAB_THREADS.
    #[arg(long)]
    pub threads: Option<String>,
    /// Dotted overrides such as `mc.samples=100000`.
    pub overrides: Vec<String>,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub path: PathBuf,
    pub summary: String,
    /// `false` only for a failed acceptance check.
    pub pass: bool,
}

/// Load, override and resolve the configuration described by `cli`.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("mc.seed={s}"));
    }
    if let Some(f) = cli.format {
        overrides.push(format!("output.format=\"{}\"", f.extension()));
    }
    if let Some(p) = &cli.out {
        overrides.push(format!("output.path={}", toml::Value::String(p.display().to_string())));
    }
    RunConfig::load(cli.config.as_deref(), &overrides)?.resolve(cli.command)
}

/// Run `cmd` with a resolved configuration and write its report.
pub fn execute(cmd: Command, cfg: &RunConfig, threads: Threads) -> Result<Outcome> {
    let path = PathBuf::from(cfg.output.path.clone().unwrap_or_else(|| format!("{}.csv", cmd.name())));
    let format = cfg.format();
    let echo = cfg.echo();
    let mc = McConfig::new(cfg.samples(), cfg.mc.seed).with_threads(threads);
    match cmd {
        Command::Simulate => simulate(cfg, &path, echo),
        Command::WeakRate | Command::StrongRate => {
            let model = cfg.build_model()?;
            let report = if cmd == Command::WeakRate {
                let phi = functional(cfg.functional())?;
                weak_rate_report(&model, cfg.scheme(), &phi, &cfg.grid.n, cfg.grid.n_ref, &mc)?
            } else {
                strong_rate_report(&model, cfg.scheme(), &cfg.grid.n, cfg.grid.n_ref, &mc)?
            }
            .with_config(echo);
            emit_report(&report, format, &path)?;
            let mut summary = format!("{}: fitted order {}\n", cmd.name(), report::fmt_opt_short(report.fitted_order));
            for p in &report.points {
                summary += &format!("  N={:<6} estimate={:.6e} se={:.2e}\n", p.n, p.estimate, p.std_error);
            }
            for w in &report.warnings {
                summary += &format!("  warning: {w}\n");
            }
            Ok(Outcome { path, summary, pass: true })
        }
        Command::LowerBound => {
            let m = &cfg.model;
            let sweep = match cfg.lower_bound.quantity {
                Quantity::VarianceGap => lower_bound_sweep,
                Quantity::WeakGap => weak_lower_bound_sweep,
            };
            let mut report = sweep(m.c, m.rho, m.delta, cfg.grid.t_end, cfg.modes(), &cfg.grid.h, cfg.scheme())?;
            report.config = echo;
            report::write_report(&path, format, &report, report::lower_bound_csv)?;
            let mut summary = format!(
                "lower-bound ({}): fitted order {}, bound holds at every h: {}\n",
                report.quantity,
                report::fmt_opt_short(report.fitted_order),
                report.bound_holds
            );
            for w in &report.warnings {
                summary += &format!("  warning: {w}\n");
            }
            Ok(Outcome { path, summary, pass: true })
        }
        Command::OracleCheck => {
            let model = cfg.build_model()?;
            let report = oracle_check(&model, &cfg.grid.n, &mc, echo)?;
            report::write_report(&path, format, &report, report::oracle_csv)?;
            let failed = report.rows.iter().filter(|r| !r.pass).count();
            let summary = format!(
                "oracle-check: {} of {} comparisons within 3 standard errors: {}\n",
                report.rows.len() - failed,
                report.rows.len(),
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(Outcome { path, summary, pass: report.pass })
        }
        Command::PerturbationCheck => {
            let model = cfg.build_model()?;
            let p = &cfg.perturbation;
            let xi_a = model.initial().clone();
            let mut rows = Vec::new();
            for seed in cfg.mc.seed..cfg.mc.seed + p.seeds {
                for &d in &p.distances {
                    let mut xi_b = xi_a.clone();
                    xi_b[0] -= d;
                    let run = McConfig { seed, ..mc };
                    let o = perturbation_check(&model, cfg.scheme(), p.n, &run, &xi_a, &xi_b)?;
                    rows.push(PerturbationRow {
                        seed,
                        distance: d,
                        n: p.n,
                        lhs: o.lhs,
                        lhs_std_error: o.lhs_std_error,
                        rhs: o.rhs,
                        margin: o.margin,
                        pass: o.pass,
                    });
                }
            }
            let pass = rows.iter().all(|r| r.pass);
            let report = PerturbationReport { rows, pass, config: echo };
            report::write_report(&path, format, &report, report::perturbation_csv)?;
            let min_margin = report.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
            let summary = format!(
                "perturbation-check: {} runs, smallest margin {min_margin:.4e}: {}\n",
                report.rows.len(),
                if pass { "PASS" } else { "FAIL" }
            );
            Ok(Outcome { path, summary, pass })
        }
    }
}

fn simulate(cfg: &RunConfig, path: &Path, echo: std::collections::BTreeMap<String, String>) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let bundle = match &cfg.simulate.noise_in {
        Some(p) => NoiseBundle::read_from(std::io::BufReader::new(std::fs::File::open(p)?))?,
        None => {
            let n = *cfg.grid.n.iter().max().expect("validated nonempty");
            NoiseBundle::sample(model.modes(), n, cfg.grid.t_end, cfg.mc.seed)?
        }
    };
    if let Some(p) = &cfg.simulate.noise_out {
        bundle.write_to(std::io::BufWriter::new(std::fs::File::create(p)?))?;
    }
    let out = simulate_path_with(&model, cfg.scheme(), &bundle, true)?;
    let states: Vec<Vec<f64>> = out.path.unwrap_or_default().into_iter().map(|s| s.into_inner()).collect();
    let h = bundle.h();
    let report = PathReport {
        n: bundle.steps(),
        h,
        seed: bundle.seed(),
        times: (0..states.len()).map(|k| k as f64 * h).collect(),
        states,
        config: echo,
    };
    report::write_report(path, cfg.format(), &report, report::path_csv)?;
    let summary = format!(
        "simulate: {} steps of {}, terminal norm {:.6e}\n",
        report.n,
        cfg.scheme(),
        out.terminal.norm()
    );
    Ok(Outcome {
        path: path.to_path_buf(),
        summary,
        pass: true,
    })
}

/// Compare sample means of `||.||^2` and `exp(-||.||^2)` for the exact solution and
/// both Euler schemes against their closed forms at every `N`.
pub fn oracle_check(
    model: &ModelSpec,
    ns: &[usize],
    mc: &McConfig,
    config: std::collections::BTreeMap<String, String>,
) -> Result<OracleReport> {
    if mc.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", mc.samples)));
    }
    if model.initial().iter().any(|x| *x != 0.0) {
        return Err(Error::InvalidArgument("closed forms assume a zero initial state".into()));
    }
    let crate::models::Diffusion::AdditiveDiagonal { mu } = model.diffusion() else {
        return Err(Error::InvalidArgument("oracle-check needs additive diagonal noise".into()));
    };
    let eig = model.operator().eigenvalues();
    let t = model.t_end();
    let mut rows = Vec::new();
    for &n in ns {
        let grid = TimeGrid::new(t, n)?;
        let h = grid.h();
        let sampler = LinearAdditiveSampler::new(model, &grid)?;
        let draws = run_indexed(mc.samples, mc.threads, |s| {
            let x = sampler.sample(derive_seed(mc.seed, s as u64));
            let q = [x.exact.sq_norm(), x.exp_euler.sq_norm(), x.implicit_euler.sq_norm()];
            Ok([q[0], q[1], q[2], (-q[0]).exp(), (-q[1]).exp(), (-q[2]).exp()])
        })?;
        let sources = [VarianceSource::ExactX, VarianceSource::ExpEulerY1, VarianceSource::ImplEulerY2];
        let labels = ["exact", "exp_euler", "implicit_euler"];
        for (j, (src, label)) in sources.iter().zip(labels).enumerate() {
            let v = ModeVariances::for_model(eig, mu, t, h, *src)?;
            for (k, (name, exact)) in [("sq_norm", expected_sq_norm(&v)), ("exp_neg_sq_norm", exp_functional(&v))]
                .into_iter()
                .enumerate()
            {
                let col = 3 * k + j;
                let cnt = draws.len() as f64;
                let mean = draws.iter().map(|d| d[col]).sum::<f64>() / cnt;
                let var = draws.iter().map(|d| (d[col] - mean).powi(2)).sum::<f64>() / (cnt - 1.0);
                let se = (var / cnt).sqrt();
                rows.push(OracleRow {
                    n,
                    quantity: format!("{name}({label})"),
                    estimate: mean,
                    std_error: se,
                    exact,
                    pass: (mean - exact).abs() <= 3.0 * se,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(OracleReport {
        rows,
        pass,
        seed: mc.seed,
        config,
    })
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 4,
        _ => 2,
    }
}

/// Parse arguments, run, print the summary and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = parse_threads(cli.threads.as_deref())
        .and_then(|threads| resolve_config(&cli).map(|cfg| (cfg, threads)))
        .and_then(|(cfg, threads)| execute(cli.command, &cfg, threads));
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            println!("report written to {}", out.path.display());
            ExitCode::from(if out.pass { 0 } else { 3 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
