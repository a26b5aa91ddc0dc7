//! Subcommand bodies. Each returns a short human summary for stdout.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use vbip_core::data::{self, Dataset};
use vbip_core::mcmc::{fit_mcmc, ChainResult, ChainSpec};
use vbip_core::metrics::coverage;
use vbip_core::model::FitResult;
use vbip_core::Problem;

use crate::compare::{compare, Posterior};
use crate::config::{Command, Method, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{self, format_f64, KeyValues, RunInfo};
use crate::study::{run_study, StudySpec};

pub fn run(cfg: &RunConfig) -> Result<String> {
    match cfg.command {
        Command::Generate => generate(cfg),
        Command::Fit => fit(cfg),
        Command::Compare => compare_cmd(cfg),
        Command::ReplicateStudy => study(cfg),
    }
}

fn write_config_echo(cfg: &RunConfig, dir: &Path) -> Result<()> {
    cfg.echo().write(&dir.join("config.txt"))
}

pub fn generate(cfg: &RunConfig) -> Result<String> {
    let mut ds = if cfg.dim == 1 {
        if matches!(cfg.truncation, Some(Some(_))) {
            return Err(CliError::usage("truncation applies to 2-D datasets only"));
        }
        data::simulate1d(cfg.m.expect("validated"), cfg.delta, cfg.sigma, cfg.seed)?
    } else {
        let truth = match &cfg.image {
            Some(path) => io::read_matrix_csv(path)?,
            None => data::phantom(cfg.m1.expect("validated"), cfg.m2.expect("validated"))?,
        };
        if let (Some(m1), Some(m2)) = (cfg.m1, cfg.m2) {
            if (truth.rows(), truth.cols()) != (m1, m2) {
                return Err(CliError::usage(format!(
                    "image is {}x{} but m1 x m2 = {m1}x{m2}",
                    truth.rows(),
                    truth.cols()
                )));
            }
        }
        data::simulate2d(&truth, cfg.delta, cfg.sigma, cfg.truncation.flatten(), cfg.seed)?
    };
    ds.meta.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let dir = cfg.output_dir();
    io::write_dataset(dir, &ds, cfg.force)?;
    let shape = ds.shape;
    io::write_pgm(&data::unvec_image(&ds.y, shape)?, &dir.join("y.pgm"), None)?;
    if let Some(t) = &ds.truth {
        io::write_pgm(&data::unvec_image(t, shape)?, &dir.join("truth.pgm"), None)?;
    }
    write_config_echo(cfg, dir)?;
    Ok(format!(
        "wrote {}x{} dataset (delta={}, sigma={}, seed={}) to {}\n",
        shape.m1,
        shape.m2,
        cfg.delta,
        cfg.sigma,
        cfg.seed,
        dir.display()
    ))
}

/// Problem for a dataset, with the kernel truncation optionally overridden.
pub fn problem_for(ds: &Dataset, truncation: Option<Option<usize>>) -> Result<Problem> {
    let mut spec = ds.kernel;
    if let Some(t) = truncation {
        spec.truncation = t;
    }
    let k = spec.build(ds.shape)?;
    Ok(Problem::new(ds.y.clone(), k, ds.shape)?)
}

pub fn run_variational(cfg: &RunConfig, problem: &Problem) -> Result<FitResult> {
    let opts = cfg.fit_options(problem)?;
    Ok(match cfg.method {
        Method::Vmp => vbip_core::vmp::run_vmp(problem, &cfg.penalty, &cfg.hyper, &opts)?,
        _ => vbip_core::mfvb::fit_mfvb(problem, &cfg.penalty, &cfg.hyper, &opts)?,
    })
}

pub fn run_chain(cfg: &RunConfig, problem: &Problem) -> Result<ChainResult> {
    let spec = ChainSpec { warmup: cfg.warmup, kept: cfg.kept, thin: cfg.thin, seed: cfg.seed, ..ChainSpec::default() };
    Ok(fit_mcmc(problem, &cfg.penalty, &cfg.hyper, &spec)?)
}

pub fn fit(cfg: &RunConfig) -> Result<String> {
    let input = cfg.input.as_deref().expect("validated");
    let ds = io::read_dataset(input)?;
    let problem = problem_for(&ds, cfg.truncation)?;
    let dir = cfg.output_dir();
    let mut extra = KeyValues::new();
    extra.push("penalty", cfg.penalty.family.name());
    extra.push("penalty_lambda", cfg.penalty.lambda);
    extra.push("truncation", io::format_truncation(cfg.truncation.unwrap_or(ds.kernel.truncation)));
    extra.push("input", input.display());
    let mut out = String::new();
    if cfg.method == Method::Mcmc {
        let t0 = Instant::now();
        let chain = run_chain(cfg, &problem)?;
        let wall = t0.elapsed().as_secs_f64();
        extra.push("seed", cfg.seed);
        extra.push("warmup", cfg.warmup);
        extra.push("thin", cfg.thin);
        if let Some(t) = &ds.truth {
            extra.push_f64("coverage_x", coverage(t, &chain.x_intervals(cfg.level))?);
        }
        let info = RunInfo { method: "mcmc".into(), shape: ds.shape, wall_time_s: wall, extra };
        io::write_chain(dir, &chain, &info, cfg.force)?;
        let a = chain.acceptance;
        let _ = writeln!(
            out,
            "mcmc: {} kept draws in {:.3} s; acceptance x={:.3} scales={:.3} b={:.3}",
            chain.kept(),
            wall,
            a.x,
            a.scales,
            a.b
        );
    } else {
        let t0 = Instant::now();
        let fit = run_variational(cfg, &problem)?;
        let wall = t0.elapsed().as_secs_f64();
        extra.push_f64("tol", cfg.tol);
        extra.push("init", if cfg.init == crate::config::InitKind::Data { "data" } else { "unit" });
        if let Some(t) = &ds.truth {
            extra.push_f64("coverage_x", coverage(t, &fit.credible_intervals(cfg.level)?)?);
        }
        let info = RunInfo { method: cfg.method.name().into(), shape: ds.shape, wall_time_s: wall, extra };
        io::write_fit(dir, &fit, &info, cfg.force)?;
        if !fit.converged {
            eprintln!("warning: stopped at the iteration cap ({}) before converging", fit.iterations);
        }
        let _ = writeln!(
            out,
            "{}: {} iterations in {:.3} s (converged: {}); E(1/sigma2_eps)={}",
            cfg.method.name(),
            fit.iterations,
            wall,
            fit.converged,
            format_f64(fit.sig_eps.mean_reciprocal())
        );
    }
    write_config_echo(cfg, dir)?;
    let _ = writeln!(out, "wrote {}", dir.display());
    Ok(out)
}

/// A fit or chain bundle read back from disk.
pub enum Loaded {
    Fit(FitResult, RunInfo),
    Chain(ChainResult, RunInfo),
}

impl Loaded {
    pub fn read(dir: &Path) -> Result<Self> {
        let sp = dir.join("summary.txt");
        let kv = KeyValues::read(&sp)?;
        if kv.require("method", &sp)? == "mcmc" {
            let (c, i) = io::read_chain(dir)?;
            Ok(Loaded::Chain(c, i))
        } else {
            let (f, i) = io::read_fit(dir)?;
            Ok(Loaded::Fit(f, i))
        }
    }

    pub fn posterior(&self) -> Posterior<'_> {
        match self {
            Loaded::Fit(f, _) => Posterior::Variational(f),
            Loaded::Chain(c, _) => Posterior::Chain(c),
        }
    }

    pub fn info(&self) -> &RunInfo {
        match self {
            Loaded::Fit(_, i) | Loaded::Chain(_, i) => i,
        }
    }
}

pub fn compare_cmd(cfg: &RunConfig) -> Result<String> {
    let a = Loaded::read(cfg.fit_a.as_deref().expect("validated"))?;
    let b = Loaded::read(cfg.fit_b.as_deref().expect("validated"))?;
    if a.info().shape != b.info().shape {
        return Err(CliError::usage("the two fits are on different grids"));
    }
    let truth = match &cfg.input {
        Some(dir) => io::read_dataset(dir)?.truth,
        None => None,
    };
    let cmp = compare(&a.posterior(), &b.posterior(), truth.as_deref(), cfg.level)?;
    let dir = cfg.output_dir();
    io::prepare_output_dir(dir, cfg.force)?;
    io::write_vector_csv(&cmp.accuracy_x, &dir.join("accuracy_x.csv"))?;

    let (acc_mean, acc_sd) = cmp.mean_accuracy_x();
    let mut rows: Vec<(&str, f64, Option<f64>)> = vec![("accuracy_x", acc_mean, acc_sd)];
    rows.push(("accuracy_sigma2_eps", cmp.accuracy_sigma2_eps, None));
    if let Some(v) = cmp.accuracy_sigma2_x {
        rows.push(("accuracy_sigma2_x", v, None));
    }
    if let (Some(ca), Some(cb)) = (cmp.coverage_a, cmp.coverage_b) {
        rows.push(("coverage_a", ca, None));
        rows.push(("coverage_b", cb, None));
    }
    rows.push(("time_a_s", a.info().wall_time_s, None));
    rows.push(("time_b_s", b.info().wall_time_s, None));

    let mut csv = String::from("metric,mean,sd\n");
    let mut table = format!("{:<22}{:>20}\n", "", format!("{} vs {}", a.info().method, b.info().method));
    let mut kv = KeyValues::new();
    kv.push("method_a", &a.info().method);
    kv.push("method_b", &b.info().method);
    for (name, mean, sd) in &rows {
        let _ = writeln!(csv, "{name},{mean:.6},{}", sd.map_or(String::new(), |s| format!("{s:.6}")));
        let cell = match sd {
            Some(s) => format!("{mean:.2} ({s:.2})"),
            None => format!("{mean:.2}"),
        };
        let _ = writeln!(table, "{name:<22}{cell:>20}");
        kv.push_f64(name, *mean);
        if let Some(s) = sd {
            kv.push_f64(&format!("{name}_sd"), *s);
        }
    }
    kv.push_f64("accuracy_x_min", cmp.accuracy_x.iter().cloned().fold(f64::INFINITY, f64::min));
    let put = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::Io { path: p, source: e })
    };
    put("comparison.csv", &csv)?;
    put("report.txt", &table)?;
    kv.write(&dir.join("summary.txt"))?;
    write_config_echo(cfg, dir)?;
    Ok(table)
}

pub fn study(cfg: &RunConfig) -> Result<String> {
    let spec = StudySpec::from_config(cfg)?;
    let report = run_study(&spec)?;
    let dir = cfg.output_dir();
    report.write(dir, cfg.force)?;
    write_config_echo(cfg, dir)?;
    if report.outcomes.is_empty() {
        return Err(CliError::Numeric(vbip_core::Error::Numerical("every replicate failed; see manifest.txt")));
    }
    for f in &report.failures {
        eprintln!("warning: replicate {} (seed {}) failed: {}", f.index, f.data_seed, f.error);
    }
    Ok(report.text_table())
}
