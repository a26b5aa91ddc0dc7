//! Replicate study: simulate, fit variationally at several truncations,
//! run a reference chain, score, and aggregate over replicates.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use vbip_core::data::{phantom, simulate2d};
use vbip_core::kernels::KernelSpec;
use vbip_core::mcmc::{fit_mcmc, ChainSpec};
use vbip_core::metrics::mean_sd;
use vbip_core::model::{Convergence, FitOptions, FitResult, MfvbInit};
use vbip_core::{Matrix, ModelHyperparams, PenaltySpec, Problem};

use crate::compare::{compare, Posterior};
use crate::config::{InitKind, Method, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{format_truncation, prepare_output_dir, KeyValues};

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub m1: usize,
    pub m2: usize,
    pub delta: f64,
    pub sigma_eps: f64,
    pub replicates: usize,
    pub seed: u64,
    pub truncations: Vec<Option<usize>>,
    pub method: Method,
    pub penalty: PenaltySpec,
    pub hyper: ModelHyperparams,
    pub tol: f64,
    pub max_iter: usize,
    pub convergence: Convergence,
    pub init: InitKind,
    pub warmup: usize,
    pub kept: usize,
    pub thin: usize,
    pub level: f64,
    pub jobs: usize,
    pub timing_repeats: usize,
}

impl StudySpec {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        if cfg.method == Method::Mcmc {
            return Err(CliError::usage("replicate-study compares a variational method (mfvb or vmp) against MCMC"));
        }
        Ok(Self {
            m1: cfg.m1.unwrap_or(12),
            m2: cfg.m2.unwrap_or(12),
            delta: cfg.delta,
            sigma_eps: cfg.sigma,
            replicates: cfg.replicates,
            seed: cfg.seed,
            truncations: cfg.truncations.clone(),
            method: cfg.method,
            penalty: cfg.penalty,
            hyper: cfg.hyper,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            convergence: cfg.convergence,
            init: cfg.init,
            warmup: cfg.warmup,
            kept: cfg.kept,
            thin: cfg.thin,
            level: cfg.level,
            jobs: cfg.jobs,
            timing_repeats: cfg.timing_repeats,
        })
    }
}

/// Seed for stream `stream` of replicate `index` (splitmix64 finaliser).
pub fn derive_seed(master: u64, index: usize, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationOutcome {
    pub truncation: Option<usize>,
    pub accuracy_x: f64,
    pub accuracy_sigma2_eps: f64,
    pub coverage_x: f64,
    pub iterations: usize,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub data_seed: u64,
    pub fits: Vec<TruncationOutcome>,
    pub mcmc_coverage_x: f64,
    pub mcmc_acceptance_x: f64,
    pub mcmc_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub index: usize,
    pub data_seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub spec: StudySpec,
    pub outcomes: Vec<ReplicateOutcome>,
    pub failures: Vec<ReplicateFailure>,
}

/// One aggregated cell: mean and sd across successful replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: &'static str,
    pub truncation: Option<usize>,
    pub mean: f64,
    pub sd: Option<f64>,
    pub n: usize,
}

fn fit_variational(problem: &Problem, spec: &StudySpec) -> vbip_core::Result<FitResult> {
    let init = match spec.init {
        InitKind::Data => MfvbInit::from_data(problem)?,
        InitKind::Unit => MfvbInit::default(),
    };
    let opts = FitOptions { tol: spec.tol, max_iter: spec.max_iter, convergence: spec.convergence, init };
    match spec.method {
        Method::Vmp => vbip_core::vmp::run_vmp(problem, &spec.penalty, &spec.hyper, &opts),
        _ => vbip_core::mfvb::fit_mfvb(problem, &spec.penalty, &spec.hyper, &opts),
    }
}

fn run_replicate(spec: &StudySpec, truth: &Matrix, index: usize) -> vbip_core::Result<ReplicateOutcome> {
    let data_seed = derive_seed(spec.seed, index, 0);
    let chain_seed = derive_seed(spec.seed, index, 1);
    let ds = simulate2d(truth, spec.delta, spec.sigma_eps, None, data_seed)?;
    let x_true = ds.truth.as_deref().expect("simulated data carry the truth");

    let k_full = ds.kernel.build(ds.shape)?;
    let full = Problem::new(ds.y.clone(), k_full, ds.shape)?;
    let t0 = Instant::now();
    let chain_spec = ChainSpec {
        warmup: spec.warmup,
        kept: spec.kept,
        thin: spec.thin,
        seed: chain_seed,
        ..ChainSpec::default()
    };
    let chain = fit_mcmc(&full, &spec.penalty, &spec.hyper, &chain_spec)?;
    let mcmc_time_s = t0.elapsed().as_secs_f64();
    let mcmc_coverage_x = vbip_core::metrics::coverage(x_true, &chain.x_intervals(spec.level))?;

    let problems = spec
        .truncations
        .iter()
        .map(|&trunc| {
            if trunc.is_none() {
                Ok(full.clone())
            } else {
                let k = KernelSpec::gaussian(ds.shape, spec.delta, trunc).build(ds.shape)?;
                Problem::new(ds.y.clone(), k, ds.shape)
            }
        })
        .collect::<vbip_core::Result<Vec<_>>>()?;
    // repeats run round-robin over the truncations so drift in machine load
    // hits every truncation alike
    let mut best = vec![f64::INFINITY; problems.len()];
    let mut last: Vec<Option<FitResult>> = vec![None; problems.len()];
    for _ in 0..spec.timing_repeats {
        for (j, problem) in problems.iter().enumerate() {
            let t0 = Instant::now();
            let f = fit_variational(problem, spec)?;
            best[j] = best[j].min(t0.elapsed().as_secs_f64());
            last[j] = Some(f);
        }
    }
    let mut fits = Vec::with_capacity(problems.len());
    for (j, &trunc) in spec.truncations.iter().enumerate() {
        let fit = last[j].take().expect("at least one timing repeat");
        let cmp = compare(&Posterior::Variational(&fit), &Posterior::Chain(&chain), Some(x_true), spec.level)?;
        fits.push(TruncationOutcome {
            truncation: trunc,
            accuracy_x: cmp.mean_accuracy_x().0,
            accuracy_sigma2_eps: cmp.accuracy_sigma2_eps,
            coverage_x: cmp.coverage_a.expect("truth given"),
            iterations: fit.iterations,
            time_s: best[j],
        });
    }
    Ok(ReplicateOutcome {
        index,
        data_seed,
        fits,
        mcmc_coverage_x,
        mcmc_acceptance_x: chain.acceptance.x,
        mcmc_time_s,
    })
}

/// `f(0..n)` evaluated on `jobs` worker threads; results keep index order.
pub fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, jobs: usize, f: F) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                slots.lock().expect("no worker panicked holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("workers joined").into_iter().map(|s| s.expect("every index ran")).collect()
}

/// Runs every replicate on a pool of `spec.jobs` threads. Failed
/// replicates are listed rather than aborting the study.
pub fn run_study(spec: &StudySpec) -> Result<StudyReport> {
    let truth = phantom(spec.m1, spec.m2)?;
    let results = parallel_map(spec.replicates, spec.jobs, |i| run_replicate(spec, &truth, i).map_err(|e| e.to_string()));
    Ok(StudyReport::assemble(spec, results))
}

fn row(metric: &'static str, truncation: Option<usize>, values: &[f64]) -> ReportRow {
    let (mean, sd) = if values.is_empty() { (f64::NAN, None) } else { mean_sd(values) };
    ReportRow { metric, truncation, mean, sd, n: values.len() }
}

impl StudyReport {
    /// Splits per-replicate results, in index order, into outcomes and failures.
    pub fn assemble(spec: &StudySpec, results: Vec<std::result::Result<ReplicateOutcome, String>>) -> Self {
        let mut outcomes = Vec::new();
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(o) => outcomes.push(o),
                Err(error) => failures.push(ReplicateFailure { index: i, data_seed: derive_seed(spec.seed, i, 0), error }),
            }
        }
        Self { spec: spec.clone(), outcomes, failures }
    }

    /// Accuracy and coverage rows; every entry is a pure function of the spec.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for (j, &t) in self.spec.truncations.iter().enumerate() {
            let pick = |f: fn(&TruncationOutcome) -> f64| -> Vec<f64> { self.outcomes.iter().map(|o| f(&o.fits[j])).collect() };
            rows.push(row("accuracy_x", t, &pick(|f| f.accuracy_x)));
            rows.push(row("accuracy_sigma2_eps", t, &pick(|f| f.accuracy_sigma2_eps)));
            rows.push(row("coverage_x", t, &pick(|f| f.coverage_x)));
            rows.push(row("iterations", t, &pick(|f| f.iterations as f64)));
        }
        let mc: Vec<f64> = self.outcomes.iter().map(|o| o.mcmc_coverage_x).collect();
        rows.push(row("coverage_x_mcmc", None, &mc));
        let acc: Vec<f64> = self.outcomes.iter().map(|o| o.mcmc_acceptance_x).collect();
        rows.push(row("acceptance_x_mcmc", None, &acc));
        rows
    }

    /// Wall-clock rows, kept apart because they vary run to run.
    pub fn timing_rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        for (j, &t) in self.spec.truncations.iter().enumerate() {
            let v: Vec<f64> = self.outcomes.iter().map(|o| o.fits[j].time_s).collect();
            rows.push(row("time_variational_s", t, &v));
        }
        let v: Vec<f64> = self.outcomes.iter().map(|o| o.mcmc_time_s).collect();
        rows.push(row("time_mcmc_s", None, &v));
        rows
    }

    pub fn mean_of(&self, metric: &str, truncation: Option<usize>) -> Option<f64> {
        self.rows()
            .into_iter()
            .chain(self.timing_rows())
            .find(|r| r.metric == metric && r.truncation == truncation)
            .map(|r| r.mean)
    }

    pub fn rows_csv(rows: &[ReportRow]) -> String {
        let mut out = String::from("metric,truncation,mean,sd,replicates\n");
        for r in rows {
            let sd = r.sd.map_or(String::new(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "{},{},{:.6},{},{}", r.metric, format_truncation(r.truncation), r.mean, sd, r.n);
        }
        out
    }

    /// Metrics down the side, one `mean (sd)` column per truncation.
    pub fn text_table(&self) -> String {
        let mut cols: Vec<Option<usize>> = self.spec.truncations.clone();
        if !cols.contains(&None) {
            cols.push(None);
        }
        let mut all = self.rows();
        all.extend(self.timing_rows());
        let mut metrics: Vec<&'static str> = Vec::new();
        for r in &all {
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric);
            }
        }
        let header: Vec<String> = cols.iter().map(|t| format!("l={}", format_truncation(*t))).collect();
        let mut out = format!("{:<22}", "");
        for h in &header {
            let _ = write!(out, "{h:>20}");
        }
        out.push('\n');
        for m in metrics {
            let _ = write!(out, "{m:<22}");
            for t in &cols {
                let cell = all.iter().find(|r| r.metric == m && r.truncation == *t).map_or(String::new(), |r| match r.sd {
                    Some(sd) => format!("{:.2} ({:.2})", r.mean, sd),
                    None => format!("{:.2}", r.mean),
                });
                let _ = write!(out, "{cell:>20}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\n{} of {} replicates succeeded; {}x{} grid, delta={}, sigma_eps={}",
            self.outcomes.len(),
            self.spec.replicates,
            self.spec.m1,
            self.spec.m2,
            self.spec.delta,
            self.spec.sigma_eps
        );
        out
    }

    pub fn manifest(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("replicates", self.spec.replicates);
        kv.push("succeeded", self.outcomes.len());
        kv.push("failed", self.failures.len());
        for f in &self.failures {
            kv.push(&format!("failed.{}.seed", f.index), f.data_seed);
            kv.push(&format!("failed.{}.error", f.index), &f.error);
        }
        kv
    }

    pub fn per_replicate_csv(&self) -> String {
        let mut out = String::from("replicate,data_seed,truncation,accuracy_x,accuracy_sigma2_eps,coverage_x,iterations\n");
        for o in &self.outcomes {
            for f in &o.fits {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{}",
                    o.index,
                    o.data_seed,
                    format_truncation(f.truncation),
                    f.accuracy_x,
                    f.accuracy_sigma2_eps,
                    f.coverage_x,
                    f.iterations
                );
            }
        }
        out
    }

    /// `report.csv`, `timings.csv`, `replicates.csv`, `report.txt` and
    /// `manifest.txt`.
    pub fn write(&self, dir: &Path, force: bool) -> Result<()> {
        prepare_output_dir(dir, force)?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| CliError::Io { path: p, source: e })
        };
        put("report.csv", Self::rows_csv(&self.rows()))?;
        put("timings.csv", Self::rows_csv(&self.timing_rows()))?;
        put("replicates.csv", self.per_replicate_csv())?;
        put("report.txt", self.text_table())?;
        self.manifest().write(&dir.join("manifest.txt"))
    }
}
