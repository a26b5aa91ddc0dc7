//! Run configuration. Every key can come from a flag or from a flat
//! `key=value` file passed with `--config`; flags win over the file, the
//! file wins over the built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use vbip_core::model::{Convergence, FitOptions, MfvbInit};
use vbip_core::penalties::{PenaltyFamily, PenaltySpec};
use vbip_core::{ModelHyperparams, Problem};

use crate::error::{CliError, Result};
use crate::io::{parse_truncation, KeyValues};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Fit,
    Compare,
    ReplicateStudy,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Fit => "fit",
            Command::Compare => "compare",
            Command::ReplicateStudy => "replicate-study",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mfvb,
    Vmp,
    Mcmc,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mfvb => "mfvb",
            Method::Vmp => "vmp",
            Method::Mcmc => "mcmc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mfvb" => Some(Method::Mfvb),
            "vmp" => Some(Method::Vmp),
            "mcmc" => Some(Method::Mcmc),
            _ => None,
        }
    }
}

/// Starting point of the variational engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Scale moments estimated from the observations.
    Data,
    /// All starting moments equal to one.
    Unit,
}

/// `(key, default, description)`. An empty default means "no default".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("config", "", "flat key=value file supplying any of these keys"),
    ("dim", "1", "generate: 1 for the Blocks signal, 2 for an image"),
    ("m", "", "generate --dim 1: signal length (required)"),
    ("m1", "", "image rows (generate --dim 2: required; replicate-study: 12)"),
    ("m2", "", "image columns (generate --dim 2: required; replicate-study: 12)"),
    ("delta", "", "Gaussian blur width δ (default 2 for --dim 1, 0.7 for images)"),
    ("sigma", "", "noise sd σ_ε, alias --sigma-eps (default 1 for --dim 1, 50 for images)"),
    ("truncation", "", "kernel truncation ℓ or `inf`; generate default inf, fit default: the dataset's"),
    ("image", "phantom", "generate --dim 2: truth image, `phantom` or a matrix CSV path"),
    ("seed", "0", "random seed (data noise, chains, study master seed)"),
    ("method", "mfvb", "fit: mfvb, vmp or mcmc"),
    ("penalty", "laplace", "laplace, horseshoe, neg or gdp"),
    ("penalty-lambda", "1", "shape λ for neg and gdp"),
    ("a-eps", "1e5", "half-Cauchy scale A_ε"),
    ("a-x", "1e5", "half-Cauchy scale A_x"),
    ("tol", "1e-2", "relative change of the posterior mean that stops the variational iteration"),
    ("max-iter", "500", "variational iteration cap"),
    ("convergence", "mean", "variational stopping rule: `mean` (posterior mean only) or `all` (every q-parameter)"),
    ("init", "data", "variational start: `data` (scales from the observations) or `unit`"),
    ("warmup", "1000", "mcmc: warmup iterations (proposal tuning)"),
    ("kept", "5000", "mcmc: kept draws"),
    ("thin", "1", "mcmc: iterations per kept draw"),
    ("level", "0.95", "credible level for intervals and coverage"),
    ("replicates", "10", "replicate-study: number of simulated datasets"),
    ("jobs", "1", "replicate-study: worker threads"),
    ("truncations", "5,inf", "replicate-study: comma-separated ℓ values for the variational fits"),
    ("timing-repeats", "1", "replicate-study: variational fits timed as the fastest of this many runs"),
    ("input", "", "fit/compare: dataset directory"),
    ("output", "", "output directory (required)"),
    ("fit-a", "", "compare: first fit or chain directory"),
    ("fit-b", "", "compare: second fit or chain directory"),
    ("force", "false", "overwrite a non-empty output directory"),
];

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat key=value file supplying any of these keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generate: 1 for the Blocks signal, 2 for an image [default: 1].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Generate --dim 1: signal length (required).
    #[arg(long)]
    pub m: Option<usize>,
    /// Image rows (generate --dim 2: required; replicate-study default 12).
    #[arg(long)]
    pub m1: Option<usize>,
    /// Image columns (generate --dim 2: required; replicate-study default 12).
    #[arg(long)]
    pub m2: Option<usize>,
    /// Gaussian blur width δ [default: 2 for --dim 1, 0.7 for images].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Noise sd σ_ε [default: 1 for --dim 1, 50 for images].
    #[arg(long, visible_alias = "sigma-eps")]
    pub sigma: Option<f64>,
    /// Kernel truncation ℓ or `inf` [generate default: inf; fit default: the dataset's].
    #[arg(long)]
    pub truncation: Option<String>,
    /// Generate --dim 2: truth image, `phantom` or a matrix CSV path [default: phantom].
    #[arg(long)]
    pub image: Option<String>,
    /// Random seed for data noise, chains and the study master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit: mfvb, vmp or mcmc [default: mfvb].
    #[arg(long)]
    pub method: Option<String>,
    /// Penalty: laplace, horseshoe, neg or gdp [default: laplace].
    #[arg(long)]
    pub penalty: Option<String>,
    /// Shape λ for neg and gdp [default: 1].
    #[arg(long)]
    pub penalty_lambda: Option<f64>,
    /// Half-Cauchy scale A_ε [default: 1e5].
    #[arg(long)]
    pub a_eps: Option<f64>,
    /// Half-Cauchy scale A_x [default: 1e5].
    #[arg(long)]
    pub a_x: Option<f64>,
    /// Stop when the relative change of the posterior mean drops below this [default: 1e-2].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Variational iteration cap [default: 500].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Stopping rule: `mean` (posterior mean only) or `all` (every q-parameter) [default: mean].
    #[arg(long)]
    pub convergence: Option<String>,
    /// Variational start: `data` (scales from the observations) or `unit` [default: data].
    #[arg(long)]
    pub init: Option<String>,
    /// MCMC warmup iterations, used for proposal tuning [default: 1000].
    #[arg(long)]
    pub warmup: Option<usize>,
    /// MCMC kept draws [default: 5000].
    #[arg(long)]
    pub kept: Option<usize>,
    /// MCMC iterations per kept draw [default: 1].
    #[arg(long)]
    pub thin: Option<usize>,
    /// Credible level for intervals and coverage [default: 0.95].
    #[arg(long)]
    pub level: Option<f64>,
    /// Replicate-study: number of simulated datasets [default: 10].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Replicate-study: worker threads [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Replicate-study: comma-separated ℓ values for the variational fits [default: 5,inf].
    #[arg(long)]
    pub truncations: Option<String>,
    /// Replicate-study: time each variational fit as the fastest of this many runs [default: 1].
    #[arg(long)]
    pub timing_repeats: Option<usize>,
    /// Fit/compare: dataset directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (required).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Compare: first fit or chain directory.
    #[arg(long)]
    pub fit_a: Option<PathBuf>,
    /// Compare: second fit or chain directory.
    #[arg(long)]
    pub fit_b: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|x| x.to_string())
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|x| x.display().to_string())
}

impl ConfigArgs {
    /// Flags that were given, as raw key/value strings.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let all = [
            ("dim", s(&self.dim)),
            ("m", s(&self.m)),
            ("m1", s(&self.m1)),
            ("m2", s(&self.m2)),
            ("delta", s(&self.delta)),
            ("sigma", s(&self.sigma)),
            ("truncation", self.truncation.clone()),
            ("image", self.image.clone()),
            ("seed", s(&self.seed)),
            ("method", self.method.clone()),
            ("penalty", self.penalty.clone()),
            ("penalty-lambda", s(&self.penalty_lambda)),
            ("a-eps", s(&self.a_eps)),
            ("a-x", s(&self.a_x)),
            ("tol", s(&self.tol)),
            ("max-iter", s(&self.max_iter)),
            ("convergence", self.convergence.clone()),
            ("init", self.init.clone()),
            ("warmup", s(&self.warmup)),
            ("kept", s(&self.kept)),
            ("thin", s(&self.thin)),
            ("level", s(&self.level)),
            ("replicates", s(&self.replicates)),
            ("jobs", s(&self.jobs)),
            ("truncations", self.truncations.clone()),
            ("timing-repeats", s(&self.timing_repeats)),
            ("input", p(&self.input)),
            ("output", p(&self.output)),
            ("fit-a", p(&self.fit_a)),
            ("fit-b", p(&self.fit_b)),
            ("force", self.force.then(|| "true".to_string())),
        ];
        all.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    pub m: Option<usize>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub delta: f64,
    pub sigma: f64,
    /// `None`: not given. `Some(None)`: no truncation.
    pub truncation: Option<Option<usize>>,
    pub image: Option<PathBuf>,
    pub seed: u64,
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
    pub replicates: usize,
    pub jobs: usize,
    pub truncations: Vec<Option<usize>>,
    pub timing_repeats: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub fit_a: Option<PathBuf>,
    pub fit_b: Option<PathBuf>,
    pub force: bool,
}

fn normalise_key(k: &str) -> String {
    let k = k.trim().replace('_', "-");
    if k == "sigma-eps" {
        "sigma".into()
    } else {
        k
    }
}

struct Merged(BTreeMap<String, String>);

impl Merged {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str()).filter(|s| !s.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("invalid value {v:?} for `{key}`"))),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?.ok_or_else(|| CliError::usage(format!("missing `{key}`")))
    }
}

impl RunConfig {
    /// Merges defaults, the optional config file and the flags.
    pub fn resolve(command: Command, args: &ConfigArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => Some(KeyValues::read(path)?),
            None => None,
        };
        Self::resolve_with(command, args, file.as_ref())
    }

    pub fn resolve_with(command: Command, args: &ConfigArgs, file: Option<&KeyValues>) -> Result<Self> {
        let mut map: BTreeMap<String, String> =
            KEYS.iter().filter(|(_, d, _)| !d.is_empty()).map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        if let Some(kv) = file {
            for (k, v) in &kv.0 {
                let k = normalise_key(k);
                // resolved-config echoes carry the command name
                if k == "command" {
                    continue;
                }
                if k == "config" || !KEYS.iter().any(|(name, _, _)| *name == k) {
                    return Err(CliError::usage(format!("unknown key `{k}` in config file")));
                }
                map.insert(k, v.clone());
            }
        }
        for (k, v) in args.pairs() {
            map.insert(k.to_string(), v);
        }
        let mv = Merged(map);
        let dim: usize = mv.get("dim")?;
        if dim != 1 && dim != 2 {
            return Err(CliError::usage("`dim` must be 1 or 2"));
        }
        let image_like = dim == 2 || command == Command::ReplicateStudy;
        let delta = mv.parse("delta")?.unwrap_or(if image_like { 0.7 } else { 2.0 });
        let sigma = mv.parse("sigma")?.unwrap_or(if image_like { 50.0 } else { 1.0 });
        let truncation = match mv.raw("truncation") {
            None => None,
            Some(v) => Some(
                parse_truncation(v).ok_or_else(|| CliError::usage("`truncation` must be a positive integer or inf"))?,
            ),
        };
        let truncations = mv
            .raw("truncations")
            .unwrap_or("inf")
            .split(',')
            .map(|t| parse_truncation(t).ok_or_else(|| CliError::usage(format!("bad truncation {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let method_s: String = mv.get("method")?;
        let method = Method::parse(&method_s).ok_or_else(|| CliError::usage(format!("unknown method `{method_s}`")))?;
        let pen_s: String = mv.get("penalty")?;
        let family =
            PenaltyFamily::parse(&pen_s).ok_or_else(|| CliError::usage(format!("unknown penalty `{pen_s}`")))?;
        let lambda: f64 = mv.get("penalty-lambda")?;
        let penalty = PenaltySpec::new(family, lambda).map_err(|e| CliError::usage(e.to_string()))?;
        let init = match mv.get::<String>("init")?.as_str() {
            "data" => InitKind::Data,
            "unit" => InitKind::Unit,
            other => return Err(CliError::usage(format!("unknown init `{other}`"))),
        };
        let convergence = match mv.get::<String>("convergence")?.as_str() {
            "mean" => Convergence::MeanX,
            "all" => Convergence::AllParameters,
            other => return Err(CliError::usage(format!("unknown convergence rule `{other}`"))),
        };
        let force = match mv.get::<String>("force")?.as_str() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(CliError::usage(format!("invalid value {other:?} for `force`"))),
        };
        let image = match mv.raw("image") {
            None | Some("phantom") => None,
            Some(path) => Some(PathBuf::from(path)),
        };
        let cfg = RunConfig {
            command,
            dim,
            m: mv.parse("m")?,
            m1: mv.parse("m1")?,
            m2: mv.parse("m2")?,
            delta,
            sigma,
            truncation,
            image,
            seed: mv.get("seed")?,
            method,
            penalty,
            hyper: ModelHyperparams { a_eps: mv.get("a-eps")?, a_x: mv.get("a-x")? },
            tol: mv.get("tol")?,
            max_iter: mv.get("max-iter")?,
            convergence,
            init,
            warmup: mv.get("warmup")?,
            kept: mv.get("kept")?,
            thin: mv.get("thin")?,
            level: mv.get("level")?,
            replicates: mv.get("replicates")?,
            jobs: mv.get("jobs")?,
            truncations,
            timing_repeats: mv.get("timing-repeats")?,
            input: mv.parse("input")?,
            output: mv.parse("output")?,
            fit_a: mv.parse("fit-a")?,
            fit_b: mv.parse("fit-b")?,
            force,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the keys the command needs before any work starts.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::usage(msg)) };
        need(self.delta >= 0.0 && self.delta.is_finite(), "`delta` must be non-negative")?;
        need(self.sigma >= 0.0 && self.sigma.is_finite(), "`sigma` must be non-negative")?;
        need(self.hyper.a_eps > 0.0 && self.hyper.a_x > 0.0, "`a-eps` and `a-x` must be positive")?;
        need(self.tol > 0.0, "`tol` must be positive")?;
        need(self.max_iter > 0, "`max-iter` must be at least 1")?;
        need(self.kept > 0 && self.thin > 0, "`kept` and `thin` must be at least 1")?;
        need(self.level > 0.0 && self.level < 1.0, "`level` must lie in (0, 1)")?;
        need(self.output.is_some(), "missing `output`")?;
        match self.command {
            Command::Generate => {
                if self.dim == 1 {
                    need(self.m.is_some(), "missing `m` for a 1-D dataset")?;
                    need(self.m.unwrap() >= 2, "`m` must be at least 2")?;
                } else {
                    if self.image.is_none() {
                        need(self.m1.is_some() && self.m2.is_some(), "missing `m1`/`m2` for a 2-D dataset")?;
                    }
                    need(self.m1 != Some(0) && self.m2 != Some(0), "`m1` and `m2` must be positive")?;
                }
            }
            Command::Fit => need(self.input.is_some(), "missing `input`")?,
            Command::Compare => need(self.fit_a.is_some() && self.fit_b.is_some(), "missing `fit-a`/`fit-b`")?,
            Command::ReplicateStudy => {
                need(self.replicates >= 1, "`replicates` must be at least 1")?;
                need(self.jobs >= 1, "`jobs` must be at least 1")?;
                need(self.timing_repeats >= 1, "`timing-repeats` must be at least 1")?;
                need(!self.truncations.is_empty(), "`truncations` is empty")?;
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> &Path {
        self.output.as_deref().expect("validated")
    }

    pub fn fit_options(&self, problem: &Problem) -> Result<FitOptions> {
        let init = match self.init {
            InitKind::Data => MfvbInit::from_data(problem)?,
            InitKind::Unit => MfvbInit::default(),
        };
        Ok(FitOptions { tol: self.tol, max_iter: self.max_iter, convergence: self.convergence, init })
    }

    /// Every resolved key, for echoing next to the outputs.
    pub fn echo(&self) -> KeyValues {
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let path = |v: &Option<PathBuf>| v.as_ref().map_or(String::new(), |x| x.display().to_string());
        let mut kv = KeyValues::new();
        kv.push("command", self.command.name());
        kv.push("dim", self.dim);
        kv.push("m", opt(self.m));
        kv.push("m1", opt(self.m1));
        kv.push("m2", opt(self.m2));
        kv.push("delta", self.delta);
        kv.push("sigma", self.sigma);
        kv.push("truncation", self.truncation.map_or(String::new(), crate::io::format_truncation));
        kv.push("image", path(&self.image));
        kv.push("seed", self.seed);
        kv.push("method", self.method.name());
        kv.push("penalty", self.penalty.family.name());
        kv.push("penalty-lambda", self.penalty.lambda);
        kv.push("a-eps", self.hyper.a_eps);
        kv.push("a-x", self.hyper.a_x);
        kv.push("tol", self.tol);
        kv.push("max-iter", self.max_iter);
        kv.push("convergence", if self.convergence == Convergence::MeanX { "mean" } else { "all" });
        kv.push("init", if self.init == InitKind::Data { "data" } else { "unit" });
        kv.push("warmup", self.warmup);
        kv.push("kept", self.kept);
        kv.push("thin", self.thin);
        kv.push("level", self.level);
        kv.push("replicates", self.replicates);
        kv.push("jobs", self.jobs);
        let ts: Vec<String> = self.truncations.iter().map(|t| crate::io::format_truncation(*t)).collect();
        kv.push("truncations", ts.join(","));
        kv.push("timing-repeats", self.timing_repeats);
        kv.push("input", path(&self.input));
        kv.push("output", path(&self.output));
        kv.push("fit-a", path(&self.fit_a));
        kv.push("fit-b", path(&self.fit_b));
        kv.push("force", self.force);
        kv
    }
}
