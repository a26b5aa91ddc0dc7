//! Random-walk Metropolis–Hastings sampler for the hierarchical model.
//!
//! Blocks per iteration: random-scan single-coordinate moves on `x`, a joint
//! move on `(ln σ²_ε, ln σ²_x, ln a_ε, ln a_x)`, then `b`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt};
use crate::matrix::Matrix;
use crate::metrics::quantile;
use crate::model::{ModelHyperparams, Problem};
use crate::penalties::{GdpMixingTable, PenaltyFamily, PenaltySpec};

const TARGET_ACCEPT: f64 = 0.35;

/// Per-block proposal step multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalScales {
    /// Multiple of the Gaussian conditional sd of each `x_k`.
    pub x: f64,
    /// Multiple of the preconditioned sd for the four log-scales.
    pub scales: f64,
    /// Step sd for `ln b_e` (unused for Laplace, which is Gibbs).
    pub b: f64,
}

impl Default for ProposalScales {
    fn default() -> Self {
        Self { x: 2.4, scales: 1.19, b: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub warmup: usize,
    pub kept: usize,
    pub thin: usize,
    pub proposal_scales: ProposalScales,
    pub seed: u64,
    /// Tune the step multipliers during warmup.
    pub adapt: bool,
    pub init: Option<ChainInit>,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            warmup: 1000,
            kept: 5000,
            thin: 1,
            proposal_scales: ProposalScales::default(),
            seed: 0,
            adapt: true,
            init: None,
        }
    }
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kept == 0 || self.thin == 0 {
            return Err(Error::InvalidArgument("kept and thin must be at least 1"));
        }
        let s = self.proposal_scales;
        if !(s.x > 0.0 && s.scales > 0.0 && s.b > 0.0) {
            return Err(Error::InvalidArgument("proposal scales must be positive"));
        }
        Ok(())
    }
}

/// Explicit starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInit {
    pub x: Vec<f64>,
    pub sig_eps: f64,
    pub sig_x: f64,
    pub a_eps: f64,
    pub a_x: f64,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceRates {
    pub x: f64,
    pub scales: f64,
    pub b: f64,
}

/// Kept draws, one row per draw, columns `x`, `σ²_ε`, `σ²_x`, `a_ε`, `a_x`, `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub samples: Matrix,
    pub m: usize,
    pub d: usize,
    pub acceptance: AcceptanceRates,
    pub final_scales: ProposalScales,
}

impl ChainResult {
    pub fn kept(&self) -> usize {
        self.samples.rows()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.samples.rows()).map(|r| self.samples[(r, j)]).collect()
    }

    pub fn x_column(&self, i: usize) -> Vec<f64> {
        self.column(i)
    }

    pub fn sig_eps_column(&self) -> usize {
        self.m
    }
    pub fn sig_x_column(&self) -> usize {
        self.m + 1
    }
    pub fn a_eps_column(&self) -> usize {
        self.m + 2
    }
    pub fn a_x_column(&self) -> usize {
        self.m + 3
    }
    pub fn b_column(&self, e: usize) -> usize {
        self.m + 4 + e
    }

    pub fn column_names(&self) -> Vec<alloc::string::String> {
        use alloc::format;
        let mut names: Vec<_> = (0..self.m).map(|i| format!("x{}", i + 1)).collect();
        for s in ["sigma2_eps", "sigma2_x", "a_eps", "a_x"] {
            names.push(s.into());
        }
        names.extend((0..self.d).map(|e| format!("b{}", e + 1)));
        names
    }

    pub fn mean(&self, j: usize) -> f64 {
        let c = self.column(j);
        c.iter().sum::<f64>() / c.len() as f64
    }

    pub fn x_means(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.mean(i)).collect()
    }

    /// Equal-tailed empirical interval of column `j`.
    pub fn interval(&self, j: usize, level: f64) -> (f64, f64) {
        let c = self.column(j);
        let t = 0.5 * (1.0 - level);
        (quantile(&c, t), quantile(&c, 1.0 - t))
    }

    pub fn x_intervals(&self, level: f64) -> Vec<(f64, f64)> {
        (0..self.m).map(|i| self.interval(i, level)).collect()
    }
}

struct State {
    x: Vec<f64>,
    r: Vec<f64>,
    lx: Vec<f64>,
    theta: [f64; 4],
    b: Vec<f64>,
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn accept<R: Rng>(rng: &mut R, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || ln(rng.random::<f64>()) < log_ratio
}

fn default_init(problem: &Problem) -> Result<ChainInit> {
    let (sig_eps, sig_x) = crate::model::data_scale_estimates(problem)?;
    Ok(ChainInit {
        x: problem.y.clone(),
        sig_eps,
        sig_x,
        a_eps: sig_eps,
        a_x: sig_x,
        b: vec![1.0; problem.shape.d()],
    })
}

fn log_scales_target(theta: &[f64; 4], m: usize, d: usize, rss: f64, q: f64, hyper: &ModelHyperparams) -> f64 {
    let [le, lx, lae, lax] = *theta;
    let (se, sx, ae, ax) = (exp(le), exp(lx), exp(lae), exp(lax));
    let mut v = -0.5 * m as f64 * le - rss / (2.0 * se);
    v += -0.5 * d as f64 * lx - q / (2.0 * sx);
    v += -0.5 * lae - 1.5 * le - 1.0 / (2.0 * ae * se);
    v += -0.5 * lax - 1.5 * lx - 1.0 / (2.0 * ax * sx);
    v += -1.5 * lae - 1.0 / (2.0 * hyper.a_eps * hyper.a_eps * ae);
    v += -1.5 * lax - 1.0 / (2.0 * hyper.a_x * hyper.a_x * ax);
    v + le + lx + lae + lax
}

/// Runs one chain.
pub fn fit_mcmc(
    problem: &Problem,
    penalty: &PenaltySpec,
    hyper: &ModelHyperparams,
    spec: &ChainSpec,
) -> Result<ChainResult> {
    hyper.validate()?;
    spec.validate()?;
    let shape = problem.shape;
    let m = shape.m();
    let d = shape.d();
    let k: &BandedMatrix = &problem.k;
    let kt = k.transpose();
    let col_norm2: Vec<f64> = (0..m)
        .map(|c| kt.row(c).1.iter().map(|v| v * v).sum())
        .collect();
    if col_norm2.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("kernel has an all-zero column"));
    }
    let gdp = if penalty.family == PenaltyFamily::Gdp {
        Some(GdpMixingTable::new(penalty.lambda)?)
    } else {
        None
    };
    let gibbs_b = penalty.family == PenaltyFamily::Laplace;

    let init = match &spec.init {
        Some(i) => i.clone(),
        None => default_init(problem)?,
    };
    if init.x.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: init.x.len() });
    }
    if init.b.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: init.b.len() });
    }
    let scales_init = [init.sig_eps, init.sig_x, init.a_eps, init.a_x];
    if scales_init.iter().chain(&init.b).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("initial scale parameters must be positive"));
    }
    let kx = k.matvec(&init.x)?;
    let mut st = State {
        r: problem.y.iter().zip(&kx).map(|(y, v)| y - v).collect(),
        lx: crate::contrast::apply_l(shape, &init.x)?,
        x: init.x,
        theta: scales_init.map(ln),
        b: init.b,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut log_cx = ln(spec.proposal_scales.x);
    let mut log_cs = ln(spec.proposal_scales.scales);
    let mut log_cb = ln(spec.proposal_scales.b);
    let mut precond = [2.0 / (m as f64 + 1.0), 2.0 / (d as f64 + 1.0), 1.0, 1.0];
    let mut theta_hist: Vec<[f64; 4]> = Vec::new();

    let total = spec.warmup + spec.kept * spec.thin;
    let mut samples = Matrix::zeros(spec.kept, m + 4 + d);
    let mut stored = 0;
    let mut order: Vec<usize> = (0..m).collect();
    let mut warm_acc = [0usize; 3];
    let mut post_acc = [0usize; 3];
    let mut post_try = [0usize; 3];

    for it in 0..total {
        let warm = it < spec.warmup;
        let gain = 1.0 / libm::pow(it as f64 + 10.0, 0.6);

        // x block
        let sig_eps = exp(st.theta[0]);
        let sig_x = exp(st.theta[1]);
        for i in (1..m).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let cx = exp(log_cx);
        let mut acc_x = 0usize;
        for &p in &order {
            let (lo, col) = kt.row(p);
            let ktr: f64 = col.iter().zip(&st.r[lo..]).map(|(a, b)| a * b).sum();
            let mut prec = col_norm2[p] / sig_eps;
            for (e, _) in shape.incident_edges(p) {
                prec += st.b[e] / sig_x;
            }
            let delta = cx / sqrt(prec) * gaussian(&mut rng);
            let mut dl = -(-2.0 * delta * ktr + delta * delta * col_norm2[p]) / (2.0 * sig_eps);
            for (e, sign) in shape.incident_edges(p) {
                let old = st.lx[e];
                let new = old + sign * delta;
                dl -= st.b[e] * (new * new - old * old) / (2.0 * sig_x);
            }
            if accept(&mut rng, dl) {
                acc_x += 1;
                st.x[p] += delta;
                for (a, r) in col.iter().zip(&mut st.r[lo..]) {
                    *r -= a * delta;
                }
                for (e, sign) in shape.incident_edges(p) {
                    st.lx[e] += sign * delta;
                }
            }
        }

        // scales block
        let rss: f64 = st.r.iter().map(|v| v * v).sum();
        let q: f64 = st.b.iter().zip(&st.lx).map(|(b, l)| b * l * l).sum();
        let cs = exp(log_cs);
        let mut prop = st.theta;
        for (t, v) in prop.iter_mut().zip(&precond) {
            *t += cs * sqrt(*v) * gaussian(&mut rng);
        }
        let dl = log_scales_target(&prop, m, d, rss, q, hyper)
            - log_scales_target(&st.theta, m, d, rss, q, hyper);
        let acc_s = accept(&mut rng, dl) && prop.iter().all(|t| t.is_finite());
        if acc_s {
            st.theta = prop;
        }

        // b block
        let sig_x = exp(st.theta[1]);
        let cb = exp(log_cb);
        let mut acc_b = 0usize;
        for e in 0..d {
            let t = (st.lx[e] * st.lx[e] / sig_x).max(1e-300);
            if gibbs_b {
                let mean = 1.0 / sqrt(t);
                let ig = InverseGaussian::new(mean, 1.0).map_err(|_| Error::Numerical("inverse Gaussian"))?;
                let draw: f64 = ig.sample(&mut rng);
                st.b[e] = draw.max(f64::MIN_POSITIVE);
                acc_b += 1;
            } else {
                let lb = ln(st.b[e]);
                let lb_new = lb + cb * gaussian(&mut rng);
                let target = |l: f64| {
                    let b = exp(l);
                    0.5 * l - 0.5 * b * t + penalty.ln_mixing_density(b, gdp.as_ref()) + l
                };
                let b_new = exp(lb_new);
                if b_new > 0.0 && b_new.is_finite() && accept(&mut rng, target(lb_new) - target(lb)) {
                    st.b[e] = b_new;
                    acc_b += 1;
                }
            }
        }

        let rate_x = acc_x as f64 / m as f64;
        let rate_b = if d > 0 { acc_b as f64 / d as f64 } else { 0.0 };
        if warm {
            warm_acc[0] += acc_x;
            warm_acc[1] += acc_s as usize;
            warm_acc[2] += acc_b;
            if spec.adapt {
                log_cx += gain * (rate_x - TARGET_ACCEPT);
                log_cs += gain * (acc_s as u8 as f64 - TARGET_ACCEPT);
                if !gibbs_b && d > 0 {
                    log_cb += gain * (rate_b - TARGET_ACCEPT);
                }
                if spec.warmup >= 100 {
                    if it >= spec.warmup / 4 && it < spec.warmup / 2 {
                        theta_hist.push(st.theta);
                    }
                    if it + 1 == spec.warmup / 2 && theta_hist.len() > 10 {
                        for c in 0..4 {
                            let n = theta_hist.len() as f64;
                            let mean = theta_hist.iter().map(|t| t[c]).sum::<f64>() / n;
                            let var = theta_hist.iter().map(|t| (t[c] - mean) * (t[c] - mean)).sum::<f64>()
                                / (n - 1.0);
                            precond[c] = var.clamp(1e-8, 10.0);
                        }
                        log_cs = ln(2.38 / 2.0);
                    }
                }
            }
        } else {
            post_acc[0] += acc_x;
            post_try[0] += m;
            post_acc[1] += acc_s as usize;
            post_try[1] += 1;
            post_acc[2] += acc_b;
            post_try[2] += d;
            let k_post = it - spec.warmup;
            if (k_post + 1) % spec.thin == 0 {
                let row = stored;
                for i in 0..m {
                    samples[(row, i)] = st.x[i];
                }
                for c in 0..4 {
                    samples[(row, m + c)] = exp(st.theta[c]);
                }
                for e in 0..d {
                    samples[(row, m + 4 + e)] = st.b[e];
                }
                stored += 1;
            }
        }
        if !st.theta.iter().all(|t| t.is_finite()) {
            return Err(Error::Numerical("scale parameters left the representable range"));
        }
    }

    if spec.warmup > 0 {
        if warm_acc[0] == 0 {
            return Err(Error::ZeroAcceptance("x: decrease the x proposal scale"));
        }
        if warm_acc[1] == 0 {
            return Err(Error::ZeroAcceptance("scales: decrease the scale proposal step"));
        }
        if d > 0 && warm_acc[2] == 0 {
            return Err(Error::ZeroAcceptance("b: decrease the b proposal step"));
        }
    }

    let rate = |a: usize, n: usize| if n > 0 { a as f64 / n as f64 } else { 0.0 };
    Ok(ChainResult {
        samples,
        m,
        d,
        acceptance: AcceptanceRates {
            x: rate(post_acc[0], post_try[0]),
            scales: rate(post_acc[1], post_try[1]),
            b: rate(post_acc[2], post_try[2]),
        },
        final_scales: ProposalScales { x: exp(log_cx), scales: exp(log_cs), b: exp(log_cb) },
    })
}

/// Generic random-walk Metropolis with uniform `[−step, step]` proposals on
/// each coordinate. Returns the kept draws.
pub fn uniform_metropolis<F: Fn(&[f64]) -> f64>(
    log_target: F,
    init: &[f64],
    step: &[f64],
    warmup: usize,
    kept: usize,
    seed: u64,
) -> Result<Matrix> {
    if init.len() != step.len() {
        return Err(Error::DimensionMismatch { expected: init.len(), got: step.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = init.to_vec();
    let mut cur_lp = log_target(&cur);
    if !cur_lp.is_finite() {
        return Err(Error::InvalidArgument("initial point has zero density"));
    }
    let mut out = Matrix::zeros(kept, init.len());
    let mut prop = cur.clone();
    for it in 0..warmup + kept {
        for (p, (c, s)) in prop.iter_mut().zip(cur.iter().zip(step)) {
            *p = c + s * (2.0 * rng.random::<f64>() - 1.0);
        }
        let lp = log_target(&prop);
        if accept(&mut rng, lp - cur_lp) {
            cur.copy_from_slice(&prop);
            cur_lp = lp;
        }
        if it >= warmup {
            for (j, v) in cur.iter().enumerate() {
                out[(it - warmup, j)] = *v;
            }
        }
    }
    Ok(out)
}
