//! Accuracy and coverage between two posterior approximations, each either
//! a variational fit (closed-form marginals) or a chain (KDE marginals).

use vbip_core::expfam::InverseChiSq;
use vbip_core::mcmc::ChainResult;
use vbip_core::metrics::{accuracy_tabulated, coverage, linspace, mean_sd, normal_pdf, Kde, KDE_GRID_POINTS};
use vbip_core::model::FitResult;
use vbip_core::{Error, Result};

/// One univariate posterior marginal.
#[derive(Debug, Clone)]
pub enum Marginal {
    Normal { mean: f64, var: f64 },
    InverseChiSq(InverseChiSq),
    Samples(Kde),
}

impl Marginal {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Normal { mean, var } => normal_pdf(x, *mean, *var),
            Marginal::InverseChiSq(d) => d.pdf(x),
            Marginal::Samples(k) => k.eval(x),
        }
    }

    /// Interval holding essentially all of the mass.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::Normal { mean, var } => {
                let sd = var.sqrt();
                (mean - 8.0 * sd, mean + 8.0 * sd)
            }
            Marginal::InverseChiSq(d) => (d.quantile(1e-7), d.quantile(1.0 - 1e-5)),
            Marginal::Samples(k) => {
                let g = k.default_grid();
                (g[0], g[g.len() - 1])
            }
        }
    }
}

/// Accuracy of two marginals on a shared grid. A chain marginal keeps its
/// own KDE grid; otherwise the grid covers both supports.
pub fn marginal_accuracy(a: &Marginal, b: &Marginal) -> Result<f64> {
    let grid = match (a, b) {
        (Marginal::Samples(k), other) | (other, Marginal::Samples(k)) if !matches!(other, Marginal::Samples(_)) => {
            k.default_grid()
        }
        _ => {
            let (l1, h1) = a.support();
            let (l2, h2) = b.support();
            linspace(l1.min(l2), h1.max(h2), KDE_GRID_POINTS)
        }
    };
    let qa: Vec<f64> = grid.iter().map(|&x| a.pdf(x)).collect();
    let qb: Vec<f64> = grid.iter().map(|&x| b.pdf(x)).collect();
    accuracy_tabulated(&qa, &qb, &grid)
}

/// A fitted posterior in the form the comparisons need.
#[derive(Debug, Clone)]
pub enum Posterior<'a> {
    Variational(&'a FitResult),
    Chain(&'a ChainResult),
}

impl Posterior<'_> {
    pub fn m(&self) -> usize {
        match self {
            Posterior::Variational(f) => f.mu_x.len(),
            Posterior::Chain(c) => c.m,
        }
    }

    pub fn x_marginal(&self, i: usize) -> Result<Marginal> {
        Ok(match self {
            Posterior::Variational(f) => Marginal::Normal { mean: f.mu_x[i], var: f.sigma_x_diag[i] },
            Posterior::Chain(c) => Marginal::Samples(Kde::new(&c.x_column(i))?),
        })
    }

    pub fn sig_eps_marginal(&self) -> Result<Marginal> {
        Ok(match self {
            Posterior::Variational(f) => Marginal::InverseChiSq(f.sig_eps),
            Posterior::Chain(c) => Marginal::Samples(Kde::new(&c.column(c.sig_eps_column()))?),
        })
    }

    pub fn sig_x_marginal(&self) -> Result<Marginal> {
        Ok(match self {
            Posterior::Variational(f) => Marginal::InverseChiSq(f.sig_x),
            Posterior::Chain(c) => Marginal::Samples(Kde::new(&c.column(c.sig_x_column()))?),
        })
    }

    pub fn x_intervals(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        match self {
            Posterior::Variational(f) => f.credible_intervals(level),
            Posterior::Chain(c) => Ok(c.x_intervals(level)),
        }
    }
}

/// Per-coordinate and summary comparison of two posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub accuracy_x: Vec<f64>,
    pub accuracy_sigma2_eps: f64,
    pub accuracy_sigma2_x: Option<f64>,
    /// Coverage of the truth by each side's intervals, when truth is known.
    pub coverage_a: Option<f64>,
    pub coverage_b: Option<f64>,
}

impl Comparison {
    pub fn mean_accuracy_x(&self) -> (f64, Option<f64>) {
        mean_sd(&self.accuracy_x)
    }
}

pub fn compare(a: &Posterior, b: &Posterior, truth: Option<&[f64]>, level: f64) -> Result<Comparison> {
    let m = a.m();
    if b.m() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.m() });
    }
    if let Some(t) = truth {
        if t.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: t.len() });
        }
    }
    let accuracy_x = (0..m)
        .map(|i| marginal_accuracy(&a.x_marginal(i)?, &b.x_marginal(i)?))
        .collect::<Result<Vec<_>>>()?;
    let accuracy_sigma2_eps = marginal_accuracy(&a.sig_eps_marginal()?, &b.sig_eps_marginal()?)?;
    // σ²_x is not identified without differences
    let has_edges = match a {
        Posterior::Variational(f) => !f.b.mu_b.is_empty(),
        Posterior::Chain(c) => c.d > 0,
    };
    let accuracy_sigma2_x =
        if has_edges { Some(marginal_accuracy(&a.sig_x_marginal()?, &b.sig_x_marginal()?)?) } else { None };
    let (coverage_a, coverage_b) = match truth {
        Some(t) => (Some(coverage(t, &a.x_intervals(level)?)?), Some(coverage(t, &b.x_intervals(level)?)?)),
        None => (None, None),
    };
    Ok(Comparison { accuracy_x, accuracy_sigma2_eps, accuracy_sigma2_x, coverage_a, coverage_b })
}
