//! Mean-field variational Bayes coordinate ascent.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{InverseMethod, SelectedInversePattern};
use crate::contrast::{apply_l, diag_lmlt, lt_diag_l};
use crate::error::{Error, Result};
use crate::expfam::InverseChiSq;
use crate::model::{
    rel_change, rel_change_scalar, rel_change_vec_elementwise, Convergence, FitOptions, FitResult,
    ModelHyperparams, Problem,
};
use crate::penalties::PenaltySpec;

/// Moments after one pass of the update cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MfvbState {
    pub iteration: usize,
    pub mu_x: Vec<f64>,
    pub sigma_diag: Vec<f64>,
    pub sigma_off1: Vec<f64>,
    pub sigma_off_m1: Vec<f64>,
    pub lambda_sig_eps: f64,
    pub lambda_a_eps: f64,
    pub lambda_sig_x: f64,
    pub lambda_a_x: f64,
    pub recip_sig_eps: f64,
    pub recip_a_eps: f64,
    pub recip_sig_x: f64,
    pub recip_a_x: f64,
    pub mu_b: Vec<f64>,
}

pub fn fit_mfvb(
    problem: &Problem,
    penalty: &PenaltySpec,
    hyper: &ModelHyperparams,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_mfvb_observed(problem, penalty, hyper, opts, |_| {})
}

/// As [`fit_mfvb`], calling `observe` after every iteration.
pub fn fit_mfvb_observed(
    problem: &Problem,
    penalty: &PenaltySpec,
    hyper: &ModelHyperparams,
    opts: &FitOptions,
    mut observe: impl FnMut(&MfvbState),
) -> Result<FitResult> {
    hyper.validate()?;
    opts.validate()?;
    let shape = problem.shape;
    let m = shape.m();
    let d = shape.d();
    let kappa_eps = (m + 1) as f64;
    let kappa_x = (d + 1) as f64;
    let offsets = problem.sigma_offsets();

    let init = &opts.init;
    let mut s_eps = init.recip_sig_eps;
    let mut s_x = init.recip_sig_x;
    let mut s_aeps = init.recip_a_eps;
    let mut s_ax = init.recip_a_x;
    let mut mu_b = match &init.mu_b {
        Some(b) if b.len() == d => b.clone(),
        Some(b) => return Err(Error::DimensionMismatch { expected: d, got: b.len() }),
        None => vec![1.0; d],
    };
    if !(s_eps > 0.0 && s_x > 0.0 && s_aeps > 0.0 && s_ax > 0.0) {
        return Err(Error::InvalidArgument("initial moments must be positive"));
    }

    let mut mu = vec![0.0; m];
    let mut state = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut lams = [0.0f64; 4];

    for it in 1..=opts.max_iter {
        iterations = it;
        let mut prec = problem.empty_precision();
        prec.add_scaled(&problem.ktk, s_eps)?;
        if d > 0 {
            prec.add_scaled(&lt_diag_l(shape, &mu_b)?, s_x)?;
        }
        let f = prec.cholesky()?;
        let mut mu_new = f.solve(&problem.kty)?;
        mu_new.iter_mut().for_each(|v| *v *= s_eps);

        let pattern = SelectedInversePattern {
            want_diagonal: true,
            offsets: offsets.clone(),
            gram: Some(&problem.ktk),
        };
        let sel = f.selected_inverse_with(&pattern, InverseMethod::Auto)?;

        let kmu = problem.k.matvec(&mu_new)?;
        let rss: f64 = problem.y.iter().zip(&kmu).map(|(y, k)| (y - k) * (y - k)).sum();
        let lam_eps = s_aeps + rss + sel.gram_trace.unwrap_or(0.0);
        s_eps = kappa_eps / lam_eps;
        let lam_aeps = s_eps + 1.0 / (hyper.a_eps * hyper.a_eps);
        s_aeps = 2.0 / lam_aeps;

        let tau1: Vec<f64> = if d > 0 {
            let lmu = apply_l(shape, &mu_new)?;
            let dl = diag_lmlt(shape, &sel)?;
            lmu.iter().zip(&dl).map(|(a, v)| a * a + v).collect()
        } else {
            Vec::new()
        };
        let lam_x = s_ax + crate::math::dot(&mu_b, &tau1);
        s_x = kappa_x / lam_x;
        let lam_ax = s_x + 1.0 / (hyper.a_x * hyper.a_x);
        s_ax = 2.0 / lam_ax;
        let tau2: Vec<f64> = tau1.iter().map(|t| s_x * t).collect();
        let mu_b_new = penalty.b_update(&tau2)?;

        let new_lams = [lam_eps, lam_aeps, lam_x, lam_ax];
        let mut change = rel_change(&mu_new, &mu);
        if opts.convergence == Convergence::AllParameters {
            if it == 1 {
                change = f64::INFINITY;
            } else {
                for (a, b) in new_lams.iter().zip(&lams) {
                    change = change.max(rel_change_scalar(*a, *b));
                }
                change = change.max(rel_change_vec_elementwise(&mu_b_new, &mu_b));
            }
        }
        lams = new_lams;
        mu = mu_new;
        mu_b = mu_b_new;
        trace.push(change);

        let sigma_diag = sel.diagonal.clone().unwrap_or_default();
        let off1 = sel.offdiagonal(1).map(|v| v.to_vec()).unwrap_or_default();
        let off_m1 = if shape.m1 == 1 {
            off1.clone()
        } else {
            sel.offdiagonal(shape.m1).map(|v| v.to_vec()).unwrap_or_default()
        };
        let st = MfvbState {
            iteration: it,
            mu_x: mu.clone(),
            sigma_diag,
            sigma_off1: off1,
            sigma_off_m1: off_m1,
            lambda_sig_eps: lam_eps,
            lambda_a_eps: lam_aeps,
            lambda_sig_x: lam_x,
            lambda_a_x: lam_ax,
            recip_sig_eps: s_eps,
            recip_a_eps: s_aeps,
            recip_sig_x: s_x,
            recip_a_x: s_ax,
            mu_b: mu_b.clone(),
        };
        observe(&st);
        state = Some(st);
        if !change.is_finite() && it > 1 {
            return Err(Error::Numerical("non-finite relative change"));
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let st = state.expect("at least one iteration");
    Ok(FitResult {
        mu_x: st.mu_x,
        sigma_x_diag: st.sigma_diag,
        sigma_x_off1: st.sigma_off1,
        sigma_x_off_m1: st.sigma_off_m1,
        b: penalty.moments(st.mu_b),
        sig_eps: InverseChiSq::new(kappa_eps, st.lambda_sig_eps)?,
        sig_x: InverseChiSq::new(kappa_x, st.lambda_sig_x)?,
        a_eps: InverseChiSq::new(2.0, st.lambda_a_eps)?,
        a_x: InverseChiSq::new(2.0, st.lambda_a_x)?,
        iterations,
        converged,
        trace,
    })
}
