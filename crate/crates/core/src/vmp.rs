//! Variational message passing on the factor graph of the base model.
//!
//! Fragments (numbered as in the graph):
//! 1 `p(a_x)`, 2 `p(σ²_x | a_x)`, 3 `p(x | b, σ²_x)` with `p(b)` folded in,
//! 4 `p(y | x, σ²_ε)`, 5 `p(σ²_ε | a_ε)`, 6 `p(a_ε)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedSpdMatrix, SelectedInverse, SelectedInversePattern};
use crate::contrast::{apply_l, diag_lmlt, lt_diag_l};
use crate::error::{Error, Result};
use crate::expfam::{Family, InverseChiSq, NaturalParams};
use crate::model::{
    rel_change, rel_change_scalar, rel_change_vec_elementwise, Convergence, FitOptions, FitResult,
    MfvbInit, ModelHyperparams, Problem,
};
use crate::penalties::PenaltySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    X,
    B,
    SigEps,
    SigX,
    AEps,
    AX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FragmentId {
    PriorAX = 1,
    IteratedSigX = 2,
    Penalization = 3,
    Likelihood = 4,
    IteratedSigEps = 5,
    PriorAEps = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    ToNode,
    ToFactor,
}

/// Graph labels carried by the Inverse G-Wishart fragments; inert for the
/// 1×1 case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphLabel {
    Full,
    Diag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub id: FragmentId,
    pub neighbors: Vec<Node>,
    pub label: Option<GraphLabel>,
}

/// Multivariate normal natural parameters `[η₁; −½ vec(P)]` with the
/// precision-like matrix `P` kept in banded form.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnNaturals {
    pub eta1: Vec<f64>,
    pub prec: BandedSpdMatrix,
}

impl MvnNaturals {
    fn zeros_like(problem: &Problem) -> Self {
        Self { eta1: vec![0.0; problem.shape.m()], prec: problem.empty_precision() }
    }

    fn add_assign(&mut self, other: &MvnNaturals) -> Result<()> {
        for (a, b) in self.eta1.iter_mut().zip(&other.eta1) {
            *a += b;
        }
        self.prec.add_scaled(&other.prec, 1.0)
    }

    /// Full `m + m²` vector.
    pub fn to_natural_params(&self) -> NaturalParams {
        let m = self.eta1.len();
        let mut values = self.eta1.clone();
        values.reserve(m * m);
        for j in 0..m {
            for i in 0..m {
                values.push(-0.5 * self.prec.get(i, j));
            }
        }
        NaturalParams { family: Family::MultivariateNormal, values }
    }

    /// Mean and the covariance entries needed downstream.
    fn moments(&self, problem: &Problem) -> Result<(Vec<f64>, SelectedInverse)> {
        let f = self.prec.cholesky()?;
        let mu = f.solve(&self.eta1)?;
        let pattern = SelectedInversePattern {
            want_diagonal: true,
            offsets: problem.sigma_offsets(),
            gram: Some(&problem.ktk),
        };
        Ok((mu, f.selected_inverse(&pattern)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Mvn(MvnNaturals),
    Scalar(NaturalParams),
}

impl Message {
    fn mvn(&self) -> &MvnNaturals {
        match self {
            Message::Mvn(p) => p,
            Message::Scalar(_) => panic!("expected a Gaussian message"),
        }
    }
}

fn ichisq(eta1: f64, eta2: f64) -> Message {
    Message::Scalar(NaturalParams::inverse_chi_sq(eta1, eta2))
}

/// `E(1/θ)` from combined Inverse-χ² natural parameters.
fn recip_mean(eta: [f64; 2]) -> Result<f64> {
    if !(eta[1] < 0.0) || !(eta[0] < -1.0) {
        return Err(Error::ImproperDensity("combined Inverse-χ² parameters are improper"));
    }
    Ok((eta[0] + 1.0) / eta[1])
}

/// `η_{p(a)→a}` for the Half-Cauchy auxiliary `a ~ Inverse-χ²(1, 1/A²)`.
pub fn inverse_chi_sq_prior_fragment(a: f64) -> Result<NaturalParams> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument("prior scale A must be positive"));
    }
    Ok(NaturalParams::inverse_chi_sq(-1.5, -0.5 / (a * a)))
}

/// Messages of `p(σ² | a)`: to `σ²` and to `a`, given the combined
/// parameters of each node.
pub fn iterated_inverse_chi_sq_fragment(
    sigma_combined: &NaturalParams,
    a_combined: &NaturalParams,
) -> Result<(NaturalParams, NaturalParams)> {
    let e_recip_a = recip_mean([a_combined.values[0], a_combined.values[1]])?;
    let e_recip_sigma = recip_mean([sigma_combined.values[0], sigma_combined.values[1]])?;
    Ok((
        NaturalParams::inverse_chi_sq(-1.5, -0.5 * e_recip_a),
        NaturalParams::inverse_chi_sq(-0.5, -0.5 * e_recip_sigma),
    ))
}

/// Outputs of the penalization fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizationOutput {
    pub to_x: MvnNaturals,
    pub to_sig_x: NaturalParams,
    pub mu_b: Vec<f64>,
    pub mu_x: Vec<f64>,
}

/// Penalization fragment: `ω₂ = μ` and `Ω₁` from the combined x parameters,
/// `ω₅ = (Lω₂)² + diag(LΩ₁Lᵀ)`, `ζ = E(1/σ²_x)·ω₅`, then the penalty's
/// `b` update.
pub fn penalization_fragment_update(
    problem: &Problem,
    penalty: &PenaltySpec,
    x_combined: &MvnNaturals,
    sig_x_combined: &NaturalParams,
) -> Result<PenalizationOutput> {
    let (mu, sel) = x_combined.moments(problem)?;
    penalization_from_moments(problem, penalty, &mu, &sel, sig_x_combined)
}

fn penalization_from_moments(
    problem: &Problem,
    penalty: &PenaltySpec,
    mu: &[f64],
    sel: &SelectedInverse,
    sig_x_combined: &NaturalParams,
) -> Result<PenalizationOutput> {
    let shape = problem.shape;
    let d = shape.d();
    let e_recip = recip_mean([sig_x_combined.values[0], sig_x_combined.values[1]])?;
    let (omega5, mu_b) = if d > 0 {
        let omega3 = apply_l(shape, mu)?;
        let omega4 = diag_lmlt(shape, sel)?;
        let omega5: Vec<f64> = omega3.iter().zip(&omega4).map(|(a, v)| a * a + v).collect();
        let omega6: Vec<f64> = omega5.iter().map(|w| e_recip * w).collect();
        let mu_b = penalty.b_update(&omega6)?;
        (omega5, mu_b)
    } else {
        (Vec::new(), Vec::new())
    };
    let mut prec = problem.empty_precision();
    if d > 0 {
        prec.add_scaled(&lt_diag_l(shape, &mu_b)?, e_recip)?;
    }
    let to_x = MvnNaturals { eta1: vec![0.0; shape.m()], prec };
    let to_sig_x = NaturalParams::inverse_chi_sq(-0.5 * d as f64, -0.5 * crate::math::dot(&mu_b, &omega5));
    Ok(PenalizationOutput { to_x, to_sig_x, mu_b, mu_x: mu.to_vec() })
}

/// Gaussian likelihood fragment messages to `x` and `σ²_ε`.
pub fn gaussian_likelihood_fragment_update(
    problem: &Problem,
    x_combined: &MvnNaturals,
    sig_eps_combined: &NaturalParams,
) -> Result<(MvnNaturals, NaturalParams)> {
    let (mu, sel) = x_combined.moments(problem)?;
    likelihood_from_moments(problem, &mu, &sel, sig_eps_combined)
}

fn likelihood_from_moments(
    problem: &Problem,
    mu: &[f64],
    sel: &SelectedInverse,
    sig_eps_combined: &NaturalParams,
) -> Result<(MvnNaturals, NaturalParams)> {
    let e_recip = recip_mean([sig_eps_combined.values[0], sig_eps_combined.values[1]])?;
    let mut prec = problem.empty_precision();
    prec.add_scaled(&problem.ktk, e_recip)?;
    let to_x = MvnNaturals { eta1: problem.kty.iter().map(|v| e_recip * v).collect(), prec };
    // yᵀy − 2μᵀKᵀy + μᵀKᵀKμ + tr(KᵀKΣ), with the quadratic via the residual
    let kmu = problem.k.matvec(mu)?;
    let rss: f64 = problem.y.iter().zip(&kmu).map(|(y, k)| (y - k) * (y - k)).sum();
    let g = -0.5 * (rss + sel.gram_trace.unwrap_or(0.0));
    let m = problem.shape.m() as f64;
    Ok((to_x, NaturalParams::inverse_chi_sq(-0.5 * m, g)))
}

/// Factor graph with every message stored under `(fragment, node, direction)`.
#[derive(Debug, Clone)]
pub struct FactorGraph<'a> {
    problem: &'a Problem,
    penalty: PenaltySpec,
    hyper: ModelHyperparams,
    pub fragments: Vec<Fragment>,
    messages: BTreeMap<(FragmentId, Node, Direction), Message>,
    mu_b: Vec<f64>,
}

impl<'a> FactorGraph<'a> {
    pub fn new(problem: &'a Problem, penalty: PenaltySpec, hyper: ModelHyperparams) -> Result<Self> {
        hyper.validate()?;
        use FragmentId::*;
        use Node::*;
        let fragments = vec![
            Fragment { id: PriorAX, neighbors: vec![AX], label: Some(GraphLabel::Diag) },
            Fragment { id: IteratedSigX, neighbors: vec![SigX, AX], label: Some(GraphLabel::Full) },
            Fragment { id: Penalization, neighbors: vec![X, B, SigX], label: None },
            Fragment { id: Likelihood, neighbors: vec![X, SigEps], label: None },
            Fragment { id: IteratedSigEps, neighbors: vec![SigEps, AEps], label: Some(GraphLabel::Full) },
            Fragment { id: PriorAEps, neighbors: vec![AEps], label: Some(GraphLabel::Diag) },
        ];
        let mut g = Self {
            problem,
            penalty,
            hyper,
            fragments,
            messages: BTreeMap::new(),
            mu_b: vec![1.0; problem.shape.d()],
        };
        g.initialize()?;
        Ok(g)
    }

    fn initialize(&mut self) -> Result<()> {
        use Direction::*;
        use FragmentId::*;
        use Node::*;
        let p = self.problem;
        let identity = {
            let mut z = MvnNaturals::zeros_like(p);
            for i in 0..p.shape.m() {
                z.prec.set(i, i, 1.0);
            }
            z
        };
        let data_msg = {
            let mut z = MvnNaturals::zeros_like(p);
            z.eta1.copy_from_slice(&p.kty);
            z.prec.add_scaled(&p.ktk, 1.0)?;
            z
        };
        let prior_ax = Message::Scalar(inverse_chi_sq_prior_fragment(self.hyper.a_x)?);
        let prior_aeps = Message::Scalar(inverse_chi_sq_prior_fragment(self.hyper.a_eps)?);
        let default = ichisq(-1.5, -1.0);
        let msgs = &mut self.messages;
        msgs.insert((Penalization, X, ToNode), Message::Mvn(identity.clone()));
        msgs.insert((Likelihood, X, ToNode), Message::Mvn(identity.clone()));
        msgs.insert((Penalization, X, ToFactor), Message::Mvn(data_msg));
        msgs.insert((Likelihood, X, ToFactor), Message::Mvn(identity));
        for key in [
            (Penalization, SigX, ToNode),
            (Penalization, SigX, ToFactor),
            (IteratedSigX, SigX, ToNode),
            (IteratedSigX, SigX, ToFactor),
            (IteratedSigX, AX, ToNode),
            (Likelihood, SigEps, ToNode),
            (Likelihood, SigEps, ToFactor),
            (IteratedSigEps, SigEps, ToNode),
            (IteratedSigEps, SigEps, ToFactor),
            (IteratedSigEps, AEps, ToNode),
            (PriorAX, AX, ToFactor),
            (PriorAEps, AEps, ToFactor),
        ] {
            msgs.insert(key, default.clone());
        }
        msgs.insert((PriorAX, AX, ToNode), prior_ax.clone());
        msgs.insert((IteratedSigX, AX, ToFactor), prior_ax);
        msgs.insert((PriorAEps, AEps, ToNode), prior_aeps.clone());
        msgs.insert((IteratedSigEps, AEps, ToFactor), prior_aeps);
        Ok(())
    }

    /// Graph whose starting messages reproduce the moments in `init`: the
    /// x messages are what fragments 3 and 4 would send given those moments,
    /// and both Inverse-χ² messages into `σ²_ε` (or `σ²_x`) are
    /// `(−3/2, −1/s)` so that the combined `E(1/θ)` equals `s`.
    pub fn with_init(
        problem: &'a Problem,
        penalty: PenaltySpec,
        hyper: ModelHyperparams,
        init: &MfvbInit,
    ) -> Result<Self> {
        use Direction::*;
        use FragmentId::*;
        use Node::*;
        let mut g = Self::new(problem, penalty, hyper)?;
        let d = problem.shape.d();
        let mu_b = match &init.mu_b {
            Some(b) if b.len() == d => b.clone(),
            Some(b) => return Err(Error::DimensionMismatch { expected: d, got: b.len() }),
            None => vec![1.0; d],
        };
        let s = [init.recip_sig_eps, init.recip_sig_x, init.recip_a_eps, init.recip_a_x];
        if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("initial moments must be positive"));
        }
        let mut lik = MvnNaturals::zeros_like(problem);
        lik.eta1.iter_mut().zip(&problem.kty).for_each(|(a, b)| *a = init.recip_sig_eps * b);
        lik.prec.add_scaled(&problem.ktk, init.recip_sig_eps)?;
        let mut pen = MvnNaturals::zeros_like(problem);
        if d > 0 {
            pen.prec.add_scaled(&lt_diag_l(problem.shape, &mu_b)?, init.recip_sig_x)?;
        }
        let msgs = &mut g.messages;
        msgs.insert((Likelihood, X, ToNode), Message::Mvn(lik));
        msgs.insert((Penalization, X, ToNode), Message::Mvn(pen));
        let sc = |v: f64| ichisq(-1.5, -1.0 / v);
        msgs.insert((Likelihood, SigEps, ToNode), sc(s[0]));
        msgs.insert((IteratedSigEps, SigEps, ToNode), sc(s[0]));
        msgs.insert((Penalization, SigX, ToNode), sc(s[1]));
        msgs.insert((IteratedSigX, SigX, ToNode), sc(s[1]));
        msgs.insert((IteratedSigEps, AEps, ToNode), sc(s[2]));
        msgs.insert((IteratedSigX, AX, ToNode), sc(s[3]));
        g.mu_b = mu_b;
        Ok(g)
    }

    pub fn message(&self, f: FragmentId, node: Node, dir: Direction) -> Option<&Message> {
        self.messages.get(&(f, node, dir))
    }

    fn adjacent(&self, node: Node) -> Vec<FragmentId> {
        self.fragments.iter().filter(|f| f.neighbors.contains(&node)).map(|f| f.id).collect()
    }

    /// Sum of all factor-to-node messages into `node`, skipping `except`.
    fn sum_into(&self, node: Node, except: Option<FragmentId>) -> Result<Option<Message>> {
        let mut acc: Option<Message> = None;
        for f in self.adjacent(node) {
            if Some(f) == except {
                continue;
            }
            let Some(msg) = self.messages.get(&(f, node, Direction::ToNode)) else { continue };
            acc = Some(match (acc, msg) {
                (None, m) => m.clone(),
                (Some(Message::Mvn(mut a)), Message::Mvn(b)) => {
                    a.add_assign(b)?;
                    Message::Mvn(a)
                }
                (Some(Message::Scalar(a)), Message::Scalar(b)) => Message::Scalar(a.add(b)?),
                _ => return Err(Error::Structure("mixed message families at one node")),
            });
        }
        Ok(acc)
    }

    /// Natural parameters of `q(node)`: the sum of all incoming messages.
    pub fn q_natural(&self, node: Node) -> Result<Option<Message>> {
        self.sum_into(node, None)
    }

    /// Node-to-factor refresh: each outgoing message is the sum of the other
    /// fragments' messages into the node.
    pub fn refresh_node_to_factor(&mut self) -> Result<()> {
        for node in [Node::X, Node::SigEps, Node::SigX, Node::AEps, Node::AX] {
            for f in self.adjacent(node) {
                if let Some(msg) = self.sum_into(node, Some(f))? {
                    self.messages.insert((f, node, Direction::ToFactor), msg);
                }
            }
        }
        Ok(())
    }

    /// Largest violation of `η_q(θ) = η_{f→θ} + η_{θ→f}` over all edges,
    /// relative to the size of the terms.
    pub fn conservation_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut note = |q: f64, a: f64, b: f64| {
            let scale = q.abs().max(a.abs()).max(b.abs()).max(1.0);
            worst = worst.max((q - a - b).abs() / scale);
        };
        for node in [Node::X, Node::SigEps, Node::SigX, Node::AEps, Node::AX] {
            let Some(q) = self.q_natural(node)? else { continue };
            for f in self.adjacent(node) {
                let (Some(to), Some(from)) = (
                    self.messages.get(&(f, node, Direction::ToNode)),
                    self.messages.get(&(f, node, Direction::ToFactor)),
                ) else {
                    continue;
                };
                match (&q, to, from) {
                    (Message::Mvn(q), Message::Mvn(a), Message::Mvn(b)) => {
                        for i in 0..q.eta1.len() {
                            note(q.eta1[i], a.eta1[i], b.eta1[i]);
                        }
                        for (i, j, v) in q.prec.triplets() {
                            note(v, a.prec.get(i, j), b.prec.get(i, j));
                        }
                    }
                    (Message::Scalar(q), Message::Scalar(a), Message::Scalar(b)) => {
                        for k in 0..2 {
                            note(q.values[k], a.values[k], b.values[k]);
                        }
                    }
                    _ => return Err(Error::Structure("mixed message families at one node")),
                }
            }
        }
        Ok(worst)
    }

    fn combined(&self, f: FragmentId, node: Node) -> Result<Message> {
        let to = self.messages.get(&(f, node, Direction::ToNode));
        let from = self.messages.get(&(f, node, Direction::ToFactor));
        match (to, from) {
            (Some(Message::Mvn(a)), Some(Message::Mvn(b))) => {
                let mut c = a.clone();
                c.add_assign(b)?;
                Ok(Message::Mvn(c))
            }
            (Some(Message::Scalar(a)), Some(Message::Scalar(b))) => Ok(Message::Scalar(a.add(b)?)),
            _ => Err(Error::Structure("missing message on an edge")),
        }
    }

    /// Factor-to-node updates in fragment order 1 → 6. Returns `μ_q(x)`
    /// implied by the x parameters used during the sweep.
    pub fn update_fragments(&mut self) -> Result<Vec<f64>> {
        use Direction::*;
        use FragmentId::*;
        use Node::*;
        // 1: constant prior on a_x
        let prior_ax = Message::Scalar(inverse_chi_sq_prior_fragment(self.hyper.a_x)?);
        self.messages.insert((PriorAX, AX, ToNode), prior_ax);

        // 2: p(σ²_x | a_x)
        let sig = self.combined(IteratedSigX, SigX)?;
        let a = self.combined(IteratedSigX, AX)?;
        let (to_sig, to_a) = iterated_inverse_chi_sq_fragment(&as_np(&sig), &as_np(&a))?;
        self.messages.insert((IteratedSigX, SigX, ToNode), Message::Scalar(to_sig));
        self.messages.insert((IteratedSigX, AX, ToNode), Message::Scalar(to_a));

        // 3 and 4 read the same combined x parameters; factor once
        let x3 = self.combined(Penalization, X)?;
        let x4 = self.combined(Likelihood, X)?;
        let (mu, sel) = x3.mvn().moments(self.problem)?;
        let sel4 = if x3 == x4 { None } else { Some(x4.mvn().moments(self.problem)?) };

        let sig_x = self.combined(Penalization, SigX)?;
        let out = penalization_from_moments(self.problem, &self.penalty, &mu, &sel, &as_np(&sig_x))?;
        self.messages.insert((Penalization, X, ToNode), Message::Mvn(out.to_x));
        self.messages.insert((Penalization, SigX, ToNode), Message::Scalar(out.to_sig_x));
        self.mu_b = out.mu_b;

        let sig_eps = self.combined(Likelihood, SigEps)?;
        let (mu4, s4) = match &sel4 {
            Some((m, s)) => (m.as_slice(), s),
            None => (mu.as_slice(), &sel),
        };
        let (to_x, to_eps) = likelihood_from_moments(self.problem, mu4, s4, &as_np(&sig_eps))?;
        self.messages.insert((Likelihood, X, ToNode), Message::Mvn(to_x));
        self.messages.insert((Likelihood, SigEps, ToNode), Message::Scalar(to_eps));

        // 5: p(σ²_ε | a_ε)
        let sig = self.combined(IteratedSigEps, SigEps)?;
        let a = self.combined(IteratedSigEps, AEps)?;
        let (to_sig, to_a) = iterated_inverse_chi_sq_fragment(&as_np(&sig), &as_np(&a))?;
        self.messages.insert((IteratedSigEps, SigEps, ToNode), Message::Scalar(to_sig));
        self.messages.insert((IteratedSigEps, AEps, ToNode), Message::Scalar(to_a));

        // 6: constant prior on a_ε
        let prior_aeps = Message::Scalar(inverse_chi_sq_prior_fragment(self.hyper.a_eps)?);
        self.messages.insert((PriorAEps, AEps, ToNode), prior_aeps);
        Ok(mu)
    }

    fn scale_q(&self, node: Node) -> Result<InverseChiSq> {
        match self.q_natural(node)? {
            Some(Message::Scalar(p)) => p.as_inverse_chi_sq(),
            _ => Err(Error::Structure("scale node without messages")),
        }
    }

    /// `E(1/θ)` for the four scale nodes, in the order σ²_ε, a_ε, σ²_x, a_x.
    pub fn scale_recip_means(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (k, node) in [Node::SigEps, Node::AEps, Node::SigX, Node::AX].into_iter().enumerate() {
            out[k] = self.scale_q(node)?.mean_reciprocal();
        }
        Ok(out)
    }

    /// q-densities from the summed messages.
    pub fn extract(&self, iterations: usize, converged: bool, trace: Vec<f64>) -> Result<FitResult> {
        let q_x = match self.q_natural(Node::X)? {
            Some(Message::Mvn(q)) => q,
            _ => return Err(Error::Structure("x node without messages")),
        };
        let (mu, sel) = q_x.moments(self.problem)?;
        let m1 = self.problem.shape.m1;
        let off1 = sel.offdiagonal(1).map(|v| v.to_vec()).unwrap_or_default();
        let off_m1 = if m1 == 1 { off1.clone() } else { sel.offdiagonal(m1).map(|v| v.to_vec()).unwrap_or_default() };
        Ok(FitResult {
            mu_x: mu,
            sigma_x_diag: sel.diagonal.clone().unwrap_or_default(),
            sigma_x_off1: off1,
            sigma_x_off_m1: off_m1,
            b: self.penalty.moments(self.mu_b.clone()),
            sig_eps: self.scale_q(Node::SigEps)?,
            sig_x: self.scale_q(Node::SigX)?,
            a_eps: self.scale_q(Node::AEps)?,
            a_x: self.scale_q(Node::AX)?,
            iterations,
            converged,
            trace,
        })
    }

    pub fn mu_b(&self) -> &[f64] {
        &self.mu_b
    }
}

fn as_np(m: &Message) -> NaturalParams {
    match m {
        Message::Scalar(p) => p.clone(),
        Message::Mvn(_) => panic!("expected an Inverse-χ² message"),
    }
}

/// Runs message passing to convergence and extracts the q-densities.
pub fn run_vmp(
    problem: &Problem,
    penalty: &PenaltySpec,
    hyper: &ModelHyperparams,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let mut graph = if opts.init == MfvbInit::default() {
        FactorGraph::new(problem, *penalty, *hyper)?
    } else {
        FactorGraph::with_init(problem, *penalty, *hyper, &opts.init)?
    };
    let mut mu_old = vec![0.0; problem.shape.m()];
    let mut scales_old = [0.0f64; 4];
    let mut b_old = graph.mu_b.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        graph.refresh_node_to_factor()?;
        debug_assert!(graph.conservation_residual()? <= 1e-9);
        let mu = graph.update_fragments()?;
        let mut change = rel_change(&mu, &mu_old);
        if opts.convergence == Convergence::AllParameters {
            let scales = graph.scale_recip_means()?;
            if it <= 2 {
                change = f64::INFINITY;
            } else {
                for (a, b) in scales.iter().zip(&scales_old) {
                    change = change.max(rel_change_scalar(*a, *b));
                }
                change = change.max(rel_change_vec_elementwise(&graph.mu_b, &b_old));
            }
            scales_old = scales;
            b_old = graph.mu_b.clone();
        }
        mu_old = mu;
        trace.push(change);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    graph.extract(iterations, converged, trace)
}
