//! Centralized projection-based prediction-correction method for the
//! variational inequality of a [`ConsensusProblem`].
//!
//! With `u = (x, λ)` and `F(u) = (g(x) − Aᵀλ, Ax − b)`, one iteration is
//!
//! ```text
//! x̃  = P_X[x − R⁻¹(g(x) − Aᵀλ)]              prediction
//! λ̃  = λ − S(Ax̃ − b)
//! x⁺ = P_X[x − αR⁻¹(g(x̃) − Aᵀλ̃)]            correction
//! λ⁺ = λ − αS(Ax̃ − b)
//! ```
//!
//! where `R = diag(r_i I)`, `S = diag(s_i I)` with `s_i = η² r_i / ρ`, and the
//! `r_i` are grown until every agent's gradient ratio `μ_i` is at most `η`.
//! The step is either `α = 1` or `α = γ α*` with
//! `α* = (u − ũ)ᵀd / dᵀH⁻¹d`, `d = H(u − ũ) − ξ`, `H = diag(R, S⁻¹)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::apply_a_into;
use crate::kernels::{dual_scale, dual_step, gradient_ratio, grow_r, primal_step, shrink_r};
use crate::linalg::{dist_inf, dot, norm2, BlockVector};
use crate::problem::{ConsensusProblem, Objective};

/// `u = (x, λ)` with one primal and one dual block per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub x: BlockVector,
    pub lambda: BlockVector,
}

impl PrimalDualPoint {
    pub fn new(x: BlockVector, lambda: BlockVector) -> Result<Self> {
        lambda.check_shape(x.num_blocks(), x.block_len())?;
        Ok(Self { x, lambda })
    }

    pub fn zeros(p: usize, n: usize) -> Self {
        Self { x: BlockVector::zeros(p, n), lambda: BlockVector::zeros(p, n) }
    }

    /// Primal blocks projected from the origin onto each agent's set, `λ = 0`.
    pub fn feasible_origin<O: Objective>(cp: &ConsensusProblem<O>) -> Self {
        let mut u = Self::zeros(cp.p(), cp.dim());
        for (i, a) in cp.agents().iter().enumerate() {
            a.set.project_in_place(u.x.block_mut(i));
        }
        u
    }

    /// `max(‖x − x'‖∞, ‖λ − λ'‖∞)`
    pub fn dist_inf(&self, other: &Self) -> f64 {
        dist_inf(self.x.as_slice(), other.x.as_slice()).max(dist_inf(self.lambda.as_slice(), other.lambda.as_slice()))
    }

    fn is_finite(&self) -> bool {
        self.x.as_slice().iter().chain(self.lambda.as_slice()).all(|v| v.is_finite())
    }
}

/// Per-agent scaling `r_i`, coupled dual scaling `s_i = η² r_i / ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingState {
    r: Vec<f64>,
    s: Vec<f64>,
    eta: f64,
    rho: f64,
}

impl ScalingState {
    pub fn new(p: usize, r_init: f64, eta: f64, rho: f64) -> Result<Self> {
        Self::from_r(vec![r_init; p], eta, rho)
    }

    pub fn from_r(r: Vec<f64>, eta: f64, rho: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("eta must lie in (0, 1), got {eta}")));
        }
        if !(rho > 0.0) || r.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig("scaling parameters must be positive".into()));
        }
        let s = r.iter().map(|&ri| dual_scale(eta, ri, rho)).collect();
        Ok(Self { r, s, eta, rho })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn set_r(&mut self, i: usize, r: f64) {
        self.r[i] = r;
        self.s[i] = dual_scale(self.eta, r, self.rho);
    }

    /// Grows `r_i ← 1.5 · max(1, μ_i) · r_i` for every agent with `μ_i > η`.
    pub fn adjust_r_up(&mut self, mu: &[f64], r_max: f64) -> Result<()> {
        check_len(self.r.len(), mu.len())?;
        for (i, &m) in mu.iter().enumerate() {
            if m > self.eta {
                let r = grow_r(self.r[i], m);
                if !(r <= r_max) {
                    return Err(Error::ScalingOverflow { agent: i, r });
                }
                self.set_r(i, r);
            }
        }
        Ok(())
    }

    /// Shrinks `r_i ← r_i · μ_i / 0.7` for every agent with `μ_i ≤ 0.5`,
    /// never below `r_min`.
    pub fn adjust_r_down(&mut self, mu: &[f64], r_min: f64) -> Result<()> {
        check_len(self.r.len(), mu.len())?;
        for (i, &m) in mu.iter().enumerate() {
            let r = shrink_r(self.r[i], m, r_min);
            self.set_r(i, r);
        }
        Ok(())
    }

    /// `‖(dx, dλ)‖²_H = Σ r_i‖dx_i‖² + Σ ‖dλ_i‖² / s_i`
    pub fn h_norm_sq(&self, dx: &BlockVector, dlambda: &BlockVector) -> f64 {
        let primal: f64 = self.r.iter().zip(dx.blocks()).map(|(r, b)| r * dot(b, b)).sum();
        let dual: f64 = self.s.iter().zip(dlambda.blocks()).map(|(s, b)| dot(b, b) / s).sum();
        primal + dual
    }

    /// `‖(dx, dλ)‖²_{H⁻¹} = Σ ‖dx_i‖² / r_i + Σ s_i ‖dλ_i‖²`
    pub fn h_inv_norm_sq(&self, dx: &BlockVector, dlambda: &BlockVector) -> f64 {
        let primal: f64 = self.r.iter().zip(dx.blocks()).map(|(r, b)| dot(b, b) / r).sum();
        let dual: f64 = self.s.iter().zip(dlambda.blocks()).map(|(s, b)| s * dot(b, b)).sum();
        primal + dual
    }

    /// `‖u − v‖²_H`
    pub fn h_dist_sq(&self, u: &PrimalDualPoint, v: &PrimalDualPoint) -> f64 {
        self.h_norm_sq(&sub(&u.x, &v.x), &sub(&u.lambda, &v.lambda))
    }
}

fn sub(a: &BlockVector, b: &BlockVector) -> BlockVector {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    BlockVector::from_flat(data, a.block_len()).expect("same shape")
}

/// Correction step rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepMode {
    /// `α = 1`; the corrected dual equals the predicted dual.
    Unit,
    /// `α = γ α*` with `γ ∈ [1, 2)`.
    Adaptive { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SolverConfig {
    pub eta: f64,
    pub step: StepMode,
    pub tol: f64,
    pub max_iters: usize,
    pub max_inner_retries: usize,
    pub r_init: f64,
    pub r_max: f64,
    pub r_min: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 0.9,
            step: StepMode::Unit,
            tol: 1e-3,
            max_iters: 10_000,
            max_inner_retries: 50,
            r_init: 1.0,
            r_max: 1e12,
            r_min: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn adaptive(gamma: f64) -> Self {
        Self { step: StepMode::Adaptive { gamma }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(alloc::format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if let StepMode::Adaptive { gamma } = self.step {
            if !(1.0..2.0).contains(&gamma) {
                return bad(alloc::format!("gamma must lie in [1, 2), got {gamma}"));
            }
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return bad("tol must be positive and max_iters at least 1".into());
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_init && self.r_init <= self.r_max) {
            return bad("need 0 < r_min <= r_init <= r_max".into());
        }
        Ok(())
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationDiagnostics {
    pub iter: usize,
    /// Accepted gradient ratio of each agent.
    pub mu: Vec<f64>,
    /// Scaling used by the prediction and correction of this iteration.
    pub r: Vec<f64>,
    pub inner_retries: usize,
    pub alpha_star: Option<f64>,
    pub step: f64,
    #[serde(rename = "E")]
    pub e: f64,
    /// `‖u − ũ‖_H` under this iteration's `H`.
    pub pred_distance: f64,
    /// `‖u−u*‖²_H − ‖u⁺−u*‖²_H − γ(2−γ)(1−η²)/4 · ‖u−ũ‖²_H`; nonnegative
    /// under the contraction guarantee.
    pub contraction_slack: Option<f64>,
    pub objective: f64,
    pub consensus_gap: f64,
}

impl IterationDiagnostics {
    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Iterates left the finite range.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSettings {
    Ppcm(SolverConfig),
    Extragradient { beta: f64, tol: f64, max_iters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub settings: SolverSettings,
    pub iterations: Vec<IterationDiagnostics>,
    pub status: Termination,
    /// Filled in by callers that have a clock.
    pub elapsed_secs: f64,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == Termination::Converged
    }

    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    pub fn final_e(&self) -> Option<f64> {
        self.iterations.last().map(|d| d.e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Last iterate.
    pub point: PrimalDualPoint,
    pub report: RunReport,
}

impl SolveOutcome {
    /// Turns a non-converged run into [`Error::MaxItersExceeded`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.report.converged() {
            Ok(self)
        } else {
            Err(Error::MaxItersExceeded { iterations: self.report.iteration_count() })
        }
    }
}

fn check_point<O: Objective>(cp: &ConsensusProblem<O>, u: &PrimalDualPoint) -> Result<()> {
    cp.check_stacked(&u.x)?;
    cp.check_stacked(&u.lambda)
}

fn check_scaling<O: Objective>(cp: &ConsensusProblem<O>, sc: &ScalingState) -> Result<()> {
    check_len(cp.p(), sc.r.len())
}

/// `x̃_i = P_{X_i}[x_i − (g_i(x_i) − (Aᵀλ)_i) / r_i]` for every agent.
fn primal_prediction<O: Objective>(
    cp: &ConsensusProblem<O>,
    x: &BlockVector,
    grad: &BlockVector,
    coupling: &BlockVector,
    sc: &ScalingState,
    out: &mut BlockVector,
) {
    for (i, a) in cp.agents().iter().enumerate() {
        primal_step(x.block(i), grad.block(i), coupling.block(i), sc.r[i], 1.0, &a.set, out.block_mut(i));
    }
}

/// `out_i = λ_i − coef · s_i · residual_i`
fn dual_update(lambda: &BlockVector, residual: &BlockVector, sc: &ScalingState, alpha: f64, out: &mut BlockVector) {
    for (i, s) in sc.s.iter().enumerate() {
        dual_step(lambda.block(i), residual.block(i), alpha * s, out.block_mut(i));
    }
}

fn ratios(x: &BlockVector, xt: &BlockVector, gx: &BlockVector, gxt: &BlockVector, sc: &ScalingState) -> Vec<f64> {
    (0..sc.r.len())
        .map(|i| gradient_ratio(x.block(i), xt.block(i), gx.block(i), gxt.block(i), sc.r[i]))
        .collect()
}

/// Predictor `ũ` for the current scaling (no criterion loop).
pub fn predict<O: Objective>(u: &PrimalDualPoint, cp: &ConsensusProblem<O>, sc: &ScalingState) -> Result<PrimalDualPoint> {
    check_point(cp, u)?;
    check_scaling(cp, sc)?;
    let (p, n) = (cp.p(), cp.dim());
    let grad = cp.gradient(&u.x)?;
    let mut coupling = BlockVector::zeros(p, n);
    apply_a_into(cp.laplacian(), &u.lambda, &mut coupling);
    let mut x_tilde = BlockVector::zeros(p, n);
    primal_prediction(cp, &u.x, &grad, &coupling, sc, &mut x_tilde);
    let mut residual = BlockVector::zeros(p, n);
    cp.constraint_residual_into(&x_tilde, &mut residual);
    let mut lambda_tilde = BlockVector::zeros(p, n);
    dual_update(&u.lambda, &residual, sc, 1.0, &mut lambda_tilde);
    Ok(PrimalDualPoint { x: x_tilde, lambda: lambda_tilde })
}

/// Per-agent ratios `μ_i = ‖g_i(x_i) − g_i(x̃_i)‖ / (r_i ‖x_i − x̃_i‖)` and
/// whether all of them are at most `η`.
pub fn criterion_holds(
    u: &PrimalDualPoint,
    u_tilde: &PrimalDualPoint,
    sc: &ScalingState,
    grad_x: &BlockVector,
    grad_x_tilde: &BlockVector,
) -> (bool, Vec<f64>) {
    let mu = ratios(&u.x, &u_tilde.x, grad_x, grad_x_tilde, sc);
    (mu.iter().all(|m| *m <= sc.eta), mu)
}

/// Primal part of `ξ = ((g(x) − g(x̃)) − Aᵀ(λ − λ̃), 0)`.
pub fn assemble_xi<O: Objective>(
    cp: &ConsensusProblem<O>,
    u: &PrimalDualPoint,
    u_tilde: &PrimalDualPoint,
) -> Result<BlockVector> {
    check_point(cp, u)?;
    check_point(cp, u_tilde)?;
    let gx = cp.gradient(&u.x)?;
    let gxt = cp.gradient(&u_tilde.x)?;
    Ok(xi_from_parts(cp, u, u_tilde, &gx, &gxt))
}

fn xi_from_parts<O: Objective>(
    cp: &ConsensusProblem<O>,
    u: &PrimalDualPoint,
    u_tilde: &PrimalDualPoint,
    gx: &BlockVector,
    gxt: &BlockVector,
) -> BlockVector {
    let dl = sub(&u.lambda, &u_tilde.lambda);
    let mut a_dl = BlockVector::zeros(cp.p(), cp.dim());
    apply_a_into(cp.laplacian(), &dl, &mut a_dl);
    let data = gx
        .as_slice()
        .iter()
        .zip(gxt.as_slice())
        .zip(a_dl.as_slice())
        .map(|((g, gt), c)| (g - gt) - c)
        .collect();
    BlockVector::from_flat(data, cp.dim()).expect("same shape")
}

/// `d = H(u − ũ) − ξ`, returned in the shape of a primal-dual point. `xi`
/// is the primal part of `ξ`; its dual part is zero.
pub fn direction_d(u: &PrimalDualPoint, u_tilde: &PrimalDualPoint, sc: &ScalingState, xi: &BlockVector) -> Result<PrimalDualPoint> {
    let p = sc.r.len();
    u.x.check_shape(p, u.x.block_len())?;
    u_tilde.x.check_shape(p, u.x.block_len())?;
    xi.check_shape(p, u.x.block_len())?;
    let mut dx = sub(&u.x, &u_tilde.x);
    let mut dl = sub(&u.lambda, &u_tilde.lambda);
    for i in 0..p {
        let (r, s) = (sc.r[i], sc.s[i]);
        dx.block_mut(i).iter_mut().zip(xi.block(i)).for_each(|(v, x)| *v = r * *v - x);
        dl.block_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    Ok(PrimalDualPoint { x: dx, lambda: dl })
}

/// `α* = (u − ũ)ᵀd / ‖H⁻¹d‖²_H`, where `‖H⁻¹d‖²_H = dᵀH⁻¹d`.
pub fn alpha_star(u: &PrimalDualPoint, u_tilde: &PrimalDualPoint, sc: &ScalingState, d: &PrimalDualPoint) -> Result<f64> {
    let num = dot(sub(&u.x, &u_tilde.x).as_slice(), d.x.as_slice())
        + dot(sub(&u.lambda, &u_tilde.lambda).as_slice(), d.lambda.as_slice());
    let den = sc.h_inv_norm_sq(&d.x, &d.lambda);
    let alpha = num / den;
    if !(den > 0.0) || !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::DegeneratePrediction);
    }
    Ok(alpha)
}

/// Corrected iterate `u⁺` for step `alpha`.
pub fn correct<O: Objective>(
    u: &PrimalDualPoint,
    u_tilde: &PrimalDualPoint,
    cp: &ConsensusProblem<O>,
    sc: &ScalingState,
    alpha: f64,
) -> Result<PrimalDualPoint> {
    check_point(cp, u)?;
    check_point(cp, u_tilde)?;
    check_scaling(cp, sc)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("step must be positive, got {alpha}")));
    }
    let (p, n) = (cp.p(), cp.dim());
    let grad_tilde = cp.gradient(&u_tilde.x)?;
    let mut residual = BlockVector::zeros(p, n);
    cp.constraint_residual_into(&u_tilde.x, &mut residual);
    let mut out = PrimalDualPoint::zeros(p, n);
    correction_into(cp, u, &u_tilde.lambda, &grad_tilde, &residual, sc, alpha, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn correction_into<O: Objective>(
    cp: &ConsensusProblem<O>,
    u: &PrimalDualPoint,
    lambda_tilde: &BlockVector,
    grad_tilde: &BlockVector,
    residual_tilde: &BlockVector,
    sc: &ScalingState,
    alpha: f64,
    out: &mut PrimalDualPoint,
) {
    let mut coupling = BlockVector::zeros(cp.p(), cp.dim());
    apply_a_into(cp.laplacian(), lambda_tilde, &mut coupling);
    for (i, a) in cp.agents().iter().enumerate() {
        primal_step(u.x.block(i), grad_tilde.block(i), coupling.block(i), sc.r[i], alpha, &a.set, out.x.block_mut(i));
    }
    dual_update(&u.lambda, residual_tilde, sc, alpha, &mut out.lambda);
}

fn check_feasible<O: Objective>(cp: &ConsensusProblem<O>, x: &BlockVector) -> Result<()> {
    for (i, a) in cp.agents().iter().enumerate() {
        if !a.set.contains(x.block(i), 1e-9)? {
            return Err(Error::InfeasibleStart { agent: i });
        }
    }
    Ok(())
}

/// Runs PPCM from `u0` until `E ≤ tol` or `max_iters`.
///
/// `E` is the largest over agents of `max(‖x_i − x̃_i‖∞, ‖λ_i − λ_i⁺‖∞)`.
/// When `reference` holds a solution, each adaptive-mode iteration records
/// its contraction slack.
pub fn solve<O: Objective>(
    cp: &ConsensusProblem<O>,
    cfg: &SolverConfig,
    u0: &PrimalDualPoint,
    reference: Option<&PrimalDualPoint>,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_point(cp, u0)?;
    if let Some(r) = reference {
        check_point(cp, r)?;
    }
    check_feasible(cp, &u0.x)?;

    let (p, n) = (cp.p(), cp.dim());
    let mut sc = ScalingState::new(p, cfg.r_init, cfg.eta, cp.laplacian().norm_bound())?;
    let mut u = u0.clone();
    let mut next = PrimalDualPoint::zeros(p, n);
    let mut grad = BlockVector::zeros(p, n);
    let mut grad_tilde = BlockVector::zeros(p, n);
    let mut coupling = BlockVector::zeros(p, n);
    let mut residual = BlockVector::zeros(p, n);
    let mut tilde = PrimalDualPoint::zeros(p, n);
    let mut iterations = Vec::new();
    let mut status = Termination::MaxIterations;

    for iter in 0..cfg.max_iters {
        cp.gradient_into(&u.x, &mut grad);
        apply_a_into(cp.laplacian(), &u.lambda, &mut coupling);

        let mut retries = 0;
        let mu = loop {
            primal_prediction(cp, &u.x, &grad, &coupling, &sc, &mut tilde.x);
            cp.gradient_into(&tilde.x, &mut grad_tilde);
            let mu = ratios(&u.x, &tilde.x, &grad, &grad_tilde, &sc);
            match mu.iter().position(|m| *m > cfg.eta) {
                None => break mu,
                Some(agent) if retries == cfg.max_inner_retries => {
                    return Err(Error::InnerLoopStall { agent, retries });
                }
                Some(_) => {
                    sc.adjust_r_up(&mu, cfg.r_max)?;
                    retries += 1;
                }
            }
        };

        cp.constraint_residual_into(&tilde.x, &mut residual);
        dual_update(&u.lambda, &residual, &sc, 1.0, &mut tilde.lambda);
        let pred_sq = sc.h_dist_sq(&u, &tilde);

        let (step, a_star) = match cfg.step {
            StepMode::Unit => (1.0, None),
            StepMode::Adaptive { .. } if pred_sq == 0.0 => (1.0, None),
            StepMode::Adaptive { gamma } => {
                let xi = xi_from_parts(cp, &u, &tilde, &grad, &grad_tilde);
                let d = direction_d(&u, &tilde, &sc, &xi)?;
                let a = alpha_star(&u, &tilde, &sc, &d)?;
                (gamma * a, Some(a))
            }
        };

        correction_into(cp, &u, &tilde.lambda, &grad_tilde, &residual, &sc, step, &mut next);

        let contraction_slack = match (cfg.step, reference) {
            (StepMode::Adaptive { gamma }, Some(star)) => {
                let c = gamma * (2.0 - gamma) * (1.0 - cfg.eta * cfg.eta) / 4.0;
                Some(sc.h_dist_sq(&u, star) - sc.h_dist_sq(&next, star) - c * pred_sq)
            }
            _ => None,
        };

        let e = (0..p)
            .map(|i| dist_inf(u.x.block(i), tilde.x.block(i)).max(dist_inf(u.lambda.block(i), next.lambda.block(i))))
            .fold(0.0, f64::max);
        let r_used = sc.r.clone();
        sc.adjust_r_down(&mu, cfg.r_min)?;
        core::mem::swap(&mut u, &mut next);

        iterations.push(IterationDiagnostics {
            iter,
            mu,
            r: r_used,
            inner_retries: retries,
            alpha_star: a_star,
            step,
            e,
            pred_distance: libm::sqrt(pred_sq),
            contraction_slack,
            objective: cp.objective(&u.x)?,
            consensus_gap: cp.consensus_gap(&u.x),
        });

        if !u.is_finite() {
            status = Termination::Diverged;
            break;
        }
        if e <= cfg.tol {
            status = Termination::Converged;
            break;
        }
    }

    let report = RunReport { settings: SolverSettings::Ppcm(cfg.clone()), iterations, status, elapsed_secs: 0.0 };
    Ok(SolveOutcome { point: u, report })
}

/// `P_Ω[u − F(u)]`, the projection-equation map with unit parameter.
fn natural_map<O: Objective>(cp: &ConsensusProblem<O>, u: &PrimalDualPoint, beta: f64) -> Result<PrimalDualPoint> {
    let (fx, fl) = cp.vi_operator(&u.x, &u.lambda)?;
    let mut out = u.clone();
    for (i, a) in cp.agents().iter().enumerate() {
        let xi = out.x.block_mut(i);
        xi.iter_mut().zip(fx.block(i)).for_each(|(x, f)| *x -= beta * f);
        a.set.project_in_place(xi);
    }
    out.lambda.as_mut_slice().iter_mut().zip(fl.as_slice()).for_each(|(l, f)| *l -= beta * f);
    Ok(out)
}

/// `‖u − P_Ω[u − F(u)]‖∞`; zero exactly at solutions of the VI.
pub fn vi_residual<O: Objective>(u: &PrimalDualPoint, cp: &ConsensusProblem<O>) -> Result<f64> {
    check_point(cp, u)?;
    Ok(u.dist_inf(&natural_map(cp, u, 1.0)?))
}

/// Fixed-step extragradient reference solver:
/// `ũ = P_Ω[u − βF(u)]`, `u⁺ = P_Ω[u − βF(ũ)]`, stopping once `‖u − ũ‖∞ ≤ tol`.
pub fn extragradient_solve<O: Objective>(
    cp: &ConsensusProblem<O>,
    beta: f64,
    tol: f64,
    max_iters: usize,
    u0: &PrimalDualPoint,
) -> Result<SolveOutcome> {
    if !(beta > 0.0) || !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidConfig("extragradient needs beta > 0, tol > 0, max_iters >= 1".into()));
    }
    check_point(cp, u0)?;
    check_feasible(cp, &u0.x)?;
    let mut u = u0.clone();
    let mut iterations = Vec::new();
    let mut status = Termination::MaxIterations;
    for iter in 0..max_iters {
        let tilde = natural_map(cp, &u, beta)?;
        let e = u.dist_inf(&tilde);
        let pred = libm::sqrt(sq_dist(&u, &tilde));
        // The correction evaluates F at ũ but steps from u.
        let (fx, fl) = cp.vi_operator(&tilde.x, &tilde.lambda)?;
        let mut next = u.clone();
        for (i, a) in cp.agents().iter().enumerate() {
            let xi = next.x.block_mut(i);
            xi.iter_mut().zip(fx.block(i)).for_each(|(x, f)| *x -= beta * f);
            a.set.project_in_place(xi);
        }
        next.lambda.as_mut_slice().iter_mut().zip(fl.as_slice()).for_each(|(l, f)| *l -= beta * f);
        u = next;
        let finite = u.is_finite();
        iterations.push(IterationDiagnostics {
            iter,
            mu: Vec::new(),
            r: Vec::new(),
            inner_retries: 0,
            alpha_star: None,
            step: beta,
            e,
            pred_distance: pred,
            contraction_slack: None,
            objective: if finite { cp.objective(&u.x)? } else { f64::NAN },
            consensus_gap: cp.consensus_gap(&u.x),
        });
        if !finite {
            status = Termination::Diverged;
            break;
        }
        if e <= tol {
            status = Termination::Converged;
            break;
        }
    }
    let report = RunReport {
        settings: SolverSettings::Extragradient { beta, tol, max_iters },
        iterations,
        status,
        elapsed_secs: 0.0,
    };
    Ok(SolveOutcome { point: u, report })
}

fn sq_dist(a: &PrimalDualPoint, b: &PrimalDualPoint) -> f64 {
    let dx = norm2(sub(&a.x, &b.x).as_slice());
    let dl = norm2(sub(&a.lambda, &b.lambda).as_slice());
    dx * dx + dl * dl
}
