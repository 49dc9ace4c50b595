//! Proximal-gradient solver for the ℓ₁-regularized augmented Lagrangian,
//! plus a dense Adam baseline used for comparisons.
//!
//! The central property of the proximal path is that soft-thresholding
//! writes exact floating-point zeros, so the sparsity pattern of the
//! returned matrix is meaningful without any post-hoc cutoff. The outer
//! loop certifies convergence structurally for the smoothed hybrid
//! constraint: once the (dust-absorbed) support is acyclic, the exact
//! constraint value of the non-smooth companion is zero by construction,
//! not merely small.

use alloc::vec::Vec;

use crate::constraint::{constraint_value, ConstraintKind, ConstraintSpec};
use crate::linalg::{is_dag_support, DenseMatrix};
use crate::metrics::BoolAdjacency;
use crate::objective::{
    alm_eval_cached, alm_value_cached, unsmoothed_companion, AlmParams, FitContext,
};

/// Tunables for the proximal-gradient / augmented-Lagrangian run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OptimConfig {
    /// ℓ₁ regularization weight.
    pub lambda1: f64,
    /// Step size the line search starts from at the top of every inner
    /// loop; accepted steps warm-start the next trial at twice the
    /// accepted value, capped here.
    pub eta_init: f64,
    /// Multiplicative backtracking factor in (0, 1).
    pub ls_shrink: f64,
    /// Maximum backtracking evaluations per step.
    pub ls_max: usize,
    /// Inner loop stops when the prox-gradient mapping norm
    /// `‖W⁺ − W‖_F / η` falls to this level.
    pub inner_tol: f64,
    /// Maximum accepted steps per inner loop.
    pub inner_max: usize,
    /// Initial Lagrange multiplier.
    pub mu0: f64,
    /// Initial quadratic penalty weight.
    pub rho0: f64,
    /// Penalty growth factor applied when the constraint stalls.
    pub rho_growth: f64,
    /// Constraint progress ratio in (0, 1): the penalty grows unless the
    /// constraint value dropped below this fraction of its previous value.
    pub h_progress: f64,
    /// Constraint tolerance for kinds certified by value rather than by
    /// support acyclicity.
    pub h_tol: f64,
    /// Maximum outer (multiplier) updates.
    pub outer_max: usize,
    /// Permit non-smooth constraint kinds, treating the sign-convention
    /// subgradient as if it were a gradient. Exists to demonstrate the
    /// known line-search failure mode, not for ordinary use.
    pub subgradient_mode: bool,
    /// Record every k-th accepted step in the trace.
    pub trace_every: usize,
    /// Entries within `dust_band_multiple · δ` of zero are absorbed to
    /// exact zero between outer iterations of the smoothed hybrid kind.
    pub dust_band_multiple: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lambda1: 1.0,
            eta_init: 1.0,
            ls_shrink: 0.5,
            ls_max: 60,
            inner_tol: 1e-6,
            inner_max: 5000,
            mu0: 0.0,
            rho0: 1.0,
            rho_growth: 10.0,
            h_progress: 0.25,
            h_tol: 1e-8,
            outer_max: 100,
            subgradient_mode: false,
            trace_every: 1,
            dust_band_multiple: 3.0,
        }
    }
}

/// Rejected optimizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigError {
    /// Field must be strictly positive.
    NonPositive(&'static str),
    /// Field must be nonnegative.
    Negative(&'static str),
    /// `ls_shrink` must lie strictly between 0 and 1.
    ShrinkOutOfRange,
    /// `h_progress` must lie strictly between 0 and 1.
    ProgressOutOfRange,
    /// `rho_growth` must be at least 1.
    GrowthBelowOne,
    /// An iteration budget must be at least 1.
    EmptyBudget(&'static str),
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::NonPositive(name) => write!(f, "{name} must be strictly positive"),
            ConfigError::Negative(name) => write!(f, "{name} must be nonnegative"),
            ConfigError::ShrinkOutOfRange => write!(f, "ls_shrink must lie in (0, 1)"),
            ConfigError::ProgressOutOfRange => write!(f, "h_progress must lie in (0, 1)"),
            ConfigError::GrowthBelowOne => write!(f, "rho_growth must be at least 1"),
            ConfigError::EmptyBudget(name) => write!(f, "{name} must be at least 1"),
        }
    }
}

impl core::error::Error for ConfigError {}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lambda1 < 0.0 {
            return Err(ConfigError::Negative("lambda1"));
        }
        if !(self.eta_init > 0.0) {
            return Err(ConfigError::NonPositive("eta_init"));
        }
        if !(self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return Err(ConfigError::ShrinkOutOfRange);
        }
        if self.ls_max == 0 {
            return Err(ConfigError::EmptyBudget("ls_max"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(ConfigError::NonPositive("inner_tol"));
        }
        if self.inner_max == 0 {
            return Err(ConfigError::EmptyBudget("inner_max"));
        }
        if self.mu0 < 0.0 {
            return Err(ConfigError::Negative("mu0"));
        }
        if !(self.rho0 > 0.0) {
            return Err(ConfigError::NonPositive("rho0"));
        }
        if !(self.rho_growth >= 1.0) {
            return Err(ConfigError::GrowthBelowOne);
        }
        if !(self.h_progress > 0.0 && self.h_progress < 1.0) {
            return Err(ConfigError::ProgressOutOfRange);
        }
        if !(self.h_tol > 0.0) {
            return Err(ConfigError::NonPositive("h_tol"));
        }
        if self.outer_max == 0 {
            return Err(ConfigError::EmptyBudget("outer_max"));
        }
        if self.trace_every == 0 {
            return Err(ConfigError::EmptyBudget("trace_every"));
        }
        if self.dust_band_multiple < 0.0 {
            return Err(ConfigError::Negative("dust_band_multiple"));
        }
        Ok(())
    }
}

/// How a full run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RunStatus {
    /// The convergence certificate held: acyclic support for the smoothed
    /// hybrid kind, constraint value at tolerance for the others.
    Converged,
    /// The outer budget ran out first.
    MaxIter,
    /// The line search could not find sufficient decrease.
    LsFail,
    /// An evaluation at the current iterate was non-finite.
    NonFinite,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "maxiter",
            RunStatus::LsFail => "lsfail",
            RunStatus::NonFinite => "nonfinite",
        }
    }
}

impl core::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// One accepted step, as recorded in the trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterRecord {
    /// Outer iteration this step belongs to.
    pub outer: usize,
    /// Step index within the inner loop.
    pub inner: usize,
    /// Accepted-step index across the whole run (drives the cadence).
    pub step: usize,
    /// Composite objective at the accepted point, ℓ₁ term included.
    pub total: f64,
    /// Least-squares fit at the accepted point.
    pub fit: f64,
    /// Constraint value (the run's own kind) at the accepted point.
    pub h: f64,
    /// Frobenius norm of the accepted point.
    pub w_norm: f64,
    /// Number of exactly-nonzero entries.
    pub nonzero_count: usize,
    /// Accepted step size (the Adam baseline records its fixed step size).
    pub eta: f64,
    /// Prox-gradient mapping norm `‖W⁺ − W‖_F / η` (the Adam baseline
    /// records step norm over step size).
    pub gmap: f64,
    /// Whether the support differs from the previous accepted iterate.
    /// Exact only at trace cadence 1; thinned traces report the change at
    /// the recorded step alone.
    pub pattern_changed: bool,
}

/// Everything a run returns.
///
/// `wall_seconds` and `seeds` are bookkeeping slots the caller fills;
/// the solver itself performs no clock or RNG access.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub final_w: DenseMatrix,
    /// Constraint value of the run's own kind at the final point.
    pub final_h_smoothed: f64,
    /// Constraint value of the exact (unsmoothed companion) kind at the
    /// final point.
    pub final_h_unsmoothed: f64,
    /// Whether the exact constraint value is the literal floating-point
    /// zero — the no-thresholding acyclicity certificate.
    pub h_exact_zero: bool,
    pub status: RunStatus,
    pub trace: Vec<IterRecord>,
    /// Outer iterations entered.
    pub outers_used: usize,
    /// Accepted steps across all inner loops.
    pub inner_total: usize,
    pub wall_seconds: f64,
    pub config: OptimConfig,
    pub spec: ConstraintSpec,
    pub seeds: Vec<u64>,
}

impl RunReport {
    /// Exact-nonzero support of the final point.
    pub fn support(&self) -> BoolAdjacency {
        BoolAdjacency::from_weights(&self.final_w)
    }
}

/// Entrywise soft-thresholding with the diagonal pinned to zero.
///
/// Entries inside the closed band `|v| ≤ t` become the canonical positive
/// zero, so downstream support tests and bitwise comparisons are stable.
pub fn prox_l1(v: &DenseMatrix, t: f64) -> DenseMatrix {
    assert!(v.is_square(), "proximal operator expects a square matrix");
    assert!(t >= 0.0, "soft-threshold level must be nonnegative");
    let d = v.rows();
    let mut out = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let x = v.get(i, j);
            let shrunk = if libm::fabs(x) <= t {
                0.0
            } else if x > 0.0 {
                x - t
            } else {
                x + t
            };
            out.set(i, j, shrunk);
        }
    }
    out
}

/// Set every entry with `0 < |w| ≤ band` to exact zero; returns how many
/// entries were absorbed.
pub fn absorb_dust(w: &mut DenseMatrix, band: f64) -> usize {
    assert!(band >= 0.0, "absorption band must be nonnegative");
    let mut absorbed = 0;
    for x in w.as_mut_slice() {
        if *x != 0.0 && libm::fabs(*x) <= band {
            *x = 0.0;
            absorbed += 1;
        }
    }
    absorbed
}

/// Support of entries with `|w| > tau` (strict inequality).
pub fn threshold_support(w: &DenseMatrix, tau: f64) -> BoolAdjacency {
    BoolAdjacency::from_threshold(w, tau)
}

/// Result of a single proximal step attempt.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted {
        w: DenseMatrix,
        /// Step size at which the sufficient-decrease test passed.
        eta: f64,
        /// Candidate evaluations spent.
        ls_evals: usize,
    },
    /// No acceptable step within the backtracking budget.
    LsFail,
    /// The evaluation at the current point was non-finite.
    NonFinite,
}

struct AcceptedStep {
    w: DenseMatrix,
    eta: f64,
    ls_evals: usize,
    /// Composite objective (ℓ₁ included) at the accepted point.
    total: f64,
    fit: f64,
    h: f64,
    step_norm: f64,
}

enum Attempt {
    Accepted(AcceptedStep),
    LsFail,
    NonFinite,
}

/// Backtracking proximal step on the composite objective
/// `F(W) = fit + μh + (ρ/2)h² + λ₁‖W‖₁`. A candidate at step size η is
/// accepted when `F(W⁺) ≤ F(W) − ‖W⁺ − W‖_F² / (2η)`; non-finite
/// candidates shrink η like any other rejection.
fn try_step(
    w: &DenseMatrix,
    fit: &FitContext,
    spec: &ConstraintSpec,
    alm: &AlmParams,
    cfg: &OptimConfig,
    eta_start: f64,
) -> Attempt {
    let eval = alm_eval_cached(w, fit, spec, alm, cfg.subgradient_mode);
    if !eval.finite {
        return Attempt::NonFinite;
    }
    let f_curr = eval.total + cfg.lambda1 * w.entry_l1_norm();
    let mut eta = eta_start;
    let mut ls_evals = 0;
    for _ in 0..cfg.ls_max {
        let mut z = w.clone();
        z.add_scaled(-eta, &eval.grad);
        let wc = prox_l1(&z, eta * cfg.lambda1);
        ls_evals += 1;
        let (smooth_c, fit_c, h_c) = alm_value_cached(&wc, fit, spec, alm);
        let f_cand = smooth_c + cfg.lambda1 * wc.entry_l1_norm();
        let mut dist2 = 0.0;
        for (a, b) in wc.as_slice().iter().zip(w.as_slice()) {
            let diff = a - b;
            dist2 += diff * diff;
        }
        if f_cand.is_finite() && f_cand <= f_curr - dist2 / (2.0 * eta) {
            return Attempt::Accepted(AcceptedStep {
                w: wc,
                eta,
                ls_evals,
                total: f_cand,
                fit: fit_c,
                h: h_c,
                step_norm: libm::sqrt(dist2),
            });
        }
        eta *= cfg.ls_shrink;
    }
    Attempt::LsFail
}

/// One proximal step from `w` on the dataset `x`, starting the line
/// search at `eta_start`.
pub fn spg_step(
    w: &DenseMatrix,
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    alm: &AlmParams,
    cfg: &OptimConfig,
    eta_start: f64,
) -> StepOutcome {
    spec.validate().expect("constraint spec must validate");
    cfg.validate().expect("optimizer config must validate");
    let fit = FitContext::new(x);
    match try_step(w, &fit, spec, alm, cfg, eta_start) {
        Attempt::Accepted(acc) => {
            StepOutcome::Accepted { w: acc.w, eta: acc.eta, ls_evals: acc.ls_evals }
        }
        Attempt::LsFail => StepOutcome::LsFail,
        Attempt::NonFinite => StepOutcome::NonFinite,
    }
}

/// How an inner loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    /// The prox-gradient mapping norm reached `inner_tol`.
    ToleranceMet,
    /// `inner_max` accepted steps were taken.
    IterBudgetExhausted,
    LsFail,
    NonFinite,
}

pub struct InnerResult {
    pub w: DenseMatrix,
    pub status: InnerStatus,
    pub records: Vec<IterRecord>,
    /// Accepted steps taken.
    pub steps: usize,
}

/// Run one inner loop at fixed multiplier state, warm-starting the step
/// size after each acceptance. `step_offset` is the run-global accepted
/// step count before this call; the trace cadence is computed against it.
pub fn spg_inner(
    w0: &DenseMatrix,
    fit: &FitContext,
    spec: &ConstraintSpec,
    alm: &AlmParams,
    cfg: &OptimConfig,
    outer: usize,
    step_offset: usize,
) -> InnerResult {
    let mut w = w0.clone();
    let mut records = Vec::new();
    let mut eta = cfg.eta_init;
    let mut steps = 0;
    let mut status = InnerStatus::IterBudgetExhausted;
    for inner in 0..cfg.inner_max {
        match try_step(&w, fit, spec, alm, cfg, eta) {
            Attempt::NonFinite => {
                status = InnerStatus::NonFinite;
                break;
            }
            Attempt::LsFail => {
                status = InnerStatus::LsFail;
                break;
            }
            Attempt::Accepted(acc) => {
                let gmap = acc.step_norm / acc.eta;
                let global = step_offset + steps;
                steps += 1;
                if global % cfg.trace_every == 0 {
                    records.push(IterRecord {
                        outer,
                        inner,
                        step: global,
                        total: acc.total,
                        fit: acc.fit,
                        h: acc.h,
                        w_norm: acc.w.frobenius_norm(),
                        nonzero_count: acc.w.count_nonzero(),
                        eta: acc.eta,
                        gmap,
                        pattern_changed: !same_support(&acc.w, &w),
                    });
                }
                eta = (2.0 * acc.eta).min(cfg.eta_init);
                w = acc.w;
                if gmap <= cfg.inner_tol {
                    status = InnerStatus::ToleranceMet;
                    break;
                }
            }
        }
    }
    InnerResult { w, status, records, steps }
}

fn same_support(a: &DenseMatrix, b: &DenseMatrix) -> bool {
    a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (*x != 0.0) == (*y != 0.0))
}

/// Full augmented-Lagrangian run.
///
/// Each outer iteration runs an inner proximal loop, absorbs sub-noise
/// dust to exact zero (smoothed hybrid kind only), and then checks the
/// convergence certificate *before* updating the multiplier, so a run
/// that has already reached an acyclic support never has its penalty
/// inflated retroactively. The multiplier update is
/// `μ ← μ + ρ·h`, and ρ grows by `rho_growth` whenever `h` failed to
/// drop below `h_progress` times its previous value.
pub fn alm_outer(
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    cfg: &OptimConfig,
    w_init: Option<&DenseMatrix>,
) -> RunReport {
    spec.validate().expect("constraint spec must validate");
    cfg.validate().expect("optimizer config must validate");
    assert!(
        spec.is_smooth() || cfg.subgradient_mode,
        "non-smooth constraint kind {} requires subgradient_mode",
        spec.kind
    );
    let fit = FitContext::new(x);
    let d = fit.dim();
    let mut w = match w_init {
        Some(start) => {
            assert!(
                start.rows() == d && start.cols() == d,
                "warm start must be {d}x{d} to match the data"
            );
            let mut start = start.clone();
            start.zero_diagonal();
            start
        }
        None => DenseMatrix::zeros(d, d),
    };
    let mut alm = AlmParams { mu: cfg.mu0, rho: cfg.rho0 };
    let mut h_prev = f64::INFINITY;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut inner_total = 0;
    let mut outers_used = 0;
    let mut status = RunStatus::MaxIter;

    for outer in 0..cfg.outer_max {
        outers_used = outer + 1;
        let mut result = spg_inner(&w, &fit, spec, &alm, cfg, outer, inner_total);
        inner_total += result.steps;
        trace.append(&mut result.records);
        w = result.w;
        match result.status {
            InnerStatus::LsFail => {
                status = RunStatus::LsFail;
                break;
            }
            InnerStatus::NonFinite => {
                status = RunStatus::NonFinite;
                break;
            }
            InnerStatus::ToleranceMet | InnerStatus::IterBudgetExhausted => {}
        }
        if spec.kind == ConstraintKind::SmoothedAhoc {
            absorb_dust(&mut w, cfg.dust_band_multiple * spec.delta);
        }
        let h_now = constraint_value(spec, &w);
        if !h_now.is_finite() {
            status = RunStatus::NonFinite;
            break;
        }
        let certified = if spec.kind == ConstraintKind::SmoothedAhoc {
            is_dag_support(&w)
        } else {
            h_now <= cfg.h_tol
        };
        if certified {
            status = RunStatus::Converged;
            break;
        }
        alm.mu += alm.rho * h_now;
        if h_now > cfg.h_progress * h_prev {
            alm.rho *= cfg.rho_growth;
        }
        h_prev = h_now;
    }

    finish_report(w, spec, cfg, status, trace, outers_used, inner_total)
}

fn finish_report(
    w: DenseMatrix,
    spec: &ConstraintSpec,
    cfg: &OptimConfig,
    status: RunStatus,
    trace: Vec<IterRecord>,
    outers_used: usize,
    inner_total: usize,
) -> RunReport {
    let final_h_smoothed = constraint_value(spec, &w);
    let companion = unsmoothed_companion(spec);
    let final_h_unsmoothed = constraint_value(&companion, &w);
    RunReport {
        final_w: w,
        final_h_smoothed,
        final_h_unsmoothed,
        h_exact_zero: final_h_unsmoothed == 0.0,
        status,
        trace,
        outers_used,
        inner_total,
        wall_seconds: 0.0,
        config: *cfg,
        spec: *spec,
        seeds: Vec::new(),
    }
}

/// Tunables for the Adam baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdamParams {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Fixed number of Adam steps per outer iteration (no inner
    /// tolerance).
    pub steps_per_outer: usize,
    /// Outer-iteration budget for the baseline; it does not inherit the
    /// proximal run's `outer_max` because its fixed-step inner loop
    /// makes each outer iteration far more expensive.
    pub outer_max: usize,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps_per_outer: 5000,
            outer_max: 10,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.step_size > 0.0) {
            return Err(ConfigError::NonPositive("step_size"));
        }
        if !(self.beta1 >= 0.0 && self.beta1 < 1.0) {
            return Err(ConfigError::ProgressOutOfRange);
        }
        if !(self.beta2 >= 0.0 && self.beta2 < 1.0) {
            return Err(ConfigError::ProgressOutOfRange);
        }
        if !(self.epsilon > 0.0) {
            return Err(ConfigError::NonPositive("epsilon"));
        }
        if self.steps_per_outer == 0 {
            return Err(ConfigError::EmptyBudget("steps_per_outer"));
        }
        if self.outer_max == 0 {
            return Err(ConfigError::EmptyBudget("outer_max"));
        }
        Ok(())
    }
}

/// Dense first-order baseline: the same augmented-Lagrangian outer loop,
/// but the inner minimization is a fixed budget of Adam steps on the
/// subgradient of the composite objective (`sign(0) = 0` for the ℓ₁
/// term). No proximal map means no exact zeros: the baseline exists to
/// show that gradient descent alone leaves a dense matrix that still
/// needs a cutoff. Convergence is declared on the exact (unsmoothed
/// companion) constraint value.
pub fn adam_baseline(
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    cfg: &OptimConfig,
    adam: &AdamParams,
) -> RunReport {
    spec.validate().expect("constraint spec must validate");
    cfg.validate().expect("optimizer config must validate");
    adam.validate().expect("Adam parameters must validate");
    assert!(
        spec.is_smooth() || cfg.subgradient_mode,
        "non-smooth constraint kind {} requires subgradient_mode",
        spec.kind
    );
    let fit = FitContext::new(x);
    let d = fit.dim();
    let mut w = DenseMatrix::zeros(d, d);
    let mut m = DenseMatrix::zeros(d, d);
    let mut v = DenseMatrix::zeros(d, d);
    let mut beta1_pow = 1.0;
    let mut beta2_pow = 1.0;
    let mut alm = AlmParams { mu: cfg.mu0, rho: cfg.rho0 };
    let mut h_prev = f64::INFINITY;
    let companion = unsmoothed_companion(spec);
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut inner_total = 0;
    let mut outers_used = 0;
    let mut status = RunStatus::MaxIter;

    'outer: for outer in 0..adam.outer_max {
        outers_used = outer + 1;
        for inner in 0..adam.steps_per_outer {
            let eval = alm_eval_cached(&w, &fit, spec, &alm, cfg.subgradient_mode);
            if !eval.finite {
                status = RunStatus::NonFinite;
                break 'outer;
            }
            let mut g = eval.grad;
            for (gi, wi) in g.as_mut_slice().iter_mut().zip(w.as_slice()) {
                if *wi > 0.0 {
                    *gi += cfg.lambda1;
                } else if *wi < 0.0 {
                    *gi -= cfg.lambda1;
                }
            }
            g.zero_diagonal();
            beta1_pow *= adam.beta1;
            beta2_pow *= adam.beta2;
            let mut step_norm2 = 0.0;
            let prev_w = w.clone();
            {
                let ws = w.as_mut_slice();
                let ms = m.as_mut_slice();
                let vs = v.as_mut_slice();
                let gs = g.as_slice();
                for k in 0..ws.len() {
                    ms[k] = adam.beta1 * ms[k] + (1.0 - adam.beta1) * gs[k];
                    vs[k] = adam.beta2 * vs[k] + (1.0 - adam.beta2) * gs[k] * gs[k];
                    let m_hat = ms[k] / (1.0 - beta1_pow);
                    let v_hat = vs[k] / (1.0 - beta2_pow);
                    let delta = adam.step_size * m_hat / (libm::sqrt(v_hat) + adam.epsilon);
                    ws[k] -= delta;
                    step_norm2 += delta * delta;
                }
            }
            w.zero_diagonal();
            if !w.all_finite() {
                status = RunStatus::NonFinite;
                break 'outer;
            }
            let global = inner_total;
            inner_total += 1;
            if global % cfg.trace_every == 0 {
                let (smooth, fit_value, h) = alm_value_cached(&w, &fit, spec, &alm);
                records_push_adam(
                    &mut trace,
                    outer,
                    inner,
                    global,
                    smooth + cfg.lambda1 * w.entry_l1_norm(),
                    fit_value,
                    h,
                    &w,
                    adam.step_size,
                    libm::sqrt(step_norm2) / adam.step_size,
                    !same_support(&w, &prev_w),
                );
            }
        }
        let h_now = constraint_value(spec, &w);
        if !h_now.is_finite() {
            status = RunStatus::NonFinite;
            break;
        }
        if constraint_value(&companion, &w) <= cfg.h_tol {
            status = RunStatus::Converged;
            break;
        }
        alm.mu += alm.rho * h_now;
        if h_now > cfg.h_progress * h_prev {
            alm.rho *= cfg.rho_growth;
        }
        h_prev = h_now;
    }

    finish_report(w, spec, cfg, status, trace, outers_used, inner_total)
}

#[allow(clippy::too_many_arguments)]
fn records_push_adam(
    trace: &mut Vec<IterRecord>,
    outer: usize,
    inner: usize,
    step: usize,
    total: f64,
    fit: f64,
    h: f64,
    w: &DenseMatrix,
    eta: f64,
    gmap: f64,
    pattern_changed: bool,
) {
    trace.push(IterRecord {
        outer,
        inner,
        step,
        total,
        fit,
        h,
        w_norm: w.frobenius_norm(),
        nonzero_count: w.count_nonzero(),
        eta,
        gmap,
        pattern_changed,
    });
}
