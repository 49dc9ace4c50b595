//! Least-squares fitting loss, the smoothed augmented-Lagrangian objective,
//! and the stability-threshold diagnostic.
//!
//! The optimizer evaluates the loss many times per run, so the quadratic
//! form is precomputed once per dataset in a [`FitContext`] (the d×d Gram
//! matrix of the samples). The direct from-data evaluation ([`loss_fit`])
//! is retained both as public API and as an independent oracle for the
//! cached path.

use crate::constraint::{constraint_grad, constraint_value, ConstraintKind, ConstraintSpec};
use crate::linalg::DenseMatrix;

/// Outer-loop state of the augmented Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlmParams {
    /// Lagrange multiplier μ ≥ 0.
    pub mu: f64,
    /// Quadratic penalty weight ρ > 0.
    pub rho: f64,
}

impl Default for AlmParams {
    fn default() -> Self {
        AlmParams { mu: 0.0, rho: 1.0 }
    }
}

impl AlmParams {
    pub fn validate(&self) -> bool {
        self.mu >= 0.0 && self.rho > 0.0
    }
}

/// One evaluation of the smooth part of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    /// `fit + μ·h + (ρ/2)·h²`.
    pub total: f64,
    /// Least-squares fit value.
    pub fit: f64,
    /// Constraint value `h(W)` for the spec's own kind.
    pub h: f64,
    /// Gradient of the smooth part: `∇fit + (μ + ρh)·∇h`. The ℓ₁ term is
    /// handled by the proximal operator, never here.
    pub grad: DenseMatrix,
    /// Whether every reported quantity is finite.
    pub finite: bool,
}

/// Precomputed quadratic form of the fitting loss for one dataset.
///
/// With `G = XᵀX/n`, the loss is
/// `(1/2n)‖X − XW‖_F² = ½(tr G − 2⟨G, W⟩ + ⟨W, GW⟩)`
/// and its gradient is `GW − G` (diagonal zeroed).
#[derive(Debug, Clone)]
pub struct FitContext {
    gram: DenseMatrix,
    trace_gram: f64,
    n: usize,
}

impl FitContext {
    /// Build from an n×d sample matrix.
    pub fn new(x: &DenseMatrix) -> Self {
        assert!(x.rows() >= 1, "dataset must contain at least one sample");
        let n = x.rows();
        let mut gram = x.transpose().matmul(x);
        gram.scale(1.0 / n as f64);
        let trace_gram = gram.trace();
        FitContext { gram, trace_gram, n }
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn num_samples(&self) -> usize {
        self.n
    }

    /// The scaled Gram matrix `XᵀX/n`.
    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    /// Fit value only.
    pub fn value(&self, w: &DenseMatrix) -> f64 {
        let gw = self.gram.matmul(w);
        0.5 * (self.trace_gram - 2.0 * self.gram.frobenius_dot(w) + w.frobenius_dot(&gw))
    }

    /// Fit value and gradient (diagonal zeroed).
    pub fn value_grad(&self, w: &DenseMatrix) -> (f64, DenseMatrix) {
        let gw = self.gram.matmul(w);
        let value =
            0.5 * (self.trace_gram - 2.0 * self.gram.frobenius_dot(w) + w.frobenius_dot(&gw));
        let mut grad = gw;
        grad.add_scaled(-1.0, &self.gram);
        grad.zero_diagonal();
        (value, grad)
    }
}

/// Least-squares loss straight from the data:
/// value `(1/2n)‖X − XW‖_F²`, gradient `−(1/n)Xᵀ(X − XW)` with the
/// diagonal zeroed.
pub fn loss_fit(w: &DenseMatrix, x: &DenseMatrix) -> (f64, DenseMatrix) {
    assert_eq!(x.cols(), w.rows(), "data dimension must match the weight matrix");
    assert!(w.is_square(), "weight matrix must be square");
    let n = x.rows();
    assert!(n >= 1, "dataset must contain at least one sample");
    let mut residual = x.clone();
    residual.add_scaled(-1.0, &x.matmul(w));
    let residual_norm = residual.frobenius_norm();
    let value = 0.5 * residual_norm * residual_norm / n as f64;
    let mut grad = x.transpose().matmul(&residual);
    grad.scale(-1.0 / n as f64);
    grad.zero_diagonal();
    (value, grad)
}

/// Evaluate the smoothed augmented Lagrangian and its smooth-part gradient
/// using a prepared [`FitContext`].
///
/// Non-smooth constraint kinds are rejected unless `subgradient_mode` is
/// set; that mode exists to reproduce the known line-search failure of the
/// non-smooth hybrid constraint, not for ordinary use.
pub fn alm_eval_cached(
    w: &DenseMatrix,
    fit: &FitContext,
    spec: &ConstraintSpec,
    params: &AlmParams,
    subgradient_mode: bool,
) -> ObjectiveEval {
    assert!(
        spec.is_smooth() || subgradient_mode,
        "non-smooth constraint kind {} requires subgradient mode",
        spec.kind
    );
    assert!(params.validate(), "ALM parameters out of range (mu >= 0, rho > 0)");
    let (fit_value, fit_grad) = fit.value_grad(w);
    let ceval = constraint_grad(spec, w);
    let h = ceval.value;
    let total = fit_value + params.mu * h + 0.5 * params.rho * h * h;
    let mut grad = fit_grad;
    grad.add_scaled(params.mu + params.rho * h, &ceval.gradient);
    let finite = total.is_finite() && ceval.finite && grad.all_finite();
    ObjectiveEval { total, fit: fit_value, h, grad, finite }
}

/// Evaluate the smoothed augmented Lagrangian directly from data.
pub fn alm_eval(
    w: &DenseMatrix,
    x: &DenseMatrix,
    spec: &ConstraintSpec,
    params: &AlmParams,
    subgradient_mode: bool,
) -> ObjectiveEval {
    alm_eval_cached(w, &FitContext::new(x), spec, params, subgradient_mode)
}

/// Smooth objective value only (used by the line search, which does not
/// need the gradient at candidate points).
pub fn alm_value_cached(
    w: &DenseMatrix,
    fit: &FitContext,
    spec: &ConstraintSpec,
    params: &AlmParams,
) -> (f64, f64, f64) {
    let fit_value = fit.value(w);
    let h = constraint_value(spec, w);
    (fit_value + params.mu * h + 0.5 * params.rho * h * h, fit_value, h)
}

/// The regularization level below which the origin stops being stationary:
/// the largest off-diagonal entry of `|XᵀX/n|`.
///
/// With λ₁ at or above this value, `W = 0` satisfies the first-order
/// condition of `fit + λ₁‖·‖₁` because `‖∇fit(0)‖_∞ ≤ λ₁`.
pub fn stability_threshold(x: &DenseMatrix) -> f64 {
    let n = x.rows();
    assert!(n >= 1, "dataset must contain at least one sample");
    let mut gram = x.transpose().matmul(x);
    gram.scale(1.0 / n as f64);
    gram.max_abs_offdiag()
}

/// The exact (unsmoothed) companion of a constraint spec: the smoothed
/// hybrid kind reports its non-smooth counterpart, every other kind is its
/// own exact constraint.
pub fn unsmoothed_companion(spec: &ConstraintSpec) -> ConstraintSpec {
    match spec.kind {
        ConstraintKind::SmoothedAhoc => ConstraintSpec { kind: ConstraintKind::Ahoc, ..*spec },
        _ => *spec,
    }
}
