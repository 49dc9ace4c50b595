//! The acyclicity constraint family `h(W)` and its analytic gradients.
//!
//! Six constraint kinds are provided. All of them vanish exactly on
//! DAG-supported matrices; they differ in how the nonnegative surrogate
//! matrix is built from `W` and whether it is rescaled before the
//! trace-exponential:
//!
//! * [`ConstraintKind::Exp`] — `tr(exp(W∘W)) − d`, unnormalized.
//! * [`ConstraintKind::LogDet`] — `−log det(sI − W∘W) + d·log s`.
//! * [`ConstraintKind::Aac`] — trace-exponential of `W∘W` after adaptive
//!   scale normalization (divide by `‖·‖_F + ε`).
//! * [`ConstraintKind::Ahoc`] — hybrid core `α(W∘W) + (1−α)|W|`, normalized
//!   with `ε`. Non-smooth wherever an entry of `W` is zero.
//! * [`ConstraintKind::SAhoc`] — same core, normalized with the constant
//!   `1` in the denominator. Also non-smooth.
//! * [`ConstraintKind::SmoothedAhoc`] — hybrid core with `|w|` replaced by
//!   `√(w² + δ²)`, then normalized with `ε`. Smooth everywhere.
//!
//! For the normalized kinds the evaluation is arranged so that a matrix
//! whose support is a DAG yields the exact floating-point value `0.0`, not
//! merely something small: the normalized surrogate has entries below one,
//! which keeps the Padé linear solves free of pivoting and confines fill-in
//! to the transitive closure of the support.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{mat_exp, DenseMatrix, Lu};

/// Which member of the constraint family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ConstraintKind {
    /// Unnormalized trace-exponential of `W∘W`.
    #[cfg_attr(feature = "serde", serde(rename = "exp"))]
    Exp,
    /// Log-determinant barrier `−log det(sI − W∘W) + d·log s`.
    #[cfg_attr(feature = "serde", serde(rename = "logdet"))]
    LogDet,
    /// Adaptively scale-normalized trace-exponential of `W∘W`.
    #[cfg_attr(feature = "serde", serde(rename = "aac"))]
    Aac,
    /// Hybrid-order core with `ε`-normalization (non-smooth).
    #[cfg_attr(feature = "serde", serde(rename = "ahoc"))]
    Ahoc,
    /// Hybrid-order core with shift-1 normalization (non-smooth).
    #[cfg_attr(feature = "serde", serde(rename = "sahoc"))]
    SAhoc,
    /// Smoothed hybrid-order core with `ε`-normalization.
    #[cfg_attr(feature = "serde", serde(rename = "smoothed-ahoc"))]
    SmoothedAhoc,
}

impl ConstraintKind {
    /// All kinds, in a fixed report order.
    pub const ALL: [ConstraintKind; 6] = [
        ConstraintKind::Exp,
        ConstraintKind::LogDet,
        ConstraintKind::Aac,
        ConstraintKind::Ahoc,
        ConstraintKind::SAhoc,
        ConstraintKind::SmoothedAhoc,
    ];

    /// Stable lowercase name used in CSV output and configs.
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Exp => "exp",
            ConstraintKind::LogDet => "logdet",
            ConstraintKind::Aac => "aac",
            ConstraintKind::Ahoc => "ahoc",
            ConstraintKind::SAhoc => "sahoc",
            ConstraintKind::SmoothedAhoc => "smoothed-ahoc",
        }
    }

    /// Parse the name produced by [`ConstraintKind::name`].
    pub fn parse(name: &str) -> Option<ConstraintKind> {
        ConstraintKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Whether the constraint is differentiable at every `W`.
    ///
    /// `Ahoc` and `SAhoc` carry an `|W|` term and are only subdifferentiable
    /// where some entry of `W` is zero.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, ConstraintKind::Ahoc | ConstraintKind::SAhoc)
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full parameterization of a constraint evaluation.
///
/// Parameters that do not apply to the selected kind are simply ignored;
/// [`ConstraintSpec::ignored_parameters`] reports which ones those are.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    /// Hybrid mixing factor α ∈ [0,1) (HOC kinds only).
    pub alpha: f64,
    /// Adaptive-scale regularizer ε > 0 (Aac / Ahoc / SmoothedAhoc).
    pub epsilon: f64,
    /// Smoothing width δ > 0 (SmoothedAhoc only).
    pub delta: f64,
    /// Log-determinant domain scale s ≥ 1 (LogDet only).
    pub s: f64,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        ConstraintSpec {
            kind: ConstraintKind::SmoothedAhoc,
            alpha: 0.5,
            epsilon: 1e-8,
            delta: 1e-7,
            s: 1.0,
        }
    }
}

/// Validation failure for a [`ConstraintSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    AlphaOutOfRange,
    NonPositiveEpsilon,
    NonPositiveDelta,
    ScaleBelowOne,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::AlphaOutOfRange => write!(f, "alpha must lie in [0, 1)"),
            SpecError::NonPositiveEpsilon => write!(f, "epsilon must be positive"),
            SpecError::NonPositiveDelta => write!(f, "delta must be positive"),
            SpecError::ScaleBelowOne => write!(f, "logdet scale s must be at least 1"),
        }
    }
}

impl core::error::Error for SpecError {}

impl ConstraintSpec {
    /// Spec for `kind` with default parameters.
    pub fn new(kind: ConstraintKind) -> Self {
        ConstraintSpec { kind, ..ConstraintSpec::default() }
    }

    /// Check the parameter ranges that the selected kind actually uses.
    pub fn validate(&self) -> Result<(), SpecError> {
        let uses_alpha = matches!(
            self.kind,
            ConstraintKind::Ahoc | ConstraintKind::SAhoc | ConstraintKind::SmoothedAhoc
        );
        if uses_alpha && !(0.0..1.0).contains(&self.alpha) {
            return Err(SpecError::AlphaOutOfRange);
        }
        let uses_eps = matches!(
            self.kind,
            ConstraintKind::Aac | ConstraintKind::Ahoc | ConstraintKind::SmoothedAhoc
        );
        if uses_eps && !(self.epsilon > 0.0) {
            return Err(SpecError::NonPositiveEpsilon);
        }
        if self.kind == ConstraintKind::SmoothedAhoc && !(self.delta > 0.0) {
            return Err(SpecError::NonPositiveDelta);
        }
        if self.kind == ConstraintKind::LogDet && !(self.s >= 1.0) {
            return Err(SpecError::ScaleBelowOne);
        }
        Ok(())
    }

    /// Names of the parameters the selected kind ignores.
    pub fn ignored_parameters(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        match self.kind {
            ConstraintKind::Exp => {
                out.extend_from_slice(&["alpha", "epsilon", "delta", "s"]);
            }
            ConstraintKind::LogDet => {
                out.extend_from_slice(&["alpha", "epsilon", "delta"]);
            }
            ConstraintKind::Aac => {
                out.extend_from_slice(&["alpha", "delta", "s"]);
            }
            ConstraintKind::Ahoc => {
                out.extend_from_slice(&["delta", "s"]);
            }
            ConstraintKind::SAhoc => {
                out.extend_from_slice(&["epsilon", "delta", "s"]);
            }
            ConstraintKind::SmoothedAhoc => {
                out.push("s");
            }
        }
        out
    }

    /// Whether this spec is differentiable everywhere.
    pub fn is_smooth(&self) -> bool {
        self.kind.is_smooth()
    }
}

/// Value and gradient of a constraint at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    /// `h(W)`. `+∞` for a LogDet evaluation outside its domain.
    pub value: f64,
    /// `∇_W h`, same shape as `W`, diagonal forced to zero.
    pub gradient: DenseMatrix,
    /// Whether both value and gradient are finite.
    pub finite: bool,
    /// Whether a non-smooth kind was evaluated at a point with zero
    /// entries, i.e. the gradient is the `sign(0) = 0` subgradient choice
    /// rather than a true gradient.
    pub nonsmooth_point: bool,
}

/// Hybrid-order core `M(W; α) = α(W∘W) + (1−α)|W|`, elementwise.
pub fn hoc_core(w: &DenseMatrix, alpha: f64) -> DenseMatrix {
    assert!((0.0..1.0).contains(&alpha), "alpha must lie in [0, 1)");
    w.map(|x| alpha * x * x + (1.0 - alpha) * libm::fabs(x))
}

/// Smoothed hybrid-order core `M̃ = α(W∘W) + (1−α)·√(W² + δ²)`, elementwise.
///
/// Every entry is at least `(1−α)δ`, and the pointwise gap to [`hoc_core`]
/// never exceeds `(1−α)δ`.
pub fn smooth_hoc_core(w: &DenseMatrix, alpha: f64, delta: f64) -> DenseMatrix {
    assert!((0.0..1.0).contains(&alpha), "alpha must lie in [0, 1)");
    assert!(delta > 0.0, "delta must be positive");
    w.map(|x| alpha * x * x + (1.0 - alpha) * libm::sqrt(x * x + delta * delta))
}

/// Adaptive scale normalization `M / (‖M‖_F + ε)`.
///
/// The output has Frobenius norm strictly below one, which keeps the
/// downstream trace-exponential bounded regardless of the scale of `M`.
pub fn asn_normalize(m: &DenseMatrix, epsilon: f64) -> DenseMatrix {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let denom = m.frobenius_norm() + epsilon;
    let mut out = m.clone();
    out.scale(1.0 / denom);
    out
}

fn check_input(w: &DenseMatrix) {
    assert!(w.is_square(), "constraint input W must be square");
    for i in 0..w.rows() {
        assert!(
            w.get(i, i) == 0.0,
            "constraint input W must have an exactly-zero diagonal (row {})",
            i
        );
    }
}

/// `tr(exp(N)) − d`, summed as `Σ (E_ii − 1)` so that an exactly-identity
/// diagonal produces the exact value `0.0`.
fn trace_exp_minus_d(e: &DenseMatrix) -> f64 {
    (0..e.rows()).map(|i| e.get(i, i) - 1.0).sum()
}

/// The nonnegative surrogate matrix and ASN denominator for a normalized
/// kind, or `None` for `Exp`/`LogDet`.
fn normalized_surrogate(spec: &ConstraintSpec, w: &DenseMatrix) -> Option<(DenseMatrix, f64)> {
    match spec.kind {
        ConstraintKind::Aac => {
            let m = w.hadamard(w);
            let d = m.frobenius_norm() + spec.epsilon;
            Some((m, d))
        }
        ConstraintKind::Ahoc => {
            let m = hoc_core(w, spec.alpha);
            let d = m.frobenius_norm() + spec.epsilon;
            Some((m, d))
        }
        ConstraintKind::SAhoc => {
            let m = hoc_core(w, spec.alpha);
            let d = m.frobenius_norm() + 1.0;
            Some((m, d))
        }
        ConstraintKind::SmoothedAhoc => {
            let m = smooth_hoc_core(w, spec.alpha, spec.delta);
            let d = m.frobenius_norm() + spec.epsilon;
            Some((m, d))
        }
        ConstraintKind::Exp | ConstraintKind::LogDet => None,
    }
}

/// `h(W)` for the given spec.
///
/// For LogDet the value is `+∞` when `det(sI − W∘W) ≤ 0`; callers observe
/// this through `is_finite()` rather than through an error.
pub fn constraint_value(spec: &ConstraintSpec, w: &DenseMatrix) -> f64 {
    check_input(w);
    match spec.kind {
        ConstraintKind::Exp => {
            let a = w.hadamard(w);
            match mat_exp(&a) {
                Ok(e) => trace_exp_minus_d(&e),
                Err(_) => f64::INFINITY,
            }
        }
        ConstraintKind::LogDet => logdet_value(spec, w).0,
        _ => {
            let (m, denom) = normalized_surrogate(spec, w).expect("normalized kind");
            let mut n = m;
            n.scale(1.0 / denom);
            match mat_exp(&n) {
                Ok(e) => trace_exp_minus_d(&e),
                Err(_) => f64::INFINITY,
            }
        }
    }
}

/// LogDet value together with the factorization of `sI − W∘W` when the
/// point is inside the domain.
fn logdet_value(spec: &ConstraintSpec, w: &DenseMatrix) -> (f64, Option<Lu>) {
    let d = w.rows();
    let a = w.hadamard(w);
    let mut b = a;
    b.scale(-1.0);
    for i in 0..d {
        b.set(i, i, b.get(i, i) + spec.s);
    }
    match Lu::factor(&b) {
        Ok(lu) => {
            let (sign, logabs) = lu.slog_det();
            if sign > 0.0 && logabs.is_finite() {
                ((d as f64) * libm::log(spec.s) - logabs, Some(lu))
            } else {
                (f64::INFINITY, None)
            }
        }
        Err(_) => (f64::INFINITY, None),
    }
}

/// `h(W)` together with the analytic gradient `∇_W h`.
///
/// For the non-smooth kinds evaluated at a point with zero off-diagonal
/// entries, the returned matrix is the `sign(0) = 0` subgradient selection
/// and `nonsmooth_point` is set.
pub fn constraint_grad(spec: &ConstraintSpec, w: &DenseMatrix) -> ConstraintEval {
    check_input(w);
    let d = w.rows();
    match spec.kind {
        ConstraintKind::Exp => {
            let a = w.hadamard(w);
            match mat_exp(&a) {
                Ok(e) => {
                    let value = trace_exp_minus_d(&e);
                    let mut grad = w.hadamard(&e.transpose());
                    grad.scale(2.0);
                    grad.zero_diagonal();
                    let finite = value.is_finite() && grad.all_finite();
                    ConstraintEval { value, gradient: grad, finite, nonsmooth_point: false }
                }
                Err(_) => non_finite_eval(d),
            }
        }
        ConstraintKind::LogDet => {
            let (value, lu) = logdet_value(spec, w);
            match lu {
                Some(lu) => {
                    let inv = lu.solve_matrix(&DenseMatrix::identity(d));
                    let mut grad = w.hadamard(&inv.transpose());
                    grad.scale(2.0);
                    grad.zero_diagonal();
                    let finite = value.is_finite() && grad.all_finite();
                    ConstraintEval { value, gradient: grad, finite, nonsmooth_point: false }
                }
                None => non_finite_eval(d),
            }
        }
        _ => {
            let (m, denom) = normalized_surrogate(spec, w).expect("normalized kind");
            let mut n = m.clone();
            n.scale(1.0 / denom);
            let e = match mat_exp(&n) {
                Ok(e) => e,
                Err(_) => return non_finite_eval(d),
            };
            let value = trace_exp_minus_d(&e);
            // Adjoint of the normalization: with D = ‖M‖_F + const and
            // upstream gradient G = exp(N)ᵀ,
            //   ∇_M h = G/D − (⟨M, G⟩_F / (D²‖M‖_F))·M,
            // the second term taken as zero when ‖M‖_F = 0.
            let g_n = e.transpose();
            let norm_m = m.frobenius_norm();
            let mut g_m = g_n.clone();
            g_m.scale(1.0 / denom);
            if norm_m > 0.0 {
                let coef = m.frobenius_dot(&g_n) / (denom * denom * norm_m);
                g_m.add_scaled(-coef, &m);
            }
            // Chain through the elementwise core derivative.
            let (core_deriv, nonsmooth_point) = core_derivative(spec, w);
            let mut grad = core_deriv.hadamard(&g_m);
            grad.zero_diagonal();
            let finite = value.is_finite() && grad.all_finite();
            ConstraintEval { value, gradient: grad, finite, nonsmooth_point }
        }
    }
}

fn non_finite_eval(d: usize) -> ConstraintEval {
    ConstraintEval {
        value: f64::INFINITY,
        gradient: DenseMatrix::zeros(d, d),
        finite: false,
        nonsmooth_point: false,
    }
}

/// Elementwise derivative of the core map `W ↦ M`, plus whether a
/// subgradient convention was needed.
fn core_derivative(spec: &ConstraintSpec, w: &DenseMatrix) -> (DenseMatrix, bool) {
    match spec.kind {
        ConstraintKind::Aac => (w.map(|x| 2.0 * x), false),
        ConstraintKind::Ahoc | ConstraintKind::SAhoc => {
            let a = spec.alpha;
            let mut at_kink = false;
            for i in 0..w.rows() {
                for j in 0..w.cols() {
                    if i != j && w.get(i, j) == 0.0 {
                        at_kink = true;
                    }
                }
            }
            let deriv = w.map(|x| {
                let sign = if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                2.0 * a * x + (1.0 - a) * sign
            });
            (deriv, at_kink)
        }
        ConstraintKind::SmoothedAhoc => {
            let a = spec.alpha;
            let delta = spec.delta;
            let deriv =
                w.map(|x| 2.0 * a * x + (1.0 - a) * x / libm::sqrt(x * x + delta * delta));
            (deriv, false)
        }
        ConstraintKind::Exp | ConstraintKind::LogDet => unreachable!("handled separately"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_triangular_example() -> DenseMatrix {
        let mut w = DenseMatrix::zeros(4, 4);
        w.set(0, 1, 0.8);
        w.set(0, 3, -1.2);
        w.set(1, 2, 1.4);
        w.set(2, 3, -0.6);
        w
    }

    fn two_cycle(weight: f64) -> DenseMatrix {
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 1, weight);
        w.set(1, 0, weight);
        w
    }

    #[test]
    fn hoc_core_scalar_values() {
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 1, -0.5);
        let pure_abs = hoc_core(&w, 0.0);
        assert_eq!(pure_abs.get(0, 1), 0.5, "alpha = 0 reduces to |W|");
        w.set(0, 1, 0.5);
        let mixed = hoc_core(&w, 0.5);
        assert!((mixed.get(0, 1) - 0.375).abs() < 1e-15, "0.5*0.25 + 0.5*0.5 = 0.375");
    }

    #[test]
    fn hoc_core_support_matches_input() {
        let w = upper_triangular_example();
        let m = hoc_core(&w, 0.3);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(
                    m.get(i, j) > 0.0,
                    w.get(i, j) != 0.0,
                    "core must be positive exactly on the support"
                );
                assert!(m.get(i, j) >= 0.0, "core is nonnegative");
            }
        }
    }

    #[test]
    fn smooth_core_floor_and_triangle() {
        let z = DenseMatrix::zeros(3, 3);
        let m = smooth_hoc_core(&z, 0.0, 1e-7);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), 1e-7, "at W = 0 every smoothed entry equals delta");
            }
        }
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 1, 3.0);
        let m = smooth_hoc_core(&w, 0.0, 4.0);
        assert_eq!(m.get(0, 1), 5.0, "sqrt(9 + 16) = 5");
    }

    #[test]
    fn smooth_core_converges_to_core_from_above() {
        let w = upper_triangular_example();
        let exact = hoc_core(&w, 0.5);
        let mut prev_gap = f64::INFINITY;
        for &delta in &[1e-1, 1e-3, 1e-5, 1e-7] {
            let m = smooth_hoc_core(&w, 0.5, delta);
            let mut gap: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let diff = m.get(i, j) - exact.get(i, j);
                    assert!(diff >= 0.0, "smoothed core upper-bounds the exact core");
                    assert!(diff <= 0.5 * delta + 1e-15, "gap is at most (1-alpha)*delta");
                    gap = gap.max(diff);
                }
            }
            assert!(gap <= prev_gap, "gap shrinks monotonically as delta decreases");
            prev_gap = gap;
        }
    }

    #[test]
    fn asn_normalize_examples() {
        let z = DenseMatrix::zeros(3, 3);
        let n = asn_normalize(&z, 1e-8);
        assert_eq!(n.frobenius_norm(), 0.0, "zero normalizes to zero");

        let mut m = DenseMatrix::zeros(2, 2);
        m.set(0, 1, 3.0);
        let n = asn_normalize(&m, 1.0);
        assert!((n.frobenius_norm() - 0.75).abs() < 1e-15, "norm 3 with eps 1 gives 3/4");
    }

    #[test]
    fn asn_output_norm_below_one_sweep() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let mut m = DenseMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m.set(i, j, next() * 100.0);
                }
            }
            let n = asn_normalize(&m, 1e-8);
            assert!(n.frobenius_norm() < 1.0, "normalized output must have norm < 1");
        }
    }

    #[test]
    fn value_at_zero_for_unnormalized_and_exact_kinds() {
        let z = DenseMatrix::zeros(5, 5);
        for kind in [
            ConstraintKind::Exp,
            ConstraintKind::LogDet,
            ConstraintKind::Aac,
            ConstraintKind::Ahoc,
            ConstraintKind::SAhoc,
        ] {
            let spec = ConstraintSpec::new(kind);
            assert_eq!(
                constraint_value(&spec, &z),
                0.0,
                "h(0) must be exactly zero for kind {}",
                kind
            );
        }
    }

    #[test]
    fn smoothed_value_at_zero_matches_closed_form() {
        // At W = 0 the smoothed surrogate is the constant matrix with every
        // entry (1-alpha)*delta; after normalization it is c * ones with
        // c = (1-alpha)delta / (d(1-alpha)delta + eps), whose exponential
        // trace is exp(d*c) + (d-1). Hence h(0) = exp(d*c) - 1.
        let d = 6;
        let spec = ConstraintSpec::default();
        let z = DenseMatrix::zeros(d, d);
        let got = constraint_value(&spec, &z);
        let floor = (1.0 - spec.alpha) * spec.delta;
        let c = floor / ((d as f64) * floor + spec.epsilon);
        let want = libm::exp((d as f64) * c) - 1.0;
        assert!(
            (got - want).abs() <= 1e-12 * want,
            "smoothed h(0) should match the rank-one closed form: got {got}, want {want}"
        );
        assert!(got > 1.0, "the normalized delta floor keeps h(0) order-one, not near zero");
    }

    #[test]
    fn dag_support_gives_exact_zero_for_normalized_kinds() {
        let w = upper_triangular_example();
        for kind in [ConstraintKind::Aac, ConstraintKind::Ahoc, ConstraintKind::SAhoc] {
            let spec = ConstraintSpec::new(kind);
            let h = constraint_value(&spec, &w);
            assert_eq!(h, 0.0, "normalized kind {} must be exactly zero on a DAG", kind);
        }
        let h_exp = constraint_value(&ConstraintSpec::new(ConstraintKind::Exp), &w);
        assert!(h_exp.abs() <= 1e-10, "Exp on a DAG stays within 1e-10 of zero");
        let h_logdet = constraint_value(&ConstraintSpec::new(ConstraintKind::LogDet), &w);
        assert!(h_logdet.abs() <= 1e-10, "LogDet on a DAG stays within 1e-10 of zero");
    }

    #[test]
    fn exp_two_cycle_matches_cosh_oracle() {
        // Surrogate [[0,1],[1,0]] has eigenvalues ±1, so the trace of its
        // exponential is e + 1/e = 2 cosh(1).
        let spec = ConstraintSpec::new(ConstraintKind::Exp);
        let h = constraint_value(&spec, &two_cycle(1.0));
        let want = 2.0 * libm::cosh(1.0) - 2.0;
        assert!((h - want).abs() < 1e-13, "2-cycle Exp value must equal 2cosh(1) - 2");
        assert!((want - 1.0861612696304874).abs() < 1e-15);
    }

    #[test]
    fn logdet_outside_domain_is_flagged_not_thrown() {
        // W∘W = [[0,4],[4,0]] has spectral radius 4 > s = 1, so det(I - A)
        // = 1 - 16 < 0: outside the domain.
        let spec = ConstraintSpec::new(ConstraintKind::LogDet);
        let w = two_cycle(2.0);
        let v = constraint_value(&spec, &w);
        assert!(v.is_infinite() && v > 0.0, "out-of-domain LogDet value is +inf");
        let eval = constraint_grad(&spec, &w);
        assert!(!eval.finite, "out-of-domain LogDet eval must be marked non-finite");
    }

    #[test]
    fn logdet_inside_domain_matches_closed_form() {
        // A = [[0, 1/4], [1/4, 0]]: det(I - A) = 1 - 1/16 = 15/16.
        let spec = ConstraintSpec::new(ConstraintKind::LogDet);
        let w = two_cycle(0.5);
        let v = constraint_value(&spec, &w);
        let want = -libm::log(15.0 / 16.0);
        assert!((v - want).abs() < 1e-14, "LogDet value must equal -log det(I - A)");
    }

    #[test]
    fn smoothed_gradient_at_origin_is_exactly_zero() {
        let spec = ConstraintSpec::default();
        let z = DenseMatrix::zeros(4, 4);
        let eval = constraint_grad(&spec, &z);
        assert!(eval.finite);
        assert!(!eval.nonsmooth_point, "the smoothed kind never flags a kink");
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(
                    eval.gradient.get(i, j),
                    0.0,
                    "smoothed-core derivative vanishes at the origin, so the gradient is exactly 0"
                );
            }
        }
    }

    #[test]
    fn nonsmooth_kinds_flag_kinks() {
        let w = upper_triangular_example(); // has exact zeros off-diagonal
        for kind in [ConstraintKind::Ahoc, ConstraintKind::SAhoc] {
            let eval = constraint_grad(&ConstraintSpec::new(kind), &w);
            assert!(eval.nonsmooth_point, "{} at a sparse point must flag the subgradient", kind);
        }
        // A fully dense W has no kink.
        let mut dense = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    dense.set(i, j, 0.3 + (i as f64) - 0.5 * (j as f64));
                }
            }
        }
        let eval = constraint_grad(&ConstraintSpec::new(ConstraintKind::Ahoc), &dense);
        assert!(!eval.nonsmooth_point, "no zero entries means a true gradient");
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Central differences on a small dense matrix, every kind. The
        // matrix is kept inside the LogDet domain and away from kinks.
        let d = 4;
        let mut w = DenseMatrix::zeros(d, d);
        let vals = [
            0.0, 0.31, -0.24, 0.11, //
            -0.17, 0.0, 0.22, -0.29, //
            0.13, -0.21, 0.0, 0.18, //
            -0.11, 0.27, -0.15, 0.0,
        ];
        for i in 0..d {
            for j in 0..d {
                w.set(i, j, vals[i * d + j]);
            }
        }
        for kind in ConstraintKind::ALL {
            let spec = ConstraintSpec::new(kind);
            let eval = constraint_grad(&spec, &w);
            assert!(eval.finite, "{} must be finite at this interior point", kind);
            let step = 1e-6;
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    let mut wp = w.clone();
                    wp.set(i, j, w.get(i, j) + step);
                    let mut wm = w.clone();
                    wm.set(i, j, w.get(i, j) - step);
                    let fd =
                        (constraint_value(&spec, &wp) - constraint_value(&spec, &wm)) / (2.0 * step);
                    let got = eval.gradient.get(i, j);
                    let scale = fd.abs().max(got.abs()).max(1e-8);
                    assert!(
                        (fd - got).abs() / scale <= 1e-5,
                        "{} gradient at ({}, {}) disagrees with finite differences: fd={}, got={}",
                        kind,
                        i,
                        j,
                        fd,
                        got
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_diagonal_is_forced_zero() {
        let w = two_cycle(0.4);
        for kind in ConstraintKind::ALL {
            let eval = constraint_grad(&ConstraintSpec::new(kind), &w);
            for i in 0..2 {
                assert_eq!(eval.gradient.get(i, i), 0.0, "{} diagonal must be zeroed", kind);
            }
        }
    }

    #[test]
    fn normalized_values_respect_global_bound() {
        // For normalized kinds the surrogate has Frobenius norm < 1, so
        // h <= d*e - d regardless of the scale of W.
        let mut w = DenseMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    w.set(i, j, 1e6 * ((i + 2 * j) as f64 + 1.0));
                }
            }
        }
        let d = 5.0;
        for kind in [ConstraintKind::Aac, ConstraintKind::Ahoc, ConstraintKind::SAhoc, ConstraintKind::SmoothedAhoc] {
            let v = constraint_value(&ConstraintSpec::new(kind), &w);
            assert!(v.is_finite(), "{} is bounded for arbitrarily large W", kind);
            assert!(v <= d * libm::exp(1.0) - d, "{} must respect h <= d*e - d", kind);
            assert!(v >= 0.0, "{} is nonnegative", kind);
        }
    }

    #[test]
    fn spec_validation_catches_bad_parameters() {
        let mut spec = ConstraintSpec::default();
        assert!(spec.validate().is_ok(), "defaults must validate");
        spec.alpha = 1.0;
        assert_eq!(spec.validate().unwrap_err(), SpecError::AlphaOutOfRange);
        spec.alpha = 0.5;
        spec.delta = 0.0;
        assert_eq!(spec.validate().unwrap_err(), SpecError::NonPositiveDelta);
        spec = ConstraintSpec::new(ConstraintKind::LogDet);
        spec.s = 0.5;
        assert_eq!(spec.validate().unwrap_err(), SpecError::ScaleBelowOne);
        // LogDet ignores alpha entirely, so a wild alpha is fine there.
        spec.s = 1.0;
        spec.alpha = 7.0;
        assert!(spec.validate().is_ok(), "ignored parameters are not validated");
        assert!(spec.ignored_parameters().contains(&"alpha"));
    }

    #[test]
    fn sahoc_near_origin_gradient_is_first_order_small() {
        // With all entries at ±t for tiny t, the trace-exponential sees the
        // normalized surrogate only through its diagonal at first order, so
        // the off-diagonal gradient entries scale like t rather than like
        // the core derivative (1-alpha)·sign(W).
        let spec = ConstraintSpec::new(ConstraintKind::SAhoc);
        let t = 1e-6;
        let mut w = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    w.set(i, j, if (i + j) % 2 == 0 { t } else { -t });
                }
            }
        }
        let eval = constraint_grad(&spec, &w);
        assert!(eval.finite);
        assert!(!eval.nonsmooth_point, "all off-diagonal entries are nonzero");
        assert!(
            eval.gradient.frobenius_norm() < 100.0 * t,
            "near the origin the SAhoc gradient norm is O(t), got {}",
            eval.gradient.frobenius_norm()
        );
    }
}
