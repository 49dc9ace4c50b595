//! Structural evaluation (SHD, TPR/FDR, exact-zero statistics, sign
//! consistency) and empirical checkers for the support-recovery
//! assumptions.
//!
//! SHD convention: one reversed edge counts as a single error. The paper
//! trail on this differs between tools, so the convention is stated here
//! once and used everywhere: for each unordered node pair the two graphs
//! are compared by their pair state (no edge / forward / backward / both),
//! a single-vs-single mismatch costs 1, and otherwise the cost is the
//! difference in edge counts on that pair.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{sym_eigen, DenseMatrix, Lu};
use crate::objective::stability_threshold;

/// Directed support pattern on `d` nodes, diagonal always empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolAdjacency {
    d: usize,
    mask: Vec<bool>,
}

impl BoolAdjacency {
    pub fn empty(d: usize) -> Self {
        BoolAdjacency { d, mask: vec![false; d * d] }
    }

    /// Support of the exactly-nonzero entries of `w` (diagonal ignored).
    pub fn from_weights(w: &DenseMatrix) -> Self {
        Self::from_threshold(w, 0.0)
    }

    /// Support of entries with `|w| > tau` (strict), diagonal ignored.
    pub fn from_threshold(w: &DenseMatrix, tau: f64) -> Self {
        assert!(w.is_square(), "adjacency source must be square");
        assert!(tau >= 0.0, "threshold must be nonnegative");
        let d = w.rows();
        let mut mask = vec![false; d * d];
        for i in 0..d {
            for j in 0..d {
                if i != j && libm::fabs(w.get(i, j)) > tau {
                    mask[i * d + j] = true;
                }
            }
        }
        BoolAdjacency { d, mask }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.d + j]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "diagonal entries cannot carry edges");
        self.mask[i * self.d + j] = present;
    }

    pub fn num_edges(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Parent set of node `j` (sources of edges into `j`).
    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.d).filter(|&i| i != j && self.edge(i, j)).collect()
    }
}

/// Structural Hamming distance under the one-error-per-reversal convention.
pub fn shd(est: &BoolAdjacency, truth: &BoolAdjacency) -> usize {
    assert_eq!(est.d(), truth.d(), "SHD requires equal dimensions");
    let d = est.d();
    let mut total = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            let a = (est.edge(i, j), est.edge(j, i));
            let b = (truth.edge(i, j), truth.edge(j, i));
            if a == b {
                continue;
            }
            let ca = a.0 as usize + a.1 as usize;
            let cb = b.0 as usize + b.1 as usize;
            total += if ca == 1 && cb == 1 {
                1 // opposite single edges: a reversal costs one
            } else {
                ca.abs_diff(cb)
            };
        }
    }
    total
}

/// Support-level scores of an estimated weighted adjacency.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StructuralScore {
    pub shd: usize,
    /// True-positive rate over the true edge set (1.0 when there are no
    /// true edges).
    pub tpr: f64,
    /// False-discovery rate over the estimated edge set (0.0 when nothing
    /// is estimated).
    pub fdr: f64,
    /// Off-diagonal entries of the raw estimate that are not exact zeros.
    pub nnz: usize,
    /// Off-diagonal entries of the raw estimate that are the exact
    /// floating-point zero.
    pub exact_zero_count: usize,
    /// Thresholded support equals the true support.
    pub support_match: bool,
    /// Supports match and every estimated sign agrees with the truth.
    pub sign_consistent: bool,
}

impl StructuralScore {
    /// Fraction of off-diagonal entries that are exact zeros.
    pub fn sparsity(&self) -> f64 {
        let cells = self.nnz + self.exact_zero_count;
        if cells == 0 {
            1.0
        } else {
            self.exact_zero_count as f64 / cells as f64
        }
    }
}

/// Score `w_est` against `w_true`.
///
/// Exact-zero statistics are taken on the raw estimate with no
/// thresholding; SHD/TPR/FDR compare the `tau`-thresholded estimate
/// support against the exact support of the truth.
pub fn structural_score(w_est: &DenseMatrix, w_true: &DenseMatrix, tau: f64) -> StructuralScore {
    assert_eq!(w_est.rows(), w_true.rows(), "score requires equal dimensions");
    let d = w_est.rows();
    let est = BoolAdjacency::from_threshold(w_est, tau);
    let truth = BoolAdjacency::from_weights(w_true);

    let mut nnz = 0;
    for i in 0..d {
        for j in 0..d {
            if i != j && w_est.get(i, j) != 0.0 {
                nnz += 1;
            }
        }
    }
    let exact_zero_count = d * d - d - nnz;

    let mut tp = 0usize;
    let mut fp = 0usize;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            match (est.edge(i, j), truth.edge(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                _ => {}
            }
        }
    }
    let true_edges = truth.num_edges();
    let est_edges = est.num_edges();
    let tpr = if true_edges == 0 { 1.0 } else { tp as f64 / true_edges as f64 };
    let fdr = if est_edges == 0 { 0.0 } else { fp as f64 / est_edges as f64 };

    let support_match = est == truth;
    let sign_consistent = support_match
        && (0..d).all(|i| {
            (0..d).all(|j| {
                !est.edge(i, j)
                    || (w_est.get(i, j) > 0.0) == (w_true.get(i, j) > 0.0)
            })
        });

    StructuralScore {
        shd: shd(&est, &truth),
        tpr,
        fdr,
        nnz,
        exact_zero_count,
        support_match,
        sign_consistent,
    }
}

/// Empirical checks of the support-recovery assumptions for one dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionReport {
    /// Irrepresentability margin `γ̂ = 1 − max_j ‖Σ_{S^c S}(Σ_{SS})⁻¹‖_∞`.
    /// Positive means the mutual-incoherence condition holds empirically.
    pub gamma_hat: f64,
    /// Smallest restricted curvature: `min_j λ_min(Σ_{S_j S_j})`.
    pub kappa_hat: f64,
    /// Whether the smallest true weight clears `4λ₁/κ̂`.
    pub beta_min_ok: bool,
    /// Whether `λ₁` is at or above the stability threshold of the data.
    pub stability_ok: bool,
    /// Columns whose restricted Gram block was singular and skipped.
    pub singular_columns: Vec<usize>,
    /// Number of columns with nonempty parent sets that were checked.
    pub checked_columns: usize,
}

/// Irrepresentability and restricted-curvature estimates.
///
/// The least-squares Hessian of the vectorized weights is block-diagonal
/// with one copy of `Σ = XᵀX/n` per target column, so the condition
/// decomposes column by column: for each node `j` with parent set `S`,
/// take the ∞-norm of `Σ_{S^c S}(Σ_{SS})⁻¹` over non-parent rows
/// (excluding `j` itself). The report's `beta_min_ok`/`stability_ok`
/// fields are left `false` here; use [`assumption_report`] for the full
/// set of checks.
pub fn check_irrepresentable(x: &DenseMatrix, truth: &BoolAdjacency) -> AssumptionReport {
    let d = truth.d();
    assert_eq!(x.cols(), d, "data dimension must match the adjacency");
    let n = x.rows();
    let mut sigma = x.transpose().matmul(x);
    sigma.scale(1.0 / n as f64);

    let mut worst_ratio = 0.0f64;
    let mut kappa_hat = f64::INFINITY;
    let mut singular_columns = Vec::new();
    let mut checked_columns = 0;

    for j in 0..d {
        let parents = truth.parents(j);
        if parents.is_empty() {
            continue;
        }
        let k = parents.len();
        let mut block = DenseMatrix::zeros(k, k);
        for (a, &pa) in parents.iter().enumerate() {
            for (b, &pb) in parents.iter().enumerate() {
                block.set(a, b, sigma.get(pa, pb));
            }
        }
        let lu = match Lu::factor(&block) {
            Ok(lu) => lu,
            Err(_) => {
                singular_columns.push(j);
                continue;
            }
        };
        checked_columns += 1;

        let (eigs, _) = sym_eigen(&block);
        if eigs[0] < kappa_hat {
            kappa_hat = eigs[0];
        }

        let inv = lu.solve_matrix(&DenseMatrix::identity(k));
        for i in 0..d {
            if i == j || parents.contains(&i) {
                continue;
            }
            // Row vector Σ_{i,S} (Σ_{SS})⁻¹, ℓ1 norm.
            let mut l1 = 0.0;
            for b in 0..k {
                let mut v = 0.0;
                for (a, &pa) in parents.iter().enumerate() {
                    v += sigma.get(i, pa) * inv.get(a, b);
                }
                l1 += libm::fabs(v);
            }
            if l1 > worst_ratio {
                worst_ratio = l1;
            }
        }
    }

    if checked_columns == 0 {
        kappa_hat = 0.0;
    }
    AssumptionReport {
        gamma_hat: 1.0 - worst_ratio,
        kappa_hat,
        beta_min_ok: false,
        stability_ok: false,
        singular_columns,
        checked_columns,
    }
}

/// The beta-min condition `min_{(i,j) ∈ supp(W*)} |W*_ij| ≥ 4λ₁/κ̂`.
///
/// An empty support passes vacuously.
pub fn check_beta_min(w_true: &DenseMatrix, lambda1: f64, kappa_hat: f64) -> bool {
    assert!(kappa_hat > 0.0, "beta-min check needs positive curvature");
    let mut min_weight = f64::INFINITY;
    for i in 0..w_true.rows() {
        for j in 0..w_true.cols() {
            if i != j && w_true.get(i, j) != 0.0 {
                min_weight = min_weight.min(libm::fabs(w_true.get(i, j)));
            }
        }
    }
    if min_weight.is_infinite() {
        return true;
    }
    min_weight >= 4.0 * lambda1 / kappa_hat
}

/// All assumption checks for one (dataset, truth, λ₁) triple.
pub fn assumption_report(
    x: &DenseMatrix,
    w_true: &DenseMatrix,
    lambda1: f64,
) -> AssumptionReport {
    let truth = BoolAdjacency::from_weights(w_true);
    let mut report = check_irrepresentable(x, &truth);
    report.beta_min_ok =
        report.kappa_hat > 0.0 && check_beta_min(w_true, lambda1, report.kappa_hat);
    report.stability_ok = lambda1 >= stability_threshold(x);
    report
}
