//! Dense matrix primitives: storage, factorizations, the matrix exponential
//! and support-pattern (DAG) utilities.
//!
//! Everything here is plain row-major `f64` storage sized for the problem
//! scales this crate targets (tens to a few hundred variables). The matrix
//! exponential follows the Higham scaling-and-squaring scheme with the
//! standard degree-13 Padé approximant and its lower-degree shortcuts.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Error type for the dense linear-algebra routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// Operand shapes are incompatible for the requested operation.
    DimensionMismatch,
    /// A square matrix was required.
    NotSquare,
    /// The factorization encountered an (numerically) singular pivot.
    Singular,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch => write!(f, "operand dimensions do not match"),
            LinalgError::NotSquare => write!(f, "matrix must be square"),
            LinalgError::Singular => write!(f, "matrix is singular to working precision"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row-major data vector. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Raw row-major slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable raw row-major slice.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Borrow one row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree for matmul");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self += s * other`, entrywise.
    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) {
        assert_eq!(self.rows, other.rows, "shapes must match for add_scaled");
        assert_eq!(self.cols, other.cols, "shapes must match for add_scaled");
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    /// Multiply every entry by `s`.
    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "shapes must match for hadamard");
        assert_eq!(self.cols, other.cols, "shapes must match for hadamard");
        let data = self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a * b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> f64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|&x| x * x).sum())
    }

    /// Entrywise 1-norm (sum of absolute values).
    pub fn entry_l1_norm(&self) -> f64 {
        self.data.iter().map(|&x| libm::fabs(x)).sum()
    }

    /// Induced 1-norm (maximum column sum of absolute values).
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| libm::fabs(self.get(i, j))).sum();
            if s > best {
                best = s;
            }
        }
        best
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| {
            let a = libm::fabs(x);
            if a > m {
                a
            } else {
                m
            }
        })
    }

    /// Largest absolute off-diagonal entry (square matrices).
    pub fn max_abs_offdiag(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut best = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    let a = libm::fabs(self.get(i, j));
                    if a > best {
                        best = a;
                    }
                }
            }
        }
        best
    }

    /// Frobenius inner product `<self, other>`.
    pub fn frobenius_dot(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows, "shapes must match for frobenius_dot");
        assert_eq!(self.cols, other.cols, "shapes must match for frobenius_dot");
        self.data.iter().zip(other.data.iter()).map(|(&a, &b)| a * b).sum()
    }

    /// Number of entries that are not the exact floating-point zero.
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0.0).count()
    }

    /// Set the diagonal to exact zeros.
    pub fn zero_diagonal(&mut self) {
        let n = core::cmp::min(self.rows, self.cols);
        for i in 0..n {
            self.set(i, i, 0.0);
        }
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// LU factorization with partial pivoting, `P * A = L * U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// Packed L (unit lower, below diagonal) and U (upper incl. diagonal).
    lu: DenseMatrix,
    /// Row permutation: `perm[i]` is the source row of factored row `i`.
    perm: Vec<usize>,
    /// Sign of the permutation, `+1.0` or `-1.0`.
    perm_sign: f64,
}

impl Lu {
    /// Factor a square matrix. Fails on an exactly-zero pivot column.
    pub fn factor(a: &DenseMatrix) -> Result<Lu, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare);
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut perm_sign = 1.0;
        for k in 0..n {
            // Pivot: largest magnitude in column k at or below the diagonal.
            let mut p = k;
            let mut best = libm::fabs(lu.get(k, k));
            for i in (k + 1)..n {
                let v = libm::fabs(lu.get(i, k));
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
                perm.swap(k, p);
                perm_sign = -perm_sign;
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let m = lu.get(i, k) / pivot;
                lu.set(i, k, m);
                if m != 0.0 {
                    for j in (k + 1)..n {
                        let v = lu.get(i, j) - m * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, perm_sign })
    }

    /// Solve `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length must equal matrix order");
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        // Forward substitution with unit lower triangle.
        for i in 1..self.n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        // Back substitution.
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for j in (i + 1)..self.n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.n, "row count of B must equal matrix order");
        let mut out = DenseMatrix::zeros(self.n, b.cols());
        let mut col = vec![0.0; self.n];
        for j in 0..b.cols() {
            for i in 0..self.n {
                col[i] = b.get(i, j);
            }
            let x = self.solve_vec(&col);
            for i in 0..self.n {
                out.set(i, j, x[i]);
            }
        }
        out
    }

    /// Sign and natural log of the absolute determinant.
    ///
    /// Returns `(sign, ln|det|)` with `sign` in `{-1.0, 0.0, 1.0}`.
    pub fn slog_det(&self) -> (f64, f64) {
        let mut sign = self.perm_sign;
        let mut logdet = 0.0;
        for i in 0..self.n {
            let d = self.lu.get(i, i);
            if d == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            if d < 0.0 {
                sign = -sign;
            }
            logdet += libm::log(libm::fabs(d));
        }
        (sign, logdet)
    }
}

// Padé coefficients and order thresholds for the scaling-and-squaring
// matrix exponential (double precision).
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Evaluate the order-`m` Padé approximant given precomputed even powers,
/// returning `(U, V)` with `exp(A) ~ (V - U)^{-1} (V + U)`.
fn pade_uv(a: &DenseMatrix, powers: &[&DenseMatrix], b: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    // U = A * (sum over odd coefficients), V = sum over even coefficients.
    let mut u_inner = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for i in 0..n {
        u_inner.set(i, i, b[1]);
        v.set(i, i, b[0]);
    }
    for (k, p) in powers.iter().enumerate() {
        // powers[k] = A^{2(k+1)}
        let even = b[2 * (k + 1)];
        let odd = b.get(2 * (k + 1) + 1).copied().unwrap_or(0.0);
        v.add_scaled(even, p);
        if odd != 0.0 {
            u_inner.add_scaled(odd, p);
        }
    }
    (a.matmul(&u_inner), v)
}

fn pade_13(a: &DenseMatrix, a2: &DenseMatrix, a4: &DenseMatrix, a6: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let b = &B13;
    // U = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let mut w1 = a6.clone();
    w1.scale(b[13]);
    w1.add_scaled(b[11], a4);
    w1.add_scaled(b[9], a2);
    let mut w = a6.matmul(&w1);
    w.add_scaled(b[7], a6);
    w.add_scaled(b[5], a4);
    w.add_scaled(b[3], a2);
    for i in 0..n {
        w.set(i, i, w.get(i, i) + b[1]);
    }
    let u = a.matmul(&w);
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut z1 = a6.clone();
    z1.scale(b[12]);
    z1.add_scaled(b[10], a4);
    z1.add_scaled(b[8], a2);
    let mut v = a6.matmul(&z1);
    v.add_scaled(b[6], a6);
    v.add_scaled(b[4], a4);
    v.add_scaled(b[2], a2);
    for i in 0..n {
        v.set(i, i, v.get(i, i) + b[0]);
    }
    (u, v)
}

/// Matrix exponential by scaling and squaring with Padé approximants.
///
/// Returns an error only if the internal linear solve encounters a singular
/// matrix, which cannot happen for finite input at these approximant orders.
pub fn mat_exp(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare);
    }
    let norm = a.one_norm();
    let a2 = a.matmul(a);
    let pick = |u: DenseMatrix, v: DenseMatrix| -> Result<DenseMatrix, LinalgError> {
        let mut vmu = v.clone();
        vmu.add_scaled(-1.0, &u);
        let mut vpu = v;
        vpu.add_scaled(1.0, &u);
        let lu = Lu::factor(&vmu)?;
        Ok(lu.solve_matrix(&vpu))
    };
    if norm <= THETA_3 {
        let (u, v) = pade_uv(a, &[&a2], &B3);
        return pick(u, v);
    }
    let a4 = a2.matmul(&a2);
    if norm <= THETA_5 {
        let (u, v) = pade_uv(a, &[&a2, &a4], &B5);
        return pick(u, v);
    }
    let a6 = a4.matmul(&a2);
    if norm <= THETA_7 {
        let (u, v) = pade_uv(a, &[&a2, &a4, &a6], &B7);
        return pick(u, v);
    }
    if norm <= THETA_9 {
        let a8 = a6.matmul(&a2);
        let (u, v) = pade_uv(a, &[&a2, &a4, &a6, &a8], &B9);
        return pick(u, v);
    }
    // Scale down by 2^s so the scaled norm fits the order-13 approximant.
    let s = if norm > THETA_13 {
        let raw = libm::ceil(libm::log2(norm / THETA_13));
        if raw < 0.0 {
            0
        } else {
            raw as i32
        }
    } else {
        0
    };
    let scale = libm::ldexp(1.0, -s);
    let mut asc = a.clone();
    asc.scale(scale);
    let a2s = asc.matmul(&asc);
    let a4s = a2s.matmul(&a2s);
    let a6s = a4s.matmul(&a2s);
    let (u, v) = pade_13(&asc, &a2s, &a4s, &a6s);
    let mut e = pick(u, v)?;
    for _ in 0..s {
        e = e.matmul(&e);
    }
    Ok(e)
}

/// Result of the power-iteration spectral radius estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadius {
    /// Estimated spectral radius (non-negative).
    pub value: f64,
    /// Whether the iteration met its tolerance before the cap.
    pub converged: bool,
    /// Iterations actually used.
    pub iterations: usize,
}

/// Spectral radius of an entrywise non-negative matrix by power iteration.
///
/// A tiny diagonal shift proportional to the Frobenius norm keeps the
/// iteration well defined on nilpotent inputs; the shift is subtracted from
/// the estimate and the result clamped at zero.
pub fn spectral_radius(a: &DenseMatrix) -> SpectralRadius {
    assert!(a.is_square(), "spectral radius needs a square matrix");
    let n = a.rows();
    if n == 0 {
        return SpectralRadius { value: 0.0, converged: true, iterations: 0 };
    }
    let shift = 1e-12 * a.frobenius_norm();
    let tol = 1e-10;
    let max_iter = 10_000;
    let mut v = vec![1.0 / libm::sqrt(n as f64); n];
    let mut lambda = 0.0f64;
    let mut converged = false;
    let mut used = 0;
    for it in 0..max_iter {
        used = it + 1;
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            let row = a.row(i);
            let mut s = shift * v[i];
            for j in 0..n {
                s += row[j] * v[j];
            }
            w[i] = s;
        }
        let norm = libm::sqrt(w.iter().map(|&x| x * x).sum());
        if norm == 0.0 {
            // The iterate died: the matrix is nilpotent along this vector.
            return SpectralRadius { value: 0.0, converged: true, iterations: used };
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        let new_lambda = norm;
        let settled =
            it > 0 && libm::fabs(new_lambda - lambda) <= tol * libm::fabs(new_lambda).max(1.0);
        lambda = new_lambda;
        v = w;
        if settled {
            converged = true;
            break;
        }
    }
    let value = (lambda - shift).max(0.0);
    SpectralRadius { value, converged, iterations: used }
}

/// Kahn topological sort of the support digraph (edge `i -> j` when
/// `w[i][j] != 0`). Returns `None` when the support contains a cycle.
pub fn topological_order(w: &DenseMatrix) -> Option<Vec<usize>> {
    assert!(w.is_square(), "support pattern must be square");
    let n = w.rows();
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && w.get(i, j) != 0.0 {
                indeg[j] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = stack.pop() {
        order.push(u);
        for j in 0..n {
            if j != u && w.get(u, j) != 0.0 {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    stack.push(j);
                }
            }
        }
    }
    if order.len() == n {
        Some(order)
    } else {
        None
    }
}

/// True when the nonzero pattern of `w` (diagonal ignored) is acyclic.
pub fn is_dag_support(w: &DenseMatrix) -> bool {
    assert!(w.is_square(), "support pattern must be square");
    let n = w.rows();
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && w.get(i, j) != 0.0 {
                indeg[j] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for j in 0..n {
            if j != u && w.get(u, j) != 0.0 {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    stack.push(j);
                }
            }
        }
    }
    seen == n
}

/// Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order along with the matching
/// orthonormal eigenvectors as matrix columns.
pub fn sym_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut q = DenseMatrix::identity(n);
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let off = {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
            s
        };
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m.get(p, r);
                if libm::fabs(apq) < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(r, r);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, r);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, r, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(r, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(r, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, r, s * qkp + c * qkq);
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let values: Vec<f64> = pairs.iter().map(|&(v, _)| v).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (newcol, &(_, oldcol)) in pairs.iter().enumerate() {
        for k in 0..n {
            vecs.set(k, newcol, q.get(k, oldcol));
        }
    }
    (values, vecs)
}
