//! Dense matrix primitives: Householder QR, symmetric pseudoinverse solves,
//! and statistical leverage scores.
//!
//! Everything is plain `f64` row-major storage. The matrices this crate works
//! with are tall and thin (many rows, tens of columns), so the only
//! decompositions needed are a thin QR of the data matrix and an
//! eigendecomposition of small symmetric Gram matrices; both are implemented
//! here directly.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Relative cutoff used to decide numerical rank: singular values below
/// `max(n, d) * sigma_max * RANK_CUTOFF_FACTOR` are treated as zero.
const RANK_CUTOFF_FACTOR: f64 = 1e-12;

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// # Panics
    /// Panics if `data.len() != rows * cols` or either dimension is zero.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
    }

    /// `X v` for a length-`cols` vector.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Xᵀ u` for a length-`rows` vector.
    pub fn t_matvec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let ui = u[i];
            if ui == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += ui * x;
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Gram matrix `XᵀX` (cols × cols, symmetric).
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = DenseMatrix::zeros(d, d);
        for i in 0..self.rows {
            let xi = self.row(i);
            for a in 0..d {
                let va = xi[a];
                if va == 0.0 {
                    continue;
                }
                for b in a..d {
                    let v = g.get(a, b) + va * xi[b];
                    g.set(a, b, v);
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                let v = g.get(b, a);
                g.set(a, b, v);
            }
        }
        g
    }

    /// Returns a copy with row `i` multiplied by `scales[i]`.
    pub fn scale_rows(&self, scales: &[f64]) -> DenseMatrix {
        assert_eq!(scales.len(), self.rows);
        let mut out = self.clone();
        for i in 0..self.rows {
            let s = scales[i];
            for c in 0..self.cols {
                let v = out.get(i, c) * s;
                out.set(i, c, v);
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Statistical leverage scores `x_iᵀ (XᵀX)⁺ x_i`, one per row, each in `[0, 1]`,
/// summing to the numerical rank of `X`.
#[derive(Debug, Clone)]
pub struct LeverageScores {
    values: Vec<f64>,
}

impl LeverageScores {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Thin Householder QR factorization `X = Q R` with `Q` (n × k) having
/// orthonormal columns and `R` (k × d) upper triangular, `k = min(n, d)`.
/// The diagonal of `R` is normalized to be nonnegative.
pub fn qr_factor(x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    x.check_finite("qr_factor input")?;
    let n = x.rows();
    let d = x.cols();
    let k = n.min(d);

    let mut r = x.clone();
    // Householder vectors, each stored with its pivot column.
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(k);

    for j in 0..k {
        let mut norm_sq = 0.0;
        for i in j..n {
            let v = r.get(i, j);
            norm_sq += v * v;
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue; // column already zero below the pivot
        }
        let pivot = r.get(j, j);
        let sign = if pivot >= 0.0 { 1.0 } else { -1.0 };
        let mut v = Vec::with_capacity(n - j);
        v.push(pivot + sign * norm);
        for i in j + 1..n {
            v.push(r.get(i, j));
        }
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for t in &mut v {
            *t /= vnorm;
        }
        // R[j.., j..] <- (I - 2vvᵀ) R[j.., j..]
        for c in j..d {
            let mut proj = 0.0;
            for (off, vi) in v.iter().enumerate() {
                proj += vi * r.get(j + off, c);
            }
            let proj2 = 2.0 * proj;
            for (off, vi) in v.iter().enumerate() {
                let val = r.get(j + off, c) - proj2 * vi;
                r.set(j + off, c, val);
            }
        }
        reflectors.push((j, v));
    }

    // Assemble thin Q by applying the reflectors in reverse to [I_k; 0].
    let mut q = DenseMatrix::zeros(n, k);
    for c in 0..k {
        q.set(c, c, 1.0);
    }
    for (j, v) in reflectors.iter().rev() {
        for c in 0..k {
            let mut proj = 0.0;
            for (off, vi) in v.iter().enumerate() {
                proj += vi * q.get(j + off, c);
            }
            let proj2 = 2.0 * proj;
            for (off, vi) in v.iter().enumerate() {
                let val = q.get(j + off, c) - proj2 * vi;
                q.set(j + off, c, val);
            }
        }
    }

    // Keep only the leading k rows of R and clear subdiagonal roundoff.
    let mut r_thin = DenseMatrix::zeros(k, d);
    for i in 0..k {
        for c in i..d {
            r_thin.set(i, c, r.get(i, c));
        }
    }
    // Fix signs so diag(R) >= 0; flip the matching Q column.
    for i in 0..k.min(d) {
        if r_thin.get(i, i) < 0.0 {
            for c in i..d {
                let v = -r_thin.get(i, c);
                r_thin.set(i, c, v);
            }
            for rr in 0..n {
                let v = -q.get(rr, i);
                q.set(rr, i, v);
            }
        }
    }
    Ok((q, r_thin))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, V)` with `M = V diag(λ) Vᵀ`; columns of `V` are the
/// eigenvectors. Accuracy is excellent for the small PSD Gram matrices this
/// crate produces.
pub fn sym_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    m.check_finite("sym_eigen input")?;
    if m.rows() != m.cols() {
        return Err(Error::DimMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let n = m.rows();
    // Work on the symmetrized copy; callers pass Gram matrices that are
    // symmetric up to roundoff.
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
        }
    }
    let mut v = DenseMatrix::identity(n);
    let frob = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        if off.sqrt() <= 1e-15 * frob {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let eig = (0..n).map(|i| a.get(i, i)).collect();
    Ok((eig, v))
}

/// Applies the pseudoinverse of a square symmetric positive semidefinite
/// matrix to a vector: returns `M⁺ v`. Eigenvalues below
/// `max(n, d) * sigma_max * 1e-12` are treated as zero.
pub fn pseudo_solve(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::DimMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if v.len() != m.rows() {
        return Err(Error::DimMismatch {
            expected: m.rows(),
            got: v.len(),
        });
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("pseudo_solve rhs"));
    }
    let (eig, vecs) = sym_eigen(m)?;
    let n = m.rows();
    let sigma_max = eig.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let cut = n as f64 * sigma_max * RANK_CUTOFF_FACTOR;

    // y = Vᵀ v, damp, then map back
    let mut y = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += vecs.get(i, j) * v[i];
        }
        y[j] = if eig[j].abs() > cut { s / eig[j] } else { 0.0 };
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += vecs.get(i, j) * y[j];
        }
        out[i] = s;
    }
    Ok(out)
}

/// Statistical leverage scores of the rows of `X`.
///
/// Computed from a thin QR when `X` has full numerical column rank (squared
/// row norms of `Q`), falling back to an eigendecomposition of the Gram
/// matrix `XᵀX` otherwise.
pub fn leverage_scores(x: &DenseMatrix) -> Result<LeverageScores> {
    x.check_finite("leverage_scores input")?;
    let n = x.rows();
    let d = x.cols();

    if n >= d {
        let (q, r) = qr_factor(x)?;
        let rmax = (0..d).fold(0.0_f64, |a, i| a.max(r.get(i, i).abs()));
        let cut = n.max(d) as f64 * rmax * RANK_CUTOFF_FACTOR;
        let full_rank = rmax > 0.0 && (0..d).all(|i| r.get(i, i).abs() > cut);
        if full_rank {
            let values = (0..n)
                .map(|i| {
                    let s: f64 = q.row(i).iter().map(|v| v * v).sum();
                    s.clamp(0.0, 1.0)
                })
                .collect();
            return Ok(LeverageScores { values });
        }
    }

    // Rank-deficient or wide: x_iᵀ (XᵀX)⁺ x_i through the eigenbasis.
    let (eig, vecs) = sym_eigen(&x.gram())?;
    let sigma_max = eig.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let cut = n.max(d) as f64 * sigma_max * RANK_CUTOFF_FACTOR;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.row(i);
        let mut score = 0.0;
        for j in 0..d {
            if eig[j] > cut {
                let mut w = 0.0;
                for (k, &xk) in xi.iter().enumerate() {
                    w += vecs.get(k, j) * xk;
                }
                score += w * w / eig[j];
            }
        }
        values.push(score.clamp(0.0, 1.0));
    }
    Ok(LeverageScores { values })
}
