//! Small dense linear-algebra kernel.
//!
//! Everything here works on plain `Vec<f64>` data and is sized for the
//! handful of dimensions the learning algorithms use (at most ten or so).
//! The routines are deterministic and free of shared state.

use crate::error::{Error, Result};
use crate::tol::{tol, JACOBI_MAX_SWEEPS, MIN_NORM_MAX_ITERS};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Returns `a / |a|`, or `None` for a zero (or non-finite) vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Canonical basis vector `e_i` in `R^dim`.
pub fn basis_vector(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            axpy(&mut out, *vi, self.row(i));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `max |A'A - I|` over entries, for a matrix whose columns should be orthonormal.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.transpose().matmul(self);
        let mut err = 0.0_f64;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - target).abs());
            }
        }
        err
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix that is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Builds `(A + A') / 2`, so the result is exactly symmetric.
    pub fn symmetrized(a: &Matrix) -> Result<Self> {
        if a.rows() != a.cols() || a.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix needs a nonempty square input, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = a[(i, i)];
            for j in (i + 1)..n {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::symmetrized(&Matrix::from_rows(rows)?)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Self::symmetrized(&m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Spectral decomposition `S = V diag(eigenvalues) V'`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`; its first
    /// entry of non-negligible magnitude is nonnegative.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut out = Matrix::zeros(n, n);
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                let vik = self.eigenvectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] += vik * self.eigenvectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(s: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = s.dim();
    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(n);

    let mut converged = n == 1;
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].abs();
            }
        }
        if off == 0.0 {
            converged = true;
            break;
        }
        let threshold = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = 100.0 * apq.abs();
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-14) {
            if *first < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Fails with [`Error::DependentInput`] when a vector's residual drops
/// below the rank tolerance relative to its norm.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        let n0 = norm(v);
        if n0 == 0.0 || !n0.is_finite() {
            return Err(Error::DependentInput(format!("vector {idx} is zero")));
        }
        let w = orthogonalize(v, &basis);
        let r = norm(&w);
        if r < tol().gram_schmidt_rank * n0 {
            return Err(Error::DependentInput(format!(
                "vector {idx} has relative residual {:e}",
                r / n0
            )));
        }
        basis.push(scale(&w, 1.0 / r));
    }
    Ok(basis)
}

/// Removes the components of `v` along an orthonormal `basis` (two passes).
pub fn orthogonalize(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &w);
            axpy(&mut w, -c, b);
        }
    }
    w
}

/// Orthonormal `p x p` matrix whose first column is `first` (unit norm).
///
/// The remaining columns come from Gram-Schmidt on `e_1, ..., e_p`,
/// skipping canonical vectors that are (numerically) already spanned.
pub fn complete_orthonormal(first: &[f64]) -> Result<Matrix> {
    let p = first.len();
    let head = normalized(first).ok_or_else(|| Error::InvalidInput("zero axis".into()))?;
    let mut basis = vec![head];
    for k in 0..p {
        if basis.len() == p {
            break;
        }
        let w = orthogonalize(&basis_vector(p, k), &basis);
        let r = norm(&w);
        if r > 1e-6 {
            basis.push(scale(&w, 1.0 / r));
        }
    }
    if basis.len() != p {
        return Err(Error::NumericalFailure("basis completion failed".into()));
    }
    Matrix::from_columns(&basis)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear needs a square system, got {}x{} with rhs {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let scale_a = a.max_abs();
    let threshold = tol().pivot * scale_a.max(f64::MIN_POSITIVE);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv_row, piv_val) =
            (col..n)
                .map(|r| (r, m[(r, col)].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_val < threshold || piv_val == 0.0 {
            return Err(Error::SingularSystem {
                pivot: piv_val,
                threshold,
            });
        }
        if piv_row != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv_row, j)];
                m[(piv_row, j)] = tmp;
            }
            rhs.swap(col, piv_row);
        }
        let pivot = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(r, j)] -= f * m[(col, j)];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    Ok(x)
}

/// Result of [`min_norm_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Convex weights, one per input point.
    pub weights: Vec<f64>,
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
///
/// On return every input `q_j` satisfies `q_j'x >= |x|^2 - wolfe`.
pub fn min_norm_point(points: &[Vec<f64>]) -> Result<MinNormPoint> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput(
            "min_norm_point needs at least one point".into(),
        ));
    }
    let dim = points[0].len();
    if points.iter().any(|q| q.len() != dim) {
        return Err(Error::DimensionMismatch(
            "points of different lengths".into(),
        ));
    }
    let wolfe = tol().wolfe;
    let combine = |set: &[usize], w: &[f64]| {
        let mut x = vec![0.0; dim];
        for (k, &i) in set.iter().enumerate() {
            axpy(&mut x, w[k], &points[i]);
        }
        x
    };

    // Start from the shortest point; ties go to the lowest index.
    let start = (0..n)
        .map(|i| (i, dot(&points[i], &points[i])))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
        .0;
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..MIN_NORM_MAX_ITERS {
        let xx = dot(&x, &x);
        let (j, best) = (0..n)
            .map(|j| (j, dot(&points[j], &x)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if best >= xx - wolfe || set.contains(&j) {
            let mut weights = vec![0.0; n];
            for (k, &i) in set.iter().enumerate() {
                weights[i] += lambda[k];
            }
            if best < xx - wolfe {
                return Err(Error::NumericalFailure(
                    "minimum-norm point stalled before reaching the Wolfe certificate".into(),
                ));
            }
            return Ok(MinNormPoint { point: x, weights });
        }
        set.push(j);
        lambda.push(0.0);

        loop {
            let mu = affine_min_weights(points, &set)?;
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                x = combine(&set, &lambda);
                break;
            }
            let mut theta = 1.0_f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-15 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut keep_set = Vec::with_capacity(set.len());
            let mut keep_lambda = Vec::with_capacity(set.len());
            for (k, &i) in set.iter().enumerate() {
                if lambda[k] > 1e-15 {
                    keep_set.push(i);
                    keep_lambda.push(lambda[k]);
                }
            }
            if keep_set.is_empty() {
                return Err(Error::NumericalFailure("Wolfe corral became empty".into()));
            }
            let total: f64 = keep_lambda.iter().sum();
            keep_lambda.iter_mut().for_each(|l| *l /= total);
            set = keep_set;
            lambda = keep_lambda;
            x = combine(&set, &lambda);
            if set.len() == 1 {
                break;
            }
        }
    }
    Err(Error::NumericalFailure(format!(
        "minimum-norm point did not converge in {MIN_NORM_MAX_ITERS} iterations"
    )))
}

/// Weights of the minimum-norm point of the affine hull of `points[set]`.
fn affine_min_weights(points: &[Vec<f64>], set: &[usize]) -> Result<Vec<f64>> {
    let s = set.len();
    if s == 1 {
        return Ok(vec![1.0]);
    }
    let mut m = Matrix::zeros(s + 1, s + 1);
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate() {
            m[(a, b)] = dot(&points[i], &points[j]);
        }
        m[(a, s)] = 1.0;
        m[(s, a)] = 1.0;
    }
    let mut rhs = vec![0.0; s + 1];
    rhs[s] = 1.0;
    let sol = solve_linear(&m, &rhs)?;
    Ok(sol[..s].to_vec())
}

/// Nonnegative least squares `min |A x - b|, x >= 0` (Lawson-Hanson), with
/// `A` given by its columns. Returns `(x, residual_norm)`.
pub fn nnls(columns: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = columns.len();
    if columns.iter().any(|c| c.len() != b.len()) {
        return Err(Error::DimensionMismatch("nnls column length".into()));
    }
    let residual = |x: &[f64]| {
        let mut r = b.to_vec();
        for (c, xi) in columns.iter().zip(x) {
            axpy(&mut r, -xi, c);
        }
        r
    };
    let scale_b = norm(b).max(1.0);
    let tol_grad = 1e-12 * scale_b;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    for _ in 0..(3 * n + 10) {
        let r = residual(&x);
        let w: Vec<f64> = columns.iter().map(|c| dot(c, &r)).collect();
        let cand = (0..n).filter(|&j| !passive[j]).map(|j| (j, w[j])).fold(
            None,
            |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            },
        );
        let Some((j, wj)) = cand else { break };
        if wj <= tol_grad {
            break;
        }
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let mut g = Matrix::zeros(idx.len(), idx.len());
            let mut rhs = vec![0.0; idx.len()];
            for (a, &i) in idx.iter().enumerate() {
                rhs[a] = dot(&columns[i], b);
                for (bb, &k) in idx.iter().enumerate() {
                    g[(a, bb)] = dot(&columns[i], &columns[k]);
                }
            }
            let s = match solve_linear(&g, &rhs) {
                Ok(s) => s,
                Err(_) => {
                    // Column dependent on the passive set: drop it.
                    passive[*idx.last().unwrap()] = false;
                    break;
                }
            };
            if s.iter().all(|&v| v > 0.0) {
                for (a, &i) in idx.iter().enumerate() {
                    x[i] = s[a];
                }
                break;
            }
            let mut alpha = 1.0_f64;
            for (a, &i) in idx.iter().enumerate() {
                if s[a] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - s[a]));
                }
            }
            for (a, &i) in idx.iter().enumerate() {
                x[i] += alpha * (s[a] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    let r = norm(&residual(&x));
    Ok((x, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_symmetric(rng: &mut Xoshiro256PlusPlus, n: usize) -> SymmetricMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        SymmetricMatrix::from_rows(&rows).unwrap()
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                m = m.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        m
    }

    #[test]
    fn eig_of_diagonal() {
        let s = SymmetricMatrix::diagonal(&[2.0, 5.0]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 5.0]);
        assert_eq!(e.eigenvectors, Matrix::identity(2));
    }

    #[test]
    fn eig_of_swap_matrix() {
        let s = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstruction_on_random_matrices() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 8;
            let s = random_symmetric(&mut rng, n);
            let e = sym_eig(&s).unwrap();
            let scale = s.as_matrix().max_abs().max(1.0);
            assert!(max_abs_diff(&e.reconstruct(), s.as_matrix()) <= 1e-9 * scale);
            assert!(e.eigenvectors.orthonormality_error() <= 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_handles_widely_scaled_matrix() {
        // Shape of the ConeUpdate matrix M when W is huge.
        let a = 3.0e13;
        let s = SymmetricMatrix::from_rows(&[
            vec![1.0, a, 0.0],
            vec![a, a * a - 1e27, 0.0],
            vec![0.0, 0.0, -2e27],
        ])
        .unwrap();
        let e = sym_eig(&s).unwrap();
        let scale = s.as_matrix().max_abs();
        assert!(max_abs_diff(&e.reconstruct(), s.as_matrix()) <= 1e-9 * scale);
        assert!(e.eigenvectors.orthonormality_error() <= 1e-10);
        assert!(e.eigenvalues[2] > 0.0);
    }

    #[test]
    fn gram_schmidt_axis_aligned() {
        let b = gram_schmidt(&[vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(b, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let e1 = gram_schmidt(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(e1, vec![vec![1.0, 0.0, 0.0]]);
    }

    #[test]
    fn gram_schmidt_random_triples_and_idempotence() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        for _ in 0..200 {
            let vs: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let b = gram_schmidt(&vs).unwrap();
            for i in 0..3 {
                assert!((norm(&b[i]) - 1.0).abs() <= 1e-12);
                for j in (i + 1)..3 {
                    assert!(dot(&b[i], &b[j]).abs() <= 1e-10);
                }
            }
            // span preserved: each input reconstructs from the basis
            for v in &vs {
                let r = orthogonalize(v, &b);
                assert!(norm(&r) <= 1e-10 * norm(v));
            }
            let bb = gram_schmidt(&b).unwrap();
            for (x, y) in b.iter().zip(&bb) {
                assert!(norm(&sub(x, y)) <= 1e-12);
            }
        }
    }

    #[test]
    fn gram_schmidt_rejects_dependent_input() {
        let err = gram_schmidt(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::DependentInput(_)));
        assert!(matches!(
            gram_schmidt(&[vec![0.0, 0.0]]),
            Err(Error::DependentInput(_))
        ));
    }

    #[test]
    fn solve_small_systems() {
        let b = vec![3.0, -1.0, 2.0];
        assert_eq!(solve_linear(&Matrix::identity(3), &b).unwrap(), b);
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn solve_random_well_conditioned() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        for _ in 0..100 {
            let mut a = Matrix::zeros(6, 6);
            for i in 0..6 {
                for j in 0..6 {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
                a[(i, i)] += 6.0;
            }
            let b: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = solve_linear(&a, &b).unwrap();
            let r = sub(&a.mul_vec(&x), &b);
            assert!(norm(&r) <= 1e-8 * norm(&b).max(1.0));
        }
    }

    #[test]
    fn solve_detects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &[1.0, 1.0]),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn min_norm_simple_cases() {
        let r = min_norm_point(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-12 && (r.point[1] - 0.5).abs() < 1e-12);
        let r = min_norm_point(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(r.point, vec![1.0, 1.0]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn min_norm_matches_grid_search_on_segment() {
        let pts = vec![vec![1.0, 0.0], vec![-1.0, 0.1]];
        // oracle: scan gamma in [0,1] with step 1e-5
        let mut best = (f64::INFINITY, 0.0);
        let steps = 100_000;
        for k in 0..=steps {
            let g = k as f64 / steps as f64;
            let p = [g * 1.0 + (1.0 - g) * -1.0, (1.0 - g) * 0.1];
            let v = p[0] * p[0] + p[1] * p[1];
            if v < best.0 {
                best = (v, p[0]);
            }
        }
        let r = min_norm_point(&pts).unwrap();
        assert!((r.point[0] - best.1).abs() < 1e-4);
        assert!(r.point[0].abs() < 3e-3);
    }

    #[test]
    fn min_norm_certificate_on_random_clouds() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(21);
        for trial in 0..300 {
            let dim = 2 + trial % 5;
            let n = 1 + trial % 9;
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|_| rng.random_range(-1.0..1.0) + 0.3)
                        .collect()
                })
                .collect();
            let r = min_norm_point(&pts).unwrap();
            let xx = dot(&r.point, &r.point);
            for q in &pts {
                assert!(dot(q, &r.point) >= xx - 1e-9);
                assert!(norm(&r.point) <= norm(q) + 1e-12);
            }
            let avg: Vec<f64> = (0..dim)
                .map(|i| pts.iter().map(|q| q[i]).sum::<f64>() / n as f64)
                .collect();
            assert!(norm(&r.point) <= norm(&avg) + 1e-12);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.weights.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn nnls_membership() {
        let cols = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let (_, r) = nnls(&cols, &[2.0, 1.0]).unwrap();
        assert!(r < 1e-12);
        let (x, r) = nnls(&cols, &[-1.0, 1.0]).unwrap();
        assert!(r > 0.5);
        assert!(x.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn complete_orthonormal_keeps_first_column() {
        let axis = normalized(&[1.0, 2.0, -0.5]).unwrap();
        let u = complete_orthonormal(&axis).unwrap();
        assert!(u.orthonormality_error() < 1e-12);
        assert!(norm(&sub(&u.column(0), &axis)) < 1e-15);
    }
}
