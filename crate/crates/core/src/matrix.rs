//! Dense complex-matrix primitives shared by every other module.
//!
//! The workhorse type is [`ComplexMatrix`], a row-major dense matrix of
//! `Complex<T>` entries. On top of it this module provides the Hermitian
//! eigendecomposition (cyclic Jacobi), principal square roots, LU solves,
//! and the rank-profile block partitioning used throughout the solver.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MedError, Result};
use crate::scalar::{real, to_f64, Scalar};

/// Ordered list of state ranks `(r_1, ..., r_m)` with `sum r_i = n`.
///
/// Ranks are kept in non-increasing order; ties stay in input order. All
/// `n x n` matrices in this crate are partitioned into blocks of these sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankProfile {
    ranks: Vec<usize>,
}

impl RankProfile {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(MedError::InvalidProfile("profile must be non-empty".into()));
        }
        if ranks.contains(&0) {
            return Err(MedError::InvalidProfile("every rank must be >= 1".into()));
        }
        if ranks.windows(2).any(|w| w[0] < w[1]) {
            return Err(MedError::InvalidProfile(
                "ranks must be in non-increasing order".into(),
            ));
        }
        Ok(Self { ranks })
    }

    /// Profile of `n` pure states, `(1, 1, ..., 1)`.
    pub fn pure(n: usize) -> Self {
        Self { ranks: vec![1; n] }
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Number of states `m`.
    pub fn num_blocks(&self) -> usize {
        self.ranks.len()
    }

    /// Total dimension `n`.
    pub fn dim(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// Offset of block `i` in the flat two-tier ordering.
    pub fn offset(&self, block: usize) -> usize {
        self.ranks[..block].iter().sum()
    }

    /// Flat index range covered by block `i`.
    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let start = self.offset(block);
        start..start + self.ranks[block]
    }

    /// Flat index of `(block, inner)`.
    pub fn flat_index(&self, index: BlockIndex) -> Result<usize> {
        if index.block >= self.num_blocks() || index.inner >= self.ranks[index.block] {
            return Err(MedError::IndexOutOfRange {
                block: index.block,
                inner: index.inner,
                profile: format!("{:?}", self.ranks),
            });
        }
        Ok(self.offset(index.block) + index.inner)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn block_of(&self, flat: usize) -> BlockIndex {
        let mut rem = flat;
        for (b, &r) in self.ranks.iter().enumerate() {
            if rem < r {
                return BlockIndex {
                    block: b,
                    inner: rem,
                };
            }
            rem -= r;
        }
        panic!(
            "flat index {flat} out of range for profile {:?}",
            self.ranks
        );
    }

    /// Sum of squared ranks: the real dimension of block-diagonal Hermitian
    /// matrices with this structure.
    pub fn sum_sq(&self) -> usize {
        self.ranks.iter().map(|&r| r * r).sum()
    }
}

impl std::fmt::Display for RankProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.ranks.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Two-tier index: block `i`, component `j` within the block. Zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub block: usize,
    pub inner: usize,
}

/// Dense rectangular complex matrix, row-major.
///
/// Equality of matrices is always tolerance-based; see [`ComplexMatrix::approx_eq`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "{}x{} matrix needs {} entries, got {}",
                    rows,
                    cols,
                    rows * cols,
                    data.len()
                ),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diag(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
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

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch in add"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch in sub"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                let row = k * other.cols;
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[row + j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square(), "trace of non-square matrix");
        let mut t = Complex::new(T::zero(), T::zero());
        for i in 0..self.rows {
            t += self[(i, i)];
        }
        t
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest entry-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other).max_abs()
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    /// Frobenius norm of `M - M†`.
    pub fn hermitian_residual(&self) -> T {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scale_re(real(0.5))
    }

    pub fn fill_zero(&mut self) {
        for z in self.data.iter_mut() {
            *z = Complex::new(T::zero(), T::zero());
        }
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex<T>]) {
        assert_eq!(col.len(), self.rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Keep columns in `range`, producing an `rows x range.len()` matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_fn(self.rows, range.len(), |i, j| self[(i, range.start + j)])
    }

    /// Solve `self * X = rhs` by LU with partial pivoting.
    pub fn lu_solve(&self, rhs: &Self) -> Result<Self> {
        assert!(self.is_square(), "lu_solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows, "shape mismatch in lu_solve");
        let n = self.rows;
        let k = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            // pivot
            let mut p = col;
            let mut best = a[col * n + col].norm();
            for r in col + 1..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= T::epsilon() * real::<T>(16.0) * self.max_abs().max(T::one()) {
                return Err(MedError::Singular);
            }
            if p != col {
                for j in 0..n {
                    a.swap(col * n + j, p * n + j);
                }
                for j in 0..k {
                    b.swap(col * k + j, p * k + j);
                }
            }
            let pivot = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / pivot;
                if factor.norm_sqr() == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= factor * v;
                }
                for j in 0..k {
                    let v = b[col * k + j];
                    b[r * k + j] -= factor * v;
                }
            }
        }
        // back substitution
        for col in (0..n).rev() {
            let pivot = a[col * n + col];
            for j in 0..k {
                let mut s = b[col * k + j];
                for r in col + 1..n {
                    s -= a[col * n + r] * b[r * k + j];
                }
                b[col * k + j] = s / pivot;
            }
        }
        Self::from_vec(n, k, b)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.lu_solve(&Self::identity(self.rows))
    }

    /// Cholesky factorization `A = L L†` of a Hermitian positive definite
    /// matrix; `None` when a pivot fails, which doubles as a fast positive
    /// definiteness test.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut diag = self[(j, j)].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if diag <= T::zero() || !diag.is_finite() {
                return None;
            }
            let d = diag.sqrt();
            l[(j, j)] = Complex::new(d, T::zero());
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / Complex::new(d, T::zero());
            }
        }
        Some(l)
    }

    /// Inverse and log-determinant of a Hermitian positive definite matrix
    /// via Cholesky; `None` when the matrix is not positive definite.
    pub fn cholesky_inverse_logdet(&self) -> Option<(Self, T)> {
        let n = self.rows;
        let l = self.cholesky()?;
        let mut logdet = T::zero();
        for i in 0..n {
            logdet += l[(i, i)].re.ln();
        }
        logdet = logdet + logdet;
        // forward/backward substitution against the identity
        let mut inv = Self::identity(n);
        for col in 0..n {
            for i in 0..n {
                let mut s = inv[(i, col)];
                for k in 0..i {
                    s -= l[(i, k)] * inv[(k, col)];
                }
                inv[(i, col)] = s / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = inv[(i, col)];
                for k in i + 1..n {
                    s -= l[(k, i)].conj() * inv[(k, col)];
                }
                inv[(i, col)] = s / l[(i, i)];
            }
        }
        Some((inv, logdet))
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Fails with `NotHermitian` when `|M - M†|_F` exceeds `tol`. Eigenvalues
    /// come back ascending; eigenvectors are the matching columns of a unitary
    /// matrix, each with its largest-modulus component rotated to the positive
    /// real axis so results are deterministic.
    pub fn hermitian_eig(&self, tol: T) -> Result<HermitianEig<T>> {
        if !self.is_square() {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "eigendecomposition needs a square matrix, got {}x{}",
                    self.rows, self.cols
                ),
            });
        }
        let residual = self.hermitian_residual();
        if residual > tol {
            return Err(MedError::NotHermitian {
                residual: to_f64(residual),
                tol: to_f64(tol),
            });
        }
        let n = self.rows;
        let mut a = self.hermitian_part();
        let mut v = Self::identity(n);
        let scale = a.frobenius_norm().max(T::one());
        let target = T::epsilon() * scale * real(0.5);

        let off = |m: &Self| -> T {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += m[(i, j)].norm_sqr();
                    }
                }
            }
            s.sqrt()
        };

        let max_sweeps = 60;
        let mut sweep = 0;
        while off(&a) > target && sweep < max_sweeps {
            sweep += 1;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let b = apq.norm();
                    if b <= target / real::<T>((n * n) as f64) {
                        continue;
                    }
                    // phase that makes the pivot real, then a real rotation
                    let u = apq / Complex::new(b, T::zero());
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (b + b);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    let cs = Complex::new(c, T::zero());
                    let su = Complex::new(s, T::zero()) * u; // s*u
                    let su_conj = su.conj();

                    // A <- U† A U with U = [[c, s*u], [-s*conj(u), c]] on (p,q)
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * cs - akq * su_conj;
                        a[(k, q)] = akp * su + akq * cs;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * cs - aqk * su;
                        a[(q, k)] = apk * su_conj + aqk * cs;
                    }
                    // keep exact symmetry on the pivot pair
                    a[(p, q)] = Complex::new(T::zero(), T::zero());
                    a[(q, p)] = Complex::new(T::zero(), T::zero());
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cs - vkq * su_conj;
                        v[(k, q)] = vkp * su + vkq * cs;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let mut lambda: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| lambda[i].partial_cmp(&lambda[j]).expect("NaN eigenvalue"));
        lambda.sort_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));

        let mut vectors = Self::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = v.column(src);
            // deterministic phase: largest-modulus component real positive
            let mut arg = 0usize;
            let mut best = T::zero();
            for (i, z) in col.iter().enumerate() {
                let m = z.norm();
                if m > best {
                    best = m;
                    arg = i;
                }
            }
            if best > T::zero() {
                let phase = col[arg] / Complex::new(best, T::zero());
                let correction = phase.conj();
                for z in col.iter_mut() {
                    *z *= correction;
                }
            }
            vectors.set_column(dst, &col);
        }

        Ok(HermitianEig {
            eigenvalues: lambda,
            eigenvectors: vectors,
        })
    }

    /// Unique positive semidefinite square root.
    ///
    /// Eigenvalues in `[-tol, 0]` are clamped to zero; anything below `-tol`
    /// is a `NotPositiveSemidefinite` error.
    pub fn principal_sqrt(&self, tol: T) -> Result<Self> {
        let eig = self.hermitian_eig(tol)?;
        let roots: Vec<T> = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                if l < -tol {
                    Err(MedError::NotPositiveSemidefinite {
                        min_eigenvalue: to_f64(l),
                        tol: to_f64(tol),
                    })
                } else {
                    Ok(l.max(T::zero()).sqrt())
                }
            })
            .collect::<Result<_>>()?;
        Ok(eig.recompose(&roots))
    }

    /// Inverse of the principal square root; requires strict positive
    /// definiteness relative to the numerical-rank threshold.
    pub fn principal_inv_sqrt(&self, tol: T) -> Result<Self> {
        let eig = self.hermitian_eig(tol)?;
        let n = self.rows;
        let largest = eig.eigenvalues.last().copied().unwrap_or(T::zero());
        let cutoff = largest * real::<T>(n as f64) * real::<T>(1e-12);
        let roots: Vec<T> = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                if l <= cutoff.max(T::zero()) {
                    Err(MedError::NotPositiveDefinite {
                        min_eigenvalue: to_f64(l),
                    })
                } else {
                    Ok(T::one() / l.sqrt())
                }
            })
            .collect::<Result<_>>()?;
        Ok(eig.recompose(&roots))
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self, tol: T) -> Result<T> {
        Ok(self.hermitian_eig(tol)?.eigenvalues[0])
    }

    /// Numerical rank of a Hermitian PSD matrix: eigenvalues below
    /// `lambda_max * n * 1e-12` count as zero.
    pub fn numerical_rank_psd(&self, tol: T) -> Result<usize> {
        let eig = self.hermitian_eig(tol)?;
        Ok(rank_from_spectrum(&eig.eigenvalues, self.rows))
    }
}

/// Numerical rank from a spectrum (absolute values used), with the
/// `max * n * 1e-12` zero threshold.
pub fn rank_from_spectrum<T: Scalar>(values: &[T], n: usize) -> usize {
    let largest = values
        .iter()
        .map(|v| v.abs())
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let cutoff = largest * real::<T>(n as f64) * real::<T>(1e-12);
    values.iter().filter(|v| v.abs() > cutoff).count()
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of [`ComplexMatrix::hermitian_eig`].
#[derive(Debug, Clone)]
pub struct HermitianEig<T: Scalar> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Unitary; column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Scalar> HermitianEig<T> {
    /// `V diag(values) V†` for an arbitrary replacement spectrum.
    pub fn recompose(&self, values: &[T]) -> ComplexMatrix<T> {
        let n = self.eigenvectors.rows();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= Complex::new(values[j], T::zero());
            }
        }
        scaled.mul(&self.eigenvectors.adjoint()).hermitian_part()
    }
}

/// Copy out the `r_i x r_j` submatrix at block position `(i, j)`.
pub fn block_view<T: Scalar>(
    m: &ComplexMatrix<T>,
    profile: &RankProfile,
    i: usize,
    j: usize,
) -> Result<ComplexMatrix<T>> {
    let n = profile.dim();
    if m.rows() != n || m.cols() != n {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "matrix is {}x{}, profile dimension is {}",
                m.rows(),
                m.cols(),
                n
            ),
        });
    }
    if i >= profile.num_blocks() || j >= profile.num_blocks() {
        return Err(MedError::IndexOutOfRange {
            block: i.max(j),
            inner: 0,
            profile: profile.to_string(),
        });
    }
    let ri = profile.block_range(i);
    let rj = profile.block_range(j);
    Ok(ComplexMatrix::from_fn(ri.len(), rj.len(), |a, b| {
        m[(ri.start + a, rj.start + b)]
    }))
}

/// Assemble an `n x n` matrix with the given diagonal blocks, zeros elsewhere.
pub fn assemble_block_diagonal<T: Scalar>(
    blocks: &[ComplexMatrix<T>],
    profile: &RankProfile,
) -> Result<ComplexMatrix<T>> {
    if blocks.len() != profile.num_blocks() {
        return Err(MedError::ShapeMismatch {
            detail: format!(
                "{} blocks given, profile has {}",
                blocks.len(),
                profile.num_blocks()
            ),
        });
    }
    for (k, b) in blocks.iter().enumerate() {
        let r = profile.ranks()[k];
        if b.rows() != r || b.cols() != r {
            return Err(MedError::ShapeMismatch {
                detail: format!(
                    "block {} is {}x{}, expected {}x{}",
                    k,
                    b.rows(),
                    b.cols(),
                    r,
                    r
                ),
            });
        }
    }
    let mut out = ComplexMatrix::zeros(profile.dim(), profile.dim());
    for (k, b) in blocks.iter().enumerate() {
        let range = profile.block_range(k);
        for a in 0..b.rows() {
            for c in 0..b.cols() {
                out[(range.start + a, range.start + c)] = b[(a, c)];
            }
        }
    }
    Ok(out)
}

/// Diagonal blocks of `m`, in profile order.
pub fn extract_diagonal_blocks<T: Scalar>(
    m: &ComplexMatrix<T>,
    profile: &RankProfile,
) -> Result<Vec<ComplexMatrix<T>>> {
    (0..profile.num_blocks())
        .map(|i| block_view(m, profile, i, i))
        .collect()
}

/// Zero out everything outside the diagonal blocks.
pub fn block_diagonal_part<T: Scalar>(
    m: &ComplexMatrix<T>,
    profile: &RankProfile,
) -> Result<ComplexMatrix<T>> {
    assemble_block_diagonal(&extract_diagonal_blocks(m, profile)?, profile)
}

// ---------------------------------------------------------------------------
// Real coordinates for Hermitian matrices.
//
// A Hermitian n x n matrix has n^2 real degrees of freedom: the diagonal plus
// real/imaginary parts of the strict upper triangle. Both the path-derivative
// systems and the barrier Newton steps are solved in these coordinates.
// ---------------------------------------------------------------------------

/// Number of real coordinates of a Hermitian `n x n` matrix.
pub fn hermitian_dof(n: usize) -> usize {
    n * n
}

pub fn pack_hermitian<T: Scalar>(m: &ComplexMatrix<T>, out: &mut Vec<T>) {
    let n = m.rows();
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
}

pub fn unpack_hermitian<T: Scalar>(x: &[T], n: usize) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        m[(i, i)] = Complex::new(x[idx], T::zero());
        idx += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex::new(x[idx], x[idx + 1]);
            idx += 2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Solve a dense real linear system in place. `a` is `n x n` row-major,
/// `b` holds the right-hand side and receives the solution.
pub fn solve_real_system<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a
        .iter()
        .fold(T::zero(), |acc, &v| acc.max(v.abs()))
        .max(T::one());
    for col in 0..n {
        let mut p = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best <= T::epsilon() * scale * real::<T>(n as f64) {
            return Err(MedError::SingularLinearSystem);
        }
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
            b.swap(col, p);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for r in col + 1..n {
            s -= a[col * n + r] * b[r];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(())
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix
/// (modified Gram-Schmidt, diagonal phases fixed).
pub fn random_unitary<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    let mut g = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = Complex::new(real(re), real(im));
        }
    }
    let mut q = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = g.column(j);
        for k in 0..j {
            let qk = q.column(k);
            let mut proj = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                proj += qk[i].conj() * col[i];
            }
            for i in 0..n {
                col[i] -= proj * qk[i];
            }
        }
        let mut norm2 = T::zero();
        for z in &col {
            norm2 += z.norm_sqr();
        }
        // Ginibre columns are almost surely independent; fall back to a basis
        // vector in the measure-zero degenerate case.
        if norm2 <= T::epsilon() {
            for (i, z) in col.iter_mut().enumerate() {
                *z = if i == j {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                };
            }
            norm2 = T::one();
        }
        let inv = T::one() / norm2.sqrt();
        for z in col.iter_mut() {
            *z *= Complex::new(inv, T::zero());
        }
        q.set_column(j, &col);
    }
    q
}
