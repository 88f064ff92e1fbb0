//! Dense complex linear algebra on small matrices.
//!
//! Storage is row-major. In tensor products the leftmost factor owns the most
//! significant index digit, so `kron(a, b)[(i * rb + k, j * cb + l)] = a[i, j] * b[k, l]`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default cap on the number of entries of any dense matrix built through [`kron`].
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 20;

/// Largest matrix handed to the Jacobi eigensolver.
pub const EIGEN_MAX_DIM: usize = 256;

/// Tolerance used for the Hermiticity check before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-10;

static MAX_ENTRIES: OnceLock<usize> = OnceLock::new();

/// The configured entry cap: `SUPSTATE_MAX_DIM` if set and valid, else [`DEFAULT_MAX_ENTRIES`].
pub fn max_entries() -> usize {
    *MAX_ENTRIES.get_or_init(|| {
        std::env::var("SUPSTATE_MAX_DIM")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_ENTRIES)
    })
}

pub(crate) fn check_entries(what: &'static str, requested: Option<usize>) -> Result<usize> {
    let cap = max_entries();
    match requested {
        Some(n) if n <= cap => Ok(n),
        Some(n) => Err(Error::DimensionTooLarge {
            what,
            requested: n,
            cap,
        }),
        None => Err(Error::DimensionTooLarge {
            what,
            requested: usize::MAX,
            cap,
        }),
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A complex column vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn new(entries: Vec<C64>) -> Self {
        CVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); dim])
    }

    /// The computational basis vector `|k⟩` of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(entries: &[f64]) -> Self {
        CVector(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    /// Returns `self / ‖self‖`; a zero vector is returned unchanged.
    pub fn normalized(&self) -> CVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn kron(&self, other: &CVector) -> CVector {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        CVector(out)
    }

    /// `|self⟩⟨other|`
    pub fn outer(&self, other: &CVector) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.0[i] * other.0[j].conj()
        })
    }

    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// A dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeError(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::ShapeError("ragged rows".into()));
        }
        Self::from_vec(r, cols, rows.concat())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Column vector as an `n x 1` matrix.
    pub fn ket(v: &CVector) -> Self {
        CMatrix {
            rows: v.dim(),
            cols: 1,
            data: v.entries().to_vec(),
        }
    }

    /// Conjugated row vector as a `1 x n` matrix.
    pub fn bra(v: &CVector) -> Self {
        CMatrix {
            rows: 1,
            cols: v.dim(),
            data: v.entries().iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols,
            other.rows,
            "matmul shape mismatch: {:?} x {:?}",
            self.shape(),
            other.shape()
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        CVector::new(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(v.entries())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        )
    }

    /// `A†v` without forming `A†`.
    pub fn apply_dagger(&self, v: &CVector) -> CVector {
        assert_eq!(self.rows, v.dim(), "matrix-vector shape mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for (i, x) in v.entries().iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * x;
            }
        }
        CVector::new(out)
    }

    pub fn dagger(&self) -> CMatrix {
        dagger(self)
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `|a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(a + a†) / 2`
    pub fn symmetrized(&self) -> CMatrix {
        let d = self.dagger();
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + d[(i, j)]) * 0.5
        })
    }

    /// `‖a† a - I‖_max`
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger()
            .matmul(self)
            .max_abs_diff(&CMatrix::identity(self.rows))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Row-major flattening, the `vec` used for Choi operators.
    pub fn to_vector(&self) -> CVector {
        CVector::new(self.data.clone())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Tensor product bookkeeping: the dimension of each factor, leftmost most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorShape(Vec<usize>);

impl FactorShape {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::ShapeError(format!(
                "factor dimensions must be positive, got {factor_dims:?}"
            )));
        }
        Ok(FactorShape(factor_dims))
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.0
    }

    pub fn total_dim(&self) -> usize {
        self.0.iter().product()
    }

    /// Index stride of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = b.cols.checked_mul(a.cols);
    let entries = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c));
    check_entries("kron", entries)?;
    let (rows, cols) = (a.rows * b.rows, a.cols * b.cols);
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                let dst = (i * b.rows + k) * cols + j * b.cols;
                let src = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, v) in out.data[dst..dst + b.cols].iter_mut().zip(src) {
                    *o = s * v;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&CMatrix]) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// Partial trace of a square operator over every factor not listed in `keep`.
///
/// The kept factors appear in the result in their original order.
pub fn partial_trace(rho: &CMatrix, shape: &FactorShape, keep: &[usize]) -> Result<CMatrix> {
    if !rho.is_square() || rho.rows() != shape.total_dim() {
        return Err(Error::ShapeError(format!(
            "operator {:?} does not match factor shape {:?}",
            rho.shape(),
            shape.factor_dims()
        )));
    }
    let n = shape.factor_dims().len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
        return Err(Error::ShapeError(format!(
            "factor index {bad} out of range for {n} factors"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();
    let strides = shape.strides();
    let dims = shape.factor_dims();

    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[f]);
            for &o in &offs {
                for x in 0..dims[f] {
                    next.push(o + x * strides[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);

    let m = keep_off.len();
    let mut out = CMatrix::zeros(m, m);
    for (a, &ra) in keep_off.iter().enumerate() {
        for (b, &cb) in keep_off.iter().enumerate() {
            out[(a, b)] = trace_off.iter().map(|&t| rho[(ra + t, cb + t)]).sum();
        }
    }
    Ok(out)
}

/// The `d² x d²` permutation swapping two copies of `ℂ^d`.
pub fn swap_matrix(d: usize) -> CMatrix {
    let n = d * d;
    let mut s = CMatrix::zeros(n, n);
    for x in 0..d {
        for y in 0..d {
            // S |x y⟩ = |y x⟩
            s[(y * d + x, x * d + y)] = C64::new(1.0, 0.0);
        }
    }
    s
}

fn checked_hermitian(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::ShapeError(format!(
            "eigenvalues need a square matrix, got {:?}",
            a.shape()
        )));
    }
    if a.rows() > EIGEN_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            what: "hermitian eigensolver",
            requested: a.rows(),
            cap: EIGEN_MAX_DIM,
        });
    }
    let scale = a.max_abs().max(1.0);
    let deviation = a.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(a.symmetrized())
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of a unitary matrix.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let mut m = checked_hermitian(a)?;
    let n = m.rows();
    let mut vecs = CMatrix::identity(n);
    let total: f64 = m.data.iter().map(|z| z.norm_sqr()).sum();
    let target = (1e-15 * total.sqrt()).powi(2);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                // Rephase column q so the (p, q) entry is real, then rotate.
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G = diag(1, conj(phase)) · R on the (p, q) block.
                let g_pp = C64::new(cs, 0.0);
                let g_pq = C64::new(sn, 0.0);
                let g_qp = -phase.conj() * sn;
                let g_qq = phase.conj() * cs;

                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * g_pp + akq * g_qp;
                    m[(k, q)] = akp * g_pq + akq * g_qq;
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = vkp * g_pp + vkq * g_qp;
                    vecs[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    m[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let sorted = CMatrix::from_fn(n, n, |r, k| vecs[(r, order[k])]);
    Ok((values, sorted))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_max_eigenvalue(a: &CMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(a)?;
    Ok(values.first().copied().unwrap_or(0.0))
}
