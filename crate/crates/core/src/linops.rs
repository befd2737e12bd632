//! Dense complex matrices and the handful of kernels the rest of the crate is
//! built on: Kronecker products, partial traces over tensor factors, and the
//! clustered Hermitian eigendecomposition.
//!
//! Storage is row-major. All comparisons take an explicit absolute tolerance.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

/// Default absolute tolerance for merging eigenvalues into one spectral group.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return dim_err(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from nested rows. All rows must share one length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return dim_err("ragged rows");
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<Complex64> = values.iter().map(|&x| c(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, a) in v.iter().enumerate() {
            for (j, b) in w.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &[Complex64]) -> Self {
        Self::outer(v, v)
    }

    /// `|i⟩⟨j|` in a `dim`-dimensional space.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(i, j)] = ONE;
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Complex64>]) -> Result<Self> {
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|v| v.len() != n) {
            return dim_err("columns of unequal length");
        }
        let mut m = Self::zeros(n, cols.len());
        for (j, v) in cols.iter().enumerate() {
            for (i, &z) in v.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_vecs(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product; panics on inner-dimension mismatch (use [`Self::try_matmul`]
    /// where shapes come from user input).
    pub fn matmul(&self, other: &Self) -> Self {
        self.try_matmul(other)
            .unwrap_or_else(|e| panic!("matmul: {e}"))
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "apply: vector length mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `A B − B A`
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// `Tr(A† B)`
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * other.data[k * other.cols + i];
            }
        }
        acc
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm distance to `other`; infinite on shape mismatch.
    pub fn max_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_diff(other) <= tol
    }

    /// `‖h − h†‖_max`
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(A + A†)/2`
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        self.to_nalgebra().try_inverse().map(|m| Self::from_nalgebra(&m))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl std::iter::Sum for ComplexMatrix {
    /// Panics on an empty iterator: the shape would be unknown.
    fn sum<It: Iterator<Item = Self>>(mut iter: It) -> Self {
        let mut acc = iter.next().expect("sum of empty matrix iterator");
        for m in iter {
            acc.add_assign(&m);
        }
        acc
    }
}

impl ComplexMatrix {
    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_assign: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: Complex64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_scaled: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }
}

/// Subsystem dimensions of a tensor-product space, most significant factor first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimProfile {
    dims: Vec<usize>,
}

impl DimProfile {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("zero subsystem dimension".into()));
        }
        Ok(Self { dims })
    }

    pub fn uniform(d: usize, factors: usize) -> Self {
        Self {
            dims: vec![d; factors],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat offsets of every multi-index over `factors`, in lexicographic
    /// order of the selected factors.
    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        let mut offsets = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offsets.len() * self.dims[f]);
            for &o in &offsets {
                for digit in 0..self.dims[f] {
                    next.push(o + digit * strides[f]);
                }
            }
            offsets = next;
        }
        offsets
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let s = a[(ai, aj)];
            if s == ZERO {
                continue;
            }
            for bi in 0..b.rows {
                let row = ai * b.rows + bi;
                for bj in 0..b.cols {
                    out.data[row * cols + aj * b.cols + bj] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list, first element most significant.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Traces out every factor not listed in `keep`. Kept factors retain their
/// original relative order.
pub fn partial_trace(m: &ComplexMatrix, profile: &DimProfile, keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return dim_err("partial trace of a non-square matrix");
    }
    if profile.total() != m.rows() {
        return dim_err(format!(
            "profile {:?} has total dimension {} but matrix side is {}",
            profile.dims(),
            profile.total(),
            m.rows()
        ));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= profile.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: profile.len(),
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..profile.len()).filter(|f| !kept.contains(f)).collect();
    let kept_off = profile.offsets(&kept);
    let traced_off = profile.offsets(&traced);
    let n = kept_off.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (col, &co) in kept_off.iter().enumerate() {
            out[(r, col)] = traced_off.iter().map(|&t| m[(ro + t, co + t)]).sum();
        }
    }
    Ok(out)
}

/// One eigenvalue cluster of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenGroup {
    pub value: f64,
    /// Orthonormal basis of the eigenspace.
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenGroup {
    pub fn multiplicity(&self) -> usize {
        self.vectors.len()
    }

    pub fn projector(&self) -> ComplexMatrix {
        self.vectors
            .iter()
            .map(|v| ComplexMatrix::projector(v))
            .sum()
    }
}

/// Clustered eigendecomposition with the default clustering tolerance.
pub fn hermitian_eig(h: &ComplexMatrix, tol: f64) -> Result<Vec<EigenGroup>> {
    hermitian_eig_with(h, tol, EIGEN_CLUSTER_TOL)
}

/// Eigenvalues within `cluster_tol` of a neighbour share a group (chained).
/// Groups are returned in descending eigenvalue order.
pub fn hermitian_eig_with(h: &ComplexMatrix, tol: f64, cluster_tol: f64) -> Result<Vec<EigenGroup>> {
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = h.hermitian_part().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut groups: Vec<(Vec<f64>, Vec<Vec<Complex64>>)> = Vec::new();
    let mut last = f64::NAN;
    for idx in order {
        let val = eig.eigenvalues[idx];
        let vec: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
        match groups.last_mut() {
            Some((vals, vecs)) if (last - val).abs() <= cluster_tol => {
                vals.push(val);
                vecs.push(vec);
            }
            _ => groups.push((vec![val], vec![vec])),
        }
        last = val;
    }
    Ok(groups
        .into_iter()
        .map(|(vals, vecs)| EigenGroup {
            value: vals.iter().sum::<f64>() / vals.len() as f64,
            vectors: gram_schmidt(&vecs),
        })
        .collect())
}

/// Modified Gram–Schmidt; drops vectors that become numerically zero.
pub fn gram_schmidt(vectors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let proj: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= proj * bi;
            }
        }
        let norm = vec_norm(&w);
        if norm > 1e-10 {
            basis.push(w.iter().map(|z| z / norm).collect());
        }
    }
    basis
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .to_nalgebra()
        .singular_values()
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Ratio of the largest to the smallest singular value (infinite when singular).
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// `exp(i·angle·h)` for Hermitian `h`, through its spectral decomposition.
pub fn exp_i_hermitian(h: &ComplexMatrix, angle: f64, tol: f64) -> Result<ComplexMatrix> {
    if angle == 0.0 && h.is_square() {
        let defect = h.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        return Ok(ComplexMatrix::identity(h.rows()));
    }
    let groups = hermitian_eig(h, tol)?;
    let mut out = ComplexMatrix::zeros(h.rows(), h.cols());
    for g in &groups {
        let phase = Complex64::from_polar(1.0, angle * g.value);
        out.add_scaled(&g.projector(), phase);
    }
    Ok(out)
}

/// Unitarity defect `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    u.adjoint().matmul(u).max_diff(&ComplexMatrix::identity(u.rows()))
}

/// Standard single-qubit matrices used throughout the tests and examples.
pub mod paulis {
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::diag_real(&[1.0, -1.0])
    }

    pub fn hadamard() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap()
    }

    pub fn swap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }

    pub fn ket0() -> Vec<Complex64> {
        vec![ONE, ZERO]
    }

    pub fn ket1() -> Vec<Complex64> {
        vec![ZERO, ONE]
    }

    pub fn ket_plus() -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(s, 0.0), c(s, 0.0)]
    }

    pub fn ket_minus() -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(s, 0.0), c(-s, 0.0)]
    }

    pub fn ket_y_plus() -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(s, 0.0), c(0.0, s)]
    }

    pub fn ket_y_minus() -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(s, 0.0), c(0.0, -s)]
    }
}

#[cfg(test)]
mod tests {
    use super::paulis::*;
    use super::*;

    #[test]
    fn kron_with_identity_factors() {
        let i2 = ComplexMatrix::identity(2);
        assert!(kron(&i2, &z()).approx_eq(&ComplexMatrix::diag_real(&[1.0, -1.0, 1.0, -1.0]), 0.0));
        assert!(kron(&z(), &i2).approx_eq(&ComplexMatrix::diag_real(&[1.0, 1.0, -1.0, -1.0]), 0.0));
    }

    #[test]
    fn kron_xx_is_antidiagonal() {
        let xx = kron(&x(), &x());
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i + j == 3 { ONE } else { ZERO };
                assert_eq!(xx[(i, j)], expected);
            }
        }
    }

    #[test]
    fn partial_trace_of_swap_is_identity() {
        let p = DimProfile::uniform(2, 2);
        let r = partial_trace(&swap(), &p, &[0]).unwrap();
        assert!(r.approx_eq(&ComplexMatrix::identity(2), 1e-15));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = ComplexMatrix::from_rows(&[vec![c(0.7, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.3, 0.0)]]).unwrap();
        let sigma = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(1.0, 0.0)]]).unwrap();
        let p = DimProfile::uniform(2, 2);
        let r = partial_trace(&kron(&rho, &sigma), &p, &[0]).unwrap();
        assert!(r.approx_eq(&rho.scale(sigma.trace()), 1e-14));
        let r1 = partial_trace(&kron(&rho, &sigma), &p, &[1]).unwrap();
        assert!(r1.approx_eq(&sigma.scale(rho.trace()), 1e-14));
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)];
        let proj = ComplexMatrix::projector(&bell);
        // index-contraction oracle: sum_k <i k|P|j k>
        let mut oracle = ComplexMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    oracle[(i, j)] += proj[(2 * i + k, 2 * j + k)];
                }
            }
        }
        let r = partial_trace(&proj, &DimProfile::uniform(2, 2), &[1]).unwrap();
        assert!(r.approx_eq(&oracle, 1e-15));
        assert!(r.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-15));
    }

    #[test]
    fn partial_trace_keeps_relative_order() {
        let a = ComplexMatrix::diag_real(&[1.0, 2.0]);
        let b = ComplexMatrix::diag_real(&[1.0, 0.0, 0.0]);
        let cc = ComplexMatrix::diag_real(&[3.0, 5.0]);
        let m = kron_all([&a, &b, &cc]);
        let p = DimProfile::new(vec![2, 3, 2]).unwrap();
        let r = partial_trace(&m, &p, &[2, 0]).unwrap();
        assert!(r.approx_eq(&kron(&a, &cc), 1e-14));
    }

    #[test]
    fn partial_trace_errors() {
        let p = DimProfile::uniform(2, 2);
        assert!(matches!(
            partial_trace(&swap(), &p, &[2]),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        let bad = DimProfile::uniform(3, 2);
        assert!(matches!(partial_trace(&swap(), &bad, &[0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn eig_diagonal_groups() {
        let g = hermitian_eig(&ComplexMatrix::diag_real(&[1.0, 1.0, -1.0]), 1e-12).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[0].value - 1.0).abs() < 1e-12);
        assert_eq!(g[0].multiplicity(), 2);
        assert!((g[1].value + 1.0).abs() < 1e-12);
        assert_eq!(g[1].multiplicity(), 1);
    }

    #[test]
    fn eig_bit_flip() {
        let g = hermitian_eig(&x(), 1e-12).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g[0].projector().approx_eq(&ComplexMatrix::projector(&ket_plus()), 1e-12));
        assert!(g[1].projector().approx_eq(&ComplexMatrix::projector(&ket_minus()), 1e-12));
    }

    #[test]
    fn eig_zero_matrix() {
        let g = hermitian_eig(&ComplexMatrix::zeros(3, 3), 1e-12).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].multiplicity(), 3);
        assert!(g[0].value.abs() < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eig(&m, 1e-9), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn exp_of_pauli() {
        let u = exp_i_hermitian(&z(), std::f64::consts::FRAC_PI_2, 1e-12).unwrap();
        assert!(u.approx_eq(&ComplexMatrix::diag(&[I, -I]), 1e-12));
    }

    #[test]
    fn spectral_norm_of_commutator() {
        let px = ComplexMatrix::projector(&ket_plus());
        let py = ComplexMatrix::projector(&ket_y_plus());
        assert!((spectral_norm(&px.commutator(&py)) - 0.5).abs() < 1e-12);
    }
}
