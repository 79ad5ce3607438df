//! Dense complex matrices and the handful of decompositions the rest of the
//! crate needs. Everything here is small (at most 256x256), so storage is a
//! plain row-major `Vec` and the Hermitian eigensolver is cyclic Jacobi.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for
    /// literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix literal");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix literal");
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Outer product |u><v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt inner product Tr(A^dagger B).
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for r in 0..self.rows {
            for c in r..self.cols {
                if (self[(r, c)] - self[(c, r)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// (A + A^dagger) / 2.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dagger();
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&d.data) {
            *a = (*a + b) * 0.5;
        }
        m
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        m[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        m
    }

    /// Traces out the qubits listed in `traced` from an `n_qubits` register.
    /// Qubit 0 is the most significant bit of the basis index.
    pub fn partial_trace(&self, n_qubits: usize, traced: &[usize]) -> Result<Self> {
        let dim = self.require_square()?;
        if dim != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: dim,
            });
        }
        for &q in traced {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    limit: n_qubits,
                });
            }
        }
        let kept: Vec<usize> = (0..n_qubits).filter(|q| !traced.contains(q)).collect();
        let traced: Vec<usize> = (0..n_qubits).filter(|q| !kept.contains(q)).collect();
        let bit = |q: usize| 1usize << (n_qubits - 1 - q);
        let compose = |kept_idx: usize, traced_idx: usize| -> usize {
            let mut full = 0;
            for (k, &q) in kept.iter().enumerate() {
                if (kept_idx >> (kept.len() - 1 - k)) & 1 == 1 {
                    full |= bit(q);
                }
            }
            for (k, &q) in traced.iter().enumerate() {
                if (traced_idx >> (traced.len() - 1 - k)) & 1 == 1 {
                    full |= bit(q);
                }
            }
            full
        };
        let dk = 1 << kept.len();
        let dt = 1 << traced.len();
        let mut out = Self::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for t in 0..dt {
                    acc += self[(compose(a, t), compose(b, t))];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
    /// Eigenvalues are returned in ascending order; eigenvectors are the
    /// columns of the returned matrix.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let n = self.require_square()?;
        let scale = self.max_abs();
        if !self.is_hermitian(1e-9 * scale.max(1.0)) {
            return Err(Error::InvalidParameter(
                "eigh requires a Hermitian matrix".into(),
            ));
        }
        let mut a = self.hermitian_part();
        let mut v = Self::identity(n);
        if n == 0 {
            return Ok((vec![], v));
        }
        let threshold = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * n as f64;
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let g = a[(p, q)];
                    let abs_g = g.norm();
                    if abs_g <= threshold * 1e-3 {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let phase = g / abs_g;
                    let theta = (aqq - app) / (2.0 * abs_g);
                    let t = if theta.is_infinite() {
                        0.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // U restricted to (p, q): diag(1, conj(phase)) * [[c, s], [-s, c]]
                    let u_pp = C64::new(c, 0.0);
                    let u_pq = C64::new(s, 0.0);
                    let u_qp = -phase.conj() * s;
                    let u_qq = phase.conj() * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * u_pp + akq * u_qp;
                        a[(k, q)] = akp * u_pq + akq * u_qq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                    }
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * u_pp + vkq * u_qp;
                        v[(k, q)] = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let mut vecs = Self::zeros(n, n);
        for (new_c, &old_c) in order.iter().enumerate() {
            for r in 0..n {
                vecs[(r, new_c)] = v[(r, old_c)];
            }
        }
        Ok((values, vecs))
    }

    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        self.eigh().map(|(w, _)| w)
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .eigenvalues_hermitian()?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    /// Ok when every eigenvalue is at least `-slack`; otherwise reports the
    /// most negative eigenvalue.
    pub fn psd_check(&self, slack: f64) -> std::result::Result<(), f64> {
        match self.min_eigenvalue() {
            Ok(m) if m >= -slack => Ok(()),
            Ok(m) => Err(m),
            Err(_) => Err(f64::NAN),
        }
    }

    /// Trace norm Tr sqrt(A^dagger A): the sum of singular values.
    pub fn trace_norm(&self) -> Result<f64> {
        self.require_square()?;
        let scale = self.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        if self.is_hermitian(1e-14 * scale) {
            let w = self.hermitian_part().eigenvalues_hermitian()?;
            return Ok(w.iter().map(|x| x.abs()).sum());
        }
        let gram = self.dagger().matmul(self)?;
        let w = gram.eigenvalues_hermitian()?;
        Ok(w.iter().map(|x| x.max(0.0).sqrt()).sum())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
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
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
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
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

/// Kronecker product of two matrices.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}
