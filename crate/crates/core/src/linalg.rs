//! Small dense complex matrix algebra.
//!
//! Everything in this crate lives in Hilbert spaces of dimension well below
//! a hundred, so the matrix type is a plain row-major `Vec<Complex64>` with
//! O(n³) products. Hermitian spectral work goes through the real symmetric
//! embedding `H = A + iB  ->  [[A, -B], [B, A]]`, which is a *-homomorphism:
//! any spectral function applied to the embedding is the embedding of the
//! same function applied to `H`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical comparison bounds shared by every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Maximum entrywise deviation `|m - m†|` accepted as Hermitian.
    pub eps_herm: f64,
    /// Eigenvalue floor: eigenvalues `>= -eps_psd` count as non-negative.
    pub eps_psd: f64,
    /// Slack for probability and trace comparisons.
    pub eps_prob: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eps_herm: 1e-10,
            eps_psd: 1e-10,
            eps_prob: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn new(eps_herm: f64, eps_psd: f64, eps_prob: f64) -> Result<Self> {
        for (name, v) in [("eps_herm", eps_herm), ("eps_psd", eps_psd), ("eps_prob", eps_prob)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self {
            eps_herm,
            eps_psd,
            eps_prob,
        })
    }
}

/// Dense complex matrix, row-major.
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
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
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

    pub fn diag(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// Column vector from amplitudes.
    pub fn column(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|u><v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj.conj();
            }
        }
        m
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what} needs a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Result<Complex64> {
        self.require_square("trace")?;
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} to a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "subtract", |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.data.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `m - m†`.
    pub fn hermiticity_deviation(&self) -> Result<f64> {
        self.require_square("hermiticity check")?;
        self.max_abs_diff(&self.adjoint())
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        self.require_square("hermitian part")?;
        Ok(self.add(&self.adjoint())?.scale_real(0.5))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.hermitian_part()?;
        let (vals, _) = symmetric_eigen(&real_embedding(&h));
        // every eigenvalue of the embedding appears twice
        let mut sorted = vals;
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(sorted.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
    }

    /// Applies a real function to the spectrum of the Hermitian part.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = self.hermitian_part()?;
        let n = h.rows;
        let (vals, vecs) = symmetric_eigen(&real_embedding(&h));
        let m = 2 * n;
        let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let block = |i: usize, j: usize| (0..m).map(|k| vecs[i * m + k] * fv[k] * vecs[j * m + k]).sum::<f64>();
                // paired eigenvalues can split by rounding (e.g. ±1e-17 under
                // sqrt); keeping only the complex-linear part averages them
                let re = 0.5 * (block(r, c) + block(r + n, c + n));
                let im = 0.5 * (block(r + n, c) - block(r, c + n));
                out[(r, c)] = Complex64::new(re, im);
            }
        }
        Ok(out)
    }

    /// True iff Hermitian within `eps_herm` and every eigenvalue `>= -eps_psd`.
    pub fn is_psd(&self, tol: &Tolerance) -> Result<bool> {
        self.require_square("PSD check")?;
        if self.hermiticity_deviation()? > tol.eps_herm {
            return Ok(false);
        }
        Ok(self.hermitian_eigenvalues()?[0] >= -tol.eps_psd)
    }

    /// Principal square root of a PSD matrix.
    pub fn sqrt_psd(&self, tol: &Tolerance) -> Result<Self> {
        if !self.is_psd(tol)? {
            return Err(Error::Domain("square root requested for a non-PSD matrix".into()));
        }
        self.hermitian_function(|x| x.max(0.0).sqrt())
    }

    /// `max |m - U|` where `U` is unitary under `m† m = I`.
    pub fn unitarity_deviation(&self) -> Result<f64> {
        self.require_square("unitarity check")?;
        self.adjoint().matmul(self)?.max_abs_diff(&Self::identity(self.rows))
    }
}

/// `[[A, -B], [B, A]]` for `H = A + iB`, row-major `2n x 2n`.
fn real_embedding(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.rows;
    let m = 2 * n;
    let mut s = vec![0.0; m * m];
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            s[r * m + c] = z.re;
            s[(r + n) * m + (c + n)] = z.re;
            s[r * m + (c + n)] = -z.im;
            s[(r + n) * m + c] = z.im;
        }
    }
    s
}

/// Cyclic Jacobi diagonalization of a real symmetric row-major matrix.
/// Returns eigenvalues and the orthogonal eigenvector matrix (columns).
fn symmetric_eigen(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = (a.len() as f64).sqrt().round() as usize;
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// `<u|v>` (conjugate-linear in the first argument).
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    /// Accepts amplitudes whose norm is 1 within `tol.eps_prob`.
    pub fn new(amplitudes: Vec<Complex64>, tol: &Tolerance) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dimension("ket of dimension 0".into()));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("ket amplitudes must be finite".into()));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > tol.eps_prob {
            return Err(Error::Invariant(format!("ket norm is {n}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / n).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut a = vec![ZERO; dim];
        a[index] = ONE;
        Self { amplitudes: a }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Ket) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|self><self|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

/// Removes the `against` component from `v` and renormalizes.
pub fn gram_schmidt_orthogonalize(v: &Ket, against: &Ket, tol: &Tolerance) -> Result<Ket> {
    if v.dim() != against.dim() {
        return Err(Error::Dimension(format!(
            "Gram-Schmidt on kets of dimension {} and {}",
            v.dim(),
            against.dim()
        )));
    }
    let overlap = against.inner(v);
    let denom_sq = 1.0 - overlap.norm_sqr();
    if denom_sq <= tol.eps_psd {
        return Err(Error::Degenerate(
            "vector is parallel to the reference; nothing left after projection".into(),
        ));
    }
    let denom = denom_sq.sqrt();
    let amps = v
        .amplitudes
        .iter()
        .zip(&against.amplitudes)
        .map(|(&vi, &ai)| (vi - overlap * ai) / denom)
        .collect();
    Ok(Ket { amplitudes: amps })
}

/// Extends orthonormal columns to a full orthonormal basis (a unitary).
///
/// `columns` holds `(position, vector)` pairs; every other column of the
/// returned `n x n` matrix is filled by Gram-Schmidt over the standard basis.
pub fn complete_unitary(n: usize, columns: &[(usize, Vec<Complex64>)], tol: &Tolerance) -> Result<ComplexMatrix> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (pos, v) in columns {
        if *pos >= n || v.len() != n {
            return Err(Error::Dimension("isometry column out of range".into()));
        }
        if (norm(v) - 1.0).abs() > 1e3 * tol.eps_prob {
            return Err(Error::Invariant(format!(
                "interaction is not an isometry: column {pos} has norm {}",
                norm(v)
            )));
        }
        for b in &basis {
            if inner(b, v).norm() > 1e3 * tol.eps_prob {
                return Err(Error::Invariant(
                    "interaction is not an isometry: columns are not orthogonal".into(),
                ));
            }
        }
        basis.push(v.clone());
    }
    let mut extra: Vec<Vec<Complex64>> = Vec::new();
    for e in 0..n {
        if basis.len() + extra.len() == n {
            break;
        }
        let mut w = vec![ZERO; n];
        w[e] = ONE;
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for b in basis.iter().chain(extra.iter()) {
                let c = inner(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-6 {
            extra.push(w.into_iter().map(|z| z / nw).collect());
        }
    }
    let mut slots: Vec<Option<&Vec<Complex64>>> = vec![None; n];
    for (pos, v) in columns {
        slots[*pos] = Some(v);
    }
    let mut extra_iter = extra.iter();
    let mut u = ComplexMatrix::zeros(n, n);
    for (c, slot) in slots.into_iter().enumerate() {
        let col = slot.unwrap_or_else(|| extra_iter.next().expect("completion has enough vectors"));
        for r in 0..n {
            u[(r, c)] = col[r];
        }
    }
    Ok(u)
}

/// Partial trace over the second tensor factor of a `(d_a d_b)`-square matrix.
pub fn partial_trace_second(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    if m.shape() != (d_a * d_b, d_a * d_b) {
        return Err(Error::Dimension(format!(
            "partial trace: {}x{} is not ({d_a}*{d_b})-square",
            m.rows, m.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(d_a, d_a);
    for i in 0..d_a {
        for j in 0..d_a {
            out[(i, j)] = (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum();
        }
    }
    Ok(out)
}
