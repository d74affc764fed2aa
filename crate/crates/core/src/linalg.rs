//! Small dense symmetric-matrix algebra.
//!
//! Everything here works on the tiny coefficient matrices of a hyperbolic
//! system (and the doubled `[u; v]` penalty forms built from them), so the
//! eigen-solver is a plain cyclic Jacobi iteration: deterministic, exactly
//! orthogonal to rounding, and free of external dependencies.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Relative tolerance used when validating symmetry of user input.
pub const SYMMETRY_TOL: f64 = 1e-14;

/// Eigenvalues with `|λ| <= ZERO_EIG_REL * max|λ|` are split into neither sign part.
pub const ZERO_EIG_REL: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("matrix data has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("normal vector is not unit length (|n| = {norm})")]
    NonUnitNormal { norm: f64 },
    #[error("non-finite matrix entry at ({i},{j})")]
    NonFinite { i: usize, j: usize },
}

/// A real symmetric `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Validates symmetry to [`SYMMETRY_TOL`] (relative to the largest entry)
    /// and stores the exactly symmetrised matrix.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != n * n {
            return Err(LinalgError::Shape {
                expected: n * n,
                got: data.len(),
            });
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFinite { i: k / n, j: k % n });
            }
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut data = data;
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (data[i * n + j], data[j * n + i]);
                let diff = (x - y).abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(LinalgError::NotSymmetric { i, j, diff });
                }
                let m = 0.5 * (x + y);
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::Shape {
                    expected: n * n,
                    got: n * row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    /// Builds a matrix from the upper triangle of `f`, mirroring it so the
    /// result is bitwise symmetric.
    pub(crate) fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_upper(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Rank-one matrix `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_upper(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_acc(1.0, x, &mut y);
        y
    }

    /// `y += alpha * self * x`
    #[inline]
    pub fn mul_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (row, yi) in self.data.chunks_exact(self.n).zip(y.iter_mut()) {
            let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            *yi += alpha * s;
        }
    }

    /// `xᵀ M y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.data
            .chunks_exact(self.n)
            .zip(x)
            .map(|(row, xi)| xi * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Frobenius norm of the commutator `AB - BA`.
    pub fn commutator_norm(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut c = 0.0;
                for k in 0..n {
                    c += self.get(i, k) * other.get(k, j) - other.get(i, k) * self.get(k, j);
                }
                s += c * c;
            }
        }
        s.sqrt()
    }

    /// Symmetric block matrix `[[a, b], [b, c]]` of twice the dimension.
    pub fn block2(a: &SymMatrix, b: &SymMatrix, c: &SymMatrix) -> Self {
        let n = a.n;
        assert!(b.n == n && c.n == n, "dimension mismatch");
        Self::from_upper(2 * n, |i, j| match (i < n, j < n) {
            (true, true) => a.get(i, j),
            (true, false) => b.get(i, j - n),
            (false, true) => b.get(i - n, j),
            (false, false) => c.get(i - n, j - n),
        })
    }

    pub fn check_same_dim(&self, other: &SymMatrix) -> Result<(), LinalgError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: &SymMatrix) -> SymMatrix {
        rhs.scaled(self)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scaled(-1.0)
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        &self + &rhs
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        &self - &rhs
    }
}

/// Sign class of an eigenvalue after zero-thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigSign {
    Positive,
    Zero,
    Negative,
}

/// `A = P diag(Λ) Pᵀ` with Λ sorted descending and P orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    n: usize,
    values: Vec<f64>,
    /// Column-major: eigenvector `k` is `vectors[k*n..(k+1)*n]`.
    vectors: Vec<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// Entry `P[i][k]`.
    pub fn p(&self, i: usize, k: usize) -> f64 {
        self.vectors[k * self.n + i]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn zero_threshold(&self) -> f64 {
        ZERO_EIG_REL * self.spectral_radius()
    }

    pub fn sign(&self, k: usize) -> EigSign {
        let thr = self.zero_threshold();
        let l = self.values[k];
        if l > thr {
            EigSign::Positive
        } else if l < -thr {
            EigSign::Negative
        } else {
            EigSign::Zero
        }
    }

    pub fn count(&self, s: EigSign) -> usize {
        (0..self.n).filter(|&k| self.sign(k) == s).count()
    }

    /// `Σ f(λ_k) p_k p_kᵀ`
    pub fn spectral_map(&self, mut f: impl FnMut(usize, f64) -> f64) -> SymMatrix {
        let n = self.n;
        let weights: Vec<f64> = (0..n).map(|k| f(k, self.values[k])).collect();
        SymMatrix::from_upper(n, |i, j| {
            (0..n)
                .filter(|&k| weights[k] != 0.0)
                .map(|k| weights[k] * (self.p(i, k) * self.p(j, k)))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.spectral_map(|_, l| l)
    }

    /// `max |PᵀP - I|`
    pub fn orthogonality_error(&self) -> f64 {
        let mut e = 0.0_f64;
        for k in 0..self.n {
            for l in 0..self.n {
                let d: f64 = self
                    .vector(k)
                    .iter()
                    .zip(self.vector(l))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if k == l { 1.0 } else { 0.0 };
                e = e.max((d - target).abs());
            }
        }
        e
    }

    /// `w = Pᵀ q`
    pub fn to_characteristic(&self, q: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.vector(k).iter().zip(q).map(|(p, x)| p * x).sum())
            .collect()
    }

    /// `q = P w`
    pub fn from_characteristic(&self, w: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n];
        for (k, wk) in w.iter().enumerate() {
            for (qi, p) in q.iter_mut().zip(self.vector(k)) {
                *qi += p * wk;
            }
        }
        q
    }
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Output is deterministic: eigenvalues sorted descending, each eigenvector
/// normalised so that its first component of magnitude above `1e-10` is
/// positive.
pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomp, LinalgError> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let idx = |i: usize, j: usize| i * n + j;

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[idx(i, j)].abs())
            .sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let g = 100.0 * apq.abs();
                let (app, aqq) = (m[idx(p, p)], m[idx(q, q)]);
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[idx(p, q)] = 0.0;
                    m[idx(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[idx(k, p)], m[idx(k, q)]);
                    m[idx(k, p)] = c * mkp - s * mkq;
                    m[idx(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[idx(p, k)], m[idx(q, k)]);
                    m[idx(p, k)] = c * mpk - s * mqk;
                    m[idx(q, k)] = s * mpk + c * mqk;
                }
                m[idx(p, q)] = 0.0;
                m[idx(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[idx(k, p)], v[idx(k, q)]);
                    v[idx(k, p)] = c * vkp - s * vkq;
                    v[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[idx(i, j)].abs())
            .sum();
        return Err(LinalgError::NoConvergence {
            sweeps: MAX_SWEEPS,
            off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[idx(y, y)].total_cmp(&m[idx(x, x)]).then(x.cmp(&y)));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        values.push(m[idx(k, k)]);
        let mut col: Vec<f64> = (0..n).map(|i| v[idx(i, k)]).collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.iter_mut().for_each(|x| *x /= norm);
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-10) {
            if *first < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.extend(col);
    }
    Ok(EigenDecomp { n, values, vectors })
}

/// `A = A⁺ + A⁻`, `|A| = A⁺ - A⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSplit {
    pub plus: SymMatrix,
    pub minus: SymMatrix,
    pub abs: SymMatrix,
}

impl FluxSplit {
    pub fn from_decomp(e: &EigenDecomp) -> Self {
        let plus = e.spectral_map(|k, l| if e.sign(k) == EigSign::Positive { l } else { 0.0 });
        let minus = e.spectral_map(|k, l| if e.sign(k) == EigSign::Negative { l } else { 0.0 });
        let abs = &plus - &minus;
        Self { plus, minus, abs }
    }

    /// `|A⁻| = -A⁻`
    pub fn minus_abs(&self) -> SymMatrix {
        -&self.minus
    }
}

pub fn flux_split(a: &SymMatrix) -> Result<FluxSplit, LinalgError> {
    Ok(FluxSplit::from_decomp(&eig_sym(a)?))
}

/// True iff the smallest eigenvalue is `>= -tol * max(1, ‖M‖₂)`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> Result<bool, LinalgError> {
    let e = eig_sym(m)?;
    Ok(e.min_value() >= -tol * e.spectral_radius().max(1.0))
}

/// `n₁A₁ + n₂A₂` for a unit normal `n`.
pub fn normal_matrix(
    a1: &SymMatrix,
    a2: &SymMatrix,
    nhat: [f64; 2],
) -> Result<SymMatrix, LinalgError> {
    a1.check_same_dim(a2)?;
    let norm = nhat[0].hypot(nhat[1]);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(LinalgError::NonUnitNormal { norm });
    }
    Ok(SymMatrix::from_upper(a1.n, |i, j| {
        nhat[0] * a1.get(i, j) + nhat[1] * a2.get(i, j)
    }))
}

/// Characteristic coordinates `w = Pᵀq`, ordered like the eigenvalues
/// (positive speeds first, negative speeds last).
#[derive(Debug, Clone, PartialEq)]
pub struct CharVector {
    pub w: Vec<f64>,
    n_plus: usize,
    n_minus: usize,
}

impl CharVector {
    pub fn plus(&self) -> &[f64] {
        &self.w[..self.n_plus]
    }

    pub fn minus(&self) -> &[f64] {
        &self.w[self.w.len() - self.n_minus..]
    }

    pub fn zero_speed(&self) -> &[f64] {
        &self.w[self.n_plus..self.w.len() - self.n_minus]
    }
}

pub fn char_transform(q: &[f64], decomp: &EigenDecomp) -> Result<CharVector, LinalgError> {
    if q.len() != decomp.n {
        return Err(LinalgError::DimensionMismatch {
            left: q.len(),
            right: decomp.n,
        });
    }
    Ok(CharVector {
        w: decomp.to_characteristic(q),
        n_plus: decomp.count(EigSign::Positive),
        n_minus: decomp.count(EigSign::Negative),
    })
}

/// A constant symmetric coefficient matrix with its cached eigen-decomposition
/// and flux splitting.
#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    a: SymMatrix,
    eig: EigenDecomp,
    split: FluxSplit,
}

impl HyperbolicSystem {
    pub fn new(a: SymMatrix) -> Result<Self, LinalgError> {
        let eig = eig_sym(&a)?;
        let split = FluxSplit::from_decomp(&eig);
        Ok(Self { a, eig, split })
    }

    pub fn scalar(alpha: f64) -> Result<Self, LinalgError> {
        Self::new(SymMatrix::new(1, vec![alpha])?)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.a
    }

    pub fn eigen(&self) -> &EigenDecomp {
        &self.eig
    }

    pub fn split(&self) -> &FluxSplit {
        &self.split
    }

    pub fn plus(&self) -> &SymMatrix {
        &self.split.plus
    }

    pub fn minus(&self) -> &SymMatrix {
        &self.split.minus
    }

    pub fn abs(&self) -> &SymMatrix {
        &self.split.abs
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eig.spectral_radius()
    }

    pub fn has_zero_eigenvalue(&self) -> bool {
        self.eig.count(EigSign::Zero) > 0
    }
}
