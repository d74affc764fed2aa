//! Closed-form solutions and brute-force checks used as ground truth.
//!
//! The 1D solutions carry zero inflow data: a characteristic that traces
//! back outside `[a, d]` contributes nothing.

use crate::linalg::{eig_sym, normal_matrix, EigenDecomp, LinalgError, SymMatrix};

/// Scalar shape `g(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `exp(−(ξ−x0)²/σ²)`
    Gaussian { x0: f64, sigma: f64 },
    /// `sin(kξ + phase)`
    Sine { k: f64, phase: f64 },
}

impl Shape {
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            Shape::Gaussian { x0, sigma } => (-((xi - x0) / sigma).powi(2)).exp(),
            Shape::Sine { k, phase } => (k * xi + phase).sin(),
        }
    }
}

/// Initial data `ω₀(ξ) = Σⱼ cⱼ pⱼ g(ξ)` built on the eigenvectors `pⱼ` of
/// a system matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProfile {
    pub shape: Shape,
    pub mode_weights: Vec<f64>,
}

impl ExactProfile {
    pub fn new(shape: Shape, mode_weights: Vec<f64>) -> Self {
        Self { shape, mode_weights }
    }

    pub fn eval(&self, modes: &EigenDecomp, xi: f64) -> Vec<f64> {
        let g = self.shape.eval(xi);
        let w: Vec<f64> = self.mode_weights.iter().map(|c| c * g).collect();
        modes.from_characteristic(&w)
    }
}

/// Solution of `ω_t + αω_x = 0` on `[a, d]` with zero inflow.
pub fn exact_scalar(x: f64, t: f64, alpha: f64, domain: (f64, f64), w0: &dyn Fn(f64) -> f64) -> f64 {
    let xi = x - alpha * t;
    if xi < domain.0 || xi > domain.1 {
        0.0
    } else {
        w0(xi)
    }
}

/// Solution of `ω_t + Aω_x = 0` on `[a, d]` with zero inflow: each
/// characteristic variable `pⱼᵀω` translates at `λⱼ`.
pub fn exact_system_1d(
    x: f64,
    t: f64,
    modes: &EigenDecomp,
    domain: (f64, f64),
    w0: &dyn Fn(f64) -> Vec<f64>,
) -> Vec<f64> {
    let n = modes.dim();
    let mut w = vec![0.0; n];
    for (j, wj) in w.iter_mut().enumerate() {
        let xi = x - modes.values()[j] * t;
        if xi >= domain.0 && xi <= domain.1 {
            let q = w0(xi);
            *wj = modes.vector(j).iter().zip(&q).map(|(p, v)| p * v).sum();
        }
    }
    modes.from_characteristic(&w)
}

/// Solution of `ω_t + A₁ω_x + A₂ω_y = 0` for data varying only along the
/// unit direction `k`, `ω₀(k·x)`. The modes of `k₁A₁ + k₂A₂` translate
/// along `k` at their eigenvalues. No boundaries are involved.
pub fn exact_plane_wave_2d(
    x: f64,
    y: f64,
    t: f64,
    a1: &SymMatrix,
    a2: &SymMatrix,
    k: [f64; 2],
    w0: &dyn Fn(f64) -> Vec<f64>,
) -> Result<Vec<f64>, LinalgError> {
    let modes = eig_sym(&normal_matrix(a1, a2, k)?)?;
    Ok(plane_wave_with(&modes, x, y, t, k, w0))
}

/// [`exact_plane_wave_2d`] with the modes of `k₁A₁ + k₂A₂` precomputed.
pub fn plane_wave_with(
    modes: &EigenDecomp,
    x: f64,
    y: f64,
    t: f64,
    k: [f64; 2],
    w0: &dyn Fn(f64) -> Vec<f64>,
) -> Vec<f64> {
    let s = k[0] * x + k[1] * y;
    let w: Vec<f64> = (0..modes.dim())
        .map(|j| {
            let q = w0(s - modes.values()[j] * t);
            modes.vector(j).iter().zip(&q).map(|(p, v)| p * v).sum()
        })
        .collect();
    modes.from_characteristic(&w)
}

/// Smallest Rayleigh quotient `zᵀMz / zᵀz` over the given directions.
pub fn min_rayleigh(m: &SymMatrix, dirs: impl IntoIterator<Item = Vec<f64>>) -> f64 {
    dirs.into_iter()
        .filter_map(|z| {
            let nn: f64 = z.iter().map(|v| v * v).sum();
            (nn > 0.0).then(|| m.quad_form(&z) / nn)
        })
        .fold(f64::INFINITY, f64::min)
}
