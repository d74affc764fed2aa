//! Experiment configuration (JSON). See `docs/config.md` for the schema.

use std::path::Path;

use overset_core::linalg::SymMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(rename = "scalar1d-char")]
    Scalar1dChar,
    #[serde(rename = "system1d-char")]
    System1dChar,
    #[serde(rename = "system1d-penalty")]
    System1dPenalty,
    #[serde(rename = "system2d-boundary")]
    System2dBoundary,
    #[serde(rename = "system2d-overlap")]
    System2dOverlap,
    SingleDomainRef,
    CertifyCoupling,
    ConvergenceStudy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Scalar1dChar => "scalar1d-char",
            Mode::System1dChar => "system1d-char",
            Mode::System1dPenalty => "system1d-penalty",
            Mode::System2dBoundary => "system2d-boundary",
            Mode::System2dOverlap => "system2d-overlap",
            Mode::SingleDomainRef => "single-domain-ref",
            Mode::CertifyCoupling => "certify-coupling",
            Mode::ConvergenceStudy => "convergence-study",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, Mode::System2dBoundary | Mode::System2dOverlap)
    }
}

/// Row-major nested array.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Scalar speed; alternative to `a`.
    pub alpha: Option<f64>,
    /// `A` in 1D, `A₁` in 2D.
    pub a: Option<Matrix>,
    /// `A₂`; its presence makes `single-domain-ref` two-dimensional.
    pub a2: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Left end of the `u` grid in 2D (defaults to `a`).
    pub a_prime: Option<f64>,
    #[serde(default = "one")]
    pub ly: f64,
    pub hu: f64,
    pub hv: f64,
    pub hy: Option<f64>,
    #[serde(default = "two")]
    pub order: usize,
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaPair {
    pub sigma_u: Matrix,
    pub sigma_v: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingConfig {
    /// `"upwind"`
    Named(String),
    Matrices { b: SigmaPair, c: SigmaPair },
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig::Named("upwind".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapConfig {
    #[serde(default = "three")]
    pub nx: usize,
    #[serde(default = "three")]
    pub ny: usize,
    /// Explicit `(x, y)` points; overrides `nx`, `ny`.
    pub points: Option<Vec<[f64; 2]>>,
    /// `Σuᵐ = σI`, `Σvᵐ = σ(1−η)/η I`.
    #[serde(default = "one")]
    pub sigma: f64,
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    /// `Σⱼ cⱼ pⱼ exp(−(x−x0)²/σ²)`, optionally modulated in `y` by
    /// `1 + y_modulation sin(2πy/Ly)`.
    Gaussian {
        x0: f64,
        sigma: f64,
        mode_weights: Option<Vec<f64>>,
        #[serde(default)]
        y_modulation: f64,
    },
    /// `Σⱼ cⱼ pⱼ sin(2π k·x / wavelength) exp(−(x−x0)²/σ²)` with `pⱼ` the
    /// eigenvectors of `k₁A₁ + k₂A₂`.
    Planewave {
        k: [f64; 2],
        wavelength: f64,
        x0: f64,
        sigma: f64,
        mode_weights: Option<Vec<f64>>,
    },
    /// Sum of `terms` Gaussians with random centres, widths and vectors
    /// drawn from the run seed.
    Random {
        #[serde(default = "three")]
        terms: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub a_n: Matrix,
    pub beta: f64,
    /// Both omitted: the upwind choice for `(A_n, β)`.
    pub sigma_u: Option<Matrix>,
    pub sigma_v: Option<Matrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudySolver {
    /// The exact oracle evaluated on the grids (errors at the rounding floor).
    Exact,
    #[serde(rename = "scalar1d-char")]
    Scalar1dChar,
    #[serde(rename = "system1d-char")]
    System1dChar,
    #[serde(rename = "system1d-penalty")]
    System1dPenalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub solver: StudySolver,
    /// `hu` of each level; `hv/hu` is kept from the geometry.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Largest allowed `dE/dt / E(0)` at any stage.
    pub energy_rate: Option<f64>,
    /// Relative slack of the characteristic-mode bound `‖u‖² ≤ ‖ω₀‖²`.
    pub energy_bound: Option<f64>,
    /// Largest allowed conservation residual / `max(flux scale, E(0))`.
    pub conservation: Option<f64>,
    /// Smallest allowed observed order.
    pub min_order: Option<f64>,
    /// Errors below this count as the rounding floor.
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativeDemo {
    /// Both penalties at `x = b` are shifted by `−κI`.
    #[serde(default = "half")]
    pub kappa: f64,
    #[serde(default = "bump_width")]
    pub width: f64,
}

fn half() -> f64 {
    0.5
}

fn bump_width() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub system: Option<SystemConfig>,
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    /// Strong (injection) instead of weak characteristic coupling.
    #[serde(default)]
    pub strong: bool,
    #[serde(default = "half")]
    pub eta: f64,
    pub overlap: Option<OverlapConfig>,
    pub initial: Option<InitialConfig>,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub certify: Option<CertifyConfig>,
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub negative_demo: Option<NegativeDemo>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_cfl() -> f64 {
    0.5
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub fn matrix(path: &str, m: &Matrix) -> Result<SymMatrix, CliError> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(invalid(path, "must be a non-empty square matrix"));
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(path, "entries must be finite"));
    }
    SymMatrix::from_rows(m).map_err(|e| invalid(path, e.to_string()))
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path == "." { "(root)" } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field
            .as_ref()
            .ok_or_else(|| invalid(name, format!("required for mode {}", self.mode.name())))
    }

    pub fn geometry(&self) -> Result<&GeometryConfig, CliError> {
        self.require(&self.geometry, "geometry")
    }

    pub fn system(&self) -> Result<&SystemConfig, CliError> {
        self.require(&self.system, "system")
    }

    pub fn initial(&self) -> Result<&InitialConfig, CliError> {
        self.require(&self.initial, "initial")
    }

    /// System matrix `A` (or `A₁`), from `alpha` or `a`.
    pub fn system_matrix(&self) -> Result<SymMatrix, CliError> {
        let s = self.system()?;
        match (&s.alpha, &s.a) {
            (Some(alpha), None) => {
                if !alpha.is_finite() {
                    return Err(invalid("system.alpha", "must be finite"));
                }
                Ok(SymMatrix::from_diagonal(&[*alpha]))
            }
            (None, Some(a)) => matrix("system.a", a),
            _ => Err(invalid("system", "give exactly one of alpha and a")),
        }
    }

    pub fn a2_matrix(&self) -> Result<Option<SymMatrix>, CliError> {
        let s = self.system()?;
        s.a2.as_ref().map(|m| matrix("system.a2", m)).transpose()
    }

    pub fn uses_eta(&self) -> bool {
        matches!(
            self.mode,
            Mode::System1dPenalty | Mode::System2dBoundary | Mode::System2dOverlap
        ) || self
            .study
            .as_ref()
            .is_some_and(|s| s.solver == StudySolver::System1dPenalty)
    }

    /// Checks everything that does not need a solver: ranges, shapes,
    /// symmetry and the fields each mode needs.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta", format!("must lie strictly between 0 and 1, got {}", self.eta)));
        }
        positive("cfl", self.cfl)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", "must be finite and non-negative"));
        }
        if let Some(n) = &self.negative_demo {
            positive("negative_demo.kappa", n.kappa)?;
            positive("negative_demo.width", n.width)?;
            if self.mode != Mode::System1dPenalty {
                return Err(invalid("negative_demo", "only available in system1d-penalty mode"));
            }
        }
        if self.mode == Mode::CertifyCoupling {
            let c = self.require(&self.certify, "certify")?;
            let a = matrix("certify.a_n", &c.a_n)?;
            if !c.beta.is_finite() {
                return Err(invalid("certify.beta", "must be finite"));
            }
            match (&c.sigma_u, &c.sigma_v) {
                (None, None) => {}
                (Some(u), Some(v)) => {
                    for (p, m) in [("certify.sigma_u", u), ("certify.sigma_v", v)] {
                        if matrix(p, m)?.dim() != a.dim() {
                            return Err(invalid(p, "dimension differs from a_n"));
                        }
                    }
                }
                _ => return Err(invalid("certify", "give both sigma_u and sigma_v or neither")),
            }
            return Ok(());
        }

        let a = self.system_matrix()?;
        let n = a.dim();
        if self.mode == Mode::Scalar1dChar {
            if n != 1 {
                return Err(invalid("system", "scalar mode needs alpha or a 1x1 matrix"));
            }
            if !(a.get(0, 0) > 0.0) {
                return Err(invalid("system.alpha", "must be positive"));
            }
        }
        let a2 = self.a2_matrix()?;
        if let Some(a2) = &a2 {
            if a2.dim() != n {
                return Err(invalid("system.a2", "dimension differs from system.a"));
            }
        } else if self.mode.is_2d() {
            return Err(invalid("system.a2", "required for two-dimensional modes"));
        }

        let g = self.geometry()?;
        for (p, h) in [("geometry.hu", g.hu), ("geometry.hv", g.hv)] {
            positive(p, h)?;
        }
        if g.order != 2 && g.order != 4 {
            return Err(invalid("geometry.order", format!("must be 2 or 4, got {}", g.order)));
        }
        if !(g.a < g.b && g.b < g.c && g.c < g.d) {
            return Err(invalid("geometry", "need a < b < c < d"));
        }
        let two_d = self.mode.is_2d() || (self.mode == Mode::SingleDomainRef && a2.is_some());
        if two_d {
            positive("geometry.ly", g.ly)?;
            positive("geometry.hy", *self.require(&g.hy, "geometry.hy")?)?;
            if let Some(ap) = g.a_prime {
                if !(g.a <= ap && ap < g.b) {
                    return Err(invalid("geometry.a_prime", "need a <= a_prime < b"));
                }
            }
        }

        if let CouplingConfig::Named(s) = &self.coupling {
            if s != "upwind" {
                return Err(invalid("coupling", format!("unknown coupling {s:?}; use \"upwind\" or matrices")));
            }
        } else if let CouplingConfig::Matrices { b, c } = &self.coupling {
            for (p, m) in [
                ("coupling.b.sigma_u", &b.sigma_u),
                ("coupling.b.sigma_v", &b.sigma_v),
                ("coupling.c.sigma_u", &c.sigma_u),
                ("coupling.c.sigma_v", &c.sigma_v),
            ] {
                if matrix(p, m)?.dim() != n {
                    return Err(invalid(p, "dimension differs from system.a"));
                }
            }
        }

        if self.mode == Mode::System2dOverlap {
            let o = self.require(&self.overlap, "overlap")?;
            if o.points.is_none() && o.nx * o.ny == 0 {
                return Err(invalid("overlap", "needs at least one point"));
            }
            if !(o.sigma >= 0.0 && o.sigma.is_finite()) {
                return Err(invalid("overlap.sigma", "must be finite and non-negative"));
            }
        }

        if self.mode != Mode::ConvergenceStudy || self.initial.is_some() {
            match self.initial()? {
                InitialConfig::Gaussian { sigma, mode_weights, .. } => {
                    positive("initial.sigma", *sigma)?;
                    check_weights(mode_weights, n)?;
                }
                InitialConfig::Planewave {
                    k,
                    wavelength,
                    sigma,
                    mode_weights,
                    ..
                } => {
                    positive("initial.sigma", *sigma)?;
                    positive("initial.wavelength", *wavelength)?;
                    check_weights(mode_weights, n)?;
                    if ((k[0] * k[0] + k[1] * k[1]).sqrt() - 1.0).abs() > 1e-12 {
                        return Err(invalid("initial.k", "must be a unit vector"));
                    }
                    if two_d {
                        let cycles = k[1] * g.ly / wavelength;
                        if (cycles - cycles.round()).abs() > 1e-9 {
                            return Err(invalid("initial.k", "k_y * ly / wavelength must be an integer (periodic in y)"));
                        }
                    }
                }
                InitialConfig::Random { terms } => {
                    if *terms == 0 {
                        return Err(invalid("initial.terms", "must be at least 1"));
                    }
                }
            }
        }

        if self.mode == Mode::ConvergenceStudy {
            let s = self.require(&self.study, "study")?;
            if s.levels.len() < 3 {
                return Err(invalid(
                    "study.levels",
                    format!("a convergence study needs at least 3 levels, got {}", s.levels.len()),
                ));
            }
            for (i, h) in s.levels.iter().enumerate() {
                positive(&format!("study.levels[{i}]"), *h)?;
            }
            self.initial()?;
        }
        Ok(())
    }
}

fn check_weights(w: &Option<Vec<f64>>, n: usize) -> Result<(), CliError> {
    match w {
        Some(w) if w.len() != n => Err(invalid(
            "initial.mode_weights",
            format!("needs {n} entries, got {}", w.len()),
        )),
        _ => Ok(()),
    }
}
