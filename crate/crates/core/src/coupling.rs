//! Penalty coupling matrices and their certification.
//!
//! An interface coupling `(A_n, β, Σu, Σv)` is certified when
//! `βA_n + Σu = Σv` and `2Σv − βA_n ⪰ 0`; the interface form
//! `𝒫 = βuᵀA_nu − βvᵀA_nv + 2uᵀΣu(u−v) + 2vᵀΣv(v−u)` then reduces to
//! `(u−v)ᵀ(Σu+Σv)(u−v) ≥ 0`. Overlap couplings need `(1−η)Σuᵐ = ηΣvᵐ`
//! and `Σuᵐ ⪰ 0`.

use thiserror::Error;

use crate::linalg::{eig_sym, flux_split, LinalgError, SymMatrix};

/// Default tolerance for certification.
pub const CERT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("eta must lie strictly between 0 and 1, got {0}")]
    Eta(f64),
}

/// Why a coupling failed certification.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// The conservation equality is violated by `residual` (max-abs entry).
    Equality { residual: f64, limit: f64 },
    /// `matrix` has a negative eigenvalue; `witness` is the unit eigenvector.
    Indefinite {
        matrix: &'static str,
        min_eig: f64,
        witness: Vec<f64>,
    },
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Equality { residual, limit } => write!(
                f,
                "equality beta*A_n + SigmaU = SigmaV violated by {residual:e} (limit {limit:e})"
            ),
            Failure::Indefinite {
                matrix, min_eig, ..
            } => write!(f, "{matrix} is not positive semidefinite (min eigenvalue {min_eig:e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub failures: Vec<Failure>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn witness(&self) -> Option<&[f64]> {
        self.failures.iter().find_map(|f| match f {
            Failure::Indefinite { witness, .. } => Some(witness.as_slice()),
            _ => None,
        })
    }

    pub fn reason(&self) -> String {
        if self.passed() {
            "pass".into()
        } else {
            self.failures
                .iter()
                .map(|f| f.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        }
    }
}

fn scale_of(ms: &[&SymMatrix]) -> f64 {
    ms.iter().fold(1.0_f64, |s, m| s.max(m.frobenius_norm()))
}

fn psd_failure(m: &SymMatrix, tol: f64, name: &'static str) -> Result<Option<Failure>, LinalgError> {
    let e = eig_sym(m)?;
    let min = e.min_value();
    if min >= -tol * e.spectral_radius().max(1.0) {
        Ok(None)
    } else {
        Ok(Some(Failure::Indefinite {
            matrix: name,
            min_eig: min,
            witness: e.vector(e.dim() - 1).to_vec(),
        }))
    }
}

pub fn check_interface_coupling(
    a_n: &SymMatrix,
    beta: f64,
    sigma_u: &SymMatrix,
    sigma_v: &SymMatrix,
    tol: f64,
) -> Result<Verdict, CouplingError> {
    a_n.check_same_dim(sigma_u)?;
    a_n.check_same_dim(sigma_v)?;
    let ba = a_n.scaled(beta);
    let mut failures = Vec::new();
    let residual = (&(&ba + sigma_u) - sigma_v).max_abs();
    let limit = tol * scale_of(&[&ba, sigma_u, sigma_v]);
    if residual > limit {
        failures.push(Failure::Equality { residual, limit });
    }
    let m = &sigma_v.scaled(2.0) - &ba;
    if let Some(f) = psd_failure(&m, tol, "2*SigmaV - beta*A_n")? {
        failures.push(f);
    }
    Ok(Verdict { failures })
}

/// Penalty coupling at one interface.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCoupling {
    pub a_n: SymMatrix,
    pub beta: f64,
    pub sigma_u: SymMatrix,
    pub sigma_v: SymMatrix,
    pub verdict: Verdict,
}

impl InterfaceCoupling {
    /// Builds the coupling and attaches its certification verdict.
    pub fn new(
        a_n: SymMatrix,
        beta: f64,
        sigma_u: SymMatrix,
        sigma_v: SymMatrix,
    ) -> Result<Self, CouplingError> {
        let verdict = check_interface_coupling(&a_n, beta, &sigma_u, &sigma_v, CERT_TOL)?;
        Ok(Self {
            a_n,
            beta,
            sigma_u,
            sigma_v,
            verdict,
        })
    }

    pub fn certified(&self) -> bool {
        self.verdict.passed()
    }

    pub fn dim(&self) -> usize {
        self.a_n.dim()
    }

    /// Same `(A_n, β, Σu)` with `Σv` replaced; verdict recomputed.
    pub fn with_sigma_v(&self, sigma_v: SymMatrix) -> Result<Self, CouplingError> {
        Self::new(self.a_n.clone(), self.beta, self.sigma_u.clone(), sigma_v)
    }

    pub fn with_sigma_u(&self, sigma_u: SymMatrix) -> Result<Self, CouplingError> {
        Self::new(self.a_n.clone(), self.beta, sigma_u, self.sigma_v.clone())
    }
}

/// Upwind coupling `Σu = |(βA_n)⁻|`, `Σv = (βA_n)⁺` for a given `β`.
pub fn upwind_coupling(a_n: &SymMatrix, beta: f64) -> Result<InterfaceCoupling, CouplingError> {
    let s = flux_split(&a_n.scaled(beta))?;
    InterfaceCoupling::new(a_n.clone(), beta, s.minus_abs(), s.plus)
}

/// The symmetric upwind example: `β = ½`, `Σu = ½|A⁻|`, `Σv = ½A⁺`.
pub fn make_upwind_coupling(a_n: &SymMatrix) -> Result<InterfaceCoupling, CouplingError> {
    upwind_coupling(a_n, 0.5)
}

/// `Σv := βA_n + Σu`, with the verdict of the remaining PSD condition.
pub fn complete_coupling(
    a_n: &SymMatrix,
    beta: f64,
    sigma_u: &SymMatrix,
) -> Result<InterfaceCoupling, CouplingError> {
    a_n.check_same_dim(sigma_u)?;
    let sigma_v = &a_n.scaled(beta) + sigma_u;
    InterfaceCoupling::new(a_n.clone(), beta, sigma_u.clone(), sigma_v)
}

/// `𝒫 = βuᵀA_nu − βvᵀA_nv + 2uᵀΣu(u−v) + 2vᵀΣv(v−u)`
pub fn interface_quadratic_form(u: &[f64], v: &[f64], c: &InterfaceCoupling) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    c.beta * (c.a_n.quad_form(u) - c.a_n.quad_form(v)) + 2.0 * c.sigma_u.bilinear(u, &d)
        - 2.0 * c.sigma_v.bilinear(v, &d)
}

/// `M` with `[u; v]ᵀ M [u; v] = 𝒫`:
/// `[[βA_n + 2Σu, −(Σu+Σv)], [−(Σu+Σv), −βA_n + 2Σv]]`.
pub fn penalty_form_matrix(c: &InterfaceCoupling) -> SymMatrix {
    let ba = c.a_n.scaled(c.beta);
    let off = -&(&c.sigma_u + &c.sigma_v);
    SymMatrix::block2(
        &(&ba + &c.sigma_u.scaled(2.0)),
        &off,
        &(&c.sigma_v.scaled(2.0) - &ba),
    )
}

/// `RᵀMR` with `R = ½[[I, I], [−I, I]]`. In the rotated variables
/// `(u−v, u+v)` this is `[[Σu+Σv, ½E], [½E, 0]]` with `E = βA_n + Σu − Σv`,
/// so `M ⪰ 0` exactly when `E = 0` and `Σu + Σv ⪰ 0`.
pub fn rotated_penalty_matrix(c: &InterfaceCoupling) -> SymMatrix {
    let m = penalty_form_matrix(c);
    let n = c.dim();
    let r = |i: usize, k: usize| -> f64 {
        let (bi, ii) = (i / n, i % n);
        let (bk, kk) = (k / n, k % n);
        if ii != kk {
            return 0.0;
        }
        match (bi, bk) {
            (0, _) => 0.5,
            (1, 0) => -0.5,
            _ => 0.5,
        }
    };
    SymMatrix::from_upper(2 * n, |i, j| {
        let mut s = 0.0;
        for k in 0..2 * n {
            if r(k, i) == 0.0 {
                continue;
            }
            for l in 0..2 * n {
                let rl = r(l, j);
                if rl != 0.0 {
                    s += r(k, i) * m.get(k, l) * rl;
                }
            }
        }
        s
    })
}

/// Most negative direction of `M`, split as `(λ_min, u, v)`; `None` when
/// `M ⪰ 0` to tolerance.
pub fn growth_witness(c: &InterfaceCoupling) -> Result<Option<(f64, Vec<f64>, Vec<f64>)>, CouplingError> {
    let m = penalty_form_matrix(c);
    let e = eig_sym(&m)?;
    let lmin = e.min_value();
    if lmin >= -CERT_TOL * e.spectral_radius().max(1.0) {
        return Ok(None);
    }
    let w = e.vector(e.dim() - 1);
    let n = c.dim();
    Ok(Some((lmin, w[..n].to_vec(), w[n..].to_vec())))
}

/// Interior-point penalty coupling on the overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCoupling {
    pub sigma_um: SymMatrix,
    pub sigma_vm: SymMatrix,
    pub eta: f64,
    pub verdict: Verdict,
}

impl OverlapCoupling {
    pub fn new(eta: f64, sigma_um: SymMatrix, sigma_vm: SymMatrix) -> Result<Self, CouplingError> {
        let verdict = check_overlap_coupling(eta, &sigma_um, &sigma_vm, CERT_TOL)?;
        Ok(Self {
            sigma_um,
            sigma_vm,
            eta,
            verdict,
        })
    }

    /// `Σuᵐ = σI`, `Σvᵐ = σ(1−η)/η I`.
    pub fn scaled_identity(n: usize, eta: f64, sigma: f64) -> Result<Self, CouplingError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(CouplingError::Eta(eta));
        }
        let id = SymMatrix::identity(n);
        Self::new(eta, id.scaled(sigma), id.scaled(sigma * (1.0 - eta) / eta))
    }

    pub fn certified(&self) -> bool {
        self.verdict.passed()
    }
}

pub fn check_overlap_coupling(
    eta: f64,
    sigma_um: &SymMatrix,
    sigma_vm: &SymMatrix,
    tol: f64,
) -> Result<Verdict, CouplingError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CouplingError::Eta(eta));
    }
    sigma_um.check_same_dim(sigma_vm)?;
    let mut failures = Vec::new();
    let lu = sigma_um.scaled(1.0 - eta);
    let lv = sigma_vm.scaled(eta);
    let residual = (&lu - &lv).max_abs();
    let limit = tol * scale_of(&[&lu, &lv]);
    if residual > limit {
        failures.push(Failure::Equality { residual, limit });
    }
    if let Some(f) = psd_failure(sigma_um, tol, "SigmaUm")? {
        failures.push(f);
    }
    Ok(Verdict { failures })
}

/// `𝒫ₘ = 2(1−η)uᵀΣuᵐ(u−v) + 2ηvᵀΣvᵐ(v−u)`
pub fn overlap_quadratic_form(u: &[f64], v: &[f64], c: &OverlapCoupling) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    2.0 * (1.0 - c.eta) * c.sigma_um.bilinear(u, &d) - 2.0 * c.eta * c.sigma_vm.bilinear(v, &d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn upwind_example_passes() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let su = m(&[&[0.25, -0.25], &[-0.25, 0.25]]);
        let sv = m(&[&[0.75, 0.75], &[0.75, 0.75]]);
        assert!(check_interface_coupling(&a, 0.5, &su, &sv, 1e-12).unwrap().passed());
        let c = make_upwind_coupling(&a).unwrap();
        assert!(c.certified());
        assert!(c.sigma_u.max_abs_diff(&su) < 1e-14);
        assert!(c.sigma_v.max_abs_diff(&sv) < 1e-14);
    }

    #[test]
    fn zero_penalties_fail_equality() {
        let a = SymMatrix::from_diagonal(&[1.0, -2.0]);
        let z = SymMatrix::zeros(2);
        let v = check_interface_coupling(&a, 0.5, &z, &z, 1e-12).unwrap();
        assert!(matches!(v.failures[0], Failure::Equality { .. }));
    }

    #[test]
    fn upwind_diagonal_and_zero() {
        let c = make_upwind_coupling(&SymMatrix::from_diagonal(&[2.0, -3.0])).unwrap();
        assert_eq!(c.sigma_u, SymMatrix::from_diagonal(&[0.0, 1.5]));
        assert_eq!(c.sigma_v, SymMatrix::from_diagonal(&[1.0, 0.0]));
        let c = make_upwind_coupling(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(c.sigma_u.max_abs(), 0.0);
        assert_eq!(c.sigma_v.max_abs(), 0.0);
        assert!(c.certified());
    }

    #[test]
    fn complete_coupling_examples() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let half_minus = flux_split(&a).unwrap().minus_abs().scaled(0.5);
        let c = complete_coupling(&a, 0.5, &half_minus).unwrap();
        let half_plus = flux_split(&a).unwrap().plus.scaled(0.5);
        assert!(c.sigma_v.max_abs_diff(&half_plus) < 1e-14);
        assert!(c.certified());

        let a = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let c = complete_coupling(&a, 1.0, &SymMatrix::zeros(2)).unwrap();
        assert_eq!(c.sigma_v, a);
        assert!(!c.certified());
        let w = c.verdict.witness().unwrap();
        let m2 = &c.sigma_v.scaled(2.0) - &a;
        assert!(m2.quad_form(w) < 0.0);
    }

    #[test]
    fn overlap_examples() {
        let i = SymMatrix::identity(2);
        assert!(check_overlap_coupling(0.5, &i, &i, 1e-12).unwrap().passed());
        assert!(check_overlap_coupling(0.25, &i, &i.scaled(3.0), 1e-12).unwrap().passed());
        assert!(!check_overlap_coupling(0.5, &i, &i.scaled(2.0), 1e-12).unwrap().passed());
        assert!(matches!(
            check_overlap_coupling(1.0, &i, &i, 1e-12),
            Err(CouplingError::Eta(_))
        ));
        let neg = i.scaled(-1.0);
        let v = check_overlap_coupling(0.5, &neg, &neg, 1e-12).unwrap();
        assert!(matches!(v.failures[0], Failure::Indefinite { .. }));
    }

    #[test]
    fn quadratic_form_examples() {
        let a = SymMatrix::from_diagonal(&[2.0, -3.0]);
        let c = make_upwind_coupling(&a).unwrap();
        let u = [0.3, -0.7];
        assert!(interface_quadratic_form(&u, &u, &c).abs() < 1e-15);
        let v = [u[0] - 1.0, u[1]];
        let full = interface_quadratic_form(&u, &v, &c);
        let reduced = 0.5 * flux_split(&a).unwrap().abs.quad_form(&[1.0, 0.0]);
        assert!((full - 1.0).abs() < 1e-14 && (reduced - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_route_matches_expansion() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let c = make_upwind_coupling(&a).unwrap();
        let mm = penalty_form_matrix(&c);
        let (u, v) = ([0.4, -1.1], [0.9, 0.2]);
        let z = [u[0], u[1], v[0], v[1]];
        assert!((mm.quad_form(&z) - interface_quadratic_form(&u, &v, &c)).abs() < 1e-14);
        let r = rotated_penalty_matrix(&c);
        let sum = &c.sigma_u + &c.sigma_v;
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.get(i, j) - sum.get(i, j)).abs() < 1e-14);
                assert!(r.get(i, 2 + j).abs() < 1e-14);
                assert!(r.get(2 + i, 2 + j).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn witness_for_uncertified_coupling() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let c = make_upwind_coupling(&a).unwrap();
        assert!(growth_witness(&c).unwrap().is_none());
        let bad = c.with_sigma_u(&c.sigma_u - &SymMatrix::identity(2)).unwrap();
        assert!(!bad.certified());
        let (l, u, v) = growth_witness(&bad).unwrap().unwrap();
        assert!(l < 0.0);
        assert!((interface_quadratic_form(&u, &v, &bad) - l).abs() < 1e-12);
    }
}
