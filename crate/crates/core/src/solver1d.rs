//! One-dimensional overset problems and the shared RK4 driver.

use thiserror::Error;

use crate::coupling::{upwind_coupling, CouplingError, InterfaceCoupling};
use crate::engine::Engine;
use crate::geometry::{GeometryError, Grid1D, OversetGeometry1D};
use crate::linalg::{HyperbolicSystem, LinalgError, SymMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("coupling at {at} is not certified: {reason}")]
    Uncertified { at: String, reason: String },
    #[error("coupling at {at} does not match eta: beta*A_n differs from the expected weight by {diff:e}")]
    BetaMismatch { at: String, diff: f64 },
    #[error("scalar characteristic problems need alpha > 0, got {0}")]
    NonPositiveSpeed(f64),
    #[error("eta must lie strictly between 0 and 1, got {0}")]
    Eta(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} is not available in this coupling mode")]
    WrongMode(&'static str),
    #[error("non-finite value at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

/// Grid functions of both components. Each component is a list of SBP blocks
/// (`u = [u on [a,b], u on [b,c]]`, `v = [v on [b,c], v on [c,d]]`), each a
/// flat node-major array of state vectors. Single-domain runs keep their one
/// block in `u` and leave `v` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: f64,
}

impl SimState {
    fn all(&self) -> impl Iterator<Item = &f64> {
        self.u.iter().chain(&self.v).flatten()
    }

    pub fn is_finite(&self) -> bool {
        self.all().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.all().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// `self = base + c * k`
    fn set_axpy(&mut self, base: &SimState, c: f64, k: &SimState) {
        for (dst, (b, kk)) in self
            .u
            .iter_mut()
            .chain(self.v.iter_mut())
            .zip(base.u.iter().chain(&base.v).zip(k.u.iter().chain(&k.v)))
        {
            for (d, (x, y)) in dst.iter_mut().zip(b.iter().zip(kk)) {
                *d = x + c * y;
            }
        }
    }

    fn axpy(&mut self, c: f64, k: &SimState) {
        for (dst, kk) in self.u.iter_mut().chain(self.v.iter_mut()).zip(k.u.iter().chain(&k.v)) {
            for (d, y) in dst.iter_mut().zip(kk) {
                *d += c * y;
            }
        }
    }
}

/// A semi-discrete system `q' = F(q)`.
pub trait SemiDiscrete {
    fn rhs(&self, state: &SimState, out: &mut SimState);
    fn zero_state(&self) -> SimState;
    /// Step size for RK4 at the given CFL number.
    fn stable_dt(&self, cfl: f64) -> f64;
}

#[derive(Debug, Clone)]
pub enum CouplingMode {
    /// Characteristic interface conditions, weak (SAT) or by strong injection.
    Characteristic { strong: bool },
    Penalty {
        at_b: InterfaceCoupling,
        at_c: InterfaceCoupling,
        eta: f64,
    },
}

/// Overset problem on `Ωu = [a,c]`, `Ωv = [b,d]`.
#[derive(Debug, Clone)]
pub struct Problem1D {
    pub geometry: OversetGeometry1D,
    pub mode: CouplingMode,
    pub(crate) engine: Engine,
}

/// Checks `βA_n` against the weight the layout assigns to the interface.
pub(crate) fn check_coupling(
    at: &str,
    c: &InterfaceCoupling,
    a: &SymMatrix,
    weight: f64,
    allow_uncertified: bool,
) -> Result<(), SolverError> {
    if c.dim() != a.dim() {
        return Err(SolverError::Dimension(format!(
            "coupling at {at} has dimension {}, system has {}",
            c.dim(),
            a.dim()
        )));
    }
    if allow_uncertified {
        return Ok(());
    }
    if !c.certified() {
        return Err(SolverError::Uncertified {
            at: at.into(),
            reason: c.verdict.reason(),
        });
    }
    let diff = c.a_n.scaled(c.beta).max_abs_diff(&a.scaled(weight));
    if diff > 1e-12 * a.max_abs().max(1.0) {
        return Err(SolverError::BetaMismatch { at: at.into(), diff });
    }
    Ok(())
}

impl Problem1D {
    /// Penalty couplings must be certified (and consistent with `eta`) unless
    /// `allow_uncertified` is set.
    pub fn new(
        system: HyperbolicSystem,
        geometry: OversetGeometry1D,
        mode: CouplingMode,
        allow_uncertified: bool,
    ) -> Result<Self, SolverError> {
        let grids = geometry.blocks().clone();
        let engine = match &mode {
            CouplingMode::Characteristic { strong } => {
                let mut e = Engine::overset(system, None, grids, [1.0, 0.5, 0.5, 1.0], [1.0; 4]);
                e.add_physical(*strong);
                e.add_characteristic(*strong);
                e
            }
            CouplingMode::Penalty { at_b, at_c, eta } => {
                let eta = *eta;
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(SolverError::Eta(eta));
                }
                check_coupling("x = b", at_b, system.matrix(), eta, allow_uncertified)?;
                check_coupling("x = c", at_c, system.matrix(), 1.0 - eta, allow_uncertified)?;
                let w = [1.0, 1.0 - eta, eta, 1.0];
                let mut e = Engine::overset(system, None, grids, w, w);
                e.add_physical(false);
                e.add_penalty(at_b.clone(), at_c.clone());
                e
            }
        };
        Ok(Self {
            geometry,
            mode,
            engine,
        })
    }

    /// Scalar advection `u_t + αu_x = 0` with characteristic coupling.
    pub fn scalar_characteristic(alpha: f64, geometry: OversetGeometry1D) -> Result<Self, SolverError> {
        if !(alpha > 0.0) {
            return Err(SolverError::NonPositiveSpeed(alpha));
        }
        let sys = HyperbolicSystem::scalar(alpha)?;
        Self::new(sys, geometry, CouplingMode::Characteristic { strong: false }, false)
    }

    /// Penalty problem with the upwind couplings `Σu = η|A⁻|`, `Σv = ηA⁺` at
    /// `b` and the same with `1−η` at `c`.
    pub fn upwind_penalty(
        system: HyperbolicSystem,
        geometry: OversetGeometry1D,
        eta: f64,
    ) -> Result<Self, SolverError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SolverError::Eta(eta));
        }
        let a = system.matrix().clone();
        let at_b = upwind_coupling(&a, eta)?;
        let at_c = upwind_coupling(&a, 1.0 - eta)?;
        Self::new(system, geometry, CouplingMode::Penalty { at_b, at_c, eta }, false)
    }

    pub fn system(&self) -> &HyperbolicSystem {
        &self.engine.sys
    }

    pub fn eta(&self) -> Option<f64> {
        match self.mode {
            CouplingMode::Penalty { eta, .. } => Some(eta),
            _ => None,
        }
    }

    pub fn initial_state(&self, f: &dyn Fn(f64) -> Vec<f64>) -> SimState {
        self.engine.sample(&|x, _| f(x))
    }

    pub fn rhs_scalar_characteristic(&self, s: &SimState, out: &mut SimState) -> Result<(), SolverError> {
        match self.mode {
            CouplingMode::Characteristic { .. } if self.engine.m() == 1 => {
                self.engine.rhs(s, out);
                Ok(())
            }
            _ => Err(SolverError::WrongMode("rhs_scalar_characteristic")),
        }
    }

    pub fn rhs_system_characteristic(&self, s: &SimState, out: &mut SimState) -> Result<(), SolverError> {
        match self.mode {
            CouplingMode::Characteristic { .. } => {
                self.engine.rhs(s, out);
                Ok(())
            }
            _ => Err(SolverError::WrongMode("rhs_system_characteristic")),
        }
    }

    pub fn rhs_system_penalty(&self, s: &SimState, out: &mut SimState) -> Result<(), SolverError> {
        match self.mode {
            CouplingMode::Penalty { .. } => {
                self.engine.rhs(s, out);
                Ok(())
            }
            _ => Err(SolverError::WrongMode("rhs_system_penalty")),
        }
    }

    /// Node coordinates of each block, in state order (`u` blocks then `v`).
    pub fn block_nodes(&self) -> Vec<Vec<f64>> {
        self.engine.grids.iter().map(|g| g.nodes()).collect()
    }
}

impl SemiDiscrete for Problem1D {
    fn rhs(&self, state: &SimState, out: &mut SimState) {
        self.engine.rhs(state, out)
    }

    fn zero_state(&self) -> SimState {
        self.engine.zero_state()
    }

    fn stable_dt(&self, cfl: f64) -> f64 {
        self.engine.stable_dt(cfl)
    }
}

/// Reference problem on the whole interval `[a,d]`.
#[derive(Debug, Clone)]
pub struct SingleDomain1D {
    pub grid: Grid1D,
    pub(crate) engine: Engine,
}

impl SingleDomain1D {
    pub fn new(system: HyperbolicSystem, grid: Grid1D) -> Self {
        let engine = Engine::single(system, None, grid.clone());
        Self { grid, engine }
    }

    /// Grid on `[a,d]` with spacing `min(hU, hV)`, so every node of both
    /// component grids is a node of the reference when one spacing divides
    /// the other.
    pub fn for_geometry(system: HyperbolicSystem, g: &OversetGeometry1D) -> Result<Self, SolverError> {
        let grid = Grid1D::with_spacing("[a,d]", g.a, g.d, g.h_min(), g.order)?;
        Ok(Self::new(system, grid))
    }

    pub fn initial_state(&self, f: &dyn Fn(f64) -> Vec<f64>) -> SimState {
        self.engine.sample(&|x, _| f(x))
    }

    pub fn rhs_single_domain(&self, s: &SimState, out: &mut SimState) {
        self.engine.rhs(s, out)
    }
}

impl SemiDiscrete for SingleDomain1D {
    fn rhs(&self, state: &SimState, out: &mut SimState) {
        self.engine.rhs(state, out)
    }

    fn zero_state(&self) -> SimState {
        self.engine.zero_state()
    }

    fn stable_dt(&self, cfl: f64) -> f64 {
        self.engine.stable_dt(cfl)
    }
}

/// Which RK stage a hook call belongs to. `stage == 0` is the state at the
/// start of step `step` (and, after the last step, the final state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageInfo {
    pub step: usize,
    pub stage: usize,
    pub t: f64,
}

/// Work arrays for RK4.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k: [SimState; 4],
    tmp: SimState,
}

impl Rk4Workspace {
    pub fn new<P: SemiDiscrete + ?Sized>(p: &P) -> Self {
        let z = p.zero_state();
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }
}

/// One classical RK4 step. `hook` sees every stage state with its rhs.
pub fn step_rk4<P: SemiDiscrete + ?Sized>(
    p: &P,
    state: &mut SimState,
    dt: f64,
    ws: &mut Rk4Workspace,
    step: usize,
    hook: &mut dyn FnMut(StageInfo, &SimState, &SimState),
) -> Result<(), SolverError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::BadStep(dt));
    }
    let t0 = state.t;
    let c = [0.0, 0.5, 0.5, 1.0];
    for s in 0..4 {
        let stage_state = if s == 0 {
            &*state
        } else {
            let (prev, _) = ws.k.split_at(s);
            ws.tmp.set_axpy(state, c[s] * dt, &prev[s - 1]);
            ws.tmp.t = t0 + c[s] * dt;
            &ws.tmp
        };
        let k = &mut ws.k[s];
        p.rhs(stage_state, k);
        hook(
            StageInfo {
                step,
                stage: s,
                t: t0 + c[s] * dt,
            },
            stage_state,
            k,
        );
    }
    let b = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
    for s in 0..4 {
        state.axpy(b[s] * dt, &ws.k[s]);
    }
    state.t = t0 + dt;
    if !state.is_finite() {
        return Err(SolverError::NonFinite {
            step: step + 1,
            t: state.t,
        });
    }
    Ok(())
}

/// Number of uniform steps of size at most `dt` reaching `t_end` exactly.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        0
    } else {
        ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Integrates from `initial.t` to `t_end` with uniform steps no larger than
/// `dt`. The hook sees every RK stage and, finally, the end state with
/// `stage == 0`.
pub fn run_simulation<P: SemiDiscrete + ?Sized>(
    p: &P,
    initial: SimState,
    t_end: f64,
    dt: f64,
    mut hook: impl FnMut(StageInfo, &SimState, &SimState),
) -> Result<SimState, SolverError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::BadStep(dt));
    }
    if !initial.is_finite() {
        return Err(SolverError::NonFinite {
            step: 0,
            t: initial.t,
        });
    }
    let span = t_end - initial.t;
    let n = step_count(span, dt);
    let mut state = initial;
    let t0 = state.t;
    let mut ws = Rk4Workspace::new(p);
    for step in 0..n {
        let h = if step + 1 == n {
            t_end - state.t
        } else {
            span / n as f64
        };
        step_rk4(p, &mut state, h, &mut ws, step, &mut hook)?;
        if step + 1 == n {
            state.t = t_end;
        } else {
            state.t = t0 + (step + 1) as f64 * span / n as f64;
        }
    }
    let mut k = p.zero_state();
    p.rhs(&state, &mut k);
    hook(
        StageInfo {
            step: n,
            stage: 0,
            t: state.t,
        },
        &state,
        &k,
    );
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SbpOrder;

    fn geom() -> OversetGeometry1D {
        OversetGeometry1D::new(0.0, 1.0, 2.0, 3.0, 0.05, 0.05, SbpOrder::Two).unwrap()
    }

    #[test]
    fn zero_state_has_zero_rhs() {
        let p = Problem1D::scalar_characteristic(1.0, geom()).unwrap();
        let s = p.zero_state();
        let mut out = p.zero_state();
        out.u[0][3] = 7.0;
        p.rhs_scalar_characteristic(&s, &mut out).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        assert!(p.rhs_system_penalty(&s, &mut out).is_err());
    }

    #[test]
    fn non_positive_speed_rejected() {
        assert!(matches!(
            Problem1D::scalar_characteristic(0.0, geom()),
            Err(SolverError::NonPositiveSpeed(_))
        ));
        assert!(Problem1D::scalar_characteristic(-1.0, geom()).is_err());
    }

    #[test]
    fn equal_fields_cancel_penalties() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let sys = HyperbolicSystem::new(a).unwrap();
        let p = Problem1D::upwind_penalty(sys.clone(), geom(), 0.5).unwrap();
        let f = |x: f64| vec![(x - 1.5).sin(), (2.0 * x).cos()];
        let s = p.initial_state(&f);
        let mut with = p.zero_state();
        p.rhs_system_penalty(&s, &mut with).unwrap();
        // the penalty terms only act where u and v meet; with u = v they vanish,
        // leaving each block's interior operator and internal/physical SATs
        let mut plain = p.engine.clone();
        plain
            .sats
            .retain(|s| s.kind != crate::engine::SatKind::Overset);
        let mut without = p.zero_state();
        plain.rhs(&s, &mut without);
        for (x, y) in with.u.iter().chain(&with.v).flatten().zip(without.u.iter().chain(&without.v).flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_on_linear_decay() {
        struct Decay;
        impl SemiDiscrete for Decay {
            fn rhs(&self, s: &SimState, out: &mut SimState) {
                out.u[0][0] = -s.u[0][0];
            }
            fn zero_state(&self) -> SimState {
                SimState {
                    u: vec![vec![0.0]],
                    v: vec![],
                    t: 0.0,
                }
            }
            fn stable_dt(&self, cfl: f64) -> f64 {
                cfl
            }
        }
        let mut s = SimState {
            u: vec![vec![1.0]],
            v: vec![],
            t: 0.0,
        };
        let mut ws = Rk4Workspace::new(&Decay);
        step_rk4(&Decay, &mut s, 0.1, &mut ws, 0, &mut |_, _, _| {}).unwrap();
        let h: f64 = 0.1;
        let expected = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((s.u[0][0] - expected).abs() < 1e-16);
        assert!(step_rk4(&Decay, &mut s, 0.0, &mut ws, 0, &mut |_, _, _| {}).is_err());
    }

    #[test]
    fn run_to_zero_time_records_once() {
        let p = Problem1D::scalar_characteristic(1.0, geom()).unwrap();
        let s0 = p.initial_state(&|x| vec![(-(x - 0.5f64).powi(2) / 0.01).exp()]);
        let mut calls = 0;
        let s = run_simulation(&p, s0.clone(), 0.0, 0.01, |_, _, _| calls += 1).unwrap();
        assert_eq!(calls, 1);
        assert_eq!(s, s0);
    }

    #[test]
    fn nan_in_initial_data_aborts() {
        let p = Problem1D::scalar_characteristic(1.0, geom()).unwrap();
        let mut s0 = p.zero_state();
        s0.v[1][4] = f64::NAN;
        let err = run_simulation(&p, s0, 1.0, 0.01, |_, _, _| {}).unwrap_err();
        assert_eq!(err, SolverError::NonFinite { step: 0, t: 0.0 });
    }
}
