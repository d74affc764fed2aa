//! Two-dimensional overset problems on a channel periodic in `y`.
//!
//! `u` lives on `[a', c]`, `v` on `[b, d]`; the interfaces are the lines
//! `x = b` (outward normal of `Ωv` is `−x̂`) and `x = c` (normal `+x̂`).

use crate::coupling::{upwind_coupling, InterfaceCoupling, OverlapCoupling};
use crate::engine::{Engine, OverlapPenalty};
use crate::geometry::{Grid1D, OversetGeometry2D};
use crate::linalg::{HyperbolicSystem, SymMatrix};
use crate::solver1d::{check_coupling, SemiDiscrete, SimState, SolverError};

/// Interface and interior-point couplings of a 2D run.
#[derive(Debug, Clone)]
pub struct Couplings2D {
    /// At `x = b`: `A_n = −A₁`, `β = −η`.
    pub at_b: InterfaceCoupling,
    /// At `x = c`: `A_n = A₁`, `β = 1−η`.
    pub at_c: InterfaceCoupling,
    pub overlap: Option<OverlapCoupling>,
    pub eta: f64,
}

impl Couplings2D {
    /// Upwind couplings with the 2D sign convention at `x = b`.
    pub fn upwind(a1: &SymMatrix, eta: f64) -> Result<Self, SolverError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SolverError::Eta(eta));
        }
        Ok(Self {
            at_b: upwind_coupling(&-a1, -eta)?,
            at_c: upwind_coupling(a1, 1.0 - eta)?,
            overlap: None,
            eta,
        })
    }

    pub fn with_overlap(mut self, c: OverlapCoupling) -> Self {
        self.overlap = Some(c);
        self
    }
}

/// `u_t + A₁u_x + A₂u_y = 0` on overlapping component grids.
#[derive(Debug, Clone)]
pub struct Problem2D {
    pub geometry: OversetGeometry2D,
    pub couplings: Couplings2D,
    pub a2: SymMatrix,
    pub(crate) engine: Engine,
}

impl Problem2D {
    /// Couplings must be certified and consistent with `η` unless
    /// `allow_uncertified` is set. Overlap points come from the geometry.
    pub fn new(
        a1: HyperbolicSystem,
        a2: SymMatrix,
        geometry: OversetGeometry2D,
        couplings: Couplings2D,
        allow_uncertified: bool,
    ) -> Result<Self, SolverError> {
        let eta = couplings.eta;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SolverError::Eta(eta));
        }
        if a2.dim() != a1.dim() {
            return Err(SolverError::Dimension(format!(
                "A1 is {0}x{0}, A2 is {1}x{1}",
                a1.dim(),
                a2.dim()
            )));
        }
        check_coupling("x = b", &couplings.at_b, a1.matrix(), eta, allow_uncertified)?;
        check_coupling("x = c", &couplings.at_c, a1.matrix(), 1.0 - eta, allow_uncertified)?;
        let w = [1.0, 1.0 - eta, eta, 1.0];
        let y = Some((geometry.y.clone(), a2.clone()));
        let mut e = Engine::overset(a1, y, geometry.line.blocks().clone(), w, w);
        e.add_physical(false);
        e.add_penalty(couplings.at_b.clone(), couplings.at_c.clone());
        if let Some(ov) = &couplings.overlap {
            if ov.sigma_um.dim() != e.m() {
                return Err(SolverError::Dimension("overlap coupling".into()));
            }
            if !allow_uncertified {
                if !ov.certified() {
                    return Err(SolverError::Uncertified {
                        at: "overlap points".into(),
                        reason: ov.verdict.reason(),
                    });
                }
                if (ov.eta - eta).abs() > 1e-14 {
                    return Err(SolverError::Eta(ov.eta));
                }
            }
            if geometry.points.is_empty() {
                return Err(SolverError::GridMismatch("overlap coupling given but no overlap points placed".into()));
            }
            e.overlap = Some(OverlapPenalty {
                coupling: ov.clone(),
                points: geometry.points.clone(),
            });
        }
        Ok(Self {
            geometry,
            couplings,
            a2,
            engine: e,
        })
    }

    /// Upwind interface couplings, no overlap points.
    pub fn upwind(a1: SymMatrix, a2: SymMatrix, geometry: OversetGeometry2D, eta: f64) -> Result<Self, SolverError> {
        let c = Couplings2D::upwind(&a1, eta)?;
        Self::new(HyperbolicSystem::new(a1)?, a2, geometry, c, false)
    }

    pub fn system(&self) -> &HyperbolicSystem {
        &self.engine.sys
    }

    pub fn eta(&self) -> f64 {
        self.couplings.eta
    }

    pub fn has_overlap_points(&self) -> bool {
        self.engine.overlap.is_some()
    }

    pub fn initial_state(&self, f: &dyn Fn(f64, f64) -> Vec<f64>) -> SimState {
        self.engine.sample(f)
    }

    pub fn rhs_2d_boundary_penalty(&self, s: &SimState, out: &mut SimState) -> Result<(), SolverError> {
        if self.has_overlap_points() {
            return Err(SolverError::WrongMode("rhs_2d_boundary_penalty"));
        }
        self.engine.rhs(s, out);
        Ok(())
    }

    pub fn rhs_2d_overlap_penalty(&self, s: &SimState, out: &mut SimState) -> Result<(), SolverError> {
        if !self.has_overlap_points() {
            return Err(SolverError::WrongMode("rhs_2d_overlap_penalty"));
        }
        self.engine.rhs(s, out);
        Ok(())
    }

    /// Value at block `blk` (`0,1` = `u`, `2,3` = `v`), node `i`, row `j`.
    pub fn value<'s>(&self, s: &'s SimState, blk: usize, i: usize, j: usize) -> &'s [f64] {
        self.engine.value(s, (blk, i), j)
    }
}

impl SemiDiscrete for Problem2D {
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

/// Reference on the whole channel `[a', d] × [0, Ly)`.
#[derive(Debug, Clone)]
pub struct SingleDomain2D {
    pub grid: Grid1D,
    pub(crate) engine: Engine,
}

impl SingleDomain2D {
    /// `x` spacing `min(hU, hV)` and the overset run's `y` grid.
    pub fn for_geometry(a1: HyperbolicSystem, a2: SymMatrix, g: &OversetGeometry2D) -> Result<Self, SolverError> {
        if a2.dim() != a1.dim() {
            return Err(SolverError::Dimension("A1 and A2 differ in size".into()));
        }
        let l = &g.line;
        let grid = Grid1D::with_spacing("[a',d]", l.a, l.d, l.h_min(), l.order)?;
        let engine = Engine::single(a1, Some((g.y.clone(), a2)), grid.clone());
        Ok(Self { grid, engine })
    }

    pub fn initial_state(&self, f: &dyn Fn(f64, f64) -> Vec<f64>) -> SimState {
        self.engine.sample(f)
    }

    pub fn rhs_2d_single_domain(&self, s: &SimState, out: &mut SimState) {
        self.engine.rhs(s, out)
    }

    pub fn value<'s>(&self, s: &'s SimState, i: usize, j: usize) -> &'s [f64] {
        self.engine.value(s, (0, i), j)
    }
}

impl SemiDiscrete for SingleDomain2D {
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
