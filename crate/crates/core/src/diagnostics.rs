//! Energy, conservation, interface forms and equivalence errors.
//!
//! All rates are evaluated from a state and its right-hand side (the exact
//! semi-discrete rate), never by differencing in time.

use thiserror::Error;

use crate::coupling::{interface_quadratic_form, overlap_quadratic_form};
use crate::engine::{Engine, SatKind, V_B_BLOCK, U_C_BLOCK};
use crate::geometry::{Grid1D, OversetGeometry1D};
use crate::linalg::HyperbolicSystem;
use crate::solver1d::{Problem1D, SimState, SingleDomain1D, StageInfo};
use crate::solver2d::{Problem2D, SingleDomain2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("eta must lie strictly between 0 and 1, got {0}")]
    Eta(f64),
    #[error("records must have strictly increasing t: {prev} then {next}")]
    NonIncreasingTime { prev: f64, next: f64 },
    #[error("state does not match the geometry: {0}")]
    Shape(String),
    #[error("reference grid has no node at x = {0}")]
    GridMismatch(f64),
}

/// One sample of every monitored quantity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e: f64,
    pub dedt: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    pub norm_u_o: f64,
    pub norm_v_o: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub p_overlap: f64,
    /// `d/dt` of the weighted total, per component.
    pub total_rate: Vec<f64>,
    pub flux_in: Vec<f64>,
    pub flux_out: Vec<f64>,
    /// Largest componentwise `|d/dt total − (fluxIn − fluxOut)|`.
    pub cons_residual: f64,
    /// Internal-interface plus physical-boundary dissipation.
    pub dissipation: f64,
    /// `dE/dt + P_b + P_c + P_overlap + dissipation` (penalty runs only).
    pub ledger_residual: Option<f64>,
    /// `({vᵀA⁺v − uᵀA⁺u} at c, {uᵀ|A⁻|u − vᵀ|A⁻|v} at b)`.
    pub parasitic: Option<(f64, f64)>,
    pub err_u: Option<f64>,
    pub err_v: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn flux_scale(&self) -> f64 {
        self.flux_in
            .iter()
            .chain(&self.flux_out)
            .fold(0.0_f64, |m, f| m.max(f.abs()))
    }
}

/// Append-only, time-ordered records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsSeries {
    records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: DiagnosticsRecord) -> Result<(), DiagError> {
        if let Some(last) = self.records.last() {
            if !(r.t > last.t) {
                return Err(DiagError::NonIncreasingTime {
                    prev: last.t,
                    next: r.t,
                });
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&DiagnosticsRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    pub fn last_mut(&mut self) -> Option<&mut DiagnosticsRecord> {
        self.records.last_mut()
    }
}

/// `Σ_j hy Σ_i H_i p_ij · q_ij` over one block.
fn block_inner(g: &Grid1D, ny: usize, hy: f64, m: usize, p: &[f64], q: &[f64]) -> f64 {
    let len = g.len() * m;
    (0..ny)
        .map(|j| g.inner(&p[j * len..(j + 1) * len], &q[j * len..(j + 1) * len], m))
        .sum::<f64>()
        * hy
}

fn block_integral(g: &Grid1D, ny: usize, hy: f64, m: usize, q: &[f64]) -> Vec<f64> {
    let len = g.len() * m;
    let mut s = vec![0.0; m];
    for j in 0..ny {
        for (acc, v) in s.iter_mut().zip(g.integrate(&q[j * len..(j + 1) * len], m)) {
            *acc += hy * v;
        }
    }
    s
}

impl Engine {
    fn norms(&self, s: &SimState) -> Vec<f64> {
        let (m, ny, hy) = (self.m(), self.ny(), self.hy());
        (0..self.n_blocks())
            .map(|b| {
                let q = self.block(s, b);
                block_inner(&self.grids[b], ny, hy, m, q, q)
            })
            .collect()
    }

    pub(crate) fn energy(&self, s: &SimState) -> f64 {
        self.norms(s).iter().zip(&self.weights).map(|(n, w)| n * w).sum()
    }

    pub(crate) fn energy_rate(&self, s: &SimState, k: &SimState) -> f64 {
        let (m, ny, hy) = (self.m(), self.ny(), self.hy());
        (0..self.n_blocks())
            .map(|b| {
                2.0 * self.weights[b]
                    * block_inner(&self.grids[b], ny, hy, m, self.block(s, b), self.block(k, b))
            })
            .sum()
    }

    /// `(d/dt weighted total, fluxIn, fluxOut)`.
    pub(crate) fn conservation(&self, s: &SimState, k: &SimState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (m, ny, hy) = (self.m(), self.ny(), self.hy());
        let mut rate = vec![0.0; m];
        for b in 0..self.n_blocks() {
            let r = block_integral(&self.grids[b], ny, hy, m, self.block(k, b));
            for (acc, v) in rate.iter_mut().zip(r) {
                *acc += self.weights[b] * v;
            }
        }
        let (l, r) = (self.left_boundary(), self.right_boundary());
        let (wl, wr) = (self.weights[l.0], self.weights[r.0]);
        let mut fin = vec![0.0; m];
        let mut fout = vec![0.0; m];
        for j in 0..ny {
            self.sys.minus().mul_acc(wl * hy, self.value(s, l, j), &mut fin);
            self.sys.plus().mul_acc(wr * hy, self.value(s, r, j), &mut fout);
        }
        (rate, fin, fout)
    }

    fn interface_forms(&self, s: &SimState) -> (f64, f64) {
        let Some(ifc) = &self.interfaces else {
            return (0.0, 0.0);
        };
        let [(ub, vb), (uc, vc)] = self.interface_nodes();
        let hy = self.hy();
        let mut p = (0.0, 0.0);
        for j in 0..self.ny() {
            p.0 += hy * interface_quadratic_form(self.value(s, ub, j), self.value(s, vb, j), &ifc.at_b);
            p.1 += hy * interface_quadratic_form(self.value(s, uc, j), self.value(s, vc, j), &ifc.at_c);
        }
        p
    }

    /// `(1/M) Σₘ 𝒫ₘ`
    fn overlap_form(&self, s: &SimState) -> f64 {
        let Some(ov) = &self.overlap else {
            return 0.0;
        };
        if ov.points.is_empty() {
            return 0.0;
        }
        ov.points
            .iter()
            .map(|p| {
                overlap_quadratic_form(
                    self.value(s, (U_C_BLOCK, p.iu), p.j),
                    self.value(s, (V_B_BLOCK, p.iv), p.j),
                    &ov.coupling,
                )
            })
            .sum::<f64>()
            / ov.points.len() as f64
    }

    fn dissipation(&self, s: &SimState) -> f64 {
        let abs = self.sys.abs();
        let hy = self.hy();
        let m = self.m();
        let mut d = 0.0;
        let mut diff = vec![0.0; m];
        for sat in &self.sats {
            match sat.kind {
                SatKind::Internal if sat.at.1 != 0 => {
                    let other = sat.other.expect("internal SAT has a partner");
                    let g = self.weights[sat.at.0].min(self.weights[other.0]);
                    for j in 0..self.ny() {
                        for (k, (p, q)) in self
                            .value(s, sat.at, j)
                            .iter()
                            .zip(self.value(s, other, j))
                            .enumerate()
                        {
                            diff[k] = p - q;
                        }
                        d += hy * g * abs.quad_form(&diff);
                    }
                }
                SatKind::Physical => {
                    let w = self.weights[sat.at.0];
                    for j in 0..self.ny() {
                        d += hy * w * abs.quad_form(self.value(s, sat.at, j));
                    }
                }
                _ => {}
            }
        }
        d
    }

    fn parasitic(&self, s: &SimState) -> (f64, f64) {
        let [(ub, vb), (uc, vc)] = self.interface_nodes();
        let (plus, minus_abs) = (self.sys.plus(), self.sys.split().minus_abs());
        let hy = self.hy();
        let mut t = (0.0, 0.0);
        for j in 0..self.ny() {
            t.0 += hy * (plus.quad_form(self.value(s, vc, j)) - plus.quad_form(self.value(s, uc, j)));
            t.1 += hy
                * (minus_abs.quad_form(self.value(s, ub, j)) - minus_abs.quad_form(self.value(s, vb, j)));
        }
        t
    }

    pub(crate) fn record(&self, s: &SimState, k: &SimState) -> DiagnosticsRecord {
        let norms = self.norms(s);
        let overset = self.layout == crate::engine::Layout::Overset;
        let e = norms.iter().zip(&self.weights).map(|(n, w)| n * w).sum();
        let dedt = self.energy_rate(s, k);
        let (rate, fin, fout) = self.conservation(s, k);
        let cons_residual = (0..self.m())
            .map(|c| (rate[c] - (fin[c] - fout[c])).abs())
            .fold(0.0, f64::max);
        let (p_b, p_c) = self.interface_forms(s);
        let p_overlap = self.overlap_form(s);
        let dissipation = self.dissipation(s);
        let ledger_residual = self
            .interfaces
            .as_ref()
            .map(|_| dedt + p_b + p_c + p_overlap + dissipation);
        DiagnosticsRecord {
            t: s.t,
            e,
            dedt,
            norm_u: norms[..self.n_u].iter().sum(),
            norm_v: norms[self.n_u..].iter().sum(),
            norm_u_o: if overset { norms[U_C_BLOCK] } else { 0.0 },
            norm_v_o: if overset { norms[V_B_BLOCK] } else { 0.0 },
            p_b,
            p_c,
            p_overlap,
            total_rate: rate,
            flux_in: fin,
            flux_out: fout,
            cons_residual,
            dissipation,
            ledger_residual,
            parasitic: overset.then(|| self.parasitic(s)),
            err_u: None,
            err_v: None,
        }
    }

    /// `(‖u − ω‖, ‖v − ω‖)` in the component norms, with `reference(x, j)`
    /// giving ω at node `x` of row `j`.
    pub(crate) fn equivalence(
        &self,
        s: &SimState,
        reference: &mut dyn FnMut(f64, usize) -> Result<Vec<f64>, DiagError>,
    ) -> Result<(f64, f64), DiagError> {
        let (m, hy) = (self.m(), self.hy());
        let mut err = [0.0, 0.0];
        for b in 0..self.n_blocks() {
            let g = &self.grids[b];
            let q = self.block(s, b);
            for j in 0..self.ny() {
                for i in 0..g.len() {
                    let w = reference(g.x(i), j)?;
                    let o = self.offset(b, i, j);
                    let d2: f64 = q[o..o + m].iter().zip(&w).map(|(a, r)| (a - r).powi(2)).sum();
                    err[usize::from(b >= self.n_u)] += hy * g.weights()[i] * d2;
                }
            }
        }
        Ok((err[0].sqrt(), err[1].sqrt()))
    }
}

/// A problem whose states can be summarised into a [`DiagnosticsRecord`].
pub trait Diagnose {
    fn record(&self, state: &SimState, rhs: &SimState) -> DiagnosticsRecord;
    /// Composite energy of a state.
    fn energy(&self, state: &SimState) -> f64;
}

impl Diagnose for Problem1D {
    fn record(&self, s: &SimState, k: &SimState) -> DiagnosticsRecord {
        self.engine.record(s, k)
    }

    fn energy(&self, s: &SimState) -> f64 {
        self.engine.energy(s)
    }
}

impl Diagnose for SingleDomain1D {
    fn record(&self, s: &SimState, k: &SimState) -> DiagnosticsRecord {
        self.engine.record(s, k)
    }

    fn energy(&self, s: &SimState) -> f64 {
        self.engine.energy(s)
    }
}

impl Diagnose for Problem2D {
    fn record(&self, s: &SimState, k: &SimState) -> DiagnosticsRecord {
        self.engine.record(s, k)
    }

    fn energy(&self, s: &SimState) -> f64 {
        self.engine.energy(s)
    }
}

impl Diagnose for SingleDomain2D {
    fn record(&self, s: &SimState, k: &SimState) -> DiagnosticsRecord {
        self.engine.record(s, k)
    }

    fn energy(&self, s: &SimState) -> f64 {
        self.engine.energy(s)
    }
}

/// Worst values over every RK stage of a run, plus the per-step series.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    pub series: DiagnosticsSeries,
    pub e0: f64,
    /// Largest `dE/dt` seen at any stage.
    pub max_dedt: f64,
    /// Largest conservation residual at any stage.
    pub max_cons_residual: f64,
    /// Largest flux magnitude at any stage.
    pub max_flux: f64,
    /// Smallest interface form (`min(P_b, P_c)`) at any stage.
    pub min_interface_form: f64,
    pub min_overlap_form: f64,
    pub max_ledger_residual: f64,
    pub max_e: f64,
    pub max_parasitic: f64,
    pub stages: usize,
}

impl Default for Monitor {
    fn default() -> Self {
        Self {
            series: DiagnosticsSeries::new(),
            e0: f64::NAN,
            max_dedt: f64::NEG_INFINITY,
            max_cons_residual: 0.0,
            max_flux: 0.0,
            min_interface_form: f64::INFINITY,
            min_overlap_form: f64::INFINITY,
            max_ledger_residual: 0.0,
            max_e: 0.0,
            max_parasitic: 0.0,
            stages: 0,
        }
    }
}

impl Monitor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one RK stage into the extremes; `stage == 0` samples also go
    /// into the series.
    pub fn observe<P: Diagnose + ?Sized>(&mut self, p: &P, info: StageInfo, s: &SimState, k: &SimState) {
        let r = p.record(s, k);
        self.stages += 1;
        if self.e0.is_nan() {
            self.e0 = r.e;
        }
        self.max_dedt = self.max_dedt.max(r.dedt);
        self.max_cons_residual = self.max_cons_residual.max(r.cons_residual);
        self.max_flux = self.max_flux.max(r.flux_scale());
        self.min_interface_form = self.min_interface_form.min(r.p_b.min(r.p_c));
        self.min_overlap_form = self.min_overlap_form.min(r.p_overlap);
        if let Some(l) = r.ledger_residual {
            self.max_ledger_residual = self.max_ledger_residual.max(l.abs());
        }
        if let Some((c, b)) = r.parasitic {
            self.max_parasitic = self.max_parasitic.max(c.abs()).max(b.abs());
        }
        self.max_e = self.max_e.max(r.e);
        if info.stage == 0 {
            // a zero-length final step would repeat the last time
            if self.series.last().is_none_or(|l| r.t > l.t) {
                self.series.push(r).expect("times increase");
            }
        }
    }
}

fn check_eta(eta: f64) -> Result<(), DiagError> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(DiagError::Eta(eta))
    }
}

fn dim_of(state: &SimState, g: &OversetGeometry1D) -> Result<usize, DiagError> {
    if state.u.len() != 2 || state.v.len() != 2 {
        return Err(DiagError::Shape("expected two u blocks and two v blocks".into()));
    }
    let n = g.block(crate::geometry::Block::U1).len();
    let m = state.u[0].len() / n;
    let ok = g
        .blocks()
        .iter()
        .zip(state.u.iter().chain(&state.v))
        .all(|(gr, q)| q.len() == gr.len() * m);
    if m == 0 || !ok {
        return Err(DiagError::Shape("block lengths do not match the grids".into()));
    }
    Ok(m)
}

fn blocks_of(state: &SimState) -> [&Vec<f64>; 4] {
    [&state.u[0], &state.u[1], &state.v[0], &state.v[1]]
}

/// `E = ‖u‖²_{Ωu} + ‖v‖²_{Ωv} − η‖u‖²_{Ω_O} − (1−η)‖v‖²_{Ω_O}`
pub fn composite_energy(state: &SimState, g: &OversetGeometry1D, eta: f64) -> Result<f64, DiagError> {
    check_eta(eta)?;
    let m = dim_of(state, g)?;
    let w = [1.0, 1.0 - eta, eta, 1.0];
    Ok(g.blocks()
        .iter()
        .zip(blocks_of(state))
        .zip(w)
        .map(|((gr, q), w)| w * gr.norm_sq(q, m))
        .sum())
}

/// `2⟨u,u̇⟩ + 2⟨v,v̇⟩ − 2η⟨u,u̇⟩_O − 2(1−η)⟨v,v̇⟩_O`
pub fn energy_rate(state: &SimState, rhs: &SimState, g: &OversetGeometry1D, eta: f64) -> Result<f64, DiagError> {
    check_eta(eta)?;
    let m = dim_of(state, g)?;
    dim_of(rhs, g)?;
    let w = [1.0, 1.0 - eta, eta, 1.0];
    Ok(g.blocks()
        .iter()
        .zip(blocks_of(state).iter().zip(blocks_of(rhs)))
        .zip(w)
        .map(|((gr, (q, k)), w)| 2.0 * w * gr.inner(q, k, m))
        .sum())
}

/// Componentwise `(residual, fluxIn, fluxOut)` where
/// `residual = d/dt[weighted total] − (fluxIn − fluxOut)`, `fluxIn = A⁻u(a)`
/// and `fluxOut = A⁺v(d)`.
pub fn conservation_residual(
    state: &SimState,
    rhs: &SimState,
    g: &OversetGeometry1D,
    eta: f64,
    system: &HyperbolicSystem,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), DiagError> {
    check_eta(eta)?;
    let m = dim_of(state, g)?;
    dim_of(rhs, g)?;
    let w = [1.0, 1.0 - eta, eta, 1.0];
    let mut rate = vec![0.0; m];
    for ((gr, k), w) in g.blocks().iter().zip(blocks_of(rhs)).zip(w) {
        for (acc, v) in rate.iter_mut().zip(gr.integrate(k, m)) {
            *acc += w * v;
        }
    }
    let u_a = &state.u[0][..m];
    let nv = state.v[1].len();
    let v_d = &state.v[1][nv - m..];
    let fin = system.minus().mul_vec(u_a);
    let fout = system.plus().mul_vec(v_d);
    let res = (0..m).map(|c| rate[c] - (fin[c] - fout[c])).collect();
    Ok((res, fin, fout))
}

/// `(termC, termB) = ({vᵀA⁺v − uᵀA⁺u} at c, {uᵀ|A⁻|u − vᵀ|A⁻|v} at b)`
pub fn parasitic_terms(
    state: &SimState,
    system: &HyperbolicSystem,
    g: &OversetGeometry1D,
) -> Result<(f64, f64), DiagError> {
    let m = dim_of(state, g)?;
    let last = |q: &Vec<f64>| q[q.len() - m..].to_vec();
    let u_b = last(&state.u[0]);
    let u_c = last(&state.u[1]);
    let v_b = state.v[0][..m].to_vec();
    let v_c = state.v[1][..m].to_vec();
    let plus = system.plus();
    let minus_abs = system.split().minus_abs();
    Ok((
        plus.quad_form(&v_c) - plus.quad_form(&u_c),
        minus_abs.quad_form(&u_b) - minus_abs.quad_form(&v_b),
    ))
}

/// The single-domain solution to compare against.
pub enum Reference<'a> {
    /// Closed-form `ω(x)`.
    Exact(&'a dyn Fn(f64) -> Vec<f64>),
    /// Values on a grid containing every node of both component grids.
    Grid { grid: &'a Grid1D, values: &'a [f64] },
}

/// `(‖u − ω‖_{Ωu}, ‖v − ω‖_{Ωv})`
pub fn equivalence_error(
    state: &SimState,
    g: &OversetGeometry1D,
    reference: &Reference<'_>,
) -> Result<(f64, f64), DiagError> {
    let m = dim_of(state, g)?;
    let mut err = [0.0, 0.0];
    for (b, (gr, q)) in g.blocks().iter().zip(blocks_of(state)).enumerate() {
        for i in 0..gr.len() {
            let x = gr.x(i);
            let w: Vec<f64> = match reference {
                Reference::Exact(f) => f(x),
                Reference::Grid { grid, values } => {
                    let k = grid.node_index(x).ok_or(DiagError::GridMismatch(x))?;
                    values[k * m..(k + 1) * m].to_vec()
                }
            };
            let d2: f64 = q[i * m..(i + 1) * m].iter().zip(&w).map(|(a, r)| (a - r).powi(2)).sum();
            err[usize::from(b >= 2)] += gr.weights()[i] * d2;
        }
    }
    Ok((err[0].sqrt(), err[1].sqrt()))
}

/// The 2D solution to compare against.
pub enum Reference2D<'a> {
    Exact(&'a dyn Fn(f64, f64) -> Vec<f64>),
    /// A single-domain state on the same `y` grid whose `x` nodes include
    /// every node of both component grids.
    Single { problem: &'a SingleDomain2D, state: &'a SimState },
}

/// `(‖u − ω‖, ‖v − ω‖)` summed over all rows.
pub fn equivalence_error_2d(
    p: &Problem2D,
    state: &SimState,
    reference: &Reference2D<'_>,
) -> Result<(f64, f64), DiagError> {
    let y = &p.geometry.y;
    match reference {
        Reference2D::Exact(f) => p.engine.equivalence(state, &mut |x, j| Ok(f(x, y.y(j)))),
        Reference2D::Single { problem, state: r } => {
            if problem.engine.ny() != y.len() {
                return Err(DiagError::Shape("reference has a different y grid".into()));
            }
            p.engine.equivalence(state, &mut |x, j| {
                let i = problem.grid.node_index(x).ok_or(DiagError::GridMismatch(x))?;
                Ok(problem.value(r, i, j).to_vec())
            })
        }
    }
}
