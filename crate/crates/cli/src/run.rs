//! Builds problems from a config, runs them and collects diagnostics and
//! verdicts.

use std::collections::BTreeMap;

use overset_core::coupling::{
    growth_witness, penalty_form_matrix, upwind_coupling, InterfaceCoupling, OverlapCoupling,
};
use overset_core::diagnostics::{
    equivalence_error, equivalence_error_2d, Diagnose, DiagnosticsRecord, Monitor, Reference, Reference2D,
};
use overset_core::geometry::{OverlapPoints, OversetGeometry1D, OversetGeometry2D, SbpOrder};
use overset_core::linalg::{eig_sym, normal_matrix, EigenDecomp, HyperbolicSystem, SymMatrix};
use overset_core::oracle::{exact_system_1d, ExactProfile, Shape};
use overset_core::solver1d::{run_simulation, CouplingMode, Problem1D, SemiDiscrete, SingleDomain1D};
use overset_core::solver2d::{Couplings2D, Problem2D, SingleDomain2D};
use overset_core::SimState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{matrix, CouplingConfig, ExperimentConfig, InitialConfig, Mode, StudySolver};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub status: Status,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl VerdictEntry {
    fn check(value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            status: if value <= threshold { Status::Pass } else { Status::Fail },
            value: Some(value),
            threshold: Some(threshold),
            detail: detail.into(),
        }
    }

    fn not_applicable(detail: impl Into<String>) -> Self {
        Self {
            status: Status::NotApplicable,
            value: None,
            threshold: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub h: f64,
    pub err_u: f64,
    pub err_v: f64,
    /// Observed order against the previous level, or `"floor"`.
    pub order: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub passed: bool,
    pub verdicts: BTreeMap<String, VerdictEntry>,
    pub stats: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub study: Option<Vec<StudyRow>>,
}

/// A CSV table as strings, in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub table: Option<Table>,
    pub summary: Summary,
}

fn summary(mode: Mode, seed: u64, verdicts: BTreeMap<String, VerdictEntry>, stats: BTreeMap<String, f64>) -> Summary {
    let passed = verdicts.values().all(|v| v.status != Status::Fail);
    Summary {
        mode: mode.name().into(),
        seed,
        passed,
        verdicts,
        stats,
        study: None,
    }
}

pub fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::CertifyCoupling => certify(cfg, seed),
        Mode::ConvergenceStudy => convergence_study(cfg, seed),
        Mode::Scalar1dChar | Mode::System1dChar | Mode::System1dPenalty => run_1d(cfg, seed),
        Mode::System2dBoundary | Mode::System2dOverlap => run_2d(cfg, seed),
        Mode::SingleDomainRef => run_single(cfg, seed),
    }
}

fn order_of(p: usize) -> Result<SbpOrder, CliError> {
    SbpOrder::from_int(p).map_err(|e| CliError::Config {
        path: "geometry.order".into(),
        message: e.to_string(),
    })
}

type Field = Box<dyn Fn(f64, f64) -> Vec<f64>>;

fn mode_weights(w: &Option<Vec<f64>>, n: usize) -> Vec<f64> {
    w.clone().unwrap_or_else(|| vec![1.0; n])
}

/// Initial data `ω₀(x, y)`; `lo, hi` bound the random centres.
fn initial_field(
    cfg: &ExperimentConfig,
    a: &SymMatrix,
    a2: Option<&SymMatrix>,
    (lo, hi): (f64, f64),
    seed: u64,
) -> Result<Field, CliError> {
    let n = a.dim();
    let ly = cfg.geometry.as_ref().map_or(1.0, |g| g.ly);
    Ok(match cfg.initial()?.clone() {
        InitialConfig::Gaussian {
            x0,
            sigma,
            mode_weights: w,
            y_modulation,
        } => {
            let modes = eig_sym(a)?;
            let prof = ExactProfile::new(Shape::Gaussian { x0, sigma }, mode_weights(&w, n));
            Box::new(move |x, y| {
                let m = 1.0 + y_modulation * (2.0 * std::f64::consts::PI * y / ly).sin();
                prof.eval(&modes, x).into_iter().map(|q| q * m).collect()
            })
        }
        InitialConfig::Planewave {
            k,
            wavelength,
            x0,
            sigma,
            mode_weights: w,
        } => {
            let zero = SymMatrix::zeros(n);
            let modes = eig_sym(&normal_matrix(a, a2.unwrap_or(&zero), k)?)?;
            let c = mode_weights(&w, n);
            let kw = 2.0 * std::f64::consts::PI / wavelength;
            Box::new(move |x, y| {
                let g = (kw * (k[0] * x + k[1] * y)).sin() * (-((x - x0) / sigma).powi(2)).exp();
                let wv: Vec<f64> = c.iter().map(|ci| ci * g).collect();
                modes.from_characteristic(&wv)
            })
        }
        InitialConfig::Random { terms } => {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let len = hi - lo;
            let t: Vec<(f64, f64, Vec<f64>)> = (0..terms)
                .map(|_| {
                    let x0 = r.gen_range(lo + 0.2 * len..hi - 0.2 * len);
                    let s = r.gen_range(0.04 * len..0.08 * len);
                    let v = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
                    (x0, s, v)
                })
                .collect();
            Box::new(move |x, _| {
                let mut q = vec![0.0; n];
                for (x0, s, v) in &t {
                    let g = (-((x - x0) / s).powi(2)).exp();
                    q.iter_mut().zip(v).for_each(|(qi, vi)| *qi += vi * g);
                }
                q
            })
        }
    })
}

fn interface_couplings(cfg: &ExperimentConfig, a_b: &SymMatrix, beta_b: f64, a: &SymMatrix) -> Result<(InterfaceCoupling, InterfaceCoupling), CliError> {
    let eta = cfg.eta;
    Ok(match &cfg.coupling {
        CouplingConfig::Named(_) => (upwind_coupling(a_b, beta_b)?, upwind_coupling(a, 1.0 - eta)?),
        CouplingConfig::Matrices { b, c } => (
            InterfaceCoupling::new(
                a_b.clone(),
                beta_b,
                matrix("coupling.b.sigma_u", &b.sigma_u)?,
                matrix("coupling.b.sigma_v", &b.sigma_v)?,
            )?,
            InterfaceCoupling::new(
                a.clone(),
                1.0 - eta,
                matrix("coupling.c.sigma_u", &c.sigma_u)?,
                matrix("coupling.c.sigma_v", &c.sigma_v)?,
            )?,
        ),
    })
}

type ErrFn<'a> = dyn FnMut(usize, &SimState) -> Result<Option<(f64, f64)>, CliError> + 'a;

struct RunOutput {
    mon: Monitor,
    errs: Vec<Option<(f64, f64)>>,
    dt: f64,
    final_state: SimState,
}

/// Runs to `t_end` with step `dt`, sampling the reference error at every
/// step start and at the end.
fn drive<P: SemiDiscrete + Diagnose>(p: &P, s0: SimState, t_end: f64, dt: f64, errf: &mut ErrFn<'_>) -> Result<RunOutput, CliError> {
    let mut mon = Monitor::new();
    let mut errs = Vec::new();
    let mut failure = None;
    let final_state = run_simulation(p, s0, t_end, dt, |info, s, k| {
        mon.observe(p, info, s, k);
        if info.stage == 0 && failure.is_none() {
            match errf(info.step, s) {
                Ok(e) => errs.push(e),
                Err(e) => failure = Some(e),
            }
        }
    })
    .map_err(CliError::from_solver)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunOutput {
        mon,
        errs,
        dt,
        final_state,
    })
}

/// Shortest round-trip text; scientific outside `[1e-4, 1e6)`.
fn fmt(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn diagnostics_table(records: &[DiagnosticsRecord], errs: &[Option<(f64, f64)>], m: usize) -> Table {
    let mut header: Vec<String> = [
        "t", "E", "dEdt", "normU", "normV", "normU_O", "normV_O", "P_b", "P_c", "P_overlap", "consResidual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=m).map(|k| format!("fluxIn_{k}")));
    header.extend((1..=m).map(|k| format!("fluxOut_{k}")));
    header.push("errU".into());
    header.push("errV".into());
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<String> = [
                r.t, r.e, r.dedt, r.norm_u, r.norm_v, r.norm_u_o, r.norm_v_o, r.p_b, r.p_c, r.p_overlap, r.cons_residual,
            ]
            .iter()
            .map(|&x| fmt(x))
            .collect();
            row.extend(r.flux_in.iter().map(|&x| fmt(x)));
            row.extend(r.flux_out.iter().map(|&x| fmt(x)));
            match errs.get(i).copied().flatten() {
                Some((u, v)) => {
                    row.push(fmt(u));
                    row.push(fmt(v));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
            row
        })
        .collect();
    Table { header, rows }
}

fn common_stats(out: &RunOutput) -> BTreeMap<String, f64> {
    let mon = &out.mon;
    let mut s = BTreeMap::new();
    let recs = mon.series.records();
    s.insert("steps".into(), recs.len().saturating_sub(1) as f64);
    s.insert("dt".into(), out.dt);
    s.insert("E0".into(), mon.e0);
    s.insert("E_final".into(), recs.last().map_or(f64::NAN, |r| r.e));
    let max_e = recs.iter().map(|r| r.e).fold(f64::NEG_INFINITY, f64::max);
    s.insert("max_E_ratio".into(), if mon.e0 > 0.0 { max_e / mon.e0 } else { 1.0 });
    s.insert("max_dEdt".into(), mon.max_dedt);
    s.insert("max_cons_residual".into(), mon.max_cons_residual);
    s.insert("max_flux".into(), mon.max_flux);
    if mon.max_parasitic > 0.0 {
        s.insert("max_parasitic".into(), mon.max_parasitic);
    }
    if let Some(Some((u, v))) = out.errs.last() {
        s.insert("errU_final".into(), *u);
        s.insert("errV_final".into(), *v);
    }
    s
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

/// Allowed relative growth of the stepped energy `E(t_n)`.
const DISCRETE_GROWTH: f64 = 1e-6;

fn penalty_verdicts(cfg: &ExperimentConfig, mon: &Monitor, default_tol: f64) -> BTreeMap<String, VerdictEntry> {
    let t = &cfg.thresholds;
    let mut v = BTreeMap::new();
    let mut energy = VerdictEntry::check(
        rel(mon.max_dedt, mon.e0),
        t.energy_rate.unwrap_or(default_tol),
        "max over RK stages of dE/dt / E(0)",
    );
    // a stable semi-discretisation can still be integrated with too large a step
    let growth = mon.series.records().iter().map(|r| r.e).fold(f64::NEG_INFINITY, f64::max);
    if mon.e0 > 0.0 && growth > (1.0 + DISCRETE_GROWTH) * mon.e0 {
        energy.status = Status::Fail;
        energy.detail = format!("E(t_n) reached {:e} E(0): time step too large", growth / mon.e0);
    }
    v.insert("energy_bounded".into(), energy);
    v.insert(
        "conservative".into(),
        VerdictEntry::check(
            rel(mon.max_cons_residual, mon.max_flux.max(mon.e0)),
            t.conservation.unwrap_or(default_tol),
            "max over RK stages of |d/dt total - (fluxIn - fluxOut)| / max(flux, E(0))",
        ),
    );
    v.insert(
        "equivalence_order".into(),
        VerdictEntry::not_applicable("single run; use convergence-study"),
    );
    v
}

fn run_1d(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    let gc = cfg.geometry()?;
    let a = cfg.system_matrix()?;
    let m = a.dim();
    let sys = HyperbolicSystem::new(a.clone())?;
    let geom = OversetGeometry1D::new(gc.a, gc.b, gc.c, gc.d, gc.hu, gc.hv, order_of(gc.order)?)?;
    let mut field = initial_field(cfg, &a, None, (gc.a, gc.d), seed)?;
    let p = match cfg.mode {
        Mode::System1dPenalty => {
            let (mut at_b, at_c) = interface_couplings(cfg, &a, cfg.eta, &a)?;
            let mut allow = false;
            if let Some(demo) = &cfg.negative_demo {
                let shift = SymMatrix::identity(m).scaled(demo.kappa);
                at_b = at_b
                    .with_sigma_u(&at_b.sigma_u - &shift)?
                    .with_sigma_v(&at_b.sigma_v - &shift)?;
                allow = true;
                if let Some((_, wu, wv)) = growth_witness(&at_b)? {
                    let (b, width) = (gc.b, demo.width);
                    field = Box::new(move |x, _| {
                        // u and v data differ: tagged by which side of b we evaluate
                        let g = (-((x - b) / width).powi(2)).exp();
                        wu.iter().chain(&wv).map(|c| c * g).collect()
                    });
                }
            }
            Problem1D::new(
                sys.clone(),
                geom.clone(),
                CouplingMode::Penalty {
                    at_b,
                    at_c,
                    eta: cfg.eta,
                },
                allow,
            )?
        }
        _ => Problem1D::new(
            sys.clone(),
            geom.clone(),
            CouplingMode::Characteristic { strong: cfg.strong },
            false,
        )?,
    };

    let s0 = if cfg.negative_demo.is_some() && field(gc.b, 0.0).len() == 2 * m {
        // witness data: first half for u, second half for v
        let su = p.initial_state(&|x| field(x, 0.0)[..m].to_vec());
        let sv = p.initial_state(&|x| field(x, 0.0)[m..].to_vec());
        SimState { u: su.u, v: sv.v, t: 0.0 }
    } else {
        p.initial_state(&|x| field(x, 0.0))
    };

    let modes = eig_sym(&a)?;
    let w0: Box<dyn Fn(f64) -> Vec<f64>> = if cfg.negative_demo.is_some() {
        Box::new(|_| Vec::new())
    } else {
        Box::new(move |x| field(x, 0.0))
    };
    let domain = (gc.a, gc.d);
    let has_reference = cfg.negative_demo.is_none();
    let mut errf = |_: usize, s: &SimState| -> Result<Option<(f64, f64)>, CliError> {
        if !has_reference {
            return Ok(None);
        }
        let exact = |x: f64| exact_system_1d(x, s.t, &modes, domain, &*w0);
        Ok(Some(equivalence_error(s, &geom, &Reference::Exact(&exact))?))
    };
    let dt = p.stable_dt(cfg.cfl);
    let out = drive(&p, s0, cfg.t_end, dt, &mut errf)?;
    let mut stats = common_stats(&out);
    let verdicts = match cfg.mode {
        Mode::System1dPenalty => {
            stats.insert("max_ledger_residual".into(), out.mon.max_ledger_residual);
            penalty_verdicts(cfg, &out.mon, 1e-11)
        }
        _ => characteristic_verdicts(cfg, &out.mon),
    };
    let _ = out.final_state;
    Ok(Artifacts {
        table: Some(diagnostics_table(out.mon.series.records(), &out.errs, m)),
        summary: summary(cfg.mode, seed, verdicts, stats),
    })
}

/// `max(‖u(t)‖², ‖v(t)‖²) ≤ ‖ω₀‖²` at every step.
fn characteristic_verdicts(cfg: &ExperimentConfig, mon: &Monitor) -> BTreeMap<String, VerdictEntry> {
    let recs = mon.series.records();
    let r0 = &recs[0];
    let omega0 = r0.norm_u - r0.norm_u_o + r0.norm_v;
    let worst = recs
        .iter()
        .map(|r| rel(r.norm_u.max(r.norm_v), omega0) - if omega0 > 0.0 { 1.0 } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut v = BTreeMap::new();
    v.insert(
        "energy_bounded".into(),
        VerdictEntry::check(
            worst,
            cfg.thresholds.energy_bound.unwrap_or(1e-9),
            "max over steps of max(|u|^2, |v|^2) / |omega0|^2 - 1",
        ),
    );
    v.insert(
        "conservative".into(),
        VerdictEntry::not_applicable("characteristic coupling has no discrete conservation identity"),
    );
    v.insert(
        "equivalence_order".into(),
        VerdictEntry::not_applicable("single run; use convergence-study"),
    );
    v
}

fn geometry_2d(cfg: &ExperimentConfig) -> Result<OversetGeometry2D, CliError> {
    let gc = cfg.geometry()?;
    let points = match (&cfg.mode, &cfg.overlap) {
        (Mode::System2dOverlap, Some(o)) => match &o.points {
            Some(list) => OverlapPoints::Explicit(list.iter().map(|p| (p[0], p[1])).collect()),
            None => OverlapPoints::Uniform { nx: o.nx, ny: o.ny },
        },
        _ => OverlapPoints::None,
    };
    Ok(OversetGeometry2D::new(
        gc.a_prime.unwrap_or(gc.a),
        gc.a,
        gc.b,
        gc.c,
        gc.d,
        gc.ly,
        gc.hu,
        gc.hv,
        gc.hy.unwrap_or(gc.hu),
        order_of(gc.order)?,
        &points,
    )?)
}

fn run_2d(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    let a1 = cfg.system_matrix()?;
    let a2 = cfg.a2_matrix()?.expect("validated");
    let m = a1.dim();
    let geom = geometry_2d(cfg)?;
    let field = initial_field(cfg, &a1, Some(&a2), (geom.line.a, geom.line.d), seed)?;
    let (at_b, at_c) = interface_couplings(cfg, &-&a1, -cfg.eta, &a1)?;
    let mut couplings = Couplings2D {
        at_b,
        at_c,
        overlap: None,
        eta: cfg.eta,
    };
    if let (Mode::System2dOverlap, Some(o)) = (cfg.mode, &cfg.overlap) {
        couplings = couplings.with_overlap(OverlapCoupling::scaled_identity(m, cfg.eta, o.sigma)?);
    }
    let sys = HyperbolicSystem::new(a1.clone())?;
    let p = Problem2D::new(sys.clone(), a2.clone(), geom.clone(), couplings, false)?;
    let single = SingleDomain2D::for_geometry(sys, a2, &geom)?;
    let dt = p.stable_dt(cfg.cfl).min(single.stable_dt(cfg.cfl));

    let mut snaps = Vec::new();
    run_simulation(&single, single.initial_state(&*field), cfg.t_end, dt, |info, s, _| {
        if info.stage == 0 {
            snaps.push(s.clone());
        }
    })
    .map_err(CliError::from_solver)?;
    let mut errf = |step: usize, s: &SimState| -> Result<Option<(f64, f64)>, CliError> {
        Ok(Some(equivalence_error_2d(
            &p,
            s,
            &Reference2D::Single {
                problem: &single,
                state: &snaps[step],
            },
        )?))
    };
    let out = drive(&p, p.initial_state(&*field), cfg.t_end, dt, &mut errf)?;
    let mut stats = common_stats(&out);
    stats.insert("max_ledger_residual".into(), out.mon.max_ledger_residual);
    if p.has_overlap_points() {
        stats.insert("overlap_points".into(), geom.points.len() as f64);
        stats.insert("min_P_overlap".into(), out.mon.min_overlap_form);
    }
    let verdicts = penalty_verdicts(cfg, &out.mon, 1e-10);
    Ok(Artifacts {
        table: Some(diagnostics_table(out.mon.series.records(), &out.errs, m)),
        summary: summary(cfg.mode, seed, verdicts, stats),
    })
}

fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    let gc = cfg.geometry()?;
    let a = cfg.system_matrix()?;
    let m = a.dim();
    let sys = HyperbolicSystem::new(a.clone())?;
    let (out, tol) = if let Some(a2) = cfg.a2_matrix()? {
        let geom = geometry_2d(cfg)?;
        let field = initial_field(cfg, &a, Some(&a2), (geom.line.a, geom.line.d), seed)?;
        let single = SingleDomain2D::for_geometry(sys, a2, &geom)?;
        let dt = single.stable_dt(cfg.cfl);
        (drive(&single, single.initial_state(&*field), cfg.t_end, dt, &mut |_, _| Ok(None))?, 1e-10)
    } else {
        let geom = OversetGeometry1D::new(gc.a, gc.b, gc.c, gc.d, gc.hu, gc.hv, order_of(gc.order)?)?;
        let field = initial_field(cfg, &a, None, (gc.a, gc.d), seed)?;
        let single = SingleDomain1D::for_geometry(sys, &geom)?;
        let modes = eig_sym(&a)?;
        let grid = single.grid.clone();
        let w0 = |x: f64| field(x, 0.0);
        let mut errf = |_: usize, s: &SimState| -> Result<Option<(f64, f64)>, CliError> {
            let e2: f64 = (0..grid.len())
                .map(|i| {
                    let w = exact_system_1d(grid.x(i), s.t, &modes, (gc.a, gc.d), &w0);
                    let q = &s.u[0][i * m..(i + 1) * m];
                    grid.weights()[i] * q.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum();
            Ok(Some((e2.sqrt(), 0.0)))
        };
        let dt = single.stable_dt(cfg.cfl);
        (drive(&single, single.initial_state(&|x| field(x, 0.0)), cfg.t_end, dt, &mut errf)?, 1e-11)
    };
    let stats = common_stats(&out);
    let verdicts = penalty_verdicts(cfg, &out.mon, tol);
    Ok(Artifacts {
        table: Some(diagnostics_table(out.mon.series.records(), &out.errs, m)),
        summary: summary(cfg.mode, seed, verdicts, stats),
    })
}

fn certify(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    let c = cfg.certify.as_ref().expect("validated");
    let a_n = matrix("certify.a_n", &c.a_n)?;
    let coupling = match (&c.sigma_u, &c.sigma_v) {
        (Some(u), Some(v)) => InterfaceCoupling::new(
            a_n,
            c.beta,
            matrix("certify.sigma_u", u)?,
            matrix("certify.sigma_v", v)?,
        )?,
        _ => upwind_coupling(&a_n, c.beta)?,
    };
    let mut v = BTreeMap::new();
    let mut stats = BTreeMap::new();
    let min_eig = eig_sym(&penalty_form_matrix(&coupling))?.min_value();
    stats.insert("min_eig_M".into(), min_eig);
    v.insert(
        "certified".into(),
        VerdictEntry {
            status: if coupling.certified() { Status::Pass } else { Status::Fail },
            value: Some(min_eig),
            threshold: None,
            detail: coupling.verdict.reason(),
        },
    );
    Ok(Artifacts {
        table: None,
        summary: summary(cfg.mode, seed, v, stats),
    })
}

/// Default smallest acceptable order: `p − ½` for the second-order
/// operator; the fourth-order operator has second-order closures and a
/// global order of 3.
fn default_min_order(order: SbpOrder) -> f64 {
    match order {
        SbpOrder::Two => 1.5,
        SbpOrder::Four => 3.0,
    }
}

fn level_error(
    cfg: &ExperimentConfig,
    solver: StudySolver,
    h: f64,
    seed: u64,
) -> Result<(f64, f64), CliError> {
    let gc = cfg.geometry()?;
    let a = cfg.system_matrix()?;
    let hv = h * gc.hv / gc.hu;
    let order = order_of(gc.order)?;
    let geom = OversetGeometry1D::new(gc.a, gc.b, gc.c, gc.d, h, hv, order)?;
    let field = initial_field(cfg, &a, None, (gc.a, gc.d), seed)?;
    let w0 = |x: f64| field(x, 0.0);
    let modes: EigenDecomp = eig_sym(&a)?;
    let domain = (gc.a, gc.d);
    let exact = |x: f64| exact_system_1d(x, cfg.t_end, &modes, domain, &w0);
    let sys = HyperbolicSystem::new(a.clone())?;
    let mode = match solver {
        StudySolver::System1dPenalty => CouplingMode::Penalty {
            at_b: upwind_coupling(&a, cfg.eta)?,
            at_c: upwind_coupling(&a, 1.0 - cfg.eta)?,
            eta: cfg.eta,
        },
        _ => CouplingMode::Characteristic { strong: cfg.strong },
    };
    let mode = match (&cfg.coupling, mode) {
        (CouplingConfig::Matrices { .. }, CouplingMode::Penalty { eta, .. }) => {
            let (at_b, at_c) = interface_couplings(cfg, &a, cfg.eta, &a)?;
            CouplingMode::Penalty { at_b, at_c, eta }
        }
        (_, m) => m,
    };
    let p = Problem1D::new(sys, geom.clone(), mode, false)?;
    let s = if solver == StudySolver::Exact {
        let mut s = p.initial_state(&exact);
        s.t = cfg.t_end;
        s
    } else {
        run_simulation(&p, p.initial_state(&w0), cfg.t_end, p.stable_dt(cfg.cfl), |_, _, _| {})
            .map_err(CliError::from_solver)?
    };
    Ok(equivalence_error(&s, &geom, &Reference::Exact(&exact))?)
}

/// Errors against the exact solution over the levels, with successive
/// observed orders `log(e_k/e_{k+1}) / log(h_k/h_{k+1})`.
pub fn convergence_study(cfg: &ExperimentConfig, seed: u64) -> Result<Artifacts, CliError> {
    let study = cfg.study.as_ref().expect("validated");
    if study.levels.len() < 3 {
        return Err(CliError::Config {
            path: "study.levels".into(),
            message: "a convergence study needs at least 3 levels".into(),
        });
    }
    let order = order_of(cfg.geometry()?.order)?;
    let floor = cfg.thresholds.floor.unwrap_or(1e-12);
    let min_order = cfg.thresholds.min_order.unwrap_or(default_min_order(order));
    let mut rows: Vec<StudyRow> = Vec::new();
    for &h in &study.levels {
        let (eu, ev) = level_error(cfg, study.solver, h, seed)?;
        let order = rows.last().map(|prev| {
            let (e0, e1) = (prev.err_u + prev.err_v, eu + ev);
            if e0 <= floor || e1 <= floor {
                "floor".to_string()
            } else {
                format!("{:.4}", (e0 / e1).ln() / (prev.h / h).ln())
            }
        });
        rows.push(StudyRow {
            h,
            err_u: eu,
            err_v: ev,
            order,
        });
    }
    let numeric: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.order.as_deref().and_then(|o| o.parse().ok()))
        .collect();
    let all_floor = numeric.is_empty();
    let worst = numeric.iter().copied().fold(f64::INFINITY, f64::min);
    let mut v = BTreeMap::new();
    v.insert(
        "equivalence_order".into(),
        VerdictEntry {
            status: if all_floor || worst >= min_order { Status::Pass } else { Status::Fail },
            value: (!all_floor).then_some(worst),
            threshold: Some(min_order),
            detail: if all_floor {
                "errors at the rounding floor".into()
            } else {
                "smallest observed order".into()
            },
        },
    );
    v.insert("energy_bounded".into(), VerdictEntry::not_applicable("convergence study"));
    v.insert("conservative".into(), VerdictEntry::not_applicable("convergence study"));
    let table = Table {
        header: ["h", "errU", "errV", "err", "order"].iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.h),
                    fmt(r.err_u),
                    fmt(r.err_v),
                    fmt(r.err_u + r.err_v),
                    r.order.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    };
    let mut s = summary(cfg.mode, seed, v, BTreeMap::new());
    s.study = Some(rows);
    Ok(Artifacts {
        table: Some(table),
        summary: s,
    })
}
