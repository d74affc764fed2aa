//! Shared assembly of the semi-discrete operators.
//!
//! Every problem is a set of x-direction SBP blocks (one row per `y` node in
//! 2D) joined by SAT terms. A SAT acting at node `i` of block `k` adds
//! `-(1/H_i) S (q_i - q_other)` to the right-hand side, where `S` has already
//! been divided by the block's energy weight.

use crate::coupling::{InterfaceCoupling, OverlapCoupling};
use crate::geometry::{Grid1D, OverlapPoint, PeriodicGrid};
use crate::linalg::{EigSign, HyperbolicSystem, SymMatrix};
use crate::solver1d::SimState;

/// (block, node) address on a row.
pub(crate) type Node = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SatKind {
    Physical,
    Internal,
    Overset,
}

#[derive(Debug, Clone)]
pub(crate) struct Sat {
    pub at: Node,
    pub other: Option<Node>,
    pub mat: SymMatrix,
    pub kind: SatKind,
}

/// Strong replacement of the incoming characteristic rates at a node.
#[derive(Debug, Clone)]
pub(crate) struct Injection {
    pub at: Node,
    pub other: Option<Node>,
    pub proj: SymMatrix,
}

#[derive(Debug, Clone)]
pub(crate) struct Interfaces {
    pub at_b: InterfaceCoupling,
    pub at_c: InterfaceCoupling,
}

#[derive(Debug, Clone)]
pub(crate) struct OverlapPenalty {
    pub coupling: OverlapCoupling,
    pub points: Vec<OverlapPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layout {
    /// Blocks `u1, u2 | v2, v3`.
    Overset,
    /// One block.
    Single,
}

pub(crate) const U_B_BLOCK: usize = 0;
pub(crate) const U_C_BLOCK: usize = 1;
pub(crate) const V_B_BLOCK: usize = 2;
pub(crate) const V_C_BLOCK: usize = 3;

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub sys: HyperbolicSystem,
    pub y: Option<(PeriodicGrid, SymMatrix)>,
    pub grids: Vec<Grid1D>,
    pub n_u: usize,
    pub layout: Layout,
    /// Weights of the composite energy (and of the conserved total).
    pub weights: Vec<f64>,
    pub sats: Vec<Sat>,
    pub injections: Vec<Injection>,
    pub interfaces: Option<Interfaces>,
    pub overlap: Option<OverlapPenalty>,
}

fn proj_onto(sys: &HyperbolicSystem, sign: EigSign) -> SymMatrix {
    let e = sys.eigen();
    e.spectral_map(|k, _| if e.sign(k) == sign { 1.0 } else { 0.0 })
}

impl Engine {
    pub fn m(&self) -> usize {
        self.sys.dim()
    }

    pub fn ny(&self) -> usize {
        self.y.as_ref().map_or(1, |(g, _)| g.len())
    }

    pub fn hy(&self) -> f64 {
        self.y.as_ref().map_or(1.0, |(g, _)| g.weight())
    }

    pub fn n_blocks(&self) -> usize {
        self.grids.len()
    }

    pub fn last(&self, blk: usize) -> usize {
        self.grids[blk].last()
    }

    /// Node addresses `(u, v)` at `x = b` and at `x = c`.
    pub fn interface_nodes(&self) -> [(Node, Node); 2] {
        [
            ((U_B_BLOCK, self.last(U_B_BLOCK)), (V_B_BLOCK, 0)),
            ((U_C_BLOCK, self.last(U_C_BLOCK)), (V_C_BLOCK, 0)),
        ]
    }

    pub fn left_boundary(&self) -> Node {
        (0, 0)
    }

    pub fn right_boundary(&self) -> Node {
        let b = self.n_blocks() - 1;
        (b, self.last(b))
    }

    /// Overset layout. `weights` are the composite-energy weights of the
    /// four blocks; `sat_weights` the weights the interface SATs are built
    /// for (they differ only in characteristic mode).
    pub fn overset(
        sys: HyperbolicSystem,
        y: Option<(PeriodicGrid, SymMatrix)>,
        grids: [Grid1D; 4],
        weights: [f64; 4],
        sat_weights: [f64; 4],
    ) -> Self {
        let mut e = Self {
            sys,
            y,
            grids: grids.to_vec(),
            n_u: 2,
            layout: Layout::Overset,
            weights: weights.to_vec(),
            sats: Vec::new(),
            injections: Vec::new(),
            interfaces: None,
            overlap: None,
        };
        e.add_internal(0, 1, sat_weights);
        e.add_internal(2, 3, sat_weights);
        e
    }

    pub fn single(sys: HyperbolicSystem, y: Option<(PeriodicGrid, SymMatrix)>, grid: Grid1D) -> Self {
        let mut e = Self {
            sys,
            y,
            grids: vec![grid],
            n_u: 1,
            layout: Layout::Single,
            weights: vec![1.0],
            sats: Vec::new(),
            injections: Vec::new(),
            interfaces: None,
            overlap: None,
        };
        e.add_physical(false);
        e
    }

    /// Upwind SAT pair between the right end of `l` and the left end of `r`,
    /// scaled by `min(w_l, w_r)` so the weighted total is conserved.
    fn add_internal(&mut self, l: usize, r: usize, w: [f64; 4]) {
        let g = w[l].min(w[r]);
        let minus_abs = self.sys.split().minus_abs().scaled(g / w[l]);
        let plus = self.sys.plus().scaled(g / w[r]);
        let nl = (l, self.last(l));
        let nr = (r, 0);
        self.push_sat(nl, Some(nr), minus_abs, SatKind::Internal);
        self.push_sat(nr, Some(nl), plus, SatKind::Internal);
    }

    pub fn push_sat(&mut self, at: Node, other: Option<Node>, mat: SymMatrix, kind: SatKind) {
        if mat.max_abs() > 0.0 {
            self.sats.push(Sat {
                at,
                other,
                mat,
                kind,
            });
        }
    }

    /// Trivial incoming-characteristic conditions at both ends of the layout.
    pub fn add_physical(&mut self, strong: bool) {
        let (l, r) = (self.left_boundary(), self.right_boundary());
        if strong {
            self.injections.push(Injection {
                at: l,
                other: None,
                proj: proj_onto(&self.sys, EigSign::Positive),
            });
            self.injections.push(Injection {
                at: r,
                other: None,
                proj: proj_onto(&self.sys, EigSign::Negative),
            });
        } else {
            let plus = self.sys.plus().clone();
            let minus_abs = self.sys.split().minus_abs();
            self.push_sat(l, None, plus, SatKind::Physical);
            self.push_sat(r, None, minus_abs, SatKind::Physical);
        }
    }

    /// Characteristic coupling: `u` at `c` takes its incoming (left-going)
    /// characteristics from `v`, `v` at `b` its right-going ones from `u`.
    pub fn add_characteristic(&mut self, strong: bool) {
        let [(u_b, _), (u_c, v_c)] = self.interface_nodes();
        let v_b = (V_B_BLOCK, 0);
        if strong {
            self.injections.push(Injection {
                at: u_c,
                other: Some(v_c),
                proj: proj_onto(&self.sys, EigSign::Negative),
            });
            self.injections.push(Injection {
                at: v_b,
                other: Some(u_b),
                proj: proj_onto(&self.sys, EigSign::Positive),
            });
        } else {
            let minus_abs = self.sys.split().minus_abs();
            let plus = self.sys.plus().clone();
            self.push_sat(u_c, Some(v_c), minus_abs, SatKind::Overset);
            self.push_sat(v_b, Some(u_b), plus, SatKind::Overset);
        }
    }

    pub fn add_penalty(&mut self, at_b: InterfaceCoupling, at_c: InterfaceCoupling) {
        let [(u_b, v_b), (u_c, v_c)] = self.interface_nodes();
        let w = self.weights.clone();
        self.push_sat(u_b, Some(v_b), at_b.sigma_u.scaled(1.0 / w[u_b.0]), SatKind::Overset);
        self.push_sat(v_b, Some(u_b), at_b.sigma_v.scaled(1.0 / w[v_b.0]), SatKind::Overset);
        self.push_sat(u_c, Some(v_c), at_c.sigma_u.scaled(1.0 / w[u_c.0]), SatKind::Overset);
        self.push_sat(v_c, Some(u_c), at_c.sigma_v.scaled(1.0 / w[v_c.0]), SatKind::Overset);
        self.interfaces = Some(Interfaces { at_b, at_c });
    }

    pub fn block<'s>(&self, s: &'s SimState, blk: usize) -> &'s [f64] {
        if blk < self.n_u {
            &s.u[blk]
        } else {
            &s.v[blk - self.n_u]
        }
    }

    fn block_mut<'s>(&self, s: &'s mut SimState, blk: usize) -> &'s mut Vec<f64> {
        if blk < self.n_u {
            &mut s.u[blk]
        } else {
            &mut s.v[blk - self.n_u]
        }
    }

    /// Offset of node `i`, row `j` of block `blk` in the flat block array.
    #[inline]
    pub fn offset(&self, blk: usize, i: usize, j: usize) -> usize {
        (j * self.grids[blk].len() + i) * self.m()
    }

    pub fn value<'s>(&self, s: &'s SimState, (blk, i): Node, j: usize) -> &'s [f64] {
        let o = self.offset(blk, i, j);
        &self.block(s, blk)[o..o + self.m()]
    }

    pub fn zero_state(&self) -> SimState {
        let m = self.m();
        let ny = self.ny();
        let sizes: Vec<usize> = self.grids.iter().map(|g| g.len() * ny * m).collect();
        SimState {
            u: sizes[..self.n_u].iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes[self.n_u..].iter().map(|&n| vec![0.0; n]).collect(),
            t: 0.0,
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: &dyn Fn(f64, f64) -> Vec<f64>) -> SimState {
        let mut s = self.zero_state();
        let m = self.m();
        for blk in 0..self.n_blocks() {
            let g = self.grids[blk].clone();
            let ny = self.ny();
            let y = self.y.as_ref().map(|(gy, _)| gy.clone());
            let out = self.block_mut(&mut s, blk);
            for j in 0..ny {
                let yj = y.as_ref().map_or(0.0, |gy| gy.y(j));
                for i in 0..g.len() {
                    let val = f(g.x(i), yj);
                    assert_eq!(val.len(), m, "initial condition has wrong dimension");
                    let o = (j * g.len() + i) * m;
                    out[o..o + m].copy_from_slice(&val);
                }
            }
        }
        s
    }

    pub fn rhs(&self, s: &SimState, out: &mut SimState) {
        let m = self.m();
        let ny = self.ny();
        let a = self.sys.matrix();
        let maxn = self.grids.iter().map(|g| g.len()).max().unwrap_or(0);
        let mut dq = vec![0.0; maxn * m];
        for blk in 0..self.n_blocks() {
            let g = &self.grids[blk];
            let len = g.len() * m;
            let q = self.block(s, blk);
            let o = self.block_mut(out, blk);
            for j in 0..ny {
                let row = &q[j * len..(j + 1) * len];
                g.apply_d(row, m, &mut dq[..len]);
                let orow = &mut o[j * len..(j + 1) * len];
                orow.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..g.len() {
                    a.mul_acc(-1.0, &dq[i * m..(i + 1) * m], &mut orow[i * m..(i + 1) * m]);
                }
            }
            if let Some((gy, a2)) = &self.y {
                let inv = 1.0 / gy.h();
                let mut tmp = vec![0.0; m];
                for j in 0..ny {
                    for i in 0..g.len() {
                        tmp.iter_mut().for_each(|v| *v = 0.0);
                        for &(off, c) in gy.stencil() {
                            let jj = gy.wrap(j, off);
                            let src = (jj * g.len() + i) * m;
                            for k in 0..m {
                                tmp[k] += c * inv * q[src + k];
                            }
                        }
                        let dst = (j * g.len() + i) * m;
                        a2.mul_acc(-1.0, &tmp, &mut o[dst..dst + m]);
                    }
                }
            }
        }

        let mut diff = vec![0.0; m];
        for j in 0..ny {
            for sat in &self.sats {
                let (blk, i) = sat.at;
                let q = self.value(s, sat.at, j);
                diff.copy_from_slice(q);
                if let Some(other) = sat.other {
                    for (d, r) in diff.iter_mut().zip(self.value(s, other, j)) {
                        *d -= r;
                    }
                }
                let inv_h = 1.0 / self.grids[blk].weights()[i];
                let off = self.offset(blk, i, j);
                let o = self.block_mut(out, blk);
                sat.mat.mul_acc(-inv_h, &diff, &mut o[off..off + m]);
            }
        }

        if let Some(ov) = &self.overlap {
            let mcount = ov.points.len() as f64;
            let hy = self.hy();
            let c = &ov.coupling;
            for p in &ov.points {
                let nu = (U_C_BLOCK, p.iu);
                let nv = (V_B_BLOCK, p.iv);
                let uval = self.value(s, nu, p.j).to_vec();
                let vval = self.value(s, nv, p.j).to_vec();
                for k in 0..m {
                    diff[k] = uval[k] - vval[k];
                }
                let su = 1.0 / (mcount * self.grids[U_C_BLOCK].weights()[p.iu] * hy);
                let off = self.offset(U_C_BLOCK, p.iu, p.j);
                c.sigma_um
                    .mul_acc(-su, &diff, &mut self.block_mut(out, U_C_BLOCK)[off..off + m]);
                let sv = 1.0 / (mcount * self.grids[V_B_BLOCK].weights()[p.iv] * hy);
                let off = self.offset(V_B_BLOCK, p.iv, p.j);
                c.sigma_vm
                    .mul_acc(sv, &diff, &mut self.block_mut(out, V_B_BLOCK)[off..off + m]);
            }
        }

        for j in 0..ny {
            for inj in &self.injections {
                let mut r = self.value(out, inj.at, j).to_vec();
                if let Some(other) = inj.other {
                    for (d, x) in r.iter_mut().zip(self.value(out, other, j)) {
                        *d -= x;
                    }
                }
                let off = self.offset(inj.at.0, inj.at.1, j);
                let o = self.block_mut(out, inj.at.0);
                inj.proj.mul_acc(-1.0, &r, &mut o[off..off + m]);
            }
        }
    }

    /// Largest stable RK4 step for the given CFL number, accounting for the
    /// transport speeds and the stiffness of every penalty.
    pub fn stable_dt(&self, cfl: f64) -> f64 {
        let hx = self.grids.iter().map(|g| g.h()).fold(f64::INFINITY, f64::min);
        let mut rate = self.sys.spectral_radius() / hx;
        if let Some((gy, a2)) = &self.y {
            rate += crate::linalg::eig_sym(a2)
                .map(|e| e.spectral_radius())
                .unwrap_or(0.0)
                / gy.h();
        }
        for sat in &self.sats {
            let w = self.grids[sat.at.0].weights()[sat.at.1];
            rate = rate.max(0.5 * mat_norm(&sat.mat) / w);
        }
        if let Some(ov) = &self.overlap {
            let mcount = ov.points.len() as f64;
            for p in &ov.points {
                let wu = self.grids[U_C_BLOCK].weights()[p.iu] * self.hy() * mcount;
                let wv = self.grids[V_B_BLOCK].weights()[p.iv] * self.hy() * mcount;
                rate = rate
                    .max(0.5 * mat_norm(&ov.coupling.sigma_um) / wu)
                    .max(0.5 * mat_norm(&ov.coupling.sigma_vm) / wv);
            }
        }
        if rate > 0.0 {
            cfl / rate
        } else {
            cfl * hx
        }
    }
}

fn mat_norm(m: &SymMatrix) -> f64 {
    crate::linalg::eig_sym(m)
        .map(|e| e.spectral_radius())
        .unwrap_or_else(|_| m.frobenius_norm())
}
