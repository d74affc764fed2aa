//! Grids, diagonal-norm SBP operators and overset layouts.
//!
//! A component grid is stored as two SBP blocks that share the node at the
//! interior interface (`u` on `[a,b] ∪ [b,c]`, `v` on `[b,c] ∪ [c,d]`). Each
//! block carries its own quadrature, so the overlap norm and the outer norm of
//! a component add up exactly to the norm of the whole component.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{what}: need at least {min} nodes for order {order}, got {got}")]
    TooFewNodes {
        what: String,
        min: usize,
        order: usize,
        got: usize,
    },
    #[error("interval [{lo}, {hi}] is empty or reversed")]
    BadInterval { lo: f64, hi: f64 },
    #[error("interval {name} of length {len} is not a whole number of steps h = {h}")]
    Misaligned { name: String, len: f64, h: f64 },
    #[error("points must satisfy {0}")]
    Ordering(String),
    #[error("unsupported SBP order {0} (use 2 or 4)")]
    Order(usize),
    #[error("target {x} lies outside the source grid [{lo}, {hi}]")]
    OutsideGrid { x: f64, lo: f64, hi: f64 },
    #[error("overlap point ({x}, {y}) is not a node shared by both grids")]
    NotSharedNode { x: f64, y: f64 },
    #[error("overlap point ({x}, {y}) listed twice")]
    DuplicatePoint { x: f64, y: f64 },
    #[error("invalid spacing {name} = {h}")]
    Spacing { name: String, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SbpOrder {
    Two,
    Four,
}

impl SbpOrder {
    pub fn from_int(p: usize) -> Result<Self, GeometryError> {
        match p {
            2 => Ok(Self::Two),
            4 => Ok(Self::Four),
            _ => Err(GeometryError::Order(p)),
        }
    }

    /// Interior accuracy order.
    pub fn p(self) -> usize {
        match self {
            Self::Two => 2,
            Self::Four => 4,
        }
    }

    pub fn min_nodes(self) -> usize {
        match self {
            Self::Two => 4,
            Self::Four => 8,
        }
    }

    fn closure(self) -> (&'static [f64], &'static [&'static [f64]]) {
        match self {
            Self::Two => (&H2, &D2_CLOSURE),
            Self::Four => (&H4, &D4_CLOSURE),
        }
    }

    fn interior(self) -> &'static [f64] {
        match self {
            Self::Two => &D2_INTERIOR,
            Self::Four => &D4_INTERIOR,
        }
    }
}

const H2: [f64; 1] = [0.5];
const D2_CLOSURE: [&[f64]; 1] = [&[-1.0, 1.0]];
const D2_INTERIOR: [f64; 3] = [-0.5, 0.0, 0.5];

const H4: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
const D4_CLOSURE: [&[f64]; 4] = [
    &[-24.0 / 17.0, 59.0 / 34.0, -4.0 / 17.0, -3.0 / 34.0],
    &[-0.5, 0.0, 0.5],
    &[4.0 / 43.0, -59.0 / 86.0, 0.0, 59.0 / 86.0, -4.0 / 43.0],
    &[3.0 / 98.0, 0.0, -59.0 / 98.0, 0.0, 32.0 / 49.0, -4.0 / 49.0],
];
const D4_INTERIOR: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];

/// Uniform grid on `[lo, hi]` with a diagonal-norm SBP first derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
    h: f64,
    order: SbpOrder,
    weights: Vec<f64>,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize, order: SbpOrder) -> Result<Self, GeometryError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::BadInterval { lo, hi });
        }
        if n < order.min_nodes() {
            return Err(GeometryError::TooFewNodes {
                what: format!("grid on [{lo}, {hi}]"),
                min: order.min_nodes(),
                order: order.p(),
                got: n,
            });
        }
        let h = (hi - lo) / (n - 1) as f64;
        let (hb, _) = order.closure();
        let mut weights = vec![h; n];
        for (k, w) in hb.iter().enumerate() {
            weights[k] = w * h;
            weights[n - 1 - k] = w * h;
        }
        Ok(Self {
            lo,
            hi,
            n,
            h,
            order,
            weights,
        })
    }

    /// Grid on `[lo, hi]` with spacing `h`, which must divide the length.
    pub fn with_spacing(
        name: &str,
        lo: f64,
        hi: f64,
        h: f64,
        order: SbpOrder,
    ) -> Result<Self, GeometryError> {
        let steps = aligned_steps(name, hi - lo, h)?;
        Self::new(lo, hi, steps + 1, order)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn order(&self) -> SbpOrder {
        self.order
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Diagonal of the norm matrix `H`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn last(&self) -> usize {
        self.n - 1
    }

    /// Row `i` of `D` (scaled by `h`) as `(first column, coefficients)`.
    pub fn stencil(&self, i: usize) -> (usize, Vec<f64>) {
        let (_, closure) = self.order.closure();
        let nb = closure.len();
        let n = self.n;
        if i < nb {
            (0, closure[i].to_vec())
        } else if i >= n - nb {
            let k = n - 1 - i;
            let row = closure[k];
            let start = n - row.len();
            (start, row.iter().rev().map(|c| -c).collect())
        } else {
            let c = self.order.interior();
            (i - c.len() / 2, c.to_vec())
        }
    }

    /// Dense `D`, row-major. For tests and small diagnostics.
    pub fn d_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let mut row = vec![0.0; self.n];
                let (s, c) = self.stencil(i);
                for (k, v) in c.iter().enumerate() {
                    row[s + k] = v / self.h;
                }
                row
            })
            .collect()
    }

    /// `out = (D ⊗ I_m) q` for `m` interleaved components per node.
    pub fn apply_d(&self, q: &[f64], m: usize, out: &mut [f64]) {
        debug_assert_eq!(q.len(), self.n * m);
        debug_assert_eq!(out.len(), self.n * m);
        let (_, closure) = self.order.closure();
        let nb = closure.len();
        let inv_h = 1.0 / self.h;
        let n = self.n;
        for (i, row) in closure.iter().enumerate() {
            for k in 0..m {
                let s: f64 = row.iter().enumerate().map(|(j, c)| c * q[j * m + k]).sum();
                out[i * m + k] = s * inv_h;
                let s: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * q[(n - 1 - j) * m + k])
                    .sum();
                out[(n - 1 - i) * m + k] = -s * inv_h;
            }
        }
        let c = self.order.interior();
        let half = c.len() / 2;
        for i in nb..(n - nb) {
            for k in 0..m {
                let mut s = 0.0;
                for (j, cj) in c.iter().enumerate() {
                    if *cj != 0.0 {
                        s += cj * q[(i + j - half) * m + k];
                    }
                }
                out[i * m + k] = s * inv_h;
            }
        }
    }

    /// `pᵀ (H ⊗ I_m) q`
    pub fn inner(&self, p: &[f64], q: &[f64], m: usize) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                w * p[i * m..(i + 1) * m]
                    .iter()
                    .zip(&q[i * m..(i + 1) * m])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn norm_sq(&self, q: &[f64], m: usize) -> f64 {
        self.inner(q, q, m)
    }

    /// Componentwise `1ᵀ H q`.
    pub fn integrate(&self, q: &[f64], m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for (i, w) in self.weights.iter().enumerate() {
            for k in 0..m {
                s[k] += w * q[i * m + k];
            }
        }
        s
    }

    /// Index of the node at `x`, if `x` is a node to within `1e-9 h`.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let r = (x - self.lo) / self.h;
        let i = r.round();
        if i < 0.0 || i > (self.n - 1) as f64 {
            return None;
        }
        let i = i as usize;
        ((self.x(i) - x).abs() <= 1e-9 * self.h).then_some(i)
    }
}

fn aligned_steps(name: &str, len: f64, h: f64) -> Result<usize, GeometryError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::Spacing {
            name: name.to_string(),
            h,
        });
    }
    let r = len / h;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r.max(1.0) {
        return Err(GeometryError::Misaligned {
            name: name.to_string(),
            len,
            h,
        });
    }
    Ok(k as usize)
}

/// Periodic grid on `[0, len)` with `n` distinct nodes and a central
/// difference of order 2 or 4. Its norm is `h I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    len: f64,
    n: usize,
    h: f64,
    order: SbpOrder,
}

impl PeriodicGrid {
    pub fn new(len: f64, n: usize, order: SbpOrder) -> Result<Self, GeometryError> {
        if !(len > 0.0) {
            return Err(GeometryError::BadInterval { lo: 0.0, hi: len });
        }
        let min = order.p() + 1;
        if n < min {
            return Err(GeometryError::TooFewNodes {
                what: "periodic grid".into(),
                min,
                order: order.p(),
                got: n,
            });
        }
        Ok(Self {
            len,
            n,
            h: len / n as f64,
            order,
        })
    }

    pub fn with_spacing(len: f64, h: f64, order: SbpOrder) -> Result<Self, GeometryError> {
        let n = aligned_steps("Ly", len, h)?;
        Self::new(len, n, order)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.len
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn weight(&self) -> f64 {
        self.h
    }

    /// Neighbour offsets and coefficients (scaled by `h`).
    pub fn stencil(&self) -> &'static [(isize, f64)] {
        match self.order {
            SbpOrder::Two => &[(-1, -0.5), (1, 0.5)],
            SbpOrder::Four => &[
                (-2, 1.0 / 12.0),
                (-1, -2.0 / 3.0),
                (1, 2.0 / 3.0),
                (2, -1.0 / 12.0),
            ],
        }
    }

    pub fn wrap(&self, j: usize, off: isize) -> usize {
        (j as isize + off).rem_euclid(self.n as isize) as usize
    }

    pub fn node_index(&self, y: f64) -> Option<usize> {
        let r = y / self.h;
        let j = r.round();
        if j < 0.0 || j >= self.n as f64 {
            return None;
        }
        ((j * self.h - y).abs() <= 1e-9 * self.h).then_some(j as usize)
    }
}

/// Which of the four SBP blocks of an overset line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// `u` outside the overlap.
    U1,
    /// `u` on the overlap.
    U2,
    /// `v` on the overlap.
    V2,
    /// `v` outside the overlap.
    V3,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::U1, Block::U2, Block::V2, Block::V3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One-dimensional overset layout: `Ωu = [a,c]`, `Ωv = [b,d]`, overlap `[b,c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OversetGeometry1D {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub order: SbpOrder,
    blocks: [Grid1D; 4],
}

impl OversetGeometry1D {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        h_u: f64,
        h_v: f64,
        order: SbpOrder,
    ) -> Result<Self, GeometryError> {
        if !(a < b && b < c && c < d) {
            return Err(GeometryError::Ordering(format!(
                "a < b < c < d (got {a}, {b}, {c}, {d})"
            )));
        }
        let blocks = [
            Grid1D::with_spacing("[a,b] on the u grid", a, b, h_u, order)?,
            Grid1D::with_spacing("[b,c] on the u grid", b, c, h_u, order)?,
            Grid1D::with_spacing("[b,c] on the v grid", b, c, h_v, order)?,
            Grid1D::with_spacing("[c,d] on the v grid", c, d, h_v, order)?,
        ];
        Ok(Self {
            a,
            b,
            c,
            d,
            order,
            blocks,
        })
    }

    pub fn block(&self, k: Block) -> &Grid1D {
        &self.blocks[k.index()]
    }

    pub fn blocks(&self) -> &[Grid1D; 4] {
        &self.blocks
    }

    pub fn h_u(&self) -> f64 {
        self.blocks[0].h()
    }

    pub fn h_v(&self) -> f64 {
        self.blocks[2].h()
    }

    pub fn h_min(&self) -> f64 {
        self.h_u().min(self.h_v())
    }

    /// Distinct nodes of the `u` grid on `[a,c]`.
    pub fn n_u(&self) -> usize {
        self.blocks[0].len() + self.blocks[1].len() - 1
    }

    pub fn n_v(&self) -> usize {
        self.blocks[2].len() + self.blocks[3].len() - 1
    }

    pub fn idx_u_b(&self) -> usize {
        self.blocks[0].last()
    }

    pub fn idx_u_c(&self) -> usize {
        self.n_u() - 1
    }

    pub fn idx_v_b(&self) -> usize {
        0
    }

    pub fn idx_v_c(&self) -> usize {
        self.blocks[2].last()
    }

    pub fn u_nodes(&self) -> Vec<f64> {
        let mut x = self.blocks[0].nodes();
        x.extend(self.blocks[1].nodes().into_iter().skip(1));
        x
    }

    pub fn v_nodes(&self) -> Vec<f64> {
        let mut x = self.blocks[2].nodes();
        x.extend(self.blocks[3].nodes().into_iter().skip(1));
        x
    }

    /// Nodes of the `u` grid lying in `[b,c]`.
    pub fn overlap_mask_u(&self) -> Vec<bool> {
        let ib = self.idx_u_b();
        (0..self.n_u()).map(|i| i >= ib).collect()
    }

    pub fn overlap_mask_v(&self) -> Vec<bool> {
        let ic = self.idx_v_c();
        (0..self.n_v()).map(|i| i <= ic).collect()
    }
}

/// Placement of interior overlap penalty points.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapPoints {
    None,
    /// `nx × ny` lattice spread over `(b,c) × [0, Ly)`, snapped to shared nodes.
    Uniform { nx: usize, ny: usize },
    Explicit(Vec<(f64, f64)>),
}

/// An overlap penalty point: node `iu` of block `U2`, node `iv` of block
/// `V2`, row `j` of the shared `y` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPoint {
    pub x: f64,
    pub y: f64,
    pub iu: usize,
    pub iv: usize,
    pub j: usize,
}

/// Channel `[a', d] × [0, Ly)`, periodic in `y`. `Ωu = [a', c]` has its
/// physical boundary on `x = a'`; `Ωv = [b, d]` (the `v` grid starts at `a`
/// with the columns left of `b` blanked); `Ω_O = [b, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OversetGeometry2D {
    pub a: f64,
    pub a_prime: f64,
    pub line: OversetGeometry1D,
    pub y: PeriodicGrid,
    pub points: Vec<OverlapPoint>,
}

impl OversetGeometry2D {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a_prime: f64,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        ly: f64,
        hx_u: f64,
        hx_v: f64,
        hy: f64,
        order: SbpOrder,
        points: &OverlapPoints,
    ) -> Result<Self, GeometryError> {
        if !(a <= a_prime && a_prime < b) {
            return Err(GeometryError::Ordering(format!(
                "a <= a' < b (got a = {a}, a' = {a_prime}, b = {b})"
            )));
        }
        aligned_steps("[a,b] on the v grid", b - a, hx_v).or_else(|e| {
            // a blanked v grid starting at a = b carries no columns
            if a == b { Ok(0) } else { Err(e) }
        })?;
        let line = OversetGeometry1D::new(a_prime, b, c, d, hx_u, hx_v, order)?;
        let y = PeriodicGrid::with_spacing(ly, hy, order)?;
        let mut g = Self {
            a,
            a_prime,
            line,
            y,
            points: Vec::new(),
        };
        g.points = g.place_points(points)?;
        Ok(g)
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn block(&self, k: Block) -> &Grid1D {
        self.line.block(k)
    }

    fn shared_point(&self, x: f64, y: f64) -> Result<OverlapPoint, GeometryError> {
        let u2 = self.line.block(Block::U2);
        let v2 = self.line.block(Block::V2);
        match (u2.node_index(x), v2.node_index(x), self.y.node_index(y)) {
            (Some(iu), Some(iv), Some(j)) => Ok(OverlapPoint {
                x: u2.x(iu),
                y: self.y.y(j),
                iu,
                iv,
                j,
            }),
            _ => Err(GeometryError::NotSharedNode { x, y }),
        }
    }

    fn place_points(&self, spec: &OverlapPoints) -> Result<Vec<OverlapPoint>, GeometryError> {
        let mut pts = Vec::new();
        match spec {
            OverlapPoints::None => {}
            OverlapPoints::Explicit(list) => {
                for &(x, y) in list {
                    pts.push(self.shared_point(x, y)?);
                }
            }
            OverlapPoints::Uniform { nx, ny } => {
                // lattice on nodes common to both overlap blocks
                let u2 = self.line.block(Block::U2);
                let v2 = self.line.block(Block::V2);
                let common: Vec<f64> = u2
                    .nodes()
                    .into_iter()
                    .filter(|&x| v2.node_index(x).is_some())
                    .collect();
                let (b, c) = (self.line.b, self.line.c);
                for i in 0..*nx {
                    let target = b + (i + 1) as f64 * (c - b) / (*nx + 1) as f64;
                    let x = nearest(&common, target);
                    for j in 0..*ny {
                        let ty = (j as f64 + 0.5) * self.y.length() / *ny as f64;
                        let jy = ((ty / self.y.h()).round() as usize).min(self.y.len() - 1);
                        pts.push(self.shared_point(x, self.y.y(jy))?);
                    }
                }
            }
        }
        for (k, p) in pts.iter().enumerate() {
            if pts[..k].iter().any(|q| q.iu == p.iu && q.j == p.j) {
                return Err(GeometryError::DuplicatePoint { x: p.x, y: p.y });
            }
        }
        Ok(pts)
    }
}

fn nearest(xs: &[f64], t: f64) -> f64 {
    xs.iter()
        .copied()
        .min_by(|p, q| (p - t).abs().total_cmp(&(q - t).abs()))
        .expect("non-empty node set")
}

/// Values of a grid function at arbitrary locations: exact copy at nodes,
/// barycentric Lagrange interpolation on the `p+1` nearest nodes elsewhere.
pub fn transfer(
    source: &Grid1D,
    values: &[f64],
    targets: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let width = source.order().p() + 1;
    targets
        .iter()
        .map(|&x| {
            let tol = 1e-12 * source.h();
            if x < source.lo() - tol || x > source.hi() + tol {
                return Err(GeometryError::OutsideGrid {
                    x,
                    lo: source.lo(),
                    hi: source.hi(),
                });
            }
            if let Some(i) = source.node_index(x) {
                return Ok(values[i]);
            }
            let r = (x - source.lo()) / source.h();
            let first = (r.floor() as isize - (width as isize - 1) / 2)
                .clamp(0, (source.len() - width) as isize) as usize;
            let nodes: Vec<f64> = (first..first + width).map(|i| source.x(i)).collect();
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, xk) in nodes.iter().enumerate() {
                let wk = 1.0
                    / nodes
                        .iter()
                        .enumerate()
                        .filter(|&(l, _)| l != k)
                        .map(|(_, xl)| xk - xl)
                        .product::<f64>();
                let t = wk / (x - xk);
                num += t * values[first + k];
                den += t;
            }
            Ok(num / den)
        })
        .collect()
}
