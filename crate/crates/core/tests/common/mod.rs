#![allow(dead_code)]

use overset_core::linalg::{eig_sym, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(r: &mut impl Rng, n: usize) -> SymMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = r.gen_range(-1.0..1.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::from_rows(&rows).unwrap()
}

/// Random symmetric matrix with eigenvalues of both signs, none near zero.
pub fn random_mixed_sym(r: &mut impl Rng, n: usize) -> SymMatrix {
    assert!(n >= 2);
    loop {
        let a = random_sym(r, n);
        let e = eig_sym(&a).unwrap();
        let small = e.values().iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        if e.max_value() > 0.0 && e.min_value() < 0.0 && small > 0.05 {
            return a;
        }
    }
}

/// `GGᵀ` with `G` an `n × k` random matrix.
pub fn random_psd(r: &mut impl Rng, n: usize, k: usize, scale: f64) -> SymMatrix {
    let g: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| r.gen_range(-1.0..1.0) * scale).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..k).map(|l| g[i][l] * g[j][l]).sum()).collect())
        .collect();
    SymMatrix::from_rows(&rows).unwrap()
}

pub fn random_vec(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `zᵀMz` in doubled precision (compensated dot product).
pub fn quad_form_accurate(m: &SymMatrix, z: &[f64]) -> f64 {
    let n = m.dim();
    let (mut s, mut c) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (p, ep) = two_prod(m.get(i, j), z[j]);
            let (p2, ep2) = two_prod(p, z[i]);
            let (s2, es) = two_sum(s, p2);
            s = s2;
            c += es + ep2 + ep * z[i];
        }
    }
    s + c
}

/// Smallest `zᵀMz / zᵀz` over random directions of the `2n × 2n` matrix `M`.
/// Half of the samples are fully random; the other half probe the near-null
/// `u = v` subspace along lines `z(ε) = (s + εw, s − εw)`, taking the `ε`
/// that minimises the (quadratic in `ε`) form on the line.
pub fn brute_force_min(m: &SymMatrix, samples: usize, r: &mut impl Rng) -> f64 {
    let n2 = m.dim();
    let n = n2 / 2;
    let line = |s: &[f64], w: &[f64], eps: f64| -> Vec<f64> {
        s.iter()
            .zip(w)
            .map(|(a, b)| a + eps * b)
            .chain(s.iter().zip(w).map(|(a, b)| a - eps * b))
            .collect()
    };
    let rayleigh = |z: &[f64]| quad_form_accurate(m, z) / z.iter().map(|v| v * v).sum::<f64>();
    let mut best = f64::INFINITY;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    for k in 0..samples {
        if k % 2 == 0 {
            let z = random_vec(r, n2);
            let q = rayleigh(&z);
            best = best.min(q);
            seeds.push((q, z));
            continue;
        }
        let s = random_vec(r, n);
        let w = random_vec(r, n);
        // q(ε) = q0 + 2εq1 + ε²q2, recovered from three evaluations
        let q0 = quad_form_accurate(m, &line(&s, &w, 0.0));
        let qp = quad_form_accurate(m, &line(&s, &w, 1.0));
        let qm = quad_form_accurate(m, &line(&s, &w, -1.0));
        let q2 = 0.5 * (qp + qm) - q0;
        let q1 = 0.25 * (qp - qm);
        let eps = if q2 > 0.0 { -q1 / q2 } else { 10f64.powf(r.gen_range(-9.0..0.0)) };
        best = best.min(rayleigh(&line(&s, &w, eps))).min(rayleigh(&line(&s, &w, 0.0)));
    }
    // polish the best random directions by gradient descent on the quotient
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step = 1.0 / m.frobenius_norm().max(1e-300);
    for (_, mut z) in seeds.into_iter().take(8) {
        for _ in 0..500 {
            let nn: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            z.iter_mut().for_each(|v| *v /= nn);
            let mz = m.mul_vec(&z);
            let rho: f64 = mz.iter().zip(&z).map(|(a, b)| a * b).sum();
            for (zi, mi) in z.iter_mut().zip(&mz) {
                *zi -= step * (mi - rho * *zi);
            }
        }
        best = best.min(rayleigh(&z));
    }
    best
}

pub fn gaussian(x0: f64, sigma: f64) -> impl Fn(f64) -> f64 {
    move |x| (-((x - x0) / sigma).powi(2)).exp()
}

/// Successive `log2(e_k / e_{k+1})`.
pub fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
