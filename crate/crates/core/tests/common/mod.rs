//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's geometry, so agreement is meaningful.

#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

pub fn gaussian(r: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(r)).collect()
}

pub fn random_unit(r: &mut Rng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian(r, d);
        if norm(&g) > 1e-6 {
            return unit(&g);
        }
    }
}

pub fn uniform(r: &mut Rng) -> f64 {
    r.random::<f64>()
}

pub fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Angle via atan2 of cross and dot, accurate near zero.
pub fn angle3(a: &[f64], b: &[f64]) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Angle between vectors of any dimension.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x + y) * (x + y)).sum();
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Inverse of a small square matrix (rows) by Gauss-Jordan with partial pivoting.
pub fn inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        m[col].iter_mut().for_each(|x| *x /= p);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Distance from `v` to the span of `others`, by normal equations.
pub fn residual_to_span(v: &[f64], others: &[Vec<f64>]) -> f64 {
    if others.is_empty() {
        return norm(v);
    }
    let k = others.len();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&others[i], &others[j])).collect())
        .collect();
    let rhs: Vec<f64> = others.iter().map(|o| dot(o, v)).collect();
    let inv = inverse(&gram).expect("independent span");
    let coef: Vec<f64> = inv.iter().map(|row| dot(row, &rhs)).collect();
    let mut r = v.to_vec();
    for (c, o) in coef.iter().zip(others) {
        for (ri, oi) in r.iter_mut().zip(o) {
            *ri -= c * oi;
        }
    }
    norm(&r)
}

/// `n` points spread evenly over the unit sphere in R^3.
pub fn fibonacci_sphere(n: usize) -> impl Iterator<Item = [f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n).map(move |i| {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let th = golden * i as f64;
        [r * th.cos(), r * th.sin(), z]
    })
}

/// Maximizes `min_k rays_k' x` over unit `x` in R^3 (the axis of the smallest
/// cap containing the rays). A sphere scan with `samples` points finds the
/// basin; the answer is then the best exact candidate among pair bisectors
/// and three-point equidistant directions, which must beat the scan.
pub fn max_min_direction(rays: &[Vec<f64>], samples: usize) -> (Vec<f64>, f64) {
    let f = |x: &[f64]| rays.iter().map(|r| dot(r, x)).fold(f64::INFINITY, f64::min);
    let scan_val = fibonacci_sphere(samples)
        .map(|p| f(&p))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<Vec<f64>> = rays.to_vec();
    let k = rays.len();
    for i in 0..k {
        for j in i + 1..k {
            let s: Vec<f64> = (0..3).map(|c| rays[i][c] + rays[j][c]).collect();
            if norm(&s) > 1e-12 {
                candidates.push(unit(&s));
            }
            for l in j + 1..k {
                if let Some(inv) = inverse(&[rays[i].clone(), rays[j].clone(), rays[l].clone()]) {
                    let c: Vec<f64> = inv.iter().map(|row| row.iter().sum()).collect();
                    if norm(&c) > 1e-12 {
                        let c = unit(&c);
                        candidates.push(c.iter().map(|x| -x).collect());
                        candidates.push(c);
                    }
                }
            }
        }
    }
    let (best, best_val) = candidates
        .into_iter()
        .map(|c| {
            let v = f(&c);
            (c, v)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one ray");
    assert!(
        best_val >= scan_val - 1e-12,
        "exact candidates lost to the scan: {best_val} < {scan_val}"
    );
    (best, best_val)
}

/// Maximizes `min_k normals_k' x` over unit `x` in the cone spanned by the
/// columns of `g` (rows are the generators), by sampling positive combinations.
pub fn sampled_inradius(
    gens: &[Vec<f64>],
    normals: &[Vec<f64>],
    r: &mut Rng,
    samples: usize,
) -> f64 {
    let d = gens[0].len();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mut x = vec![0.0; d];
        for g in gens {
            let w = -uniform(r).max(1e-300).ln();
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += w * gi;
            }
        }
        let x = unit(&x);
        let v = normals
            .iter()
            .map(|n| dot(n, &x))
            .fold(f64::INFINITY, f64::min);
        best = best.max(v);
    }
    best
}

/// Inward unit facet normals of the simplicial cone spanned by `gens` (square, independent).
pub fn facet_normals(gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = gens.len();
    // Columns of G are the generators; the rows of G^{-1} are the facet normals.
    let g_cols: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| gens[j][i]).collect())
        .collect();
    let inv = inverse(&g_cols).expect("independent generators");
    inv.iter().map(|row| unit(row)).collect()
}

/// Extreme power-iteration estimates `(lower bound on lambda_max, upper bound on lambda_min)`
/// of a symmetric positive definite matrix, from Rayleigh quotients.
pub fn rayleigh_extremes(a: &[Vec<f64>], iters: usize) -> (f64, f64) {
    let n = a.len();
    let mul = |m: &[Vec<f64>], v: &[f64]| -> Vec<f64> { m.iter().map(|row| dot(row, v)).collect() };
    let rq = |m: &[Vec<f64>], v: &[f64]| dot(v, &mul(m, v)) / dot(v, v);
    let mut v = vec![1.0; n];
    v[0] += 0.1;
    for _ in 0..iters {
        v = unit(&mul(a, &v));
    }
    let lmax = rq(a, &v);
    let inv = inverse(a).expect("positive definite");
    let mut w = vec![1.0; n];
    w[n - 1] += 0.1;
    for _ in 0..iters {
        w = unit(&mul(&inv, &w));
    }
    let lmin = rq(a, &w);
    (lmax, lmin)
}
