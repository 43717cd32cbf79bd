//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vcell_core::allocator::CellProblem;
use vcell_core::channel::{Point, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `h[u][k]` with i.i.d. CN(0,1) entries.
pub fn random_channels(rng: &mut impl Rng, users: usize, bands: usize, rx: usize) -> Vec<Vec<Vec<C64>>> {
    (0..users)
        .map(|_| (0..bands).map(|_| (0..rx).map(|_| cn(rng)).collect()).collect())
        .collect()
}

/// Random white-noise cell problem with unit-order channels and budgets.
pub fn random_problem(rng: &mut impl Rng, users: usize, bands: usize, rx: usize) -> CellProblem {
    let h = random_channels(rng, users, bands, rx);
    let noise: Vec<f64> = (0..bands).map(|_| rng.random_range(0.2..2.0)).collect();
    let widths: Vec<f64> = (0..bands).map(|_| rng.random_range(0.5..2.0)).collect();
    let budgets: Vec<f64> = (0..users).map(|_| rng.random_range(0.1..10.0)).collect();
    CellProblem::with_white_noise(h, rx, &noise, widths, budgets).unwrap()
}

/// `N_k + Σ_u p_{u,k} h h†` built entry by entry.
pub fn covariance(prob: &CellProblem, band: usize, p: &[Vec<f64>]) -> DMatrix<C64> {
    let n = prob.num_rx();
    let mut s = prob.noise_cov(band).clone();
    for (u, row) in p.iter().enumerate() {
        let h = prob.h(u, band);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += h[i] * h[j].conj() * row[band];
            }
        }
    }
    s
}

/// Determinant of a 2×2 Hermitian matrix by cofactor expansion.
pub fn det2(m: &DMatrix<C64>) -> f64 {
    assert_eq!(m.shape(), (2, 2));
    (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
}

/// Inverse of a 2×2 matrix by the adjugate formula.
pub fn inv2(m: &DMatrix<C64>) -> DMatrix<C64> {
    let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    DMatrix::from_row_slice(2, 2, &[m[(1, 1)] / d, -m[(0, 1)] / d, -m[(1, 0)] / d, m[(0, 0)] / d])
}

/// Sum capacity of a two-receiver problem via cofactor determinants.
pub fn objective2(prob: &CellProblem, p: &[Vec<f64>]) -> f64 {
    (0..prob.num_bands())
        .map(|k| {
            let w = prob.band_widths()[k];
            w * (det2(&covariance(prob, k, p)) / det2(prob.noise_cov(k))).log2()
        })
        .sum()
}

/// `W_k h† Σ⁻¹ h / ln 2`: the partial derivative of the objective in `p_{u,k}`,
/// with Σ the full covariance inverted by LU.
pub fn marginal(prob: &CellProblem, user: usize, band: usize, p: &[Vec<f64>]) -> f64 {
    let inv = covariance(prob, band, p).try_inverse().expect("covariance is invertible");
    let h = prob.h(user, band);
    let q = (h.adjoint() * inv * h)[(0, 0)].re;
    prob.band_widths()[band] * q / std::f64::consts::LN_2
}

pub struct KktReport {
    /// Largest relative spread of active-band marginals around their common level.
    pub stationarity: f64,
    /// Largest relative excess of an inactive band's marginal over the level.
    pub complementarity: f64,
    /// Largest relative gap between spent and available power.
    pub budget: f64,
}

/// KKT residuals of `p` for every user against the budget-constrained problem.
pub fn kkt(prob: &CellProblem, p: &[Vec<f64>]) -> KktReport {
    let mut rep = KktReport {
        stationarity: 0.0,
        complementarity: 0.0,
        budget: 0.0,
    };
    for (u, row) in p.iter().enumerate() {
        let budget = prob.budgets()[u];
        let spent: f64 = row.iter().sum();
        rep.budget = rep.budget.max((spent - budget).abs() / budget);
        let marg: Vec<f64> = (0..prob.num_bands()).map(|k| marginal(prob, u, k, p)).collect();
        let active: Vec<f64> = (0..row.len()).filter(|&k| row[k] > 0.0).map(|k| marg[k]).collect();
        if active.is_empty() {
            continue;
        }
        let level = active.iter().sum::<f64>() / active.len() as f64;
        for &m in &active {
            rep.stationarity = rep.stationarity.max((m - level).abs() / level);
        }
        for k in (0..row.len()).filter(|&k| row[k] == 0.0) {
            rep.complementarity = rep.complementarity.max((marg[k] - level) / level);
        }
    }
    rep
}

/// Best objective over a grid of `steps + 1` points on each user's budget
/// simplex, for two users on two bands. Power is always fully spent since the
/// objective increases in every coordinate.
pub fn grid_max_two_users(prob: &CellProblem, steps: usize) -> f64 {
    assert_eq!((prob.num_users(), prob.num_bands()), (2, 2));
    let (b0, b1) = (prob.budgets()[0], prob.budgets()[1]);
    let mut best = f64::NEG_INFINITY;
    let mut p = vec![vec![0.0; 2]; 2];
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        p[0] = vec![a * b0, (1.0 - a) * b0];
        for j in 0..=steps {
            let c = j as f64 / steps as f64;
            p[1] = vec![c * b1, (1.0 - c) * b1];
            best = best.max(objective2(prob, &p));
        }
    }
    best
}

/// Minimax radius by trying every member as the center.
pub fn radius(points: &[Point], block: &[usize]) -> f64 {
    block
        .iter()
        .map(|&c| {
            block
                .iter()
                .map(|&q| points[c].distance(points[q]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// (left block, right block, radius of their union)
pub type Merge = (Vec<usize>, Vec<usize>, f64);

/// Agglomerative minimax clustering recomputing every pairwise linkage from
/// scratch at each level. Returns the merges in order and the partition after
/// each merge, blocks sorted by smallest member.
pub fn brute_force_hierarchy(points: &[Point]) -> (Vec<Merge>, Vec<Vec<Vec<usize>>>) {
    let mut blocks: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    let mut levels = vec![blocks.clone()];
    while blocks.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..blocks.len() {
            for j in (i + 1)..blocks.len() {
                let union: Vec<usize> = blocks[i].iter().chain(&blocks[j]).copied().collect();
                let r = radius(points, &union);
                let key = (blocks[i][0], blocks[j][0]);
                let better = match best {
                    None => true,
                    Some((br, bi, bj)) => r < br || (r == br && key < (blocks[bi][0], blocks[bj][0])),
                };
                if better {
                    best = Some((r, i, j));
                }
            }
        }
        let (r, i, j) = best.unwrap();
        let (a, b) = (blocks[i].clone(), blocks[j].clone());
        let (left, right) = if a[0] < b[0] { (a, b) } else { (b, a) };
        merges.push((left.clone(), right.clone(), r));
        let mut merged: Vec<usize> = left.iter().chain(&right).copied().collect();
        merged.sort_unstable();
        blocks.remove(j);
        blocks.remove(i);
        blocks.push(merged);
        blocks.sort_by_key(|b| b[0]);
        levels.push(blocks.clone());
    }
    (merges, levels)
}

pub fn random_points(rng: &mut impl Rng, n: usize, integer_grid: bool) -> Vec<Point> {
    (0..n)
        .map(|_| {
            if integer_grid {
                Point {
                    x: rng.random_range(0..6) as f64,
                    y: rng.random_range(0..6) as f64,
                }
            } else {
                Point {
                    x: rng.random_range(0.0..2000.0),
                    y: rng.random_range(0.0..2000.0),
                }
            }
        })
        .collect()
}

pub fn dvec(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}
