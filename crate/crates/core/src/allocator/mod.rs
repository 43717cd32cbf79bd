//! Joint-decoding power allocation inside one virtual cell.
//!
//! The cell is a multiple-access channel with one receive antenna per BS. The
//! objective `Σ_k W_k·[log2|N_k + Σ_u p_{u,k} h_{u,k} h_{u,k}†| − log2|N_k|]` is
//! concave in the powers and the feasible set is a product of per-user
//! simplices, so cyclic coordinate ascent over users converges to the optimum.
//! Each user's block update is a water-filling against the noise plus the
//! other users' signals.

mod waterfill;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

pub use waterfill::{waterfill, WaterFilling, BUDGET_RTOL, GAIN_FLOOR};

use crate::channel::C64;
pub use crate::error::AllocError;

/// Per-user, per-band powers in mW, indexed `[user][band]`.
pub type Powers = Vec<Vec<f64>>;

/// One virtual cell's allocation problem.
#[derive(Debug, Clone)]
pub struct CellProblem {
    num_rx: usize,
    h: Vec<Vec<DVector<C64>>>,
    noise_cov: Vec<DMatrix<C64>>,
    noise_log2det: Vec<f64>,
    band_widths: Vec<f64>,
    budgets: Vec<f64>,
}

const PIVOT_IM_RATIO: f64 = 1e-6;

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// nalgebra takes the complex square root of each pivot, so an indefinite input
/// still "factors" with an (almost) imaginary diagonal entry. Rounding leaves a
/// tiny imaginary part on genuine pivots too, hence the loose ratio.
fn hermitian_cholesky(m: DMatrix<C64>) -> Option<Cholesky<C64, Dyn>> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    let pd = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= PIVOT_IM_RATIO * d.re
    });
    pd.then_some(chol)
}

fn log2_det_pd(m: DMatrix<C64>) -> Option<f64> {
    let chol = hermitian_cholesky(m)?;
    let l = chol.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

impl CellProblem {
    /// `h[u][k]` holds the channel vector from user `u` to the cell's BSs on band `k`.
    pub fn new(
        h: Vec<Vec<Vec<C64>>>,
        noise_cov: Vec<DMatrix<C64>>,
        band_widths: Vec<f64>,
        budgets: Vec<f64>,
    ) -> Result<Self, AllocError> {
        let num_bands = band_widths.len();
        if noise_cov.len() != num_bands {
            return Err(AllocError::Dimension(format!(
                "{} noise matrices for {} bands",
                noise_cov.len(),
                num_bands
            )));
        }
        if budgets.len() != h.len() {
            return Err(AllocError::Dimension(format!(
                "{} budgets for {} users",
                budgets.len(),
                h.len()
            )));
        }
        let num_rx = noise_cov.first().map_or(0, |n| n.nrows());
        if num_rx == 0 {
            return Err(AllocError::Dimension("cell needs at least one band and one receiver".into()));
        }
        if band_widths.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(AllocError::Dimension("band widths must be positive".into()));
        }
        if budgets.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(AllocError::Dimension("budgets must be finite and non-negative".into()));
        }
        let mut noise_log2det = Vec::with_capacity(num_bands);
        for (k, n) in noise_cov.iter().enumerate() {
            if n.nrows() != num_rx || n.ncols() != num_rx {
                return Err(AllocError::Dimension(format!("noise matrix for band {k} is not {num_rx}x{num_rx}")));
            }
            let scale = n.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let asym = (n - n.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if asym > 1e-12 * scale {
                return Err(AllocError::NotPositiveDefinite { band: k });
            }
            noise_log2det.push(log2_det_pd(n.clone()).ok_or(AllocError::NotPositiveDefinite { band: k })?);
        }
        let h = h
            .into_iter()
            .enumerate()
            .map(|(u, per_band)| {
                if per_band.len() != num_bands {
                    return Err(AllocError::Dimension(format!(
                        "user {u} has {} bands, expected {num_bands}",
                        per_band.len()
                    )));
                }
                per_band
                    .into_iter()
                    .map(|v| {
                        if v.len() == num_rx {
                            Ok(DVector::from_vec(v))
                        } else {
                            Err(AllocError::Dimension(format!(
                                "user {u} channel has {} entries, expected {num_rx}",
                                v.len()
                            )))
                        }
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            num_rx,
            h,
            noise_cov,
            noise_log2det,
            band_widths,
            budgets,
        })
    }

    /// Problem with `N_k = noise_power[k]·I`.
    pub fn with_white_noise(
        h: Vec<Vec<Vec<C64>>>,
        num_rx: usize,
        noise_power: &[f64],
        band_widths: Vec<f64>,
        budgets: Vec<f64>,
    ) -> Result<Self, AllocError> {
        let noise_cov = noise_power
            .iter()
            .map(|&s| DMatrix::from_diagonal_element(num_rx, num_rx, C64::new(s, 0.0)))
            .collect();
        Self::new(h, noise_cov, band_widths, budgets)
    }

    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn num_bands(&self) -> usize {
        self.band_widths.len()
    }

    /// Receive antennas, i.e. BSs in the cell.
    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn h(&self, user: usize, band: usize) -> &DVector<C64> {
        &self.h[user][band]
    }

    pub fn noise_cov(&self, band: usize) -> &DMatrix<C64> {
        &self.noise_cov[band]
    }

    pub fn band_widths(&self) -> &[f64] {
        &self.band_widths
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn zero_powers(&self) -> Powers {
        vec![vec![0.0; self.num_bands()]; self.num_users()]
    }

    fn check_powers(&self, p: &Powers) -> Result<(), AllocError> {
        if p.len() != self.num_users() || p.iter().any(|row| row.len() != self.num_bands()) {
            return Err(AllocError::Dimension(format!(
                "allocation must be {}x{}",
                self.num_users(),
                self.num_bands()
            )));
        }
        if p.iter().flatten().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(AllocError::Infeasible("powers must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// `N_k + Σ_{u ≠ skip} p_{u,k} h_{u,k} h_{u,k}†`
    fn covariance(&self, band: usize, p: &Powers, skip: Option<usize>) -> DMatrix<C64> {
        let mut cov = self.noise_cov[band].clone();
        for (u, row) in p.iter().enumerate() {
            let pk = row[band];
            if Some(u) == skip || pk == 0.0 {
                continue;
            }
            let h = &self.h[u][band];
            cov.gerc(C64::new(pk, 0.0), h, h, C64::new(1.0, 0.0));
        }
        cov
    }
}

/// Sum rate of the cell in bits/s, interference from outside the cell ignored.
///
/// Zero at `p = 0`. Determinants come from Cholesky factors.
pub fn logdet_objective(prob: &CellProblem, p: &Powers) -> Result<f64, AllocError> {
    prob.check_powers(p)?;
    let mut total = 0.0;
    for k in 0..prob.num_bands() {
        let ld = log2_det_pd(prob.covariance(k, p, None)).ok_or(AllocError::NotPositiveDefinite { band: k })?;
        total += prob.band_widths[k] * (ld - prob.noise_log2det[k]);
    }
    Ok(total)
}

/// `h† Σ⁻¹ h` for `user` on `band`, where Σ is the noise plus every other user's signal.
pub fn effective_gain(prob: &CellProblem, user: usize, band: usize, p: &Powers) -> Result<f64, AllocError> {
    prob.check_powers(p)?;
    if user >= prob.num_users() || band >= prob.num_bands() {
        return Err(AllocError::Dimension(format!("no user {user} / band {band} in cell")));
    }
    let sigma = prob.covariance(band, p, Some(user));
    let chol = hermitian_cholesky(sigma).ok_or(AllocError::NotPositiveDefinite { band })?;
    let h = &prob.h[user][band];
    let x = chol.solve(h);
    Ok(h.dotc(&x).re.max(0.0))
}

/// The best per-band powers for `user` with every other user held fixed.
pub fn waterfill_user(prob: &CellProblem, user: usize, p_others: &Powers) -> Result<WaterFilling, AllocError> {
    let gains = (0..prob.num_bands())
        .map(|k| effective_gain(prob, user, k, p_others))
        .collect::<Result<Vec<_>, _>>()?;
    waterfill(&prob.band_widths, &gains, prob.budgets[user])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once a full round improves the objective by less than this fraction.
    pub tol: f64,
    pub max_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_rounds: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    /// mW, `[user][band]`.
    pub p: Powers,
    pub objective_bps: f64,
    /// Completed rounds over all users.
    pub iterations: usize,
    pub converged: bool,
}

/// One block update of coordinate ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentStep {
    pub round: usize,
    pub user: usize,
    pub before: f64,
    pub after: f64,
}

impl AscentStep {
    /// True if the objective fell by more than floating-point noise.
    pub fn is_descent(&self) -> bool {
        self.after < self.before - ASCENT_SLACK * self.before.abs().max(1.0)
    }
}

/// Relative slack below which an objective drop counts as rounding rather than descent.
pub const ASCENT_SLACK: f64 = 1e-12;

static ASCENT_STEPS: AtomicU64 = AtomicU64::new(0);
static ASCENT_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of block updates and of those that decreased the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AscentStats {
    pub steps: u64,
    pub violations: u64,
}

pub fn ascent_stats() -> AscentStats {
    AscentStats {
        steps: ASCENT_STEPS.load(Ordering::Relaxed),
        violations: ASCENT_VIOLATIONS.load(Ordering::Relaxed),
    }
}

/// Cyclic coordinate ascent from `p = 0`, users in index order.
pub fn solve_cell(prob: &CellProblem, opts: SolverOptions) -> Result<PowerAllocation, AllocError> {
    let order: Vec<usize> = (0..prob.num_users()).collect();
    solve_cell_traced(prob, opts, &order, |_| {})
}

/// Coordinate ascent visiting users in `order` each round, reporting every block update.
pub fn solve_cell_traced(
    prob: &CellProblem,
    opts: SolverOptions,
    order: &[usize],
    mut on_step: impl FnMut(&AscentStep),
) -> Result<PowerAllocation, AllocError> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..prob.num_users()).collect::<Vec<_>>() {
        return Err(AllocError::Dimension("order must be a permutation of the cell's users".into()));
    }
    let mut p = prob.zero_powers();
    let mut objective = logdet_objective(prob, &p)?;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_rounds {
        iterations += 1;
        let round_start = objective;
        for &u in order {
            p[u] = waterfill_user(prob, u, &p)?.powers;
            let after = logdet_objective(prob, &p)?;
            let step = AscentStep {
                round: iterations,
                user: u,
                before: objective,
                after,
            };
            ASCENT_STEPS.fetch_add(1, Ordering::Relaxed);
            if step.is_descent() {
                ASCENT_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
                log::error!("coordinate ascent step decreased the objective: {step:?}");
            }
            debug_assert!(!step.is_descent(), "objective decreased: {step:?}");
            on_step(&step);
            objective = after;
        }
        if objective - round_start <= opts.tol * objective.abs() {
            converged = true;
            break;
        }
    }

    Ok(PowerAllocation {
        p,
        objective_bps: objective,
        iterations,
        converged,
    })
}
