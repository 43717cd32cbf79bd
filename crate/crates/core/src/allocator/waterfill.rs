use crate::error::AllocError;

/// Effective gains at or below this value (1/mW) are treated as zero.
pub const GAIN_FLOOR: f64 = 1e-15;

/// Relative budget mismatch at which the level search stops.
pub const BUDGET_RTOL: f64 = 1e-10;

const MAX_BISECTION_STEPS: usize = 4000;

/// Per-band powers from one water-filling solve plus the multiplier that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub powers: Vec<f64>,
    /// Budget multiplier λ; zero when no band has a usable gain.
    pub lambda: f64,
}

fn allocate(widths: &[f64], gains: &[f64], lambda: f64) -> Vec<f64> {
    widths
        .iter()
        .zip(gains)
        .map(|(&w, &g)| if g > GAIN_FLOOR { (w / lambda - 1.0 / g).max(0.0) } else { 0.0 })
        .collect()
}

fn total(widths: &[f64], gains: &[f64], lambda: f64) -> f64 {
    allocate(widths, gains, lambda).iter().sum()
}

/// Maximizes `Σ_k W_k·log2(1 + g_k p_k)` subject to `Σ_k p_k ≤ budget`, `p ≥ 0`.
///
/// The solution is `p_k = (W_k/λ − 1/g_k)⁺` with λ set so the budget is spent
/// exactly. λ is bracketed in `(0, max_k W_k g_k]` and bisected; once the set of
/// active bands is known, λ is recomputed in closed form over that set.
pub fn waterfill(widths: &[f64], gains: &[f64], budget: f64) -> Result<WaterFilling, AllocError> {
    if widths.len() != gains.len() {
        return Err(AllocError::Dimension(format!(
            "{} band widths but {} gains",
            widths.len(),
            gains.len()
        )));
    }
    let usable = gains.iter().any(|&g| g > GAIN_FLOOR);
    if !usable || budget <= 0.0 {
        return Ok(WaterFilling {
            powers: vec![0.0; gains.len()],
            lambda: 0.0,
        });
    }

    // At λ_hi every band is at or below its floor, so the total is zero.
    let mut hi = widths
        .iter()
        .zip(gains)
        .filter(|(_, &g)| g > GAIN_FLOOR)
        .map(|(&w, &g)| w * g)
        .fold(0.0, f64::max);
    let mut lo = hi / 2.0;
    let mut steps = 0;
    while total(widths, gains, lo) <= budget {
        lo /= 2.0;
        steps += 1;
        if steps > MAX_BISECTION_STEPS || lo == 0.0 {
            return Err(AllocError::NoConvergence { iterations: steps });
        }
    }

    let mut lambda = lo;
    let mut converged = false;
    while steps < MAX_BISECTION_STEPS {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        let sum = total(widths, gains, mid);
        lambda = mid;
        if (sum - budget).abs() < BUDGET_RTOL * budget {
            converged = true;
            break;
        }
        if sum > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Closed-form level over the active set found by bisection.
    let active: Vec<bool> = allocate(widths, gains, lambda).iter().map(|&p| p > 0.0).collect();
    let (w_sum, inv_g_sum) = widths
        .iter()
        .zip(gains)
        .zip(&active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0.0), |(ws, gs), ((&w, &g), _)| (ws + w, gs + 1.0 / g));
    if w_sum > 0.0 {
        let exact = w_sum / (budget + inv_g_sum);
        let mut powers = allocate(widths, gains, exact);
        let same_support = powers.iter().zip(&active).all(|(&p, &a)| (p > 0.0) == a);
        if same_support {
            // W/λ − 1/g cancels badly when 1/g dwarfs the budget; hand the
            // leftover back along the water level direction (∝ W).
            let residual = budget - powers.iter().sum::<f64>();
            for ((p, &w), &a) in powers.iter_mut().zip(widths).zip(&active) {
                if a {
                    *p = (*p + residual * w / w_sum).max(0.0);
                }
            }
            return Ok(WaterFilling {
                powers,
                lambda: exact,
            });
        }
    }

    if !converged {
        return Err(AllocError::NoConvergence { iterations: steps });
    }
    Ok(WaterFilling {
        powers: allocate(widths, gains, lambda),
        lambda,
    })
}
