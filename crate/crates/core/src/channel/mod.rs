//! Random network topologies and per-band channel realizations.
//!
//! Path loss follows `PL(d) = a·log10(d) + b` dB with log-normal shadowing and
//! Rayleigh fading. Everything below the config boundary is linear milliwatts.

mod config;
pub mod seed;

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use config::{ChannelScore, SimulationConfig};
use seed::{stream_rng, StreamTag};

pub use crate::error::ChannelError;

pub type C64 = Complex<f64>;

/// Minimum transmitter-receiver separation used when generating channels, meters.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Log-distance path loss `slope_db·log10(d) + offset_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub slope_db: f64,
    pub offset_db: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            slope_db: 35.0,
            offset_db: 34.0,
        }
    }
}

impl PathLoss {
    pub fn db(&self, d: f64) -> Result<f64, ChannelError> {
        if d > 0.0 {
            Ok(self.slope_db * d.log10() + self.offset_db)
        } else {
            Err(ChannelError::NonPositiveDistance(d))
        }
    }
}

/// Path loss in dB under the default `35·log10(d) + 34` model.
pub fn pathloss_db(d: f64) -> Result<f64, ChannelError> {
    PathLoss::default().db(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// Linear per-user budgets, mW.
    pub power_budgets: Vec<f64>,
}

impl Topology {
    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }
}

/// Draws BS and user positions uniformly on the square.
///
/// Deterministic in `(cfg.master_seed, realization_index)`.
pub fn generate_topology(cfg: &SimulationConfig, realization_index: usize) -> Topology {
    debug_assert!(realization_index < cfg.num_realizations);
    let mut rng = stream_rng(cfg.master_seed, StreamTag::Topology, realization_index as u64);
    let side = cfg.side_length;
    let mut draw = |count: usize| -> Vec<Point> {
        (0..count)
            .map(|_| {
                let x = rng.random_range(0.0..=side);
                let y = rng.random_range(0.0..=side);
                Point::new(x, y)
            })
            .collect()
    };
    let bs_positions = draw(cfg.num_bs);
    let user_positions = draw(cfg.num_users);
    Topology {
        bs_positions,
        user_positions,
        power_budgets: vec![cfg.power_budget_mw(); cfg.num_users],
    }
}

/// Complex channel coefficients `h[u, b, k]` with per-band noise power and bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    num_users: usize,
    num_bs: usize,
    num_bands: usize,
    h: Vec<C64>,
    noise_power: Vec<f64>,
    band_widths: Vec<f64>,
}

impl ChannelTensor {
    /// Builds a tensor from explicit coefficients laid out user-major, then BS, then band.
    pub fn from_parts(
        num_users: usize,
        num_bs: usize,
        h: Vec<C64>,
        noise_power: Vec<f64>,
        band_widths: Vec<f64>,
    ) -> crate::Result<Self> {
        let num_bands = noise_power.len();
        if band_widths.len() != num_bands {
            return Err(crate::Error::Usage(format!(
                "{} noise powers but {} band widths",
                num_bands,
                band_widths.len()
            )));
        }
        if h.len() != num_users * num_bs * num_bands {
            return Err(crate::Error::Usage(format!(
                "expected {} coefficients, got {}",
                num_users * num_bs * num_bands,
                h.len()
            )));
        }
        if noise_power.iter().any(|&n| !n.is_finite() || n <= 0.0) {
            return Err(crate::Error::Usage("noise power must be positive in every band".into()));
        }
        if band_widths.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(crate::Error::Usage("band widths must be positive".into()));
        }
        Ok(Self {
            num_users,
            num_bs,
            num_bands,
            h,
            noise_power,
            band_widths,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    #[inline]
    fn offset(&self, user: usize, bs: usize, band: usize) -> usize {
        (user * self.num_bs + bs) * self.num_bands + band
    }

    #[inline]
    pub fn h(&self, user: usize, bs: usize, band: usize) -> C64 {
        self.h[self.offset(user, bs, band)]
    }

    pub fn set_h(&mut self, user: usize, bs: usize, band: usize, value: C64) {
        let i = self.offset(user, bs, band);
        self.h[i] = value;
    }

    /// Coefficients from `user` to each BS in `bs_block` on `band`.
    pub fn vector(&self, user: usize, bs_block: &[usize], band: usize) -> Vec<C64> {
        bs_block.iter().map(|&b| self.h(user, b, band)).collect()
    }

    pub fn noise_power(&self) -> &[f64] {
        &self.noise_power
    }

    pub fn band_widths(&self) -> &[f64] {
        &self.band_widths
    }
}

/// Draws one channel realization for `topo`.
///
/// `h[u,b,k] = sqrt(10^((-PL(d_ub) + S_ub) / 10)) · g[u,b,k]` with shadowing
/// `S ~ N(0, σ²)` dB and unit-variance circularly symmetric Gaussian fading `g`.
/// All shadowing values are drawn before any fading value.
pub fn generate_channels(
    cfg: &SimulationConfig,
    topo: &Topology,
    realization_index: usize,
) -> ChannelTensor {
    let mut rng = stream_rng(cfg.master_seed, StreamTag::Channel, realization_index as u64);
    let (nu, nb, nk) = (topo.num_users(), topo.num_bs(), cfg.num_bands);
    let pathloss = cfg.pathloss();

    let shadow_draws = if cfg.shadowing_per_band { nu * nb * nk } else { nu * nb };
    // Unit normals scaled by σ, so the fading part of the stream does not depend on σ.
    let shadowing: Vec<f64> = (0..shadow_draws)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.shadowing_sigma_db * z
        })
        .collect();

    let mut h = Vec::with_capacity(nu * nb * nk);
    for (u, &up) in topo.user_positions.iter().enumerate() {
        for (b, &bp) in topo.bs_positions.iter().enumerate() {
            let mut d = up.distance(bp);
            if d < MIN_DISTANCE_M {
                log::warn!("user {u} within {d:.3} m of BS {b}; clamping to {MIN_DISTANCE_M} m");
                d = MIN_DISTANCE_M;
            }
            let pl = pathloss.db(d).expect("distance clamped positive");
            for k in 0..nk {
                let s = if cfg.shadowing_per_band {
                    shadowing[(u * nb + b) * nk + k]
                } else {
                    shadowing[u * nb + b]
                };
                let amplitude = dbm_to_mw(-pl + s).sqrt();
                h.push(amplitude * rayleigh(&mut rng));
            }
        }
    }

    let noise = cfg.noise_power_mw();
    ChannelTensor {
        num_users: nu,
        num_bs: nb,
        num_bands: nk,
        h,
        noise_power: vec![noise; nk],
        band_widths: vec![cfg.band_width; nk],
    }
}

/// One draw of CN(0, 1).
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
