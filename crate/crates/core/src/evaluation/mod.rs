//! Network-level scoring, exhaustive clustering search, and Monte Carlo sweeps.
//!
//! Cells are optimized independently, each ignoring the others. The network is
//! then scored with every out-of-cell transmission added to a cell's noise
//! covariance, which is the joint-decoding rate when interference is treated as
//! Gaussian noise.

mod report;
mod sweep;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use report::{aggregate, write_aggregate_csv, write_csv, write_jsonl, AggregateRow};
pub use sweep::{run_realization, run_sweep, Execution, SweepRow};

use crate::allocator::{logdet_objective, solve_cell, CellProblem, PowerAllocation, SolverOptions};
use crate::channel::{ChannelTensor, SimulationConfig, Topology, C64};
use crate::clustering::{
    affiliate_users, enumerate_partitions_capped, AffiliationRule, Partition, VirtualCell,
    VirtualCellPartition,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusteringMethod {
    #[serde(rename = "hierarchical")]
    Hierarchical,
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "exhaustive")]
    Exhaustive,
}

impl ClusteringMethod {
    pub const ALL: [ClusteringMethod; 3] = [
        ClusteringMethod::Hierarchical,
        ClusteringMethod::KMeans,
        ClusteringMethod::Exhaustive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClusteringMethod::Hierarchical => "hierarchical",
            ClusteringMethod::KMeans => "kmeans",
            ClusteringMethod::Exhaustive => "exhaustive",
        }
    }
}

impl std::fmt::Display for ClusteringMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hierarchical" => Ok(ClusteringMethod::Hierarchical),
            "kmeans" => Ok(ClusteringMethod::KMeans),
            "exhaustive" => Ok(ClusteringMethod::Exhaustive),
            other => Err(format!(
                "unknown clustering method `{other}` (hierarchical, kmeans, exhaustive)"
            )),
        }
    }
}

/// Score of one clustering of one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkResult {
    pub realization_index: usize,
    pub clustering_method: ClusteringMethod,
    pub affiliation_rule: AffiliationRule,
    pub num_cells: usize,
    /// Interference-free objective of each cell, bits/s.
    pub per_cell_objective_bps: Vec<f64>,
    /// Network sum rate with out-of-cell interference, bits/s.
    pub achieved_sum_rate_bps: f64,
}

impl NetworkResult {
    pub fn sum_objective_bps(&self) -> f64 {
        self.per_cell_objective_bps.iter().sum()
    }
}

/// A clustering after allocation and scoring.
#[derive(Debug, Clone)]
pub struct EvaluatedNetwork {
    pub cells: VirtualCellPartition,
    pub allocations: Vec<PowerAllocation>,
    pub achieved_sum_rate_bps: f64,
}

impl EvaluatedNetwork {
    pub fn per_cell_objective_bps(&self) -> Vec<f64> {
        self.allocations.iter().map(|a| a.objective_bps).collect()
    }

    pub fn into_result(self, realization_index: usize, method: ClusteringMethod) -> NetworkResult {
        NetworkResult {
            realization_index,
            clustering_method: method,
            affiliation_rule: self.cells.rule,
            num_cells: self.cells.num_cells(),
            per_cell_objective_bps: self.per_cell_objective_bps(),
            achieved_sum_rate_bps: self.achieved_sum_rate_bps,
        }
    }
}

fn white_noise(num_rx: usize, power: f64) -> DMatrix<C64> {
    DMatrix::from_diagonal_element(num_rx, num_rx, C64::new(power, 0.0))
}

fn cell_channels(channels: &ChannelTensor, cell: &VirtualCell) -> Vec<Vec<Vec<C64>>> {
    cell.users
        .iter()
        .map(|&u| {
            (0..channels.num_bands())
                .map(|k| channels.vector(u, &cell.bs, k))
                .collect()
        })
        .collect()
}

fn cell_problem(
    channels: &ChannelTensor,
    budgets: &[f64],
    cell: &VirtualCell,
    noise_cov: Vec<DMatrix<C64>>,
) -> Result<CellProblem> {
    let cell_budgets = cell.users.iter().map(|&u| budgets[u]).collect();
    Ok(CellProblem::new(
        cell_channels(channels, cell),
        noise_cov,
        channels.band_widths().to_vec(),
        cell_budgets,
    )?)
}

/// The interference-free problem of one virtual cell (`N_k = σ_k² I`).
pub fn isolated_cell_problem(
    channels: &ChannelTensor,
    budgets: &[f64],
    cell: &VirtualCell,
) -> Result<CellProblem> {
    let noise = channels
        .noise_power()
        .iter()
        .map(|&s| white_noise(cell.bs.len(), s))
        .collect();
    cell_problem(channels, budgets, cell, noise)
}

/// Solves every cell independently, each ignoring the others.
pub fn solve_cells(
    channels: &ChannelTensor,
    budgets: &[f64],
    cells: &VirtualCellPartition,
    opts: SolverOptions,
) -> Result<Vec<PowerAllocation>> {
    cells
        .cells
        .iter()
        .map(|cell| Ok(solve_cell(&isolated_cell_problem(channels, budgets, cell)?, opts)?))
        .collect()
}

/// Network sum rate with every out-of-cell transmission treated as Gaussian noise.
///
/// For cell `v` and band `k` the noise covariance becomes
/// `N_k + Σ_{u ∉ v} p_{u,k} h_{u,v,k} h_{u,v,k}†`, where `h_{u,v,k}` holds the
/// coefficients from `u` to the BSs of `v`. `allocations[v].p` is indexed by the
/// position of each user in `cells.cells[v].users`.
pub fn achieved_sum_rate(
    channels: &ChannelTensor,
    cells: &VirtualCellPartition,
    allocations: &[PowerAllocation],
) -> Result<f64> {
    if allocations.len() != cells.num_cells() {
        return Err(Error::Usage(format!(
            "{} allocations for {} cells",
            allocations.len(),
            cells.num_cells()
        )));
    }
    cells
        .validate(channels.num_bs(), channels.num_users())
        .map_err(|e| Error::Usage(e.to_string()))?;
    let nk = channels.num_bands();
    for (v, (cell, alloc)) in cells.cells.iter().zip(allocations).enumerate() {
        if alloc.p.len() != cell.users.len() || alloc.p.iter().any(|row| row.len() != nk) {
            return Err(Error::Usage(format!(
                "allocation for cell {v} must be {}x{nk}",
                cell.users.len()
            )));
        }
    }

    let mut total = 0.0;
    for (v, (cell, alloc)) in cells.cells.iter().zip(allocations).enumerate() {
        let mut noise: Vec<DMatrix<C64>> = channels
            .noise_power()
            .iter()
            .map(|&s| white_noise(cell.bs.len(), s))
            .collect();
        for (w, (other, other_alloc)) in cells.cells.iter().zip(allocations).enumerate() {
            if w == v {
                continue;
            }
            for (row, &u) in other.users.iter().enumerate() {
                for (k, cov) in noise.iter_mut().enumerate() {
                    let pk = other_alloc.p[row][k];
                    if pk == 0.0 {
                        continue;
                    }
                    let h = nalgebra::DVector::from_vec(channels.vector(u, &cell.bs, k));
                    cov.gerc(C64::new(pk, 0.0), &h, &h, C64::new(1.0, 0.0));
                }
            }
        }
        // budgets only bound feasibility; the powers are already fixed here
        let budgets: Vec<f64> = alloc.p.iter().map(|row| row.iter().sum()).collect();
        let prob = CellProblem::new(
            cell_channels(channels, cell),
            noise,
            channels.band_widths().to_vec(),
            budgets,
        )?;
        total += logdet_objective(&prob, &alloc.p)?;
    }
    Ok(total)
}

/// Affiliates users to `bs_partition`, solves each cell, and scores the network.
pub fn evaluate_clustering(
    cfg: &SimulationConfig,
    topo: &Topology,
    channels: &ChannelTensor,
    bs_partition: &Partition,
    rule: AffiliationRule,
) -> Result<EvaluatedNetwork> {
    let cells = affiliate_users(topo, channels, bs_partition, rule, cfg.best_channel_score)?;
    let allocations = solve_cells(channels, &topo.power_budgets, &cells, cfg.solver_options())?;
    let achieved_sum_rate_bps = achieved_sum_rate(channels, &cells, &allocations)?;
    Ok(EvaluatedNetwork {
        cells,
        allocations,
        achieved_sum_rate_bps,
    })
}

/// Tries every partition of the BSs into `m` blocks and keeps the one with the
/// highest achieved sum rate. Ties keep the earliest partition in canonical order.
pub fn exhaustive_best_clustering(
    cfg: &SimulationConfig,
    topo: &Topology,
    channels: &ChannelTensor,
    m: usize,
    rule: AffiliationRule,
    realization_index: usize,
) -> Result<(VirtualCellPartition, NetworkResult)> {
    let mut best: Option<EvaluatedNetwork> = None;
    for partition in enumerate_partitions_capped(topo.num_bs(), m, cfg.enumeration_cap)? {
        let candidate = evaluate_clustering(cfg, topo, channels, &partition, rule)?;
        if best
            .as_ref()
            .is_none_or(|b| candidate.achieved_sum_rate_bps > b.achieved_sum_rate_bps)
        {
            best = Some(candidate);
        }
    }
    let best = best.expect("at least one partition exists for 1 <= m <= n");
    Ok((
        best.cells.clone(),
        best.into_result(realization_index, ClusteringMethod::Exhaustive),
    ))
}
