use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_clustering, exhaustive_best_clustering, ClusteringMethod, NetworkResult};
use crate::channel::seed::{derive_seed, StreamTag};
use crate::channel::{generate_channels, generate_topology, SimulationConfig};
use crate::clustering::{hierarchical_cluster, kmeans_cluster, AffiliationRule, ClusteringError};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Realizations on the current rayon pool.
    #[default]
    Parallel,
}

/// One line of the raw result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub realization: usize,
    pub method: ClusteringMethod,
    pub rule: AffiliationRule,
    pub num_cells: usize,
    pub sum_objective_bps: f64,
    pub achieved_rate_bps: f64,
}

impl From<&NetworkResult> for SweepRow {
    fn from(r: &NetworkResult) -> Self {
        SweepRow {
            realization: r.realization_index,
            method: r.clustering_method,
            rule: r.affiliation_rule,
            num_cells: r.num_cells,
            sum_objective_bps: r.sum_objective_bps(),
            achieved_rate_bps: r.achieved_sum_rate_bps,
        }
    }
}

fn kmeans_seed(master_seed: u64, realization: usize, m: usize) -> u64 {
    derive_seed(
        derive_seed(master_seed, StreamTag::KMeans, realization as u64),
        StreamTag::KMeans,
        m as u64,
    )
}

/// Every (method, rule, m) result for one realization, m running over `1..=num_bs`.
pub fn run_realization(
    cfg: &SimulationConfig,
    realization: usize,
    methods: &[ClusteringMethod],
    rules: &[AffiliationRule],
) -> Result<Vec<NetworkResult>> {
    let topo = generate_topology(cfg, realization);
    let channels = generate_channels(cfg, &topo, realization);
    let n = cfg.num_bs;
    let dendrogram = methods
        .contains(&ClusteringMethod::Hierarchical)
        .then(|| hierarchical_cluster(&topo.bs_positions))
        .transpose()?;

    let mut out = Vec::with_capacity(methods.len() * rules.len() * n);
    for &method in methods {
        for &rule in rules {
            for m in 1..=n {
                let result = match method {
                    ClusteringMethod::Hierarchical => {
                        let partition = dendrogram
                            .as_ref()
                            .and_then(|d| d.level(m))
                            .expect("dendrogram has every level");
                        evaluate_clustering(cfg, &topo, &channels, partition, rule)?
                            .into_result(realization, method)
                    }
                    ClusteringMethod::KMeans => {
                        let partition = kmeans_cluster(
                            &topo.bs_positions,
                            m,
                            kmeans_seed(cfg.master_seed, realization, m),
                        )?;
                        evaluate_clustering(cfg, &topo, &channels, &partition, rule)?
                            .into_result(realization, method)
                    }
                    ClusteringMethod::Exhaustive => {
                        exhaustive_best_clustering(cfg, &topo, &channels, m, rule, realization)?.1
                    }
                };
                out.push(result);
            }
        }
    }
    Ok(out)
}

/// Runs every realization and returns the raw table sorted by
/// (realization, method, rule, num_cells). The table does not depend on `exec`.
pub fn run_sweep(
    cfg: &SimulationConfig,
    methods: &[ClusteringMethod],
    rules: &[AffiliationRule],
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if methods.contains(&ClusteringMethod::Exhaustive) && cfg.num_bs > cfg.enumeration_cap {
        return Err(ClusteringError::Capacity {
            n: cfg.num_bs,
            cap: cfg.enumeration_cap,
        }
        .into());
    }
    let one = |r: usize| -> Result<Vec<SweepRow>> {
        Ok(run_realization(cfg, r, methods, rules)?
            .iter()
            .map(SweepRow::from)
            .collect())
    };
    let per_realization: Vec<Vec<SweepRow>> = match exec {
        Execution::Sequential => (0..cfg.num_realizations).map(one).collect::<Result<_>>()?,
        Execution::Parallel => (0..cfg.num_realizations)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?,
    };
    let mut rows: Vec<SweepRow> = per_realization.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.realization, a.method, a.rule, a.num_cells).cmp(&(b.realization, b.method, b.rule, b.num_cells))
    });
    Ok(rows)
}
