//! Virtual-cell formation: base-station clustering and user affiliation.

mod kmeans;
mod minimax;
mod partition;

use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans_cluster, KMEANS_MAX_ITERS};
pub use minimax::{hierarchical_cluster, minimax_linkage, minimax_radius, Dendrogram, MergeRecord};
pub use partition::{
    enumerate_partitions, enumerate_partitions_capped, stirling2, Partition, Partitions,
    DEFAULT_ENUMERATION_CAP,
};

use crate::channel::{ChannelScore, ChannelTensor, Topology};
pub use crate::error::ClusteringError;

/// How a user picks the BS whose virtual cell it joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffiliationRule {
    /// Nearest BS by Euclidean distance.
    ClosestBs,
    /// BS with the largest channel magnitude score.
    BestChannel,
}

impl AffiliationRule {
    pub const ALL: [AffiliationRule; 2] = [AffiliationRule::ClosestBs, AffiliationRule::BestChannel];

    pub fn as_str(self) -> &'static str {
        match self {
            AffiliationRule::ClosestBs => "closest_bs",
            AffiliationRule::BestChannel => "best_channel",
        }
    }
}

impl std::fmt::Display for AffiliationRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AffiliationRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closest_bs" => Ok(AffiliationRule::ClosestBs),
            "best_channel" => Ok(AffiliationRule::BestChannel),
            other => Err(format!("unknown affiliation rule `{other}` (closest_bs, best_channel)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VirtualCell {
    pub bs: Vec<usize>,
    pub users: Vec<usize>,
}

/// BS blocks with their affiliated users. Cells follow the canonical order of the BS partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VirtualCellPartition {
    pub cells: Vec<VirtualCell>,
    pub rule: AffiliationRule,
}

impl VirtualCellPartition {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Checks that BS blocks and user blocks each form a disjoint cover.
    pub fn validate(&self, num_bs: usize, num_users: usize) -> Result<(), ClusteringError> {
        if self.cells.iter().any(|c| c.bs.is_empty()) {
            return Err(ClusteringError::ImproperClustering("cell without a BS".into()));
        }
        check_cover("BS", num_bs, self.cells.iter().map(|c| c.bs.as_slice()))?;
        check_cover("user", num_users, self.cells.iter().map(|c| c.users.as_slice()))
    }
}

fn check_cover<'a>(
    what: &str,
    n: usize,
    blocks: impl Iterator<Item = &'a [usize]>,
) -> Result<(), ClusteringError> {
    let mut seen = vec![false; n];
    for &i in blocks.flatten() {
        match seen.get_mut(i) {
            None => {
                return Err(ClusteringError::ImproperClustering(format!("{what} {i} out of range")))
            }
            Some(true) => {
                return Err(ClusteringError::ImproperClustering(format!("{what} {i} in two cells")))
            }
            Some(s) => *s = true,
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(ClusteringError::ImproperClustering(format!("{what} {i} unassigned"))),
        None => Ok(()),
    }
}

fn first_max_by(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// The BS each user is affiliated with under `rule`. Ties go to the lowest BS index.
pub fn affiliated_bs(
    topo: &Topology,
    channels: &ChannelTensor,
    rule: AffiliationRule,
    score: ChannelScore,
) -> Vec<usize> {
    (0..topo.num_users())
        .map(|u| match rule {
            AffiliationRule::ClosestBs => {
                let up = topo.user_positions[u];
                first_max_by(topo.bs_positions.iter().map(|&bp| -up.distance(bp)))
            }
            AffiliationRule::BestChannel => first_max_by((0..channels.num_bs()).map(|b| {
                let gains = (0..channels.num_bands()).map(|k| channels.h(u, b, k).norm_sqr());
                match score {
                    ChannelScore::BandSum => gains.sum(),
                    ChannelScore::MaxBand => gains.fold(0.0, f64::max),
                }
            })),
        })
        .collect()
}

/// Forms virtual cells: every user joins the BS block containing its affiliated BS.
pub fn affiliate_users(
    topo: &Topology,
    channels: &ChannelTensor,
    bs_partition: &Partition,
    rule: AffiliationRule,
    score: ChannelScore,
) -> Result<VirtualCellPartition, ClusteringError> {
    if bs_partition.num_elements() != topo.num_bs() || channels.num_bs() != topo.num_bs() {
        return Err(ClusteringError::ImproperClustering(format!(
            "partition covers {} BSs, topology has {}",
            bs_partition.num_elements(),
            topo.num_bs()
        )));
    }
    if channels.num_users() != topo.num_users() {
        return Err(ClusteringError::ImproperClustering(format!(
            "channels cover {} users, topology has {}",
            channels.num_users(),
            topo.num_users()
        )));
    }
    let cell_of_bs = bs_partition.labels();
    let mut cells: Vec<VirtualCell> = bs_partition
        .blocks()
        .iter()
        .map(|b| VirtualCell {
            bs: b.clone(),
            users: Vec::new(),
        })
        .collect();
    for (u, b) in affiliated_bs(topo, channels, rule, score).into_iter().enumerate() {
        cells[cell_of_bs[b]].users.push(u);
    }
    Ok(VirtualCellPartition { cells, rule })
}
