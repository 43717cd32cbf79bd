//! Agglomerative clustering under minimax linkage.
//!
//! The radius of a set around one of its members is the largest distance from
//! that member to the rest of the set; the minimax radius is the smallest such
//! radius over all members. Two clusters are linked by the minimax radius of
//! their union, and at every level the pair with the smallest linkage merges.

use std::collections::BTreeMap;

use serde::Serialize;

use super::Partition;
use crate::channel::Point;
use crate::error::ClusteringError;

pub fn minimax_radius(block: &[Point]) -> Result<f64, ClusteringError> {
    if block.is_empty() {
        return Err(ClusteringError::EmptyBlock);
    }
    Ok(block
        .iter()
        .map(|&c| block.iter().map(|&p| c.distance(p)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min))
}

/// Minimax radius of `a ∪ b`. The sets must be nonempty and share no point.
pub fn minimax_linkage(a: &[Point], b: &[Point]) -> Result<f64, ClusteringError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusteringError::EmptyBlock);
    }
    if a.iter().any(|p| b.contains(p)) {
        return Err(ClusteringError::Overlap);
    }
    let union: Vec<Point> = a.iter().chain(b).copied().collect();
    minimax_radius(&union)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeRecord {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Minimax linkage of `left` and `right`, i.e. the radius of the merged block.
    pub radius: f64,
}

/// Nested clusterings for every cluster count `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    levels: BTreeMap<usize, Partition>,
    merges: Vec<MergeRecord>,
}

impl Dendrogram {
    pub fn num_points(&self) -> usize {
        self.levels.keys().next_back().copied().unwrap_or(0)
    }

    /// The clustering with exactly `m` blocks.
    pub fn level(&self, m: usize) -> Option<&Partition> {
        self.levels.get(&m)
    }

    pub fn levels(&self) -> &BTreeMap<usize, Partition> {
        &self.levels
    }

    /// Merges in the order they happened, level `n-1` first.
    pub fn merges(&self) -> &[MergeRecord] {
        &self.merges
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

fn block_radius(dist: &[Vec<f64>], block: &[usize]) -> f64 {
    block
        .iter()
        .map(|&c| block.iter().map(|&p| dist[c][p]).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn union_radius(dist: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let union: Vec<usize> = a.iter().chain(b).copied().collect();
    block_radius(dist, &union)
}

/// Builds the full minimax-linkage hierarchy over `points`.
///
/// Ties in the smallest linkage go to the pair whose (first, second) smallest
/// member indices are lexicographically least.
pub fn hierarchical_cluster(points: &[Point]) -> Result<Dendrogram, ClusteringError> {
    let n = points.len();
    if n == 0 {
        return Err(ClusteringError::EmptyBlock);
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|&p| points.iter().map(|&q| p.distance(q)).collect())
        .collect();

    // Blocks stay sorted by smallest member; merging j into i (i < j) preserves that.
    let mut blocks: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut linkage: Vec<Vec<f64>> = dist.clone();
    let mut levels = BTreeMap::new();
    let mut merges = Vec::with_capacity(n - 1);
    levels.insert(n, Partition::singletons(n));

    while blocks.len() > 1 {
        let mut best = (0, 1);
        let mut best_link = f64::INFINITY;
        for (i, row) in linkage.iter().enumerate() {
            for (j, &link) in row.iter().enumerate().skip(i + 1) {
                if link < best_link {
                    best_link = link;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let right = blocks.remove(j);
        let left = blocks[i].clone();
        blocks[i].extend_from_slice(&right);
        blocks[i].sort_unstable();

        linkage.remove(j);
        for row in &mut linkage {
            row.remove(j);
        }
        for g in 0..blocks.len() {
            if g != i {
                let d = union_radius(&dist, &blocks[i], &blocks[g]);
                linkage[i][g] = d;
                linkage[g][i] = d;
            }
        }
        linkage[i][i] = 0.0;

        merges.push(MergeRecord {
            left,
            right,
            radius: best_link,
        });
        levels.insert(
            blocks.len(),
            Partition::new(n, blocks.clone()).expect("merging keeps a partition"),
        );
    }

    Ok(Dendrogram { levels, merges })
}
