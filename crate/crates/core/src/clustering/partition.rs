use serde::Serialize;

use crate::error::ClusteringError;

/// Largest set size [`enumerate_partitions`] accepts by default. S(10, m) peaks at 42 525.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// A partition of `0..n` into nonempty blocks.
///
/// Always canonical: every block is sorted ascending and blocks are ordered by
/// their smallest element, so two partitions are equal iff they group the same
/// elements together.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates that `blocks` partition `0..n` and canonicalizes them.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self, ClusteringError> {
        let bad = |reason: String| ClusteringError::InvalidPartition { n, reason };
        let mut seen = vec![false; n];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(bad("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e >= n {
                    return Err(bad(format!("element {e} out of range")));
                }
                if std::mem::replace(&mut seen[e], true) {
                    return Err(bad(format!("element {e} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(bad(format!("element {missing} not covered")));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    /// Groups elements by label; `labels[i]` is the block label of element `i`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut order: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            match order.iter().position(|&l| l == label) {
                Some(b) => blocks[b].push(i),
                None => {
                    order.push(label);
                    blocks.push(vec![i]);
                }
            }
        }
        // first-appearance order is already smallest-element order
        Self { blocks }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn whole(n: usize) -> Self {
        Self {
            blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] },
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_elements(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Block index of every element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.num_elements()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e] = b;
            }
        }
        labels
    }
}

/// Stirling number of the second kind, S(n, m).
pub fn stirling2(n: usize, m: usize) -> u128 {
    let mut row = vec![0u128; m + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=m.min(i)).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[m]
}

/// Every partition of `0..n` into exactly `m` blocks, in lexicographic order of
/// their restricted-growth strings. Yields `stirling2(n, m)` items.
pub fn enumerate_partitions(n: usize, m: usize) -> Result<Partitions, ClusteringError> {
    enumerate_partitions_capped(n, m, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_partitions_capped(
    n: usize,
    m: usize,
    cap: usize,
) -> Result<Partitions, ClusteringError> {
    if n > cap {
        return Err(ClusteringError::Capacity { n, cap });
    }
    if m == 0 || m > n {
        return Err(ClusteringError::ClusterCount { m, n });
    }
    let mut first = vec![0; n];
    for t in 1..m {
        first[n - m + t] = t;
    }
    Ok(Partitions {
        m,
        next: Some(first),
    })
}

/// Streaming enumerator returned by [`enumerate_partitions`].
#[derive(Debug, Clone)]
pub struct Partitions {
    m: usize,
    next: Option<Vec<usize>>,
}

impl Partitions {
    fn advance(&self, rgs: &[usize]) -> Option<Vec<usize>> {
        let n = rgs.len();
        let m = self.m;
        for i in (1..n).rev() {
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            let candidate = rgs[i] + 1;
            if candidate > prefix_max + 1 || candidate >= m {
                continue;
            }
            let mut cur_max = prefix_max.max(candidate);
            if m - 1 - cur_max > n - 1 - i {
                continue;
            }
            let mut out = rgs.to_vec();
            out[i] = candidate;
            for (j, slot) in out.iter_mut().enumerate().skip(i + 1) {
                let needed = m - 1 - cur_max;
                if needed < n - j {
                    *slot = 0;
                } else {
                    cur_max += 1;
                    *slot = cur_max;
                }
            }
            return Some(out);
        }
        None
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let current = self.next.take()?;
        self.next = self.advance(&current);
        Some(Partition::from_labels(&current))
    }
}
