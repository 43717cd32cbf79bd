use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::Partition;
use crate::channel::Point;
use crate::error::ClusteringError;

pub const KMEANS_MAX_ITERS: usize = 100;

fn sq_dist(a: Point, b: Point) -> f64 {
    (a.x - b.x).powi(2) + (a.y - b.y).powi(2)
}

fn nearest(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = sq_dist(p, q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Lloyd's algorithm with `m` distinct input points, chosen by `seed`, as the
/// initial centroids.
///
/// Stops at an assignment fixpoint or after [`KMEANS_MAX_ITERS`]. A cluster that
/// empties takes the point farthest from its centroid in the largest cluster.
pub fn kmeans_cluster(points: &[Point], m: usize, seed: u64) -> Result<Partition, ClusteringError> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(ClusteringError::ClusterCount { m, n });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = sample(&mut rng, n, m).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<Point> = init.iter().map(|&i| points[i]).collect();
    let mut labels: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();

    for _ in 0..KMEANS_MAX_ITERS {
        repair_empty(points, &mut labels, &mut centroids);
        update_centroids(points, &labels, &mut centroids);
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    repair_empty(points, &mut labels, &mut centroids);
    Ok(Partition::from_labels(&labels))
}

fn update_centroids(points: &[Point], labels: &[usize], centroids: &mut [Point]) {
    let mut sums = vec![(0.0, 0.0, 0usize); centroids.len()];
    for (&p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.x;
        sums[l].1 += p.y;
        sums[l].2 += 1;
    }
    for (c, (sx, sy, count)) in centroids.iter_mut().zip(sums) {
        if count > 0 {
            *c = Point::new(sx / count as f64, sy / count as f64);
        }
    }
}

fn repair_empty(points: &[Point], labels: &mut [usize], centroids: &mut [Point]) {
    let m = centroids.len();
    loop {
        let mut counts = vec![0usize; m];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // first maximum: lowest index among equally large clusters
        let largest = (0..m).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
        let donor_centroid = centroids[largest];
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &p) in points.iter().enumerate() {
            if labels[i] == largest {
                let d = sq_dist(p, donor_centroid);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        let moved = far.expect("largest cluster is nonempty");
        labels[moved] = empty;
        centroids[empty] = points[moved];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn m_equals_n_gives_singletons() {
        let points = pts(&[(0.0, 0.0), (5.0, 1.0), (2.0, 7.0), (9.0, 9.0)]);
        for seed in 0..10 {
            assert_eq!(kmeans_cluster(&points, 4, seed).unwrap(), Partition::singletons(4));
        }
    }

    #[test]
    fn duplicate_points_still_yield_m_blocks() {
        let points = pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        let p = kmeans_cluster(&points, 3, 7).unwrap();
        assert_eq!(p.num_blocks(), 3);
    }

    #[test]
    fn m_one_gives_whole() {
        let points = pts(&[(0.0, 0.0), (5.0, 1.0), (2.0, 7.0)]);
        assert_eq!(kmeans_cluster(&points, 1, 3).unwrap(), Partition::whole(3));
    }

    #[test]
    fn separated_groups_recovered() {
        let points = pts(&[
            (0.0, 0.0),
            (100.0, 100.0),
            (1.0, 0.0),
            (101.0, 100.0),
            (0.0, 1.0),
            (100.0, 101.0),
        ]);
        // oracle: the 2-partition minimizing within-cluster squared error
        let cost = |p: &Partition| -> f64 {
            p.blocks()
                .iter()
                .map(|b| {
                    let cx = b.iter().map(|&i| points[i].x).sum::<f64>() / b.len() as f64;
                    let cy = b.iter().map(|&i| points[i].y).sum::<f64>() / b.len() as f64;
                    b.iter().map(|&i| sq_dist(points[i], Point::new(cx, cy))).sum::<f64>()
                })
                .sum()
        };
        let expected = crate::clustering::enumerate_partitions(6, 2)
            .unwrap()
            .min_by(|a, b| cost(a).total_cmp(&cost(b)))
            .unwrap();
        assert_eq!(expected, Partition::new(6, vec![vec![0, 2, 4], vec![1, 3, 5]]).unwrap());
        for seed in 0..50 {
            assert_eq!(kmeans_cluster(&points, 2, seed).unwrap(), expected, "seed {seed}");
        }
    }

    #[test]
    fn range_errors() {
        let points = pts(&[(0.0, 0.0)]);
        assert_eq!(
            kmeans_cluster(&points, 2, 0).unwrap_err(),
            ClusteringError::ClusterCount { m: 2, n: 1 }
        );
        assert!(kmeans_cluster(&points, 0, 0).is_err());
    }
}
