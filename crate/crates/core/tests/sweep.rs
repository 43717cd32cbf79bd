use vcell_core::channel::SimulationConfig;
use vcell_core::clustering::{AffiliationRule, ClusteringError};
use vcell_core::evaluation::{aggregate, run_sweep, write_csv, ClusteringMethod, Execution, SweepRow};

fn cfg() -> SimulationConfig {
    SimulationConfig {
        num_bs: 4,
        num_users: 12,
        num_bands: 3,
        num_realizations: 6,
        ..SimulationConfig::default()
    }
}

fn csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).unwrap();
    buf
}

#[test]
fn rows_are_sorted_and_complete() {
    let c = cfg();
    let rows = run_sweep(&c, &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), c.num_realizations * 3 * 2 * c.num_bs);
    let keys: Vec<_> = rows.iter().map(|r| (r.realization, r.method, r.rule, r.num_cells)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted);
}

#[test]
fn repeated_runs_are_identical() {
    let c = cfg();
    let a = run_sweep(&c, &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap();
    let b = run_sweep(&c, &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
}

#[test]
fn thread_count_does_not_change_output() {
    let c = cfg();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_sweep(&c, &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap())
    };
    assert_eq!(csv_bytes(&run(1)), csv_bytes(&run(3)));
}

#[test]
fn master_seed_changes_results() {
    let a = run_sweep(&cfg(), &[ClusteringMethod::KMeans], &AffiliationRule::ALL, Execution::Sequential).unwrap();
    let other = SimulationConfig {
        master_seed: 1,
        ..cfg()
    };
    let b = run_sweep(&other, &[ClusteringMethod::KMeans], &AffiliationRule::ALL, Execution::Sequential).unwrap();
    assert_ne!(a, b);
}

#[test]
fn exhaustive_dominates_every_method() {
    let rows = run_sweep(&cfg(), &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap();
    for ex in rows.iter().filter(|r| r.method == ClusteringMethod::Exhaustive) {
        for other in rows.iter().filter(|r| {
            r.method != ClusteringMethod::Exhaustive
                && (r.realization, r.rule, r.num_cells) == (ex.realization, ex.rule, ex.num_cells)
        }) {
            assert!(ex.achieved_rate_bps >= other.achieved_rate_bps, "{ex:?} vs {other:?}");
        }
    }
}

#[test]
fn single_cell_is_method_independent() {
    let rows = run_sweep(&cfg(), &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap();
    for r in 0..cfg().num_realizations {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|x| x.realization == r && x.num_cells == 1)
            .map(|x| x.achieved_rate_bps)
            .collect();
        assert_eq!(vals.len(), 6);
        assert!(vals.iter().all(|&v| v == vals[0]));
    }
}

#[test]
fn aggregate_groups_match_rows() {
    let c = cfg();
    let rows = run_sweep(&c, &[ClusteringMethod::Hierarchical], &[AffiliationRule::ClosestBs], Execution::Parallel).unwrap();
    let agg = aggregate(&rows);
    assert_eq!(agg.len(), c.num_bs);
    for a in &agg {
        assert_eq!(a.realizations, c.num_realizations);
        let mean = rows
            .iter()
            .filter(|r| r.num_cells == a.num_cells)
            .map(|r| r.achieved_rate_bps)
            .sum::<f64>()
            / c.num_realizations as f64;
        assert!((a.mean_achieved_rate_bps - mean).abs() <= 1e-12 * mean);
    }
}

#[test]
fn oversized_exhaustive_is_rejected() {
    let c = SimulationConfig {
        num_bs: 11,
        ..cfg()
    };
    let err = run_sweep(&c, &ClusteringMethod::ALL, &AffiliationRule::ALL, Execution::Parallel).unwrap_err();
    assert!(matches!(
        err,
        vcell_core::Error::Clustering(ClusteringError::Capacity { n: 11, cap: 10 })
    ));
}

#[test]
fn every_partition_evaluates_on_realistic_channels() {
    // Realization 15 of this layout once produced a covariance whose Cholesky
    // pivots carried rounding residue in their imaginary parts.
    use vcell_core::channel::{generate_channels, generate_topology};
    use vcell_core::clustering::enumerate_partitions;
    use vcell_core::evaluation::evaluate_clustering;
    let c = SimulationConfig {
        num_bs: 5,
        num_users: 20,
        num_bands: 4,
        num_realizations: 20,
        ..SimulationConfig::default()
    };
    let topo = generate_topology(&c, 15);
    let channels = generate_channels(&c, &topo, 15);
    for m in 1..=c.num_bs {
        for p in enumerate_partitions(c.num_bs, m).unwrap() {
            for rule in AffiliationRule::ALL {
                evaluate_clustering(&c, &topo, &channels, &p, rule).unwrap();
            }
        }
    }
}
