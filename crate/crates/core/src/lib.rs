//! Uplink cellular networks organized into virtual cells.
//!
//! Base stations are grouped by minimax-linkage hierarchical clustering (or
//! k-means, or exhaustive search), users join the cell of their affiliated BS,
//! and each cell's BSs decode their users jointly. Per-user, per-band powers
//! are allocated by cyclic coordinate ascent with water-filling block updates,
//! and the network is scored with the residual interference between cells.
//!
//! ```
//! use vcell_core::channel::{generate_channels, generate_topology, SimulationConfig};
//! use vcell_core::clustering::{hierarchical_cluster, AffiliationRule};
//! use vcell_core::evaluation::evaluate_clustering;
//!
//! let cfg = SimulationConfig { num_bs: 4, num_users: 8, num_bands: 2, num_realizations: 1, ..Default::default() };
//! let topo = generate_topology(&cfg, 0);
//! let channels = generate_channels(&cfg, &topo, 0);
//! let dendrogram = hierarchical_cluster(&topo.bs_positions).unwrap();
//! let net = evaluate_clustering(&cfg, &topo, &channels, dendrogram.level(2).unwrap(), AffiliationRule::ClosestBs)
//!     .unwrap();
//! assert!(net.achieved_sum_rate_bps > 0.0);
//! ```

pub mod allocator;
pub mod channel;
pub mod clustering;
pub mod error;
pub mod evaluation;

pub use error::{Error, Result};
