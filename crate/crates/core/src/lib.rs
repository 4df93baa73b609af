//! Equilibrium computation for creator-competition games.
//!
//! A content market has `n` creators, each choosing a quality level in `[0, 1]`
//! at a production cost given by a [`cost::CostSpec`]. The platform pays the
//! creators through one of two reward mechanisms:
//!
//! * **Rank-Order (RO)** — a descending reward vector pays the i-th ranked
//!   creator `alpha_i`, ties broken at random. [`ro_core`] computes the
//!   symmetric mixed Nash equilibrium (three regimes: interior, everyone at
//!   perfect quality, or a split with an atom at `q = 1`), [`ro_metrics`]
//!   integrates its quality benchmarks, [`ro_design`] searches for optimal
//!   reward vectors and implements entry-fee reallocation, and [`ro_barrier`]
//!   verifies that the equilibrium deters new entrants.
//! * **Proportional (PM)** — each creator receives `q_i / sum(q_j)`, the
//!   classic Tullock contest. [`pm_core`] solves the unique pure Nash
//!   equilibrium with heterogeneous convex costs and [`pm_fee`] layers entry
//!   fees and survivor-set sweeps on top of it.
//!
//! All solvers are deterministic; Monte Carlo routines take explicit seeds.

pub mod cost;
pub mod error;
pub mod numeric;
pub mod pm_core;
pub mod pm_fee;
pub mod ro_barrier;
pub mod ro_core;
pub mod ro_design;
pub mod ro_metrics;
pub mod tol;

pub use cost::CostSpec;
pub use error::{Error, Result};
pub use pm_core::PureEquilibriumPm;
pub use pm_fee::FeeSweepRow;
pub use ro_core::{MixedEquilibriumRo, RegimeCase, RewardVector};
pub use ro_design::EfrmOutcome;
pub use ro_metrics::MetricReport;
