//! Numerical tolerances used across the crate.
//!
//! Every threshold that a solver or validator relies on is pinned here.
//! All model quantities are O(1) by normalization (qualities and rewards
//! live in `[0, 1]`, total reward is at most 1), so absolute tolerances
//! are meaningful throughout.

/// Absolute tolerance on the cost value when inverting a cost function.
pub const COST_INVERSE_ABS: f64 = 1e-12;

/// Iteration cap for bisection fallbacks in cost inversion.
pub const COST_INVERSE_MAX_ITER: usize = 200;

/// Tolerance in the quantile variable `t` when inverting the reward curve
/// `h_n` to evaluate an equilibrium CDF.
pub const CDF_BISECT_T: f64 = 1e-10;

/// Tolerance in the atom mass `y` when solving the split-regime equation.
pub const ATOM_MASS_Y: f64 = 1e-12;

/// Absolute tolerance for adaptive quadrature of metric integrals.
pub const QUADRATURE_ABS: f64 = 1e-8;

/// Cap on the number of interval subdivisions in adaptive quadrature.
pub const QUADRATURE_MAX_SUBDIV: usize = 10_000;

/// Slack when comparing against reward-budget and regime boundaries.
pub const BOUNDARY: f64 = 1e-12;

/// Slack allowed when checking the exclusion condition `1/beta <= c'(0)`
/// for non-contributing creators.
pub const EXCLUSION: f64 = 1e-10;

/// Strictness floor for the "strict inequality in the interior" part of the
/// entry-barrier report.
pub const BARRIER_STRICT: f64 = 1e-12;

/// Slack for the entry-fee reallocation floor and budget checks.
pub const EFRM: f64 = 1e-12;

/// Net utilities above this (negative) floor count as non-negative when
/// determining fee survivors.
pub const SURVIVOR_NET: f64 = -1e-10;

/// Objective values within this window of the best are treated as exact ties
/// in mechanism grid searches (quadrature noise is ~1e-8).
pub const SEARCH_TIE: f64 = 1e-7;
