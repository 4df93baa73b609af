//! Pure Nash equilibrium of the proportional mechanism (a Tullock contest)
//! with heterogeneous convex costs.
//!
//! Rewriting the first-order conditions in the aggregate `beta = sum(q)` and
//! shares `x_i = q_i / beta` removes the denominators:
//!
//! ```text
//! x_i + beta * c_i'(beta * x_i) = 1   for contributing creators,
//! sum_i x_i = 1.
//! ```
//!
//! The left side is increasing in `x_i` and each share is decreasing in
//! `beta`, so both levels solve by bisection. Creators whose marginal cost
//! at zero exceeds `1 / beta` produce nothing: the contributing set is a
//! maximal prefix of the creators ordered by `c'(0)`, found by trying
//! prefixes from the largest down.

use serde::Serialize;

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::tol;

/// Per-creator share solution at a fixed aggregate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShareSolution {
    /// The share `x_i` solving `x + beta * c'(beta x) = 1`, or zero.
    pub share: f64,
    /// Whether the creator is priced out at this aggregate
    /// (`beta * c'(0) > 1`).
    pub priced_out: bool,
}

/// Solve each creator's share equation at aggregate `beta`.
pub fn shares_given_beta(costs: &[CostSpec], beta: f64) -> Result<Vec<ShareSolution>> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::precondition(format!(
            "aggregate must be positive, got {beta}"
        )));
    }
    require_convex(costs)?;
    Ok(costs.iter().map(|c| share_for(c, beta)).collect())
}

fn share_for(cost: &CostSpec, beta: f64) -> ShareSolution {
    if beta * cost.deriv_extended(0.0) > 1.0 {
        return ShareSolution {
            share: 0.0,
            priced_out: true,
        };
    }
    // x + beta c'(beta x) is increasing in x and crosses 1 somewhere in
    // (0, 1]. Near-linear convex costs can push the root below 1e-12, so
    // bisect the binary exponent of x: that resolves the share to relative
    // machine precision at every scale.
    let crossed = |x: f64| x + beta * cost.deriv_extended(beta * x) >= 1.0;
    if crossed(f64::MIN_POSITIVE) {
        // Root below the representable range; the creator is in the market
        // with a vanishing share.
        return ShareSolution {
            share: 0.0,
            priced_out: false,
        };
    }
    let (mut lo_t, mut hi_t) = (-1074.0f64, 0.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo_t + hi_t);
        if crossed(mid.exp2()) {
            hi_t = mid;
        } else {
            lo_t = mid;
        }
    }
    ShareSolution {
        share: (0.5 * (lo_t + hi_t)).exp2(),
        priced_out: false,
    }
}

fn require_convex(costs: &[CostSpec]) -> Result<()> {
    for (i, c) in costs.iter().enumerate() {
        if !c.is_convex() {
            return Err(Error::precondition(format!(
                "creator {}: the proportional solver requires convex costs, got {c:?}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The unique pure Nash equilibrium of the proportional mechanism.
#[derive(Debug, Clone, Serialize)]
pub struct PureEquilibriumPm {
    /// Equilibrium qualities `q*` in the original creator order.
    pub qualities: Vec<f64>,
    /// Aggregate quality `beta* = sum(q*)`.
    pub aggregate: f64,
    /// Reward shares `x_i = q_i / beta*` (zeros when nobody produces).
    pub shares: Vec<f64>,
    /// Indices (0-based, original order) of creators with `q_i* > 0`.
    pub contributing: Vec<usize>,
    /// Equilibrium utilities `x_i - c_i(q_i*)`.
    pub utilities: Vec<f64>,
}

/// Solve the equilibrium for two or more convex-cost creators.
pub fn solve_pm_ne(costs: &[CostSpec]) -> Result<PureEquilibriumPm> {
    solve_pm_ne_scaled(costs, 1.0)
}

/// Internal solver with a bracket scale knob so tests can probe that the
/// answer does not depend on the initial bracket.
fn solve_pm_ne_scaled(costs: &[CostSpec], bracket_scale: f64) -> Result<PureEquilibriumPm> {
    let n = costs.len();
    if n < 2 {
        return Err(Error::precondition(
            "the proportional market needs at least 2 creators",
        ));
    }
    require_convex(costs)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        costs[a]
            .deriv_extended(0.0)
            .partial_cmp(&costs[b].deriv_extended(0.0))
            .unwrap()
            .then(a.cmp(&b))
    });

    for k in (2..=n).rev() {
        let subset: Vec<usize> = order[..k].to_vec();
        let subset_costs: Vec<&CostSpec> = subset.iter().map(|&i| &costs[i]).collect();
        let beta = solve_aggregate(&subset_costs, bracket_scale)?;
        let shares: Vec<ShareSolution> = subset_costs.iter().map(|c| share_for(c, beta)).collect();
        // Membership is decided by the pricing condition, not by share
        // magnitude: zero-marginal-cost creators stay in the market with
        // arbitrarily small positive shares.
        if shares.iter().any(|s| s.priced_out) {
            continue;
        }
        let excluded_ok = order[k..]
            .iter()
            .all(|&j| 1.0 / beta <= costs[j].deriv_extended(0.0) + tol::EXCLUSION);
        if !excluded_ok {
            continue;
        }
        let mut qualities = vec![0.0; n];
        let mut share_vec = vec![0.0; n];
        let mut utilities = vec![0.0; n];
        for (pos, &i) in subset.iter().enumerate() {
            let x = shares[pos].share;
            let q = beta * x;
            if q > 1.0 + tol::BOUNDARY {
                return Err(Error::precondition(format!(
                    "equilibrium quality {q} for creator {} exceeds 1; \
                     the instance leaves the model's quality domain",
                    i + 1
                )));
            }
            qualities[i] = q.min(1.0);
            share_vec[i] = x;
            utilities[i] = x - costs[i].value(qualities[i]);
        }
        let mut contributing: Vec<usize> = subset
            .iter()
            .zip(&shares)
            .filter(|(_, s)| s.share > 0.0)
            .map(|(&i, _)| i)
            .collect();
        contributing.sort_unstable();
        return Ok(PureEquilibriumPm {
            qualities,
            aggregate: beta,
            shares: share_vec,
            contributing,
            utilities,
        });
    }
    Err(Error::Inconsistent(
        "no contributing prefix solved; two convex-cost creators always do".into(),
    ))
}

/// Total share as a function of the aggregate is continuous and strictly
/// decreasing through 1; bracket it and bisect.
fn solve_aggregate(costs: &[&CostSpec], bracket_scale: f64) -> Result<f64> {
    let k = costs.len();
    let sum_shares = |beta: f64| -> f64 {
        if beta == 0.0 {
            return k as f64;
        }
        costs.iter().map(|c| share_for(c, beta).share).sum()
    };
    let zero_derivs: f64 = costs.iter().map(|c| c.deriv_extended(0.0)).sum();
    let mut hi = if zero_derivs > 0.0 {
        (k as f64 - 1.0) / zero_derivs
    } else {
        1.0
    };
    hi *= bracket_scale;
    let cap = (1u64 << 30) as f64;
    while sum_shares(hi) > 1.0 {
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoConvergence(
                "aggregate bracket grew past 2^30 without covering the root".into(),
            ));
        }
    }
    crate::numeric::bisect_root(|beta| sum_shares(beta) - 1.0, 0.0, hi, 0.0, 200)
}

/// Indices of creators producing strictly positive quality at equilibrium.
pub fn contributing_set(costs: &[CostSpec]) -> Result<Vec<usize>> {
    Ok(solve_pm_ne(costs)?.contributing)
}

/// The entry barrier `1 / beta*` sustained by the contributing creators:
/// anyone with `c'(0)` above it stays out.
pub fn barrier_level(eq: &PureEquilibriumPm) -> Result<f64> {
    if eq.aggregate <= 0.0 {
        return Err(Error::precondition(
            "degenerate equilibrium: nobody produces",
        ));
    }
    Ok(1.0 / eq.aggregate)
}

/// Sufficient condition for every creator to contribute: marginal costs at
/// zero are either all zero or none carries a `1/(n-1)` fraction of their
/// total. Two-creator markets always sustain full contribution.
pub fn check_contributing_sufficient(costs: &[CostSpec]) -> Result<bool> {
    let n = costs.len();
    if n < 2 {
        return Err(Error::precondition("need at least 2 creators"));
    }
    if n == 2 {
        return Ok(true);
    }
    let derivs: Vec<f64> = costs.iter().map(|c| c.deriv_extended(0.0)).collect();
    let total: f64 = derivs.iter().sum();
    if total == 0.0 {
        return Ok(true);
    }
    Ok(derivs.iter().all(|&d| d / total < 1.0 / (n as f64 - 1.0)))
}

/// Diagnostic form of the contribution condition evaluated at equilibrium
/// marginal costs rather than at zero. Reported, not enforced.
pub fn contributing_equilibrium_diagnostic(
    eq: &PureEquilibriumPm,
    costs: &[CostSpec],
) -> Result<bool> {
    let n = costs.len();
    if n < 2 || eq.qualities.len() != n {
        return Err(Error::precondition("equilibrium/cost size mismatch"));
    }
    let derivs: Vec<f64> = costs
        .iter()
        .zip(&eq.qualities)
        .map(|(c, &q)| c.deriv_extended(q))
        .collect();
    let total: f64 = derivs.iter().sum();
    if total == 0.0 {
        return Ok(true);
    }
    Ok(derivs.iter().all(|&d| d / total < 1.0 / (n as f64 - 1.0)))
}

/// Utilities of an arbitrary quality profile under the proportional reward.
pub fn pm_utilities(costs: &[CostSpec], qualities: &[f64]) -> Result<Vec<f64>> {
    if costs.len() != qualities.len() {
        return Err(Error::precondition("quality/cost size mismatch"));
    }
    let total: f64 = qualities.iter().sum();
    costs
        .iter()
        .zip(qualities)
        .map(|(c, &q)| {
            let reward = if total > 0.0 { q / total } else { 0.0 };
            Ok(reward - c.eval(q)?)
        })
        .collect()
}

/// Largest gain any single creator can reach by deviating to a grid point
/// while the others hold their equilibrium qualities.
pub fn verify_pm_best_response(
    eq: &PureEquilibriumPm,
    costs: &[CostSpec],
    grid: &[f64],
) -> Result<f64> {
    let n = costs.len();
    if n < 2 || eq.qualities.len() != n {
        return Err(Error::precondition(
            "best-response check needs n >= 2 matching creators",
        ));
    }
    let aggregate: f64 = eq.qualities.iter().sum();
    let mut worst = f64::NEG_INFINITY;
    for ((cost, &quality), &utility) in costs.iter().zip(&eq.qualities).zip(&eq.utilities) {
        let others = aggregate - quality;
        for &raw in grid {
            let q = raw.clamp(0.0, 1.0);
            let total = q + others;
            let reward = if total > 0.0 { q / total } else { 0.0 };
            let gain = reward - cost.value(q) - utility;
            worst = worst.max(gain);
        }
    }
    Ok(worst)
}
