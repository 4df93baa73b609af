//! Structural entry barrier under the rank-order mechanism.
//!
//! When `n` incumbents play their symmetric equilibrium and a newcomer with
//! the same cost function considers entering under an (n+1)-creator reward
//! vector that is no more generous rank by rank (and pays the last rank
//! nothing), the newcomer's expected reward never exceeds her cost at any
//! quality level. The market deters entry without any rule change.
//!
//! The same reasoning bounds equilibrium quality as markets grow: with a
//! unit reward budget and convex costs, the average quality is at most
//! `c^{-1}(1/n)`, which vanishes as `n` grows.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::ro_core::{rank_reward_expectation, MixedEquilibriumRo, RewardVector};
use crate::tol;

/// Expected reward `g_{n+1}(q)` of an entrant producing quality `q` against
/// `n` incumbents drawing from `incumbent_eq`, under the expanded reward
/// vector `new_rewards` (length `n + 1`).
///
/// The entrant's rank against the incumbents is binomial in the incumbent
/// CDF. At `q = 1` ties with the incumbents' atom are broken uniformly,
/// which averages the top rewards.
pub fn entrant_expected_reward(
    incumbent_eq: &MixedEquilibriumRo,
    new_rewards: &RewardVector,
    q: f64,
) -> Result<f64> {
    check_entrant_rewards(incumbent_eq, new_rewards)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("quality {q} outside [0, 1]")));
    }
    Ok(entrant_reward_unchecked(incumbent_eq, new_rewards, q))
}

fn entrant_reward_unchecked(
    incumbent_eq: &MixedEquilibriumRo,
    new_rewards: &RewardVector,
    q: f64,
) -> f64 {
    if q >= 1.0 {
        // Rank among `k + 1` creators tied at the top earns the running
        // average of the top rewards; k is binomial in the atom mass.
        let betas = new_rewards.cumulative_average();
        rank_reward_expectation(&betas, 1.0 - incumbent_eq.atom_mass_y())
    } else {
        rank_reward_expectation(new_rewards, incumbent_eq.cdf_eval(q))
    }
}

fn check_entrant_rewards(
    incumbent_eq: &MixedEquilibriumRo,
    new_rewards: &RewardVector,
) -> Result<()> {
    let n = incumbent_eq.rewards().n();
    if new_rewards.n() != n + 1 {
        return Err(Error::precondition(format!(
            "entrant mechanism must have {} rewards, got {}",
            n + 1,
            new_rewards.n()
        )));
    }
    for (i, (&new, &old)) in new_rewards
        .alphas()
        .iter()
        .zip(incumbent_eq.rewards().alphas())
        .enumerate()
    {
        if new > old + tol::BOUNDARY {
            return Err(Error::precondition(format!(
                "rank {} pays more after entry ({new} > {old})",
                i + 1
            )));
        }
    }
    if new_rewards.bottom() > tol::BOUNDARY {
        return Err(Error::precondition(
            "the entrant mechanism must pay the last rank nothing",
        ));
    }
    Ok(())
}

/// Pointwise comparison of the entrant's expected reward against her cost.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub grid: Vec<f64>,
    /// Incumbent CDF at each grid point.
    pub cdf: Vec<f64>,
    /// Entrant expected reward `g(q)` at each grid point.
    pub entrant_reward: Vec<f64>,
    /// Entry cost `c(q)` at each grid point.
    pub cost: Vec<f64>,
    /// `max_q g(q) - c(q)`; nonpositive means entry never profits.
    pub max_margin: f64,
    /// `g <= c` everywhere on the grid (within 1e-12).
    pub holds: bool,
    /// `g < c` strictly wherever the incumbent CDF is interior.
    pub strict_interior: bool,
    /// Whether `c(1) > 1` (the regime the barrier statement assumes);
    /// the report is still computed when it fails.
    pub cost_exceeds_budget: bool,
}

/// Evaluate the barrier on a quality grid.
pub fn barrier_holds(
    incumbent_eq: &MixedEquilibriumRo,
    new_rewards: &RewardVector,
    grid: &[f64],
) -> Result<BarrierReport> {
    check_entrant_rewards(incumbent_eq, new_rewards)?;
    let cost = incumbent_eq.cost();
    let mut report = BarrierReport {
        grid: Vec::with_capacity(grid.len()),
        cdf: Vec::with_capacity(grid.len()),
        entrant_reward: Vec::with_capacity(grid.len()),
        cost: Vec::with_capacity(grid.len()),
        max_margin: f64::NEG_INFINITY,
        holds: true,
        strict_interior: true,
        cost_exceeds_budget: cost.value_at_one() > 1.0,
    };
    for &raw in grid {
        let q = raw.clamp(0.0, 1.0);
        let f = incumbent_eq.cdf_eval(q);
        let g = entrant_reward_unchecked(incumbent_eq, new_rewards, q);
        let c = cost.value(q);
        let margin = g - c;
        report.max_margin = report.max_margin.max(margin);
        if margin > tol::BOUNDARY {
            report.holds = false;
        }
        if f > 0.0 && f < 1.0 && margin > -tol::BARRIER_STRICT {
            report.strict_interior = false;
        }
        report.grid.push(q);
        report.cdf.push(f);
        report.entrant_reward.push(g);
        report.cost.push(c);
    }
    Ok(report)
}

/// The default evaluation grid: 1001 uniform points plus the support
/// endpoint, where the interior/boundary transition happens.
pub fn default_barrier_grid(incumbent_eq: &MixedEquilibriumRo) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    grid.push(incumbent_eq.support_max());
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Upper bound `c^{-1}(1/n)` on average equilibrium quality in an
/// `n`-creator market with a unit reward budget and convex cost; the bound
/// vanishes as the market grows.
pub fn collapse_bound(cost: &CostSpec, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::precondition("market size must be at least 1"));
    }
    if !cost.is_convex() {
        return Err(Error::precondition(
            "the collapse bound applies to convex costs only",
        ));
    }
    Ok(cost.inverse_value(1.0 / n as f64))
}

/// Monte Carlo estimate of the entrant's expected reward at quality `q`:
/// simulate incumbent profiles, rank the entrant with uniform tie breaking,
/// and average the reward of her rank. Returns `(mean, stderr)`.
pub fn mc_entrant_reward(
    incumbent_eq: &MixedEquilibriumRo,
    new_rewards: &RewardVector,
    q: f64,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_entrant_rewards(incumbent_eq, new_rewards)?;
    if draws < 1000 {
        return Err(Error::precondition(format!(
            "need at least 1000 draws, got {draws}"
        )));
    }
    let n = incumbent_eq.rewards().n();
    let alphas = new_rewards.alphas();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..draws {
        let profile = incumbent_eq.sample_with(&mut rng, n);
        let above = profile.iter().filter(|&&x| x > q).count();
        let tied = profile.iter().filter(|&&x| x == q).count();
        // Uniform position within the tied block.
        let rank = above + rng.random_range(0..=tied);
        let reward = alphas[rank];
        sum += reward;
        sumsq += reward * reward;
    }
    let count = draws as f64;
    let mean = sum / count;
    let var = ((sumsq - sum * sum / count) / (count - 1.0)).max(0.0);
    Ok((mean, (var / count).sqrt()))
}

/// Shrink an incumbent mechanism into an entrant mechanism by appending a
/// zero reward for the extra rank (the canonical entry scenario).
pub fn append_zero_reward(rewards: &RewardVector) -> RewardVector {
    let mut alphas = rewards.alphas().to_vec();
    alphas.push(0.0);
    RewardVector::new(alphas).expect("appending a zero preserves validity")
}
