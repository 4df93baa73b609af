//! Reward-vector construction, optimal-mechanism search, and entry-fee
//! reallocation.
//!
//! The named mechanisms are Top-k (equal shares on the best k ranks), of
//! which Top-1 ("winner takes all") and final elimination (Top-(n-1):
//! everyone but the last shares evenly) are the extremes that maximize the
//! expected-maximum and expected-average quality respectively.
//!
//! An entry-fee reallocation charges every creator `xi`, then reinjects the
//! collected `n * xi` into the reward pool subject to a floor
//! (`bar_alpha_i >= max(xi, alpha_i)`) and a budget
//! (`sum(bar_alpha - alpha) <= n * xi`). `Max-Min` water-fills the bottom
//! ranks; `Max-Max` sends everything left after the floor to rank 1.
//! Because the floor keeps the bottom reward at or above the fee, the
//! equilibrium of the fee-charged pool equals that of the net-of-fee
//! mechanism `bar_alpha - xi`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;
use crate::ro_core::{
    classify_regime, rank_reward_expectation, solve_symmetric_ne, MixedEquilibriumRo, RegimeCase,
    RewardVector,
};
use crate::ro_metrics::{
    l1_metric, linf_metric, lp_objective, quadrature_report, LpMoment, MetricMethod, MetricReport,
};
use crate::tol;

/// Top-(n-1) equal rewards; the last-ranked creator gets nothing.
pub fn final_elimination(n: usize) -> Result<RewardVector> {
    if n < 2 {
        return Err(Error::precondition("final elimination needs n >= 2"));
    }
    let share = 1.0 / (n - 1) as f64;
    let mut alphas = vec![share; n - 1];
    alphas.push(0.0);
    RewardVector::new(alphas)
}

/// Winner takes all.
pub fn top1(n: usize) -> Result<RewardVector> {
    topk(n, 1)
}

/// Equal shares `1/k` on the best `k` ranks.
pub fn topk(n: usize, k: usize) -> Result<RewardVector> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::precondition(format!(
            "top-k needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut alphas = vec![1.0 / k as f64; k];
    alphas.resize(n, 0.0);
    RewardVector::new(alphas)
}

/// Transfer `delta` of reward mass from `lower_rank` to `raise_rank`
/// (0-based ranks). Total reward is preserved; the move must keep the
/// vector descending and nonnegative.
pub fn improvement_move(
    rewards: &RewardVector,
    raise_rank: usize,
    lower_rank: usize,
    delta: f64,
) -> Result<RewardVector> {
    let n = rewards.n();
    if raise_rank >= n || lower_rank >= n || raise_rank == lower_rank {
        return Err(Error::precondition(format!(
            "invalid rank pair ({raise_rank}, {lower_rank}) for n = {n}"
        )));
    }
    if delta < 0.0 {
        return Err(Error::precondition("transfer must be nonnegative"));
    }
    let mut alphas = rewards.alphas().to_vec();
    alphas[raise_rank] += delta;
    alphas[lower_rank] -= delta;
    RewardVector::unbudgeted(alphas)
}

/// Which quality benchmark a mechanism search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignObjective {
    /// Expected per-creator quality.
    L1,
    /// Per-creator moment `E[q^p]`, finite `p >= 1`.
    Lp(f64),
    /// Expected maximum quality.
    LInf,
}

impl DesignObjective {
    fn evaluate(&self, eq: &MixedEquilibriumRo) -> Result<f64> {
        match self {
            DesignObjective::L1 => l1_metric(eq),
            DesignObjective::Lp(p) => lp_objective(eq, *p),
            DesignObjective::LInf => linf_metric(eq),
        }
    }
}

/// Result of a mechanism search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub best: RewardVector,
    pub value: f64,
    /// Number of candidate vectors whose equilibrium was evaluated.
    pub candidates: usize,
    /// Whether the whole discretized simplex was enumerated.
    pub exhaustive: bool,
}

/// Search the budget-exhausting descending reward vectors at the given grid
/// resolution for the one whose symmetric equilibrium maximizes `objective`.
///
/// Requires `c(1) >= 1` so that every candidate lands in the interior
/// regime. Exhaustive for `n <= 4`; larger markets use step-transfer local
/// search from seeded random restarts. Ties within 1e-7 resolve to the
/// lexicographically smallest vector.
pub fn lp_optimal_search(
    n: usize,
    cost: &CostSpec,
    objective: DesignObjective,
    resolution: f64,
) -> Result<SearchOutcome> {
    if n < 2 {
        return Err(Error::precondition("search needs n >= 2"));
    }
    if cost.value_at_one() < 1.0 - tol::BOUNDARY {
        return Err(Error::precondition(format!(
            "interior regime requires c(1) >= 1, got c(1) = {}",
            cost.value_at_one()
        )));
    }
    let steps = (1.0 / resolution).round();
    if !steps.is_finite() || steps < 1.0 || (steps * resolution - 1.0).abs() > 1e-9 {
        return Err(Error::precondition(format!(
            "resolution {resolution} must evenly divide the unit budget"
        )));
    }
    let m = steps as usize;
    if n <= 4 {
        if resolution < 0.02 - 1e-12 {
            return Err(Error::precondition(
                "exhaustive search supports resolutions of 0.02 or coarser",
            ));
        }
        let candidates = descending_compositions(m, n);
        let values: Vec<(Vec<usize>, f64)> = candidates
            .into_par_iter()
            .map(|parts| {
                let vector = parts_to_rewards(&parts, m);
                let eq = solve_symmetric_ne(&vector, cost)?;
                let value = objective.evaluate(&eq)?;
                Ok((parts, value))
            })
            .collect::<Result<Vec<_>>>()?;
        let best_value = values
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let winner = values
            .iter()
            .filter(|(_, v)| *v >= best_value - tol::SEARCH_TIE)
            .map(|(parts, _)| parts)
            .min()
            .expect("nonempty candidate set");
        let best = parts_to_rewards(winner, m);
        let value = objective.evaluate(&solve_symmetric_ne(&best, cost)?)?;
        Ok(SearchOutcome {
            best,
            value,
            candidates: values.len(),
            exhaustive: true,
        })
    } else {
        local_search(n, m, cost, objective)
    }
}

fn parts_to_rewards(parts: &[usize], m: usize) -> RewardVector {
    let alphas = parts.iter().map(|&k| k as f64 / m as f64).collect();
    RewardVector::new(alphas).expect("grid vectors are valid by construction")
}

/// All descending part lists of length `n` summing to `m`.
fn descending_compositions(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fill_parts(m, n, m, &mut current, &mut out);
    out
}

fn fill_parts(
    remaining: usize,
    slots: usize,
    max_part: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if slots == 1 {
        if remaining <= max_part {
            current.push(remaining);
            out.push(current.clone());
            current.pop();
        }
        return;
    }
    // The first of `slots` descending parts must cover its share of the sum.
    let lo = remaining.div_ceil(slots);
    for k in lo..=remaining.min(max_part) {
        current.push(k);
        fill_parts(remaining - k, slots - 1, k, current, out);
        current.pop();
    }
}

fn local_search(
    n: usize,
    m: usize,
    cost: &CostSpec,
    objective: DesignObjective,
) -> Result<SearchOutcome> {
    let evaluate = |parts: &[usize]| -> Result<f64> {
        let eq = solve_symmetric_ne(&parts_to_rewards(parts, m), cost)?;
        objective.evaluate(&eq)
    };
    let mut starts: Vec<Vec<usize>> = Vec::new();
    // Final elimination and Top-1 are the known optima at the extremes.
    let mut fe = vec![m / (n - 1); n - 1];
    let mut leftover = m - (m / (n - 1)) * (n - 1);
    let mut idx = 0;
    while leftover > 0 {
        fe[idx] += 1;
        leftover -= 1;
        idx += 1;
    }
    fe.push(0);
    fe.sort_unstable_by(|a, b| b.cmp(a));
    starts.push(fe);
    let mut t1 = vec![0; n];
    t1[0] = m;
    starts.push(t1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xD5);
    for _ in 0..8 {
        let mut parts = vec![0usize; n];
        for _ in 0..m {
            parts[rng.random_range(0..n)] += 1;
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        starts.push(parts);
    }

    let mut evaluated = 0usize;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in starts {
        let mut parts = start;
        let mut value = evaluate(&parts)?;
        evaluated += 1;
        loop {
            let mut improved: Option<(f64, Vec<usize>)> = None;
            for to in 0..n {
                for from in 0..n {
                    if to == from || parts[from] == 0 {
                        continue;
                    }
                    let mut next = parts.clone();
                    next[to] += 1;
                    next[from] -= 1;
                    if !next.windows(2).all(|w| w[0] >= w[1]) {
                        continue;
                    }
                    let v = evaluate(&next)?;
                    evaluated += 1;
                    let beats_current = v > value + 1e-12;
                    let beats_candidate = match &improved {
                        Some((iv, ip)) => v > iv + 1e-12 || (v > iv - 1e-12 && next < *ip),
                        None => true,
                    };
                    if beats_current && beats_candidate {
                        improved = Some((v, next));
                    }
                }
            }
            match improved {
                Some((v, next)) => {
                    value = v;
                    parts = next;
                }
                None => break,
            }
        }
        let replace = match &best {
            Some((bv, bp)) => {
                value > bv + tol::SEARCH_TIE || (value > bv - tol::SEARCH_TIE && parts < *bp)
            }
            None => true,
        };
        if replace {
            best = Some((value, parts));
        }
    }
    let (value, parts) = best.expect("at least one start");
    Ok(SearchOutcome {
        best: parts_to_rewards(&parts, m),
        value,
        candidates: evaluated,
        exhaustive: false,
    })
}

/// Quality credited to a reward pool by the quantile integral of its reward
/// curve: `integral of c^{-1}(h_n(A, u)) du`.
///
/// This is the objective the reallocation schemes maximize. It equals
/// [`l1_metric`] of the solved equilibrium whenever the bottom reward is
/// zero; a positive bottom reward is credited as if it purchased quality.
pub fn pool_l1(rewards: &RewardVector, cost: &CostSpec) -> Result<f64> {
    pool_moment(rewards, cost, 1.0)
}

/// Pool analogue of [`linf_metric`]:
/// `n * integral of t^{n-1} c^{-1}(h_n(A, t)) dt`.
pub fn pool_linf(rewards: &RewardVector, cost: &CostSpec) -> Result<f64> {
    let n = rewards.n() as f64;
    adaptive_simpson(
        |t| {
            n * t.powi(rewards.n() as i32 - 1)
                * cost.inverse_value(rank_reward_expectation(rewards, t))
        },
        0.0,
        1.0,
        tol::QUADRATURE_ABS,
        tol::QUADRATURE_MAX_SUBDIV,
    )
}

/// Pool analogue of [`lp_objective`].
pub fn pool_lp(rewards: &RewardVector, cost: &CostSpec, p: f64) -> Result<f64> {
    if p < 1.0 || !p.is_finite() {
        return Err(Error::precondition(format!(
            "moment exponent must be a finite p >= 1, got {p}"
        )));
    }
    pool_moment(rewards, cost, p)
}

fn pool_moment(rewards: &RewardVector, cost: &CostSpec, p: f64) -> Result<f64> {
    adaptive_simpson(
        |u| {
            cost.inverse_value(rank_reward_expectation(rewards, u))
                .powf(p)
        },
        0.0,
        1.0,
        tol::QUADRATURE_ABS,
        tol::QUADRATURE_MAX_SUBDIV,
    )
}

fn pool_report(rewards: &RewardVector, cost: &CostSpec, p_list: &[f64]) -> Result<MetricReport> {
    let lp = p_list
        .iter()
        .map(|&p| {
            let value = pool_lp(rewards, cost, p)?;
            Ok(LpMoment {
                p,
                value,
                root: value.powf(1.0 / p),
                stderr: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        l1: pool_l1(rewards, cost)?,
        linf: pool_linf(rewards, cost)?,
        lp,
        method: MetricMethod::Quadrature,
        l1_stderr: None,
        linf_stderr: None,
    })
}

/// Entry-fee reallocation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReallocationScheme {
    /// Water-fill the bottom ranks: maximizes the minimum reward.
    MaxMin,
    /// Everything left after the floor goes to rank 1.
    MaxMax,
}

impl std::fmt::Display for ReallocationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReallocationScheme::MaxMin => f.write_str("max-min"),
            ReallocationScheme::MaxMax => f.write_str("max-max"),
        }
    }
}

/// A fee charge plus reinjection, before any equilibrium is solved.
#[derive(Debug, Clone, Serialize)]
pub struct Reallocation {
    pub entry_fee: f64,
    pub original: RewardVector,
    /// Fee-injected pool; its total may exceed the unit budget.
    pub reallocated: RewardVector,
    /// `reallocated - fee` at every rank; the mechanism whose equilibrium
    /// the fee-charged game inherits.
    pub net_equivalent: RewardVector,
}

/// Max-Min reallocation: remedy every reward up to the fee floor, then
/// repeatedly raise the bottom block of tied ranks to the next level until
/// the fee pool is spent (splitting the remainder evenly within the block
/// when it cannot reach the next level).
pub fn efrm_max_min(rewards: &RewardVector, fee: f64) -> Result<Reallocation> {
    let (mut bar, mut budget) = remedy(rewards, fee)?;
    let n = bar.len();
    while budget > tol::EFRM {
        let bottom = bar[n - 1];
        let mut block = 1;
        while block < n && bar[n - block - 1] <= bottom + tol::EFRM {
            block += 1;
        }
        if block == n {
            let add = budget / n as f64;
            for a in &mut bar {
                *a += add;
            }
            break;
        }
        let next = bar[n - block - 1];
        let step_cost = block as f64 * (next - bottom);
        if budget > step_cost {
            for a in &mut bar[n - block..] {
                *a = next;
            }
            budget -= step_cost;
        } else {
            let add = budget / block as f64;
            for a in &mut bar[n - block..] {
                *a += add;
            }
            break;
        }
    }
    finish_reallocation(rewards, bar, fee)
}

/// Max-Max reallocation: remedy to the fee floor, then add all remaining
/// fees to the top reward.
pub fn efrm_max_max(rewards: &RewardVector, fee: f64) -> Result<Reallocation> {
    let (mut bar, budget) = remedy(rewards, fee)?;
    bar[0] += budget;
    finish_reallocation(rewards, bar, fee)
}

fn remedy(rewards: &RewardVector, fee: f64) -> Result<(Vec<f64>, f64)> {
    if fee < 0.0 || !fee.is_finite() {
        return Err(Error::precondition(format!(
            "entry fee must be nonnegative, got {fee}"
        )));
    }
    let n = rewards.n();
    let mut pool = n as f64 * fee;
    let consumed: f64 = rewards.alphas().iter().map(|&a| (fee - a).max(0.0)).sum();
    // Each remedy term is at most the fee itself, so the pool always covers it.
    debug_assert!(consumed <= pool + tol::EFRM);
    pool -= consumed;
    let bar = rewards.alphas().iter().map(|&a| a.max(fee)).collect();
    Ok((bar, pool))
}

fn finish_reallocation(rewards: &RewardVector, bar: Vec<f64>, fee: f64) -> Result<Reallocation> {
    let net: Vec<f64> = bar.iter().map(|&a| (a - fee).max(0.0)).collect();
    let reallocated = RewardVector::unbudgeted(bar)?;
    let net_equivalent = RewardVector::new(net)?;
    let check = efrm_validate(rewards, reallocated.alphas(), fee);
    if !check.valid {
        return Err(Error::Inconsistent(format!(
            "reallocation violated its own constraints: {:?}",
            check.violations
        )));
    }
    Ok(Reallocation {
        entry_fee: fee,
        original: rewards.clone(),
        reallocated,
        net_equivalent,
    })
}

/// Outcome of checking a candidate reallocation against the floor, budget
/// and ordering constraints.
#[derive(Debug, Clone, Serialize)]
pub struct EfrmValidation {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Check `bar_alpha_i >= max(xi, alpha_i)`, `sum(bar - alpha) <= n * xi`,
/// and descending order, with 1e-12 slack.
pub fn efrm_validate(original: &RewardVector, reallocated: &[f64], fee: f64) -> EfrmValidation {
    let mut violations = Vec::new();
    if reallocated.len() != original.n() {
        violations.push(format!(
            "length mismatch: {} reallocated vs {} original",
            reallocated.len(),
            original.n()
        ));
        return EfrmValidation {
            valid: false,
            violations,
        };
    }
    for (i, (&bar, &alpha)) in reallocated.iter().zip(original.alphas()).enumerate() {
        let floor = fee.max(alpha);
        if bar < floor - tol::EFRM {
            violations.push(format!(
                "rank {}: reward {bar} below floor max(fee, alpha) = {floor}",
                i + 1
            ));
        }
    }
    let injected: f64 = reallocated
        .iter()
        .zip(original.alphas())
        .map(|(&bar, &alpha)| bar - alpha)
        .sum();
    let budget = original.n() as f64 * fee;
    if injected > budget + tol::EFRM {
        violations.push(format!(
            "budget exceeded: injected {injected} > n * fee = {budget}"
        ));
    }
    if !crate::ro_core::is_descending(reallocated) {
        violations.push("reallocated rewards are not descending".into());
    }
    EfrmValidation {
        valid: violations.is_empty(),
        violations,
    }
}

/// A reallocation together with the net-mechanism equilibrium and quality
/// metrics before and after.
///
/// The metric reports carry the reward-pool objectives (the quantity the
/// schemes are designed to maximize); whenever the relevant bottom reward
/// is zero these coincide with the equilibrium's own benchmarks. The solved
/// net equilibrium is included for direct inspection.
#[derive(Debug, Clone, Serialize)]
pub struct EfrmOutcome {
    pub entry_fee: f64,
    pub scheme: ReallocationScheme,
    pub original: RewardVector,
    pub reallocated: RewardVector,
    pub net_equivalent: RewardVector,
    pub equilibrium: MixedEquilibriumRo,
    pub metrics_before: MetricReport,
    pub metrics_after: MetricReport,
}

/// Apply a scheme and evaluate the market before and after.
///
/// The fee-charged game with pool `bar_alpha` has the same equilibrium as
/// the net mechanism `bar_alpha - xi` (the floor guarantees the bottom
/// reward covers the fee), so the net mechanism is what gets solved.
/// Outside the interior regime the pool integrals have no meaning and the
/// report falls back to the solved equilibrium's own quadrature metrics.
pub fn efrm_evaluate(
    rewards: &RewardVector,
    cost: &CostSpec,
    fee: f64,
    scheme: ReallocationScheme,
    p_list: &[f64],
) -> Result<EfrmOutcome> {
    let realloc = match scheme {
        ReallocationScheme::MaxMin => efrm_max_min(rewards, fee)?,
        ReallocationScheme::MaxMax => efrm_max_max(rewards, fee)?,
    };
    let equilibrium = solve_symmetric_ne(&realloc.net_equivalent, cost)?;
    let metrics_before = regime_aware_report(rewards, cost, p_list)?;
    let metrics_after = regime_aware_report(&realloc.net_equivalent, cost, p_list)?;
    Ok(EfrmOutcome {
        entry_fee: fee,
        scheme,
        original: realloc.original,
        reallocated: realloc.reallocated,
        net_equivalent: realloc.net_equivalent,
        equilibrium,
        metrics_before,
        metrics_after,
    })
}

fn regime_aware_report(
    rewards: &RewardVector,
    cost: &CostSpec,
    p_list: &[f64],
) -> Result<MetricReport> {
    if classify_regime(rewards, cost) == RegimeCase::Interior {
        pool_report(rewards, cost, p_list)
    } else {
        quadrature_report(&solve_symmetric_ne(rewards, cost)?, p_list)
    }
}
