//! Symmetric mixed Nash equilibria under the rank-order mechanism.
//!
//! With descending rewards `alpha_1 >= ... >= alpha_n` and a common cost
//! function, the symmetric equilibrium falls into one of three regimes,
//! keyed by how the cost of a perfect item compares with the rewards:
//!
//! * [`RegimeCase::Interior`] — `c(1) >= alpha_1`: an atomless CDF on
//!   `[0, q_max]` determined by `h_n(A, F(q)) = c(q)`.
//! * [`RegimeCase::AllPerfect`] — `c(1) <= mean(alpha)`: a point mass at
//!   `q = 1`.
//! * [`RegimeCase::Split`] — in between: an atom of mass `y` at `q = 1`
//!   plus a continuous part on `[0, q_hat]`.
//!
//! `h_n(A, t)` is the expected reward of a creator sitting at quantile `t`
//! of the common mixed strategy: a binomial mixture of the rank rewards.
//!
//! A nonzero bottom reward acts as a base payment every creator collects
//! regardless of rank, so it never changes incentives: classification and
//! construction run net of it. The interior functional equation becomes
//! `h_n(A, F(q)) = c(q) - c(0) + alpha_n`, which is also the equilibrium
//! used to net entry fees out of fee-injected reward pools.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::numeric;
use crate::tol;

/// Descending nonnegative rank rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    alphas: Vec<f64>,
}

impl RewardVector {
    /// Rewards for a standard mechanism: descending, nonnegative, with total
    /// at most 1.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        let v = Self::unbudgeted(alphas)?;
        if v.total() > 1.0 + tol::BOUNDARY {
            return Err(Error::precondition(format!(
                "reward budget exceeded: total {} > 1",
                v.total()
            )));
        }
        Ok(v)
    }

    /// Rewards without the unit-budget bound (fee-injected pools and
    /// cumulative-average vectors exceed it).
    pub fn unbudgeted(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::precondition("reward vector is empty"));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::precondition(format!(
                    "reward at rank {} is {a}, need a nonnegative real",
                    i + 1
                )));
            }
        }
        if !is_descending(&alphas) {
            return Err(Error::precondition(format!(
                "rewards must be descending, got {alphas:?}"
            )));
        }
        Ok(RewardVector { alphas })
    }

    pub(crate) fn from_descending_unchecked(alphas: Vec<f64>) -> Self {
        debug_assert!(is_descending(&alphas));
        RewardVector { alphas }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Number of creators `n`.
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn total(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn top(&self) -> f64 {
        self.alphas[0]
    }

    pub fn bottom(&self) -> f64 {
        *self.alphas.last().unwrap()
    }

    /// Whether the whole unit budget is allocated.
    pub fn is_budget_exhausted(&self) -> bool {
        (self.total() - 1.0).abs() <= tol::BOUNDARY
    }

    /// The vector of cumulative averages `B_k = (alpha_1 + ... + alpha_k)/k`,
    /// the expected reward when tying with `k - 1` others at the top.
    pub fn cumulative_average(&self) -> RewardVector {
        let mut acc = 0.0;
        let betas = self
            .alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                acc += a;
                acc / (i + 1) as f64
            })
            .collect();
        RewardVector::from_descending_unchecked(betas)
    }
}

impl Serialize for RewardVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.alphas.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RewardVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let alphas = Vec::<f64>::deserialize(d)?;
        RewardVector::unbudgeted(alphas).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_descending(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] >= w[1] - tol::BOUNDARY)
}

/// Expected reward of a creator at quantile `t` of the symmetric strategy:
/// `h_n(A, t) = sum_i alpha_{i+1} C(n-1, i) t^{n-1-i} (1-t)^i`.
///
/// Nondecreasing in `t`, with `h_n(A, 0) = alpha_n` and `h_n(A, 1) = alpha_1`
/// exactly.
pub fn rank_reward_expectation(rewards: &RewardVector, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let alphas = rewards.alphas();
    let m = alphas.len() - 1; // opponents
    if t == 0.0 {
        return alphas[m];
    }
    if t == 1.0 {
        return alphas[0];
    }
    let mut coeff = 1.0; // C(m, i), built multiplicatively
    let mut acc = 0.0;
    for (i, &alpha) in alphas.iter().enumerate() {
        let weight = coeff * t.powi((m - i) as i32) * (1.0 - t).powi(i as i32);
        acc += alpha * weight;
        coeff = coeff * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// The vector of cumulative averages of the rewards (free-function form).
pub fn cumulative_average_rewards(rewards: &RewardVector) -> RewardVector {
    rewards.cumulative_average()
}

/// Which of the three equilibrium regimes applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeCase {
    Interior,
    AllPerfect,
    Split,
}

impl std::fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            RegimeCase::Interior => "interior",
            RegimeCase::AllPerfect => "all_perfect",
            RegimeCase::Split => "split",
        };
        f.write_str(tag)
    }
}

/// Classify the regime from `c(1)` against the top and mean rewards.
///
/// A positive bottom reward is a payment every rank collects, so it shifts
/// nothing strategically: the comparison runs net of it (`alpha_1 - alpha_n`
/// and `mean(alpha) - alpha_n`), which reduces to the plain `alpha_1` /
/// `mean(alpha)` test in the standard zero-bottom model. Boundary ties
/// (within 1e-12) resolve to `Interior` and `AllPerfect` respectively;
/// either construction is an equilibrium at the equalities.
pub fn classify_regime(rewards: &RewardVector, cost: &CostSpec) -> RegimeCase {
    let c1 = cost.value_at_one();
    let base = rewards.bottom();
    if c1 >= rewards.top() - base - tol::BOUNDARY {
        RegimeCase::Interior
    } else if c1 <= rewards.total() / rewards.n() as f64 - base + tol::BOUNDARY {
        RegimeCase::AllPerfect
    } else {
        RegimeCase::Split
    }
}

/// A solved symmetric mixed equilibrium.
///
/// The CDF is held implicitly (rewards, cost and case data) and evaluated on
/// demand by inverting the monotone reward curve; nothing is tabulated.
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct MixedEquilibriumRo {
    case: RegimeCase,
    atom_mass_y: f64,
    support_max: f64,
    rewards: RewardVector,
    cost: CostSpec,
    base_reward: f64,
}

impl MixedEquilibriumRo {
    pub fn case(&self) -> RegimeCase {
        self.case
    }

    /// Probability mass placed on perfect quality `q = 1`.
    pub fn atom_mass_y(&self) -> f64 {
        self.atom_mass_y
    }

    /// Upper end of the continuous support (`q_max`, `q_hat`, or 1).
    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    pub fn rewards(&self) -> &RewardVector {
        &self.rewards
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    /// Rank-independent payment collected by every creator (the bottom
    /// reward in the interior construction; zero in the default model).
    pub fn base_reward(&self) -> f64 {
        self.base_reward
    }

    /// Equilibrium expected utility of each creator: the base payment in
    /// the zero-profit regimes, the mean reward net of the perfect-item
    /// cost when everyone produces at `q = 1`.
    pub fn expected_utility(&self) -> f64 {
        match self.case {
            RegimeCase::Interior | RegimeCase::Split => self.base_reward,
            RegimeCase::AllPerfect => {
                self.rewards.total() / self.rewards.n() as f64 - self.cost.value_at_one()
            }
        }
    }

    /// Equilibrium CDF at `q`.
    ///
    /// On the continuous support this is the smallest `t` with
    /// `h_n(A, t) = c(q) - c(0) + base`; above the support it is `1 - y`,
    /// and `F(1) = 1`.
    pub fn cdf_eval(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q >= 1.0 {
            return 1.0;
        }
        match self.case {
            RegimeCase::AllPerfect => 0.0,
            _ => {
                let ceiling = 1.0 - self.atom_mass_y;
                if q >= self.support_max {
                    return ceiling;
                }
                let target = self.cost.value(q) + self.base_reward;
                numeric::invert_nondecreasing(
                    |t| rank_reward_expectation(&self.rewards, t),
                    0.0,
                    ceiling,
                    target,
                    tol::CDF_BISECT_T,
                )
            }
        }
    }

    /// Quantile function: `c^{-1}(h_n(A, u) - base)` for `u <= 1 - y`, else 1.
    pub fn quantile_eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.case == RegimeCase::AllPerfect {
            return 1.0;
        }
        if u > 1.0 - self.atom_mass_y {
            return 1.0;
        }
        let v = rank_reward_expectation(&self.rewards, u) - self.base_reward;
        self.cost.inverse_value(v)
    }

    /// Inverse-transform samples from the equilibrium distribution.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub(crate) fn sample_with<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| self.quantile_eval(rng.random::<f64>()))
            .collect()
    }

    /// Expected reward of a single deviator playing `q` against `n - 1`
    /// opponents on this equilibrium. At `q = 1` ties with the atom are
    /// broken uniformly, which averages the top rewards.
    pub fn deviation_reward(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q >= 1.0 {
            let betas = self.rewards.cumulative_average();
            rank_reward_expectation(&betas, 1.0 - self.atom_mass_y)
        } else {
            rank_reward_expectation(&self.rewards, self.cdf_eval(q))
        }
    }

    /// Largest utility gain available to a unilateral deviation over the
    /// grid of candidate pure strategies; at (or below) zero the profile is
    /// a Nash equilibrium up to the grid resolution.
    pub fn verify_best_response(&self, deviation_grid: &[f64]) -> f64 {
        let baseline = self.expected_utility();
        deviation_grid
            .iter()
            .map(|&q| {
                let q = q.clamp(0.0, 1.0);
                self.deviation_reward(q) - self.cost.value(q) - baseline
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Serialize for MixedEquilibriumRo {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MixedEquilibriumRo", 6)?;
        st.serialize_field("case", &self.case)?;
        st.serialize_field("atom_mass_y", &self.atom_mass_y)?;
        st.serialize_field("support_max", &self.support_max)?;
        st.serialize_field("rewards", &self.rewards)?;
        st.serialize_field("cost", &self.cost)?;
        st.serialize_field("base_reward", &self.base_reward)?;
        st.end()
    }
}

/// Solve the symmetric mixed Nash equilibrium for creators sharing `cost`.
pub fn solve_symmetric_ne(rewards: &RewardVector, cost: &CostSpec) -> Result<MixedEquilibriumRo> {
    if rewards.n() < 2 {
        return Err(Error::precondition("need at least 2 creators"));
    }
    match classify_regime(rewards, cost) {
        RegimeCase::Interior => interior_equilibrium(rewards, cost),
        RegimeCase::AllPerfect => Ok(MixedEquilibriumRo {
            case: RegimeCase::AllPerfect,
            atom_mass_y: 1.0,
            support_max: 1.0,
            rewards: rewards.clone(),
            cost: cost.clone(),
            base_reward: 0.0,
        }),
        RegimeCase::Split => split_equilibrium(rewards, cost),
    }
}

/// Interior-style equilibrium with an explicit base reward: the bottom
/// reward is paid regardless of rank, the support is
/// `[0, c^{-1}(alpha_1 - alpha_n + c(0))]`, and the CDF solves
/// `h_n(A, F(q)) = c(q) - c(0) + alpha_n`.
///
/// This is what justifies netting an entry fee out of a fee-injected pool:
/// charging `xi` and flooring the bottom reward at `xi` leaves the
/// equilibrium of the net mechanism unchanged.
pub fn solve_base_reward_ne(rewards: &RewardVector, cost: &CostSpec) -> Result<MixedEquilibriumRo> {
    if rewards.n() < 2 {
        return Err(Error::precondition("need at least 2 creators"));
    }
    if rewards.bottom() < cost.value(0.0) {
        return Err(Error::precondition(format!(
            "bottom reward {} below c(0); creators would take losses",
            rewards.bottom()
        )));
    }
    if rewards.top() <= rewards.bottom() + tol::BOUNDARY {
        return Err(Error::precondition(
            "top reward must strictly exceed the bottom reward",
        ));
    }
    if rewards.top() - rewards.bottom() > cost.value_at_one() + tol::BOUNDARY {
        return Err(Error::precondition(format!(
            "reward spread {} exceeds c(1) = {}; support would leave [0, 1]",
            rewards.top() - rewards.bottom(),
            cost.value_at_one()
        )));
    }
    interior_equilibrium(rewards, cost)
}

fn interior_equilibrium(rewards: &RewardVector, cost: &CostSpec) -> Result<MixedEquilibriumRo> {
    let base = rewards.bottom();
    let support_max = cost.inverse_value(rewards.top() - base);
    Ok(MixedEquilibriumRo {
        case: RegimeCase::Interior,
        atom_mass_y: 0.0,
        support_max,
        rewards: rewards.clone(),
        cost: cost.clone(),
        base_reward: base,
    })
}

fn split_equilibrium(rewards: &RewardVector, cost: &CostSpec) -> Result<MixedEquilibriumRo> {
    let c1 = cost.value_at_one();
    let base = rewards.bottom();
    let betas = rewards.cumulative_average();
    // Net of the base payment, h_n(B, 1 - y) - base falls from
    // alpha_1 - base to mean(alpha) - base as y runs 0 -> 1, and c(1) sits
    // strictly between in this regime.
    let atom = numeric::bisect_root(
        |y| rank_reward_expectation(&betas, 1.0 - y) - base - c1,
        0.0,
        1.0,
        tol::ATOM_MASS_Y,
        200,
    )?;
    if !(atom > 0.0 && atom < 1.0) {
        return Err(Error::Inconsistent(format!(
            "split atom mass {atom} not in (0, 1)"
        )));
    }
    let residual = rank_reward_expectation(&betas, 1.0 - atom) - base - c1;
    if residual.abs() > 1e-10 {
        return Err(Error::NoConvergence(format!(
            "split atom equation residual {residual}"
        )));
    }
    let q_hat = cost.inverse_value(rank_reward_expectation(rewards, 1.0 - atom) - base);
    if q_hat >= 1.0 {
        return Err(Error::Inconsistent(
            "split support reaches q = 1; classification disagrees".into(),
        ));
    }
    Ok(MixedEquilibriumRo {
        case: RegimeCase::Split,
        atom_mass_y: atom,
        support_max: q_hat,
        rewards: rewards.clone(),
        cost: cost.clone(),
        base_reward: base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn top2_of_3() -> RewardVector {
        RewardVector::new(vec![0.5, 0.5, 0.0]).unwrap()
    }

    #[test]
    fn reward_vector_validation() {
        assert!(RewardVector::new(vec![0.5, 0.5, 0.0]).is_ok());
        assert!(RewardVector::new(vec![0.4, 0.5, 0.0]).is_err());
        assert!(RewardVector::new(vec![0.5, -0.1]).is_err());
        assert!(RewardVector::new(vec![0.8, 0.5]).is_err());
        assert!(RewardVector::unbudgeted(vec![1.5, 0.5, 0.5]).is_ok());
        assert!(RewardVector::new(vec![]).is_err());
    }

    #[test]
    fn h_examples() {
        let a = top2_of_3();
        assert_eq!(rank_reward_expectation(&a, 1.0), 0.5);
        assert_eq!(rank_reward_expectation(&a, 0.0), 0.0);
        // h_3 = t - t^2/2 for the top-2 vector.
        assert!((rank_reward_expectation(&a, 0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn cumulative_average_examples() {
        let b = top2_of_3().cumulative_average();
        assert_eq!(b.alphas(), &[0.5, 0.5, 1.0 / 3.0]);
        let b = RewardVector::new(vec![1.0, 0.0, 0.0])
            .unwrap()
            .cumulative_average();
        assert!((b.alphas()[1] - 0.5).abs() < 1e-15);
        assert!((b.alphas()[2] - 1.0 / 3.0).abs() < 1e-15);
        let u = RewardVector::new(vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(u.cumulative_average().alphas(), u.alphas());
    }

    #[test]
    fn classify_worked_examples() {
        let a = top2_of_3();
        let interior = CostSpec::linear(1.0).unwrap();
        let all_perfect = CostSpec::linear(0.25).unwrap();
        let split = CostSpec::linear(0.4).unwrap();
        assert_eq!(classify_regime(&a, &interior), RegimeCase::Interior);
        assert_eq!(classify_regime(&a, &all_perfect), RegimeCase::AllPerfect);
        assert_eq!(classify_regime(&a, &split), RegimeCase::Split);
    }

    #[test]
    fn classify_boundaries_resolve_as_documented() {
        let a = top2_of_3();
        // c(1) exactly alpha_1.
        assert_eq!(
            classify_regime(&a, &CostSpec::linear(0.5).unwrap()),
            RegimeCase::Interior
        );
        // c(1) exactly the mean reward.
        assert_eq!(
            classify_regime(&a, &CostSpec::linear(1.0 / 3.0).unwrap()),
            RegimeCase::AllPerfect
        );
    }

    #[test]
    fn interior_example_matches_closed_form() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(1.0).unwrap()).unwrap();
        assert_eq!(eq.case(), RegimeCase::Interior);
        assert!((eq.support_max() - 0.5).abs() < 1e-12);
        assert_eq!(eq.atom_mass_y(), 0.0);
        for k in 0..=100 {
            let q = 0.5 * k as f64 / 100.0;
            let expected = 1.0 - (1.0 - 2.0 * q).max(0.0).sqrt();
            assert!(
                (eq.cdf_eval(q) - expected).abs() < 1e-9,
                "F({q}) = {} vs {expected}",
                eq.cdf_eval(q)
            );
        }
        assert_eq!(eq.cdf_eval(0.0), 0.0);
        assert_eq!(eq.cdf_eval(1.0), 1.0);
    }

    #[test]
    fn all_perfect_example() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.25).unwrap()).unwrap();
        assert_eq!(eq.case(), RegimeCase::AllPerfect);
        assert_eq!(eq.atom_mass_y(), 1.0);
        // Expected reward of each creator is the mean reward, 1/3.
        let reward = eq.expected_utility() + eq.cost().value_at_one();
        assert!((reward - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(eq.cdf_eval(0.9999), 0.0);
        assert_eq!(eq.quantile_eval(0.5), 1.0);
    }

    #[test]
    fn split_example_matches_closed_form() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.4).unwrap()).unwrap();
        assert_eq!(eq.case(), RegimeCase::Split);
        assert!((eq.atom_mass_y() - 0.6f64.sqrt()).abs() < 1e-10);
        assert!((eq.support_max() - 0.5).abs() < 1e-10);
        for k in 0..=50 {
            let q = 0.5 * k as f64 / 50.0;
            let expected = 1.0 - (1.0 - 0.8 * q).max(0.0).sqrt();
            assert!((eq.cdf_eval(q) - expected).abs() < 1e-9);
        }
        // Between the continuous support and the atom the CDF is flat.
        let plateau = 1.0 - 0.6f64.sqrt();
        assert!((eq.cdf_eval(0.75) - plateau).abs() < 1e-10);
        assert!((eq.cdf_eval(0.5000001) - plateau).abs() < 1e-6);
    }

    #[test]
    fn split_atom_equation_residual_is_tiny() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.4).unwrap()).unwrap();
        let betas = eq.rewards().cumulative_average();
        let lhs = rank_reward_expectation(&betas, 1.0 - eq.atom_mass_y());
        assert!((lhs - 0.4).abs() < 1e-10);
    }

    #[test]
    fn base_reward_top1_example() {
        let rewards = RewardVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let eq = solve_base_reward_ne(&rewards, &CostSpec::linear(1.0).unwrap()).unwrap();
        assert!((eq.support_max() - 1.0).abs() < 1e-12);
        for k in 0..=20 {
            let q = k as f64 / 20.0;
            assert!((eq.cdf_eval(q) - q.sqrt()).abs() < 1e-9, "F({q})");
        }
    }

    #[test]
    fn base_reward_fee_injected_pool_equals_net_mechanism() {
        let cost = CostSpec::linear(1.0).unwrap();
        let injected = RewardVector::unbudgeted(vec![1.5, 0.5, 0.5]).unwrap();
        let net = RewardVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let eq_injected = solve_base_reward_ne(&injected, &cost).unwrap();
        let eq_net = solve_base_reward_ne(&net, &cost).unwrap();
        for k in 0..=50 {
            let q = k as f64 / 50.0;
            assert!((eq_injected.cdf_eval(q) - eq_net.cdf_eval(q)).abs() < 1e-9);
        }
        assert!((eq_injected.expected_utility() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn base_reward_zero_bottom_reduces_to_symmetric_solver() {
        let cost = CostSpec::linear(1.0).unwrap();
        let a = top2_of_3();
        let via_base = solve_base_reward_ne(&a, &cost).unwrap();
        let via_sym = solve_symmetric_ne(&a, &cost).unwrap();
        for k in 0..=50 {
            let q = k as f64 / 50.0;
            assert_eq!(via_base.cdf_eval(q), via_sym.cdf_eval(q));
        }
    }

    #[test]
    fn base_reward_preconditions() {
        let cost = CostSpec::linear(1.0).unwrap();
        let uniform = RewardVector::new(vec![0.2, 0.2, 0.2]).unwrap();
        assert!(solve_base_reward_ne(&uniform, &cost).is_err());
        let wide = RewardVector::unbudgeted(vec![2.0, 0.0]).unwrap();
        assert!(solve_base_reward_ne(&wide, &cost).is_err());
    }

    #[test]
    fn positive_bottom_regimes_follow_the_netted_thresholds() {
        // Spread 0.3, mean net of the bottom 2/15: both cutoffs shift by
        // the base payment.
        let rewards = RewardVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let interior = solve_symmetric_ne(&rewards, &CostSpec::linear(0.35).unwrap()).unwrap();
        assert_eq!(interior.case(), RegimeCase::Interior);
        assert!((interior.support_max() - 0.3 / 0.35).abs() < 1e-12);

        let split = solve_symmetric_ne(&rewards, &CostSpec::linear(0.25).unwrap()).unwrap();
        assert_eq!(split.case(), RegimeCase::Split);
        // Hand solve of the tie-average equation: t^2 + 4t - 3.5 = 0.
        letท = (30f64.sqrt() - 4.0) / 2.0;
        assert!((split.atom_mass_y() - (1.0 - ท)).abs() < 1e-10);
        assert!((split.expected_utility() - 0.2).abs() < 1e-12);

        let all = solve_symmetric_ne(&rewards, &CostSpec::linear(0.1).unwrap()).unwrap();
        assert_eq!(all.case(), RegimeCase::AllPerfect);

        // Every regime is deviation-proof with the base payment included.
        let grid: Vec<f64> = (0..=800).map(|k| k as f64 / 800.0).collect();
        for eq in [interior, split, all] {
            let gain = eq.verify_best_response(&grid);
            assert!(gain <= 1e-8, "{:?} regime leaks {gain}", eq.case());
        }
    }

    #[test]
    fn cdf_quantile_examples() {
        let cost = CostSpec::linear(1.0).unwrap();
        let eq = solve_symmetric_ne(&top2_of_3(), &cost).unwrap();
        assert!((eq.cdf_eval(0.375) - 0.5).abs() < 1e-9);
        assert!((eq.quantile_eval(0.5) - 0.375).abs() < 1e-12);
        assert_eq!(eq.quantile_eval(0.0), 0.0);

        let split = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.4).unwrap()).unwrap();
        assert_eq!(split.quantile_eval(0.9), 1.0);
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for cost in [
            CostSpec::linear(1.0).unwrap(),
            CostSpec::linear(0.4).unwrap(),
            CostSpec::scaled_quadratic(1.0).unwrap(),
        ] {
            let eq = solve_symmetric_ne(&top2_of_3(), &cost).unwrap();
            let ceiling = 1.0 - eq.atom_mass_y();
            for k in 0..=40 {
                let u = ceiling * k as f64 / 40.0;
                let q = eq.quantile_eval(u);
                assert!(
                    (eq.cdf_eval(q) - u).abs() < 1e-8,
                    "{cost:?}: F(Q({u})) = {}",
                    eq.cdf_eval(q)
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(1.0).unwrap()).unwrap();
        let a = eq.sample(7, 100);
        let b = eq.sample(7, 100);
        let c = eq.sample(8, 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&q| (0.0..=0.5).contains(&q)));
    }

    #[test]
    fn best_response_gain_interior() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(1.0).unwrap()).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        assert!(eq.verify_best_response(&grid) <= 1e-8);
    }

    #[test]
    fn best_response_gap_is_strictly_suboptimal_in_split() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.4).unwrap()).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        assert!(eq.verify_best_response(&grid) <= 1e-8);
        // Deviating into the gap between q_hat and 1 loses money outright.
        for q in [0.55, 0.7, 0.85, 0.99] {
            let gain = eq.deviation_reward(q) - eq.cost().value(q);
            assert!(gain < -1e-3, "gap deviation at {q} gained {gain}");
        }
    }

    #[test]
    fn best_response_all_perfect() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.25).unwrap()).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        assert!(eq.verify_best_response(&grid) <= 1e-12);
        // A deviator below 1 earns the bottom reward (zero) and still pays.
        let u_star = eq.expected_utility();
        for q in [0.0, 0.3, 0.9] {
            let gain = eq.deviation_reward(q) - eq.cost().value(q) - u_star;
            assert!((gain - (-eq.cost().value(q) - u_star)).abs() < 1e-15);
        }
    }

    #[test]
    fn equilibrium_serializes_with_case_tag() {
        let eq = solve_symmetric_ne(&top2_of_3(), &CostSpec::linear(0.4).unwrap()).unwrap();
        let json = serde_json::to_value(&eq).unwrap();
        assert_eq!(json["case"], "split");
        assert_eq!(json["rewards"].as_array().unwrap().len(), 3);
        assert_eq!(json["cost"]["family"], "linear");
    }

    fn random_descending(n: usize, raw: &[f64]) -> RewardVector {
        let mut v: Vec<f64> = raw.iter().take(n).map(|x| x.abs().min(1.0)).collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = v.iter().sum();
        if total > 1.0 {
            for x in &mut v {
                *x /= total;
            }
        }
        RewardVector::new(v).unwrap()
    }

    proptest! {
        #[test]
        fn h_is_nondecreasing_with_exact_endpoints(
            raw in prop::collection::vec(0.0f64..1.0, 2..8),
            t1 in 0.0f64..=1.0,
            t2 in 0.0f64..=1.0,
        ) {
            let rewards = random_descending(raw.len(), &raw);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let h_lo = rank_reward_expectation(&rewards, lo);
            let h_hi = rank_reward_expectation(&rewards, hi);
            prop_assert!(h_lo <= h_hi + 1e-12);
            prop_assert_eq!(rank_reward_expectation(&rewards, 0.0), rewards.bottom());
            prop_assert_eq!(rank_reward_expectation(&rewards, 1.0), rewards.top());
        }

        #[test]
        fn cumulative_average_dominates_rewards(
            raw in prop::collection::vec(0.0f64..1.0, 2..8),
        ) {
            let rewards = random_descending(raw.len(), &raw);
            let betas = rewards.cumulative_average();
            for (b, a) in betas.alphas().iter().zip(rewards.alphas()) {
                prop_assert!(b + 1e-12 >= *a);
            }
        }
    }
}
