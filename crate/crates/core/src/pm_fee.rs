//! Proportional mechanism with an entry fee.
//!
//! Charging every creator `xi` shifts utilities to
//! `q_i / sum(q) - c_i(q_i) - xi` without moving the first-order conditions,
//! so surviving creators keep their equilibrium strategies; the fee only
//! decides who stays. The survivor set is the maximal set whose own
//! equilibrium leaves every member with nonnegative net utility, found here
//! by eliminating one creator at a time (lowest net utility first, ties to
//! the highest index) and re-solving.

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::pm_core::solve_pm_ne;
use crate::tol;

/// A `p`-norm of the equilibrium quality vector; `p` may be infinite.
#[derive(Debug, Clone, Copy)]
pub struct PNormValue {
    pub p: f64,
    pub value: f64,
}

impl Serialize for PNormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PNormValue", 2)?;
        if self.p.is_finite() {
            st.serialize_field("p", &self.p)?;
        } else {
            st.serialize_field("p", "inf")?;
        }
        st.serialize_field("value", &self.value)?;
        st.end()
    }
}

/// Market outcome at one fee level.
#[derive(Debug, Clone, Serialize)]
pub struct FeeSweepRow {
    pub fee: f64,
    /// Creators (0-based, original order) remaining in the market.
    pub survivors: Vec<usize>,
    /// Equilibrium qualities of the survivor set, zeros elsewhere.
    pub qualities: Vec<f64>,
    /// Net utilities `u_i - xi` for survivors, zero for non-participants.
    pub net_utilities: Vec<f64>,
    /// Set when fewer than two creators can afford the fee; a lone survivor
    /// earns the whole reward at vanishing quality (reported as zero).
    pub degenerate: bool,
    pub pnorms: Vec<PNormValue>,
}

/// `p`-norm of a nonnegative vector; `p = infinity` gives the maximum.
/// Scaled by the largest entry to stay finite for large `p`.
pub fn pnorm(values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::precondition(format!("p-norm needs p >= 1, got {p}")));
    }
    if let Some(bad) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::precondition(format!(
            "p-norm needs nonnegative entries, got {bad}"
        )));
    }
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 || p.is_infinite() {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|&v| (v / max).powf(p)).sum();
    Ok(max * sum.powf(1.0 / p))
}

/// Solve the market at fee `xi`: eliminate until every remaining creator's
/// net utility is nonnegative.
pub fn surviving_equilibrium(costs: &[CostSpec], fee: f64) -> Result<FeeSweepRow> {
    if costs.len() < 2 {
        return Err(Error::precondition(
            "the fee market needs at least 2 creators initially",
        ));
    }
    if fee < 0.0 || !fee.is_finite() {
        return Err(Error::precondition(format!(
            "entry fee must be nonnegative, got {fee}"
        )));
    }
    let n = costs.len();
    let mut active: Vec<usize> = (0..n).collect();
    loop {
        if active.len() < 2 {
            // One creator alone collects the whole reward for any positive
            // quality; the model leaves the limit undefined, so report a
            // zero-quality sentinel and flag it.
            let mut row = FeeSweepRow {
                fee,
                survivors: Vec::new(),
                qualities: vec![0.0; n],
                net_utilities: vec![0.0; n],
                degenerate: true,
                pnorms: Vec::new(),
            };
            if let [lone] = active[..] {
                let net = 1.0 - fee;
                if net >= tol::SURVIVOR_NET {
                    row.survivors = vec![lone];
                    row.net_utilities[lone] = net;
                }
            }
            return Ok(row);
        }
        let subset: Vec<CostSpec> = active.iter().map(|&i| costs[i].clone()).collect();
        let eq = solve_pm_ne(&subset)?;
        let nets: Vec<f64> = eq.utilities.iter().map(|u| u - fee).collect();
        let worst = nets.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst >= tol::SURVIVOR_NET {
            let mut qualities = vec![0.0; n];
            let mut net_utilities = vec![0.0; n];
            for (pos, &i) in active.iter().enumerate() {
                qualities[i] = eq.qualities[pos];
                net_utilities[i] = nets[pos];
            }
            return Ok(FeeSweepRow {
                fee,
                survivors: active,
                qualities,
                net_utilities,
                degenerate: false,
                pnorms: Vec::new(),
            });
        }
        // Drop the single worst-off creator; ties go to the highest index.
        let leaver_pos = (0..active.len())
            .filter(|&pos| nets[pos] <= worst + tol::BOUNDARY)
            .max_by_key(|&pos| active[pos])
            .expect("nonempty active set");
        active.remove(leaver_pos);
    }
}

/// Brute-force search for a maximum-cardinality self-consistent market:
/// the largest subsets (at least two creators) whose own equilibrium gives
/// every member a nonnegative net utility. Exponential in `n`; guarded to
/// `n <= 20`.
///
/// This is the literal "maximal set" reading of the fee market. It can
/// disagree with [`surviving_equilibrium`]: sequential elimination never
/// expels a creator who is currently profitable, while a maximum-cardinality
/// set may require exactly that (a dominant low-cost creator stepping aside
/// so that two weaker ones can coexist). The eliminated-market outcome is
/// the one reachable by individually rational exits.
pub fn max_cardinality_survivors(costs: &[CostSpec], fee: f64) -> Result<Vec<Vec<usize>>> {
    let n = costs.len();
    if n < 2 {
        return Err(Error::precondition("need at least 2 creators"));
    }
    if n > 20 {
        return Err(Error::precondition(
            "subset search is exponential; use surviving_equilibrium above n = 20",
        ));
    }
    let mut best_size = 0usize;
    let mut best: Vec<Vec<usize>> = Vec::new();
    for mask in 1u64..(1 << n) {
        let size = mask.count_ones() as usize;
        if size < 2 || size < best_size {
            continue;
        }
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let subset_costs: Vec<CostSpec> = subset.iter().map(|&i| costs[i].clone()).collect();
        let eq = match solve_pm_ne(&subset_costs) {
            Ok(eq) => eq,
            Err(_) => continue,
        };
        if eq.utilities.iter().all(|u| u - fee >= tol::SURVIVOR_NET) {
            if size > best_size {
                best_size = size;
                best.clear();
            }
            best.push(subset);
        }
    }
    Ok(best)
}

/// Per-`p` peak of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ArgmaxMark {
    pub p_norm: PNormValue,
    pub fee: f64,
    pub row_index: usize,
}

/// A full fee sweep with the per-`p` argmax rows marked.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<FeeSweepRow>,
    pub argmax: Vec<ArgmaxMark>,
}

/// Sweep the fee grid; each row restarts elimination from the full market,
/// so rows are independent and computed in parallel.
pub fn fee_sweep(costs: &[CostSpec], fee_grid: &[f64], p_list: &[f64]) -> Result<SweepResult> {
    for &p in p_list {
        if p.is_nan() || p < 1.0 {
            return Err(Error::precondition(format!("p-norm needs p >= 1, got {p}")));
        }
    }
    let mut rows = fee_grid
        .par_iter()
        .map(|&fee| {
            let mut row = surviving_equilibrium(costs, fee)?;
            row.pnorms = p_list
                .iter()
                .map(|&p| {
                    Ok(PNormValue {
                        p,
                        value: pnorm(&row.qualities, p)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.fee.partial_cmp(&b.fee).unwrap());

    let mut argmax = Vec::with_capacity(p_list.len());
    for (j, &p) in p_list.iter().enumerate() {
        let mut best = 0usize;
        for (idx, row) in rows.iter().enumerate() {
            if row.pnorms[j].value > rows[best].pnorms[j].value {
                best = idx;
            }
        }
        let _ = p;
        argmax.push(ArgmaxMark {
            p_norm: rows[best].pnorms[j],
            fee: rows[best].fee,
            row_index: best,
        });
    }
    Ok(SweepResult { rows, argmax })
}

/// 60 log-spaced fees spanning `[1e-4, 1]`.
pub fn default_fee_grid() -> Vec<f64> {
    log_spaced_fees(1e-4, 1.0, 60)
}

/// Log-spaced fee grid between two positive endpoints.
pub fn log_spaced_fees(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp())
        .collect()
}
