//! Quality benchmarks of a rank-order equilibrium.
//!
//! The two benchmarks from the model are the expected per-creator quality
//! (`L^1`) and the expected maximum quality across the `n` creators
//! (`L^infinity`), bridged by the per-creator moments `E[q^p]`. All three
//! are quantile integrals of the equilibrium distribution and are computed
//! by adaptive quadrature with an exact atom correction, so split and
//! all-perfect regimes need no sampling. A seeded Monte Carlo estimator
//! covers every case as an independent oracle.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;
use crate::ro_core::MixedEquilibriumRo;
use crate::tol;

/// How a [`MetricReport`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMethod {
    Quadrature,
    MonteCarlo,
}

/// A per-creator moment `E[q^p]` with its monotone transform `E[q^p]^{1/p}`.
#[derive(Debug, Clone, Serialize)]
pub struct LpMoment {
    pub p: f64,
    /// `E[q^p]`, the objective the design searches maximize.
    pub value: f64,
    /// `value^{1/p}`, reported as a convenience; argmaxes are unaffected.
    pub root: f64,
    pub stderr: Option<f64>,
}

/// Quality benchmarks of one equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    /// Expected quality of each item created.
    pub l1: f64,
    /// Expected maximum quality among the `n` creators.
    pub linf: f64,
    pub lp: Vec<LpMoment>,
    pub method: MetricMethod,
    pub l1_stderr: Option<f64>,
    pub linf_stderr: Option<f64>,
}

/// `E[q]` per creator: the quantile integral plus the atom contribution.
pub fn l1_metric(eq: &MixedEquilibriumRo) -> Result<f64> {
    let ceiling = 1.0 - eq.atom_mass_y();
    let body = adaptive_simpson(
        |u| eq.quantile_eval(u),
        0.0,
        ceiling,
        tol::QUADRATURE_ABS,
        tol::QUADRATURE_MAX_SUBDIV,
    )?;
    Ok(body + eq.atom_mass_y())
}

/// `E[max_i q_i]` over the `n` creators.
///
/// The maximum of `n` independent draws sits at quantile `max_i u_i`, whose
/// density is `n t^{n-1}`; the atom at perfect quality contributes
/// `1 - (1-y)^n`.
pub fn linf_metric(eq: &MixedEquilibriumRo) -> Result<f64> {
    expected_max(eq, eq.rewards().n())
}

fn expected_max(eq: &MixedEquilibriumRo, group: usize) -> Result<f64> {
    let n = group as f64;
    let ceiling = 1.0 - eq.atom_mass_y();
    let body = adaptive_simpson(
        |t| n * t.powi(group as i32 - 1) * eq.quantile_eval(t),
        0.0,
        ceiling,
        tol::QUADRATURE_ABS,
        tol::QUADRATURE_MAX_SUBDIV,
    )?;
    Ok(body + (1.0 - ceiling.powi(group as i32)))
}

/// `E[q^p]` per creator for finite `p >= 1`.
pub fn lp_objective(eq: &MixedEquilibriumRo, p: f64) -> Result<f64> {
    if p < 1.0 || !p.is_finite() {
        return Err(Error::precondition(format!(
            "moment exponent must be a finite p >= 1, got {p}"
        )));
    }
    let ceiling = 1.0 - eq.atom_mass_y();
    let body = adaptive_simpson(
        |u| eq.quantile_eval(u).powf(p),
        0.0,
        ceiling,
        tol::QUADRATURE_ABS,
        tol::QUADRATURE_MAX_SUBDIV,
    )?;
    Ok(body + eq.atom_mass_y())
}

/// All benchmarks of one equilibrium by quadrature.
pub fn quadrature_report(eq: &MixedEquilibriumRo, p_list: &[f64]) -> Result<MetricReport> {
    let lp = p_list
        .iter()
        .map(|&p| {
            let value = lp_objective(eq, p)?;
            Ok(LpMoment {
                p,
                value,
                root: value.powf(1.0 / p),
                stderr: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        l1: l1_metric(eq)?,
        linf: linf_metric(eq)?,
        lp,
        method: MetricMethod::Quadrature,
        l1_stderr: None,
        linf_stderr: None,
    })
}

/// Profiles are drawn in fixed-size chunks with per-chunk RNG streams, so
/// results do not depend on the number of worker threads.
const MC_CHUNK: usize = 8192;

struct ChunkSums {
    draws: f64,
    profiles: f64,
    sum_q: f64,
    sumsq_q: f64,
    sum_max: f64,
    sumsq_max: f64,
    sum_p: Vec<f64>,
    sumsq_p: Vec<f64>,
}

/// Monte Carlo estimates of all benchmarks from `samples` simulated
/// `n`-creator profiles. Deterministic for a given seed.
pub fn mc_metrics(
    eq: &MixedEquilibriumRo,
    p_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MetricReport> {
    if samples < 1000 {
        return Err(Error::precondition(format!(
            "need at least 1000 Monte Carlo profiles, got {samples}"
        )));
    }
    for &p in p_list {
        if p < 1.0 || !p.is_finite() {
            return Err(Error::precondition(format!(
                "moment exponent must be a finite p >= 1, got {p}"
            )));
        }
    }
    let n = eq.rewards().n();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<ChunkSums> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64 + 1);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut sums = ChunkSums {
                draws: 0.0,
                profiles: 0.0,
                sum_q: 0.0,
                sumsq_q: 0.0,
                sum_max: 0.0,
                sumsq_max: 0.0,
                sum_p: vec![0.0; p_list.len()],
                sumsq_p: vec![0.0; p_list.len()],
            };
            for _ in 0..count {
                let profile = eq.sample_with(&mut rng, n);
                let mut maxq = 0.0f64;
                for &q in &profile {
                    sums.sum_q += q;
                    sums.sumsq_q += q * q;
                    for (j, &p) in p_list.iter().enumerate() {
                        let qp = q.powf(p);
                        sums.sum_p[j] += qp;
                        sums.sumsq_p[j] += qp * qp;
                    }
                    maxq = maxq.max(q);
                }
                sums.sum_max += maxq;
                sums.sumsq_max += maxq * maxq;
                sums.draws += n as f64;
                sums.profiles += 1.0;
            }
            sums
        })
        .collect();

    let mut total = ChunkSums {
        draws: 0.0,
        profiles: 0.0,
        sum_q: 0.0,
        sumsq_q: 0.0,
        sum_max: 0.0,
        sumsq_max: 0.0,
        sum_p: vec![0.0; p_list.len()],
        sumsq_p: vec![0.0; p_list.len()],
    };
    for part in partials {
        total.draws += part.draws;
        total.profiles += part.profiles;
        total.sum_q += part.sum_q;
        total.sumsq_q += part.sumsq_q;
        total.sum_max += part.sum_max;
        total.sumsq_max += part.sumsq_max;
        for (acc, v) in total.sum_p.iter_mut().zip(&part.sum_p) {
            *acc += v;
        }
        for (acc, v) in total.sumsq_p.iter_mut().zip(&part.sumsq_p) {
            *acc += v;
        }
    }

    let (l1, l1_stderr) = mean_stderr(total.sum_q, total.sumsq_q, total.draws);
    let (linf, linf_stderr) = mean_stderr(total.sum_max, total.sumsq_max, total.profiles);
    let lp = p_list
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let (value, se) = mean_stderr(total.sum_p[j], total.sumsq_p[j], total.draws);
            LpMoment {
                p,
                value,
                root: value.powf(1.0 / p),
                stderr: Some(se),
            }
        })
        .collect();
    Ok(MetricReport {
        l1,
        linf,
        lp,
        method: MetricMethod::MonteCarlo,
        l1_stderr: Some(l1_stderr),
        linf_stderr: Some(linf_stderr),
    })
}

fn mean_stderr(sum: f64, sumsq: f64, count: f64) -> (f64, f64) {
    let mean = sum / count;
    let var = ((sumsq - sum * sum / count) / (count - 1.0)).max(0.0);
    (mean, (var / count).sqrt())
}
