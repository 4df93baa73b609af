//! Experiment configuration: the JSON schema and the flag-override merge.
//!
//! JSON configs are the canonical interface; command-line flags are
//! conveniences layered on top. Unknown keys are rejected so that stale
//! configs fail loudly.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use contest_core::ro_design::ReallocationScheme;
use contest_core::CostSpec;

/// Exit classes: configuration problems, solver precondition failures, and
/// numerical non-convergence.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(contest_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(contest_core::Error::NoConvergence(_)) => 3,
            CliError::Solver(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Solver(err) => write!(f, "{err}"),
        }
    }
}

impl From<contest_core::Error> for CliError {
    fn from(err: contest_core::Error) -> Self {
        CliError::Solver(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    RoSolve,
    RoMetrics,
    RoDesign,
    RoBarrier,
    Efrm,
    PmSolve,
    PmFeeSweep,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::RoSolve => "ro-solve",
            Operation::RoMetrics => "ro-metrics",
            Operation::RoDesign => "ro-design",
            Operation::RoBarrier => "ro-barrier",
            Operation::Efrm => "efrm",
            Operation::PmSolve => "pm-solve",
            Operation::PmFeeSweep => "pm-fee-sweep",
        }
    }
}

/// A norm exponent that may be infinite; `"inf"` in JSON and flag lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponent(pub f64);

impl Serialize for PExponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(p) => Ok(PExponent(p)),
            Raw::Text(s) if s == "inf" => Ok(PExponent(f64::INFINITY)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

/// Fee grids are either explicit lists or log-spaced ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeeGrid {
    Log { lo: f64, hi: f64, count: usize },
    List { values: Vec<f64> },
}

impl FeeGrid {
    pub fn fees(&self) -> CliResult<Vec<f64>> {
        match self {
            FeeGrid::Log { lo, hi, count } => {
                if !(*lo > 0.0 && hi > lo && *count >= 2) {
                    return Err(config_err(format!(
                        "log fee grid needs 0 < lo < hi and count >= 2, got ({lo}, {hi}, {count})"
                    )));
                }
                Ok(contest_core::pm_fee::log_spaced_fees(*lo, *hi, *count))
            }
            FeeGrid::List { values } => {
                if values.is_empty() {
                    return Err(config_err("fee list is empty"));
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(config_err("fee list must be ascending"));
                }
                Ok(values.clone())
            }
        }
    }
}

/// The mechanism-design objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    L1,
    Lp,
    Linf,
}

/// The full experiment description. Every field a subcommand needs lives
/// here so that a config file plus a seed reproduces the run bit for bit.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<Operation>,
    /// Mechanism id echoed into CSV rows; defaults to the reward list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<CostSpec>>,
    /// Reward vector the market would adopt after one more creator joins
    /// (rank-order barrier checks); defaults to the incumbent rewards plus
    /// a zero for the newcomer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entrant_rewards: Option<Vec<f64>>,
    /// Market size for design searches.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveKind>,
    /// Exponent for `lp` objectives.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<PExponent>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fee: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fee_grid: Option<FeeGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo profile count for sampling-based metrics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Estimate metrics by Monte Carlo instead of quadrature.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<bool>,
    /// Evaluation grid size for CDF exports and barrier checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_csv: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    MaxMin,
    MaxMax,
}

impl From<SchemeChoice> for ReallocationScheme {
    fn from(choice: SchemeChoice) -> Self {
        match choice {
            SchemeChoice::MaxMin => ReallocationScheme::MaxMin,
            SchemeChoice::MaxMax => ReallocationScheme::MaxMax,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &str) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {path}: {e}")))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("cannot parse {path}: {e}")))?;
        if let Some(v) = cfg.schema_version {
            if v != 1 {
                return Err(config_err(format!("unsupported schema_version {v}")));
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require_rewards(&self) -> CliResult<contest_core::RewardVector> {
        let alphas = self
            .rewards
            .clone()
            .ok_or_else(|| config_err("missing rewards (flag --rewards or config key)"))?;
        if alphas.is_empty() {
            return Err(config_err("rewards list is empty"));
        }
        contest_core::RewardVector::new(alphas).map_err(CliError::Solver)
    }

    pub fn require_cost(&self) -> CliResult<CostSpec> {
        self.cost
            .clone()
            .ok_or_else(|| config_err("missing cost (flag --cost or config key)"))
    }

    pub fn require_costs(&self) -> CliResult<Vec<CostSpec>> {
        let costs = self
            .costs
            .clone()
            .ok_or_else(|| config_err("missing costs (flag --costs or config key)"))?;
        if costs.is_empty() {
            return Err(config_err("cost list is empty"));
        }
        Ok(costs)
    }

    pub fn finite_p_list(&self) -> CliResult<Vec<f64>> {
        let ps = match &self.p_list {
            Some(list) => list.iter().map(|p| p.0).collect(),
            None => vec![1.0, 2.0],
        };
        if ps.iter().any(|p| !p.is_finite()) {
            return Err(config_err(
                "this operation needs finite moment exponents; drop \"inf\" from p_list",
            ));
        }
        Ok(ps)
    }

    pub fn norm_p_list(&self) -> Vec<f64> {
        match &self.p_list {
            Some(list) => list.iter().map(|p| p.0).collect(),
            None => vec![1.0, 2.0, 5.0, f64::INFINITY],
        }
    }

    pub fn label_or(&self, fallback: String) -> String {
        self.label.clone().unwrap_or(fallback)
    }
}

/// Parse `family:p1,p2` compact cost syntax (`linear:1`,
/// `quad_linear:0.5,4`, `power:2,1.5`, `scaled_quadratic:3`).
pub fn parse_compact_cost(text: &str) -> CliResult<CostSpec> {
    let (family, params_text) = text
        .split_once(':')
        .ok_or_else(|| config_err(format!("cost '{text}' is not in family:params form")))?;
    let params = parse_float_list(params_text)?;
    CostSpec::from_family(family.trim(), &params).map_err(CliError::Solver)
}

/// Parse a semicolon-separated list of compact costs.
pub fn parse_compact_costs(text: &str) -> CliResult<Vec<CostSpec>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_compact_cost)
        .collect()
}

pub fn parse_float_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("'{part}' is not a number")))
        })
        .collect()
}

pub fn parse_p_list(text: &str) -> CliResult<Vec<PExponent>> {
    text.split(',')
        .map(|part| {
            let part = part.trim();
            if part == "inf" {
                Ok(PExponent(f64::INFINITY))
            } else {
                part.parse::<f64>()
                    .map(PExponent)
                    .map_err(|_| config_err(format!("'{part}' is not a number or 'inf'")))
            }
        })
        .collect()
}

/// Parse `log:lo,hi,count` or `list:v1,v2,...` fee grids.
pub fn parse_fee_grid(text: &str) -> CliResult<FeeGrid> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| config_err(format!("fee grid '{text}' is not in kind:args form")))?;
    match kind {
        "log" => {
            let args = parse_float_list(rest)?;
            if args.len() != 3 {
                return Err(config_err("log fee grid takes lo,hi,count"));
            }
            Ok(FeeGrid::Log {
                lo: args[0],
                hi: args[1],
                count: args[2] as usize,
            })
        }
        "list" => Ok(FeeGrid::List {
            values: parse_float_list(rest)?,
        }),
        other => Err(config_err(format!("unknown fee grid kind '{other}'"))),
    }
}
