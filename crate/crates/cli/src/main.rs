//! `contest`: command-line front end for the creator-competition toolkit.
//!
//! Every subcommand accepts `--config experiment.json` with flags acting as
//! overrides; `contest run --config ...` dispatches on the `operation` key
//! inside the file. Results go to stdout as JSON (or `--output-json`), with
//! plot-ready CSV tables behind `--output-csv`.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use contest_core::pm_core::{barrier_level, check_contributing_sufficient, solve_pm_ne};
use contest_core::pm_fee::fee_sweep;
use contest_core::ro_barrier::{append_zero_reward, barrier_holds, collapse_bound};
use contest_core::ro_core::solve_symmetric_ne;
use contest_core::ro_design::{efrm_evaluate, lp_optimal_search, DesignObjective};
use contest_core::ro_metrics::{mc_metrics, quadrature_report, MetricMethod, MetricReport};
use contest_core::RewardVector;

use config::{
    config_err, parse_compact_cost, parse_compact_costs, parse_fee_grid, parse_float_list,
    parse_p_list, CliResult, ExperimentConfig, ObjectiveKind, Operation, SchemeChoice,
};
use output::{fmt_f64, fmt_opt, fmt_p, RunContext};

#[derive(Parser)]
#[command(
    name = "contest",
    version,
    about = "Equilibria, quality metrics and entry barriers for creator-competition games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct CommonArgs {
    /// JSON experiment config; explicit flags override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Seed for any sampling the operation performs.
    #[arg(long)]
    seed: Option<u64>,
    /// Mechanism label echoed into CSV rows.
    #[arg(long)]
    label: Option<String>,
    /// Cap on worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    output_json: Option<String>,
    /// Write the CSV table here.
    #[arg(long)]
    output_csv: Option<String>,
}

#[derive(Args, Default, Clone)]
struct RoMechanismArgs {
    /// Descending rewards, e.g. `0.5,0.5,0`.
    #[arg(long)]
    rewards: Option<String>,
    /// Cost in `family:params` form, e.g. `linear:1` or `quad_linear:0.5,4`.
    #[arg(long)]
    cost: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the operation named in a config file.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the symmetric rank-order equilibrium and export its CDF.
    RoSolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mechanism: RoMechanismArgs,
        /// Points in the exported CDF curve.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Quality benchmarks of a rank-order equilibrium.
    RoMetrics {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mechanism: RoMechanismArgs,
        /// Finite moment exponents, e.g. `1,2,12`.
        #[arg(long)]
        p_list: Option<String>,
        /// Estimate by Monte Carlo instead of quadrature.
        #[arg(long)]
        mc: bool,
        /// Monte Carlo profile count.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Search reward vectors for the optimal mechanism.
    RoDesign {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of creators.
        #[arg(long)]
        n: Option<usize>,
        /// Cost in `family:params` form.
        #[arg(long)]
        cost: Option<String>,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveKind>,
        /// Exponent for the `lp` objective.
        #[arg(long)]
        p: Option<f64>,
        /// Reward grid step.
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Verify the structural entry barrier against a newcomer.
    RoBarrier {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mechanism: RoMechanismArgs,
        /// Post-entry rewards (length n+1); default appends a zero rank.
        #[arg(long)]
        entrant_rewards: Option<String>,
        /// Evaluation grid size.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Charge an entry fee and reallocate it into the reward pool.
    Efrm {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mechanism: RoMechanismArgs,
        /// Entry fee per creator.
        #[arg(long)]
        fee: Option<f64>,
        /// Sweep fees instead: `log:lo,hi,count` or `list:v1,v2,...`.
        #[arg(long)]
        fee_grid: Option<String>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeChoice>,
        /// Finite moment exponents for the reports.
        #[arg(long)]
        p_list: Option<String>,
    },
    /// Solve the proportional-mechanism equilibrium.
    PmSolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Semicolon-separated costs, e.g. `quad_linear:0.5,0;quad_linear:0.5,4`.
        #[arg(long)]
        costs: Option<String>,
    },
    /// Sweep entry fees over a proportional market.
    PmFeeSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        costs: Option<String>,
        #[arg(long)]
        fee_grid: Option<String>,
        /// Norm exponents, e.g. `1,2,5,inf`.
        #[arg(long)]
        p_list: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = execute(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn load_base(common: &CommonArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.label.is_some() {
        cfg.label = common.label.clone();
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if common.output_json.is_some() {
        cfg.output_json = common.output_json.clone();
    }
    if common.output_csv.is_some() {
        cfg.output_csv = common.output_csv.clone();
    }
    Ok(cfg)
}

fn apply_mechanism(cfg: &mut ExperimentConfig, args: &RoMechanismArgs) -> CliResult<()> {
    if let Some(text) = &args.rewards {
        cfg.rewards = Some(parse_float_list(text)?);
    }
    if let Some(text) = &args.cost {
        cfg.cost = Some(parse_compact_cost(text)?);
    }
    Ok(())
}

fn execute(command: Command) -> CliResult<()> {
    let (cfg, operation) = resolve(command)?;
    if let Some(threads) = cfg.threads {
        // Ignore the error if a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match operation {
        Operation::RoSolve => run_ro_solve(&cfg),
        Operation::RoMetrics => run_ro_metrics(&cfg),
        Operation::RoDesign => run_ro_design(&cfg),
        Operation::RoBarrier => run_ro_barrier(&cfg),
        Operation::Efrm => run_efrm(&cfg),
        Operation::PmSolve => run_pm_solve(&cfg),
        Operation::PmFeeSweep => run_pm_fee_sweep(&cfg),
    }
}

fn resolve(command: Command) -> CliResult<(ExperimentConfig, Operation)> {
    match command {
        Command::Run { common } => {
            if common.config.is_none() {
                return Err(config_err("run needs --config"));
            }
            let cfg = load_base(&common)?;
            let operation = cfg
                .operation
                .ok_or_else(|| config_err("config has no 'operation' key"))?;
            Ok((cfg, operation))
        }
        Command::RoSolve {
            common,
            mechanism,
            grid_points,
        } => {
            let mut cfg = load_base(&common)?;
            apply_mechanism(&mut cfg, &mechanism)?;
            if grid_points.is_some() {
                cfg.grid_points = grid_points;
            }
            cfg.operation = Some(Operation::RoSolve);
            Ok((cfg, Operation::RoSolve))
        }
        Command::RoMetrics {
            common,
            mechanism,
            p_list,
            mc,
            samples,
        } => {
            let mut cfg = load_base(&common)?;
            apply_mechanism(&mut cfg, &mechanism)?;
            if let Some(text) = p_list {
                cfg.p_list = Some(parse_p_list(&text)?);
            }
            if mc {
                cfg.mc = Some(true);
            }
            if samples.is_some() {
                cfg.samples = samples;
            }
            cfg.operation = Some(Operation::RoMetrics);
            Ok((cfg, Operation::RoMetrics))
        }
        Command::RoDesign {
            common,
            n,
            cost,
            objective,
            p,
            resolution,
        } => {
            let mut cfg = load_base(&common)?;
            if n.is_some() {
                cfg.n = n;
            }
            if let Some(text) = cost {
                cfg.cost = Some(parse_compact_cost(&text)?);
            }
            if objective.is_some() {
                cfg.objective = objective;
            }
            if p.is_some() {
                cfg.p = p;
            }
            if resolution.is_some() {
                cfg.resolution = resolution;
            }
            cfg.operation = Some(Operation::RoDesign);
            Ok((cfg, Operation::RoDesign))
        }
        Command::RoBarrier {
            common,
            mechanism,
            entrant_rewards,
            grid_points,
        } => {
            let mut cfg = load_base(&common)?;
            apply_mechanism(&mut cfg, &mechanism)?;
            if let Some(text) = entrant_rewards {
                cfg.entrant_rewards = Some(parse_float_list(&text)?);
            }
            if grid_points.is_some() {
                cfg.grid_points = grid_points;
            }
            cfg.operation = Some(Operation::RoBarrier);
            Ok((cfg, Operation::RoBarrier))
        }
        Command::Efrm {
            common,
            mechanism,
            fee,
            fee_grid,
            scheme,
            p_list,
        } => {
            let mut cfg = load_base(&common)?;
            apply_mechanism(&mut cfg, &mechanism)?;
            if fee.is_some() {
                cfg.fee = fee;
            }
            if let Some(text) = fee_grid {
                cfg.fee_grid = Some(parse_fee_grid(&text)?);
            }
            if scheme.is_some() {
                cfg.scheme = scheme;
            }
            if let Some(text) = p_list {
                cfg.p_list = Some(parse_p_list(&text)?);
            }
            cfg.operation = Some(Operation::Efrm);
            Ok((cfg, Operation::Efrm))
        }
        Command::PmSolve { common, costs } => {
            let mut cfg = load_base(&common)?;
            if let Some(text) = costs {
                cfg.costs = Some(parse_compact_costs(&text)?);
            }
            cfg.operation = Some(Operation::PmSolve);
            Ok((cfg, Operation::PmSolve))
        }
        Command::PmFeeSweep {
            common,
            costs,
            fee_grid,
            p_list,
        } => {
            let mut cfg = load_base(&common)?;
            if let Some(text) = costs {
                cfg.costs = Some(parse_compact_costs(&text)?);
            }
            if let Some(text) = fee_grid {
                cfg.fee_grid = Some(parse_fee_grid(&text)?);
            }
            if let Some(text) = p_list {
                cfg.p_list = Some(parse_p_list(&text)?);
            }
            cfg.operation = Some(Operation::PmFeeSweep);
            Ok((cfg, Operation::PmFeeSweep))
        }
    }
}

fn reward_label(rewards: &RewardVector) -> String {
    rewards
        .alphas()
        .iter()
        .map(|a| fmt_f64(*a))
        .collect::<Vec<_>>()
        .join(",")
}

fn run_ro_solve(cfg: &ExperimentConfig) -> CliResult<()> {
    let rewards = cfg.require_rewards()?;
    let cost = cfg.require_cost()?;
    let eq = solve_symmetric_ne(&rewards, &cost)?;
    let ctx = RunContext::new(
        Operation::RoSolve,
        cfg,
        cfg.label_or(reward_label(&rewards)),
    );
    let result = json!({
        "equilibrium": eq,
        "expected_utility": eq.expected_utility(),
    });
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))?;
    if let Some(path) = &cfg.output_csv {
        let points = cfg.grid_points.unwrap_or(101).max(2);
        let mut table = ctx.csv(&["q", "cdf"]);
        for k in 0..points {
            let q = k as f64 / (points - 1) as f64;
            table.row(&[fmt_f64(q), fmt_f64(eq.cdf_eval(q))]);
        }
        table.write(path)?;
    }
    Ok(())
}

fn metric_method(report: &MetricReport) -> &'static str {
    match report.method {
        MetricMethod::Quadrature => "quadrature",
        MetricMethod::MonteCarlo => "monte_carlo",
    }
}

fn run_ro_metrics(cfg: &ExperimentConfig) -> CliResult<()> {
    let rewards = cfg.require_rewards()?;
    let cost = cfg.require_cost()?;
    let ps = cfg.finite_p_list()?;
    let eq = solve_symmetric_ne(&rewards, &cost)?;
    let report = if cfg.mc.unwrap_or(false) {
        mc_metrics(&eq, &ps, cfg.samples.unwrap_or(100_000), cfg.seed())?
    } else {
        quadrature_report(&eq, &ps)?
    };
    let ctx = RunContext::new(
        Operation::RoMetrics,
        cfg,
        cfg.label_or(reward_label(&rewards)),
    );
    let result = json!({
        "equilibrium": eq,
        "metrics": report,
    });
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))?;
    if let Some(path) = &cfg.output_csv {
        let mut table = ctx.csv(&["mechanism", "p", "metric", "method", "value", "stderr"]);
        let method = metric_method(&report);
        table.row(&[
            ctx.label.clone(),
            String::new(),
            "l1".into(),
            method.into(),
            fmt_f64(report.l1),
            fmt_opt(report.l1_stderr),
        ]);
        table.row(&[
            ctx.label.clone(),
            String::new(),
            "linf".into(),
            method.into(),
            fmt_f64(report.linf),
            fmt_opt(report.linf_stderr),
        ]);
        for moment in &report.lp {
            table.row(&[
                ctx.label.clone(),
                fmt_f64(moment.p),
                "lp".into(),
                method.into(),
                fmt_f64(moment.value),
                fmt_opt(moment.stderr),
            ]);
        }
        table.write(path)?;
    }
    Ok(())
}

fn run_ro_design(cfg: &ExperimentConfig) -> CliResult<()> {
    let n = cfg
        .n
        .ok_or_else(|| config_err("missing n (market size) for the design search"))?;
    let cost = cfg.require_cost()?;
    let objective = match cfg.objective.unwrap_or(ObjectiveKind::L1) {
        ObjectiveKind::L1 => DesignObjective::L1,
        ObjectiveKind::Linf => DesignObjective::LInf,
        ObjectiveKind::Lp => {
            let p = cfg
                .p
                .ok_or_else(|| config_err("objective 'lp' needs an exponent (--p)"))?;
            DesignObjective::Lp(p)
        }
    };
    let resolution = cfg.resolution.unwrap_or(0.05);
    let outcome = lp_optimal_search(n, &cost, objective, resolution)?;
    let ctx = RunContext::new(Operation::RoDesign, cfg, cfg.label_or(format!("n={n}")));
    let result = json!({
        "objective": objective,
        "resolution": resolution,
        "search": outcome,
    });
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))
}

fn run_ro_barrier(cfg: &ExperimentConfig) -> CliResult<()> {
    let rewards = cfg.require_rewards()?;
    let cost = cfg.require_cost()?;
    let eq = solve_symmetric_ne(&rewards, &cost)?;
    let entrant = match &cfg.entrant_rewards {
        Some(alphas) => RewardVector::new(alphas.clone())?,
        None => append_zero_reward(&rewards),
    };
    let points = cfg.grid_points.unwrap_or(1001).max(2);
    let mut grid: Vec<f64> = (0..points)
        .map(|k| k as f64 / (points - 1) as f64)
        .collect();
    grid.push(eq.support_max());
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let report = barrier_holds(&eq, &entrant, &grid)?;
    let bound = cost
        .is_convex()
        .then(|| collapse_bound(&cost, rewards.n()))
        .transpose()?;
    let ctx = RunContext::new(
        Operation::RoBarrier,
        cfg,
        cfg.label_or(reward_label(&rewards)),
    );
    let result = json!({
        "holds": report.holds,
        "strict_interior": report.strict_interior,
        "max_margin": report.max_margin,
        "cost_exceeds_budget": report.cost_exceeds_budget,
        "grid_len": report.grid.len(),
        "entrant_rewards": entrant,
        "collapse_bound": bound,
    });
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))?;
    if let Some(path) = &cfg.output_csv {
        let mut table = ctx.csv(&["q", "cdf", "entrant_reward", "cost", "margin"]);
        for i in 0..report.grid.len() {
            table.row(&[
                fmt_f64(report.grid[i]),
                fmt_f64(report.cdf[i]),
                fmt_f64(report.entrant_reward[i]),
                fmt_f64(report.cost[i]),
                fmt_f64(report.entrant_reward[i] - report.cost[i]),
            ]);
        }
        table.write(path)?;
    }
    Ok(())
}

fn run_efrm(cfg: &ExperimentConfig) -> CliResult<()> {
    let rewards = cfg.require_rewards()?;
    let cost = cfg.require_cost()?;
    let scheme = cfg
        .scheme
        .ok_or_else(|| config_err("missing scheme (max-min or max-max)"))?;
    let ps = cfg.finite_p_list()?;
    let ctx = RunContext::new(Operation::Efrm, cfg, cfg.label_or(reward_label(&rewards)));
    if let Some(grid) = &cfg.fee_grid {
        let fees = grid.fees()?;
        let mut rows = Vec::with_capacity(fees.len());
        for &fee in &fees {
            let out = efrm_evaluate(&rewards, &cost, fee, scheme.into(), &ps)?;
            rows.push(json!({
                "fee": fee,
                "net_equivalent": out.net_equivalent,
                "l1_before": out.metrics_before.l1,
                "l1_after": out.metrics_after.l1,
                "linf_before": out.metrics_before.linf,
                "linf_after": out.metrics_after.linf,
            }));
        }
        let result = json!({"scheme": scheme, "rows": rows});
        ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))?;
        if let Some(path) = &cfg.output_csv {
            let scheme_name = format!(
                "{}",
                contest_core::ro_design::ReallocationScheme::from(scheme)
            );
            let mut table = ctx.csv(&[
                "fee",
                "scheme",
                "l1_before",
                "l1_after",
                "linf_before",
                "linf_after",
            ]);
            for (row, &fee) in rows.iter().zip(&fees) {
                table.row(&[
                    fmt_f64(fee),
                    scheme_name.clone(),
                    fmt_f64(row["l1_before"].as_f64().unwrap()),
                    fmt_f64(row["l1_after"].as_f64().unwrap()),
                    fmt_f64(row["linf_before"].as_f64().unwrap()),
                    fmt_f64(row["linf_after"].as_f64().unwrap()),
                ]);
            }
            table.write(path)?;
        }
        Ok(())
    } else {
        let fee = cfg
            .fee
            .ok_or_else(|| config_err("missing fee (or fee_grid for a sweep)"))?;
        let out = efrm_evaluate(&rewards, &cost, fee, scheme.into(), &ps)?;
        ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&out))
    }
}

fn run_pm_solve(cfg: &ExperimentConfig) -> CliResult<()> {
    let costs = cfg.require_costs()?;
    let eq = solve_pm_ne(&costs)?;
    let barrier = (eq.aggregate > 0.0)
        .then(|| barrier_level(&eq))
        .transpose()?;
    let sufficient = check_contributing_sufficient(&costs)?;
    let ctx = RunContext::new(
        Operation::PmSolve,
        cfg,
        cfg.label_or(format!("{}-creators", costs.len())),
    );
    let result = json!({
        "equilibrium": eq,
        "barrier_level": barrier,
        "contributing_sufficient_condition": sufficient,
    });
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&result))?;
    if let Some(path) = &cfg.output_csv {
        let mut table = ctx.csv(&[
            "creator",
            "marginal_cost_at_zero",
            "quality",
            "share",
            "utility",
            "contributing",
        ]);
        for (i, cost) in costs.iter().enumerate() {
            table.row(&[
                (i + 1).to_string(),
                fmt_f64(cost.eval_deriv(0.0).map_err(config::CliError::Solver)?),
                fmt_f64(eq.qualities[i]),
                fmt_f64(eq.shares[i]),
                fmt_f64(eq.utilities[i]),
                eq.contributing.contains(&i).to_string(),
            ]);
        }
        table.write(path)?;
    }
    Ok(())
}

fn run_pm_fee_sweep(cfg: &ExperimentConfig) -> CliResult<()> {
    let costs = cfg.require_costs()?;
    let fees = match &cfg.fee_grid {
        Some(grid) => grid.fees()?,
        None => contest_core::pm_fee::default_fee_grid(),
    };
    let ps = cfg.norm_p_list();
    let sweep = fee_sweep(&costs, &fees, &ps)?;
    let ctx = RunContext::new(
        Operation::PmFeeSweep,
        cfg,
        cfg.label_or(format!("{}-creators", costs.len())),
    );
    ctx.emit_json(cfg.output_json.as_deref(), &ctx.envelope(&sweep))?;
    if let Some(path) = &cfg.output_csv {
        let mut table = ctx.csv(&["fee", "p", "norm", "survivor_count"]);
        for row in &sweep.rows {
            for pv in &row.pnorms {
                table.row(&[
                    fmt_f64(row.fee),
                    fmt_p(pv.p),
                    fmt_f64(pv.value),
                    row.survivors.len().to_string(),
                ]);
            }
        }
        table.write(path)?;
        // Companion file marking the per-p peaks for plotting.
        let mut marks = ctx.csv(&["p", "fee", "norm"]);
        for mark in &sweep.argmax {
            marks.row(&[
                fmt_p(mark.p_norm.p),
                fmt_f64(mark.fee),
                fmt_f64(mark.p_norm.value),
            ]);
        }
        marks.write(&format!("{path}.argmax.csv"))?;
    }
    Ok(())
}
