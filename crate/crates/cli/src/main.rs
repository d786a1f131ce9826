use clap::{Args, Parser, Subcommand};
use ris_core::harness::{
    self, config::ConfigFile, emit_csv, emit_frontier_csv, emit_plot, emit_region_overlay, emit_summary_csv,
    gradient_check, rate_region, run_sweep, GradCheckSpec, PlotKind, SweepOutcome, SweepSpec, SweepVariable,
};
use ris_core::objective::optimize_context;
use ris_core::system::synthesize_channels;
use ris_core::{objective::build_context, PhaseVector, Scheme};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Two-way RIS passive beamforming experiments.
#[derive(Parser)]
#[command(name = "ris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Sweep(SweepArgs),
    /// Sweep the weight eta and report rate regions and frontiers.
    Region(RegionArgs),
    /// Optimize a single channel realization and print the trace.
    Optimize(OptimizeArgs),
    /// Compare the analytic gradient with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML scenario file, or `defaults` for the built-in scenario.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Base seed (default: config value, then $RIS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Channel realizations per sweep value.
    #[arg(long)]
    seeds: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated schemes.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<Scheme>>,
    /// Weight of the downlink rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Record wall-clock time per record (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated BS-RIS distances (m); one region per distance.
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<f64>>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// TOML scenario file, or `defaults` for the built-in scenario.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Channel seed (default: $RIS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Start from uniformly random phases drawn from this seed instead of all ones.
    #[arg(long, value_name = "SEED")]
    random_start: Option<u64>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Seed of the first instance (default: $RIS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Random tangent directions per instance.
    #[arg(long, default_value_t = 20)]
    directions: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn usage(flag: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{flag}: {e}"))
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn check_eta(eta: f64) -> Outcome {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(usage("--eta", format!("{eta} is outside [0, 1]")))
    }
}

fn load_spec(c: &CommonArgs, variable: Option<SweepVariable>) -> Result<SweepSpec, Failure> {
    let file = ConfigFile::load(&c.config).map_err(|e| usage("--config", e))?;
    let mut spec = file.sweep_spec().map_err(|e| usage("--config", e))?;
    if let Some(v) = variable {
        if spec.variable != v {
            spec.variable = v;
            spec.values = SweepSpec::default_for(v).values;
        }
    }
    if let Some(s) = c.seed {
        spec.base_seed = s;
    }
    if let Some(n) = c.seeds {
        if n == 0 {
            return Err(usage("--seeds", "must be at least 1"));
        }
        spec.seeds = n;
    }
    if let Some(list) = &c.scheme {
        if list.is_empty() {
            return Err(usage("--scheme", "empty list"));
        }
        spec.schemes = list.clone();
    }
    if let Some(eta) = c.eta {
        check_eta(eta)?;
        spec.eta = eta;
    }
    spec.record_timing |= c.timing;
    spec.validate().map_err(|e| usage("--config", e))?;
    Ok(spec)
}

fn report_failures(outcome: &SweepOutcome) {
    for f in &outcome.failures {
        eprintln!("warning: cell failed: {f}");
    }
}

fn write_sweep(outcome: &SweepOutcome, kind: PlotKind, dir: &Path, stem: &str) -> Outcome {
    if outcome.records.is_empty() {
        return Err(runtime("every sweep cell failed; nothing to write"));
    }
    let csv = dir.join(format!("{stem}.csv"));
    emit_csv(&outcome.records, &csv).map_err(runtime)?;
    emit_summary_csv(&outcome.records, &dir.join(format!("{stem}_summary.csv"))).map_err(runtime)?;
    emit_plot(&outcome.records, kind, &dir.join(format!("{stem}.svg"))).map_err(runtime)?;
    println!("wrote {} records to {}", outcome.records.len(), csv.display());
    Ok(())
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| usage("--out", format!("{}: {e}", dir.display())))
}

fn cmd_sweep(a: &SweepArgs) -> Outcome {
    let spec = load_spec(&a.common, None)?;
    create_dir(&a.common.out)?;
    let outcome = run_sweep(&spec).map_err(runtime)?;
    report_failures(&outcome);
    for s in harness::summarize(&outcome.records) {
        println!(
            "{:<22} {}={:<8} median {:.4}  mean {:.4}",
            s.scheme.name(),
            spec.variable,
            s.value,
            s.median_objective,
            s.mean_objective
        );
    }
    write_sweep(&outcome, PlotKind::for_variable(spec.variable), &a.common.out, "sweep")
}

fn cmd_region(a: &RegionArgs) -> Outcome {
    let base = load_spec(&a.common, Some(SweepVariable::Eta))?;
    create_dir(&a.common.out)?;
    let distances = match &a.distances {
        Some(d) if d.is_empty() => return Err(usage("--distances", "empty list")),
        Some(d) => d.clone(),
        None => vec![base.base.ris_pos[0] - base.base.bs_pos[0]],
    };
    let mut overlay = Vec::new();
    for &d in &distances {
        let spec = SweepSpec {
            base: base.base.with_bs_ris_distance(d),
            ..base.clone()
        };
        let result = rate_region(&spec).map_err(|e| usage("--config", e))?;
        report_failures(&result.outcome);
        let stem = if distances.len() == 1 {
            "region".to_string()
        } else {
            format!("region_d{d}")
        };
        write_sweep(&result.outcome, PlotKind::Region, &a.common.out, &stem)?;
        emit_frontier_csv(&result.outcome.records, &a.common.out.join(format!("{stem}_frontier.csv")))
            .map_err(runtime)?;
        for c in &result.curves {
            let ends = (c.points.first(), c.points.last());
            if let (Some(lo), Some(hi)) = ends {
                println!(
                    "d={d} {:<22} eta=0: ({:.4}, {:.4})  eta=1: ({:.4}, {:.4})  frontier points {}",
                    c.scheme.name(),
                    lo.rate_dl,
                    lo.rate_ul,
                    hi.rate_dl,
                    hi.rate_ul,
                    c.frontier.len()
                );
            }
        }
        if let Some(c) = result.curve(Scheme::TwoWay) {
            overlay.push((format!("two_way d={d} m"), c.points.clone()));
        }
    }
    if distances.len() > 1 && !overlay.is_empty() {
        emit_region_overlay(&overlay, &a.common.out.join("region_overlay.svg")).map_err(runtime)?;
    }
    Ok(())
}

fn cmd_optimize(a: &OptimizeArgs) -> Outcome {
    check_eta(a.eta)?;
    let file = ConfigFile::load(&a.config).map_err(|e| usage("--config", e))?;
    let params = file.system().map_err(|e| usage("--config", e))?;
    let cfg = file.optimizer().map_err(|e| usage("--config", e))?;
    let seed = a.seed.unwrap_or_else(harness::default_seed);
    let ch = synthesize_channels(&params, seed).map_err(runtime)?;
    let ctx = build_context(&ch, &params, a.eta).map_err(runtime)?;
    let f = params.ris_elements();
    let b0 = match a.random_start {
        Some(s) => harness::random_start(f, s),
        None => PhaseVector::ones(f),
    };
    let sol = optimize_context(&ctx, &cfg, &b0).map_err(runtime)?;
    println!("seed        {seed}");
    println!("eta         {}", a.eta);
    println!("r_D         {:.6}", sol.rate_dl);
    println!("r_U         {:.6}", sol.rate_ul);
    println!("objective   {:.6}", sol.objective);
    println!("iterations  {}", sol.trace.iterations());
    println!("termination {:?}", sol.trace.termination);
    println!("trace:");
    println!("{:>6} {:>14} {:>12} {:>12}", "iter", "objective", "grad_norm", "step");
    for (k, r) in sol.trace.records.iter().enumerate() {
        println!("{k:>6} {:>14.9} {:>12.3e} {:>12.3e}", r.objective, r.grad_norm, r.step);
    }
    Ok(())
}

fn cmd_gradcheck(a: &GradcheckArgs) -> Outcome {
    if a.instances == 0 {
        return Err(usage("--instances", "must be at least 1"));
    }
    if a.directions == 0 {
        return Err(usage("--directions", "must be at least 1"));
    }
    let spec = GradCheckSpec {
        instances: a.instances,
        directions: a.directions,
        seed: a.seed.unwrap_or_else(harness::default_seed),
        ..GradCheckSpec::default()
    };
    let report = gradient_check(&spec).map_err(runtime)?;
    println!(
        "max relative error {:.3e} over {} directional derivatives",
        report.max_rel_error, report.checks
    );
    if report.max_rel_error < 1e-5 {
        Ok(())
    } else {
        Err(runtime("gradient check exceeded 1e-5"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Region(a) => cmd_region(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
