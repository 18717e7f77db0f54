// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use slicegen_core::bounds::{
    bound_countable, bound_disintegrated, bound_gme, bound_individual_sample, quantized_rate_term, BoundConstants, BoundReport,
    GmeMi, MiSource,
};
use slicegen_core::quantize::bit_bound;
use slicegen_core::verify::{run_all, VerifyConfig};
use slicegen_harness::{emit_figures, run_experiment, ExperimentConfig, ExperimentKind, RunOptions, RunRecord};

const EXIT_PARTIAL: u8 = 2;
const EXIT_INTERRUPTED: u8 = 130;

/// Train models on random parameter subspaces and evaluate information-theoretic
/// generalization bounds.
#[derive(Parser)]
#[command(name = "slicegen", version)]
struct Cli {
    /// Repeat for more detail on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write its run record and tables.
    Run(RunArgs),
    /// Evaluate a single bound from its constants.
    Bound {
        #[command(subcommand)]
        bound: BoundCmd,
        /// Print the result as JSON.
        #[arg(long, global = true)]
        json: bool,
    },
    /// Check the analytic identities and inequalities on exact Gaussian instances.
    Verify(VerifyArgs),
    /// Render figures from a saved run record.
    Figures {
        /// Path to runrecord.json.
        record: PathBuf,
        /// Output directory; defaults to the record's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show build information, or the default config of an experiment.
    Info {
        /// Print this experiment's default config as TOML.
        #[arg(long, value_name = "KIND")]
        defaults: Option<ExperimentKind>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON config file.
    #[arg(long, conflicts_with = "experiment")]
    config: Option<PathBuf>,
    /// Start from this experiment's defaults instead of a file.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Override a config key, e.g. `--set grid.n=[100,500]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Replaces the config seed. Config files store integers as i64.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render figures into the output directory.
    #[arg(long)]
    figures: bool,
}

#[derive(Subcommand)]
enum BoundCmd {
    /// Gaussian mean estimation in a random subspace, closed-form information.
    Gme {
        #[arg(long = "D")]
        big_d: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    /// Weights restricted to a ball of radius b in the subspace.
    Countable {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    /// Bits needed to describe quantized subspace weights.
    Quantbits {
        #[arg(long)]
        d: usize,
        /// Codebook size.
        #[arg(long = "L")]
        levels: usize,
        /// Empirical entropy of the level assignments, in bits.
        #[arg(long = "H")]
        entropy: f64,
    },
    /// Rate term of the quantized rate-distortion bound.
    QuantizedRate {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Bound on the subspace weight norm.
        #[arg(long)]
        m: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Sub-Gaussian bound from I(W'; S) per projector.
    Disintegrated {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        n: usize,
        /// Information values in nats, one per projector.
        #[arg(long, value_delimiter = ',', required = true)]
        mi: Vec<f64>,
    },
    /// Bound from per-sample information I(W'; Z_i), one value per projector.
    Individual {
        #[arg(long, required_unless_present = "c")]
        sigma: Option<f64>,
        /// Range of a bounded loss, used when sigma is absent.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        mi: Vec<f64>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Check every d <= D <= max-dim.
    #[arg(long, default_value_t = 20)]
    max_dim: usize,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    json: bool,
    /// Inject a fault into the data-processing check.
    #[arg(long, hide = true)]
    break_dpi: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, cli.verbose),
        Command::Bound { bound, json } => cmd_bound(bound, json),
        Command::Verify(args) => cmd_verify(args),
        Command::Figures { record, out } => cmd_figures(&record, out),
        Command::Info { defaults } => cmd_info(defaults),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

fn cmd_run(args: RunArgs, verbose: u8) -> Result<ExitCode> {
    let mut overrides = args.overrides;
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match (&args.config, args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path, &overrides)?,
        (None, Some(kind)) => ExperimentConfig::defaults_with_overrides(kind, &overrides)?,
        (None, None) => bail!("one of --config or --experiment is required"),
    };
    let out_dir = args.out.or_else(|| cfg.output_dir.clone());
    let cancel = Arc::new(AtomicBool::new(false));
    {
        let cancel = cancel.clone();
        ctrlc::set_handler(move || {
            if cancel.swap(true, Ordering::SeqCst) {
                std::process::exit(i32::from(EXIT_INTERRUPTED));
            }
            eprintln!("interrupt: finishing the current point, press again to abort");
        })
        .context("installing the interrupt handler")?;
    }
    let progress: Option<Box<dyn Fn(&str) + Send + Sync>> =
        if verbose > 0 { Some(Box::new(|line: &str| eprintln!("{line}"))) } else { None };
    let opts = RunOptions { out_dir: out_dir.clone(), overrides, cancel: Some(cancel.clone()), progress };
    let record = run_experiment(&cfg, &opts)?;
    if args.figures {
        match &out_dir {
            Some(dir) => report_figures(&record, dir),
            None => eprintln!("warning: --figures needs an output directory"),
        }
    }
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    let failed = record.failed_points();
    println!(
        "{}: {} points, {} failed{}",
        cfg.experiment.tag(),
        record.points.len(),
        failed,
        out_dir.map(|d| format!(", written to {}", d.display())).unwrap_or_default()
    );
    Ok(if !record.completed {
        ExitCode::from(EXIT_INTERRUPTED)
    } else if failed > 0 {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn report_figures(record: &RunRecord, dir: &Path) {
    match emit_figures(record, dir) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
        }
        Err(e) => eprintln!("warning: figures not written: {e}"),
    }
}

fn print_report(r: &BoundReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(r)?);
        return Ok(());
    }
    println!("family: {}", r.family.tag());
    println!("bound: {}", r.value());
    if r.per_theta.len() > 1 {
        println!("range over projectors: [{}, {}]", r.summary.lo, r.summary.hi);
    }
    if let Some(g) = r.gen_error.as_ref().and_then(|g| g.exact) {
        println!("exact generalization error: {g}");
    }
    if r.vacuous {
        println!("note: inputs are near-deterministic, the bound is vacuous");
    }
    Ok(())
}

fn estimated(n_values: usize) -> MiSource {
    MiSource { method: "user_supplied".into(), n_samples: n_values, near_deterministic: false }
}

fn cmd_bound(cmd: BoundCmd, json: bool) -> Result<ExitCode> {
    match cmd {
        BoundCmd::Gme { big_d, d, n } => print_report(&bound_gme(big_d, d, n, GmeMi::ClosedForm)?, json)?,
        BoundCmd::Countable { sigma, b, d, n } => {
            let consts = BoundConstants { sigma: Some(sigma), b_theta: Some(b), d, n, ..Default::default() };
            print_report(&bound_countable(&consts)?, json)?
        }
        BoundCmd::Quantbits { d, levels, entropy } => {
            if levels < 2 || !(entropy >= 0.0) {
                bail!("need L >= 2 and H >= 0");
            }
            let bits = bit_bound(d, levels, entropy);
            let nats = bits as f64 * std::f64::consts::LN_2;
            if json {
                let v = serde_json::json!({ "bits": bits, "nats": nats });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("bits: {bits}");
                println!("nats: {nats}");
            }
        }
        BoundCmd::QuantizedRate { c, d, n, m, delta } => {
            let rate = quantized_rate_term(c, d, n, m, delta)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "rate_term": rate }))?);
            } else {
                println!("rate term: {rate}");
            }
        }
        BoundCmd::Disintegrated { sigma, n, mi } => {
            let consts = BoundConstants { sigma: Some(sigma), n, ..Default::default() };
            print_report(&bound_disintegrated(&mi, &consts, estimated(mi.len()))?, json)?
        }
        BoundCmd::Individual { sigma, c, n, mi } => {
            let consts = BoundConstants { sigma, c, n, ..Default::default() };
            let rows: Vec<Vec<f64>> = mi.iter().map(|v| vec![*v]).collect();
            print_report(&bound_individual_sample(&rows, &consts, estimated(mi.len()))?, json)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = VerifyConfig {
        max_dim: args.max_dim,
        sample_sizes: args.n,
        seed: args.seed,
        tolerance: args.tolerance,
        break_dpi: args.break_dpi,
        ..Default::default()
    };
    let report = run_all(&cfg)?;
    if args.json {
        let v = serde_json::json!({ "passed": report.passed(), "checks": report.checks });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("{:<24} {:>8} {:>8}", "suite", "passed", "failed");
        for (suite, ok, bad) in report.by_suite() {
            println!("{suite:<24} {ok:>8} {bad:>8}");
        }
        for c in report.failures() {
            println!("FAIL {} / {}: lhs {} rhs {}", c.suite, c.name, c.lhs, c.rhs);
        }
        println!("{}", if report.passed() { "all checks passed" } else { "some checks failed" });
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_figures(record: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let rec = RunRecord::load(record)?;
    let dir = match out {
        Some(d) => d,
        None => record.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let result = emit_figures(&rec, &dir)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for f in &result.files {
        println!("{}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_info(defaults: Option<ExperimentKind>) -> Result<ExitCode> {
    if let Some(kind) = defaults {
        print!("{}", ExperimentConfig::defaults(kind).to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("slicegen {}", env!("CARGO_PKG_VERSION"));
    println!("parallel: {}", cfg!(feature = "parallel"));
    println!("threads: {}", slicegen_core::parallel::current_threads());
    println!("experiments:");
    for kind in ExperimentKind::ALL {
        println!("  {}", kind.tag());
    }
    Ok(ExitCode::SUCCESS)
}
