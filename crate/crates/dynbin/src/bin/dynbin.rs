use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynbin::experiment::{run_experiment, AlgConfig, AlgName, Assertions, ExperimentConfig, FamilySpec, Report};
use dynbin::format::{load_instance, read_trace, save_instance, write_instance, write_trace, ResultSummary};
use dynbin::report::{markdown_rows, markdown_summary, write_csv, Summary};
use dynbin_core::algorithms::MigOrder;
use dynbin_core::audit::{audit_run, Check};
use dynbin_core::engine::verify_trace;
use dynbin_core::oracles::opt_total;

#[derive(Parser)]
#[command(name = "dynbin", version, about = "Dynamic bin packing with bounded migration")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate one instance as JSON Lines
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a seeded experiment, or one policy on one instance file
    Run(RunArgs),
    /// Print the repacking optimum of an instance as JSON
    Opt {
        instance: PathBuf,
        /// Policy used to resolve deferred durations
        #[command(flatten)]
        alg: AlgArgs,
    },
    /// Run every applicable check; exit status 0 iff all pass
    Verify {
        instance: Option<PathBuf>,
        #[command(flatten)]
        alg: AlgArgs,
        /// Check a trace file for capacity and placement consistency instead
        #[arg(long, conflicts_with = "instance")]
        trace: Option<PathBuf>,
    },
    /// Summarise a JSON report written by `run --json`
    Report {
        report: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Include one table row per trial
        #[arg(long)]
        rows: bool,
    },
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long, default_value = "uniform")]
    family: String,
    /// Comma separated key=value pairs, e.g. k=10,mu=100
    #[arg(long, default_value = "")]
    params: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Id,
    SizeDesc,
}

#[derive(Args, Clone)]
struct AlgArgs {
    #[arg(long, value_enum, default_value = "firstfit")]
    alg: AlgName,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    #[arg(long = "delay-c")]
    delay_c: Option<f64>,
    #[arg(long = "mig-order", value_enum, default_value = "id")]
    mig_order: OrderArg,
}

impl AlgArgs {
    fn config(&self) -> AlgConfig {
        AlgConfig {
            alg: self.alg,
            alpha: self.alpha,
            f: self.f,
            delay_c: self.delay_c,
            mig_order: match self.mig_order {
                OrderArg::Id => MigOrder::Id,
                OrderArg::SizeDesc => MigOrder::SizeDesc,
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config as JSON; flags below are ignored when given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run on one instance file instead of a generated family
    #[arg(long, conflicts_with = "config")]
    instance: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    alg: AlgArgs,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip all assertions; exit status then only reflects errors
    #[arg(long)]
    no_assert: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// JSON Lines trace (single instance only)
    #[arg(long, requires = "instance")]
    trace: Option<PathBuf>,
    /// Result summary as JSON (single instance only)
    #[arg(long, requires = "instance")]
    result: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_gen(family: &FamilyArgs, seed: u64, output: Option<&Path>) -> Result<ExitCode> {
    let inst = FamilySpec::from_params(&family.family, &family.params)?.generate(seed)?;
    match output {
        Some(p) => save_instance(&inst, p)?,
        None => write_instance(&inst, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run_instance(args: &RunArgs, path: &Path) -> Result<ExitCode> {
    let inst = load_instance(path)?;
    let spec = args.alg.config().spec()?;
    let out = audit_run(&inst, &spec, None, None, args.trace.is_some()).map_err(|e| anyhow!("{}", e))?;
    if let Some(p) = &args.trace {
        write_trace(&out.result, create(p)?)?;
    }
    if let Some(p) = &args.result {
        serde_json::to_writer_pretty(create(p)?, &ResultSummary::new(&out.result))?;
    }
    let checks: Vec<Check> = if args.no_assert { Vec::new() } else { out.checks.clone() };
    println!(
        "{}: cost {} migrations {}",
        out.result.policy,
        out.result.total_active_time,
        out.result.migration_counts().unit
    );
    if let Some(opt) = &out.opt {
        println!("opt: {}", opt);
    }
    print_checks(&checks);
    Ok(status(checks.iter().all(|c| c.passed)))
}

fn write_outputs(report: &Report, csv: Option<&Path>, json: Option<&Path>) -> Result<()> {
    if let Some(p) = csv {
        write_csv(&report.rows(), create(p)?)?;
    }
    if let Some(p) = json {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, report)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    if let Some(p) = &args.instance {
        return cmd_run_instance(args, p);
    }
    let config = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig {
            algorithm: args.alg.config(),
            family: FamilySpec::from_params(&args.family.family, &args.family.params)?,
            trials: args.trials,
            base_seed: args.seed,
            assertions: if args.no_assert {
                Assertions::none()
            } else {
                Assertions::default()
            },
            csv: args.csv.clone(),
            json: args.json.clone(),
        },
    };
    if config.trials == 0 {
        bail!("trials must be at least 1");
    }
    let report = run_experiment(&config)?;
    write_outputs(&report, config.csv.as_deref(), config.json.as_deref())?;
    print!("{}", markdown_summary(&report.summary));
    for t in report.trials.iter().filter(|t| !t.passed) {
        match &t.error {
            Some(e) => println!("FAIL seed {}: {}", t.seed, e),
            None => {
                for c in t.checks.iter().filter(|c| !c.passed) {
                    println!("FAIL seed {} {}: {}", t.seed, c.name, c.detail);
                }
            }
        }
    }
    Ok(status(report.passed()))
}

fn cmd_opt(path: &Path, alg: &AlgArgs) -> Result<ExitCode> {
    let inst = load_instance(path)?;
    let resolved = if inst.has_deferred() {
        let spec = alg.config().spec()?;
        let mut policy = spec.build().map_err(|e| anyhow!("{}", e))?;
        let r = dynbin_core::engine::simulate(&inst, policy.as_mut(), &spec.sim_options(), None)
            .map_err(|e| anyhow!("{}", e))?;
        inst.with_durations(&r.resolved_durations())
    } else {
        inst
    };
    let report = opt_total(&resolved).map_err(|e| anyhow!("{}", e))?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(instance: Option<&Path>, alg: &AlgArgs, trace: Option<&Path>) -> Result<ExitCode> {
    if let Some(p) = trace {
        let (header, records) = read_trace(File::open(p).with_context(|| format!("opening {}", p.display()))?)?;
        return Ok(match verify_trace(header.scale, &records) {
            Ok(()) => {
                println!("PASS trace: {} records from {}", records.len(), header.policy);
                ExitCode::SUCCESS
            }
            Err(e) => {
                println!("FAIL trace: {}", e);
                ExitCode::from(1)
            }
        });
    }
    let path = instance.ok_or_else(|| anyhow!("give an instance file or --trace"))?;
    let inst = load_instance(path)?;
    let violations = inst.validate();
    if !violations.is_empty() {
        for v in &violations {
            println!("FAIL instance: {}", v);
        }
        return Ok(ExitCode::from(1));
    }
    let spec = alg.config().spec()?;
    let out = audit_run(&inst, &spec, None, None, true);
    match out {
        Ok(out) => {
            print_checks(&out.checks);
            Ok(status(out.passed()))
        }
        Err(e) => {
            println!("FAIL simulation: {}", e);
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_report(path: &Path, csv: Option<&Path>, rows: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: Report = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let failed = report.trials.iter().filter(|t| !t.passed).count();
    let summary = Summary::from_rows(&report.rows(), failed);
    if summary != report.summary {
        eprintln!("warning: stored summary differs from the recomputed one");
    }
    if let Some(p) = csv {
        write_csv(&report.rows(), create(p)?)?;
    }
    if rows {
        println!("{}", markdown_rows(&report.rows()));
    }
    print!("{}", markdown_summary(&summary));
    Ok(status(failed == 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Gen { family, seed, output } => cmd_gen(family, *seed, output.as_deref()),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Opt { instance, alg } => cmd_opt(instance, alg),
        Cmd::Verify { instance, alg, trace } => cmd_verify(instance.as_deref(), alg, trace.as_deref()),
        Cmd::Report { report, csv, rows } => cmd_report(report, csv.as_deref(), *rows),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
