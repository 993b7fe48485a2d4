use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use adaptctl_cli::run::{run_scenario, OutputFormat, RunReport};
use adaptctl_cli::{bundled, validate_config, ScenarioConfig};

/// Exit code for configs that fail validation.
const EXIT_INVALID: u8 = 2;
/// Exit code for runs stopped by the divergence guard or a runtime error.
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "adaptctl", version, about = "Run adaptive control scenarios from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenarios. Each argument is a config path or a bundled scenario name.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        #[arg(long, env = "ADAPTCTL_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Overrides the noise seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
        format: OutputFormat,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a config and report every problem found.
    Validate { config: String },
    /// List bundled scenarios.
    ListScenarios,
}

fn load(arg: &str) -> Result<ScenarioConfig, Vec<String>> {
    let path = Path::new(arg);
    if path.exists() {
        return validate_config(path);
    }
    match bundled::load(arg) {
        Some(r) => r,
        None => Err(vec![format!("{arg}: no such file or bundled scenario")]),
    }
}

fn print_report(r: &RunReport) {
    let status = match r.exit_code() {
        0 => "PASS",
        1 => "FAIL",
        _ => "ABORT",
    };
    println!("{status} {} ({}, {} samples)", r.name, r.kind, r.samples);
    for v in &r.criteria {
        let value = v.value.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"));
        let mark = if v.passed { "ok" } else { "FAILED" };
        println!("  {mark:6} {} = {value} {} {}", v.name, v.op.symbol(), v.threshold);
        if let Some(e) = &v.error {
            println!("         {e}");
        }
    }
    for c in &r.certificates {
        let mark = if c.passed { "ok" } else { "FAILED" };
        println!("  {mark:6} certificate {}: {}", c.name, c.detail);
    }
    for w in &r.warnings {
        println!("  warning: {w}");
    }
    if let Some(a) = &r.abort {
        println!("  aborted: {a}");
    }
}

fn run(configs: &[String], out: &Path, seed: Option<u64>, format: OutputFormat, jobs: usize) -> u8 {
    let mut parsed = Vec::new();
    let mut invalid = false;
    for arg in configs {
        match load(arg) {
            Ok(mut cfg) => {
                if seed.is_some() {
                    cfg.sim.seed = seed;
                }
                parsed.push(cfg);
            }
            Err(errs) => {
                invalid = true;
                eprintln!("{arg}: invalid config");
                for e in errs {
                    eprintln!("  {e}");
                }
            }
        }
    }
    if invalid {
        return EXIT_INVALID;
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<u8>>> = Mutex::new(vec![None; parsed.len()]);
    let print = Mutex::new(());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, parsed.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = parsed.get(i) else { break };
                let code = match run_scenario(cfg, out, format) {
                    Ok(report) => {
                        let _guard = print.lock().unwrap();
                        print_report(&report);
                        report.exit_code() as u8
                    }
                    Err(e) => {
                        let _guard = print.lock().unwrap();
                        println!("ABORT {}: {e}", cfg.name);
                        EXIT_ABORT
                    }
                };
                results.lock().unwrap()[i] = Some(code);
            });
        }
    });
    results.into_inner().unwrap().into_iter().flatten().max().unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            format,
            jobs,
        } => run(&configs, &out, seed, format, jobs),
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{config}: valid ({} scenario `{}`)", cfg.scenario.kind(), cfg.name);
                0
            }
            Err(errs) => {
                eprintln!("{config}: {} problem(s)", errs.len());
                for e in errs {
                    eprintln!("  {e}");
                }
                EXIT_INVALID
            }
        },
        Command::ListScenarios => {
            for (name, desc) in bundled::list() {
                println!("{name:18} {desc}");
            }
            0
        }
    };
    ExitCode::from(code)
}
