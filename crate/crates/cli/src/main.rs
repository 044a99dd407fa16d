use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fescale::benchmarks::Benchmark;
use fescale::config::{parse_schemes, RunConfig};
use fescale::suite::SuiteOutcome;
use fescale::{load_config, run_suite, selfcheck};

/// Two-scale (FE²) solver: staggered and monolithic Newton drivers.
#[derive(Parser)]
#[command(name = "fescale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the model described by a TOML configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run built-in benchmarks (`all` or a benchmark name).
    Bench {
        #[arg(default_value = "all")]
        suite: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Quick invariant self-checks.
    Check,
}

#[derive(clap::Args)]
struct Overrides {
    /// Comma-separated schemes: staggered, monolithic, monolithic-stored.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Worker threads for the micro problems.
    #[arg(long, env = "FESCALE_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, config: &mut RunConfig) -> Result<(), String> {
        if let Some(list) = &self.schemes {
            config.schemes = parse_schemes(list).map_err(|e| e.to_string())?;
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err("--workers must be at least 1".into());
            }
            config.settings.parallel_workers = w;
        }
        if let Some(out) = &self.out {
            config.output.clone_from(out);
        }
        Ok(())
    }
}

fn report(outcome: &SuiteOutcome) {
    println!("{} -> {}", outcome.name, outcome.directory.display());
    for r in &outcome.runs {
        let rep = &r.report;
        println!(
            "  {:<18} {:>4} increments {:>5} macro {:>7} micro {:>7} factorizations {:>10.1} ms{}",
            rep.scheme.name(),
            rep.increments.len(),
            rep.total_macro_iterations(),
            rep.total_micro_iterations(),
            rep.total_factorizations(),
            rep.wall_ms,
            match &rep.failure {
                Some(f) => format!("  FAILED: {f}"),
                None => String::new(),
            }
        );
    }
}

fn run_configs(configs: Vec<RunConfig>) -> ExitCode {
    let mut converged = true;
    for config in configs {
        match run_suite(&config) {
            Ok(outcome) => {
                report(&outcome);
                converged &= outcome.all_converged();
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let mut config = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = overrides.apply(&mut config) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            run_configs(vec![config])
        }
        Command::Bench { suite, overrides } => {
            let benchmarks: Vec<Benchmark> = if suite == "all" {
                Benchmark::ALL.to_vec()
            } else {
                match suite.parse() {
                    Ok(b) => vec![b],
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            };
            let mut configs = Vec::new();
            for b in benchmarks {
                let mut config = RunConfig::for_benchmark(b);
                if let Err(e) = overrides.apply(&mut config) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
                configs.push(config);
            }
            run_configs(configs)
        }
        Command::Check => {
            let checks = selfcheck::run_checks();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
