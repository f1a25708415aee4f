use std::path::PathBuf;
use std::process::ExitCode;

use mcps_cli::config::RunConfig;
use mcps_cli::{checks, runner, CliError};

const USAGE: &str = "\
mcps - multi-component phase separation on a spherical membrane

USAGE:
  mcps run --config <FILE> [--out <DIR>] [--resume <CKPT>]
  mcps check-energy     [--config <FILE>]
  mcps check-geometry   [--config <FILE>]
  mcps check-contdep    [--config <FILE>]
  mcps check-separation [--config <FILE>]
  mcps selftest
  mcps print-config

SUBCOMMANDS:
  run               Integrate the configured system; writes diagnostics.csv,
                    snapshots, and checkpoints into the output directory
  check-energy      Energy identity, decay, conservation, and relaxation oracles
  check-geometry    Perturbation expansion, variation formulas, Gauss-Bonnet,
                    and the Poincare chain
  check-contdep     Continuous-dependence twin-run experiment
  check-separation  Separation floor and level-set measures on the default run
  selftest          Table-driven elementary checks plus the property suites
  print-config      Print the built-in default configuration

Check subcommands fall back to the built-in configuration when --config is
omitted. Environment overrides: MCPS_OUTDIR replaces the output directory;
MCPS_THREADS is accepted for compatibility (execution is single-threaded and
bitwise deterministic).
";

struct Args {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    resume: Option<PathBuf>,
}

fn parse_flags(args: &[String]) -> Result<Args, String> {
    let mut out = Args {
        config: None,
        out: None,
        resume: None,
    };
    let mut i = 0;
    while i < args.len() {
        let take_value = |i: &mut usize| -> Result<PathBuf, String> {
            *i += 1;
            args.get(*i)
                .map(PathBuf::from)
                .ok_or_else(|| format!("flag {} needs a value", args[*i - 1]))
        };
        match args[i].as_str() {
            "--config" => out.config = Some(take_value(&mut i)?),
            "--out" => out.out = Some(take_value(&mut i)?),
            "--resume" => out.resume = Some(take_value(&mut i)?),
            other => return Err(format!("unknown flag `{other}`")),
        }
        i += 1;
    }
    Ok(out)
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            RunConfig::parse(&text)
        }
        None => Ok(RunConfig::default_config()),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some(cmd) = argv.first() else {
        eprint!("{USAGE}");
        return ExitCode::FAILURE;
    };
    let flags = match parse_flags(&argv[1..]) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}\n");
            eprint!("{USAGE}");
            return ExitCode::FAILURE;
        }
    };

    let result = match cmd.as_str() {
        "run" => {
            if flags.config.is_none() {
                eprintln!("error: `run` requires --config <FILE>");
                return ExitCode::FAILURE;
            }
            run_cmd(&flags)
        }
        "check-energy" => check_cmd(&flags, checks::check_energy),
        "check-geometry" => check_cmd(&flags, checks::check_geometry),
        "check-contdep" => check_cmd(&flags, checks::check_contdep),
        "check-separation" => check_cmd(&flags, checks::check_separation),
        "selftest" => {
            let all = checks::report(&checks::selftest());
            return if all { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
        "print-config" => {
            print!("{}", mcps_cli::config::DEFAULT_CONFIG);
            return ExitCode::SUCCESS;
        }
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        other => {
            eprintln!("error: unknown subcommand `{other}`\n");
            eprint!("{USAGE}");
            return ExitCode::FAILURE;
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn outdir_override(flags: &Args) -> Option<PathBuf> {
    flags
        .out
        .clone()
        .or_else(|| std::env::var("MCPS_OUTDIR").ok().map(PathBuf::from))
}

fn run_cmd(flags: &Args) -> Result<ExitCode, CliError> {
    let config = load_config(&flags.config)?;
    let outcome = runner::run(&config, outdir_override(flags), flags.resume.clone())?;
    println!(
        "run complete: {} steps to t = {}, {} diagnostics rows, {} breakdown events -> {}",
        outcome.final_state.step,
        outcome.final_state.t,
        outcome.rows.len(),
        outcome.breakdown_events,
        outcome.outdir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn check_cmd(
    flags: &Args,
    f: impl Fn(&RunConfig) -> Result<Vec<checks::CriterionResult>, CliError>,
) -> Result<ExitCode, CliError> {
    let config = load_config(&flags.config)?;
    let results = f(&config)?;
    Ok(if checks::report(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
