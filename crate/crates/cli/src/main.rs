mod args;
mod commands;
mod config;
mod ledger;

use std::process::ExitCode;

use clap::Parser;
use gvp_core::{Error, ErrorClass};
use serde::Serialize;

use args::{Cli, Command};
use config::AppConfig;
use ledger::LedgerRecord;

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Adapter => 3,
        ErrorClass::Io => 4,
    }
}

fn effective_config(cli: &Cli) -> Result<AppConfig, Error> {
    let mut cfg = AppConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.paths.out = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tz) = cli.tz_offset {
        cfg.tz_offset_minutes = tz;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &AppConfig) -> Result<commands::Outcome, Error> {
    match &cli.command {
        Command::Sample(a) => commands::sample(cfg, a),
        Command::Prep(a) => commands::prep(cfg, a),
        Command::Detect(a) => commands::detect(cfg, a),
        Command::Coverage(a) => commands::coverage(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Profile(a) => commands::profile_cmd(cfg, a),
        Command::Events(a) => commands::events(cfg, a),
        Command::Simulate(a) => commands::simulate(cfg, a, cli.seed, cli.tz_offset),
        Command::Report(a) => commands::report(cfg, a),
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    config: Option<&'a AppConfig>,
    config_file: Option<&'a std::path::Path>,
    command: &'a Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = ledger::now();
    let loaded = effective_config(&cli);
    let result = match &loaded {
        Ok(cfg) => dispatch(&cli, cfg).map_err(|e| (exit_code(&e), e.to_string())),
        Err(e) => Err((exit_code(e), e.to_string())),
    };
    let (code, outputs, error) = match result {
        Ok(outcome) => {
            if !cli.quiet {
                println!("{}", outcome.summary);
            }
            (0u8, outcome.outputs, None)
        }
        Err((code, msg)) => (code, Vec::new(), Some(msg)),
    };
    if let Some(msg) = &error {
        eprintln!("error: {msg}");
    }

    let out_dir = loaded
        .as_ref()
        .map(AppConfig::out_dir)
        .unwrap_or_else(|_| cli.out.clone().unwrap_or_else(|| "out".into()));
    let record = LedgerRecord {
        run_id: ledger::new_run_id(),
        command: cli.command.name().to_string(),
        config_hash: ledger::config_hash(&HashInput {
            config: loaded.as_ref().ok(),
            config_file: cli.config.as_deref(),
            command: &cli.command,
        }),
        started,
        finished: ledger::now(),
        exit_code: i32::from(code),
        outputs,
        error,
    };
    if let Err(e) = ledger::append(&out_dir, &record) {
        eprintln!("warning: could not append to the run ledger in {}: {e}", out_dir.display());
    }
    ExitCode::from(code)
}
