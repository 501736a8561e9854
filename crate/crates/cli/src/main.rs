//! rsavg: numerical Rankin-Selberg central values for weight-2 newforms
//! twisted by p-power Hecke characters of an imaginary quadratic field, with
//! cross-checked harmonic and Galois averages.

mod commands;
mod config;
mod output;
mod verify;

use rsavg_core::error::Error;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let parsed = match config::parse_args(&args) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    // worker pool: --threads / RSAVG_THREADS, 0 = all cores
    if parsed.config.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(parsed.config.threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = &parsed.config;
    if let Some(suite) = parsed.command.strip_prefix("verify:") {
        let checks = verify::run_suite(suite);
        let mut ok = true;
        for c in &checks {
            println!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
            ok &= c.pass;
        }
        println!("{}: {}/{} checks passed", suite, checks.iter().filter(|c| c.pass).count(), checks.len());
        return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    if parsed.command == "verify" {
        eprintln!("verify needs a suite name: afe | haf | mobius | cutoff | counting");
        return ExitCode::from(2);
    }
    // hypothesis guards before any computation
    let (field, n) = match config::validate(cfg) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("invalid input: {msg}");
            return ExitCode::from(2);
        }
    };
    let result = match parsed.command.as_str() {
        "lvalue" => commands::cmd_lvalue(cfg, field, n),
        "havg" => commands::cmd_havg(cfg, field, n),
        "gavg" => commands::cmd_gavg(cfg, field, n),
        "table" => commands::cmd_table(cfg, field, n),
        "diag" => commands::cmd_diag(cfg, field, n),
        other => {
            eprintln!("unknown command `{other}`\n{}", config::usage());
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::ToleranceUnachievable(msg)) | Err(Error::TableDepth(msg)) => {
            eprintln!("tolerance unachievable: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
