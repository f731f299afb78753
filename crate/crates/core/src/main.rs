use std::process::ExitCode;

use clap::Parser;

use be_lab::cli::{self, args::Args, EXIT_VALIDATION};
use be_lab::selftest::{corrupted_eigenvalue, Hooks};

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BE_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("error: BE_LAB_THREADS must be a positive integer, got '{raw}'"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("error: cannot size the thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cfg = Args::parse().into_config();
    if let Err(msg) = configure_threads() {
        eprintln!("{msg}");
        return ExitCode::from(EXIT_VALIDATION as u8);
    }
    // negative control for harnesses: a deliberately wrong eigenvalue ladder
    let hooks = match std::env::var("BE_LAB_FAULT").as_deref() {
        Ok("eigenvalue") => Hooks {
            eigenvalue: corrupted_eigenvalue,
        },
        _ => Hooks::default(),
    };
    let out = cli::run_with_hooks(&cfg, &hooks);
    if let Some(msg) = &out.message {
        eprintln!("{msg}");
    }
    if !out.output.is_empty() {
        match &cfg.output_path {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &out.output) {
                    eprintln!("error: cannot write {path}: {e}");
                    return ExitCode::from(EXIT_VALIDATION as u8);
                }
            }
            None => print!("{}", out.output),
        }
    }
    ExitCode::from(out.code as u8)
}
