//! Browser bindings. Each export runs one lab command and returns the same
//! JSON report the command-line tool prints, or throws the diagnostic.

use be_lab::cli::{run, Command, RunConfig};
use be_lab::report::Format;
use wasm_bindgen::prelude::*;

/// Multistart count for the in-browser sweep. The CLI default is tuned for
/// certification runs and is too slow for an interactive page.
const DEMO_MULTISTARTS: usize = 4;

fn execute(cfg: RunConfig) -> Result<String, JsError> {
    let out = run(&cfg.with_format(Format::Json));
    if out.code == 0 {
        Ok(out.output)
    } else {
        // the diagnostic's first line, without the CLI usage text
        let msg = out.message.as_deref().and_then(|m| m.lines().next()).unwrap_or("run failed");
        Err(JsError::new(msg.trim_start_matches("error: ")))
    }
}

fn parse_eps(list: &str) -> Result<Vec<f64>, JsError> {
    list.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| JsError::new(&format!("bad epsilon '{}'", t.trim()))))
        .collect()
}

/// Sharp Sobolev constant and the exponents at `(d, s)`.
#[wasm_bindgen]
pub fn constants(d: usize, s: f64) -> Result<String, JsError> {
    execute(RunConfig::new(Command::Constants).with_point(d, s))
}

/// Eigenvalue ladder and spectral gap at `(d, s)`.
#[wasm_bindgen]
pub fn gap(d: usize, s: f64) -> Result<String, JsError> {
    execute(RunConfig::new(Command::Gap).with_point(d, s))
}

/// Stability quotient along the second-harmonic perturbation for a
/// comma-separated list of amplitudes.
#[wasm_bindgen]
pub fn sweep(d: usize, s: f64, eps: &str) -> Result<String, JsError> {
    let mut cfg = RunConfig::new(Command::Sweep).with_point(d, s).with_eps(parse_eps(eps)?);
    cfg.multistarts = DEMO_MULTISTARTS;
    execute(cfg)
}
