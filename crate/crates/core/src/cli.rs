//! Command dispatch: a validated [`RunConfig`] in, a rendered report and an
//! exit code out. Argument parsing lives behind the `cli` feature; everything
//! else here is plain library code so tests can drive it directly.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::constants::{
    conformal_eigenvalue, gap_constant, monomial_moment, sobolev_constant, sobolev_constant_direct,
    sphere_area, MultiIndex, Params,
};
use crate::error::LabError;
use crate::expansion::{
    best_upper_bound, fit_expansion, sweep, sweep_direction, verify_theorem, BoundSearch, SweepRow,
    DEFAULT_EPSILONS, FIT_EPSILONS,
};
use crate::functional::{
    bubble_norm_pow, cubic_coefficient, cubic_integral, cubic_integral_from_moments,
    dist_to_manifold, hs_norm_sq, perturbation, perturbation_hs_norm_sq, perturbed_bubble,
    SolverOptions,
};
use crate::quadrature::{build_rule, default_degree, RulePair};
use crate::report::{Fields, Format, Report, Table, Val};
use crate::selftest::{self, Hooks};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_D: usize = 3;
pub const DEFAULT_S: f64 = 1.0;
pub const DEFAULT_MULTISTARTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Gap,
    Moments,
    Dist,
    Sweep,
    Fit,
    Theorem,
    Bound,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Constants,
        Command::Gap,
        Command::Moments,
        Command::Dist,
        Command::Sweep,
        Command::Fit,
        Command::Theorem,
        Command::Bound,
        Command::Selftest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Gap => "gap",
            Command::Moments => "moments",
            Command::Dist => "dist",
            Command::Sweep => "sweep",
            Command::Fit => "fit",
            Command::Theorem => "theorem",
            Command::Bound => "bound",
            Command::Selftest => "selftest",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .iter()
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

/// One invocation. `d` and `s` are optional only for `selftest`, where
/// leaving both out runs the whole validation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub d: Option<usize>,
    pub s: Option<f64>,
    pub quad_degree: Option<u32>,
    pub eps_list: Option<Vec<f64>>,
    pub multistarts: usize,
    pub seed: u64,
    pub format: Option<Format>,
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            d: None,
            s: None,
            quad_degree: None,
            eps_list: None,
            multistarts: DEFAULT_MULTISTARTS,
            seed: 0,
            format: None,
            output_path: None,
        }
    }

    pub fn with_point(mut self, d: usize, s: f64) -> Self {
        self.d = Some(d);
        self.s = Some(s);
        self
    }

    pub fn with_format(mut self, f: Format) -> Self {
        self.format = Some(f);
        self
    }

    pub fn with_eps(mut self, eps: Vec<f64>) -> Self {
        self.eps_list = Some(eps);
        self
    }

    pub fn resolved_format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Selftest => Format::Text,
            _ => Format::Json,
        })
    }
}

/// Result of [`run`]: what to write and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
    /// Diagnostic for standard error, present on failure.
    pub message: Option<String>,
}

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::NonFinite { .. }
        | LabError::SouthPole { .. }
        | LabError::NotConverged { .. }
        | LabError::NoCertifiedWitness { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

pub const USAGE: &str = "usage: be-lab <constants|gap|moments|dist|sweep|fit|theorem|bound|selftest> \
[--d <int>] [--s <float>] [--quad-degree <int>] [--eps <comma list>] [--multistarts <int>] \
[--seed <int>] [--format json|csv|text] [--output <path>]";

struct Resolved {
    p: Params,
    degree: u32,
    opts: SolverOptions,
}

fn resolve(cfg: &RunConfig) -> Result<Resolved, LabError> {
    let p = Params::new(cfg.d.unwrap_or(DEFAULT_D), cfg.s.unwrap_or(DEFAULT_S))?;
    let degree = cfg.quad_degree.unwrap_or_else(|| default_degree(p.d()));
    if degree == 0 {
        return Err(LabError::InvalidRule { d: p.d(), degree });
    }
    let opts = SolverOptions {
        multistarts: cfg.multistarts.max(1),
        seed: cfg.seed,
        ..SolverOptions::default()
    };
    Ok(Resolved { p, degree, opts })
}

fn config_echo(cfg: &RunConfig, r: Option<&Resolved>) -> Fields {
    let mut f = Fields::new();
    f.push("command", cfg.command.name());
    f.push("d", r.map(|r| r.p.d()).or(cfg.d));
    f.push("s", r.map(|r| r.p.s()).or(cfg.s));
    f.push("quad_degree", r.map(|r| r.degree).or(cfg.quad_degree));
    f.push("eps_list", cfg.eps_list.clone());
    f.push("multistarts", cfg.multistarts);
    f.push("seed", cfg.seed);
    f.push("format", cfg.resolved_format().name());
    f.push("output_path", cfg.output_path.clone());
    f
}

fn failure(e: &LabError) -> Outcome {
    let code = exit_code(e);
    let mut message = format!("error: {e}");
    if code == EXIT_VALIDATION {
        message.push('\n');
        message.push_str(USAGE);
    }
    Outcome {
        code,
        output: String::new(),
        message: Some(message),
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    run_with_hooks(cfg, &Hooks::default())
}

/// [`run`] with an injectable eigenvalue ladder for the self-test.
pub fn run_with_hooks(cfg: &RunConfig, hooks: &Hooks) -> Outcome {
    if cfg.command == Command::Selftest {
        return run_selftest(cfg, hooks);
    }
    let r = match resolve(cfg) {
        Ok(r) => r,
        Err(e) => return failure(&e),
    };
    let body = match cfg.command {
        Command::Constants => Ok(constants_report(&r)),
        Command::Gap => Ok(gap_report(&r)),
        Command::Moments => moments_report(&r),
        Command::Dist => dist_report(cfg, &r),
        Command::Sweep => sweep_report(cfg, &r),
        Command::Fit => fit_report(cfg, &r),
        Command::Theorem => theorem_report(&r),
        Command::Bound => bound_report(&r),
        Command::Selftest => unreachable!(),
    };
    match body {
        Ok((result, table, code)) => {
            let report = Report {
                command: cfg.command.name().into(),
                config: config_echo(cfg, Some(&r)),
                result,
                table,
            };
            Outcome {
                code,
                output: report.render(cfg.resolved_format()),
                message: (code != EXIT_OK).then(|| "error: numerical non-convergence in at least one row".into()),
            }
        }
        Err(e) => failure(&e),
    }
}

type Body = Result<(Fields, Option<Table>, i32), LabError>;

fn constants_report(r: &Resolved) -> (Fields, Option<Table>, i32) {
    let p = &r.p;
    let ladder: Vec<f64> = (0..=4).map(|l| conformal_eigenvalue(l, p)).collect();
    let f = Fields::new()
        .with("two_star", p.two_star())
        .with("kappa", p.kappa())
        .with("sobolev_constant", sobolev_constant(p))
        .with("sobolev_constant_direct", sobolev_constant_direct(p))
        .with("gap_constant", gap_constant(p))
        .with("eigenvalues", ladder)
        .with("sphere_area", sphere_area(p.d()))
        .with("bubble_level", p.bubble_level())
        .with("bubble_norm_pow", bubble_norm_pow(p));
    (f, None, EXIT_OK)
}

fn gap_report(r: &Resolved) -> (Fields, Option<Table>, i32) {
    let p = &r.p;
    let ts = p.two_star();
    let (e0, e1, e2) = (
        conformal_eigenvalue(0, p),
        conformal_eigenvalue(1, p),
        conformal_eigenvalue(2, p),
    );
    let spectral = (e2 - (ts - 1.0) * e0) / e2;
    let f = Fields::new()
        .with("e0", e0)
        .with("e1", e1)
        .with("e2", e2)
        .with("spectral_gap", spectral)
        .with("gap_constant", gap_constant(p))
        .with("gap_difference", spectral - gap_constant(p))
        .with("tangent_defect", e1 - (ts - 1.0) * e0);
    (f, None, EXIT_OK)
}

fn moments_report(r: &Resolved) -> Body {
    let p = &r.p;
    let d = p.d();
    let n = d + 1;
    let mut alpha = vec![0u32; n];
    alpha[..3].iter_mut().for_each(|a| *a = 2);
    let gamma_route = monomial_moment(&MultiIndex::new(alpha.clone()), d);
    let nf = n as f64;
    let expectation_route = sphere_area(d) / (nf * (nf + 2.0) * (nf + 4.0));
    let rule = build_rule(d, r.degree.max(6))?;
    let quad_route = rule.integrate(|w| w.iter().zip(&alpha).map(|(x, &a)| x.powi(a as i32)).product())?;
    let v = perturbation(p);
    let f = Fields::new()
        .with("moment_gamma", gamma_route)
        .with("moment_expectation", expectation_route)
        .with("moment_quadrature", quad_route)
        .with("quadrature_degree", rule.exactness_degree())
        .with("v2_l2_norm_sq", v.inner_l2(&v)?)
        .with("v2_cube_integral", v.pow(3)?.integrate_exact())
        .with("cubic_integral", cubic_integral(p))
        .with("cubic_integral_moments", cubic_integral_from_moments(p)?)
        .with("reference_s3", PI * PI / 96.0)
        .with("reference_s2", 4.0 * PI / 105.0);
    Ok((f, None, EXIT_OK))
}

fn dist_report(cfg: &RunConfig, r: &Resolved) -> Body {
    let eps = cfg.eps_list.as_ref().and_then(|v| v.first().copied()).unwrap_or(1e-3);
    if eps == 0.0 || !eps.is_finite() {
        return Err(LabError::InvalidEpsilon { eps, max: f64::INFINITY });
    }
    let p = &r.p;
    let rules = RulePair::new(p.d(), r.degree)?;
    let f = perturbed_bubble(p, eps);
    let dist = dist_to_manifold(&f, p, &rules, &r.opts)?;
    let law = eps * eps * perturbation_hs_norm_sq(p)?;
    let fields = Fields::new()
        .with("eps", eps)
        .with("dist2", dist.dist2)
        .with("dist2_law", law)
        .with("dist2_ratio", dist.dist2 / law)
        .with("hs_norm_sq", hs_norm_sq(&f, p)?)
        .with("captured", dist.captured)
        .with("minimizer_c", dist.minimizer.c)
        .with("minimizer_zeta", dist.minimizer.zeta.clone())
        .with("zeta_norm", dist.minimizer.zeta_norm())
        .with("quad_err", dist.quad_error)
        .with("solver_err", dist.solver_error)
        .with("converged", dist.status.converged)
        .with("iterations", dist.status.iterations)
        .with("start_index", dist.status.start_index)
        .with("grad_norm", dist.status.grad_norm);
    let code = if dist.status.converged { EXIT_OK } else { EXIT_NUMERICAL };
    Ok((fields, None, code))
}

fn rows_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new("rows", &["eps", "numerator", "dist2", "quotient", "quad_err"]);
    for row in rows {
        t.push(vec![
            row.eps.into(),
            row.numerator.into(),
            row.dist2.into(),
            row.quotient.into(),
            row.quad_error_estimate.into(),
        ]);
    }
    t
}

fn rows_code(rows: &[SweepRow]) -> i32 {
    if rows.iter().all(|r| r.ok() && r.converged) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

fn sweep_report(cfg: &RunConfig, r: &Resolved) -> Body {
    let eps = cfg.eps_list.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let rules = RulePair::new(r.p.d(), r.degree)?;
    let res = sweep(&r.p, &eps, &rules, &r.opts)?;
    let failed: Vec<String> = res
        .rows
        .iter()
        .filter_map(|row| row.error.as_ref().map(|e| format!("eps={}: {e}", row.eps)))
        .collect();
    let fields = Fields::new()
        .with("gap", gap_constant(&r.p))
        .with("failed_rows", failed.join("; "));
    Ok((fields, Some(rows_table(&res.rows)), rows_code(&res.rows)))
}

fn fit_report(cfg: &RunConfig, r: &Resolved) -> Body {
    let eps = cfg.eps_list.clone().unwrap_or_else(|| FIT_EPSILONS.to_vec());
    let rules = RulePair::new(r.p.d(), r.degree)?;
    let plus = sweep(&r.p, &eps, &rules, &r.opts)?;
    let minus = sweep_direction(&r.p, &eps, -1.0, &rules, &r.opts)?;
    let fit = fit_expansion(&plus)?;
    let flipped = fit_expansion(&minus)?;
    let fields = Fields::new()
        .with("a", fit.a)
        .with("b", fit.b)
        .with("c", fit.c)
        .with("residual", fit.residual)
        .with("b_theory", fit.b_theory)
        .with("gap", fit.gap)
        .with("a_error", fit.a_error())
        .with("b_rel_error", fit.b_rel_error())
        .with("b_flipped", flipped.b)
        .with("cubic_coefficient", cubic_coefficient(&r.p))
        .with("rows_used", fit.rows_used);
    Ok((fields, Some(rows_table(&plus.rows)), rows_code(&plus.rows)))
}

fn theorem_report(r: &Resolved) -> Body {
    let rules = RulePair::new(r.p.d(), r.degree)?;
    let t = verify_theorem(&r.p, &rules, &r.opts)?;
    let fields = Fields::new()
        .with("gap", t.gap)
        .with("witness_eps", t.witness_eps)
        .with("quotient", t.quotient)
        .with("margin", t.margin)
        .with("error_estimate", t.error_estimate)
        .with("c_be_upper_bound", t.c_be_upper_bound)
        .with("certified", true);
    Ok((fields, Some(rows_table(&t.rows)), EXIT_OK))
}

fn bound_report(r: &Resolved) -> Body {
    let rules = RulePair::new(r.p.d(), r.degree)?;
    let b = best_upper_bound(&r.p, &rules, &r.opts, &BoundSearch::default())?;
    let fields = Fields::new()
        .with("gap", b.gap)
        .with("bound", b.value)
        .with("eps", b.eps)
        .with("boundary", b.boundary)
        .with("off_center_eps", b.off_center_eps);
    Ok((fields, Some(rows_table(&b.rows)), EXIT_OK))
}

fn run_selftest(cfg: &RunConfig, hooks: &Hooks) -> Outcome {
    let points = match (cfg.d, cfg.s) {
        (None, None) => crate::constants::validation_grid(),
        (d, s) => match Params::new(d.unwrap_or(DEFAULT_D), s.unwrap_or(DEFAULT_S)) {
            Ok(p) => vec![p],
            Err(e) => return failure(&e),
        },
    };
    let rep = match selftest::run(&points, hooks) {
        Ok(rep) => rep,
        Err(e) => return failure(&e),
    };
    let format = cfg.resolved_format();
    let output = if format == Format::Text {
        let mut s: String = rep.checks.iter().map(|c| c.line() + "\n").collect();
        let passed = rep.checks.iter().filter(|c| c.passed).count();
        s.push_str(&format!("{passed}/{} checks passed\n", rep.checks.len()));
        s
    } else {
        let mut t = Table::new("checks", &["name", "passed", "observed", "expected", "tol"]);
        for c in &rep.checks {
            t.push(vec![
                Val::S(c.name.clone()),
                c.passed.into(),
                c.observed.into(),
                c.expected.into(),
                c.tol.into(),
            ]);
        }
        Report {
            command: cfg.command.name().into(),
            config: config_echo(cfg, None),
            result: Fields::new()
                .with("passed", rep.passed())
                .with("checks_run", rep.checks.len()),
            table: Some(t),
        }
        .render(format)
    };
    let message = rep
        .first_failure()
        .map(|c| format!("selftest failed: {}", c.line()));
    Outcome {
        code: if rep.passed() { EXIT_OK } else { EXIT_NUMERICAL },
        output,
        message,
    }
}

#[cfg(feature = "cli")]
pub mod args {
    use clap::{Parser, ValueEnum};

    use super::{Command, RunConfig, DEFAULT_MULTISTARTS};
    use crate::report::Format;

    #[derive(Debug, Clone, Copy, ValueEnum)]
    pub enum CommandArg {
        Constants,
        Gap,
        Moments,
        Dist,
        Sweep,
        Fit,
        Theorem,
        Bound,
        Selftest,
    }

    #[derive(Debug, Clone, Copy, ValueEnum)]
    pub enum FormatArg {
        Json,
        Csv,
        Text,
    }

    #[derive(Debug, Parser)]
    #[command(name = "be-lab", version, about = "Stability quotient lab for the fractional Sobolev inequality")]
    pub struct Args {
        #[arg(value_enum)]
        pub command: CommandArg,
        #[arg(long)]
        pub d: Option<usize>,
        #[arg(long)]
        pub s: Option<f64>,
        #[arg(long = "quad-degree")]
        pub quad_degree: Option<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pub eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_MULTISTARTS)]
        pub multistarts: usize,
        #[arg(long, default_value_t = 0)]
        pub seed: u64,
        #[arg(long, value_enum)]
        pub format: Option<FormatArg>,
        #[arg(long)]
        pub output: Option<String>,
    }

    impl Args {
        pub fn into_config(self) -> RunConfig {
            let command = match self.command {
                CommandArg::Constants => Command::Constants,
                CommandArg::Gap => Command::Gap,
                CommandArg::Moments => Command::Moments,
                CommandArg::Dist => Command::Dist,
                CommandArg::Sweep => Command::Sweep,
                CommandArg::Fit => Command::Fit,
                CommandArg::Theorem => Command::Theorem,
                CommandArg::Bound => Command::Bound,
                CommandArg::Selftest => Command::Selftest,
            };
            RunConfig {
                command,
                d: self.d,
                s: self.s,
                quad_degree: self.quad_degree,
                eps_list: self.eps,
                multistarts: self.multistarts,
                seed: self.seed,
                format: self.format.map(|f| match f {
                    FormatArg::Json => Format::Json,
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Text => Format::Text,
                }),
                output_path: self.output,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_command_matches_constant() {
        let out = run(&RunConfig::new(Command::Gap).with_point(4, 1.0));
        assert_eq!(out.code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&out.output).unwrap();
        let spectral: f64 = v["result"]["spectral_gap"].as_f64().unwrap();
        let gap: f64 = v["result"]["gap_constant"].as_f64().unwrap();
        assert!((spectral - gap).abs() < 1e-12);
        assert_eq!(v["config"]["d"], 4);
    }

    #[test]
    fn invalid_params_exit_2() {
        let out = run(&RunConfig::new(Command::Constants).with_point(3, 1.5));
        assert_eq!(out.code, EXIT_VALIDATION);
        assert!(out.message.unwrap().contains("usage:"));
        let out = run(&RunConfig::new(Command::Sweep).with_eps(vec![0.0]));
        assert_eq!(out.code, EXIT_VALIDATION);
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }
}
