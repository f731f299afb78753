//! The invariant suite behind `be-lab selftest`.
//!
//! Each check compares an observed value against an expected one at a stated
//! tolerance and renders as one line. The eigenvalue ladder is injected
//! through [`Hooks`] so a harness can corrupt it and watch the spectral checks
//! fail.

use std::f64::consts::PI;

use crate::constants::{
    conformal_eigenvalue, gap_constant, monomial_moment, sobolev_constant, sobolev_constant_direct,
    validation_grid, MultiIndex, Params,
};
use crate::conformal::{tangent_basis, SphereFunction};
use crate::error::Result;
use crate::functional::{
    bubble_norm_pow, cubic_integral, cubic_integral_from_moments, dist_to_manifold, gap_form_poly,
    hs_form, perturbation, perturbation_hs_norm_sq, perturbed_bubble, SolverOptions,
};
use crate::quadrature::{build_rule, default_degree, RulePair, SphereQuadrature};
use crate::report::fmt_f64;

/// Largest dimension for which the quadrature exactness sweep runs.
pub const QUADRATURE_MAX_D: usize = 4;
/// Largest dimension for which the distance solver is exercised.
pub const DISTANCE_MAX_D: usize = 3;
pub const EXACTNESS_DEGREE: u32 = 12;

#[derive(Clone, Copy)]
pub struct Hooks {
    pub eigenvalue: fn(u32, &Params) -> f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            eigenvalue: conformal_eigenvalue,
        }
    }
}

/// `E_ℓ` with the gamma shift off by one in the denominator, for negative
/// controls.
pub fn corrupted_eigenvalue(ell: u32, p: &Params) -> f64 {
    let base = ell as f64 + p.d() as f64 / 2.0;
    (libm::lgamma(base + p.s()) - libm::lgamma(base - p.s() + 1.0)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tol: f64,
    /// Relative comparison scales `tol` by `max(1, |expected|)`.
    pub relative: bool,
    pub passed: bool,
}

impl Check {
    fn new(name: String, observed: f64, expected: f64, tol: f64, relative: bool) -> Self {
        let scale = if relative { expected.abs().max(1.0) } else { 1.0 };
        let passed = observed.is_finite() && (observed - expected).abs() <= tol * scale;
        Self {
            name,
            observed,
            expected,
            tol,
            relative,
            passed,
        }
    }

    /// `observed ≤ bound`.
    fn at_most(name: String, observed: f64, bound: f64) -> Self {
        Self {
            name,
            observed,
            expected: bound,
            tol: 0.0,
            relative: false,
            passed: observed.is_finite() && observed <= bound,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} observed={} expected={} tol={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            fmt_f64(self.observed),
            fmt_f64(self.expected),
            fmt_f64(self.tol),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// The whole validation grid.
pub fn run_grid(hooks: &Hooks) -> Result<SelftestReport> {
    run(&validation_grid(), hooks)
}

pub fn run(points: &[Params], hooks: &Hooks) -> Result<SelftestReport> {
    let mut checks = global_checks();
    let mut quad_done: Vec<usize> = Vec::new();
    for p in points {
        checks.extend(spectral_checks(p, hooks));
        checks.extend(exact_checks(p)?);
        let d = p.d();
        if d <= QUADRATURE_MAX_D && !quad_done.contains(&d) {
            quad_done.push(d);
            let rule = build_rule(d, EXACTNESS_DEGREE)?;
            checks.push(Check::at_most(
                format!("quadrature.exactness d={d} degree={EXACTNESS_DEGREE}"),
                exactness_error(&rule),
                1e-11,
            ));
        }
        if d <= DISTANCE_MAX_D {
            checks.extend(distance_checks(p)?);
        }
    }
    Ok(SelftestReport { checks })
}

fn global_checks() -> Vec<Check> {
    let m = MultiIndex::new;
    vec![
        Check::new(
            "constants.sobolev d=3 s=1".into(),
            sobolev_constant(&Params::new(3, 1.0).expect("valid")),
            3.0 * (PI / 2.0).powf(4.0 / 3.0),
            1e-12,
            true,
        ),
        Check::new(
            "constants.sobolev d=2 s=0.5".into(),
            sobolev_constant(&Params::new(2, 0.5).expect("valid")),
            PI.sqrt(),
            1e-12,
            true,
        ),
        Check::new(
            "constants.moment S3 w1^2w2^2w3^2".into(),
            monomial_moment(&m(vec![2, 2, 2, 0]), 3),
            PI * PI / 96.0,
            1e-12,
            true,
        ),
        Check::new(
            "constants.moment S2 w1^2w2^2w3^2".into(),
            monomial_moment(&m(vec![2, 2, 2]), 2),
            4.0 * PI / 105.0,
            1e-12,
            true,
        ),
    ]
}

fn tag(p: &Params) -> String {
    format!("d={} s={}", p.d(), p.s())
}

fn spectral_checks(p: &Params, hooks: &Hooks) -> Vec<Check> {
    let e = |l| (hooks.eigenvalue)(l, p);
    let (e0, e1, e2) = (e(0), e(1), e(2));
    let ts = p.two_star();
    let potential = sobolev_constant(p)
        * bubble_norm_pow(p).powf((2.0 - ts) / ts)
        * (-(p.d() as f64 - 2.0 * p.s()) * (ts - 2.0) / 2.0).exp2();
    vec![
        Check::new(
            format!("constants.gap_identity {}", tag(p)),
            (e2 - (ts - 1.0) * e0) / e2,
            gap_constant(p),
            1e-12,
            false,
        ),
        Check::new(
            format!("constants.tangent_degeneracy {}", tag(p)),
            (e1 - (ts - 1.0) * e0) / e1,
            0.0,
            1e-12,
            false,
        ),
        Check::new(format!("conformal.potential_identity {}", tag(p)), potential, e0, 1e-12, true),
    ]
}

fn exact_checks(p: &Params) -> Result<Vec<Check>> {
    let sobolev_log_vs_direct = Check::new(
        format!("constants.sobolev_routes {}", tag(p)),
        sobolev_constant(p),
        sobolev_constant_direct(p),
        1e-12,
        true,
    );
    let v = SphereFunction::from_polynomial(perturbation(p));
    let mut worst = 0.0f64;
    for t in tangent_basis(p) {
        worst = worst.max(hs_form(&v, &t, p)?.abs());
    }
    let hs = perturbation_hs_norm_sq(p)?;
    Ok(vec![
        sobolev_log_vs_direct,
        Check::new(
            format!("functional.cubic_integral_routes {}", tag(p)),
            cubic_integral_from_moments(p)?,
            cubic_integral(p),
            1e-12,
            true,
        ),
        Check::at_most(format!("functional.v2_tangent_orthogonality {}", tag(p)), worst, 1e-12),
        Check::new(
            format!("functional.gap_form_equality {}", tag(p)),
            gap_form_poly(&perturbation(p), p)? / hs,
            gap_constant(p),
            1e-12,
            false,
        ),
    ])
}

fn distance_checks(p: &Params) -> Result<Vec<Check>> {
    let eps = 1e-2;
    let rules = RulePair::new(p.d(), default_degree(p.d()))?;
    let f = perturbed_bubble(p, eps);
    let dist = dist_to_manifold(&f, p, &rules, &SolverOptions::default())?;
    let law = eps * eps * perturbation_hs_norm_sq(p)?;
    Ok(vec![
        Check::new(format!("functional.distance_law eps=1e-2 {}", tag(p)), dist.dist2 / law, 1.0, 1e-6, false),
        Check::at_most(
            format!("functional.minimizer_centered eps=1e-2 {}", tag(p)),
            dist.minimizer.zeta_norm(),
            1e-5,
        ),
    ])
}

/// All monomials in `n` variables of total degree ≤ `max_deg`.
pub fn monomials(n: usize, max_deg: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_deg, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Worst `|Q[ω^α] - ∫ω^α| / (1 + |∫ω^α|)` over monomials up to the rule's
/// exactness degree.
pub fn exactness_error(rule: &SphereQuadrature) -> f64 {
    let d = rule.d();
    let mut worst = 0.0f64;
    for alpha in monomials(d + 1, rule.exactness_degree()) {
        let exact = monomial_moment(&MultiIndex::new(alpha.clone()), d);
        let q = rule
            .integrate(|w| w.iter().zip(&alpha).map(|(x, &a)| x.powi(a as i32)).product())
            .unwrap_or(f64::NAN);
        worst = worst.max((q - exact).abs() / (1.0 + exact.abs()));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restricted_run_passes() {
        let p = Params::new(2, 0.5).unwrap();
        let r = run(&[p], &Hooks::default()).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn corrupted_eigenvalue_fails_gap_identity() {
        let p = Params::new(3, 1.0).unwrap();
        let hooks = Hooks {
            eigenvalue: corrupted_eigenvalue,
        };
        let r = run(&[p], &hooks).unwrap();
        let f = r.first_failure().unwrap();
        assert!(f.name.starts_with("constants.gap_identity"));
        assert!(f.line().starts_with("FAIL "));
    }

    #[test]
    fn monomial_count() {
        // C(n + k, n)
        assert_eq!(monomials(3, 4).len(), 35);
        assert_eq!(monomials(5, 12).len(), 6188);
    }
}
