//! Sweeps of the quotient along `f_ε = U + ερ`, the expansion fit
//! `E(ε) ≈ A + Bε + Cε²`, the strict-inequality certificate and a coarse
//! search over larger ε.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::{gap_constant, Params};
use crate::error::{LabError, Result};
use crate::functional::{
    be_quotient, cubic_coefficient, perturbation_hs_norm_sq, perturbed_bubble, QuotientReport,
    SolverOptions,
};
use crate::numerics::ordered_map;
use crate::quadrature::RulePair;

pub const DEFAULT_EPSILONS: [f64; 6] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2.5e-3];

/// Sweep used for the expansion fit. At ε = 0.1 the terms beyond the
/// quadratic model move the fitted slope by about one percent.
pub const FIT_EPSILONS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1e-3];

/// Largest `|ε|` accepted by [`sweep`].
pub const MAX_EPS: f64 = 0.3;

/// Witnesses need a margin this many times the error estimate.
pub const CERTIFY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub numerator: f64,
    pub dist2: f64,
    pub quotient: f64,
    pub quad_error_estimate: f64,
    pub solver_error_estimate: f64,
    pub zeta_norm: f64,
    pub converged: bool,
    /// Set when the row failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

impl SweepRow {
    fn from_report(eps: f64, r: &QuotientReport) -> Self {
        Self {
            eps,
            numerator: r.numerator,
            dist2: r.dist2,
            quotient: r.quotient,
            quad_error_estimate: r.quad_error_estimate,
            solver_error_estimate: r.solver_error_estimate,
            zeta_norm: r.minimizer.zeta_norm(),
            converged: r.solver_status.converged,
            error: None,
        }
    }

    fn failed(eps: f64, err: &LabError) -> Self {
        Self {
            eps,
            numerator: f64::NAN,
            dist2: f64::NAN,
            quotient: f64::NAN,
            quad_error_estimate: f64::NAN,
            solver_error_estimate: f64::NAN,
            zeta_norm: f64::NAN,
            converged: false,
            error: Some(err.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.quotient.is_finite()
    }

    pub fn total_error(&self) -> f64 {
        self.quad_error_estimate + self.solver_error_estimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub params: Params,
    /// `+1` for `U + ερ`, `-1` for `U - ερ`.
    pub direction: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn successful(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.ok())
    }
}

fn check_eps(eps: f64, max: f64) -> Result<()> {
    if eps == 0.0 || !eps.is_finite() || eps.abs() > max {
        return Err(LabError::InvalidEpsilon { eps, max });
    }
    Ok(())
}

fn quotient_at(p: &Params, eps: f64, rules: &RulePair, opts: &SolverOptions) -> SweepRow {
    let f = perturbed_bubble(p, eps);
    match be_quotient(&f, p, rules, opts) {
        Ok(r) => SweepRow::from_report(eps, &r),
        Err(e) => SweepRow::failed(eps, &e),
    }
}

/// Quotient of `U + ερ` at each ε, rows in input order.
pub fn sweep(p: &Params, epsilons: &[f64], rules: &RulePair, opts: &SolverOptions) -> Result<SweepResult> {
    sweep_direction(p, epsilons, 1.0, rules, opts)
}

/// Quotient of `U + ε·direction·ρ`; rows record ε itself.
pub fn sweep_direction(
    p: &Params,
    epsilons: &[f64],
    direction: f64,
    rules: &RulePair,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    for &e in epsilons {
        check_eps(e, MAX_EPS)?;
    }
    let rows = ordered_map(epsilons, |&e| {
        let mut row = quotient_at(p, direction * e, rules, opts);
        row.eps = e;
        row
    });
    Ok(SweepResult {
        params: *p,
        direction,
        rows,
    })
}

/// `B_theory = cubic coefficient / ‖ρ‖²_{Ḣ^s}`, from closed forms only.
pub fn b_theory(p: &Params) -> Result<f64> {
    Ok(cubic_coefficient(p) / perturbation_hs_norm_sq(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTolerances {
    pub a_abs: f64,
    pub b_rel: f64,
}

impl Default for FitTolerances {
    fn default() -> Self {
        Self {
            a_abs: 1e-4,
            b_rel: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Largest absolute misfit over the rows used.
    pub residual: f64,
    pub b_theory: f64,
    pub gap: f64,
    pub rows_used: usize,
}

impl ExpansionFit {
    pub fn a_error(&self) -> f64 {
        (self.a - self.gap).abs()
    }

    pub fn b_rel_error(&self) -> f64 {
        ((self.b - self.b_theory) / self.b_theory).abs()
    }

    pub fn within(&self, tol: &FitTolerances) -> bool {
        self.a_error() <= tol.a_abs && self.b_rel_error() <= tol.b_rel
    }
}

/// Weighted least squares for `A + Bε + Cε²` on `(ε, value, σ)` triples.
pub fn quadratic_fit(points: &[(f64, f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    if points.len() < 3 {
        return Err(LabError::Underdetermined {
            rows: points.len(),
            needed: 3,
        });
    }
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let n = points.len();
    let mut x = DMatrix::<f64>::zeros(n, 3);
    let mut y = DVector::<f64>::zeros(n);
    for (i, &(e, v, sigma)) in points.iter().enumerate() {
        let w = 1.0 / sigma;
        let t = e / scale;
        x[(i, 0)] = w;
        x[(i, 1)] = w * t;
        x[(i, 2)] = w * t * t;
        y[i] = w * v;
    }
    let sol = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|_| LabError::Underdetermined { rows: n, needed: 3 })?;
    let (a, b, c) = (sol[0], sol[1] / scale, sol[2] / (scale * scale));
    let residual = points
        .iter()
        .map(|&(e, v, _)| (v - (a + b * e + c * e * e)).abs())
        .fold(0.0, f64::max);
    Ok((a, b, c, residual))
}

/// Fit the successful rows of a sweep. Each row is weighted by its error
/// estimate, floored at a few ulps of the quotient so exact rows do not
/// dominate.
pub fn fit_expansion(res: &SweepResult) -> Result<ExpansionFit> {
    let rows: Vec<&SweepRow> = res.successful().collect();
    let mags: Vec<f64> = rows.iter().map(|r| r.eps.abs()).collect();
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().copied().fold(0.0, f64::max);
    if rows.len() < 3 || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(LabError::Underdetermined {
            rows: rows.len(),
            needed: 3,
        });
    }
    let points: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            let floor = 1e-13 * r.quotient.abs().max(1.0);
            (r.eps, r.quotient, r.total_error().max(floor))
        })
        .collect();
    let (a, b, c, residual) = quadratic_fit(&points)?;
    Ok(ExpansionFit {
        a,
        b,
        c,
        residual,
        b_theory: b_theory(&res.params)?,
        gap: gap_constant(&res.params),
        rows_used: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub d: usize,
    pub s: f64,
    pub gap: f64,
    pub witness_eps: f64,
    pub quotient: f64,
    pub margin: f64,
    pub error_estimate: f64,
    pub c_be_upper_bound: f64,
    pub rows: Vec<SweepRow>,
}

/// Search the default ε grid for a quotient strictly below the gap with a
/// margin above [`CERTIFY_FACTOR`] times its error estimate. The certified
/// row with the largest margin is the witness.
pub fn verify_theorem(p: &Params, rules: &RulePair, opts: &SolverOptions) -> Result<TheoremReport> {
    let res = sweep(p, &DEFAULT_EPSILONS, rules, opts)?;
    let gap = gap_constant(p);
    let witness = res
        .successful()
        .filter(|r| {
            let margin = gap - r.quotient;
            margin > 0.0 && margin > CERTIFY_FACTOR * r.total_error()
        })
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if b.quotient <= r.quotient => Some(b),
            _ => Some(r),
        })
        .ok_or(LabError::NoCertifiedWitness { d: p.d(), s: p.s() })?;
    Ok(TheoremReport {
        d: p.d(),
        s: p.s(),
        gap,
        witness_eps: witness.eps,
        quotient: witness.quotient,
        margin: gap - witness.quotient,
        error_estimate: witness.total_error(),
        c_be_upper_bound: witness.quotient,
        rows: res.rows.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSearch {
    /// Upper end of the search interval `(0, hi]`.
    pub hi: f64,
    /// Number of uniform grid points `hi·k/n`, `k = 1..=n`.
    pub points: usize,
}

impl Default for BoundSearch {
    fn default() -> Self {
        Self { hi: 1.0, points: 20 }
    }
}

impl BoundSearch {
    /// Uniform grid merged with the default witness grid, sorted.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(1);
        let mut g: Vec<f64> = (1..=n).map(|k| self.hi * k as f64 / n as f64).collect();
        g.extend(DEFAULT_EPSILONS.iter().filter(|&&e| e <= self.hi));
        g.sort_by(f64::total_cmp);
        g.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
        g
    }

    /// Same interval at half the spacing; its grid contains this one.
    pub fn refined(&self) -> Self {
        Self {
            hi: self.hi,
            points: 2 * self.points.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: usize,
    pub s: f64,
    pub gap: f64,
    pub value: f64,
    pub eps: f64,
    /// The minimizing ε sits at an end of the search grid.
    pub boundary: bool,
    /// Smallest grid ε whose best bubble is no longer centered (`|ζ| > 1e-6`).
    pub off_center_eps: Option<f64>,
    pub rows: Vec<SweepRow>,
}

/// Minimum of the quotient over the search grid. Failed rows are skipped.
pub fn best_upper_bound(
    p: &Params,
    rules: &RulePair,
    opts: &SolverOptions,
    search: &BoundSearch,
) -> Result<BoundReport> {
    if !(search.hi > 0.0 && search.hi.is_finite()) {
        return Err(LabError::InvalidEpsilon {
            eps: search.hi,
            max: f64::INFINITY,
        });
    }
    let grid = search.grid();
    let rows = ordered_map(&grid, |&e| quotient_at(p, e, rules, opts));
    let (idx, best) = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.ok())
        .fold(None::<(usize, &SweepRow)>, |acc, (i, r)| match acc {
            Some((j, b)) if b.quotient <= r.quotient => Some((j, b)),
            _ => Some((i, r)),
        })
        .ok_or(LabError::NoCertifiedWitness { d: p.d(), s: p.s() })?;
    let off_center_eps = rows
        .iter()
        .find(|r| r.ok() && r.zeta_norm > 1e-6)
        .map(|r| r.eps);
    Ok(BoundReport {
        d: p.d(),
        s: p.s(),
        gap: gap_constant(p),
        value: best.quotient,
        eps: best.eps,
        boundary: idx == 0 || idx + 1 == rows.len(),
        off_center_eps,
        rows,
    })
}
