//! The stability functional: `Ḣ^s` form, `L^{2*}` norm, the spectral-gap
//! form, the Sobolev deficit, the distance to the bubble manifold and the
//! quotient of the two.
//!
//! Everything is computed on the sphere. For polynomial inputs the `Ḣ^s`
//! form is the finite sum `Σ_ℓ E_ℓ ⟨F_ℓ, G_ℓ⟩` over harmonic components. Inner
//! products against a bubble `G_ζ` use its Euler–Lagrange equation,
//! `⟨F, G_ζ⟩_{Ḣ^s} = E_0 ∫ G_ζ^{2*-1} F`, so the bubble never needs to be
//! expanded in harmonics.

use serde::{Deserialize, Serialize};

use crate::conformal::{BubbleParamsSphere, ExactForm, Origin, SphereFunction};
use crate::constants::{conformal_eigenvalue, sobolev_constant, sphere_area, Params};
use crate::error::{LabError, Result};
use crate::numerics::{dot, norm_sq};
use crate::polysphere::Polynomial;
use crate::quadrature::{build_rule, RulePair, SphereQuadrature};
use crate::solver::{nelder_mead_max, newton_polish, start_points};

/// A quadrature-backed value with its two-resolution error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `Σ_ℓ E_ℓ ⟨a_ℓ, b_ℓ⟩_{L²(S^d)}`.
pub fn hs_form_poly(a: &Polynomial, b: &Polynomial, p: &Params) -> Result<f64> {
    let ha = a.harmonic_decompose()?;
    let hb = b.harmonic_decompose()?;
    let mut total = 0.0;
    for (ell, ca) in ha.components() {
        if let Some(cb) = hb.component(*ell) {
            total += conformal_eigenvalue(*ell, p) * ca.inner_l2(cb)?;
        }
    }
    Ok(total)
}

/// `⟨F, G⟩_{Ḣ^s}` for two functions with exact polynomial forms.
pub fn hs_form(f: &SphereFunction, g: &SphereFunction, p: &Params) -> Result<f64> {
    match (f.poly(), g.poly()) {
        (Some(a), Some(b)) => hs_form_poly(a, b, p),
        _ => Err(LabError::NotPolynomial { op: "hs_form" }),
    }
}

/// `‖F‖²_{Ḣ^s}` for a polynomial or for a bubble `c·G_ζ` (`= c² E_0 |S^d|`).
pub fn hs_norm_sq(f: &SphereFunction, p: &Params) -> Result<f64> {
    match f.exact() {
        ExactForm::Polynomial(q) => hs_form_poly(q, q, p),
        ExactForm::Bubble(b) => Ok(b.c * b.c * conformal_eigenvalue(0, p) * sphere_area(p.d())),
        ExactForm::None => Err(LabError::NotPolynomial { op: "hs_norm_sq" }),
    }
}

/// `(∫ |F|^q dω)^{1/q}` on one rule.
pub fn lq_norm(f: &SphereFunction, q: f64, rule: &SphereQuadrature) -> Result<f64> {
    Ok(rule.integrate(|w| f.eval(w).abs().powf(q))?.powf(1.0 / q))
}

/// `‖F‖_q` from the fine rule, with `|fine - coarse|` as error estimate.
pub fn lq_norm_pair(f: &SphereFunction, q: f64, rules: &RulePair) -> Result<Estimate> {
    let coarse = lq_norm(f, q, &rules.coarse)?;
    let fine = lq_norm(f, q, &rules.fine)?;
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// `Σ_ℓ (E_ℓ - (2*-1)E_0) ‖ρ_ℓ‖²`: the second variation of the deficit at the
/// standard bubble, in the direction `ρ`.
pub fn gap_form_poly(rho: &Polynomial, p: &Params) -> Result<f64> {
    let e0 = conformal_eigenvalue(0, p);
    let h = rho.harmonic_decompose()?;
    let mut total = 0.0;
    for (ell, norm_sq) in h.l2_norms_sq()? {
        total += (conformal_eigenvalue(ell, p) - (p.two_star() - 1.0) * e0) * norm_sq;
    }
    Ok(total)
}

pub fn gap_form(rho: &SphereFunction, p: &Params) -> Result<f64> {
    let q = rho
        .poly()
        .ok_or(LabError::NotPolynomial { op: "gap_form" })?;
    gap_form_poly(q, p)
}

/// Sobolev deficit `‖F‖²_{Ḣ^s} - S_{d,s} ‖F‖²_{2*}`.
pub fn be_numerator(f: &SphereFunction, p: &Params, rules: &RulePair) -> Result<Estimate> {
    let hs = hs_norm_sq(f, p)?;
    let s = sobolev_constant(p);
    let coarse = lq_norm(f, p.two_star(), &rules.coarse)?;
    let fine = lq_norm(f, p.two_star(), &rules.fine)?;
    Ok(Estimate {
        value: hs - s * fine * fine,
        error: s * (fine * fine - coarse * coarse).abs(),
    })
}

/// `∫_{R^d} U^{2*-3} ρ³ dx` for `ρ` built from `ω_1ω_2 + ω_2ω_3 + ω_3ω_1`,
/// in closed form: `2^{3(d-2s)/2 - d} · 6|S^d| / ((d+1)(d+3)(d+5))`.
pub fn cubic_integral(p: &Params) -> f64 {
    let d = p.d() as f64;
    let exp2 = 3.0 * p.kappa() - d;
    exp2.exp2() * 6.0 * sphere_area(p.d()) / ((d + 1.0) * (d + 3.0) * (d + 5.0))
}

/// The same integral through the sphere: `c_0^{2*-3} ∫_{S^d} v³`, with the
/// cube expanded and integrated monomial by monomial.
pub fn cubic_integral_from_moments(p: &Params) -> Result<f64> {
    let v = Polynomial::pair_sum_harmonic(p.ambient_dim());
    let cube = v.pow(3)?.integrate_exact();
    Ok(p.bubble_level().powf(p.two_star() - 3.0) * cube)
}

/// `‖U‖^{2*}_{2*} = 2^{-d} |S^d|`.
pub fn bubble_norm_pow(p: &Params) -> f64 {
    (-(p.d() as f64)).exp2() * sphere_area(p.d())
}

/// Coefficient of `ε³` in the deficit of `U + ερ`:
/// `-S_{d,s} (2*-1)(2*-2)/3 · ‖U‖^{2-2*}_{2*} · ∫U^{2*-3}ρ³`.
pub fn cubic_coefficient(p: &Params) -> f64 {
    let ts = p.two_star();
    let norm_factor = bubble_norm_pow(p).powf((2.0 - ts) / ts);
    -sobolev_constant(p) * (ts - 1.0) * (ts - 2.0) / 3.0 * norm_factor * cubic_integral(p)
}

/// The degree-2 harmonic used for the test family.
pub fn perturbation(p: &Params) -> Polynomial {
    Polynomial::pair_sum_harmonic(p.ambient_dim())
}

/// `‖ρ‖²_{Ḣ^s} = E_2 ‖v‖²_{L²(S^d)}`.
pub fn perturbation_hs_norm_sq(p: &Params) -> Result<f64> {
    let v = perturbation(p);
    Ok(conformal_eigenvalue(2, p) * v.inner_l2(&v)?)
}

/// Pullback of `f_ε = U + ερ`: the polynomial `2^{-(d-2s)/2} + ε v`.
pub fn perturbed_bubble(p: &Params, eps: f64) -> SphereFunction {
    let q = Polynomial::constant(p.ambient_dim(), p.bubble_level()) + perturbation(p).scale(eps);
    let q2 = q.clone();
    SphereFunction::new(
        p.d(),
        move |w| q2.eval(w),
        ExactForm::Polynomial(q),
        Origin::Pullback,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub multistarts: usize,
    pub tol: f64,
    pub seed: u64,
    pub start_radius: f64,
    pub max_nm_iter: usize,
    pub max_newton_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            multistarts: 16,
            tol: 1e-10,
            seed: 0,
            start_radius: 0.8,
            max_nm_iter: 600,
            max_newton_iter: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStatus {
    pub converged: bool,
    pub iterations: usize,
    pub start_index: usize,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub dist2: f64,
    /// `|fine - coarse|` quadrature estimate on `dist2`.
    pub quad_error: f64,
    /// Predicted remaining gain of the local solver, in units of `dist2`.
    pub solver_error: f64,
    pub minimizer: BubbleParamsSphere,
    pub status: SolverStatus,
    /// Fraction of `‖F‖²` captured by the best bubble.
    pub captured: f64,
}

/// Projection of `F` onto the bubble direction `G_ζ`, evaluated on one rule
/// with cached values of `F` at the nodes. The bubble's own norm
/// `∫G_ζ^{2*}` is integrated on the same rule rather than taken from its
/// closed form `|S^d|`: a bubble too concentrated for the rule then scores
/// near zero instead of producing a spurious maximum.
struct Projection<'a> {
    rule: &'a SphereQuadrature,
    values: Vec<f64>,
    beta: f64,
    d: f64,
    /// `E_0 / ‖F‖²`
    scale: f64,
}

impl<'a> Projection<'a> {
    fn new(f: &SphereFunction, p: &Params, rule: &'a SphereQuadrature, hs: f64) -> Self {
        Self {
            rule,
            values: rule.eval_nodes(|w| f.eval(w)),
            beta: (p.d() as f64 + 2.0 * p.s()) / 2.0,
            d: p.d() as f64,
            scale: conformal_eigenvalue(0, p) / hs,
        }
    }

    /// `[∫G_ζ^{2*-1}F, ∫G_ζ^{2*}]`, followed by their ζ-gradients when asked.
    fn moments(&self, zeta: &[f64], with_grad: bool) -> Result<Vec<f64>> {
        let n = zeta.len();
        let z2 = norm_sq(zeta);
        let len = if with_grad { 2 + 2 * n } else { 2 };
        let (beta, d) = (self.beta, self.d);
        self.rule.integrate_many(len, |k, w, out| {
            let denom = 1.0 - 2.0 * dot(zeta, w) + z2;
            let l = ((1.0 - z2) / denom).ln();
            let g = (beta * l).exp() * self.values[k];
            let h = (d * l).exp();
            out[0] = g;
            out[1] = h;
            if with_grad {
                for j in 0..n {
                    let dlog = -2.0 * zeta[j] / (1.0 - z2) + 2.0 * (w[j] - zeta[j]) / denom;
                    out[2 + j] = beta * g * dlog;
                    out[2 + n + j] = d * h * dlog;
                }
            }
        })
    }

    /// `ψ(ζ) = E_0 (∫G_ζ^{2*-1}F)² / (∫G_ζ^{2*} ‖F‖²)`; `dist² = ‖F‖² (1 - max ψ)`.
    fn captured(&self, zeta: &[f64]) -> Result<f64> {
        let m = self.moments(zeta, false)?;
        Ok(self.scale * m[0] * m[0] / m[1])
    }

    fn captured_grad(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        let n = zeta.len();
        let m = self.moments(zeta, true)?;
        let (i, nn) = (m[0], m[1]);
        Ok((0..n)
            .map(|j| self.scale * (2.0 * i * m[2 + j] / nn - i * i * m[2 + n + j] / (nn * nn)))
            .collect())
    }

    /// Optimal multiple `c = ∫G^{2*-1}F / ∫G^{2*}` and `ψ` at `ζ`.
    fn project(&self, zeta: &[f64]) -> Result<(f64, f64)> {
        let m = self.moments(zeta, false)?;
        Ok((m[0] / m[1], self.scale * m[0] * m[0] / m[1]))
    }
}

/// `ψ(ζ)` on a single rule; used by the grid-scan oracle and the demo.
pub fn captured_fraction(
    f: &SphereFunction,
    zeta: &[f64],
    p: &Params,
    rule: &SphereQuadrature,
) -> Result<f64> {
    let hs = hs_norm_sq(f, p)?;
    Projection::new(f, p, rule, hs).captured(zeta)
}

/// Squared `Ḣ^s` distance from `F` to the bubble manifold.
///
/// The optimal multiple of a fixed bubble is its `Ḣ^s` projection, so only
/// the center `ζ` is searched: Nelder–Mead from each multistart seed on a
/// half-degree screening rule, then a Newton polish on the coarse rule with
/// the analytic gradient. Best value wins (ties go to the lower start index). The winner is re-evaluated on the
/// fine rule.
pub fn dist_to_manifold(
    f: &SphereFunction,
    p: &Params,
    rules: &RulePair,
    opts: &SolverOptions,
) -> Result<DistanceResult> {
    let hs = hs_norm_sq(f, p)?;
    let n = p.ambient_dim();
    let coarse = Projection::new(f, p, &rules.coarse, hs);
    let screen_rule = build_rule(p.d(), (rules.degree() / 2).max(4))?;
    let screen = Projection::new(f, p, &screen_rule, hs);

    // errors inside the closures are surfaced as NaN and re-checked below
    let screen_obj = |z: &[f64]| screen.captured(z).unwrap_or(f64::NAN);
    let obj = |z: &[f64]| coarse.captured(z).unwrap_or(f64::NAN);
    let grad = |z: &[f64]| coarse.captured_grad(z).unwrap_or_else(|_| vec![f64::NAN; n]);

    let mut best: Option<(usize, crate::solver::LocalResult)> = None;
    for (idx, start) in start_points(n, opts.multistarts.max(1), opts.start_radius, opts.seed)
        .into_iter()
        .enumerate()
    {
        let (x, _, nm_iters) = nelder_mead_max(&screen_obj, &start, 0.1, opts.max_nm_iter, 1e-12, 1e-4);
        let mut local = newton_polish(&obj, &grad, &x, opts.tol, opts.max_newton_iter);
        local.iterations += nm_iters;
        let better = match &best {
            None => true,
            Some((_, b)) => local.value > b.value,
        };
        if better && local.value.is_finite() {
            best = Some((idx, local));
        }
    }
    let (start_index, local) = best.ok_or(LabError::NotConverged {
        grad_norm: f64::NAN,
    })?;

    let coarse_psi = coarse.captured(&local.x)?;
    let fine = Projection::new(f, p, &rules.fine, hs);
    let (c, fine_psi) = fine.project(&local.x)?;
    let dist2 = (hs * (1.0 - fine_psi)).max(0.0);
    let solver_error = if local.predicted_gain.is_finite() {
        hs * local.predicted_gain.abs()
    } else {
        hs * local.grad_norm
    };

    Ok(DistanceResult {
        dist2,
        quad_error: hs * (fine_psi - coarse_psi).abs() + roundoff_floor(hs),
        solver_error,
        minimizer: BubbleParamsSphere {
            c,
            zeta: local.x.clone(),
        },
        status: SolverStatus {
            converged: local.converged,
            iterations: local.iterations,
            start_index,
            grad_norm: local.grad_norm,
        },
        captured: fine_psi,
    })
}

/// Cancellation error of `‖F‖²(1 - ψ)` and of the deficit, both differences
/// of quantities of size `‖F‖²`. Exact quadrature leaves only this.
fn roundoff_floor(hs: f64) -> f64 {
    16.0 * f64::EPSILON * hs
}

/// Numerator, distance and quotient for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub numerator: f64,
    pub dist2: f64,
    pub quotient: f64,
    pub minimizer: BubbleParamsSphere,
    pub solver_status: SolverStatus,
    /// Quadrature error estimate on the quotient.
    pub quad_error_estimate: f64,
    /// Solver error estimate on the quotient.
    pub solver_error_estimate: f64,
}

impl QuotientReport {
    pub fn total_error(&self) -> f64 {
        self.quad_error_estimate + self.solver_error_estimate
    }
}

/// Relative threshold below which an input is treated as a bubble.
pub const ON_MANIFOLD_TOL: f64 = 1e-12;

/// `E(F) = deficit / dist²`.
pub fn be_quotient(
    f: &SphereFunction,
    p: &Params,
    rules: &RulePair,
    opts: &SolverOptions,
) -> Result<QuotientReport> {
    let hs = hs_norm_sq(f, p)?;
    let numerator = be_numerator(f, p, rules)?;
    let dist = dist_to_manifold(f, p, rules, opts)?;
    let tol = ON_MANIFOLD_TOL * hs;
    if dist.dist2 <= tol {
        return Err(LabError::OnManifold {
            dist2: dist.dist2,
            tol,
        });
    }
    let quotient = numerator.value / dist.dist2;
    Ok(QuotientReport {
        numerator: numerator.value,
        dist2: dist.dist2,
        quotient,
        minimizer: dist.minimizer,
        solver_status: dist.status,
        quad_error_estimate: (numerator.error + roundoff_floor(hs) + quotient.abs() * dist.quad_error)
            / dist.dist2,
        solver_error_estimate: quotient.abs() * dist.solver_error / dist.dist2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{bubble_sphere, pullback_standard_bubble, tangent_basis};
    use crate::constants::{gap_constant, validation_grid};
    use crate::quadrature::build_rule;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p31() -> Params {
        Params::new(3, 1.0).unwrap()
    }

    #[test]
    fn hs_form_examples() {
        let p = p31();
        let u = pullback_standard_bubble(&p);
        let uu = hs_form(&u, &u, &p).unwrap();
        assert_relative_eq!(uu, 3.0 * PI * PI / 4.0, max_relative = 1e-13);
        // ‖U‖²_{Ḣ^s} = S ‖U‖²_{2*}
        let s_route = sobolev_constant(&p) * bubble_norm_pow(&p).powf(2.0 / p.two_star());
        assert_relative_eq!(uu, s_route, max_relative = 1e-12);

        let v = SphereFunction::from_polynomial(perturbation(&p));
        assert_relative_eq!(hs_form(&v, &v, &p).unwrap(), 35.0 * PI * PI / 16.0, max_relative = 1e-13);
        assert_eq!(hs_form(&u, &v, &p).unwrap(), 0.0);

        let g = bubble_sphere(&BubbleParamsSphere::unit(3), &p).unwrap();
        assert!(matches!(hs_form(&g, &u, &p), Err(LabError::NotPolynomial { .. })));
    }

    #[test]
    fn v2_orthogonal_to_tangent_space() {
        for p in [p31(), Params::new(2, 0.5).unwrap(), Params::new(5, 2.0).unwrap()] {
            let v = SphereFunction::from_polynomial(perturbation(&p));
            for t in tangent_basis(&p) {
                assert_eq!(hs_form(&v, &t, &p).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn lq_norm_examples() {
        let p = p31();
        let rule = build_rule(3, 20).unwrap();
        let one = SphereFunction::from_polynomial(Polynomial::constant(4, 1.0));
        assert_relative_eq!(
            lq_norm(&one, 6.0, &rule).unwrap(),
            sphere_area(3).powf(1.0 / 6.0),
            max_relative = 1e-13
        );
        let u = pullback_standard_bubble(&p);
        let expected = (PI * PI / 4.0).powf(1.0 / 6.0);
        assert_relative_eq!(lq_norm(&u, 6.0, &rule).unwrap(), expected, max_relative = 1e-13);
        let f0 = perturbed_bubble(&p, 0.0);
        assert_eq!(
            lq_norm(&f0, 6.0, &rule).unwrap().to_bits(),
            lq_norm(&u, 6.0, &rule).unwrap().to_bits()
        );
    }

    #[test]
    fn gap_form_examples() {
        let p = p31();
        let v = perturbation(&p);
        let expected = gap_constant(&p) * conformal_eigenvalue(2, &p) * v.inner_l2(&v).unwrap();
        assert_relative_eq!(gap_form_poly(&v, &p).unwrap(), expected, max_relative = 1e-13);

        let w1 = Polynomial::coordinate(4, 0);
        assert!(gap_form_poly(&w1, &p).unwrap().abs() < 1e-13);

        let c = Polynomial::constant(4, 1.3);
        let e0 = conformal_eigenvalue(0, &p);
        let expected = -(p.two_star() - 2.0) * e0 * c.inner_l2(&c).unwrap();
        let got = gap_form_poly(&c, &p).unwrap();
        assert!(got < 0.0);
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }

    #[test]
    fn gap_identity_and_tangent_annihilation_on_grid() {
        for p in validation_grid() {
            let v = SphereFunction::from_polynomial(perturbation(&p));
            let ratio = gap_form(&v, &p).unwrap() / hs_form(&v, &v, &p).unwrap();
            assert_relative_eq!(ratio, gap_constant(&p), max_relative = 1e-12);
            for t in tangent_basis(&p).iter().skip(1) {
                let g = gap_form(t, &p).unwrap();
                let scale = hs_form(t, t, &p).unwrap();
                assert!(g.abs() <= 1e-12 * scale, "{p}: {g} vs {scale}");
            }
        }
    }

    #[test]
    fn gap_form_dominates_on_high_degrees() {
        let p = Params::new(4, 1.5).unwrap();
        let n = 5;
        let w = |i| Polynomial::coordinate(n, i);
        // degree 3 and 4 harmonics plus a degree 2 one
        let h3 = w(0).mul(&w(1)).unwrap().mul(&w(2)).unwrap();
        let h4 = w(0).mul(&w(1)).unwrap().mul(&w(2)).unwrap().mul(&w(3)).unwrap();
        let rho = h3 + h4.scale(0.7) + perturbation(&p).scale(-0.4);
        let lhs = gap_form_poly(&rho, &p).unwrap();
        let rhs = gap_constant(&p) * hs_form_poly(&rho, &rho, &p).unwrap();
        assert!(lhs >= rhs - 1e-10);
    }

    #[test]
    fn cubic_integral_routes_agree() {
        let p = p31();
        assert_relative_eq!(cubic_integral(&p), 2f64.powf(-1.5) * PI * PI / 16.0, max_relative = 1e-13);
        assert_relative_eq!(cubic_integral(&p), 0.218_09, epsilon = 1e-5);
        let p = Params::new(2, 0.5).unwrap();
        assert_relative_eq!(
            cubic_integral(&p),
            2f64.powf(1.5 - 2.0) * 6.0 * 4.0 * PI / (3.0 * 5.0 * 7.0),
            max_relative = 1e-13
        );
        for p in validation_grid() {
            let k = cubic_integral(&p);
            assert!(k > 0.0);
            assert_relative_eq!(k, cubic_integral_from_moments(&p).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn numerator_of_bubble_vanishes() {
        let p = p31();
        let rules = RulePair::new(3, 20).unwrap();
        let u = pullback_standard_bubble(&p);
        let num = be_numerator(&u, &p, &rules).unwrap();
        let norm = hs_norm_sq(&u, &p).unwrap();
        assert!(num.value.abs() <= 1e-10 * norm);
    }

    #[test]
    fn numerator_leading_order() {
        let p = p31();
        let rules = RulePair::new(3, 20).unwrap();
        let eps = 1e-3;
        let num = be_numerator(&perturbed_bubble(&p, eps), &p, &rules).unwrap();
        let ratio = num.value / (eps * eps * 35.0 * PI * PI / 16.0);
        assert!(ratio < 4.0 / 7.0 && ratio > 4.0 / 7.0 - 1e-3, "ratio {ratio}");
    }

    #[test]
    fn distance_of_perturbed_bubble() {
        let p = p31();
        let rules = RulePair::new(3, 20).unwrap();
        let eps = 1e-3;
        let res = dist_to_manifold(&perturbed_bubble(&p, eps), &p, &rules, &SolverOptions::default()).unwrap();
        let expected = eps * eps * 35.0 * PI * PI / 16.0;
        assert_relative_eq!(res.dist2, expected, max_relative = 1e-6);
        assert!(norm_sq(&res.minimizer.zeta).sqrt() <= 1e-5);
        assert!(res.status.converged);
    }

    #[test]
    fn distance_of_bubble_is_zero() {
        let p = p31();
        let rules = RulePair::new(3, 40).unwrap();
        let zeta = vec![0.2, -0.1, 0.15, 0.05];
        let g = bubble_sphere(&BubbleParamsSphere::new(-1.7, zeta.clone()).unwrap(), &p).unwrap();
        let res = dist_to_manifold(&g, &p, &rules, &SolverOptions::default()).unwrap();
        let norm = hs_norm_sq(&g, &p).unwrap();
        assert!(res.dist2 <= 1e-9 * norm, "dist2 {}", res.dist2);
        for (a, b) in res.minimizer.zeta.iter().zip(&zeta) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_relative_eq!(res.minimizer.c, -1.7, max_relative = 1e-6);
    }

    #[test]
    fn quotient_below_and_above_gap() {
        let p = p31();
        let rules = RulePair::new(3, 20).unwrap();
        let opts = SolverOptions::default();
        let plus = be_quotient(&perturbed_bubble(&p, 1e-2), &p, &rules, &opts).unwrap();
        let minus = be_quotient(&perturbed_bubble(&p, -1e-2), &p, &rules, &opts).unwrap();
        assert!(plus.quotient < 4.0 / 7.0);
        assert!(minus.quotient > 4.0 / 7.0);

        let mut prev = 0.0;
        for eps in [1e-2, 1e-3, 1e-4] {
            let q = be_quotient(&perturbed_bubble(&p, eps), &p, &rules, &opts).unwrap().quotient;
            assert!(q < 4.0 / 7.0 && q > prev);
            prev = q;
        }
    }

    #[test]
    fn quotient_rejects_bubbles() {
        let p = p31();
        let rules = RulePair::new(3, 20).unwrap();
        let u = pullback_standard_bubble(&p);
        assert!(matches!(
            be_quotient(&u, &p, &rules, &SolverOptions::default()),
            Err(LabError::OnManifold { .. })
        ));
    }

    #[test]
    fn quotient_scale_invariance() {
        let p = Params::new(2, 0.5).unwrap();
        let rules = RulePair::new(2, 20).unwrap();
        let opts = SolverOptions::default();
        let f = perturbed_bubble(&p, 0.05);
        let base = be_quotient(&f, &p, &rules, &opts).unwrap().quotient;
        for t in [-1.0, 0.5, 3.0] {
            let q = be_quotient(&f.scaled(t), &p, &rules, &opts).unwrap().quotient;
            assert_relative_eq!(q, base, max_relative = 1e-8);
        }
    }
}
