//! Stereographic dictionary between `R^d` and `S^d`.
//!
//! A function `f` on `R^d` is carried to the sphere by
//! `F(ω) = J_S(x)^{-1/2*} f(x)` with `x = S^{-1}(ω)`. This transport preserves
//! the `L^{2*}` norm and diagonalizes the `Ḣ^s` form on spherical harmonics.
//! The standard bubble becomes the constant `2^{-(d-2s)/2}` and its tangent
//! directions become the degree-one harmonics.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::Params;
use crate::error::{LabError, Result};
use crate::numerics::{dot, norm_sq};
use crate::polysphere::Polynomial;

/// Default distance from the south pole below which inverse projection fails.
pub const POLE_DELTA: f64 = 1e-12;

/// Largest admissible `|ζ|` for iterates of the distance solver.
pub const ZETA_MAX: f64 = 1.0 - 1e-6;

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Pullback,
    Bubble,
    Synthetic,
}

/// Exact representation attached to a [`SphereFunction`], when one exists.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactForm {
    Polynomial(Polynomial),
    Bubble(BubbleParamsSphere),
    None,
}

/// A function on `S^d`: a callable together with its exact form when known.
#[derive(Clone)]
pub struct SphereFunction {
    eval: Evaluator,
    exact: ExactForm,
    origin: Origin,
    d: usize,
}

impl fmt::Debug for SphereFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereFunction")
            .field("d", &self.d)
            .field("origin", &self.origin)
            .field("exact", &self.exact)
            .finish()
    }
}

impl SphereFunction {
    pub fn new<F>(d: usize, eval: F, exact: ExactForm, origin: Origin) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            exact,
            origin,
            d,
        }
    }

    /// Synthetic function evaluated straight from its polynomial.
    pub fn from_polynomial(q: Polynomial) -> Self {
        let d = q.ambient_dim() - 1;
        let q2 = q.clone();
        Self::new(
            d,
            move |w| q2.eval(w),
            ExactForm::Polynomial(q),
            Origin::Synthetic,
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn exact(&self) -> &ExactForm {
        &self.exact
    }

    pub fn poly(&self) -> Option<&Polynomial> {
        match &self.exact {
            ExactForm::Polynomial(q) => Some(q),
            _ => None,
        }
    }

    pub fn bubble(&self) -> Option<&BubbleParamsSphere> {
        match &self.exact {
            ExactForm::Bubble(b) => Some(b),
            _ => None,
        }
    }

    /// Value at `ω`; pullbacks return NaN at the south pole.
    pub fn eval(&self, omega: &[f64]) -> f64 {
        (self.eval)(omega)
    }

    /// Value at `ω`, reporting the south pole as an error for pullbacks.
    pub fn try_eval(&self, omega: &[f64]) -> Result<f64> {
        if self.origin == Origin::Pullback {
            check_pole(omega, POLE_DELTA)?;
        }
        Ok(self.eval(omega))
    }

    /// `t·F`, keeping the exact form in sync.
    pub fn scaled(&self, t: f64) -> Self {
        let inner = self.eval.clone();
        let exact = match &self.exact {
            ExactForm::Polynomial(q) => ExactForm::Polynomial(q.scale(t)),
            ExactForm::Bubble(b) if t != 0.0 => ExactForm::Bubble(BubbleParamsSphere {
                c: b.c * t,
                zeta: b.zeta.clone(),
            }),
            _ => ExactForm::None,
        };
        Self {
            eval: Arc::new(move |w| t * inner(w)),
            exact,
            origin: self.origin,
            d: self.d,
        }
    }

    /// Largest disagreement between the callable and the polynomial form at `points`.
    pub fn poly_mismatch(&self, points: &[Vec<f64>]) -> Option<f64> {
        let q = self.poly()?;
        Some(
            points
                .iter()
                .map(|w| (self.eval(w) - q.eval(w)).abs())
                .fold(0.0, f64::max),
        )
    }
}

fn check_pole(omega: &[f64], delta: f64) -> Result<()> {
    let last = *omega.last().expect("empty point");
    if last <= -1.0 + delta {
        return Err(LabError::SouthPole {
            omega_last: last,
            delta,
        });
    }
    Ok(())
}

/// Bubble in the `R^d` chart: `c (a + |x-b|²)^{-(d-2s)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParamsRd {
    pub c: f64,
    pub a: f64,
    pub b: Vec<f64>,
}

impl BubbleParamsRd {
    pub fn new(c: f64, a: f64, b: Vec<f64>) -> Result<Self> {
        if !(c != 0.0 && c.is_finite()) {
            return Err(LabError::InvalidBubble { reason: "c must be nonzero" });
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(LabError::InvalidBubble { reason: "a must be positive" });
        }
        Ok(Self { c, a, b })
    }

    pub fn eval(&self, x: &[f64], p: &Params) -> f64 {
        let r2: f64 = x.iter().zip(&self.b).map(|(xi, bi)| (xi - bi).powi(2)).sum();
        self.c * (self.a + r2).powf(-p.kappa())
    }

    /// Same bubble in the sphere chart.
    pub fn to_sphere(&self, p: &Params) -> Result<BubbleParamsSphere> {
        let sqrt_a = self.a.sqrt();
        let alpha = 4.0 / (norm_sq(&self.b) + (1.0 + sqrt_a).powi(2));
        let mut zeta: Vec<f64> = self.b.iter().map(|bi| bi * alpha / 2.0).collect();
        zeta.push((sqrt_a * alpha + alpha - 2.0) / 2.0);
        let one_minus = sqrt_a * alpha;
        let c = self.c * (alpha / (2.0 * one_minus)).powf(p.kappa());
        BubbleParamsSphere::new(c, zeta)
    }
}

/// Bubble in the sphere chart: `c ((1-|ζ|²)/(1 - 2ζ·ω + |ζ|²))^{(d-2s)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParamsSphere {
    pub c: f64,
    pub zeta: Vec<f64>,
}

impl BubbleParamsSphere {
    pub fn new(c: f64, zeta: Vec<f64>) -> Result<Self> {
        if !(c != 0.0 && c.is_finite()) {
            return Err(LabError::InvalidBubble { reason: "c must be nonzero" });
        }
        let n = norm_sq(&zeta).sqrt();
        if !(n < 1.0) {
            return Err(LabError::ZetaOutsideBall { norm: n });
        }
        Ok(Self { c, zeta })
    }

    /// The constant function `1` on `S^d`.
    pub fn unit(d: usize) -> Self {
        Self {
            c: 1.0,
            zeta: vec![0.0; d + 1],
        }
    }

    pub fn zeta_norm(&self) -> f64 {
        norm_sq(&self.zeta).sqrt()
    }

    /// Conformal factor `(1-|ζ|²)/(1 - 2ζ·ω + |ζ|²)`.
    pub fn ratio(&self, omega: &[f64]) -> f64 {
        bubble_ratio(&self.zeta, omega)
    }

    pub fn eval(&self, omega: &[f64], p: &Params) -> f64 {
        self.c * self.ratio(omega).powf(p.kappa())
    }

    /// Same bubble in the `R^d` chart.
    pub fn to_rd(&self, p: &Params) -> BubbleParamsRd {
        let d = self.zeta.len() - 1;
        let (head, last) = (&self.zeta[..d], self.zeta[d]);
        let z2 = norm_sq(&self.zeta);
        let alpha = norm_sq(head) + (1.0 + last).powi(2);
        let one_minus = 1.0 - z2;
        BubbleParamsRd {
            c: self.c * (2.0 * one_minus / alpha).powf(p.kappa()),
            a: (one_minus / alpha).powi(2),
            b: head.iter().map(|z| 2.0 * z / alpha).collect(),
        }
    }
}

pub(crate) fn bubble_ratio(zeta: &[f64], omega: &[f64]) -> f64 {
    let z2 = norm_sq(zeta);
    (1.0 - z2) / (1.0 - 2.0 * dot(zeta, omega) + z2)
}

/// Stereographic map `R^d → S^d`.
pub fn stereo(x: &[f64]) -> Vec<f64> {
    let r2 = norm_sq(x);
    let denom = 1.0 + r2;
    let mut out: Vec<f64> = x.iter().map(|xi| 2.0 * xi / denom).collect();
    out.push((1.0 - r2) / denom);
    out
}

pub fn stereo_inverse(omega: &[f64]) -> Result<Vec<f64>> {
    stereo_inverse_with(omega, POLE_DELTA)
}

pub fn stereo_inverse_with(omega: &[f64], delta: f64) -> Result<Vec<f64>> {
    check_pole(omega, delta)?;
    let d = omega.len() - 1;
    let denom = 1.0 + omega[d];
    Ok(omega[..d].iter().map(|w| w / denom).collect())
}

/// `J_S(x) = (2/(1+|x|²))^d`.
pub fn jacobian(x: &[f64], d: usize) -> f64 {
    (2.0 / (1.0 + norm_sq(x))).powi(d as i32)
}

/// `J_S(x)^{1/2*} = (2/(1+|x|²))^{(d-2s)/2}`.
pub fn jacobian_root(x: &[f64], p: &Params) -> f64 {
    (2.0 / (1.0 + norm_sq(x))).powf(p.kappa())
}

/// `U(x) = (1+|x|²)^{-(d-2s)/2}`.
pub fn standard_bubble(x: &[f64], p: &Params) -> f64 {
    (1.0 + norm_sq(x)).powf(-p.kappa())
}

/// `U_{x0,λ}(y) = λ^{(d-2s)/2} U(λ(y - x0))`.
pub fn moved_bubble(y: &[f64], x0: &[f64], lambda: f64, p: &Params) -> f64 {
    let z: Vec<f64> = y.iter().zip(x0).map(|(a, b)| lambda * (a - b)).collect();
    lambda.powf(p.kappa()) * standard_bubble(&z, p)
}

/// `∂_λ U_{0,λ}` at `λ = 1`, in closed form: `κ U (1-|y|²)/(1+|y|²)`.
pub fn dilation_generator(y: &[f64], p: &Params) -> f64 {
    let r2 = norm_sq(y);
    p.kappa() * standard_bubble(y, p) * (1.0 - r2) / (1.0 + r2)
}

/// `∂_{x_i} U_{x,1}` at `x = 0`, in closed form: `2κ U y_i/(1+|y|²)`.
pub fn translation_generator(y: &[f64], i: usize, p: &Params) -> f64 {
    2.0 * p.kappa() * standard_bubble(y, p) * y[i] / (1.0 + norm_sq(y))
}

/// `ρ(x) = J_S(x)^{1/2*} v(S(x))` for a function `v` on the sphere.
pub fn pushforward_value(v: &SphereFunction, x: &[f64], p: &Params) -> f64 {
    jacobian_root(x, p) * v.eval(&stereo(x))
}

/// Carry `f` on `R^d` to `F(ω) = J_S(x)^{-1/2*} f(x)`, `x = S^{-1}(ω)`.
/// `exact` attaches a known polynomial form; it is not derived here.
pub fn pullback<F>(f: F, p: &Params, exact: Option<Polynomial>) -> SphereFunction
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    let params = *p;
    let eval = move |omega: &[f64]| match stereo_inverse(omega) {
        Ok(x) => f(&x) / jacobian_root(&x, &params),
        Err(_) => f64::NAN,
    };
    let exact = exact.map_or(ExactForm::None, ExactForm::Polynomial);
    SphereFunction::new(p.d(), eval, exact, Origin::Pullback)
}

/// `c·G_ζ` as a sphere function.
pub fn bubble_sphere(bp: &BubbleParamsSphere, p: &Params) -> Result<SphereFunction> {
    let bp = BubbleParamsSphere::new(bp.c, bp.zeta.clone())?;
    if bp.zeta.len() != p.ambient_dim() {
        return Err(LabError::DimensionMismatch {
            left: p.ambient_dim(),
            right: bp.zeta.len(),
        });
    }
    let params = *p;
    let b2 = bp.clone();
    Ok(SphereFunction::new(
        p.d(),
        move |w| b2.eval(w, &params),
        ExactForm::Bubble(bp),
        Origin::Bubble,
    ))
}

/// Pullback of the standard bubble: the constant `2^{-(d-2s)/2}`.
pub fn pullback_standard_bubble(p: &Params) -> SphereFunction {
    let params = *p;
    pullback(
        move |x| standard_bubble(x, &params),
        p,
        Some(Polynomial::constant(p.ambient_dim(), p.bubble_level())),
    )
}

/// Pullback of `ρ = J_S^{1/2*} v∘S`, which is `v` itself.
pub fn pullback_perturbation(v: &Polynomial, p: &Params) -> SphereFunction {
    let params = *p;
    let sphere_v = SphereFunction::from_polynomial(v.clone());
    pullback(
        move |x| pushforward_value(&sphere_v, x, &params),
        p,
        Some(v.clone()),
    )
}

/// Pullbacks of `U, V_0, V_1, …, V_d`, spanning the tangent space of the
/// bubble manifold at `U`. Their exact forms are `c_0`, `κc_0ω_{d+1}` and
/// `κc_0ω_i` with `c_0 = 2^{-(d-2s)/2}`.
pub fn tangent_basis(p: &Params) -> Vec<SphereFunction> {
    let n = p.ambient_dim();
    let d = p.d();
    let level = p.bubble_level();
    let k = p.kappa();
    let mut basis = vec![pullback_standard_bubble(p)];
    let params = *p;
    basis.push(pullback(
        move |x| dilation_generator(x, &params),
        p,
        Some(Polynomial::coordinate(n, d).scale(k * level)),
    ));
    for i in 0..d {
        basis.push(pullback(
            move |x| translation_generator(x, i, &params),
            p,
            Some(Polynomial::coordinate(n, i).scale(k * level)),
        ));
    }
    basis
}
