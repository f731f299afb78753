//! Closed-form constants: the sharp Sobolev constant, the spectral-gap
//! constant, the eigenvalue ladder of the conformal operator on `S^d`,
//! sphere areas and monomial moments.
//!
//! Every gamma quotient is evaluated as a difference of log-gamma values and
//! exponentiated once, so the formulas stay finite for large `d`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Dimension `d` and fractional order `s` with `0 < s < d/2`, together with
/// the derived critical exponent and gap constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    d: usize,
    s: f64,
    two_star: f64,
    gap: f64,
}

impl Params {
    pub fn new(d: usize, s: f64) -> Result<Self> {
        if d < 2 || !s.is_finite() || s <= 0.0 || 2.0 * s >= d as f64 {
            return Err(LabError::InvalidParams { d, s });
        }
        let df = d as f64;
        Ok(Self {
            d,
            s,
            two_star: 2.0 * df / (df - 2.0 * s),
            gap: 4.0 * s / (df + 2.0 * s + 2.0),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Critical exponent `2d/(d-2s)`.
    pub fn two_star(&self) -> f64 {
        self.two_star
    }

    /// `4s/(d+2s+2)`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Bubble decay exponent `(d-2s)/2`.
    pub fn kappa(&self) -> f64 {
        (self.d as f64 - 2.0 * self.s) / 2.0
    }

    /// Number of ambient coordinates, `d+1`.
    pub fn ambient_dim(&self) -> usize {
        self.d + 1
    }

    /// Value of the standard bubble after pullback to the sphere: `2^{-(d-2s)/2}`.
    pub fn bubble_level(&self) -> f64 {
        (-self.kappa() * std::f64::consts::LN_2).exp()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={}, s={}", self.d, self.s)
    }
}

/// Exponent vector of a monomial in the ambient coordinates `ω_1..ω_{d+1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// `e_i * power`.
    pub fn unit(len: usize, i: usize, power: u32) -> Self {
        let mut e = vec![0; len];
        e[i] = power;
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn has_odd(&self) -> bool {
        self.0.iter().any(|e| e % 2 == 1)
    }

    pub(crate) fn exponents_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub(crate) fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Sharp constant of the fractional Sobolev inequality on `R^d`.
pub fn sobolev_constant(p: &Params) -> f64 {
    let d = p.d as f64;
    let s = p.s;
    let log = 2.0 * s * std::f64::consts::LN_2
        + s * PI.ln()
        + ln_gamma((d + 2.0 * s) / 2.0)
        - ln_gamma((d - 2.0 * s) / 2.0)
        + (2.0 * s / d) * (ln_gamma(d / 2.0) - ln_gamma(d));
    log.exp()
}

/// Same constant through direct gamma quotients. Only meaningful for small
/// arguments; kept as an independent evaluation path.
pub fn sobolev_constant_direct(p: &Params) -> f64 {
    let d = p.d as f64;
    let s = p.s;
    let g = libm::tgamma;
    4f64.powf(s)
        * PI.powf(s)
        * g((d + 2.0 * s) / 2.0)
        / g((d - 2.0 * s) / 2.0)
        * (g(d / 2.0) / g(d)).powf(2.0 * s / d)
}

pub fn gap_constant(p: &Params) -> f64 {
    p.gap
}

/// `E_ℓ = Γ(ℓ + d/2 + s) / Γ(ℓ + d/2 - s)`, the eigenvalue of the conformal
/// operator of order `2s` on degree-`ℓ` spherical harmonics.
pub fn conformal_eigenvalue(ell: u32, p: &Params) -> f64 {
    let base = ell as f64 + p.d as f64 / 2.0;
    (ln_gamma(base + p.s) - ln_gamma(base - p.s)).exp()
}

/// Surface area of the unit sphere `S^d ⊂ R^{d+1}`.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "sphere_area: d must be >= 1");
    let h = (d as f64 + 1.0) / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// `∫_{S^d} ω^α dω`. Zero whenever some exponent is odd.
pub fn monomial_moment(alpha: &MultiIndex, d: usize) -> f64 {
    assert_eq!(
        alpha.len(),
        d + 1,
        "monomial_moment: index length must be d+1"
    );
    if alpha.has_odd() {
        return 0.0;
    }
    let total = alpha.degree() as f64;
    let log: f64 = alpha
        .exponents()
        .iter()
        .map(|&a| ln_gamma((a as f64 + 1.0) / 2.0))
        .sum::<f64>()
        - ln_gamma((total + d as f64 + 1.0) / 2.0);
    2.0 * log.exp()
}

/// The fixed validation grid: `d ∈ {2..8}`, `s ∈ {0.25, 0.5, 1, 1.5, 2}` with `s < d/2`.
pub fn validation_grid() -> Vec<Params> {
    let orders = [0.25, 0.5, 1.0, 1.5, 2.0];
    (2..=8)
        .flat_map(|d| orders.iter().filter_map(move |&s| Params::new(d, s).ok()))
        .collect()
}
