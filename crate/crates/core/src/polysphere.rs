//! Sparse polynomials in the ambient coordinates of `S^d ⊂ R^{d+1}`.
//!
//! Polynomials are stored as a map from exponent vectors to real
//! coefficients. On the sphere, `|ω|² = 1`, so two polynomials are compared
//! after reduction to a normal form where the last coordinate appears with
//! exponent at most one. Integration is exact, term by term, through the
//! closed-form monomial moments.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::constants::{monomial_moment, MultiIndex};
use crate::error::{LabError, Result};
use crate::numerics::compensated_sum;

/// Highest total degree a [`Polynomial`] may reach.
pub const DEGREE_CAP: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<MultiIndex, f64>,
    ambient_dim: usize,
}

impl Polynomial {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            terms: BTreeMap::new(),
            ambient_dim,
        }
    }

    pub fn constant(ambient_dim: usize, c: f64) -> Self {
        let mut p = Self::zero(ambient_dim);
        p.add_term(MultiIndex::zeros(ambient_dim), c);
        p
    }

    /// The coordinate function `ω_{i+1}` (zero-based `i`).
    pub fn coordinate(ambient_dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(ambient_dim, i, 1), 1.0)
    }

    pub fn monomial(index: MultiIndex, coeff: f64) -> Self {
        let mut p = Self::zero(index.len());
        p.add_term(index, coeff);
        p
    }

    /// Build from `(exponents, coefficient)` pairs; repeated indices add up.
    pub fn from_terms<I>(ambient_dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(ambient_dim);
        for (exps, c) in terms {
            if exps.len() != ambient_dim {
                return Err(LabError::DimensionMismatch {
                    left: ambient_dim,
                    right: exps.len(),
                });
            }
            let idx = MultiIndex::new(exps);
            if idx.degree() > DEGREE_CAP {
                return Err(LabError::DegreeCap {
                    degree: idx.degree(),
                    cap: DEGREE_CAP,
                });
            }
            p.add_term(idx, c);
        }
        Ok(p)
    }

    /// `ω_1ω_2 + ω_2ω_3 + ω_3ω_1`, a degree-2 spherical harmonic whose cube
    /// has a strictly positive integral over the sphere. Needs at least three
    /// ambient coordinates.
    pub fn pair_sum_harmonic(ambient_dim: usize) -> Self {
        assert!(ambient_dim >= 3, "pair_sum_harmonic needs ambient_dim >= 3");
        let mut p = Self::zero(ambient_dim);
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let mut e = MultiIndex::zeros(ambient_dim);
            e.exponents_mut()[i] += 1;
            e.exponents_mut()[j] += 1;
            p.add_term(e, 1.0);
        }
        p
    }

    /// `|ω|^{2k}` as an ambient polynomial.
    pub fn norm_sq_pow(ambient_dim: usize, k: u32) -> Result<Self> {
        let norm_sq = {
            let mut p = Self::zero(ambient_dim);
            for i in 0..ambient_dim {
                p.add_term(MultiIndex::unit(ambient_dim, i, 2), 1.0);
            }
            p
        };
        norm_sq.pow(k)
    }

    fn add_term(&mut self, idx: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = *o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms
            .get(&MultiIndex::new(exps.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut p = Self::zero(self.ambient_dim);
        for (k, &c) in &self.terms {
            p.add_term(k.clone(), c * factor);
        }
        p
    }

    fn check_dims(&self, other: &Polynomial) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(LabError::DimensionMismatch {
                left: self.ambient_dim,
                right: other.ambient_dim,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Self> {
        self.check_dims(other)?;
        let mut p = self.clone();
        for (k, &c) in &other.terms {
            p.add_term(k.clone(), c);
        }
        Ok(p)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Self> {
        self.check_dims(other)?;
        let degree = self.degree() + other.degree();
        if !self.is_zero() && !other.is_zero() && degree > DEGREE_CAP {
            return Err(LabError::DegreeCap {
                degree,
                cap: DEGREE_CAP,
            });
        }
        let mut p = Self::zero(self.ambient_dim);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                p.add_term(a.add(b), ca * cb);
            }
        }
        Ok(p)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(self.ambient_dim, 1.0);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Split into homogeneous parts keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, Polynomial> {
        let mut parts: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (k, &c) in &self.terms {
            parts
                .entry(k.degree())
                .or_insert_with(|| Self::zero(self.ambient_dim))
                .add_term(k.clone(), c);
        }
        parts
    }

    /// Ambient Laplacian `Σ_i ∂²/∂ω_i²`.
    pub fn laplacian(&self) -> Self {
        let mut p = Self::zero(self.ambient_dim);
        for (k, &c) in &self.terms {
            for (i, &e) in k.exponents().iter().enumerate() {
                if e >= 2 {
                    let mut idx = k.clone();
                    idx.exponents_mut()[i] -= 2;
                    p.add_term(idx, c * (e * (e - 1)) as f64);
                }
            }
        }
        p
    }

    pub fn eval(&self, omega: &[f64]) -> f64 {
        debug_assert_eq!(omega.len(), self.ambient_dim);
        self.terms
            .iter()
            .map(|(k, &c)| {
                k.exponents()
                    .iter()
                    .zip(omega)
                    .fold(c, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// `∫_{S^d} q dω` with `d = ambient_dim - 1`, summed over closed-form moments.
    pub fn integrate_exact(&self) -> f64 {
        let d = self.ambient_dim - 1;
        compensated_sum(
            self.terms
                .iter()
                .filter(|(k, _)| !k.has_odd())
                .map(|(k, &c)| c * monomial_moment(k, d)),
        )
    }

    /// `L²(S^d)` inner product, computed exactly.
    pub fn inner_l2(&self, other: &Polynomial) -> Result<f64> {
        Ok(self.mul(other)?.integrate_exact())
    }

    /// Normal form modulo `|ω|² - 1`: every power `ω_{d+1}^k` with `k ≥ 2` is
    /// rewritten through `ω_{d+1}² = 1 - Σ_{i≤d} ω_i²`.
    pub fn reduce_on_sphere(&self) -> Self {
        let last = self.ambient_dim - 1;
        let mut out = Self::zero(self.ambient_dim);
        let mut work: Vec<(MultiIndex, f64)> =
            self.terms.iter().map(|(k, &c)| (k.clone(), c)).collect();
        while let Some((idx, c)) = work.pop() {
            if idx.exponents()[last] < 2 {
                out.add_term(idx, c);
                continue;
            }
            let mut base = idx;
            base.exponents_mut()[last] -= 2;
            for i in 0..last {
                let mut t = base.clone();
                t.exponents_mut()[i] += 2;
                work.push((t, -c));
            }
            work.push((base, c));
        }
        out
    }

    /// Equality as functions on `S^d`, up to `tol` in every reduced coefficient.
    pub fn approx_eq_on_sphere(&self, other: &Polynomial, tol: f64) -> bool {
        if self.ambient_dim != other.ambient_dim {
            return false;
        }
        (self.clone() - other.clone())
            .reduce_on_sphere()
            .max_abs_coeff()
            <= tol
    }

    /// Decompose into spherical-harmonic components.
    ///
    /// Each homogeneous part `p` of degree `n` is split as `p = h + |ω|² r`
    /// with `h` harmonic, via
    /// `h = Σ_j a_j |ω|^{2j} Δ^j p`, `a_{j+1} = -a_j / (2(j+1)(N + 2n - 4 - 2j))`,
    /// and `r` is decomposed recursively. On the sphere `|ω|² = 1`, so `h`
    /// is the degree-`n` component and `r` feeds the lower degrees.
    pub fn harmonic_decompose(&self) -> Result<HarmonicDecomposition> {
        if self.degree() > DEGREE_CAP {
            return Err(LabError::DegreeCap {
                degree: self.degree(),
                cap: DEGREE_CAP,
            });
        }
        let mut components: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (n, part) in self.homogeneous_parts() {
            self.decompose_homogeneous(part, n, &mut components)?;
        }
        components.retain(|_, p| p.max_abs_coeff() > 0.0);
        Ok(HarmonicDecomposition {
            components,
            ambient_dim: self.ambient_dim,
        })
    }

    fn decompose_homogeneous(
        &self,
        mut p: Polynomial,
        mut n: u32,
        out: &mut BTreeMap<u32, Polynomial>,
    ) -> Result<()> {
        let big_n = self.ambient_dim as f64;
        loop {
            if p.is_zero() {
                return Ok(());
            }
            if n < 2 {
                merge(out, n, p)?;
                return Ok(());
            }
            let mut harmonic = p.clone();
            let mut remainder = Polynomial::zero(self.ambient_dim);
            let mut lap = p.clone();
            let mut a = 1.0;
            let mut j = 0u32;
            while 2 * (j + 1) <= n {
                lap = lap.laplacian();
                if lap.is_zero() {
                    break;
                }
                let denom = 2.0 * (j as f64 + 1.0) * (big_n + 2.0 * n as f64 - 4.0 - 2.0 * j as f64);
                a = -a / denom;
                j += 1;
                let shifted = Polynomial::norm_sq_pow(self.ambient_dim, j - 1)?.mul(&lap)?;
                remainder = remainder.checked_add(&shifted.scale(-a))?;
                harmonic = harmonic.checked_add(&shifted.mul(&Polynomial::norm_sq_pow(self.ambient_dim, 1)?)?.scale(a))?;
            }
            merge(out, n, harmonic)?;
            p = remainder;
            n -= 2;
        }
    }
}

fn merge(out: &mut BTreeMap<u32, Polynomial>, degree: u32, p: Polynomial) -> Result<()> {
    match out.get_mut(&degree) {
        Some(existing) => *existing = existing.checked_add(&p)?,
        None => {
            out.insert(degree, p);
        }
    }
    Ok(())
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        self.checked_add(&rhs).expect("polynomial dimension mismatch")
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self.checked_add(&rhs.scale(-1.0))
            .expect("polynomial dimension mismatch")
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in k.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·w{}", i + 1)?,
                    _ => write!(f, "·w{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

/// Components of a polynomial in the harmonic subspaces of `L²(S^d)`, keyed
/// by degree. Each component is a homogeneous harmonic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    components: BTreeMap<u32, Polynomial>,
    ambient_dim: usize,
}

impl HarmonicDecomposition {
    pub fn components(&self) -> &BTreeMap<u32, Polynomial> {
        &self.components
    }

    pub fn component(&self, ell: u32) -> Option<&Polynomial> {
        self.components.get(&ell)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.components.keys().copied().collect()
    }

    /// Sum of all components as an ambient polynomial.
    pub fn sum(&self) -> Polynomial {
        self.components
            .values()
            .fold(Polynomial::zero(self.ambient_dim), |acc, p| acc + p.clone())
    }

    /// `‖h_ℓ‖²_{L²(S^d)}` for every component.
    pub fn l2_norms_sq(&self) -> Result<BTreeMap<u32, f64>> {
        self.components
            .iter()
            .map(|(&ell, h)| Ok((ell, h.inner_l2(h)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::sphere_area;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn w(n: usize, i: usize) -> Polynomial {
        Polynomial::coordinate(n, i)
    }

    #[test]
    fn laplacian_examples() {
        let n = 4;
        assert!(w(n, 0).mul(&w(n, 1)).unwrap().laplacian().is_zero());
        let sq = w(n, 0).mul(&w(n, 0)).unwrap().laplacian();
        assert_eq!(sq, Polynomial::constant(n, 2.0));
        assert!(Polynomial::pair_sum_harmonic(n).laplacian().is_zero());
    }

    #[test]
    fn decompose_v2_is_single_component() {
        let v2 = Polynomial::pair_sum_harmonic(4);
        let h = v2.harmonic_decompose().unwrap();
        assert_eq!(h.degrees(), vec![2]);
        assert_eq!(h.component(2).unwrap(), &v2);
    }

    #[test]
    fn decompose_square_of_coordinate() {
        for n in 3..7 {
            let q = w(n, 0).pow(2).unwrap();
            let h = q.harmonic_decompose().unwrap();
            assert_eq!(h.degrees(), vec![0, 2]);
            let expected2 = q.clone() - Polynomial::norm_sq_pow(n, 1).unwrap().scale(1.0 / n as f64);
            assert!(h.component(2).unwrap().approx_eq_on_sphere(&expected2, 1e-15));
            assert!((h.component(2).unwrap().clone() - expected2).max_abs_coeff() < 1e-15);
            assert_relative_eq!(
                h.component(0).unwrap().coeff(&vec![0; n]),
                1.0 / n as f64,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn decompose_norm_sq_is_constant() {
        let q = Polynomial::norm_sq_pow(4, 1).unwrap();
        let h = q.harmonic_decompose().unwrap();
        assert_eq!(h.degrees(), vec![0]);
        assert_relative_eq!(h.component(0).unwrap().coeff(&[0, 0, 0, 0]), 1.0);
    }

    #[test]
    fn integrate_examples() {
        for d in 2..7 {
            let v2 = Polynomial::pair_sum_harmonic(d + 1);
            assert_eq!(v2.integrate_exact(), 0.0);
            let cube = v2.pow(3).unwrap();
            let df = d as f64;
            assert_relative_eq!(
                cube.integrate_exact(),
                6.0 * sphere_area(d) / ((df + 1.0) * (df + 3.0) * (df + 5.0)),
                max_relative = 1e-13
            );
        }
        let v2 = Polynomial::pair_sum_harmonic(4);
        assert_relative_eq!(
            v2.pow(2).unwrap().integrate_exact(),
            PI * PI / 4.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn eval_examples() {
        let v2 = Polynomial::pair_sum_harmonic(5);
        assert_eq!(v2.eval(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
        let t = 1.0 / 3f64.sqrt();
        assert_relative_eq!(v2.eval(&[t, t, t, 0.0, 0.0]), 1.0, max_relative = 1e-15);
        assert_eq!(Polynomial::constant(5, 1.0).eval(&[0.3, 0.1, -0.2, 0.5, 0.0]), 1.0);
    }

    #[test]
    fn degree_cap_enforced() {
        let x = w(3, 0);
        assert!(x.pow(12).is_ok());
        assert!(matches!(x.pow(13), Err(LabError::DegreeCap { degree: 13, .. })));
        assert!(Polynomial::from_terms(3, vec![(vec![13, 0, 0], 1.0)]).is_err());
        assert!(Polynomial::from_terms(3, vec![(vec![1, 0], 1.0)]).is_err());
    }

    #[test]
    fn reduce_on_sphere_normal_form() {
        let n = 3;
        let q = Polynomial::norm_sq_pow(n, 2).unwrap();
        let r = q.reduce_on_sphere();
        assert_eq!(r, Polynomial::constant(n, 1.0));
        let last_sq = w(n, 2).pow(2).unwrap().reduce_on_sphere();
        assert!(last_sq.terms().all(|(k, _)| k.exponents()[2] < 2));
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let a = w(3, 0) + w(3, 1);
        let b = a.clone() - w(3, 1);
        assert_eq!(b.num_terms(), 1);
        assert!((a.clone() - a).is_zero());
    }

    fn sphere_point(raw: &[f64]) -> Vec<f64> {
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        raw.iter().map(|x| x / n).collect()
    }

    fn arb_poly(n: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (prop::collection::vec(0u32..=max_deg, n), -2.0f64..2.0),
            1..8,
        )
        .prop_map(move |terms| {
            let terms = terms.into_iter().map(|(mut e, c)| {
                // trim to the degree budget
                while e.iter().sum::<u32>() > max_deg {
                    let i = e.iter().position(|&x| x > 0).unwrap();
                    e[i] -= 1;
                }
                (e, c)
            });
            Polynomial::from_terms(n, terms).unwrap()
        })
    }

    fn arb_case() -> impl Strategy<Value = (Polynomial, Vec<Vec<f64>>)> {
        (3usize..6).prop_flat_map(|n| {
            (
                arb_poly(n, 6),
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), 5),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decomposition_round_trip((q, raw_points) in arb_case()) {
            let h = q.harmonic_decompose().unwrap();
            let sum = h.sum();
            for raw in raw_points {
                let x = sphere_point(&raw);
                prop_assert!((q.eval(&x) - sum.eval(&x)).abs() <= 1e-10 * (1.0 + q.max_abs_coeff()));
            }
            for (ell, comp) in h.components() {
                prop_assert!(comp.laplacian().max_abs_coeff() <= 1e-12 * (1.0 + comp.max_abs_coeff()));
                prop_assert!(*ell <= q.degree());
                prop_assert!(comp.terms().all(|(k, _)| k.degree() == *ell));
            }
            prop_assert!(q.approx_eq_on_sphere(&sum, 1e-10 * (1.0 + q.max_abs_coeff())));
        }

        #[test]
        fn distinct_degrees_are_orthogonal((q, _pts) in arb_case()) {
            let h = q.harmonic_decompose().unwrap();
            let comps: Vec<_> = h.components().values().collect();
            for i in 0..comps.len() {
                for j in (i + 1)..comps.len() {
                    let ip = comps[i].inner_l2(comps[j]).unwrap();
                    let scale = comps[i].inner_l2(comps[i]).unwrap().sqrt()
                        * comps[j].inner_l2(comps[j]).unwrap().sqrt();
                    prop_assert!(ip.abs() <= 1e-11 * (1.0 + scale));
                }
            }
        }

        #[test]
        fn sphere_relation_integrates_to_zero((q, _pts) in arb_case()) {
            let n = q.ambient_dim();
            let rel = Polynomial::norm_sq_pow(n, 1).unwrap() - Polynomial::constant(n, 1.0);
            let prod = q.mul(&rel).unwrap();
            let scale = q.max_abs_coeff() * 10.0;
            prop_assert!(prod.integrate_exact().abs() <= 1e-12 * (1.0 + scale));
            prop_assert!(prod.reduce_on_sphere().integrate_exact().abs() <= 1e-12 * (1.0 + scale));
        }

        #[test]
        fn odd_monomials_integrate_to_exactly_zero(
            n in 3usize..7,
            seed in prop::collection::vec(0u32..3, 7),
            odd_slot in 0usize..7,
        ) {
            let mut e: Vec<u32> = seed.into_iter().take(n).collect();
            let slot = odd_slot % n;
            e.iter_mut().for_each(|x| *x = (*x).min(1));
            e[slot] = 2 * (e[slot] / 2) + 1;
            let q = Polynomial::from_terms(n, vec![(e, 1.7)]).unwrap();
            prop_assert_eq!(q.integrate_exact(), 0.0);
        }
    }
}
