//! Product quadrature on `S^d`.
//!
//! The sphere is peeled one coordinate at a time: `ω = (√(1-t²) ω', t)` with
//! `ω' ∈ S^{k-1}` and surface measure `(1-t²)^{(k-2)/2} dt dω'`. Each level
//! uses the Gauss rule for the weight `(1-t²)^{(k-2)/2}` (Gauss–Gegenbauer),
//! and the innermost circle uses the equispaced trapezoid rule. Odd powers
//! of `√(1-t²)` integrate to zero exactly on the inner sphere, so the product
//! is exact for every polynomial up to the requested degree.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::constants::{ln_gamma, sphere_area};
use crate::error::{LabError, Result};
use crate::numerics::CompensatedSum;

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Default exactness degree: 20 for `d ≤ 3`, 12 above.
pub fn default_degree(d: usize) -> u32 {
    if d <= 3 {
        20
    } else {
        12
    }
}

/// Nodes and positive weights on `S^d` with a certified polynomial exactness degree.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    d: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness_degree: u32,
}

impl SphereQuadrature {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn exactness_degree(&self) -> u32 {
        self.exactness_degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        let n = self.d + 1;
        &self.nodes[k * n..(k + 1) * n]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.d + 1)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluate `f` at every node, in node order.
    pub fn eval_nodes<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let dim = self.d + 1;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.nodes.par_chunks_exact(dim).map(&f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.nodes.chunks_exact(dim).map(&f).collect()
        }
    }

    /// `Σ_k w_k f(ω_k)` with compensated summation in node order.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let values = self.eval_nodes(f);
        let mut acc = CompensatedSum::new();
        for (k, (&w, &v)) in self.weights.iter().zip(&values).enumerate() {
            if !v.is_finite() {
                return Err(LabError::NonFinite {
                    index: k,
                    point: self.node(k).to_vec(),
                    value: v,
                });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }
}

const BLOCK: usize = 512;

impl SphereQuadrature {
    /// Integrate a vector-valued integrand of length `len`. `f` writes the
    /// value at node `k` into its output slice. Nodes are summed in fixed
    /// blocks, so the result does not depend on the thread count.
    pub fn integrate_many<F>(&self, len: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(usize, &[f64], &mut [f64]) + Sync + Send,
    {
        let dim = self.d + 1;
        let block = |b: usize| -> Result<Vec<CompensatedSum>> {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(self.len());
            let mut acc = vec![CompensatedSum::new(); len];
            let mut buf = vec![0.0; len];
            for k in start..end {
                let node = &self.nodes[k * dim..(k + 1) * dim];
                f(k, node, &mut buf);
                for (a, &v) in acc.iter_mut().zip(&buf) {
                    if !v.is_finite() {
                        return Err(LabError::NonFinite {
                            index: k,
                            point: node.to_vec(),
                            value: v,
                        });
                    }
                    a.add(self.weights[k] * v);
                }
            }
            Ok(acc)
        };
        let blocks: Vec<usize> = (0..self.len().div_ceil(BLOCK)).collect();
        let partials = crate::numerics::ordered_map(&blocks, |&b| block(b));
        let mut total = vec![CompensatedSum::new(); len];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part?) {
                t.add(p.value());
            }
        }
        Ok(total.iter().map(CompensatedSum::value).collect())
    }
}

/// Product rule on `S^d` exact for polynomials of total degree `≤ exactness_degree`.
pub fn build_rule(d: usize, exactness_degree: u32) -> Result<SphereQuadrature> {
    build_rule_with_budget(d, exactness_degree, DEFAULT_NODE_BUDGET)
}

pub fn build_rule_with_budget(
    d: usize,
    exactness_degree: u32,
    node_budget: usize,
) -> Result<SphereQuadrature> {
    if d < 2 || exactness_degree < 2 {
        return Err(LabError::InvalidRule {
            d,
            degree: exactness_degree,
        });
    }
    let m = (exactness_degree as usize + 2) / 2;
    // even count so the circle rule is symmetric under φ → φ + π
    let n_circle = (exactness_degree as usize + 2) & !1;
    let count = (m as u128).pow(d as u32 - 1) * n_circle as u128;
    if count > node_budget as u128 {
        return Err(LabError::NodeBudget {
            d,
            degree: exactness_degree,
            nodes: count,
            budget: node_budget,
        });
    }

    // circle S^1
    let mut nodes: Vec<f64> = Vec::with_capacity(2 * n_circle);
    let mut weights: Vec<f64> = Vec::with_capacity(n_circle);
    let h = 2.0 * std::f64::consts::PI / n_circle as f64;
    for j in 0..n_circle {
        let phi = (j as f64 + 0.5) * h;
        nodes.push(phi.cos());
        nodes.push(phi.sin());
        weights.push(h);
    }

    // lift S^{k-1} → S^k
    for k in 2..=d {
        let (ts, ws) = gauss_gegenbauer(m, (k as f64 - 2.0) / 2.0);
        let inner_dim = k;
        let mut next_nodes = Vec::with_capacity(nodes.len() / inner_dim * m * (k + 1));
        let mut next_weights = Vec::with_capacity(weights.len() * m);
        for (&t, &wt) in ts.iter().zip(&ws) {
            let r = (1.0 - t * t).sqrt();
            for (inner, &wi) in nodes.chunks_exact(inner_dim).zip(&weights) {
                next_nodes.extend(inner.iter().map(|x| r * x));
                next_nodes.push(t);
                next_weights.push(wt * wi);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }

    Ok(SphereQuadrature {
        d,
        nodes,
        weights,
        exactness_degree,
    })
}

/// Gauss rule with `m` nodes for the weight `(1-t²)^a` on `[-1, 1]`, `a ≥ 0`.
///
/// Golub–Welsch for the starting values, then Newton refinement on the
/// orthonormal recurrence; weights are Christoffel numbers `1 / Σ p̂_j(t)²`.
pub fn gauss_gegenbauer(m: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1 && a >= 0.0);
    let mu0 = (0.5 * std::f64::consts::PI.ln() + ln_gamma(a + 1.0) - ln_gamma(a + 1.5)).exp();
    // β_n for the monic recurrence, n ≥ 1
    let beta = |n: usize| {
        let n = n as f64;
        let t = 2.0 * n + 2.0 * a;
        n * (n + 2.0 * a) / (t * t - 1.0)
    };

    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        let b = beta(i).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // orthonormal values p̂_0..p̂_m and derivative of p̂_m
    let eval = |x: f64| -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut p = 1.0 / mu0.sqrt();
        let mut dp_prev = 0.0;
        let mut dp = 0.0;
        let mut sum_sq = p * p;
        for n in 0..m {
            let b_next = beta(n + 1).sqrt();
            let b_cur = if n == 0 { 0.0 } else { beta(n).sqrt() };
            let p_next = (x * p - b_cur * p_prev) / b_next;
            let dp_next = (p + x * dp - b_cur * dp_prev) / b_next;
            p_prev = p;
            p = p_next;
            dp_prev = dp;
            dp = dp_next;
            if n + 1 < m {
                sum_sq += p * p;
            }
        }
        (p, dp, sum_sq)
    };

    let mut weights = vec![0.0; m];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            let (p, dp, _) = eval(*x);
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        *w = 1.0 / eval(*x).2;
    }
    // enforce the reflection symmetry t → -t
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Rules at degree `g` and `2g`; the fine rule gives the value and the
/// discrepancy gives the error estimate.
#[derive(Debug, Clone)]
pub struct RulePair {
    pub coarse: SphereQuadrature,
    pub fine: SphereQuadrature,
}

impl RulePair {
    pub fn new(d: usize, degree: u32) -> Result<Self> {
        Ok(Self {
            coarse: build_rule(d, degree)?,
            fine: build_rule(d, 2 * degree)?,
        })
    }

    pub fn d(&self) -> usize {
        self.coarse.d()
    }

    pub fn degree(&self) -> u32 {
        self.coarse.exactness_degree()
    }

    /// `(fine value, |fine - coarse|)`.
    pub fn integrate<F>(&self, f: F) -> Result<(f64, f64)>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let coarse = self.coarse.integrate(&f)?;
        let fine = self.fine.integrate(&f)?;
        Ok((fine, (fine - coarse).abs()))
    }
}

/// Weight sum check used by tests and the self-test.
pub fn weight_sum_error(rule: &SphereQuadrature) -> f64 {
    let sum: f64 = rule.weights().iter().copied().collect::<CompensatedSum>().value();
    (sum - sphere_area(rule.d())).abs() / sphere_area(rule.d())
}
