//! Independent oracles for the integration tests. Nothing here calls the
//! crate's gamma, moment or quadrature code.
#![allow(dead_code)]

use std::f64::consts::PI;

use be_lab::conformal::SphereFunction;
use be_lab::constants::Params;
use be_lab::functional::captured_fraction;
use be_lab::quadrature::{RulePair, SphereQuadrature};

/// `Γ(n/2)` for a positive integer `n`, by the half-step recursion.
pub fn gamma_half(n: u32) -> f64 {
    assert!(n > 0);
    let (mut g, mut k) = if n % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// `|S^d| = 2π^{(d+1)/2} / Γ((d+1)/2)`.
pub fn area(d: usize) -> f64 {
    2.0 * PI.powf((d as f64 + 1.0) / 2.0) / gamma_half(d as u32 + 1)
}

fn double_factorial_odd(a: u32) -> f64 {
    // (a-1)!! for even a
    (1..a).step_by(2).map(|k| k as f64).product()
}

/// `∫_{S^d} ω^α` from the Gaussian expectation identity:
/// `|S^d| Π(a_i-1)!! / (n(n+2)…(n+|α|-2))`, `n = d+1`.
pub fn moment(alpha: &[u32], d: usize) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let n = (d + 1) as f64;
    let total: u32 = alpha.iter().sum();
    let num: f64 = alpha.iter().map(|&a| double_factorial_odd(a)).product();
    let den: f64 = (0..total / 2).map(|j| n + 2.0 * j as f64).product();
    area(d) * num / den
}

/// `E[ω_1²ω_2²ω_3²]·|S^d| = |S^d| / (n(n+2)(n+4))`.
pub fn triple_moment(d: usize) -> f64 {
    let n = (d + 1) as f64;
    area(d) / (n * (n + 2.0) * (n + 4.0))
}

/// `∫_{R^d} (1+|x|²)^{-d} dx = |S^{d-1}| Γ(d/2)² / (2Γ(d))`.
pub fn bubble_norm_pow_rd(d: usize) -> f64 {
    let g = gamma_half(d as u32);
    let gd = gamma_half(2 * d as u32);
    area(d - 1) * g * g / (2.0 * gd)
}

/// `E_ℓ` for integer `s` as the rising product `Π_{j=0}^{2s-1} (ℓ+d/2-s+j)`.
pub fn eigenvalue_integer_s(ell: u32, d: usize, s: u32) -> f64 {
    let base = ell as f64 + d as f64 / 2.0 - s as f64;
    (0..2 * s).map(|j| base + j as f64).product()
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `∫_{R²} g dx` in polar coordinates with `r = tan u`: Simpson in `u`,
/// trapezoid (spectrally accurate for periodic integrands) in `θ`.
pub fn integrate_r2<G: Fn(&[f64]) -> f64>(g: G, nu: usize, ntheta: usize) -> f64 {
    let radial = |u: f64| {
        if u >= PI / 2.0 {
            return 0.0;
        }
        let r = u.tan();
        let jac = r / u.cos().powi(2);
        let mut acc = 0.0;
        for k in 0..ntheta {
            let t = 2.0 * PI * k as f64 / ntheta as f64;
            acc += g(&[r * t.cos(), r * t.sin()]);
        }
        acc * 2.0 * PI / ntheta as f64 * jac
    };
    simpson(radial, 0.0, PI / 2.0, nu)
}

/// Least-squares fit of `y ≈ A|x|² + B·x + C` by normal equations.
pub fn fit_quadratic_radial(points: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>, f64) {
    let d = points[0].len();
    let m = d + 2;
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (x, &yi) in points.iter().zip(y) {
        let mut row = vec![x.iter().map(|v| v * v).sum::<f64>()];
        row.extend_from_slice(x);
        row.push(1.0);
        for i in 0..m {
            aty[i] += row[i] * yi;
            for j in 0..m {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    for c in 0..m {
        let piv = (c..m).max_by(|&a, &b| ata[a][c].abs().total_cmp(&ata[b][c].abs())).unwrap();
        ata.swap(c, piv);
        aty.swap(c, piv);
        for r in c + 1..m {
            let f = ata[r][c] / ata[c][c];
            for k in c..m {
                ata[r][k] -= f * ata[c][k];
            }
            aty[r] -= f * aty[c];
        }
    }
    let mut sol = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|k| ata[c][k] * sol[k]).sum();
        sol[c] = (aty[c] - s) / ata[c][c];
    }
    (sol[0], sol[1..=d].to_vec(), sol[d + 1])
}

/// Brute-force scan of `ψ(ζ)` over a uniform grid with `per_axis` points per
/// axis on `[-max_norm, max_norm]`, using the first `min(d+1, 4)` coordinates
/// and keeping points with `|ζ| ≤ max_norm`. Returns the best `(ψ, ζ)`.
pub fn grid_scan(
    f: &SphereFunction,
    p: &Params,
    rule: &SphereQuadrature,
    per_axis: usize,
    max_norm: f64,
) -> (f64, Vec<f64>) {
    let n = p.ambient_dim();
    let dims = n.min(4);
    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -max_norm + 2.0 * max_norm * k as f64 / (per_axis - 1) as f64)
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut idx = vec![0usize; dims];
    loop {
        let mut z = vec![0.0; n];
        for (j, &i) in idx.iter().enumerate() {
            z[j] = axis[i];
        }
        if z.iter().map(|v| v * v).sum::<f64>() <= max_norm * max_norm {
            let psi = captured_fraction(f, &z, p, rule).unwrap();
            if psi > best.0 {
                best = (psi, z);
            }
        }
        let mut j = 0;
        loop {
            if j == dims {
                return best;
            }
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// [`grid_scan`] on `rules.coarse`, except that any point scoring above
/// `threshold` is rescored on `rules.fine`. Peaked bubbles near the edge of
/// the ball alias on the coarse rule and can report a captured fraction
/// above one.
pub fn grid_scan_rescored(
    f: &SphereFunction,
    p: &Params,
    rules: &RulePair,
    per_axis: usize,
    max_norm: f64,
    threshold: f64,
) -> (f64, Vec<f64>, usize) {
    let n = p.ambient_dim();
    let dims = n.min(4);
    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -max_norm + 2.0 * max_norm * k as f64 / (per_axis - 1) as f64)
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut rescored = 0;
    let mut idx = vec![0usize; dims];
    loop {
        let mut z = vec![0.0; n];
        for (j, &i) in idx.iter().enumerate() {
            z[j] = axis[i];
        }
        if z.iter().map(|v| v * v).sum::<f64>() <= max_norm * max_norm {
            let mut psi = captured_fraction(f, &z, p, &rules.coarse).unwrap();
            if psi > threshold {
                rescored += 1;
                psi = captured_fraction(f, &z, p, &rules.fine).unwrap();
            }
            if psi > best.0 {
                best = (psi, z);
            }
        }
        let mut j = 0;
        loop {
            if j == dims {
                return (best.0, best.1, rescored);
            }
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
