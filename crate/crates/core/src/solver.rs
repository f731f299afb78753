//! Maximization over the open unit ball: Nelder–Mead followed by a Newton
//! polish that uses an analytic gradient and a finite-difference Hessian.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::ZETA_MAX;
use crate::numerics::norm_sq;

/// Pull `x` back inside the ball of radius [`ZETA_MAX`].
pub fn retract(x: &mut [f64]) {
    let r = norm_sq(x).sqrt();
    if r > ZETA_MAX {
        let f = ZETA_MAX / r;
        x.iter_mut().for_each(|v| *v *= f);
    }
}

#[derive(Debug, Clone)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Predicted further gain `½ gᵀ(-H)⁻¹g` at the final point.
    pub predicted_gain: f64,
}

/// Nelder–Mead maximization of `f` starting at `x0`, confined to the ball.
/// Stops once the value spread is below `ftol` (relative) and the simplex
/// diameter is below `xtol`.
pub fn nelder_mead_max<F>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    ftol: f64,
    xtol: f64,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let neg = |x: &[f64]| -f(x);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    retract(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        v[i] += if v[i] > 0.0 { -step } else { step };
        retract(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| neg(v)).collect();

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|v| norm_sq(&v.iter().zip(&simplex[0]).map(|(a, b)| a - b).collect::<Vec<_>>()).sqrt())
            .fold(0.0, f64::max);
        if spread.abs() <= ftol * (1.0 + values[0].abs()) && size < xtol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            retract(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = neg(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = neg(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = neg(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = neg(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let v: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(a, b)| b + 0.5 * (a - b))
                .collect();
            values[i] = neg(&v);
            simplex[i] = v;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap();
    (simplex[best].clone(), -values[best], iterations)
}

/// Newton iterations on `grad = 0` for a maximum, with backtracking on `f`.
pub fn newton_polish<F, G>(f: &F, grad: &G, x0: &[f64], tol: f64, max_iter: usize) -> LocalResult
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut iterations = 0;
    let mut predicted_gain;
    loop {
        let gn = norm_sq(&g).sqrt();
        let hess = fd_hessian(grad, &x, 1e-5);
        let neg_h = -hess;
        let chol = neg_h.clone().cholesky();
        let step: Vec<f64> = match &chol {
            Some(c) => {
                let s = c.solve(&DVector::from_vec(g.clone()));
                predicted_gain = 0.5 * s.dot(&DVector::from_vec(g.clone()));
                s.iter().copied().collect()
            }
            None => {
                predicted_gain = f64::INFINITY;
                g.clone()
            }
        };
        if gn <= tol || iterations >= max_iter {
            return LocalResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations,
                converged: gn <= tol,
                predicted_gain: if chol.is_some() { predicted_gain } else { f64::INFINITY },
            };
        }
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            retract(&mut trial);
            let ft = f(&trial);
            if ft >= fx {
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        g = grad(&x);
        if !accepted {
            let gn = norm_sq(&g).sqrt();
            return LocalResult {
                x,
                value: fx,
                grad_norm: gn,
                iterations,
                converged: gn <= tol,
                predicted_gain,
            };
        }
    }
}

fn fd_hessian<G>(grad: &G, x: &[f64], h: f64) -> DMatrix<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut hess = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let gp = grad(&xp);
        let gm = grad(&xm);
        for i in 0..n {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    (&hess + hess.transpose()) * 0.5
}

/// Multistart seeds: the origin, then Halton points in the ball of radius
/// `radius`, shifted by a seed-dependent Cranley–Patterson rotation.
pub fn start_points(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    assert!(dim <= PRIMES.len(), "start_points supports up to 16 dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let mut out = vec![vec![0.0; dim]];
    let mut k = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..dim)
            .map(|j| {
                let u = (radical_inverse(k, PRIMES[j]) + shift[j]).fract();
                radius * (2.0 * u - 1.0)
            })
            .collect();
        k += 1;
        if norm_sq(&p) <= radius * radius {
            out.push(p);
        }
    }
    out.truncate(count.max(1));
    out
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}
