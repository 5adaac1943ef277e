//! Small derivative-free optimizers used throughout the crate.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizer of a unimodal function on `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// shrinking the bracket below `tol`. Endpoints are compared too, so monotone
/// objectives report the correct boundary.
pub fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<Maximum> {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let mut best = if f1 >= f2 { Maximum { x: x1, value: f1 } } else { Maximum { x: x2, value: f2 } };
    for x in [lo, hi] {
        let v = f(x)?;
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop once the sup-norm of the gradient falls below this.
    pub gradient_tolerance: f64,
    /// Central-difference step.
    pub step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            gradient_tolerance: 1e-9,
            step: 1e-5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Sup-norm of the final gradient estimate.
    pub residual: f64,
}

fn gradient(f: &mut impl FnMut(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Quasi-Newton minimization with finite-difference gradients and Armijo backtracking.
pub fn bfgs_minimize(mut f: impl FnMut(&[f64]) -> Result<f64>, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::DomainError("objective not finite at the starting point".into()));
    }
    if n == 0 {
        return Ok(BfgsResult { x, value: fx, iterations: 0, residual: 0.0 });
    }
    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut hinv = identity(n);
    let mut g = gradient(&mut f, &x, opts.step)?;
    let mut iterations = 0;
    let mut fresh = true;
    while iterations < opts.max_iterations && sup_norm(&g) > opts.gradient_tolerance {
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = f(&trial)?;
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };
        let g_new = gradient(&mut f, &x_new, opts.step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let stalled = sup_norm(&s) < 1e-14 || (fx - f_new).abs() <= 1e-16 * fx.abs().max(1e-300);
        x = x_new;
        fx = f_new;
        g = g_new;
        if sy > 1e-14 * sup_norm(&s) * sup_norm(&y) {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        if stalled {
            break;
        }
    }
    Ok(BfgsResult {
        x,
        value: fx,
        iterations,
        residual: sup_norm(&g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let m = golden_max(|x| Ok(-(x - 0.3).powi(2)), 0.0, 1.0, 1e-9).unwrap();
        assert!((m.x - 0.3).abs() < 1e-8);
        let m = golden_max(|x| Ok(x), 0.5, 1.0, 1e-9).unwrap();
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let opts = BfgsOptions { max_iterations: 2000, gradient_tolerance: 1e-8, step: 1e-6 };
        let r = bfgs_minimize(f, &[-1.2, 1.0], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r);
    }

    #[test]
    fn bfgs_quadratic_is_exact() {
        let f = |x: &[f64]| Ok((x[0] - 2.0).powi(2) + 3.0 * (x[1] + 1.0).powi(2) + x[0] * x[1]);
        let r = bfgs_minimize(f, &[0.0, 0.0], &BfgsOptions::default()).unwrap();
        // Stationary point of the quadratic, solved by hand: 2x + y = 4, x + 6y = -6.
        let (x, y) = (30.0 / 11.0, -16.0 / 11.0);
        assert!((r.x[0] - x).abs() < 1e-6 && (r.x[1] - y).abs() < 1e-6);
        assert!(r.residual < 1e-6);
    }
}
