//! Quasi-Newton minimization over small dense coordinate vectors.
//!
//! BFGS with a central-difference gradient and Armijo backtracking. Problem
//! sizes here are tiny (tens of variables), so the dense inverse-Hessian
//! update is the right tool.

pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

pub struct Options {
    pub grad_tolerance: f64,
    pub max_iters: usize,
    pub fd_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grad_tolerance: 1e-8,
            max_iters: 400,
            fd_step: 1e-6,
        }
    }
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &mut Vec<f64>, h: f64) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let xi = x[i];
        x[i] = xi + h;
        let fp = f(x);
        x[i] = xi - h;
        let fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` from `x0`. Deterministic for fixed inputs.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &Options) -> OptimResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if n == 0 {
        return OptimResult {
            x,
            value: fx,
            grad_norm: 0.0,
            iters: 0,
            converged: true,
        };
    }
    let mut g = fd_gradient(&f, &mut x, opts.fd_step);
    // Inverse Hessian approximation, row-major.
    let mut hinv = vec![0.0; n * n];
    for i in 0..n {
        hinv[i * n + i] = 1.0;
    }
    // Rayleigh estimate of the Hessian scale, for the roundoff floor below.
    let mut curv: f64 = 1.0;
    let mut iters = 0;
    while iters < opts.max_iters {
        let gn = norm(&g);
        if gn <= opts.grad_tolerance {
            return OptimResult {
                x,
                value: fx,
                grad_norm: gn,
                iters,
                converged: true,
            };
        }
        // Direction d = -Hinv g.
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += hinv[i * n + j] * g[j];
            }
            d[i] = -s;
        }
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            // Reset to steepest descent if curvature information went bad.
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
                d[i] = -g[i];
            }
            slope = -gn * gn;
        }
        // Armijo backtracking.
        let mut t = 1.0;
        let mut x_new;
        let mut f_new;
        loop {
            x_new = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect::<Vec<_>>();
            f_new = f(&x_new);
            if f_new <= fx + 1e-4 * t * slope || t < 1e-14 {
                break;
            }
            t *= 0.5;
        }
        if t < 1e-14 && f_new >= fx {
            // Line search stalled: the objective can no longer decrease in
            // floating point. The smallest observable gradient there is
            // √(2 H ulp(f)), so accept that floor as converged.
            let floor = 4.0 * (curv.max(1.0) * f64::EPSILON * fx.abs().max(1.0)).sqrt();
            return OptimResult {
                x,
                value: fx,
                grad_norm: gn,
                iters,
                converged: gn <= opts.grad_tolerance.max(floor),
            };
        }
        let mut g_new = fd_gradient(&f, &mut x_new, opts.fd_step);
        // BFGS update with s = x_new - x, yv = g_new - g.
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        let ss = dot(&s, &s);
        if ss > 0.0 && sy > 0.0 {
            curv = curv.max(sy / ss);
        }
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            let rho = 1.0 / sy;
            // Hinv = (I - rho s y^T) Hinv (I - rho y s^T) + rho s s^T
            let mut hy = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += hinv[i * n + j] * yv[j];
                }
                hy[i] = acc;
            }
            let yhy = dot(&yv, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        std::mem::swap(&mut g, &mut g_new);
        iters += 1;
    }
    let gn = norm(&g);
    let floor = 4.0 * (curv.max(1.0) * f64::EPSILON * fx.abs().max(1.0)).sqrt();
    OptimResult {
        x,
        value: fx,
        grad_norm: gn,
        iters,
        converged: gn <= opts.grad_tolerance.max(floor),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = bfgs(
            |x| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum(),
            &[1.0, -2.0, 3.0],
            &Options::default(),
        );
        assert!(r.converged);
        assert!(r.value < 1e-12);
    }

    #[test]
    fn rosenbrock() {
        let r = bfgs(
            |x| {
                let a = 1.0 - x[0];
                let b = x[1] - x[0] * x[0];
                a * a + 100.0 * b * b
            },
            &[-1.2, 1.0],
            &Options {
                max_iters: 2000,
                ..Options::default()
            },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }
}
