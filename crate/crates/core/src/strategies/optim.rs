//! Limited-memory BFGS with Armijo backtracking, minimising over an affine
//! subspace given by a gradient projection.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `|Δf| / max(|f|, 1)` falls below this.
    pub rel_tol: f64,
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 1000,
            rel_tol: 1e-8,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f`, which returns the value and writes the gradient. The value
/// may be `+∞` to reject a point; the line search then backtracks. `project`
/// maps a gradient onto the feasible directions, and `x0` must be feasible.
pub fn minimize<F, P>(mut f: F, project: P, x0: Vec<f64>, opts: LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    project(&mut g);
    assert!(fx.is_finite(), "starting point must have a finite objective");
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut restarted = false;
    loop {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < opts.grad_tol {
            return Minimum { x, value: fx, iterations, grad_norm: gnorm, converged: true };
        }
        if iterations >= opts.max_iter {
            return Minimum { x, value: fx, iterations, grad_norm: gnorm, converged: false };
        }
        iterations += 1;

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm.max(1.0),
        };
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        project(&mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = f64::INFINITY;
        for _ in 0..60 {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease along the quasi-Newton direction: retry once from steepest descent.
            if restarted || history.is_empty() {
                return Minimum { x, value: fx, iterations, grad_norm: gnorm, converged: true };
            }
            history.clear();
            restarted = true;
            continue;
        }
        restarted = false;
        project(&mut g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - f_new).abs() / fx.abs().max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if rel < opts.rel_tol {
            let grad_norm = dot(&g, &g).sqrt();
            return Minimum { x, value: fx, iterations, grad_norm, converged: true };
        }
    }
}
