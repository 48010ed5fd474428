//! Bound-constrained limited-memory quasi-Newton minimizer.
//!
//! Projected L-BFGS: the two-loop recursion runs on the free variables,
//! variables pinned at a bound with an outward gradient are held fixed, and
//! a backtracking Armijo search is performed along the projected path.
//! Gradients come from central finite differences.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsbConfig {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop when the relative decrease of the objective falls below this.
    pub f_tolerance: f64,
    /// Stop when the infinity norm of the projected gradient falls below this.
    pub pg_tolerance: f64,
    /// Relative finite-difference step: `h = step * max(1, |x|)`.
    pub fd_step: f64,
}

impl Default for LbfgsbConfig {
    fn default() -> Self {
        LbfgsbConfig {
            max_iterations: 200,
            memory: 8,
            f_tolerance: 1e-9,
            pg_tolerance: 1e-6,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn gradient(&mut self, x: &[f64], fx: f64, bounds: &Bounds, step: f64) -> Vec<f64> {
        let mut work = x.to_vec();
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let h = step * x[i].abs().max(1.0);
            let up = (x[i] + h).min(bounds.upper[i]);
            let down = (x[i] - h).max(bounds.lower[i]);
            let f_up = if up > x[i] {
                work[i] = up;
                let v = self.eval(&work);
                work[i] = x[i];
                Some(v)
            } else {
                None
            };
            let f_down = if down < x[i] {
                work[i] = down;
                let v = self.eval(&work);
                work[i] = x[i];
                Some(v)
            } else {
                None
            };
            g[i] = match (f_up, f_down) {
                (Some(a), Some(b)) => (a - b) / (up - down),
                (Some(a), None) => (a - fx) / (up - x[i]),
                (None, Some(b)) => (fx - b) / (x[i] - down),
                (None, None) => 0.0,
            };
            if !g[i].is_finite() {
                g[i] = 0.0;
            }
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Variables that may move: not pinned at a bound by the gradient.
fn free_mask(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<bool> {
    (0..x.len())
        .map(|i| !((x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0)))
        .collect()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &Bounds) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let step = (x[i] - g[i]).clamp(bounds.lower[i], bounds.upper[i]) - x[i];
        worst = worst.max(step.abs());
    }
    worst
}

/// Minimizes `f` over the box, starting from `x0` (projected into the box).
pub fn minimize<F>(f: F, x0: &[f64], bounds: &Bounds, config: &LbfgsbConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "bounds of length {}/{} for {n} variables",
            bounds.lower.len(),
            bounds.upper.len()
        )));
    }
    let mut obj = Counted { f, evaluations: 0 };
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut fx = obj.eval(&x);
    if !fx.is_finite() {
        return Err(Error::OptimizerFailure(alloc::string::String::from(
            "objective is not finite at the initial point",
        )));
    }
    let mut g = obj.gradient(&x, fx, bounds, config.fd_step);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        if projected_gradient_norm(&x, &g, bounds) < config.pg_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let free = free_mask(&x, &g, bounds);
        let masked_g: Vec<f64> = g.iter().zip(&free).map(|(&gi, &fi)| if fi { gi } else { 0.0 }).collect();

        // Two-loop recursion.
        let mut q = masked_g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or_else(|| {
                let norm = dot(&masked_g, &masked_g).sqrt();
                if norm > 0.0 {
                    (1.0 / norm).min(1.0)
                } else {
                    1.0
                }
            });
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let mut d: Vec<f64> = q.iter().zip(&free).map(|(&qi, &fi)| if fi { -qi } else { 0.0 }).collect();
        if dot(&d, &g) >= 0.0 {
            history.clear();
            let norm = dot(&masked_g, &masked_g).sqrt().max(1e-300);
            let scale = (1.0 / norm).min(1.0);
            d = masked_g.iter().map(|&gi| -gi * scale).collect();
        }

        // Backtracking along the projected path.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            bounds.project(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if decrease >= 0.0 && moved.iter().all(|m| *m == 0.0) {
                break;
            }
            let ft = obj.eval(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * decrease.min(0.0) && ft <= fx {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            converged = history.is_empty();
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let g_new = obj.gradient(&x_new, f_new, bounds, config.fd_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let rel = (fx - f_new) / fx.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        fx = f_new;
        g = g_new;
        if rel <= config.f_tolerance {
            converged = true;
            break;
        }
    }
    Ok(Minimum {
        x,
        f: fx,
        iterations,
        evaluations: obj.evaluations,
        converged,
    })
}
