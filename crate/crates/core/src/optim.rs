//! Projected limited-memory BFGS for minimisation under box constraints.
//!
//! Variables at an active bound are frozen for the step, the search direction
//! comes from the two-loop recursion on the free subspace, and a backtracking
//! Armijo search runs along the projected path. Every accepted step strictly
//! decreases the objective.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct Bounds<T> {
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions<T> {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the relative objective decrease falls below this.
    pub ftol: T,
    /// Stop when the projected gradient's max-norm falls below this.
    pub pgtol: T,
}

impl<T: Scalar> Default for LbfgsOptions<T> {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 15_000,
            ftol: T::of(2.220446049250313e-9),
            pgtol: T::of(1e-5),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    /// Objective value after each accepted step, starting with the initial point.
    pub trace: Vec<T>,
}

fn project<T: Scalar>(x: &mut [T], bounds: &[Bounds<T>]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        *v = v.max(b.lower).min(b.upper);
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimises `f` (returning value and gradient) subject to `bounds`.
pub fn minimize<T: Scalar>(
    mut f: impl FnMut(&[T], &mut [T]) -> T,
    x0: &[T],
    bounds: &[Bounds<T>],
    opts: &LbfgsOptions<T>,
) -> LbfgsOutcome<T> {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut g = vec![T::zero(); n];
    let mut fx = f(&x, &mut g);
    let mut trace = vec![fx];
    let mut memory: VecDeque<(Vec<T>, Vec<T>)> = VecDeque::with_capacity(opts.memory);
    let mut grad_new = vec![T::zero(); n];
    let mut iterations = 0;

    let frozen = |x: &[T], g: &[T], i: usize| -> bool {
        let b = bounds[i];
        b.lower == b.upper || (x[i] <= b.lower && g[i] > T::zero()) || (x[i] >= b.upper && g[i] < T::zero())
    };

    while iterations < opts.max_iters {
        let mask: Vec<T> = (0..n)
            .map(|i| if frozen(&x, &g, i) { T::zero() } else { T::one() })
            .collect();
        let pg = g
            .iter()
            .zip(&mask)
            .fold(T::zero(), |m, (&gi, &mi)| m.max((gi * mi).abs()));
        if pg <= opts.pgtol {
            break;
        }

        // two-loop recursion with every inner product restricted to free coordinates
        let fdot = |a: &[T], b: &[T]| -> T { a.iter().zip(b).zip(&mask).map(|((&u, &v), &m)| u * v * m).sum() };
        let pairs: Vec<(&Vec<T>, &Vec<T>, T)> = memory
            .iter()
            .filter_map(|(s, y)| {
                let sy = fdot(s, y);
                (sy > T::epsilon() * fdot(y, y)).then(|| (s, y, T::one() / sy))
            })
            .collect();
        let mut q: Vec<T> = g.iter().zip(&mask).map(|(&gi, &mi)| gi * mi).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for &(s, y, rho) in pairs.iter().rev() {
            let a = rho * fdot(s, &q);
            for ((qi, &yi), &mi) in q.iter_mut().zip(y).zip(&mask) {
                *qi -= a * yi * mi;
            }
            alphas.push(a);
        }
        if let Some(&(s, y, _)) = pairs.last() {
            let gamma = fdot(s, y) / fdot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (&(s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * fdot(y, &q);
            for ((qi, &si), &mi) in q.iter_mut().zip(s).zip(&mask) {
                *qi += si * (a - b) * mi;
            }
        }
        let mut dir: Vec<T> = q.iter().zip(&mask).map(|(&v, &mi)| -v * mi).collect();
        if !(dot(&dir, &g) < T::zero()) {
            memory.clear();
            dir = g.iter().zip(&mask).map(|(&gi, &mi)| -gi * mi).collect();
        }
        let mut step = if memory.is_empty() {
            T::one() / dir.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::one())
        } else {
            T::one()
        };

        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| xi + step * di).collect();
            project(&mut trial, bounds);
            let delta: Vec<T> = trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            let decrease = dot(&g, &delta);
            if decrease >= T::zero() {
                step *= T::of(0.5);
                continue;
            }
            let ft = f(&trial, &mut grad_new);
            if ft.is_finite() && ft <= fx + T::of(1e-4) * decrease && ft < fx {
                accepted = Some((trial, ft, delta));
                break;
            }
            step *= T::of(0.5);
        }
        let Some((x_new, f_new, s)) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        iterations += 1;
        let y: Vec<T> = grad_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y) {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y));
        }
        let rel = (fx - f_new) / fx.abs().max(f_new.abs()).max(T::one());
        x = x_new;
        fx = f_new;
        g.copy_from_slice(&grad_new);
        trace.push(fx);
        if rel <= opts.ftol {
            break;
        }
    }
    LbfgsOutcome {
        x,
        f: fx,
        iterations,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_unconstrained() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let free = Bounds {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
        let opts = LbfgsOptions {
            ftol: 1e-15,
            pgtol: 1e-8,
            ..Default::default()
        };
        let out = minimize(f, &[-1.2, 1.0], &[free; 2], &opts);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            out.x
        );
        assert!(out.trace.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn respects_bounds() {
        // minimise (x - 2)^2 + (y + 1)^2 on [0, 1] x [0, 5]
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 2.0);
            g[1] = 2.0 * (x[1] + 1.0);
            (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)
        };
        let bounds = [Bounds { lower: 0.0, upper: 1.0 }, Bounds { lower: 0.0, upper: 5.0 }];
        let out = minimize(f, &[0.5, 3.0], &bounds, &LbfgsOptions::default());
        assert!((out.x[0] - 1.0).abs() < 1e-9);
        assert!(out.x[1].abs() < 1e-9);
    }

    #[test]
    fn fixed_variables_never_move() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] - 3.0);
            (x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2)
        };
        let bounds = [
            Bounds { lower: 0.0, upper: 0.0 },
            Bounds {
                lower: 0.0,
                upper: f64::INFINITY,
            },
        ];
        let out = minimize(f, &[0.0, 0.0], &bounds, &LbfgsOptions::default());
        assert_eq!(out.x[0], 0.0);
        assert!((out.x[1] - 3.0).abs() < 1e-6);
    }
}
