//! Linear NOTEARS: least squares with an l1 penalty under the smooth
//! acyclicity constraint `h(W) = tr(exp(W ∘ W)) - d = 0`, solved by an
//! augmented Lagrangian with a bounded quasi-Newton inner solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discovery::{threshold_prune, DiscoveryResult};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::optim::{minimize, Bounds, LbfgsOptions};
use crate::scalar::Scalar;
use crate::scm::{Dataset, WeightedAdjacency};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoTearsParams {
    pub lambda1: f64,
    pub prune_threshold: f64,
    pub h_tol: f64,
    pub rho_max: f64,
    pub max_dual_steps: usize,
    pub max_inner_iters: usize,
}

impl Default for NoTearsParams {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            prune_threshold: 0.3,
            h_tol: 1e-8,
            rho_max: 1e16,
            max_dual_steps: 100,
            max_inner_iters: 15_000,
        }
    }
}

impl NoTearsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = self.lambda1 >= 0.0
            && self.prune_threshold >= 0.0
            && self.h_tol > 0.0
            && self.rho_max > 0.0
            && self.max_dual_steps > 0
            && self.max_inner_iters > 0;
        if positive {
            Ok(())
        } else {
            Err(invalid(format!("invalid NOTEARS parameters {self:?}")))
        }
    }
}

/// Value and gradient of `h(W) = tr(exp(W ∘ W)) - d`.
pub fn h_acyclicity<T: Scalar>(w: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    if !w.is_square() {
        return Err(invalid("acyclicity function needs a square matrix"));
    }
    let d = w.nrows();
    let e = w.hadamard(w).expm();
    let value = e.trace() - T::of_usize(d);
    let grad = e.transpose().hadamard(&w.scaled(T::of(2.0)));
    Ok((value, grad))
}

/// The optimizer works on `u = W_ij · sd_i` (split into positive and
/// negative parts), which equalises the curvature of the loss across rows.
/// The minimiser in `W` is unchanged.
struct Problem<T> {
    d: usize,
    /// `XᵀX / n` of the centered data.
    gram: Matrix<T>,
    lambda1: T,
    /// `1 / sd_i` per source row.
    row_scale: Vec<T>,
}

impl<T: Scalar> Problem<T> {
    fn new(gram: Matrix<T>, lambda1: T) -> Self {
        let d = gram.nrows();
        let row_scale = (0..d)
            .map(|i| {
                let v = gram[(i, i)];
                if v > T::zero() {
                    T::one() / v.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        Self {
            d,
            gram,
            lambda1,
            row_scale,
        }
    }

    fn split(&self, x: &[T]) -> Matrix<T> {
        let dd = self.d * self.d;
        Matrix::from_fn(self.d, self.d, |i, j| {
            (x[i * self.d + j] - x[dd + i * self.d + j]) * self.row_scale[i]
        })
    }

    /// `0.5/n ‖X - XW‖²` and its gradient `Σ W - Σ` with `Σ = XᵀX/n`.
    fn loss(&self, w: &Matrix<T>) -> (T, Matrix<T>) {
        let sw = self.gram.matmul(w);
        let grad = sw.sub(&self.gram);
        // 0.5 tr((I - W)ᵀ Σ (I - W)) = 0.5 (tr Σ - 2 tr(Σ W) + tr(Wᵀ Σ W))
        let wt_sw = w.hadamard(&sw).as_slice().iter().copied().sum::<T>();
        let value = T::of(0.5) * (self.gram.trace() - T::of(2.0) * sw.trace() + wt_sw);
        (value, grad)
    }

    /// Augmented Lagrangian and its gradient over the split variables.
    fn objective(&self, x: &[T], grad_out: &mut [T], rho: T, alpha: T) -> T {
        let w = self.split(x);
        let (loss, g_loss) = self.loss(&w);
        let (h, g_h) = h_acyclicity(&w).expect("square");
        let dd = self.d * self.d;
        let l1: T = (0..dd)
            .map(|k| (x[k] + x[dd + k]) * self.row_scale[k / self.d])
            .sum::<T>()
            * self.lambda1;
        let value = loss + T::of(0.5) * rho * h * h + alpha * h + l1;
        let coef = rho * h + alpha;
        for k in 0..dd {
            let c = self.row_scale[k / self.d];
            let g = (g_loss.as_slice()[k] + coef * g_h.as_slice()[k]) * c;
            grad_out[k] = g + self.lambda1 * c;
            grad_out[dd + k] = -g + self.lambda1 * c;
        }
        value
    }
}

/// Fits linear NOTEARS. The estimate keeps entries with `|w| > prune_threshold`;
/// a pruned graph that is still cyclic is reported as [`Error::CyclicResult`].
pub fn notears_linear<T: Scalar>(ds: &Dataset<T>, params: &NoTearsParams) -> Result<DiscoveryResult<T>> {
    params.validate()?;
    let (n, d) = (ds.n(), ds.d());
    if n < 2 || d < 2 {
        return Err(invalid(format!(
            "NOTEARS needs n >= 2 and d >= 2, got n = {n}, d = {d}"
        )));
    }
    let cov = ds.covariance();
    let scale = T::of_usize(n - 1) / T::of_usize(n);
    let problem = Problem::new(cov.scaled(scale), T::of(params.lambda1));
    let dd = d * d;
    let bounds: Vec<Bounds<T>> = (0..2 * dd)
        .map(|k| {
            let (i, j) = ((k % dd) / d, k % d);
            let upper = if i == j { T::zero() } else { T::infinity() };
            Bounds {
                lower: T::zero(),
                upper,
            }
        })
        .collect();
    let opts = LbfgsOptions {
        max_iters: params.max_inner_iters,
        ..LbfgsOptions::default()
    };

    let h_tol = T::of(params.h_tol);
    let rho_max = T::of(params.rho_max);
    let mut x = vec![T::zero(); 2 * dd];
    let mut rho = T::one();
    let mut alpha = T::zero();
    let mut h = T::infinity();
    let mut outer = 0usize;
    let mut inner_total = 0usize;
    let mut objective_increases = 0usize;
    let mut objective = T::zero();

    while outer < params.max_dual_steps {
        outer += 1;
        let mut x_new;
        let mut h_new;
        loop {
            let out = minimize(
                |v: &[T], g: &mut [T]| problem.objective(v, g, rho, alpha),
                &x,
                &bounds,
                &opts,
            );
            inner_total += out.iterations;
            objective_increases += out.trace.windows(2).filter(|w| w[1] > w[0]).count();
            objective = out.f;
            x_new = out.x;
            h_new = h_acyclicity(&problem.split(&x_new))?.0;
            if h_new > T::of(0.25) * h && rho < rho_max {
                rho *= T::of(10.0);
            } else {
                break;
            }
        }
        x = x_new;
        h = h_new;
        alpha += rho * h;
        if h <= h_tol || rho >= rho_max {
            break;
        }
    }

    let converged = h <= h_tol;
    if !converged {
        log::warn!("NOTEARS stopped with h = {h:e} above tolerance");
    }
    let w = problem.split(&x);
    let w_est = WeightedAdjacency::new(w.clone())?;
    let g_est = threshold_prune(&w, T::of(params.prune_threshold))?
        .into_dag()
        .map_err(|_| Error::CyclicResult)?;
    let order = g_est.topological_order();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("h".to_string(), h.as_f64());
    diagnostics.insert("rho".to_string(), rho.as_f64());
    diagnostics.insert("outer_iterations".to_string(), outer as f64);
    diagnostics.insert("inner_iterations".to_string(), inner_total as f64);
    diagnostics.insert("objective".to_string(), objective.as_f64());
    diagnostics.insert("objective_increases".to_string(), objective_increases as f64);
    diagnostics.insert("converged".to_string(), if converged { 1.0 } else { 0.0 });
    Ok(DiscoveryResult {
        w_est,
        g_est,
        order,
        diagnostics,
    })
}
