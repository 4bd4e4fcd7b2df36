//! Least-squares and lasso regressions computed from a sample covariance matrix.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Solves `S[xs, xs] β = S[xs, y]`, adding ridge jitter `1e-6 · trace / k`
/// (growing tenfold per retry) when the Gram block is not positive definite.
pub(crate) fn ols_from_cov<T: Scalar>(cov: &Matrix<T>, xs: &[usize], y: usize) -> Vec<T> {
    if xs.is_empty() {
        return Vec::new();
    }
    let gram = cov.select(xs, xs);
    let rhs: Vec<T> = xs.iter().map(|&x| cov[(x, y)]).collect();
    if let Some(l) = gram.cholesky() {
        return Matrix::cholesky_solve(&l, &rhs);
    }
    let k = xs.len();
    let base = (gram.trace() / T::of_usize(k)).max(T::min_positive_value());
    let mut jitter = T::of(1e-6) * base;
    loop {
        let mut ridge = gram.clone();
        for i in 0..k {
            ridge[(i, i)] += jitter;
        }
        if let Some(l) = ridge.cholesky() {
            return Matrix::cholesky_solve(&l, &rhs);
        }
        jitter *= T::of(10.0);
        if !jitter.is_finite() {
            return vec![T::zero(); k];
        }
    }
}

/// Residual variance share left after regressing `y` on `xs`, scaled to a sum
/// of squares over `n - 1` degrees of freedom.
pub(crate) fn rss_from_cov<T: Scalar>(cov: &Matrix<T>, xs: &[usize], y: usize, beta: &[T], n: usize) -> T {
    let explained: T = xs.iter().zip(beta).map(|(&x, &b)| b * cov[(x, y)]).sum();
    let resid = (cov[(y, y)] - explained).max(T::zero());
    resid * T::of_usize(n.saturating_sub(1).max(1))
}

/// Coefficient of determination of `y` regressed on `xs`.
pub(crate) fn r_squared<T: Scalar>(cov: &Matrix<T>, xs: &[usize], y: usize) -> T {
    let var_y = cov[(y, y)];
    if !(var_y > T::zero()) || xs.is_empty() {
        return T::zero();
    }
    let beta = ols_from_cov(cov, xs, y);
    let explained: T = xs.iter().zip(&beta).map(|(&x, &b)| b * cov[(x, y)]).sum();
    (explained / var_y).max(T::zero()).min(T::one())
}

pub(crate) const LASSO_PATH_LEN: usize = 30;
pub(crate) const LASSO_PATH_RATIO: f64 = 1e3;

fn soft_threshold<T: Scalar>(z: T, gamma: T) -> T {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        T::zero()
    }
}

/// Selects regressors of `y` among `xs` by lasso with the penalty minimising
/// `BIC = n log(RSS/n) + k log n`, then refits least squares on the support.
///
/// Predictors enter the lasso standardized; the path has
/// [`LASSO_PATH_LEN`] penalties spaced geometrically from the smallest
/// all-zero penalty down by a factor [`LASSO_PATH_RATIO`].
/// Returns `(support, ols coefficients)`.
pub(crate) fn lasso_bic_select<T: Scalar>(cov: &Matrix<T>, xs: &[usize], y: usize, n: usize) -> (Vec<usize>, Vec<T>) {
    let n_t = T::of_usize(n);
    let bic = |support: &[usize]| -> (T, Vec<T>) {
        let beta = ols_from_cov(cov, support, y);
        let rss = rss_from_cov(cov, support, y, &beta, n).max(T::min_positive_value());
        let score = n_t * (rss / n_t).ln() + T::of_usize(support.len()) * n_t.ln();
        (score, beta)
    };
    let (mut best_score, mut best_beta) = bic(&[]);
    let mut best_support: Vec<usize> = Vec::new();
    let usable: Vec<usize> = xs.iter().copied().filter(|&x| cov[(x, x)] > T::zero()).collect();
    if usable.is_empty() {
        return (best_support, best_beta);
    }
    let k = usable.len();
    let sd: Vec<T> = usable.iter().map(|&x| cov[(x, x)].sqrt()).collect();
    let gram = Matrix::from_fn(k, k, |a, b| cov[(usable[a], usable[b])] / (sd[a] * sd[b]));
    let corr: Vec<T> = (0..k).map(|a| cov[(usable[a], y)] / sd[a]).collect();
    let lambda_max = corr.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    if !(lambda_max > T::zero()) {
        return (best_support, best_beta);
    }
    let step = T::of(LASSO_PATH_RATIO).powf(T::one() / T::of_usize(LASSO_PATH_LEN - 1));
    let mut coef = vec![T::zero(); k];
    let mut lambda = lambda_max;
    let tol = T::of(1e-10) * lambda_max;
    let mut seen: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..LASSO_PATH_LEN {
        for _sweep in 0..10_000 {
            let mut max_change = T::zero();
            for a in 0..k {
                let partial = corr[a] - (0..k).filter(|&b| b != a).map(|b| gram[(a, b)] * coef[b]).sum::<T>();
                let updated = soft_threshold(partial, lambda) / gram[(a, a)];
                max_change = max_change.max((updated - coef[a]).abs());
                coef[a] = updated;
            }
            if max_change <= tol {
                break;
            }
        }
        let support: Vec<usize> = (0..k).filter(|&a| coef[a] != T::zero()).map(|a| usable[a]).collect();
        if !seen.contains(&support) {
            let (score, beta) = bic(&support);
            if score < best_score {
                best_score = score;
                best_beta = beta;
                best_support = support.clone();
            }
            seen.push(support);
        }
        lambda /= step;
    }
    (best_support, best_beta)
}
