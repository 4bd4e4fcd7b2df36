//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. Random draws are produced in `f64` and
/// narrowed with [`Scalar::of`], so a seed yields the same stream for both.
pub trait Scalar:
    'static + Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar always converts to f64")
    }

    /// Relative tolerance under which two computed statistics are treated as tied.
    fn tie_tolerance() -> Self;
}

impl Scalar for f32 {
    fn tie_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn tie_tolerance() -> Self {
        1e-9
    }
}

/// Returns `true` if `a` and `b` agree up to the scalar's tie tolerance, relative
/// to `scale`.
pub fn nearly_equal<T: Scalar>(a: T, b: T, scale: T) -> bool {
    (a - b).abs() <= T::tie_tolerance() * scale.abs().max(T::one())
}

/// Stable ascending argsort that treats values within the tie tolerance of the
/// group minimum as equal, so ties fall back to index order.
pub fn argsort_with_ties<T: Scalar>(values: &[T]) -> Vec<usize> {
    let scale = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    // Collapse runs of near-equal values and restore index order inside each run.
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let anchor = values[idx[start]];
        let mut end = start + 1;
        while end < idx.len() && nearly_equal(values[idx[end]], anchor, scale) {
            end += 1;
        }
        let mut run = idx[start..end].to_vec();
        run.sort_unstable();
        out.extend(run);
        start = end;
    }
    out
}
