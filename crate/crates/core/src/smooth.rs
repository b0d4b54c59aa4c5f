//! Max-shifted log-sum-exp and softmax.

use libm::{exp, log};

/// `(1/phi) ln sum exp(phi v)`, evaluated as `m + (1/phi) ln sum exp(phi (v - m))`
/// with `m = max v`. Returns `None` for an empty input.
pub fn smooth_max<I>(values: I, phi: f64) -> Option<f64>
where
    I: IntoIterator<Item = f64> + Clone,
{
    let m = values
        .clone()
        .into_iter()
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })?;
    let total: f64 = values.into_iter().map(|v| exp(phi * (v - m))).sum();
    Some(m + log(total) / phi)
}

/// Softmax of `phi * v` written into `out`; returns the normaliser
/// `sum exp(phi (v - max))` (always >= 1 for non-empty input).
pub fn softmax_weights(values: &[f64], phi: f64, out: &mut [f64]) -> f64 {
    debug_assert_eq!(values.len(), out.len());
    let Some(m) = values.iter().copied().reduce(f64::max) else {
        return 0.0;
    };
    let mut total = 0.0;
    for (w, &v) in out.iter_mut().zip(values) {
        *w = exp(phi * (v - m));
        total += *w;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
    total
}
