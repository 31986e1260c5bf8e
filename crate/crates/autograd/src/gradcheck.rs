//! Central-difference reference gradients.

use crate::tensor::Tensor;

/// Central-difference estimate of `∇f(x)`, one coordinate at a time:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h`.
///
/// `f` must be pure. It may return `f32` or `f64`; the differences are taken
/// in f64, so a function that accumulates in f64 gets an f64-accurate
/// estimate.
pub fn finite_difference_oracle<R: Into<f64>>(f: impl Fn(&Tensor) -> R, x: &Tensor, h: f32) -> Tensor {
    let base = x.to_vec();
    let mut grad = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        let up: f64 = f(&Tensor::constant(x.shape().to_vec(), probe.clone())).into();
        probe[i] = base[i] - h;
        let down: f64 = f(&Tensor::constant(x.shape().to_vec(), probe.clone())).into();
        probe[i] = base[i];
        // Divide by the step actually representable in f32.
        let step = (base[i] + h) as f64 - (base[i] - h) as f64;
        grad.push(((up - down) / step) as f32);
    }
    Tensor::constant(x.shape().to_vec(), grad)
}

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f32], b: &[f32], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "compared gradients differ in length");
    let diff: f64 = a.iter().zip(b).map(|(p, q)| ((p - q) as f64).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|&p| (p as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&q| (q as f64).powi(2)).sum::<f64>().sqrt();
    diff / na.max(nb).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_sine() {
        let sum_sq = |t: &Tensor| t.data().iter().map(|&v| (v as f64).powi(2)).sum::<f64>();
        let g = finite_difference_oracle(sum_sq, &Tensor::from_vec(&[1], vec![1.0]).unwrap(), 1e-3);
        assert!((g.data()[0] - 2.0).abs() < 1e-6, "{g:?}");
        let g = finite_difference_oracle(|t| (t.data()[0] as f64).sin(), &Tensor::scalar(0.0), 1e-3);
        assert!((g.data()[0] - 1.0).abs() < 1e-6);
    }
}
