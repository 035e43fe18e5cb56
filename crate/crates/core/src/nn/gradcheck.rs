//! Finite-difference gradient verification.
//!
//! Central differences `(f(x+ε) - f(x-ε)) / 2ε` checked against analytic
//! gradients. Comparisons use a floored relative error
//! `|a - n| / max(|a| + |n|, floor)` so that finite-difference roundoff on
//! near-zero components does not register as a gradient defect; components
//! larger than the floor are held to the full relative tolerance.

/// Default probe step for double-precision checks.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Central finite-difference gradient of `f` at `x`.
///
/// `f` may mutate scratch state but must be a pure function of `x`.
pub fn central_diff<F>(mut f: F, x: &mut [f64], epsilon: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let saved = x[i];
        x[i] = saved + epsilon;
        let plus = f(x);
        x[i] = saved - epsilon;
        let minus = f(x);
        x[i] = saved;
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    grad
}

/// Largest floored relative error between analytic and numeric gradients.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / (a.abs() + n.abs()).max(floor))
        .fold(0.0, f64::max)
}
