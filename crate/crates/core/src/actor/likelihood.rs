use crate::nn::Real;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log-density of `tanh(u)` when `u ~ N(μ, σ²)`, summed over dimensions,
/// with the Jacobian written as `2(log 2 - u - softplus(-2u))`.
pub fn tanh_log_prob<R: Real>(u: &[R], mu: &[R], sigma: &[R]) -> R {
    let ln2 = R::from_f64(std::f64::consts::LN_2);
    let two = R::from_f64(2.0);
    let half = R::from_f64(0.5);
    let mut acc = R::zero();
    for ((&u, &m), &s) in u.iter().zip(mu).zip(sigma) {
        let z = (u - m) / s;
        acc = acc - half * z * z - s.ln() - R::from_f64(0.5 * LN_2PI);
        acc = acc - two * (ln2 - u - (-two * u).softplus());
    }
    acc
}

/// Partial derivatives of [`tanh_log_prob`] for one dimension, w.r.t. `(u, μ, σ)`.
pub fn tanh_log_prob_partials(u: f64, mu: f64, sigma: f64) -> (f64, f64, f64) {
    let d = u - mu;
    let s2 = sigma * sigma;
    (-d / s2 + 2.0 * u.tanh(), d / s2, -1.0 / sigma + d * d / (s2 * sigma))
}
