use crate::{Error, Result};

/// Sinusoidal embedding of a scalar: `[sin(t·f₀), cos(t·f₀), sin(t·f₁), …]`
/// with `f_i = 10000^(-2i/dim)`.
pub fn positional_embedding(t: f64, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::Config(format!("embedding dim must be even and positive, got {dim}")));
    }
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let freq = 10000f64.powf(-(2.0 * i as f64) / dim as f64);
        let (s, c) = (t * freq).sin_cos();
        out.push(s);
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_phase() {
        let e = positional_embedding(0.0, 32).unwrap();
        for pair in e.chunks(2) {
            assert_eq!(pair, &[0.0, 1.0]);
        }
    }

    #[test]
    fn unit_sigma_maps_to_zero_phase() {
        let t = 1e3 * 1f64.ln() / 4.0;
        assert_eq!(positional_embedding(t, 8).unwrap(), positional_embedding(0.0, 8).unwrap());
    }

    #[test]
    fn pi_at_dim_two() {
        let e = positional_embedding(std::f64::consts::PI, 2).unwrap();
        assert!(e[0].abs() < 1e-12);
        assert!((e[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_dim_is_rejected() {
        assert!(matches!(positional_embedding(1.0, 5), Err(Error::Config(_))));
    }
}
