/// Input/output scalings of a preconditioned denoiser at noise level `σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdmCoeffs {
    pub skip: f64,
    pub out: f64,
    pub input: f64,
    pub noise: f64,
}

pub fn edm_coeffs(sigma: f64, sigma_data: f64) -> EdmCoeffs {
    let s2 = sigma * sigma;
    let d2 = sigma_data * sigma_data;
    let norm = (s2 + d2).sqrt();
    EdmCoeffs { skip: d2 / (s2 + d2), out: sigma * sigma_data / norm, input: 1.0 / norm, noise: sigma.ln() }
}
