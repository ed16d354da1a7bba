use crate::nn::MlpNetwork;
use crate::{Error, Result};

/// `target ← τ·target + (1 - τ)·online`, entry by entry.
///
/// Evaluated as `target + (1 - τ)(online - target)` so equal networks stay
/// bit-identical for any `τ`.
pub fn polyak_update(target: &mut MlpNetwork, online: &MlpNetwork, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("polyak coefficient {tau} outside [0, 1]")));
    }
    let src = online.params();
    let mut dst = target.params_mut();
    if src.len() != dst.len() {
        return Err(Error::dim(format!("polyak parameter count {} vs {}", src.len(), dst.len())));
    }
    let mix = 1.0 - tau;
    for (t, o) in dst.iter_mut().zip(src) {
        if t.value.shape() != o.value.shape() {
            return Err(Error::Dimension(format!("polyak shape mismatch on {}", t.name)));
        }
        if tau == 0.0 {
            t.value.data_mut().copy_from_slice(o.value.data());
            continue;
        }
        for (a, b) in t.value.data_mut().iter_mut().zip(o.value.data()) {
            *a += mix * (b - *a);
        }
    }
    Ok(())
}
