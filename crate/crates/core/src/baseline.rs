//! Comparison masking schemes: 4- and 16-level white noise, and a binary
//! green-noise approximation built by sign-thresholding a bandpass template.

use crate::error::Result;
use crate::mask_design::{generate_template, Codebook, QuantizedMask, SpectralFilter};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Which comparison scheme a mask set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// i.i.d. uniform over {1, i, -1, -i}.
    White4,
    /// i.i.d. uniform over the 16-level codebook.
    White16,
    /// Sign-binarized bandpass noise, an approximation of binary green noise.
    GreenBinaryApprox,
}

/// Default passband of the green-noise approximation (mid-frequency band).
pub fn green_default_filter() -> SpectralFilter {
    SpectralFilter::new(PI / 3.0, PI / 2.0).unwrap()
}

fn white_masks(n: usize, levels: usize, l_masks: usize, seed: u64) -> Result<Vec<QuantizedMask>> {
    let codebook = Codebook::new(levels)?;
    Ok((1..=l_masks as u32)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(l as u64));
            let indices =
                Array2::from_shape_fn((n, n), |_| rng.random_range(0..levels as u16));
            QuantizedMask {
                indices,
                codebook: codebook.clone(),
                mask_index: l,
            }
        })
        .collect())
}

/// 4-level white noise masks; codeword indices {0,1,2,3} realize {1, i, -1, -i}.
pub fn generate_white4(n: usize, l_masks: usize, seed: u64) -> Result<Vec<QuantizedMask>> {
    white_masks(n, 4, l_masks, seed)
}

/// 16-level white noise masks drawn from the same codebook as the designed masks.
pub fn generate_white16(n: usize, l_masks: usize, seed: u64) -> Result<Vec<QuantizedMask>> {
    white_masks(n, 16, l_masks, seed)
}

/// Binary green-noise approximation: a bandpass template binarized by the
/// sign of its real part onto the codebook [0, π] (phases {1, -1}).
///
/// This reproduces the two properties the comparisons need — binary levels
/// and mid-frequency spectral concentration — without the multiscale error
/// diffusion of the original construction.
pub fn generate_green_binary_approx(
    n: usize,
    l_masks: usize,
    seed: u64,
    filter: &SpectralFilter,
) -> Result<Vec<QuantizedMask>> {
    let codebook = Codebook::new(2)?;
    (1..=l_masks as u32)
        .map(|l| {
            let template = generate_template(n, filter, seed.wrapping_add(l as u64))
                .map_err(|e| e.for_mask(l))?;
            let indices = template.mapv(|z| if z.re >= 0.0 { 0u16 } else { 1u16 });
            Ok(QuantizedMask {
                indices,
                codebook: codebook.clone(),
                mask_index: l,
            })
        })
        .collect()
}

/// Generate a baseline mask set of the given kind.
pub fn generate_baseline(
    kind: BaselineKind,
    n: usize,
    l_masks: usize,
    seed: u64,
) -> Result<Vec<QuantizedMask>> {
    match kind {
        BaselineKind::White4 => generate_white4(n, l_masks, seed),
        BaselineKind::White16 => generate_white16(n, l_masks, seed),
        BaselineKind::GreenBinaryApprox => {
            generate_green_binary_approx(n, l_masks, seed, &green_default_filter())
        }
    }
}
