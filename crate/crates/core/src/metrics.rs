//! Evaluation quantities: high-frequency energy fraction η, mean power
//! spectra, local Shannon entropy, and phase-domain PSNR/SSIM.

use crate::error::{Error, Result};
use crate::field::{freq_offset, ComplexField};
use crate::mask_design::QuantizedMask;
use crate::reconstruct::global_phase_align;
use ndarray::Array2;
use std::f64::consts::TAU;

/// Summary of one intensity spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumStats {
    /// High-frequency energy fraction at the 0.8 threshold.
    pub eta: f64,
    /// Mean power per integer radial bin (bin r collects offsets with
    /// `round(sqrt(u² + v²)) = r`).
    pub radial_power: Vec<f64>,
    /// Mean power along the x-axis in decibels, in centered order
    /// (index 0 = most negative frequency), averaged over the y-axis.
    pub axis_power_db: Vec<f64>,
}

/// Fraction of spectral energy in bins whose centered normalized frequency
/// satisfies `max(|f_u|, |f_v|) >= threshold · f_Nyquist`.
///
/// The input is a nonnegative power spectrum in standard DFT layout
/// (DC at `[0, 0]`); the region is evaluated on the centered grid.
pub fn eta(spectrum: &Array2<f64>, threshold: f64) -> Result<f64> {
    let (rows, cols) = spectrum.dim();
    let mut total = 0.0;
    let mut high = 0.0;
    let half_r = (rows / 2) as f64;
    let half_c = (cols / 2) as f64;
    for ((i, j), &p) in spectrum.indexed_iter() {
        debug_assert!(p >= 0.0);
        total += p;
        let fu = (freq_offset(i, rows) as f64 / half_r).abs();
        let fv = (freq_offset(j, cols) as f64 / half_c).abs();
        if fu.max(fv) >= threshold {
            high += p;
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptySpectrum);
    }
    Ok(high / total)
}

/// η together with radial and x-axis mean power profiles.
pub fn spectrum_stats(spectrum: &Array2<f64>, eta_threshold: f64) -> Result<SpectrumStats> {
    let eta = eta(spectrum, eta_threshold)?;
    let (rows, cols) = spectrum.dim();

    let max_r = (((rows / 2) * (rows / 2) + (cols / 2) * (cols / 2)) as f64).sqrt() as usize + 1;
    let mut power = vec![0.0f64; max_r + 1];
    let mut count = vec![0usize; max_r + 1];
    for ((i, j), &p) in spectrum.indexed_iter() {
        let u = freq_offset(i, rows) as f64;
        let v = freq_offset(j, cols) as f64;
        let r = (u * u + v * v).sqrt().round() as usize;
        power[r] += p;
        count[r] += 1;
    }
    let radial_power = power
        .iter()
        .zip(count.iter())
        .map(|(&p, &c)| if c > 0 { p / c as f64 } else { 0.0 })
        .collect();

    // Mean over the y-axis for each x frequency, reported centered.
    let mut axis = vec![0.0f64; cols];
    for ((_, j), &p) in spectrum.indexed_iter() {
        axis[j] += p;
    }
    let mut axis_power_db = vec![0.0f64; cols];
    for j in 0..cols {
        let centered = (freq_offset(j, cols) + (cols / 2) as isize) as usize;
        let mean = axis[j] / rows as f64;
        axis_power_db[centered] = 10.0 * mean.max(f64::MIN_POSITIVE).log10();
    }

    Ok(SpectrumStats {
        eta,
        radial_power,
        axis_power_db,
    })
}

/// Mean dB level of `axis_power_db` over the high-frequency region
/// `|f| >= threshold · f_Nyquist`; the companion of [`SpectrumStats`] used
/// for quantization-level comparisons.
pub fn high_band_mean_db(axis_power_db: &[f64], threshold: f64) -> f64 {
    let cols = axis_power_db.len();
    let half = (cols / 2) as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (centered, &db) in axis_power_db.iter().enumerate() {
        let offset = centered as isize - (cols / 2) as isize;
        if (offset as f64 / half).abs() >= threshold {
            acc += db;
            count += 1;
        }
    }
    acc / count as f64
}

/// Mean base-2 Shannon entropy of the codeword indices over non-overlapping
/// `block`×`block` tiles.
pub fn local_entropy(mask: &QuantizedMask, block: usize) -> Result<f64> {
    let n = mask.n();
    if block == 0 || n % block != 0 {
        return Err(Error::BlockMismatch { block, n });
    }
    let levels = mask.codebook.levels();
    let tiles = n / block;
    let mut acc = 0.0;
    for bi in 0..tiles {
        for bj in 0..tiles {
            let mut counts = vec![0usize; levels];
            for i in 0..block {
                for j in 0..block {
                    counts[mask.indices[[bi * block + i, bj * block + j]] as usize] += 1;
                }
            }
            let total = (block * block) as f64;
            let h: f64 = counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / total;
                    -p * p.log2()
                })
                .sum();
            acc += h;
        }
    }
    Ok(acc / (tiles * tiles) as f64)
}

fn phase_mse_aligned(x: &ComplexField, x_hat: &ComplexField) -> f64 {
    let (aligned, _) = global_phase_align(x_hat, x);
    let n = x.len() as f64;
    x.iter()
        .zip(aligned.iter())
        .map(|(&a, &b)| {
            // Wrapped difference of the two phase maps.
            let d = crate::field::wrap_angle(b.arg() - a.arg());
            d * d
        })
        .sum::<f64>()
        / n
}

/// Phase-domain PSNR in dB with peak 2π:
/// `10·log10((2π)² / MSE_phase)` after global phase alignment, using
/// circular phase differences wrapped to `[-π, π)`. Returns `f64::INFINITY`
/// when the aligned phase maps agree exactly.
pub fn psnr_phase(x: &ComplexField, x_hat: &ComplexField) -> f64 {
    assert_eq!(x.dim(), x_hat.dim(), "dimension mismatch");
    let mse = phase_mse_aligned(x, x_hat);
    // Alignment leaves rounding-level residuals on exact matches; anything
    // below (1e-12 rad)^2 is agreement.
    if mse < 1e-24 {
        f64::INFINITY
    } else {
        10.0 * (TAU * TAU / mse).log10()
    }
}

/// SSIM of the two phase maps after global alignment, wrapped to `[0, 2π)`,
/// with the standard 11×11 Gaussian window (σ = 1.5) and stabilizer
/// constants scaled to the 2π dynamic range.
pub fn ssim_phase(x: &ComplexField, x_hat: &ComplexField) -> f64 {
    assert_eq!(x.dim(), x_hat.dim(), "dimension mismatch");
    let (aligned, _) = global_phase_align(x_hat, x);
    let to_map = |f: &ComplexField| -> Array2<f64> {
        f.mapv(|z| {
            let mut p = z.arg();
            if p < 0.0 {
                p += TAU;
            }
            p
        })
    };
    ssim(&to_map(x), &to_map(&aligned), TAU)
}

/// Plain SSIM over real-valued maps with the given dynamic range.
pub fn ssim(a: &Array2<f64>, b: &Array2<f64>, dynamic_range: f64) -> f64 {
    assert_eq!(a.dim(), b.dim());
    let (rows, cols) = a.dim();
    let win = 11usize.min(rows).min(cols);
    let sigma = 1.5;
    let half = (win - 1) as f64 / 2.0;
    let mut kernel = Array2::zeros((win, win));
    let mut ksum = 0.0;
    for i in 0..win {
        for j in 0..win {
            let di = i as f64 - half;
            let dj = j as f64 - half;
            let w = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            kernel[[i, j]] = w;
            ksum += w;
        }
    }
    kernel.mapv_inplace(|w| w / ksum);

    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);

    let mut acc = 0.0;
    let mut count = 0usize;
    for i0 in 0..=(rows - win) {
        for j0 in 0..=(cols - win) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for i in 0..win {
                for j in 0..win {
                    let w = kernel[[i, j]];
                    mu_a += w * a[[i0 + i, j0 + j]];
                    mu_b += w * b[[i0 + i, j0 + j]];
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for i in 0..win {
                for j in 0..win {
                    let w = kernel[[i, j]];
                    let da = a[[i0 + i, j0 + j]] - mu_a;
                    let db = b[[i0 + i, j0 + j]] - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            }
            let s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            acc += s;
            count += 1;
        }
    }
    acc / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::unit_phasor;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn eta_trivial_regions() {
        // All energy at DC: η = 0.
        let mut s = Array2::zeros((16, 16));
        s[[0, 0]] = 5.0;
        assert_eq!(eta(&s, 0.8).unwrap(), 0.0);

        // All energy in the four corner bins of the centered spectrum: η = 1.
        // In standard layout those are the bins at offset ±half on each axis.
        let n = 16;
        let mut s = Array2::zeros((n, n));
        for &i in &[n / 2] {
            for &j in &[n / 2] {
                s[[i, j]] = 1.0;
                s[[i, 0]] = 1.0;
                s[[0, j]] = 1.0;
            }
        }
        // Chebyshev region: any bin with one axis at Nyquist qualifies.
        assert_eq!(eta(&s, 0.8).unwrap(), 1.0);

        // Empty spectrum errors.
        let z: Array2<f64> = Array2::zeros((8, 8));
        assert!(matches!(eta(&z, 0.8), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn eta_flat_spectrum_counts_bins() {
        // Flat 100×100 spectrum at threshold 0.8: η = 1 − 79²/100².
        let s = Array2::from_elem((100, 100), 1.0);
        let expected = 1.0 - (79.0 * 79.0) / (100.0 * 100.0);
        let got = eta(&s, 0.8).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

        // Cross-check by brute-force counting on the centered grid.
        let mut inside = 0usize;
        for u in -50i32..50 {
            for v in -50i32..50 {
                if (u.abs().max(v.abs()) as f64) / 50.0 < 0.8 {
                    inside += 1;
                }
            }
        }
        assert_eq!(inside, 79 * 79);
    }

    #[test]
    fn eta_scale_and_threshold_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Array2::from_shape_fn((32, 32), |_| rng.random_range(0.0..1.0));
        let e = eta(&s, 0.8).unwrap();
        for scale in [1e-7, 0.5, 3.0, 1e9] {
            let scaled = s.mapv(|v| v * scale);
            assert!((eta(&scaled, 0.8).unwrap() - e).abs() < 1e-12);
        }
        let mut last = 1.0f64;
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let v = eta(&s, t).unwrap();
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn entropy_bounds_and_constant_mask() {
        use crate::mask_design::Codebook;
        let cb = Codebook::new(16).unwrap();
        let constant = QuantizedMask {
            indices: Array2::from_elem((64, 64), 3u16),
            codebook: cb.clone(),
            mask_index: 1,
        };
        assert_eq!(local_entropy(&constant, 32).unwrap(), 0.0);
        assert!(matches!(
            local_entropy(&constant, 7),
            Err(Error::BlockMismatch { .. })
        ));

        // 16-level i.i.d. uniform: mean entropy just under log2(16) = 4.
        let masks = crate::baseline::generate_white16(256, 1, 3).unwrap();
        let h = local_entropy(&masks[0], 32).unwrap();
        assert!((3.8..=4.0).contains(&h), "entropy {h}");

        // Binary masks never exceed 1 bit.
        let greens = crate::baseline::generate_white4(64, 1, 9).unwrap();
        let h4 = local_entropy(&greens[0], 16).unwrap();
        assert!(h4 <= 2.0 + 1e-12);
    }

    #[test]
    fn psnr_ambiguity_and_noise_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = Array2::from_shape_fn((64, 64), |_| rng.random_range(-PI..PI));
        let x = unit_phasor(&psi);
        // A pure global phase factor is removed: infinite PSNR.
        for k in 0..10 {
            let phi = rng.random_range(0.0..TAU);
            let shifted = x.mapv(|z| z * Complex64::from_polar(1.0, phi));
            assert!(psnr_phase(&x, &shifted).is_infinite(), "phi case {k}");
        }

        // i.i.d. phase errors of std σ: PSNR ≈ 10 log10((2π)²/σ²).
        let sigma = 0.1f64;
        let mut acc = 0.0;
        let trials = 20;
        for _ in 0..trials {
            let noisy = x.mapv(|z| {
                // Box-Muller sample of N(0, σ²).
                let u1: f64 = rng.random_range(1e-12..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                let g = (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos();
                z * Complex64::from_polar(1.0, sigma * g)
            });
            acc += psnr_phase(&x, &noisy);
        }
        let mean = acc / trials as f64;
        let expected = 10.0 * (TAU * TAU / (sigma * sigma)).log10();
        assert!((mean - expected).abs() < 0.5, "mean {mean} vs {expected}");
    }

    #[test]
    fn ssim_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = Array2::from_shape_fn((32, 32), |_| rng.random_range(0.1..TAU - 0.1));
        let x = unit_phasor(&psi);
        assert!((ssim_phase(&x, &x) - 1.0).abs() < 1e-12);

        // Invariant under a global unimodular factor on either argument.
        let shifted = x.mapv(|z| z * Complex64::from_polar(1.0, 0.7));
        assert!((ssim_phase(&x, &shifted) - 1.0).abs() < 1e-9);

        // Independent random phase maps score near zero.
        let psi2 = Array2::from_shape_fn((32, 32), |_| rng.random_range(0.1..TAU - 0.1));
        let y = unit_phasor(&psi2);
        assert!(ssim_phase(&x, &y).abs() < 0.1);
    }

    #[test]
    fn ssim_detects_structured_negation() {
        // Checkerboard phase image against its negation about π. The levels
        // must not be symmetric about π, or the negation collapses to a
        // global phase shift that alignment removes.
        let n = 44;
        let phase = Array2::from_shape_fn((n, n), |(i, j)| {
            if (i / 4 + j / 4) % 2 == 0 {
                0.7
            } else {
                2.2
            }
        });
        let x = unit_phasor(&phase);
        let negated = unit_phasor(&phase.mapv(|p| TAU - p));
        let s = ssim_phase(&x, &negated);
        assert!(s < 0.5, "ssim {s}");
    }

    #[test]
    fn axis_power_is_centered() {
        // Energy on one positive x-frequency column shows up right of center.
        let n = 16;
        let mut spec = Array2::zeros((n, n));
        for i in 0..n {
            spec[[i, 3]] = 1.0; // offset +3
        }
        spec[[0, 0]] += 0.5;
        let stats = spectrum_stats(&spec, 0.8).unwrap();
        assert_eq!(stats.axis_power_db.len(), n);
        let peak = stats
            .axis_power_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, n / 2 + 3);
    }
}
