//! Built-in test objects: license-clean synthetic stand-ins for the usual
//! natural and resolution-chart targets, plus grayscale-to-phase mapping.

use crate::field::{unit_phasor, ComplexField};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Map a grayscale array (values in [0, 1]) to a phase-only object with
/// phases `2π·g·255/256`, keeping white just below the 2π wrap.
pub fn phase_object_from_gray(gray: &Array2<f64>) -> ComplexField {
    unit_phasor(&gray.mapv(|g| TAU * g.clamp(0.0, 1.0) * 255.0 / 256.0))
}

/// Smooth blob scene: a few Gaussian bumps on a sinusoidal background.
pub fn bumps_phase(n: usize) -> ComplexField {
    let centers = [
        (0.3, 0.35, 0.012, 2.2),
        (0.68, 0.62, 0.02, -1.6),
        (0.55, 0.25, 0.006, 1.1),
        (0.25, 0.72, 0.015, 1.8),
    ];
    let psi = Array2::from_shape_fn((n, n), |(i, j)| {
        let x = i as f64 / n as f64;
        let y = j as f64 / n as f64;
        let mut p = 2.4 + 0.8 * (TAU * x).sin() * (TAU * y).cos();
        for &(cx, cy, var, amp) in &centers {
            let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            p += amp * (-d2 / (2.0 * var)).exp();
        }
        p.rem_euclid(TAU)
    });
    unit_phasor(&psi)
}

/// Zone-plate-like concentric rings, textured but smooth.
pub fn rings_phase(n: usize) -> ComplexField {
    let psi = Array2::from_shape_fn((n, n), |(i, j)| {
        let x = i as f64 / n as f64 - 0.5;
        let y = j as f64 / n as f64 - 0.5;
        let r2 = x * x + y * y;
        PI * (1.0 + (18.0 * r2 * PI).cos()) * (1.0 - r2).max(0.0) + 0.6
    });
    unit_phasor(&psi)
}

/// Natural-image-like texture: a random field with a 1/f-weighted spectrum,
/// normalized to span most of the phase range. Deterministic.
pub fn pink_texture_phase(n: usize) -> ComplexField {
    use crate::field::freq_offset;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x70696e6b);
    let mut spectrum: ComplexField = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let phase: f64 = rng.random_range(0.0..TAU);
            if i == 0 && j == 0 {
                continue;
            }
            let u = freq_offset(i, n) as f64;
            let v = freq_offset(j, n) as f64;
            let r = (u * u + v * v).sqrt();
            spectrum[[i, j]] = Complex64::from_polar(1.0 / (1.0 + r), phase);
        }
    }
    let field = crate::fft::ifft2(&spectrum);
    let real = field.mapv(|z| z.re);
    let lo = real.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let psi = real.mapv(|v| (v - lo) / (hi - lo) * TAU * 0.95);
    unit_phasor(&psi)
}

/// Spiral phase ramp around the image center.
pub fn vortex_phase(n: usize) -> ComplexField {
    let psi = Array2::from_shape_fn((n, n), |(i, j)| {
        let x = i as f64 / n as f64 - 0.5;
        let y = j as f64 / n as f64 - 0.5;
        (y.atan2(x) + PI).rem_euclid(TAU)
    });
    unit_phasor(&psi)
}

/// Two-level checkerboard with tiles of n/8 pixels.
pub fn checker_phase(n: usize) -> ComplexField {
    let tile = (n / 8).max(1);
    let psi = Array2::from_shape_fn((n, n), |(i, j)| {
        if (i / tile + j / tile) % 2 == 0 {
            0.7
        } else {
            2.8
        }
    });
    unit_phasor(&psi)
}

/// Binary resolution target: tri-bar groups at halving scales plus a square
/// landmark, as a real-valued transmission object.
pub fn usaf_target(n: usize) -> ComplexField {
    let mut amp = Array2::from_elem((n, n), 0.0f64);
    let fill = |r0: usize, c0: usize, h: usize, w: usize, amp_arr: &mut Array2<f64>| {
        for i in r0..(r0 + h).min(n) {
            for j in c0..(c0 + w).min(n) {
                amp_arr[[i, j]] = 1.0;
            }
        }
    };
    // Horizontal and vertical tri-bar groups at 1/2-scaling.
    let mut bar = n / 8;
    let mut row = n / 16;
    while bar >= 2 && row + 5 * bar < n {
        // Vertical bars.
        for k in 0..3 {
            fill(row, n / 16 + 2 * k * bar, 5 * bar, bar, &mut amp);
        }
        // Horizontal bars at the right.
        for k in 0..3 {
            fill(row + 2 * k * bar, n / 16 + 6 * bar, bar, 5 * bar, &mut amp);
        }
        row += 5 * bar + bar.max(2);
        bar /= 2;
    }
    // Landmark square.
    fill(n - n / 4, n - n / 4, n / 8, n / 8, &mut amp);
    amp.mapv(|a| Complex64::new(a, 0.0))
}

/// Look up a built-in object by name.
pub fn by_name(name: &str, n: usize) -> Option<ComplexField> {
    match name {
        "bumps" => Some(bumps_phase(n)),
        "rings" => Some(rings_phase(n)),
        "pink" => Some(pink_texture_phase(n)),
        "vortex" => Some(vortex_phase(n)),
        "checker" => Some(checker_phase(n)),
        "usaf" => Some(usaf_target(n)),
        _ => None,
    }
}

/// Names accepted by [`by_name`].
pub const BUILTIN_IMAGES: &[&str] = &["bumps", "rings", "pink", "vortex", "checker", "usaf"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_unit_modulus_or_binary() {
        let n = 64;
        for name in BUILTIN_IMAGES {
            let img = by_name(name, n).unwrap();
            assert_eq!(img.dim(), (n, n));
            if *name == "usaf" {
                assert!(img.iter().all(|z| z.re == 0.0 || z.re == 1.0));
                assert!(img.iter().any(|z| z.re == 1.0));
            } else {
                assert!(img.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            }
        }
        assert!(by_name("nope", n).is_none());
    }

    #[test]
    fn gray_mapping_avoids_wrap_collision() {
        let gray = Array2::from_shape_fn((4, 4), |(i, j)| (i * 4 + j) as f64 / 15.0);
        let obj = phase_object_from_gray(&gray);
        let lo = obj[[0, 0]].arg();
        let hi = obj[[3, 3]].arg().rem_euclid(TAU);
        assert!(lo.abs() < 1e-12);
        assert!(hi < TAU && hi > 6.0); // white maps just under 2π, not onto 0
    }
}
