//! Recovery of a complex field from masked Fourier intensities.
//!
//! Solves the TV-regularized Poisson-MAP problem
//!
//! ```text
//! min_x  α_tv·‖∇x‖₁ + ½ Σ_l Σ_i (|z_i|² − 𝒳_i·log|z_i|²),   z_l = ℱ(T_l ∘ x)
//! ```
//!
//! with ADMM: one splitting variable per masked spectrum plus one for the
//! image gradient. The magnitude subproblem has a per-element closed form,
//! the x-update is a diagonal-plus-Laplacian solve in the transform domain,
//! and the gradient update is complex soft-thresholding (anisotropic TV
//! with periodic boundary).

use crate::error::{Error, Result};
use crate::fft::Dft2;
use crate::field::{unpad, zero_pad, ComplexField};
use crate::mask_design::QuantizedMask;
use crate::optics_sim::IntensityMeasurement;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Starting point for the nonconvex solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    /// Unit-modulus field with seeded i.i.d. uniform phases.
    Random,
    /// Mask-averaged adjoint of the root intensities with zero spectral phase.
    Backprojection,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// TV regularization weight; 0 disables the TV splitting entirely.
    pub tv_weight: f64,
    /// ADMM penalty parameter.
    pub admm_rho: f64,
    pub iterations: usize,
    pub init: InitMethod,
    pub seed: u64,
    /// Record the objective each iteration (the residual is always recorded).
    pub track_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tv_weight: 1e-3,
            admm_rho: 0.5,
            iterations: 200,
            init: InitMethod::Backprojection,
            seed: 0,
            track_objective: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    pub estimate: ComplexField,
    /// Objective value per iteration; empty when tracking is disabled.
    pub objective_trace: Vec<f64>,
    /// Relative measurement residual `‖|ℱ(T∘x)|² − 𝒳‖ / ‖𝒳‖` per iteration.
    pub residual_trace: Vec<f64>,
}

/// Remove the global phase ambiguity: returns `x·e^{-iθ*}` and `θ*`, where
/// `θ* = arg(Σ conj(ref)·x)` is the least-squares optimal unimodular shift.
pub fn global_phase_align(x: &ComplexField, reference: &ComplexField) -> (ComplexField, f64) {
    assert_eq!(x.dim(), reference.dim(), "dimension mismatch");
    let inner: Complex64 = reference
        .iter()
        .zip(x.iter())
        .map(|(&r, &v)| r.conj() * v)
        .sum();
    let theta = inner.arg();
    let rot = Complex64::from_polar(1.0, -theta);
    (x.mapv(|z| z * rot), theta)
}

/// Forward differences with periodic boundary: `(∂h x, ∂v x)`.
fn grad2(x: &ComplexField) -> (ComplexField, ComplexField) {
    let (r, c) = x.dim();
    let gh = Array2::from_shape_fn((r, c), |(i, j)| x[[i, (j + 1) % c]] - x[[i, j]]);
    let gv = Array2::from_shape_fn((r, c), |(i, j)| x[[(i + 1) % r, j]] - x[[i, j]]);
    (gh, gv)
}

/// Adjoint of [`grad2`].
fn grad2_adjoint(gh: &ComplexField, gv: &ComplexField) -> ComplexField {
    let (r, c) = gh.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        gh[[i, (j + c - 1) % c]] - gh[[i, j]] + gv[[(i + r - 1) % r, j]] - gv[[i, j]]
    })
}

/// Eigenvalues of `∇ᵀ∇` on the n×n periodic grid, in DFT order.
fn laplacian_symbol(r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |(i, j)| {
        let wi = TAU * i as f64 / r as f64;
        let wj = TAU * j as f64 / c as f64;
        (2.0 - 2.0 * wi.cos()) + (2.0 - 2.0 * wj.cos())
    })
}

/// Closed-form minimizer of `½(r² − 𝒳·log r²) + (ρ/2)(r − |v|)²` over r ≥ 0.
#[inline]
fn poisson_map_radius(meas: f64, v_abs: f64, rho: f64) -> f64 {
    let b = rho * v_abs;
    (b + (b * b + 4.0 * (1.0 + rho) * meas).sqrt()) / (2.0 * (1.0 + rho))
}

struct MeasurementChannel<'a> {
    mask: ComplexField,
    data: &'a Array2<f64>,
    z: ComplexField,
    dual: ComplexField,
}

/// TV-MAP reconstruction from a stack of intensity measurements.
pub fn tv_map_admm(
    measurements: &[IntensityMeasurement],
    masks: &[QuantizedMask],
    cfg: &SolverConfig,
) -> Result<ReconResult> {
    if measurements.is_empty() || measurements.len() != masks.len() {
        return Err(Error::InvalidConfig(format!(
            "need equal nonzero measurement and mask counts, got {} and {}",
            measurements.len(),
            masks.len()
        )));
    }
    if cfg.iterations < 1 || cfg.tv_weight < 0.0 || cfg.admm_rho <= 0.0 {
        return Err(Error::InvalidConfig(
            "iterations >= 1, tv_weight >= 0, admm_rho > 0 required".into(),
        ));
    }
    let n = masks[0].n();
    let pad = measurements[0].values.dim();
    if pad.0 < n || pad.1 < n {
        return Err(Error::DimensionMismatch {
            expected: (n, n),
            got: pad,
        });
    }
    for (m, t) in measurements.iter().zip(masks.iter()) {
        if t.n() != n || m.values.dim() != pad {
            return Err(Error::DimensionMismatch {
                expected: pad,
                got: m.values.dim(),
            });
        }
        if m.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidConfig(
                "measurements must be nonnegative".into(),
            ));
        }
        if m.values.sum() <= 0.0 {
            return Err(Error::DegenerateMeasurements);
        }
    }

    let dft_pad = Dft2::new(pad.0, pad.1);
    let dft_img = Dft2::new(n, n);
    let rho = cfg.admm_rho;
    let use_tv = cfg.tv_weight > 0.0;
    let l_count = measurements.len() as f64;

    let forward = |mask: &ComplexField, x: &ComplexField| -> ComplexField {
        let mut field = zero_pad(&(x * mask), pad.0, pad.1);
        dft_pad.forward(&mut field);
        field
    };
    let adjoint = |mask: &ComplexField, y: &ComplexField| -> ComplexField {
        let mut field = y.clone();
        dft_pad.inverse(&mut field);
        let cropped = unpad(&field, n, n);
        ndarray::Zip::from(&cropped)
            .and(mask)
            .map_collect(|&f, &t| f * t.conj())
    };

    // Initial estimate.
    let mut x: ComplexField = match cfg.init {
        InitMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Array2::from_shape_fn((n, n), |_| {
                Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
            })
        }
        InitMethod::Backprojection => {
            let mut acc: ComplexField = Array2::zeros((n, n));
            for (m, t) in measurements.iter().zip(masks.iter()) {
                let root = m.values.mapv(|v| Complex64::new(v.sqrt(), 0.0));
                acc = acc + adjoint(&t.to_field(), &root);
            }
            acc.mapv(|z| z / l_count)
        }
    };

    let mut channels: Vec<MeasurementChannel> = measurements
        .iter()
        .zip(masks.iter())
        .map(|(m, t)| {
            let mask = t.to_field();
            let z = forward(&mask, &x);
            MeasurementChannel {
                mask,
                data: &m.values,
                z,
                dual: Array2::zeros(pad),
            }
        })
        .collect();

    let lap = laplacian_symbol(n, n);
    let (mut g_h, mut g_v) = grad2(&x);
    let mut dual_h: ComplexField = Array2::zeros((n, n));
    let mut dual_v: ComplexField = Array2::zeros((n, n));

    let data_norm: f64 = measurements
        .iter()
        .map(|m| m.values.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();

    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        // x-update: data-consistency backprojection, optionally coupled to TV.
        let backprojected: ComplexField = channels
            .par_iter()
            .map(|ch| {
                let target = &ch.z - &ch.dual;
                adjoint(&ch.mask, &target)
            })
            .reduce(
                || Array2::zeros((n, n)),
                |a, b| a + b,
            );
        x = if use_tv {
            let mut rhs = backprojected + grad2_adjoint(&(&g_h - &dual_h), &(&g_v - &dual_v));
            dft_img.forward(&mut rhs);
            let mut spec = rhs;
            ndarray::Zip::from(&mut spec).and(&lap).for_each(|s, &l| {
                *s /= Complex64::new(l_count + l, 0.0);
            });
            dft_img.inverse(&mut spec);
            spec
        } else {
            backprojected.mapv(|z| z / l_count)
        };

        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Diverged { iteration: iter });
        }

        // z-update and duals, one channel at a time; transforms dominate.
        let residual_sq: f64 = channels
            .par_iter_mut()
            .map(|ch| {
                let fx = forward(&ch.mask, &x);
                let mut res = 0.0;
                ndarray::Zip::from(&mut ch.z)
                    .and(&ch.dual)
                    .and(&fx)
                    .and(ch.data)
                    .for_each(|z, u, &f, &meas| {
                        let v = f + u;
                        let r = poisson_map_radius(meas, v.norm(), rho);
                        *z = if v.norm() > 0.0 {
                            v * (r / v.norm())
                        } else {
                            Complex64::new(r, 0.0)
                        };
                        let d = f.norm_sqr() - meas;
                        res += d * d;
                    });
                // Scaled dual ascent.
                ndarray::Zip::from(&mut ch.dual)
                    .and(&fx)
                    .and(&ch.z)
                    .for_each(|u, &f, &z| *u += f - z);
                res
            })
            .sum();
        residual_trace.push(residual_sq.sqrt() / data_norm);

        if use_tv {
            let (dh, dv) = grad2(&x);
            let kappa = cfg.tv_weight / rho;
            let shrink = |t: Complex64| -> Complex64 {
                let m = t.norm();
                if m <= kappa {
                    Complex64::new(0.0, 0.0)
                } else {
                    t * ((m - kappa) / m)
                }
            };
            ndarray::Zip::from(&mut g_h)
                .and(&dh)
                .and(&dual_h)
                .for_each(|g, &d, &u| *g = shrink(d + u));
            ndarray::Zip::from(&mut g_v)
                .and(&dv)
                .and(&dual_v)
                .for_each(|g, &d, &u| *g = shrink(d + u));
            ndarray::Zip::from(&mut dual_h)
                .and(&dh)
                .and(&g_h)
                .for_each(|u, &d, &g| *u += d - g);
            ndarray::Zip::from(&mut dual_v)
                .and(&dv)
                .and(&g_v)
                .for_each(|u, &d, &g| *u += d - g);
        }

        if cfg.track_objective {
            objective_trace.push(objective_value(&channels, &x, cfg.tv_weight, &forward));
        }

        let _ = iter;
    }

    Ok(ReconResult {
        estimate: x,
        objective_trace,
        residual_trace,
    })
}

fn objective_value(
    channels: &[MeasurementChannel],
    x: &ComplexField,
    tv_weight: f64,
    forward: &impl Fn(&ComplexField, &ComplexField) -> ComplexField,
) -> f64 {
    let fidelity: f64 = channels
        .iter()
        .map(|ch| {
            let fx = forward(&ch.mask, x);
            fx.iter()
                .zip(ch.data.iter())
                .map(|(&z, &meas)| {
                    let p = z.norm_sqr().max(1e-300);
                    0.5 * (p - meas * p.ln())
                })
                .sum::<f64>()
        })
        .sum();
    let tv = if tv_weight > 0.0 {
        let (gh, gv) = grad2(x);
        gh.iter().map(|z| z.norm()).sum::<f64>() + gv.iter().map(|z| z.norm()).sum::<f64>()
    } else {
        0.0
    };
    tv_weight * tv + fidelity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::generate_white16;
    use crate::field::unit_phasor;
    use crate::optics_sim::{cdp_intensity_discrete, measure_stack, MeasurementModel};
    use std::f64::consts::PI;

    fn smooth_phase_object(n: usize) -> ComplexField {
        let psi = Array2::from_shape_fn((n, n), |(i, j)| {
            let x = i as f64 / n as f64 - 0.5;
            let y = j as f64 / n as f64 - 0.5;
            3.0 * (-8.0 * (x * x + y * y)).exp() + 1.5 * (TAU * x).sin() * (TAU * y).cos() + 2.5
        });
        unit_phasor(&psi)
    }

    #[test]
    fn phase_align_exact_shift() {
        let x = smooth_phase_object(16);
        let shifted = x.mapv(|z| z * Complex64::from_polar(1.0, PI / 3.0));
        let (aligned, theta) = global_phase_align(&shifted, &x);
        assert!((theta - PI / 3.0).abs() < 1e-12);
        for (a, b) in aligned.iter().zip(x.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let (_, theta0) = global_phase_align(&x, &x);
        assert!(theta0.abs() < 1e-12);
    }

    #[test]
    fn phase_align_beats_grid_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x: ComplexField = Array2::from_shape_fn((12, 12), |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let r: ComplexField = Array2::from_shape_fn((12, 12), |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let (aligned, _) = global_phase_align(&x, &r);
        let best: f64 = aligned
            .iter()
            .zip(r.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        for k in 0..360 {
            let phi = TAU * k as f64 / 360.0;
            let rot = Complex64::from_polar(1.0, -phi);
            let err: f64 = x
                .iter()
                .zip(r.iter())
                .map(|(a, b)| (a * rot - b).norm_sqr())
                .sum();
            assert!(best <= err + 1e-9);
        }
    }

    #[test]
    fn gradient_adjoint_consistency() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut rand_field = |n: usize| -> ComplexField {
            Array2::from_shape_fn((n, n), |_| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        };
        let x = rand_field(9);
        let gh = rand_field(9);
        let gv = rand_field(9);
        let (dx_h, dx_v) = grad2(&x);
        let lhs: Complex64 = dx_h
            .iter()
            .zip(gh.iter())
            .chain(dx_v.iter().zip(gv.iter()))
            .map(|(&a, &b)| a * b.conj())
            .sum();
        let adj = grad2_adjoint(&gh, &gv);
        let rhs: Complex64 = x.iter().zip(adj.iter()).map(|(&a, &b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn fixed_point_at_truth() {
        let n = 16;
        let x = smooth_phase_object(n);
        let masks = generate_white16(n, 2, 5).unwrap();
        let meas: Vec<_> = masks
            .iter()
            .map(|m| cdp_intensity_discrete(&x, m, (2 * n, 2 * n)).unwrap())
            .collect();
        // Start the solver at the truth: with α_tv = 0 it must stay there.
        let cfg = SolverConfig {
            tv_weight: 0.0,
            iterations: 5,
            ..Default::default()
        };
        // Reuse the solver init path by swapping in the truth afterwards is
        // not possible from outside, so check the fixed point analytically:
        // one manual ADMM round starting from the truth.
        let dft = Dft2::new(2 * n, 2 * n);
        let t0 = masks[0].to_field();
        let mut fx = zero_pad(&(&x * &t0), 2 * n, 2 * n);
        dft.forward(&mut fx);
        let mut stays = true;
        for (z, &m) in fx.iter().zip(meas[0].values.iter()) {
            let r = poisson_map_radius(m, z.norm(), cfg.admm_rho);
            if (r - z.norm()).abs() > 1e-6 * z.norm().max(1e-9) {
                stays = false;
            }
        }
        assert!(stays, "prox moved the magnitudes away from the truth");
    }

    #[test]
    fn noiseless_recovery_l4() {
        let n = 32;
        let x = smooth_phase_object(n);
        let masks = generate_white16(n, 4, 9).unwrap();
        let model = MeasurementModel::discrete((3 * n, 3 * n));
        let meas = measure_stack(&x, &masks, None, &model, 0).unwrap();
        let cfg = SolverConfig {
            tv_weight: 0.0,
            iterations: 300,
            ..Default::default()
        };
        let res = tv_map_admm(&meas, &masks, &cfg).unwrap();
        let psnr = crate::metrics::psnr_phase(&x, &res.estimate);
        assert!(psnr > 40.0, "phase PSNR {psnr}");
        // Forward-model consistency at a good solution.
        assert!(res.residual_trace.last().unwrap() < &1e-2);
        assert_eq!(res.residual_trace.len(), 300);
        assert!(res.objective_trace.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn unimodular_ambiguity_of_measurements() {
        let n = 24;
        let x = smooth_phase_object(n);
        let rotated = x.mapv(|z| z * Complex64::from_polar(1.0, 1.1));
        let masks = generate_white16(n, 4, 3).unwrap();
        let model = MeasurementModel::discrete((2 * n, 2 * n));
        let cfg = SolverConfig {
            tv_weight: 0.0,
            iterations: 250,
            ..Default::default()
        };
        let ma = measure_stack(&x, &masks, None, &model, 0).unwrap();
        let mb = measure_stack(&rotated, &masks, None, &model, 0).unwrap();
        let ra = tv_map_admm(&ma, &masks, &cfg).unwrap().estimate;
        let rb = tv_map_admm(&mb, &masks, &cfg).unwrap().estimate;
        let (rb_aligned, _) = global_phase_align(&rb, &ra);
        let err: f64 = ra
            .iter()
            .zip(rb_aligned.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = ra.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / scale < 1e-2, "relative gap {}", err / scale);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let n = 8;
        let masks = generate_white16(n, 1, 1).unwrap();
        let zero = IntensityMeasurement {
            values: Array2::zeros((n, n)),
            mask_id: 1,
            model: MeasurementModel::discrete((n, n)),
            truncated_energy_fraction: 0.0,
        };
        match tv_map_admm(&[zero], &masks, &SolverConfig::default()) {
            Err(Error::DegenerateMeasurements) => {}
            other => panic!("expected DegenerateMeasurements, got {other:?}"),
        }
    }
}
