//! CDP intensity measurements under two fidelities.
//!
//! `DiscreteDft` is the exact zero-padded DFT model. `OpticalEmulation`
//! resolves each SLM pixel on an s×s subgrid so the masked field's spectrum
//! extends past the 0-th diffraction order: the energy falling outside that
//! band is recorded (and lost to the returned measurement), unmodulated
//! dead-zone gaps between pixel cells add a spatial bias, and the sensor
//! stage applies optional photon noise and bit-depth quantization.

use crate::error::{Error, Result};
use crate::fft::Dft2;
use crate::field::{freq_offset, offset_index, zero_pad, ComplexField};
use crate::mask_design::QuantizedMask;
use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Physical parameters of the measurement bench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalGeometry {
    /// Illumination wavelength in meters.
    pub wavelength: f64,
    /// Focal length of the transform lens in meters.
    pub focal_length: f64,
    /// SLM pixel pitch in meters.
    pub slm_pitch: f64,
    /// Sensor pixel pitch in meters.
    pub sensor_pitch: f64,
    /// Modulated area fraction of each SLM pixel, in (0, 1].
    pub fill_factor: f64,
}

impl OpticalGeometry {
    /// HeNe bench: λ = 632.8 nm, 8 µm SLM pitch, 5.86 µm sensor pitch,
    /// focal length chosen so the 0-th order spans 762 sensor pixels.
    pub fn bench_default() -> Self {
        OpticalGeometry {
            wavelength: 632.8e-9,
            focal_length: 0.05646,
            slm_pitch: 8e-6,
            sensor_pitch: 5.86e-6,
            fill_factor: 0.93,
        }
    }

    /// Sensor pixels across the 0-th diffraction order: `round(λf/(d·p))`.
    pub fn measurement_side(&self) -> usize {
        (self.wavelength * self.focal_length / (self.sensor_pitch * self.slm_pitch)).round()
            as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fill_factor > 0.0 && self.fill_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fill_factor must be in (0, 1], got {}",
                self.fill_factor
            )));
        }
        if self.wavelength <= 0.0
            || self.focal_length <= 0.0
            || self.slm_pitch <= 0.0
            || self.sensor_pitch <= 0.0
        {
            return Err(Error::InvalidConfig("geometry lengths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    DiscreteDft,
    OpticalEmulation,
}

/// How a measurement is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub fidelity: Fidelity,
    /// Subgrid resolution per SLM pixel; 1 for the discrete model, >= 2
    /// for the optical emulation.
    pub supersample: usize,
    /// Sensor bit depth; 0 means an ideal (unquantized) sensor.
    pub sensor_bits: u32,
    /// Expected photon count at the sensor's full-scale level (the same
    /// reference the quantizer saturates at), for a lossless mask at fixed
    /// illumination; 0 disables shot noise.
    pub photon_scale: f64,
    /// Measurement dimensions (the oversampled spectrum size).
    pub pad_to: (usize, usize),
    /// Cap on the supersampled transform side.
    pub dft_limit: usize,
}

/// Default cap on the supersampled transform side; the harness can override
/// it through its environment.
pub const DEFAULT_DFT_LIMIT: usize = 8192;

impl MeasurementModel {
    pub fn discrete(pad_to: (usize, usize)) -> Self {
        MeasurementModel {
            fidelity: Fidelity::DiscreteDft,
            supersample: 1,
            sensor_bits: 0,
            photon_scale: 0.0,
            pad_to,
            dft_limit: DEFAULT_DFT_LIMIT,
        }
    }

    pub fn optical(pad_to: (usize, usize), supersample: usize) -> Self {
        MeasurementModel {
            fidelity: Fidelity::OpticalEmulation,
            supersample,
            sensor_bits: 0,
            photon_scale: 0.0,
            pad_to,
            dft_limit: DEFAULT_DFT_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.fidelity {
            Fidelity::DiscreteDft if self.supersample != 1 => Err(Error::InvalidConfig(
                "DiscreteDft requires supersample = 1".into(),
            )),
            Fidelity::OpticalEmulation if self.supersample < 2 => Err(Error::InvalidConfig(
                "OpticalEmulation requires supersample >= 2".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// One nonnegative intensity measurement in standard DFT layout
/// (DC at `[0, 0]`; use an fftshift for display).
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMeasurement {
    pub values: Array2<f64>,
    pub mask_id: u32,
    pub model: MeasurementModel,
    /// Energy fraction outside the 0-th order band; exactly 0 for the
    /// discrete model.
    pub truncated_energy_fraction: f64,
}

/// Exact discrete model: `|DFT(x ∘ T)|²` on a zero-padded `pad_to` grid
/// with unitary normalization, so Parseval holds against `Σ|x∘T|²`.
pub fn cdp_intensity_discrete(
    x: &ComplexField,
    mask: &QuantizedMask,
    pad_to: (usize, usize),
) -> Result<IntensityMeasurement> {
    let n = mask.n();
    if x.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: (n, n),
            got: x.dim(),
        });
    }
    if pad_to.0 < n || pad_to.1 < n {
        return Err(Error::InvalidConfig(format!(
            "pad_to {pad_to:?} smaller than mask side {n}"
        )));
    }
    let masked = x * &mask.to_field();
    let mut field = zero_pad(&masked, pad_to.0, pad_to.1);
    Dft2::new(pad_to.0, pad_to.1).forward(&mut field);
    Ok(IntensityMeasurement {
        values: field.mapv(|z| z.norm_sqr()),
        mask_id: mask.mask_index,
        model: MeasurementModel::discrete(pad_to),
        truncated_energy_fraction: 0.0,
    })
}

/// Dead-cell count per pixel for a fill factor on an s×s subgrid,
/// capped so at least one cell stays modulated.
fn dead_cells(s: usize, fill_factor: f64) -> usize {
    let cells = s * s;
    (((1.0 - fill_factor) * cells as f64).round() as usize).min(cells - 1)
}

/// Subgrid cells of one pixel ordered border-first (ring order), so dead
/// cells claim the pixel boundary before the interior.
fn ring_order(s: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..s)
        .flat_map(|a| (0..s).map(move |b| (a, b)))
        .collect();
    let depth = |&(a, b): &(usize, usize)| a.min(b).min(s - 1 - a).min(s - 1 - b);
    // Within a ring, order from the bottom-right corner inward; any fixed
    // deterministic order works.
    cells.sort_by_key(|&(a, b)| (depth(&(a, b)), std::cmp::Reverse((a, b))));
    cells
}

/// Supersampled optical emulation.
///
/// Each SLM pixel of the masked object is resolved on an s×s subgrid whose
/// border cells transmit the incident beam unmodulated (phase 0, amplitude
/// 1) to model dead zones. The fine field is zero-padded so the 0-th order
/// band lands exactly on `pad_to` bins; the extracted band keeps the pixel
/// aperture envelope, so band-edge content is attenuated the way a real
/// sensor records it and the energy in higher diffraction orders is lost
/// (recorded as `truncated_energy_fraction`). As `supersample` grows the
/// band converges to the continuous Fraunhofer measurement; content far
/// inside the band matches the discrete model closely. Photon noise is
/// applied before sensor quantization.
pub fn cdp_intensity_optical(
    x: &ComplexField,
    mask: &QuantizedMask,
    geom: &OpticalGeometry,
    model: &MeasurementModel,
    noise_seed: u64,
) -> Result<IntensityMeasurement> {
    model.validate()?;
    geom.validate()?;
    if model.fidelity != Fidelity::OpticalEmulation {
        return Err(Error::InvalidConfig(
            "cdp_intensity_optical requires OpticalEmulation fidelity".into(),
        ));
    }
    let n = mask.n();
    if x.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: (n, n),
            got: x.dim(),
        });
    }
    if geom.measurement_side() < n {
        return Err(Error::InvalidConfig(format!(
            "geometry resolves only {} sensor pixels across the 0-th order, below the mask side {n}",
            geom.measurement_side()
        )));
    }
    let (m1, m2) = model.pad_to;
    if m1 < n || m2 < n {
        return Err(Error::InvalidConfig(format!(
            "pad_to {:?} smaller than mask side {n}",
            model.pad_to
        )));
    }
    let s = model.supersample;
    let (fine1, fine2) = (s * m1, s * m2);
    if fine1.max(fine2) > model.dft_limit {
        return Err(Error::EmulationTooLarge {
            side: fine1.max(fine2),
            limit: model.dft_limit,
        });
    }

    // Masked object resolved on the subgrid, dead cells transmitting 1.
    let masked = x * &mask.to_field();
    let dead = dead_cells(s, geom.fill_factor);
    let order = ring_order(s);
    let mut dead_cell = Array2::from_elem((s, s), false);
    for &(a, b) in order.iter().take(dead) {
        dead_cell[[a, b]] = true;
    }
    let mut fine: ComplexField = Array2::zeros((fine1, fine2));
    for j in 0..n {
        for k in 0..n {
            let v = masked[[j, k]];
            for a in 0..s {
                for b in 0..s {
                    fine[[s * j + a, s * k + b]] = if dead_cell[[a, b]] {
                        Complex64::new(1.0, 0.0)
                    } else {
                        v
                    };
                }
            }
        }
    }

    let dft = Dft2::new(fine1, fine2);
    dft.forward_raw(&mut fine);

    // Central band: |u| < M/2 per axis on the fine grid. Dividing by s²
    // normalizes the subgrid gain only, so the aperture envelope (≈1 at
    // DC, sinc-like rolloff toward the band edge) stays in the data.
    let total_energy: f64 = fine.iter().map(|z| z.norm_sqr()).sum();
    let norm = 1.0 / ((s * s) as f64 * ((m1 * m2) as f64).sqrt());
    let mut band: ComplexField = Array2::zeros((m1, m2));
    let mut band_energy = 0.0;
    for i in 0..m1 {
        let u = freq_offset(i, m1);
        let fi = offset_index(u, fine1);
        for j in 0..m2 {
            let v = freq_offset(j, m2);
            let fj = offset_index(v, fine2);
            let raw = fine[[fi, fj]];
            band_energy += raw.norm_sqr();
            band[[i, j]] = raw * norm;
        }
    }
    let truncated_energy_fraction = if total_energy > 0.0 {
        (1.0 - band_energy / total_energy).max(0.0)
    } else {
        0.0
    };

    let mut values = band.mapv(|z| z.norm_sqr());

    if model.photon_scale > 0.0 {
        let full = full_scale(&values);
        if full > 0.0 {
            // Illumination is fixed, not per-mask auto-exposed: a mask that
            // leaks more energy past the 0-th order delivers proportionally
            // fewer photons to the in-band bins.
            let scale =
                model.photon_scale * (1.0 - truncated_energy_fraction) / full;
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            values.mapv_inplace(|v| {
                let lambda = v * scale;
                if lambda > 0.0 {
                    let draw: f64 = Poisson::new(lambda).unwrap().sample(&mut rng);
                    draw / scale
                } else {
                    0.0
                }
            });
        }
    }

    if model.sensor_bits > 0 {
        quantize_sensor(&mut values, model.sensor_bits);
    }

    Ok(IntensityMeasurement {
        values,
        mask_id: mask.mask_index,
        model: *model,
        truncated_energy_fraction,
    })
}

/// Sensor full-scale level: the 99.99th-percentile bin value, i.e. the
/// exposure is set so only the unavoidable zero-order spike saturates.
/// Scaling to the maximum instead would waste the range on that spike.
fn full_scale(values: &Array2<f64>) -> f64 {
    let mut sorted: Vec<f64> = values.iter().cloned().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() as f64) * 0.9999) as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Quantize to `bits` with saturation at full scale.
fn quantize_sensor(values: &mut Array2<f64>, bits: u32) {
    let full = full_scale(values);
    if full <= 0.0 {
        return;
    }
    let levels = ((1u64 << bits) - 1) as f64;
    values.mapv_inplace(|v| (v.min(full) / full * levels).round() * full / levels);
}

/// Measure the object through each mask of a stack. Geometry may be omitted
/// for the discrete model; each mask uses the noise seed offset by its
/// position so the stack is reproducible.
pub fn measure_stack(
    x: &ComplexField,
    masks: &[QuantizedMask],
    geom: Option<&OpticalGeometry>,
    model: &MeasurementModel,
    noise_seed: u64,
) -> Result<Vec<IntensityMeasurement>> {
    model.validate()?;
    masks
        .par_iter()
        .enumerate()
        .map(|(i, mask)| {
            let l = i as u32 + 1;
            match model.fidelity {
                Fidelity::DiscreteDft => cdp_intensity_discrete(x, mask, model.pad_to),
                Fidelity::OpticalEmulation => {
                    let geom = geom.ok_or_else(|| {
                        Error::InvalidConfig("optical emulation requires a geometry".into())
                    })?;
                    cdp_intensity_optical(x, mask, geom, model, noise_seed.wrapping_add(l as u64))
                }
            }
            .map_err(|e| e.for_mask(l))
        })
        .collect()
}
