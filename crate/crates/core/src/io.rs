//! File formats: OMSK mask containers, OMSI intensity containers, PGM
//! images, raw float64 pairs, and the key=value design sidecar.
//!
//! All writers go through a write-then-rename so partially written files
//! never land at the destination path.

use crate::error::{Error, Result};
use crate::field::{fftshift, ComplexField};
use crate::mask_design::{Codebook, DesignConfig, QuantizedMask, SpectralFilter};
use crate::optics_sim::{Fidelity, IntensityMeasurement, MeasurementModel};
use ndarray::Array2;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const OMSK_MAGIC: &[u8; 4] = b"OMSK";
const OMSI_MAGIC: &[u8; 4] = b"OMSI";

/// Write bytes atomically: to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp.partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_exact_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_exact_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_exact_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// OMSK v1: little-endian `magic "OMSK", u32 version, u32 n, u32 m_levels,
/// u32 mask_index, u64 seed`, then M codebook radians as f64 and n·n u16
/// indices in row-major order.
pub fn write_omsk(path: &Path, mask: &QuantizedMask, seed: u64) -> Result<()> {
    let n = mask.n();
    let mut buf =
        Vec::with_capacity(24 + 8 * mask.codebook.levels() + 2 * n * n);
    buf.extend_from_slice(OMSK_MAGIC);
    buf.extend_from_slice(&1u32.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(mask.codebook.levels() as u32).to_le_bytes());
    buf.extend_from_slice(&mask.mask_index.to_le_bytes());
    buf.extend_from_slice(&seed.to_le_bytes());
    for &e in mask.codebook.entries() {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    for &i in mask.indices.iter() {
        buf.extend_from_slice(&i.to_le_bytes());
    }
    write_atomic(path, &buf)
}

/// Read an OMSK file, returning the mask and the seed recorded for it.
pub fn read_omsk(path: &Path) -> Result<(QuantizedMask, u64)> {
    let mut f = fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != OMSK_MAGIC {
        return Err(Error::Format(format!("{path:?}: not an OMSK file")));
    }
    let version = read_exact_u32(&mut f)?;
    if version != 1 {
        return Err(Error::Format(format!("unsupported OMSK version {version}")));
    }
    let n = read_exact_u32(&mut f)? as usize;
    let m_levels = read_exact_u32(&mut f)? as usize;
    let mask_index = read_exact_u32(&mut f)?;
    let seed = read_exact_u64(&mut f)?;
    let codebook = Codebook::new(m_levels)?;
    for &expected in codebook.entries() {
        let got = read_exact_f64(&mut f)?;
        if got != expected {
            return Err(Error::Format(format!(
                "codebook entry mismatch: {got} != {expected}"
            )));
        }
    }
    let mut raw = vec![0u8; 2 * n * n];
    f.read_exact(&mut raw)?;
    let mut indices = Array2::zeros((n, n));
    for (k, v) in indices.iter_mut().enumerate() {
        let i = u16::from_le_bytes([raw[2 * k], raw[2 * k + 1]]);
        if i as usize >= m_levels {
            return Err(Error::Format(format!("index {i} out of codebook range")));
        }
        *v = i;
    }
    Ok((
        QuantizedMask {
            indices,
            codebook,
            mask_index,
        },
        seed,
    ))
}

/// OMSI v1: little-endian `magic "OMSI", u32 version, u32 rows, u32 cols,
/// u32 mask_id, u32 fidelity (0 = dft, 1 = optical), u32 supersample,
/// u32 sensor_bits, f64 photon_scale, f64 truncated_energy_fraction`,
/// then rows·cols f64 values in row-major order.
pub fn write_omsi(path: &Path, m: &IntensityMeasurement) -> Result<()> {
    let (rows, cols) = m.values.dim();
    let mut buf = Vec::with_capacity(48 + 8 * rows * cols);
    buf.extend_from_slice(OMSI_MAGIC);
    buf.extend_from_slice(&1u32.to_le_bytes());
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    buf.extend_from_slice(&m.mask_id.to_le_bytes());
    let fid = match m.model.fidelity {
        Fidelity::DiscreteDft => 0u32,
        Fidelity::OpticalEmulation => 1u32,
    };
    buf.extend_from_slice(&fid.to_le_bytes());
    buf.extend_from_slice(&(m.model.supersample as u32).to_le_bytes());
    buf.extend_from_slice(&m.model.sensor_bits.to_le_bytes());
    buf.extend_from_slice(&m.model.photon_scale.to_le_bytes());
    buf.extend_from_slice(&m.truncated_energy_fraction.to_le_bytes());
    for &v in m.values.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &buf)
}

pub fn read_omsi(path: &Path) -> Result<IntensityMeasurement> {
    let mut f = fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != OMSI_MAGIC {
        return Err(Error::Format(format!("{path:?}: not an OMSI file")));
    }
    let version = read_exact_u32(&mut f)?;
    if version != 1 {
        return Err(Error::Format(format!("unsupported OMSI version {version}")));
    }
    let rows = read_exact_u32(&mut f)? as usize;
    let cols = read_exact_u32(&mut f)? as usize;
    let mask_id = read_exact_u32(&mut f)?;
    let fidelity = match read_exact_u32(&mut f)? {
        0 => Fidelity::DiscreteDft,
        1 => Fidelity::OpticalEmulation,
        other => return Err(Error::Format(format!("unknown fidelity tag {other}"))),
    };
    let supersample = read_exact_u32(&mut f)? as usize;
    let sensor_bits = read_exact_u32(&mut f)?;
    let photon_scale = read_exact_f64(&mut f)?;
    let truncated_energy_fraction = read_exact_f64(&mut f)?;
    let mut raw = vec![0u8; 8 * rows * cols];
    f.read_exact(&mut raw)?;
    let mut values = Array2::zeros((rows, cols));
    for (k, v) in values.iter_mut().enumerate() {
        *v = f64::from_le_bytes(raw[8 * k..8 * k + 8].try_into().unwrap());
    }
    Ok(IntensityMeasurement {
        values,
        mask_id,
        model: MeasurementModel {
            fidelity,
            supersample,
            sensor_bits,
            photon_scale,
            pad_to: (rows, cols),
            dft_limit: crate::optics_sim::DEFAULT_DFT_LIMIT,
        },
        truncated_energy_fraction,
    })
}

/// 16-bit binary PGM (`P5`, maxval 65535, big-endian samples) of an
/// intensity measurement, fftshifted for display and scaled linearly to
/// its maximum.
pub fn write_intensity_pgm(path: &Path, m: &IntensityMeasurement) -> Result<()> {
    let shifted = fftshift(&m.values);
    let (rows, cols) = shifted.dim();
    let max = shifted.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let mut buf = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    for &v in shifted.iter() {
        let q = ((v / max) * 65535.0).round() as u16;
        buf.extend_from_slice(&q.to_be_bytes());
    }
    write_atomic(path, &buf)
}

/// 8-bit binary PGM of a phase map, `[0, 2π)` mapped onto 0..=255.
pub fn write_phase_pgm(path: &Path, field: &ComplexField) -> Result<()> {
    let (rows, cols) = field.dim();
    let mut buf = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for z in field.iter() {
        let mut p = z.arg();
        if p < 0.0 {
            p += std::f64::consts::TAU;
        }
        buf.push((p / std::f64::consts::TAU * 256.0).floor().min(255.0) as u8);
    }
    write_atomic(path, &buf)
}

/// Read a binary PGM (`P5`, 8- or 16-bit) as a gray array scaled by maxval.
pub fn read_pgm(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        // Skip whitespace and `#` comment lines.
        while pos < bytes.len() {
            let c = bytes[pos];
            if c == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Format("only binary P5 PGM supported".into()));
    }
    let cols: usize = token()?.parse().map_err(|_| Error::Format("bad width".into()))?;
    let rows: usize = token()?.parse().map_err(|_| Error::Format("bad height".into()))?;
    let maxval: usize = token()?.parse().map_err(|_| Error::Format("bad maxval".into()))?;
    pos += 1; // single whitespace after maxval
    let mut out = Array2::zeros((rows, cols));
    if maxval < 256 {
        if bytes.len() < pos + rows * cols {
            return Err(Error::Format("truncated PGM payload".into()));
        }
        for (k, v) in out.iter_mut().enumerate() {
            *v = bytes[pos + k] as f64 / maxval as f64;
        }
    } else {
        if bytes.len() < pos + 2 * rows * cols {
            return Err(Error::Format("truncated PGM payload".into()));
        }
        for (k, v) in out.iter_mut().enumerate() {
            let hi = bytes[pos + 2 * k] as u16;
            let lo = bytes[pos + 2 * k + 1] as u16;
            *v = ((hi << 8) | lo) as f64 / maxval as f64;
        }
    }
    Ok(out)
}

/// Paired raw float64 little-endian arrays (real then imaginary parts) plus
/// a small key=value metadata sidecar with the dimensions.
pub fn write_complex_raw(stem: &Path, field: &ComplexField) -> Result<()> {
    let (rows, cols) = field.dim();
    let mut re = Vec::with_capacity(8 * rows * cols);
    let mut im = Vec::with_capacity(8 * rows * cols);
    for z in field.iter() {
        re.extend_from_slice(&z.re.to_le_bytes());
        im.extend_from_slice(&z.im.to_le_bytes());
    }
    write_atomic(&stem.with_extension("re.f64"), &re)?;
    write_atomic(&stem.with_extension("im.f64"), &im)?;
    let meta = format!("rows = {rows}\ncols = {cols}\nlayout = row-major\nendian = little\n");
    write_atomic(&stem.with_extension("meta"), meta.as_bytes())
}

pub fn read_complex_raw(stem: &Path) -> Result<ComplexField> {
    let meta = fs::read_to_string(stem.with_extension("meta"))?;
    let mut rows = 0usize;
    let mut cols = 0usize;
    for line in meta.lines() {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "rows" => rows = v.trim().parse().map_err(|_| Error::Format("bad rows".into()))?,
                "cols" => cols = v.trim().parse().map_err(|_| Error::Format("bad cols".into()))?,
                _ => {}
            }
        }
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format("metadata missing dimensions".into()));
    }
    let re = fs::read(stem.with_extension("re.f64"))?;
    let im = fs::read(stem.with_extension("im.f64"))?;
    if re.len() != 8 * rows * cols || im.len() != 8 * rows * cols {
        return Err(Error::Format("raw payload size mismatch".into()));
    }
    let mut out = Array2::zeros((rows, cols));
    for (k, z) in out.iter_mut().enumerate() {
        *z = num_complex::Complex64::new(
            f64::from_le_bytes(re[8 * k..8 * k + 8].try_into().unwrap()),
            f64::from_le_bytes(im[8 * k..8 * k + 8].try_into().unwrap()),
        );
    }
    Ok(out)
}

/// Key=value sidecar recording a full design configuration.
pub fn write_design_sidecar(path: &Path, cfg: &DesignConfig) -> Result<()> {
    let text = format!(
        "format = omsk-design/1\n\
         n = {}\n\
         alpha = {:e}\n\
         beta = {:e}\n\
         delta = {:e}\n\
         max_iters_stage1 = {}\n\
         g_loops = {}\n\
         m_levels = {}\n\
         l_masks = {}\n\
         filter_shape = ideal-annular\n\
         filter_low = {:.17e}\n\
         filter_high = {:.17e}\n\
         rng_seed = {}\n",
        cfg.n,
        cfg.alpha,
        cfg.beta,
        cfg.delta,
        cfg.max_iters_stage1,
        cfg.g_loops,
        cfg.m_levels,
        cfg.l_masks,
        cfg.filter.low_cutoff,
        cfg.filter.high_cutoff,
        cfg.rng_seed,
    );
    write_atomic(path, text.as_bytes())
}

pub fn read_design_sidecar(path: &Path) -> Result<DesignConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = DesignConfig::default_design();
    let mut low = cfg.filter.low_cutoff;
    let mut high = cfg.filter.high_cutoff;
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else { continue };
        let (k, v) = (k.trim(), v.trim());
        let bad = |what: &str| Error::Format(format!("sidecar: bad {what}: {v}"));
        match k {
            "n" => cfg.n = v.parse().map_err(|_| bad("n"))?,
            "alpha" => cfg.alpha = v.parse().map_err(|_| bad("alpha"))?,
            "beta" => cfg.beta = v.parse().map_err(|_| bad("beta"))?,
            "delta" => cfg.delta = v.parse().map_err(|_| bad("delta"))?,
            "max_iters_stage1" => {
                cfg.max_iters_stage1 = v.parse().map_err(|_| bad("max_iters_stage1"))?
            }
            "g_loops" => cfg.g_loops = v.parse().map_err(|_| bad("g_loops"))?,
            "m_levels" => cfg.m_levels = v.parse().map_err(|_| bad("m_levels"))?,
            "l_masks" => cfg.l_masks = v.parse().map_err(|_| bad("l_masks"))?,
            "filter_low" => low = v.parse().map_err(|_| bad("filter_low"))?,
            "filter_high" => high = v.parse().map_err(|_| bad("filter_high"))?,
            "rng_seed" => cfg.rng_seed = v.parse().map_err(|_| bad("rng_seed"))?,
            _ => {}
        }
    }
    cfg.filter = SpectralFilter::new(low, high)?;
    cfg.validate()?;
    Ok(cfg)
}
