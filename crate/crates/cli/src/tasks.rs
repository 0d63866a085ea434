//! Pipeline pieces shared by several commands.

use crate::config::{RunSettings, Scheme};
use anyhow::{anyhow, bail, Context, Result};
use maskforge_core::baseline;
use maskforge_core::field::ComplexField;
use maskforge_core::images;
use maskforge_core::io;
use maskforge_core::mask_design::{self, DesignConfig, QuantizedMask};
use maskforge_core::metrics;
use maskforge_core::optics_sim::{measure_stack, IntensityMeasurement};
use maskforge_core::reconstruct::{tv_map_admm, InitMethod, ReconResult, SolverConfig};
use std::path::{Path, PathBuf};

/// Threshold of the high-frequency energy region.
pub const ETA_THRESHOLD: f64 = 0.8;

/// Load a test object: builtin name or a PGM path mapped to a phase object.
pub fn load_object(name: &str, n: usize) -> Result<ComplexField> {
    if let Some(img) = images::by_name(name, n) {
        return Ok(img);
    }
    let path = Path::new(name);
    let gray = io::read_pgm(path).with_context(|| format!("loading image {name:?}"))?;
    if gray.dim() != (n, n) {
        bail!(
            "image {name:?} is {:?}, expected {n}x{n} to match the mask side",
            gray.dim()
        );
    }
    Ok(images::phase_object_from_gray(&gray))
}

/// Generate the mask set of a scheme on its deterministic seed lane.
pub fn scheme_masks(scheme: Scheme, settings: &RunSettings) -> Result<Vec<QuantizedMask>> {
    let n = settings.design.n;
    let l = settings.design.l_masks;
    let seed = settings.seed.wrapping_add(scheme.seed_offset());
    let masks = match scheme {
        Scheme::OptMask => {
            let cfg = DesignConfig {
                rng_seed: seed,
                ..settings.design.clone()
            };
            mask_design::design_optmask(&cfg)?
        }
        Scheme::GreenBinaryApprox => baseline::generate_green_binary_approx(
            n,
            l,
            seed,
            &baseline::green_default_filter(),
        )?,
        Scheme::White16 => baseline::generate_white16(n, l, seed)?,
        Scheme::White4 => baseline::generate_white4(n, l, seed)?,
    };
    Ok(masks)
}

/// Entropy block size: 32 for multi-level masks, 16 for binary, clamped to
/// divide the mask side.
pub fn entropy_block(levels: usize, n: usize) -> usize {
    let want = if levels <= 2 { 16 } else { 32 };
    let mut b = want.min(n);
    while n % b != 0 {
        b /= 2;
    }
    b.max(1)
}

/// Measure the object through a mask stack using the configured model.
pub fn measure(
    x: &ComplexField,
    masks: &[QuantizedMask],
    settings: &RunSettings,
    noise_seed: u64,
) -> Result<Vec<IntensityMeasurement>> {
    Ok(measure_stack(
        x,
        masks,
        Some(&settings.geometry),
        &settings.model,
        noise_seed,
    )?)
}

/// One reconstruction trial's score.
#[derive(Debug, Clone)]
pub struct TrialScore {
    pub trial: usize,
    pub tv_weight: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Best-of-trials reconstruction following the comparison protocol:
/// trial 0 starts from backprojection, later trials from seeded random
/// fields; every trial tries each TV weight of the grid and the highest
/// phase-PSNR estimate wins.
pub struct BestRecon {
    pub estimate: ComplexField,
    pub best: TrialScore,
    pub scores: Vec<TrialScore>,
}

pub fn reconstruct_best(
    measurements: &[IntensityMeasurement],
    masks: &[QuantizedMask],
    truth: &ComplexField,
    settings: &RunSettings,
    trial_seed_base: u64,
) -> Result<BestRecon> {
    let grid: Vec<f64> = if settings.tv_grid.is_empty() {
        vec![settings.solver.tv_weight]
    } else {
        settings.tv_grid.clone()
    };
    let mut scores = Vec::new();
    let mut best: Option<(ComplexField, TrialScore)> = None;
    for trial in 0..settings.trials {
        let mut trial_best: Option<(ComplexField, TrialScore)> = None;
        for &tv in &grid {
            let cfg = SolverConfig {
                tv_weight: tv,
                init: if trial == 0 {
                    InitMethod::Backprojection
                } else {
                    InitMethod::Random
                },
                seed: trial_seed_base.wrapping_add(trial as u64),
                track_objective: false,
                ..settings.solver.clone()
            };
            let res: ReconResult = tv_map_admm(measurements, masks, &cfg)?;
            let psnr_db = metrics::psnr_phase(truth, &res.estimate);
            let ssim = metrics::ssim_phase(truth, &res.estimate);
            let score = TrialScore {
                trial,
                tv_weight: tv,
                psnr_db,
                ssim,
            };
            if trial_best.as_ref().map_or(true, |(_, s)| psnr_db > s.psnr_db) {
                trial_best = Some((res.estimate, score));
            }
        }
        let (estimate, score) = trial_best.expect("grid is never empty");
        scores.push(score.clone());
        if best.as_ref().map_or(true, |(_, s)| score.psnr_db > s.psnr_db) {
            best = Some((estimate, score));
        }
    }
    let (estimate, best) = best.expect("trials >= 1");
    Ok(BestRecon {
        estimate,
        best,
        scores,
    })
}

/// Mean η of a measurement stack.
pub fn mean_eta(measurements: &[IntensityMeasurement]) -> Result<f64> {
    let mut acc = 0.0;
    for m in measurements {
        acc += metrics::eta(&m.values, ETA_THRESHOLD)?;
    }
    Ok(acc / measurements.len() as f64)
}

/// All OMSK files of a directory (or the file itself), ordered by name.
pub fn collect_omsk(path: &Path) -> Result<Vec<PathBuf>> {
    collect_ext(path, "omsk")
}

/// All OMSI files of a directory (or the file itself), ordered by name.
pub fn collect_omsi(path: &Path) -> Result<Vec<PathBuf>> {
    collect_ext(path, "omsi")
}

fn collect_ext(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {path:?}"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == ext).unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(anyhow!("no .{ext} files under {path:?}"));
    }
    Ok(files)
}

pub fn load_masks(path: &Path) -> Result<Vec<QuantizedMask>> {
    collect_omsk(path)?
        .iter()
        .map(|p| Ok(io::read_omsk(p)?.0))
        .collect()
}

pub fn load_measurements(path: &Path) -> Result<Vec<IntensityMeasurement>> {
    collect_omsi(path)?
        .iter()
        .map(|p| Ok(io::read_omsi(p)?))
        .collect()
}
