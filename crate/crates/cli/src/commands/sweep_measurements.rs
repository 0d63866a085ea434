//! `sweep-measurements`: reconstruction quality as measurements are added,
//! from a 4-measurement designed-mask stack. Rows with k = 0 record the
//! random-phase-image baseline each trial is compared against.
//!
//! Section `[sweep_measurements]` keys: `max_k` (default 4), `image`
//! (default bumps), `trials` (default 3, varying the mask seed lane).

use crate::config::RunSettings;
use crate::manifest::{Csv, Manifest};
use crate::tasks;
use anyhow::Result;
use maskforge_core::field::unit_phasor;
use maskforge_core::mask_design::{design_optmask, DesignConfig};
use maskforge_core::metrics::{psnr_phase, ssim_phase};
use maskforge_core::reconstruct::tv_map_admm;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub struct KPoint {
    pub k: usize,
    pub trial: usize,
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn sweep(settings: &RunSettings) -> Result<Vec<KPoint>> {
    let file = &settings.file;
    let max_k: usize = file.num("sweep_measurements", "max_k", 4)?;
    let image = file.string("sweep_measurements", "image", "bumps");
    let trials: usize = file.num("sweep_measurements", "trials", 3)?;
    let n = settings.design.n;
    let x = tasks::load_object(&image, n)?;

    let jobs: Vec<(usize, usize)> = (0..trials)
        .flat_map(|t| (0..=max_k).map(move |k| (t, k)))
        .collect();

    let mut points: Vec<KPoint> = jobs
        .par_iter()
        .map(|&(trial, k)| -> Result<KPoint> {
            if k == 0 {
                // Random-phase baseline: what an uninformed guess scores.
                let mut rng =
                    ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(555 + trial as u64));
                let guess = unit_phasor(&Array2::from_shape_fn((n, n), |_| {
                    rng.random_range(0.0..std::f64::consts::TAU)
                }));
                return Ok(KPoint {
                    k,
                    trial,
                    psnr_db: psnr_phase(&x, &guess),
                    ssim: ssim_phase(&x, &guess),
                });
            }
            let cfg = DesignConfig {
                l_masks: max_k,
                rng_seed: settings.seed.wrapping_add(1000 * trial as u64),
                ..settings.design.clone()
            };
            let masks = design_optmask(&cfg)?;
            let meas = tasks::measure(&x, &masks, settings, cfg.rng_seed)?;
            let mut solver = settings.solver.clone();
            solver.track_objective = false;
            let res = tv_map_admm(&meas[..k], &masks[..k], &solver)?;
            Ok(KPoint {
                k,
                trial,
                psnr_db: psnr_phase(&x, &res.estimate),
                ssim: ssim_phase(&x, &res.estimate),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| (p.k, p.trial));
    Ok(points)
}

pub fn run(settings: RunSettings) -> Result<()> {
    let points = sweep(&settings)?;

    let mut csv = Csv::new("k,trial,psnr_db,ssim");
    for p in &points {
        crate::csv_row!(csv, "{},{},{:.4},{:.6}", p.k, p.trial, p.psnr_db, p.ssim);
    }
    let path = settings.out_dir.join("measurements.csv");
    csv.write(&path)?;

    let max_k = points.iter().map(|p| p.k).max().unwrap_or(0);
    for k in 0..=max_k {
        let of_k: Vec<f64> = points
            .iter()
            .filter(|p| p.k == k && p.psnr_db.is_finite())
            .map(|p| p.psnr_db)
            .collect();
        if !of_k.is_empty() {
            let mean = of_k.iter().sum::<f64>() / of_k.len() as f64;
            println!("k={k}: mean psnr {mean:.3} dB over {} trials", of_k.len());
        }
    }

    let mut manifest = Manifest::new("sweep-measurements");
    manifest.record("seed", settings.seed);
    manifest.output(&path);
    manifest.write(&settings.out_dir)?;
    Ok(())
}
