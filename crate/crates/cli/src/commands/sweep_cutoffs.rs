//! `sweep-cutoffs`: measurement η̄ and mask entropy across passbands,
//! following the masked-image DFT-intensity procedure with L = 10 masks
//! per point, plus a binary green-noise row for the entropy comparison.
//!
//! Entropy here uses 8×8 tiles for multi-level masks (16×16 for binary):
//! cluster-size differences between nearby passbands are below the
//! resolution of larger tiles.
//!
//! Section `[sweep_cutoffs]` keys: `passbands` (semicolon-separated
//! `low:high` pairs), `l_masks` (default 10), `image` (default bumps).

use crate::config::RunSettings;
use crate::manifest::{Csv, Manifest};
use crate::tasks::{self, ETA_THRESHOLD};
use anyhow::Result;
use maskforge_core::baseline::generate_green_binary_approx;
use maskforge_core::mask_design::{design_optmask, DesignConfig, QuantizedMask, SpectralFilter};
use maskforge_core::metrics::{eta, local_entropy};
use maskforge_core::optics_sim::cdp_intensity_discrete;
use rayon::prelude::*;
use std::f64::consts::PI;

pub struct CutoffPoint {
    pub scheme: &'static str,
    pub low: f64,
    pub high: f64,
    pub eta_bar: f64,
    pub entropy: f64,
}

fn eta_bar_of(
    masks: &[QuantizedMask],
    x: &maskforge_core::ComplexField,
) -> Result<f64> {
    let n = masks[0].n();
    let mut acc = 0.0;
    for m in masks {
        let meas = cdp_intensity_discrete(x, m, (n, n))?;
        acc += eta(&meas.values, ETA_THRESHOLD)?;
    }
    Ok(acc / masks.len() as f64)
}

/// The sweep body, reusable by the acceptance harness.
pub fn sweep(settings: &RunSettings) -> Result<Vec<CutoffPoint>> {
    let file = &settings.file;
    let raw = file.string(
        "sweep_cutoffs",
        "passbands",
        "pi/4:pi/2; pi/5:pi/2; pi/3:pi/2; pi/5:pi/3; pi/2:4pi/5",
    );
    let mut passbands = Vec::new();
    for pair in raw.split(';') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (lo, hi) = pair
            .split_once(':')
            .ok_or_else(|| anyhow::anyhow!("passband {pair:?} must be low:high"))?;
        passbands.push((
            crate::config::parse_angle(lo)?,
            crate::config::parse_angle(hi)?,
        ));
    }
    let l_masks: usize = file.num("sweep_cutoffs", "l_masks", 10)?;
    let image = file.string("sweep_cutoffs", "image", "bumps");
    let n = settings.design.n;
    let x = tasks::load_object(&image, n)?;

    let mut points: Vec<CutoffPoint> = passbands
        .par_iter()
        .map(|&(low, high)| -> Result<CutoffPoint> {
            let cfg = DesignConfig {
                l_masks,
                filter: SpectralFilter::new(low, high)?,
                ..settings.design.clone()
            };
            let masks = design_optmask(&cfg)?;
            let eta_bar = eta_bar_of(&masks, &x)?;
            let block = 8;
            let entropy = masks
                .iter()
                .map(|m| local_entropy(m, block))
                .collect::<maskforge_core::Result<Vec<_>>>()?
                .iter()
                .sum::<f64>()
                / masks.len() as f64;
            Ok(CutoffPoint {
                scheme: "optmask",
                low,
                high,
                eta_bar,
                entropy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Binary green-noise approximation for the entropy gap comparison.
    let green_filter = maskforge_core::baseline::green_default_filter();
    let greens =
        generate_green_binary_approx(n, l_masks, settings.seed.wrapping_add(900), &green_filter)?;
    let green_eta = eta_bar_of(&greens, &x)?;
    let gblock = 16;
    let green_entropy = greens
        .iter()
        .map(|m| local_entropy(m, gblock))
        .collect::<maskforge_core::Result<Vec<_>>>()?
        .iter()
        .sum::<f64>()
        / greens.len() as f64;
    points.push(CutoffPoint {
        scheme: "green",
        low: green_filter.low_cutoff,
        high: green_filter.high_cutoff,
        eta_bar: green_eta,
        entropy: green_entropy,
    });
    Ok(points)
}

pub fn run(settings: RunSettings, with_recon: bool) -> Result<()> {
    let points = sweep(&settings)?;

    let mut csv = Csv::new("scheme,low_over_pi,high_over_pi,eta_bar,entropy");
    for p in &points {
        crate::csv_row!(
            csv,
            "{},{:.6},{:.6},{:.6e},{:.6}",
            p.scheme,
            p.low / PI,
            p.high / PI,
            p.eta_bar,
            p.entropy
        );
        println!(
            "{} ({:.3}pi, {:.3}pi): eta_bar={:.5} entropy={:.3}",
            p.scheme,
            p.low / PI,
            p.high / PI,
            p.eta_bar,
            p.entropy
        );
    }
    let path = settings.out_dir.join("cutoffs.csv");
    csv.write(&path)?;

    let mut manifest = Manifest::new("sweep-cutoffs");
    manifest.record("seed", settings.design.rng_seed);
    manifest.record("n", settings.design.n);
    manifest.output(&path);

    if with_recon {
        let image = settings.file.string("sweep_cutoffs", "image", "bumps");
        let n = settings.design.n;
        let x = tasks::load_object(&image, n)?;
        let mut recon_csv = Csv::new("low_over_pi,high_over_pi,psnr_db,ssim");
        for p in points.iter().filter(|p| p.scheme == "optmask") {
            let cfg = DesignConfig {
                l_masks: settings.measurements.max(1),
                filter: SpectralFilter::new(p.low, p.high)?,
                ..settings.design.clone()
            };
            let masks = design_optmask(&cfg)?;
            let meas = tasks::measure(&x, &masks, &settings, settings.seed)?;
            let best = tasks::reconstruct_best(&meas, &masks, &x, &settings, settings.seed)?;
            crate::csv_row!(
                recon_csv,
                "{:.6},{:.6},{:.4},{:.6}",
                p.low / PI,
                p.high / PI,
                best.best.psnr_db,
                best.best.ssim
            );
        }
        let recon_path = settings.out_dir.join("cutoffs_recon.csv");
        recon_csv.write(&recon_path)?;
        manifest.output(&recon_path);
    }

    manifest.write(&settings.out_dir)?;
    Ok(())
}
