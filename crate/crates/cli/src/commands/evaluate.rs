//! `evaluate`: score an estimate against ground truth and emit the
//! per-mask metrics CSV.

use crate::config::RunSettings;
use crate::manifest::{Csv, Manifest};
use crate::tasks::{self, ETA_THRESHOLD};
use anyhow::Result;
use maskforge_core::io::read_complex_raw;
use maskforge_core::metrics;
use std::path::Path;

#[allow(clippy::too_many_arguments)]
pub fn run(
    settings: RunSettings,
    estimate: &Path,
    truth: &str,
    masks: Option<&Path>,
    measurements: Option<&Path>,
    scheme: &str,
    trial: usize,
) -> Result<()> {
    let est = read_complex_raw(estimate)?;
    let truth_field = tasks::load_object(truth, est.nrows())?;
    let psnr = metrics::psnr_phase(&truth_field, &est);
    let ssim = metrics::ssim_phase(&truth_field, &est);

    let masks = masks.map(tasks::load_masks).transpose()?;
    let meas = measurements.map(tasks::load_measurements).transpose()?;

    let mut csv = Csv::new(
        "scheme,mask_id,trial,eta,entropy,psnr_db,ssim,truncated_energy_fraction",
    );
    let count = masks
        .as_ref()
        .map(|m| m.len())
        .or(meas.as_ref().map(|m| m.len()))
        .unwrap_or(1);
    for i in 0..count {
        let mask = masks.as_ref().and_then(|m| m.get(i));
        let m = meas.as_ref().and_then(|m| m.get(i));
        let mask_id = mask
            .map(|q| q.mask_index)
            .or(m.map(|m| m.mask_id))
            .unwrap_or(i as u32 + 1);
        let eta = m
            .map(|m| metrics::eta(&m.values, ETA_THRESHOLD))
            .transpose()?
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_default();
        let entropy = mask
            .map(|q| metrics::local_entropy(q, tasks::entropy_block(q.codebook.levels(), q.n())))
            .transpose()?
            .map(|v| format!("{v:.6}"))
            .unwrap_or_default();
        let trunc = m
            .map(|m| format!("{:.6e}", m.truncated_energy_fraction))
            .unwrap_or_default();
        crate::csv_row!(
            csv,
            "{scheme},{mask_id},{trial},{eta},{entropy},{psnr:.4},{ssim:.6},{trunc}",
            psnr = psnr,
            ssim = ssim
        );
    }
    let path = settings.out_dir.join("metrics.csv");
    csv.write(&path)?;

    let mut manifest = Manifest::new("evaluate");
    manifest.record("estimate", estimate.display());
    manifest.record("truth", truth);
    manifest.record("scheme", scheme);
    manifest.output(&path);
    manifest.write(&settings.out_dir)?;
    println!("psnr={psnr:.3} dB ssim={ssim:.4}");
    Ok(())
}
