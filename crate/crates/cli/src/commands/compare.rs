//! `compare`: design or generate each scheme's masks, simulate the
//! configured test images, reconstruct with best-of-trials selection, and
//! emit per-mask metrics plus a per-scheme summary.

use crate::config::{RunSettings, Scheme};
use crate::manifest::{Csv, Manifest};
use crate::tasks::{self, ETA_THRESHOLD};
use anyhow::Result;
use maskforge_core::io::{write_omsi, write_omsk, write_phase_pgm};
use maskforge_core::metrics::{eta, local_entropy};
use maskforge_core::optics_sim::Fidelity;
use rayon::prelude::*;

pub struct SchemeOutcome {
    pub image: String,
    pub scheme: Scheme,
    pub best_psnr_db: f64,
    pub best_ssim: f64,
    pub mean_eta: f64,
    pub mean_entropy: f64,
    pub mean_truncated: f64,
    pub per_mask: Vec<(u32, f64, f64, f64)>, // (mask_id, eta, entropy, truncated)
    pub trial_scores: Vec<tasks::TrialScore>,
    pub estimate: maskforge_core::ComplexField,
    pub masks: Vec<maskforge_core::mask_design::QuantizedMask>,
    pub measurements: Vec<maskforge_core::optics_sim::IntensityMeasurement>,
}

/// The comparison body, reusable by the acceptance harness.
pub fn compare(settings: &RunSettings) -> Result<Vec<SchemeOutcome>> {
    let jobs: Vec<(usize, String, Scheme)> = settings
        .images
        .iter()
        .enumerate()
        .flat_map(|(i, img)| {
            settings
                .schemes
                .iter()
                .map(move |&s| (i, img.clone(), s))
        })
        .collect();

    jobs.par_iter()
        .map(|&(image_idx, ref image, scheme)| -> Result<SchemeOutcome> {
            let n = settings.design.n;
            let x = tasks::load_object(image, n)?;
            let masks = tasks::scheme_masks(scheme, settings)?;
            let used = &masks[..settings.measurements.min(masks.len())];
            let noise_seed = settings
                .seed
                .wrapping_add(scheme.seed_offset())
                .wrapping_add(500 + 97 * image_idx as u64);
            let measurements = tasks::measure(&x, used, settings, noise_seed)?;

            let mut per_mask = Vec::new();
            let mut mean_eta = 0.0;
            let mut mean_entropy = 0.0;
            let mut mean_truncated = 0.0;
            for (mask, m) in used.iter().zip(measurements.iter()) {
                let e = eta(&m.values, ETA_THRESHOLD)?;
                let block = tasks::entropy_block(mask.codebook.levels(), n);
                let h = local_entropy(mask, block)?;
                per_mask.push((mask.mask_index, e, h, m.truncated_energy_fraction));
                mean_eta += e;
                mean_entropy += h;
                mean_truncated += m.truncated_energy_fraction;
            }
            let count = per_mask.len() as f64;
            mean_eta /= count;
            mean_entropy /= count;
            mean_truncated /= count;

            let trial_base = settings
                .seed
                .wrapping_add(scheme.seed_offset())
                .wrapping_add(7000 + 31 * image_idx as u64);
            let recon = tasks::reconstruct_best(&measurements, used, &x, settings, trial_base)?;

            Ok(SchemeOutcome {
                image: image.clone(),
                scheme,
                best_psnr_db: recon.best.psnr_db,
                best_ssim: recon.best.ssim,
                mean_eta,
                mean_entropy,
                mean_truncated,
                per_mask,
                trial_scores: recon.scores,
                estimate: recon.estimate,
                masks,
                measurements,
            })
        })
        .collect()
}

pub fn run(settings: RunSettings) -> Result<()> {
    let outcomes = compare(&settings)?;

    let fidelity_label = match settings.model.fidelity {
        Fidelity::DiscreteDft => "dft",
        Fidelity::OpticalEmulation => "optical",
    };

    let mut manifest = Manifest::new("compare");
    manifest.record("seed", settings.seed);
    manifest.record("fidelity", fidelity_label);
    manifest.record("n", settings.design.n);
    manifest.record("trials", settings.trials);
    manifest.record("measurements", settings.measurements);

    // Persist masks and measurements so the comparison is replayable.
    let mask_dir = settings.out_dir.join("masks");
    let meas_dir = settings.out_dir.join("meas");
    std::fs::create_dir_all(&mask_dir)?;
    std::fs::create_dir_all(&meas_dir)?;
    let mut seen_schemes: Vec<Scheme> = Vec::new();
    for o in &outcomes {
        if !seen_schemes.contains(&o.scheme) {
            seen_schemes.push(o.scheme);
            for mask in &o.masks {
                let p = mask_dir.join(format!(
                    "{}_{:03}.omsk",
                    o.scheme.label(),
                    mask.mask_index
                ));
                write_omsk(
                    &p,
                    mask,
                    settings
                        .seed
                        .wrapping_add(o.scheme.seed_offset())
                        .wrapping_add(mask.mask_index as u64),
                )?;
                manifest.output(&p);
            }
        }
        for m in &o.measurements {
            let p = meas_dir.join(format!(
                "{}_{}_{:03}.omsi",
                o.image,
                o.scheme.label(),
                m.mask_id
            ));
            write_omsi(&p, m)?;
            manifest.output(&p);
        }
        let pgm = settings
            .out_dir
            .join(format!("best_{}_{}.pgm", o.image, o.scheme.label()));
        write_phase_pgm(&pgm, &o.estimate)?;
        manifest.output(&pgm);
    }

    // Per-image metrics CSVs with one row per (scheme, mask, trial).
    for image in &settings.images {
        let mut csv = Csv::new(
            "scheme,mask_id,trial,eta,entropy,psnr_db,ssim,truncated_energy_fraction",
        );
        for o in outcomes.iter().filter(|o| &o.image == image) {
            for score in &o.trial_scores {
                for &(mask_id, e, h, trunc) in &o.per_mask {
                    crate::csv_row!(
                        csv,
                        "{},{},{},{:.6e},{:.6},{:.4},{:.6},{:.6e}",
                        o.scheme.label(),
                        mask_id,
                        score.trial,
                        e,
                        h,
                        score.psnr_db,
                        score.ssim,
                        trunc
                    );
                }
            }
        }
        let path = settings.out_dir.join(format!("metrics_{image}.csv"));
        csv.write(&path)?;
        manifest.output(&path);
    }

    let mut summary = Csv::new(
        "image,scheme,fidelity,best_psnr_db,best_ssim,mean_eta,mean_entropy,mean_truncated_fraction",
    );
    for o in &outcomes {
        crate::csv_row!(
            summary,
            "{},{},{},{:.4},{:.6},{:.6e},{:.6},{:.6e}",
            o.image,
            o.scheme.label(),
            fidelity_label,
            o.best_psnr_db,
            o.best_ssim,
            o.mean_eta,
            o.mean_entropy,
            o.mean_truncated
        );
        println!(
            "{} / {}: best psnr {:.3} dB, ssim {:.4}, eta {:.4}, entropy {:.3}, truncated {:.4}",
            o.image,
            o.scheme.label(),
            o.best_psnr_db,
            o.best_ssim,
            o.mean_eta,
            o.mean_entropy,
            o.mean_truncated
        );
    }
    let summary_path = settings.out_dir.join("summary.csv");
    summary.write(&summary_path)?;
    manifest.output(&summary_path);
    manifest.write(&settings.out_dir)?;
    Ok(())
}
