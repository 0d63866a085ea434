//! `design`: run the two-stage optimization and persist the mask set.

use crate::config::RunSettings;
use crate::manifest::Manifest;
use anyhow::Result;
use maskforge_core::io::{write_design_sidecar, write_omsk};
use maskforge_core::mask_design::{
    generate_template, stage1_optimize, stage2_quantize, QuantizedMask,
};
use num_complex::Complex64;
use rayon::prelude::*;

struct DesignReport {
    mask: QuantizedMask,
    seed: u64,
    stage1_iterations: usize,
    continuous_dc: f64,
    quantized_dc: f64,
}

pub fn run(settings: RunSettings) -> Result<()> {
    let cfg = &settings.design;
    cfg.validate()?;
    let n2 = (cfg.n * cfg.n) as f64;

    let reports: Vec<DesignReport> = (1..=cfg.l_masks as u32)
        .into_par_iter()
        .map(|l| -> maskforge_core::Result<DesignReport> {
            let seed = cfg.rng_seed.wrapping_add(l as u64);
            let template =
                generate_template(cfg.n, &cfg.filter, seed).map_err(|e| e.for_mask(l))?;
            let stage1 = stage1_optimize(&template, cfg).map_err(|e| e.for_mask(l))?;
            let continuous_dc = stage1
                .psi
                .iter()
                .map(|&p| Complex64::from_polar(1.0, p))
                .sum::<Complex64>()
                .norm()
                / n2;
            let mut mask = stage2_quantize(&stage1.psi, stage1.gamma, &template, cfg)
                .map_err(|e| e.for_mask(l))?;
            mask.mask_index = l;
            let quantized_dc = mask.to_field().iter().sum::<Complex64>().norm() / n2;
            Ok(DesignReport {
                mask,
                seed,
                stage1_iterations: stage1.iterations,
                continuous_dc,
                quantized_dc,
            })
        })
        .collect::<maskforge_core::Result<Vec<_>>>()?;

    let mut manifest = Manifest::new("design");
    manifest.record("seed", cfg.rng_seed);
    manifest.record("n", cfg.n);
    manifest.record("m_levels", cfg.m_levels);
    manifest.record("l_masks", cfg.l_masks);

    for r in &reports {
        let path = settings
            .out_dir
            .join(format!("mask_{:03}.omsk", r.mask.mask_index));
        write_omsk(&path, &r.mask, r.seed)?;
        manifest.output(&path);
        println!(
            "mask {}: stage1 iterations={}, |S|/N^2 continuous={:.3e}, quantized={:.3e}",
            r.mask.mask_index, r.stage1_iterations, r.continuous_dc, r.quantized_dc
        );
    }

    let sidecar = settings.out_dir.join("design.cfg");
    write_design_sidecar(&sidecar, cfg)?;
    manifest.output(&sidecar);
    manifest.write(&settings.out_dir)?;
    Ok(())
}
