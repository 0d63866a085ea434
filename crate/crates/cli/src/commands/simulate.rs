//! `simulate`: measure an object through a mask stack, writing OMSI
//! containers and PGM visualizations.

use crate::config::RunSettings;
use crate::manifest::Manifest;
use crate::tasks;
use anyhow::Result;
use maskforge_core::io::{write_intensity_pgm, write_omsi};
use maskforge_core::optics_sim::Fidelity;
use std::path::Path;

pub fn run(settings: RunSettings, masks_path: &Path, image: &str) -> Result<()> {
    let masks = tasks::load_masks(masks_path)?;
    let x = tasks::load_object(image, masks[0].n())?;
    let measurements = tasks::measure(&x, &masks, &settings, settings.seed)?;

    let mut manifest = Manifest::new("simulate");
    manifest.record("image", image);
    manifest.record("masks", masks_path.display());
    manifest.record("seed", settings.seed);
    manifest.record(
        "fidelity",
        match settings.model.fidelity {
            Fidelity::DiscreteDft => "dft",
            Fidelity::OpticalEmulation => "optical",
        },
    );
    manifest.record("supersample", settings.model.supersample);
    manifest.record("sensor_bits", settings.model.sensor_bits);
    manifest.record("photon_scale", settings.model.photon_scale);
    manifest.record("fill_factor", settings.geometry.fill_factor);

    for (i, m) in measurements.iter().enumerate() {
        let omsi = settings.out_dir.join(format!("meas_{:03}.omsi", i + 1));
        write_omsi(&omsi, m)?;
        manifest.output(&omsi);
        let pgm = settings.out_dir.join(format!("meas_{:03}.pgm", i + 1));
        write_intensity_pgm(&pgm, m)?;
        manifest.output(&pgm);
        println!(
            "measurement {}: truncated energy fraction {:.4e}",
            i + 1,
            m.truncated_energy_fraction
        );
    }
    manifest.write(&settings.out_dir)?;
    Ok(())
}
