//! `gen-baseline`: generate a white-noise or green-binary mask set.

use crate::config::{RunSettings, Scheme};
use crate::manifest::Manifest;
use anyhow::{bail, Result};
use maskforge_core::baseline::{self, green_default_filter};
use maskforge_core::io::{write_atomic, write_omsk};

pub fn run(settings: RunSettings, scheme: &str) -> Result<()> {
    let scheme = Scheme::parse(scheme)?;
    if scheme == Scheme::OptMask {
        bail!("use the design command for optmask");
    }
    let n = settings.design.n;
    let l = settings.design.l_masks;
    let seed = settings.seed;
    let masks = match scheme {
        Scheme::White4 => baseline::generate_white4(n, l, seed)?,
        Scheme::White16 => baseline::generate_white16(n, l, seed)?,
        Scheme::GreenBinaryApprox => {
            baseline::generate_green_binary_approx(n, l, seed, &green_default_filter())?
        }
        Scheme::OptMask => unreachable!(),
    };

    let mut manifest = Manifest::new("gen-baseline");
    manifest.record("scheme", scheme.label());
    manifest.record("seed", seed);
    manifest.record("n", n);
    manifest.record("l_masks", l);

    for mask in &masks {
        let path = settings
            .out_dir
            .join(format!("{}_{:03}.omsk", scheme.label(), mask.mask_index));
        write_omsk(&path, mask, seed.wrapping_add(mask.mask_index as u64))?;
        manifest.output(&path);
    }

    let filter = green_default_filter();
    let sidecar_text = format!(
        "format = baseline/1\nscheme = {}\nn = {n}\nm_levels = {}\nl_masks = {l}\nseed = {seed}\nfilter_low = {:.17e}\nfilter_high = {:.17e}\n",
        scheme.label(),
        masks[0].codebook.levels(),
        filter.low_cutoff,
        filter.high_cutoff,
    );
    let sidecar = settings.out_dir.join("baseline.cfg");
    write_atomic(&sidecar, sidecar_text.as_bytes())?;
    manifest.output(&sidecar);
    manifest.write(&settings.out_dir)?;
    println!("wrote {} {} masks to {:?}", masks.len(), scheme.label(), settings.out_dir);
    Ok(())
}
