//! `sweep-quant`: quantize one continuous design at several codebook sizes
//! and record η plus two views of the x-axis power spectrum per level: the
//! y-averaged mean curve, and the raw zero-frequency-row slice in which
//! coarse quantization visibly lifts the noise floor out of the spectral
//! nulls (the gap view).
//!
//! Section `[sweep_quant]` keys: `levels` (comma list, default
//! 2,4,8,16,32), `filter_low`/`filter_high` (default the mid band pi/3..pi/2).

use crate::config::RunSettings;
use crate::manifest::{Csv, Manifest};
use crate::tasks::ETA_THRESHOLD;
use anyhow::Result;
use maskforge_core::fft::fft2;
use maskforge_core::field::{freq_offset, unit_phasor, ComplexField};
use maskforge_core::mask_design::{
    generate_template, stage1_optimize, stage2_quantize, DesignConfig, SpectralFilter,
};
use maskforge_core::metrics::{spectrum_stats, SpectrumStats};
use std::f64::consts::PI;

struct LevelView {
    stats: SpectrumStats,
    slice_db: Vec<f64>,
}

fn views_of(field: &ComplexField) -> Result<LevelView> {
    let spectrum = fft2(field).mapv(|z| z.norm_sqr());
    let stats = spectrum_stats(&spectrum, ETA_THRESHOLD)?;
    let n = spectrum.ncols();
    let mut slice_db = vec![0.0; n];
    for j in 0..n {
        let centered = (freq_offset(j, n) + (n / 2) as isize) as usize;
        slice_db[centered] = 10.0 * spectrum[[0, j]].max(f64::MIN_POSITIVE).log10();
    }
    Ok(LevelView { stats, slice_db })
}

pub struct QuantSweepOutcome {
    /// (m_levels, eta); level 0 is the unquantized (continuous) mask.
    pub eta_by_level: Vec<(usize, f64)>,
    /// (m_levels, centered y-averaged axis power in dB); level 0 as above.
    pub axis_by_level: Vec<(usize, Vec<f64>)>,
    /// (m_levels, centered zero-row slice power in dB); level 0 as above.
    pub slice_by_level: Vec<(usize, Vec<f64>)>,
}

impl QuantSweepOutcome {
    /// Largest pointwise slice-power gap between two levels over the
    /// region `|f| >= threshold·f_Nyquist`.
    pub fn max_slice_gap_db(&self, level_a: usize, level_b: usize, threshold: f64) -> f64 {
        let of = |m: usize| {
            &self
                .slice_by_level
                .iter()
                .find(|(lvl, _)| *lvl == m)
                .expect("level present")
                .1
        };
        let (a, b) = (of(level_a), of(level_b));
        let half = (a.len() / 2) as f64;
        a.iter()
            .zip(b.iter())
            .enumerate()
            .filter(|(i, _)| ((*i as f64 - half) / half).abs() >= threshold)
            .map(|(_, (x, y))| x - y)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The sweep itself, reusable by the acceptance harness.
pub fn sweep(settings: &RunSettings) -> Result<QuantSweepOutcome> {
    let file = &settings.file;
    let levels: Vec<usize> = file
        .list("sweep_quant", "levels", &["2", "4", "8", "16", "32"])
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| anyhow::anyhow!("bad level {s}")))
        .collect::<Result<Vec<_>>>()?;
    let low = file.angle("sweep_quant", "filter_low", PI / 3.0)?;
    let high = file.angle("sweep_quant", "filter_high", PI / 2.0)?;

    let cfg = DesignConfig {
        filter: SpectralFilter::new(low, high)?,
        ..settings.design.clone()
    };
    let template = generate_template(cfg.n, &cfg.filter, cfg.rng_seed.wrapping_add(1))?;
    let stage1 = stage1_optimize(&template, &cfg)?;

    let continuous = unit_phasor(&stage1.psi);
    let cont = views_of(&continuous)?;
    let mut eta_by_level = vec![(0usize, cont.stats.eta)];
    let mut axis_by_level = vec![(0usize, cont.stats.axis_power_db)];
    let mut slice_by_level = vec![(0usize, cont.slice_db)];

    for &m in &levels {
        let level_cfg = DesignConfig {
            m_levels: m,
            ..cfg.clone()
        };
        let mask = stage2_quantize(&stage1.psi, stage1.gamma, &template, &level_cfg)?;
        let view = views_of(&mask.to_field())?;
        eta_by_level.push((m, view.stats.eta));
        axis_by_level.push((m, view.stats.axis_power_db));
        slice_by_level.push((m, view.slice_db));
    }
    Ok(QuantSweepOutcome {
        eta_by_level,
        axis_by_level,
        slice_by_level,
    })
}

pub fn run(settings: RunSettings) -> Result<()> {
    let outcome = sweep(&settings)?;

    let mut eta_csv = Csv::new("m_levels,eta");
    for &(m, eta) in &outcome.eta_by_level {
        crate::csv_row!(eta_csv, "{m},{eta:.6e}");
    }
    let eta_path = settings.out_dir.join("quant_eta.csv");
    eta_csv.write(&eta_path)?;

    let header = std::iter::once("bin,freq_over_pi".to_string())
        .chain(
            outcome
                .axis_by_level
                .iter()
                .map(|(m, _)| if *m == 0 { "db_cont".into() } else { format!("db_m{m}") }),
        )
        .collect::<Vec<_>>()
        .join(",");
    let mut axis_csv = Csv::new(&header);
    let bins = outcome.axis_by_level[0].1.len();
    let half = (bins / 2) as f64;
    for b in 0..bins {
        let freq = (b as f64 - half) / half;
        let mut row = format!("{b},{freq:.6}");
        for (_, axis) in &outcome.axis_by_level {
            row.push_str(&format!(",{:.4}", axis[b]));
        }
        crate::csv_row!(axis_csv, "{row}");
    }
    let axis_path = settings.out_dir.join("axis_power.csv");
    axis_csv.write(&axis_path)?;

    let slice_header = std::iter::once("bin,freq_over_pi".to_string())
        .chain(
            outcome
                .slice_by_level
                .iter()
                .map(|(m, _)| if *m == 0 { "db_cont".into() } else { format!("db_m{m}") }),
        )
        .collect::<Vec<_>>()
        .join(",");
    let mut slice_csv = Csv::new(&slice_header);
    for b in 0..bins {
        let freq = (b as f64 - half) / half;
        let mut row = format!("{b},{freq:.6}");
        for (_, slice) in &outcome.slice_by_level {
            row.push_str(&format!(",{:.4}", slice[b]));
        }
        crate::csv_row!(slice_csv, "{row}");
    }
    let slice_path = settings.out_dir.join("axis_slice.csv");
    slice_csv.write(&slice_path)?;

    for &(m, eta) in &outcome.eta_by_level {
        if m == 0 {
            println!("continuous: eta={eta:.5}");
        } else {
            println!("M={m}: eta={eta:.5}");
        }
    }

    let mut manifest = Manifest::new("sweep-quant");
    manifest.record("seed", settings.design.rng_seed);
    manifest.record("n", settings.design.n);
    manifest.output(&eta_path);
    manifest.output(&axis_path);
    manifest.output(&slice_path);
    manifest.write(&settings.out_dir)?;
    Ok(())
}
