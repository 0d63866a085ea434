//! Key=value configuration files with `[section]` headers, π-expression
//! angle parsing, and the merged run settings every command consumes.

use anyhow::{anyhow, bail, Context, Result};
use maskforge_core::mask_design::{DesignConfig, SpectralFilter};
use maskforge_core::optics_sim::{Fidelity, MeasurementModel, OpticalGeometry};
use maskforge_core::reconstruct::{InitMethod, SolverConfig};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Raw parsed file: section -> key -> value.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
            } else if let Some((k, v)) = line.split_once('=') {
                sections
                    .entry(current.clone())
                    .or_default()
                    .insert(k.trim().to_string(), v.trim().to_string());
            } else {
                bail!("config line {}: expected `key = value` or `[section]`", lineno + 1);
            }
        }
        Ok(ConfigFile { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {path:?}"))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    fn parse_with<T, F: Fn(&str) -> Result<T>>(
        &self,
        section: &str,
        key: &str,
        default: T,
        f: F,
    ) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => f(v).with_context(|| format!("config [{section}] {key} = {v}")),
        }
    }

    pub fn num<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        self.parse_with(section, key, default, |v| {
            v.parse::<T>().map_err(|_| anyhow!("not a valid number"))
        })
    }

    pub fn angle(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        self.parse_with(section, key, default, parse_angle)
    }

    pub fn string(&self, section: &str, key: &str, default: &str) -> String {
        self.get(section, key).unwrap_or(default).to_string()
    }

    pub fn list(&self, section: &str, key: &str, default: &[&str]) -> Vec<String> {
        match self.get(section, key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }
}

/// Parse an angle given as a float or a π expression: `pi`, `pi/5`,
/// `4pi/5`, `2*pi/3`, `0.8`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().to_lowercase().replace(' ', "").replace('*', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let Some(pos) = t.find("pi") else {
        bail!("cannot parse angle {s:?}");
    };
    let num = &t[..pos];
    let rest = &t[pos + 2..];
    let numerator: f64 = if num.is_empty() {
        1.0
    } else {
        num.parse().map_err(|_| anyhow!("bad numerator in {s:?}"))?
    };
    let denominator: f64 = if rest.is_empty() {
        1.0
    } else if let Some(d) = rest.strip_prefix('/') {
        d.parse().map_err(|_| anyhow!("bad denominator in {s:?}"))?
    } else {
        bail!("cannot parse angle {s:?}");
    };
    Ok(numerator * PI / denominator)
}

/// One named scheme of the comparison set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OptMask,
    GreenBinaryApprox,
    White16,
    White4,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "optmask" => Ok(Scheme::OptMask),
            "green" | "greenbinary" | "green-binary" => Ok(Scheme::GreenBinaryApprox),
            "white16" | "white-16" => Ok(Scheme::White16),
            "white4" | "white-4" => Ok(Scheme::White4),
            other => bail!("unknown scheme {other:?}"),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::OptMask => "optmask",
            Scheme::GreenBinaryApprox => "green",
            Scheme::White16 => "white16",
            Scheme::White4 => "white4",
        }
    }

    /// Deterministic seed lane so scheme mask sets never share draws.
    pub fn seed_offset(&self) -> u64 {
        match self {
            Scheme::OptMask => 0,
            Scheme::GreenBinaryApprox => 10_000,
            Scheme::White16 => 20_000,
            Scheme::White4 => 30_000,
        }
    }
}

/// Fully merged settings for one command run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub design: DesignConfig,
    pub geometry: OpticalGeometry,
    pub model: MeasurementModel,
    pub solver: SolverConfig,
    pub images: Vec<String>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub measurements: usize,
    pub tv_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub name: String,
    /// Master seed for noise and trial derivation.
    pub seed: u64,
    pub threads: usize,
    /// Raw parsed file, for command-specific sections.
    pub file: ConfigFile,
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub fidelity: Option<Fidelity>,
    pub threads: Option<usize>,
}

pub fn load_settings(config: Option<&Path>, over: &Overrides) -> Result<RunSettings> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };

    let mut design = DesignConfig::default_design();
    design.n = file.num("design", "n", design.n)?;
    design.alpha = file.num("design", "alpha", design.alpha)?;
    design.beta = file.num("design", "beta", design.beta)?;
    design.delta = file.num("design", "delta", design.delta)?;
    design.max_iters_stage1 = file.num("design", "max_iters_stage1", design.max_iters_stage1)?;
    design.g_loops = file.num("design", "g_loops", design.g_loops)?;
    design.m_levels = file.num("design", "m_levels", design.m_levels)?;
    design.l_masks = file.num("design", "l_masks", design.l_masks)?;
    design.rng_seed = file.num("design", "seed", design.rng_seed)?;
    let low = file.angle("design", "filter_low", design.filter.low_cutoff)?;
    let high = file.angle("design", "filter_high", design.filter.high_cutoff)?;
    design.filter = SpectralFilter::new(low, high)
        .map_err(|e| anyhow!("config filter cutoffs: {e}"))?;

    let mut geometry = OpticalGeometry::bench_default();
    geometry.wavelength = file.num("geometry", "wavelength", geometry.wavelength)?;
    geometry.focal_length = file.num("geometry", "focal_length", geometry.focal_length)?;
    geometry.slm_pitch = file.num("geometry", "slm_pitch", geometry.slm_pitch)?;
    geometry.sensor_pitch = file.num("geometry", "sensor_pitch", geometry.sensor_pitch)?;
    geometry.fill_factor = file.num("geometry", "fill_factor", geometry.fill_factor)?;

    let fidelity = match over.fidelity {
        Some(f) => f,
        None => match file.string("model", "fidelity", "dft").as_str() {
            "dft" | "discrete" => Fidelity::DiscreteDft,
            "optical" | "emulation" => Fidelity::OpticalEmulation,
            other => bail!("unknown fidelity {other:?} (use dft or optical)"),
        },
    };
    let pad_factor: usize = file.num("model", "pad_factor", 3)?;
    let pad_rows = file.num("model", "pad_rows", pad_factor * design.n)?;
    let pad_cols = file.num("model", "pad_cols", pad_factor * design.n)?;
    let supersample = file.num(
        "model",
        "supersample",
        if fidelity == Fidelity::OpticalEmulation { 4 } else { 1 },
    )?;
    let mut model = MeasurementModel {
        fidelity,
        supersample,
        sensor_bits: file.num("model", "sensor_bits", 12u32)?,
        photon_scale: file.num("model", "photon_scale", 0.0f64)?,
        pad_to: (pad_rows, pad_cols),
        dft_limit: maskforge_core::optics_sim::DEFAULT_DFT_LIMIT,
    };
    if fidelity == Fidelity::DiscreteDft {
        model.supersample = 1;
    }
    if let Ok(limit) = std::env::var("MASKFORGE_DFT_LIMIT") {
        model.dft_limit = limit
            .parse()
            .map_err(|_| anyhow!("MASKFORGE_DFT_LIMIT must be an integer"))?;
    }

    let mut solver = SolverConfig::default();
    solver.tv_weight = file.num("solver", "tv_weight", solver.tv_weight)?;
    solver.admm_rho = file.num("solver", "admm_rho", solver.admm_rho)?;
    solver.iterations = file.num("solver", "iterations", solver.iterations)?;
    solver.seed = file.num("solver", "seed", solver.seed)?;
    solver.init = match file.string("solver", "init", "backprojection").as_str() {
        "backprojection" => InitMethod::Backprojection,
        "random" => InitMethod::Random,
        other => bail!("unknown solver init {other:?}"),
    };

    let schemes = file
        .list("experiment", "schemes", &["optmask", "green", "white16", "white4"])
        .iter()
        .map(|s| Scheme::parse(s))
        .collect::<Result<Vec<_>>>()?;

    let images = file.list("experiment", "images", &["rings", "pink"]);
    for img in &images {
        if !maskforge_core::images::BUILTIN_IMAGES.contains(&img.as_str())
            && !Path::new(img).exists()
        {
            bail!("image {img:?} is neither a builtin nor an existing file");
        }
    }

    let trials: usize = file.num("experiment", "trials", 3)?;
    if trials < 1 {
        bail!("trials must be >= 1");
    }
    let measurements: usize = file.num("experiment", "measurements", design.l_masks)?;
    let tv_grid: Vec<f64> = file
        .list("experiment", "tv_grid", &[])
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| anyhow!("bad tv_grid entry {s}")))
        .collect::<Result<Vec<_>>>()?;

    let seed = over
        .seed
        .unwrap_or(file.num("experiment", "seed", design.rng_seed)?);
    let out_dir = over
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(file.string("experiment", "out", "out")));
    let threads = over.threads.unwrap_or(file.num("experiment", "threads", 0)?);

    Ok(RunSettings {
        design,
        geometry,
        model,
        solver,
        images,
        schemes,
        trials,
        measurements,
        tv_grid,
        out_dir,
        name: file.string("experiment", "name", "run"),
        seed,
        threads,
        file,
    })
}
