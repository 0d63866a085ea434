//! Two-stage design of multi-level green-noise phase masks.
//!
//! Stage 1 fits an unconstrained phase field to a bandpass template under a
//! zero-DC equality constraint, handled with an augmented Lagrangian and
//! plain gradient descent. Stage 2 quantizes the continuous field onto a
//! uniform phase codebook with a raster-order coordinate search that keeps
//! minimizing the same objective.

use crate::error::{Error, Result};
use crate::fft::Dft2;
use crate::field::{freq_offset, phase_of, unit_phasor, ComplexField, PhaseField};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

/// Ideal annular bandpass filter in centered normalized frequency.
///
/// A bin with signed offsets `(u, v)` on an `n`-point grid has radial
/// frequency `r = 2π·sqrt(u² + v²)/n`, clipped to `π` so the grid corners
/// stay addressable by an upper cutoff of `π`. The filter passes the bin
/// iff `low_cutoff <= r <= high_cutoff`; DC is always rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    pub low_cutoff: f64,
    pub high_cutoff: f64,
}

impl SpectralFilter {
    pub fn new(low_cutoff: f64, high_cutoff: f64) -> Result<Self> {
        if !(low_cutoff > 0.0 && low_cutoff < high_cutoff && high_cutoff <= PI) {
            return Err(Error::InvalidConfig(format!(
                "filter cutoffs must satisfy 0 < low < high <= pi, got ({low_cutoff}, {high_cutoff})"
            )));
        }
        Ok(SpectralFilter {
            low_cutoff,
            high_cutoff,
        })
    }

    /// Gain of the bin at standard-layout index `(i, j)` on an `n`×`n` grid:
    /// exactly 1.0 in the annulus, 0.0 outside, 0.0 at DC.
    pub fn gain(&self, i: usize, j: usize, n: usize) -> f64 {
        if i == 0 && j == 0 {
            return 0.0;
        }
        let u = freq_offset(i, n) as f64;
        let v = freq_offset(j, n) as f64;
        let r = (TAU * (u * u + v * v).sqrt() / n as f64).min(PI);
        if r >= self.low_cutoff && r <= self.high_cutoff {
            1.0
        } else {
            0.0
        }
    }

    /// Number of passband bins on the discrete grid.
    pub fn passband_bins(&self, n: usize) -> usize {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.gain(i, j, n) != 0.0)
            .count()
    }
}

/// Uniformly spaced phase codebook: `entries[m] = 2π·m/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    entries: Vec<f64>,
}

impl Codebook {
    pub fn new(levels: usize) -> Result<Self> {
        if !(2..=256).contains(&levels) {
            return Err(Error::InvalidConfig(format!(
                "codebook levels must be in 2..=256, got {levels}"
            )));
        }
        let entries = (0..levels).map(|m| TAU * m as f64 / levels as f64).collect();
        Ok(Codebook { entries })
    }

    pub fn levels(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Unit phasors `e^{i·entry}` for each codeword.
    pub fn phasors(&self) -> Vec<Complex64> {
        self.entries
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect()
    }
}

/// A designed mask stored as codeword indices; the realized mask
/// `T[j,k] = e^{i·codebook[indices[j,k]]}` has unit modulus by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMask {
    pub indices: Array2<u16>,
    pub codebook: Codebook,
    /// 1-based position of this mask within its set.
    pub mask_index: u32,
}

impl QuantizedMask {
    pub fn n(&self) -> usize {
        self.indices.nrows()
    }

    /// Realize the complex unit-modulus mask.
    pub fn to_field(&self) -> ComplexField {
        let phasors = self.codebook.phasors();
        self.indices.mapv(|m| phasors[m as usize])
    }

    pub fn phase(&self) -> PhaseField {
        self.indices
            .mapv(|m| self.codebook.entries()[m as usize])
    }
}

/// All scalar parameters of the two-stage design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    /// Mask side length.
    pub n: usize,
    /// Penalty constant of the augmented Lagrangian.
    pub alpha: f64,
    /// Gradient descent step size.
    pub beta: f64,
    /// Stage-1 stopping threshold on the mean squared per-pixel change.
    pub delta: f64,
    pub max_iters_stage1: usize,
    /// Number of full quantization sweeps.
    pub g_loops: usize,
    /// Codebook size.
    pub m_levels: usize,
    /// Number of masks to design.
    pub l_masks: usize,
    pub filter: SpectralFilter,
    pub rng_seed: u64,
}

impl DesignConfig {
    /// The final design settings: 256×256, 16 levels, 2 sweeps,
    /// passband (π/5, π/3), α = 1e-4, β = 0.2, δ = 1e-7, 300 iterations.
    pub fn default_design() -> Self {
        DesignConfig {
            n: 256,
            alpha: 1e-4,
            beta: 0.2,
            delta: 1e-7,
            max_iters_stage1: 300,
            g_loops: 2,
            m_levels: 16,
            l_masks: 3,
            filter: SpectralFilter::new(PI / 5.0, PI / 3.0).unwrap(),
            rng_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidConfig("mask side must be >= 4".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidConfig(
                "alpha, beta and delta must be positive".into(),
            ));
        }
        if self.g_loops < 1 || self.l_masks < 1 {
            return Err(Error::InvalidConfig(
                "g_loops and l_masks must be >= 1".into(),
            ));
        }
        if !(2..=256).contains(&self.m_levels) {
            return Err(Error::InvalidConfig("m_levels must be in 2..=256".into()));
        }
        SpectralFilter::new(self.filter.low_cutoff, self.filter.high_cutoff)?;
        Ok(())
    }
}

/// Iteration state of the augmented Lagrangian: the phase field, the
/// multiplier, and a cached phasor sum `Σ e^{iψ}` that gradient evaluation
/// turns into exclusive sums in O(1) per pixel.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub psi: PhaseField,
    pub gamma: Complex64,
    pub phasor_sum: Complex64,
}

impl LagrangianState {
    pub fn new(psi: PhaseField, gamma: Complex64) -> Self {
        let phasor_sum = phasor_sum_of(&psi);
        LagrangianState {
            psi,
            gamma,
            phasor_sum,
        }
    }

    /// Recompute the cached sum from scratch.
    pub fn refresh(&mut self) {
        self.phasor_sum = phasor_sum_of(&self.psi);
    }
}

fn phasor_sum_of(psi: &PhaseField) -> Complex64 {
    psi.iter()
        .map(|&p| Complex64::from_polar(1.0, p))
        .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// Generate the bandpass template: inverse DFT of unit-modulus spectral
/// white noise restricted to the filter's annulus, rescaled to unit RMS
/// modulus. Deterministic for a fixed seed.
pub fn generate_template(n: usize, filter: &SpectralFilter, seed: u64) -> Result<ComplexField> {
    if n < 4 {
        return Err(Error::InvalidConfig("template side must be >= 4".into()));
    }
    SpectralFilter::new(filter.low_cutoff, filter.high_cutoff)?;
    if filter.passband_bins(n) == 0 {
        return Err(Error::EmptyPassband);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum: ComplexField = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            // Draw for every bin so the noise field does not depend on the filter.
            let z: f64 = rng.random_range(0.0..TAU);
            spectrum[[i, j]] = Complex64::from_polar(filter.gain(i, j, n), z);
        }
    }

    let dft = Dft2::new(n, n);
    dft.inverse(&mut spectrum);
    let rms = (spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * n) as f64).sqrt();
    debug_assert!(rms > 0.0);
    Ok(spectrum.mapv(|z| z / rms))
}

/// Augmented Lagrangian value
/// `½‖e^{iψ} − T̄‖² + (α/2)|Σe^{iψ}|² + Re⟨Σe^{iψ}, γ⟩`
/// with `⟨a, γ⟩ = conj(a)·γ`.
pub fn lagrangian_value(state: &LagrangianState, template: &ComplexField, alpha: f64) -> f64 {
    assert_eq!(state.psi.dim(), template.dim(), "dimension mismatch");
    let mse: f64 = state
        .psi
        .iter()
        .zip(template.iter())
        .map(|(&p, &t)| (Complex64::from_polar(1.0, p) - t).norm_sqr())
        .sum();
    let s = state.phasor_sum;
    0.5 * mse + 0.5 * alpha * s.norm_sqr() + (s.conj() * state.gamma).re
}

/// Per-pixel derivative of the Lagrangian with respect to ψ.
///
/// The MSE part is `Re(T̄)·sinψ − Im(T̄)·cosψ`; the constraint part uses the
/// exclusive sum `Σ_{[p,q]≠[j,k]} e^{iψ}` computed as `phasor_sum − e^{iψ_{j,k}}`.
pub fn gradient(state: &LagrangianState, template: &ComplexField, alpha: f64) -> Array2<f64> {
    assert_eq!(state.psi.dim(), template.dim(), "dimension mismatch");
    let s = state.phasor_sum;
    let gamma = state.gamma;
    let mut out = Array2::zeros(state.psi.dim());
    ndarray::Zip::from(&mut out)
        .and(&state.psi)
        .and(template)
        .for_each(|g, &p, &t| {
            let e = Complex64::from_polar(1.0, p);
            let mse = t.re * p.sin() - t.im * p.cos();
            let s_excl = s - e;
            let constraint = -alpha * (e * s_excl.conj()).im - (e * gamma.conj()).im;
            *g = mse + constraint;
        });
    out
}

/// Outcome of Stage 1: the continuous phase field, the terminal multiplier,
/// and per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct Stage1Result {
    pub psi: PhaseField,
    pub gamma: Complex64,
    pub iterations: usize,
    /// Lagrangian value after each iteration.
    pub objective: Vec<f64>,
}

/// Stage 1: gradient descent on the augmented Lagrangian with dual ascent
/// on the multiplier. ψ is initialized at the template phase and γ at 0;
/// stops once the mean squared per-pixel change drops below `cfg.delta`.
pub fn stage1_optimize(template: &ComplexField, cfg: &DesignConfig) -> Result<Stage1Result> {
    cfg.validate()?;
    if template.dim() != (cfg.n, cfg.n) {
        return Err(Error::DimensionMismatch {
            expected: (cfg.n, cfg.n),
            got: template.dim(),
        });
    }
    let pixels = (cfg.n * cfg.n) as f64;
    let mut state = LagrangianState::new(phase_of(template), Complex64::new(0.0, 0.0));
    let mut objective = Vec::with_capacity(cfg.max_iters_stage1);
    let mut iterations = 0;

    for iter in 0..cfg.max_iters_stage1 {
        state.refresh();
        let grad = gradient(&state, template, cfg.alpha);
        let mut change = 0.0;
        ndarray::Zip::from(&mut state.psi).and(&grad).for_each(|p, &g| {
            let step = cfg.beta * g;
            change += step * step;
            *p -= step;
        });
        if !change.is_finite() || state.psi.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { iteration: iter });
        }
        state.refresh();
        state.gamma += cfg.alpha * state.phasor_sum;
        objective.push(lagrangian_value(&state, template, cfg.alpha));
        iterations = iter + 1;
        if change / pixels < cfg.delta {
            break;
        }
    }

    Ok(Stage1Result {
        psi: state.psi,
        gamma: state.gamma,
        iterations,
        objective,
    })
}

fn raster_argmin_cost(
    candidates: &[Complex64],
    template_px: Complex64,
    shifted_sum: Complex64,
    alpha: f64,
) -> (usize, Complex64) {
    let mut best = 0usize;
    let mut best_cost = f64::INFINITY;
    for (m, &c) in candidates.iter().enumerate() {
        let cost = 0.5 * (c - template_px).norm_sqr() + 0.5 * alpha * (shifted_sum + c).norm_sqr();
        // Strict less-than: ties keep the smallest codeword index.
        if cost < best_cost {
            best_cost = cost;
            best = m;
        }
    }
    (best, candidates[best])
}

/// One observed step of the quantization sweep, exposed so tests can verify
/// descent of the objective by full recomputation.
pub struct QuantStep<'a> {
    /// 1-based sweep number.
    pub g_loop: usize,
    pub row: usize,
    pub col: usize,
    /// Current state of the whole field after this pixel update.
    pub field: &'a ComplexField,
}

/// Stage 2: raster-order coordinate quantization onto the codebook,
/// minimizing `½‖e^{iψ̌} − T̄‖² + (α/2)|Σe^{iψ̌} + γ̌/α|²` one pixel at a
/// time with the phasor sum maintained incrementally. The multiplier is the
/// Stage-1 terminal value and is never updated here.
pub fn stage2_quantize(
    psi: &PhaseField,
    gamma: Complex64,
    template: &ComplexField,
    cfg: &DesignConfig,
) -> Result<QuantizedMask> {
    stage2_quantize_observed(psi, gamma, template, cfg, |_| {})
}

/// [`stage2_quantize`] with a per-pixel observer, used by descent oracles.
pub fn stage2_quantize_observed(
    psi: &PhaseField,
    gamma: Complex64,
    template: &ComplexField,
    cfg: &DesignConfig,
    mut observer: impl FnMut(QuantStep<'_>),
) -> Result<QuantizedMask> {
    cfg.validate()?;
    let n = psi.nrows();
    if psi.dim() != (n, n) || template.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: (n, n),
            got: template.dim(),
        });
    }
    let codebook = Codebook::new(cfg.m_levels)?;
    let candidates = codebook.phasors();
    let shift = gamma / cfg.alpha;

    let mut field = unit_phasor(psi);
    let mut indices = Array2::<u16>::zeros((n, n));

    for g in 1..=cfg.g_loops {
        // Fresh sum at every sweep boundary to bound floating-point drift.
        let mut sum = field.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
        for j in 0..n {
            for k in 0..n {
                let current = field[[j, k]];
                let sum_excl = sum - current;
                let (m, phasor) =
                    raster_argmin_cost(&candidates, template[[j, k]], sum_excl + shift, cfg.alpha);
                field[[j, k]] = phasor;
                indices[[j, k]] = m as u16;
                sum = sum_excl + phasor;
                observer(QuantStep {
                    g_loop: g,
                    row: j,
                    col: k,
                    field: &field,
                });
            }
        }
    }

    Ok(QuantizedMask {
        indices,
        codebook,
        mask_index: 1,
    })
}

/// Full two-stage design of `cfg.l_masks` independent masks. The l-th mask
/// draws its template with seed `rng_seed + l`; masks are designed in
/// parallel and returned in order, so the output is deterministic.
pub fn design_optmask(cfg: &DesignConfig) -> Result<Vec<QuantizedMask>> {
    cfg.validate()?;
    (1..=cfg.l_masks as u32)
        .into_par_iter()
        .map(|l| {
            design_single(cfg, l).map_err(|e| e.for_mask(l))
        })
        .collect()
}

/// Design the l-th mask of a set (1-based), returning its quantized form.
pub fn design_single(cfg: &DesignConfig, l: u32) -> Result<QuantizedMask> {
    let seed = cfg.rng_seed.wrapping_add(l as u64);
    let template = generate_template(cfg.n, &cfg.filter, seed)?;
    let stage1 = stage1_optimize(&template, cfg)?;
    let mut mask = stage2_quantize(&stage1.psi, stage1.gamma, &template, cfg)?;
    mask.mask_index = l;
    Ok(mask)
}
