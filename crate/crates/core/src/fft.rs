//! Two-dimensional FFT helpers built on rustfft.
//!
//! All toolkit transforms are unitary (scaled by `1/sqrt(rows*cols)`), so
//! Parseval's identity holds exactly between a field and its spectrum.

use crate::field::ComplexField;
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Planned 2D transform for a fixed shape. Reusable and cheap to clone.
#[derive(Clone)]
pub struct Dft2 {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl Dft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        let mut planner = FftPlanner::new();
        Dft2 {
            rows,
            cols,
            fwd_rows: planner.plan_fft_forward(cols),
            fwd_cols: planner.plan_fft_forward(rows),
            inv_rows: planner.plan_fft_inverse(cols),
            inv_cols: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn apply(&self, a: &mut ComplexField, row_fft: &Arc<dyn Fft<f64>>, col_fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(a.dim(), (self.rows, self.cols), "shape mismatch");
        // Rows are contiguous in standard layout.
        let slice = a.as_slice_mut().expect("standard layout required");
        row_fft.process(slice);
        // Columns via transpose, batch FFT, transpose back.
        let mut t = Array2::zeros((self.cols, self.rows));
        t.assign(&a.t());
        let tslice = t.as_slice_mut().unwrap();
        col_fft.process(tslice);
        a.assign(&t.t());
    }

    /// In-place unitary forward transform.
    pub fn forward(&self, a: &mut ComplexField) {
        self.apply(a, &self.fwd_rows, &self.fwd_cols);
        let scale = 1.0 / ((self.rows * self.cols) as f64).sqrt();
        a.mapv_inplace(|z| z * scale);
    }

    /// In-place unitary inverse transform.
    pub fn inverse(&self, a: &mut ComplexField) {
        self.apply(a, &self.inv_rows, &self.inv_cols);
        let scale = 1.0 / ((self.rows * self.cols) as f64).sqrt();
        a.mapv_inplace(|z| z * scale);
    }

    /// In-place forward transform without normalization.
    pub fn forward_raw(&self, a: &mut ComplexField) {
        self.apply(a, &self.fwd_rows, &self.fwd_cols);
    }
}

/// Unitary forward transform of a borrowed field.
pub fn fft2(a: &ComplexField) -> ComplexField {
    let mut out = a.clone();
    Dft2::new(a.nrows(), a.ncols()).forward(&mut out);
    out
}

/// Unitary inverse transform of a borrowed field.
pub fn ifft2(a: &ComplexField) -> ComplexField {
    let mut out = a.clone();
    Dft2::new(a.nrows(), a.ncols()).inverse(&mut out);
    out
}

/// Slow direct-summation DFT, unitary. Test oracle; O((MN)^2).
pub fn dft2_direct(a: &ComplexField, rows: usize, cols: usize) -> ComplexField {
    let (r_in, c_in) = a.dim();
    assert!(rows >= r_in && cols >= c_in);
    let mut out = Array2::zeros((rows, cols));
    for k1 in 0..rows {
        for k2 in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for n1 in 0..r_in {
                for n2 in 0..c_in {
                    let ph = -std::f64::consts::TAU
                        * (k1 as f64 * n1 as f64 / rows as f64
                            + k2 as f64 * n2 as f64 / cols as f64);
                    acc += a[[n1, n2]] * Complex64::from_polar(1.0, ph);
                }
            }
            out[[k1, k2]] = acc / ((rows * cols) as f64).sqrt();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::zero_pad;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rows: usize, cols: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn matches_direct_summation() {
        for (r, c) in [(4, 4), (5, 3), (8, 8), (6, 7)] {
            let a = random_field(r, c, (r * 10 + c) as u64);
            let fast = fft2(&a);
            let slow = dft2_direct(&a, r, c);
            for (x, y) in fast.iter().zip(slow.iter()) {
                assert!((x - y).norm() < 1e-10, "mismatch at {r}x{c}");
            }
        }
    }

    #[test]
    fn zero_padded_matches_direct() {
        let a = random_field(4, 4, 3);
        let padded = zero_pad(&a, 9, 7);
        let fast = fft2(&padded);
        let slow = dft2_direct(&a, 9, 7);
        for (x, y) in fast.iter().zip(slow.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let a = random_field(16, 16, 11);
        let spec = fft2(&a);
        let back = ifft2(&spec);
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        let e_spatial: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let e_spectral: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_spatial - e_spectral).abs() / e_spatial < 1e-12);
    }
}
