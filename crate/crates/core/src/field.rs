//! Shared array types and small grid utilities.

use ndarray::Array2;
use num_complex::Complex64;

/// N×N complex field: target objects, templates, masked objects.
pub type ComplexField = Array2<Complex64>;

/// N×N field of phase angles in radians. Values are unconstrained reals
/// during optimization and are interpreted modulo 2π.
pub type PhaseField = Array2<f64>;

/// Signed frequency offset of DFT bin `idx` on an axis of length `len`,
/// in the standard (DC-first) layout. Ranges over `-len/2 ..= (len-1)/2`,
/// matching what an fftshift would place left and right of center.
#[inline]
pub fn freq_offset(idx: usize, len: usize) -> isize {
    debug_assert!(idx < len);
    if idx < len.div_ceil(2) {
        idx as isize
    } else {
        idx as isize - len as isize
    }
}

/// Inverse of [`freq_offset`]: standard-layout index of a signed offset.
#[inline]
pub fn offset_index(offset: isize, len: usize) -> usize {
    offset.rem_euclid(len as isize) as usize
}

/// Move DC from `[0, 0]` to the array center (`[len/2]` on each axis).
pub fn fftshift<T: Clone>(a: &Array2<T>) -> Array2<T> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        a[[(i + r.div_ceil(2)) % r, (j + c.div_ceil(2)) % c]].clone()
    })
}

/// Inverse of [`fftshift`].
pub fn ifftshift<T: Clone>(a: &Array2<T>) -> Array2<T> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        a[[(i + r / 2) % r, (j + c / 2) % c]].clone()
    })
}

/// Embed `a` in the top-left corner of a zero `rows`×`cols` array.
pub fn zero_pad(a: &ComplexField, rows: usize, cols: usize) -> ComplexField {
    let (r, c) = a.dim();
    assert!(rows >= r && cols >= c, "pad target smaller than input");
    let mut out = Array2::zeros((rows, cols));
    out.slice_mut(ndarray::s![..r, ..c]).assign(a);
    out
}

/// Top-left `rows`×`cols` corner of `a` (adjoint of [`zero_pad`]).
pub fn unpad(a: &ComplexField, rows: usize, cols: usize) -> ComplexField {
    a.slice(ndarray::s![..rows, ..cols]).to_owned()
}

/// Phase angles of a complex field, in `(-π, π]`.
pub fn phase_of(a: &ComplexField) -> PhaseField {
    a.mapv(|z| z.arg())
}

/// Unit-modulus field `e^{iψ}`.
pub fn unit_phasor(psi: &PhaseField) -> ComplexField {
    psi.mapv(|p| Complex64::from_polar(1.0, p))
}

/// Wrap an angle difference into `[-π, π)`.
#[inline]
pub fn wrap_angle(d: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = d % tau;
    if w < -std::f64::consts::PI {
        w += tau;
    } else if w >= std::f64::consts::PI {
        w -= tau;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn freq_offsets_match_fftshift() {
        // len = 6: standard order 0 1 2 3 4 5 -> offsets 0 1 2 -3 -2 -1
        let offs: Vec<isize> = (0..6).map(|i| freq_offset(i, 6)).collect();
        assert_eq!(offs, vec![0, 1, 2, -3, -2, -1]);
        let offs: Vec<isize> = (0..5).map(|i| freq_offset(i, 5)).collect();
        assert_eq!(offs, vec![0, 1, 2, -2, -1]);
        for len in [4usize, 5, 6, 9] {
            for i in 0..len {
                assert_eq!(offset_index(freq_offset(i, len), len), i);
            }
        }
    }

    #[test]
    fn shift_round_trip() {
        let a = Array2::from_shape_fn((5, 6), |(i, j)| (10 * i + j) as f64);
        assert_eq!(ifftshift(&fftshift(&a)), a);
        // DC lands at the center after fftshift.
        let s = fftshift(&a);
        assert_eq!(s[[2, 3]], a[[0, 0]]);
    }

    #[test]
    fn pad_and_unpad() {
        let a = Array2::from_elem((3, 3), Complex64::new(2.0, -1.0));
        let p = zero_pad(&a, 5, 7);
        assert_eq!(p.dim(), (5, 7));
        assert_eq!(p[[2, 2]], Complex64::new(2.0, -1.0));
        assert_eq!(p[[4, 6]], Complex64::new(0.0, 0.0));
        assert_eq!(unpad(&p, 3, 3), a);
    }

    #[test]
    fn wrap_angle_range() {
        for d in [-10.0, -3.15, -0.1, 0.0, 3.14, 9.9, 100.0] {
            let w = wrap_angle(d);
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&w));
            assert!((wrap_angle(w - d)).abs() < 1e-9);
        }
    }
}
