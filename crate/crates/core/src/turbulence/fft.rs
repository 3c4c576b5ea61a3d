//! 2D discrete Fourier transforms on row-major `ny x nx` grids.
//!
//! Forward is unnormalised, inverse carries the `1 / (nx ny)` factor. Row and
//! column passes use `rustfft`'s scalar planner, which picks radix-2/4 kernels
//! for power-of-two sizes and mixed-radix or Bluestein kernels otherwise. The
//! scalar planner avoids CPU-feature-dependent SIMD paths, so the output bits
//! are the same on every machine.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlannerScalar};

use crate::error::{AdeError, Result};

/// Cached row/column plans for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(AdeError::Spec(format!("FFT grid must be at least 2x2, got {nx}x{ny}")));
        }
        let mut planner = FftPlannerScalar::new();
        Ok(Fft2 {
            nx,
            ny,
            row_fwd: planner.plan_fft(nx, FftDirection::Forward),
            row_inv: planner.plan_fft(nx, FftDirection::Inverse),
            col_fwd: planner.plan_fft(ny, FftDirection::Forward),
            col_inv: planner.plan_fft(ny, FftDirection::Inverse),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    fn check(&self, data: &[Complex64]) -> Result<()> {
        if data.len() != self.nx * self.ny {
            return Err(AdeError::Shape(format!(
                "{} samples for a {}x{} transform",
                data.len(),
                self.nx,
                self.ny
            )));
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], row: &dyn Fft<f64>, col: &dyn Fft<f64>) {
        let (nx, ny) = (self.nx, self.ny);
        row.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); ny];
        for x in 0..nx {
            for y in 0..ny {
                column[y] = data[y * nx + x];
            }
            col.process(&mut column);
            for y in 0..ny {
                data[y * nx + x] = column[y];
            }
        }
    }

    /// In-place forward transform (no normalisation).
    pub fn forward(&self, data: &mut [Complex64]) -> Result<()> {
        self.check(data)?;
        self.transform(data, self.row_fwd.as_ref(), self.col_fwd.as_ref());
        Ok(())
    }

    /// In-place inverse transform, normalised by `1 / (nx ny)`.
    pub fn inverse(&self, data: &mut [Complex64]) -> Result<()> {
        self.check(data)?;
        self.transform(data, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }
}

/// Forward 2D DFT of a row-major `ny x nx` grid.
pub fn fft2(data: &[Complex64], nx: usize, ny: usize) -> Result<Vec<Complex64>> {
    let mut out = data.to_vec();
    Fft2::new(nx, ny)?.forward(&mut out)?;
    Ok(out)
}

/// Inverse 2D DFT of a row-major `ny x nx` grid.
pub fn ifft2(data: &[Complex64], nx: usize, ny: usize) -> Result<Vec<Complex64>> {
    let mut out = data.to_vec();
    Fft2::new(nx, ny)?.inverse(&mut out)?;
    Ok(out)
}

/// Signed integer frequency of DFT bin `i` out of `n` (`fftfreq(n, 1/n)`).
#[inline]
pub fn frequency_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    /// Direct O(N^4) evaluation of the DFT sum.
    fn naive_dft(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for ky in 0..ny {
            for kx in 0..nx {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..ny {
                    for x in 0..nx {
                        let ph = -TAU * ((kx * x) as f64 / nx as f64 + (ky * y) as f64 / ny as f64);
                        acc += data[y * nx + x] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[ky * nx + kx] = acc;
            }
        }
        out
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut u = crate::noise::UniformStream::new(seed, 0);
        (0..n)
            .map(|_| Complex64::new(u.next_unit() - 0.5, u.next_unit() - 0.5))
            .collect()
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let mut d = vec![Complex64::new(0.0, 0.0); 8 * 8];
        d[0] = Complex64::new(1.0, 0.0);
        let s = fft2(&d, 8, 8).unwrap();
        for v in s {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_mode_lands_in_one_bin() {
        let (nx, ny) = (16, 8);
        let (mx, my) = (3usize, 5usize);
        let d: Vec<Complex64> = (0..nx * ny)
            .map(|i| {
                let (x, y) = (i % nx, i / nx);
                Complex64::from_polar(1.0, TAU * ((mx * x) as f64 / nx as f64 + (my * y) as f64 / ny as f64))
            })
            .collect();
        let s = fft2(&d, nx, ny).unwrap();
        for (i, v) in s.iter().enumerate() {
            if i == my * nx + mx {
                assert!((v.re - (nx * ny) as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9, "bin {i} = {v}");
            }
        }
    }

    #[test]
    fn matches_naive_dft_on_odd_and_even_sizes() {
        for (nx, ny) in [(8, 8), (6, 10), (7, 5)] {
            let d = pseudo_random(nx * ny, (nx * 100 + ny) as u64);
            let fast = fft2(&d, nx, ny).unwrap();
            let slow = naive_dft(&d, nx, ny);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        let d = pseudo_random(32 * 32, 9);
        let back = ifft2(&fft2(&d, 32, 32).unwrap(), 32, 32).unwrap();
        let scale = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in d.iter().zip(&back) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn frequency_layout() {
        let f: Vec<i64> = (0..6).map(|i| frequency_index(i, 6)).collect();
        assert_eq!(f, vec![0, 1, 2, -3, -2, -1]);
        let f: Vec<i64> = (0..5).map(|i| frequency_index(i, 5)).collect();
        assert_eq!(f, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Fft2::new(1, 4).is_err());
    }
}
