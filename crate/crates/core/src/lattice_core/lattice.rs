use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Periodic one-dimensional lattice with `num_sites` sites at `x_i = i * spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice1D {
    num_sites: usize,
    spacing: f64,
}

impl Lattice1D {
    /// Production lattice: at least 8 sites and a power of two.
    pub fn new(num_sites: usize, spacing: f64) -> Result<Self> {
        if num_sites < 8 || !num_sites.is_power_of_two() {
            return Err(invalid(format!(
                "lattice needs a power-of-two number of sites >= 8, got {num_sites}"
            )));
        }
        Self::small(num_sites, spacing)
    }

    /// Lattice without the power-of-two requirement, for Fock-space and jump toys.
    pub fn small(num_sites: usize, spacing: f64) -> Result<Self> {
        if num_sites == 0 {
            return Err(invalid("lattice needs at least one site"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid(format!("lattice spacing must be positive, got {spacing}")));
        }
        Ok(Self { num_sites, spacing })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Physical length `L * a` of the periodic domain.
    pub fn length(&self) -> f64 {
        self.num_sites as f64 * self.spacing
    }

    pub fn position(&self, site: usize) -> f64 {
        site as f64 * self.spacing
    }

    /// Integer wave number of FFT bin `k`, in `[-L/2, L/2)`.
    pub fn wave_index(&self, k: usize) -> i64 {
        let l = self.num_sites as i64;
        let k = k as i64;
        if 2 * k < l {
            k
        } else {
            k - l
        }
    }

    /// True for the unpaired Nyquist bin of an even lattice.
    pub fn is_nyquist(&self, k: usize) -> bool {
        self.num_sites % 2 == 0 && 2 * k == self.num_sites
    }

    /// Momentum of the spectral derivative in FFT order.
    ///
    /// The Nyquist bin of an even lattice is assigned zero so that the derivative
    /// is purely imaginary and antisymmetric, which charge conjugation requires.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.num_sites)
            .map(|k| {
                if self.is_nyquist(k) {
                    0.0
                } else {
                    2.0 * PI * self.wave_index(k) as f64 / self.length()
                }
            })
            .collect()
    }

    /// Magnitude of the lattice wave number in FFT order, Nyquist bin included.
    pub fn wave_numbers(&self) -> Vec<f64> {
        (0..self.num_sites)
            .map(|k| 2.0 * PI * (self.wave_index(k) as f64).abs() / self.length())
            .collect()
    }

    /// Signed shortest offset from site `j` to site `i`, in sites.
    pub fn site_offset(&self, i: usize, j: usize) -> i64 {
        let l = self.num_sites as i64;
        let mut d = (i as i64 - j as i64).rem_euclid(l);
        if 2 * d > l {
            d -= l;
        }
        d
    }

    /// Periodic distance between two continuous positions.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let len = self.length();
        let d = (x - y).rem_euclid(len);
        d.min(len - d)
    }

    /// Wraps a continuous position into `[0, L a)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let w = x.rem_euclid(self.length());
        // rem_euclid may round up to the length itself
        if w >= self.length() {
            0.0
        } else {
            w
        }
    }
}

impl fmt::Display for Lattice1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={} a={}", self.num_sites, self.spacing)
    }
}

/// Cached forward/inverse FFT plans for one lattice size.
#[derive(Clone)]
pub struct Fourier {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("len", &self.len).finish()
    }
}

impl Fourier {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform `sum_x f(x) e^{-2 pi i k x / L}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the `1/L` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Spectral derivative of a real periodic function (Nyquist bin dropped).
    pub fn derivative(&self, lattice: &Lattice1D, values: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        for (v, p) in buf.iter_mut().zip(lattice.momenta()) {
            *v *= Complex64::new(0.0, p);
        }
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Lattice1D::new(6, 1.0).is_err());
        assert!(Lattice1D::new(4, 1.0).is_err());
        assert!(Lattice1D::new(16, 0.0).is_err());
        assert!(Lattice1D::new(16, f64::NAN).is_err());
        assert!(Lattice1D::small(3, 0.5).is_ok());
    }

    #[test]
    fn momentum_grid_is_symmetric_with_zeroed_nyquist() {
        let lat = Lattice1D::new(8, 0.5).unwrap();
        let p = lat.momenta();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[4], 0.0);
        for k in 1..4 {
            assert!((p[k] + p[8 - k]).abs() < 1e-15);
        }
        assert!((lat.wave_numbers()[4] - PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn offsets_and_wrapping() {
        let lat = Lattice1D::new(16, 1.0).unwrap();
        assert_eq!(lat.site_offset(1, 15), 2);
        assert_eq!(lat.site_offset(15, 1), -2);
        assert!((lat.wrap(-0.5) - 15.5).abs() < 1e-12);
        assert!((lat.distance(0.5, 15.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_sine() {
        let lat = Lattice1D::new(64, 0.25).unwrap();
        let k = 2.0 * PI / lat.length() * 3.0;
        let f: Vec<f64> = (0..64).map(|i| (k * lat.position(i)).sin()).collect();
        let d = Fourier::new(64).derivative(&lat, &f);
        for (i, v) in d.iter().enumerate() {
            assert!((v - k * (k * lat.position(i)).cos()).abs() < 1e-12);
        }
    }
}
