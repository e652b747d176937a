use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::lattice_core::Lattice1D;

/// 2x2 complex matrix acting on the spinor index.
pub type Spin2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Velocity matrix `alpha = sigma_x`.
pub const ALPHA: Spin2 = [[ZERO, ONE], [ONE, ZERO]];

/// Mass matrix `beta = sigma_z`.
pub const BETA: Spin2 = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

pub const IDENTITY: Spin2 = [[ONE, ZERO], [ZERO, ONE]];

#[inline]
pub fn spin_apply(m: &Spin2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Two-component spinor field on a lattice.
///
/// Amplitudes are continuum-normalized: the squared norm is `a * sum_i psi^dag psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    lattice: Lattice1D,
    amps: Vec<[Complex64; 2]>,
}

impl SpinorField {
    pub fn new(lattice: Lattice1D, amps: Vec<[Complex64; 2]>) -> Result<Self> {
        if amps.len() != lattice.num_sites() {
            return Err(invalid(format!(
                "spinor field has {} sites, lattice has {}",
                amps.len(),
                lattice.num_sites()
            )));
        }
        if amps
            .iter()
            .flatten()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(invalid("spinor field contains non-finite amplitudes"));
        }
        Ok(Self { lattice, amps })
    }

    pub fn zeros(lattice: Lattice1D) -> Self {
        Self {
            lattice,
            amps: vec![[ZERO; 2]; lattice.num_sites()],
        }
    }

    pub fn from_fn(lattice: Lattice1D, mut f: impl FnMut(f64) -> [Complex64; 2]) -> Self {
        let amps = (0..lattice.num_sites())
            .map(|i| f(lattice.position(i)))
            .collect();
        Self { lattice, amps }
    }

    /// Builds a field from a flat vector indexed `2 * site + component`.
    pub fn from_flat(lattice: Lattice1D, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != 2 * lattice.num_sites() {
            return Err(invalid("flat spinor vector has the wrong length"));
        }
        Self::new(lattice, flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    /// Gaussian `exp(-(x-x0)^2 / (4 sigma^2) + i p x)` times a fixed spinor, unnormalized.
    ///
    /// The distance to `center` is taken periodically.
    pub fn gaussian(
        lattice: Lattice1D,
        center: f64,
        width: f64,
        momentum: f64,
        spinor: [Complex64; 2],
    ) -> Self {
        Self::from_fn(lattice, |x| {
            let mut d = (x - center).rem_euclid(lattice.length());
            if d > lattice.length() / 2.0 {
                d -= lattice.length();
            }
            let env = (-d * d / (4.0 * width * width)).exp();
            let phase = Complex64::from_polar(env, momentum * (center + d));
            [spinor[0] * phase, spinor[1] * phase]
        })
    }

    pub fn lattice(&self) -> &Lattice1D {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &[[Complex64; 2]] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [[Complex64; 2]] {
        &mut self.amps
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        self.amps.iter().flat_map(|a| a.iter().copied()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        // per-site sums keep the value invariant under a component swap
        self.lattice.spacing() * self.density().iter().sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product `<self, other> = a * sum_i self^dag other`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let s: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(u, v)| u[0].conj() * v[0] + u[1].conj() * v[1])
            .sum();
        s * self.lattice.spacing()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            lattice: self.lattice,
            amps: self
                .amps
                .iter()
                .map(|a| [a[0] * factor, a[1] * factor])
                .collect(),
        }
    }

    /// Returns the field scaled to unit norm; the zero field is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(Complex64::new(1.0 / n, 0.0))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            lattice: self.lattice,
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(u, v)| [u[0] + v[0], u[1] + v[1]])
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Per-site `psi^dag psi`.
    pub fn density(&self) -> Vec<f64> {
        self.amps
            .iter()
            .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
            .collect()
    }

    /// Mass `a * sum psi^dag psi` over the sites selected by `mask`.
    pub fn mass_where(&self, mask: impl Fn(usize) -> bool) -> f64 {
        self.lattice.spacing()
            * self
                .amps
                .iter()
                .enumerate()
                .filter(|(i, _)| mask(*i))
                .map(|(_, a)| a[0].norm_sqr() + a[1].norm_sqr())
                .sum::<f64>()
    }
}
