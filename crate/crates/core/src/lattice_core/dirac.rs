use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::lattice_core::spinor::{ALPHA, BETA};
use crate::lattice_core::{Fourier, Lattice1D, SpinorField};
use crate::linalg::{hermitian_eigen, CMatrix, Eigensystem};

/// Lattice Dirac Hamiltonian `H = alpha p + beta m + e V0(x)` with the spectral derivative `p`.
#[derive(Clone, Debug)]
pub struct DiracOperator {
    lattice: Lattice1D,
    mass: f64,
    charge: f64,
    potential: Vec<f64>,
    fourier: Arc<Fourier>,
    eigen: Arc<OnceLock<Eigensystem>>,
}

/// Builds the Dirac operator after validating its inputs.
pub fn build_dirac(
    lattice: Lattice1D,
    mass: f64,
    charge: f64,
    potential: &[f64],
) -> Result<DiracOperator> {
    if !(mass.is_finite() && mass >= 0.0) {
        return Err(invalid(format!("mass must be finite and >= 0, got {mass}")));
    }
    if !charge.is_finite() {
        return Err(invalid("charge must be finite"));
    }
    if potential.len() != lattice.num_sites() {
        return Err(invalid(format!(
            "potential has {} entries, lattice has {} sites",
            potential.len(),
            lattice.num_sites()
        )));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(invalid("potential contains non-finite entries"));
    }
    Ok(DiracOperator {
        lattice,
        mass,
        charge,
        potential: potential.to_vec(),
        fourier: Arc::new(Fourier::new(lattice.num_sites())),
        eigen: Arc::new(OnceLock::new()),
    })
}

/// Positive-energy and negative-energy spinors of the free mode with momentum `p`.
///
/// For `m = p = 0` the mode is degenerate and the standard basis is returned.
pub fn free_spinors(mass: f64, p: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let e = mass.hypot(p);
    if e + mass == 0.0 {
        return (
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        );
    }
    let n = (2.0 * e * (e + mass)).sqrt();
    (
        [Complex64::new((e + mass) / n, 0.0), Complex64::new(p / n, 0.0)],
        [Complex64::new(-p / n, 0.0), Complex64::new((e + mass) / n, 0.0)],
    )
}

impl DiracOperator {
    /// Free operator (zero potential).
    pub fn free(lattice: Lattice1D, mass: f64) -> Result<Self> {
        build_dirac(lattice, mass, 0.0, &vec![0.0; lattice.num_sites()])
    }

    pub fn lattice(&self) -> &Lattice1D {
        &self.lattice
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    /// Same mass and potential with a different charge.
    pub fn with_charge(&self, charge: f64) -> Result<Self> {
        build_dirac(self.lattice, self.mass, charge, &self.potential)
    }

    /// Same mass without the potential.
    pub fn free_part(&self) -> Self {
        Self::free(self.lattice, self.mass).expect("validated mass")
    }

    /// Constant potential energy `e V0` if the potential is uniform.
    pub fn uniform_shift(&self) -> Option<f64> {
        let v0 = self.potential[0];
        self.potential
            .iter()
            .all(|&v| v == v0)
            .then_some(self.charge * v0)
    }

    /// `H psi`, with the kinetic term applied in momentum space.
    pub fn apply(&self, field: &SpinorField) -> SpinorField {
        let l = self.lattice.num_sites();
        let mut up: Vec<Complex64> = field.amplitudes().iter().map(|a| a[0]).collect();
        let mut down: Vec<Complex64> = field.amplitudes().iter().map(|a| a[1]).collect();
        self.fourier.forward(&mut up);
        self.fourier.forward(&mut down);
        for (k, p) in self.lattice.momenta().into_iter().enumerate() {
            // alpha = sigma_x swaps the components
            let (u, d) = (up[k], down[k]);
            up[k] = d * p;
            down[k] = u * p;
        }
        self.fourier.inverse(&mut up);
        self.fourier.inverse(&mut down);
        let amps = (0..l)
            .map(|i| {
                let a = field.amplitudes()[i];
                let v = self.charge * self.potential[i];
                [
                    up[i] + a[0] * (self.mass + v),
                    down[i] + a[1] * (v - self.mass),
                ]
            })
            .collect();
        SpinorField::new(self.lattice, amps).expect("finite by construction")
    }

    /// Matrix elements `p_{ij}` of the spectral derivative `-i d/dx`.
    pub fn momentum_matrix(lattice: &Lattice1D) -> CMatrix {
        let l = lattice.num_sites();
        let momenta = lattice.momenta();
        let column: Vec<Complex64> = (0..l)
            .map(|d| {
                let s: Complex64 = (0..l)
                    .map(|k| {
                        let phase = 2.0 * PI * lattice.wave_index(k) as f64 * d as f64 / l as f64;
                        Complex64::from_polar(momenta[k], phase)
                    })
                    .sum();
                s / l as f64
            })
            .collect();
        CMatrix::from_fn(l, l, |i, j| column[(i + l - j) % l])
    }

    /// Dense `2L x 2L` matrix, index `2 * site + component`.
    pub fn dense(&self) -> CMatrix {
        let l = self.lattice.num_sites();
        let p = Self::momentum_matrix(&self.lattice);
        let mut h = CMatrix::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                for s in 0..2 {
                    for t in 0..2 {
                        h[(2 * i + s, 2 * j + t)] = ALPHA[s][t] * p[(i, j)];
                    }
                }
            }
            for s in 0..2 {
                h[(2 * i + s, 2 * i + s)] +=
                    BETA[s][s] * self.mass + self.charge * self.potential[i];
            }
        }
        h
    }

    /// Eigenpairs, analytic for uniform potentials and dense otherwise; cached.
    pub fn eigensystem(&self) -> &Eigensystem {
        self.eigen.get_or_init(|| match self.uniform_shift() {
            Some(shift) => self.free_eigensystem(shift),
            None => hermitian_eigen(&self.dense()),
        })
    }

    /// Eigenvalues from a dense diagonalization, regardless of structure.
    pub fn dense_spectrum(&self) -> Vec<f64> {
        hermitian_eigen(&self.dense()).values
    }

    /// Analytic free spectrum `+-sqrt(m^2 + p^2) + shift` over the momentum grid, sorted.
    pub fn free_spectrum(lattice: &Lattice1D, mass: f64) -> Vec<f64> {
        let mut out: Vec<f64> = lattice
            .momenta()
            .into_iter()
            .flat_map(|p| {
                let e = mass.hypot(p);
                [-e, e]
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    fn free_eigensystem(&self, shift: f64) -> Eigensystem {
        let l = self.lattice.num_sites();
        let momenta = self.lattice.momenta();
        let mut pairs: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(2 * l);
        let norm = 1.0 / (l as f64).sqrt();
        for (k, &p) in momenta.iter().enumerate() {
            let e = self.mass.hypot(p);
            let (up, dn) = free_spinors(self.mass, p);
            let kw = 2.0 * PI * self.lattice.wave_index(k) as f64 / l as f64;
            for (energy, u) in [(e, up), (-e, dn)] {
                let v: Vec<Complex64> = (0..l)
                    .flat_map(|i| {
                        let ph = Complex64::from_polar(norm, kw * i as f64);
                        [u[0] * ph, u[1] * ph]
                    })
                    .collect();
                pairs.push((energy + shift, v));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let values = pairs.iter().map(|p| p.0).collect();
        let vectors = CMatrix::from_fn(2 * l, 2 * l, |i, j| pairs[j].1[i]);
        Eigensystem { values, vectors }
    }

    /// `exp(-i H t) psi`.
    pub fn evolve(&self, field: &SpinorField, t: f64) -> Result<SpinorField> {
        if field.lattice() != &self.lattice {
            return Err(invalid("field and operator live on different lattices"));
        }
        if !t.is_finite() {
            return Err(invalid("evolution time must be finite"));
        }
        if t == 0.0 {
            return Ok(field.clone());
        }
        match self.uniform_shift() {
            Some(shift) => Ok(self.evolve_free(field, t, shift)),
            None => {
                let out = self.eigensystem().propagate(&field.to_flat(), t);
                SpinorField::from_flat(self.lattice, &out)
            }
        }
    }

    fn evolve_free(&self, field: &SpinorField, t: f64, shift: f64) -> SpinorField {
        let l = self.lattice.num_sites();
        let mut up: Vec<Complex64> = field.amplitudes().iter().map(|a| a[0]).collect();
        let mut down: Vec<Complex64> = field.amplitudes().iter().map(|a| a[1]).collect();
        self.fourier.forward(&mut up);
        self.fourier.forward(&mut down);
        let global = Complex64::from_polar(1.0, -shift * t);
        for (k, p) in self.lattice.momenta().into_iter().enumerate() {
            let e = self.mass.hypot(p);
            let (c, s) = ((e * t).cos(), (e * t).sin());
            let (u, d) = (up[k], down[k]);
            // exp(-i h t) = cos(Et) - i sin(Et) h/E with h = [[m, p], [p, -m]]
            let (hu, hd) = if e > 0.0 {
                ((u * self.mass + d * p) / e, (u * p - d * self.mass) / e)
            } else {
                (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            };
            let mi = Complex64::new(0.0, -s);
            up[k] = (u * c + hu * mi) * global;
            down[k] = (d * c + hd * mi) * global;
        }
        self.fourier.inverse(&mut up);
        self.fourier.inverse(&mut down);
        let amps = (0..l).map(|i| [up[i], down[i]]).collect();
        SpinorField::new(self.lattice, amps).expect("finite by construction")
    }

    /// Energy expectation `<psi, H psi>`.
    pub fn energy(&self, field: &SpinorField) -> f64 {
        field.inner(&self.apply(field)).re
    }
}

/// Free plane-wave eigenstate with FFT bin `k` on the given band (`positive` or not).
pub fn plane_wave(lattice: Lattice1D, mass: f64, k: usize, positive: bool) -> SpinorField {
    let p = lattice.momenta()[k];
    let (up, dn) = free_spinors(mass, p);
    let u = if positive { up } else { dn };
    let kw = 2.0 * PI * lattice.wave_index(k) as f64 / lattice.length();
    let norm = 1.0 / lattice.length().sqrt();
    SpinorField::from_fn(lattice, |x| {
        let ph = Complex64::from_polar(norm, kw * x);
        [u[0] * ph, u[1] * ph]
    })
}
