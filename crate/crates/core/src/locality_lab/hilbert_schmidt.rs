use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice_core::{mode_projector, DiracOperator, Lattice1D};
use crate::linalg::{hermitian_eigen, CMatrix};

fn potential_energy(op: &DiracOperator) -> Vec<f64> {
    op.potential().iter().map(|v| op.charge() * v).collect()
}

/// `tr(V+-^dag V+-)` with `V+- = P+ V P-` and `P+-` the free projectors.
///
/// Computed in momentum space as `sum_{k != k'} |V(k - k')|^2 tr(P+(k) P-(k'))`.
/// The mean of `V` is removed first (it only couples `k = k'`, where the
/// trace vanishes), so constant potentials give exactly zero.
pub fn hs_norm_offdiag(op: &DiracOperator) -> Result<f64> {
    if op.mass() <= 0.0 {
        return Err(invalid("the energy split needs a mass m > 0"));
    }
    let lat = *op.lattice();
    let l = lat.num_sites();
    let mut v = potential_energy(op);
    let mean = v.iter().sum::<f64>() / l as f64;
    for x in &mut v {
        *x -= mean;
    }
    if v.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut vt: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    op.fourier().forward(&mut vt);
    let power: Vec<f64> = vt.iter().map(|c| c.norm_sqr() / (l * l) as f64).collect();
    let momenta = lat.momenta();
    let plus: Vec<[[f64; 2]; 2]> = momenta.iter().map(|&p| mode_projector(op.mass(), p, 0.0, true)).collect();
    let minus: Vec<[[f64; 2]; 2]> = momenta.iter().map(|&p| mode_projector(op.mass(), p, 0.0, false)).collect();
    let mut total = 0.0;
    for k in 0..l {
        for kp in 0..l {
            if k == kp {
                continue;
            }
            let q = (k + l - kp) % l;
            if power[q] == 0.0 {
                continue;
            }
            let (a, b) = (&plus[k], &minus[kp]);
            let tr = a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1];
            total += power[q] * tr;
        }
    }
    Ok(total)
}

/// Brute-force `||P+ V P-||_F^2` from a dense diagonalization of the free operator.
pub fn hs_norm_offdiag_dense(op: &DiracOperator) -> Result<f64> {
    let free = op.free_part();
    let eig = hermitian_eigen(&free.dense());
    if eig.values.iter().any(|e| e.abs() < 1e-12) {
        return Err(invalid("the energy split needs a gapped spectrum"));
    }
    let p_plus = eig.projector(|e| e > 0.0);
    let p_minus = eig.projector(|e| e < 0.0);
    let v = potential_energy(op);
    let n = 2 * op.lattice().num_sites();
    let vm = CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(v[i / 2], 0.0) } else { Complex64::new(0.0, 0.0) });
    Ok((p_plus * vm * p_minus).norm_squared())
}

/// Potential shapes for the Hilbert-Schmidt scan, all in physical units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialFamily {
    /// Height `height` on the right half.
    Step { height: f64 },
    /// Gaussian bump centered in the domain.
    Gaussian { height: f64, width: f64 },
    Constant { value: f64 },
}

impl PotentialFamily {
    pub fn sample(&self, lattice: &Lattice1D) -> Vec<f64> {
        let len = lattice.length();
        (0..lattice.num_sites())
            .map(|i| {
                let x = lattice.position(i);
                match *self {
                    Self::Step { height } => {
                        if x >= len / 2.0 {
                            height
                        } else {
                            0.0
                        }
                    }
                    Self::Gaussian { height, width } => height * (-(x - len / 2.0).powi(2) / (2.0 * width * width)).exp(),
                    Self::Constant { value } => value,
                }
            })
            .collect()
    }
}

/// One point of a cutoff scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsScanRow {
    pub sites: usize,
    pub spacing: f64,
    /// Momentum cutoff `pi / a`.
    pub cutoff: f64,
    pub hs_norm: f64,
}

/// Hilbert-Schmidt norm of the off-diagonal part at fixed physical length and growing cutoff.
///
/// A diagnostic for how the off-diagonal weight scales with the cutoff; it is
/// not a statement about implementability in the continuum.
pub fn hs_scan(family: &PotentialFamily, mass: f64, charge: f64, length: f64, sizes: &[usize]) -> Result<Vec<HsScanRow>> {
    sizes
        .iter()
        .map(|&l| {
            let a = length / l as f64;
            let lat = Lattice1D::new(l, a)?;
            let op = crate::lattice_core::build_dirac(lat, mass, charge, &family.sample(&lat))?;
            Ok(HsScanRow {
                sites: l,
                spacing: a,
                cutoff: std::f64::consts::PI / a,
                hs_norm: hs_norm_offdiag(&op)?,
            })
        })
        .collect()
}
