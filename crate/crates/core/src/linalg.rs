//! Dense and Krylov helpers for hermitian problems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenpairs of a hermitian matrix, eigenvalues ascending, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i H t) v` through the eigenbasis.
    pub fn propagate(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        let coeffs = self.vectors.ad_mul(&CVector::from_column_slice(v));
        let phased = CVector::from_iterator(
            self.dim(),
            coeffs
                .iter()
                .zip(&self.values)
                .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t)),
        );
        (&self.vectors * phased).as_slice().to_vec()
    }

    /// Dense `exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, e) in self.values.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -e * t);
            for i in 0..n {
                scaled[(i, j)] *= ph;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Spectral projector onto eigenvectors selected by `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let n = self.dim();
        let cols: Vec<usize> = (0..n).filter(|&j| keep(self.values[j])).collect();
        let sub = self.vectors.select_columns(cols.iter());
        &sub * sub.adjoint()
    }
}

/// Diagonalizes a hermitian matrix. Only the lower triangle is trusted.
pub fn hermitian_eigen(m: &CMatrix) -> Eigensystem {
    assert!(m.is_square(), "hermitian_eigen needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigensystem {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    Eigensystem { values, vectors }
}

/// Largest entry of `|M - M^dag|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Builds the dense matrix of a linear map by applying it to unit vectors.
pub fn dense_from_apply(dim: usize, apply: impl Fn(&[Complex64]) -> Vec<Complex64>) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = Complex64::new(1.0, 0.0);
        let col = apply(&e);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    m
}

/// Settings for Lanczos propagation of `exp(-i H t) v`.
#[derive(Clone, Copy, Debug)]
pub struct KrylovSettings {
    pub subspace: usize,
    pub tolerance: f64,
    pub min_step: f64,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self {
            subspace: 30,
            tolerance: 1e-12,
            min_step: 1e-8,
        }
    }
}

/// Propagates `v` by `exp(-i H t)` with adaptive Lanczos steps.
///
/// Each step accepts only when the a-posteriori error estimate
/// `beta_k |[exp(-i T dt) e_1]_k|` is below tolerance; a step that cannot reach
/// the tolerance above `min_step` is reported as [`Error::StepFailure`].
pub fn krylov_propagate(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    v: &[Complex64],
    t: f64,
    settings: KrylovSettings,
) -> Result<Vec<Complex64>> {
    let mut state = v.to_vec();
    if t == 0.0 {
        return Ok(state);
    }
    let mut elapsed = 0.0;
    let mut step = t;
    while (t - elapsed).abs() > 0.0 {
        let remaining = t - elapsed;
        if step.abs() > remaining.abs() {
            step = remaining;
        }
        let (next, estimate) = lanczos_step(&apply, &state, step, settings.subspace);
        if estimate <= settings.tolerance * step.abs().max(1e-300) / t.abs() || estimate < 1e-15 {
            state = next;
            elapsed += step;
            if estimate < 0.1 * settings.tolerance {
                step *= 1.5;
            }
        } else {
            step *= 0.5;
            if step.abs() < settings.min_step {
                return Err(Error::StepFailure {
                    estimate,
                    tolerance: settings.tolerance,
                    step: step.abs(),
                });
            }
        }
    }
    Ok(state)
}

fn lanczos_step(
    apply: &impl Fn(&[Complex64]) -> Vec<Complex64>,
    v: &[Complex64],
    dt: f64,
    max_dim: usize,
) -> (Vec<Complex64>, f64) {
    let norm = vec_norm(v);
    if norm == 0.0 {
        return (v.to_vec(), 0.0);
    }
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|c| c / norm).collect()];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut residual_beta = 0.0;
    for k in 0..max_dim.min(v.len()) {
        let mut w = apply(&basis[k]);
        let a = vec_dot(&basis[k], &w).re;
        alphas.push(a);
        for (wi, bi) in w.iter_mut().zip(&basis[k]) {
            *wi -= bi * a;
        }
        if k > 0 {
            let b = betas[k - 1];
            for (wi, bi) in w.iter_mut().zip(&basis[k - 1]) {
                *wi -= bi * b;
            }
        }
        // full reorthogonalization keeps long steps honest
        for q in &basis {
            let c = vec_dot(q, &w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= qi * c;
            }
        }
        let b = vec_norm(&w);
        residual_beta = b;
        if b < 1e-14 || k + 1 == max_dim.min(v.len()) {
            break;
        }
        betas.push(b);
        basis.push(w.iter().map(|c| c / b).collect());
    }
    let m = alphas.len();
    let mut tri = CMatrix::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = Complex64::new(alphas[i], 0.0);
        if i + 1 < m {
            tri[(i, i + 1)] = Complex64::new(betas[i], 0.0);
            tri[(i + 1, i)] = Complex64::new(betas[i], 0.0);
        }
    }
    let eig = hermitian_eigen(&tri);
    let mut e1 = vec![Complex64::new(0.0, 0.0); m];
    e1[0] = Complex64::new(1.0, 0.0);
    let coeffs = eig.propagate(&e1, dt);
    let estimate = norm * residual_beta * coeffs[m - 1].norm();
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (q, c) in basis.iter().zip(&coeffs) {
        for (o, qi) in out.iter_mut().zip(q) {
            *o += qi * c * norm;
        }
    }
    (out, estimate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = if i == j {
                    Complex64::new(next(), 0.0)
                } else {
                    Complex64::new(next(), next())
                };
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = random_hermitian(12, 3);
        let eig = hermitian_eigen(&m);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            12,
            eig.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let back = &eig.vectors * d * eig.vectors.adjoint();
        assert!(max_abs(&(back - &m)) < 1e-13);
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let m = random_hermitian(60, 9);
        let eig = hermitian_eigen(&m);
        let v: Vec<Complex64> = (0..60).map(|i| Complex64::new((i as f64).sin(), 0.3)).collect();
        let dense = eig.propagate(&v, 3.0);
        let apply = |x: &[Complex64]| (&m * CVector::from_column_slice(x)).as_slice().to_vec();
        let kry = krylov_propagate(apply, &v, 3.0, KrylovSettings::default()).unwrap();
        let diff: Vec<Complex64> = dense.iter().zip(&kry).map(|(a, b)| a - b).collect();
        assert!(vec_norm(&diff) < 1e-9 * vec_norm(&v));
    }

    #[test]
    fn krylov_reports_step_failure() {
        let m = random_hermitian(40, 5) * Complex64::new(1e6, 0.0);
        let v = vec![Complex64::new(1.0, 0.0); 40];
        let apply = |x: &[Complex64]| (&m * CVector::from_column_slice(x)).as_slice().to_vec();
        let settings = KrylovSettings {
            subspace: 3,
            tolerance: 1e-14,
            min_step: 1e-3,
        };
        assert!(matches!(
            krylov_propagate(apply, &v, 1.0, settings),
            Err(Error::StepFailure { .. })
        ));
    }
}
