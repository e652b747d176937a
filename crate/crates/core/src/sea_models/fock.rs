use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice_core::{DiracOperator, Lattice1D, GAP_THRESHOLD};
use crate::linalg::{hermitian_eigen, CMatrix};

/// Largest lattice for which a Fock space is built.
pub const MAX_FOCK_SITES: usize = 6;
/// Largest Fock dimension converted to a dense matrix.
pub const DENSE_FOCK_LIMIT: usize = 1024;

/// Which state counts as "no particles".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeaConvention {
    /// Reference state has every negative-energy mode occupied.
    FilledSea,
    /// Reference state is the bare vacuum; occupied negative modes are particles of negative energy.
    Empty,
}

/// Fock space over the free eigenmodes of a small lattice.
///
/// Modes are sorted by energy, so modes `0..negative_modes()` form the
/// negative band. A basis state is the bitmask of occupied modes and its index
/// is the bitmask itself.
#[derive(Clone, Debug)]
pub struct FockBasis {
    lattice: Lattice1D,
    charge: f64,
    convention: SeaConvention,
    energies: Vec<f64>,
    modes: CMatrix,
    negative: usize,
}

/// Builds the basis and its free Hamiltonian.
///
/// The filled-sea Hamiltonian is `sum E_k n_k - sum_neg E_k` (ground energy 0);
/// the empty one is `sum E_k n_k`, whose minimum is the sum of the negative energies.
pub fn build_fock(lattice: Lattice1D, mass: f64, charge: f64, convention: SeaConvention) -> Result<(FockBasis, FockOperator)> {
    let basis = FockBasis::new(lattice, mass, charge, convention)?;
    let h = basis.hamiltonian();
    Ok((basis, h))
}

impl FockBasis {
    pub fn new(lattice: Lattice1D, mass: f64, charge: f64, convention: SeaConvention) -> Result<Self> {
        let sites = lattice.num_sites();
        if sites > MAX_FOCK_SITES {
            return Err(Error::FockTooLarge {
                sites,
                dim: 1usize.checked_shl(2 * sites as u32).unwrap_or(usize::MAX),
                limit: 1 << (2 * MAX_FOCK_SITES),
            });
        }
        if !charge.is_finite() {
            return Err(invalid("charge must be finite"));
        }
        let op = DiracOperator::free(lattice, mass)?;
        let eig = hermitian_eigen(&op.dense());
        let min_abs = eig.values.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        if min_abs < GAP_THRESHOLD {
            return Err(Error::Gapless { min_abs });
        }
        let negative = eig.values.iter().filter(|&&e| e < 0.0).count();
        Ok(Self {
            lattice,
            charge,
            convention,
            energies: eig.values,
            modes: eig.vectors,
            negative,
        })
    }

    pub fn lattice(&self) -> &Lattice1D {
        &self.lattice
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn convention(&self) -> SeaConvention {
        self.convention
    }

    pub fn num_modes(&self) -> usize {
        self.energies.len()
    }

    pub fn negative_modes(&self) -> usize {
        self.negative
    }

    pub fn dim(&self) -> usize {
        1 << self.num_modes()
    }

    pub fn mode_energies(&self) -> &[f64] {
        &self.energies
    }

    /// Mode functions as columns, rows indexed by `2 * site + spinor`.
    pub fn modes(&self) -> &CMatrix {
        &self.modes
    }

    /// Bitmask with every negative mode occupied.
    pub fn sea_mask(&self) -> usize {
        (1 << self.negative) - 1
    }

    /// Reference state of this basis' convention.
    pub fn reference_state(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        let idx = match self.convention {
            SeaConvention::FilledSea => self.sea_mask(),
            SeaConvention::Empty => 0,
        };
        v[idx] = Complex64::new(1.0, 0.0);
        v
    }

    /// The filled sea, regardless of convention.
    pub fn filled_vacuum(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        v[self.sea_mask()] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn hamiltonian(&self) -> FockOperator {
        let shift: f64 = match self.convention {
            SeaConvention::FilledSea => -self.energies[..self.negative].iter().sum::<f64>(),
            SeaConvention::Empty => 0.0,
        };
        let diag = (0..self.dim())
            .map(|b| {
                let e: f64 = (0..self.num_modes()).filter(|k| b >> k & 1 == 1).map(|k| self.energies[k]).sum();
                Complex64::new(e + shift, 0.0)
            })
            .collect();
        FockOperator::diagonal(diag)
    }

    /// `sum_{x in cell, s} conj(U_{xs,k}) U_{xs,l}`.
    pub fn cell_overlap(&self, cell: &[usize]) -> Result<CMatrix> {
        let n = self.num_modes();
        let sites = self.lattice.num_sites();
        let mut m = CMatrix::zeros(n, n);
        for &x in cell {
            if x >= sites {
                return Err(invalid(format!("site {x} outside a lattice of {sites} sites")));
            }
            for s in 0..2 {
                let row = 2 * x + s;
                for k in 0..n {
                    let ck = self.modes[(row, k)].conj();
                    for l in 0..n {
                        m[(k, l)] += ck * self.modes[(row, l)];
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Applies a product of ladder operators, rightmost first.
///
/// `ops[i] = (mode, true)` is a creator. Returns the new bitmask and the
/// Jordan-Wigner sign, or `None` if the state is annihilated.
pub fn apply_ladder(mut bits: usize, ops: &[(usize, bool)]) -> Option<(usize, f64)> {
    let mut sign = 1.0;
    for &(k, dagger) in ops.iter().rev() {
        let occupied = bits >> k & 1 == 1;
        if occupied == dagger {
            return None;
        }
        if (bits & ((1 << k) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        bits ^= 1 << k;
    }
    Some((bits, sign))
}

/// Sparse operator on a Fock space, stored by column.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl FockOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            columns: vec![Vec::new(); dim],
        }
    }

    pub fn diagonal(diag: Vec<Complex64>) -> Self {
        Self {
            columns: diag.into_iter().enumerate().map(|(i, d)| vec![(i, d)]).collect(),
        }
    }

    /// Operator from `(row, col, value)` triplets; repeated positions add up.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut acc: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (i, j, v) in entries {
            *acc[j].entry(i).or_default() += v;
        }
        Self {
            columns: acc.into_iter().map(|c| c.into_iter().collect()).collect(),
        }
    }

    /// `constant + sum_t c_t * (product of ladder operators)_t` on `2^modes` states.
    pub fn from_terms(modes: usize, terms: &[(Complex64, Vec<(usize, bool)>)], constant: Complex64) -> Self {
        let dim = 1usize << modes;
        let mut columns = Vec::with_capacity(dim);
        for b in 0..dim {
            let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
            if constant != Complex64::new(0.0, 0.0) {
                acc.insert(b, constant);
            }
            for (c, ops) in terms {
                if let Some((row, sign)) = apply_ladder(b, ops) {
                    *acc.entry(row).or_default() += c * sign;
                }
            }
            columns.push(acc.into_iter().filter(|(_, v)| v.norm() > 0.0).collect());
        }
        Self { columns }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v)))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (j, col) in self.columns.iter().enumerate() {
            if v[j] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(i, a) in col {
                out[i] += a * v[j];
            }
        }
        out
    }

    /// `<v|A|v>`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        self.apply(v).iter().zip(v).map(|(a, b)| b.conj() * a).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            columns: self.columns.iter().map(|col| col.iter().map(|&(i, v)| (i, v * c)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut columns = Vec::with_capacity(self.dim());
        for (a, b) in self.columns.iter().zip(&other.columns) {
            let mut acc: BTreeMap<usize, Complex64> = a.iter().copied().collect();
            for &(i, v) in b {
                *acc.entry(i).or_default() += v;
            }
            columns.push(acc.into_iter().collect());
        }
        Self { columns }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        let mut touched = Vec::new();
        let mut columns = Vec::with_capacity(n);
        for col in &other.columns {
            for &(k, b) in col {
                for &(i, a) in &self.columns[k] {
                    if scratch[i] == Complex64::new(0.0, 0.0) {
                        touched.push(i);
                    }
                    scratch[i] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut out = Vec::with_capacity(touched.len());
            for &i in &touched {
                out.push((i, scratch[i]));
                scratch[i] = Complex64::new(0.0, 0.0);
            }
            touched.clear();
            columns.push(out);
        }
        Self { columns }
    }

    pub fn adjoint(&self) -> Self {
        let mut columns = vec![Vec::new(); self.dim()];
        for (i, j, v) in self.entries() {
            columns[i].push((j, v.conj()));
        }
        for c in &mut columns {
            c.sort_by_key(|e| e.0);
        }
        Self { columns }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `[A, B]`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        self.matmul(other).sub(&other.matmul(self)).norm()
    }

    /// Frobenius norm of `A - A^dag`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).norm()
    }

    pub fn dense(&self) -> Result<CMatrix> {
        let n = self.dim();
        if n > DENSE_FOCK_LIMIT {
            return Err(Error::DimensionBudget {
                dim: n,
                budget: DENSE_FOCK_LIMIT,
            });
        }
        let mut m = CMatrix::zeros(n, n);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        Ok(m)
    }

    /// Connected blocks of the sparsity pattern, each sorted.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.entries() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Eigenvalues of a hermitian operator, ascending, diagonalized block by block.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        for block in self.blocks() {
            if block.len() > 4 * DENSE_FOCK_LIMIT {
                return Err(Error::DimensionBudget {
                    dim: block.len(),
                    budget: 4 * DENSE_FOCK_LIMIT,
                });
            }
            let pos: BTreeMap<usize, usize> = block.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let mut m = CMatrix::zeros(block.len(), block.len());
            for (k, &j) in block.iter().enumerate() {
                for &(i, v) in &self.columns[j] {
                    m[(pos[&i], k)] += v;
                }
            }
            out.extend(hermitian_eigen(&m).values);
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(n: usize) -> Lattice1D {
        Lattice1D::small(n, 1.0).unwrap()
    }

    #[test]
    fn dimension_and_guard() {
        let (b, _) = build_fock(lat(2), 1.0, 1.0, SeaConvention::FilledSea).unwrap();
        assert_eq!(b.dim(), 16);
        assert_eq!(b.negative_modes(), 2);
        assert!(matches!(
            FockBasis::new(lat(7), 1.0, 1.0, SeaConvention::FilledSea),
            Err(Error::FockTooLarge { dim: 16384, .. })
        ));
        assert!(matches!(FockBasis::new(lat(2), 0.0, 1.0, SeaConvention::Empty), Err(Error::Gapless { .. })));
    }

    #[test]
    fn filled_sea_ground_energy_is_zero() {
        let (b, h) = build_fock(lat(3), 1.0, 1.0, SeaConvention::FilledSea).unwrap();
        let ev = h.eigenvalues().unwrap();
        assert!(ev[0].abs() < 1e-12);
        assert!((h.expectation(&b.reference_state()).re).abs() < 1e-12);
    }

    #[test]
    fn empty_convention_is_unbounded_below_in_the_cutoff_sense() {
        let (b, h) = build_fock(lat(3), 1.0, 1.0, SeaConvention::Empty).unwrap();
        let ev = h.eigenvalues().unwrap();
        let neg: f64 = b.mode_energies()[..b.negative_modes()].iter().sum();
        assert!(ev[0] < 0.0);
        assert!((ev[0] - neg).abs() < 1e-12);
        assert_eq!(h.expectation(&b.reference_state()).re, 0.0);
    }

    #[test]
    fn ladder_anticommutation() {
        // {a_j, a_k^dag} = delta_jk on every basis state of four modes
        for b in 0..16usize {
            for j in 0..4 {
                for k in 0..4 {
                    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                    for ops in [vec![(j, false), (k, true)], vec![(k, true), (j, false)]] {
                        if let Some((r, s)) = apply_ladder(b, &ops) {
                            *acc.entry(r).or_default() += s;
                        }
                    }
                    acc.retain(|_, v| *v != 0.0);
                    if j == k {
                        assert_eq!(acc, BTreeMap::from([(b, 1.0)]));
                    } else {
                        assert!(acc.is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn sparse_algebra_matches_dense() {
        let t = vec![
            (Complex64::new(0.3, 0.1), vec![(0, true), (2, false)]),
            (Complex64::new(-0.7, 0.0), vec![(1, true), (3, true)]),
        ];
        let a = FockOperator::from_terms(4, &t, Complex64::new(0.5, 0.0));
        let b = a.adjoint();
        let (da, db) = (a.dense().unwrap(), b.dense().unwrap());
        assert!((a.matmul(&b).dense().unwrap() - &da * &db).norm() < 1e-14);
        assert!((db - da.adjoint()).norm() < 1e-14);
        let h = a.add(&b);
        let mut dense = hermitian_eigen(&h.dense().unwrap()).values;
        dense.sort_by(f64::total_cmp);
        for (x, y) in h.eigenvalues().unwrap().iter().zip(&dense) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
