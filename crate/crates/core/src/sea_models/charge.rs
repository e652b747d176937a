use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{hermitian_eigen, vec_norm};
use crate::rng::stream;
use crate::sea_models::{FockBasis, FockOperator};

const INTEGER_TOLERANCE: f64 = 1e-8;
const BRANCH_CUTOFF: f64 = 1e-14;

/// Splits `sites` into `count` contiguous cells of near-equal size.
pub fn contiguous_cells(sites: usize, count: usize) -> Result<Vec<Vec<usize>>> {
    if count == 0 || count > sites {
        return Err(invalid(format!("cannot split {sites} sites into {count} cells")));
    }
    Ok((0..count).map(|c| (c * sites / count..(c + 1) * sites / count).collect()).collect())
}

fn check_partition(basis: &FockBasis, cells: &[Vec<usize>]) -> Result<()> {
    let sites = basis.lattice().num_sites();
    let mut seen = vec![false; sites];
    for &x in cells.iter().flatten() {
        if x >= sites || seen[x] {
            return Err(invalid(format!("cells do not partition the {sites} sites")));
        }
        seen[x] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(invalid(format!("cells do not cover the {sites} sites")));
    }
    Ok(())
}

/// `Q(A) = -e sum_{x in A, s} :psi_s^dag(x) psi_s(x):`, normal ordered with respect to the filled sea.
///
/// In mode language `-e (sum_kl M_kl a_k^dag a_l - sum_{k neg} M_kk)` with
/// `M` the cell overlap of the mode functions. An empty cell gives zero.
pub fn charge_operator(basis: &FockBasis, cell: &[usize]) -> Result<FockOperator> {
    let m = basis.cell_overlap(cell)?;
    let n = basis.num_modes();
    let e = basis.charge();
    let mut terms = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            if m[(k, l)].norm() > 0.0 {
                terms.push((-e * m[(k, l)], vec![(k, true), (l, false)]));
            }
        }
    }
    let sea: Complex64 = (0..basis.negative_modes()).map(|k| m[(k, k)]).sum();
    Ok(FockOperator::from_terms(n, &terms, e * sea))
}

/// Total charge: the cell operator over every site.
pub fn total_charge(basis: &FockBasis) -> Result<FockOperator> {
    let all: Vec<usize> = (0..basis.lattice().num_sites()).collect();
    charge_operator(basis, &all)
}

/// Cell charge in the empty picture, built from its own field expansion.
///
/// Negative-energy modes enter the field as creators of positive charges,
/// `psi = sum_pos U_k a_k + zeta sum_neg U_k a_k^dag` with `zeta = -1`, and
/// the product `psi^dag psi` is normal ordered with respect to the bare vacuum
/// (annihilators to the right, contraction dropped).
pub fn charge_operator_empty(basis: &FockBasis, cell: &[usize]) -> Result<FockOperator> {
    const ZETA: f64 = -1.0;
    let n = basis.num_modes();
    let neg = basis.negative_modes();
    let u = basis.modes();
    let sites = basis.lattice().num_sites();
    let e = basis.charge();
    // field component = sum over (coefficient, mode, is_creator)
    let field = |row: usize| -> Vec<(Complex64, usize, bool)> {
        (0..n)
            .map(|k| {
                if k < neg {
                    (u[(row, k)] * ZETA, k, true)
                } else {
                    (u[(row, k)], k, false)
                }
            })
            .collect()
    };
    let mut acc: BTreeMap<(usize, bool, usize, bool), Complex64> = BTreeMap::new();
    for &x in cell {
        if x >= sites {
            return Err(invalid(format!("site {x} outside a lattice of {sites} sites")));
        }
        for s in 0..2 {
            let f = field(2 * x + s);
            for &(c1, k1, cr1) in &f {
                // adjoint of the first factor
                let (d1, dag1) = (c1.conj(), !cr1);
                for &(c2, k2, cr2) in &f {
                    let c = -e * d1 * c2;
                    if c.norm() == 0.0 {
                        continue;
                    }
                    if !dag1 && cr2 {
                        // a_k1 a_k2^dag -> -a_k2^dag a_k1 after dropping the contraction
                        *acc.entry((k2, true, k1, false)).or_default() -= c;
                    } else {
                        *acc.entry((k1, dag1, k2, cr2)).or_default() += c;
                    }
                }
            }
        }
    }
    let terms: Vec<(Complex64, Vec<(usize, bool)>)> = acc
        .into_iter()
        .map(|((k1, d1, k2, d2), c)| (c, vec![(k1, d1), (k2, d2)]))
        .collect();
    Ok(FockOperator::from_terms(n, &terms, Complex64::new(0.0, 0.0)))
}

/// `<psi|Q^2|psi> - <psi|Q|psi>^2`.
pub fn variance(op: &FockOperator, psi: &[Complex64]) -> f64 {
    let qv = op.apply(psi);
    let mean: Complex64 = qv.iter().zip(psi).map(|(a, b)| b.conj() * a).sum();
    let sq: f64 = qv.iter().map(|c| c.norm_sqr()).sum();
    sq - mean.norm_sqr()
}

/// Charges of the cells in units of `e`, with the implied signed points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedConfiguration {
    /// Cell charge divided by the elementary charge.
    pub cell_charges: Vec<i64>,
    /// Sites of positive charges; each sits at its cell's middle site.
    pub positive_points: Vec<usize>,
    /// Sites of negative charges.
    pub negative_points: Vec<usize>,
}

impl SignedConfiguration {
    fn from_charges(cells: &[Vec<usize>], charges: Vec<i64>) -> Self {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (cell, &z) in cells.iter().zip(&charges) {
            let site = cell[cell.len() / 2];
            let points = if z > 0 { &mut positive } else { &mut negative };
            points.extend(std::iter::repeat_n(site, z.unsigned_abs() as usize));
        }
        Self {
            cell_charges: charges,
            positive_points: positive,
            negative_points: negative,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.positive_points.is_empty() && self.negative_points.is_empty()
    }
}

/// Joint Born distribution of the cell charges of one state.
///
/// Built once by measuring the cells left to right with spectral projectors
/// `prod_{z' != z} (Q/e - z') / (z - z')`; sampling then draws from the
/// cached outcome table.
#[derive(Clone, Debug)]
pub struct SignedSampler {
    cells: Vec<Vec<usize>>,
    outcomes: Vec<(Vec<i64>, f64)>,
}

impl SignedSampler {
    pub fn new(basis: &FockBasis, state: &[Complex64], cells: &[Vec<usize>]) -> Result<Self> {
        check_partition(basis, cells)?;
        if state.len() != basis.dim() {
            return Err(invalid("state does not live in this Fock space"));
        }
        let norm = vec_norm(state);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(invalid(format!("state must be normalized, norm {norm}")));
        }
        let e = basis.charge();
        let mut ops = Vec::with_capacity(cells.len());
        for cell in cells {
            let q = charge_operator(basis, cell)?.scaled(Complex64::new(1.0 / e, 0.0));
            let values = integer_spectrum(&q)?;
            ops.push((q, values));
        }
        let mut outcomes = Vec::new();
        explore(&ops, state.to_vec(), &mut Vec::new(), &mut outcomes);
        Ok(Self {
            cells: cells.to_vec(),
            outcomes,
        })
    }

    /// Outcome probabilities keyed by the cell charge tuple.
    pub fn distribution(&self) -> BTreeMap<Vec<i64>, f64> {
        self.outcomes.iter().cloned().collect()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> SignedConfiguration {
        let total: f64 = self.outcomes.iter().map(|o| o.1).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = &self.outcomes.last().expect("at least one outcome").0;
        for (charges, p) in &self.outcomes {
            if u < *p {
                pick = charges;
                break;
            }
            u -= p;
        }
        SignedConfiguration::from_charges(&self.cells, pick.clone())
    }
}

/// Distinct eigenvalues of a charge operator, checked to be integers.
fn integer_spectrum(q: &FockOperator) -> Result<Vec<i64>> {
    let mut out: Vec<i64> = Vec::new();
    for v in q.eigenvalues()? {
        let z = v.round();
        if (v - z).abs() > INTEGER_TOLERANCE {
            return Err(invalid(format!("charge eigenvalue {v} is not an integer multiple of e")));
        }
        if !out.contains(&(z as i64)) {
            out.push(z as i64);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn project(q: &FockOperator, values: &[i64], z: i64, v: &[Complex64]) -> Vec<Complex64> {
    let mut w = v.to_vec();
    for &other in values.iter().filter(|&&o| o != z) {
        let qw = q.apply(&w);
        let d = (z - other) as f64;
        for (a, b) in w.iter_mut().zip(qw) {
            *a = (b - *a * other as f64) / d;
        }
    }
    w
}

fn explore(ops: &[(FockOperator, Vec<i64>)], v: Vec<Complex64>, prefix: &mut Vec<i64>, out: &mut Vec<(Vec<i64>, f64)>) {
    let Some(((q, values), rest)) = ops.split_first() else {
        out.push((prefix.clone(), v.iter().map(|c| c.norm_sqr()).sum()));
        return;
    };
    for &z in values {
        let w = project(q, values, z, &v);
        let p: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        if p > BRANCH_CUTOFF {
            prefix.push(z);
            explore(rest, w, prefix, out);
            prefix.pop();
        }
    }
}

/// `count` signed configurations of `state`; draw `i` uses stream `(seed, "signed", i)`.
pub fn sample_signed_config(
    basis: &FockBasis,
    state: &[Complex64],
    cells: &[Vec<usize>],
    count: usize,
    seed: u64,
) -> Result<Vec<SignedConfiguration>> {
    let sampler = SignedSampler::new(basis, state, cells)?;
    Ok((0..count).map(|i| sampler.sample(&mut stream(seed, "signed", i as u64))).collect())
}

/// Cell-charge weights from a dense diagonalization of a generic combination `sum_c r_c Q(c)`.
///
/// Every eigenvector of the combination is a joint eigenvector of the cell
/// charges; its tuple is read off from the expectation values.
pub fn joint_spectral_weights(basis: &FockBasis, state: &[Complex64], cells: &[Vec<usize>], seed: u64) -> Result<BTreeMap<Vec<i64>, f64>> {
    check_partition(basis, cells)?;
    let e = basis.charge();
    let ops: Vec<FockOperator> = cells
        .iter()
        .map(|c| charge_operator(basis, c).map(|q| q.scaled(Complex64::new(1.0 / e, 0.0))))
        .collect::<Result<_>>()?;
    let mut rng = stream(seed, "spectral-oracle", 0);
    let mut combo = FockOperator::zeros(basis.dim());
    for q in &ops {
        combo = combo.add(&q.scaled(Complex64::new(1.0 + rng.random::<f64>() * std::f64::consts::E, 0.0)));
    }
    let eig = hermitian_eigen(&combo.dense()?);
    let mut out = BTreeMap::new();
    for j in 0..eig.dim() {
        let v: Vec<Complex64> = eig.vectors.column(j).iter().copied().collect();
        let w: f64 = v.iter().zip(state).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
        let tuple: Vec<i64> = ops.iter().map(|q| q.expectation(&v).re.round() as i64).collect();
        *out.entry(tuple).or_insert(0.0) += w;
    }
    out.retain(|_, w| *w > BRANCH_CUTOFF);
    Ok(out)
}
