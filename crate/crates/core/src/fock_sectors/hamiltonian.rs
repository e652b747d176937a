use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock_sectors::{SectorSpace, SectorState};
use crate::lattice_core::{spectral_split, DiracOperator, Lattice1D};
use crate::linalg::{hermitian_eigen, CMatrix, Eigensystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const DROP: f64 = 1e-15;

/// Normalized periodic Gaussian indexed by site offset, with `sum a * chi = 1`.
pub fn smearing_profile(lattice: &Lattice1D, epsilon: f64) -> Vec<f64> {
    let l = lattice.num_sites();
    let a = lattice.spacing();
    let raw: Vec<f64> = (0..l)
        .map(|d| {
            let dist = d.min(l - d) as f64 * a;
            (-dist * dist / (2.0 * epsilon * epsilon)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum::<f64>() * a;
    raw.into_iter().map(|w| w / total).collect()
}

/// Emission and absorption coupling `g sum_xy chi(y - x) psi^dag_x alpha psi_x (b_y^dag + b_y)`.
///
/// With l2-normalized slot amplitudes the coupling constant is `g = e * sqrt(a)`,
/// which reproduces the `e sqrt(n+1) chi(y - x)` emission amplitude of the
/// continuum-normalized tensors.
#[derive(Clone, Debug)]
pub struct CouplingKernel {
    charge: f64,
    epsilon: f64,
    profile: Vec<f64>,
}

impl CouplingKernel {
    pub fn new(lattice: &Lattice1D, charge: f64, epsilon: f64) -> Result<Self> {
        if !charge.is_finite() {
            return Err(invalid("coupling charge must be finite"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid(format!("smearing width must be > 0, got {epsilon}")));
        }
        Ok(Self {
            charge,
            epsilon,
            profile: smearing_profile(lattice, epsilon),
        })
    }

    /// Kernel with the default width `2a`.
    pub fn with_default_width(lattice: &Lattice1D, charge: f64) -> Result<Self> {
        Self::new(lattice, charge, 2.0 * lattice.spacing())
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `chi` at site offset `(y - x) mod L`.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }
}

/// Pair creation from a photon (or a classical drive) into one positive- and one negative-energy particle.
#[derive(Clone, Debug)]
pub struct PairKernel {
    strength: f64,
    width: f64,
    drive: Option<Vec<Complex64>>,
}

impl PairKernel {
    pub fn new(strength: f64, width: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(invalid(format!("pair strength must be >= 0, got {strength}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!("pair width must be > 0, got {width}")));
        }
        Ok(Self {
            strength,
            width,
            drive: None,
        })
    }

    /// Replaces the quantized photon by a fixed classical amplitude per site.
    ///
    /// Pairs are then created and annihilated within a photon sector.
    pub fn with_drive(mut self, amplitudes: Vec<Complex64>) -> Self {
        self.drive = Some(amplitudes);
        self
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn drive(&self) -> Option<&[Complex64]> {
        self.drive.as_deref()
    }
}

/// Which parts of the Hamiltonian to act with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parts {
    pub free: bool,
    pub coupling: bool,
    pub pairs: bool,
}

impl Parts {
    pub const ALL: Parts = Parts {
        free: true,
        coupling: true,
        pairs: true,
    };
    pub const LP: Parts = Parts {
        free: true,
        coupling: true,
        pairs: false,
    };
    pub const PAIRS: Parts = Parts {
        free: false,
        coupling: false,
        pairs: true,
    };
    pub const FREE: Parts = Parts {
        free: true,
        coupling: false,
        pairs: false,
    };
}

#[derive(Debug)]
struct PairTable {
    strength: f64,
    modes: usize,
    /// antisymmetric amplitude `phi_y(a, b)` at `y * modes^2 + a * modes + b`
    dense: Vec<Complex64>,
    /// nonzero `(a, b, phi_y(a, b))` with `a < b`, per `y`
    lists: Vec<Vec<(usize, usize, Complex64)>>,
    drive: Option<Vec<Complex64>>,
}

/// Assembled sector Hamiltonian: free Dirac and photon one-body terms,
/// emission/absorption coupling and optional pair terms.
#[derive(Debug)]
pub struct SectorHamiltonian {
    space: Arc<SectorSpace>,
    dirac: DiracOperator,
    hop: Vec<Vec<(usize, Complex64)>>,
    photon: Vec<f64>,
    coupling: Option<(f64, Vec<f64>)>,
    kernel: Option<CouplingKernel>,
    pairs: Option<PairTable>,
    eigen: OnceLock<Eigensystem>,
}

/// Photon one-body matrix `omega(p) = |k|` as a circulant over site offsets.
pub fn photon_dispersion(lattice: &Lattice1D) -> Vec<f64> {
    let l = lattice.num_sites();
    let ks = lattice.wave_numbers();
    (0..l)
        .map(|d| {
            ks.iter()
                .enumerate()
                .map(|(k, w)| {
                    w.abs() * (2.0 * PI * lattice.wave_index(k) as f64 * d as f64 / l as f64).cos()
                })
                .sum::<f64>()
                / l as f64
        })
        .collect()
}

fn pair_table(space: &SectorSpace, mass: f64, pk: &PairKernel) -> Result<PairTable> {
    let lattice = *space.lattice();
    let l = lattice.num_sites();
    let n = 2 * l;
    let free = DiracOperator::free(lattice, mass)?;
    let pplus = spectral_split(&free)?.dense_plus();
    let pminus = CMatrix::identity(n, n) - &pplus;
    let chi = smearing_profile(&lattice, pk.width);
    let chi_sq: f64 = chi.iter().map(|c| c * c).sum();
    let mut dense = vec![ZERO; l * n * n];
    let mut lists = Vec::with_capacity(l);
    for y in 0..l {
        let w = |x: usize| chi[(x + l - y) % l];
        let g = CMatrix::from_fn(n, n, |i, j| {
            let (xi, si) = (i / 2, i % 2);
            let (xj, sj) = (j / 2, j % 2);
            if si == sj {
                ZERO
            } else {
                Complex64::new(w(xi) * w(xj) / chi_sq / 2f64.sqrt(), 0.0)
            }
        });
        let phi = &pplus * g * pminus.transpose();
        let anti = &phi - phi.transpose();
        let block = &mut dense[y * n * n..(y + 1) * n * n];
        let mut list = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let v = anti[(a, b)];
                if v.norm() > DROP {
                    block[a * n + b] = v;
                    if a < b {
                        list.push((a, b, v));
                    }
                }
            }
        }
        lists.push(list);
    }
    if let Some(d) = &pk.drive {
        if d.len() != l {
            return Err(invalid("drive amplitudes must have one entry per site"));
        }
    }
    Ok(PairTable {
        strength: pk.strength,
        modes: n,
        dense,
        lists,
        drive: pk.drive.clone(),
    })
}

fn below(combo: &[usize], x: usize) -> usize {
    combo.partition_point(|&c| c < x)
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SectorHamiltonian {
    pub fn new(
        space: Arc<SectorSpace>,
        dirac: &DiracOperator,
        coupling: Option<CouplingKernel>,
        pairs: Option<PairKernel>,
    ) -> Result<Self> {
        let lattice = *space.lattice();
        if dirac.lattice() != &lattice {
            return Err(invalid("Dirac operator and sector space use different lattices"));
        }
        if let Some(k) = &coupling {
            if k.profile.len() != lattice.num_sites() {
                return Err(invalid("coupling kernel built for a different lattice"));
            }
        }
        let h = dirac.dense();
        let n = h.nrows();
        let hop = (0..n)
            .map(|b| {
                (0..n)
                    .filter_map(|a| {
                        let v = h[(a, b)];
                        (v.norm() > DROP).then_some((a, v))
                    })
                    .collect()
            })
            .collect();
        let pairs = match &pairs {
            Some(pk) if pk.strength > 0.0 => Some(pair_table(&space, dirac.mass(), pk)?),
            _ => None,
        };
        Ok(Self {
            photon: photon_dispersion(&lattice),
            coupling: coupling
                .as_ref()
                .map(|k| (k.charge * lattice.spacing().sqrt(), k.profile.clone())),
            kernel: coupling,
            space,
            dirac: dirac.clone(),
            hop,
            pairs,
            eigen: OnceLock::new(),
        })
    }

    /// Free Hamiltonian: Dirac slots and photon slots without coupling.
    pub fn free(space: Arc<SectorSpace>, dirac: &DiracOperator) -> Result<Self> {
        Self::new(space, dirac, None, None)
    }

    pub fn space(&self) -> &Arc<SectorSpace> {
        &self.space
    }

    pub fn dirac(&self) -> &DiracOperator {
        &self.dirac
    }

    pub fn coupling(&self) -> Option<&CouplingKernel> {
        self.kernel.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Calls `emit(row, value)` for every nonzero `H[row, col]` of the selected parts.
    pub fn for_each_in_column(&self, col: usize, parts: Parts, mut emit: impl FnMut(usize, Complex64)) {
        let space = &*self.space;
        let info = space
            .sectors()
            .iter()
            .rev()
            .find(|s| s.offset <= col && s.dim() > 0)
            .expect("column inside the space");
        let (m, n) = info.label();
        let local = col - info.offset;
        let (er, pr) = (local / info.photon_dim, local % info.photon_dim);
        let combo = space.electron_state(m, er);
        let photons = space.photon_state(n, pr);
        let trunc = space.truncation();
        let l = space.lattice().num_sites();
        let mut buf: Vec<usize> = Vec::with_capacity(m + 2);
        let mut pbuf: Vec<usize> = Vec::with_capacity(n + 1);

        // distinct photon sites with multiplicities
        let mut occ: Vec<(usize, usize)> = Vec::new();
        for &y in photons {
            match occ.last_mut() {
                Some((last, cnt)) if *last == y => *cnt += 1,
                _ => occ.push((y, 1)),
            }
        }
        let count_at = |y: usize| occ.iter().find(|o| o.0 == y).map_or(0, |o| o.1);

        if parts.free {
            for (pos, &b) in combo.iter().enumerate() {
                for &(a, v) in &self.hop[b] {
                    if a == b {
                        emit(col, v);
                        continue;
                    }
                    if combo.binary_search(&a).is_ok() {
                        continue;
                    }
                    let (rank, sign) = self.hop_target(combo, pos, b, a, &mut buf);
                    emit(space.flat_index(m, n, rank, pr), v * sign);
                }
            }
            for &(y, ny) in &occ {
                for (d, &w) in self.photon.iter().enumerate() {
                    if w.abs() <= DROP {
                        continue;
                    }
                    let y2 = (y + d) % l;
                    if y2 == y {
                        emit(col, Complex64::new(w * ny as f64, 0.0));
                        continue;
                    }
                    let factor = (ny as f64 * (count_at(y2) + 1) as f64).sqrt();
                    replace_one(photons, y, Some(y2), &mut pbuf);
                    let r = space.rank_multiset(&pbuf);
                    emit(space.flat_index(m, n, er, r), Complex64::new(w * factor, 0.0));
                }
            }
        }

        if parts.coupling {
            if let Some((g, chi)) = &self.coupling {
                for (pos, &b) in combo.iter().enumerate() {
                    let a = b ^ 1;
                    if combo.binary_search(&a).is_ok() {
                        continue;
                    }
                    let x = b / 2;
                    let (rank, sign) = self.hop_target(combo, pos, b, a, &mut buf);
                    if n < trunc.max_photons {
                        for y in 0..l {
                            let c = chi[(y + l - x) % l];
                            if c == 0.0 {
                                continue;
                            }
                            let factor = ((count_at(y) + 1) as f64).sqrt();
                            insert_sorted(photons, y, &mut pbuf);
                            let r = space.rank_multiset(&pbuf);
                            emit(
                                space.flat_index(m, n + 1, rank, r),
                                Complex64::new(g * c * factor * sign, 0.0),
                            );
                        }
                    }
                    if n > 0 {
                        for &(y, ny) in &occ {
                            let c = chi[(y + l - x) % l];
                            replace_one(photons, y, None, &mut pbuf);
                            let r = space.rank_multiset(&pbuf);
                            emit(
                                space.flat_index(m, n - 1, rank, r),
                                Complex64::new(g * c * (ny as f64).sqrt() * sign, 0.0),
                            );
                        }
                    }
                }
            }
        }

        if parts.pairs {
            if let Some(pt) = &self.pairs {
                let lam = pt.strength;
                let nm = pt.modes;
                match &pt.drive {
                    None => {
                        if m + 2 <= trunc.max_electrons && n > 0 {
                            for &(y, ny) in &occ {
                                replace_one(photons, y, None, &mut pbuf);
                                let r = space.rank_multiset(&pbuf);
                                let f = lam * (ny as f64).sqrt();
                                for &(a, b, v) in &pt.lists[y] {
                                    if let Some((rank, sign)) = create_pair(space, combo, a, b, &mut buf) {
                                        emit(space.flat_index(m + 2, n - 1, rank, r), v * (f * sign));
                                    }
                                }
                            }
                        }
                        if m >= 2 && n < trunc.max_photons {
                            for y in 0..l {
                                insert_sorted(photons, y, &mut pbuf);
                                let r = space.rank_multiset(&pbuf);
                                let f = lam * ((count_at(y) + 1) as f64).sqrt();
                                let block = &pt.dense[y * nm * nm..(y + 1) * nm * nm];
                                for_each_pair(space, combo, &mut buf, |a, b, rank, sign| {
                                    let v = block[a * nm + b];
                                    if v != ZERO {
                                        emit(space.flat_index(m - 2, n + 1, rank, r), v.conj() * (f * sign));
                                    }
                                });
                            }
                        }
                    }
                    Some(drive) => {
                        if m + 2 <= trunc.max_electrons {
                            for (y, phi) in drive.iter().enumerate() {
                                if *phi == ZERO {
                                    continue;
                                }
                                for &(a, b, v) in &pt.lists[y] {
                                    if let Some((rank, sign)) = create_pair(space, combo, a, b, &mut buf) {
                                        emit(space.flat_index(m + 2, n, rank, pr), v * phi * (lam * sign));
                                    }
                                }
                            }
                        }
                        if m >= 2 {
                            for (y, phi) in drive.iter().enumerate() {
                                if *phi == ZERO {
                                    continue;
                                }
                                let block = &pt.dense[y * nm * nm..(y + 1) * nm * nm];
                                for_each_pair(space, combo, &mut buf, |a, b, rank, sign| {
                                    let v = block[a * nm + b];
                                    if v != ZERO {
                                        emit(space.flat_index(m - 2, n, rank, pr), (v * phi).conj() * (lam * sign));
                                    }
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    /// Rank and sign of `c_a^dag c_b |combo>` for occupied `b` at `pos` and empty `a`.
    fn hop_target(&self, combo: &[usize], pos: usize, b: usize, a: usize, buf: &mut Vec<usize>) -> (usize, f64) {
        buf.clear();
        buf.extend(combo.iter().copied().filter(|&c| c != b));
        let ins = below(buf, a);
        buf.insert(ins, a);
        (self.space.rank_combination(buf), parity(pos + ins))
    }

    /// `H v` restricted to `parts`.
    pub fn apply_parts(&self, v: &[Complex64], parts: Parts) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        for (col, &c) in v.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            self.for_each_in_column(col, parts, |row, h| out[row] += h * c);
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply_parts(v, Parts::ALL)
    }

    /// Dense matrix of the selected parts.
    pub fn dense_parts(&self, parts: Parts) -> CMatrix {
        let dim = self.dim();
        let mut h = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            self.for_each_in_column(col, parts, |row, v| h[(row, col)] += v);
        }
        h
    }

    pub fn dense(&self) -> CMatrix {
        self.dense_parts(Parts::ALL)
    }

    /// Cached dense eigensystem of the full operator.
    pub fn eigensystem(&self) -> &Eigensystem {
        self.eigen.get_or_init(|| hermitian_eigen(&self.dense()))
    }

    /// Energy expectation `<psi|H|psi>`.
    pub fn energy(&self, state: &SectorState) -> f64 {
        let hv = self.apply(state.amplitudes());
        crate::linalg::vec_dot(state.amplitudes(), &hv).re
    }
}

fn replace_one(photons: &[usize], remove: usize, add: Option<usize>, out: &mut Vec<usize>) {
    out.clear();
    let mut removed = false;
    for &y in photons {
        if !removed && y == remove {
            removed = true;
            continue;
        }
        out.push(y);
    }
    if let Some(a) = add {
        let at = out.partition_point(|&y| y <= a);
        out.insert(at, a);
    }
}

fn insert_sorted(photons: &[usize], add: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend_from_slice(photons);
    let at = out.partition_point(|&y| y <= add);
    out.insert(at, add);
}

/// Rank and sign of `c_a^dag c_b^dag |combo>` for `a < b`, or `None` if either is occupied.
fn create_pair(space: &SectorSpace, combo: &[usize], a: usize, b: usize, buf: &mut Vec<usize>) -> Option<(usize, f64)> {
    let ca = below(combo, a);
    let cb = below(combo, b);
    if combo.get(ca) == Some(&a) || combo.get(cb) == Some(&b) {
        return None;
    }
    buf.clear();
    buf.extend_from_slice(&combo[..ca]);
    buf.push(a);
    buf.extend_from_slice(&combo[ca..cb]);
    buf.push(b);
    buf.extend_from_slice(&combo[cb..]);
    Some((space.rank_combination(buf), parity(ca + cb)))
}

/// Visits every occupied pair `a < b` with the rank and sign of `c_b c_a |combo>`.
fn for_each_pair(space: &SectorSpace, combo: &[usize], buf: &mut Vec<usize>, mut f: impl FnMut(usize, usize, usize, f64)) {
    for i in 0..combo.len() {
        for j in i + 1..combo.len() {
            buf.clear();
            buf.extend(
                combo
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, &c)| c),
            );
            // c_a contributes (-1)^i, c_b then sees j - 1 modes below it
            let sign = parity(i + j - 1);
            f(combo[i], combo[j], space.rank_combination(buf), sign);
        }
    }
}

/// `H_Dirac + H_photon + H_emit + H_abs` applied to `state`.
pub fn lp_hamiltonian_apply(state: &SectorState, ham: &SectorHamiltonian) -> Result<SectorState> {
    check_space(state, ham)?;
    let out = ham.apply_parts(state.amplitudes(), Parts::LP);
    SectorState::from_amplitudes(state.space().clone(), out)
}

/// Pair creation and annihilation terms applied to `state`; zero when no pair kernel is set.
pub fn pair_terms_apply(state: &SectorState, ham: &SectorHamiltonian) -> Result<SectorState> {
    check_space(state, ham)?;
    let out = ham.apply_parts(state.amplitudes(), Parts::PAIRS);
    SectorState::from_amplitudes(state.space().clone(), out)
}

pub(crate) fn check_space(state: &SectorState, ham: &SectorHamiltonian) -> Result<()> {
    if !Arc::ptr_eq(state.space(), ham.space())
        && (state.space().lattice() != ham.space().lattice()
            || state.space().truncation() != ham.space().truncation())
    {
        return Err(invalid("state and Hamiltonian use different sector spaces"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_sectors::{build_sector_space, Truncation};
    use crate::lattice_core::SpinorField;
    use crate::linalg::{hermiticity_residual, max_abs};

    fn space(l: usize, a: f64, m: usize, n: usize) -> Arc<SectorSpace> {
        let lat = if l >= 8 && l.is_power_of_two() {
            Lattice1D::new(l, a).unwrap()
        } else {
            Lattice1D::small(l, a).unwrap()
        };
        Arc::new(build_sector_space(lat, Truncation::new(m, n)).unwrap())
    }

    fn full(sp: &Arc<SectorSpace>, mass: f64, charge: f64, lambda: f64) -> SectorHamiltonian {
        let lat = *sp.lattice();
        let op = DiracOperator::free(lat, mass).unwrap();
        let k = CouplingKernel::with_default_width(&lat, charge).unwrap();
        let pk = PairKernel::new(lambda, 2.0 * lat.spacing()).unwrap();
        SectorHamiltonian::new(sp.clone(), &op, Some(k), Some(pk)).unwrap()
    }

    /// Jordan-Wigner fermions times per-site truncated bosons, projected on the sector space.
    struct FockOracle {
        modes: usize,
        sites: usize,
        cut: usize,
    }

    impl FockOracle {
        fn dim(&self) -> usize {
            (1 << self.modes) * (self.cut + 1).pow(self.sites as u32)
        }

        fn split(&self, i: usize) -> (usize, Vec<usize>) {
            let f = i % (1 << self.modes);
            let mut rest = i >> self.modes;
            let bos = (0..self.sites)
                .map(|_| {
                    let v = rest % (self.cut + 1);
                    rest /= self.cut + 1;
                    v
                })
                .collect();
            (f, bos)
        }

        fn join(&self, f: usize, bos: &[usize]) -> usize {
            let mut idx = 0;
            for &b in bos.iter().rev() {
                idx = idx * (self.cut + 1) + b;
            }
            (idx << self.modes) | f
        }

        /// Matrix of `c_a^dag` (create = true) or `c_a` in the product basis.
        fn fermion(&self, a: usize, create: bool) -> CMatrix {
            let d = self.dim();
            let mut out = CMatrix::zeros(d, d);
            for i in 0..d {
                let (f, bos) = self.split(i);
                let occ = f >> a & 1 == 1;
                if occ == create {
                    continue;
                }
                let sign = parity((f & ((1 << a) - 1)).count_ones() as usize);
                out[(self.join(f ^ (1 << a), &bos), i)] = Complex64::new(sign, 0.0);
            }
            out
        }

        fn boson_create(&self, y: usize) -> CMatrix {
            let d = self.dim();
            let mut out = CMatrix::zeros(d, d);
            for i in 0..d {
                let (f, mut bos) = self.split(i);
                if bos[y] == self.cut {
                    continue;
                }
                bos[y] += 1;
                out[(self.join(f, &bos), i)] = Complex64::new((bos[y] as f64).sqrt(), 0.0);
            }
            out
        }

        /// Column of the product-basis vector of each sector basis state.
        fn embedding(&self, sp: &SectorSpace) -> CMatrix {
            let mut e = CMatrix::zeros(self.dim(), sp.total_dim());
            for info in sp.sectors() {
                for er in 0..info.electron_dim {
                    for pr in 0..info.photon_dim {
                        let combo = sp.electron_state(info.electrons, er);
                        // |combo> = c_{c1}^dag ... c_{cm}^dag |0>
                        let mut v = CMatrix::zeros(self.dim(), 1);
                        let mut bos = vec![0; self.sites];
                        for &y in sp.photon_state(info.photons, pr) {
                            bos[y] += 1;
                        }
                        v[(self.join(0, &bos), 0)] = Complex64::new(1.0, 0.0);
                        for &c in combo.iter().rev() {
                            v = self.fermion(c, true) * v;
                        }
                        let col = sp.flat_index(info.electrons, info.photons, er, pr);
                        e.set_column(col, &v.column(0));
                    }
                }
            }
            e
        }
    }

    type Sparse = Vec<(usize, usize, Complex64)>;

    fn sparse(m: &CMatrix) -> Sparse {
        let mut out = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    out.push((i, j, m[(i, j)]));
                }
            }
        }
        out
    }

    fn mul(s: &Sparse, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for &(i, j, v) in s {
            for k in 0..x.ncols() {
                out[(i, k)] += v * x[(j, k)];
            }
        }
        out
    }

    fn oracle_matrix(sp: &Arc<SectorSpace>, mass: f64, charge: f64, lambda: f64) -> CMatrix {
        let lat = *sp.lattice();
        let l = lat.num_sites();
        let trunc = sp.truncation();
        let o = FockOracle {
            modes: 2 * l,
            sites: l,
            cut: trunc.max_photons,
        };
        let cd: Vec<Sparse> = (0..2 * l).map(|a| sparse(&o.fermion(a, true))).collect();
        let c: Vec<Sparse> = (0..2 * l).map(|a| sparse(&o.fermion(a, false))).collect();
        let bdm: Vec<CMatrix> = (0..l).map(|y| o.boson_create(y)).collect();
        let bd: Vec<Sparse> = bdm.iter().map(sparse).collect();
        let b: Vec<Sparse> = bdm.iter().map(|m| sparse(&m.adjoint())).collect();
        let emb = o.embedding(sp);
        // H applied to the embedded basis, term by term
        let mut hv = CMatrix::zeros(o.dim(), sp.total_dim());
        let op = DiracOperator::free(lat, mass).unwrap();
        let h1 = op.dense();
        for p in 0..2 * l {
            for q in 0..2 * l {
                if h1[(p, q)] != ZERO {
                    hv += mul(&cd[p], &mul(&c[q], &emb)) * h1[(p, q)];
                }
            }
        }
        // photon dispersion from an explicit Fourier sum over the momentum grid
        let ks = lat.wave_numbers();
        for y in 0..l {
            let by = mul(&b[y], &emb);
            for y2 in 0..l {
                let w: Complex64 = (0..l)
                    .map(|k| {
                        let ph = 2.0 * PI * lat.wave_index(k) as f64 * (y2 as f64 - y as f64) / l as f64;
                        Complex64::from_polar(ks[k].abs(), ph)
                    })
                    .sum::<Complex64>()
                    / l as f64;
                hv += mul(&bd[y2], &by) * w;
            }
        }
        let a = lat.spacing();
        let eps = 2.0 * a;
        let norm: f64 = (0..l)
            .map(|z| {
                let dz = lat.distance(0.0, lat.position(z));
                (-dz * dz / (2.0 * eps * eps)).exp()
            })
            .sum::<f64>()
            * a;
        for y in 0..l {
            let field = mul(&bd[y], &emb) + mul(&b[y], &emb);
            for x in 0..l {
                let dist = lat.distance(lat.position(x), lat.position(y));
                let chi = (-dist * dist / (2.0 * eps * eps)).exp() / norm;
                let cur = mul(&cd[2 * x], &mul(&c[2 * x + 1], &field)) + mul(&cd[2 * x + 1], &mul(&c[2 * x], &field));
                hv += cur * Complex64::new(charge * a.sqrt() * chi, 0.0);
            }
        }
        if lambda > 0.0 {
            let pt = pair_table(sp, mass, &PairKernel::new(lambda, 2.0 * a).unwrap()).unwrap();
            let n = 2 * l;
            for y in 0..l {
                let by = mul(&b[y], &emb);
                for p in 0..n {
                    for q in 0..n {
                        // ordered pairs carry half the antisymmetric amplitude
                        let v = pt.dense[y * n * n + p * n + q] * 0.5 * lambda;
                        if v != ZERO {
                            hv += mul(&cd[p], &mul(&cd[q], &by)) * v;
                            hv += mul(&bd[y], &mul(&c[q], &mul(&c[p], &emb))) * v.conj();
                        }
                    }
                }
            }
        }
        emb.adjoint() * hv
    }

    #[test]
    fn matches_second_quantized_oracle() {
        for (l, m, n, lambda) in [(2, 2, 1, 0.0), (2, 2, 2, 0.7), (2, 4, 1, 0.5), (3, 2, 1, 0.4)] {
            let sp = space(l, 0.8, m, n);
            let ham = full(&sp, 1.0, 0.6, lambda);
            let ours = ham.dense();
            let oracle = oracle_matrix(&sp, 1.0, 0.6, lambda);
            assert!(
                max_abs(&(&ours - &oracle)) < 1e-12,
                "L={l} M={m} N={n}: {}",
                max_abs(&(&ours - &oracle))
            );
        }
    }

    #[test]
    fn hermitian_on_small_instances() {
        let sp = space(2, 1.0, 1, 1);
        let op = DiracOperator::free(*sp.lattice(), 1.0).unwrap();
        let k = CouplingKernel::new(sp.lattice(), 1.0, 1.0).unwrap();
        let h = SectorHamiltonian::new(sp.clone(), &op, Some(k), None).unwrap().dense();
        assert!(hermiticity_residual(&h) < 1e-12);
        let sp = space(8, 1.0, 2, 1);
        let h = full(&sp, 1.0, 0.5, 0.3).dense();
        assert!(hermiticity_residual(&h) < 1e-12);
    }

    #[test]
    fn vacuum_is_annihilated() {
        let sp = space(8, 1.0, 1, 1);
        let ham = full(&sp, 1.0, 0.5, 0.0);
        let out = lp_hamiltonian_apply(&SectorState::vacuum(sp), &ham).unwrap();
        assert_eq!(out.norm_sq(), 0.0);
    }

    #[test]
    fn single_slot_equals_dirac_operator() {
        let sp = space(16, 0.5, 1, 0);
        let lat = *sp.lattice();
        let pot: Vec<f64> = (0..16).map(|i| 0.3 * (i as f64).sin()).collect();
        let op = crate::lattice_core::build_dirac(lat, 0.7, 1.0, &pot).unwrap();
        let k = CouplingKernel::with_default_width(&lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(k), None).unwrap();
        let f = SpinorField::gaussian(lat, 3.0, 0.8, 1.2, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)]).normalized();
        let st = SectorState::from_spinor(sp, &f).unwrap();
        let out = lp_hamiltonian_apply(&st, &ham).unwrap().to_spinor().unwrap();
        let direct = op.apply(&f);
        let diff = out.sub(&direct).norm();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn zero_lambda_pairs_vanish() {
        let sp = space(8, 1.0, 2, 1);
        let ham = full(&sp, 1.0, 0.5, 0.0);
        let mut st = SectorState::zeros(sp.clone());
        for (i, c) in st.amplitudes_mut().iter_mut().enumerate() {
            *c = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        assert_eq!(pair_terms_apply(&st, &ham).unwrap().norm_sq(), 0.0);
    }

    #[test]
    fn profile_is_normalized() {
        let lat = Lattice1D::new(32, 0.3).unwrap();
        let k = CouplingKernel::with_default_width(&lat, 1.0).unwrap();
        let s: f64 = k.profile().iter().sum::<f64>() * 0.3;
        assert!((s - 1.0).abs() < 1e-14);
        assert!(k.profile().iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn photon_evolution_is_unitary_with_nonnegative_dispersion() {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let w = photon_dispersion(&lat);
        let m = CMatrix::from_fn(16, 16, |i, j| Complex64::new(w[(i + 16 - j) % 16], 0.0));
        assert!(hermiticity_residual(&m) < 1e-14);
        let eig = hermitian_eigen(&m);
        assert!(eig.values.iter().all(|&e| e > -1e-12));
        let u = eig.unitary(1.3);
        assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(16, 16))) < 1e-12);
    }

    #[test]
    fn drive_couples_within_sector() {
        let sp = space(2, 1.0, 2, 0);
        let lat = *sp.lattice();
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let pk = PairKernel::new(0.5, 1.0)
            .unwrap()
            .with_drive(vec![Complex64::new(1.0, 0.0); 2]);
        let ham = SectorHamiltonian::new(sp.clone(), &op, None, Some(pk)).unwrap();
        let h = ham.dense();
        assert!(hermiticity_residual(&h) < 1e-14);
        let (s1, s3) = (sp.sector(1, 0).unwrap(), sp.sector(2, 0).unwrap());
        let _ = s3;
        // (1,0) has no partner three sectors up, (0,0) couples to (2,0)
        let coupled: f64 = (sp.sector(2, 0).unwrap().offset..sp.total_dim())
            .map(|r| h[(r, 0)].norm())
            .sum();
        assert!(coupled > 1e-3);
        assert!((s1.offset..s1.offset + s1.dim()).all(|c| (sp.sector(2, 0).unwrap().offset..sp.total_dim()).all(|r| h[(r, c)] == ZERO)));
    }
}
