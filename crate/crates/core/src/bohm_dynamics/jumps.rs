use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock_sectors::{build_sector_space, PairKernel, Parts, SectorHamiltonian, SectorState, Truncation};
use crate::lattice_core::{DiracOperator, Lattice1D};
use crate::linalg::{hermitian_eigen, Eigensystem};
use crate::rng::stream;

/// Largest space the jump process propagates densely.
const MAX_DIM: usize = 2000;
const MAX_ATTEMPTS: usize = 10;

/// Position class: electron and photon numbers plus the sorted electron sites.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub electrons: usize,
    pub photons: usize,
    pub sites: Vec<usize>,
}

/// A change of particle number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub pre_sector: (usize, usize),
    pub post_sector: (usize, usize),
    pub created: Vec<usize>,
    pub removed: Vec<usize>,
}

/// Lattice jump process whose rates are built from the probability flux of `H`.
///
/// Configurations are position classes (electron sites; spin and photon
/// slots summed). From class `q` the process jumps to `q'` at rate
/// `max(0, J(q' <- q)) / P(q)` with `J(q' <- q) = 2 Im sum psi_i^* H_ij psi_j`
/// over basis states `i` in `q'` and `j` in `q`. Pair terms change the sector;
/// the one-body terms move electrons between sites and play the role of the
/// guidance between jumps.
pub struct JumpModel {
    labels: Vec<ClassLabel>,
    class_of: Vec<usize>,
    /// per source class: (target class, matrix elements (i, j, H_ij))
    links: Vec<Vec<(usize, Vec<(usize, usize, Complex64)>)>>,
    eigen: Eigensystem,
    initial: Vec<Complex64>,
    hamiltonian_is_real: bool,
}

impl JumpModel {
    pub fn new(ham: &SectorHamiltonian, initial: &SectorState) -> Result<Self> {
        let space = ham.space();
        let dim = space.total_dim();
        if dim > MAX_DIM {
            return Err(invalid(format!("jump model space has {dim} states, limit {MAX_DIM}")));
        }
        if initial.space().total_dim() != dim {
            return Err(invalid("initial state does not match the Hamiltonian"));
        }
        let mut index: BTreeMap<ClassLabel, usize> = BTreeMap::new();
        let mut class_of = Vec::with_capacity(dim);
        for info in space.sectors() {
            for er in 0..info.electron_dim {
                let mut sites: Vec<usize> = space.electron_state(info.electrons, er).iter().map(|m| m / 2).collect();
                sites.sort_unstable();
                let label = ClassLabel {
                    electrons: info.electrons,
                    photons: info.photons,
                    sites,
                };
                let next = index.len();
                let c = *index.entry(label).or_insert(next);
                class_of.extend(std::iter::repeat_n(c, info.photon_dim));
            }
        }
        let mut labels = vec![
            ClassLabel {
                electrons: 0,
                photons: 0,
                sites: vec![]
            };
            index.len()
        ];
        for (l, c) in index {
            labels[c] = l;
        }
        let h = ham.dense();
        let mut grouped: Vec<BTreeMap<usize, Vec<(usize, usize, Complex64)>>> = vec![BTreeMap::new(); labels.len()];
        let mut real = true;
        for j in 0..dim {
            for i in 0..dim {
                let v = h[(i, j)];
                if v.im != 0.0 {
                    real = false;
                }
                if v != Complex64::new(0.0, 0.0) && class_of[i] != class_of[j] {
                    grouped[class_of[j]].entry(class_of[i]).or_default().push((i, j, v));
                }
            }
        }
        Ok(Self {
            labels,
            class_of,
            links: grouped.into_iter().map(|g| g.into_iter().collect()).collect(),
            eigen: hermitian_eigen(&h),
            initial: initial.amplitudes().to_vec(),
            hamiltonian_is_real: real,
        })
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn class_of_basis(&self, index: usize) -> usize {
        self.class_of[index]
    }

    pub fn hamiltonian_is_real(&self) -> bool {
        self.hamiltonian_is_real
    }

    /// Exact amplitudes at time `t`.
    pub fn state(&self, t: f64) -> Vec<Complex64> {
        self.eigen.propagate(&self.initial, t)
    }

    /// Class probabilities `P(q)` of `psi`.
    pub fn class_probabilities(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut p = vec![0.0; self.labels.len()];
        for (i, c) in psi.iter().enumerate() {
            p[self.class_of[i]] += c.norm_sqr();
        }
        p
    }

    /// Exact sector probabilities at time `t`.
    pub fn sector_probabilities(&self, t: f64) -> BTreeMap<(usize, usize), f64> {
        let mut out = BTreeMap::new();
        for (c, p) in self.class_probabilities(&self.state(t)).into_iter().enumerate() {
            *out.entry((self.labels[c].electrons, self.labels[c].photons)).or_insert(0.0) += p;
        }
        out
    }

    /// Flux `J(q' <- q)` for every linked target `q'` of `q`.
    pub fn fluxes_from(&self, psi: &[Complex64], q: usize) -> Vec<(usize, f64)> {
        self.links[q]
            .iter()
            .map(|(target, elems)| {
                let s: Complex64 = elems.iter().map(|&(i, j, h)| psi[i].conj() * h * psi[j]).sum();
                (*target, 2.0 * s.im)
            })
            .collect()
    }

    /// Jump rates `max(0, J(q' <- q)) / P(q)` out of class `q`.
    pub fn rates_from(&self, psi: &[Complex64], q: usize) -> Vec<(usize, f64)> {
        let pq: f64 = psi
            .iter()
            .enumerate()
            .filter(|(i, _)| self.class_of[*i] == q)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        self.fluxes_from(psi, q)
            .into_iter()
            .map(|(t, j)| {
                let r = if j > 0.0 {
                    if pq > 0.0 {
                        j / pq
                    } else {
                        f64::INFINITY
                    }
                } else {
                    0.0
                };
                (t, r)
            })
            .collect()
    }

    /// Expected number of particle-number-increasing jumps up to `t_end` (trapezoid rule).
    pub fn expected_up_jumps(&self, t_end: f64, steps: usize) -> f64 {
        let flow = |t: f64| {
            let psi = self.state(t);
            let mut total = 0.0;
            for q in 0..self.labels.len() {
                for (target, j) in self.fluxes_from(&psi, q) {
                    if self.labels[target].electrons > self.labels[q].electrons && j > 0.0 {
                        total += j;
                    }
                }
            }
            total
        };
        let h = t_end / steps as f64;
        let mut acc = 0.5 * (flow(0.0) + flow(t_end));
        for k in 1..steps {
            acc += flow(k as f64 * h);
        }
        acc * h
    }

    /// `max |J[psi*](q' <- q) - J[psi](q <- q')|` over all linked pairs at time `t`.
    ///
    /// Vanishes when `H` is real: conjugating the state reverses every flux.
    pub fn time_reversal_residual(&self, t: f64) -> f64 {
        let psi = self.state(t);
        let conj: Vec<Complex64> = psi.iter().map(|c| c.conj()).collect();
        let forward: Vec<BTreeMap<usize, f64>> = (0..self.labels.len())
            .map(|q| self.fluxes_from(&psi, q).into_iter().collect())
            .collect();
        let mut worst: f64 = 0.0;
        for q in 0..self.labels.len() {
            for (target, j) in self.fluxes_from(&conj, q) {
                let back = forward[target].get(&q).copied().unwrap_or(0.0);
                worst = worst.max((j - back).abs());
            }
        }
        worst
    }

    fn total_rate(&self, q: usize, t: f64) -> (Vec<(usize, f64)>, f64) {
        let r = self.rates_from(&self.state(t), q);
        let s = r.iter().map(|x| x.1).sum();
        (r, s)
    }

    /// One realization from class `q0` up to `t_end`.
    ///
    /// Jump times come from thinning against a bound taken from the rate on a
    /// grid over each window. If the true rate exceeds the bound the window is
    /// restarted with a larger bound; after repeated failures the run aborts
    /// with [`Error::RateBound`].
    pub fn simulate(&self, q0: usize, t_end: f64, window: f64, rng: &mut ChaCha8Rng) -> Result<JumpRun> {
        if !(window > 0.0 && t_end >= 0.0) {
            return Err(invalid("window and end time must be positive"));
        }
        let mut q = q0;
        let mut t = 0.0;
        let mut path = vec![(0.0, q)];
        let mut jumps = Vec::new();
        while t < t_end {
            let w_end = (t + window).min(t_end);
            let mut bound = (0..=8)
                .map(|k| self.total_rate(q, t + (w_end - t) * k as f64 / 8.0).1)
                .fold(0.0, f64::max)
                * 1.5
                + 1e-3;
            let mut attempts = 0;
            'window: loop {
                let mut s = t;
                loop {
                    let u: f64 = rng.random();
                    s += -(1.0 - u).ln() / bound;
                    if s >= w_end {
                        t = w_end;
                        break 'window;
                    }
                    let (rates, total) = self.total_rate(q, s);
                    if total > bound {
                        attempts += 1;
                        let recomputed = 2.0 * total;
                        if attempts >= MAX_ATTEMPTS || !total.is_finite() {
                            return Err(Error::RateBound {
                                time: s,
                                rate: total,
                                bound,
                                recomputed,
                                attempts,
                            });
                        }
                        log::debug!("rate {total} above bound {bound} at t = {s}; retrying window");
                        bound = recomputed;
                        continue 'window;
                    }
                    if rng.random::<f64>() * bound < total {
                        let mut pick = rng.random::<f64>() * total;
                        let mut target = rates.last().expect("positive rate").0;
                        for &(c, r) in &rates {
                            if pick < r {
                                target = c;
                                break;
                            }
                            pick -= r;
                        }
                        let (from, to) = (&self.labels[q], &self.labels[target]);
                        if from.electrons != to.electrons || from.photons != to.photons {
                            jumps.push(JumpEvent {
                                time: s,
                                pre_sector: (from.electrons, from.photons),
                                post_sector: (to.electrons, to.photons),
                                created: multiset_minus(&to.sites, &from.sites),
                                removed: multiset_minus(&from.sites, &to.sites),
                            });
                        }
                        q = target;
                        t = s;
                        path.push((s, q));
                        break 'window;
                    }
                }
            }
        }
        Ok(JumpRun { path, jumps })
    }
}

fn multiset_minus(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut rest = b.to_vec();
    let mut out = Vec::new();
    for &x in a {
        if let Some(p) = rest.iter().position(|&y| y == x) {
            rest.remove(p);
        } else {
            out.push(x);
        }
    }
    out
}

/// Class path `(time, class)` and the particle-number jumps of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRun {
    pub path: Vec<(f64, usize)>,
    pub jumps: Vec<JumpEvent>,
}

impl JumpRun {
    pub fn class_at(&self, t: f64) -> usize {
        let k = self.path.partition_point(|&(s, _)| s <= t);
        self.path[k.saturating_sub(1)].1
    }

    pub fn up_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| j.post_sector.0 > j.pre_sector.0).count()
    }
}

/// Sector occupation counts at checkpoints and jump totals over many runs.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpStatistics {
    pub runs: usize,
    pub checkpoints: Vec<f64>,
    pub sector_counts: Vec<BTreeMap<(usize, usize), usize>>,
    pub up_jumps: Vec<usize>,
    pub total_jumps: usize,
    /// Sector-changing events of each run, in run order.
    pub events: Vec<Vec<JumpEvent>>,
}

impl JumpStatistics {
    pub fn mean_up_jumps(&self) -> f64 {
        self.up_jumps.iter().sum::<usize>() as f64 / self.runs as f64
    }

    pub fn up_jump_standard_error(&self) -> f64 {
        let n = self.runs as f64;
        let mean = self.mean_up_jumps();
        let var = self.up_jumps.iter().map(|&u| (u as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

/// Runs `runs` independent realizations; member `i` uses stream `(seed, "jumps", i)`.
pub fn bell_jump_simulate(
    model: &JumpModel,
    q0: usize,
    t_end: f64,
    checkpoints: &[f64],
    runs: usize,
    seed: u64,
) -> Result<JumpStatistics> {
    let window = t_end / 40.0;
    let results: Vec<Result<JumpRun>> = (0..runs)
        .into_par_iter()
        .map(|i| model.simulate(q0, t_end, window, &mut stream(seed, "jumps", i as u64)))
        .collect();
    let mut sector_counts = vec![BTreeMap::new(); checkpoints.len()];
    let mut up_jumps = Vec::with_capacity(runs);
    let mut total_jumps = 0;
    let mut events = Vec::with_capacity(runs);
    for r in results {
        let run = r?;
        for (k, &t) in checkpoints.iter().enumerate() {
            let l = &model.labels[run.class_at(t)];
            *sector_counts[k].entry((l.electrons, l.photons)).or_insert(0) += 1;
        }
        up_jumps.push(run.up_jumps());
        total_jumps += run.jumps.len();
        events.push(run.jumps);
    }
    Ok(JumpStatistics {
        runs,
        checkpoints: checkpoints.to_vec(),
        sector_counts,
        up_jumps,
        total_jumps,
        events,
    })
}

/// Pair-creation toy on a few sites: at most two electrons, no quantized
/// photons, pairs driven by a uniform real amplitude, starting from the vacuum.
///
/// The reference toy has two sites with unit spacing.
pub fn pair_toy(sites: usize, spacing: f64, mass: f64, lambda: f64, drive: f64) -> Result<(SectorHamiltonian, SectorState)> {
    let lattice = Lattice1D::small(sites, spacing)?;
    let space = Arc::new(build_sector_space(lattice, Truncation::new(2, 0))?);
    let op = DiracOperator::free(lattice, mass)?;
    let pk = PairKernel::new(lambda, lattice.spacing())?.with_drive(vec![Complex64::new(drive, 0.0); sites]);
    let ham = SectorHamiltonian::new(space.clone(), &op, None, Some(pk))?;
    Ok((ham, SectorState::vacuum(space)))
}

/// Number of nonzero pair-term matrix elements, useful to confirm a coupling is active.
pub fn pair_coupling_count(ham: &SectorHamiltonian) -> usize {
    let v = vec![Complex64::new(1.0, 0.0); ham.dim()];
    ham.apply_parts(&v, Parts::PAIRS).iter().filter(|c| c.norm() > 0.0).count()
}
