use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bohm_dynamics::{Configuration, VelocityField};
use crate::error::{invalid, Error, Result};

/// Positions of one trajectory at recorded times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Wrapped positions, one row per recorded time.
    pub positions: Vec<Vec<f64>>,
    pub sector: (usize, usize),
}

impl Trajectory {
    pub fn final_configuration(&self) -> Configuration {
        Configuration {
            positions: self.positions.last().cloned().unwrap_or_default(),
            sector: self.sector,
        }
    }
}

fn check_steps(field: &impl VelocityField, dt: f64, t_end: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid("end time must be finite and nonnegative"));
    }
    if t_end > field.end_time() + 1e-12 {
        return Err(invalid(format!(
            "end time {t_end} beyond the stored evolution ({})",
            field.end_time()
        )));
    }
    if let Some(spacing) = field.frame_spacing() {
        if spacing > 5.0 * dt * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "frame spacing {spacing} exceeds five time steps of {dt}"
            )));
        }
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Classic fourth-order Runge-Kutta integration of `dq/dt = v(t, q)` on the periodic domain.
///
/// Records every `record_every`-th step plus the final point; positions are
/// wrapped into `[0, L a)` after each step.
pub fn integrate(
    field: &impl VelocityField,
    q0: &Configuration,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let steps = check_steps(field, dt, t_end)?;
    let lattice = *field.lattice();
    let mut q: Vec<f64> = q0.positions.iter().map(|&x| lattice.wrap(x)).collect();
    let mut t = 0.0;
    let every = record_every.max(1);
    let mut out = Trajectory {
        times: vec![0.0],
        positions: vec![q.clone()],
        sector: q0.sector,
    };
    let m = q.len();
    let mut tmp = vec![0.0; m];
    for step in 0..steps {
        let h = if step + 1 == steps { t_end - t } else { dt };
        let k1 = field.velocity(t, &q)?;
        for j in 0..m {
            tmp[j] = q[j] + 0.5 * h * k1[j];
        }
        let k2 = field.velocity(t + 0.5 * h, &tmp)?;
        for j in 0..m {
            tmp[j] = q[j] + 0.5 * h * k2[j];
        }
        let k3 = field.velocity(t + 0.5 * h, &tmp)?;
        for j in 0..m {
            tmp[j] = q[j] + h * k3[j];
        }
        let k4 = field.velocity(t + h, &tmp)?;
        for j in 0..m {
            q[j] = lattice.wrap(q[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
        }
        t = if step + 1 == steps { t_end } else { t + h };
        if (step + 1) % every == 0 || step + 1 == steps {
            out.times.push(t);
            out.positions.push(q.clone());
        }
    }
    Ok(out)
}

/// Outcome of integrating many members: finals in member order, nodes excluded.
#[derive(Clone, Debug)]
pub struct EnsembleRun {
    /// `None` for members excluded at a node.
    pub finals: Vec<Option<Configuration>>,
    pub excluded: usize,
}

impl EnsembleRun {
    pub fn completed(&self) -> impl Iterator<Item = &Configuration> {
        self.finals.iter().flatten()
    }

    /// Fails with [`Error::TooManyNodes`] if more than `limit_percent` of members were excluded.
    pub fn check_exclusions(&self, limit_percent: f64) -> Result<()> {
        let total = self.finals.len();
        if total > 0 && self.excluded as f64 > limit_percent / 100.0 * total as f64 {
            return Err(Error::TooManyNodes {
                excluded: self.excluded,
                total,
                limit_percent,
            });
        }
        Ok(())
    }
}

/// Integrates every member to `t_end` in parallel; results do not depend on scheduling.
pub fn run_ensemble(field: &impl VelocityField, initial: &[Configuration], dt: f64, t_end: f64) -> Result<EnsembleRun> {
    check_steps(field, dt, t_end)?;
    let results: Vec<Result<Option<Configuration>>> = initial
        .par_iter()
        .map(|q0| match integrate(field, q0, dt, t_end, usize::MAX) {
            Ok(tr) => Ok(Some(tr.final_configuration())),
            Err(Error::Node { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut finals = Vec::with_capacity(results.len());
    for r in results {
        finals.push(r?);
    }
    let excluded = finals.iter().filter(|f| f.is_none()).count();
    if excluded > 0 {
        log::warn!("{excluded} of {} trajectories excluded at nodes", finals.len());
    }
    Ok(EnsembleRun { finals, excluded })
}
