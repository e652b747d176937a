use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice_core::{spectral_split, DiracOperator, EnergyProjectors, Lattice1D, SpinorField};

/// Set of lattice sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn from_sites(lattice: &Lattice1D, sites: &[usize]) -> Result<Self> {
        let mut inside = vec![false; lattice.num_sites()];
        for &s in sites {
            *inside.get_mut(s).ok_or_else(|| invalid(format!("site {s} outside the lattice")))? = true;
        }
        if !inside.iter().any(|&b| b) {
            return Err(invalid("region is empty"));
        }
        Ok(Self { inside })
    }

    /// Sites whose positions lie within `half_width` of `center` (periodic).
    pub fn interval(lattice: &Lattice1D, center: f64, half_width: f64) -> Result<Self> {
        let sites: Vec<usize> = (0..lattice.num_sites())
            .filter(|&i| lattice.distance(lattice.position(i), center) < half_width)
            .collect();
        Self::from_sites(lattice, &sites)
    }

    pub fn contains(&self, site: usize) -> bool {
        self.inside[site]
    }

    pub fn len(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_proper(&self) -> bool {
        self.inside.iter().any(|&b| !b)
    }

    /// Sites within distance `reach` of the region, distance measured in sites times `a`.
    pub fn enlarged(&self, lattice: &Lattice1D, reach: f64) -> Self {
        let l = lattice.num_sites();
        let steps = (reach / lattice.spacing() + 1e-9).floor().max(0.0) as usize;
        let mut inside = self.inside.clone();
        for i in (0..l).filter(|&i| self.inside[i]) {
            for d in 1..=steps.min(l) {
                inside[(i + d) % l] = true;
                inside[(i + l - d % l) % l] = true;
            }
        }
        Self { inside }
    }
}

/// Mass of `field` on sites outside `region`, relative to its total mass.
pub fn outside_mass(field: &SpinorField, region: &RegionMask) -> f64 {
    let (mut out, mut total) = (0.0, 0.0);
    for (i, s) in field.amplitudes().iter().enumerate() {
        let w = s[0].norm_sqr() + s[1].norm_sqr();
        total += w;
        if !region.contains(i) {
            out += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        out / total
    }
}

fn check_supported(field: &SpinorField, region: &RegionMask) -> Result<()> {
    let stray = field
        .amplitudes()
        .iter()
        .enumerate()
        .any(|(i, s)| !region.contains(i) && (s[0] != Complex64::new(0.0, 0.0) || s[1] != Complex64::new(0.0, 0.0)));
    if stray {
        return Err(invalid("packet is not strictly supported in the region"));
    }
    Ok(())
}

/// Relative mass of `P+ packet` outside `region` for a packet strictly supported in it.
pub fn localization_defect(projectors: &EnergyProjectors, packet: &SpinorField, region: &RegionMask) -> Result<f64> {
    if !region.is_proper() {
        return Err(invalid("region covers the whole lattice, nothing lies outside"));
    }
    check_supported(packet, region)?;
    Ok(outside_mass(&projectors.apply_plus(packet), region))
}

/// Box packet of `width` with a smooth taper of length `taper` at both ends.
///
/// The taper is the standard `C^inf` step built from `exp(-1/t)`, so the packet
/// is smooth and strictly zero outside `|x - center| < width / 2`. A zero
/// taper gives the sharp box.
pub fn smooth_box(lattice: &Lattice1D, center: f64, width: f64, taper: f64, spinor: [Complex64; 2]) -> SpinorField {
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    SpinorField::from_fn(*lattice, |x| {
        let d = lattice.distance(x, center);
        let edge = width / 2.0;
        let f = if d >= edge {
            0.0
        } else if taper <= 0.0 || d <= edge - taper {
            1.0
        } else {
            let s = (d - (edge - taper)) / taper;
            g(1.0 - s) / (g(1.0 - s) + g(s))
        };
        [spinor[0] * f, spinor[1] * f]
    })
}

fn evolved_leakage(op: &DiracOperator, packet: &SpinorField, region: &RegionMask, t: f64) -> Result<f64> {
    let lattice = op.lattice();
    if !(t >= 0.0 && t < lattice.length() / 2.0) {
        return Err(invalid(format!(
            "time {t} must lie in [0, {}) so the light cone does not wrap",
            lattice.length() / 2.0
        )));
    }
    let cone = region.enlarged(lattice, t);
    if !cone.is_proper() {
        return Err(invalid("the light cone covers the whole lattice"));
    }
    Ok(outside_mass(&op.evolve(packet, t)?, &cone))
}

/// Mass of the full evolution of `packet` outside the light-enlarged region `{x : dist(x, A) <= t}`.
pub fn lightcone_leakage(op: &DiracOperator, packet: &SpinorField, region: &RegionMask, t: f64) -> Result<f64> {
    check_supported(packet, region)?;
    evolved_leakage(op, packet, region, t)
}

/// Full versus positive-energy evolution of a compact packet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub full_leakage: f64,
    pub projected_leakage: f64,
    /// Projected over full leakage; infinite if the full leakage vanishes.
    pub ratio: f64,
    /// Outside mass of the projected packet before any evolution.
    pub initial_defect: f64,
}

/// Leakage of a compact packet next to the leakage of its `P+` projection.
pub fn superluminal_tail_demo(op: &DiracOperator, packet: &SpinorField, region: &RegionMask, t: f64) -> Result<TailReport> {
    let proj = spectral_split(op)?;
    let plus = proj.apply_plus(packet).normalized();
    let full = lightcone_leakage(op, packet, region, t)?;
    let projected = evolved_leakage(op, &plus, region, t)?;
    Ok(TailReport {
        full_leakage: full,
        projected_leakage: projected,
        ratio: if full > 0.0 { projected / full } else { f64::INFINITY },
        initial_defect: outside_mass(&plus, region),
    })
}

/// Outside masses and light-cone leakage over a refinement sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub outside_mass: f64,
    pub lightcone_leakage: f64,
    /// `(sites, leakage)` at fixed physical extent.
    pub refinement: Vec<(usize, f64)>,
}

impl LocalityReport {
    pub fn refinement_decreases(&self) -> bool {
        self.refinement.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// Physical setup shared by a refinement sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageSetup {
    pub length: f64,
    pub mass: f64,
    pub box_width: f64,
    pub taper: f64,
    pub time: f64,
}

impl Default for LeakageSetup {
    fn default() -> Self {
        Self {
            length: 25.6,
            mass: 1.0,
            box_width: 3.2,
            taper: 1.2,
            time: 3.2,
        }
    }
}

/// Light-cone leakage of the tapered box for each lattice size at fixed physical extent.
pub fn leakage_refinement(setup: &LeakageSetup, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&l| {
            let lat = Lattice1D::new(l, setup.length / l as f64)?;
            let op = DiracOperator::free(lat, setup.mass)?;
            let c = setup.length / 2.0;
            let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            let packet = smooth_box(&lat, c, setup.box_width, setup.taper, up);
            let region = RegionMask::interval(&lat, c, setup.box_width / 2.0)?;
            Ok((l, lightcone_leakage(&op, &packet, &region, setup.time)?))
        })
        .collect()
}
