use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_sectors::{build_sector_space, SectorInfo, SectorState, Truncation};
use crate::lattice_core::Lattice1D;

/// JSON header describing a stored sector state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorHeader {
    pub sites: usize,
    pub spacing: f64,
    pub truncation: Truncation,
    pub sectors: Vec<SectorEntry>,
    pub index_layout: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorEntry {
    #[serde(flatten)]
    pub info: SectorInfo,
    pub file: String,
}

pub const INDEX_LAYOUT: &str = "row = electron_rank * photon_dim + photon_rank; electron_rank is the colex rank of the sorted mode tuple (mode = 2*site + spinor); photon_rank is the colex rank of (y_i + i) for the sorted photon sites y; amplitudes are l2-normalized";

/// Writes `<stem>.json` plus one `<stem>_m<m>_n<n>.csv` per sector into `dir`.
pub fn write_sector_state(state: &SectorState, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let space = state.space();
    let mut entries = Vec::new();
    for info in space.sectors() {
        let file = format!("{stem}_m{}_n{}.csv", info.electrons, info.photons);
        let mut w = csv::Writer::from_path(dir.join(&file)).map_err(csv_err)?;
        w.write_record(["re", "im"]).map_err(csv_err)?;
        for c in &state.amplitudes()[info.offset..info.offset + info.dim()] {
            w.write_record([format!("{:e}", c.re), format!("{:e}", c.im)]).map_err(csv_err)?;
        }
        w.flush()?;
        entries.push(SectorEntry { info: *info, file });
    }
    let header = SectorHeader {
        sites: space.lattice().num_sites(),
        spacing: space.lattice().spacing(),
        truncation: space.truncation(),
        sectors: entries,
        index_layout: INDEX_LAYOUT.to_string(),
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&header).map_err(|e| Error::Format(e.to_string()))?)?;
    Ok(path)
}

/// Reads a state written by [`write_sector_state`].
pub fn read_sector_state(header_path: &Path) -> Result<SectorState> {
    let text = fs::read_to_string(header_path)?;
    let header: SectorHeader = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    let lattice = Lattice1D::small(header.sites, header.spacing)?;
    let space = Arc::new(build_sector_space(lattice, header.truncation)?);
    let dir = header_path.parent().unwrap_or(Path::new("."));
    let mut amps = vec![Complex64::new(0.0, 0.0); space.total_dim()];
    for entry in &header.sectors {
        let info = space
            .sector(entry.info.electrons, entry.info.photons)
            .copied()
            .filter(|i| *i == entry.info)
            .ok_or_else(|| Error::Format(format!("sector {:?} does not match the header", entry.info.label())))?;
        let mut r = csv::Reader::from_path(dir.join(&entry.file)).map_err(csv_err)?;
        let mut count = 0;
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if i >= info.dim() || rec.len() != 2 {
                return Err(Error::Format(format!("malformed row {i} in {}", entry.file)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string()));
            amps[info.offset + i] = Complex64::new(parse(&rec[0])?, parse(&rec[1])?);
            count += 1;
        }
        if count != info.dim() {
            return Err(Error::Format(format!("{} has {count} rows, expected {}", entry.file, info.dim())));
        }
    }
    SectorState::from_amplitudes(space, amps)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
