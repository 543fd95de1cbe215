//! Binary field snapshots with a JSON index.
//!
//! Each file holds one field at one time: a 32-byte little-endian header
//! (`"DAF1"`, dim: u32, N: u32, 4 zero bytes, time: f64, 8 zero bytes)
//! followed by `N^dim` little-endian `f64` values in grid order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spray_core::dynamics::State;
use spray_core::{GridSpec, RealField, VectorField};

use crate::error::{io_err, CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"DAF1";
pub const HEADER_LEN: usize = 32;
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    /// Field name (`rho`, `m_x`, `n`, `j_x`, ...) to file name.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotIndex {
    pub dim: usize,
    pub points_per_axis: usize,
    pub entries: Vec<SnapshotEntry>,
}

pub fn encode_field(field: &RealField, t: f64) -> Vec<u8> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.points_per_axis() as u32).to_le_bytes());
    buf.extend_from_slice(&[0; 4]);
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&[0; 8]);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Parses one snapshot file into its field and time.
pub fn decode_field(bytes: &[u8]) -> CliResult<(RealField, f64)> {
    let bad = |m: &str| CliError::Config(format!("snapshot: {m}"));
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("missing DAF1 header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let dim = u32_at(4);
    let n = u32_at(8);
    let t = f64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let grid = GridSpec::new(dim, n).map_err(|e| bad(&e.to_string()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(bad(&format!(
            "expected {} values, found {} bytes",
            grid.len(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = RealField::from_values(grid, values).map_err(|e| bad(&e.to_string()))?;
    Ok((field, t))
}

fn field_names(dim: usize) -> Vec<String> {
    let axes = ["x", "y", "z"];
    let mut v = vec!["rho".to_string()];
    v.extend(axes.iter().take(dim).map(|a| format!("m_{a}")));
    v.push("n".into());
    v.extend(axes.iter().take(dim).map(|a| format!("j_{a}")));
    v
}

fn state_fields(s: &State) -> Vec<&RealField> {
    let mut v = vec![&s.rho];
    v.extend(s.m.components());
    v.push(&s.n);
    v.extend(s.j.components());
    v
}

/// Writes snapshots of successive states into one directory and keeps
/// the index file current.
pub struct SnapshotWriter {
    dir: PathBuf,
    index: SnapshotIndex,
}

impl SnapshotWriter {
    pub fn new(dir: &Path, grid: GridSpec) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            index: SnapshotIndex {
                dim: grid.dim(),
                points_per_axis: grid.points_per_axis(),
                entries: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, state: &State, t: f64) -> CliResult<()> {
        let k = self.index.entries.len();
        let mut files = BTreeMap::new();
        for (name, field) in field_names(self.index.dim).into_iter().zip(state_fields(state)) {
            let file = format!("{name}_{k:05}.bin");
            let path = self.dir.join(&file);
            std::fs::write(&path, encode_field(field, t)).map_err(|e| io_err(&path, e))?;
            files.insert(name, file);
        }
        self.index.entries.push(SnapshotEntry { t, files });
        let path = self.dir.join(INDEX_FILE);
        let text = serde_json::to_string_pretty(&self.index).expect("index serializes");
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn index(&self) -> &SnapshotIndex {
        &self.index
    }
}

/// Loads the last state listed in the index file at `index_path`.
pub fn load_snapshot(index_path: &Path) -> CliResult<(State, f64)> {
    let text = std::fs::read_to_string(index_path).map_err(|e| io_err(index_path, e))?;
    let index: SnapshotIndex =
        serde_json::from_str(&text).map_err(|e| io_err(index_path, e))?;
    let entry = index
        .entries
        .last()
        .ok_or_else(|| CliError::Config(format!("{}: no snapshots", index_path.display())))?;
    let dir = index_path.parent().unwrap_or(Path::new("."));
    let mut fields = Vec::new();
    for name in field_names(index.dim) {
        let file = entry.files.get(&name).ok_or_else(|| {
            CliError::Config(format!("{}: missing field {name}", index_path.display()))
        })?;
        let path = dir.join(file);
        let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
        let (f, _) = decode_field(&bytes).map_err(|e| io_err(&path, e))?;
        if f.grid().dim() != index.dim || f.grid().points_per_axis() != index.points_per_axis {
            return Err(io_err(&path, "grid does not match the index"));
        }
        fields.push(f);
    }
    let d = index.dim;
    let mut it = fields.into_iter();
    let rho = it.next().expect("rho");
    let m: Vec<RealField> = it.by_ref().take(d).collect();
    let n = it.next().expect("n");
    let j: Vec<RealField> = it.collect();
    let vec = |c| VectorField::from_components(c).map_err(|e| io_err(index_path, e));
    let state = State::new(rho, vec(m)?, n, vec(j)?).map_err(|e| io_err(index_path, e))?;
    Ok((state, entry.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use spray_core::init::{generate_initial, InitSpec};

    #[test]
    fn header_layout() {
        let g = GridSpec::new(2, 8).unwrap();
        let f = RealField::from_fn(g, |x| x[0] + 2.0 * x[1]);
        let b = encode_field(&f, 1.5);
        assert_eq!(b.len(), 32 + 8 * 64);
        assert_eq!(&b[..4], b"DAF1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 1.5);
        let (back, t) = decode_field(&b).unwrap();
        assert_eq!(back, f);
        assert_eq!(t, 1.5);
    }

    #[test]
    fn corrupt_files_rejected() {
        assert!(decode_field(b"nope").is_err());
        let g = GridSpec::new(1, 8).unwrap();
        let mut b = encode_field(&RealField::zeros(g), 0.0);
        b.pop();
        assert!(decode_field(&b).is_err());
    }

    #[test]
    fn state_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(2, 8).unwrap();
        let s = generate_initial(&InitSpec::single_mode(0.05), g).unwrap();
        let mut w = SnapshotWriter::new(dir.path(), g).unwrap();
        w.write(&s, 0.0).unwrap();
        w.write(&s, 0.25).unwrap();
        let (back, t) = load_snapshot(&dir.path().join(INDEX_FILE)).unwrap();
        assert_eq!(back, s);
        assert_eq!(t, 0.25);
        assert_eq!(w.index().entries.len(), 2);
    }
}
