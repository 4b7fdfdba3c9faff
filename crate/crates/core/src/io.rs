//! Ensemble and mask file formats.
//!
//! Binary ensemble format (`.dfe`): the magic bytes `DFE1`, one UTF-8 JSON
//! header line terminated by `\n`, then the payload as little-endian 64-bit
//! floats, member-major then row-major over grid points. The header carries
//! `p`, `dims`, `members`, `weight_mode`, the per-axis `coords`, an optional
//! `label`, and (for `explicit` weight mode) the weight vector. When `coords`
//! is absent each axis defaults to evenly spaced points on `[0, 1]`.
//!
//! CSV ensemble format: a `member,point,value` table next to a grid
//! descriptor sidecar at `<stem>.grid.json` holding the same header object.
//! Values round-trip at full precision (shortest round-trip formatting).
//!
//! Region masks are `point_index,region_id` CSV over an existing grid.
//!
//! All writers go through a temporary file in the target directory and
//! rename on completion, so readers never observe partial output.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, RegionMask};
use crate::error::{Error, Result};
use crate::grid::{Grid, WeightMode};

pub const BINARY_MAGIC: &[u8; 4] = b"DFE1";
const MAX_HEADER_BYTES: usize = 64 << 20;

/// On-disk ensemble encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

impl std::str::FromStr for FileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(FileFormat::Binary),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected binary or csv)"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FileHeader {
    p: usize,
    dims: Vec<usize>,
    members: usize,
    weight_mode: WeightMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    label: String,
}

impl FileHeader {
    fn for_grid(grid: &Grid, members: usize, label: &str) -> FileHeader {
        FileHeader {
            p: grid.ndim(),
            dims: grid.dims().to_vec(),
            members,
            weight_mode: grid.weight_mode(),
            coords: Some(grid.coords().to_vec()),
            weights: match grid.weight_mode() {
                WeightMode::Explicit => Some(grid.weights().to_vec()),
                _ => None,
            },
            label: label.to_string(),
        }
    }

    fn into_grid(self) -> Result<(Arc<Grid>, usize, String)> {
        if self.p != self.dims.len() {
            return Err(Error::MalformedHeader(format!(
                "p={} but {} dims",
                self.p,
                self.dims.len()
            )));
        }
        let coords = match self.coords {
            Some(c) => c,
            None => self.dims.iter().map(|&d| default_axis(d)).collect(),
        };
        let grid = match self.weight_mode {
            WeightMode::Explicit => {
                let weights = self.weights.ok_or_else(|| {
                    Error::MalformedHeader("explicit weight mode without weights".into())
                })?;
                Grid::with_weights(self.dims, coords, weights)?
            }
            mode => Grid::new(self.dims, coords, mode)?,
        };
        Ok((Arc::new(grid), self.members, self.label))
    }
}

fn default_axis(n: usize) -> Vec<f64> {
    if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }
}

/// Replace the target atomically: write to a sibling temp file, then rename.
fn atomic_write(path: &Path, write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let tmp = tmp_path(path);
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)?;
    out.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(out);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

fn write_binary_raw(path: &Path, grid: &Grid, values: &[f64], members: usize, label: &str) -> Result<()> {
    let header = FileHeader::for_grid(grid, members, label);
    let header_json = serde_json::to_string(&header)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    atomic_write(path, |out| {
        out.write_all(BINARY_MAGIC).map_err(|e| Error::io(path, e))?;
        out.write_all(header_json.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        for v in values {
            out.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

fn read_binary_raw(path: &Path) -> Result<(Arc<Grid>, Vec<f64>, usize, String)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|e| Error::io(path, e))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::MalformedFile(format!(
            "{}: bad magic bytes {magic:?}",
            path.display()
        )));
    }

    let mut header_line = Vec::new();
    reader
        .by_ref()
        .take(MAX_HEADER_BYTES as u64)
        .read_until(b'\n', &mut header_line)
        .map_err(|e| Error::io(path, e))?;
    if header_line.last() != Some(&b'\n') {
        return Err(Error::MalformedHeader("unterminated header line".into()));
    }
    header_line.pop();
    let header: FileHeader = serde_json::from_slice(&header_line)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let (grid, members, label) = header.into_grid()?;

    let expected = members * grid.point_count() * 8;
    let mut payload = Vec::with_capacity(expected);
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(path, e))?;
    if payload.len() < expected {
        return Err(Error::PayloadTruncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedFile(format!(
            "{}: {} trailing bytes after payload",
            path.display(),
            payload.len() - expected
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((grid, values, members, label))
}

// ---------------------------------------------------------------------------
// CSV format
// ---------------------------------------------------------------------------

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("grid.json")
}

fn write_csv(path: &Path, ens: &Ensemble) -> Result<()> {
    let sidecar = sidecar_path(path);
    let header = FileHeader::for_grid(ens.grid(), ens.n_members(), ens.label());
    let header_json = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    atomic_write(&sidecar, |out| {
        out.write_all(header_json.as_bytes())
            .map_err(|e| Error::io(&sidecar, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(&sidecar, e))
    })?;
    atomic_write(path, |out| {
        writeln!(out, "member,point,value").map_err(|e| Error::io(path, e))?;
        for (i, member) in ens.members().enumerate() {
            for (p, v) in member.iter().enumerate() {
                writeln!(out, "{i},{p},{v}").map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(())
    })
}

fn read_csv(path: &Path) -> Result<(Arc<Grid>, Vec<f64>, usize, String)> {
    let sidecar = sidecar_path(path);
    let sidecar_text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let header: FileHeader = serde_json::from_str(&sidecar_text)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let (grid, members, label) = header.into_grid()?;
    let point_count = grid.point_count();

    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(first)) if first.trim() == "member,point,value" => {}
        Some(Ok(first)) => {
            return Err(Error::MalformedHeader(format!(
                "expected 'member,point,value', got {first:?}"
            )))
        }
        Some(Err(e)) => return Err(Error::io(path, e)),
        None => return Err(Error::MalformedHeader("empty csv file".into())),
    }

    let mut values = vec![f64::NAN; members * point_count];
    let mut filled = vec![false; members * point_count];
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (m, p, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(m), Some(p), Some(v)) => (m, p, v),
            _ => {
                return Err(Error::MalformedFile(format!(
                    "line {}: expected member,point,value",
                    lineno + 2
                )))
            }
        };
        let m: usize = m.trim().parse().map_err(|_| {
            Error::MalformedFile(format!("line {}: bad member index {m:?}", lineno + 2))
        })?;
        let p: usize = p.trim().parse().map_err(|_| {
            Error::MalformedFile(format!("line {}: bad point index {p:?}", lineno + 2))
        })?;
        let v: f64 = v.trim().parse().map_err(|_| {
            Error::MalformedFile(format!("line {}: bad value {v:?}", lineno + 2))
        })?;
        if m >= members || p >= point_count {
            return Err(Error::DimensionMismatch(format!(
                "line {}: member {m} point {p} outside {members} x {point_count}",
                lineno + 2
            )));
        }
        let idx = m * point_count + p;
        if filled[idx] {
            return Err(Error::MalformedFile(format!(
                "duplicate cell member {m} point {p}"
            )));
        }
        filled[idx] = true;
        values[idx] = v;
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        return Err(Error::DimensionMismatch(format!(
            "missing cell member {} point {}",
            missing / point_count,
            missing % point_count
        )));
    }
    Ok((grid, values, members, label))
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Load an ensemble from disk; member order is preserved from the file.
pub fn load_ensemble(path: impl AsRef<Path>, format: FileFormat) -> Result<Ensemble> {
    let path = path.as_ref();
    let (grid, values, members, label) = match format {
        FileFormat::Binary => read_binary_raw(path)?,
        FileFormat::Csv => read_csv(path)?,
    };
    let ens = Ensemble::new(grid, values, label)?;
    debug_assert_eq!(ens.n_members(), members);
    Ok(ens)
}

pub fn write_ensemble(path: impl AsRef<Path>, ens: &Ensemble, format: FileFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        FileFormat::Binary => {
            write_binary_raw(path, ens.grid(), ens.values(), ens.n_members(), ens.label())
        }
        FileFormat::Csv => write_csv(path, ens),
    }
}

/// Write a single field (for example a map of statistics) in the binary
/// ensemble format with a member count of one.
pub fn write_field(
    path: impl AsRef<Path>,
    grid: &Grid,
    values: &[f64],
    label: &str,
) -> Result<()> {
    if values.len() != grid.point_count() {
        return Err(Error::LengthMismatch {
            member_len: values.len(),
            point_count: grid.point_count(),
        });
    }
    write_binary_raw(path.as_ref(), grid, values, 1, label)
}

/// Read a single field written by [`write_field`].
pub fn read_field(path: impl AsRef<Path>) -> Result<(Arc<Grid>, Vec<f64>, String)> {
    let (grid, values, members, label) = read_binary_raw(path.as_ref())?;
    if members != 1 {
        return Err(Error::MalformedFile(format!(
            "expected a single field, found {members} members"
        )));
    }
    Ok((grid, values, label))
}

/// Load a `point_index,region_id` mask CSV over an existing grid. Every grid
/// point must be labeled exactly once.
pub fn load_region_mask(path: impl AsRef<Path>, grid: Arc<Grid>) -> Result<RegionMask> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(first)) if first.trim() == "point_index,region_id" => {}
        Some(Ok(first)) => {
            return Err(Error::MalformedHeader(format!(
                "expected 'point_index,region_id', got {first:?}"
            )))
        }
        Some(Err(e)) => return Err(Error::io(path, e)),
        None => return Err(Error::MalformedHeader("empty mask file".into())),
    }
    let mut ids = vec![u32::MAX; grid.point_count()];
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let (p, r) = match (parts.next(), parts.next()) {
            (Some(p), Some(r)) => (p, r),
            _ => {
                return Err(Error::MalformedFile(format!(
                    "line {}: expected point_index,region_id",
                    lineno + 2
                )))
            }
        };
        let p: usize = p.trim().parse().map_err(|_| {
            Error::MalformedFile(format!("line {}: bad point index {p:?}", lineno + 2))
        })?;
        let r: u32 = r.trim().parse().map_err(|_| {
            Error::MalformedFile(format!("line {}: bad region id {r:?}", lineno + 2))
        })?;
        if p >= ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "point index {p} outside grid of {} points",
                ids.len()
            )));
        }
        if ids[p] != u32::MAX {
            return Err(Error::MalformedFile(format!("duplicate point index {p}")));
        }
        ids[p] = r;
    }
    if let Some(missing) = ids.iter().position(|&r| r == u32::MAX) {
        return Err(Error::InvalidMask(format!("point {missing} unlabeled")));
    }
    RegionMask::new(grid, ids)
}

pub fn write_region_mask(path: impl AsRef<Path>, mask: &RegionMask) -> Result<()> {
    let path = path.as_ref();
    atomic_write(path, |out| {
        writeln!(out, "point_index,region_id").map_err(|e| Error::io(path, e))?;
        for (p, id) in mask.region_ids().iter().enumerate() {
            writeln!(out, "{p},{id}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}
