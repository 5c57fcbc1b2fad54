//! Datasets: IDX ubyte files for binary data, headerless CSV for real vectors.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use csl_core::BinaryVector;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{validation, CliError};

pub const IDX_UBYTE: u8 = 0x08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Binary,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vectors {
    Binary(Vec<BinaryVector>),
    Real(Vec<Vec<f64>>),
}

/// Equal-length vectors with one split tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vectors: Vectors,
    dim: usize,
    splits: Vec<Split>,
}

impl Dataset {
    pub fn binary(rows: Vec<BinaryVector>) -> Result<Self> {
        let dim = common_dim(rows.iter().map(|r| r.len()))?;
        Ok(Self { splits: vec![Split::Train; rows.len()], vectors: Vectors::Binary(rows), dim })
    }

    pub fn real(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = common_dim(rows.iter().map(|r| r.len()))?;
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(validation("real dataset contains a non-finite value"));
        }
        Ok(Self { splits: vec![Split::Train; rows.len()], vectors: Vectors::Real(rows), dim })
    }

    pub fn kind(&self) -> DataKind {
        match self.vectors {
            Vectors::Binary(_) => DataKind::Binary,
            Vectors::Real(_) => DataKind::Real,
        }
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &Vectors {
        &self.vectors
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn binary_rows(&self) -> Result<&[BinaryVector]> {
        match &self.vectors {
            Vectors::Binary(v) => Ok(v),
            Vectors::Real(_) => Err(validation("expected a binary dataset, got real-valued data")),
        }
    }

    pub fn real_rows(&self) -> Result<&[Vec<f64>]> {
        match &self.vectors {
            Vectors::Real(v) => Ok(v),
            Vectors::Binary(_) => Err(validation("expected a real-valued dataset, got binary data")),
        }
    }

    /// Rows as `f64` vectors regardless of kind.
    pub fn as_real(&self) -> Vec<Vec<f64>> {
        match &self.vectors {
            Vectors::Real(v) => v.clone(),
            Vectors::Binary(v) => v.iter().map(|b| b.bits().iter().map(|&x| x as f64).collect()).collect(),
        }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.splits.iter_mut().for_each(|s| *s = split);
        self
    }

    /// Retags a seeded random `n_validation` rows as validation and `n_test` as test.
    pub fn assign_splits(mut self, n_validation: usize, n_test: usize, seed: u64) -> Result<Self> {
        if n_validation + n_test > self.len() {
            return Err(validation(format!(
                "cannot hold out {} rows from a dataset of {}",
                n_validation + n_test,
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut csl_core::rng::stream_rng(seed, 0));
        self.splits.iter_mut().for_each(|s| *s = Split::Train);
        for (k, &i) in order.iter().take(n_validation + n_test).enumerate() {
            self.splits[i] = if k < n_validation { Split::Validation } else { Split::Test };
        }
        Ok(self)
    }

    /// Rows tagged `split`, in original order.
    pub fn subset(&self, split: Split) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.splits[i] == split).collect();
        let vectors = match &self.vectors {
            Vectors::Binary(v) => Vectors::Binary(keep.iter().map(|&i| v[i].clone()).collect()),
            Vectors::Real(v) => Vectors::Real(keep.iter().map(|&i| v[i].clone()).collect()),
        };
        Self { vectors, dim: self.dim, splits: vec![split; keep.len()] }
    }

    /// The first `n` rows, or all of them if fewer.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let vectors = match &self.vectors {
            Vectors::Binary(v) => Vectors::Binary(v[..n].to_vec()),
            Vectors::Real(v) => Vectors::Real(v[..n].to_vec()),
        };
        Self { vectors, dim: self.dim, splits: self.splits[..n].to_vec() }
    }
}

fn common_dim(mut lens: impl Iterator<Item = usize>) -> Result<usize> {
    let dim = lens.next().ok_or_else(|| validation("dataset is empty"))?;
    if dim == 0 {
        return Err(validation("dataset rows must be nonempty"));
    }
    if let Some(other) = lens.find(|&l| l != dim) {
        return Err(validation(format!("ragged dataset: row lengths {dim} and {other}")));
    }
    Ok(dim)
}

/// A parsed IDX ubyte array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

/// Byte offset and reason for a malformed IDX buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxParseError {
    pub offset: u64,
    pub reason: String,
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32, IdxParseError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| IdxParseError { offset: offset as u64, reason: format!("truncated before {what}") })
}

/// Parses a big-endian IDX ubyte buffer (magic `0x000008NN`, `NN` = number of dimensions).
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray, IdxParseError> {
    let magic = be_u32(bytes, 0, "magic number")?;
    let [z0, z1, ty, ndims] = magic.to_be_bytes();
    if z0 != 0 || z1 != 0 {
        return Err(IdxParseError { offset: 0, reason: format!("bad magic 0x{magic:08x}") });
    }
    if ty != IDX_UBYTE {
        return Err(IdxParseError { offset: 2, reason: format!("unsupported element type 0x{ty:02x}") });
    }
    if ndims == 0 {
        return Err(IdxParseError { offset: 3, reason: "zero dimensions".into() });
    }
    let mut dims = Vec::with_capacity(ndims as usize);
    for k in 0..ndims as usize {
        dims.push(be_u32(bytes, 4 + 4 * k, &format!("dimension {k}"))?);
    }
    let header = 4 + 4 * ndims as usize;
    let len = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d as usize)).ok_or_else(|| {
        IdxParseError { offset: 4, reason: "dimension product overflows".into() }
    })?;
    let available = bytes.len() - header;
    if available < len {
        return Err(IdxParseError {
            offset: bytes.len() as u64,
            reason: format!("truncated payload: expected {len} bytes, found {available}"),
        });
    }
    if available > len {
        return Err(IdxParseError {
            offset: (header + len) as u64,
            reason: format!("{} trailing bytes", available - len),
        });
    }
    Ok(IdxArray { dims, data: bytes[header..].to_vec() })
}

fn read_idx(path: &Path) -> Result<IdxArray> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_idx(&bytes).map_err(|e| {
        CliError::Idx { path: path.to_path_buf(), offset: e.offset, reason: e.reason }.into()
    })
}

/// Loads an IDX image file as binary vectors: pixels are scaled by 1/255 and
/// set where the result is at least `threshold`, which must lie in (0, 1).
pub fn load_idx(path: impl AsRef<Path>, threshold: f64) -> Result<Dataset> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(validation(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let path = path.as_ref();
    let arr = read_idx(path)?;
    binarize(&arr, threshold).with_context(|| format!("loading {}", path.display()))
}

fn binarize(arr: &IdxArray, threshold: f64) -> Result<Dataset> {
    if arr.dims.len() < 2 {
        return Err(validation("IDX file has one dimension; expected items × features (a label file?)"));
    }
    let n = arr.dims[0] as usize;
    let dim: usize = arr.dims[1..].iter().map(|&d| d as usize).product();
    if n == 0 || dim == 0 {
        return Err(validation("IDX file holds no data"));
    }
    let rows = arr
        .data
        .chunks(dim)
        .map(|px| BinaryVector::new(px.iter().map(|&p| (p as f64 / 255.0 >= threshold) as u8).collect()))
        .collect::<csl_core::Result<Vec<_>>>()?;
    Dataset::binary(rows)
}

/// Loads an IDX label file (magic `0x00000801`).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let arr = read_idx(path)?;
    if arr.dims.len() != 1 {
        return Err(validation(format!("{}: expected a 1-D label file", path.display())));
    }
    Ok(arr.data)
}

/// Encodes binary rows as IDX ubyte with pixel values 0 and 255. `shape` gives
/// the per-item dimensions; `None` writes items × 1 × dim.
pub fn encode_idx(data: &Dataset, shape: Option<&[u32]>) -> Result<Vec<u8>> {
    let rows = data.binary_rows()?;
    let per_item: Vec<u32> = match shape {
        Some(s) => {
            if s.iter().map(|&d| d as usize).product::<usize>() != data.dim() {
                return Err(validation(format!("shape {s:?} does not match dimension {}", data.dim())));
            }
            s.to_vec()
        }
        None => vec![1, data.dim() as u32],
    };
    let mut out = Vec::with_capacity(8 + 4 * per_item.len() + rows.len() * data.dim());
    out.extend_from_slice(&[0, 0, IDX_UBYTE, (per_item.len() + 1) as u8]);
    out.extend_from_slice(&(rows.len() as u32).to_be_bytes());
    for d in &per_item {
        out.extend_from_slice(&d.to_be_bytes());
    }
    for r in rows {
        out.extend(r.bits().iter().map(|&b| b * 255));
    }
    Ok(out)
}

pub fn save_idx(path: impl AsRef<Path>, data: &Dataset, shape: Option<&[u32]>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_idx(data, shape)?).with_context(|| format!("writing {}", path.display()))
}

/// Reads headerless CSV. Files whose values are all 0 or 1 load as binary.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let fail = |reason: String| CliError::Csv { path: path.to_path_buf(), line: i + 1, reason };
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| fail(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let binary = !rows.is_empty() && rows.iter().flatten().all(|&v| v == 0.0 || v == 1.0);
    if binary {
        let rows = rows
            .iter()
            .map(|r| BinaryVector::new(r.iter().map(|&v| v as u8).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        return Dataset::binary(rows).with_context(|| format!("loading {}", path.display()));
    }
    Dataset::real(rows).with_context(|| format!("loading {}", path.display()))
}

/// Writes rows as headerless CSV using shortest round-trip float formatting.
pub fn save_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for row in data.as_real() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Loads IDX (detected by its two leading zero bytes) or CSV.
pub fn load_dataset(path: impl AsRef<Path>, threshold: f64) -> Result<Dataset> {
    let path = path.as_ref();
    let mut head = [0u8; 2];
    let n = {
        use std::io::Read;
        let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        f.read(&mut head)?
    };
    if n == 2 && head == [0, 0] {
        load_idx(path, threshold)
    } else {
        load_csv(path)
    }
}

/// Writes CSV for a `.csv` path or real data, IDX otherwise.
pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset, idx_shape: Option<&[u32]>) -> Result<()> {
    let path = path.as_ref();
    let csv_path = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    match data.kind() {
        DataKind::Binary if !csv_path => save_idx(path, data, idx_shape),
        _ => save_csv(path, data),
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn idx_2x2(pixels: [u8; 4]) -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&pixels);
        b
    }

    #[test]
    fn four_byte_file_reports_offset_four() {
        let err = parse_idx(&[0, 0, 8, 3]).unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn bad_magic_and_type() {
        assert_eq!(parse_idx(&[1, 0, 8, 3]).unwrap_err().offset, 0);
        assert_eq!(parse_idx(&[0, 0, 9, 1, 0, 0, 0, 0]).unwrap_err().offset, 2);
        assert_eq!(parse_idx(&[0, 0]).unwrap_err().offset, 0);
    }

    #[test]
    fn truncated_payload_names_end_of_file() {
        let mut b = idx_2x2([0, 1, 2, 3]);
        b.pop();
        assert_eq!(parse_idx(&b).unwrap_err().offset, 19);
    }

    #[test]
    fn threshold_boundary_pixels() {
        let arr = parse_idx(&idx_2x2([0, 127, 128, 255])).unwrap();
        let d = binarize(&arr, 0.5).unwrap();
        assert_eq!(d.binary_rows().unwrap()[0].bits(), &[0, 0, 1, 1]);
    }

    #[test]
    fn label_files_parse() {
        let arr = parse_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 9]).unwrap();
        assert_eq!(arr.dims, vec![3]);
        assert_eq!(arr.data, vec![7, 2, 9]);
        assert!(binarize(&arr, 0.5).is_err());
    }

    #[test]
    fn splits_partition_rows() {
        let rows = (0..10).map(|i| BinaryVector::from_index(i, 4)).collect();
        let d = Dataset::binary(rows).unwrap().assign_splits(2, 3, 9).unwrap();
        assert_eq!(d.subset(Split::Train).len(), 5);
        assert_eq!(d.subset(Split::Validation).len(), 2);
        assert_eq!(d.subset(Split::Test).len(), 3);
        assert!(Dataset::binary(vec![BinaryVector::zeros(2)]).unwrap().assign_splits(1, 1, 0).is_err());
    }

    #[test]
    fn ragged_or_nonfinite_rows_rejected() {
        assert!(Dataset::real(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::real(vec![vec![f64::NAN]]).is_err());
        assert!(Dataset::real(vec![]).is_err());
    }

    #[test]
    fn save_format_follows_extension() {
        let dir = tempfile::TempDir::new().unwrap();
        let data = Dataset::binary(vec![BinaryVector::new(vec![1, 0, 1]).unwrap()]).unwrap();
        let csv = dir.path().join("d.csv");
        let idx = dir.path().join("d.idx");
        save_dataset(&csv, &data, None).unwrap();
        save_dataset(&idx, &data, None).unwrap();
        assert_eq!(std::fs::read_to_string(&csv).unwrap().trim(), "1,0,1");
        assert_eq!(&std::fs::read(&idx).unwrap()[..4], &[0, 0, 8, 3]);
        assert_eq!(load_dataset(&csv, 0.5).unwrap().binary_rows().unwrap(), data.binary_rows().unwrap());
    }
}
