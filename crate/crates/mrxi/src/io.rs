//! File formats: PGM images, CSV vectors and grids, and the binary
//! containers for operators and measurement vectors.
//!
//! All binary payloads are little-endian. Writes go through a temp-file
//! rename so partially written artifacts never appear under their final
//! name.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{DensityField, ForwardOperator};
use crate::geometry::PixelGrid;

const OPERATOR_MAGIC: &[u8; 8] = b"MRXI-KOP";
const VECTOR_MAGIC: &[u8; 8] = b"MRXI-GVC";
const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Atomic writes and hashing
// ---------------------------------------------------------------------------

/// Writes bytes to `path` via a temporary sibling and an atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// PGM images
// ---------------------------------------------------------------------------

/// Linear scaling used to quantize an image into PGM samples; recorded in a
/// JSON sidecar so the float data can be recovered.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PgmScaling {
    pub min: f64,
    pub max: f64,
    pub maxval: u16,
}

impl PgmScaling {
    /// Maps a quantized sample back to the image value range.
    pub fn to_value(&self, sample: u16) -> f64 {
        if self.max > self.min {
            self.min + (self.max - self.min) * (sample as f64) / (self.maxval as f64)
        } else {
            self.min
        }
    }
}

/// Renders a binary PGM (`P5`) in memory; `maxval` 255 gives 8-bit samples,
/// larger values (up to 65535) two-byte big-endian samples per the format.
/// Rows are written top-down, i.e. the highest-`y` grid row first. Returns
/// the bytes and the scaling that maps samples back to values.
pub fn pgm_to_bytes(
    values: &[f64],
    nx: usize,
    ny: usize,
    maxval: u16,
) -> Result<(Vec<u8>, PgmScaling)> {
    if values.len() != nx * ny {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {nx}x{ny} image",
            values.len()
        )));
    }
    if maxval == 0 {
        return Err(Error::InvalidArgument("pgm maxval must be positive".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaling = PgmScaling { min, max, maxval };
    let span = if max > min { max - min } else { 1.0 };
    let mut bytes = format!("P5\n{nx} {ny}\n{maxval}\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let q = (((v - min) / span) * maxval as f64).round() as u16;
            let q = q.min(maxval);
            if maxval > 255 {
                bytes.push((q >> 8) as u8);
                bytes.push((q & 0xff) as u8);
            } else {
                bytes.push(q as u8);
            }
        }
    }
    Ok((bytes, scaling))
}

/// Writes a binary PGM to disk; see [`pgm_to_bytes`].
pub fn write_pgm(
    path: &Path,
    values: &[f64],
    nx: usize,
    ny: usize,
    maxval: u16,
) -> Result<PgmScaling> {
    let (bytes, scaling) = pgm_to_bytes(values, nx, ny, maxval)?;
    atomic_write(path, &bytes)?;
    Ok(scaling)
}

/// Reads a binary PGM written by [`write_pgm`] (or any `P5` file).
pub fn read_pgm(path: &Path) -> Result<(Vec<u16>, usize, usize, u16)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = next_token(&bytes)?;
    if magic != "P5" {
        return Err(format_err(path, format!("expected P5, found {magic}")));
    }
    let nx: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| format_err(path, "bad width"))?;
    let ny: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| format_err(path, "bad height"))?;
    let maxval: u32 = next_token(&bytes)?
        .parse()
        .map_err(|_| format_err(path, "bad maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("maxval {maxval} out of range")));
    }
    pos += 1; // single whitespace after maxval
    let two_byte = maxval > 255;
    let expect = nx * ny * if two_byte { 2 } else { 1 };
    let payload = &bytes
        .get(pos..pos + expect)
        .ok_or_else(|| format_err(path, "truncated pixel data"))?;
    let mut samples = Vec::with_capacity(nx * ny);
    if two_byte {
        for ch in payload.chunks_exact(2) {
            samples.push(((ch[0] as u16) << 8) | ch[1] as u16);
        }
    } else {
        samples.extend(payload.iter().map(|&b| b as u16));
    }
    Ok((samples, nx, ny, maxval as u16))
}

/// Reads a PGM plus its scaling back into a density field on `grid`
/// (undoing the top-down row order of [`write_pgm`]).
pub fn read_pgm_density(path: &Path, scaling: &PgmScaling, grid: &PixelGrid) -> Result<DensityField> {
    let (samples, nx, ny, _maxval) = read_pgm(path)?;
    if nx != grid.nx() || ny != grid.ny() {
        return Err(Error::DimensionMismatch(format!(
            "pgm is {nx}x{ny}, grid is {}x{}",
            grid.nx(),
            grid.ny()
        )));
    }
    let mut values = vec![0.0; nx * ny];
    for (row, chunk) in samples.chunks_exact(nx).enumerate() {
        let iy = ny - 1 - row;
        for (ix, &s) in chunk.iter().enumerate() {
            values[iy * nx + ix] = scaling.to_value(s);
        }
    }
    DensityField::new(grid.clone(), values)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// One value per line; floats print in shortest round-trip form.
pub fn vector_to_csv(v: &[f64]) -> String {
    let mut s = String::new();
    for x in v {
        s.push_str(&format!("{x}\n"));
    }
    s
}

pub fn write_csv_vector(path: &Path, v: &[f64]) -> Result<()> {
    atomic_write(path, vector_to_csv(v).as_bytes())
}

pub fn read_csv_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| format_err(path, format!("bad float {l:?}")))
        })
        .collect()
}

/// Grid CSV: one line per row (`iy = 0` first), comma-separated columns.
pub fn write_csv_grid(path: &Path, field: &DensityField) -> Result<()> {
    let nx = field.grid.nx();
    let mut s = String::new();
    for row in field.values.chunks(nx) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            s.push_str(&format!("{v}"));
            first = false;
        }
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

pub fn read_csv_grid(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut nx = None;
    let mut ny = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| format_err(path, "bad float in grid row"))?;
        match nx {
            None => nx = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(format_err(path, "ragged grid rows"));
            }
            _ => {}
        }
        values.extend(row);
        ny += 1;
    }
    Ok((values, nx.unwrap_or(0), ny))
}

// ---------------------------------------------------------------------------
// Binary containers
// ---------------------------------------------------------------------------

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn new() -> ByteWriter {
        ByteWriter { buf: Vec::new() }
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let slice = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| format_err(self.path, "truncated file"))?;
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Serializes the operator: magic, version, shape, langevin flag, then the
/// length-prefixed row map and grid descriptor records, then the row-major
/// entries.
pub fn operator_to_bytes(op: &ForwardOperator) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(OPERATOR_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(op.rows() as u64);
    w.u64(op.cols() as u64);
    w.u64(op.num_activations() as u64);
    w.u64(op.num_sensors() as u64);
    w.buf.push(op.langevin_applied() as u8);
    // row map record
    w.u64((op.row_map().len() * 16) as u64);
    for &(a, s) in op.row_map() {
        w.u64(a as u64);
        w.u64(s as u64);
    }
    // grid record (JSON payload)
    let grid_json = serde_json::to_vec(op.grid())?;
    w.u64(grid_json.len() as u64);
    w.buf.extend_from_slice(&grid_json);
    for &v in op.entries() {
        w.f64(v);
    }
    Ok(w.buf)
}

pub fn write_operator(path: &Path, op: &ForwardOperator) -> Result<()> {
    atomic_write(path, &operator_to_bytes(op)?)
}

pub fn read_operator(path: &Path) -> Result<ForwardOperator> {
    let bytes = fs::read(path)?;
    let mut r = ByteReader { bytes: &bytes, pos: 0, path };
    if r.take(8)? != OPERATOR_MAGIC {
        return Err(format_err(path, "not an operator container"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let m = r.u64()? as usize;
    let n = r.u64()? as usize;
    let num_activations = r.u64()? as usize;
    let num_sensors = r.u64()? as usize;
    let langevin = r.take(1)?[0] != 0;
    let row_map_len = r.u64()? as usize;
    if row_map_len != m * 16 {
        return Err(format_err(path, "row map record length mismatch"));
    }
    let mut row_map = Vec::with_capacity(m);
    for _ in 0..m {
        let a = r.u64()? as usize;
        let s = r.u64()? as usize;
        row_map.push((a, s));
    }
    let grid_len = r.u64()? as usize;
    let grid: PixelGrid = serde_json::from_slice(r.take(grid_len)?)?;
    if grid.len() != n {
        return Err(format_err(path, "grid does not match column count"));
    }
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        data.push(r.f64()?);
    }
    ForwardOperator::from_parts(data, num_activations, num_sensors, grid, row_map, langevin)
}

/// Measurement vector container: magic, version, length, entries.
pub fn vector_to_bytes(v: &[f64]) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(VECTOR_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(v.len() as u64);
    for &x in v {
        w.f64(x);
    }
    w.buf
}

pub fn write_vector_binary(path: &Path, v: &[f64]) -> Result<()> {
    atomic_write(path, &vector_to_bytes(v))
}

pub fn read_vector_binary(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    let mut r = ByteReader { bytes: &bytes, pos: 0, path };
    if r.take(8)? != VECTOR_MAGIC {
        return Err(format_err(path, "not a measurement container"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let m = r.u64()? as usize;
    let mut v = Vec::with_capacity(m);
    for _ in 0..m {
        v.push(r.f64()?);
    }
    Ok(v)
}

/// Reads a measurement vector from either the binary container or a CSV
/// file, decided by content sniffing.
pub fn read_vector_auto(path: &Path) -> Result<Vec<f64>> {
    let mut head = [0u8; 8];
    let mut f = fs::File::open(path)?;
    let got = f.read(&mut head)?;
    drop(f);
    if got == 8 && &head == VECTOR_MAGIC {
        read_vector_binary(path)
    } else {
        read_csv_vector(path)
    }
}
