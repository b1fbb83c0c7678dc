//! File formats: the binary dataset container, the parameter record, raw
//! stack ingestion, prediction CSVs and 8-bit graymaps.
//!
//! All binary integers and floats are little-endian.
//!
//! Dataset file:
//!
//! ```text
//! "FDDS" | version u32 | d u32 | dims u64 x d | n u64
//!        | meta_len u32 | meta (UTF-8 key=value lines)
//!        | checksum u64 (FNV-1a of every preceding byte)
//!        | n x N f64, subject-major, grid order within a subject
//! ```
//!
//! Parameter file:
//!
//! ```text
//! "FDNP" | version u32 | layers u32 | widths u64 x layers | flags u32
//!        | f_bound f64 | sparsity u64 | count u64 | checksum u64
//!        | values f64 x count (W_0..W_L row-major, then v_1..v_L)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::grid::GridDesign;
use crate::network::{Architecture, NetworkParams};
use crate::simulate::{DatasetMeta, FunctionalDataset};

pub const DATASET_MAGIC: &[u8; 4] = b"FDDS";
pub const PARAMS_MAGIC: &[u8; 4] = b"FDNP";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_CONSTRAINED: u32 = 1;
const MAX_META_BYTES: u32 = 1 << 20;
const MAX_DIMS: u32 = 64;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct HeaderReader<R> {
    inner: R,
    seen: Vec<u8>,
}

impl<R: Read> HeaderReader<R> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let start = self.seen.len();
        self.seen.resize(start + n, 0);
        self.inner.read_exact(&mut self.seen[start..]).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("file ends inside the header".into())
            } else {
                Error::Io(e)
            }
        })?;
        Ok(&self.seen[start..])
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

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?.to_vec();
        if got != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(expected)
            )));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        Ok(())
    }

    fn checksum(&mut self) -> Result<()> {
        let want = fnv1a(&self.seen);
        let mut buf = [0u8; 8];
        self.inner.read_exact(&mut buf).map_err(|_| Error::Format("file ends inside the header".into()))?;
        if u64::from_le_bytes(buf) != want {
            return Err(Error::Format("header checksum mismatch".into()));
        }
        Ok(())
    }
}

fn usize_of(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in memory")))
}

fn encode_meta(meta: &DatasetMeta) -> String {
    format!(
        "mean_id={}\nkernel={}\nnoise={}\nseed={}\n",
        meta.mean_id, meta.kernel, meta.noise, meta.seed
    )
}

fn decode_meta(text: &str) -> Result<DatasetMeta> {
    let mut meta = DatasetMeta::default();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad metadata line '{line}'")))?;
        match k {
            "mean_id" => meta.mean_id = v.to_string(),
            "kernel" => meta.kernel = v.to_string(),
            "noise" => meta.noise = v.to_string(),
            "seed" => {
                meta.seed = v
                    .parse()
                    .map_err(|_| Error::Format(format!("bad seed '{v}' in metadata")))?
            }
            _ => {}
        }
    }
    Ok(meta)
}

/// Parsed dataset header.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub grid: GridDesign,
    pub n: usize,
    pub meta: DatasetMeta,
}

impl DatasetHeader {
    pub fn payload_bytes(&self) -> u64 {
        8 * self.n as u64 * self.grid.len() as u64
    }
}

pub fn write_dataset_header<W: Write>(mut w: W, header: &DatasetHeader) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.grid.dim() as u32).to_le_bytes());
    for &m in header.grid.dims() {
        buf.extend_from_slice(&(m as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(header.n as u64).to_le_bytes());
    let meta = encode_meta(&header.meta);
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(meta.as_bytes());
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_dataset_header<R: Read>(r: R) -> Result<(DatasetHeader, R)> {
    let mut h = HeaderReader {
        inner: r,
        seen: Vec::new(),
    };
    h.magic(DATASET_MAGIC)?;
    let d = h.u32()?;
    if d == 0 || d > MAX_DIMS {
        return Err(Error::Format(format!("implausible dimension {d}")));
    }
    let mut dims = Vec::with_capacity(d as usize);
    for _ in 0..d {
        dims.push(usize_of(h.u64()?, "axis size")?);
    }
    let n = usize_of(h.u64()?, "subject count")?;
    let meta_len = h.u32()?;
    if meta_len > MAX_META_BYTES {
        return Err(Error::Format(format!("metadata block of {meta_len} bytes")));
    }
    let text = String::from_utf8(h.take(meta_len as usize)?.to_vec())
        .map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
    h.checksum()?;
    let grid = GridDesign::new(&dims).map_err(|e| Error::Format(e.to_string()))?;
    if n == 0 {
        return Err(Error::Format("dataset with zero subjects".into()));
    }
    Ok((
        DatasetHeader {
            grid,
            n,
            meta: decode_meta(&text)?,
        },
        h.inner,
    ))
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len().min(1 << 16) * 8);
    for chunk in values.chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, out: &mut [f64]) -> Result<()> {
    let mut buf = vec![0u8; out.len().min(1 << 16) * 8];
    for chunk in out.chunks_mut(1 << 16) {
        let bytes = &mut buf[..chunk.len() * 8];
        r.read_exact(bytes).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("payload shorter than the header declares".into())
            } else {
                Error::Io(e)
            }
        })?;
        for (v, b) in chunk.iter_mut().zip(bytes.chunks_exact(8)) {
            *v = f64::from_le_bytes(b.try_into().unwrap());
        }
    }
    Ok(())
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after the payload".into()));
    }
    Ok(())
}

pub fn write_dataset<W: Write>(mut w: W, data: &FunctionalDataset) -> Result<()> {
    write_dataset_header(
        &mut w,
        &DatasetHeader {
            grid: data.grid.clone(),
            n: data.n,
            meta: data.meta.clone(),
        },
    )?;
    write_f64s(&mut w, &data.y)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> Result<FunctionalDataset> {
    let (header, mut r) = read_dataset_header(r)?;
    let mut y = vec![0.0; header.n * header.grid.len()];
    read_f64s(&mut r, &mut y)?;
    expect_eof(&mut r)?;
    FunctionalDataset::new(header.grid, header.n, y, header.meta)
}

pub fn write_dataset_file(path: &Path, data: &FunctionalDataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data)
}

pub fn read_dataset_file(path: &Path) -> Result<FunctionalDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Row-at-a-time dataset reader.
pub struct DatasetReader<R> {
    pub header: DatasetHeader,
    inner: R,
    next_row: usize,
}

impl DatasetReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DatasetReader<R> {
    pub fn new(r: R) -> Result<Self> {
        let (header, inner) = read_dataset_header(r)?;
        Ok(Self {
            header,
            inner,
            next_row: 0,
        })
    }

    /// Fills `row` (length `N`) with the next subject; `false` after the last.
    pub fn read_row(&mut self, row: &mut [f64]) -> Result<bool> {
        if row.len() != self.header.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.header.grid.len(),
                actual: row.len(),
            });
        }
        if self.next_row == self.header.n {
            expect_eof(&mut self.inner)?;
            return Ok(false);
        }
        read_f64s(&mut self.inner, row)?;
        self.next_row += 1;
        Ok(true)
    }

    /// Pointwise means without holding the full array.
    pub fn pointwise_mean(mut self) -> Result<Vec<f64>> {
        let n_pts = self.header.grid.len();
        let mut acc = vec![0.0; n_pts];
        let mut row = vec![0.0; n_pts];
        while self.read_row(&mut row)? {
            if let Some(p) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite observation at subject {}, point {}",
                    self.next_row,
                    p + 1
                )));
            }
            for (a, v) in acc.iter_mut().zip(&row) {
                *a += v;
            }
        }
        let n = self.header.n as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }
}

/// Wraps a raw subject-major stack of little-endian `f64` values (`n`
/// subjects of `prod(dims)` voxels each, voxels in grid order) as a dataset
/// file, streaming. With `n = None` the subject count is inferred from the
/// file length.
pub fn ingest_raw(raw: &Path, dims: &[usize], n: Option<usize>, out: &Path, meta: DatasetMeta) -> Result<DatasetHeader> {
    let grid = GridDesign::new(dims)?;
    let len = std::fs::metadata(raw)?.len();
    let per_subject = 8 * grid.len() as u64;
    let n = match n {
        Some(n) => n,
        None => {
            if len == 0 || len % per_subject != 0 {
                return Err(invalid(format!(
                    "raw stack has {len} bytes, not a positive multiple of 8 * {} = {per_subject}",
                    grid.len()
                )));
            }
            usize_of(len / per_subject, "subject count")?
        }
    };
    let expected = per_subject * n as u64;
    if n == 0 || len != expected {
        return Err(invalid(format!(
            "raw stack length mismatch: expected {expected} bytes (8 x n={n} x N={}), found {len}",
            grid.len()
        )));
    }
    let header = DatasetHeader { grid, n, meta };
    let mut w = BufWriter::new(File::create(out)?);
    write_dataset_header(&mut w, &header)?;
    let mut r = BufReader::new(File::open(raw)?);
    let mut row = vec![0.0; header.grid.len()];
    for i in 0..n {
        read_f64s(&mut r, &mut row)?;
        if let Some(p) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at subject {}, voxel {}", i + 1, p + 1)));
        }
        write_f64s(&mut w, &row)?;
    }
    w.flush()?;
    Ok(header)
}

/// Parameter record with its architecture and mode flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsRecord {
    pub params: NetworkParams,
    pub arch: Architecture,
    pub constrained: bool,
}

pub fn write_params<W: Write>(mut w: W, rec: &ParamsRecord) -> Result<()> {
    if rec.params.widths() != rec.arch.widths.as_slice() {
        return Err(invalid("parameter shapes do not match the architecture"));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(PARAMS_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(rec.arch.widths.len() as u32).to_le_bytes());
    for &p in &rec.arch.widths {
        buf.extend_from_slice(&(p as u64).to_le_bytes());
    }
    let flags = if rec.constrained { FLAG_CONSTRAINED } else { 0 };
    buf.extend_from_slice(&flags.to_le_bytes());
    buf.extend_from_slice(&rec.arch.f_bound.to_le_bytes());
    buf.extend_from_slice(&(rec.arch.sparsity as u64).to_le_bytes());
    buf.extend_from_slice(&(rec.params.len() as u64).to_le_bytes());
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    w.write_all(&buf)?;
    write_f64s(&mut w, rec.params.as_slice())?;
    w.flush()?;
    Ok(())
}

pub fn read_params<R: Read>(r: R) -> Result<ParamsRecord> {
    let mut h = HeaderReader {
        inner: r,
        seen: Vec::new(),
    };
    h.magic(PARAMS_MAGIC)?;
    let layers = h.u32()?;
    if !(3..=10_000).contains(&layers) {
        return Err(Error::Format(format!("implausible layer count {layers}")));
    }
    let mut widths = Vec::with_capacity(layers as usize);
    for _ in 0..layers {
        widths.push(usize_of(h.u64()?, "width")?);
    }
    let flags = h.u32()?;
    let f_bound = h.f64()?;
    let sparsity = usize_of(h.u64()?, "sparsity")?;
    let count = usize_of(h.u64()?, "parameter count")?;
    h.checksum()?;
    let arch = Architecture::new(widths, sparsity, f_bound).map_err(|e| Error::Format(e.to_string()))?;
    if count != arch.parameter_count() {
        return Err(Error::Format(format!(
            "parameter count {count} does not match the architecture ({})",
            arch.parameter_count()
        )));
    }
    let mut r = h.inner;
    let mut values = vec![0.0; count];
    read_f64s(&mut r, &mut values)?;
    expect_eof(&mut r)?;
    Ok(ParamsRecord {
        params: NetworkParams::from_flat(&arch.widths, values)?,
        arch,
        constrained: flags & FLAG_CONSTRAINED != 0,
    })
}

pub fn write_params_file(path: &Path, rec: &ParamsRecord) -> Result<()> {
    write_params(BufWriter::new(File::create(path)?), rec)
}

pub fn read_params_file(path: &Path) -> Result<ParamsRecord> {
    read_params(BufReader::new(File::open(path)?))
}

/// CSV with columns `x1..xd,fhat` and, when given, `f0`.
pub fn write_values_csv<W: Write>(w: W, grid: &GridDesign, fhat: &[f64], truth: Option<&[f64]>) -> Result<()> {
    if fhat.len() != grid.len() || truth.is_some_and(|t| t.len() != grid.len()) {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: fhat.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut head: Vec<String> = (1..=grid.dim()).map(|k| format!("x{k}")).collect();
    head.push("fhat".into());
    if truth.is_some() {
        head.push("f0".into());
    }
    wtr.write_record(&head)?;
    let mut x = vec![0.0; grid.dim()];
    let mut rec: Vec<String> = Vec::with_capacity(head.len());
    for j in 0..grid.len() {
        grid.point_into(j, &mut x);
        rec.clear();
        rec.extend(x.iter().map(|v| v.to_string()));
        rec.push(fhat[j].to_string());
        if let Some(t) = truth {
            rec.push(t[j].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// 8-bit value of `v` under min-max scaling to `0..=255`; a constant image
/// maps to 0.
pub fn gray_level(v: f64, min: f64, max: f64) -> u8 {
    if !(max > min) {
        return 0;
    }
    ((v - min) / (max - min) * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Writes binary PGM images (`P5`). A 1D or 2D grid gives one image; higher
/// dimensions give one image per index of the trailing axes, named
/// `<stem>_<i3>_<i4>...pgm` (1-based). Axis 1 runs left to right, axis 2 top
/// to bottom. All images share one min-max scale, recorded in
/// `<stem>.scale.txt` so that `value = min + level / 255 * (max - min)`.
pub fn write_pgm_slices(dir: &Path, stem: &str, grid: &GridDesign, values: &[f64]) -> Result<Vec<PathBuf>> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let dims = grid.dims();
    let width = dims[0];
    let height = if dims.len() >= 2 { dims[1] } else { 1 };
    let plane = width * height;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut paths = Vec::new();
    for (s, slice) in values.chunks(plane).enumerate() {
        let name = if dims.len() <= 2 {
            format!("{stem}.pgm")
        } else {
            let mut rest = s;
            let mut parts = Vec::new();
            for &m in &dims[2..] {
                parts.push(format!("{}", rest % m + 1));
                rest /= m;
            }
            format!("{stem}_{}.pgm", parts.join("_"))
        };
        let path = dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "P5 {width} {height} 255")?;
        let bytes: Vec<u8> = slice.iter().map(|&v| gray_level(v, min, max)).collect();
        w.write_all(&bytes)?;
        w.flush()?;
        paths.push(path);
    }
    let mut side = BufWriter::new(File::create(dir.join(format!("{stem}.scale.txt")))?);
    writeln!(side, "min={min:.17e}")?;
    writeln!(side, "max={max:.17e}")?;
    writeln!(side, "value = min + level / 255 * (max - min)")?;
    side.flush()?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, InitScheme};
    use crate::rng::{substream, StreamRole};

    fn small_dataset() -> FunctionalDataset {
        let g = GridDesign::new(&[3, 2]).unwrap();
        let y: Vec<f64> = (0..12).map(|v| v as f64 * 0.5 - 1.0).collect();
        let meta = DatasetMeta {
            mean_id: "case2".into(),
            kernel: "cosine".into(),
            noise: "sigma=1".into(),
            seed: 7,
        };
        FunctionalDataset::new(g, 2, y, meta).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn dataset_round_trip() {
        let ds = small_dataset();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(&buf[..]).unwrap();
        assert_eq!(back, ds);
        let header_len = buf.len() - 8 * 12;
        assert_eq!(&buf[..4], b"FDDS");
        let mut rdr = DatasetReader::new(&buf[..]).unwrap();
        let mut row = vec![0.0; 6];
        assert!(rdr.read_row(&mut row).unwrap());
        assert_eq!(row, ds.row(0));
        let mean = DatasetReader::new(&buf[..]).unwrap().pointwise_mean().unwrap();
        assert_eq!(mean, crate::simulate::pointwise_mean(&ds));
        // corrupt the header
        let mut bad = buf.clone();
        bad[10] ^= 1;
        assert!(matches!(read_dataset(&bad[..]), Err(Error::Format(_))));
        // truncate the payload
        assert!(matches!(read_dataset(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_dataset(&long[..]), Err(Error::Format(_))));
        assert!(matches!(read_dataset(&buf[..header_len - 1]), Err(Error::Format(_))));
    }

    #[test]
    fn params_round_trip() {
        let arch = Architecture::with_hidden(2, &[4, 3], 20, 1.5).unwrap();
        let p = init_params(&arch, InitScheme::HeNormal, &mut substream(1, 0, StreamRole::Init), false).unwrap();
        let rec = ParamsRecord {
            params: p,
            arch,
            constrained: true,
        };
        let mut buf = Vec::new();
        write_params(&mut buf, &rec).unwrap();
        assert_eq!(read_params(&buf[..]).unwrap(), rec);
        let mut bad = buf.clone();
        bad[9] ^= 0xff;
        assert!(read_params(&bad[..]).is_err());
        assert!(read_params(&buf[..buf.len() - 8]).is_err());
    }

    #[test]
    fn ingest_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("stack.raw");
        let values: Vec<f64> = (0..32).map(|v| (v as f64).sqrt()).collect();
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(bytes.len(), 256);
        std::fs::write(&raw, &bytes).unwrap();
        let out = dir.path().join("stack.fdds");
        let h = ingest_raw(&raw, &[4, 4], Some(2), &out, DatasetMeta::default()).unwrap();
        assert_eq!(h.n, 2);
        let ds = read_dataset_file(&out).unwrap();
        assert_eq!(ds.y, values);
        assert_eq!(ingest_raw(&raw, &[4, 4], None, &out, DatasetMeta::default()).unwrap().n, 2);
        std::fs::write(&raw, &bytes[..250]).unwrap();
        let err = ingest_raw(&raw, &[4, 4], Some(2), &out, DatasetMeta::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(ref m) if m.contains("256") && m.contains("250")));
    }

    #[test]
    fn pgm_format() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridDesign::new(&[128, 128]).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|j| j as f64).collect();
        let paths = write_pgm_slices(dir.path(), "img", &g, &values).unwrap();
        assert_eq!(paths.len(), 1);
        let bytes = std::fs::read(&paths[0]).unwrap();
        assert!(bytes.starts_with(b"P5 128 128 255\n"));
        assert_eq!(bytes.len(), 15 + 16384);
        assert_eq!(bytes[15], 0);
        assert_eq!(*bytes.last().unwrap(), 255);
        let scale = std::fs::read_to_string(dir.path().join("img.scale.txt")).unwrap();
        assert!(scale.starts_with("min=0"));
        let g3 = GridDesign::new(&[4, 3, 2]).unwrap();
        let p3 = write_pgm_slices(dir.path(), "vol", &g3, &[1.0; 24]).unwrap();
        assert_eq!(p3.len(), 2);
        assert!(p3[1].ends_with("vol_2.pgm"));
        assert_eq!(gray_level(1.0, 1.0, 1.0), 0);
    }

    #[test]
    fn values_csv_layout() {
        let g = GridDesign::new(&[2]).unwrap();
        let mut out = Vec::new();
        write_values_csv(&mut out, &g, &[0.1, 0.2], Some(&[0.0, 1.0])).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x1,fhat,f0\n0.5,0.1,0\n1,0.2,1\n");
    }
}
