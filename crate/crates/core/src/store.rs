//! Binary trajectory files and CSV export.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//!      0     8  magic "FPUTTRAJ"
//!      8     4  u32 version = 1
//!     12     8  u64 n_s (rows)
//!     20     4  u32 n (columns)
//!     24     8  f64 beta
//!     32     4  u32 k
//!     36     8  f64 A
//!     44     8  f64 h
//!     52     4  u32 stride
//!     56  8·n_s·n  row-major f64 payload
//!    ...     8  u64 FNV-1a 64 of the payload bytes
//! ```

use std::fs::File;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use fnv::FnvHasher;

use crate::chain::{InitialCondition, ModelParams, SampleSink};
use crate::error::{Error, Result};
use crate::report::{fmt_g17, Provenance};
use crate::source::{RowSource, TrajectoryMeta};

pub const MAGIC: &[u8; 8] = b"FPUTTRAJ";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 56;
pub const FOOTER_LEN: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryHeader {
    pub n_rows: u64,
    pub n_cols: u32,
    pub beta: f64,
    pub k: u32,
    pub amplitude: f64,
    pub h: f64,
    pub stride: u32,
}

impl TrajectoryHeader {
    pub fn new(meta: &TrajectoryMeta, n_rows: u64) -> Self {
        TrajectoryHeader {
            n_rows,
            n_cols: meta.params.phase_dim() as u32,
            beta: meta.params.beta,
            k: meta.ic.k,
            amplitude: meta.ic.amplitude,
            h: meta.params.h,
            stride: meta.params.stride,
        }
    }

    pub fn meta(&self) -> TrajectoryMeta {
        TrajectoryMeta {
            params: ModelParams {
                n: self.n_cols as usize / 2,
                beta: self.beta,
                alpha: 0.0,
                h: self.h,
                stride: self.stride,
            },
            ic: InitialCondition::new(self.k, self.amplitude),
        }
    }

    pub fn payload_len(&self) -> u64 {
        self.n_rows * self.n_cols as u64 * 8
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.payload_len() + FOOTER_LEN
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN as usize] {
        let mut b = [0u8; HEADER_LEN as usize];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&VERSION.to_le_bytes());
        b[12..20].copy_from_slice(&self.n_rows.to_le_bytes());
        b[20..24].copy_from_slice(&self.n_cols.to_le_bytes());
        b[24..32].copy_from_slice(&self.beta.to_le_bytes());
        b[32..36].copy_from_slice(&self.k.to_le_bytes());
        b[36..44].copy_from_slice(&self.amplitude.to_le_bytes());
        b[44..52].copy_from_slice(&self.h.to_le_bytes());
        b[52..56].copy_from_slice(&self.stride.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN as usize]) -> Result<Self> {
        if &b[0..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let header = TrajectoryHeader {
            n_rows: u64_at(12),
            n_cols: u32_at(20),
            beta: f64_at(24),
            k: u32_at(32),
            amplitude: f64_at(36),
            h: f64_at(44),
            stride: u32_at(52),
        };
        if header.n_cols == 0 {
            return Err(Error::Format("zero columns".into()));
        }
        Ok(header)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileSummary {
    pub rows: u64,
    pub checksum: u64,
    pub bytes: u64,
}

/// Streaming writer. The row count is declared up front and checked on
/// [`TrajectoryWriter::finalize`].
pub struct TrajectoryWriter {
    path: PathBuf,
    out: BufWriter<File>,
    header: TrajectoryHeader,
    hasher: FnvHasher,
    rows: u64,
}

impl TrajectoryWriter {
    pub fn create(path: impl AsRef<Path>, header: TrajectoryHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if header.n_rows == 0 {
            return Err(Error::EmptyTrajectory);
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::with_capacity(1 << 20, file);
        out.write_all(&header.to_bytes())
            .map_err(|e| Error::io(&path, e))?;
        Ok(TrajectoryWriter {
            path,
            out,
            header,
            hasher: FnvHasher::default(),
            rows: 0,
        })
    }

    pub fn header(&self) -> &TrajectoryHeader {
        &self.header
    }

    pub fn write_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.header.n_cols as usize {
            return Err(Error::DimensionMismatch {
                expected: self.header.n_cols as usize,
                found: row.len(),
            });
        }
        if self.rows == self.header.n_rows {
            return Err(Error::RowCountMismatch {
                declared: self.header.n_rows,
                written: self.rows + 1,
            });
        }
        for v in row {
            let bytes = v.to_le_bytes();
            self.hasher.write(&bytes);
            self.out
                .write_all(&bytes)
                .map_err(|e| Error::io(&self.path, e))?;
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finalize(mut self) -> Result<FileSummary> {
        if self.rows == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if self.rows != self.header.n_rows {
            return Err(Error::RowCountMismatch {
                declared: self.header.n_rows,
                written: self.rows,
            });
        }
        let checksum = self.hasher.finish();
        self.out
            .write_all(&checksum.to_le_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(FileSummary {
            rows: self.rows,
            checksum,
            bytes: self.header.file_len(),
        })
    }
}

impl SampleSink for TrajectoryWriter {
    fn accept(&mut self, _t: f64, row: &[f64]) -> Result<()> {
        self.write_row(row)
    }
}

/// Write every row of `source` to `path`.
pub fn write_trajectory<S: RowSource + ?Sized>(
    path: impl AsRef<Path>,
    meta: &TrajectoryMeta,
    source: &S,
) -> Result<FileSummary> {
    if source.n_rows() == 0 {
        return Err(Error::EmptyTrajectory);
    }
    let mut header = TrajectoryHeader::new(meta, source.n_rows());
    header.n_cols = source.n_cols() as u32;
    let mut writer = TrajectoryWriter::create(path, header)?;
    let n_cols = source.n_cols();
    source.for_each_block(crate::source::DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        for row in block.chunks_exact(n_cols) {
            writer.write_row(row)?;
        }
        Ok(())
    })?;
    writer.finalize()
}

/// A finalized trajectory file whose checksum has been verified.
#[derive(Debug, Clone)]
pub struct TrajectoryFile {
    path: PathBuf,
    header: TrajectoryHeader,
    checksum: u64,
}

impl TrajectoryFile {
    /// Opens the file, checking its length and payload checksum.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let actual_len = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        if actual_len < HEADER_LEN + FOOTER_LEN {
            return Err(Error::Format(format!(
                "{}: truncated ({actual_len} bytes)",
                path.display()
            )));
        }
        let mut hb = [0u8; HEADER_LEN as usize];
        file.read_exact(&mut hb).map_err(|e| Error::io(&path, e))?;
        let header = TrajectoryHeader::from_bytes(&hb)?;
        if actual_len != header.file_len() {
            return Err(Error::Format(format!(
                "{}: truncated or oversized: expected {} bytes, found {actual_len}",
                path.display(),
                header.file_len()
            )));
        }
        let mut reader = BufReader::with_capacity(1 << 20, file);
        let mut hasher = FnvHasher::default();
        let mut remaining = header.payload_len();
        while remaining > 0 {
            let buf = reader.fill_buf().map_err(|e| Error::io(&path, e))?;
            if buf.is_empty() {
                return Err(Error::Format("unexpected end of payload".into()));
            }
            let take = (buf.len() as u64).min(remaining) as usize;
            hasher.write(&buf[..take]);
            reader.consume(take);
            remaining -= take as u64;
        }
        let mut fb = [0u8; 8];
        reader.read_exact(&mut fb).map_err(|e| Error::io(&path, e))?;
        let stored = u64::from_le_bytes(fb);
        let computed = hasher.finish();
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        Ok(TrajectoryFile {
            path,
            header,
            checksum: stored,
        })
    }

    pub fn header(&self) -> &TrajectoryHeader {
        &self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// Iterator over contiguous blocks of up to `chunk_rows` rows.
    pub fn stream_rows(&self, chunk_rows: usize) -> Result<RowBlocks> {
        if chunk_rows == 0 {
            return Err(Error::domain("chunk size must be >= 1"));
        }
        let mut file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        file.seek(SeekFrom::Start(HEADER_LEN))
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(RowBlocks {
            path: self.path.clone(),
            reader: BufReader::with_capacity(1 << 20, file),
            n_cols: self.header.n_cols as usize,
            chunk_rows,
            remaining: self.header.n_rows,
            bytes: Vec::new(),
        })
    }
}

pub struct RowBlocks {
    path: PathBuf,
    reader: BufReader<File>,
    n_cols: usize,
    chunk_rows: usize,
    remaining: u64,
    bytes: Vec<u8>,
}

impl RowBlocks {
    fn read_block(&mut self) -> Result<Vec<f64>> {
        let rows = (self.chunk_rows as u64).min(self.remaining) as usize;
        self.bytes.resize(rows * self.n_cols * 8, 0);
        self.reader
            .read_exact(&mut self.bytes)
            .map_err(|e| Error::io(&self.path, e))?;
        self.remaining -= rows as u64;
        Ok(self
            .bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

impl Iterator for RowBlocks {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let res = self.read_block();
        if res.is_err() {
            self.remaining = 0;
        }
        Some(res)
    }
}

impl RowSource for TrajectoryFile {
    fn n_cols(&self) -> usize {
        self.header.n_cols as usize
    }

    fn n_rows(&self) -> u64 {
        self.header.n_rows
    }

    fn for_each_block(
        &self,
        block_rows: usize,
        f: &mut dyn FnMut(&[f64]) -> Result<()>,
    ) -> Result<()> {
        for block in self.stream_rows(block_rows.max(1))? {
            f(&block?)?;
        }
        Ok(())
    }

    fn meta(&self) -> Option<TrajectoryMeta> {
        Some(self.header.meta())
    }
}

fn column_names(n_cols: usize) -> Vec<String> {
    if n_cols % 2 == 0 {
        let n = n_cols / 2;
        (1..=n)
            .map(|i| format!("q{i}"))
            .chain((1..=n).map(|i| format!("p{i}")))
            .collect()
    } else {
        (1..=n_cols).map(|i| format!("x{i}")).collect()
    }
}

/// Write every `stride`-th row as CSV with 17 significant digits.
pub fn export_csv<S: RowSource + ?Sized, W: Write>(
    source: &S,
    out: &mut W,
    stride: u64,
    provenance: &Provenance,
) -> Result<u64> {
    if stride == 0 {
        return Err(Error::domain("stride must be >= 1"));
    }
    let n_cols = source.n_cols();
    provenance.write_header(out)?;
    writeln!(out, "{}", column_names(n_cols).join(","))?;
    let mut index = 0u64;
    let mut exported = 0u64;
    let mut line = String::new();
    source.for_each_block(crate::source::DEFAULT_BLOCK_ROWS, &mut |block: &[f64]| {
        for row in block.chunks_exact(n_cols) {
            if index % stride == 0 {
                line.clear();
                for (j, v) in row.iter().enumerate() {
                    if j > 0 {
                        line.push(',');
                    }
                    line.push_str(&fmt_g17(*v));
                }
                line.push('\n');
                out.write_all(line.as_bytes())?;
                exported += 1;
            }
            index += 1;
        }
        Ok(())
    })?;
    Ok(exported)
}

/// Read a CSV produced by [`export_csv`] back into a binary trajectory.
pub fn import_csv<R: Read>(
    input: R,
    path: impl AsRef<Path>,
    meta: &TrajectoryMeta,
) -> Result<FileSummary> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(input);
    let mut rows = Vec::new();
    let mut n_cols = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let expected = *n_cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: record.len(),
            });
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Csv(format!("not a number: {field:?}")))?;
            rows.push(v);
        }
    }
    let n_cols = n_cols.ok_or(Error::EmptyTrajectory)?;
    let matrix = crate::source::TrajectoryMatrix::from_rows(n_cols, rows)?;
    write_trajectory(path, meta, &matrix)
}
