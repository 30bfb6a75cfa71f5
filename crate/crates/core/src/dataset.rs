//! Dense point sets: file I/O, centering and random projection, synthetic
//! manifold data, and noise injection.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sq_norm};
use crate::{par, rng};

pub const BIN_MAGIC: &[u8; 4] = b"QKM1";

/// `n` points in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    centered: bool,
    frob_sq: f64,
}

impl Dataset {
    /// Build from a flat row-major buffer. Every coordinate must be finite.
    pub fn from_flat(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("dimension must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::arg(format!("buffer of {} values is not a multiple of dimension {dim}", points.len())));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / dim + 1,
                message: format!("non-finite value in column {}", pos % dim + 1),
            });
        }
        let n = points.len() / dim;
        let mut ds = Dataset { points, n, dim, centered: false, frob_sq: 0.0 };
        ds.frob_sq = ds.compute_frob_sq();
        Ok(ds)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let dim = first.as_ref().len();
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Parse { row: i + 1, message: format!("expected {dim} values, found {}", r.len()) });
            }
            points.extend_from_slice(r);
        }
        Self::from_flat(points, dim)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Sum of squared row norms of the stored coordinates. Equals the 1-means
    /// cost once the dataset is centered.
    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        par::for_each_chunk_mut(&mut out, par::CHUNK, |start, s| {
            for (j, v) in s.iter_mut().enumerate() {
                *v = sq_norm(self.row(start + j));
            }
        });
        out
    }

    /// Coordinates of the selected rows, concatenated.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            out.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let dim = self.dim;
        let partials = par::map_chunks(self.n, par::CHUNK, |r| {
            let mut acc = vec![0.0; dim];
            for i in r {
                for (a, x) in acc.iter_mut().zip(self.row(i)) {
                    *a += x;
                }
            }
            acc
        });
        let mut mean = vec![0.0; dim];
        for p in partials {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }

    /// Largest absolute coordinate.
    pub fn scale(&self) -> f64 {
        self.points.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn compute_frob_sq(&self) -> f64 {
        par::sum_chunks(self.n, par::CHUNK, |r| r.map(|i| sq_norm(self.row(i))).sum())
    }

    fn shift(&mut self, offset: &[f64]) {
        let dim = self.dim;
        par::for_each_chunk_mut(&mut self.points, par::CHUNK * dim, |_, s| {
            for row in s.chunks_exact_mut(dim) {
                for (x, o) in row.iter_mut().zip(offset) {
                    *x -= o;
                }
            }
        });
    }

    fn center_in_place(&mut self) {
        // second pass removes the rounding residue of the first
        for _ in 0..2 {
            let mean = self.mean();
            if mean.iter().all(|&m| m == 0.0) {
                break;
            }
            self.shift(&mean);
        }
        self.centered = true;
        self.frob_sq = self.compute_frob_sq();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Bin,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(Error::arg(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    /// Guess from a file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Bin,
        }
    }
}

pub fn load(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let file = BufReader::new(File::open(path)?);
    match format {
        Format::Csv => read_csv(file),
        Format::Bin => read_bin(file),
    }
}

pub fn save(ds: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_csv(ds, &mut w)?,
        Format::Bin => write_bin(ds, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Headerless CSV, one point per row.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut points = Vec::new();
    let mut dim = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
            _ => Error::Parse { row, message: e.to_string() },
        })?;
        let expected = *dim.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::Parse {
                row,
                message: format!("ragged row: expected {expected} values, found {}", rec.len()),
            });
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { row, message: format!("column {}: cannot parse {field:?}", col + 1) })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, message: format!("column {}: non-finite value", col + 1) });
            }
            points.push(v);
        }
    }
    match dim {
        None => Err(Error::EmptyDataset),
        Some(d) => Dataset::from_flat(points, d),
    }
}

pub fn write_csv<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in ds.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    wtr.flush()?;
    Ok(())
}

/// `QKM1`, u32 n, u32 dim, then n·dim f32 values, all little-endian.
pub fn read_bin<R: Read>(mut reader: R) -> Result<Dataset> {
    let mut header = [0u8; 12];
    reader.read_exact(&mut header).map_err(|_| Error::Parse { row: 0, message: "truncated header".into() })?;
    if &header[..4] != BIN_MAGIC {
        return Err(Error::Parse { row: 0, message: "bad magic bytes".into() });
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if dim == 0 {
        return Err(Error::Parse { row: 0, message: "dimension is zero".into() });
    }
    let mut buf = vec![0u8; dim * 4];
    let mut points = Vec::with_capacity(n * dim);
    for row in 1..=n {
        reader.read_exact(&mut buf).map_err(|_| Error::Parse { row, message: "truncated payload".into() })?;
        for (col, b) in buf.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(b.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Parse { row, message: format!("column {}: non-finite value", col + 1) });
            }
            points.push(v as f64);
        }
    }
    Dataset::from_flat(points, dim)
}

/// Coordinates are narrowed to f32.
pub fn write_bin<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    let too_big = |what: &str| Error::arg(format!("{what} does not fit the binary header"));
    let n = u32::try_from(ds.n).map_err(|_| too_big("row count"))?;
    let dim = u32::try_from(ds.dim).map_err(|_| too_big("dimension"))?;
    w.write_all(BIN_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    for &v in &ds.points {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Random projection settings for [`preprocess`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JlConfig {
    /// Distortion target, in (0, 1/4).
    pub eps: f64,
    /// Number of centers the projection must preserve costs for.
    pub k: usize,
    pub seed: u64,
}

/// Output dimension `ceil(8 ln(max(k,2)/eps) / eps²)`.
pub fn jl_target_dim(eps: f64, k: usize) -> usize {
    let k = k.max(2) as f64;
    (8.0 * (k / eps).ln() / (eps * eps)).ceil() as usize
}

/// Optionally project with a scaled Gaussian matrix, then center.
///
/// The projection is skipped when the target dimension is not below the
/// current one. The result always has `is_centered() == true`.
pub fn preprocess(ds: &Dataset, jl: Option<&JlConfig>) -> Result<Dataset> {
    let mut out = match jl {
        Some(cfg) => {
            if !(cfg.eps > 0.0 && cfg.eps < 0.25) {
                return Err(Error::arg(format!("JL eps must lie in (0, 0.25), got {}", cfg.eps)));
            }
            let target = jl_target_dim(cfg.eps, cfg.k);
            if target < ds.dim {
                gaussian_projection(ds, target, cfg.seed)
            } else {
                ds.clone()
            }
        }
        None => ds.clone(),
    };
    out.center_in_place();
    Ok(out)
}

fn gaussian_projection(ds: &Dataset, target: usize, seed: u64) -> Dataset {
    let mut rng = rng::from_seed(seed);
    let scale = 1.0 / (target as f64).sqrt();
    let matrix: Vec<f64> = (0..target * ds.dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * scale
        })
        .collect();
    let mut points = vec![0.0; ds.n * target];
    par::for_each_chunk_mut(&mut points, par::CHUNK * target, |start, s| {
        let first = start / target;
        for (j, out_row) in s.chunks_exact_mut(target).enumerate() {
            let x = ds.row(first + j);
            for (o, g) in out_row.iter_mut().zip(matrix.chunks_exact(ds.dim)) {
                *o = dot(g, x);
            }
        }
    });
    Dataset::from_flat(points, target).expect("projection of finite data is finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    /// Uniform on `[0,1]^d`.
    UnitCube,
    /// Uniform on the unit sphere `S^d`, which sits in `d + 1` coordinates.
    UnitSphere,
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" | "unit-cube" => Ok(ManifoldKind::UnitCube),
            "sphere" | "unit-sphere" => Ok(ManifoldKind::UnitSphere),
            other => Err(Error::arg(format!("unknown manifold kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub kind: ManifoldKind,
    pub seed: u64,
}

/// Sample `n` points on a `d`-dimensional cube or sphere and embed them in
/// `R^D` through a seeded random orthonormal frame.
///
/// When the manifold's own coordinates already fill `R^D` no frame is applied.
pub fn gen_manifold(spec: &SyntheticSpec) -> Result<Dataset> {
    let d = spec.intrinsic_dim;
    let big_d = spec.ambient_dim;
    if d == 0 || spec.n == 0 {
        return Err(Error::arg("intrinsic dimension and n must be positive"));
    }
    let local_dim = match spec.kind {
        ManifoldKind::UnitCube => d,
        ManifoldKind::UnitSphere => d + 1,
    };
    if d > big_d || local_dim > big_d {
        return Err(Error::DimensionMismatch { expected: big_d, got: local_dim });
    }
    let mut rng = rng::from_seed(spec.seed);
    let mut local = vec![0.0; spec.n * local_dim];
    for row in local.chunks_exact_mut(local_dim) {
        match spec.kind {
            ManifoldKind::UnitCube => row.iter_mut().for_each(|v| *v = rng.random::<f64>()),
            ManifoldKind::UnitSphere => loop {
                row.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                let norm = sq_norm(row).sqrt();
                if norm > 1e-12 {
                    row.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            },
        }
    }
    if local_dim == big_d {
        return Dataset::from_flat(local, big_d);
    }
    let frame = orthonormal_frame(big_d, local_dim, &mut rng);
    let mut points = vec![0.0; spec.n * big_d];
    for (out, u) in points.chunks_exact_mut(big_d).zip(local.chunks_exact(local_dim)) {
        for (j, basis) in frame.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(basis) {
                *o += u[j] * b;
            }
        }
    }
    Dataset::from_flat(points, big_d)
}

/// `cols` orthonormal vectors in `R^rows` by Gram-Schmidt on Gaussian draws.
fn orthonormal_frame(rows: usize, cols: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| StandardNormal.sample(&mut *rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = sq_norm(&v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Isotropic Gaussian mixture: `components` means drawn from
/// `N(0, center_scale² I)`, unit-variance clusters, uniform component weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: usize,
    pub n: usize,
    pub dim: usize,
    pub center_scale: f64,
    pub seed: u64,
}

pub fn gen_gaussian_mixture(spec: &MixtureSpec) -> Result<Dataset> {
    if spec.components == 0 || spec.n == 0 || spec.dim == 0 {
        return Err(Error::arg("components, n and dim must be positive"));
    }
    let mut rng = rng::from_seed(spec.seed);
    let means: Vec<f64> = (0..spec.components * spec.dim)
        .map(|_| spec.center_scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let mut points = Vec::with_capacity(spec.n * spec.dim);
    for _ in 0..spec.n {
        let c = rng.random_range(0..spec.components);
        let mean = &means[c * spec.dim..(c + 1) * spec.dim];
        for &m in mean {
            let g: f64 = StandardNormal.sample(&mut rng);
            points.push(m + g);
        }
    }
    Dataset::from_flat(points, spec.dim)
}

/// Add `N(0, (nsr·σ)²)` to every coordinate, where `σ = sqrt(frob_sq / (n·dim))`
/// is the global RMS coordinate scale, then re-center.
pub fn inject_noise(ds: &Dataset, nsr: f64, seed: u64) -> Result<Dataset> {
    if !(nsr >= 0.0) || !nsr.is_finite() {
        return Err(Error::arg(format!("noise-to-signal ratio must be >= 0, got {nsr}")));
    }
    if !ds.centered {
        return Err(Error::arg("noise injection expects a centered dataset"));
    }
    if nsr == 0.0 {
        return Ok(ds.clone());
    }
    let sigma = (ds.frob_sq / (ds.n * ds.dim) as f64).sqrt();
    let amp = nsr * sigma;
    let mut rng = rng::from_seed(seed);
    let mut out = ds.clone();
    for v in out.points.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v += amp * g;
    }
    out.center_in_place();
    Ok(out)
}
