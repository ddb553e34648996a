//! Random spherical codebooks and typical-angle quantization.
//!
//! A codebook holds `M = ceil(2^(n rho))` codewords drawn independently and
//! uniformly on the centered sphere of squared norm `n * radius2`. The
//! encoder picks, uniformly at random, one codeword whose cosine with the
//! source block lies within `epsilon` of a target cosine.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest admissible number of codewords.
pub const MAX_CODEWORDS: u64 = 1 << 31;

/// Largest admissible number of stored reals (`M * n`).
pub const MAX_CODEBOOK_ELEMENTS: u64 = 1 << 31;

/// Default encoder tolerance is `DEFAULT_EPSILON_SCALE / sqrt(n)`.
pub const DEFAULT_EPSILON_SCALE: f64 = 0.5;

/// Relative tolerance on codeword norms.
pub const NORM_TOLERANCE: f64 = 1e-9;

const BINARY_MAGIC: &[u8; 4] = b"SPCB";
const BINARY_VERSION: u32 = 1;

pub fn default_epsilon(n: usize) -> f64 {
    DEFAULT_EPSILON_SCALE / (n.max(1) as f64).sqrt()
}

/// Number of codewords for blocklength `n` at rate `rho`: `ceil(2^(n rho))`.
pub fn codebook_size(n: usize, rho: f64) -> Result<usize> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be finite and >= 0, got {rho}")));
    }
    let mut exponent = n as f64 * rho;
    // n * rho lands a few ulps off an integer for many decimal rates
    let nearest = exponent.round();
    if (exponent - nearest).abs() < 1e-9 {
        exponent = nearest;
    }
    if exponent > 31.0 {
        return Err(Error::Resource(format!(
            "codebook of 2^{exponent:.3} codewords exceeds the limit of 2^31 (n = {n}, rho = {rho})"
        )));
    }
    let m = exponent.exp2().ceil() as u64;
    if m > MAX_CODEWORDS {
        return Err(Error::Resource(format!(
            "codebook of {m} codewords exceeds the limit of 2^31"
        )));
    }
    Ok(m.max(1) as usize)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine of the angle between `s` and `u`, clamped to `[-1, 1]`.
pub fn cosine(s: &[f64], u: &[f64]) -> Result<f64> {
    if s.len() != u.len() {
        return Err(Error::Usage(format!(
            "cosine of vectors with lengths {} and {}",
            s.len(),
            u.len()
        )));
    }
    let ns = norm(s);
    let nu = norm(u);
    if !(ns > 0.0) || !(nu > 0.0) {
        return Err(Error::Domain("cosine is undefined for a zero-norm vector".into()));
    }
    Ok((dot(s, u) / (ns * nu)).clamp(-1.0, 1.0))
}

/// `M` codewords of length `n`, all with squared norm `n * radius2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    radius2: f64,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl Codebook {
    /// Wraps row-major codeword data, checking the sphere invariant.
    pub fn from_rows(n: usize, radius2: f64, data: Vec<f64>) -> Result<Codebook> {
        if n == 0 {
            return Err(Error::Usage("codebook blocklength must be >= 1".into()));
        }
        if !(radius2 >= 0.0) || !radius2.is_finite() {
            return Err(Error::Usage(format!("codebook radius2 must be >= 0, got {radius2}")));
        }
        if data.is_empty() || !data.len().is_multiple_of(n) {
            return Err(Error::Usage(format!(
                "codebook data of length {} is not a nonempty multiple of n = {n}",
                data.len()
            )));
        }
        let norms: Vec<f64> = data.chunks_exact(n).map(norm).collect();
        let expected = n as f64 * radius2;
        let tol = NORM_TOLERANCE * (n as f64) * radius2.max(1.0);
        for (i, nrm) in norms.iter().enumerate() {
            if (nrm * nrm - expected).abs() > tol {
                return Err(Error::Usage(format!(
                    "codeword {i} has squared norm {} but the sphere requires {expected}",
                    nrm * nrm
                )));
            }
        }
        if radius2 == 0.0 && norms.len() != 1 {
            return Err(Error::Usage("a zero-radius codebook holds exactly one codeword".into()));
        }
        Ok(Codebook {
            n,
            radius2,
            data,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Blocklength `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius2(&self) -> f64 {
        self.radius2
    }

    pub fn codeword(&self, index: usize) -> &[f64] {
        &self.data[index * self.n..(index + 1) * self.n]
    }

    pub fn codewords(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n)
    }

    /// Row-major codeword matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn codeword_norm(&self, index: usize) -> f64 {
        self.norms[index]
    }

    /// Writes the codebook as CSV: a `n,M,radius2` header record followed
    /// by one record per codeword.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record(["n", "M", "radius2"]).map_err(csv_err)?;
        w.write_record([self.n.to_string(), self.len().to_string(), self.radius2.to_string()])
            .map_err(csv_err)?;
        for u in self.codewords() {
            w.write_record(u.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Codebook> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(true)
            .from_reader(reader);
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Usage("codebook CSV is missing the n,M,radius2 record".into()))?
            .map_err(csv_err)?;
        if header.len() != 3 {
            return Err(Error::Usage("codebook CSV header record must have 3 fields".into()));
        }
        let n: usize = parse_field(&header[0], "n")?;
        let m: usize = parse_field(&header[1], "M")?;
        let radius2: f64 = parse_field(&header[2], "radius2")?;
        let mut data = Vec::with_capacity(n.saturating_mul(m));
        for rec in records {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != n {
                return Err(Error::Usage(format!(
                    "codeword record has {} fields, expected {n}",
                    rec.len()
                )));
            }
            for field in rec.iter() {
                data.push(parse_field::<f64>(field, "codeword component")?);
            }
        }
        if data.len() != n * m {
            return Err(Error::Usage(format!(
                "codebook CSV declares M = {m} but holds {} codewords",
                data.len() / n.max(1)
            )));
        }
        Codebook::from_rows(n, radius2, data)
    }

    /// Little-endian binary dump: magic `SPCB`, version (u32), n (u64),
    /// M (u64), radius2 (f64), then the row-major codewords (f64).
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(BINARY_MAGIC)?;
        writer.write_all(&BINARY_VERSION.to_le_bytes())?;
        writer.write_all(&(self.n as u64).to_le_bytes())?;
        writer.write_all(&(self.len() as u64).to_le_bytes())?;
        writer.write_all(&self.radius2.to_le_bytes())?;
        for v in &self.data {
            writer.write_all(&v.to_le_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Codebook> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Usage("not a codebook file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        reader.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != BINARY_VERSION {
            return Err(Error::Usage(format!("unsupported codebook file version {version}")));
        }
        reader.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8);
        reader.read_exact(&mut b8)?;
        let m = u64::from_le_bytes(b8);
        reader.read_exact(&mut b8)?;
        let radius2 = f64::from_le_bytes(b8);
        let elements = n
            .checked_mul(m)
            .filter(|&e| e <= MAX_CODEBOOK_ELEMENTS)
            .ok_or_else(|| Error::Resource(format!("codebook file declares {m} x {n} elements")))?;
        let mut data = Vec::with_capacity(elements as usize);
        for _ in 0..elements {
            reader.read_exact(&mut b8)?;
            data.push(f64::from_le_bytes(b8));
        }
        Codebook::from_rows(n as usize, radius2, data)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Usage(format!("codebook CSV: {e}"))
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("cannot parse {what} from {field:?}")))
}

/// Draws a codebook of `ceil(2^(n rho))` codewords on the sphere of squared
/// norm `n * radius2`. Codewords are generated in index order, each from
/// `n` standard normal draws rescaled to the exact radius. A zero radius
/// yields the single all-zero codeword.
pub fn build_codebook<R: Rng + ?Sized>(n: usize, rho: f64, radius2: f64, rng: &mut R) -> Result<Codebook> {
    if n == 0 {
        return Err(Error::param("n", "blocklength must be >= 1"));
    }
    if !(radius2 >= 0.0) || !radius2.is_finite() {
        return Err(Error::param(
            "radius2",
            format!("must be finite and >= 0, got {radius2}"),
        ));
    }
    if radius2 == 0.0 {
        return Codebook::from_rows(n, 0.0, vec![0.0; n]);
    }
    let m = codebook_size(n, rho)?;
    let elements = (m as u64) * (n as u64);
    if elements > MAX_CODEBOOK_ELEMENTS {
        return Err(Error::Resource(format!(
            "codebook of {m} x {n} = {elements} reals exceeds the limit of 2^31"
        )));
    }
    let radius = (n as f64 * radius2).sqrt();
    let mut data = vec![0.0; m * n];
    for row in data.chunks_exact_mut(n) {
        loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let nrm = norm(row);
            if nrm > 0.0 {
                let scale = radius / nrm;
                row.iter_mut().for_each(|v| *v *= scale);
                break;
            }
        }
    }
    Codebook::from_rows(n, radius2, data)
}

/// Result of one typical-angle quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizeOutcome {
    /// Chosen codeword, or `None` when no codeword is admissible.
    pub index: Option<usize>,
    /// Number of admissible codewords.
    pub candidates: usize,
}

impl QuantizeOutcome {
    pub fn failed(&self) -> bool {
        self.index.is_none()
    }
}

/// Codewords per tile when scanning a codebook for several blocks at once.
const TILE: usize = 256;

/// Admissible codeword indices, `|cos(s, u) - target_cos| <= epsilon`, for
/// each block in `blocks`, in ascending index order.
///
/// The codebook is scanned once in tiles for all blocks together. A
/// zero-radius codebook admits its sole codeword for every block.
pub fn admissible_sets(blocks: &[&[f64]], cb: &Codebook, target_cos: f64, epsilon: f64) -> Result<Vec<Vec<usize>>> {
    if !(epsilon >= 0.0) {
        return Err(Error::param("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    for s in blocks {
        if s.len() != cb.dim() {
            return Err(Error::Usage(format!(
                "source block has length {} but the codebook has n = {}",
                s.len(),
                cb.dim()
            )));
        }
    }
    if cb.radius2() == 0.0 {
        return Ok(vec![vec![0]; blocks.len()]);
    }
    let norms = blocks
        .iter()
        .map(|s| {
            let v = norm(s);
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Domain("cannot quantize a zero-norm source block".into()))
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = cb.dim();
    let mut sets = vec![Vec::new(); blocks.len()];
    for (t, tile) in cb.as_slice().chunks(TILE * n).enumerate() {
        let first = t * TILE;
        for ((s, s_norm), set) in blocks.iter().zip(&norms).zip(sets.iter_mut()) {
            for (j, u) in tile.chunks_exact(n).enumerate() {
                let i = first + j;
                let c = (dot(s, u) / (s_norm * cb.codeword_norm(i))).clamp(-1.0, 1.0);
                if (c - target_cos).abs() <= epsilon {
                    set.push(i);
                }
            }
        }
    }
    Ok(sets)
}

/// Uniform choice from an admissible set; one draw from `rng` when the set
/// has two or more members, none otherwise.
pub fn select<R: Rng + ?Sized>(admissible: &[usize], rng: &mut R) -> QuantizeOutcome {
    let index = match admissible.len() {
        0 => None,
        1 => Some(admissible[0]),
        k => Some(admissible[rng.random_range(0..k)]),
    };
    QuantizeOutcome {
        index,
        candidates: admissible.len(),
    }
}

/// Picks uniformly among the codewords `u` with
/// `|cos(s, u) - target_cos| <= epsilon`.
///
/// With a zero-radius codebook the sole codeword is returned unconditionally.
pub fn quantize<R: Rng + ?Sized>(
    s: &[f64],
    cb: &Codebook,
    target_cos: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<QuantizeOutcome> {
    let sets = admissible_sets(&[s], cb, target_cos, epsilon)?;
    Ok(select(&sets[0], rng))
}
