//! Signals, reconstruction metrics, and the on-disk signal formats.
//!
//! A [`Signal`] is a real vector with an optional 2D interpretation. The
//! binary `.pnps` layout is:
//!
//! ```text
//! "PNPS" | h: u32 LE | w: u32 LE | h*w f64 LE values, row-major
//! ```
//!
//! Flat signals are stored with `w = 1`, and any file with `w = 1` reads back
//! as a flat signal.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PNPS";

/// SNR reported when the estimate matches the reference exactly.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Flat(usize),
    Grid { height: usize, width: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Grid { height, width } => height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(height, width)` for grids, `None` for flat signals.
    pub fn dims(&self) -> Option<(usize, usize)> {
        match *self {
            Shape::Flat(_) => None,
            Shape::Grid { height, width } => Some((height, width)),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Flat(n) => write!(f, "{n}"),
            Shape::Grid { height, width } => write!(f, "{height}x{width}"),
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    /// Parses `"N"` as a flat shape and `"HxW"` as a grid.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad shape `{s}`")))
        };
        let shape = match s.split_once(['x', 'X']) {
            Some((h, w)) => Shape::Grid {
                height: parse(h)?,
                width: parse(w)?,
            },
            None => Shape::Flat(parse(s)?),
        };
        if shape.is_empty() {
            return Err(Error::InvalidParameter(format!("empty shape `{s}`")));
        }
        Ok(shape)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    shape: Shape,
}

impl Signal {
    pub fn new(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if shape.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values, shape })
    }

    pub fn flat(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, Shape::Flat(n))
    }

    pub fn grid(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(values, Shape::Grid { height, width })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            values: vec![0.0; shape.len()],
            shape,
        }
    }

    /// Skips the finiteness check. Solvers use this for intermediate
    /// iterates and check [`Signal::is_finite`] themselves.
    pub(crate) fn from_raw(values: Vec<f64>, shape: Shape) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        Self { values, shape }
    }

    /// Same values, new shape of the same length.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self::from_raw(values, self.shape)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn reshape(self, shape: Shape) -> Result<Self> {
        if shape.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                actual: shape.len(),
            });
        }
        Ok(Self {
            values: self.values,
            shape,
        })
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Signal) -> Result<Signal> {
        check_len(self.len(), other.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(self.with_values(values))
    }

    pub fn scale(&self, alpha: f64) -> Signal {
        self.with_values(self.values.iter().map(|v| alpha * v).collect())
    }

    pub fn write_pnps<W: Write>(&self, mut out: W) -> Result<()> {
        let (h, w) = match self.shape {
            Shape::Flat(n) => (n, 1),
            Shape::Grid { height, width } => (height, width),
        };
        let h = u32::try_from(h).map_err(|_| Error::Format("height exceeds u32".into()))?;
        let w = u32::try_from(w).map_err(|_| Error::Format("width exceeds u32".into()))?;
        out.write_all(MAGIC)?;
        out.write_all(&h.to_le_bytes())?;
        out.write_all(&w.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_pnps<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        let h = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let w = u32::from_le_bytes(word) as usize;
        let n = h.checked_mul(w).ok_or_else(|| Error::Format("size overflow".into()))?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != n * 8 {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                n * 8,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let shape = if w == 1 {
            Shape::Flat(h)
        } else {
            Shape::Grid { height: h, width: w }
        };
        Self::new(values, shape)
    }

    /// Binary PGM (`P5`, maxval 255). Values map linearly from `[0, 1]`;
    /// anything outside is clipped.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        let (h, w) = self
            .shape
            .dims()
            .ok_or_else(|| Error::Shape("PGM export needs a 2D signal".into()))?;
        write!(out, "P5\n{w} {h}\n255\n")?;
        let pixels: Vec<u8> = self
            .values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&pixels)?;
        Ok(())
    }

    pub fn read_pgm<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = Vec::new();
        // magic, width, height, maxval
        while header.len() < 4 {
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Err(Error::Format("truncated PGM header".into()));
            }
            let line = line.split('#').next().unwrap_or("");
            header.extend(line.split_whitespace().map(str::to_owned));
        }
        if header[0] != "P5" || header.len() != 4 {
            return Err(Error::Format("expected a binary P5 PGM".into()));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM header field `{s}`")))
        };
        let (w, h, maxval) = (num(&header[1])?, num(&header[2])?, num(&header[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format("only 8-bit PGM is supported".into()));
        }
        let mut pixels = vec![0u8; w * h];
        input.read_exact(&mut pixels)?;
        let values = pixels.into_iter().map(|p| f64::from(p) / maxval as f64).collect();
        Self::grid(h, w, values)
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance between two signals of equal length.
pub fn l2_distance(a: &Signal, b: &Signal) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Reconstruction SNR in dB, `20 log10(‖truth‖ / ‖truth − estimate‖)`,
/// capped at [`SNR_CAP_DB`].
pub fn snr_db(truth: &Signal, estimate: &Signal) -> Result<f64> {
    let err = l2_distance(truth, estimate)?;
    let reference = truth.norm();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((20.0 * (reference / err).log10()).min(SNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub fixed_point_residual: f64,
    /// NaN when the run had no ground truth.
    pub snr_db: f64,
    /// Cumulative component-gradient evaluations divided by `k`.
    pub budget_consumed: f64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterateTrace {
    records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "iter,residual,snr_db,budget,wall_ns";

impl IterateTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            assert!(record.iter > last.iter, "trace iterations must increase");
            assert!(
                record.budget_consumed >= last.budget_consumed,
                "trace budget must not decrease"
            );
        }
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Zeroes every `wall_ns` so the trace is reproducible byte-for-byte.
    pub fn without_timing(mut self) -> Self {
        for r in &mut self.records {
            r.wall_ns = 0;
        }
        self
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.iter,
                fmt_f64(r.fixed_point_residual),
                fmt_f64(r.snr_db),
                fmt_f64(r.budget_consumed),
                r.wall_ns
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}
