//! Base-2 digital nets.
//!
//! A generating matrix is stored column-wise as machine words: row `r`
//! (1-based, the digit of weight `2^-r`) sits at bit `64 - r`, so the XOR of
//! selected columns is directly the fractional binary expansion of a
//! coordinate. Higher-order nets are built by interlacing the digits of `q`
//! consecutive first-order coordinates.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const BUNDLED_TABLE: &str = include_str!("../data/sobol_dirs_21.txt");

/// `d` binary matrices of shape `depth x m`; the net has `2^m` points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingMatrices {
    m: usize,
    depth: usize,
    columns: Vec<Vec<u64>>,
}

impl GeneratingMatrices {
    /// `columns[i][c]` is column `c` of matrix `i`, row `r` at bit `64 - r`.
    pub fn new(depth: usize, m: usize, columns: Vec<Vec<u64>>) -> Result<Self> {
        if depth > 64 {
            return Err(Error::DigitOverflow { rows: depth });
        }
        if m > 63 {
            return Err(Error::InvalidArgument(format!("2^{m} points do not fit")));
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument("need at least one matrix".into()));
        }
        let below_depth = if depth == 64 { 0 } else { u64::MAX >> depth };
        for (i, cols) in columns.iter().enumerate() {
            if cols.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "matrix {} has {} columns, expected {m}",
                    i + 1,
                    cols.len()
                )));
            }
            if cols.iter().any(|&w| w & below_depth != 0) {
                return Err(Error::InvalidArgument(format!(
                    "matrix {} has entries below row {depth}",
                    i + 1
                )));
            }
        }
        Ok(Self { m, depth, columns })
    }

    /// From dense 0/1 rows: `matrices[i][r][c]`.
    pub fn from_bits(matrices: &[Vec<Vec<u8>>]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one matrix".into()))?;
        let depth = first.len();
        let m = first.first().map_or(0, Vec::len);
        let mut columns = Vec::with_capacity(matrices.len());
        for mat in matrices {
            if mat.len() != depth || mat.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidArgument("matrices differ in shape".into()));
            }
            let cols = (0..m)
                .map(|c| {
                    mat.iter()
                        .enumerate()
                        .filter(|(_, row)| row[c] & 1 == 1)
                        .fold(0u64, |w, (r, _)| w | 1u64 << (63 - r))
                })
                .collect();
            columns.push(cols);
        }
        Self::new(depth, m, columns)
    }

    /// `m x m` identity in one coordinate (van der Corput).
    pub fn identity(m: usize) -> Result<Self> {
        Self::new(m, m, vec![(0..m).map(|c| 1u64 << (63 - c)).collect()])
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_points(&self) -> usize {
        1usize << self.m
    }

    /// Entry of matrix `i` at (`row`, `col`), all 0-based.
    pub fn entry(&self, i: usize, row: usize, col: usize) -> bool {
        self.columns[i][col] >> (63 - row) & 1 == 1
    }

    pub fn columns(&self, i: usize) -> &[u64] {
        &self.columns[i]
    }

    /// Digit words of every coordinate of the point with index `j - 1 = index`.
    pub fn point_digits(&self, index: u64) -> Vec<u64> {
        self.columns
            .iter()
            .map(|cols| {
                cols.iter()
                    .enumerate()
                    .filter(|(c, _)| index >> c & 1 == 1)
                    .fold(0u64, |acc, (_, &w)| acc ^ w)
            })
            .collect()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.point_digits(index).into_iter().map(digits_to_unit).collect()
    }
}

/// Value `sum_r xi_r 2^-r` of a digit word. Digits past the 53rd are dropped
/// (truncation toward zero), so the result stays in `[0, 1)`.
pub fn digits_to_unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Base-2 radical inverse (van der Corput) of `j`.
pub fn radical_inverse(j: u64) -> f64 {
    digits_to_unit(j.reverse_bits())
}

/// All `2^m` points, point `j` (1-based) generated from the digits of `j - 1`.
pub fn net_points(g: &GeneratingMatrices) -> Vec<Vec<f64>> {
    (0..g.num_points() as u64).map(|i| g.point(i)).collect()
}

/// The same point set enumerated in Gray-code order (one XOR per coordinate
/// per point).
pub fn net_points_gray(g: &GeneratingMatrices) -> Vec<Vec<f64>> {
    let mut words = vec![0u64; g.dim()];
    let mut out = Vec::with_capacity(g.num_points());
    out.push(words.iter().map(|&w| digits_to_unit(w)).collect());
    for k in 1..g.num_points() as u64 {
        let c = k.trailing_zeros() as usize;
        for (w, cols) in words.iter_mut().zip(&g.columns) {
            *w ^= cols[c];
        }
        out.push(words.iter().map(|&w| digits_to_unit(w)).collect());
    }
    out
}

fn check_interlace(base: &GeneratingMatrices, q: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("interlacing factor must be >= 1".into()));
    }
    if !base.dim().is_multiple_of(q) {
        return Err(Error::InvalidArgument(format!(
            "{} base matrices are not divisible by q = {q}",
            base.dim()
        )));
    }
    if base.depth < base.m {
        return Err(Error::InvalidArgument(format!(
            "base matrices need at least m = {} rows",
            base.m
        )));
    }
    Ok(())
}

/// Digit interlacing of order `q`: output matrix `i` has row `(r-1)q + s`
/// equal to row `r` of base matrix `(i-1)q + s`, for `r = 1..m`, `s = 1..q`.
pub fn interlace(base: &GeneratingMatrices, q: usize) -> Result<GeneratingMatrices> {
    check_interlace(base, q)?;
    if q * base.m > 64 {
        return Err(Error::DigitOverflow { rows: q * base.m });
    }
    interlace_rows(base, q, q * base.m)
}

/// Like [`interlace`] but keeps only the first `max_depth <= 64` output rows.
/// Rows past 64 carry digits below `2^-64`, which no `f64` coordinate can
/// represent.
pub fn interlace_truncated(
    base: &GeneratingMatrices,
    q: usize,
    max_depth: usize,
) -> Result<GeneratingMatrices> {
    check_interlace(base, q)?;
    if max_depth > 64 {
        return Err(Error::DigitOverflow { rows: max_depth });
    }
    interlace_rows(base, q, (q * base.m).min(max_depth))
}

fn interlace_rows(base: &GeneratingMatrices, q: usize, depth: usize) -> Result<GeneratingMatrices> {
    let d = base.dim() / q;
    let columns = (0..d)
        .map(|i| {
            (0..base.m)
                .map(|c| {
                    let mut word = 0u64;
                    for r in 0..base.m {
                        for s in 0..q {
                            let out_row = r * q + s;
                            if out_row >= depth {
                                continue;
                            }
                            let bit = base.columns[i * q + s][c] >> (63 - r) & 1;
                            word |= bit << (63 - out_row);
                        }
                    }
                    word
                })
                .collect()
        })
        .collect();
    GeneratingMatrices::new(depth, base.m, columns)
}

/// Inverse of [`interlace`]: splits each matrix into `q` matrices of depth
/// `m` by taking every `q`-th row.
pub fn deinterlace(g: &GeneratingMatrices, q: usize) -> Result<GeneratingMatrices> {
    if q == 0 {
        return Err(Error::InvalidArgument("interlacing factor must be >= 1".into()));
    }
    let mut columns = Vec::with_capacity(g.dim() * q);
    for cols in &g.columns {
        for s in 0..q {
            columns.push(
                cols.iter()
                    .map(|&w| {
                        let mut out = 0u64;
                        for r in 0..g.m {
                            let row = r * q + s;
                            if row < g.depth {
                                out |= (w >> (63 - row) & 1) << (63 - r);
                            }
                        }
                        out
                    })
                    .collect(),
            );
        }
    }
    GeneratingMatrices::new(g.m, g.m, columns)
}

/// One Sobol' coordinate: primitive polynomial of degree `s` with inner
/// coefficients encoded in `a`, and initial direction integers `m_1..m_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SobolCoordinate {
    pub s: u32,
    pub a: u64,
    pub initial: Vec<u64>,
}

impl SobolCoordinate {
    /// Direction integers `m_1..m_count`, `m_k < 2^k` and odd.
    pub fn direction_integers(&self, count: usize) -> Vec<u64> {
        let s = self.s as usize;
        let mut m: Vec<u64> = self.initial.iter().copied().take(count).collect();
        for k in s..count {
            let mut v = m[k - s] ^ (m[k - s] << s);
            for j in 1..s {
                if self.a >> (s - 1 - j) & 1 == 1 {
                    v ^= m[k - j] << j;
                }
            }
            m.push(v);
        }
        m
    }
}

/// A parsed direction-number table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionNumbers {
    dmax: usize,
    mmax: usize,
    coords: Vec<SobolCoordinate>,
}

impl DirectionNumbers {
    /// Header `dmax mmax`, then `coord s a m_1 .. m_s` for coordinates
    /// `2, 3, ...`. Blank lines and lines starting with `#` are skipped. An
    /// empty input is a table of dimension 0.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let Some((line, header)) = lines.next() else {
            return Ok(Self {
                dmax: 0,
                mmax: 0,
                coords: Vec::new(),
            });
        };
        let fields = parse_ints(line, header)?;
        let [dmax, mmax] = fields[..] else {
            return Err(Error::Parse {
                line,
                msg: "header must be `dmax mmax`".into(),
            });
        };
        if mmax > 64 {
            return Err(Error::Parse {
                line,
                msg: format!("mmax = {mmax} exceeds 64 digits"),
            });
        }
        let mut coords = Vec::new();
        for (line, text) in lines {
            let f = parse_ints(line, text)?;
            let err = |msg: String| Error::Parse { line, msg };
            if f.len() < 4 {
                return Err(err("expected `coord s a m_1 .. m_s`".into()));
            }
            let (coord, s, a) = (f[0], f[1], f[2]);
            let expected = coords.len() as u64 + 2;
            if coord != expected {
                return Err(err(format!("coordinate {coord} out of order, expected {expected}")));
            }
            if coord > dmax {
                return Err(err(format!("coordinate {coord} exceeds declared dmax {dmax}")));
            }
            if s == 0 || s > 63 || f.len() - 3 != s as usize {
                return Err(err(format!("degree {s} does not match {} initial values", f.len() - 3)));
            }
            if a >> (s - 1) != 0 {
                return Err(err(format!("coefficient a = {a} has more than s - 1 bits")));
            }
            let initial = f[3..].to_vec();
            for (k, &mk) in initial.iter().enumerate() {
                if mk % 2 == 0 || mk >> (k + 1) != 0 {
                    return Err(err(format!("m_{} = {mk} must be odd and < 2^{}", k + 1, k + 1)));
                }
            }
            coords.push(SobolCoordinate {
                s: s as u32,
                a,
                initial,
            });
        }
        Ok(Self {
            dmax: dmax as usize,
            mmax: mmax as usize,
            coords,
        })
    }

    /// The table shipped with the crate (21 dimensions, 32 digits).
    pub fn bundled() -> &'static DirectionNumbers {
        static TABLE: OnceLock<DirectionNumbers> = OnceLock::new();
        TABLE.get_or_init(|| Self::parse(BUNDLED_TABLE).expect("bundled table parses"))
    }

    /// Number of usable coordinates (identity coordinate included).
    pub fn max_dim(&self) -> usize {
        if self.dmax == 0 {
            0
        } else {
            self.dmax.min(self.coords.len() + 1)
        }
    }

    pub fn max_m(&self) -> usize {
        self.mmax
    }

    pub fn coordinate(&self, i: usize) -> Option<&SobolCoordinate> {
        i.checked_sub(2).and_then(|k| self.coords.get(k))
    }

    /// Upper-triangular `m x m` Sobol' matrices for the first `d` coordinates.
    pub fn generating_matrices(&self, d: usize, m: usize) -> Result<GeneratingMatrices> {
        if d > self.max_dim() {
            return Err(Error::Capacity(format!(
                "requested d = {d}, table provides {}",
                self.max_dim()
            )));
        }
        if m > self.mmax {
            return Err(Error::Capacity(format!(
                "requested m = {m}, table provides {}",
                self.mmax
            )));
        }
        let identity = GeneratingMatrices::identity(m)?.columns.remove(0);
        let mut columns = vec![identity];
        for coord in &self.coords[..d.saturating_sub(1)] {
            columns.push(
                coord
                    .direction_integers(m)
                    .into_iter()
                    .enumerate()
                    .map(|(k, mk)| mk << (63 - k))
                    .collect(),
            );
        }
        GeneratingMatrices::new(m, m, columns)
    }
}

fn parse_ints(line: usize, text: &str) -> Result<Vec<u64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<u64>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{t}` is not a non-negative integer"),
            })
        })
        .collect()
}

/// Reads and parses a direction-number file.
pub fn load_direction_numbers(path: &Path) -> Result<DirectionNumbers> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DirectionNumbers::parse(&text)
}

/// First-order Sobol' matrices from the bundled table.
pub fn sobol_matrices(d: usize, m: usize) -> Result<GeneratingMatrices> {
    DirectionNumbers::bundled().generating_matrices(d, m)
}

/// Order-`q` interlaced Sobol' net in `d` dimensions with `2^m` points,
/// built from `q d` bundled coordinates; digits beyond 64 are dropped.
pub fn higher_order_sobol(d: usize, m: usize, q: usize) -> Result<GeneratingMatrices> {
    let base = sobol_matrices(q * d, m)?;
    interlace_truncated(&base, q, 64)
}
