//! Rank-1 lattice rules: point generation, the worst-case error in the
//! weighted Korobov space, and component-by-component (CBC) construction.
//!
//! The squared worst-case error of the rule with generating vector `z` is
//!
//! ```text
//! e^2 = -1 + (1/N) sum_{j=0}^{N-1} prod_k [1 + gamma_k omega_alpha({j z_k / N})]
//! omega_alpha(x) = (-1)^(alpha+1) (2 pi)^(2 alpha) / (2 alpha)! B_(2 alpha)(x)
//! ```
//!
//! which is the Fourier series `sum_{k != 0} |k|^(-2 alpha) e^(2 pi i k x)`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Relative slack under which two candidate errors count as tied.
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingVector {
    n: u64,
    z: Vec<u64>,
}

impl GeneratingVector {
    /// Each `z_k` must lie in `1..N` (any value is accepted when `N = 1`).
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("lattice needs N >= 1".into()));
        }
        if z.is_empty() {
            return Err(Error::InvalidArgument("generating vector needs d >= 1".into()));
        }
        if n > 1 {
            if let Some(bad) = z.iter().find(|&&c| c == 0 || c >= n) {
                return Err(Error::InvalidArgument(format!(
                    "generating vector entry {bad} outside 1..{}",
                    n - 1
                )));
            }
        }
        Ok(Self { n, z })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }
}

/// Smoothness and product weights of the Korobov space.
#[derive(Debug, Clone, PartialEq)]
pub struct KorobovParams {
    alpha: u32,
    gamma: Vec<f64>,
}

impl KorobovParams {
    pub fn new(alpha: u32, gamma: Vec<f64>) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidArgument("alpha must be >= 1".into()));
        }
        if gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidArgument(
                "product weights must be positive and finite".into(),
            ));
        }
        Ok(Self { alpha, gamma })
    }

    /// All weights equal to 1.
    pub fn unweighted(alpha: u32, d: usize) -> Result<Self> {
        Self::new(alpha, vec![1.0; d])
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// Points `{ j z / N }` for `j = 1..=N`; the last one is the origin.
pub fn lattice_points(v: &GeneratingVector) -> Vec<Vec<f64>> {
    let n = v.n as u128;
    (1..=n)
        .map(|j| {
            v.z.iter()
                .map(|&c| ((c as u128 * j) % n) as f64 / n as f64)
                .collect()
        })
        .collect()
}

/// `r_alpha(k) = prod_j max(1, |k_j|^alpha)`.
pub fn korobov_rate(k: &[i64], alpha: u32) -> f64 {
    k.iter()
        .map(|&kj| (kj.unsigned_abs() as f64).powi(alpha as i32).max(1.0))
        .product()
}

/// `omega_alpha(x)` on `[0, 1]`.
pub fn bernoulli_kernel(alpha: u32, x: f64) -> Result<f64> {
    use std::f64::consts::PI;
    match alpha {
        1 => Ok(2.0 * PI * PI * (x * x - x + 1.0 / 6.0)),
        2 => {
            let b4 = x * x * (x * x - 2.0 * x + 1.0) - 1.0 / 30.0;
            Ok(-(2.0 * PI).powi(4) / 24.0 * b4)
        }
        other => Err(Error::UnsupportedAlpha(other)),
    }
}

/// `omega_alpha(i / N)` for `i = 0..N`, mirrored so that entry `N - i`
/// equals entry `i` bit for bit.
fn kernel_table(n: u64, alpha: u32) -> Result<Vec<f64>> {
    let n = n as usize;
    let mut table = vec![0.0; n];
    for i in 0..=n / 2 {
        table[i] = bernoulli_kernel(alpha, i as f64 / n as f64)?;
    }
    for i in n / 2 + 1..n {
        table[i] = table[n - i];
    }
    Ok(table)
}

fn check_weights(params: &KorobovParams, d: usize) -> Result<()> {
    if params.gamma.len() < d {
        return Err(Error::InvalidArgument(format!(
            "{} product weights for a d = {d} rule",
            params.gamma.len()
        )));
    }
    Ok(())
}

/// Squared worst-case error from running products `P_j` and the last factor.
fn squared_error(n: u64, products: &[f64], table: &[f64], gamma: f64, c: u64) -> f64 {
    let mut sum = CompensatedSum::new();
    for (j, &p) in products.iter().enumerate() {
        let idx = ((j as u128 * c as u128) % n as u128) as usize;
        sum.add(p * (1.0 + gamma * table[idx]));
    }
    sum.value() / n as f64 - 1.0
}

/// Worst-case error of the lattice rule over the unit ball of the weighted
/// Korobov space (`alpha` in {1, 2}).
pub fn korobov_wce(v: &GeneratingVector, params: &KorobovParams) -> Result<f64> {
    check_weights(params, v.dim())?;
    let table = kernel_table(v.n, params.alpha)?;
    let d = v.dim();
    let products = running_products(v.n, &v.z[..d - 1], &params.gamma, &table);
    let e2 = squared_error(v.n, &products, &table, params.gamma[d - 1], v.z[d - 1]);
    Ok(e2.max(0.0).sqrt())
}

fn running_products(n: u64, z: &[u64], gamma: &[f64], table: &[f64]) -> Vec<f64> {
    (0..n as u128)
        .map(|j| {
            let mut p = 1.0;
            for (&c, &g) in z.iter().zip(gamma) {
                p *= 1.0 + g * table[((j * c as u128) % n as u128) as usize];
            }
            p
        })
        .collect()
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 2;
    }
    true
}

/// Largest prime `<= n`, if any.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..=n).rev().find(|&p| is_prime(p))
}

/// Index of the smallest candidate whose value is within the tie slack of
/// the minimum.
fn tied_argmin(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_RTOL * min.abs() + 4.0 * f64::EPSILON;
    values
        .iter()
        .position(|&v| v <= min + slack)
        .expect("non-empty candidate set")
}

/// Result of a CBC run: the vector and the error after each component.
#[derive(Debug, Clone, PartialEq)]
pub struct CbcOutcome {
    pub vector: GeneratingVector,
    pub errors: Vec<f64>,
}

/// Greedy CBC for prime `N`: `z_1 = 1`, then each `z_s` minimizes the
/// worst-case error of the first `s` components over `{1, ..., N-1}`, ties
/// going to the smallest candidate.
pub fn cbc_construct(n: u64, d: usize, params: &KorobovParams) -> Result<GeneratingVector> {
    Ok(cbc_construct_with_errors(n, d, params)?.vector)
}

pub fn cbc_construct_with_errors(n: u64, d: usize, params: &KorobovParams) -> Result<CbcOutcome> {
    if d == 0 {
        return Err(Error::InvalidArgument("CBC needs d >= 1".into()));
    }
    if !is_prime(n) {
        return Err(Error::CompositeModulus(n));
    }
    check_weights(params, d)?;
    let table = kernel_table(n, params.alpha)?;
    let mut z = vec![1u64];
    let first = squared_error(n, &vec![1.0; n as usize], &table, params.gamma[0], 1);
    let mut errors = vec![first.max(0.0).sqrt()];
    let mut products = running_products(n, &z, &params.gamma, &table);

    for s in 1..d {
        let gamma = params.gamma[s];
        let candidates: Vec<f64> = (1..n)
            .into_par_iter()
            .map(|c| squared_error(n, &products, &table, gamma, c))
            .collect();
        let best = tied_argmin(&candidates);
        let c = best as u64 + 1;
        errors.push(candidates[best].max(0.0).sqrt());
        for (j, p) in products.iter_mut().enumerate() {
            let idx = ((j as u128 * c as u128) % n as u128) as usize;
            *p *= 1.0 + gamma * table[idx];
        }
        z.push(c);
    }
    Ok(CbcOutcome {
        vector: GeneratingVector::new(n, z)?,
        errors,
    })
}

/// `cbc_N<N>_d<d>_a<alpha>.txt` inside `dir`.
pub fn cbc_cache_path(dir: &Path, n: u64, d: usize, alpha: u32) -> PathBuf {
    dir.join(format!("cbc_N{n}_d{d}_a{alpha}.txt"))
}

/// Three lines: `N d alpha`, the comma-separated vector, the error.
pub fn format_cbc_cache(v: &GeneratingVector, alpha: u32, wce: f64) -> String {
    let z: Vec<String> = v.z.iter().map(u64::to_string).collect();
    format!("{} {} {}\n{}\n{:.16e}\n", v.n, v.dim(), alpha, z.join(","), wce)
}

pub fn parse_cbc_cache(text: &str) -> Result<(GeneratingVector, u32, f64)> {
    let bad = |msg: &str| Error::Malformed {
        what: "CBC cache".into(),
        msg: msg.into(),
    };
    let mut lines = text.lines();
    let header: Vec<u64> = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("header is not `N d alpha`")))
        .collect::<Result<_>>()?;
    let [n, d, alpha] = header[..] else {
        return Err(bad("header is not `N d alpha`"));
    };
    let z: Vec<u64> = lines
        .next()
        .ok_or_else(|| bad("missing vector"))?
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| bad("vector entry is not an integer")))
        .collect::<Result<_>>()?;
    if z.len() as u64 != d {
        return Err(bad("vector length disagrees with header"));
    }
    let wce: f64 = lines
        .next()
        .ok_or_else(|| bad("missing error line"))?
        .trim()
        .parse()
        .map_err(|_| bad("error line is not a number"))?;
    Ok((GeneratingVector::new(n, z)?, alpha as u32, wce))
}

/// CBC vector for unweighted `(N, d, alpha)`, read from `dir` when a valid
/// cache file exists and written there otherwise.
pub fn cbc_cached(dir: &Path, n: u64, d: usize, alpha: u32) -> Result<GeneratingVector> {
    let path = cbc_cache_path(dir, n, d, alpha);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok((v, a, _)) = parse_cbc_cache(&text) {
            if v.n == n && v.dim() == d && a == alpha {
                return Ok(v);
            }
        }
    }
    let params = KorobovParams::unweighted(alpha, d)?;
    let outcome = cbc_construct_with_errors(n, d, &params)?;
    let wce = *outcome.errors.last().expect("d >= 1");
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, format_cbc_cache(&outcome.vector, alpha, wce))
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(outcome.vector)
}
