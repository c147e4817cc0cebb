//! Convergence sweeps, rate fits and result files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::digital_net::{higher_order_sobol, net_points};
use crate::error::{Error, Result};
use crate::integrands::TestIntegrand;
use crate::lattice::{cbc_cached, cbc_construct, is_prime, lattice_points, KorobovParams};
use crate::sparse_grid::{isotropic_index_set, smolyak_quadrature, total_points, LevelSchedule};
use crate::transforms::{mapped_rule, QmcMethod};

/// Largest prime not exceeding `2^m`, `m = 7..=13`.
pub const PRIME_LADDER: [u64; 7] = [127, 251, 509, 1021, 2039, 4093, 8191];

/// Results below this are treated as exact and left out of rate fits.
pub const ERROR_FLOOR: f64 = 1e-14;

pub const CSV_HEADER: &str = "method,d,alpha,N,abs_error,wall_seconds";

/// Environment variable overriding the CBC cache directory.
pub const CACHE_ENV: &str = "GAUSSCUB_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    SgGh,
    AffLattice,
    AffNet,
    MobLattice,
    MobNet,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SgGh,
        Method::AffLattice,
        Method::AffNet,
        Method::MobLattice,
        Method::MobNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SgGh => "sg-gh",
            Method::AffLattice => "aff-lattice",
            Method::AffNet => "aff-net",
            Method::MobLattice => "mob-lattice",
            Method::MobNet => "mob-net",
        }
    }

    pub fn qmc(self) -> Option<QmcMethod> {
        match self {
            Method::SgGh => None,
            Method::AffLattice => Some(QmcMethod::AffLattice),
            Method::AffNet => Some(QmcMethod::AffNet),
            Method::MobLattice => Some(QmcMethod::MobLattice),
            Method::MobNet => Some(QmcMethod::MobNet),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Method,
    pub d: usize,
    pub alpha: u32,
    pub n: u64,
    pub abs_error: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (u64, u64),
}

/// The schedule a sweep runs over when none is given: the prime ladder for
/// lattices, `2^m` with `m = 6..=14` for nets, levels `L = d..=d+8` for
/// sparse grids.
pub fn default_schedule(method: Method, d: usize) -> Vec<u64> {
    match method {
        Method::SgGh => (d as u64..=d as u64 + 8).collect(),
        Method::AffLattice | Method::MobLattice => PRIME_LADDER.to_vec(),
        Method::AffNet | Method::MobNet => (6..=14).map(|m| 1u64 << m).collect(),
    }
}

/// Knobs shared by every cell of a sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Interlacing order of the nets; `2 alpha + 1` when unset.
    pub net_order: Option<usize>,
    /// Where CBC vectors are cached; computed afresh when unset.
    pub cache_dir: Option<PathBuf>,
    /// Record wall-clock times. Off by default so repeated runs write
    /// identical files.
    pub timing: bool,
}

/// Cache directory: `$GAUSSCUB_CACHE_DIR` if set, else `fallback`.
pub fn cache_dir(fallback: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}

/// Korobov smoothness used for CBC: the closed-form kernels exist for 1 and 2.
pub fn cbc_alpha(alpha: u32) -> u32 {
    alpha.clamp(1, 2)
}

/// Unit-cube points for one QMC cell.
pub fn qmc_points(
    method: QmcMethod,
    d: usize,
    alpha: u32,
    n: u64,
    opts: &SweepOptions,
) -> Result<Vec<Vec<f64>>> {
    match method {
        QmcMethod::AffLattice | QmcMethod::MobLattice => {
            if !is_prime(n) {
                return Err(Error::CompositeModulus(n));
            }
            let a = cbc_alpha(alpha);
            let v = match &opts.cache_dir {
                Some(dir) => cbc_cached(dir, n, d, a)?,
                None => cbc_construct(n, d, &KorobovParams::unweighted(a, d)?)?,
            };
            Ok(lattice_points(&v))
        }
        QmcMethod::AffNet | QmcMethod::MobNet => {
            if !n.is_power_of_two() || n < 2 {
                return Err(Error::InvalidArgument(format!("net sizes are powers of 2, got {n}")));
            }
            let q = opts.net_order.unwrap_or(2 * alpha as usize + 1);
            let g = higher_order_sobol(d, n.trailing_zeros() as usize, q)?;
            Ok(net_points(&g))
        }
    }
}

/// `(N, Q_N(f))` for one cell. For `sg-gh` the schedule entry is the level.
pub fn run_cell(
    method: Method,
    f: &TestIntegrand,
    alpha: u32,
    entry: u64,
    opts: &SweepOptions,
) -> Result<(u64, f64)> {
    let d = f.d();
    let eval = |x: &[f64]| f.eval(x);
    match method.qmc() {
        None => {
            let level = entry as usize;
            if level < d {
                return Err(Error::InvalidArgument(format!(
                    "sparse-grid level {level} is below d = {d}"
                )));
            }
            let set = isotropic_index_set(d, level)?;
            let n = total_points(&set, LevelSchedule::Pow2)?;
            Ok((n, smolyak_quadrature(&eval, &set, LevelSchedule::Pow2)?))
        }
        Some(q) => {
            let pts = qmc_points(q, d, alpha, entry, opts)?;
            Ok((entry, mapped_rule(q, &pts, alpha)?.apply(eval)?))
        }
    }
}

/// One record per schedule entry, with `abs_error = |Q_N(f) - I(f)|`.
pub fn converge_sweep(
    method: Method,
    f: &TestIntegrand,
    alpha: u32,
    schedule: &[u64],
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceRecord>> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("schedule must be strictly increasing".into()));
    }
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be >= 1".into()));
    }
    let exact = f.exact_value();
    schedule
        .par_iter()
        .map(|&entry| {
            let start = Instant::now();
            let (n, value) = run_cell(method, f, alpha, entry, opts)?;
            let wall = if opts.timing { start.elapsed().as_secs_f64() } else { 0.0 };
            Ok(ConvergenceRecord {
                method,
                d: f.d(),
                alpha,
                n,
                abs_error: (value - exact).abs(),
                wall_seconds: wall,
            })
        })
        .collect()
}

/// Sweeps every method over its default schedule; records sorted by
/// `(method, N)`.
pub fn run_bench(
    methods: &[Method],
    f: &TestIntegrand,
    alpha: u32,
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceRecord>> {
    let mut records = Vec::new();
    for &m in methods {
        records.extend(converge_sweep(m, f, alpha, &default_schedule(m, f.d()), opts)?);
    }
    records.sort_by_key(|a| (a.method, a.n));
    Ok(records)
}

/// Least squares of `ln abs_error` on `ln N` over records inside `window`
/// (inclusive, all records when `None`) with `abs_error >= ERROR_FLOOR`.
pub fn fit_rate(records: &[ConvergenceRecord], window: Option<(u64, u64)>) -> Result<RateFit> {
    let pts: Vec<(u64, f64)> = records
        .iter()
        .filter(|r| window.is_none_or(|(lo, hi)| r.n >= lo && r.n <= hi))
        .filter(|r| r.abs_error >= ERROR_FLOOR && r.abs_error.is_finite())
        .map(|r| (r.n, r.abs_error))
        .collect();
    fit_points(&pts)
}

/// [`fit_rate`] on bare `(N, error)` pairs.
pub fn fit_points(pts: &[(u64, f64)]) -> Result<RateFit> {
    let pts: Vec<(u64, f64)> = pts
        .iter()
        .copied()
        .filter(|&(_, e)| e >= ERROR_FLOOR && e.is_finite())
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewRecords(pts.len()));
    }
    let xs: Vec<f64> = pts.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all records share one N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * m {
        1.0
    } else {
        (slope * sxy / syy).clamp(0.0, 1.0)
    };
    let lo = pts.iter().map(|p| p.0).min().unwrap_or(0);
    let hi = pts.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        window: (lo, hi),
    })
}

/// CSV text with the fixed header, LF endings, floats at 17 significant digits.
pub fn results_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e}\n",
            r.method, r.d, r.alpha, r.n, r.abs_error, r.wall_seconds
        ));
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let bad = |line: usize, msg: &str| Error::Malformed {
        what: "results CSV".into(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        let [method, d, alpha, n, err, wall] = f[..] else {
            return Err(bad(line_no, "expected 6 fields"));
        };
        let num = |t: &str| bad(line_no, &format!("`{t}` is not a number"));
        out.push(ConvergenceRecord {
            method: method.parse()?,
            d: d.parse().map_err(|_| num(d))?,
            alpha: alpha.parse().map_err(|_| num(alpha))?,
            n: n.parse().map_err(|_| num(n))?,
            abs_error: err.parse().map_err(|_| num(err))?,
            wall_seconds: wall.parse().map_err(|_| num(wall))?,
        });
    }
    Ok(out)
}

/// Gnuplot script drawing `results.csv` on log-log axes, one series per
/// method present.
pub fn plot_script(records: &[ConvergenceRecord], fits: &[(Method, RateFit)]) -> String {
    let mut methods: Vec<Method> = records.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let mut out = String::new();
    out.push_str("# gnuplot script; run `gnuplot -p plot.gp` next to results.csv\n");
    out.push_str("set datafile separator ','\n");
    out.push_str("set logscale xy\n");
    out.push_str("set format y '10^{%L}'\n");
    out.push_str("set xlabel 'N'\n");
    out.push_str("set ylabel 'absolute error'\n");
    out.push_str("set key bottom left\n");
    if methods.is_empty() {
        out.push_str("# no records\n");
        return out;
    }
    let series: Vec<String> = methods
        .iter()
        .map(|m| {
            let title = match fits.iter().find(|(fm, _)| fm == m) {
                Some((_, fit)) => format!("{m} (slope {:.2})", fit.slope),
                None => m.to_string(),
            };
            format!(
                "'results.csv' every ::1 using 4:(strcol(1) eq '{m}' ? $5 : NaN) with linespoints title '{title}'"
            )
        })
        .collect();
    out.push_str("plot ");
    out.push_str(&series.join(", \\\n     "));
    out.push('\n');
    out
}

/// Writes `results.csv` and `plot.gp` into `dir`.
pub fn emit_outputs(records: &[ConvergenceRecord], fits: &[(Method, RateFit)], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("results.csv");
    fs::write(&csv, results_csv(records)).map_err(|e| Error::io(&csv, e))?;
    let gp = dir.join("plot.gp");
    fs::write(&gp, plot_script(records, fits)).map_err(|e| Error::io(&gp, e))?;
    Ok(())
}

/// Per-method fits, skipping methods with too few usable records.
pub fn fit_by_method(records: &[ConvergenceRecord]) -> Vec<(Method, RateFit)> {
    Method::ALL
        .into_iter()
        .filter_map(|m| {
            let rs: Vec<ConvergenceRecord> = records.iter().filter(|r| r.method == m).cloned().collect();
            fit_rate(&rs, None).ok().map(|f| (m, f))
        })
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Malformed {
            what: "config".into(),
            msg: format!("line {}: expected `key = value`", i + 1),
        })?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
