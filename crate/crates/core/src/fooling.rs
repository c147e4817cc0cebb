//! Fooling functions for Gauss–Hermite based rules.
//!
//! `p_n` is a degree-`2 alpha` polynomial bump on each gap between
//! consecutive roots of `H_n`, zero at every root and outside
//! `[xi_1, xi_n]`. Any rule whose nodes are those roots (whatever its
//! weights) returns 0 on it, while its Gaussian integral is positive.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss_hermite::{gauss_hermite_rule, QuadratureRule};
use crate::sparse_grid::{level_size, LevelSchedule};
use crate::sum::CompensatedSum;

/// `n`-point Gauss–Legendre rule on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss–Legendre needs n >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, x);
            dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (p, p_prev) = legendre_pair(n, x);
        if p.abs() > 1e-13 {
            dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        // x runs from near +1 downward
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `p_n` for the roots of `H_n` and smoothness `alpha`.
#[derive(Debug, Clone)]
pub struct FoolingFunction {
    alpha: u32,
    rule: Arc<QuadratureRule>,
    /// `coeffs[k]` is the coefficient of `u^k` in `(u(1-u))^alpha`.
    coeffs: Vec<f64>,
}

impl FoolingFunction {
    pub fn new(n: usize, alpha: u32) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidArgument("alpha must be >= 1".into()));
        }
        let rule = gauss_hermite_rule(n)?;
        let mut coeffs = vec![0.0; 2 * alpha as usize + 1];
        for i in 0..=alpha {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(alpha + i) as usize] = sign * binomial(alpha, i);
        }
        Ok(Self { alpha, rule, coeffs })
    }

    /// The witness for the isotropic Smolyak set of level `level` in `d`
    /// dimensions: `n = n_{L-d+1}`, the largest univariate rule it uses.
    pub fn for_sparse_grid(d: usize, level: usize, sched: LevelSchedule, alpha: u32) -> Result<Self> {
        if d == 0 || level < d {
            return Err(Error::InvalidArgument(format!(
                "need L >= d >= 1, got d = {d}, L = {level}"
            )));
        }
        Self::new(level_size(level - d + 1, sched)?, alpha)
    }

    pub fn n(&self) -> usize {
        self.rule.len()
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn knots(&self) -> &[f64] {
        self.rule.nodes()
    }

    /// Gap index `j` (0-based) with `xi_j <= x < xi_{j+1}`, if any.
    fn gap(&self, x: f64) -> Option<usize> {
        let k = self.knots();
        if k.len() < 2 || !(x >= k[0] && x <= k[k.len() - 1]) {
            return None;
        }
        let j = k.partition_point(|&xi| xi <= x);
        Some((j - 1).min(k.len() - 2))
    }

    /// `p_n(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `D^r p_n(x)`; at a knot the right-hand limit is returned.
    pub fn derivative(&self, r: u32, x: f64) -> f64 {
        let Some(j) = self.gap(x) else {
            return 0.0;
        };
        let k = self.knots();
        let h = k[j + 1] - k[j];
        let u = (x - k[j]) / h;
        self.local_derivative(r, u) / h.powi(r as i32)
    }

    /// `d^r/du^r (u(1-u))^alpha`.
    fn local_derivative(&self, r: u32, u: f64) -> f64 {
        let r = r as usize;
        if r >= self.coeffs.len() {
            return 0.0;
        }
        // Horner over the differentiated monomials
        let mut acc = 0.0;
        for k in (r..self.coeffs.len()).rev() {
            let falling: f64 = ((k - r + 1)..=k).map(|i| i as f64).product();
            acc = acc * u + self.coeffs[k] * falling;
        }
        acc
    }

    /// Sum over gaps of a Gauss–Legendre rule of order `2 alpha + 16`
    /// applied to `g(r, u, x) rho(x)`.
    fn integrate_gaps(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let (gl_x, gl_w) = gauss_legendre(2 * self.alpha as usize + 16).expect("order >= 1");
        let k = self.knots();
        let mut total = CompensatedSum::new();
        for j in 0..k.len().saturating_sub(1) {
            let h = k[j + 1] - k[j];
            let mut gap = CompensatedSum::new();
            for (&u, &w) in gl_x.iter().zip(&gl_w) {
                let x = k[j] + h * u;
                gap.add(w * g(u, h) * gaussian(x));
            }
            total.add(h * gap.value());
        }
        total.value()
    }

    /// `int p_n rho`.
    pub fn integral(&self) -> f64 {
        self.integrate_gaps(|u, _| self.local_derivative(0, u))
    }

    /// `||D^r p_n||^2` in `L^2_rho` for `r = 0..alpha`.
    pub fn norm(&self) -> SobolevNormReport {
        let contributions: Vec<f64> = (0..=self.alpha)
            .map(|r| {
                self.integrate_gaps(|u, h| {
                    let v = self.local_derivative(r, u) / h.powi(r as i32);
                    v * v
                })
            })
            .collect();
        let total = contributions.iter().sum::<f64>().sqrt();
        SobolevNormReport { contributions, total }
    }

    /// `Q(p_n)` for a rule on the knots with arbitrary weights.
    pub fn apply_weights(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} nodes",
                weights.len(),
                self.n()
            )));
        }
        Ok(self
            .knots()
            .iter()
            .zip(weights)
            .map(|(&x, &w)| w * self.eval(x))
            .sum())
    }
}

/// Per-order squared norms and `total = sqrt(sum)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevNormReport {
    pub contributions: Vec<f64>,
    pub total: f64,
}

/// `int p_n rho / ||p_n||_{H^alpha}`: a lower bound on the worst-case error
/// of every rule using the `n` Gauss–Hermite nodes.
pub fn suboptimality_ratio(n: usize, alpha: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("suboptimality ratio needs n >= 2".into()));
    }
    let p = FoolingFunction::new(n, alpha)?;
    Ok(p.integral() / p.norm().total)
}

/// One row of the ratio study.
#[derive(Debug, Clone, PartialEq)]
pub struct FoolRow {
    pub n: usize,
    pub integral: f64,
    pub norm: f64,
    pub ratio: f64,
}

/// Ratio study over `n = 2^k <= nmax`, starting at `n = 2`.
pub fn ratio_study(alpha: u32, nmax: usize) -> Result<Vec<FoolRow>> {
    let mut rows = Vec::new();
    let mut n = 2;
    while n <= nmax {
        let p = FoolingFunction::new(n, alpha)?;
        let integral = p.integral();
        let norm = p.norm().total;
        rows.push(FoolRow {
            n,
            integral,
            norm,
            ratio: integral / norm,
        });
        n *= 2;
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest `|Q(p_n)|` over `trials` random weight vectors on the `n`
/// Gauss–Hermite nodes (weights uniform in `[-1, 1]`, fixed seed).
pub fn verify_annihilation(n: usize, alpha: u32, trials: usize, seed: u64) -> Result<f64> {
    let p = FoolingFunction::new(n, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        worst = worst.max(p.apply_weights(&w)?.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn legendre_exactness() {
        for n in 1..30 {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert_abs_diff_eq!(q, 1.0 / (k as f64 + 1.0), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn vanishes_at_knots_and_outside() {
        for (n, alpha) in [(2, 1), (5, 2), (40, 3), (101, 1)] {
            let p = FoolingFunction::new(n, alpha).unwrap();
            for &x in p.knots() {
                assert!(p.eval(x).abs() <= 1e-14);
            }
            let k = p.knots();
            assert_eq!(p.eval(k[n - 1] + 1.0), 0.0);
            assert_eq!(p.eval(k[0] - 1e-9), 0.0);
            let bump = 0.25f64.powi(alpha as i32);
            for j in 0..n - 1 {
                let mid = 0.5 * (k[j] + k[j + 1]);
                assert_abs_diff_eq!(p.eval(mid), bump, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn two_point_integral_matches_trapezoid() {
        // knots of H_2 are -1, 1; p(x) = u(1-u), u = (x+1)/2
        let p = FoolingFunction::new(2, 1).unwrap();
        let panels = 1_000_000;
        let h = 2.0 / panels as f64;
        let f = |x: f64| {
            let u = (x + 1.0) / 2.0;
            u * (1.0 - u) * gaussian(x)
        };
        let df = |x: f64| {
            let u = (x + 1.0) / 2.0;
            let d = (1.0 - 2.0 * u) / 2.0;
            d * d * gaussian(x)
        };
        let trap = |g: &dyn Fn(f64) -> f64| {
            let mut s = 0.5 * (g(-1.0) + g(1.0));
            for i in 1..panels {
                s += g(-1.0 + i as f64 * h);
            }
            s * h
        };
        assert_abs_diff_eq!(p.integral(), trap(&f), epsilon = 1e-11);
        let report = p.norm();
        assert_abs_diff_eq!(report.contributions[1], trap(&df), epsilon = 1e-9);
        assert!(report.contributions[0] <= 0.25f64.powi(2));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = FoolingFunction::new(7, 3).unwrap();
        let k = p.knots();
        for j in 0..6 {
            let x = k[j] + 0.3 * (k[j + 1] - k[j]);
            for r in 0..3 {
                let e = 1e-6;
                let fd = (p.derivative(r, x + e) - p.derivative(r, x - e)) / (2.0 * e);
                let exact = p.derivative(r + 1, x);
                assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "j={j} r={r}");
            }
        }
        assert_eq!(p.derivative(7, 0.1), 0.0);
    }

    #[test]
    fn integral_bounds() {
        for alpha in 1..4 {
            for n in [2, 3, 8, 33] {
                let p = FoolingFunction::new(n, alpha).unwrap();
                let i = p.integral();
                assert!(i > 0.0 && i <= 0.25f64.powi(alpha as i32));
                let rep = p.norm();
                assert!(rep.contributions.iter().all(|&c| c >= 0.0));
                let s: f64 = rep.contributions.iter().sum();
                assert_abs_diff_eq!(rep.total * rep.total, s, epsilon = 1e-12 * s);
            }
        }
    }

    #[test]
    fn norm_growth_and_ratio_slope() {
        let rows = ratio_study(1, 1 << 10).unwrap();
        let rows: Vec<_> = rows.into_iter().filter(|r| r.n >= 16).collect();
        let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let norms: Vec<f64> = rows.iter().map(|r| r.norm).collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let s = log_log_slope(&ns, &norms);
        assert!((0.35..=0.65).contains(&s), "norm slope {s}");
        let s = log_log_slope(&ns, &ratios);
        assert!((-0.65..=-0.35).contains(&s), "ratio slope {s}");
    }

    #[test]
    fn annihilation_with_random_weights() {
        assert_eq!(verify_annihilation(33, 2, 100, 7).unwrap(), 0.0);
        let p = FoolingFunction::new(4, 1).unwrap();
        assert!(p.apply_weights(&[1.0]).is_err());
        assert!(suboptimality_ratio(1, 1).is_err());
        assert!(FoolingFunction::new(4, 0).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert_abs_diff_eq!(log_log_slope(&xs, &ys), -1.5, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn bounded_by_bump_height(x in -30.0f64..30.0, n in 2usize..60, alpha in 1u32..4) {
            let p = FoolingFunction::new(n, alpha).unwrap();
            let v = p.eval(x);
            prop_assert!(v >= 0.0 && v <= 0.25f64.powi(alpha as i32) * (1.0 + 1e-15));
        }
    }
}
