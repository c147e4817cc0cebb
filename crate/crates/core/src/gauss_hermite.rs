//! Normalized probabilists' Hermite polynomials and Gauss-Hermite rules for
//! the standard normal density `rho(x) = exp(-x^2/2) / sqrt(2 pi)`.
//!
//! Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi matrix
//! (off-diagonal `sqrt(1), ..., sqrt(n-1)`), polished by Newton steps on `H_n`.
//! Weights are evaluated from the Christoffel function
//! `w_j = 1 / sum_{k<n} H_k(x_j)^2`, which keeps the tiny outer weights
//! accurate to full relative precision.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Degree of a normalized Hermite polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HermiteIndex(pub usize);

/// Evaluates `H_k(x)`, normalized so that `||H_k||_{L^2_rho} = 1`.
///
/// Uses `sqrt(k+1) H_{k+1}(x) = x H_k(x) - sqrt(k) H_{k-1}(x)`.
pub fn hermite_eval(k: HermiteIndex, x: f64) -> f64 {
    let HermiteIndex(k) = k;
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for j in 1..k {
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Tensor-product Hermite polynomial `H_k(x) = prod_j H_{k_j}(x_j)`.
pub fn hermite_eval_multi(k: &[usize], x: &[f64]) -> f64 {
    debug_assert_eq!(k.len(), x.len());
    k.iter()
        .zip(x)
        .map(|(&kj, &xj)| hermite_eval(HermiteIndex(kj), xj))
        .product()
}

/// `int x^k rho(x) dx`: `(k-1)!!` for even `k`, zero for odd `k`.
pub fn gaussian_moment(k: usize) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let mut acc = 1.0f64;
    let mut j = k.saturating_sub(1);
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(Error::MomentOverflow { k })
    }
}

/// A one-dimensional quadrature rule against the standard normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the `n`-point Gauss-Hermite rule without touching the cache.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Gauss-Hermite rule needs n >= 1".into(),
            ));
        }
        let mut diag = vec![0.0; n];
        let mut off: Vec<f64> = (1..=n).map(|k| (k as f64).sqrt()).collect();
        off[n - 1] = 0.0;
        tridiagonal_eigenvalues(&mut diag, &mut off)
            .map_err(|_| Error::EigenNoConvergence { n })?;
        let mut nodes = diag;
        nodes.sort_by(f64::total_cmp);

        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let s = scaled_recurrence(n, *x);
                if s.h_prev == 0.0 {
                    break;
                }
                let step = s.h_n / ((n as f64).sqrt() * s.h_prev);
                if !step.is_finite() {
                    break;
                }
                *x -= step;
                if step.abs() <= 1e-17 * x.abs().max(1.0) {
                    break;
                }
            }
        }

        // exact symmetry about the origin
        for j in 0..n / 2 {
            let half = 0.5 * (nodes[n - 1 - j] - nodes[j]);
            nodes[j] = -half;
            nodes[n - 1 - j] = half;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }

        let mut weights: Vec<f64> = nodes.iter().map(|&x| christoffel_weight(n, x)).collect();
        for j in 0..n / 2 {
            let avg = 0.5 * (weights[j] + weights[n - 1 - j]);
            weights[j] = avg;
            weights[n - 1 - j] = avg;
        }
        // smallest terms first
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
        let total: f64 = order.iter().map(|&j| weights[j]).sum();
        for w in weights.iter_mut() {
            *w /= total;
        }

        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_j w_j f(x_j)`, compensated.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// Cached `n`-point Gauss-Hermite rule.
///
/// Construction holds the cache lock, so concurrent first requests for the
/// same `n` build it once.
pub fn gauss_hermite_rule(n: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(rule) = guard.get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(QuadratureRule::gauss_hermite(n)?);
    guard.insert(n, Arc::clone(&rule));
    Ok(rule)
}

/// Hermite values at one point, all scaled by `exp(-log_scale)`.
struct Scaled {
    h_n: f64,
    h_prev: f64,
    /// `sum_{k<n} H_k^2`, scaled by `exp(-2 log_scale)`.
    sum_sq: f64,
    log_scale: f64,
}

const RESCALE_AT: f64 = 1e150;

fn scaled_recurrence(n: usize, x: f64) -> Scaled {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            prev /= RESCALE_AT;
            cur /= RESCALE_AT;
            sum_sq /= RESCALE_AT * RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
    }
    Scaled {
        h_n: cur,
        h_prev: prev,
        sum_sq,
        log_scale,
    }
}

fn christoffel_weight(n: usize, x: f64) -> f64 {
    let s = scaled_recurrence(n, x);
    (-(s.sum_sq.ln() + 2.0 * s.log_scale)).exp()
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `off[i]` couples rows `i` and `i+1`; `off[n-1]` is ignored. On success
/// `diag` holds the (unsorted) eigenvalues.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> std::result::Result<(), ()> {
    let n = diag.len();
    if n <= 1 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd || off[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(());
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}
