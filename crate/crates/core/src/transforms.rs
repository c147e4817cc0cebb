//! Turning unit-cube point sets into Gaussian quadrature rules on `R^d`.
//!
//! Two maps are provided: the affine box map `t -> 2bt - b` (which truncates
//! the domain) and the cotangent map `t -> -cot(pi t)` (which does not, and
//! whose induced integrand extends by zero to the cube boundary).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sum::ExactSum;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Logarithm of the standard Gaussian density in `d = x.len()` dimensions.
pub fn log_gaussian_density(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * sq - LN_SQRT_2PI * x.len() as f64
}

/// Standard Gaussian density; underflows to 0 far out in the tails.
pub fn gaussian_density(x: &[f64]) -> f64 {
    log_gaussian_density(x).exp()
}

/// Which point family a truncation radius is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Lattice,
    Net,
}

/// Half-width `b > 0` of the box `[-b, b]^d`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TruncationRadius(f64);

impl TruncationRadius {
    pub fn new(b: f64) -> Result<Self> {
        if b.is_finite() && b > 0.0 {
            Ok(Self(b))
        } else {
            Err(Error::InvalidArgument(format!("truncation radius must be positive, got {b}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `sqrt((alpha/2) ln N)` for lattices, `2 sqrt(alpha ln N)` for nets.
pub fn affine_radius(n: f64, alpha: u32, flavor: Flavor) -> Result<TruncationRadius> {
    if !(n >= 2.0) {
        return Err(Error::InvalidArgument(format!("affine radius needs N >= 2, got {n}")));
    }
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be >= 1".into()));
    }
    let a = f64::from(alpha);
    let b = match flavor {
        Flavor::Lattice => (0.5 * a * n.ln()).sqrt(),
        Flavor::Net => 2.0 * (a * n.ln()).sqrt(),
    };
    TruncationRadius::new(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Affine(TruncationRadius),
    Mobius,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::Affine(b) => write!(f, "affine({})", b.value()),
            RuleKind::Mobius => f.write_str("mobius"),
        }
    }
}

/// Nodes and weights in `R^d` obtained by mapping a unit-cube point set.
#[derive(Debug, Clone)]
pub struct MappedRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
    /// Free-form description of the source point set.
    pub source: String,
}

impl MappedRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// `sum_j w_j f(x_j)`, accumulated exactly and rounded once, so the value
    /// is independent of summation order.
    /// Nodes with weight exactly zero are skipped without evaluating `f`.
    pub fn apply<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = ExactSum::new();
        for (x, &w) in self.points.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::IntegrandFailure {
                    node: x.clone(),
                    value: v,
                });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }
}

/// Affine rule: `x_j = 2b t_j - b`, `w_j = (2b)^d rho(x_j) / N`.
pub fn affine_rule(points01: &[Vec<f64>], b: TruncationRadius) -> MappedRule {
    let b = b.value();
    let n = points01.len() as f64;
    let mut points = Vec::with_capacity(points01.len());
    let mut weights = Vec::with_capacity(points01.len());
    for t in points01 {
        let x: Vec<f64> = t.iter().map(|&tk| 2.0 * b * tk - b).collect();
        let log_w = t.len() as f64 * (2.0 * b).ln() + log_gaussian_density(&x);
        weights.push(log_w.exp() / n);
        points.push(x);
    }
    MappedRule {
        points,
        weights,
        kind: RuleKind::Affine(TruncationRadius(b)),
        source: String::new(),
    }
}

/// `(phi(t), phi'(t))` with `phi(t) = -cot(pi t)`, `phi'(t) = pi / sin^2(pi t)`.
///
/// Points in the upper half are reflected to `1 - t` (exact in floating
/// point) so that `phi(1 - t) = -phi(t)` holds bitwise.
pub fn mobius_map(t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cotangent map needs 0 < t < 1, got {t}"
        )));
    }
    let (s, sign) = if t > 0.5 { (1.0 - t, 1.0) } else { (t, -1.0) };
    if s == 0.5 {
        // cos(fl(pi/2)) is 6e-17, not 0
        return Ok((0.0, PI));
    }
    let (sin, cos) = (PI * s).sin_cos();
    Ok((sign * cos / sin, PI / (sin * sin)))
}

fn on_boundary(t: &[f64]) -> bool {
    t.iter().any(|&tk| tk <= 0.0 || tk >= 1.0)
}

/// Cotangent rule: `w_j = rho(x_j) prod_k phi'(t_k) / N`; any point with a
/// coordinate equal to 0 or 1 gets weight 0 (its node is reported as the
/// origin and never evaluated).
pub fn mobius_rule(points01: &[Vec<f64>]) -> MappedRule {
    let n = points01.len() as f64;
    let mut points = Vec::with_capacity(points01.len());
    let mut weights = Vec::with_capacity(points01.len());
    for t in points01 {
        if on_boundary(t) {
            points.push(vec![0.0; t.len()]);
            weights.push(0.0);
            continue;
        }
        let mut x = Vec::with_capacity(t.len());
        let mut log_jac = 0.0;
        for &tk in t {
            let (xk, dxk) = mobius_map(tk).expect("interior coordinate");
            x.push(xk);
            log_jac += dxk.ln();
        }
        weights.push((log_jac + log_gaussian_density(&x)).exp() / n);
        points.push(x);
    }
    MappedRule {
        points,
        weights,
        kind: RuleKind::Mobius,
        source: String::new(),
    }
}

/// `(1/N) sum_j f(phi(t_j)) rho(phi(t_j)) prod_k phi'(t_jk)` with boundary
/// points contributing 0.
pub fn mobius_quadrature<F: Fn(&[f64]) -> f64>(points01: &[Vec<f64>], f: F) -> Result<f64> {
    mobius_rule(points01).apply(f)
}

/// The induced cube integrand `g(t) = f(phi(t)) rho(phi(t)) prod phi'(t_k)`,
/// extended by zero to the boundary.
pub fn mobius_summand<F: Fn(&[f64]) -> f64>(t: &[f64], f: F) -> f64 {
    if on_boundary(t) {
        return 0.0;
    }
    let mut x = Vec::with_capacity(t.len());
    let mut log_jac = 0.0;
    for &tk in t {
        let (xk, dxk) = mobius_map(tk).expect("interior coordinate");
        x.push(xk);
        log_jac += dxk.ln();
    }
    let w = (log_jac + log_gaussian_density(&x)).exp();
    if w == 0.0 {
        0.0
    } else {
        w * f(&x)
    }
}

/// The four unit-cube-to-`R^d` methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QmcMethod {
    AffLattice,
    AffNet,
    MobLattice,
    MobNet,
}

impl QmcMethod {
    pub const ALL: [QmcMethod; 4] = [
        QmcMethod::AffLattice,
        QmcMethod::AffNet,
        QmcMethod::MobLattice,
        QmcMethod::MobNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QmcMethod::AffLattice => "aff-lattice",
            QmcMethod::AffNet => "aff-net",
            QmcMethod::MobLattice => "mob-lattice",
            QmcMethod::MobNet => "mob-net",
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            QmcMethod::AffLattice | QmcMethod::MobLattice => Flavor::Lattice,
            QmcMethod::AffNet | QmcMethod::MobNet => Flavor::Net,
        }
    }

    pub fn is_affine(self) -> bool {
        matches!(self, QmcMethod::AffLattice | QmcMethod::AffNet)
    }
}

impl fmt::Display for QmcMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QmcMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown QMC method `{s}`")))
    }
}

/// Maps a point set with the method's transform; `alpha` sets the affine box.
pub fn mapped_rule(method: QmcMethod, points01: &[Vec<f64>], alpha: u32) -> Result<MappedRule> {
    if method.is_affine() {
        let b = affine_radius(points01.len() as f64, alpha, method.flavor())?;
        Ok(affine_rule(points01, b))
    } else {
        Ok(mobius_rule(points01))
    }
}
