//! Test integrands on `R^d` with known Gaussian integrals.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gauss_hermite::hermite_eval_multi;

const SPLINE_ORACLE: &str = include_str!("../data/spline_oracle.txt");

/// `(alpha, int max(0, 1-|x|)^alpha rho dx)` from the bundled oracle file.
pub fn spline_oracle() -> &'static [(u32, f64)] {
    static TABLE: OnceLock<Vec<(u32, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| parse_spline_oracle(SPLINE_ORACLE).expect("bundled oracle parses"))
}

fn parse_spline_oracle(text: &str) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Malformed {
            what: "spline oracle".into(),
            msg: format!("line {}: `{line}`", i + 1),
        };
        let mut it = line.split_whitespace();
        let alpha = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let value = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        out.push((alpha, value));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Analytic,
    Sobolev(u32),
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Analytic => f.write_str("analytic"),
            Smoothness::Sobolev(a) => write!(f, "sobolev({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    One,
    ProdCos(f64),
    ExpLin(Vec<f64>),
    Hermite(Vec<usize>),
    Spline(u32),
}

/// A named integrand with its exact integral against the standard Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct TestIntegrand {
    d: usize,
    kind: Kind,
    exact: f64,
}

impl TestIntegrand {
    /// `f = 1`.
    pub fn one(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            d,
            kind: Kind::One,
            exact: 1.0,
        })
    }

    /// `prod_k cos(a x_k)`, integral `exp(-d a^2 / 2)`.
    pub fn prodcos(d: usize, a: f64) -> Result<Self> {
        check_dim(d)?;
        check_param(a)?;
        Ok(Self {
            d,
            kind: Kind::ProdCos(a),
            exact: (-(d as f64) * a * a / 2.0).exp(),
        })
    }

    /// `exp(c . x)`, integral `exp(|c|^2 / 2)`.
    pub fn explin(c: Vec<f64>) -> Result<Self> {
        check_dim(c.len())?;
        for &ck in &c {
            check_param(ck)?;
        }
        let sq: f64 = c.iter().map(|v| v * v).sum();
        Ok(Self {
            d: c.len(),
            exact: (sq / 2.0).exp(),
            kind: Kind::ExpLin(c),
        })
    }

    /// Normalized `prod_k H_{k_k}(x_k)`: integral 1 for `k = 0`, else 0.
    pub fn hermite(k: Vec<usize>) -> Result<Self> {
        check_dim(k.len())?;
        Ok(Self {
            d: k.len(),
            exact: if k.iter().all(|&v| v == 0) { 1.0 } else { 0.0 },
            kind: Kind::Hermite(k),
        })
    }

    /// `prod_k max(0, 1 - |x_k|)^alpha`, exact value from the oracle table.
    pub fn spline(d: usize, alpha: u32) -> Result<Self> {
        check_dim(d)?;
        if alpha == 0 {
            return Err(Error::InvalidArgument("spline needs alpha >= 1".into()));
        }
        let &(_, one_d) = spline_oracle()
            .iter()
            .find(|(a, _)| *a == alpha)
            .ok_or_else(|| Error::NoExactValue(format!("spline({alpha})")))?;
        Ok(Self {
            d,
            kind: Kind::Spline(alpha),
            exact: one_d.powi(d as i32),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn exact_value(&self) -> f64 {
        self.exact
    }

    pub fn smoothness(&self) -> Smoothness {
        match self.kind {
            Kind::Spline(a) => Smoothness::Sobolev(a),
            _ => Smoothness::Analytic,
        }
    }

    /// Canonical name, accepted back by [`lookup`].
    pub fn name(&self) -> String {
        match &self.kind {
            Kind::One => "one".into(),
            Kind::ProdCos(_) => "prodcos".into(),
            Kind::ExpLin(_) => "explin".into(),
            Kind::Hermite(k) => format!(
                "hermite({})",
                k.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            ),
            Kind::Spline(a) => format!("spline({a})"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match &self.kind {
            Kind::One => 1.0,
            Kind::ProdCos(a) => x.iter().map(|v| (a * v).cos()).product(),
            Kind::ExpLin(c) => c.iter().zip(x).map(|(c, v)| c * v).sum::<f64>().exp(),
            Kind::Hermite(k) => hermite_eval_multi(k, x),
            Kind::Spline(a) => x
                .iter()
                .map(|v| (1.0 - v.abs()).max(0.0).powi(*a as i32))
                .product(),
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidArgument("dimension must be >= 1".into()))
    } else {
        Ok(())
    }
}

fn check_param(a: f64) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("parameter must be finite, got {a}")))
    }
}

/// The standard set: `one`, `prodcos`, `explin` (all `c_k = a`),
/// `hermite(2,0,..,0)` and `spline(1..=3)`.
pub fn catalog(d: usize, a: f64) -> Result<Vec<TestIntegrand>> {
    let mut k = vec![0; d.max(1)];
    k[0] = 2;
    Ok(vec![
        TestIntegrand::one(d)?,
        TestIntegrand::prodcos(d, a)?,
        TestIntegrand::explin(vec![a; d])?,
        TestIntegrand::hermite(k)?,
        TestIntegrand::spline(d, 1)?,
        TestIntegrand::spline(d, 2)?,
        TestIntegrand::spline(d, 3)?,
    ])
}

/// Looks up an integrand by name. `hermite` takes its multi-index as
/// `hermite(3,0)` or `hermite:3,0` (length must equal `d`); `spline` takes
/// `spline(2)`, `spline:2` or `spline2`. `a` parameterizes `prodcos` and
/// `explin`.
pub fn lookup(name: &str, d: usize, a: f64) -> Result<TestIntegrand> {
    let name = name.trim();
    let (head, arg) = split_arg(name);
    match (head, arg) {
        ("one", None) => TestIntegrand::one(d),
        ("prodcos", None) => TestIntegrand::prodcos(d, a),
        ("explin", None) => TestIntegrand::explin(vec![a; d]),
        ("hermite", Some(arg)) => {
            let k = arg
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::UnknownIntegrand(name.into()))?;
            if k.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "hermite index has {} entries, dimension is {d}",
                    k.len()
                )));
            }
            TestIntegrand::hermite(k)
        }
        ("spline", Some(arg)) => {
            let alpha = arg
                .trim()
                .parse()
                .map_err(|_| Error::UnknownIntegrand(name.into()))?;
            TestIntegrand::spline(d, alpha)
        }
        _ => match name.strip_prefix("spline").map(str::parse::<u32>) {
            Some(Ok(alpha)) => TestIntegrand::spline(d, alpha),
            _ => Err(Error::UnknownIntegrand(name.into())),
        },
    }
}

fn split_arg(name: &str) -> (&str, Option<&str>) {
    if let Some((head, rest)) = name.split_once('(') {
        if let Some(arg) = rest.strip_suffix(')') {
            return (head, Some(arg));
        }
    }
    if let Some((head, arg)) = name.split_once(':') {
        return (head, Some(arg));
    }
    (name, None)
}
