//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `(k-1)!!` for even `k`, 0 for odd `k`: the Gaussian moments.
pub fn double_factorial_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(|v| v as f64).product()
}

/// Hurwitz zeta `sum_{m >= 0} (m + a)^-s` for `s > 1`, `a > 0`: direct sum
/// of 2000 terms plus an Euler–Maclaurin tail.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    let m = 2000;
    let mut sum = 0.0;
    for i in (0..m).rev() {
        sum += (i as f64 + a).powf(-s);
    }
    let x = m as f64 + a;
    sum + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s * x.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0
}

/// `A(r) = sum_{k = r mod N} max(1, |k|)^(-2 alpha)`.
pub fn residue_mass(n: u64, r: u64, alpha: u32) -> f64 {
    let s = 2.0 * alpha as f64;
    let nf = n as f64;
    if r == 0 {
        1.0 + 2.0 * nf.powf(-s) * hurwitz_zeta(s, 1.0)
    } else {
        let a = r as f64 / nf;
        nf.powf(-s) * (hurwitz_zeta(s, a) + hurwitz_zeta(s, 1.0 - a))
    }
}

/// Squared Korobov worst-case error as a sum over the dual lattice
/// `{h : h . z = 0 mod N}` minus the `h = 0` term, grouped by residues.
pub fn dual_lattice_wce2(n: u64, z: &[u64], alpha: u32) -> f64 {
    let masses: Vec<f64> = (0..n).map(|r| residue_mass(n, r, alpha)).collect();
    let d = z.len();
    let mut total = 0.0;
    // odometer over all residue tuples
    let mut r = vec![0u64; d];
    loop {
        let dot: u64 = r.iter().zip(z).map(|(a, b)| a * b % n).sum::<u64>() % n;
        if dot == 0 {
            total += r.iter().map(|&ri| masses[ri as usize]).product::<f64>();
        }
        let mut k = 0;
        loop {
            if k == d {
                return total - 1.0;
            }
            r[k] += 1;
            if r[k] < n {
                break;
            }
            r[k] = 0;
            k += 1;
        }
    }
}

/// Trapezoid rule with `panels` panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..panels {
        s += f(a + i as f64 * h);
    }
    s * h
}

pub fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

/// Smallest `z_2` minimizing the dual-lattice error of `(1, z_2)`, with the
/// minimal squared error. Candidates within `rtol` of the minimum tie.
pub fn brute_force_d2(n: u64, alpha: u32, rtol: f64) -> (u64, f64) {
    let errs: Vec<f64> = (1..n).map(|c| dual_lattice_wce2(n, &[1, c], alpha)).collect();
    let best = errs.iter().copied().fold(f64::INFINITY, f64::min);
    let z = errs.iter().position(|&e| e <= best * (1.0 + rtol)).unwrap() as u64 + 1;
    (z, best)
}
