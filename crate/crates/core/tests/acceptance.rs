//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`).

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_d2, double_factorial_moment, dual_lattice_wce2, primes_up_to, slope};
use gausscub::bench::{converge_sweep, fit_rate, Method, SweepOptions, PRIME_LADDER};
use gausscub::digital_net::{net_points, GeneratingMatrices};
use gausscub::fooling::{suboptimality_ratio, FoolingFunction};
use gausscub::gauss_hermite::{hermite_eval_multi, QuadratureRule};
use gausscub::integrands::TestIntegrand;
use gausscub::lattice::{cbc_construct, cbc_construct_with_errors, korobov_wce, GeneratingVector, KorobovParams};
use gausscub::sparse_grid::{
    isotropic_index_set, smolyak_combination, smolyak_quadrature, smolyak_quadrature_with, total_points,
    LevelSchedule, SmolyakOptions,
};
use gausscub::transforms::{mobius_quadrature, mobius_summand};

type Outcome = Result<String, String>;
type Integrand = fn(&[f64]) -> f64;
type Criterion = (u32, &'static str, f64, fn() -> Outcome);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Gauss–Hermite moments against `(k-1)!!`.
fn c1() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=20 {
        let rule = QuadratureRule::gauss_hermite(n).map_err(|e| e.to_string())?;
        for k in 0..2 * n {
            let q = rule.integrate(|x| x.powi(k as i32));
            let exact = double_factorial_moment(k);
            let rel = (q - exact).abs() / exact.max(1.0);
            worst = worst.max(rel);
            check(rel <= 1e-10, || format!("n={n} k={k}: {q} vs {exact}"))?;
        }
    }
    Ok(format!("max scaled error {worst:.2e} (tol 1e-10)"))
}

/// Smolyak constants, the `L < d` zero, and Delta vs combination forms.
fn c2() -> Outcome {
    let pow2 = LevelSchedule::Pow2;
    for d in 1..=3 {
        for level in 1..=d + 4 {
            let set = isotropic_index_set(d, level).map_err(|e| e.to_string())?;
            let s = smolyak_quadrature(&|_: &[f64]| 1.0, &set, pow2).map_err(|e| e.to_string())?;
            let expect = if level >= d { 1.0 } else { 0.0 };
            check((s - expect).abs() <= 1e-13, || format!("S(1) d={d} L={level}: {s}"))?;
            if level < d {
                let s = smolyak_quadrature(&|x: &[f64]| x[0].exp(), &set, pow2).map_err(|e| e.to_string())?;
                check(s == 0.0, || format!("L<d gives {s}"))?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let level = rng.gen_range(d..=d + 4);
        let terms: Vec<(f64, Vec<usize>)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), (0..d).map(|_| rng.gen_range(0..=6)).collect()))
            .collect();
        let f = |x: &[f64]| terms.iter().map(|(c, k)| c * hermite_eval_multi(k, x)).sum::<f64>();
        let set = isotropic_index_set(d, level).map_err(|e| e.to_string())?;
        let delta = smolyak_quadrature(&f, &set, pow2).map_err(|e| e.to_string())?;
        let comb = smolyak_combination(&f, d, level, pow2).map_err(|e| e.to_string())?;
        worst = worst.max((delta - comb).abs());
        check((delta - comb).abs() <= 1e-11, || format!("d={d} L={level}: {delta} vs {comb}"))?;
    }
    Ok(format!("structural identities hold; Delta vs combination max diff {worst:.2e} (tol 1e-11)"))
}

/// Node counts.
fn c3() -> Outcome {
    let pow2 = LevelSchedule::Pow2;
    let n = total_points(&isotropic_index_set(2, 4).map_err(|e| e.to_string())?, pow2).map_err(|e| e.to_string())?;
    check(n == 17, || format!("total_points(Lambda_4, d=2) = {n}"))?;
    let mut cells = 0;
    for d in 1..=3 {
        for level in 1..=d + 4 {
            let calls = AtomicUsize::new(0);
            let f = |_: &[f64]| {
                calls.fetch_add(1, Ordering::Relaxed);
                1.0
            };
            let set = isotropic_index_set(d, level).map_err(|e| e.to_string())?;
            let opts = SmolyakOptions {
                parallel: false,
                node_cache: false,
            };
            smolyak_quadrature_with(&f, &set, pow2, opts).map_err(|e| e.to_string())?;
            let counted = calls.load(Ordering::Relaxed) as u64;
            let formula = total_points(&set, pow2).map_err(|e| e.to_string())?;
            check(counted == formula, || format!("d={d} L={level}: {counted} evaluations vs N={formula}"))?;
            cells += 1;
        }
    }
    Ok(format!("N(Lambda_4, d=2) = 17; evaluation counts match in {cells} cells"))
}

/// The fooling function is annihilated by the sparse grid and by any weights.
fn c4() -> Outcome {
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for level in d..=d + 6 {
            let p = FoolingFunction::for_sparse_grid(d, level, LevelSchedule::Pow2, 1).map_err(|e| e.to_string())?;
            let set = isotropic_index_set(d, level).map_err(|e| e.to_string())?;
            let s = smolyak_quadrature(&|x: &[f64]| p.eval(x[0]), &set, LevelSchedule::Pow2)
                .map_err(|e| e.to_string())?;
            worst = worst.max(s.abs());
            check(s.abs() <= 1e-12, || format!("d={d} L={level}: S(h) = {s}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 5, 16, 33, 64] {
        let p = FoolingFunction::new(n, 2).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let q: f64 = p.knots().iter().map(|&x| rng.gen_range(-10.0..10.0) * p.eval(x)).sum();
            check(q == 0.0, || format!("n={n}: Q(p_n) = {q}"))?;
        }
    }
    Ok(format!("max |S(h)| = {worst:.2e} (tol 1e-12); Q(p_n) = 0 for 500 random weight vectors"))
}

/// Suboptimality ratio slopes.
fn c5() -> Outcome {
    let ns: Vec<usize> = (4..=11).map(|k| 1 << k).collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut parts = Vec::new();
    for (alpha, lo, hi) in [(1, -0.65, -0.35), (2, -1.3, -0.7)] {
        let r: Vec<f64> = ns
            .iter()
            .map(|&n| suboptimality_ratio(n, alpha))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let s = slope(&x, &r);
        check(s >= lo && s <= hi, || format!("alpha={alpha}: slope {s:.4} outside [{lo}, {hi}]"))?;
        parts.push(format!("alpha={alpha} slope {s:.4} in [{lo}, {hi}]"));
    }
    Ok(parts.join("; "))
}

/// CBC against exhaustive search, and the error decay over the prime ladder.
fn c6() -> Outcome {
    let mut cases = 0;
    for n in primes_up_to(101) {
        for alpha in [1, 2] {
            let params = KorobovParams::unweighted(alpha, 2).map_err(|e| e.to_string())?;
            let cbc = cbc_construct(n, 2, &params).map_err(|e| e.to_string())?;
            let (z, _) = brute_force_d2(n, alpha, 1e-9);
            check(cbc.z() == [1, z], || format!("N={n} alpha={alpha}: CBC {:?}, exhaustive (1, {z})", cbc.z()))?;
            cases += 1;
        }
    }
    let params = KorobovParams::unweighted(1, 2).map_err(|e| e.to_string())?;
    let mut errs = Vec::new();
    for &n in &PRIME_LADDER {
        errs.push(cbc_construct_with_errors(n, 2, &params).map_err(|e| e.to_string())?.errors[1]);
    }
    let ns: Vec<f64> = PRIME_LADDER.iter().map(|&n| n as f64).collect();
    let s = slope(&ns, &errs);
    check(s <= -0.85, || format!("WCE slope {s:.4} > -0.85"))?;
    Ok(format!("{cases} exhaustive cases agree; WCE slope {s:.4} (<= -0.85)"))
}

/// Closed-form worst-case error against the dual-lattice sum.
fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=64u64 {
        for d in 1..=3usize {
            let korobov = ((0.618 * n as f64) as u64).clamp(1, n - 1);
            let fixed: Vec<u64> = (0..d).map(|k| korobov.pow(k as u32) % n).map(|c| c.max(1)).collect();
            let random: Vec<u64> = (0..d).map(|_| rng.gen_range(1..n)).collect();
            for z in [fixed, random] {
                for alpha in [1, 2] {
                    let v = GeneratingVector::new(n, z.clone()).map_err(|e| e.to_string())?;
                    let params = KorobovParams::unweighted(alpha, d).map_err(|e| e.to_string())?;
                    let closed = korobov_wce(&v, &params).map_err(|e| e.to_string())?;
                    let oracle = dual_lattice_wce2(n, &z, alpha).max(0.0).sqrt();
                    worst = worst.max((closed - oracle).abs());
                    check((closed - oracle).abs() <= 1e-6, || {
                        format!("N={n} z={z:?} alpha={alpha}: {closed} vs {oracle}")
                    })?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases, max |closed - Fourier| = {worst:.2e} (tol 1e-6)"))
}

/// Cotangent transport on van der Corput points.
fn c8() -> Outcome {
    let g = GeneratingMatrices::identity(16).map_err(|e| e.to_string())?;
    let pts = net_points(&g);
    let cases: [(&str, Integrand, f64); 3] = [
        ("1", |_| 1.0, 1.0),
        ("x^2", |x| x[0] * x[0], 1.0),
        ("cos x", |x| x[0].cos(), (-0.5f64).exp()),
    ];
    let mut worst = 0.0f64;
    for (name, f, exact) in cases {
        let q = mobius_quadrature(&pts, f).map_err(|e| e.to_string())?;
        worst = worst.max((q - exact).abs());
        check((q - exact).abs() <= 1e-6, || format!("{name}: {q} vs {exact}"))?;
    }
    let g_edge = mobius_summand(&[1e-6], |x| (0.3 * x[0]).exp()).abs();
    check(g_edge <= 1e-8, || format!("boundary summand {g_edge:e}"))?;
    Ok(format!("max error {worst:.2e} (tol 1e-6); |g(1e-6)| = {g_edge:.1e} (tol 1e-8)"))
}

/// The rate gap on spline(2).
fn c9() -> Outcome {
    let f = TestIntegrand::spline(2, 2).map_err(|e| e.to_string())?;
    let opts = SweepOptions::default();
    let sg_sched: Vec<u64> = (2..=10).collect();
    let net_sched: Vec<u64> = (6..=13).map(|m| 1u64 << m).collect();
    let sg = converge_sweep(Method::SgGh, &f, 2, &sg_sched, &opts).map_err(|e| e.to_string())?;
    let net = converge_sweep(Method::MobNet, &f, 2, &net_sched, &opts).map_err(|e| e.to_string())?;
    let s_sg = fit_rate(&sg, None).map_err(|e| e.to_string())?.slope;
    let s_net = fit_rate(&net, None).map_err(|e| e.to_string())?.slope;
    let gap = s_net - s_sg;
    let detail = format!("sg-gh slope {s_sg:.3} (window [-1.6, -0.6]), mob-net slope {s_net:.3} (<= -1.6), gap {gap:.3} (<= -0.5)");
    check(gap <= -0.5, || detail.clone())?;
    check((-1.6..=-0.6).contains(&s_sg) && s_net <= -1.6, || detail.clone())?;
    Ok(detail)
}

/// Two identical `bench` runs write identical files.
fn c10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &str| -> Result<Vec<u8>, String> {
        let o = Command::new(env!("CARGO_BIN_EXE_gausscub"))
            .args(["bench", "--d", "2", "--alpha", "2", "--integrand", "spline(2)", "--out", out])
            .current_dir(dir.path())
            .env("GAUSSCUB_CACHE_DIR", dir.path().join("cache"))
            .output()
            .map_err(|e| e.to_string())?;
        check(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        fs::read(dir.path().join(out).join("results.csv")).map_err(|e| e.to_string())
    };
    let start = Instant::now();
    let a = run("first")?;
    let sweep = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let b = run("second")?;
    let repeat = start.elapsed().as_secs_f64();
    check(a == b, || "results.csv differs between runs".into())?;
    let rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
    Ok(format!("{rows} rows byte-identical; first run {sweep:.2}s, cached rerun {repeat:.2}s"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "Gauss-Hermite exactness", 1.0, c1),
        (2, "Smolyak structural identities", 10.0, c2),
        (3, "node-count formula", 1.0, c3),
        (4, "fooling-function annihilation", 30.0, c4),
        (5, "suboptimality slope", 120.0, c5),
        (6, "CBC lattice quality", 120.0, c6),
        (7, "Korobov WCE oracle equivalence", 60.0, c7),
        (8, "Moebius transport", 5.0, c8),
        (9, "rate-gap reproduction", 600.0, c9),
        (10, "reproducibility", 600.0, c10),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Ok(d) if secs <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over the {budget}s budget")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {id:>2} {status} {name} [{secs:.2}s / {budget}s]: {detail}");
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
