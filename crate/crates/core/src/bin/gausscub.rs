use std::collections::BTreeMap;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gausscub::bench::{
    cache_dir, cbc_alpha, emit_outputs, fit_by_method, load_config, parse_methods, qmc_points,
    run_bench, Method, SweepOptions,
};
use gausscub::digital_net::{
    higher_order_sobol, interlace_truncated, load_direction_numbers, net_points, net_points_gray,
};
use gausscub::fooling::{log_log_slope, ratio_study, verify_annihilation, FoolingFunction};
use gausscub::gauss_hermite::QuadratureRule;
use gausscub::integrands::{catalog, lookup};
use gausscub::lattice::{cbc_cached, cbc_construct, korobov_wce, prev_prime, KorobovParams};
use gausscub::sparse_grid::{
    isotropic_index_set, level_size, smolyak_quadrature, total_points, LevelSchedule,
};
use gausscub::transforms::{mapped_rule, Flavor, QmcMethod};
use gausscub::{Error, Result};

#[derive(Parser)]
#[command(name = "gausscub", version, about = "Quadrature against the standard Gaussian on R^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss–Hermite nodes and weights, one `node,weight` pair per line.
    Nodes {
        #[arg(long)]
        n: usize,
    },
    /// Isotropic Smolyak sparse-grid quadrature.
    SgIntegrate {
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        level: usize,
        #[arg(long)]
        integrand: String,
        #[arg(long, default_value = "pow2")]
        schedule: LevelSchedule,
        /// Parameter of `prodcos` and `explin`.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Component-by-component lattice construction.
    Cbc {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        /// Skip the on-disk vector cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Stream the points of a (higher-order) Sobol' net as CSV rows.
    Net {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Enumerate in Gray-code order.
        #[arg(long)]
        gray: bool,
        /// Direction-number file replacing the bundled table.
        #[arg(long)]
        directions: Option<PathBuf>,
    },
    /// Lattice or net quadrature mapped to R^d.
    QmcIntegrate {
        #[arg(long)]
        method: QmcMethod,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        alpha: u32,
        /// N = 2^m for nets, the largest prime <= 2^m for lattices.
        #[arg(long)]
        m: u32,
        #[arg(long)]
        integrand: String,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Fooling-function ratio study.
    Foolcheck {
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        /// Also check that the d-variate sparse grid annihilates the witness.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 2048)]
        nmax: usize,
        /// Apply 100 random weight vectors on the nodes instead.
        #[arg(long)]
        verify_annihilation: bool,
    },
    /// Integrand catalog.
    Integrands {
        #[command(subcommand)]
        command: IntegrandsCommand,
    },
    /// Convergence sweeps writing results.csv and plot.gp.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum IntegrandsCommand {
    /// Names, dimensions, exact values and smoothness tags.
    List {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated list [default: all five methods].
    #[arg(long)]
    methods: Option<String>,
    /// [default: 2]
    #[arg(long)]
    d: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    alpha: Option<u32>,
    /// [default: spline(2)]
    #[arg(long)]
    integrand: Option<String>,
    /// [default: results]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter of `prodcos` and `explin` [default: 1].
    #[arg(long)]
    a: Option<f64>,
    /// Net interlacing order [default: 2 alpha + 1].
    #[arg(long)]
    order: Option<usize>,
    /// Record wall-clock times (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
    /// `key = value` file presetting any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli.command, &mut out);
    let flushed = out.flush();
    match result {
        Ok(code) => {
            if let Err(e) = flushed {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn run(cmd: Command, out: &mut impl Write) -> Result<ExitCode> {
    match cmd {
        Command::Nodes { n } => {
            let rule = QuadratureRule::gauss_hermite(n)?;
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                writeln!(out, "{x:.16e},{w:.16e}").map_err(io_err)?;
            }
        }
        Command::SgIntegrate {
            d,
            level,
            integrand,
            schedule,
            a,
        } => {
            let f = lookup(&integrand, d, a)?;
            if level >= d {
                let n_top = level_size(level - d + 1, schedule)? as f64;
                if n_top < ((d - 1) as f64).exp() {
                    eprintln!(
                        "warning: n_(L-d+1) = {n_top} < e^(d-1) = {:.3}; the lower-bound constant does not apply",
                        ((d - 1) as f64).exp()
                    );
                }
            }
            let set = isotropic_index_set(d, level)?;
            let n = total_points(&set, schedule)?;
            let value = smolyak_quadrature(&|x: &[f64]| f.eval(x), &set, schedule)?;
            let err = (value - f.exact_value()).abs();
            writeln!(out, "N,value,abs_error").map_err(io_err)?;
            writeln!(out, "{n},{value:.16e},{err:.16e}").map_err(io_err)?;
        }
        Command::Cbc { n, d, alpha, no_cache } => {
            let v = if no_cache {
                cbc_construct(n, d, &KorobovParams::unweighted(alpha, d)?)?
            } else {
                cbc_cached(&cache_dir(Path::new("cache")), n, d, alpha)?
            };
            let wce = korobov_wce(&v, &KorobovParams::unweighted(alpha, d)?)?;
            let z: Vec<String> = v.z().iter().map(u64::to_string).collect();
            writeln!(out, "{}", z.join(",")).map_err(io_err)?;
            writeln!(out, "{wce:.16e}").map_err(io_err)?;
        }
        Command::Net {
            m,
            d,
            order,
            gray,
            directions,
        } => {
            let g = match directions {
                Some(path) => {
                    let base = load_direction_numbers(&path)?.generating_matrices(order * d, m)?;
                    interlace_truncated(&base, order, 64)?
                }
                None => higher_order_sobol(d, m, order)?,
            };
            let pts = if gray { net_points_gray(&g) } else { net_points(&g) };
            for p in pts {
                let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", row.join(",")).map_err(io_err)?;
            }
        }
        Command::QmcIntegrate {
            method,
            d,
            alpha,
            m,
            integrand,
            a,
        } => {
            if m == 0 || m > 40 {
                return Err(Error::InvalidArgument(format!("m = {m} out of range 1..=40")));
            }
            let f = lookup(&integrand, d, a)?;
            let n = match method.flavor() {
                Flavor::Net => 1u64 << m,
                Flavor::Lattice => prev_prime(1u64 << m)
                    .ok_or_else(|| Error::InvalidArgument(format!("no prime <= 2^{m}")))?,
            };
            if method.flavor() == Flavor::Lattice && alpha > 2 {
                eprintln!(
                    "warning: CBC uses Korobov smoothness {} (closed forms exist for 1 and 2)",
                    cbc_alpha(alpha)
                );
            }
            let opts = SweepOptions {
                cache_dir: Some(cache_dir(Path::new("cache"))),
                ..SweepOptions::default()
            };
            let pts = qmc_points(method, d, alpha, n, &opts)?;
            let value = mapped_rule(method, &pts, alpha)?.apply(|x| f.eval(x))?;
            let err = (value - f.exact_value()).abs();
            writeln!(out, "N,value,abs_error").map_err(io_err)?;
            writeln!(out, "{n},{value:.16e},{err:.16e}").map_err(io_err)?;
        }
        Command::Foolcheck {
            alpha,
            d,
            nmax,
            verify_annihilation: verify,
        } => return foolcheck(alpha, d, nmax, verify, out),
        Command::Integrands {
            command: IntegrandsCommand::List { d, a },
        } => {
            writeln!(out, "name,d,exact,smoothness").map_err(io_err)?;
            for f in catalog(d, a)? {
                writeln!(
                    out,
                    "{},{},{:.16e},{}",
                    f.name(),
                    f.d(),
                    f.exact_value(),
                    f.smoothness()
                )
                .map_err(io_err)?;
            }
        }
        Command::Bench(args) => bench(args, out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn foolcheck(
    alpha: u32,
    d: Option<usize>,
    nmax: usize,
    verify: bool,
    out: &mut impl Write,
) -> Result<ExitCode> {
    if nmax < 2 {
        return Err(Error::InvalidArgument("--nmax must be >= 2".into()));
    }
    if verify {
        writeln!(out, "n,max_abs_q").map_err(io_err)?;
        let mut ok = true;
        let mut n = 2;
        while n <= nmax {
            let worst = verify_annihilation(n, alpha, 100, n as u64)?;
            ok &= worst == 0.0;
            writeln!(out, "{n},{worst:.16e}").map_err(io_err)?;
            n *= 2;
        }
        writeln!(out, "# annihilation {}", if ok { "holds" } else { "FAILED" }).map_err(io_err)?;
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }
    let rows = ratio_study(alpha, nmax)?;
    writeln!(out, "n,integral,norm,ratio").map_err(io_err)?;
    for r in &rows {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.integral, r.norm, r.ratio)
            .map_err(io_err)?;
    }
    let fit: Vec<_> = rows.iter().filter(|r| r.n >= 16).collect();
    if fit.len() >= 2 {
        let ns: Vec<f64> = fit.iter().map(|r| r.n as f64).collect();
        let rs: Vec<f64> = fit.iter().map(|r| r.ratio).collect();
        writeln!(out, "# slope {:.6} (n >= 16)", log_log_slope(&ns, &rs)).map_err(io_err)?;
    }
    if let Some(d) = d {
        // h(x) = p_n(x_1) with n = n_(L-d+1) = 2^(L-d)
        let mut worst = 0.0f64;
        for r in &rows {
            let level = d + r.n.trailing_zeros() as usize;
            let p = FoolingFunction::for_sparse_grid(d, level, LevelSchedule::Pow2, alpha)?;
            let set = isotropic_index_set(d, level)?;
            let s = smolyak_quadrature(&|x: &[f64]| p.eval(x[0]), &set, LevelSchedule::Pow2)?;
            worst = worst.max(s.abs());
        }
        writeln!(out, "# d = {d}: max |S(h)| = {worst:.3e}").map_err(io_err)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs, out: &mut impl Write) -> Result<()> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let known = ["methods", "d", "alpha", "integrand", "out", "a", "order", "timing"];
    if let Some(k) = config.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Malformed {
            what: "config".into(),
            msg: format!("unknown key `{k}`"),
        });
    }
    let parse = |key: &str| -> Option<&String> { config.get(key) };
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::Malformed {
            what: "config".into(),
            msg: format!("`{key} = {v}` is not valid"),
        })
    }

    let methods = match args.methods.or_else(|| parse("methods").cloned()) {
        Some(list) => parse_methods(&list)?,
        None => Method::ALL.to_vec(),
    };
    let d = match args.d {
        Some(v) => v,
        None => parse("d").map(|v| num("d", v)).transpose()?.unwrap_or(2),
    };
    let alpha = match args.alpha {
        Some(v) => v,
        None => parse("alpha").map(|v| num("alpha", v)).transpose()?.unwrap_or(2),
    };
    let a = match args.a {
        Some(v) => v,
        None => parse("a").map(|v| num("a", v)).transpose()?.unwrap_or(1.0),
    };
    let order = match args.order {
        Some(v) => Some(v),
        None => parse("order").map(|v| num("order", v)).transpose()?,
    };
    let timing = args.timing || parse("timing").map(|v| num("timing", v)).transpose()?.unwrap_or(false);
    let integrand = args
        .integrand
        .or_else(|| parse("integrand").cloned())
        .unwrap_or_else(|| "spline(2)".into());
    let dir = args
        .out
        .or_else(|| parse("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    let f = lookup(&integrand, d, a)?;
    let opts = SweepOptions {
        net_order: order,
        cache_dir: Some(cache_dir(Path::new("cache"))),
        timing,
    };
    let records = run_bench(&methods, &f, alpha, &opts)?;
    let fits = fit_by_method(&records);
    emit_outputs(&records, &fits, &dir)?;
    writeln!(out, "method,slope,r_squared,N_min,N_max").map_err(io_err)?;
    for (m, fit) in &fits {
        writeln!(
            out,
            "{m},{:.4},{:.4},{},{}",
            fit.slope, fit.r_squared, fit.window.0, fit.window.1
        )
        .map_err(io_err)?;
    }
    writeln!(out, "# wrote {}", dir.join("results.csv").display()).map_err(io_err)?;
    Ok(())
}
