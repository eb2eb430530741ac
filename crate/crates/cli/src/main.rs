//! Batch front end over the assemblies library.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments,
//! 3 verification failure.

mod config;
mod output;

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use assemblies::additive::{
    exceedance_scan, feller_terms, lil_experiment, replica_process, AdditiveFunction,
    Classification, LilOptions, PhiFamily, PolygonalPath, ProcessForm,
};
use assemblies::additive::feller::gamma_threshold_sequence;
use assemblies::backend::{to_f64, Backend};
use assemblies::dist::{tv_decay_scan, tv_truncated, tv_truncated_auto};
use assemblies::model::{
    check_weakly_logarithmic, exact_law, total_count, BandSide, ComponentVector, WeaklyLogVerdict,
};
use assemblies::sampler::{sample_rejection, stream_rng, ComponentSampler, SequentialSampler};
use assemblies::series::coefficient_ratio_band;
use assemblies::verify::{enumerate_prefixes, ruzsa_check, series_ratio_check};
use assemblies::{AssemblySpec, Rat};

use config::{build_spec, load_config, parse_backend, parse_rational, CResult, ConfigError};
use output::{write_paths_svg, CsvOut};

#[derive(Parser)]
#[command(
    name = "assemblies",
    version,
    about = "Exact laws, Poisson approximation and strong-convergence experiments \
             for weakly logarithmic assemblies",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Family: permutations | set-partitions | ewens[:theta] | explicit
    #[arg(long)]
    spec: Option<String>,
    /// Ewens parameter (rational, e.g. 2 or 1/2)
    #[arg(long)]
    theta: Option<String>,
    /// Poissonization scale u (rational)
    #[arg(long)]
    u: Option<String>,
    /// Key/value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Size n
    #[arg(long)]
    n: Option<usize>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Arithmetic backend: exact | float
    #[arg(long)]
    backend: Option<String>,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG output path (commands that plot)
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Total weighted count W_n of the family at size n
    Count {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Poisson rates lambda_1..lambda_n
    Rates {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check the weakly logarithmic band theta_lo/j <= lambda_j <= theta_hi/j
    CheckLog {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        theta_lo: String,
        #[arg(long)]
        theta_hi: String,
    },
    /// Exact law of one component vector (comma-separated counts)
    Law {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        vector: String,
    },
    /// Total-variation distance of the first r components to independent Poissons
    Tv {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        r: usize,
    },
    /// Distance-decay scan over truncation points r
    TvScan {
        #[command(flatten)]
        common: CommonOpts,
        /// comma-separated r values; default powers of two up to n/4
        #[arg(long)]
        r_list: Option<String>,
        /// lower rate bound theta' driving the theoretical exponent
        #[arg(long)]
        theta_lo: Option<String>,
    },
    /// Draw component vectors (one CSV line per draw)
    Sample {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// rejection | sequential | auto
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: u64,
    },
    /// Functional iterated-logarithm experiment
    Lil {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
    },
    /// Upper/lower-class test series and classification
    Feller {
        #[command(flatten)]
        common: CommonOpts,
        /// ladder depth s >= 2
        #[arg(long, default_value_t = 2)]
        ladder: u32,
        /// twist x of the ladder family
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 4096)]
        terms: usize,
    },
    /// Empirical exceedance probability of a threshold sequence
    Exceed {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long, default_value_t = 400)]
        replicas: usize,
        /// threshold family gamma:<s>:<eps>, e.g. gamma:2:0.5
        #[arg(long)]
        psi: String,
    },
    /// Randomized verification suite of the conditional-probability bound
    Ruzsa {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// exponent theta in (0,1]; default 1
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Distance of a polygonal path to the Strassen set
    Strassen {
        #[command(flatten)]
        common: CommonOpts,
        /// CSV file of t,y breakpoints (starting 0,0 and ending at t=1)
        #[arg(long)]
        input: Option<PathBuf>,
        /// built-in demo path: zero | line:<slope>
        #[arg(long)]
        demo: Option<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// extra grid points per segment
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
    /// Coefficient-ratio check F_m/(e_r D_n) against its theoretical bound
    Prop1 {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        delta: f64,
        /// constant exponent sequence d_j = c (rational); default from spec rates
        #[arg(long)]
        d_const: Option<String>,
    },
    /// Two-sided coefficient band diagnostics n D_n / D(1)
    Band {
        #[command(flatten)]
        common: CommonOpts,
        /// comma-separated n values; default powers of two 16..=n
        #[arg(long)]
        n_list: Option<String>,
    },
}

fn main() {
    if let Ok(threads) = std::env::var("ASSEMBLIES_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; usage problems are exit 2
            let _ = e.print();
            std::process::exit(2);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

/// Options resolved from config file + flags.
struct Resolved {
    spec_name: String,
    theta: Option<Rat>,
    u: Option<Rat>,
    m_table: Option<Vec<num_bigint::BigInt>>,
    w_table: Option<Vec<Rat>>,
    n: Option<usize>,
    seed: u64,
    backend: Option<Backend>,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
}

impl Resolved {
    fn spec(&self, n_cap: usize) -> CResult<AssemblySpec> {
        build_spec(
            &self.spec_name,
            self.theta.as_ref(),
            self.u.as_ref(),
            self.m_table.as_deref(),
            self.w_table.as_deref(),
            n_cap,
        )
    }

    fn need_n(&self) -> CResult<usize> {
        self.n
            .ok_or_else(|| ConfigError("missing required size --n".into()))
    }
}

fn resolve(common: &CommonOpts) -> CResult<Resolved> {
    let file = match &common.config {
        Some(path) => load_config(path)?,
        None => Default::default(),
    };
    let theta = match &common.theta {
        Some(t) => Some(parse_rational(t)?),
        None => file.theta,
    };
    let u = match &common.u {
        Some(t) => Some(parse_rational(t)?),
        None => file.u,
    };
    let backend = match &common.backend {
        Some(b) => Some(parse_backend(b)?),
        None => file.backend,
    };
    let spec_name = common
        .spec
        .clone()
        .or(file.spec)
        .ok_or_else(|| ConfigError("missing spec (flag --spec or config key spec)".into()))?;
    Ok(Resolved {
        spec_name,
        theta,
        u,
        m_table: file.m_table,
        w_table: file.w_table,
        n: common.n.or(file.n),
        seed: common.seed.or(file.seed).unwrap_or(0),
        backend,
        out: common.out.clone().or(file.out),
        svg: common.svg.clone().or(file.svg),
    })
}

fn lib_err(e: assemblies::Error) -> ConfigError {
    ConfigError(e.to_string())
}

fn run(cli: Cli) -> CResult<i32> {
    match cli.command {
        Command::Count { common } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let count = total_count(&spec, n).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some("exact"))?;
            out.row(&hdr(["spec", "n", "count", "backend"]))?;
            out.row(&[spec.name().into(), n.to_string(), rat_str(&count), "exact".into()])?;
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Rates { common } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let rates = spec.derive_rates(n).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some("exact"))?;
            out.row(&hdr(["j", "lambda", "lambda_float"]))?;
            for j in 1..=n {
                out.row(&[
                    j.to_string(),
                    rat_str(rates.exact(j)),
                    fmt_f64(rates.float(j)),
                ])?;
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::CheckLog {
            common,
            theta_lo,
            theta_hi,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let rates = spec.derive_rates(n).map_err(lib_err)?;
            let lo = parse_rational(&theta_lo)?;
            let hi = parse_rational(&theta_hi)?;
            let verdict = check_weakly_logarithmic(&rates, &lo, &hi).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some("exact"))?;
            out.row(&hdr(["verdict", "witness_j", "bound"]))?;
            match verdict {
                WeaklyLogVerdict::Pass => out.row(&["pass".into(), String::new(), String::new()])?,
                WeaklyLogVerdict::Fail { j, side } => out.row(&[
                    "fail".into(),
                    j.to_string(),
                    match side {
                        BandSide::Lower => "lower".into(),
                        BandSide::Upper => "upper".into(),
                    },
                ])?,
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Law { common, vector } => {
            let rv = resolve(&common)?;
            let counts: Result<Vec<u32>, _> =
                vector.split(',').map(|c| c.trim().parse::<u32>()).collect();
            let counts =
                counts.map_err(|_| ConfigError(format!("bad component vector {vector:?}")))?;
            let s = ComponentVector::new(counts);
            let n = s.dim();
            let spec = rv.spec(n)?;
            let p = exact_law(&spec, &s).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some("exact"))?;
            out.row(&hdr(["vector", "probability", "probability_float"]))?;
            out.row(&[s.to_string(), rat_str(&p), fmt_f64(to_f64(&p))])?;
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Tv { common, r } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let rates = spec.derive_rates(n).map_err(lib_err)?;
            let res = match rv.backend {
                Some(b) => tv_truncated(&rates, n, r, b),
                None => tv_truncated_auto(&rates, n, r),
            }
            .map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some(&res.backend.to_string()))?;
            out.row(&hdr(["r", "n", "tv", "backend"]))?;
            out.row(&[
                r.to_string(),
                n.to_string(),
                fmt_f64(res.tv),
                res.backend.to_string(),
            ])?;
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::TvScan {
            common,
            r_list,
            theta_lo,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let rs: Vec<usize> = match r_list {
                Some(spec_str) => spec_str
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ConfigError(format!("bad r list {spec_str:?}")))?,
                None => (1..)
                    .map(|k| 1usize << k)
                    .take_while(|&r| 4 * r <= n)
                    .collect(),
            };
            let theta_lo = match theta_lo {
                Some(t) => to_f64(&parse_rational(&t)?),
                None => spec
                    .ewens_theta()
                    .map(|t| to_f64(&t))
                    .ok_or_else(|| ConfigError("non-Ewens spec needs --theta-lo".into()))?,
            };
            let report = tv_decay_scan(&spec, n, &rs, theta_lo).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, None)?;
            out.comment(&format!(
                "c={:.6} c0={:.6} c1={:.6} C_fit={:.6} slope={:.6}",
                report.exponents.c,
                report.exponents.c0,
                report.exponents.c1,
                report.c_fit,
                report.slope
            ))?;
            out.row(&hdr(["r", "n", "tv", "bound", "backend"]))?;
            for row in &report.rows {
                out.row(&[
                    row.r.to_string(),
                    row.n.to_string(),
                    fmt_f64(row.tv),
                    fmt_f64(row.bound),
                    row.backend.to_string(),
                ])?;
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Sample {
            common,
            replicas,
            method,
            max_attempts,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let mut out = csv(&rv, &spec, None)?;
            out.comment(&format!(
                "spec={} n={} seed={} method={}",
                spec.name(),
                n,
                rv.seed,
                method
            ))?;
            match method.as_str() {
                "rejection" => {
                    let rates = spec.derive_rates(n).map_err(lib_err)?;
                    for rep in 0..replicas {
                        let mut rng = stream_rng(rv.seed, "sample-rejection", rep as u64);
                        let (v, attempts) =
                            sample_rejection(&rates, n, &mut rng, max_attempts).map_err(lib_err)?;
                        out.comment(&format!("replica {rep}: attempts={attempts}"))?;
                        out.row(&[v.to_string()])?;
                    }
                }
                "sequential" => {
                    let rates = spec.derive_rates(n).map_err(lib_err)?;
                    let sampler = SequentialSampler::new(&rates, n).map_err(lib_err)?;
                    for rep in 0..replicas {
                        let mut rng = stream_rng(rv.seed, "sample-sequential", rep as u64);
                        out.row(&[sampler.sample(&mut rng).to_string()])?;
                    }
                }
                "auto" => {
                    let sampler = ComponentSampler::for_spec(&spec, n).map_err(lib_err)?;
                    for rep in 0..replicas {
                        let mut rng = stream_rng(rv.seed, "sample-auto", rep as u64);
                        out.row(&[sampler.sample(&mut rng).to_string()])?;
                    }
                }
                other => return Err(ConfigError(format!("unknown method {other:?}"))),
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Lil {
            common,
            n1,
            replicas,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let n1 = n1.unwrap_or_else(|| (n / 2).max(1));
            let h = AdditiveFunction::component_count();
            let opts = LilOptions::default();
            let summary =
                lil_experiment(&spec, &h, n, n1, replicas, rv.seed, opts).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, None)?;
            out.comment(&format!(
                "n={} n1={} replicas={} grid={:?}",
                n, n1, replicas, summary.m_grid
            ))?;
            out.comment(&format!(
                "median_max_dist={:.6} endpoint_outside_frac={:.6} pair_outside_frac={:.6} growth_condition_sup={:.6}",
                summary.median_max_dist,
                summary.endpoint_outside_frac,
                summary.pair_outside_frac,
                summary.growth_condition_sup
            ))?;
            out.row(&hdr(["record", "index", "value_a", "value_b"]))?;
            for (rep, d) in summary.max_dist.iter().enumerate() {
                out.row(&["max_dist".into(), rep.to_string(), fmt_f64(*d), String::new()])?;
            }
            for (i, e) in summary.endpoints.iter().enumerate() {
                out.row(&["endpoint".into(), i.to_string(), fmt_f64(*e), String::new()])?;
            }
            for (i, (u, v)) in summary.pairs.iter().enumerate() {
                out.row(&["pair".into(), i.to_string(), fmt_f64(*u), fmt_f64(*v)])?;
            }
            out.finish().map_err(io_err)?;
            if let Some(svg_path) = &rv.svg {
                let mut curves = Vec::new();
                let mut built = Vec::new();
                for rep in 0..replicas.min(3) as u64 {
                    let path = replica_process(&spec, &h, n, n, rep, rv.seed, opts)
                        .map_err(lib_err)?;
                    built.push((format!("replica {rep}"), path));
                }
                let y_range = built
                    .iter()
                    .map(|(_, p)| p.sup_norm())
                    .fold(1.2f64, f64::max);
                for (label, p) in &built {
                    curves.push((label.clone(), p));
                }
                write_paths_svg(svg_path, &curves, y_range).map_err(io_err)?;
            }
            Ok(0)
        }
        Command::Feller {
            common,
            ladder,
            x,
            terms,
        } => {
            let rv = resolve(&common)?;
            let n = rv.n.unwrap_or(terms).max(terms);
            let spec = rv.spec(n)?;
            let rates = spec.derive_rates(terms).map_err(lib_err)?;
            let h = AdditiveFunction::component_count();
            let report = feller_terms(&h, &rates, &PhiFamily::GammaLadder { s: ladder, x }, terms)
                .map_err(lib_err)?;
            let mut out = csv(&rv, &spec, None)?;
            out.comment(&format!(
                "classification={} condition_sup={:.6}",
                match report.classification {
                    Classification::Converges => "converges",
                    Classification::Diverges => "diverges",
                    Classification::Inconclusive => "inconclusive",
                },
                report.condition_sup
            ))?;
            out.row(&hdr(["j", "term", "partial_sum", "threshold"]))?;
            // geometric subsample keeps the table small
            let mut j = 1usize;
            while j <= terms {
                out.row(&[
                    j.to_string(),
                    fmt_f64(report.terms[j - 1]),
                    fmt_f64(report.partial_sums[j - 1]),
                    fmt_f64(report.thresholds[j - 1]),
                ])?;
                j = (j * 2).max(j + 1);
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Exceed {
            common,
            n1,
            replicas,
            psi,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let n1 = n1.unwrap_or_else(|| (n / 2).max(1));
            let h = AdditiveFunction::component_count();
            let rates = spec.derive_rates(n).map_err(lib_err)?;
            let parts: Vec<&str> = psi.split(':').collect();
            let thresholds = match parts.as_slice() {
                ["gamma", s, eps] => {
                    let s: u32 = s
                        .parse()
                        .map_err(|_| ConfigError(format!("bad ladder depth in {psi:?}")))?;
                    let eps: f64 = eps
                        .parse()
                        .map_err(|_| ConfigError(format!("bad ladder twist in {psi:?}")))?;
                    gamma_threshold_sequence(&h, &rates, s, eps, n).map_err(lib_err)?
                }
                _ => return Err(ConfigError(format!(
                    "psi must look like gamma:<s>:<eps>, got {psi:?}"
                ))),
            };
            let est = exceedance_scan(
                &spec,
                &h,
                &thresholds,
                n,
                n1,
                replicas,
                rv.seed,
                ProcessForm::Indicator,
            )
            .map_err(lib_err)?;
            let mut out = csv(&rv, &spec, None)?;
            out.row(&hdr(["psi", "n", "n1", "replicas", "estimate", "std_error"]))?;
            out.row(&[
                psi.clone(),
                n.to_string(),
                n1.to_string(),
                replicas.to_string(),
                fmt_f64(est.estimate),
                fmt_f64(est.std_error),
            ])?;
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Ruzsa {
            common,
            instances,
            exponent,
        } => {
            let rv = resolve(&common)?;
            let mut out_rows = Vec::new();
            let mut any_fail = false;
            let presets: Vec<AssemblySpec> = vec![
                AssemblySpec::permutations(16),
                AssemblySpec::ewens(parse_rational("1/2")?, 16).map_err(lib_err)?,
                AssemblySpec::ewens(parse_rational("2")?, 16).map_err(lib_err)?,
                AssemblySpec::set_partitions(16),
            ];
            use rand::Rng;
            let mut rng = stream_rng(rv.seed, "ruzsa-suite", 0);
            for inst in 0..instances {
                let spec = &presets[rng.gen_range(0..presets.len())];
                let n = rng.gen_range(3..=8usize);
                let theta = exponent.unwrap_or_else(|| [0.25, 0.5, 0.75, 1.0][rng.gen_range(0..4)]);
                let rates = spec.derive_rates(n).map_err(lib_err)?;
                let pool = enumerate_prefixes(n + 2, n, n);
                let size = rng.gen_range(1..=12usize.min(pool.len()));
                let mut u_set = BTreeSet::new();
                while u_set.len() < size {
                    u_set.insert(pool[rng.gen_range(0..pool.len())].clone());
                }
                let u_vec: Vec<ComponentVector> = u_set.into_iter().collect();
                let report = ruzsa_check(&rates, n, &u_vec, theta).map_err(lib_err)?;
                any_fail |= !report.pass;
                out_rows.push([
                    inst.to_string(),
                    spec.name().to_string(),
                    n.to_string(),
                    fmt_f64(theta),
                    fmt_f64(report.lhs),
                    fmt_f64(report.rhs),
                    fmt_f64(report.constants.c_total),
                    if report.pass { "pass" } else { "FAIL" }.to_string(),
                ]);
            }
            let spec0 = &presets[0];
            let mut out = csv(&rv, spec0, None)?;
            out.comment(&format!("instances={instances} seed={}", rv.seed))?;
            out.row(&hdr([
                "instance", "spec", "n", "theta", "lhs", "rhs", "C", "result",
            ]))?;
            for row in &out_rows {
                out.row(row)?;
            }
            out.comment(if any_fail { "summary: FAIL" } else { "summary: pass" })?;
            out.finish().map_err(io_err)?;
            Ok(if any_fail { 3 } else { 0 })
        }
        Command::Strassen {
            common,
            input,
            demo,
            tol,
            refine,
        } => {
            let rv = resolve(&common)?;
            let path = match (&input, &demo) {
                (Some(file), None) => read_path_csv(file)?,
                (None, Some(d)) => demo_path(d)?,
                _ => return Err(ConfigError("need exactly one of --input / --demo".into())),
            };
            let dist = assemblies::additive::strassen::strassen_distance_with(&path, tol, refine)
                .map_err(lib_err)?;
            let spec = rv.spec(8).unwrap_or_else(|_| AssemblySpec::permutations(8));
            let mut out = csv(&rv, &spec, None)?;
            out.row(&hdr(["distance", "tol", "refine"]))?;
            out.row(&[fmt_f64(dist), fmt_f64(tol), refine.to_string()])?;
            out.finish().map_err(io_err)?;
            if let Some(svg_path) = &rv.svg {
                write_paths_svg(
                    svg_path,
                    &[("input".to_string(), &path)],
                    path.sup_norm().max(1.2),
                )
                .map_err(io_err)?;
            }
            Ok(0)
        }
        Command::Prop1 {
            common,
            r,
            m,
            eta,
            delta,
            d_const,
        } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let d: Vec<Rat> = match d_const {
                Some(c) => vec![parse_rational(&c)?; n],
                None => {
                    let spec = rv.spec(n)?;
                    let rates = spec.derive_rates(n).map_err(lib_err)?;
                    (1..=n)
                        .map(|j| rates.exact(j) * Rat::from_integer(j.into()))
                        .collect()
                }
            };
            let report = series_ratio_check(&d, n, r, m, eta, delta).map_err(lib_err)?;
            let spec = rv.spec(1).unwrap_or_else(|_| AssemblySpec::permutations(1));
            let mut out = csv(&rv, &spec, Some("exact"))?;
            out.row(&hdr(["n", "r", "m", "eta", "delta", "ratio_minus_one", "bound", "c"]))?;
            out.row(&[
                n.to_string(),
                r.to_string(),
                m.to_string(),
                fmt_f64(eta),
                fmt_f64(delta),
                fmt_f64(report.ratio_minus_one),
                fmt_f64(report.bound),
                fmt_f64(report.c),
            ])?;
            out.finish().map_err(io_err)?;
            Ok(0)
        }
        Command::Band { common, n_list } => {
            let rv = resolve(&common)?;
            let n = rv.need_n()?;
            let spec = rv.spec(n)?;
            let rates = spec.derive_rates(n).map_err(lib_err)?;
            let ns: Vec<usize> = match n_list {
                Some(list) => list
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ConfigError(format!("bad n list {list:?}")))?,
                None => (4..)
                    .map(|k| 1usize << k)
                    .take_while(|&v| v <= n)
                    .collect(),
            };
            let rows = coefficient_ratio_band(&rates, &ns).map_err(lib_err)?;
            let mut out = csv(&rv, &spec, Some("float"))?;
            out.row(&hdr(["n", "ratio", "normalized"]))?;
            for row in rows {
                out.row(&[row.n.to_string(), fmt_f64(row.ratio), fmt_f64(row.normalized)])?;
            }
            out.finish().map_err(io_err)?;
            Ok(0)
        }
    }
}

fn csv(rv: &Resolved, spec: &AssemblySpec, backend: Option<&str>) -> CResult<CsvOut> {
    let mut out = CsvOut::create(rv.out.as_deref()).map_err(io_err)?;
    out.header(&spec.canonical_string(), Some(rv.seed), backend, &[])
        .map_err(io_err)?;
    Ok(out)
}

fn hdr<const N: usize>(names: [&str; N]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fmt_f64(v: f64) -> String {
    // shortest round-trip formatting keeps outputs byte-stable
    format!("{v}")
}

fn rat_str(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn io_err(e: std::io::Error) -> ConfigError {
    ConfigError(format!("io error: {e}"))
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        io_err(e)
    }
}

fn read_path_csv(file: &std::path::Path) -> CResult<PolygonalPath> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", file.display())))?;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let (t, y) = line
            .split_once(',')
            .ok_or_else(|| ConfigError(format!("bad breakpoint line {line:?}")))?;
        ts.push(
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad t in {line:?}")))?,
        );
        ys.push(
            y.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad y in {line:?}")))?,
        );
    }
    PolygonalPath::new(ts, ys).map_err(lib_err)
}

fn demo_path(spec: &str) -> CResult<PolygonalPath> {
    match spec {
        "zero" => Ok(PolygonalPath::zero()),
        other => {
            if let Some(slope) = other.strip_prefix("line:") {
                let s: f64 = slope
                    .parse()
                    .map_err(|_| ConfigError(format!("bad slope {slope:?}")))?;
                Ok(PolygonalPath::line(s))
            } else {
                Err(ConfigError(format!("unknown demo path {other:?}")))
            }
        }
    }
}
