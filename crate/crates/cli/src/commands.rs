use std::fs;
use std::path::Path;

use num_rational::Ratio;
use osmm_core::algebra::{Counted, Integers, Ring, RingContext};
use osmm_core::bench::{
    bench as run_bench, to_csv, Algorithm, BenchConfig, BenchError, CSV_HEADER,
};
use osmm_core::expander::{
    build_pv_expander, build_random_expander, certified_pv_params, verify_expansion, PvParams,
    DEFAULT_VERIFY_BUDGET,
};
use osmm_core::instance::{gen_instance, InstanceError, InstanceSpec, Planting};
use osmm_core::io::{
    peek_ring, read_graph, read_matrix, read_measurement, read_vector, write_graph, write_matrix,
    write_measurement, write_vector,
};
use osmm_core::osmm::{multiply as plain_multiply, osmm_deterministic, rect_multiply};
use osmm_core::sketch::{sketch_eps, MeasurementMatrix, SketchMode};
use osmm_core::verify::{column_wise_mmv_sparse, VerifierConfig};
use osmm_core::{osmm_randomized, OsmmConfig, OsmmError, SparseMat, Strategy};

use crate::config::Config;
use crate::{
    BenchArgs, CliError, ColmmvArgs, ExpanderGenArgs, ExpanderStatsArgs, ExpanderVerifyArgs,
    GenArgs, MeasureArgs, MultiplyArgs, RecoverArgs, SketchShape,
};

/// Runs `$body` with `$r` bound to a reference to the concrete ring.
macro_rules! with_ring {
    ($ctx:expr, $r:ident => $body:expr) => {
        match $ctx {
            RingContext::Integers => {
                let $r = &Integers;
                $body
            }
            RingContext::PrimeField(f) => {
                let $r = &f;
                $body
            }
            RingContext::BinaryField(f) => {
                let $r = &f;
                $body
            }
        }
    };
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn osmm_err(e: OsmmError) -> CliError {
    match e {
        OsmmError::PromiseViolated(_) | OsmmError::Unresolved(_) => {
            CliError::Failure(e.to_string())
        }
        _ => CliError::Input(e.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn with_path<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(with_path(path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn ring_from(cfg: &Config, flag: Option<&String>) -> Result<RingContext, CliError> {
    let tag = cfg.resolve(flag.cloned(), "ring", "Z".to_string())?;
    tag.parse().map_err(input)
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>, CliError> {
    let bad = || CliError::Input(format!("bad fraction {s:?}"));
    let r = match s.split_once('/') {
        Some((n, d)) => {
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n.trim().parse().map_err(|_| bad())?, d)
        }
        None => Ratio::from_integer(s.trim().parse().map_err(|_| bad())?),
    };
    Ok(r)
}

/// `auto`, `certified`, `identity`, `theory` or `theory:<alpha>`.
fn parse_sketch(s: &str) -> Result<SketchMode, CliError> {
    match s {
        "auto" => Ok(SketchMode::Auto),
        "certified" => Ok(SketchMode::Certified),
        "identity" => Ok(SketchMode::Identity),
        "theory" => Ok(SketchMode::Theory {
            alpha: Ratio::from_integer(1),
        }),
        _ => match s.strip_prefix("theory:") {
            Some(alpha) => Ok(SketchMode::Theory {
                alpha: parse_ratio(alpha)?,
            }),
            None => Err(CliError::Input(format!(
                "unknown sketch {s:?} (expected auto, certified, identity or theory)"
            ))),
        },
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, CliError> {
    match s {
        "auto" => Ok(Strategy::Auto),
        "dense" => Ok(Strategy::Dense),
        "sparse" => Ok(Strategy::Sparse),
        _ => Err(CliError::Input(format!(
            "unknown strategy {s:?} (expected dense, sparse or auto)"
        ))),
    }
}

fn sketch_mode(cfg: &Config, flag: Option<&String>) -> Result<SketchMode, CliError> {
    parse_sketch(&cfg.resolve(flag.cloned(), "sketch", "auto".to_string())?)
}

fn verifier(
    cfg: &Config,
    seed: Option<u64>,
    confidence: Option<u32>,
) -> Result<VerifierConfig, CliError> {
    Ok(VerifierConfig::new(
        cfg.resolve(confidence, "confidence", 2)?,
        cfg.resolve(seed, "seed", 0)?,
    ))
}

pub fn gen(cfg: &Config, args: &GenArgs) -> Result<(), CliError> {
    let ctx = ring_from(cfg, args.ring.as_ref())?;
    let planting: Planting = cfg
        .resolve(args.planting.clone(), "planting", "random".to_string())?
        .parse()
        .map_err(input)?;
    let spec = InstanceSpec {
        n: args.n,
        delta_in: args.delta_in,
        delta_out: args.delta_out,
        seed: cfg.resolve(args.seed, "seed", 0)?,
        planting,
    };
    fs::create_dir_all(&args.out_dir).map_err(with_path(&args.out_dir))?;
    with_ring!(ctx, ring => {
        let inst = gen_instance(ring, &spec).map_err(input)?;
        for (name, m) in [("A.mtx", &inst.a), ("B.mtx", &inst.b), ("C.mtx", &inst.c)] {
            let path = args.out_dir.join(name);
            fs::write(&path, write_matrix(ring, m)).map_err(with_path(&path))?;
        }
        log::info!(
            "n={} nnz(A)={} nnz(B)={} nnz(AB)={}",
            spec.n,
            inst.a.nnz(),
            inst.b.nnz(),
            inst.c.nnz()
        );
        Ok(())
    })
}

fn load_pair<R: Ring>(
    ring: &R,
    a: (&Path, &str),
    b: (&Path, &str),
) -> Result<(SparseMat<R::Elem>, SparseMat<R::Elem>), CliError> {
    Ok((
        read_matrix(ring, a.1).map_err(with_path(a.0))?,
        read_matrix(ring, b.1).map_err(with_path(b.0))?,
    ))
}

/// `ceil(n^(delta/2))`, the budget `t` for which `t^2 >= n^delta`.
fn budget_from_delta(n: usize, delta: f64) -> Result<usize, CliError> {
    if !(0.0..=2.0).contains(&delta) {
        return Err(CliError::Input(format!(
            "delta must lie in [0, 2], got {delta}"
        )));
    }
    Ok(((n as f64).powf(delta / 2.0) - 1e-9).ceil().max(1.0) as usize)
}

pub fn multiply(cfg: &Config, args: &MultiplyArgs) -> Result<(), CliError> {
    let a_text = read_file(&args.a)?;
    let b_text = read_file(&args.b)?;
    let ctx = peek_ring(&a_text).map_err(with_path(&args.a))?;
    let alg: Algorithm = cfg
        .resolve(args.alg.clone(), "alg", "rand".to_string())?
        .parse()
        .map_err(input)?;
    let (t, nnz_bound) = match args.t.or(args.nnz_bound) {
        Some(_) => (args.t, args.nnz_bound),
        None => (cfg.get("t")?, cfg.get("nnz-bound")?),
    };
    let mut osmm = OsmmConfig {
        t,
        nnz_bound,
        strategy: parse_strategy(&cfg.resolve(
            args.strategy.clone(),
            "strategy",
            "auto".to_string(),
        )?)?,
        sketch: sketch_mode(cfg, args.sketch.as_ref())?,
        verifier: verifier(cfg, args.seed, args.confidence)?,
        post_verify: args.post_verify || cfg.get("post-verify")?.unwrap_or(false),
    };
    with_ring!(ctx, ring => {
        let (a, b) = load_pair(ring, (&args.a, &a_text), (&args.b, &b_text))?;
        if let Some(delta) = args.delta {
            osmm.t = Some(budget_from_delta(a.rows(), delta)?);
        }
        let counted = Counted::new(*ring);
        let square = a.rows() == a.cols() && b.shape() == (a.rows(), a.rows());
        let c = match alg {
            Algorithm::Dense => plain_multiply(&counted, &a, &b, Strategy::Dense).map_err(input)?,
            Algorithm::Sparse => plain_multiply(&counted, &a, &b, Strategy::Sparse).map_err(input)?,
            Algorithm::Deterministic => osmm_deterministic(&counted, &a, &b, &osmm).map_err(osmm_err)?,
            Algorithm::Randomized if square => osmm_randomized(&counted, &a, &b, &osmm).map_err(osmm_err)?,
            Algorithm::Randomized => rect_multiply(&counted, &a, &b, &osmm).map_err(osmm_err)?,
        };
        if args.counts {
            let k = counted.counts();
            eprintln!("muls={} adds={} negs={}", k.muls, k.adds, k.negs);
        }
        emit(args.out.as_deref(), &write_matrix(ring, &c))
    })
}

pub fn colmmv(cfg: &Config, args: &ColmmvArgs) -> Result<(), CliError> {
    let a_text = read_file(&args.a)?;
    let b_text = read_file(&args.b)?;
    let c_text = read_file(&args.c)?;
    let ctx = peek_ring(&a_text).map_err(with_path(&args.a))?;
    let vcfg = verifier(cfg, args.seed, args.confidence)?;
    let wrong = with_ring!(ctx, ring => {
        let (a, b) = load_pair(ring, (&args.a, &a_text), (&args.b, &b_text))?;
        let c = read_matrix(ring, &c_text).map_err(with_path(&args.c))?;
        column_wise_mmv_sparse(ring, &a, &b, &c, &vcfg).map_err(input)?
    });
    let line: Vec<String> = wrong.iter().map(|j| (j + 1).to_string()).collect();
    println!("{}", line.join(" "));
    if wrong.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "{} columns differ from AB",
            wrong.len()
        )))
    }
}

fn measurement_matrix(
    cfg: &Config,
    shape: &SketchShape,
    n: usize,
) -> Result<MeasurementMatrix, CliError> {
    match &shape.graph {
        Some(path) => {
            let g = read_graph(&read_file(path)?).map_err(with_path(path))?;
            MeasurementMatrix::from_graph(n, shape.t, g).map_err(input)
        }
        None => MeasurementMatrix::build(n, shape.t, &sketch_mode(cfg, shape.sketch.as_ref())?)
            .map_err(input),
    }
}

pub fn measure(cfg: &Config, args: &MeasureArgs) -> Result<(), CliError> {
    let text = read_file(&args.x)?;
    let ctx = peek_ring(&text).map_err(with_path(&args.x))?;
    with_ring!(ctx, ring => {
        let x = read_vector(ring, &text).map_err(with_path(&args.x))?;
        let h = measurement_matrix(cfg, &args.shape, x.len())?;
        let z = h.apply(ring, &x).map_err(input)?;
        emit(args.out.as_deref(), &write_measurement(ring, &z))
    })
}

pub fn recover(cfg: &Config, args: &RecoverArgs) -> Result<(), CliError> {
    let text = read_file(&args.z)?;
    let ctx = peek_ring(&text).map_err(with_path(&args.z))?;
    let h = measurement_matrix(cfg, &args.shape, args.n)?;
    with_ring!(ctx, ring => {
        let z = read_measurement(ring, &text).map_err(with_path(&args.z))?;
        let rec = h.recover(ring, &z).map_err(input)?;
        log::info!("{} halving steps", rec.iterations);
        if !rec.ok {
            return Err(CliError::Failure("recovery gave up: the signal is not t-sparse".into()));
        }
        if !rec.consistent {
            return Err(CliError::Failure(
                "recovered vector does not reproduce the measurement".into(),
            ));
        }
        emit(args.out.as_deref(), &write_vector(ring, &rec.x))
    })
}

fn required<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{flag} is required for --kind {kind}")))
}

pub fn expander_gen(cfg: &Config, args: &ExpanderGenArgs) -> Result<(), CliError> {
    let g = match args.kind.as_str() {
        "pv" => build_pv_expander(&PvParams {
            left: args.left,
            q: required(args.q, "q", "pv")?,
            poly_len: required(args.poly_len, "poly-len", "pv")?,
            m: args.m.unwrap_or(1),
            h: args.h.unwrap_or(2),
        }),
        "random" => build_random_expander(
            args.left,
            required(args.degree, "degree", "random")?,
            required(args.right, "right", "random")?,
            cfg.resolve(args.seed, "seed", 0)?,
        ),
        "certified" => {
            let eps = match args.eps.as_deref() {
                Some(s) => parse_ratio(s)?,
                None => sketch_eps(),
            };
            let params = certified_pv_params(args.left, required(args.k, "k", "certified")?, eps);
            log::info!("q={} poly_len={}", params.q, params.poly_len);
            build_pv_expander(&params)
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown kind {other:?} (expected pv, random or certified)"
            )))
        }
    }
    .map_err(input)?;
    emit(args.out.as_deref(), &write_graph(&g))
}

pub fn expander_verify(cfg: &Config, args: &ExpanderVerifyArgs) -> Result<(), CliError> {
    let g = read_graph(&read_file(&args.graph)?).map_err(with_path(&args.graph))?;
    let eps = match &args.eps {
        Some(s) => parse_ratio(s)?,
        None => match cfg.get::<String>("eps")? {
            Some(s) => parse_ratio(&s)?,
            None => sketch_eps(),
        },
    };
    let budget = cfg.resolve(args.budget, "budget", DEFAULT_VERIFY_BUDGET)?;
    let check = verify_expansion(&g, args.k, eps, budget).map_err(input)?;
    match check.witness {
        None => {
            println!(
                "ok: ({}, {eps})-expanding, {} subsets checked",
                args.k, check.subsets_checked
            );
            Ok(())
        }
        Some(w) => {
            let set: Vec<String> = w.iter().map(usize::to_string).collect();
            println!("violated by left set {}", set.join(","));
            Err(CliError::Failure(format!(
                "graph is not ({}, {eps})-expanding",
                args.k
            )))
        }
    }
}

pub fn expander_stats(args: &ExpanderStatsArgs) -> Result<(), CliError> {
    let g = read_graph(&read_file(&args.graph)?).map_err(with_path(&args.graph))?;
    println!("left={}", g.left());
    println!("right={}", g.right());
    println!("degree={}", g.degree());
    println!("edges={}", g.edge_count());
    println!("max_overlap={}", g.max_pair_overlap());
    println!("fingerprint={:016x}", g.fingerprint());
    Ok(())
}

pub fn bench(cfg: &Config, args: &BenchArgs) -> Result<(), CliError> {
    let ctx = ring_from(cfg, args.ring.as_ref())?;
    let planting: Planting = cfg
        .resolve(args.planting.clone(), "planting", "random".to_string())?
        .parse()
        .map_err(input)?;
    let algorithms = args
        .alg
        .iter()
        .map(|a| a.parse())
        .collect::<Result<Vec<Algorithm>, _>>()
        .map_err(input)?;
    let bcfg = BenchConfig {
        algorithms,
        repeats: cfg.resolve(args.repeats, "repeats", 3)?,
        osmm: OsmmConfig {
            sketch: sketch_mode(cfg, args.sketch.as_ref())?,
            ..OsmmConfig::default()
        },
    };
    let mut report = format!("{CSV_HEADER}\n");
    for &n in &args.n {
        for &delta_in in &args.delta_in {
            for &delta_out in &args.delta_out {
                for &seed in &args.seeds {
                    let spec = InstanceSpec {
                        n,
                        delta_in,
                        delta_out,
                        seed,
                        planting,
                    };
                    let rows = with_ring!(ctx, ring => run_bench(ring, &[spec], &bcfg));
                    match rows {
                        Ok(rows) => report
                            .push_str(to_csv(&rows).split_once('\n').map_or("", |(_, body)| body)),
                        Err(BenchError::Instance(e @ InstanceError::Infeasible(_))) => {
                            log::warn!(
                                "skipping n={n} delta_in={delta_in} delta_out={delta_out}: {e}"
                            );
                        }
                        Err(BenchError::Osmm(e)) => return Err(osmm_err(e)),
                        Err(e) => return Err(input(e)),
                    }
                }
            }
        }
    }
    emit(args.out.as_deref(), &report)
}
