mod report;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hypergraphon::density::{density_exact_bounded, density_mc, density_vector_bounded, MC_CONFIDENCE};
use hypergraphon::hypergraph::{density_finite_bounded, enumerate_hypergraphs, enumeration_prefix_len};
use hypergraphon::metrics::{delta1_bracket, delta_truncated_from_vectors, delta_w_lower_from_vectors};
use hypergraphon::sampler::{convergence_report, sample, SampleConfig};
use hypergraphon::selector::{orbit_partition, select, transversal};
use hypergraphon::{distance_d1, AnyStep, Caps, FiniteHypergraph, StepHypergraphon, Strategy};

use report::{big, float, rat, render, render_failure, Artifact, Failure, Input, Manifest};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal or I/O error
  2  usage error (bad flags or arguments)
  3  malformed or incompatible input file
  4  a cap or work bound was hit, or the selector did not stabilize
  5  selftest failure

Caps (--caps key=value,...): index, scan, perms, work, steps, universe.";

#[derive(Parser)]
#[command(name = "hypergraphon", version, about = "Step hypergraphons: densities, distances and canonical forms", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// t(F, W) exactly or by Monte Carlo, density vectors, or the quotient Q(W)
    Density(Opts),
    /// d_1, truncated δ, the δ_w lower bound, or a δ_1 bracket with witness
    Distance(Opts),
    /// Canonical representative of the orbit of W with the selector trace
    Canon(Opts),
    /// One representative per orbit at a given arity and resolution
    Transversal(Opts),
    /// Draw G(n, W)
    Sample(Opts),
    /// Discrepancy table |t(F, G_n) − t(F, W)| over a schedule of n
    Converge(Opts),
    /// Invariant suite at k=2, m=2 plus a k=3 smoke subset
    Selftest(Opts),
}

#[derive(Args, Clone, Debug)]
struct Opts {
    /// Primary input file (hypergraphon, or hypergraph for `density`)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Second input: the test hypergraph F, or the second hypergraphon
    #[arg(long)]
    input2: Option<PathBuf>,
    /// Artifact destination; without it the artifact is embedded in the report
    #[arg(long)]
    output: Option<PathBuf>,
    /// density: exact|mc|vector|q; distance: d1|delta|delta_w|delta1
    #[arg(long)]
    mode: Option<String>,
    /// Number N of enumerated test hypergraphs
    #[arg(long)]
    trunc: Option<u64>,
    /// δ_1 search: exhaustive|greedy|anneal
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Search iterations, or Monte Carlo samples
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Scan limits, e.g. index=100000,scan=1000000,perms=720
    #[arg(long)]
    caps: Option<String>,
    /// sample: number of vertices
    #[arg(long)]
    vertices: Option<usize>,
    /// transversal: arity k
    #[arg(long)]
    arity: Option<usize>,
    /// transversal: resolution m
    #[arg(long)]
    resolution: Option<usize>,
    /// converge: comma-separated vertex counts
    #[arg(long)]
    schedule: Option<String>,
    /// converge: samples per vertex count
    #[arg(long)]
    repeats: Option<u64>,
}

struct Outcome {
    manifest: Manifest,
    result: Value,
    artifact: Artifact,
    code: i32,
}

impl Outcome {
    fn ok(manifest: Manifest, result: Value, artifact: Artifact) -> Self {
        Outcome {
            manifest,
            result,
            artifact,
            code: 0,
        }
    }
}

fn parse_caps(list: Option<&str>) -> Result<Caps, Failure> {
    let mut caps = Caps::default();
    let Some(list) = list else { return Ok(caps) };
    for part in list.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("cap {part:?} is not key=value")))?;
        let value: u128 = value
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("cap {key} needs a nonnegative integer")))?;
        match key.trim() {
            "index" => caps.index = value,
            "scan" => caps.scan = value,
            "perms" => caps.max_permutations = value,
            "work" => caps.work = value,
            "steps" => caps.max_steps = value.try_into().map_err(|_| Failure::usage("steps cap too large"))?,
            "universe" => caps.universe = value,
            other => return Err(Failure::usage(format!("unknown cap {other:?}"))),
        }
    }
    Ok(caps)
}

fn caps_value(caps: &Caps) -> Value {
    json!({
        "index": big(caps.index),
        "scan": big(caps.scan),
        "perms": big(caps.max_permutations),
        "work": big(caps.work),
        "steps": caps.max_steps,
        "universe": big(caps.universe),
    })
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    path.as_deref()
        .ok_or_else(|| Failure::usage(format!("--{flag} is required")))
}

fn read_graphon(input: &Input) -> Result<StepHypergraphon, Failure> {
    match AnyStep::from_json(&input.text).map_err(|e| Failure::input(format!("{}: {e}", input.role)))? {
        AnyStep::Indicator(w) => Ok(w),
        AnyStep::Lower(_) => Err(Failure::input(format!(
            "{}: a lower step function was given where an indicator hypergraphon is needed",
            input.role
        ))),
    }
}

fn read_hypergraph(input: &Input) -> Result<FiniteHypergraph, Failure> {
    FiniteHypergraph::from_json(&input.text).map_err(|e| Failure::input(format!("{}: {e}", input.role)))
}

fn is_hypergraph_file(input: &Input) -> bool {
    serde_json::from_str::<Value>(&input.text)
        .ok()
        .and_then(|v| v.as_object().map(|o| o.contains_key("edges")))
        .unwrap_or(false)
}

fn default_trunc(k: usize) -> u64 {
    enumeration_prefix_len(k, 3).min(64) as u64
}

fn check_arity(a: usize, b: usize) -> Result<(), Failure> {
    if a != b {
        return Err(Failure::input(format!("arity mismatch between inputs: {a} vs {b}")));
    }
    Ok(())
}

fn density(o: &Opts, caps: &Caps) -> Result<Outcome, Failure> {
    let input = Input::read("input", require(&o.input, "input")?)?;
    let mode = o.mode.as_deref().unwrap_or("exact");
    let finite = is_hypergraph_file(&input);
    let second = o.input2.as_deref().map(|p| Input::read("input2", p)).transpose()?;
    let mut inputs = vec![&input];
    inputs.extend(second.as_ref());
    let mut manifest = Manifest::new("density", &inputs);
    manifest.param("mode", mode);
    manifest.param("caps", caps_value(caps));
    let target_k;
    let graphon;
    let host;
    if finite {
        let h = read_hypergraph(&input)?;
        target_k = h.k();
        host = Some(h);
        graphon = None;
    } else {
        let w = read_graphon(&input)?;
        target_k = w.k();
        graphon = Some(w);
        host = None;
    }
    let f = second.as_ref().map(read_hypergraph).transpose()?;
    if let Some(f) = &f {
        check_arity(f.k(), target_k)?;
    }
    let need_f = || {
        f.as_ref()
            .ok_or_else(|| Failure::usage(format!("--input2 (the test hypergraph F) is required for mode {mode}")))
    };
    match mode {
        "exact" => {
            let f = need_f()?;
            let value = match (&graphon, &host) {
                (Some(w), _) => density_exact_bounded(f, w, caps.work)?,
                (_, Some(h)) => density_finite_bounded(f, h, caps.work)?,
                _ => unreachable!(),
            };
            Ok(Outcome::ok(manifest, json!({"density": rat(&value)}), Artifact::None))
        }
        "mc" => {
            let f = need_f()?;
            let w = graphon
                .as_ref()
                .ok_or_else(|| Failure::usage("mode mc needs a hypergraphon input"))?;
            let samples = o.budget.unwrap_or(100_000);
            manifest.param("budget", samples);
            manifest.param("seed", o.seed);
            let est = density_mc(f, w, samples, o.seed)?;
            let result = json!({
                "mean": float(est.mean),
                "half_width": float(est.half_width),
                "confidence": float(MC_CONFIDENCE),
                "hits": est.hits,
                "samples": est.samples,
            });
            Ok(Outcome::ok(manifest, result, Artifact::None))
        }
        "vector" => {
            let n = o.trunc.unwrap_or_else(|| default_trunc(target_k));
            manifest.param("trunc", n);
            let values = match (&graphon, &host) {
                (Some(w), _) => density_vector_bounded(w, n, caps.work)?.values,
                (_, Some(h)) => (1..=n)
                    .map(|i| density_finite_bounded(&enumerate_hypergraphs(target_k, i)?, h, caps.work))
                    .collect::<hypergraphon::Result<Vec<_>>>()?,
                _ => unreachable!(),
            };
            let result = json!({"densities": values.iter().map(rat).collect::<Vec<_>>()});
            Ok(Outcome::ok(manifest, result, Artifact::None))
        }
        "q" => {
            let w = graphon
                .as_ref()
                .ok_or_else(|| Failure::usage("mode q needs a hypergraphon input"))?;
            let q = w.quotient_q();
            let result = json!({"mean": rat(&q.mean()), "measure": rat(&w.measure())});
            Ok(Outcome::ok(manifest, result, Artifact::Json(q.to_json())))
        }
        other => Err(Failure::usage(format!("unknown density mode {other:?}"))),
    }
}

fn distance(o: &Opts, caps: &Caps) -> Result<Outcome, Failure> {
    let a = Input::read("input", require(&o.input, "input")?)?;
    let b = Input::read("input2", require(&o.input2, "input2")?)?;
    let mode = o.mode.as_deref().unwrap_or("d1");
    let mut manifest = Manifest::new("distance", &[&a, &b]);
    manifest.param("mode", mode);
    let (u, w) = (read_graphon(&a)?, read_graphon(&b)?);
    check_arity(u.k(), w.k())?;
    let trunc = o.trunc.unwrap_or_else(|| default_trunc(u.k()));
    let vectors = |manifest: &mut Manifest| -> Result<_, Failure> {
        manifest.param("trunc", trunc);
        manifest.param("caps", caps_value(caps));
        Ok((
            density_vector_bounded(&u, trunc, caps.work)?,
            density_vector_bounded(&w, trunc, caps.work)?,
        ))
    };
    match mode {
        "d1" => Ok(Outcome::ok(
            manifest,
            json!({"d1": rat(&distance_d1(&u, &w)?)}),
            Artifact::None,
        )),
        "delta" => {
            let (du, dw) = vectors(&mut manifest)?;
            let d = delta_truncated_from_vectors(&du, &dw)?;
            let result = json!({"value": rat(&d.value), "tail_bound": rat(&d.tail_bound)});
            Ok(Outcome::ok(manifest, result, Artifact::None))
        }
        "delta_w" => {
            let (du, dw) = vectors(&mut manifest)?;
            let lower = delta_w_lower_from_vectors(&du, &dw)?;
            Ok(Outcome::ok(manifest, json!({"lower": rat(&lower)}), Artifact::None))
        }
        "delta1" => {
            let strategy = o.strategy.unwrap_or(Strategy::Exhaustive);
            let budget = o.budget.unwrap_or(1000);
            manifest.param("strategy", strategy.to_string());
            manifest.param("budget", budget);
            manifest.param("seed", o.seed);
            manifest.param("trunc", trunc);
            manifest.param("caps", caps_value(caps));
            let br = delta1_bracket(&u, &w, trunc, strategy, budget, o.seed, caps)?;
            let result = json!({"lower": rat(&br.lower), "upper": rat(&br.upper)});
            Ok(Outcome::ok(manifest, result, Artifact::Json(br.witness.to_json())))
        }
        other => Err(Failure::usage(format!("unknown distance mode {other:?}"))),
    }
}

fn canon(o: &Opts, caps: &Caps) -> Result<Outcome, Failure> {
    let input = Input::read("input", require(&o.input, "input")?)?;
    let mut manifest = Manifest::new("canon", &[&input]);
    manifest.param("caps", caps_value(caps));
    let w = read_graphon(&input)?;
    let trace = select(&w, caps)?;
    let steps: Vec<Value> = trace
        .steps
        .iter()
        .map(|s| {
            json!({
                "n": s.n,
                "l": big(s.f_index),
                "p": big(s.h_index),
                "gap": rat(&s.gap),
                "f_upper": rat(&s.f_upper),
            })
        })
        .collect();
    let result = json!({
        "complete": trace.complete,
        "stabilized_at": trace.stabilized_at,
        "k": trace.result.k(),
        "m": trace.result.m(),
        "steps": steps,
    });
    Ok(Outcome {
        manifest,
        result,
        artifact: Artifact::Json(trace.result.to_json()),
        code: if trace.complete { 0 } else { 4 },
    })
}

fn transversal_cmd(o: &Opts, caps: &Caps) -> Result<Outcome, Failure> {
    let k = o.arity.ok_or_else(|| Failure::usage("--arity is required"))?;
    let m = o.resolution.ok_or_else(|| Failure::usage("--resolution is required"))?;
    if m == 0 {
        return Err(Failure::usage("--resolution must be positive"));
    }
    let mut manifest = Manifest::new("transversal", &[]);
    manifest.param("arity", k);
    manifest.param("resolution", m);
    manifest.param("caps", caps_value(caps));
    let t = transversal(k, m, caps)?;
    let orbits = orbit_partition(k, m, caps)?.count;
    let reps: Vec<String> = t
        .representatives
        .iter()
        .map(|r| r.to_json().trim_end().to_string())
        .collect();
    let body = format!("[{}]\n", reps.join(","));
    let result = json!({
        "universe": t.universe,
        "representatives": t.representatives.len(),
        "orbit_count": orbits,
        "incomplete": t.incomplete,
        "consistent": t.incomplete == 0 && orbits == t.representatives.len(),
    });
    Ok(Outcome {
        manifest,
        result,
        artifact: Artifact::Json(body),
        code: if t.incomplete == 0 { 0 } else { 4 },
    })
}

fn sample_cmd(o: &Opts) -> Result<Outcome, Failure> {
    let input = Input::read("input", require(&o.input, "input")?)?;
    let n = o.vertices.ok_or_else(|| Failure::usage("--vertices is required"))?;
    let mut manifest = Manifest::new("sample", &[&input]);
    manifest.param("vertices", n);
    manifest.param("seed", o.seed);
    let w = read_graphon(&input)?;
    let g = sample(SampleConfig { w: &w, n, seed: o.seed })?;
    let result = json!({"n": g.n(), "edges": g.edge_count()});
    Ok(Outcome::ok(manifest, result, Artifact::Json(g.to_json())))
}

fn converge(o: &Opts, caps: &Caps) -> Result<Outcome, Failure> {
    let input = Input::read("input", require(&o.input, "input")?)?;
    let second = o.input2.as_deref().map(|p| Input::read("input2", p)).transpose()?;
    let mut inputs = vec![&input];
    inputs.extend(second.as_ref());
    let mut manifest = Manifest::new("converge", &inputs);
    let w = read_graphon(&input)?;
    let schedule: Vec<usize> = o
        .schedule
        .as_deref()
        .unwrap_or("25,50,100,200")
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad schedule entry {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let repeats = o.repeats.unwrap_or(5);
    let fs = match &second {
        Some(f) => {
            let f = read_hypergraph(f)?;
            check_arity(f.k(), w.k())?;
            vec![(0, f)]
        }
        None => {
            let n = o.trunc.unwrap_or_else(|| default_trunc(w.k()));
            manifest.param("trunc", n);
            (1..=n)
                .map(|i| Ok((i, enumerate_hypergraphs(w.k(), i)?)))
                .collect::<hypergraphon::Result<Vec<_>>>()?
        }
    };
    manifest.param("schedule", schedule.clone());
    manifest.param("repeats", repeats);
    manifest.param("seed", o.seed);
    manifest.param("caps", caps_value(caps));
    let rows = convergence_report(&w, &fs, &schedule, repeats, o.seed, caps.work)?;
    let mut table = String::from("f_index\tn\tmean\tstd\n");
    for r in &rows {
        table.push_str(&format!("{}\t{}\t{:.11e}\t{:.11e}\n", r.f_index, r.n, r.mean, r.std));
    }
    let result = json!({
        "rows": rows
            .iter()
            .map(|r| json!({"f_index": r.f_index, "n": r.n, "mean": float(r.mean), "std": float(r.std)}))
            .collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(manifest, result, Artifact::Text(table)))
}

fn run(cli: Cli) -> Result<(String, i32), (String, i32)> {
    let (name, opts) = match &cli.command {
        Command::Density(o) => ("density", o),
        Command::Distance(o) => ("distance", o),
        Command::Canon(o) => ("canon", o),
        Command::Transversal(o) => ("transversal", o),
        Command::Sample(o) => ("sample", o),
        Command::Converge(o) => ("converge", o),
        Command::Selftest(o) => ("selftest", o),
    };
    let fail = |f: Failure| (render_failure(&f), f.code);
    if opts.jobs == 0 {
        return Err(fail(Failure::usage("--jobs must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build_global()
        .map_err(|e| fail(Failure::io(format!("thread pool: {e}"))))?;
    let caps = parse_caps(opts.caps.as_deref()).map_err(fail)?;
    let outcome = match name {
        "density" => density(opts, &caps),
        "distance" => distance(opts, &caps),
        "canon" => canon(opts, &caps),
        "transversal" => transversal_cmd(opts, &caps),
        "sample" => sample_cmd(opts),
        "converge" => converge(opts, &caps),
        _ => selftest::run(&caps),
    }
    .map_err(fail)?;
    let text = render(
        &outcome.manifest,
        outcome.result,
        outcome.artifact,
        opts.output.as_deref(),
    )
    .map_err(fail)?;
    Ok((text, outcome.code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, code) = match run(cli) {
        Ok(r) | Err(r) => r,
    };
    print!("{text}");
    ExitCode::from(code as u8)
}
