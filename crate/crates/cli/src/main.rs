//! `wmin`: classify, solve and verify `W = inf_j T_j W_j` from the command line.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage or input error.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use wmin_core::branching::{branching_invariance_test, branching_min_sample, BranchingMode, DEFAULT_LEAF_CAP};
use wmin_core::rng::batched;
use wmin_core::solutions::{MemberParams, ModelSpec, SurvivalModel};
use wmin_core::spectral::{
    characteristic_exponent, detect_group, GroupKind, LatticeOptions, DEFAULT_MAX_DEN, DEFAULT_REL_EPS, DEFAULT_ROOT_TOL,
};
use wmin_core::verify::negative::default_minimax_grid;
use wmin_core::verify::{
    atom_residuals, default_grid, mc_fixed_point_test, minimax_mc_test, minimax_residual, mixed_case_check,
    residual_report, VerifyOptions, DEFAULT_EPS_TRUNC, DEFAULT_GRID_POINTS, DEFAULT_RESIDUAL_TOL,
};
use wmin_core::weights::{classify_reduced, reduce_zero, RawWeights, SignCase, WeightSpec};

#[derive(Parser)]
#[command(name = "wmin", version, about = "Fixed points of W = inf_j T_j W_j")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format (reports default to json, samples to csv).
    #[arg(long, global = true, value_enum)]
    out: Option<OutFormat>,
    #[arg(long, global = true, default_value_t = DEFAULT_ROOT_TOL)]
    tol_root: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Monte-Carlo sample size; no Monte-Carlo test when absent.
    #[arg(long, global = true)]
    mc_n: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DEN)]
    lattice_max_den: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_REL_EPS)]
    lattice_rel_eps: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_EPS_TRUNC)]
    eps_trunc: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_RESIDUAL_TOL)]
    residual_tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct WeightsArg {
    /// `(2,4)`, a JSON list or `{"head": [...], "tail": {...}}`, a file path, or `-` for stdin.
    #[arg(long, required_unless_present = "weights_file", conflicts_with = "weights_file")]
    weights: Option<String>,
    #[arg(long)]
    weights_file: Option<PathBuf>,
}

#[derive(Args)]
struct DistArg {
    /// Distribution JSON, a file path, or `-` for stdin.
    #[arg(long)]
    dist: String,
}

#[derive(Subcommand)]
enum Command {
    /// Sign case, A-case and solution-family summary.
    Classify(WeightsArg),
    /// Characteristic exponent α with Σ T_j^{−α} = 1.
    Exponent(WeightsArg),
    /// Continuous or lattice group generated by the weights.
    Group(WeightsArg),
    /// Solution family; with --emit-member, one member as a distribution.
    Family {
        #[command(flatten)]
        weights: WeightsArg,
        /// `c=<value>`: the member with scale c.
        #[arg(long)]
        emit_member: Option<String>,
    },
    /// Operator residuals, atom checks and optional Monte-Carlo test.
    Verify {
        #[command(flatten)]
        weights: WeightsArg,
        #[command(flatten)]
        dist: DistArg,
    },
    /// Draws from a distribution.
    Sample {
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Minima over depth-n weighted branching.
    Simulate {
        #[command(flatten)]
        weights: WeightsArg,
        #[command(flatten)]
        dist: DistArg,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Stop at the first leaf whose lower bound exceeds the running minimum.
        #[arg(long)]
        pruned: bool,
        /// Report a KS test against fresh draws instead of the minima.
        #[arg(long)]
        ks: bool,
    },
    /// Min-max equation for finitely many negative weights, with G given by --dist.
    Minimax {
        #[command(flatten)]
        weights: WeightsArg,
        #[command(flatten)]
        dist: DistArg,
    },
}

enum Failure {
    Usage(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage<E: std::fmt::Display>(ctx: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Usage(format!("{ctx}: {e}"))
}

/// Output of one command: a JSON report or CSV sample, and the verdict.
enum Output {
    Report(Value, bool),
    Samples(Vec<f64>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let (text, pass) = render(out, cli.global.out);
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_source(src: &str, ctx: &str) -> CliResult<String> {
    let src = src.trim();
    if src == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(usage(ctx))?;
        return Ok(s);
    }
    if src.starts_with(['(', '[', '{']) || src.parse::<f64>().is_ok() || src.contains(',') {
        return Ok(src.to_string());
    }
    std::fs::read_to_string(src).map_err(|e| Failure::Usage(format!("{ctx}: cannot read {src}: {e}")))
}

fn parse_weights(arg: &WeightsArg) -> CliResult<(RawWeights, WeightSpec, bool)> {
    let text = match (&arg.weights, &arg.weights_file) {
        (_, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("weights: cannot read {}: {e}", path.display())))?,
        (Some(w), None) => read_source(w, "weights")?,
        (None, None) => return Err(Failure::Usage("weights: missing".into())),
    };
    let text = text.trim();
    let raw = if text.starts_with('{') {
        serde_json::from_str::<RawWeights>(text).map_err(usage("weights"))?
    } else if text.starts_with('[') {
        RawWeights::finite(serde_json::from_str::<Vec<f64>>(text).map_err(usage("weights"))?)
    } else {
        let inner = text.trim_start_matches('(').trim_end_matches(')');
        let head = inner
            .split(',')
            .enumerate()
            .map(|(i, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Failure::Usage(format!("weights: head[{i}] = {:?}: {e}", s.trim())))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        RawWeights::finite(head)
    };
    let (spec, had_zero) = reduce_zero(&raw).map_err(usage("weights"))?;
    Ok((raw, spec, had_zero))
}

/// A distribution JSON, or any report carrying one under `"model"`.
fn parse_dist(arg: &DistArg) -> CliResult<SurvivalModel> {
    let text = read_source(&arg.dist, "dist")?;
    let v: Value = serde_json::from_str(&text).map_err(usage("dist"))?;
    let v = match v.get("model") {
        Some(m) if v.get("kind").is_none() => m.clone(),
        _ => v,
    };
    serde_json::from_value::<SurvivalModel>(v).map_err(usage("dist"))
}

fn lattice_opts(g: &Global) -> LatticeOptions {
    LatticeOptions { max_den: g.lattice_max_den, rel_eps: g.lattice_rel_eps }
}

fn verify_opts(g: &Global) -> VerifyOptions {
    VerifyOptions {
        grid_points: g.grid_points,
        eps_trunc: g.eps_trunc,
        residual_tol: g.residual_tol,
        ..VerifyOptions::default()
    }
}

fn config(cli: &Cli, extra: Value) -> Value {
    let g = &cli.global;
    let mut c = json!({
        "seed": g.seed,
        "tol_root": g.tol_root,
        "grid_points": g.grid_points,
        "mc_n": g.mc_n,
        "lattice_max_den": g.lattice_max_den,
        "lattice_rel_eps": g.lattice_rel_eps,
        "eps_trunc": g.eps_trunc,
        "residual_tol": g.residual_tol,
    });
    if let (Value::Object(c), Value::Object(e)) = (&mut c, extra) {
        c.extend(e);
    }
    c
}

fn report(command: &str, config: Value, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("command".into(), command.into());
    out.insert("config".into(), config);
    if let Value::Object(b) = body {
        out.extend(b);
    }
    Value::Object(out)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn run(cli: &Cli) -> CliResult<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Classify(w) => {
            let (raw, spec, had_zero) = parse_weights(w)?;
            let c = classify_reduced(&spec, had_zero);
            let body = json!({
                "sign_case": to_value(&c.sign_case),
                "had_zero": c.had_zero,
                "a_case": to_value(&c.a_case),
                "summary": to_value(&c.summary),
                "description": c.describe(),
            });
            Ok(Output::Report(report("classify", config(cli, json!({ "weights": raw })), body), true))
        }
        Command::Exponent(w) => {
            let (raw, spec, _) = parse_weights(w)?;
            let e = characteristic_exponent(&spec, g.tol_root).map_err(usage("exponent"))?;
            let body = match e {
                Some(e) => json!({ "exists": true, "alpha": e.alpha, "residual": e.residual, "bracket": [e.bracket.0, e.bracket.1] }),
                None => json!({ "exists": false }),
            };
            Ok(Output::Report(report("exponent", config(cli, json!({ "weights": raw })), body), true))
        }
        Command::Group(w) => {
            let (raw, spec, _) = parse_weights(w)?;
            let gs = detect_group(&spec, &lattice_opts(g)).map_err(usage("group"))?;
            Ok(Output::Report(report("group", config(cli, json!({ "weights": raw })), to_value(&gs)), true))
        }
        Command::Family { weights, emit_member } => {
            let (raw, spec, had_zero) = parse_weights(weights)?;
            let a = wmin_core::analyze(&spec, had_zero, g.tol_root, &lattice_opts(g)).map_err(usage("family"))?;
            let cfg = config(cli, json!({ "weights": raw, "emit_member": emit_member }));
            match emit_member {
                None => Ok(Output::Report(report("family", cfg, to_value(&a)), true)),
                Some(sel) => {
                    let c = sel
                        .strip_prefix("c=")
                        .and_then(|v| v.trim().parse::<f64>().ok())
                        .ok_or_else(|| Failure::Usage(format!("emit-member: expected c=<number>, got {sel:?}")))?;
                    let model = a
                        .family
                        .components
                        .iter()
                        .find_map(|comp| comp.instantiate(&MemberParams::Scale(c)).ok())
                        .ok_or_else(|| Failure::Usage("emit-member: no component has a member with scale c".into()))?;
                    let body = json!({ "model": ModelSpec::from(model) });
                    Ok(Output::Report(report("family", cfg, body), true))
                }
            }
        }
        Command::Verify { weights, dist } => verify(cli, weights, dist),
        Command::Sample { dist, n } => {
            let m = parse_dist(dist)?;
            let xs = batched(*n, g.seed, 0, |rng| m.draw(rng));
            Ok(Output::Samples(xs))
        }
        Command::Simulate { weights, dist, depth, samples, pruned, ks } => {
            let (raw, spec, _) = parse_weights(weights)?;
            let m = parse_dist(dist)?;
            let mode = if *pruned { BranchingMode::Pruned } else { BranchingMode::Full };
            if *ks {
                let rep = branching_invariance_test(&m, &spec, *depth, *samples, g.seed, mode, DEFAULT_LEAF_CAP)
                    .map_err(usage("simulate"))?;
                let cfg = config(
                    cli,
                    json!({ "weights": raw, "dist": ModelSpec::from(m), "depth": depth, "samples": samples, "pruned": pruned }),
                );
                return Ok(Output::Report(report("simulate", cfg, to_value(&rep)), rep.pass));
            }
            let xs = branching_min_sample(&m, &spec, *depth, *samples, g.seed, mode, DEFAULT_LEAF_CAP)
                .map_err(usage("simulate"))?;
            Ok(Output::Samples(xs))
        }
        Command::Minimax { weights, dist } => {
            let (raw, spec, _) = parse_weights(weights)?;
            let gm = parse_dist(dist)?;
            let grid = default_minimax_grid(&gm, &spec, g.grid_points).map_err(usage("minimax"))?;
            let res = minimax_residual(&gm, &spec, &grid).map_err(usage("minimax"))?;
            let mc = match g.mc_n {
                Some(n) => Some(minimax_mc_test(&gm, &spec, n, g.seed).map_err(usage("minimax"))?),
                None => None,
            };
            let pass = res.sup_residual <= g.residual_tol && mc.as_ref().is_none_or(|r| r.pass);
            let cfg = config(cli, json!({ "weights": raw, "dist": ModelSpec::from(gm) }));
            let body = json!({ "residual": to_value(&res), "mc": to_value(&mc), "pass": pass });
            Ok(Output::Report(report("minimax", cfg, body), pass))
        }
    }
}

fn verify(cli: &Cli, weights: &WeightsArg, dist: &DistArg) -> CliResult<Output> {
    let g = &cli.global;
    let (raw, spec, had_zero) = parse_weights(weights)?;
    let model = parse_dist(dist)?;
    let opts = verify_opts(g);
    let grid = default_grid(&model, Some(&spec), g.grid_points).map_err(usage("verify"))?;
    let grid = if had_zero { grid.with_point(0.0) } else { grid };
    let mut rep = residual_report(&model, &spec, &grid, &opts).map_err(usage("verify"))?;
    if had_zero {
        // A zero weight contributes P(0·W ≥ t) = 1{t ≤ 0}.
        rep.sup_residual = 0.0;
        for p in rep.points.iter_mut() {
            if p.t > 0.0 {
                p.operator = 0.0;
                p.residual = p.survival;
            }
            if p.residual > rep.sup_residual {
                rep.sup_residual = p.residual;
                rep.argmax_t = p.t;
            }
        }
    }
    if let SurvivalModel::PeriodicWeibull(p) = &model {
        if spec.all_positive() && spec.inf() > 1.0 {
            if let Ok(group) = detect_group(&spec, &lattice_opts(g)) {
                if matches!(group.kind, GroupKind::Lattice { r } if ((r - p.r()) / r).abs() <= 1e-12) {
                    let atoms: Vec<(usize, i64)> =
                        p.atom_indices().into_iter().flat_map(|i| (-2..=2).map(move |m| (i, m))).collect();
                    rep.atoms = atom_residuals(p, &spec, &group, &atoms).map_err(usage("verify"))?;
                }
            }
        }
    }
    if let Some(n) = g.mc_n {
        rep.mc = Some(mc_fixed_point_test(&model, &spec, n, g.seed).map_err(usage("verify"))?);
    }
    let mixed = if classify_reduced(&spec, had_zero).sign_case == SignCase::Mixed {
        Some(mixed_case_check(&model, &spec, &opts, None).map_err(usage("verify"))?)
    } else {
        None
    };
    let tol = g.residual_tol;
    let pass = rep.sup_residual <= tol + rep.truncation_bound
        && rep.atoms.iter().all(|a| a.left <= tol && a.right <= tol)
        && rep.mc.as_ref().is_none_or(|m| m.pass)
        && mixed.as_ref().is_none_or(|m| m.pass);
    rep.points.clear();
    let cfg = config(cli, json!({ "weights": raw, "dist": ModelSpec::from(model) }));
    let mut body = to_value(&rep);
    if let Value::Object(b) = &mut body {
        b.insert("mixed".into(), to_value(&mixed));
        b.insert("pass".into(), pass.into());
    }
    Ok(Output::Report(report("verify", cfg, body), pass))
}

/// `x` rounded to 15 significant digits.
fn sig15(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.14e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(sig15(x))) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn render(out: Output, fmt: Option<OutFormat>) -> (String, bool) {
    match out {
        Output::Samples(xs) if fmt != Some(OutFormat::Json) => {
            let mut s = String::from("w\n");
            for x in xs {
                s.push_str(&format!("{}\n", sig15(x)));
            }
            (s, true)
        }
        Output::Samples(xs) => {
            let mut v = json!(xs);
            round_floats(&mut v);
            (format!("{v}\n"), true)
        }
        Output::Report(mut v, pass) => {
            round_floats(&mut v);
            let text = if fmt == Some(OutFormat::Csv) {
                let mut rows = Vec::new();
                flatten("", &v, &mut rows);
                let mut s = String::from("key,value\n");
                for (k, x) in rows {
                    s.push_str(&format!("{k},{}\n", x.replace(',', ";")));
                }
                s
            } else {
                format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
            };
            (text, pass)
        }
    }
}
