mod config;

use std::fmt::Write as _;
use std::hash::BuildHasher;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use lpcomp::estimation::{convergence_trace, estimate_curve, EstimateOptions};
use lpcomp::experiments::{
    figure_bundle, kappa_estimate, mixture_weak_limit, phase_transition, write_bundle, FigureId,
    FigureOptions,
};
use lpcomp::fp::curve_rates;
use lpcomp::io::{curve_csv, fmt_sig, series_csv, series_sidecar, to_json, write_atomic};
use lpcomp::process::Root;
use lpcomp::{classify, fp_curve, Law, ProcessSource, SourceSpec};
use serde::Serialize;

use config::{Cli, Command, Format, RunConfig, SeedArg, DEFAULT_SEED};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

impl From<lpcomp::Error> for Failure {
    fn from(e: lpcomp::Error) -> Self {
        if e.is_validation() {
            Failure::validation(e.to_string())
        } else {
            Failure::runtime(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match load(cli).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(cli: Cli) -> Outcome<RunConfig> {
    let (path, flags) = cli.into_parts();
    let Some(path) = path else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
    let file: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("invalid config {}: {e}", path.display())))?;
    Ok(file.overlay(flags))
}

fn run(cfg: &RunConfig) -> Outcome<()> {
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Failure::validation("invalid threads: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let command = cfg
        .command
        .ok_or_else(|| Failure::validation("missing command"))?;
    match command {
        Command::CurveClosed => curve_closed(cfg),
        Command::CurveEstimate => curve_estimate(cfg),
        Command::Classify => classify_cmd(cfg),
        Command::Trace => trace(cfg),
        Command::Phase => phase(cfg),
        Command::Kappa => kappa(cfg),
        Command::Mixture => mixture(cfg),
        Command::Figures => figures(cfg),
    }
}

fn required<T: Copy>(value: Option<T>, name: &str) -> Outcome<T> {
    value.ok_or_else(|| Failure::validation(format!("invalid {name}: missing --{name}")))
}

fn p_of(cfg: &RunConfig) -> Outcome<f64> {
    let p = required(cfg.p, "p")?;
    if p.is_finite() && p > 0.0 {
        Ok(p)
    } else {
        Err(Failure::validation(format!(
            "invalid p: must be positive, got {p}"
        )))
    }
}

fn law_of(cfg: &RunConfig) -> Outcome<Law> {
    let dist = cfg
        .dist
        .as_deref()
        .ok_or_else(|| Failure::validation("invalid dist: missing --dist"))?;
    Ok(dist.parse()?)
}

fn spec_of(cfg: &RunConfig) -> Outcome<SourceSpec> {
    match (&cfg.chain, &cfg.dist) {
        (Some(chain), _) => Ok(chain.parse()?),
        (None, Some(dist)) => Ok(SourceSpec::iid(dist.parse()?)),
        (None, None) => Err(Failure::validation(
            "invalid chain: missing --chain (or --dist)",
        )),
    }
}

fn seed_of(cfg: &RunConfig) -> u64 {
    match cfg.seed {
        None => DEFAULT_SEED,
        Some(SeedArg::Fixed(s)) => s,
        Some(SeedArg::Named(_)) => std::collections::hash_map::RandomState::new().hash_one(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_nanos()),
        ),
    }
}

fn single_n(cfg: &RunConfig, default: usize) -> Outcome<usize> {
    let n = match cfg.n.as_deref() {
        None => default,
        Some([n]) => *n,
        Some(_) => return Err(Failure::validation("invalid n: expected a single value")),
    };
    if n == 0 {
        return Err(Failure::validation("invalid n: must be at least 1, got 0"));
    }
    Ok(n)
}

fn trials_of(cfg: &RunConfig, default: usize) -> Outcome<usize> {
    match cfg.trials.unwrap_or(default) {
        0 => Err(Failure::validation("invalid trials: must be at least 1")),
        t => Ok(t),
    }
}

fn format_of(cfg: &RunConfig) -> Format {
    cfg.format.unwrap_or_default()
}

/// Writes the artifact to `--out` (atomically) or to stdout; the summary
/// goes to stdout after a file write and to stderr otherwise.
fn emit(cfg: &RunConfig, data: &str, summary: &str) -> Outcome<()> {
    match &cfg.out {
        Some(path) => {
            write_atomic(path, data.as_bytes())?;
            println!("{summary} out={}", path.display());
        }
        None => {
            print!("{data}");
            eprintln!("{summary} out=-");
        }
    }
    Ok(())
}

fn summary(command: &str, n: impl std::fmt::Display, seed: impl std::fmt::Display) -> String {
    format!("{command} n={n} seed={seed}")
}

fn curve_closed(cfg: &RunConfig) -> Outcome<()> {
    let law = law_of(cfg)?;
    let p = p_of(cfg)?;
    let rates = match &cfg.rates {
        Some(r) => r.clone(),
        None => curve_rates(&law, 30, &[0.25, 0.5, 0.75])?,
    };
    let curve = fp_curve(&law, p, &rates)?;
    let data = match format_of(cfg) {
        Format::Csv => curve_csv(&curve),
        Format::Json => to_json(&curve)?,
    };
    emit(
        cfg,
        &data,
        &summary("curve-closed", curve.points.len(), "none"),
    )
}

fn curve_estimate(cfg: &RunConfig) -> Outcome<()> {
    let spec = spec_of(cfg)?;
    let p = p_of(cfg)?;
    let n = single_n(cfg, 100_000)?;
    let seed = seed_of(cfg);
    let options = EstimateOptions {
        taus: cfg.taus.clone(),
        ..EstimateOptions::default()
    };
    let mut src = ProcessSource::new(spec, seed)?;
    let series = estimate_curve(&mut src, n, p, &options)?;
    let data = match format_of(cfg) {
        Format::Csv => series_csv(&series),
        Format::Json => to_json(&series)?,
    };
    emit(cfg, &data, &summary("curve-estimate", n, seed))?;
    if let (Format::Csv, Some(out)) = (format_of(cfg), &cfg.out) {
        if out.extension().is_none_or(|e| e != "json") {
            write_atomic(
                &out.with_extension("json"),
                series_sidecar(&series)?.as_bytes(),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Verdict<'a> {
    dist: String,
    p: f64,
    verdict: &'a str,
    p_moment: f64,
}

fn classify_cmd(cfg: &RunConfig) -> Outcome<()> {
    let law = law_of(cfg)?;
    let p = p_of(cfg)?;
    let verdict = classify(&law, p)?;
    let data = match format_of(cfg) {
        Format::Csv => format!("{}\n", verdict.label()),
        Format::Json => to_json(&Verdict {
            dist: law.to_string(),
            p,
            verdict: verdict.label(),
            p_moment: law.p_moment(p)?,
        })?,
    };
    emit(cfg, &data, &summary("classify", "none", "none"))
}

fn trace(cfg: &RunConfig) -> Outcome<()> {
    let spec = spec_of(cfg)?;
    let p = p_of(cfg)?;
    let r = required(cfg.r, "r")?;
    let n_list = cfg
        .n
        .clone()
        .unwrap_or_else(|| vec![1_000, 10_000, 100_000]);
    let streams = trials_of(cfg, 20)?;
    let seed = seed_of(cfg);
    let traces = convergence_trace(&spec, r, p, &n_list, streams, seed)?;
    let data = match format_of(cfg) {
        Format::Csv => {
            let mut out = String::from("stream,seed,active_component,n,value\n");
            for (i, t) in traces.iter().enumerate() {
                let active = t.active_component.map_or(String::new(), |a| a.to_string());
                for (n, v) in t.n_list.iter().zip(&t.values) {
                    let _ = writeln!(out, "{i},{},{active},{n},{}", t.seed, fmt_sig(*v));
                }
            }
            out
        }
        Format::Json => to_json(&traces)?,
    };
    let max_n = n_list.last().copied().unwrap_or(0);
    emit(cfg, &data, &summary("trace", max_n, seed))
}

fn phase(cfg: &RunConfig) -> Outcome<()> {
    let spec = spec_of(cfg)?;
    let p = p_of(cfg)?;
    let d = required(cfg.d, "d")?;
    let rates = cfg
        .rates
        .clone()
        .unwrap_or_else(|| (1..10).map(|i| i as f64 / 10.0).collect());
    let n = single_n(cfg, 2000)?;
    let trials = trials_of(cfg, 200)?;
    let seed = seed_of(cfg);
    let result = phase_transition(&spec, d, &rates, n, trials, p, seed)?;
    let data = match format_of(cfg) {
        Format::Csv => {
            let mut out = String::from("r,k,probability\n");
            for pt in &result.grid {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_sig(pt.r),
                    pt.k,
                    fmt_sig(pt.probability)
                );
            }
            out
        }
        Format::Json => to_json(&result)?,
    };
    emit(cfg, &data, &summary("phase", n, seed))
}

#[derive(Serialize)]
struct KappaRow {
    chain_spec: String,
    n: usize,
    d: f64,
    epsilon: f64,
    p: f64,
    trials: usize,
    seed: u64,
    kappa: usize,
    ratio: f64,
}

fn kappa(cfg: &RunConfig) -> Outcome<()> {
    let spec = spec_of(cfg)?;
    let p = p_of(cfg)?;
    let d = required(cfg.d, "d")?;
    let epsilon = cfg.epsilon.unwrap_or(0.1);
    let n = single_n(cfg, 2000)?;
    let trials = trials_of(cfg, 200)?;
    let seed = seed_of(cfg);
    let k = kappa_estimate(&spec, n, d, epsilon, p, trials, seed)?;
    let ratio = k as f64 / n as f64;
    let data = match format_of(cfg) {
        Format::Csv => format!("n,kappa,ratio\n{n},{k},{}\n", fmt_sig(ratio)),
        Format::Json => to_json(&KappaRow {
            chain_spec: spec.to_string(),
            n,
            d,
            epsilon,
            p,
            trials,
            seed,
            kappa: k,
            ratio,
        })?,
    };
    emit(cfg, &data, &summary("kappa", n, seed))
}

fn mixture_laws(spec: &SourceSpec) -> Outcome<Vec<(f64, Law)>> {
    let invalid =
        || Failure::validation("invalid chain: expected mix:[...] of plain iid components");
    let Root::Mixture(components) = &spec.root else {
        return Err(invalid());
    };
    if !spec.stages.is_empty() {
        return Err(invalid());
    }
    components
        .iter()
        .map(|c| match (&c.spec.root, c.spec.stages.is_empty()) {
            (Root::Iid(law), true) => Ok((c.weight, law.clone())),
            _ => Err(invalid()),
        })
        .collect()
}

fn mixture(cfg: &RunConfig) -> Outcome<()> {
    let spec = spec_of(cfg)?;
    let components = mixture_laws(&spec)?;
    let p = p_of(cfg)?;
    let r = required(cfg.r, "r")?;
    let d = required(cfg.d, "d")?;
    let n = single_n(cfg, 5000)?;
    let trials = trials_of(cfg, 400)?;
    let seed = seed_of(cfg);
    let limit = mixture_weak_limit(&components, r, d, p, n, trials, seed)?;
    let data = match format_of(cfg) {
        Format::Csv => format!(
            "estimate,predicted\n{},{}\n",
            fmt_sig(limit.estimate),
            fmt_sig(limit.predicted)
        ),
        Format::Json => to_json(&limit)?,
    };
    emit(cfg, &data, &summary("mixture", n, seed))
}

fn figures(cfg: &RunConfig) -> Outcome<()> {
    let out = cfg
        .out
        .as_deref()
        .ok_or_else(|| Failure::validation("invalid out: figures need --out <directory>"))?;
    let ids = match &cfg.figure {
        Some(id) => vec![id.parse::<FigureId>()?],
        None => FigureId::ALL.to_vec(),
    };
    let mut options = FigureOptions::default();
    if cfg.n.is_some() {
        options.n = single_n(cfg, options.n)?;
    }
    let seed = seed_of(cfg);
    for id in ids {
        let bundle = figure_bundle(id, seed, &options)?;
        write_figure(&bundle, out)?;
    }
    println!(
        "{} out={}",
        summary("figures", options.n, seed),
        out.display()
    );
    Ok(())
}

fn write_figure(bundle: &lpcomp::experiments::FigureBundle, out: &Path) -> Outcome<()> {
    write_bundle(bundle, out).map(|_| ()).map_err(Failure::from)
}
