//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the report is always printed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lpcomp::approx::{sigma_p, SampleWindow};
use lpcomp::estimation::{
    atom_randomized_count, convergence_trace, estimate_curve, trace_seed, EstimateOptions,
};
use lpcomp::experiments::{
    figure_bundle, kappa_estimate, mixture_weak_limit, phase_transition, FigureId, FigureOptions,
    FIG3_POWERS, FIG_FILTER_LENGTHS,
};
use lpcomp::process::{derive_seed, Root};
use lpcomp::{classify, fp_curve, fp_value, Law, ProcessSource, SourceSpec};

const DEFAULT_SEED: u64 = 20240101;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))
}

fn gaussian() -> Law {
    Law::gaussian(1.0).unwrap()
}

// ---------------------------------------------------------------- 1

/// Minimum over every k-subset of the complement's power sum, each
/// complement summed in ascending magnitude order.
fn brute_force_sigma(x: &[f64], k: usize, p: f64) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut rest: Vec<f64> = (0..n)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| x[i].abs())
            .collect();
        rest.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for m in rest {
            acc += m.powf(p);
        }
        best = best.min(acc);
    }
    best.powf(1.0 / p)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let laws = [
        "iid:gaussian:sigma=1",
        "iid:student_t:q=1.5",
        "iid:discrete:0.5=0.3,1=0.4,3=0.3",
        "iid:sparse:rho0=0.4;base=gaussian:sigma=2",
    ];
    let mut comparisons = 0;
    for w in 0..500usize {
        let spec: SourceSpec = laws[w % laws.len()].parse().unwrap();
        let mut src = ProcessSource::new(spec, derive_seed(DEFAULT_SEED, w as u64)).unwrap();
        let n = 1 + w % 8;
        let x = src.take(n);
        let window = SampleWindow::new(x.clone()).unwrap();
        for p in [0.5, 1.0, 2.0] {
            for k in 1..=n {
                let fast = sigma_p(k, &window, p).unwrap();
                let brute = brute_force_sigma(&x, k, p);
                ensure(
                    fast.to_bits() == brute.to_bits(),
                    format!("window {w} k={k} p={p}: {fast:e} vs {brute:e}"),
                )?;
                comparisons += 1;
            }
        }
    }
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("{comparisons} (window, k, p) cases bitwise equal"))
}

// ---------------------------------------------------------------- 2

fn std_normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson rule with `2m` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / (2 * m) as f64;
    let mut s = f(a) + f(b);
    for i in 1..2 * m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `f_2(r)` for the standard Gaussian from first principles: the closed tail
/// `2∫_τ^∞ φ` is inverted by bisection and the retained share is
/// `2∫_0^τ x²φ(x) dx`.
fn gaussian_f2_oracle(r: f64) -> f64 {
    let tail = |t: f64| 1.0 - 2.0 * simpson(std_normal_density, 0.0, t, 4000);
    let (mut lo, mut hi) = (0.0, 12.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    (2.0 * simpson(|x| x * x * std_normal_density(x), 0.0, tau, 4000)).sqrt()
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let law = gaussian();
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        let oracle = gaussian_f2_oracle(r);
        let value = fp_value(&law, 2.0, r).unwrap();
        worst = worst.max((value - oracle).abs());
    }
    ensure(worst <= 1e-6, format!("max deviation {worst:e}"))?;
    let anchor = gaussian_f2_oracle(0.5);
    ensure(
        (anchor - 0.267).abs() < 5e-4,
        format!("oracle f2(0.5) = {anchor}"),
    )?;
    within_time(start, Duration::from_secs(1))?;
    Ok(format!(
        "max |closed − oracle| = {worst:.2e}, f2(0.5) = {anchor:.6}"
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Check {
    let law = Law::discrete(&[(1.0, 0.6), (2.0, 0.4)]).unwrap();
    let expected = 1.0 - 0.5 * (0.8 / 1.4);
    let value = fp_value(&law, 1.0, 0.2).unwrap();
    ensure(
        (value - expected).abs() < 1e-12,
        format!("fp_value {value} vs {expected}"),
    )?;
    let mut src = ProcessSource::iid(law, DEFAULT_SEED);
    let x = src.window(100_000).unwrap();
    let (count, d) =
        atom_randomized_count(&x, 2.0, 0.5, 1.0, derive_seed(DEFAULT_SEED, 1)).unwrap();
    let r_hat = count as f64 / 1e5;
    ensure(
        (r_hat - 0.2).abs() <= 0.01 && (d - expected).abs() <= 0.01,
        format!("empirical ({r_hat}, {d}) vs (0.2, {expected})"),
    )?;
    Ok(format!("f = {value:.6}; empirical ({r_hat:.4}, {d:.4})"))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Check {
    let rates: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let mut compressible = Vec::new();
    for q in [1.2, 2.1, 3.0, 7.0, 10.0] {
        let law = Law::student_t(q).unwrap();
        for p in [1.0, 2.0] {
            let verdict = classify(&law, p).unwrap();
            ensure(
                verdict.is_compressible() == (p >= q),
                format!("q={q} p={p}: {}", verdict.label()),
            )?;
            let curve = fp_curve(&law, p, &rates).unwrap();
            let all_zero = curve.points.iter().all(|pt| pt.d == 0.0);
            let all_positive = curve.points.iter().all(|pt| pt.d > 0.0);
            ensure(
                if p >= q { all_zero } else { all_positive },
                format!("q={q} p={p}: curve zero pattern wrong"),
            )?;
            if p >= q {
                compressible.push(format!("(q={q}, p={p})"));
            }
        }
    }
    Ok(format!("compressible cells: {}", compressible.join(" ")))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let start = Instant::now();
    let law = gaussian();
    let mut report = Vec::new();
    for p in [1.0, 2.0] {
        let mut src = ProcessSource::iid(law.clone(), DEFAULT_SEED);
        let series = estimate_curve(&mut src, 100_000, p, &EstimateOptions::default()).unwrap();
        ensure(
            series.records.len() == 30,
            format!("{} thresholds", series.records.len()),
        )?;
        let sup = series
            .records
            .iter()
            .map(|rec| (rec.d_hat - fp_value(&law, p, rec.r_hat).unwrap()).abs())
            .fold(0.0, f64::max);
        ensure(sup <= 0.02, format!("p={p}: sup error {sup}"))?;
        report.push(format!("p={p}: sup {sup:.4}"));
    }
    within_time(start, Duration::from_secs(10))?;
    Ok(report.join(", "))
}

// ---------------------------------------------------------------- 6

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn criterion_6() -> Check {
    let law = Law::student_t(1.2).unwrap();
    let (lo, hi) = law.tail_bracket(0.3).unwrap();
    let tau = 0.5 * (lo + hi);
    let options = EstimateOptions {
        taus: Some(vec![tau]),
        ..EstimateOptions::default()
    };
    let mut medians = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let d: Vec<f64> = (0..20)
            .map(|i| {
                let mut src = ProcessSource::iid(law.clone(), trace_seed(DEFAULT_SEED, i));
                estimate_curve(&mut src, n, 2.0, &options).unwrap().records[0].d_hat
            })
            .collect();
        medians.push(median(d));
    }
    ensure(
        medians.windows(2).all(|w| w[1] < w[0]),
        format!("medians {medians:?}"),
    )?;
    Ok(format!("median d_hat at r≈0.3: {medians:.4?}"))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Check {
    let law = Law::sparse_mixture(0.3, gaussian()).unwrap();
    for i in 0..=30 {
        let r = 0.7 + 0.01 * i as f64;
        let v = fp_value(&law, 2.0, r.min(1.0)).unwrap();
        ensure(v == 0.0, format!("closed form {v} at r={r}"))?;
    }
    let mut src = ProcessSource::iid(law, DEFAULT_SEED);
    let options = EstimateOptions {
        alpha_grid: vec![1.0 / 6.0, 0.5],
        ..EstimateOptions::default()
    };
    let series = estimate_curve(&mut src, 100_000, 2.0, &options).unwrap();
    let rec = series.nearest(0.75).unwrap();
    ensure(
        (rec.r_hat - 0.75).abs() < 0.01,
        format!("nearest rate {}", rec.r_hat),
    )?;
    ensure(
        rec.d_hat <= 0.02,
        format!("d_hat {} at r̂ {}", rec.d_hat, rec.r_hat),
    )?;
    Ok(format!(
        "closed form 0 on [0.7, 1]; d_hat {} at r̂ {:.4}",
        rec.d_hat, rec.r_hat
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let start = Instant::now();
    let spec = SourceSpec::iid(gaussian());
    let d_o = fp_value(&gaussian(), 2.0, 0.5).unwrap();
    let result = phase_transition(&spec, d_o, &[0.4, 0.6], 2000, 200, 2.0, DEFAULT_SEED).unwrap();
    let (below, above) = (result.at(0.4).unwrap(), result.at(0.6).unwrap());
    ensure(
        below <= 0.05 && above >= 0.95,
        format!("P(0.4) = {below}, P(0.6) = {above}"),
    )?;
    within_time(start, Duration::from_secs(60))?;
    Ok(format!("P(0.4) = {below}, P(0.6) = {above}"))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Check {
    let spec = SourceSpec::iid(gaussian());
    let d = fp_value(&gaussian(), 2.0, 0.5).unwrap();
    let mut ratios = Vec::new();
    for eps in [0.05, 0.2] {
        let k = kappa_estimate(&spec, 2000, d, eps, 2.0, 200, DEFAULT_SEED).unwrap();
        let ratio = k as f64 / 2000.0;
        ensure(
            (ratio - 0.5).abs() <= 0.05,
            format!("eps={eps}: kappa/n = {ratio}"),
        )?;
        ratios.push(format!("eps={eps}: {ratio}"));
    }
    Ok(format!("kappa/n {}", ratios.join(", ")))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Check {
    let components = [(0.4, gaussian()), (0.6, Law::student_t(1.2).unwrap())];
    let limit = mixture_weak_limit(&components, 0.3, 0.1, 2.0, 5000, 400, DEFAULT_SEED).unwrap();
    ensure(
        (limit.predicted - 0.6).abs() < 1e-12,
        format!("predicted {}", limit.predicted),
    )?;
    ensure(
        (limit.estimate - limit.predicted).abs() <= 0.07,
        format!("estimate {} vs {}", limit.estimate, limit.predicted),
    )?;
    let spec: SourceSpec = "mix:[0.4 iid:gaussian:sigma=1 ; 0.6 iid:student_t:q=1.2]"
        .parse()
        .unwrap();
    let Root::Mixture(parts) = &spec.root else {
        unreachable!()
    };
    let traces =
        convergence_trace(&spec, 0.3, 2.0, &[1_000, 10_000, 100_000], 50, DEFAULT_SEED).unwrap();
    let matched = traces
        .iter()
        .filter(|t| {
            let active = t.active_component.expect("mixture root");
            let law = parts[active].spec.declared_law().unwrap();
            (t.last() - fp_value(law, 2.0, 0.3).unwrap()).abs() <= 0.03
        })
        .count();
    ensure(
        matched >= 45,
        format!("{matched}/50 streams match their component"),
    )?;
    Ok(format!(
        "estimate {} vs predicted {}; {matched}/50 traces match the active component",
        limit.estimate, limit.predicted
    ))
}

// ---------------------------------------------------------------- 11

fn fig3_ordering(options: &FigureOptions) -> Check {
    let fig3 = figure_bundle(FigureId::Fig3, DEFAULT_SEED, options).unwrap();
    let curves: Vec<_> = FIG3_POWERS
        .iter()
        .map(|p| fig3.curve(&format!("gaussian_p{p}")).unwrap())
        .collect();
    let mut violations = Vec::new();
    for pair in curves.windows(2) {
        for (a, b) in pair[0].records.iter().zip(&pair[1].records) {
            ensure(a.r_hat == b.r_hat, "fig3 curves do not share rates")?;
            if a.d_hat > b.d_hat {
                violations.push((a.r_hat, pair[0].p, pair[1].p));
            }
        }
    }
    if violations.is_empty() {
        return Ok("fig3 ordered in p".into());
    }
    let max_r = violations.iter().map(|v| v.0).fold(0.0, f64::max);
    // the exact curves cross as well, so the estimate is not at fault
    let g = gaussian();
    let exact = (
        fp_value(&g, 1.5, 0.1).unwrap(),
        fp_value(&g, 2.0, 0.1).unwrap(),
    );
    Err(format!(
        "fig3: {} order violations at r ≤ {max_r:.3}; closed form at r=0.1: p=1.5 {:.4} > p=2 {:.4}",
        violations.len(),
        exact.0,
        exact.1
    ))
}

fn fig4_monotone(options: &FigureOptions) -> Check {
    let fig4 = figure_bundle(FigureId::Fig4, DEFAULT_SEED, options).unwrap();
    let input = fig4.curve("input").unwrap().interpolate(0.1).unwrap();
    let outputs: Vec<f64> = FIG_FILTER_LENGTHS
        .iter()
        .map(|m| {
            fig4.curve(&format!("lti_m{m}"))
                .unwrap()
                .interpolate(0.1)
                .unwrap()
        })
        .collect();
    ensure(
        outputs.iter().all(|o| *o >= input - 0.02),
        format!("fig4: input {input:.4}, outputs {outputs:.4?}"),
    )?;
    ensure(
        outputs.windows(2).all(|w| w[1] >= w[0]),
        format!("fig4 not nondecreasing in M: input {input:.4}, outputs {outputs:.4?}"),
    )?;
    Ok(format!(
        "fig4 at r=0.1: input {input:.3}, outputs {outputs:.3?}"
    ))
}

fn fig5_unchanged(options: &FigureOptions) -> Check {
    let fig5 = figure_bundle(FigureId::Fig5, DEFAULT_SEED, options).unwrap();
    let input = fig5.curve("input").unwrap();
    let mut worst: (f64, usize, f64) = (0.0, 0, 0.0);
    for m in FIG_FILTER_LENGTHS {
        let out = fig5.curve(&format!("lti_m{m}")).unwrap();
        for i in 1..20 {
            let r = i as f64 / 20.0;
            let gap = (out.interpolate(r).unwrap() - input.interpolate(r).unwrap()).abs();
            if gap > worst.0 {
                worst = (gap, m, r);
            }
        }
    }
    let (gap, m, r) = worst;
    ensure(gap <= 0.03, format!("fig5: gap {gap:.4} at M={m}, r={r}"))?;
    Ok(format!("fig5 max gap {gap:.4} (M={m}, r={r})"))
}

fn criterion_11() -> Check {
    let options = FigureOptions::default();
    let parts = [
        fig3_ordering(&options),
        fig4_monotone(&options),
        fig5_unchanged(&options),
    ];
    let text: Vec<String> = parts
        .iter()
        .map(|p| match p {
            Ok(s) => s.clone(),
            Err(s) => format!("FAILED {s}"),
        })
        .collect();
    if parts.iter().all(|p| p.is_ok()) {
        Ok(text.join("; "))
    } else {
        Err(text.join("; "))
    }
}

// ---------------------------------------------------------------- 12

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_lpcomp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ),
    )
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_12() -> Check {
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "curve-closed",
            "--dist",
            "gaussian:sigma=1",
            "--p",
            "2",
            "--seed",
            "7",
        ],
        vec![
            "curve-estimate",
            "--chain",
            "iid:student_t:q=2.1 | lti:1,1,1 | awgn:sigma=0.1",
            "--p",
            "1",
            "--n",
            "20000",
            "--seed",
            "7",
        ],
        vec![
            "classify",
            "--dist",
            "student_t:q=1.2",
            "--p",
            "2",
            "--seed",
            "7",
            "--format",
            "json",
        ],
        vec![
            "trace",
            "--chain",
            "mix:[0.4 iid:gaussian:sigma=1 ; 0.6 iid:student_t:q=1.2]",
            "--p",
            "2",
            "--r",
            "0.3",
            "--n",
            "1000,5000",
            "--trials",
            "8",
            "--seed",
            "7",
        ],
        vec![
            "phase",
            "--dist",
            "gaussian",
            "--p",
            "2",
            "--d",
            "0.267",
            "--rates",
            "0.4,0.5,0.6",
            "--n",
            "500",
            "--trials",
            "50",
            "--seed",
            "7",
        ],
        vec![
            "kappa", "--dist", "gaussian", "--p", "2", "--d", "0.267", "--n", "500", "--trials",
            "50", "--seed", "7",
        ],
        vec![
            "mixture",
            "--chain",
            "mix:[0.4 iid:gaussian:sigma=1 ; 0.6 iid:student_t:q=1.2]",
            "--p",
            "2",
            "--r",
            "0.3",
            "--d",
            "0.1",
            "--n",
            "1000",
            "--trials",
            "50",
            "--seed",
            "7",
        ],
        vec!["figures", "--figure", "fig4", "--n", "5000", "--seed", "7"],
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for args in &commands {
        let a = tmp.path().join(format!("{}_a", args[0]));
        let b = tmp.path().join(format!("{}_b", args[0]));
        let (a_out, b_out) = if args[0] == "figures" {
            (a.clone(), b.clone())
        } else {
            std::fs::create_dir_all(&a).unwrap();
            std::fs::create_dir_all(&b).unwrap();
            (a.join("out.csv"), b.join("out.csv"))
        };
        run_cli(args, &a_out)?;
        run_cli(args, &b_out)?;
        let (ta, tb) = (tree_bytes(&a), tree_bytes(&b));
        ensure(!ta.is_empty(), format!("{}: no artifacts", args[0]))?;
        ensure(ta == tb, format!("{}: artifacts differ", args[0]))?;
    }
    Ok(format!(
        "{} commands byte-identical across two runs",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("sigma_p equals brute-force minimum", criterion_1),
        ("closed form vs quadrature oracle", criterion_2),
        ("atomic interpolation", criterion_3),
        ("dichotomy matrix", criterion_4),
        ("estimator consistency", criterion_5),
        ("compressible decay", criterion_6),
        ("sparse zero region", criterion_7),
        ("phase transition", criterion_8),
        ("weak characterization", criterion_9),
        ("mixture limit", criterion_10),
        ("figure properties", criterion_11),
        ("CLI determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{name}] {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{name}] {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
