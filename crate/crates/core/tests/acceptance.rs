//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use tracest_core::bounds::{gaussian_necessary_min_n, projection_rank_samples};
use tracest_core::harness::{
    first_passage_samples, run_figure, success_curve, success_probability, wilson_interval, FigureConfig, FigureId,
};
use tracest_core::specialfn::{reg_gamma_p, reg_gamma_pq};
use tracest_core::stats::variance_unit;
use tracest_core::{
    estimate_trace, exact_trace, generate, spawn_substream, BoundReport, DiagnosticsOptions, GeneratorFamily,
    GeneratorSpec, MatrixDiagnostics, MatrixProperties, ProbeDistribution, TolerancePair,
};

const SEED: u64 = 42;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn tracest(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_tracest")).args(args).output().expect("run tracest");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn spec(family: GeneratorFamily, n: usize) -> GeneratorSpec {
    GeneratorSpec::new(family, n, SEED)
}

fn bounds_values() -> Verdict {
    // 6c and 8c with c = 400 ln 40, from a 40-digit evaluation
    let oracle_h = 8853.310_689_873_447_f64.ceil() as u64;
    let oracle_g = 11804.414_253_164_596_f64.ceil() as u64;
    let (code, out) = tracest(&["bounds", "--eps", "0.05", "--delta", "0.05"]);
    let text = String::from_utf8(out).unwrap_or_default();
    let value = |name: &str| -> Option<u64> {
        text.lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .and_then(|l| l.split_whitespace().last())
            .and_then(|v| v.parse().ok())
    };
    let (h, g) = (value("hutchinson"), value("gaussian"));
    verdict(
        code == 0 && h == Some(oracle_h) && g == Some(oracle_g) && oracle_h == 8854 && oracle_g == 11805,
        format!("hutchinson={h:?} gaussian={g:?} (oracle {oracle_h}, {oracle_g})"),
    )
}

fn all_ones() -> Verdict {
    let op = generate(&spec(GeneratorFamily::AllOnes, 10_000)).unwrap();
    let n_max = 100_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for method in [ProbeDistribution::UnitWithReplacement, ProbeDistribution::Hutchinson, ProbeDistribution::Gaussian] {
        let hits = first_passage_samples(&op, method, 0.05, 100, SEED, n_max).unwrap();
        let censored = hits.iter().filter(|h| h.is_none()).count();
        let values: Vec<u64> = hits.iter().map(|h| h.unwrap_or(n_max)).collect();
        let mean = values.iter().sum::<u64>() as f64 / values.len() as f64;
        let ok = if method.is_unit() {
            values.iter().all(|&v| v == 1)
        } else {
            censored == 0 && (35.0..=65.0).contains(&mean)
        };
        pass &= ok;
        parts.push(format!("{method} mean={mean:.2} max={} censored={censored}", values.iter().max().unwrap()));
    }
    verdict(pass, parts.join("; "))
}

fn necessary_tightness() -> Verdict {
    let tol = TolerancePair::new(0.1, 0.1).unwrap();
    let target = 1.0 - tol.delta();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [100usize, 400] {
        let op = generate(&spec(GeneratorFamily::DiagonalSkewed { rank: r, skew: 0.0 }, 2000)).unwrap();
        let n_nec = gaussian_necessary_min_n(r as u64, tol).unwrap();
        let reduced = ((0.7 * n_nec as f64).floor() as u64).max(1);
        let curve = success_curve(&op, ProbeDistribution::Gaussian, tol, 500, SEED, n_nec).unwrap();
        let at = &curve[n_nec as usize - 1];
        let below = &curve[reduced as usize - 1];
        let (lo_at, _) = wilson_interval(at.successes, at.trials, 1.96);
        let (_, hi_below) = wilson_interval(below.successes, below.trials, 1.96);
        let ok = lo_at >= target - 0.05 && hi_below < target;
        pass &= ok;
        parts.push(format!(
            "r={r}: N={n_nec} p={:.3} (wilson lo {lo_at:.3}), N={reduced} p={:.3} (wilson hi {hi_below:.3})",
            at.success_prob, below.success_prob
        ));
    }
    verdict(pass, parts.join("; "))
}

fn low_rank_claim() -> Verdict {
    let tol = TolerancePair::new(0.02, 0.02).unwrap();
    let values: Vec<(u64, u64)> = (1..=30).map(|r| (r, gaussian_necessary_min_n(r, tol).unwrap())).collect();
    let failing: Vec<String> = values.iter().filter(|(_, n)| *n <= 1000).map(|(r, n)| format!("r={r}:N={n}")).collect();
    let detail = if failing.is_empty() {
        format!("min over r<=30 is N={}", values.iter().map(|v| v.1).min().unwrap())
    } else {
        format!("N <= 1000 at {}", failing.join(" "))
    };
    verdict(failing.is_empty(), detail)
}

fn unit_variance() -> Verdict {
    let op = generate(&spec(GeneratorFamily::GramGaussian { m: 10, density: 1.0 }, 10)).unwrap();
    let diag = op.diagonal_entries();
    let tr = exact_trace(&op);
    let n = 10usize;
    let trials = 100_000u64;
    let empirical = |dist: ProbeDistribution, samples: usize| -> f64 {
        let xs: Vec<f64> = (0..trials)
            .map(|t| estimate_trace(&op, dist, samples, spawn_substream(SEED, t)).unwrap().value)
            .collect();
        let mean = xs.iter().sum::<f64>() / trials as f64;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for big_n in [1usize, 3, 7] {
        let v1 = empirical(ProbeDistribution::UnitWithReplacement, big_n);
        let v2 = empirical(ProbeDistribution::UnitWithoutReplacement, big_n);
        let f1 = variance_unit(&diag, tr, big_n, false).unwrap();
        let f2 = variance_unit(&diag, tr, big_n, true).unwrap();
        let ratio = (n - big_n) as f64 / (n - 1) as f64;
        let (e1, e2, er) = ((v1 / f1 - 1.0).abs(), (v2 / f2 - 1.0).abs(), ((v2 / v1) / ratio - 1.0).abs());
        pass &= e1 <= 0.05 && e2 <= 0.05 && er <= 0.05;
        parts.push(format!("N={big_n}: U1 {:.2}% U2 {:.2}% ratio {:.2}%", 100.0 * e1, 100.0 * e2, 100.0 * er));
    }
    verdict(pass, parts.join("; "))
}

fn sufficient_validity() -> Verdict {
    let tol = TolerancePair::new(0.2, 0.2).unwrap();
    let n = 150;
    let families = [
        GeneratorFamily::GramGaussian { m: 30, density: 1.0 },
        GeneratorFamily::GramUniform { m: 15, density: 0.5 },
        GeneratorFamily::DiagonalSkewed { rank: 40, skew: 2.0 },
        GeneratorFamily::Projection { rank: 10 },
        GeneratorFamily::DecayingRankOne { theta: 0.02 },
    ];
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut failures = Vec::new();
    for family in families {
        let s = spec(family, n);
        let op = generate(&s).unwrap();
        let d = MatrixDiagnostics::compute(&op, DiagnosticsOptions { materialize: true, seed: SEED, ..Default::default() })
            .unwrap();
        let below3 = |k: f64| (k < 3.0).then_some(k);
        let props = MatrixProperties {
            k_h: d.k_h.and_then(below3),
            k_g: below3(d.k_g),
            k_u: below3(d.k_u),
            n: Some(n as u64),
            rank: None,
        };
        let report = BoundReport::compute(tol, props).unwrap();
        let mut cases = vec![
            (ProbeDistribution::Hutchinson, report.hutchinson_simple),
            (ProbeDistribution::Gaussian, report.gaussian_simple),
        ];
        cases.extend(report.hutchinson_matrix.map(|b| (ProbeDistribution::Hutchinson, b)));
        cases.extend(report.gaussian_matrix.map(|b| (ProbeDistribution::Gaussian, b)));
        cases.extend(report.unit_with_repl.map(|b| (ProbeDistribution::UnitWithReplacement, b)));
        cases.extend(report.unit_without_repl.map(|b| (ProbeDistribution::UnitWithoutReplacement, b)));
        for (method, big_n) in cases {
            let rec = success_probability(&op, method, big_n, tol, 500, SEED).unwrap();
            let fail = 1.0 - rec.success_prob;
            worst = worst.max(fail);
            checked += 1;
            if fail > tol.delta() + 0.03 {
                failures.push(format!("{s} {method} N={big_n} fail={fail:.3}"));
            }
        }
    }
    let detail = format!("{checked} (family, bound) pairs, worst failure rate {worst:.3}");
    if failures.is_empty() {
        verdict(true, detail)
    } else {
        verdict(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn projection_rank() -> Verdict {
    let op = generate(&spec(GeneratorFamily::Projection { rank: 10 }, 500)).unwrap();
    let big_n = projection_rank_samples(10, 0.1).unwrap();
    let hits = (0..500u64)
        .filter(|&t| {
            let v = estimate_trace(&op, ProbeDistribution::Gaussian, big_n as usize, spawn_substream(SEED, t)).unwrap().value;
            v.round() == 10.0
        })
        .count();
    let frac = hits as f64 / 500.0;
    verdict(big_n == 240 && frac >= 0.88, format!("N={big_n}, round(estimate)=10 in {hits}/500 = {frac:.3}"))
}

fn theta_trends() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = FigureConfig::new(FigureId::Thetas).with("seed", SEED).unwrap();
    let out = run_figure(&cfg, dir.path()).unwrap();
    let n = 1000.0;
    let series = |method: &str| -> Vec<(f64, Option<u64>)> {
        out.rows.iter().filter(|r| r.method == method).map(|r| (r.param.unwrap(), r.samples)).collect()
    };
    let fmt = |s: &[(f64, Option<u64>)]| {
        s.iter().map(|(_, v)| v.map_or("cens".to_string(), |v| v.to_string())).collect::<Vec<_>>().join(",")
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for unit in ["unit", "unit-noreplace"] {
        let s = series(unit);
        let values: Vec<u64> = s.iter().map(|(_, v)| v.unwrap_or(u64::MAX)).collect();
        let ok = values.windows(2).all(|w| w[1] >= w[0]);
        pass &= ok;
        parts.push(format!("{unit} [{}] nondecreasing={ok}", fmt(&s)));
    }

    let h = series("hutchinson");
    let hv: Vec<u64> = h.iter().map(|(_, v)| v.unwrap_or(u64::MAX)).collect();
    let peak = (0..hv.len()).max_by_key(|&k| (hv[k], std::cmp::Reverse(k))).unwrap();
    let interior = peak > 0 && peak + 1 < hv.len() && hv[0] < hv[peak] && hv[hv.len() - 1] < hv[peak];
    let theta_peak = h[peak].0;
    let centre = 1.0 / (2.0 * n);
    let near = (theta_peak / centre).log10().abs() <= 1.0;
    pass &= interior && near;
    parts.push(format!(
        "hutchinson [{}] peak at theta={theta_peak:.3e} (1/(2n)={centre:.1e}) rises-then-falls={interior} within-a-decade={near}",
        fmt(&h)
    ));

    let g = series("gaussian");
    let gv: Vec<u64> = g.iter().filter_map(|(_, v)| *v).collect();
    let spread = *gv.iter().max().unwrap() as f64 / *gv.iter().min().unwrap() as f64;
    let ok = gv.len() == g.len() && spread < 2.0;
    pass &= ok;
    parts.push(format!("gaussian [{}] max/min={spread:.2}", fmt(&g)));
    verdict(pass, parts.join("; "))
}

fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut k = 0.0;
    while term > 1e-17 * sum {
        k += 1.0;
        term *= 2.0 * z * z / (2.0 * k + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum
}

fn special_functions() -> Verdict {
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 2.5, 10.0, 500.0, 5e4] {
        for x in [0.0, a / 2.0, a, 2.0 * a, 10.0 * a] {
            let (p, q) = reg_gamma_pq(a, x).unwrap();
            worst = worst.max((p + q - 1.0).abs());
        }
    }
    let comp = worst;
    let mut exp_err = 0.0f64;
    let mut erf_err = 0.0f64;
    for k in 0..=400 {
        let x = k as f64 * 0.05;
        exp_err = exp_err.max((reg_gamma_p(1.0, x).unwrap() - (1.0 - (-x).exp())).abs());
        erf_err = erf_err.max((reg_gamma_p(0.5, x).unwrap() - erf_series(x.sqrt())).abs());
    }
    verdict(
        comp <= 1e-12 && exp_err <= 1e-12 && erf_err <= 1e-12,
        format!("max |P+Q-1|={comp:.1e}, |P(1,x)-(1-e^-x)|={exp_err:.1e}, |P(1/2,x)-erf(sqrt x)|={erf_err:.1e}"),
    )
}

fn reproducibility() -> Verdict {
    let exp = [
        "--format", "csv", "experiment", "--generator", "gram-gaussian:n=80,m=12", "--eps", "0.2", "--delta", "0.2",
        "--trials", "200", "--seed", "42",
    ];
    let (c1, a) = tracest(&exp);
    let (c2, b) = tracest(&exp);
    let dir = tempfile::tempdir().unwrap();
    let mut figure_csv = Vec::new();
    for k in 0..2 {
        let d = dir.path().join(k.to_string());
        let d = d.to_str().unwrap();
        let (code, _) = tracest(&[
            "--seed", "42", "figure", "--id", "convergence", "--set", "generator=gram-uniform:n=40,m=6", "--set",
            "trials=100", "--set", "eps=0.2", "--set", "delta=0.2", "--out-dir", d,
        ]);
        figure_csv.push((code, std::fs::read(format!("{d}/convergence.csv")).unwrap_or_default()));
    }
    let ok = c1 == 0 && c2 == 0 && a == b && !a.is_empty() && figure_csv[0] == figure_csv[1] && figure_csv[0].0 == 0;
    verdict(ok, format!("experiment CSV {} bytes identical={}, figure CSV identical={}", a.len(), a == b, figure_csv[0] == figure_csv[1]))
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Verdict); 10] = [
        (1, "bound values", Duration::from_secs(1), bounds_values),
        (2, "all-ones reproduction", Duration::from_secs(120), all_ones),
        (3, "necessary-bound tightness", Duration::from_secs(300), necessary_tightness),
        (4, "low-rank claim", Duration::from_secs(1), low_rank_claim),
        (5, "unit-vector variance", Duration::from_secs(30), unit_variance),
        (6, "sufficient-bound validity", Duration::from_secs(600), sufficient_validity),
        (7, "projection rank", Duration::from_secs(60), projection_rank),
        (8, "theta-sweep trends", Duration::from_secs(900), theta_trends),
        (9, "special-function identities", Duration::from_secs(1), special_functions),
        (10, "reproducibility", Duration::from_secs(60), reproducibility),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {} [{:.2}s, budget {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
