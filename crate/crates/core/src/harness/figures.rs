//! Figure data generation: every figure writes `<id>.csv` and `<id>.svg`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::svg::{self, Panel, Series};
use super::{first_passage_samples, min_sample_size, render_csv, success_curve, CsvRow, DEFAULT_TRIALS};
use crate::bounds::{
    gaussian_necessary_min_n, phi, unit_with_replacement_bound, unit_without_replacement_bound, TolerancePair,
};
use crate::error::{Error, Result};
use crate::linop::{generate, GeneratorFamily, GeneratorSpec, ImplicitOperator};
use crate::sampler::ProbeDistribution;
use crate::stats::{DiagnosticsOptions, Histogram, MatrixDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    All1s,
    Thetas,
    NecRank,
    RandsampBounds,
    Convergence,
    KDistributions,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::All1s,
        FigureId::Thetas,
        FigureId::NecRank,
        FigureId::RandsampBounds,
        FigureId::Convergence,
        FigureId::KDistributions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::All1s => "all1s",
            FigureId::Thetas => "thetas",
            FigureId::NecRank => "nec-rank",
            FigureId::RandsampBounds => "randsamp-bounds",
            FigureId::Convergence => "convergence",
            FigureId::KDistributions => "k-distributions",
        }
    }

    /// Recognised configuration keys (besides `figure`).
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            FigureId::All1s => &["n", "eps", "trials", "seed", "n_max", "methods"],
            FigureId::Thetas => {
                &["n", "eps", "delta", "trials", "seed", "n_max", "methods", "theta_min", "theta_max", "theta_points"]
            }
            FigureId::NecRank => &[
                "n",
                "eps",
                "delta",
                "trials",
                "seed",
                "ranks",
                "realization",
                "n_hi",
                "nec_eps",
                "nec_delta",
                "r_max",
            ],
            FigureId::RandsampBounds => &["n", "eps", "delta", "k_min", "k_max", "k_points"],
            FigureId::Convergence => &["generator", "eps", "delta", "trials", "seed", "n_max", "methods"],
            FigureId::KDistributions => &["generator", "seed", "bins"],
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Figure id plus string parameters; unset keys take per-figure defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureConfig {
    pub id: FigureId,
    params: BTreeMap<String, String>,
}

impl FigureConfig {
    pub fn new(id: FigureId) -> Self {
        Self { id, params: BTreeMap::new() }
    }

    /// Parse a flat `key=value` file. `#` starts a comment. A `figure=` line
    /// sets the id; otherwise `id` must be given.
    pub fn from_key_values(text: &str, id: Option<FigureId>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut file_id = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key=value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "figure" {
                file_id = Some(v.parse::<FigureId>()?);
            } else {
                pairs.push((k.to_string(), v.to_string()));
            }
        }
        let id = id.or(file_id).ok_or_else(|| Error::InvalidArgument("config does not name a figure".into()))?;
        let mut cfg = Self::new(id);
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.id.keys().contains(&key) {
            return Err(Error::InvalidArgument(format!(
                "unknown key `{key}` for figure {} (allowed: {})",
                self.id,
                self.id.keys().join(", ")
            )));
        }
        self.params.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Result<Self> {
        self.set(key, &value.to_string())?;
        Ok(self)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn num<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        let raw = self.get(key).unwrap_or(default);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::InvalidArgument(format!("bad entry `{s}` in `{key}`"))))
            .collect()
    }

    fn methods(&self, default: &str) -> Result<Vec<ProbeDistribution>> {
        self.list("methods", default)
    }

    fn tolerance(&self, eps: f64, delta: f64) -> Result<TolerancePair> {
        TolerancePair::new(self.num("eps", eps)?, self.num("delta", delta)?)
    }

    fn generator(&self, default: &str, seed: u64) -> Result<(GeneratorSpec, ImplicitOperator)> {
        let spec = GeneratorSpec::parse(self.get("generator").unwrap_or(default), seed)?;
        let op = generate(&spec)?;
        Ok((spec, op))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub rows: Vec<CsvRow>,
    /// Some min-N search hit its cap.
    pub censored: bool,
}

/// Log-spaced grid of `points` values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points).map(|k| 10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)).collect()
}

fn lin_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

struct Built {
    rows: Vec<CsvRow>,
    panels: Vec<Panel>,
    censored: bool,
}

/// Compute figure `config.id` and write `<out_dir>/<id>.csv` and `<id>.svg`.
pub fn run_figure(config: &FigureConfig, out_dir: impl AsRef<Path>) -> Result<FigureOutput> {
    let built = match config.id {
        FigureId::All1s => all1s(config)?,
        FigureId::Thetas => thetas(config)?,
        FigureId::NecRank => nec_rank(config)?,
        FigureId::RandsampBounds => randsamp_bounds(config)?,
        FigureId::Convergence => convergence(config)?,
        FigureId::KDistributions => k_distributions(config)?,
    };
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", config.id));
    let svg_path = dir.join(format!("{}.svg", config.id));
    std::fs::write(&csv_path, render_csv(&built.rows))?;
    std::fs::write(&svg_path, svg::render(&built.panels))?;
    Ok(FigureOutput { csv_path, svg_path, rows: built.rows, censored: built.censored })
}

fn all1s(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let n: usize = cfg.num("n", 10_000)?;
    let eps: f64 = cfg.num("eps", 0.05)?;
    let trials: u64 = cfg.num("trials", 100)?;
    let seed: u64 = cfg.num("seed", 0)?;
    let n_max: u64 = cfg.num("n_max", 100_000)?;
    let methods = cfg.methods("hutchinson,gaussian,unit")?;
    let op = generate(&GeneratorSpec::new(GeneratorFamily::AllOnes, n, seed))?;

    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut censored = false;
    for method in methods {
        let hits = first_passage_samples(&op, method, eps, trials, seed, n_max)?;
        let mut pts = Vec::new();
        for (t, hit) in hits.iter().enumerate() {
            censored |= hit.is_none();
            rows.push(CsvRow {
                figure: name.into(),
                method: method.name().into(),
                n,
                rank: Some(1),
                param: Some(t as f64),
                samples: *hit,
                trials: Some(1),
                successes: Some(u64::from(hit.is_some())),
                success_prob: Some(if hit.is_some() { 1.0 } else { 0.0 }),
                eps,
                delta: 0.0,
                seed: Some(seed),
            });
            if let Some(k) = hit {
                pts.push(((t + 1) as f64, *k as f64));
            }
        }
        series.push(Series::new(method.name(), pts));
    }
    let panel = Panel::lines(&format!("all-ones n={n}, eps={eps}"), "trial", "first N within eps", series).log_y();
    Ok(Built { rows, panels: vec![panel], censored })
}

fn thetas(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let n: usize = cfg.num("n", 1000)?;
    let tol = cfg.tolerance(0.2, 0.2)?;
    let trials: u64 = cfg.num("trials", DEFAULT_TRIALS)?;
    let seed: u64 = cfg.num("seed", 0)?;
    let n_max: u64 = cfg.num("n_max", 100_000)?;
    let methods = cfg.methods("hutchinson,gaussian,unit,unit-noreplace")?;
    let grid = log_grid(cfg.num("theta_min", 1e-5)?, cfg.num("theta_max", 1.0)?, cfg.num("theta_points", 11)?);

    let mut rows = Vec::new();
    let mut censored = false;
    let mut series: Vec<Series> = methods.iter().map(|m| Series::new(m.name(), Vec::new())).collect();
    for &theta in &grid {
        let op = generate(&GeneratorSpec::new(GeneratorFamily::DecayingRankOne { theta }, n, seed))?;
        for (k, &method) in methods.iter().enumerate() {
            let res = min_sample_size(&op, method, tol, trials, seed, n_max)?;
            censored |= res.censored();
            let last = res.probe_history.last().expect("non-empty history");
            let mut row = CsvRow::from_record(name, last, Some(1), Some(theta));
            if res.censored() {
                row.samples = None;
            } else {
                series[k].points.push((theta, last.samples as f64));
            }
            rows.push(row);
        }
    }
    let panel = Panel::lines(&format!("rank-one decay, n={n}"), "theta", "min N", series).log_x().log_y();
    Ok(Built { rows, panels: vec![panel], censored })
}

fn nec_rank(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let nec_tol = TolerancePair::new(cfg.num("nec_eps", 0.02)?, cfg.num("nec_delta", 0.02)?)?;
    let r_max: u64 = cfg.num("r_max", 100)?;
    let n: usize = cfg.num("n", 2000)?;
    let tol = cfg.tolerance(0.1, 0.1)?;
    let trials: u64 = cfg.num("trials", DEFAULT_TRIALS)?;
    let seed: u64 = cfg.num("seed", 0)?;
    let ranks: Vec<usize> = cfg.list("ranks", "100,400")?;
    let realization = cfg.get("realization").unwrap_or("diagonal");
    let n_hi_cfg: Option<u64> = cfg.get("n_hi").map(|_| cfg.num("n_hi", 0)).transpose()?;

    let mut rows = Vec::new();
    let mut analytic = Vec::new();
    for r in 1..=r_max {
        let big_n = gaussian_necessary_min_n(r, nec_tol)?;
        analytic.push((r as f64, big_n as f64));
        rows.push(CsvRow {
            figure: name.into(),
            method: "necessary-bound".into(),
            n: 0,
            rank: Some(r),
            param: None,
            samples: Some(big_n),
            trials: None,
            successes: None,
            success_prob: None,
            eps: nec_tol.eps(),
            delta: nec_tol.delta(),
            seed: None,
        });
    }
    let mut panels = vec![Panel::lines(
        &format!("necessary N, eps=delta={}", nec_tol.eps()),
        "rank r",
        "N",
        vec![Series::new("necessary N", analytic)],
    )
    .log_y()];

    let mut series = Vec::new();
    for &r in &ranks {
        let family = match realization {
            "diagonal" => GeneratorFamily::DiagonalSkewed { rank: r, skew: 0.0 },
            "rotated" => GeneratorFamily::EqualEigen { rank: r },
            other => {
                return Err(Error::InvalidArgument(format!("realization `{other}` (expected diagonal|rotated)")))
            }
        };
        let op = generate(&GeneratorSpec::new(family, n, seed))?;
        let n_nec = gaussian_necessary_min_n(r as u64, tol)?;
        let n_hi = n_hi_cfg.unwrap_or((2 * n_nec).max(10));
        let curve = success_curve(&op, ProbeDistribution::Gaussian, tol, trials, seed, n_hi)?;
        let mut emp = Vec::new();
        let mut ana = Vec::new();
        for rec in &curve {
            rows.push(CsvRow::from_record(name, rec, Some(r as u64), None));
            let p = 1.0 - phi(tol.eps(), rec.samples as f64 * r as f64)?;
            rows.push(CsvRow {
                figure: name.into(),
                method: "analytic".into(),
                n,
                rank: Some(r as u64),
                param: None,
                samples: Some(rec.samples),
                trials: None,
                successes: None,
                success_prob: Some(p),
                eps: tol.eps(),
                delta: tol.delta(),
                seed: None,
            });
            emp.push((rec.samples as f64, rec.success_prob));
            ana.push((rec.samples as f64, p));
        }
        series.push(Series::new(format!("empirical r={r}"), emp));
        series.push(Series::new(format!("1-Phi r={r}"), ana).dashed());
    }
    panels.push(Panel::lines(&format!("equal eigenvalues, n={n}"), "N", "success probability", series));
    Ok(Built { rows, panels, censored: false })
}

fn randsamp_bounds(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let n: u64 = cfg.num("n", 1000)?;
    let tol = cfg.tolerance(0.05, 0.05)?;
    let grid = lin_grid(cfg.num("k_min", 0.0)?, cfg.num("k_max", 2.0)?, cfg.num("k_points", 41)?);
    let mut rows = Vec::new();
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for &k in &grid {
        let u1 = unit_with_replacement_bound(k, tol)?;
        let u2 = unit_without_replacement_bound(k, n, tol)?;
        for (method, big_n) in [("unit", u1), ("unit-noreplace", u2)] {
            rows.push(CsvRow {
                figure: name.into(),
                method: method.into(),
                n: n as usize,
                rank: None,
                param: Some(k),
                samples: Some(big_n),
                trials: None,
                successes: None,
                success_prob: None,
                eps: tol.eps(),
                delta: tol.delta(),
                seed: None,
            });
        }
        with.push((k, u1 as f64));
        without.push((k, u2 as f64));
    }
    let panel = Panel::lines(
        &format!("unit-vector sufficient N, n={n}"),
        "K_U",
        "N",
        vec![Series::new("with replacement", with), Series::new("without replacement", without)],
    )
    .log_y();
    Ok(Built { rows, panels: vec![panel], censored: false })
}

fn convergence(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let seed: u64 = cfg.num("seed", 0)?;
    let (spec, op) = cfg.generator("gram-gaussian:n=500,m=50", seed)?;
    let tol = cfg.tolerance(0.05, 0.05)?;
    let trials: u64 = cfg.num("trials", DEFAULT_TRIALS)?;
    let n_max: u64 = cfg.num("n_max", 10_000)?;
    let methods = cfg.methods("hutchinson,gaussian,unit,unit-noreplace")?;
    let rank = op.rank_hint().map(|r| r as u64);

    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut censored = false;
    let mut top = 1.0f64;
    for method in methods {
        let res = min_sample_size(&op, method, tol, trials, seed, n_max)?;
        censored |= res.censored();
        let mut pts = Vec::new();
        for rec in &res.probe_history {
            rows.push(CsvRow::from_record(name, rec, rank, None));
            pts.push((rec.samples as f64, rec.success_prob));
            top = top.max(rec.samples as f64);
        }
        series.push(Series::new(method.name(), pts));
    }
    series.push(Series::new("1 - delta", vec![(1.0, 1.0 - tol.delta()), (top, 1.0 - tol.delta())]).dashed());
    let panel = Panel::lines(&spec.to_string(), "N", "success probability", series).log_x();
    Ok(Built { rows, panels: vec![panel], censored })
}

fn k_distributions(cfg: &FigureConfig) -> Result<Built> {
    let name = cfg.id.name();
    let seed: u64 = cfg.num("seed", 0)?;
    let bins: usize = cfg.num("bins", 50)?;
    let (spec, op) = cfg.generator("gram-gaussian:n=500,m=50", seed)?;
    let opts = DiagnosticsOptions { materialize: true, bins, seed, ..DiagnosticsOptions::default() };
    let diag = MatrixDiagnostics::compute(&op, opts)?;
    let n = op.dim();

    let k_h = Histogram::from_values(diag.k_h_per_column.as_deref().unwrap_or(&[]), bins);
    let eig = Histogram::from_values(diag.spectrum_ratio_per_eig.as_deref().unwrap_or(&[]), bins);
    let hists = [("k_h", "K_H^j", &k_h), ("k_u", "K_U^(i,j)", &diag.k_u_pairs_summary), ("eigenvalue", "lambda_j / tr", &eig)];

    let mut rows = Vec::new();
    let mut panels = Vec::new();
    for (method, label, h) in hists {
        let total = h.total();
        for (b, &count) in h.counts.iter().enumerate() {
            rows.push(CsvRow {
                figure: name.into(),
                method: method.into(),
                n,
                rank: diag.rank_estimate.map(|r| r as u64),
                param: Some(h.edges[b]),
                samples: None,
                trials: Some(total),
                successes: Some(count),
                success_prob: Some(if total > 0 { count as f64 / total as f64 } else { 0.0 }),
                eps: 0.0,
                delta: 0.0,
                seed: Some(seed),
            });
        }
        panels.push(Panel::bars(&format!("{label}: {spec}"), label, h.edges.clone(), h.counts.clone()));
    }
    Ok(Built { rows, panels, censored: false })
}
