//! `tracest` command-line interface.
//!
//! Exit status: 0 success, 1 a min-N search hit its cap, 2 usage error,
//! 3 numeric failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bounds::{
    c_factor, gaussian_necessary_min_n, phi, projection_rank_samples, BoundReport, MatrixProperties, TolerancePair,
};
use crate::error::{Error, Result};
use crate::estimator::estimate_trace;
use crate::harness::{
    first_passage_samples, min_sample_size, render_csv, run_figure, success_probability, CsvRow, FigureConfig,
    FigureId, CSV_HEADER, DEFAULT_TRIALS,
};
use crate::linop::mtx::{read_matrix_market_file, write_matrix_market, MtxLayout, MtxSymmetry};
use crate::linop::{exact_trace, generate, GeneratorSpec, ImplicitOperator};
use crate::sampler::{ProbeDistribution, SeededStream};
use crate::stats::{DiagnosticsOptions, MatrixDiagnostics, DEFAULT_POWER_MAX_ITERS, DEFAULT_POWER_TOL};

const GENERATOR_HELP: &str = "Generator spec `family:key=val,...`. Families: \
all-ones:n | rank-one-decay:n,theta | gram-gaussian:n,m[,density] | gram-uniform:n,m[,density] | \
diag-skewed:n,rank[,skew] | projection:n,rank | equal-eigen:n,rank | diag-const:n,value. \
Every family accepts seed=S (default: --seed)";

#[derive(Debug, Parser)]
#[command(name = "tracest", version, about = "Randomized trace estimation, sample-size bounds and experiments")]
pub struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Worker threads for trial-parallel runs [default: available cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed
    #[arg(long, global = true, env = "TRACEST_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Matrix Market file (.mtx)
    #[arg(long, conflicts_with = "generator")]
    pub matrix: Option<PathBuf>,
    #[arg(long, help = GENERATOR_HELP)]
    pub generator: Option<String>,
}

impl Source {
    fn given(&self) -> bool {
        self.matrix.is_some() || self.generator.is_some()
    }

    fn load(&self, seed: u64) -> Result<ImplicitOperator> {
        match (&self.matrix, &self.generator) {
            (Some(path), _) => read_matrix_market_file(path),
            (None, Some(spec)) => generate(&GeneratorSpec::parse(spec, seed)?),
            (None, None) => Err(Error::InvalidArgument("one of --matrix or --generator is required".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct Tolerance {
    /// Relative accuracy ε in (0, 1)
    #[arg(long)]
    pub eps: f64,
    /// Failure probability δ in (0, 1)
    #[arg(long)]
    pub delta: f64,
}

impl Tolerance {
    fn pair(&self) -> Result<TolerancePair> {
        TolerancePair::new(self.eps, self.delta)
    }
}

#[derive(Debug, Args)]
pub struct DiagnosticArgs {
    /// Materialize the operator densely (enables K_H and the eigenvalue list)
    #[arg(long)]
    pub materialize: bool,
    /// Histogram bins for the K_U pair distribution
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Relative tolerance of the power iteration for ‖A‖
    #[arg(long, default_value_t = DEFAULT_POWER_TOL)]
    pub power_tol: f64,
    /// Iteration cap of the power iteration
    #[arg(long, default_value_t = DEFAULT_POWER_MAX_ITERS)]
    pub power_max_iters: usize,
}

impl DiagnosticArgs {
    fn options(&self, seed: u64) -> DiagnosticsOptions {
        DiagnosticsOptions {
            materialize: self.materialize,
            bins: self.bins,
            power_tol: self.power_tol,
            power_max_iters: self.power_max_iters,
            seed,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<ProbeDistribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate tr(A) with N probe vectors
    Estimate {
        #[command(flatten)]
        source: Source,
        /// hutchinson | gaussian | unit | unit-noreplace
        #[arg(long, value_parser = parse_method, default_value = "gaussian")]
        method: ProbeDistribution,
        /// Number of probe vectors N (matvecs)
        #[arg(long)]
        samples: usize,
    },
    /// Sufficient and necessary sample sizes for an (ε, δ) guarantee
    Bounds {
        #[command(flatten)]
        tol: Tolerance,
        /// K_H: max column off-diagonal energy over squared diagonal (dimensionless)
        #[arg(long)]
        kh: Option<f64>,
        /// K_G = ‖A‖ / tr(A), in (0, 1]
        #[arg(long)]
        kg: Option<f64>,
        /// K_U = n · max|a_ii - a_jj| / tr(A)
        #[arg(long)]
        ku: Option<f64>,
        /// Matrix dimension (needed by the without-replacement bound)
        #[arg(long)]
        n: Option<u64>,
        /// Rank (enables the Gaussian necessary bound and the projector rank rule)
        #[arg(long)]
        rank: Option<u64>,
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        diag: DiagnosticArgs,
    },
    /// Smallest N the Gaussian estimator needs on a rank-r matrix
    Necessary {
        #[command(flatten)]
        tol: Tolerance,
        /// Rank r >= 1
        #[arg(long)]
        rank: u64,
        /// Dimension n, to report whether N > n
        #[arg(long)]
        n: Option<u64>,
    },
    /// Matrix diagnostics: trace, K_H, K_G, K_U, ‖A‖, rank
    Stats {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        diag: DiagnosticArgs,
    },
    /// Empirical success probabilities over seeded trials
    Experiment {
        #[command(flatten)]
        source: Source,
        /// Comma-separated methods
        #[arg(long, value_parser = parse_method, value_delimiter = ',', default_value = "hutchinson,gaussian,unit,unit-noreplace")]
        method: Vec<ProbeDistribution>,
        /// Relative accuracy ε in (0, 1)
        #[arg(long)]
        eps: f64,
        /// Failure probability δ in (0, 1)
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Independent trials T
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        /// Fixed sample count N; omit to search for the minimal N
        #[arg(long, conflicts_with = "first_passage")]
        samples: Option<u64>,
        /// Report per-trial first N with |estimate - tr| <= ε tr instead
        #[arg(long)]
        first_passage: bool,
        /// Cap of the N search
        #[arg(long, default_value_t = 10_000)]
        n_max: u64,
        /// Value of the `figure` CSV column
        #[arg(long, default_value = "experiment")]
        label: String,
    },
    /// Regenerate a figure's CSV and SVG
    Figure {
        /// all1s | thetas | nec-rank | randsamp-bounds | convergence | k-distributions
        #[arg(long)]
        id: String,
        /// Output directory
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Flat key=value config file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key (repeatable), e.g. --set trials=100
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Write a generated matrix in Matrix Market format
    Genmat {
        #[arg(long, help = GENERATOR_HELP)]
        generator: String,
        /// Output path; `-` for stdout
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Coordinate)]
        layout: Layout,
        /// Store the lower triangle only
        #[arg(long)]
        symmetric: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    fn text(&self, missing: &str) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => missing.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<Option<u64>> for Cell {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Cell::Missing, Cell::Int)
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => {
                let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|c| c.text("-")).collect()).collect();
                let widths: Vec<usize> = (0..self.columns.len())
                    .map(|k| cells.iter().map(|r| r[k].len()).chain([self.columns[k].len()]).max().unwrap_or(0))
                    .collect();
                let line = |items: &[String]| {
                    items
                        .iter()
                        .zip(&widths)
                        .map(|(s, w)| format!("{s:<w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                        .trim_end()
                        .to_string()
                };
                let header: Vec<String> = self.columns.iter().map(|s| s.to_string()).collect();
                let mut out = line(&header);
                out.push('\n');
                for r in &cells {
                    out.push_str(&line(r));
                    out.push('\n');
                }
                out
            }
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for r in &self.rows {
                    out.push_str(&r.iter().map(|c| c.text("")).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> =
                            self.columns.iter().zip(r).map(|(k, c)| (k.to_string(), c.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

struct Outcome {
    stdout: String,
    censored: bool,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, censored: false }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.workers {
        Some(0) => Err(Error::InvalidArgument("--workers must be >= 1".into())),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::InvalidArgument(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(outcome) => {
            let _ = out.write_all(outcome.stdout.as_bytes());
            if outcome.censored {
                let _ = writeln!(err, "tracest: criterion censored at N_max");
                1
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "tracest: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed;
    let format = cli.format;
    match &cli.command {
        Command::Estimate { source, method, samples } => cmd_estimate(source, *method, *samples, seed, format),
        Command::Bounds { tol, kh, kg, ku, n, rank, source, diag } => {
            let props = MatrixProperties { k_h: *kh, k_g: *kg, k_u: *ku, n: *n, rank: *rank };
            cmd_bounds(tol, props, source, diag, seed, format)
        }
        Command::Necessary { tol, rank, n } => cmd_necessary(tol, *rank, *n, format),
        Command::Stats { source, diag } => cmd_stats(source, diag, seed, format),
        Command::Experiment { source, method, eps, delta, trials, samples, first_passage, n_max, label } => {
            let tol = TolerancePair::new(*eps, *delta)?;
            let mode = match (samples, first_passage) {
                (Some(s), _) => Mode::Fixed(*s),
                (None, true) => Mode::FirstPassage(*n_max),
                (None, false) => Mode::MinN(*n_max),
            };
            cmd_experiment(source, method, tol, *trials, mode, label, seed, format)
        }
        Command::Figure { id, out_dir, config, set } => cmd_figure(id, out_dir, config.as_ref(), set, seed, format),
        Command::Genmat { generator, out, layout, symmetric } => cmd_genmat(generator, out, *layout, *symmetric, seed),
    }
}

fn cmd_estimate(
    source: &Source,
    method: ProbeDistribution,
    samples: usize,
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    if samples == 0 {
        return Err(Error::InvalidArgument("--samples must be >= 1".into()));
    }
    let op = source.load(seed)?;
    let est = estimate_trace(&op, method, samples, SeededStream::new(seed))?;
    let tr = exact_trace(&op);
    let rel = if tr != 0.0 { Cell::Float((est.value - tr).abs() / tr.abs()) } else { Cell::Missing };
    let mut t = Table::new(vec!["method", "n", "samples", "estimate", "exact_trace", "rel_error", "sample_variance", "seed"]);
    t.push(vec![
        Cell::Text(method.name().into()),
        Cell::Int(op.dim() as u64),
        Cell::Int(est.samples_used as u64),
        Cell::Float(est.value),
        Cell::Float(tr),
        rel,
        est.sample_variance().map_or(Cell::Missing, Cell::Float),
        Cell::Int(seed),
    ]);
    Ok(Outcome::ok(t.render(format)))
}

fn cmd_bounds(
    tol: &Tolerance,
    mut props: MatrixProperties,
    source: &Source,
    diag: &DiagnosticArgs,
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    let tol = tol.pair()?;
    if source.given() {
        let op = source.load(seed)?;
        let d = MatrixDiagnostics::compute(&op, diag.options(seed))?;
        props.k_h = props.k_h.or(d.k_h);
        props.k_g = props.k_g.or(Some(d.k_g));
        props.k_u = props.k_u.or(Some(d.k_u));
        props.n = props.n.or(Some(d.n as u64));
        props.rank = props.rank.or(d.rank_estimate.map(|r| r as u64));
    }
    let report = BoundReport::compute(tol, props)?;
    let rank_corollary = props.rank.map(|r| projection_rank_samples(r, tol.delta())).transpose()?;
    let mut t = Table::new(vec!["bound", "rule", "N"]);
    let rows: [(&str, &str, Option<u64>); 10] = [
        ("hutchinson", "N >= 6c", Some(report.hutchinson_simple)),
        ("gaussian", "N >= 8c", Some(report.gaussian_simple)),
        ("hutchinson-matrix", "N > 2 K_H c", report.hutchinson_matrix),
        ("gaussian-matrix", "N > 8 K_G c", report.gaussian_matrix),
        ("unit", "N > K_U^2 c / 2", report.unit_with_repl),
        ("unit-noreplace", "N >= (n+1) / (1 + (n-1) / (K_U^2 c / 2))", report.unit_without_repl),
        ("gaussian-necessary", "min N: Phi_eps(N r) <= delta", report.gaussian_necessary),
        ("gaussian-rank", "N >= 8 r ln(2/delta), projector of rank r", rank_corollary),
        ("hutchinson-effective", "min of hutchinson bounds", Some(report.hutchinson_effective)),
        ("gaussian-effective", "min of gaussian bounds", Some(report.gaussian_effective)),
    ];
    for (name, rule, value) in rows {
        t.push(vec![Cell::Text(name.into()), Cell::Text(rule.into()), value.into()]);
    }
    let mut text = t.render(format);
    if format == Format::Table {
        text.push_str(&format!("c = eps^-2 ln(2/delta) = {:.16e}\n", c_factor(tol)));
    }
    Ok(Outcome::ok(text))
}

fn cmd_necessary(tol: &Tolerance, rank: u64, n: Option<u64>, format: Format) -> Result<Outcome> {
    let tol = tol.pair()?;
    if rank == 0 {
        return Err(Error::InvalidArgument("--rank must be >= 1".into()));
    }
    let big_n = gaussian_necessary_min_n(rank, tol)?;
    let delta_at = phi(tol.eps(), big_n as f64 * rank as f64)?;
    let mut t = Table::new(vec!["rank", "N", "phi_at_N", "eps", "delta", "exceeds_n"]);
    t.push(vec![
        Cell::Int(rank),
        Cell::Int(big_n),
        Cell::Float(delta_at),
        Cell::Float(tol.eps()),
        Cell::Float(tol.delta()),
        n.map_or(Cell::Missing, |n| Cell::Bool(big_n > n)),
    ]);
    Ok(Outcome::ok(t.render(format)))
}

fn cmd_stats(source: &Source, diag: &DiagnosticArgs, seed: u64, format: Format) -> Result<Outcome> {
    let op = source.load(seed)?;
    let d = MatrixDiagnostics::compute(&op, diag.options(seed))?;
    let text = match format {
        Format::Table => d.to_key_value(),
        Format::Csv => format!("{}\n{}\n", MatrixDiagnostics::CSV_HEADER, d.csv_row()),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&d).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    Ok(Outcome::ok(text))
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Fixed(u64),
    MinN(u64),
    FirstPassage(u64),
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    source: &Source,
    methods: &[ProbeDistribution],
    tol: TolerancePair,
    trials: u64,
    mode: Mode,
    label: &str,
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(Error::InvalidArgument("--trials must be >= 1".into()));
    }
    match mode {
        Mode::Fixed(0) | Mode::MinN(0) | Mode::FirstPassage(0) => {
            return Err(Error::InvalidArgument("sample counts must be >= 1".into()))
        }
        _ => {}
    }
    let op = source.load(seed)?;
    let n = op.dim();
    if let Mode::Fixed(s) = mode {
        if methods.contains(&ProbeDistribution::UnitWithoutReplacement) && s > n as u64 {
            return Err(Error::Exhausted { n });
        }
    }
    let rank = op.rank_hint().map(|r| r as u64);
    let mut rows = Vec::new();
    let mut censored = false;
    for &method in methods {
        match mode {
            Mode::Fixed(s) => {
                let rec = success_probability(&op, method, s, tol, trials, seed)?;
                rows.push(CsvRow::from_record(label, &rec, rank, None));
            }
            Mode::MinN(n_max) => {
                let res = min_sample_size(&op, method, tol, trials, seed, n_max)?;
                censored |= res.censored();
                let last = res.probe_history.last().expect("non-empty history");
                let mut row = CsvRow::from_record(label, last, rank, None);
                if res.censored() {
                    row.samples = None;
                }
                rows.push(row);
            }
            Mode::FirstPassage(n_max) => {
                let hits = first_passage_samples(&op, method, tol.eps(), trials, seed, n_max)?;
                for (t, hit) in hits.into_iter().enumerate() {
                    censored |= hit.is_none();
                    rows.push(CsvRow {
                        figure: label.into(),
                        method: method.name().into(),
                        n,
                        rank,
                        param: Some(t as f64),
                        samples: hit,
                        trials: Some(1),
                        successes: Some(u64::from(hit.is_some())),
                        success_prob: Some(if hit.is_some() { 1.0 } else { 0.0 }),
                        eps: tol.eps(),
                        delta: tol.delta(),
                        seed: Some(seed),
                    });
                }
            }
        }
    }
    let stdout = match format {
        Format::Csv => render_csv(&rows),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Table => {
            let columns: Vec<&'static str> = CSV_HEADER.split(',').collect();
            let mut t = Table::new(columns);
            for r in &rows {
                t.push(r.to_csv_line().split(',').map(|s| Cell::Text(s.to_string())).collect());
            }
            t.render(Format::Table)
        }
    };
    Ok(Outcome { stdout, censored })
}

fn cmd_figure(
    id: &str,
    out_dir: &PathBuf,
    config: Option<&PathBuf>,
    set: &[String],
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    let id: FigureId = id.parse()?;
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg = FigureConfig::from_key_values(&text, None)?;
            if cfg.id != id {
                return Err(Error::InvalidArgument(format!("config is for figure {}, not {id}", cfg.id)));
            }
            cfg
        }
        None => FigureConfig::new(id),
    };
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if cfg.get("seed").is_none() && id.keys().contains(&"seed") {
        cfg.set("seed", &seed.to_string())?;
    }
    let output = run_figure(&cfg, out_dir)?;
    let mut t = Table::new(vec!["figure", "rows", "csv", "svg"]);
    t.push(vec![
        Cell::Text(id.name().into()),
        Cell::Int(output.rows.len() as u64),
        Cell::Text(output.csv_path.display().to_string()),
        Cell::Text(output.svg_path.display().to_string()),
    ]);
    Ok(Outcome { stdout: t.render(format), censored: output.censored })
}

fn cmd_genmat(generator: &str, out: &PathBuf, layout: Layout, symmetric: bool, seed: u64) -> Result<Outcome> {
    let spec = GeneratorSpec::parse(generator, seed)?;
    let op = generate(&spec)?;
    let layout = match layout {
        Layout::Coordinate => MtxLayout::Coordinate,
        Layout::Array => MtxLayout::Array,
    };
    let symmetry = if symmetric { MtxSymmetry::Symmetric } else { MtxSymmetry::General };
    if out.as_os_str() == "-" {
        let mut buf = Vec::new();
        write_matrix_market(&op, layout, symmetry, &mut buf)?;
        Ok(Outcome::ok(String::from_utf8_lossy(&buf).into_owned()))
    } else {
        let file = std::fs::File::create(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
        let mut w = std::io::BufWriter::new(file);
        write_matrix_market(&op, layout, symmetry, &mut w)?;
        w.flush()?;
        Ok(Outcome::ok(format!("wrote {} ({spec})\n", out.display())))
    }
}
