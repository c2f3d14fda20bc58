//! Matrix diagnostics that drive the matrix-dependent bounds: `K_H`, `K_G`,
//! `K_U`, their per-index distributions, the spectral norm and a rank estimate,
//! plus the closed-form variances of the unit-vector estimators.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linop::{dot, exact_trace, DenseMatrix, ImplicitOperator};
use crate::sampler::fill_standard_normal;

pub const DEFAULT_POWER_TOL: f64 = 1e-8;
pub const DEFAULT_POWER_MAX_ITERS: usize = 5000;
/// Largest dimension for which the dense symmetric eigensolver is run.
pub const DENSE_EIGEN_LIMIT: usize = 2000;
/// Largest dimension that may be materialized for `K_H`.
pub const MATERIALIZE_LIMIT: usize = 10_000;

/// Equal-width histogram over `[edges[0], edges[last]]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self { edges: vec![0.0, 0.0], counts: vec![0] };
        }
        let edges = equal_edges(lo, hi, bins);
        let mut counts = vec![0u64; bins];
        let width = hi - lo;
        for &v in values {
            let b = if width > 0.0 { (((v - lo) / width) * bins as f64) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

fn equal_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|b| if b == bins { hi } else { lo + (hi - lo) * b as f64 / bins as f64 })
        .collect()
}

/// Off-diagonal energy per column, `K_H^j = (‖a_j‖² - a_jj²) / a_jj²`, and its max.
///
/// Columns with `a_jj = 0` must vanish identically for SPSD input and are
/// dropped, so `per_column` lists surviving columns only.
pub fn k_h(dense: &DenseMatrix) -> Result<(f64, Vec<f64>)> {
    let n = dense.dim();
    let mut col_sq = vec![0.0; n];
    for k in 0..n {
        for (c, a) in col_sq.iter_mut().zip(dense.row(k)) {
            *c += a * a;
        }
    }
    let mut per_column = Vec::with_capacity(n);
    for (j, &norm_sq) in col_sq.iter().enumerate() {
        let d = dense.get(j, j);
        if d < 0.0 {
            return Err(Error::NotSpsd(format!("negative diagonal entry a[{j},{j}] = {d}")));
        }
        if d == 0.0 {
            if norm_sq != 0.0 {
                return Err(Error::NotSpsd(format!("zero diagonal at {j} with a nonzero column")));
            }
            continue;
        }
        per_column.push(((norm_sq - d * d) / (d * d)).max(0.0));
    }
    let k = per_column.iter().copied().fold(0.0, f64::max);
    Ok((k, per_column))
}

/// Number of pairs `i < j` of the sorted values with `s_j - s_i < t`.
fn pairs_below(sorted: &[f64], t: f64) -> u64 {
    let mut total = 0u64;
    for i in 0..sorted.len() {
        let rest = &sorted[i + 1..];
        total += rest.partition_point(|&s| s - sorted[i] < t) as u64;
    }
    total
}

/// `K_U = n (max a_jj - min a_jj) / |tr|` and a histogram of the pairwise
/// values `n |a_ii - a_jj| / |tr|` over `i < j`, counted from the sorted
/// diagonal without enumerating the pairs.
pub fn k_u(diag: &[f64], trace: f64, bins: usize) -> Result<(f64, Histogram)> {
    if trace == 0.0 || !trace.is_finite() {
        return Err(Error::ZeroTrace);
    }
    let n = diag.len();
    let bins = bins.max(1);
    let scale = n as f64 / trace.abs();
    let mut sorted: Vec<f64> = diag.iter().map(|d| d * scale).collect();
    sorted.sort_by(f64::total_cmp);
    let k = match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let total_pairs = (n as u64) * (n.saturating_sub(1) as u64) / 2;
    let edges = equal_edges(0.0, k, bins);
    let mut counts = vec![0u64; bins];
    if k == 0.0 {
        counts[0] = total_pairs;
    } else {
        let mut below = 0u64;
        for b in 0..bins {
            let next = if b + 1 == bins { total_pairs } else { pairs_below(&sorted, edges[b + 1]) };
            counts[b] = next - below;
            below = next;
        }
    }
    Ok((k, Histogram { edges, counts }))
}

/// Largest eigenvalue of an SPSD operator by power iteration.
///
/// Stops once successive Rayleigh quotients differ by less than `tol`
/// relative. A second start vector is tried when the first stagnates or lands
/// in the null space.
pub fn spectral_norm(op: &ImplicitOperator, tol: f64, max_iters: usize, seed: u64) -> Result<f64> {
    let n = op.dim();
    let mut best = 0.0f64;
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut all_null = true;
    for attempt in 0..2u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        fill_standard_normal(&mut rng, &mut v);
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut prev = f64::NAN;
        for _ in 0..max_iters {
            op.apply_into(&v, &mut w)?;
            let rq = dot(&v, &w);
            let wn = dot(&w, &w).sqrt();
            if wn == 0.0 {
                break;
            }
            all_null = false;
            best = best.max(rq);
            if (rq - prev).abs() <= tol * rq.abs() {
                return Ok(rq);
            }
            prev = rq;
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / wn;
            }
        }
    }
    if all_null {
        return Ok(0.0);
    }
    Err(Error::NoConvergence { iters: max_iters, estimate: best })
}

/// Closed-form variance of the unit-vector estimator with `samples` draws.
///
/// With replacement: `(n Σ a_jj² - tr²) / N`. Without replacement the same
/// quantity is multiplied by `(n - N) / (n - 1)`.
pub fn variance_unit(diag: &[f64], trace: f64, samples: usize, without_replacement: bool) -> Result<f64> {
    let n = diag.len();
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if without_replacement && samples > n {
        return Err(Error::Exhausted { n });
    }
    let nf = n as f64;
    let spread = (nf * diag.iter().map(|d| d * d).sum::<f64>() - trace * trace).max(0.0);
    let with = spread / samples as f64;
    if !without_replacement {
        return Ok(with);
    }
    if n == 1 {
        return Ok(0.0);
    }
    Ok(with * (nf - samples as f64) / (nf - 1.0))
}

/// Eigenvalues (ascending) of a symmetric dense matrix.
pub fn symmetric_eigenvalues(dense: &DenseMatrix) -> Vec<f64> {
    let n = dense.dim();
    let m = DMatrix::from_row_slice(n, n, dense.entries());
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsOptions {
    /// Materialize the operator (needed for `K_H` and the eigenvalue list).
    pub materialize: bool,
    pub bins: usize,
    pub power_tol: f64,
    pub power_max_iters: usize,
    pub seed: u64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            materialize: false,
            bins: 50,
            power_tol: DEFAULT_POWER_TOL,
            power_max_iters: DEFAULT_POWER_MAX_ITERS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixDiagnostics {
    pub n: usize,
    pub trace: f64,
    pub k_h: Option<f64>,
    pub k_h_per_column: Option<Vec<f64>>,
    pub k_g: f64,
    /// `λ_j / tr(A)`, descending, when the dense eigensolver ran.
    pub spectrum_ratio_per_eig: Option<Vec<f64>>,
    pub k_u: f64,
    pub k_u_pairs_summary: Histogram,
    pub spectral_norm: f64,
    pub rank_estimate: Option<usize>,
}

impl MatrixDiagnostics {
    pub fn compute(op: &ImplicitOperator, opts: DiagnosticsOptions) -> Result<Self> {
        let n = op.dim();
        let trace = exact_trace(op);
        if trace == 0.0 {
            return Err(Error::ZeroTrace);
        }
        let diag = op.diagonal_entries();
        let (k_u, pairs) = k_u(&diag, trace, opts.bins)?;

        let dense = if opts.materialize {
            if n > MATERIALIZE_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "refusing to materialize n = {n} > {MATERIALIZE_LIMIT}"
                )));
            }
            Some(op.to_dense())
        } else {
            op.as_dense().cloned()
        };

        let (k_h, k_h_per_column) = match &dense {
            Some(d) => {
                let (k, per) = k_h(d)?;
                (Some(k), Some(per))
            }
            None => (None, None),
        };

        let eigen = dense.as_ref().filter(|_| n <= DENSE_EIGEN_LIMIT).map(symmetric_eigenvalues);
        let spectral_norm = match &eigen {
            Some(ev) => ev.last().copied().unwrap_or(0.0),
            None => spectral_norm(op, opts.power_tol, opts.power_max_iters, opts.seed)?,
        };
        let rank_estimate = match &eigen {
            Some(ev) => {
                let top = ev.last().copied().unwrap_or(0.0);
                Some(ev.iter().filter(|&&l| l > 1e-10 * top).count())
            }
            None => op.rank_hint(),
        };
        let spectrum_ratio_per_eig = eigen.map(|ev| ev.iter().rev().map(|l| l / trace).collect());

        Ok(Self {
            n,
            trace,
            k_h,
            k_h_per_column,
            k_g: spectral_norm / trace,
            spectrum_ratio_per_eig,
            k_u,
            k_u_pairs_summary: pairs,
            spectral_norm,
            rank_estimate,
        })
    }

    /// Flat `key=value` block, one pair per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.17e}"));
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "trace={:.17e}", self.trace);
        let _ = writeln!(s, "k_h={}", opt(self.k_h));
        let _ = writeln!(s, "k_g={:.17e}", self.k_g);
        let _ = writeln!(s, "k_u={:.17e}", self.k_u);
        let _ = writeln!(s, "spectral_norm={:.17e}", self.spectral_norm);
        let _ = writeln!(s, "rank_estimate={}", self.rank_estimate.map_or_else(|| "-".into(), |r| r.to_string()));
        s
    }

    pub const CSV_HEADER: &'static str = "n,trace,k_h,k_g,k_u,spectral_norm,rank_estimate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{},{:e},{:e},{:e},{}",
            self.n,
            self.trace,
            self.k_h.map_or_else(String::new, |k| format!("{k:e}")),
            self.k_g,
            self.k_u,
            self.spectral_norm,
            self.rank_estimate.map_or_else(String::new, |r| r.to_string())
        )
    }
}
