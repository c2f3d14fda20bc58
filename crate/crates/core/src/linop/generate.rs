use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, CsrMatrix, ImplicitOperator};
use crate::error::{Error, Result};
use crate::sampler::{fill_standard_normal, standard_normal_pair};

/// Test-matrix families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorFamily {
    /// `a_ij = 1`.
    AllOnes,
    /// `x xᵗ / ‖x‖²` with `x_j = exp(-j θ)`, `j = 1..n`.
    DecayingRankOne { theta: f64 },
    /// `CᵗC`, `C` is `m × n` with Bernoulli(`density`) support and N(0,1) values.
    GramGaussian { m: usize, density: f64 },
    /// As [`GeneratorFamily::GramGaussian`] with U(0,1) values.
    GramUniform { m: usize, density: f64 },
    /// Diagonal, rank `rank`, `λ_j ∝ exp(-skew j / rank)`, trace 1.
    DiagonalSkewed { rank: usize, skew: f64 },
    /// `Q Qᵗ` for a seeded orthonormal `n × rank` basis `Q`.
    Projection { rank: usize },
    /// `Q Qᵗ / rank`: every nonzero eigenvalue equals `1/rank`, trace 1.
    EqualEigen { rank: usize },
    /// `value · I`.
    DiagonalConstant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: GeneratorFamily, n: usize, seed: u64) -> Self {
        Self { family, n, seed }
    }

    /// Parse `family:key=val,key=val`. `seed` inside the string overrides
    /// `default_seed`.
    ///
    /// Families and keys:
    /// `all-ones:n`, `rank-one-decay:n,theta`, `gram-gaussian:n,m[,density]`,
    /// `gram-uniform:n,m[,density]`, `diag-skewed:n,rank[,skew]`,
    /// `projection:n,rank`, `equal-eigen:n,rank`, `diag-const:n,value`.
    pub fn parse(s: &str, default_seed: u64) -> Result<Self> {
        let bad = |msg: String| Error::InvalidSpec(format!("`{s}`: {msg}"));
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(bad(format!("duplicate key `{k}`")));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        fn num<T: std::str::FromStr>(key: &str, v: Option<String>) -> std::result::Result<Option<T>, String> {
            v.map(|v| v.parse::<T>().map_err(|_| format!("bad value `{v}` for `{key}`"))).transpose()
        }
        let req = |key: &str, v: Option<String>| v.ok_or_else(|| format!("missing `{key}`"));

        let n: usize = num("n", Some(req("n", take("n")).map_err(bad)?)).map_err(bad)?.unwrap();
        let seed: u64 = num("seed", take("seed")).map_err(bad)?.unwrap_or(default_seed);
        let family = match name.trim() {
            "all-ones" => GeneratorFamily::AllOnes,
            "rank-one-decay" => GeneratorFamily::DecayingRankOne {
                theta: num("theta", Some(req("theta", take("theta")).map_err(bad)?)).map_err(bad)?.unwrap(),
            },
            fam @ ("gram-gaussian" | "gram-uniform") => {
                let m = num("m", Some(req("m", take("m")).map_err(bad)?)).map_err(bad)?.unwrap();
                let density = num("density", take("density")).map_err(bad)?.unwrap_or(1.0);
                if fam == "gram-gaussian" {
                    GeneratorFamily::GramGaussian { m, density }
                } else {
                    GeneratorFamily::GramUniform { m, density }
                }
            }
            "diag-skewed" => GeneratorFamily::DiagonalSkewed {
                rank: num("rank", Some(req("rank", take("rank")).map_err(bad)?)).map_err(bad)?.unwrap(),
                skew: num("skew", take("skew")).map_err(bad)?.unwrap_or(0.0),
            },
            "projection" => GeneratorFamily::Projection {
                rank: num("rank", Some(req("rank", take("rank")).map_err(bad)?)).map_err(bad)?.unwrap(),
            },
            "equal-eigen" => GeneratorFamily::EqualEigen {
                rank: num("rank", Some(req("rank", take("rank")).map_err(bad)?)).map_err(bad)?.unwrap(),
            },
            "diag-const" => GeneratorFamily::DiagonalConstant {
                value: num("value", Some(req("value", take("value")).map_err(bad)?)).map_err(bad)?.unwrap(),
            },
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(bad(format!("unexpected key `{k}`")));
        }
        let spec = Self { family, n, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSpec("n must be >= 1".into()));
        }
        let check_rank = |rank: usize| {
            if rank > n {
                Err(Error::RankExceedsDimension { rank, n })
            } else if rank == 0 {
                Err(Error::InvalidSpec("rank must be >= 1".into()))
            } else {
                Ok(())
            }
        };
        match self.family {
            GeneratorFamily::AllOnes => Ok(()),
            GeneratorFamily::DecayingRankOne { theta } => {
                if theta > 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("theta = {theta} must be positive")))
                }
            }
            GeneratorFamily::GramGaussian { m, density } | GeneratorFamily::GramUniform { m, density } => {
                if m == 0 {
                    Err(Error::InvalidSpec("m must be >= 1".into()))
                } else if !(density > 0.0 && density <= 1.0) {
                    Err(Error::InvalidSpec(format!("density = {density} must lie in (0, 1]")))
                } else {
                    Ok(())
                }
            }
            GeneratorFamily::DiagonalSkewed { rank, skew } => {
                check_rank(rank)?;
                if skew >= 0.0 && skew.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!("skew = {skew} must be >= 0")))
                }
            }
            GeneratorFamily::Projection { rank } | GeneratorFamily::EqualEigen { rank } => check_rank(rank),
            GeneratorFamily::DiagonalConstant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("value must be finite".into()))
                }
            }
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        match self.family {
            GeneratorFamily::AllOnes => write!(f, "all-ones:n={n}")?,
            GeneratorFamily::DecayingRankOne { theta } => write!(f, "rank-one-decay:n={n},theta={theta}")?,
            GeneratorFamily::GramGaussian { m, density } => write!(f, "gram-gaussian:n={n},m={m},density={density}")?,
            GeneratorFamily::GramUniform { m, density } => write!(f, "gram-uniform:n={n},m={m},density={density}")?,
            GeneratorFamily::DiagonalSkewed { rank, skew } => write!(f, "diag-skewed:n={n},rank={rank},skew={skew}")?,
            GeneratorFamily::Projection { rank } => write!(f, "projection:n={n},rank={rank}")?,
            GeneratorFamily::EqualEigen { rank } => write!(f, "equal-eigen:n={n},rank={rank}")?,
            GeneratorFamily::DiagonalConstant { value } => write!(f, "diag-const:n={n},value={value}")?,
        }
        write!(f, ",seed={}", self.seed)
    }
}

const GENERATOR_STREAM: u64 = u64::MAX;

/// Build the operator described by `spec`. Deterministic in `(spec, seed)`.
pub fn generate(spec: &GeneratorSpec) -> Result<ImplicitOperator> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // probe streams count up from 0; keep matrix draws off that range
    rng.set_stream(GENERATOR_STREAM);
    let op = match spec.family {
        GeneratorFamily::AllOnes => ImplicitOperator::rank_one(vec![1.0; n], 1.0),
        GeneratorFamily::DecayingRankOne { theta } => {
            let x: Vec<f64> = (1..=n).map(|j| (-(j as f64) * theta).exp()).collect();
            let norm_sq = dot(&x, &x);
            ImplicitOperator::rank_one(x, 1.0 / norm_sq)
        }
        GeneratorFamily::GramGaussian { m, density } => {
            gram(n, m, density, &mut rng, |r| standard_normal_pair(r).0)
        }
        GeneratorFamily::GramUniform { m, density } => gram(n, m, density, &mut rng, |r| r.random::<f64>()),
        GeneratorFamily::DiagonalSkewed { rank, skew } => {
            let mut d = vec![0.0; n];
            for (j, dj) in d.iter_mut().take(rank).enumerate() {
                *dj = (-skew * (j + 1) as f64 / rank as f64).exp();
            }
            let total: f64 = d.iter().sum();
            d.iter_mut().for_each(|v| *v /= total);
            ImplicitOperator::diagonal(d)
        }
        GeneratorFamily::Projection { rank } => {
            ImplicitOperator::scaled_projection(n, orthonormal_basis(n, rank, &mut rng), rank, 1.0)?
        }
        GeneratorFamily::EqualEigen { rank } => ImplicitOperator::scaled_projection(
            n,
            orthonormal_basis(n, rank, &mut rng),
            rank,
            1.0 / rank as f64,
        )?,
        GeneratorFamily::DiagonalConstant { value } => ImplicitOperator::diagonal(vec![value; n]),
    };
    Ok(op)
}

/// `CᵗC` with `C` scaled so that `tr(CᵗC) = ‖C‖_F² = 1`.
fn gram(
    n: usize,
    m: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
    mut value: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> ImplicitOperator {
    let dense = density >= 1.0;
    let rows: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|_| {
            (0..n)
                .filter_map(|j| {
                    if dense || rng.random::<f64>() < density {
                        Some((j, value(rng)))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut c = CsrMatrix::from_rows(n, rows);
    let fro = c.frobenius_norm_sq();
    if fro > 0.0 {
        c.scale(1.0 / fro.sqrt());
    }
    ImplicitOperator::gram(c)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass over seeded
/// standard-normal columns; column-major `n × rank`.
fn orthonormal_basis(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut basis = vec![0.0; n * rank];
    let mut v = vec![0.0; n];
    let mut k = 0;
    while k < rank {
        fill_standard_normal(rng, &mut v);
        let start_norm = dot(&v, &v).sqrt();
        for _pass in 0..2 {
            for p in 0..k {
                let q = &basis[p * n..(p + 1) * n];
                let h = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= h * qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * start_norm {
            continue; // numerically dependent draw
        }
        for (b, vi) in basis[k * n..(k + 1) * n].iter_mut().zip(&v) {
            *b = vi / norm;
        }
        k += 1;
    }
    basis
}
