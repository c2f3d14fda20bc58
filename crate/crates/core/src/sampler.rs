//! Seeded probe-vector streams.
//!
//! Every draw is generated from its own ChaCha8 stream selected by the draw
//! index, so the `k`-th probe of a stream depends only on `(seed, k)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProbeDistribution {
    /// i.i.d. Rademacher entries.
    Hutchinson,
    /// i.i.d. standard normal entries.
    Gaussian,
    /// Columns of `√n I`, drawn with replacement.
    UnitWithReplacement,
    /// Columns of `√n I`, drawn without replacement.
    UnitWithoutReplacement,
}

impl ProbeDistribution {
    pub const ALL: [ProbeDistribution; 4] = [
        ProbeDistribution::Hutchinson,
        ProbeDistribution::Gaussian,
        ProbeDistribution::UnitWithReplacement,
        ProbeDistribution::UnitWithoutReplacement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeDistribution::Hutchinson => "hutchinson",
            ProbeDistribution::Gaussian => "gaussian",
            ProbeDistribution::UnitWithReplacement => "unit",
            ProbeDistribution::UnitWithoutReplacement => "unit-noreplace",
        }
    }

    pub fn is_unit(self) -> bool {
        matches!(self, ProbeDistribution::UnitWithReplacement | ProbeDistribution::UnitWithoutReplacement)
    }
}

impl fmt::Display for ProbeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hutchinson" | "rademacher" | "h" => Ok(ProbeDistribution::Hutchinson),
            "gaussian" | "gauss" | "g" => Ok(ProbeDistribution::Gaussian),
            "unit" | "unit-replace" | "u1" => Ok(ProbeDistribution::UnitWithReplacement),
            "unit-noreplace" | "unit-norepl" | "u2" => Ok(ProbeDistribution::UnitWithoutReplacement),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected hutchinson|gaussian|unit|unit-noreplace)"
            ))),
        }
    }
}

/// One probe. Unit probes are kept symbolic so callers can apply `A` to `e_j`
/// and scale by `n` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Dense(Vec<f64>),
    ScaledUnit { index: usize, n: usize },
}

impl Probe {
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            Probe::Dense(v) => v.clone(),
            Probe::ScaledUnit { index, n } => {
                let mut v = vec![0.0; *n];
                v[*index] = (*n as f64).sqrt();
                v
            }
        }
    }
}

/// Position in a deterministic probe sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededStream {
    seed: u64,
    counter: u64,
    // partial Fisher-Yates state for sampling without replacement
    pool: Vec<usize>,
    used: usize,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0, pool: Vec::new(), used: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws taken so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    fn rng_at(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = self.rng_at(self.counter);
        self.counter += 1;
        rng
    }

    /// Fill `out` with the next probe when it is dense, or return the index
    /// `j` of a `√n e_j` probe without touching `out`.
    pub(crate) fn next_into(&mut self, dist: ProbeDistribution, out: &mut [f64]) -> Result<Option<usize>> {
        let n = out.len();
        if n == 0 {
            return Err(Error::InvalidArgument("probe dimension must be >= 1".into()));
        }
        match dist {
            ProbeDistribution::Hutchinson => {
                fill_rademacher(&mut self.next_rng(), out);
                Ok(None)
            }
            ProbeDistribution::Gaussian => {
                fill_standard_normal(&mut self.next_rng(), out);
                Ok(None)
            }
            ProbeDistribution::UnitWithReplacement => Ok(Some(self.next_rng().random_range(0..n))),
            ProbeDistribution::UnitWithoutReplacement => {
                if self.pool.is_empty() {
                    self.pool = (0..n).collect();
                } else if self.pool.len() != n {
                    return Err(Error::Dimension { expected: self.pool.len(), got: n });
                }
                if self.used == n {
                    return Err(Error::Exhausted { n });
                }
                let pick = self.used + self.next_rng().random_range(0..n - self.used);
                self.pool.swap(self.used, pick);
                let j = self.pool[self.used];
                self.used += 1;
                Ok(Some(j))
            }
        }
    }

    pub fn next_probe(&mut self, dist: ProbeDistribution, n: usize) -> Result<Probe> {
        let mut buf = vec![0.0; n];
        match self.next_into(dist, &mut buf)? {
            Some(index) => Ok(Probe::ScaledUnit { index, n }),
            None => Ok(Probe::Dense(buf)),
        }
    }
}

/// Draw the next probe of length `n` from `stream`, as a dense vector.
pub fn draw_probe(dist: ProbeDistribution, n: usize, stream: &mut SeededStream) -> Result<Vec<f64>> {
    stream.next_probe(dist, n).map(|p| p.to_dense())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one trial of an experiment.
pub fn spawn_substream(master_seed: u64, trial_index: u64) -> SeededStream {
    SeededStream::new(splitmix64(splitmix64(master_seed) ^ trial_index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

pub(crate) fn fill_rademacher<R: RngCore>(rng: &mut R, out: &mut [f64]) {
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, o) in chunk.iter_mut().enumerate() {
            *o = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }
}

/// Uniform in `(0, 1]` from the top 53 bits.
#[inline]
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller: `u1 ∈ (0,1]`, `u2 ∈ (0,1]`; yields `r cos(2π u2)` then `r sin(2π u2)`.
pub(crate) fn standard_normal_pair<R: RngCore>(rng: &mut R) -> (f64, f64) {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

pub(crate) fn fill_standard_normal<R: RngCore>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = standard_normal_pair(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = standard_normal_pair(rng).0;
    }
}
