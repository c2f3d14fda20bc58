//! Monte-Carlo trace estimator `tr_D^N(A) = (1/N) Σ wᵢᵗ A wᵢ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linop::{dot, ImplicitOperator};
use crate::sampler::{ProbeDistribution, SeededStream};

/// Kahan-compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEstimate {
    pub value: f64,
    pub samples_used: usize,
    /// `(1/N) Σ (wᵢᵗ A wᵢ)²`
    pub sample_mean_of_squares: f64,
    pub method: ProbeDistribution,
}

impl TraceEstimate {
    /// Unbiased variance of one Rayleigh sample; `None` for `N = 1`.
    pub fn sample_variance(&self) -> Option<f64> {
        let n = self.samples_used as f64;
        if self.samples_used < 2 {
            return None;
        }
        Some(((self.sample_mean_of_squares - self.value * self.value) * n / (n - 1.0)).max(0.0))
    }
}

/// `wᵗ (A w)`.
pub fn rayleigh_sample(op: &ImplicitOperator, w: &[f64]) -> Result<f64> {
    let mut aw = vec![0.0; op.dim()];
    op.apply_into(w, &mut aw)?;
    Ok(dot(w, &aw))
}

/// Incremental estimator: one probe and one matvec per [`RunningEstimate::step`].
#[derive(Debug, Clone)]
pub struct RunningEstimate {
    op: ImplicitOperator,
    dist: ProbeDistribution,
    stream: SeededStream,
    probe: Vec<f64>,
    image: Vec<f64>,
    sum: KahanSum,
    sum_sq: KahanSum,
    count: usize,
}

impl RunningEstimate {
    pub fn new(op: &ImplicitOperator, dist: ProbeDistribution, stream: SeededStream) -> Self {
        let n = op.dim();
        Self {
            op: op.clone(),
            dist,
            stream,
            probe: vec![0.0; n],
            image: vec![0.0; n],
            sum: KahanSum::default(),
            sum_sq: KahanSum::default(),
            count: 0,
        }
    }

    /// Draw the next probe and fold in its Rayleigh value, which is returned.
    pub fn step(&mut self) -> Result<f64> {
        let n = self.op.dim();
        let sample = match self.stream.next_into(self.dist, &mut self.probe)? {
            Some(j) => {
                // unit probe √n e_j: wᵗAw = n a_jj, via one matvec with e_j
                self.probe.fill(0.0);
                self.probe[j] = 1.0;
                self.op.apply_into(&self.probe, &mut self.image)?;
                self.probe[j] = 0.0;
                n as f64 * self.image[j]
            }
            None => {
                self.op.apply_into(&self.probe, &mut self.image)?;
                dot(&self.probe, &self.image)
            }
        };
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample { index: self.count });
        }
        self.sum.add(sample);
        self.sum_sq.add(sample * sample);
        self.count += 1;
        Ok(sample)
    }

    pub fn samples(&self) -> usize {
        self.count
    }

    /// Current mean; `NaN` before the first step.
    pub fn value(&self) -> f64 {
        self.sum.value() / self.count as f64
    }

    pub fn snapshot(&self) -> TraceEstimate {
        TraceEstimate {
            value: self.value(),
            samples_used: self.count,
            sample_mean_of_squares: self.sum_sq.value() / self.count as f64,
            method: self.dist,
        }
    }
}

/// `tr_D^N(A)` with exactly `samples` matvecs.
pub fn estimate_trace(
    op: &ImplicitOperator,
    dist: ProbeDistribution,
    samples: usize,
    stream: SeededStream,
) -> Result<TraceEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if dist == ProbeDistribution::UnitWithoutReplacement && samples > op.dim() {
        return Err(Error::Exhausted { n: op.dim() });
    }
    let mut run = RunningEstimate::new(op, dist, stream);
    for _ in 0..samples {
        run.step()?;
    }
    Ok(run.snapshot())
}
