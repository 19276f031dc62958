//! Parallel Monte Carlo with deterministic reduction.
//!
//! Samples are grouped into fixed blocks of consecutive indices. Each block
//! is reduced sequentially and the block results are merged in index
//! order, so the result does not depend on the number of workers.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};

const BLOCK: u64 = 64;

/// One Monte Carlo draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    /// Simulation work spent on the draw.
    pub work: u64,
    /// Per-draw indicator counted by the driver (divergence, validity...).
    pub flag: bool,
}

/// Running means and co-moments of a vector-valued sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: Vec<f64>,
    /// Sums of products of deviations, `dim x dim` row-major.
    comoment: Vec<f64>,
    pub work: u64,
    pub flagged: u64,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, mean: vec![0.0; dim], comoment: vec![0.0; dim * dim], work: 0, flagged: 0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, s: &Sample) {
        let p = self.dim();
        debug_assert_eq!(s.values.len(), p);
        self.n += 1;
        self.work += s.work;
        self.flagged += s.flag as u64;
        let n = self.n as f64;
        let delta: Vec<f64> = s.values.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for (row, dj) in self.comoment.chunks_exact_mut(p).zip(&delta) {
            for ((c, x), m) in row.iter_mut().zip(&s.values).zip(&self.mean) {
                *c += dj * (x - m);
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let p = self.dim();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for j in 0..p {
            self.mean[j] += delta[j] * nb / n;
            for k in 0..p {
                self.comoment[j * p + k] += other.comoment[j * p + k] + delta[j] * delta[k] * na * nb / n;
            }
        }
        self.n += other.n;
        self.work += other.work;
        self.flagged += other.flagged;
    }

    /// Sample covariance of components `j` and `k`.
    pub fn cov(&self, j: usize, k: usize) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.comoment[j * self.dim() + k] / (self.n - 1) as f64
    }

    /// Sample variance of component `j`, clamped at zero.
    pub fn var(&self, j: usize) -> f64 {
        self.cov(j, j).max(0.0)
    }

    pub fn mean_work(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.work as f64 / self.n as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Record wall-clock seconds. Off gives byte-identical reports.
    pub timing: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { workers: 0, timing: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McResult {
    pub moments: Moments,
    pub seconds: f64,
}

/// Draws samples `start..start + n` and reduces them.
pub fn monte_carlo_range<F>(start: u64, n: u64, dim: usize, opts: &McOptions, sampler: F) -> Result<McResult>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    let clock = Instant::now();
    let end = start + n;
    let blocks: Vec<(u64, u64)> = (start..end).step_by(BLOCK as usize).map(|b| (b, (b + BLOCK).min(end))).collect();
    let reduce_block = |&(lo, hi): &(u64, u64)| -> Result<Moments> {
        let mut m = Moments::new(dim);
        for idx in lo..hi {
            let s = sampler(idx)?;
            if s.values.len() != dim {
                return Err(Error::Invariant(format!("sampler returned {} values, expected {dim}", s.values.len())));
            }
            m.push(&s);
        }
        Ok(m)
    };
    let parts: Vec<Result<Moments>> = if opts.workers == 1 || blocks.len() <= 1 {
        blocks.iter().map(reduce_block).collect()
    } else if opts.workers == 0 {
        blocks.par_iter().map(reduce_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", opts.workers)))?;
        pool.install(|| blocks.par_iter().map(reduce_block).collect())
    };
    let mut total = Moments::new(dim);
    for p in parts {
        total.merge(&p?);
    }
    let seconds = if opts.timing { clock.elapsed().as_secs_f64() } else { 0.0 };
    Ok(McResult { moments: total, seconds })
}

/// Draws `n >= 2` samples with indices `0..n`.
pub fn monte_carlo<F>(n: u64, dim: usize, opts: &McOptions, sampler: F) -> Result<McResult>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 samples for a variance, got {n}")));
    }
    monte_carlo_range(0, n, dim, opts, sampler)
}
