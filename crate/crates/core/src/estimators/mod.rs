//! Sensitivity estimators built on the simulators.

mod allocate;
mod cfd;
mod hybrid;
mod lr;
mod mc;
mod pathwise;
pub mod report;

pub use allocate::{allocate, delta_from_halfwidth, split_fixed, AllocationPlan};
pub use cfd::cfd_estimate;
pub use hybrid::{hybrid_estimate, CostModel, HybridOptions, HybridResult, PilotSummary};
pub use lr::{lr_cv_estimate, lr_estimate, CvMode, LrCvEstimate};
pub use mc::{monte_carlo, monte_carlo_range, McOptions, McResult, Moments, Sample};
pub use pathwise::{pathwise_estimate, PathwiseResult};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::sim::SimOptions;

/// z-value of the reported 95% confidence intervals.
pub const Z95: f64 = 1.96;

/// A Monte Carlo estimate with its estimated variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Variance of the estimator, i.e. sample variance over `n`.
    pub est_variance: f64,
    pub n: u64,
    pub halfwidth: f64,
    pub cpu_seconds: f64,
}

impl Estimate {
    pub fn new(mean: f64, est_variance: f64, n: u64, cpu_seconds: f64) -> Self {
        let est_variance = est_variance.max(0.0);
        Self { mean, est_variance, n, halfwidth: Z95 * est_variance.sqrt(), cpu_seconds }
    }

    /// Component `j` of a moments accumulator.
    pub fn from_moments(m: &Moments, j: usize, cpu_seconds: f64) -> Self {
        Self::new(m.mean[j], m.var(j) / m.n as f64, m.n, cpu_seconds)
    }

    /// Whether `value` lies in `mean +- k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.est_variance.sqrt()
    }

    /// Sum of two independent estimates.
    pub fn add_independent(&self, other: &Estimate) -> Estimate {
        Estimate::new(
            self.mean + other.mean,
            self.est_variance + other.est_variance,
            self.n + other.n,
            self.cpu_seconds + other.cpu_seconds,
        )
    }
}

/// Sample size or target precision of an estimator run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Precision {
    Samples(u64),
    /// Target 95% halfwidth.
    Halfwidth(f64),
}

impl Precision {
    pub fn check(&self) -> Result<()> {
        match *self {
            Precision::Samples(n) if n < 2 => Err(Error::Argument(format!("need at least 2 samples, got {n}"))),
            Precision::Halfwidth(e) if !(e.is_finite() && e > 0.0) => {
                Err(Error::Argument(format!("target halfwidth must be positive, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

/// Settings shared by all estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub mc: McOptions,
    pub sim: SimOptions,
    /// Samples drawn before sizing a target-precision run.
    pub initial_samples: u64,
    /// Hard cap on samples per estimator component.
    pub max_samples: u64,
    /// Extra rounds allowed when a target-precision run falls short.
    pub max_rounds: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            mc: McOptions::default(),
            sim: SimOptions::default(),
            initial_samples: 1000,
            max_samples: 10_000_000,
            max_rounds: 3,
        }
    }
}

/// Simulation work of one path: evaluations of all channels per step.
pub(crate) fn work_units(jumps: u64, channels: usize) -> u64 {
    (jumps + 1) * channels as u64
}

pub(crate) fn check_params(net: &ReactionNetwork, params: &[usize]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::Argument("no parameter selected".into()));
    }
    for &i in params {
        if i >= net.param_dim() {
            return Err(Error::Config(format!("unknown parameter index {} (model has {})", i + 1, net.param_dim())));
        }
    }
    Ok(())
}

/// Runs a sampler until the selected per-sample variance, divided by the
/// sample count, reaches the target. `per_sample_var` gives the largest
/// per-sample variance over the components of interest.
pub(crate) fn sample_to_precision<F, V>(
    precision: Precision,
    dim: usize,
    opts: &RunOptions,
    sampler: F,
    per_sample_var: V,
) -> Result<McResult>
where
    F: Fn(u64) -> Result<Sample> + Sync,
    V: Fn(&Moments) -> f64,
{
    precision.check()?;
    match precision {
        Precision::Samples(n) => monte_carlo(n, dim, &opts.mc, sampler),
        Precision::Halfwidth(eps) => {
            let delta = delta_from_halfwidth(eps);
            let first = opts.initial_samples.max(2).min(opts.max_samples.max(2));
            let mut res = monte_carlo(first, dim, &opts.mc, &sampler)?;
            for _ in 0..opts.max_rounds {
                let v = per_sample_var(&res.moments);
                let need = ((v / delta).ceil() as u64).min(opts.max_samples);
                let have = res.moments.n;
                if need <= have {
                    break;
                }
                let more = monte_carlo_range(have, need - have, dim, &opts.mc, &sampler)?;
                res.moments.merge(&more.moments);
                res.seconds += more.seconds;
            }
            Ok(res)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfwidth_is_tied_to_variance() {
        let e = Estimate::new(1.0, 0.25, 10, 0.0);
        assert_eq!(e.halfwidth, 1.96 * 0.5);
        assert_eq!(Estimate::new(0.0, -1e-18, 2, 0.0).est_variance, 0.0);
        let s = e.add_independent(&Estimate::new(2.0, 0.75, 5, 0.0));
        assert_eq!((s.mean, s.est_variance, s.n), (3.0, 1.0, 15));
        assert!(s.covers(4.9, 2.0) && !s.covers(5.1, 2.0));
    }

    #[test]
    fn precision_mode_reaches_its_target() {
        let opts =
            RunOptions { mc: McOptions { workers: 1, timing: false }, initial_samples: 100, ..Default::default() };
        let r = sample_to_precision(
            Precision::Halfwidth(0.01),
            1,
            &opts,
            |i| {
                let mut rng = crate::rng::StreamKey::new(3, 0, i).aux_rng();
                Ok(Sample { values: vec![rand::Rng::random::<f64>(&mut rng)], work: 1, flag: false })
            },
            |m| m.var(0),
        )
        .unwrap();
        let e = Estimate::from_moments(&r.moments, 0, 0.0);
        assert!(e.halfwidth <= 0.0101, "{e:?}");
        assert!(Precision::Samples(1).check().is_err());
        assert!(Precision::Halfwidth(0.0).check().is_err());
    }
}
