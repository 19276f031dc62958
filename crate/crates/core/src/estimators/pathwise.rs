//! Pathwise estimates on a single (approximate) process.

use serde::Serialize;

use super::{check_params, mc, sample_to_precision, work_units, Estimate, Precision, RunOptions};
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::{phase, StreamKey};
use crate::sim::{run, AgreementMonitor, Functional, ParamNet, PathwiseTracker};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathwiseResult {
    /// One estimate per parameter.
    pub estimates: Vec<Estimate>,
    /// Paths along which every visited state had the reference intensities.
    pub valid_paths: u64,
    pub n: u64,
    pub mean_work: f64,
}

pub(crate) fn pathwise_sampler<'a>(
    net: &'a ReactionNetwork,
    theta: &'a [f64],
    x0: &'a [i64],
    f: &'a Functional,
    reference: Option<&'a ReactionNetwork>,
    key_phase: u64,
    opts: &'a RunOptions,
) -> impl Fn(u64) -> Result<mc::Sample> + Sync + 'a {
    move |idx| {
        let model = ParamNet::new(net, theta)?;
        let mut tracker = PathwiseTracker::new(f, theta, 0, net.num_species())?;
        let mut s = StreamKey::new(opts.seed, key_phase, idx).arrivals(net.num_reactions());
        let (jumps, valid) = match reference {
            Some(r) => {
                let mut mon = AgreementMonitor::new(r, theta, 0, 1);
                let out = run(&model, x0, f.horizon(), &mut s, &opts.sim, &mut (&mut tracker, &mut mon))?;
                (out.jumps, mon.agrees)
            }
            None => (run(&model, x0, f.horizon(), &mut s, &opts.sim, &mut tracker)?.jumps, true),
        };
        if let Some(i) = tracker.d_l.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite pathwise derivative in direction {}", i + 1)));
        }
        Ok(mc::Sample { values: tracker.d_l, work: work_units(jumps, net.num_reactions()), flag: valid })
    }
}

pub(crate) fn check_pathwise_inputs(net: &ReactionNetwork, theta: &[f64], x0: &[i64], f: &Functional) -> Result<()> {
    net.check_theta(theta)?;
    net.check_state(x0)?;
    f.check(net.num_species(), net.param_dim())?;
    if !f.is_integral() {
        return Err(Error::Argument("pathwise estimation needs an integral (smoothed) functional".into()));
    }
    Ok(())
}

/// Mean of the pathwise derivative of `f` along paths of `net`, for all
/// parameters at once. `params` selects the components that drive a
/// target-precision run. With a `reference` network the result also counts
/// the paths that are valid realizations of it.
#[allow(clippy::too_many_arguments)]
pub fn pathwise_estimate(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    params: &[usize],
    f: &Functional,
    reference: Option<&ReactionNetwork>,
    precision: Precision,
    opts: &RunOptions,
) -> Result<PathwiseResult> {
    check_pathwise_inputs(net, theta, x0, f)?;
    check_params(net, params)?;
    let r = net.param_dim();
    let res = sample_to_precision(
        precision,
        r,
        opts,
        pathwise_sampler(net, theta, x0, f, reference, phase::PATHWISE, opts),
        |m| params.iter().map(|&i| m.var(i)).fold(0.0, f64::max),
    )?;
    let m = &res.moments;
    Ok(PathwiseResult {
        estimates: (0..r).map(|i| Estimate::from_moments(m, i, res.seconds)).collect(),
        valid_paths: m.flagged,
        n: m.n,
        mean_work: m.mean_work(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::estimators::McOptions;
    use crate::model::testnets::*;
    use crate::sim::{make_gs_functional, Integrand, Observable};

    #[test]
    fn birth_death_gs() {
        let net = birth_death();
        let f = make_gs_functional(Arc::new(net.clone()), Observable::Species(0), 5.0).unwrap();
        let opts = RunOptions { seed: 4, mc: McOptions { workers: 0, timing: false }, ..Default::default() };
        let r = pathwise_estimate(&net, &[10.0, 0.5], &[0], &[1], &f, Some(&net), Precision::Samples(10_000), &opts)
            .unwrap();
        assert!(r.estimates[1].covers(-28.508100, 3.0), "{:?}", r.estimates[1]);
        assert!(r.estimates[0].covers(1.835830, 3.0), "{:?}", r.estimates[0]);
        assert_eq!(r.valid_paths, 10_000);
    }

    #[test]
    fn constant_integrand() {
        let net = switch();
        let f =
            Functional::integral(Integrand::Observable { f: Observable::Constant(1.0), scale: 1.0 }, 0.0, 2.0).unwrap();
        let opts = RunOptions::default();
        let r = pathwise_estimate(&net, &[0.25, 1.0, 1.0], &[10, 0, 0], &[0], &f, None, Precision::Samples(50), &opts)
            .unwrap();
        for e in r.estimates {
            assert_eq!((e.mean, e.est_variance), (0.0, 0.0));
        }
    }
}
