//! Coupled centered finite differences.

use super::{mc, sample_to_precision, work_units, Estimate, Precision, RunOptions};
use crate::couple::{cfd_with_model, perturbed_thetas, CoupledModel};
use crate::error::Result;
use crate::model::ReactionNetwork;
use crate::rng::{phase, StreamKey};
use crate::sim::{Functional, JumpModel};

/// Monte Carlo mean of split-coupled centered differences with step `h`
/// in direction `i`. Biased by `O(h^2)`.
#[allow(clippy::too_many_arguments)]
pub fn cfd_estimate(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    i: usize,
    h: f64,
    f: &Functional,
    precision: Precision,
    opts: &RunOptions,
) -> Result<Estimate> {
    net.check_theta(theta)?;
    net.check_state(x0)?;
    f.check(net.num_species(), net.param_dim())?;
    let (plus, minus) = perturbed_thetas(theta, i, h)?;
    let res = sample_to_precision(
        precision,
        1,
        opts,
        |idx| {
            let model = CoupledModel::with_thetas(net, net, &plus, &minus)?;
            let mut s = StreamKey::new(opts.seed, phase::CFD, idx).arrivals(model.num_channels());
            let c = cfd_with_model(&model, &plus, &minus, x0, h, f, &mut s, &opts.sim)?;
            Ok(mc::Sample { values: vec![c.value], work: work_units(c.jumps, model.num_channels()), flag: false })
        },
        |m| m.var(0),
    )?;
    Ok(Estimate::from_moments(&res.moments, 0, res.seconds))
}
