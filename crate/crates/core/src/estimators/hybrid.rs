//! Hybrid estimator: pathwise derivatives on a non-interruptive
//! approximation Z plus a coupled likelihood-ratio correction for X - Z.

use serde::Serialize;

use super::allocate::ceil_count;
use super::pathwise::{check_pathwise_inputs, pathwise_sampler};
use super::{
    allocate, check_params, delta_from_halfwidth, mc, split_fixed, work_units, AllocationPlan, Estimate, McResult,
    Precision, RunOptions,
};
use crate::couple::{simulate_correction, CoupledModel};
use crate::error::Result;
use crate::model::{build_approx_process, ApproxOptions, ReactionNetwork};
use crate::rng::{phase, StreamKey};
use crate::sim::{Functional, JumpModel};

/// Per-sample cost used for allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CostModel {
    /// Channel evaluations; deterministic.
    WorkUnits,
    /// Measured wall-clock seconds of the pilot runs.
    WallClock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridOptions {
    pub approx: ApproxOptions,
    /// Parameters whose precision drives the allocation.
    pub params: Vec<usize>,
    pub precision: Precision,
    pub pilot_pathwise: u64,
    pub pilot_coupled: u64,
    pub cost: CostModel,
    pub run: RunOptions,
}

impl HybridOptions {
    pub fn new(approx: ApproxOptions, params: Vec<usize>, precision: Precision) -> Self {
        Self {
            approx,
            params,
            precision,
            pilot_pathwise: 500,
            pilot_coupled: 500,
            cost: CostModel::WorkUnits,
            run: RunOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PilotSummary {
    /// Per-sample variances of the corrections, one per parameter.
    pub v_l: Vec<f64>,
    pub c_l: f64,
    pub v_p: Vec<f64>,
    pub c_p: f64,
    /// Pilot Z paths that were valid realizations of X.
    pub z_valid: u64,
    /// Pilot coupled paths on which X and Z separated.
    pub diverged: u64,
    pub n_pathwise: u64,
    pub n_coupled: u64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridResult {
    /// Sensitivities for every parameter.
    pub estimates: Vec<Estimate>,
    pub pathwise: Vec<Estimate>,
    pub correction: Vec<Estimate>,
    /// Allocation per targeted parameter (target-precision mode only).
    pub plans: Vec<(usize, AllocationPlan)>,
    pub pilot: PilotSummary,
    /// Every pilot Z path was a valid X path; the correction term comes
    /// from the pilot and all remaining work is pathwise.
    pub shortcut: bool,
    pub n_pathwise: u64,
    pub n_coupled: u64,
    /// Coupled paths (final runs) on which X and Z separated.
    pub diverged: u64,
}

impl HybridResult {
    /// Fraction of final samples that were pathwise.
    pub fn pathwise_fraction(&self) -> f64 {
        self.n_pathwise as f64 / (self.n_pathwise + self.n_coupled).max(1) as f64
    }
}

fn coupled_sampler<'a>(
    x_net: &'a ReactionNetwork,
    z_net: &'a ReactionNetwork,
    theta: &'a [f64],
    x0: &'a [i64],
    f: &'a Functional,
    key_phase: u64,
    opts: &'a RunOptions,
) -> impl Fn(u64) -> Result<mc::Sample> + Sync + 'a {
    move |idx| {
        let model = CoupledModel::new(x_net, z_net, theta)?;
        let mut s = StreamKey::new(opts.seed, key_phase, idx).arrivals(model.num_channels());
        let c = simulate_correction(&model, theta, x0, f, &mut s, &opts.sim)?;
        Ok(mc::Sample { values: c.v, work: work_units(c.jumps, model.num_channels()), flag: c.diverged })
    }
}

fn per_sample_cost(res: &McResult, cost: CostModel) -> f64 {
    let c = match cost {
        CostModel::WorkUnits => res.moments.mean_work(),
        CostModel::WallClock => res.seconds / res.moments.n.max(1) as f64,
    };
    c.max(f64::MIN_POSITIVE)
}

/// Sample counts for one targeted parameter. A zero variance on either side
/// sends the whole budget to the other one.
fn plan_counts(v_l: f64, c_l: f64, v_p: f64, c_p: f64, delta: f64) -> Result<(u64, u64, Option<AllocationPlan>)> {
    match (v_l > 0.0, v_p > 0.0) {
        (true, true) => {
            let p = allocate(v_l, c_l, v_p, c_p, delta)?;
            Ok((p.n_l, p.n_p, Some(p)))
        }
        (true, false) => Ok((ceil_count(v_l / delta), 2, None)),
        (false, true) => Ok((2, ceil_count(v_p / delta), None)),
        (false, false) => Ok((2, 2, None)),
    }
}

/// Estimates `d/dtheta E[G(X)]` for an integral functional `f` (generator
/// or window smoothed) as `Q_Z + Q_{X-Z}`: the pathwise derivative along
/// the approximate process Z plus the mean coupled correction. The two
/// parts use independent streams, so their variances add.
pub fn hybrid_estimate(
    x_net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    f: &Functional,
    opts: &HybridOptions,
) -> Result<HybridResult> {
    check_pathwise_inputs(x_net, theta, x0, f)?;
    check_params(x_net, &opts.params)?;
    opts.precision.check()?;
    let run_opts = &opts.run;
    let r = x_net.param_dim();
    let z = build_approx_process(x_net, &opts.approx)?;

    let pathwise = |phase: u64| pathwise_sampler(&z, theta, x0, f, Some(x_net), phase, run_opts);
    let coupled = |phase: u64| coupled_sampler(x_net, &z, theta, x0, f, phase, run_opts);

    let pilot_p = mc::monte_carlo(opts.pilot_pathwise, r, &run_opts.mc, pathwise(phase::PILOT_PATHWISE))?;
    let pilot_l = mc::monte_carlo(opts.pilot_coupled, r, &run_opts.mc, coupled(phase::PILOT_COUPLED))?;
    let c_p = per_sample_cost(&pilot_p, opts.cost);
    let c_l = per_sample_cost(&pilot_l, opts.cost);
    let v_p: Vec<f64> = (0..r).map(|i| pilot_p.moments.var(i)).collect();
    let v_l: Vec<f64> = (0..r).map(|i| pilot_l.moments.var(i)).collect();
    let pilot = PilotSummary {
        v_l: v_l.clone(),
        c_l,
        v_p: v_p.clone(),
        c_p,
        z_valid: pilot_p.moments.flagged,
        diverged: pilot_l.moments.flagged,
        n_pathwise: pilot_p.moments.n,
        n_coupled: pilot_l.moments.n,
        seconds: pilot_p.seconds + pilot_l.seconds,
    };
    let shortcut = pilot.z_valid == pilot.n_pathwise;
    let cap = run_opts.max_samples.max(2);

    let mut plans = Vec::new();
    let (mut n_l, mut n_p) = match opts.precision {
        Precision::Samples(n) => {
            if shortcut {
                (0, n)
            } else {
                let sl: f64 = opts.params.iter().map(|&i| v_l[i]).sum();
                let sp: f64 = opts.params.iter().map(|&i| v_p[i]).sum();
                split_fixed(n, sl, c_l, sp, c_p)
            }
        }
        Precision::Halfwidth(eps) => {
            let delta = delta_from_halfwidth(eps);
            let (mut nl, mut np) = (0u64, 2u64);
            for &i in &opts.params {
                if shortcut {
                    let pilot_var = v_l[i] / pilot.n_coupled as f64;
                    let target = if delta > pilot_var { delta - pilot_var } else { delta };
                    np = np.max(ceil_count(v_p[i] / target));
                } else {
                    let (a, b, plan) = plan_counts(v_l[i], c_l, v_p[i], c_p, delta)?;
                    nl = nl.max(a);
                    np = np.max(b);
                    if let Some(p) = plan {
                        plans.push((i, p));
                    }
                }
            }
            (nl, np)
        }
    };
    n_l = n_l.min(cap);
    n_p = n_p.clamp(2, cap);
    if !shortcut {
        n_l = n_l.max(2);
    }

    let mut res_p = mc::monte_carlo_range(0, n_p, r, &run_opts.mc, pathwise(phase::PATHWISE))?;
    let mut res_l = if shortcut {
        pilot_l.clone()
    } else {
        mc::monte_carlo_range(0, n_l, r, &run_opts.mc, coupled(phase::COUPLED))?
    };

    if let Precision::Halfwidth(eps) = opts.precision {
        let delta = delta_from_halfwidth(eps);
        for _ in 0..run_opts.max_rounds {
            let var_of = |i: usize| {
                res_p.moments.var(i) / res_p.moments.n as f64 + res_l.moments.var(i) / res_l.moments.n as f64
            };
            if opts.params.iter().all(|&i| var_of(i) <= delta) {
                break;
            }
            let (mut want_l, mut want_p) = (res_l.moments.n, res_p.moments.n);
            for &i in &opts.params {
                let vl = res_l.moments.var(i);
                let vp = res_p.moments.var(i);
                if shortcut {
                    let fixed = vl / res_l.moments.n as f64;
                    let target = if delta > fixed { delta - fixed } else { delta };
                    want_p = want_p.max(ceil_count(vp / target));
                } else {
                    let (a, b, _) = plan_counts(vl, c_l, vp, c_p, delta)?;
                    want_l = want_l.max(a);
                    want_p = want_p.max(b);
                }
            }
            want_l = want_l.min(cap);
            want_p = want_p.min(cap);
            if want_l <= res_l.moments.n && want_p <= res_p.moments.n {
                break;
            }
            if want_p > res_p.moments.n {
                let have = res_p.moments.n;
                let more = mc::monte_carlo_range(have, want_p - have, r, &run_opts.mc, pathwise(phase::PATHWISE))?;
                res_p.moments.merge(&more.moments);
                res_p.seconds += more.seconds;
            }
            if !shortcut && want_l > res_l.moments.n {
                let have = res_l.moments.n;
                let more = mc::monte_carlo_range(have, want_l - have, r, &run_opts.mc, coupled(phase::COUPLED))?;
                res_l.moments.merge(&more.moments);
                res_l.seconds += more.seconds;
            }
        }
    }

    let pathwise_est: Vec<Estimate> =
        (0..r).map(|i| Estimate::from_moments(&res_p.moments, i, res_p.seconds)).collect();
    let correction: Vec<Estimate> = (0..r).map(|i| Estimate::from_moments(&res_l.moments, i, res_l.seconds)).collect();
    let mut estimates: Vec<Estimate> =
        pathwise_est.iter().zip(&correction).map(|(p, l)| p.add_independent(l)).collect();
    for e in &mut estimates {
        e.cpu_seconds += pilot.seconds;
    }
    Ok(HybridResult {
        estimates,
        pathwise: pathwise_est,
        correction,
        plans,
        shortcut,
        n_pathwise: res_p.moments.n,
        n_coupled: if shortcut { 0 } else { res_l.moments.n },
        diverged: if shortcut { 0 } else { res_l.moments.flagged },
        pilot,
    })
}
