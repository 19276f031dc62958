//! Likelihood-ratio estimators, plain and with the weight as control
//! variate.

use serde::Serialize;

use super::{check_params, mc, sample_to_precision, work_units, Estimate, Precision, RunOptions};
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::{phase, StreamKey};
use crate::sim::{run, Functional, FunctionalTracker, LrWeight, ParamNet};

/// One path: the functional value `G`, its explicit derivative and the
/// weights `H(b)` for every parameter.
struct LrDraw {
    value: f64,
    explicit: Vec<f64>,
    h: Vec<f64>,
    work: u64,
}

fn draw(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    f: &Functional,
    key: StreamKey,
    opts: &RunOptions,
) -> Result<LrDraw> {
    let model = ParamNet::new(net, theta)?;
    let (_, end) = f.window();
    let mut tr = FunctionalTracker::new(f, theta, 0, net.num_species());
    let mut w = LrWeight::new(end, net.param_dim());
    let mut s = key.arrivals(net.num_reactions());
    let out = run(&model, x0, end, &mut s, &opts.sim, &mut (&mut tr, &mut w))?;
    if w.invalid {
        return Err(Error::Invariant("a reaction fired with zero intensity".into()));
    }
    Ok(LrDraw { value: tr.value, explicit: tr.explicit_grad, h: w.h, work: work_units(out.jumps, net.num_reactions()) })
}

fn prepare(net: &ReactionNetwork, theta: &[f64], x0: &[i64], params: &[usize], f: &Functional) -> Result<()> {
    net.check_theta(theta)?;
    net.check_state(x0)?;
    check_params(net, params)?;
    f.check(net.num_species(), net.param_dim())
}

/// Plain likelihood-ratio estimates of `d/dtheta_i E[G]` for each selected
/// parameter, from samples `dG/dtheta_i + G H_i`.
pub fn lr_estimate(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    params: &[usize],
    f: &Functional,
    precision: Precision,
    opts: &RunOptions,
) -> Result<Vec<Estimate>> {
    prepare(net, theta, x0, params, f)?;
    let m = params.len();
    let res = sample_to_precision(
        precision,
        m,
        opts,
        |idx| {
            let d = draw(net, theta, x0, f, StreamKey::new(opts.seed, phase::PLAIN, idx), opts)?;
            let values = params.iter().map(|&i| d.explicit[i] + d.value * d.h[i]).collect();
            Ok(mc::Sample { values, work: d.work, flag: false })
        },
        |mo| (0..m).map(|j| mo.var(j)).fold(0.0, f64::max),
    )?;
    Ok((0..m).map(|j| Estimate::from_moments(&res.moments, j, res.seconds)).collect())
}

/// How the control-variate coefficient is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CvMode {
    /// Optimal coefficient estimated from the same samples.
    SameSample,
    /// Coefficient fixed from an independent pilot of this many paths.
    TwoPhase { pilot: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LrCvEstimate {
    pub param: usize,
    pub estimate: Estimate,
    /// Plain LR on the same samples.
    pub plain: Estimate,
    pub beta: f64,
}

fn beta_of(m: &mc::Moments, g: usize, h: usize) -> f64 {
    let vh = m.var(h);
    if vh > 0.0 {
        m.cov(g, h) / vh
    } else {
        0.0
    }
}

/// Likelihood-ratio estimates with the mean-zero weight `H_i` as control
/// variate.
#[allow(clippy::too_many_arguments)]
pub fn lr_cv_estimate(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    params: &[usize],
    f: &Functional,
    precision: Precision,
    mode: CvMode,
    opts: &RunOptions,
) -> Result<Vec<LrCvEstimate>> {
    prepare(net, theta, x0, params, f)?;
    let m = params.len();
    let sample = |key: StreamKey| -> Result<(Vec<f64>, Vec<f64>, u64)> {
        let d = draw(net, theta, x0, f, key, opts)?;
        let g = params.iter().map(|&i| d.explicit[i] + d.value * d.h[i]).collect();
        let h = params.iter().map(|&i| d.h[i]).collect();
        Ok((g, h, d.work))
    };
    match mode {
        CvMode::SameSample => {
            let res = sample_to_precision(
                precision,
                2 * m,
                opts,
                |idx| {
                    let (mut g, h, work) = sample(StreamKey::new(opts.seed, phase::PLAIN, idx))?;
                    g.extend(h);
                    Ok(mc::Sample { values: g, work, flag: false })
                },
                |mo| (0..m).map(|j| cv_var(mo, j, m + j)).fold(0.0, f64::max),
            )?;
            let mo = &res.moments;
            let n = mo.n as f64;
            Ok((0..m)
                .map(|j| {
                    let beta = beta_of(mo, j, m + j);
                    let mean = mo.mean[j] - beta * mo.mean[m + j];
                    LrCvEstimate {
                        param: params[j],
                        estimate: Estimate::new(mean, cv_var(mo, j, m + j) / n, mo.n, res.seconds),
                        plain: Estimate::from_moments(mo, j, res.seconds),
                        beta,
                    }
                })
                .collect())
        }
        CvMode::TwoPhase { pilot } => {
            let pilot_res = mc::monte_carlo(pilot, 2 * m, &opts.mc, |idx| {
                let (mut g, h, work) = sample(StreamKey::new(opts.seed, phase::PILOT_BETA, idx))?;
                g.extend(h);
                Ok(mc::Sample { values: g, work, flag: false })
            })?;
            let betas: Vec<f64> = (0..m).map(|j| beta_of(&pilot_res.moments, j, m + j)).collect();
            let res = sample_to_precision(
                precision,
                2 * m,
                opts,
                |idx| {
                    let (g, h, work) = sample(StreamKey::new(opts.seed, phase::PLAIN, idx))?;
                    let mut values: Vec<f64> = (0..m).map(|j| g[j] - betas[j] * h[j]).collect();
                    values.extend(g);
                    Ok(mc::Sample { values, work, flag: false })
                },
                |mo| (0..m).map(|j| mo.var(j)).fold(0.0, f64::max),
            )?;
            let secs = res.seconds + pilot_res.seconds;
            Ok((0..m)
                .map(|j| LrCvEstimate {
                    param: params[j],
                    estimate: Estimate::from_moments(&res.moments, j, secs),
                    plain: Estimate::from_moments(&res.moments, m + j, secs),
                    beta: betas[j],
                })
                .collect())
        }
    }
}

/// Per-sample variance of `g - beta h` at the optimal `beta`.
fn cv_var(m: &mc::Moments, g: usize, h: usize) -> f64 {
    let vh = m.var(h);
    let vg = m.var(g);
    if vh > 0.0 {
        (vg - m.cov(g, h).powi(2) / vh).max(0.0)
    } else {
        vg
    }
}
