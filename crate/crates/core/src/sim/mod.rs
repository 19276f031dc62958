//! Next-reaction-method simulation.
//!
//! [`run`] drives any [`JumpModel`] with per-channel unit-rate Poisson
//! clocks. Observers see every holding interval, including the truncated
//! last one, and may ask for intensity gradients and for the parameter
//! derivatives of the interval end points. The derivative recursions are
//! carried for all parameters at once.

mod functional;
mod lr;
mod pathwise;

pub use functional::{make_gs_functional, make_rpd_functional, Functional, FunctionalTracker, Integrand, Observable};
pub use lr::{lr_weight, replay_lr_weight, LrWeight};
pub use pathwise::{simulate_pathwise, PathwiseTracker};

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::Arrivals;

/// A Markov jump process given by jump vectors and differentiable intensities.
pub trait JumpModel {
    fn num_species(&self) -> usize;
    fn num_channels(&self) -> usize;
    fn param_dim(&self) -> usize;
    fn jump(&self, channel: usize) -> &[i64];
    /// Writes all intensities, and when requested their gradients as a
    /// channels × params row-major matrix.
    fn eval(&self, state: &[i64], rates: &mut [f64], grads: Option<&mut [f64]>);
}

/// A network evaluated at a fixed parameter vector.
#[derive(Clone, Copy, Debug)]
pub struct ParamNet<'a> {
    pub net: &'a ReactionNetwork,
    pub theta: &'a [f64],
}

impl<'a> ParamNet<'a> {
    pub fn new(net: &'a ReactionNetwork, theta: &'a [f64]) -> Result<Self> {
        net.check_theta(theta)?;
        Ok(Self { net, theta })
    }
}

impl JumpModel for ParamNet<'_> {
    fn num_species(&self) -> usize {
        self.net.num_species()
    }

    fn num_channels(&self) -> usize {
        self.net.num_reactions()
    }

    fn param_dim(&self) -> usize {
        self.net.param_dim()
    }

    fn jump(&self, channel: usize) -> &[i64] {
        &self.net.reaction(channel).zeta
    }

    fn eval(&self, state: &[i64], rates: &mut [f64], grads: Option<&mut [f64]>) {
        self.net.eval_all(self.theta, state, rates, grads)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Abort once a path makes more jumps than this.
    pub max_jumps: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { max_jumps: 100_000_000 }
    }
}

/// One holding interval `[t0, t1)` in state `state`.
///
/// For the last interval `fired` is `None` and `t1` is the horizon. The
/// slices `grads`, `dt0` and `dt1` are empty unless some observer asked for
/// them; `dt1` is zero for the last interval since the horizon is fixed.
#[derive(Debug)]
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub state: &'a [i64],
    pub rates: &'a [f64],
    pub grads: &'a [f64],
    pub fired: Option<usize>,
    pub dt0: &'a [f64],
    pub dt1: &'a [f64],
}

pub trait Observer {
    fn needs_grads(&self) -> bool {
        false
    }

    fn needs_time_derivs(&self) -> bool {
        false
    }

    fn on_step(&mut self, step: &Step<'_>);
}

impl Observer for () {
    fn on_step(&mut self, _: &Step<'_>) {}
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn needs_grads(&self) -> bool {
        (**self).needs_grads()
    }

    fn needs_time_derivs(&self) -> bool {
        (**self).needs_time_derivs()
    }

    fn on_step(&mut self, step: &Step<'_>) {
        (**self).on_step(step)
    }
}

impl<O: Observer> Observer for Vec<O> {
    fn needs_grads(&self) -> bool {
        self.iter().any(|o| o.needs_grads())
    }

    fn needs_time_derivs(&self) -> bool {
        self.iter().any(|o| o.needs_time_derivs())
    }

    fn on_step(&mut self, step: &Step<'_>) {
        for o in self {
            o.on_step(step);
        }
    }
}

macro_rules! tuple_observer {
    ($($name:ident $idx:tt),+) => {
        impl<$($name: Observer),+> Observer for ($($name,)+) {
            fn needs_grads(&self) -> bool {
                false $(|| self.$idx.needs_grads())+
            }

            fn needs_time_derivs(&self) -> bool {
                false $(|| self.$idx.needs_time_derivs())+
            }

            fn on_step(&mut self, step: &Step<'_>) {
                $(self.$idx.on_step(step);)+
            }
        }
    };
}

tuple_observer!(A 0);
tuple_observer!(A 0, B 1);
tuple_observer!(A 0, B 1, C 2);
tuple_observer!(A 0, B 1, C 2, D 3);
tuple_observer!(A 0, B 1, C 2, D 3, E 4);

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub jumps: u64,
    pub final_state: Vec<i64>,
}

/// Simulates `model` from `x0` on `[0, horizon]`.
pub fn run<M, A, O>(
    model: &M,
    x0: &[i64],
    horizon: f64,
    arrivals: &mut A,
    opts: &SimOptions,
    obs: &mut O,
) -> Result<RunOutcome>
where
    M: JumpModel + ?Sized,
    A: Arrivals + ?Sized,
    O: Observer + ?Sized,
{
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Argument(format!("horizon must be finite and non-negative, got {horizon}")));
    }
    if x0.len() != model.num_species() {
        return Err(Error::Argument(format!(
            "initial state has length {}, model has {} species",
            x0.len(),
            model.num_species()
        )));
    }
    let kc = model.num_channels();
    let r = model.param_dim();
    let derivs = obs.needs_time_derivs();
    let want_grads = derivs || obs.needs_grads();

    let mut x = x0.to_vec();
    let mut rates = vec![0.0; kc];
    let mut grads = vec![0.0; if want_grads { kc * r } else { 0 }];
    let mut internal = vec![0.0; kc];
    let mut next: Vec<f64> = (0..kc).map(|k| arrivals.next_arrival(k)).collect();
    let rd = if derivs { r } else { 0 };
    let mut d_internal = vec![0.0; kc * rd];
    let mut dt0 = vec![0.0; rd];
    let mut dt1 = vec![0.0; rd];
    let mut d_delta = vec![0.0; rd];
    let zeros = vec![0.0; rd];
    let mut t = 0.0;
    let mut jumps = 0u64;

    loop {
        model.eval(&x, &mut rates, if want_grads { Some(&mut grads[..]) } else { None });

        let mut delta = f64::INFINITY;
        let mut j = usize::MAX;
        for k in 0..kc {
            let lam = rates[k];
            if lam > 0.0 {
                let q = (next[k] - internal[k]).max(0.0) / lam;
                if q < delta {
                    delta = q;
                    j = k;
                }
            }
        }

        if t + delta > horizon {
            obs.on_step(&Step {
                t0: t,
                t1: horizon,
                state: &x,
                rates: &rates,
                grads: &grads,
                fired: None,
                dt0: &dt0,
                dt1: &zeros,
            });
            return Ok(RunOutcome { jumps, final_state: x });
        }

        let lam_j = rates[j];
        if derivs {
            let gj = &grads[j * r..(j + 1) * r];
            let dsj = &d_internal[j * r..(j + 1) * r];
            for i in 0..r {
                d_delta[i] = -(delta / lam_j) * gj[i] - dsj[i] / lam_j;
                dt1[i] = dt0[i] + d_delta[i];
            }
        }
        let t1 = t + delta;
        obs.on_step(&Step { t0: t, t1, state: &x, rates: &rates, grads: &grads, fired: Some(j), dt0: &dt0, dt1: &dt1 });

        for k in 0..kc {
            internal[k] = (internal[k] + delta * rates[k]).min(next[k]);
        }
        internal[j] = next[j];
        if derivs {
            for k in 0..kc {
                let lam = rates[k];
                let row = &mut d_internal[k * r..(k + 1) * r];
                let g = &grads[k * r..(k + 1) * r];
                for i in 0..r {
                    row[i] += delta * g[i] + lam * d_delta[i];
                }
            }
            std::mem::swap(&mut dt0, &mut dt1);
        }
        next[j] += arrivals.next_arrival(j);
        for (xi, z) in x.iter_mut().zip(model.jump(j)) {
            *xi += z;
        }
        t = t1;
        jumps += 1;
        if jumps > opts.max_jumps {
            return Err(Error::Explosion { cap: opts.max_jumps, time: t });
        }
    }
}

/// Recorded trajectory: `times[l]` is the time of the l-th jump (with
/// `times[0] = 0`), `states[l]` the state held from `times[l]`, and
/// `channels[l]` the channel that left `states[l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<Vec<i64>>,
    pub channels: Vec<usize>,
    pub horizon: f64,
    pub counts: Vec<u64>,
}

impl Path {
    pub fn num_jumps(&self) -> usize {
        self.channels.len()
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &[i64] {
        let l = self.times.partition_point(|&s| s <= t);
        &self.states[l.saturating_sub(1)]
    }

    /// Writes `time,species...,channel` rows; the channel column is empty for
    /// the last state.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, species: &[String]) -> std::io::Result<()> {
        writeln!(out, "time,{},channel", species.join(","))?;
        for (l, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let ch = self.channels.get(l).map(|c| (c + 1).to_string()).unwrap_or_default();
            writeln!(out, "{t},{},{ch}", xs.join(","))?;
        }
        Ok(())
    }
}

/// Observer that records the trajectory.
#[derive(Clone, Debug, Default)]
pub struct PathRecorder {
    path: Option<Path>,
}

impl PathRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_path(self) -> Path {
        self.path.expect("path recorder saw no steps")
    }
}

impl Observer for PathRecorder {
    fn on_step(&mut self, step: &Step<'_>) {
        match &mut self.path {
            None => {
                self.path = Some(Path {
                    times: vec![step.t0],
                    states: vec![step.state.to_vec()],
                    channels: Vec::new(),
                    horizon: step.t1,
                    counts: vec![0; step.rates.len()],
                })
            }
            Some(path) => {
                path.times.push(step.t0);
                path.states.push(step.state.to_vec());
            }
        }
        let path = self.path.as_mut().expect("initialized above");
        match step.fired {
            Some(j) => {
                path.channels.push(j);
                path.counts[j] += 1;
            }
            None => path.horizon = step.t1,
        }
    }
}

/// Simulates a network path on `[0, horizon]`.
pub fn simulate<A: Arrivals + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    horizon: f64,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<Path> {
    net.check_state(x0)?;
    let model = ParamNet::new(net, theta)?;
    let mut rec = PathRecorder::new();
    run(&model, x0, horizon, arrivals, opts, &mut rec)?;
    let path = rec.into_path();
    Ok(path)
}

/// Feeds a recorded path of `model` to `obs` step by step. The time
/// derivative slices are empty, so observers that need them cannot be
/// replayed.
pub fn replay<M, O>(path: &Path, model: &M, obs: &mut O) -> Result<()>
where
    M: JumpModel + ?Sized,
    O: Observer + ?Sized,
{
    if obs.needs_time_derivs() {
        return Err(Error::Argument("time derivatives are not available when replaying a path".into()));
    }
    let kc = model.num_channels();
    let r = model.param_dim();
    let want_grads = obs.needs_grads();
    let mut rates = vec![0.0; kc];
    let mut grads = vec![0.0; if want_grads { kc * r } else { 0 }];
    let n = path.num_jumps();
    for l in 0..=n {
        let state = &path.states[l];
        if state.len() != model.num_species() {
            return Err(Error::Argument("path does not match the model".into()));
        }
        model.eval(state, &mut rates, if want_grads { Some(&mut grads[..]) } else { None });
        let fired = path.channels.get(l).copied();
        if let Some(c) = fired {
            if c >= kc {
                return Err(Error::Argument("path does not match the model".into()));
            }
        }
        obs.on_step(&Step {
            t0: path.times[l],
            t1: if l < n { path.times[l + 1] } else { path.horizon },
            state,
            rates: &rates,
            grads: &grads,
            fired,
            dt0: &[],
            dt1: &[],
        });
    }
    Ok(())
}

/// Observer reporting whether every visited state has identical rates under
/// a reference network, i.e. whether the path is also a valid realization
/// of the reference process.
#[derive(Debug)]
pub struct AgreementMonitor<'a> {
    reference: &'a ReactionNetwork,
    theta: &'a [f64],
    offset: usize,
    channel_stride: usize,
    pub agrees: bool,
}

impl<'a> AgreementMonitor<'a> {
    /// `offset` selects the species block of the observed model, and
    /// `channel_stride` maps reaction k of the reference to channel
    /// `k * channel_stride` of the observed model.
    pub fn new(reference: &'a ReactionNetwork, theta: &'a [f64], offset: usize, channel_stride: usize) -> Self {
        Self { reference, theta, offset, channel_stride, agrees: true }
    }
}

impl Observer for AgreementMonitor<'_> {
    fn on_step(&mut self, step: &Step<'_>) {
        if !self.agrees {
            return;
        }
        let d = self.reference.num_species();
        let x = &step.state[self.offset..self.offset + d];
        for k in 0..self.reference.num_reactions() {
            if self.reference.eval(k, self.theta, x, None) != step.rates[k * self.channel_stride] {
                self.agrees = false;
                return;
            }
        }
    }
}
