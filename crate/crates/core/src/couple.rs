//! Split coupling of two networks with the same jump vectors.
//!
//! Reaction `k` of the pair becomes three channels of a process on
//! `(x, z)`: a shared channel with rate `min(lx, lz)` that moves both
//! components, and two one-sided channels carrying the excess of either
//! side. Channel `3k + j` is the `j`-th of these, in that order.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::Arrivals;
use crate::sim::{
    replay, replay_lr_weight, run, Functional, FunctionalTracker, JumpModel, LrWeight, Observer, Path, PathRecorder,
    SimOptions, Step,
};

/// Rates of the shared, X-only and Z-only channels.
pub fn coupled_rates(lam_x: f64, lam_z: f64) -> Result<(f64, f64, f64)> {
    if !(lam_x >= 0.0 && lam_z >= 0.0) {
        return Err(Error::Argument(format!("coupled rates need non-negative intensities, got ({lam_x}, {lam_z})")));
    }
    Ok(split(lam_x, lam_z))
}

#[inline]
fn split(lam_x: f64, lam_z: f64) -> (f64, f64, f64) {
    let m = lam_x.min(lam_z);
    (m, lam_x - m, lam_z - m)
}

#[derive(Debug, Default)]
struct Buffers {
    rx: Vec<f64>,
    rz: Vec<f64>,
    gx: Vec<f64>,
    gz: Vec<f64>,
}

/// The coupled process as a [`JumpModel`] on `2d` species with `3K`
/// channels.
///
/// Gradients of the shared channel follow the side whose intensity is the
/// minimum, taking X at ties; the one-sided channels get the matching
/// differences. They are derivatives with respect to a common parameter
/// and only meaningful when both sides use the same `theta`.
#[derive(Debug)]
pub struct CoupledModel<'a> {
    x_net: &'a ReactionNetwork,
    z_net: &'a ReactionNetwork,
    theta_x: &'a [f64],
    theta_z: &'a [f64],
    jumps: Vec<Vec<i64>>,
    buf: RefCell<Buffers>,
}

impl<'a> CoupledModel<'a> {
    pub fn new(x_net: &'a ReactionNetwork, z_net: &'a ReactionNetwork, theta: &'a [f64]) -> Result<Self> {
        Self::with_thetas(x_net, z_net, theta, theta)
    }

    /// Couples `x_net` at `theta_x` with `z_net` at `theta_z`.
    pub fn with_thetas(
        x_net: &'a ReactionNetwork,
        z_net: &'a ReactionNetwork,
        theta_x: &'a [f64],
        theta_z: &'a [f64],
    ) -> Result<Self> {
        let d = x_net.num_species();
        if z_net.num_species() != d
            || z_net.num_reactions() != x_net.num_reactions()
            || z_net.param_dim() != x_net.param_dim()
        {
            return Err(Error::Config("coupled networks differ in shape".into()));
        }
        let mut jumps = Vec::with_capacity(3 * x_net.num_reactions());
        for (rx, rz) in x_net.reactions().iter().zip(z_net.reactions()) {
            if rx.zeta != rz.zeta {
                return Err(Error::Config(format!("coupled networks differ in the jump of reaction '{}'", rx.name)));
            }
            jumps.push(rx.zeta.iter().chain(&rx.zeta).copied().collect());
            jumps.push(rx.zeta.iter().copied().chain(std::iter::repeat_n(0, d)).collect());
            jumps.push(std::iter::repeat_n(0, d).chain(rx.zeta.iter().copied()).collect());
        }
        x_net.check_theta(theta_x)?;
        z_net.check_theta(theta_z)?;
        Ok(Self { x_net, z_net, theta_x, theta_z, jumps, buf: RefCell::new(Buffers::default()) })
    }

    pub fn num_reactions(&self) -> usize {
        self.x_net.num_reactions()
    }

    pub fn species_per_side(&self) -> usize {
        self.x_net.num_species()
    }
}

impl JumpModel for CoupledModel<'_> {
    fn num_species(&self) -> usize {
        2 * self.x_net.num_species()
    }

    fn num_channels(&self) -> usize {
        3 * self.x_net.num_reactions()
    }

    fn param_dim(&self) -> usize {
        self.x_net.param_dim()
    }

    fn jump(&self, channel: usize) -> &[i64] {
        &self.jumps[channel]
    }

    fn eval(&self, state: &[i64], rates: &mut [f64], grads: Option<&mut [f64]>) {
        let d = self.x_net.num_species();
        let kn = self.x_net.num_reactions();
        let r = self.x_net.param_dim();
        let (x, z) = state.split_at(d);
        let mut b = self.buf.borrow_mut();
        let Buffers { rx, rz, gx, gz } = &mut *b;
        rx.resize(kn, 0.0);
        rz.resize(kn, 0.0);
        let want = grads.is_some();
        if want {
            gx.resize(kn * r, 0.0);
            gz.resize(kn * r, 0.0);
        }
        self.x_net.eval_all(self.theta_x, x, rx, if want { Some(&mut gx[..]) } else { None });
        self.z_net.eval_all(self.theta_z, z, rz, if want { Some(&mut gz[..]) } else { None });
        for k in 0..kn {
            let (l1, l2, l3) = split(rx[k], rz[k]);
            debug_assert!(l2 * l3 == 0.0);
            rates[3 * k] = l1;
            rates[3 * k + 1] = l2;
            rates[3 * k + 2] = l3;
        }
        if let Some(g) = grads {
            for k in 0..kn {
                let a = &gx[k * r..(k + 1) * r];
                let c = &gz[k * r..(k + 1) * r];
                let x_low = rx[k] <= rz[k];
                let base = 3 * k * r;
                for i in 0..r {
                    let (g1, g2, g3) = if x_low { (a[i], 0.0, c[i] - a[i]) } else { (c[i], a[i] - c[i], 0.0) };
                    g[base + i] = g1;
                    g[base + r + i] = g2;
                    g[base + 2 * r + i] = g3;
                }
            }
        }
    }
}

/// A coupled trajectory on `(x, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPath {
    pub path: Path,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X,
    Z,
}

impl CoupledPath {
    pub fn x_at(&self, t: f64) -> &[i64] {
        &self.path.state_at(t)[..self.d]
    }

    pub fn z_at(&self, t: f64) -> &[i64] {
        &self.path.state_at(t)[self.d..]
    }

    /// Jump counts of reaction `k` on the shared, X-only and Z-only channels.
    pub fn typed_counts(&self, k: usize) -> [u64; 3] {
        let c = &self.path.counts;
        [c[3 * k], c[3 * k + 1], c[3 * k + 2]]
    }

    /// Whether any one-sided channel fired.
    pub fn diverged(&self) -> bool {
        self.path.counts.iter().enumerate().any(|(c, n)| c % 3 != 0 && *n > 0)
    }

    /// The trajectory of one component, with channels mapped back to
    /// reactions.
    pub fn marginal(&self, side: Side) -> Path {
        let (lo, skip) = match side {
            Side::X => (0, 2),
            Side::Z => (self.d, 1),
        };
        let p = &self.path;
        let k = p.counts.len() / 3;
        let mut out = Path {
            times: vec![0.0],
            states: vec![p.states[0][lo..lo + self.d].to_vec()],
            channels: Vec::new(),
            horizon: p.horizon,
            counts: vec![0; k],
        };
        for (l, &c) in p.channels.iter().enumerate() {
            if c % 3 == skip {
                continue;
            }
            out.channels.push(c / 3);
            out.counts[c / 3] += 1;
            out.times.push(p.times[l + 1]);
            out.states.push(p.states[l + 1][lo..lo + self.d].to_vec());
        }
        out
    }
}

/// Simulates the split coupling of `x_net` and `z_net` at a common `theta`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled<A: Arrivals + ?Sized>(
    x_net: &ReactionNetwork,
    z_net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    z0: &[i64],
    horizon: f64,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<CoupledPath> {
    x_net.check_state(x0)?;
    z_net.check_state(z0)?;
    let model = CoupledModel::new(x_net, z_net, theta)?;
    let start: Vec<i64> = x0.iter().chain(z0).copied().collect();
    let mut rec = PathRecorder::new();
    run(&model, &start, horizon, arrivals, opts, &mut rec)?;
    Ok(CoupledPath { path: rec.into_path(), d: x_net.num_species() })
}

/// Coupled weight `H~_i(T)` of a recorded coupled path.
pub fn coupled_lr_weight(
    cp: &CoupledPath,
    x_net: &ReactionNetwork,
    z_net: &ReactionNetwork,
    theta: &[f64],
    i: usize,
    t: f64,
) -> Result<f64> {
    if i >= x_net.param_dim() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    let model = CoupledModel::new(x_net, z_net, theta)?;
    Ok(replay_lr_weight(&cp.path, &model, t)?[i])
}

fn check_pair(fx: &Functional, fz: &Functional) -> Result<()> {
    if fx.is_integral() != fz.is_integral() || fx.window() != fz.window() {
        return Err(Error::Argument("correction functionals must share their kind and window".into()));
    }
    Ok(())
}

fn correction_value(fx: &Functional, tx: &FunctionalTracker, tz: &FunctionalTracker, h: &[f64]) -> Vec<f64> {
    let diff = (tx.value - tx.initial) - (tz.value - tz.initial);
    h.iter()
        .enumerate()
        .map(|(i, hi)| {
            let explicit = if fx.is_integral() { tx.explicit_grad[i] - tz.explicit_grad[i] } else { 0.0 };
            explicit + hi * diff
        })
        .collect()
}

/// Correction sample `V_i` of a recorded coupled path: the difference of
/// the explicit derivatives of the integrals of `F` along X and Z plus the
/// coupled weight at the window end times the difference of the integrals.
/// For terminal functionals it is `H~_i(T) (f(X_T) - f(Z_T))`.
#[allow(clippy::too_many_arguments)]
pub fn correction_sample(
    cp: &CoupledPath,
    x_net: &ReactionNetwork,
    z_net: &ReactionNetwork,
    fx: &Functional,
    fz: &Functional,
    theta: &[f64],
    i: usize,
) -> Result<f64> {
    check_pair(fx, fz)?;
    let d = cp.d;
    fx.check(d, x_net.param_dim())?;
    fz.check(d, x_net.param_dim())?;
    if i >= x_net.param_dim() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    let (_, end) = fx.window();
    if end > cp.path.horizon {
        return Err(Error::Argument("coupled path is shorter than the functional window".into()));
    }
    let model = CoupledModel::new(x_net, z_net, theta)?;
    let mut tx = FunctionalTracker::new(fx, theta, 0, d);
    let mut tz = FunctionalTracker::new(fz, theta, d, d);
    let mut w = LrWeight::new(end, x_net.param_dim());
    replay(&cp.path, &model, &mut (&mut tx, &mut tz, &mut w))?;
    if w.invalid {
        return Err(Error::Invariant("a coupled channel fired with zero intensity".into()));
    }
    Ok(correction_value(fx, &tx, &tz, &w.h)[i])
}

/// Counts firings per channel.
#[derive(Clone, Debug)]
pub struct ChannelCounter {
    pub counts: Vec<u64>,
}

impl ChannelCounter {
    pub fn new(channels: usize) -> Self {
        Self { counts: vec![0; channels] }
    }

    /// Whether a one-sided channel of a coupled model fired.
    pub fn diverged(&self) -> bool {
        self.counts.iter().enumerate().any(|(c, n)| c % 3 != 0 && *n > 0)
    }
}

impl Observer for ChannelCounter {
    fn on_step(&mut self, step: &Step<'_>) {
        if let Some(c) = step.fired {
            self.counts[c] += 1;
        }
    }
}

/// One correction sample for every parameter direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub v: Vec<f64>,
    pub diverged: bool,
    pub jumps: u64,
}

/// Simulates a coupled path from `x0` on both sides and returns the
/// correction samples without recording the path.
pub fn simulate_correction<A: Arrivals + ?Sized>(
    model: &CoupledModel<'_>,
    theta: &[f64],
    x0: &[i64],
    functional: &Functional,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<Correction> {
    let d = model.species_per_side();
    let r = model.param_dim();
    functional.check(d, r)?;
    let (_, end) = functional.window();
    let mut tx = FunctionalTracker::new(functional, theta, 0, d);
    let mut tz = FunctionalTracker::new(functional, theta, d, d);
    let mut w = LrWeight::new(end, r);
    let mut cnt = ChannelCounter::new(model.num_channels());
    let start: Vec<i64> = x0.iter().chain(x0).copied().collect();
    let out = run(model, &start, end, arrivals, opts, &mut (&mut tx, &mut tz, &mut w, &mut cnt))?;
    if w.invalid {
        return Err(Error::Invariant("a coupled channel fired with zero intensity".into()));
    }
    Ok(Correction { v: correction_value(functional, &tx, &tz, &w.h), diverged: cnt.diverged(), jumps: out.jumps })
}

/// One centered-difference sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfdSample {
    pub value: f64,
    pub jumps: u64,
}

/// `theta +- h e_i`, rejecting steps that leave the parameter region.
pub fn perturbed_thetas(theta: &[f64], i: usize, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if i >= theta.len() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Argument(format!("finite-difference step must be positive, got {h}")));
    }
    if theta[i] - h < 0.0 {
        return Err(Error::Argument(format!(
            "finite-difference step {h} makes parameter {} negative ({})",
            i + 1,
            theta[i] - h
        )));
    }
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    plus[i] += h;
    minus[i] -= h;
    Ok((plus, minus))
}

/// Centered finite difference of `functional` in direction `i` from one
/// split-coupled pair of paths at `theta + h e_i` and `theta - h e_i`.
#[allow(clippy::too_many_arguments)]
pub fn cfd_sample<A: Arrivals + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    i: usize,
    h: f64,
    functional: &Functional,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<CfdSample> {
    let (plus, minus) = perturbed_thetas(theta, i, h)?;
    let model = CoupledModel::with_thetas(net, net, &plus, &minus)?;
    cfd_with_model(&model, &plus, &minus, x0, h, functional, arrivals, opts)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn cfd_with_model<A: Arrivals + ?Sized>(
    model: &CoupledModel<'_>,
    plus: &[f64],
    minus: &[f64],
    x0: &[i64],
    h: f64,
    functional: &Functional,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<CfdSample> {
    let d = model.species_per_side();
    functional.check(d, model.param_dim())?;
    let mut tp = FunctionalTracker::new(functional, plus, 0, d);
    let mut tm = FunctionalTracker::new(functional, minus, d, d);
    let start: Vec<i64> = x0.iter().chain(x0).copied().collect();
    let out = run(model, &start, functional.horizon(), arrivals, opts, &mut (&mut tp, &mut tm))?;
    Ok(CfdSample { value: (tp.value - tm.value) / (2.0 * h), jumps: out.jumps })
}

/// Checks the coupled rate identities at every visited state against
/// intensities recomputed from the two networks. Sums are compared to a few
/// ulps: `m + (l - m)` need not round back to `l`.
#[derive(Debug)]
pub struct IdentityMonitor<'a> {
    x_net: &'a ReactionNetwork,
    z_net: &'a ReactionNetwork,
    theta_x: &'a [f64],
    theta_z: &'a [f64],
    pub states: u64,
    pub violations: u64,
}

impl<'a> IdentityMonitor<'a> {
    pub fn new(x_net: &'a ReactionNetwork, z_net: &'a ReactionNetwork, theta_x: &'a [f64], theta_z: &'a [f64]) -> Self {
        Self { x_net, z_net, theta_x, theta_z, states: 0, violations: 0 }
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b.abs()
}

impl Observer for IdentityMonitor<'_> {
    fn on_step(&mut self, step: &Step<'_>) {
        let d = self.x_net.num_species();
        let (x, z) = step.state.split_at(d);
        self.states += 1;
        for k in 0..self.x_net.num_reactions() {
            let lx = self.x_net.eval(k, self.theta_x, x, None);
            let lz = self.z_net.eval(k, self.theta_z, z, None);
            let r = &step.rates[3 * k..3 * k + 3];
            if r[1] * r[2] != 0.0 || !near(r[0] + r[1], lx) || !near(r[0] + r[2], lz) || r.iter().any(|v| *v < 0.0) {
                self.violations += 1;
                return;
            }
        }
    }
}
