//! Pathwise derivative of an integral functional.
//!
//! For every holding interval the contribution to `d/dtheta int_a^b F` is
//! `len * dF + F * d(len)`, where `len` is the part of the interval inside
//! `[a, b]` and `d(len)` follows from the derivatives of the jump times
//! carried by the engine. Summed over a path this is the same quantity as
//! the flag-based bookkeeping of the next-reaction-method derivative
//! recursion when `a = 0`; clipping the interval to the window also keeps
//! the result right for `a > 0`.

use super::functional::Scratch;
use super::{run, Functional, Observer, ParamNet, Path, PathRecorder, SimOptions, Step};
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::Arrivals;

#[derive(Debug)]
pub struct PathwiseTracker<'a> {
    functional: &'a Functional,
    theta: &'a [f64],
    offset: usize,
    d: usize,
    want_grad: bool,
    pub d_l: Vec<f64>,
    scratch: Scratch,
    grad_buf: Vec<f64>,
}

impl<'a> PathwiseTracker<'a> {
    pub fn new(functional: &'a Functional, theta: &'a [f64], offset: usize, d: usize) -> Result<Self> {
        if !functional.is_integral() {
            return Err(Error::Argument("pathwise derivatives need an integral functional".into()));
        }
        let r = theta.len();
        Ok(Self {
            functional,
            theta,
            offset,
            d,
            want_grad: functional.depends_on_theta(),
            d_l: vec![0.0; r],
            scratch: Scratch::default(),
            grad_buf: vec![0.0; r],
        })
    }
}

impl Observer for PathwiseTracker<'_> {
    fn needs_time_derivs(&self) -> bool {
        true
    }

    fn on_step(&mut self, step: &Step<'_>) {
        let Functional::Integral { integrand, a, b, .. } = self.functional else {
            unreachable!("checked at construction")
        };
        let lo = step.t0.max(*a);
        let hi = step.t1.min(*b);
        if hi <= lo {
            return;
        }
        let x = &step.state[self.offset..self.offset + self.d];
        let grad = if self.want_grad { Some(&mut self.grad_buf[..]) } else { None };
        let fv = integrand.eval(self.theta, x, grad, &mut self.scratch);
        let len = hi - lo;
        let lo_moves = step.t0 >= *a;
        let hi_moves = step.t1 < *b;
        for i in 0..self.d_l.len() {
            let d_len = if hi_moves { step.dt1[i] } else { 0.0 } - if lo_moves { step.dt0[i] } else { 0.0 };
            let mut c = fv * d_len;
            if self.want_grad {
                c += len * self.grad_buf[i];
            }
            self.d_l[i] += c;
        }
    }
}

/// Simulates `net` and returns the path together with the pathwise
/// derivative of `functional` in every parameter direction.
pub fn simulate_pathwise<A: Arrivals + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    functional: &Functional,
    arrivals: &mut A,
    opts: &SimOptions,
) -> Result<(Path, Vec<f64>)> {
    net.check_state(x0)?;
    functional.check(net.num_species(), net.param_dim())?;
    let model = ParamNet::new(net, theta)?;
    let mut tracker = PathwiseTracker::new(functional, theta, 0, net.num_species())?;
    let mut rec = PathRecorder::new();
    run(&model, x0, functional.horizon(), arrivals, opts, &mut (&mut tracker, &mut rec))?;
    let d_l = tracker.d_l;
    for (i, v) in d_l.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Invariant(format!("non-finite pathwise derivative in direction {}", i + 1)));
        }
    }
    Ok((rec.into_path(), d_l))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::testnets::*;
    use crate::rng::{FixedArrivals, StreamKey};
    use crate::sim::{make_gs_functional, FunctionalTracker, Integrand, Observable};

    fn frozen(seed: u64, idx: u64, k: usize, len: usize) -> FixedArrivals {
        let mut s = StreamKey::new(seed, 0, idx).arrivals(k);
        FixedArrivals::new(
            (0..k).map(|c| (0..len).map(|_| crate::rng::Arrivals::next_arrival(&mut s, c)).collect()).collect(),
        )
    }

    fn value(net: &ReactionNetwork, theta: &[f64], f: &Functional, arr: &mut FixedArrivals) -> (f64, Vec<usize>) {
        let mut tr = FunctionalTracker::new(f, theta, 0, net.num_species());
        let mut rec = PathRecorder::new();
        run(
            &ParamNet::new(net, theta).unwrap(),
            &[0],
            f.horizon(),
            arr,
            &SimOptions::default(),
            &mut (&mut tr, &mut rec),
        )
        .unwrap();
        (tr.value, rec.into_path().channels)
    }

    #[test]
    fn constant_integrand_has_zero_derivative() {
        let net = switch();
        let f =
            Functional::integral(Integrand::Observable { f: Observable::Constant(2.5), scale: 1.0 }, 0.3, 4.0).unwrap();
        for idx in 0..30 {
            let mut s = StreamKey::new(1, 2, idx).arrivals(3);
            let z = crate::model::build_approx_process(&net, &crate::model::ApproxOptions::new(3).with_exempt(&[2]))
                .unwrap();
            let (_, dl) =
                simulate_pathwise(&z, &[0.25, 1.0, 1.0], &[10, 0, 0], &f, &mut s, &SimOptions::default()).unwrap();
            for v in dl {
                assert!(v.abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn matches_common_random_number_differences() {
        let net = birth_death();
        let netp = Arc::new(net.clone());
        let theta = [10.0, 0.5];
        let f = make_gs_functional(netp, Observable::Species(0), 5.0).unwrap();
        let h = 1e-6;
        let mut checked = 0;
        for idx in 0..40 {
            let mut arr = frozen(11, idx, 2, 400);
            let (_, dl) = simulate_pathwise(&net, &theta, &[0], &f, &mut arr.clone(), &SimOptions::default()).unwrap();
            for i in 0..2 {
                let mut tp = theta;
                let mut tm = theta;
                tp[i] += h * theta[i];
                tm[i] -= h * theta[i];
                let (vp, cp) = value(&net, &tp, &f, &mut arr.clone());
                let (vm, cm) = value(&net, &tm, &f, &mut arr.clone());
                if cp != cm {
                    continue;
                }
                let fd = (vp - vm) / (2.0 * h * theta[i]);
                assert!((fd - dl[i]).abs() <= 1e-4 * dl[i].abs().max(1e-3), "idx {idx} i {i}: fd {fd} dl {}", dl[i]);
                checked += 1;
            }
            let _ = &mut arr;
        }
        assert!(checked > 60);
    }

    #[test]
    fn window_additivity() {
        let net = birth_death();
        let theta = [10.0, 0.5];
        let netp = Arc::new(net.clone());
        let integrand = Integrand::Generator { network: netp, f: Observable::Species(0) };
        let whole = Functional::integral(integrand.clone(), 1.0, 6.0).unwrap();
        let left = Functional::integral(integrand.clone(), 1.0, 2.5).unwrap();
        let right = Functional::integral(integrand, 2.5, 6.0).unwrap();
        for idx in 0..20 {
            let mut trackers = vec![
                PathwiseTracker::new(&whole, &theta, 0, 1).unwrap(),
                PathwiseTracker::new(&left, &theta, 0, 1).unwrap(),
                PathwiseTracker::new(&right, &theta, 0, 1).unwrap(),
            ];
            let mut s = StreamKey::new(2, 2, idx).arrivals(2);
            run(&ParamNet::new(&net, &theta).unwrap(), &[0], 6.0, &mut s, &SimOptions::default(), &mut trackers)
                .unwrap();
            for i in 0..2 {
                let sum = trackers[1].d_l[i] + trackers[2].d_l[i];
                let whole = trackers[0].d_l[i];
                assert!((sum - whole).abs() <= 1e-9 * whole.abs().max(1.0), "{sum} vs {whole}");
            }
        }
    }

    #[test]
    fn zero_jumps_gives_explicit_term_only() {
        // Only the explicit derivative contributes when no jump happens.
        let net = birth_death();
        let netp = Arc::new(net.clone());
        let f = make_gs_functional(netp, Observable::Species(0), 2.0).unwrap();
        let mut arr = FixedArrivals::new(vec![vec![], vec![]]);
        let (p, dl) = simulate_pathwise(&net, &[10.0, 0.5], &[3], &f, &mut arr, &SimOptions::default()).unwrap();
        assert_eq!(p.num_jumps(), 0);
        assert_eq!(dl, vec![2.0, -6.0]);
    }

    #[test]
    fn rejects_terminal_functionals() {
        let net = birth_death();
        let f = Functional::terminal(Observable::Species(0), 1.0).unwrap();
        let mut s = StreamKey::new(1, 1, 1).arrivals(2);
        assert!(simulate_pathwise(&net, &[1.0, 1.0], &[0], &f, &mut s, &SimOptions::default()).is_err());
    }
}
