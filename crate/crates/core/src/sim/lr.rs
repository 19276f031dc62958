//! Likelihood-ratio weights.

use super::{JumpModel, Observer, Path, Step};
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;

/// Observer accumulating the weight `H(T)` for every parameter direction:
/// the sum over jumps up to `T` of `dlambda/lambda` for the fired channel,
/// minus the integral up to `T` of the summed intensity gradients.
#[derive(Clone, Debug)]
pub struct LrWeight {
    horizon: f64,
    pub h: Vec<f64>,
    /// Set if a channel fired with zero intensity; cannot happen under the
    /// engine, kept as a guard for replayed paths.
    pub invalid: bool,
}

impl LrWeight {
    pub fn new(horizon: f64, param_dim: usize) -> Self {
        Self { horizon, h: vec![0.0; param_dim], invalid: false }
    }
}

impl Observer for LrWeight {
    fn needs_grads(&self) -> bool {
        true
    }

    fn on_step(&mut self, step: &Step<'_>) {
        let r = self.h.len();
        let len = step.t1.min(self.horizon) - step.t0;
        if len > 0.0 {
            for row in step.grads.chunks_exact(r) {
                for (hi, g) in self.h.iter_mut().zip(row) {
                    *hi -= len * g;
                }
            }
        }
        if let Some(j) = step.fired {
            if step.t1 <= self.horizon {
                let lam = step.rates[j];
                let row = &step.grads[j * r..(j + 1) * r];
                if lam > 0.0 {
                    for (hi, g) in self.h.iter_mut().zip(row) {
                        *hi += g / lam;
                    }
                } else if row.iter().any(|g| *g != 0.0) {
                    self.invalid = true;
                }
            }
        }
    }
}

/// Weight `H_i(T)` of a recorded path, replayed from its states.
pub fn lr_weight(path: &Path, net: &ReactionNetwork, theta: &[f64], i: usize, t: f64) -> Result<f64> {
    if i >= net.param_dim() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    let model = super::ParamNet::new(net, theta)?;
    Ok(replay_lr_weight(path, &model, t)?[i])
}

/// All weights `H(T)` of a recorded path of `model`.
pub fn replay_lr_weight<M: JumpModel + ?Sized>(path: &Path, model: &M, t: f64) -> Result<Vec<f64>> {
    if t > path.horizon {
        return Err(Error::Argument(format!("path ends at {} before T = {t}", path.horizon)));
    }
    let mut w = LrWeight::new(t, model.param_dim());
    super::replay(path, model, &mut w)?;
    if w.invalid {
        return Err(Error::Invariant("a reaction fired with zero intensity".into()));
    }
    Ok(w.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testnets::*;
    use crate::rng::{FixedArrivals, StreamKey};
    use crate::sim::tests::immigration;
    use crate::sim::{run, simulate, ParamNet, SimOptions};

    #[test]
    fn zero_jumps_and_zero_rates() {
        let net = birth_death();
        let mut arr = FixedArrivals::new(vec![vec![], vec![]]);
        let p = simulate(&net, &[0.0, 1.0], &[0], 3.0, &mut arr, &SimOptions::default()).unwrap();
        // birth rate zero but its gradient is one: H_1 = -T
        assert_eq!(lr_weight(&p, &net, &[0.0, 1.0], 1, 3.0).unwrap(), 0.0);
        assert_eq!(lr_weight(&p, &net, &[0.0, 1.0], 0, 3.0).unwrap(), -3.0);
    }

    #[test]
    fn single_jump_of_a_constant_rate() {
        let net = immigration(0);
        let mut arr = FixedArrivals::new(vec![vec![0.4]]);
        let p = simulate(&net, &[1.0], &[0], 2.0, &mut arr, &SimOptions::default()).unwrap();
        assert_eq!(p.num_jumps(), 1);
        assert!((lr_weight(&p, &net, &[1.0], 0, 2.0).unwrap() - (1.0 - 2.0)).abs() < 1e-15);
        // before the jump only the compensator counts
        assert!((lr_weight(&p, &net, &[1.0], 0, 0.3).unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn mass_action_simplification() {
        let net = switch();
        let theta = [0.25, 1.0, 1.0];
        for idx in 0..20 {
            let mut s = StreamKey::new(8, 0, idx).arrivals(3);
            let p = simulate(&net, &theta, &[10, 0, 0], 4.0, &mut s, &SimOptions::default()).unwrap();
            for i in 0..3 {
                let mut integral = 0.0;
                for l in 0..=p.num_jumps() {
                    let t1 = if l < p.num_jumps() { p.times[l + 1] } else { p.horizon };
                    integral += (t1 - p.times[l]) * net.eval(i, &theta, &p.states[l], None);
                }
                let expect = (p.counts[i] as f64 - integral) / theta[i];
                let h = lr_weight(&p, &net, &theta, i, 4.0).unwrap();
                assert!((h - expect).abs() < 1e-9 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn observer_matches_replay() {
        let net = switch();
        let theta = [0.25, 1.0, 1.0];
        let mut s = StreamKey::new(8, 1, 0).arrivals(3);
        let p = simulate(&net, &theta, &[10, 0, 0], 4.0, &mut s, &SimOptions::default()).unwrap();
        let mut s = StreamKey::new(8, 1, 0).arrivals(3);
        let mut w = LrWeight::new(4.0, 3);
        run(&ParamNet::new(&net, &theta).unwrap(), &[10, 0, 0], 4.0, &mut s, &SimOptions::default(), &mut w).unwrap();
        for i in 0..3 {
            assert_eq!(w.h[i], lr_weight(&p, &net, &theta, i, 4.0).unwrap());
        }
    }
}
