//! Reference values: closed forms and master-equation solutions.

mod cme;
mod ode;

pub use cme::{cme_sensitivity, cme_solve, cme_solve_many, CmeBox, CmeOptions, TruncatedDistribution};
pub use ode::{integrate, OdeOptions, OdeStats};

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::rng::{phase, StreamKey};
use crate::sim::{run, Observer, ParamNet, SimOptions, Step};

/// Mean of the birth-death process `0 -> A` (rate `theta1`), `A -> 0`
/// (rate `theta2 * A`) started empty, with its two parameter derivatives.
pub fn closed_form_birth_death(theta: &[f64], t: f64) -> Result<(f64, f64, f64)> {
    let &[a, b] = theta else {
        return Err(Error::Argument(format!("birth-death has 2 parameters, got {}", theta.len())));
    };
    if b == 0.0 {
        return Err(Error::Argument("death rate must be non-zero".into()));
    }
    let e = (-b * t).exp();
    let mean = a / b * (1.0 - e);
    let d_birth = (1.0 - e) / b;
    let d_death = -a / (b * b) * (1.0 - e) + a / b * t * e;
    Ok((mean, d_birth, d_death))
}

/// Derivative in `theta1` of `E[C(t)]` for `A -> 0` (`theta1`), `A -> B`,
/// `B -> C` (both at rate 1) started from `a` copies of `A`.
pub fn closed_form_switch(theta1: f64, a: f64, t: f64) -> Result<f64> {
    if theta1 == 0.0 || theta1 == -1.0 {
        return Err(Error::Argument(format!("closed form undefined at theta1 = {theta1}")));
    }
    let s = theta1;
    let s1 = 1.0 + s;
    Ok(a * (-t).exp() / (s * s)
        - a / (s1 * s1)
        - a * (-s1 * t).exp() * (s * s * t + s * (t + 2.0) + 1.0) / (s * s * s1 * s1))
}

struct Maxima(Vec<i64>);

impl Observer for Maxima {
    fn on_step(&mut self, step: &Step<'_>) {
        for (m, &x) in self.0.iter_mut().zip(step.state) {
            *m = (*m).max(x);
        }
    }
}

/// Truncation box from simulated path maxima: each bound is the sample mean
/// of the running maximum plus ten standard deviations, and at least the
/// initial state.
pub fn default_box(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    t: f64,
    paths: u64,
    seed: u64,
    sim: &SimOptions,
) -> Result<CmeBox> {
    net.check_state(x0)?;
    let model = ParamNet::new(net, theta)?;
    let d = net.num_species();
    let n = paths.max(2);
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for idx in 0..n {
        let mut s = StreamKey::new(seed, phase::BOX_PILOT, idx).arrivals(net.num_reactions());
        let mut obs = Maxima(x0.to_vec());
        run(&model, x0, t, &mut s, sim, &mut obs)?;
        for j in 0..d {
            let m = obs.0[j] as f64;
            sum[j] += m;
            sq[j] += m * m;
        }
    }
    let upper = (0..d)
        .map(|j| {
            let mean = sum[j] / n as f64;
            let var = ((sq[j] - n as f64 * mean * mean) / (n - 1) as f64).max(0.0);
            ((mean + 10.0 * var.sqrt()).ceil() as i64).max(x0[j]).max(1)
        })
        .collect();
    Ok(CmeBox::new(upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testnets::*;
    use crate::sim::Observable;

    #[test]
    fn birth_death_values() {
        let (m, d1, d2) = closed_form_birth_death(&[10.0, 0.5], 5.0).unwrap();
        assert!((m - 18.3583).abs() < 1e-4);
        assert!((d1 - 1.835830).abs() < 1e-6);
        assert!((d2 + 28.508100).abs() < 1e-5);
        let (_, _, far) = closed_form_birth_death(&[10.0, 0.5], 50.0).unwrap();
        assert!((far + 40.0).abs() < 1e-6);
        assert!(closed_form_birth_death(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn switch_values() {
        for (t, v) in [(0.5, -0.1354327), (2.0, -2.6080504), (10.0, -6.3945010)] {
            assert!((closed_form_switch(0.25, 10.0, t).unwrap() - v).abs() < 1e-6, "{t}");
        }
        assert!(closed_form_switch(0.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn switch_cme_matches_closed_form() {
        let net = switch();
        let o = CmeOptions::default();
        let bx = CmeBox::new(vec![10; 3]);
        let s = cme_sensitivity(&net, &[0.25, 1.0, 1.0], &[10, 0, 0], 0, &Observable::Species(2), 2.0, &bx, None, &o)
            .unwrap();
        assert!((s - closed_form_switch(0.25, 10.0, 2.0).unwrap()).abs() < 1e-5, "{s}");
    }

    #[test]
    fn default_box_contains_the_mass() {
        let net = birth_death();
        let bx = default_box(&net, &[10.0, 0.5], &[0], 5.0, 200, 1, &SimOptions::default()).unwrap();
        let p = cme_solve(&net, &[10.0, 0.5], &[0], 5.0, &bx, &CmeOptions::default()).unwrap();
        assert!(p.leaked < 1e-6, "{bx:?} {}", p.leaked);
    }
}
