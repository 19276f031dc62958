//! Construction of the non-interruptive approximate process.

use super::{IntensitySpec, Reaction, ReactionNetwork};
use crate::error::{Error, InterruptingPair, Result};

/// Clipping parameters for [`build_approx_process`].
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOptions {
    /// Per-reaction floor scale `delta_k`.
    pub delta: Vec<f64>,
    /// Ceiling multiplier `M` for mass-action reactions.
    pub big_m: f64,
    /// Reactions left unfloored (zero-based).
    pub exempt: Vec<usize>,
}

impl ApproxOptions {
    /// Defaults: `delta_k = 1`, `M = 1e6`, nothing exempt.
    pub fn new(num_reactions: usize) -> Self {
        Self { delta: vec![1.0; num_reactions], big_m: 1e6, exempt: Vec::new() }
    }

    pub fn with_exempt(mut self, exempt: &[usize]) -> Self {
        self.exempt = exempt.to_vec();
        self
    }
}

/// Pairs `(k, l)` where `l` is exempt and reaction `k` consumes a source
/// species of `l`, so that a firing of `k` can switch `l` off.
pub fn interrupting_pairs(net: &ReactionNetwork, exempt: &[usize]) -> Vec<InterruptingPair> {
    let mut pairs = Vec::new();
    for &l in exempt {
        let target = net.reaction(l);
        for (k, r) in net.reactions().iter().enumerate() {
            if k == l {
                continue;
            }
            let consumes = target.nu.iter().zip(&r.zeta).any(|(&n, &z)| n > 0 && z < 0);
            if consumes {
                pairs.push(InterruptingPair { interrupter: k, interrupted: l });
            }
        }
    }
    pairs
}

/// Builds the approximate network: every non-exempt reaction with a
/// non-empty source gets a positive floor, mass-action reactions get the
/// ceiling `theta_k M`, and the state floor is removed.
pub fn build_approx_process(net: &ReactionNetwork, opts: &ApproxOptions) -> Result<ReactionNetwork> {
    let k_count = net.num_reactions();
    if opts.delta.len() != k_count {
        return Err(Error::Config(format!(
            "delta has {} entries, network has {} reactions",
            opts.delta.len(),
            k_count
        )));
    }
    if let Some(k) = opts.delta.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::Config(format!("delta for reaction {} must be positive", k + 1)));
    }
    if !(opts.big_m.is_finite() && opts.big_m > 0.0) {
        return Err(Error::Config("M must be positive".into()));
    }
    if let Some(&k) = opts.exempt.iter().find(|&&k| k >= k_count) {
        return Err(Error::Config(format!("exempt reaction {} does not exist", k + 1)));
    }
    let pairs = interrupting_pairs(net, &opts.exempt);
    if !pairs.is_empty() {
        return Err(Error::NonInterruptive { pairs });
    }

    let reactions = net
        .reactions()
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let base = match &r.intensity {
                IntensitySpec::Clipped { .. } => {
                    return Err(Error::Config(format!(
                        "reaction {} is already clipped; build from the original network",
                        k + 1
                    )))
                }
                b => b.clone(),
            };
            let floor = if opts.exempt.contains(&k) || !r.has_sources() { None } else { Some(opts.delta[k]) };
            let ceiling = match base {
                IntensitySpec::MassAction { .. } => Some(opts.big_m),
                _ => None,
            };
            Ok(Reaction {
                name: r.name.clone(),
                zeta: r.zeta.clone(),
                nu: r.nu.clone(),
                intensity: IntensitySpec::Clipped { base: Box::new(base), floor, ceiling },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ReactionNetwork::new(net.species().to_vec(), reactions, net.param_dim(), None)
}

#[cfg(test)]
mod tests {
    use super::super::testnets::*;
    use super::super::{check_non_interruptive, Branch, ScanBox};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn switch_rates_match_the_hand_written_approximation() {
        let z = build_approx_process(&switch(), &ApproxOptions::new(3).with_exempt(&[2])).unwrap();
        let theta = [0.25, 1.0, 1.0];
        for a in -3..6i64 {
            for b in -3..6i64 {
                let x = [a, b, 0];
                let l1 = if a < 1 { 0.25 } else { 0.25 * a as f64 };
                let l2 = if a < 1 { 1.0 } else { a as f64 };
                let l3 = if b < 1 { 0.0 } else { b as f64 };
                assert_eq!(z.eval(0, &theta, &x, None), l1);
                assert_eq!(z.eval(1, &theta, &x, None), l2);
                assert_eq!(z.eval(2, &theta, &x, None), l3);
            }
        }
    }

    #[test]
    fn dimerization_table_rates() {
        let big_m = 1e6;
        let z = build_approx_process(&dimerization(), &ApproxOptions::new(6).with_exempt(&[3, 5])).unwrap();
        let t = [200.0, 100.0, 0.1, 25.0, 1.0, 1.0];
        for m in -2..4i64 {
            for p in -2..5i64 {
                for d in -2..3i64 {
                    let x = [m, p, d];
                    let cap = |k: usize, v: f64| if v >= t[k] * big_m { t[k] * big_m } else { v };
                    let expect = [
                        t[0],
                        if m < 1 { t[1] } else { cap(1, t[1] * m as f64) },
                        if p < 2 { t[2] } else { cap(2, t[2] * (p * (p - 1)) as f64) },
                        if m < 1 { 0.0 } else { cap(3, t[3] * m as f64) },
                        if p < 1 { t[4] } else { cap(4, t[4] * p as f64) },
                        if d < 1 { 0.0 } else { cap(5, t[5] * d as f64) },
                    ];
                    for (k, e) in expect.iter().enumerate() {
                        assert_eq!(z.eval(k, &t, &x, None), *e, "k={k} x={x:?}");
                    }
                }
            }
        }
        assert_eq!(z.eval_branch(2, &t, &[0, 1001, 0], None).1, Branch::Ceiling);
    }

    #[test]
    fn mm_switch_floor() {
        let z = build_approx_process(&mm_switch(), &ApproxOptions::new(3).with_exempt(&[2])).unwrap();
        let t = [0.05, 1.0, 1.0, 11.0];
        assert_eq!(z.eval(0, &t, &[-1, 0, 0], None), 0.05);
        assert_eq!(z.eval(1, &t, &[-1, 0, 0], None), 1.0 / 12.0);
        assert_eq!(z.eval(1, &t, &[4, 0, 0], None), 4.0 / 15.0);
        assert_eq!(z.eval(2, &t, &[0, 0, 0], None), 0.0);
        assert_eq!(z.eval(2, &t, &[0, 3, 0], None), 3.0);
    }

    #[test]
    fn exempt_all_on_birth_death_is_identity_on_the_orthant() {
        let x = birth_death();
        let z = build_approx_process(&x, &ApproxOptions::new(2).with_exempt(&[0, 1])).unwrap();
        let t = [10.0, 0.5];
        for a in 0..200 {
            for k in 0..2 {
                assert_eq!(x.eval(k, &t, &[a], None), z.eval(k, &t, &[a], None));
            }
        }
    }

    #[test]
    fn rejects_exempting_an_interruptible_reaction() {
        let err = build_approx_process(&switch(), &ApproxOptions::new(3).with_exempt(&[0])).unwrap_err();
        match err {
            Error::NonInterruptive { pairs } => {
                assert_eq!(pairs, vec![InterruptingPair { interrupter: 1, interrupted: 0 }]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let clipped = build_approx_process(&switch(), &ApproxOptions::new(3)).unwrap();
        assert!(build_approx_process(&clipped, &ApproxOptions::new(3)).is_err());
        let mut bad = ApproxOptions::new(3);
        bad.delta[1] = 0.0;
        assert!(build_approx_process(&switch(), &bad).is_err());
    }

    fn subsets(k: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(any::<bool>(), k)
            .prop_map(|mask| mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn accepted_exempt_sets_are_non_interruptive(exempt in subsets(6), delta in 0.2f64..3.0) {
            let x = dimerization();
            let mut opts = ApproxOptions::new(6).with_exempt(&exempt);
            opts.delta = vec![delta; 6];
            opts.big_m = 50.0;
            if let Ok(z) = build_approx_process(&x, &opts) {
                let t = [2.0, 1.0, 0.1, 2.5, 1.0, 1.0];
                let scan = ScanBox::new(vec![-3, -3, -3], vec![6, 8, 5]).unwrap();
                let report = check_non_interruptive(&z, &t, &scan, None).unwrap();
                prop_assert!(report.non_interruptive, "{:?}", report.violations);
            }
        }

        #[test]
        fn clipped_rates_stay_between_floor_and_ceiling(
            x in proptest::collection::vec(-5i64..60, 3),
            t in proptest::collection::vec(0.05f64..5.0, 6),
        ) {
            let net = dimerization();
            let mut opts = ApproxOptions::new(6).with_exempt(&[3, 5]);
            opts.big_m = 100.0;
            let z = build_approx_process(&net, &opts).unwrap();
            for k in 0..6 {
                let lz = z.eval(k, &t, &x, None);
                prop_assert!(lz <= t[k] * opts.big_m);
                if !opts.exempt.contains(&k) {
                    prop_assert!(lz >= t[k] * opts.delta[k].min(1.0));
                    prop_assert!(lz > 0.0);
                }
                let lx = net.eval(k, &t, &x, None);
                let r = net.reaction(k);
                if !r.sources_unmet(&x) && x.iter().all(|&v| v >= 0) && lx < t[k] * opts.big_m {
                    prop_assert_eq!(lz, lx);
                }
            }
        }
    }
}
