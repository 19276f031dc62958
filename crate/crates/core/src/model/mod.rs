//! Reaction networks and their intensity functions.
//!
//! Intensities are structural (mass action, Michaelis–Menten, or a clipped
//! wrapper of either) so that parameter gradients are exact and the clipping
//! branch taken at any state can be inspected. Parameter, species and
//! reaction indices are zero-based throughout the library; configuration
//! files use one-based indices.

mod approx;
mod conditions;
pub mod config;

pub use approx::{build_approx_process, interrupting_pairs, ApproxOptions};
pub use conditions::{check_non_interruptive, ConditionReport, ScanBox, Violation};
pub use config::{builtin, builtin_names, Model, ModelConfig};

use crate::error::{Error, Result};

/// Lattice state; coordinates may be negative for approximate processes.
pub type State = Vec<i64>;

#[derive(Clone, Debug, PartialEq)]
pub enum IntensitySpec {
    /// `theta[rate] * prod_i x_i! / (x_i - nu_i)!`.
    MassAction { rate: usize },
    /// `theta[vmax] * x_s / (theta[km] + x_s)`.
    MichaelisMenten { vmax: usize, km: usize, species: usize },
    /// A mass-action or Michaelis–Menten base with a positive floor used
    /// whenever the source requirement fails, and an optional ceiling
    /// `theta[rate] * M` (mass action only). `floor: None` marks an exempt
    /// reaction, which keeps the base behaviour and may reach zero.
    Clipped { base: Box<IntensitySpec>, floor: Option<f64>, ceiling: Option<f64> },
}

impl IntensitySpec {
    fn base(&self) -> &IntensitySpec {
        match self {
            IntensitySpec::Clipped { base, .. } => base,
            other => other,
        }
    }

    /// Parameter indices the intensity depends on.
    pub fn params(&self) -> Vec<usize> {
        match self.base() {
            IntensitySpec::MassAction { rate } => vec![*rate],
            IntensitySpec::MichaelisMenten { vmax, km, .. } => vec![*vmax, *km],
            IntensitySpec::Clipped { .. } => unreachable!("nested clipping is rejected at construction"),
        }
    }
}

/// Which branch of a clipped intensity was used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Natural,
    Floor,
    Ceiling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub name: String,
    /// Net change.
    pub zeta: Vec<i64>,
    /// Source (reactant) vector.
    pub nu: Vec<i64>,
    pub intensity: IntensitySpec,
}

impl Reaction {
    pub fn new(name: impl Into<String>, nu: Vec<i64>, nu_prime: Vec<i64>, intensity: IntensitySpec) -> Self {
        let zeta = nu_prime.iter().zip(&nu).map(|(p, s)| p - s).collect();
        Self { name: name.into(), zeta, nu, intensity }
    }

    /// True when some source species is below its requirement.
    pub fn sources_unmet(&self, x: &[i64]) -> bool {
        self.nu.iter().zip(x).any(|(&n, &xi)| n > 0 && xi < n)
    }

    pub fn has_sources(&self) -> bool {
        self.nu.iter().any(|&n| n > 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    param_dim: usize,
    state_floor: Option<Vec<i64>>,
}

fn falling_product(nu: &[i64], x: &[i64]) -> f64 {
    let mut g = 1.0;
    for (&n, &xi) in nu.iter().zip(x) {
        if n <= 0 {
            continue;
        }
        if xi < n {
            return 0.0;
        }
        for m in 0..n {
            g *= (xi - m) as f64;
        }
    }
    g
}

impl ReactionNetwork {
    pub fn new(
        species: Vec<String>,
        reactions: Vec<Reaction>,
        param_dim: usize,
        state_floor: Option<Vec<i64>>,
    ) -> Result<Self> {
        let d = species.len();
        if d == 0 {
            return Err(Error::Config("network needs at least one species".into()));
        }
        if reactions.is_empty() {
            return Err(Error::Config("network needs at least one reaction".into()));
        }
        if param_dim == 0 {
            return Err(Error::Config("network needs at least one parameter".into()));
        }
        if let Some(floor) = &state_floor {
            if floor.len() != d {
                return Err(Error::Config("state floor length differs from species count".into()));
            }
        }
        for (k, r) in reactions.iter().enumerate() {
            let label = format!("reaction {} ({})", k + 1, r.name);
            if r.zeta.len() != d || r.nu.len() != d {
                return Err(Error::Config(format!("{label}: vectors must have length {d}")));
            }
            if r.nu.iter().any(|&n| n < 0) {
                return Err(Error::Config(format!("{label}: negative source coefficient")));
            }
            if r.nu.iter().zip(&r.zeta).any(|(&n, &z)| n + z < 0) {
                return Err(Error::Config(format!("{label}: negative product coefficient")));
            }
            let base = match &r.intensity {
                IntensitySpec::Clipped { base, floor, ceiling } => {
                    if matches!(**base, IntensitySpec::Clipped { .. }) {
                        return Err(Error::Config(format!("{label}: nested clipping")));
                    }
                    if let Some(f) = floor {
                        if !(f.is_finite() && *f > 0.0) {
                            return Err(Error::Config(format!("{label}: floor delta must be positive")));
                        }
                    }
                    if let Some(m) = ceiling {
                        if !(m.is_finite() && *m > 0.0) {
                            return Err(Error::Config(format!("{label}: ceiling must be positive")));
                        }
                        if !matches!(**base, IntensitySpec::MassAction { .. }) {
                            return Err(Error::Config(format!("{label}: ceilings apply to mass-action rates only")));
                        }
                    }
                    base.as_ref()
                }
                other => other,
            };
            match base {
                IntensitySpec::MassAction { rate } => {
                    if *rate >= param_dim {
                        return Err(Error::Config(format!("{label}: unknown parameter index {}", rate + 1)));
                    }
                }
                IntensitySpec::MichaelisMenten { vmax, km, species: s } => {
                    for p in [vmax, km] {
                        if *p >= param_dim {
                            return Err(Error::Config(format!("{label}: unknown parameter index {}", p + 1)));
                        }
                    }
                    if *s >= d {
                        return Err(Error::Config(format!("{label}: unknown species index {}", s + 1)));
                    }
                    if vmax == km {
                        return Err(Error::Config(format!("{label}: vmax and km must be distinct parameters")));
                    }
                }
                IntensitySpec::Clipped { .. } => unreachable!(),
            }
        }
        Ok(Self { species, reactions, param_dim, state_floor })
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn reaction(&self, k: usize) -> &Reaction {
        &self.reactions[k]
    }

    pub fn state_floor(&self) -> Option<&[i64]> {
        self.state_floor.as_deref()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    /// Copy with a different state floor.
    pub fn with_state_floor(&self, state_floor: Option<Vec<i64>>) -> Result<Self> {
        Self::new(self.species.clone(), self.reactions.clone(), self.param_dim, state_floor)
    }

    /// Validates a parameter vector for this network.
    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim {
            return Err(Error::Config(format!(
                "parameter vector has length {}, network expects {}",
                theta.len(),
                self.param_dim
            )));
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Argument(format!(
                "parameter {} must be finite and non-negative, got {}",
                i + 1,
                theta[i]
            )));
        }
        Ok(())
    }

    pub fn check_state(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.num_species() {
            return Err(Error::Config(format!(
                "state has length {}, network has {} species",
                x.len(),
                self.num_species()
            )));
        }
        Ok(())
    }

    fn outside_domain(&self, x: &[i64]) -> bool {
        match &self.state_floor {
            Some(floor) => x.iter().zip(floor).any(|(a, b)| a < b),
            None => false,
        }
    }

    /// Intensity of reaction `k` and, when `grad` is given, its gradient in
    /// theta (overwritten, length R). Unchecked: theta and x must already be
    /// validated.
    pub fn eval(&self, k: usize, theta: &[f64], x: &[i64], grad: Option<&mut [f64]>) -> f64 {
        self.eval_branch(k, theta, x, grad).0
    }

    /// As [`eval`](Self::eval), also reporting the clipping branch used.
    pub fn eval_branch(&self, k: usize, theta: &[f64], x: &[i64], mut grad: Option<&mut [f64]>) -> (f64, Branch) {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        if self.outside_domain(x) {
            return (0.0, Branch::Natural);
        }
        let r = &self.reactions[k];
        match &r.intensity {
            IntensitySpec::Clipped { base, floor, ceiling } => {
                let unmet = r.sources_unmet(x);
                if unmet {
                    return match floor {
                        Some(delta) => (floor_value(base, *delta, theta, grad), Branch::Floor),
                        None => (0.0, Branch::Natural),
                    };
                }
                let lam = base_value(base, &r.nu, theta, x, grad.as_deref_mut());
                if let (Some(m), IntensitySpec::MassAction { rate }) = (ceiling, base.as_ref()) {
                    let cap = theta[*rate] * m;
                    if lam >= cap {
                        if let Some(g) = grad {
                            g.fill(0.0);
                            g[*rate] = *m;
                        }
                        return (cap, Branch::Ceiling);
                    }
                }
                (lam, Branch::Natural)
            }
            base => {
                if r.sources_unmet(x) {
                    return (0.0, Branch::Natural);
                }
                (base_value(base, &r.nu, theta, x, grad), Branch::Natural)
            }
        }
    }

    /// All K intensities, and optionally the K×R row-major gradient matrix.
    pub fn eval_all(&self, theta: &[f64], x: &[i64], rates: &mut [f64], grads: Option<&mut [f64]>) {
        let r = self.param_dim;
        match grads {
            Some(g) => {
                for (k, (rate, row)) in rates.iter_mut().zip(g.chunks_exact_mut(r)).enumerate() {
                    *rate = self.eval(k, theta, x, Some(row));
                }
            }
            None => {
                for (k, rate) in rates.iter_mut().enumerate() {
                    *rate = self.eval(k, theta, x, None);
                }
            }
        }
    }

    /// True when some reaction uses its floor or ceiling at `x`.
    pub fn any_clipping(&self, theta: &[f64], x: &[i64]) -> bool {
        (0..self.num_reactions()).any(|k| self.eval_branch(k, theta, x, None).1 != Branch::Natural)
    }
}

fn base_value(spec: &IntensitySpec, nu: &[i64], theta: &[f64], x: &[i64], grad: Option<&mut [f64]>) -> f64 {
    match spec {
        IntensitySpec::MassAction { rate } => {
            let g = falling_product(nu, x);
            if let Some(gr) = grad {
                gr[*rate] = g;
            }
            theta[*rate] * g
        }
        IntensitySpec::MichaelisMenten { vmax, km, species } => {
            let s = x[*species] as f64;
            if s <= 0.0 {
                return 0.0;
            }
            let denom = theta[*km] + s;
            if let Some(gr) = grad {
                gr[*vmax] = s / denom;
                gr[*km] = -theta[*vmax] * s / (denom * denom);
            }
            theta[*vmax] * s / denom
        }
        IntensitySpec::Clipped { .. } => unreachable!("nested clipping is rejected at construction"),
    }
}

fn floor_value(spec: &IntensitySpec, delta: f64, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
    match spec {
        IntensitySpec::MassAction { rate } => {
            if let Some(gr) = grad {
                gr[*rate] = delta;
            }
            theta[*rate] * delta
        }
        IntensitySpec::MichaelisMenten { vmax, km, .. } => {
            let denom = theta[*km] + delta;
            if let Some(gr) = grad {
                gr[*vmax] = delta / denom;
                gr[*km] = -theta[*vmax] * delta / (denom * denom);
            }
            theta[*vmax] * delta / denom
        }
        IntensitySpec::Clipped { .. } => unreachable!("nested clipping is rejected at construction"),
    }
}

fn check_reaction(net: &ReactionNetwork, k: usize) -> Result<()> {
    if k >= net.num_reactions() {
        return Err(Error::Argument(format!("reaction index {} out of range 1..={}", k + 1, net.num_reactions())));
    }
    Ok(())
}

/// Checked evaluation of `lambda_k(theta, x)`.
pub fn intensity_eval(net: &ReactionNetwork, theta: &[f64], x: &[i64], k: usize) -> Result<f64> {
    net.check_theta(theta)?;
    net.check_state(x)?;
    check_reaction(net, k)?;
    Ok(net.eval(k, theta, x, None))
}

/// Checked evaluation of `d lambda_k / d theta_i` on the branch chosen by
/// [`intensity_eval`].
pub fn intensity_grad(net: &ReactionNetwork, theta: &[f64], x: &[i64], k: usize, i: usize) -> Result<f64> {
    net.check_theta(theta)?;
    net.check_state(x)?;
    check_reaction(net, k)?;
    if i >= net.param_dim() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    let mut g = vec![0.0; net.param_dim()];
    net.eval(k, theta, x, Some(&mut g));
    Ok(g[i])
}

#[cfg(test)]
pub(crate) mod testnets {
    use super::*;

    pub fn species(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn birth_death() -> ReactionNetwork {
        ReactionNetwork::new(
            species(&["A"]),
            vec![
                Reaction::new("birth", vec![0], vec![1], IntensitySpec::MassAction { rate: 0 }),
                Reaction::new("death", vec![1], vec![0], IntensitySpec::MassAction { rate: 1 }),
            ],
            2,
            Some(vec![0]),
        )
        .unwrap()
    }

    pub fn switch() -> ReactionNetwork {
        ReactionNetwork::new(
            species(&["A", "B", "C"]),
            vec![
                Reaction::new("A->0", vec![1, 0, 0], vec![0, 0, 0], IntensitySpec::MassAction { rate: 0 }),
                Reaction::new("A->B", vec![1, 0, 0], vec![0, 1, 0], IntensitySpec::MassAction { rate: 1 }),
                Reaction::new("B->C", vec![0, 1, 0], vec![0, 0, 1], IntensitySpec::MassAction { rate: 2 }),
            ],
            3,
            Some(vec![0, 0, 0]),
        )
        .unwrap()
    }

    pub fn mm_switch() -> ReactionNetwork {
        ReactionNetwork::new(
            species(&["S", "P", "Pt"]),
            vec![
                Reaction::new("S->0", vec![1, 0, 0], vec![0, 0, 0], IntensitySpec::MassAction { rate: 0 }),
                Reaction::new(
                    "S->P",
                    vec![1, 0, 0],
                    vec![0, 1, 0],
                    IntensitySpec::MichaelisMenten { vmax: 1, km: 3, species: 0 },
                ),
                Reaction::new("P->Pt", vec![0, 1, 0], vec![0, 0, 1], IntensitySpec::MassAction { rate: 2 }),
            ],
            4,
            Some(vec![0, 0, 0]),
        )
        .unwrap()
    }

    pub fn dimerization() -> ReactionNetwork {
        let ma = |rate| IntensitySpec::MassAction { rate };
        ReactionNetwork::new(
            species(&["M", "P", "D"]),
            vec![
                Reaction::new("0->M", vec![0, 0, 0], vec![1, 0, 0], ma(0)),
                Reaction::new("M->M+P", vec![1, 0, 0], vec![1, 1, 0], ma(1)),
                Reaction::new("P+P->D", vec![0, 2, 0], vec![0, 0, 1], ma(2)),
                Reaction::new("M->0", vec![1, 0, 0], vec![0, 0, 0], ma(3)),
                Reaction::new("P->0", vec![0, 1, 0], vec![0, 0, 0], ma(4)),
                Reaction::new("D->0", vec![0, 0, 1], vec![0, 0, 0], ma(5)),
            ],
            6,
            Some(vec![0, 0, 0]),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testnets::*;
    use super::*;
    use ::approx::assert_relative_eq;
    use proptest::prelude::*;

    fn single(nu: Vec<i64>, nu_prime: Vec<i64>, spec: IntensitySpec, floor: Option<Vec<i64>>) -> ReactionNetwork {
        let d = nu.len();
        let names = (0..d).map(|i| format!("S{i}")).collect();
        ReactionNetwork::new(names, vec![Reaction::new("r", nu, nu_prime, spec)], 4, floor).unwrap()
    }

    #[test]
    fn linear_mass_action() {
        let net = single(vec![1], vec![0], IntensitySpec::MassAction { rate: 0 }, Some(vec![0]));
        assert_eq!(intensity_eval(&net, &[0.5, 0.0, 0.0, 0.0], &[10], 0).unwrap(), 5.0);
        assert_eq!(intensity_grad(&net, &[0.5, 0.0, 0.0, 0.0], &[10], 0, 0).unwrap(), 10.0);
        assert_eq!(intensity_grad(&net, &[0.5, 0.0, 0.0, 0.0], &[10], 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn dimerization_rate_uses_falling_factorial() {
        let net = dimerization();
        let theta = [200.0, 100.0, 0.1, 25.0, 1.0, 1.0];
        assert_relative_eq!(intensity_eval(&net, &theta, &[0, 5, 0], 2).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(intensity_eval(&net, &theta, &[0, 1, 0], 2).unwrap(), 0.0);
    }

    #[test]
    fn zero_outside_orthant() {
        let net = single(vec![1, 0], vec![0, 1], IntensitySpec::MassAction { rate: 0 }, Some(vec![0, 0]));
        assert_eq!(intensity_eval(&net, &[1.0; 4], &[-1, 0], 0).unwrap(), 0.0);
        // also for coordinates that are not sources
        assert_eq!(intensity_eval(&net, &[1.0; 4], &[3, -2], 0).unwrap(), 0.0);
    }

    #[test]
    fn floor_branch_below_source_requirement() {
        let spec = IntensitySpec::Clipped {
            base: Box::new(IntensitySpec::MassAction { rate: 0 }),
            floor: Some(1.0),
            ceiling: Some(1e6),
        };
        let net = single(vec![1, 0], vec![0, 1], spec, None);
        let theta = [0.7, 0.0, 0.0, 0.0];
        assert_relative_eq!(intensity_eval(&net, &theta, &[-1, 0], 0).unwrap(), 0.7);
        assert_eq!(intensity_grad(&net, &theta, &[-1, 0], 0, 0).unwrap(), 1.0);
        assert_relative_eq!(intensity_eval(&net, &theta, &[3, 0], 0).unwrap(), 2.1, epsilon = 1e-12);
    }

    #[test]
    fn ceiling_branch_and_tie() {
        let spec = IntensitySpec::Clipped {
            base: Box::new(IntensitySpec::MassAction { rate: 0 }),
            floor: Some(1.0),
            ceiling: Some(10.0),
        };
        let net = single(vec![1], vec![2], spec, None);
        let theta = [2.0, 0.0, 0.0, 0.0];
        assert_eq!(net.eval_branch(0, &theta, &[10], None), (20.0, Branch::Ceiling));
        assert_eq!(net.eval_branch(0, &theta, &[9], None), (18.0, Branch::Natural));
        assert_eq!(intensity_grad(&net, &theta, &[50], 0, 0).unwrap(), 10.0);
        let big = IntensitySpec::Clipped {
            base: Box::new(IntensitySpec::MassAction { rate: 0 }),
            floor: Some(1.0),
            ceiling: Some(1e6),
        };
        let net = single(vec![1], vec![2], big, None);
        assert_eq!(intensity_grad(&net, &theta, &[2_000_000], 0, 0).unwrap(), 1e6);
    }

    #[test]
    fn michaelis_menten_and_its_floor() {
        let net = mm_switch();
        let theta = [0.05, 1.0, 1.0, 11.0];
        assert_relative_eq!(net.eval(1, &theta, &[10, 0, 0], None), 10.0 / 21.0);
        assert_eq!(net.eval(1, &theta, &[0, 0, 0], None), 0.0);
        let spec = IntensitySpec::Clipped {
            base: Box::new(IntensitySpec::MichaelisMenten { vmax: 1, km: 3, species: 0 }),
            floor: Some(1.0),
            ceiling: None,
        };
        let z = single(vec![1, 0], vec![0, 1], spec, None);
        let mut g = vec![0.0; 4];
        let v = z.eval(0, &theta, &[-2, 0], Some(&mut g));
        assert_relative_eq!(v, 1.0 / 12.0);
        assert_relative_eq!(g[1], 1.0 / 12.0);
        assert_relative_eq!(g[3], -1.0 / 144.0);
    }

    #[test]
    fn rejects_bad_networks() {
        let s = species(&["A"]);
        let bad_param = ReactionNetwork::new(
            s.clone(),
            vec![Reaction::new("r", vec![1], vec![0], IntensitySpec::MassAction { rate: 3 })],
            2,
            None,
        );
        assert!(matches!(bad_param, Err(Error::Config(_))));
        let nested = ReactionNetwork::new(
            s.clone(),
            vec![Reaction::new(
                "r",
                vec![1],
                vec![0],
                IntensitySpec::Clipped {
                    base: Box::new(IntensitySpec::Clipped {
                        base: Box::new(IntensitySpec::MassAction { rate: 0 }),
                        floor: None,
                        ceiling: None,
                    }),
                    floor: None,
                    ceiling: None,
                },
            )],
            1,
            None,
        );
        assert!(nested.is_err());
        assert!(ReactionNetwork::new(s, vec![], 1, None).is_err());
        let net = birth_death();
        assert!(matches!(intensity_eval(&net, &[1.0], &[0], 0), Err(Error::Config(_))));
        assert!(intensity_grad(&net, &[1.0, 1.0], &[0], 0, 5).is_err());
    }

    fn fd_check(net: &ReactionNetwork, theta: &[f64], x: &[i64]) {
        let mut g = vec![0.0; net.param_dim()];
        for k in 0..net.num_reactions() {
            let (_, branch) = net.eval_branch(k, theta, x, Some(&mut g));
            for i in 0..net.param_dim() {
                let h = 1e-6 * theta[i].abs().max(1e-3);
                let mut tp = theta.to_vec();
                let mut tm = theta.to_vec();
                tp[i] += h;
                tm[i] -= h;
                let (vp, bp) = net.eval_branch(k, &tp, x, None);
                let (vm, bm) = net.eval_branch(k, &tm, x, None);
                if bp != branch || bm != branch {
                    continue;
                }
                let fd = (vp - vm) / (2.0 * h);
                let scale = g[i].abs().max(1e-8);
                assert!((fd - g[i]).abs() <= 1e-6 * scale + 1e-9, "k={k} i={i} x={x:?}: fd {fd} vs {}", g[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(
            x in proptest::collection::vec(-3i64..40, 3),
            t in proptest::collection::vec(0.05f64..20.0, 6),
        ) {
            fd_check(&dimerization(), &t, &x);
            let z = build_approx_process(&dimerization(), &ApproxOptions::new(6).with_exempt(&[3, 5])).unwrap();
            fd_check(&z, &t, &x);
            fd_check(&mm_switch(), &t[..4], &x);
            let zmm = build_approx_process(&mm_switch(), &ApproxOptions::new(3).with_exempt(&[2])).unwrap();
            fd_check(&zmm, &t[..4], &x);
        }

        #[test]
        fn mass_action_vanishes_when_sources_are_missing(
            x in proptest::collection::vec(-3i64..4, 3),
            t in proptest::collection::vec(0.05f64..20.0, 6),
        ) {
            let net = dimerization();
            for (k, r) in net.reactions().iter().enumerate() {
                let shifted: Vec<i64> = x.iter().zip(&r.nu).map(|(a, b)| a - b).collect();
                if shifted.iter().any(|&v| v < 0) || x.iter().any(|&v| v < 0) {
                    prop_assert_eq!(net.eval(k, &t, &x, None), 0.0);
                }
            }
        }
    }
}
