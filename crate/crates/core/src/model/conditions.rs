//! Finite-region evidence for the regularity conditions of a network.
//!
//! None of these conditions can be decided over an infinite lattice; the
//! checker scans a box of states and reports what it saw.

use super::ReactionNetwork;
use crate::error::{Error, Result};

/// Inclusive box of lattice states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl ScanBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Argument("scan box bounds must have equal, non-zero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Argument("scan box is empty".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Row-major index of `x`, last coordinate fastest.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for ((v, a), b) in x.iter().zip(&self.lo).zip(&self.hi) {
            idx = idx * (b - a + 1) as usize + (v - a) as usize;
        }
        Some(idx)
    }

    /// Visits every state in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        let mut x = self.lo.clone();
        loop {
            f(&x);
            let mut i = x.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if x[i] < self.hi[i] {
                    x[i] += 1;
                    break;
                }
                x[i] = self.lo[i];
            }
        }
    }
}

/// State `x` where a firing of `interrupter` switches `interrupted` off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub state: Vec<i64>,
    pub interrupter: usize,
    pub interrupted: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub non_interruptive: bool,
    /// Up to [`ConditionReport::MAX_RECORDED`] violations, in scan order.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    /// Reactions that increase the total population.
    pub growing: Vec<usize>,
    /// All other reactions.
    pub non_growing: Vec<usize>,
    /// Largest intensity seen.
    pub gamma_max: f64,
    /// Largest reciprocal of a non-zero intensity seen.
    pub gamma_min_inv: f64,
    /// Largest absolute parameter derivative seen.
    pub gamma_grad: f64,
    /// Equal rates have equal gradients, between this network and the
    /// reference network when one was given.
    pub kink_compatible: bool,
}

impl ConditionReport {
    pub const MAX_RECORDED: usize = 1000;
}

/// Scans `region` for interruptions and rate bounds. With `reference`, also
/// checks that whenever a reference rate equals a rate of `net` (at any two
/// scanned states) their parameter gradients agree, which is what keeps the
/// split-coupling rates differentiable.
pub fn check_non_interruptive(
    net: &ReactionNetwork,
    theta: &[f64],
    region: &ScanBox,
    reference: Option<&ReactionNetwork>,
) -> Result<ConditionReport> {
    net.check_theta(theta)?;
    if region.dim() != net.num_species() {
        return Err(Error::Argument("scan box dimension differs from species count".into()));
    }
    if region.is_empty() {
        return Err(Error::Argument("scan box is empty".into()));
    }
    if let Some(r) = reference {
        if r.num_species() != net.num_species() || r.num_reactions() != net.num_reactions() {
            return Err(Error::Argument("reference network has a different shape".into()));
        }
        r.check_theta(theta)?;
    }
    let k_count = net.num_reactions();
    let r_dim = net.param_dim();

    let (growing, non_growing): (Vec<usize>, Vec<usize>) =
        (0..k_count).partition(|&k| net.reaction(k).zeta.iter().sum::<i64>() > 0);

    let mut violations = Vec::new();
    let mut violation_count = 0usize;
    let mut gamma_max = 0.0f64;
    let mut gamma_min_inv = 0.0f64;
    let mut gamma_grad = 0.0f64;
    let mut rates = vec![0.0; k_count];
    let mut grads = vec![0.0; k_count * r_dim];
    let mut next = vec![0i64; net.num_species()];
    // per reaction: (rate, gradient) samples from both networks
    let mut samples: Vec<Vec<(f64, Vec<f64>, bool)>> = vec![Vec::new(); k_count];

    region.for_each(|x| {
        net.eval_all(theta, x, &mut rates, Some(&mut grads));
        for k in 0..k_count {
            let lam = rates[k];
            gamma_max = gamma_max.max(lam);
            if lam > 0.0 {
                gamma_min_inv = gamma_min_inv.max(1.0 / lam);
            }
            for g in &grads[k * r_dim..(k + 1) * r_dim] {
                gamma_grad = gamma_grad.max(g.abs());
            }
        }
        for k in 0..k_count {
            if rates[k] <= 0.0 {
                continue;
            }
            for (n, (xi, z)) in next.iter_mut().zip(x.iter().zip(&net.reaction(k).zeta)) {
                *n = xi + z;
            }
            for (l, &rl) in rates.iter().enumerate() {
                if l == k || rl <= 0.0 {
                    continue;
                }
                if net.eval(l, theta, &next, None) <= 0.0 {
                    violation_count += 1;
                    if violations.len() < ConditionReport::MAX_RECORDED {
                        violations.push(Violation { state: x.to_vec(), interrupter: k, interrupted: l });
                    }
                }
            }
        }
        if let Some(r) = reference {
            let mut g = vec![0.0; r_dim];
            for k in 0..k_count {
                samples[k].push((rates[k], grads[k * r_dim..(k + 1) * r_dim].to_vec(), false));
                let v = r.eval(k, theta, x, Some(&mut g));
                samples[k].push((v, g.clone(), true));
            }
        }
    });

    let kink_compatible = reference.is_none() || samples.into_iter().all(equal_rates_share_gradients);

    Ok(ConditionReport {
        non_interruptive: violation_count == 0,
        violations,
        violation_count,
        growing,
        non_growing,
        gamma_max,
        gamma_min_inv,
        gamma_grad,
        kink_compatible,
    })
}

/// Groups samples with equal rates (to rounding) and checks that every
/// cross-network pair within a group has matching gradients.
fn equal_rates_share_gradients(mut samples: Vec<(f64, Vec<f64>, bool)>) -> bool {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let mut start = 0;
    while start < samples.len() {
        let mut end = start + 1;
        while end < samples.len() && close(samples[end].0, samples[start].0) {
            end += 1;
        }
        let group = &samples[start..end];
        // zero rates never enter a minimum that is differentiated
        if samples[start].0 > 0.0 {
            for a in group.iter().filter(|s| !s.2) {
                for b in group.iter().filter(|s| s.2) {
                    let same = a.1.iter().zip(&b.1).all(|(u, v)| close(*u, *v));
                    if !same {
                        return false;
                    }
                }
            }
        }
        start = end;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::super::testnets::*;
    use super::super::{build_approx_process, ApproxOptions, IntensitySpec, Reaction};
    use super::*;

    #[test]
    fn switch_is_interruptive_at_a_single_molecule() {
        let net = switch();
        let theta = [0.25, 1.0, 1.0];
        let scan = ScanBox::new(vec![0, 0, 0], vec![5, 5, 5]).unwrap();
        let report = check_non_interruptive(&net, &theta, &scan, None).unwrap();
        assert!(!report.non_interruptive);
        let at = |s: &[i64]| {
            report
                .violations
                .iter()
                .filter(|v| v.state == s)
                .map(|v| (v.interrupter, v.interrupted))
                .collect::<Vec<_>>()
        };
        assert_eq!(at(&[1, 0, 0]), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn birth_death_is_non_interruptive() {
        let scan = ScanBox::new(vec![0], vec![300]).unwrap();
        let report = check_non_interruptive(&birth_death(), &[10.0, 0.5], &scan, None).unwrap();
        assert!(report.non_interruptive);
        assert!(report.violations.is_empty());
        assert_eq!(report.growing, vec![0]);
        assert_eq!(report.non_growing, vec![1]);
        assert_eq!(report.gamma_max, 150.0);
        assert_eq!(report.gamma_min_inv, 2.0);
        assert_eq!(report.gamma_grad, 300.0);
    }

    #[test]
    fn approximate_switch_passes_and_is_kink_compatible() {
        let x = switch();
        let z = build_approx_process(&x, &ApproxOptions::new(3).with_exempt(&[2])).unwrap();
        let theta = [0.25, 1.0, 1.0];
        let scan = ScanBox::new(vec![-4, -4, -4], vec![10, 10, 10]).unwrap();
        let report = check_non_interruptive(&z, &theta, &scan, Some(&x)).unwrap();
        assert!(report.non_interruptive);
        assert!(report.kink_compatible);
    }

    #[test]
    fn detects_kink_incompatibility() {
        // Z uses a different parameter for the same reaction: equal rates,
        // different gradients.
        let x = birth_death();
        let z = ReactionNetwork::new(
            species(&["A"]),
            vec![
                Reaction::new("birth", vec![0], vec![1], IntensitySpec::MassAction { rate: 1 }),
                Reaction::new("death", vec![1], vec![0], IntensitySpec::MassAction { rate: 1 }),
            ],
            2,
            None,
        )
        .unwrap();
        let scan = ScanBox::new(vec![0], vec![30]).unwrap();
        let report = check_non_interruptive(&z, &[1.0, 1.0], &scan, Some(&x)).unwrap();
        assert!(!report.kink_compatible);
    }

    #[test]
    fn rejects_bad_regions() {
        assert!(ScanBox::new(vec![2], vec![1]).is_err());
        let scan = ScanBox::new(vec![0, 0], vec![1, 1]).unwrap();
        assert!(check_non_interruptive(&birth_death(), &[1.0, 1.0], &scan, None).is_err());
    }

    #[test]
    fn box_iteration_and_indexing_agree() {
        let b = ScanBox::new(vec![-1, 0, 2], vec![1, 2, 3]).unwrap();
        let mut seen = 0;
        b.for_each(|x| {
            assert_eq!(b.index_of(x), Some(seen));
            seen += 1;
        });
        assert_eq!(seen, b.len());
        assert_eq!(b.index_of(&[2, 0, 2]), None);
    }
}
