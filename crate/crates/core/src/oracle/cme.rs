//! Chemical master equation on a truncated state box.
//!
//! States with any tracked coordinate above the box are merged into one
//! absorbing leak state. Species listed as untracked are left out of the
//! box; they must enter intensities only through first-order decay
//! reactions that touch no other species, so their means follow a linear
//! ODE driven by the tracked distribution.

use super::ode::{integrate, OdeOptions};
use crate::error::{Error, Result};
use crate::model::{IntensitySpec, Reaction, ReactionNetwork, ScanBox};
use crate::sim::Observable;

/// Upper corner of the truncation box and the species kept out of it.
#[derive(Clone, Debug, PartialEq)]
pub struct CmeBox {
    /// Per-species upper bounds; entries of untracked species are ignored.
    pub upper: Vec<i64>,
    pub untracked: Vec<usize>,
}

impl CmeBox {
    pub fn new(upper: Vec<i64>) -> Self {
        Self { upper, untracked: Vec::new() }
    }

    pub fn with_untracked(mut self, untracked: Vec<usize>) -> Self {
        self.untracked = untracked;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmeOptions {
    pub ode: OdeOptions,
    /// Largest acceptable leaked probability.
    pub leak_tol: f64,
}

impl Default for CmeOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), leak_tol: 1e-4 }
    }
}

/// Distribution at time `t` restricted to the box.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedDistribution {
    pub t: f64,
    /// Box over the tracked species, in their original order.
    pub scan: ScanBox,
    pub tracked: Vec<usize>,
    pub probs: Vec<f64>,
    pub leaked: f64,
    pub untracked: Vec<usize>,
    pub untracked_means: Vec<f64>,
    num_species: usize,
}

impl TruncatedDistribution {
    /// Probability of a full state; untracked coordinates are ignored.
    pub fn prob(&self, x: &[i64]) -> f64 {
        let sub: Vec<i64> = self.tracked.iter().map(|&j| x[j]).collect();
        self.scan.index_of(&sub).map_or(0.0, |i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self, species: usize) -> f64 {
        if let Some(u) = self.untracked.iter().position(|&s| s == species) {
            return self.untracked_means[u];
        }
        let pos = self.tracked.iter().position(|&s| s == species).expect("species index in range");
        let mut acc = 0.0;
        let mut idx = 0;
        self.scan.for_each(|x| {
            acc += self.probs[idx] * x[pos] as f64;
            idx += 1;
        });
        acc
    }

    /// `E[f(X(t))]` over the box. Untracked species may appear only in
    /// linear observables.
    pub fn expectation(&self, f: &Observable) -> Result<f64> {
        match f {
            Observable::Constant(c) => Ok(*c),
            Observable::Species(j) => {
                if *j >= self.num_species {
                    return Err(Error::Argument(format!("no species {}", j + 1)));
                }
                Ok(self.mean(*j))
            }
            Observable::Linear(c) => {
                if c.len() != self.num_species {
                    return Err(Error::Argument("linear observable has the wrong length".into()));
                }
                Ok(c.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, a)| a * self.mean(j)).sum())
            }
            Observable::Custom(g) => {
                if !self.untracked.is_empty() {
                    return Err(Error::Argument("custom observables need every species tracked".into()));
                }
                let mut acc = 0.0;
                let mut idx = 0;
                let mut full = vec![0i64; self.num_species];
                self.scan.for_each(|x| {
                    for (p, &j) in self.tracked.iter().enumerate() {
                        full[j] = x[p];
                    }
                    acc += self.probs[idx] * g(&full);
                    idx += 1;
                });
                Ok(acc)
            }
        }
    }
}

const LEAK: u32 = u32::MAX;

/// Transition structure shared by all parameter values.
struct Layout {
    tracked: Vec<usize>,
    scan: ScanBox,
    /// Reactions with a tracked-state intensity: index and per-state target.
    moves: Vec<(usize, Vec<u32>)>,
    /// First-order decays of untracked species: (reaction, untracked slot, rate param).
    decays: Vec<(usize, usize, usize)>,
    untracked: Vec<usize>,
    x0_index: usize,
    x0_untracked: Vec<f64>,
}

fn reads_species(spec: &IntensitySpec, s: usize) -> bool {
    match spec {
        IntensitySpec::MichaelisMenten { species, .. } => *species == s,
        IntensitySpec::Clipped { base, .. } => reads_species(base, s),
        IntensitySpec::MassAction { .. } => false,
    }
}

/// Untracked slot and rate parameter of a plain first-order decay `S -> ...`
/// that leaves the tracked species alone.
fn decay_slot(r: &Reaction, untracked: &[usize], tracked: &[usize]) -> Option<(usize, usize)> {
    let IntensitySpec::MassAction { rate } = r.intensity else { return None };
    let reactants: Vec<usize> = (0..r.nu.len()).filter(|&j| r.nu[j] > 0).collect();
    let &[s] = reactants.as_slice() else { return None };
    let slot = untracked.iter().position(|&u| u == s)?;
    let clean =
        r.nu[s] == 1 && tracked.iter().all(|&j| r.zeta[j] == 0) && untracked.iter().all(|&u| u == s || r.zeta[u] == 0);
    clean.then_some((slot, rate))
}

fn layout(net: &ReactionNetwork, x0: &[i64], bx: &CmeBox) -> Result<Layout> {
    let d = net.num_species();
    if bx.upper.len() != d {
        return Err(Error::Argument(format!("box has {} bounds, network has {d} species", bx.upper.len())));
    }
    net.check_state(x0)?;
    let mut untracked = bx.untracked.clone();
    untracked.sort_unstable();
    untracked.dedup();
    if untracked.iter().any(|&s| s >= d) {
        return Err(Error::Argument("untracked species index out of range".into()));
    }
    let tracked: Vec<usize> = (0..d).filter(|j| !untracked.contains(j)).collect();
    let mut decays = Vec::new();
    let mut moving = Vec::new();
    for (k, r) in net.reactions().iter().enumerate() {
        let reads_untracked = untracked.iter().any(|&s| r.nu[s] > 0 || reads_species(&r.intensity, s));
        if reads_untracked {
            match decay_slot(r, &untracked, &tracked) {
                Some((slot, rate)) => decays.push((k, slot, rate)),
                None => {
                    return Err(Error::Config(format!(
                        "reaction {} ('{}') reads an untracked species in a way the box solver cannot handle",
                        k + 1,
                        r.name
                    )))
                }
            }
        } else {
            moving.push(k);
        }
    }
    let hi: Vec<i64> = tracked.iter().map(|&j| bx.upper[j]).collect();
    let scan = ScanBox::new(vec![0; tracked.len()], hi)?;
    if scan.len() > u32::MAX as usize - 1 {
        return Err(Error::Argument("truncation box is too large".into()));
    }
    let sub0: Vec<i64> = tracked.iter().map(|&j| x0[j]).collect();
    let x0_index = scan
        .index_of(&sub0)
        .ok_or_else(|| Error::Argument(format!("truncation box {:?} does not contain the initial state", bx.upper)))?;
    let mut moves = Vec::with_capacity(moving.len());
    for &k in &moving {
        let zeta = &net.reaction(k).zeta;
        let mut targets = Vec::with_capacity(scan.len());
        let mut y = vec![0i64; tracked.len()];
        scan.for_each(|x| {
            for (p, &j) in tracked.iter().enumerate() {
                y[p] = x[p] + zeta[j];
            }
            targets.push(scan.index_of(&y).map_or(LEAK, |i| i as u32));
        });
        moves.push((k, targets));
    }
    let x0_untracked = untracked.iter().map(|&s| x0[s] as f64).collect();
    Ok(Layout { tracked, scan, moves, decays, untracked, x0_index, x0_untracked })
}

/// Rates of the moving reactions at every box state for one parameter.
fn rate_table(net: &ReactionNetwork, theta: &[f64], lay: &Layout) -> Vec<Vec<f64>> {
    let d = net.num_species();
    lay.moves
        .iter()
        .map(|(k, _)| {
            let mut rates = Vec::with_capacity(lay.scan.len());
            let mut full = vec![0i64; d];
            lay.scan.for_each(|x| {
                for (p, &j) in lay.tracked.iter().enumerate() {
                    full[j] = x[p];
                }
                rates.push(net.eval(*k, theta, &full, None));
            });
            rates
        })
        .collect()
}

/// Solves the truncated master equation for several parameter vectors at
/// once on a common step sequence, so that differences between the
/// solutions are not polluted by different step choices.
pub fn cme_solve_many(
    net: &ReactionNetwork,
    thetas: &[Vec<f64>],
    x0: &[i64],
    t: f64,
    bx: &CmeBox,
    opts: &CmeOptions,
) -> Result<Vec<TruncatedDistribution>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Argument(format!("time must be finite and non-negative, got {t}")));
    }
    for th in thetas {
        net.check_theta(th)?;
    }
    let lay = layout(net, x0, bx)?;
    let n = lay.scan.len();
    let u = lay.untracked.len();
    let block = n + 1 + u;
    let tables: Vec<Vec<Vec<f64>>> = thetas.iter().map(|th| rate_table(net, th, &lay)).collect();
    let decay_rates: Vec<Vec<f64>> =
        thetas.iter().map(|th| lay.decays.iter().map(|&(_, _, p)| th[p]).collect()).collect();
    let zeta_u: Vec<Vec<f64>> = lay
        .moves
        .iter()
        .map(|(k, _)| lay.untracked.iter().map(|&s| net.reaction(*k).zeta[s] as f64).collect())
        .collect();
    let decay_zeta: Vec<f64> =
        lay.decays.iter().map(|&(k, slot, _)| net.reaction(k).zeta[lay.untracked[slot]] as f64).collect();

    let mut rate_bound = 0.0f64;
    for tab in &tables {
        let mut out = vec![0.0; n];
        for rates in tab {
            for (o, r) in out.iter_mut().zip(rates) {
                *o += r;
            }
        }
        rate_bound = rate_bound.max(out.iter().copied().fold(0.0, f64::max));
    }
    for dr in &decay_rates {
        rate_bound = rate_bound.max(dr.iter().copied().fold(0.0, f64::max));
    }

    let mut y = vec![0.0; block * thetas.len()];
    for v in 0..thetas.len() {
        y[v * block + lay.x0_index] = 1.0;
        y[v * block + n + 1..(v + 1) * block].copy_from_slice(&lay.x0_untracked);
    }
    let rhs = |y: &[f64], dy: &mut [f64]| {
        dy.fill(0.0);
        for v in 0..thetas.len() {
            let yb = &y[v * block..(v + 1) * block];
            let db = &mut dy[v * block..(v + 1) * block];
            for (m, (_, targets)) in lay.moves.iter().enumerate() {
                let rates = &tables[v][m];
                let mut total = 0.0;
                for i in 0..n {
                    let flow = rates[i] * yb[i];
                    if flow == 0.0 {
                        continue;
                    }
                    total += flow;
                    db[i] -= flow;
                    let tg = targets[i];
                    if tg == LEAK {
                        db[n] += flow;
                    } else {
                        db[tg as usize] += flow;
                    }
                }
                for (s, z) in zeta_u[m].iter().enumerate() {
                    db[n + 1 + s] += z * total;
                }
            }
            for (q, &(_, slot, _)) in lay.decays.iter().enumerate() {
                db[n + 1 + slot] += decay_zeta[q] * decay_rates[v][q] * yb[n + 1 + slot];
            }
        }
    };
    integrate(rhs, &mut y, t, rate_bound, &opts.ode)?;

    let mut out = Vec::with_capacity(thetas.len());
    for v in 0..thetas.len() {
        let yb = &y[v * block..(v + 1) * block];
        let leaked = yb[n];
        if leaked > opts.leak_tol {
            return Err(Error::Truncation { leaked, tolerance: opts.leak_tol });
        }
        out.push(TruncatedDistribution {
            t,
            scan: lay.scan.clone(),
            tracked: lay.tracked.clone(),
            probs: yb[..n].to_vec(),
            leaked,
            untracked: lay.untracked.clone(),
            untracked_means: yb[n + 1..].to_vec(),
            num_species: net.num_species(),
        });
    }
    Ok(out)
}

/// Solves the truncated master equation from the point mass at `x0`.
pub fn cme_solve(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    t: f64,
    bx: &CmeBox,
    opts: &CmeOptions,
) -> Result<TruncatedDistribution> {
    Ok(cme_solve_many(net, &[theta.to_vec()], x0, t, bx, opts)?.remove(0))
}

/// Central difference of `E[f(X(t))]` in direction `i` from two box
/// solutions. The default step is `1e-5 |theta_i|` (or `1e-5` at zero); a
/// forward difference is used when the backward point would be negative.
#[allow(clippy::too_many_arguments)]
pub fn cme_sensitivity(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[i64],
    i: usize,
    f: &Observable,
    t: f64,
    bx: &CmeBox,
    h: Option<f64>,
    opts: &CmeOptions,
) -> Result<f64> {
    net.check_theta(theta)?;
    if i >= theta.len() {
        return Err(Error::Config(format!("unknown parameter index {}", i + 1)));
    }
    let h = h.unwrap_or(if theta[i] == 0.0 { 1e-5 } else { 1e-5 * theta[i].abs() });
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Argument(format!("difference step must be positive, got {h}")));
    }
    let mut plus = theta.to_vec();
    plus[i] += h;
    let mut minus = theta.to_vec();
    let central = theta[i] - h >= 0.0;
    if central {
        minus[i] -= h;
    }
    let sols = cme_solve_many(net, &[plus, minus], x0, t, bx, opts)?;
    let (a, b) = (sols[0].expectation(f)?, sols[1].expectation(f)?);
    Ok(if central { (a - b) / (2.0 * h) } else { (a - b) / h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testnets::*;

    #[test]
    fn time_zero_is_a_point_mass() {
        let net = switch();
        let p =
            cme_solve(&net, &[0.25, 1.0, 1.0], &[3, 1, 0], 0.0, &CmeBox::new(vec![4, 4, 4]), &CmeOptions::default())
                .unwrap();
        assert_eq!(p.prob(&[3, 1, 0]), 1.0);
        assert_eq!(p.total(), 1.0);
    }

    #[test]
    fn pure_death_is_binomial() {
        let net = ReactionNetwork::new(
            species(&["A"]),
            vec![crate::model::Reaction::new("d", vec![1], vec![0], IntensitySpec::MassAction { rate: 0 })],
            1,
            Some(vec![0]),
        )
        .unwrap();
        let p = cme_solve(&net, &[0.7], &[2], 1.3, &CmeBox::new(vec![2]), &CmeOptions::default()).unwrap();
        let q = (-0.7f64 * 1.3).exp();
        let expect = [(1.0 - q).powi(2), 2.0 * q * (1.0 - q), q * q];
        for (k, e) in expect.iter().enumerate() {
            assert!((p.prob(&[k as i64]) - e).abs() < 1e-9, "{k}");
        }
        assert_eq!(p.leaked, 0.0);
    }

    #[test]
    fn birth_death_mean_and_truncation() {
        let net = birth_death();
        let p = cme_solve(&net, &[10.0, 0.5], &[0], 5.0, &CmeBox::new(vec![80]), &CmeOptions::default()).unwrap();
        let truth = 20.0 * (1.0 - (-2.5f64).exp());
        assert!((p.mean(0) - truth).abs() < 1e-6 * truth);
        assert!((p.total() + p.leaked - 1.0).abs() < 1e-8);
        assert!(p.probs.iter().all(|&v| v >= -1e-12));
        let err = cme_solve(&net, &[10.0, 0.5], &[0], 5.0, &CmeBox::new(vec![20]), &CmeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        assert!(cme_solve(&net, &[10.0, 0.5], &[90], 5.0, &CmeBox::new(vec![80]), &CmeOptions::default()).is_err());
    }

    #[test]
    fn sensitivities() {
        let net = birth_death();
        let bx = CmeBox::new(vec![80]);
        let o = CmeOptions::default();
        let s = cme_sensitivity(&net, &[10.0, 0.5], &[0], 1, &Observable::Species(0), 5.0, &bx, None, &o).unwrap();
        assert!((s + 28.508100).abs() < 1e-3, "{s}");
        let c = cme_sensitivity(&net, &[10.0, 0.5], &[0], 1, &Observable::Constant(1.0), 5.0, &bx, None, &o).unwrap();
        assert_eq!(c, 0.0);
        let sw = switch();
        let s = cme_sensitivity(
            &sw,
            &[0.25, 1.0, 1.0],
            &[10, 0, 0],
            0,
            &Observable::Species(2),
            10.0,
            &CmeBox::new(vec![10; 3]),
            None,
            &o,
        )
        .unwrap();
        assert!((s + 6.3945010).abs() < 1e-4, "{s}");
    }

    #[test]
    fn untracked_species_follow_their_mean() {
        // Dimer count untracked: compare with a run where it is in the box.
        let net = dimerization();
        let theta = [2.0, 3.0, 0.1, 1.0, 1.0, 1.0];
        let o = CmeOptions::default();
        let full = cme_solve(&net, &theta, &[0, 0, 0], 1.0, &CmeBox::new(vec![12, 40, 40]), &o).unwrap();
        let part = cme_solve(&net, &theta, &[0, 0, 0], 1.0, &CmeBox::new(vec![12, 40, 0]).with_untracked(vec![2]), &o)
            .unwrap();
        assert!((full.mean(2) - part.mean(2)).abs() < 1e-7, "{} {}", full.mean(2), part.mean(2));
        assert!((full.mean(1) - part.mean(1)).abs() < 1e-7);
        let bad = CmeBox::new(vec![12, 40, 0]).with_untracked(vec![1]);
        assert!(matches!(cme_solve(&net, &theta, &[0, 0, 0], 1.0, &bad, &o), Err(Error::Config(_))));
    }

    #[test]
    fn tolerance_refinement_is_stable() {
        let net = switch();
        let bx = CmeBox::new(vec![10; 3]);
        let a = cme_solve(&net, &[0.25, 1.0, 1.0], &[10, 0, 0], 2.0, &bx, &CmeOptions::default()).unwrap();
        let fine =
            CmeOptions { ode: OdeOptions { rtol: 5e-9, atol: 5e-13, ..Default::default() }, ..Default::default() };
        let b = cme_solve(&net, &[0.25, 1.0, 1.0], &[10, 0, 0], 2.0, &bx, &fine).unwrap();
        assert!((a.mean(2) - b.mean(2)).abs() < 1e-6 * b.mean(2));
    }
}
