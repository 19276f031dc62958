//! Adaptive Dormand–Prince 5(4) integration of autonomous systems.

use crate::error::{Error, Result};

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, max_steps: 10_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: u64,
    pub rejected: u64,
}

/// Integrates `y' = f(y)` from `y` over `[0, t_end]` in place. `rate_bound`
/// is a rough bound on the largest eigenvalue magnitude, used for the first
/// step size only.
pub fn integrate<F>(mut f: F, y: &mut [f64], t_end: f64, rate_bound: f64, opts: &OdeOptions) -> Result<OdeStats>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y.len();
    let mut stats = OdeStats { accepted: 0, rejected: 0 };
    if t_end <= 0.0 || n == 0 {
        return Ok(stats);
    }
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut t = 0.0;
    let mut h = (0.01 / rate_bound.max(1e-12)).min(t_end).max(t_end * 1e-12);
    f(y, &mut k[0]);
    let mut prev_err = 1e-4f64;
    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Invariant(format!("ODE solver exceeded {} steps at t = {t}", opts.max_steps)));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, a) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * k[j][i];
                }
                tmp[i] = y[i] + h * acc;
            }
            f(&tmp, &mut k[s + 1]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, bj) in B.iter().enumerate() {
                acc += bj * k[j][i];
            }
            y5[i] = y[i] + h * acc;
        }
        f(&y5, &mut k[6]);
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for (j, ej) in E.iter().enumerate() {
                e += ej * k[j][i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let r = h * e / sc;
            err += r * r;
        }
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            stats.accepted += 1;
            // PI step control
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            prev_err = err.max(1e-4);
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() { 0.9 * err.powf(-0.2) } else { 0.1 };
            h *= fac.clamp(0.1, 0.9);
        }
        if h < t_end * 1e-15 {
            return Err(Error::Invariant(format!("ODE step size underflow at t = {t}")));
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut y = vec![1.0, 2.0];
        integrate(
            |y, dy| {
                dy[0] = -y[0];
                dy[1] = -3.0 * y[1];
            },
            &mut y,
            2.0,
            3.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
        assert!((y[1] - 2.0 * (-6.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_conserves_phase() {
        let mut y = vec![1.0, 0.0];
        integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &mut y,
            std::f64::consts::PI,
            1.0,
            &OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() },
        )
        .unwrap();
        assert!((y[0] + 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
    }

    #[test]
    fn zero_time_is_identity() {
        let mut y = vec![3.0];
        let s = integrate(|_, dy| dy[0] = 1.0, &mut y, 0.0, 1.0, &OdeOptions::default()).unwrap();
        assert_eq!(y, vec![3.0]);
        assert_eq!(s.accepted, 0);
    }
}
