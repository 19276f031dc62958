//! Path functionals: integrals of `F(theta, x)` over a window and terminal
//! values `f(x(T))`.

use std::fmt;
use std::sync::Arc;

use super::{Observer, Step};
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;

pub type CustomFn = Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>;

/// A parameter-free function of the state.
#[derive(Clone)]
pub enum Observable {
    Species(usize),
    Linear(Vec<f64>),
    Constant(f64),
    Custom(CustomFn),
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Species(i) => write!(f, "Species({i})"),
            Observable::Linear(c) => write!(f, "Linear({c:?})"),
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Observable {
    pub fn eval(&self, x: &[i64]) -> f64 {
        match self {
            Observable::Species(i) => x[*i] as f64,
            Observable::Linear(c) => c.iter().zip(x).map(|(a, b)| a * *b as f64).sum(),
            Observable::Constant(c) => *c,
            Observable::Custom(f) => f(x),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        match self {
            Observable::Species(i) if *i >= d => {
                Err(Error::Config(format!("observable refers to species {} of {d}", i + 1)))
            }
            Observable::Linear(c) if c.len() != d => {
                Err(Error::Config(format!("linear observable has {} coefficients, expected {d}", c.len())))
            }
            _ => Ok(()),
        }
    }
}

/// Integrand `F(theta, x)` of an integral functional.
#[derive(Clone, Debug)]
pub enum Integrand {
    /// `scale * f(x)`.
    Observable { f: Observable, scale: f64 },
    /// `sum_k lambda_k(theta, x) (f(x + zeta_k) - f(x))`, the generator of
    /// `network` applied to `f`.
    Generator { network: Arc<ReactionNetwork>, f: Observable },
    /// The intensity of one reaction of `network`.
    Intensity { network: Arc<ReactionNetwork>, reaction: usize },
}

impl Integrand {
    pub fn depends_on_theta(&self) -> bool {
        !matches!(self, Integrand::Observable { .. })
    }

    /// Evaluates `F` at `x` and, when `grad` is given, writes `dF/dtheta`.
    pub fn eval(&self, theta: &[f64], x: &[i64], grad: Option<&mut [f64]>, scratch: &mut Scratch) -> f64 {
        match self {
            Integrand::Observable { f, scale } => {
                if let Some(g) = grad {
                    g.fill(0.0);
                }
                scale * f.eval(x)
            }
            Integrand::Generator { network, f } => {
                let fx = f.eval(x);
                let mut total = 0.0;
                let mut grad = grad;
                if let Some(g) = grad.as_deref_mut() {
                    g.fill(0.0);
                }
                scratch.ensure(x.len(), network.param_dim());
                for (k, r) in network.reactions().iter().enumerate() {
                    let want = grad.is_some();
                    let lam = network.eval(k, theta, x, if want { Some(&mut scratch.grad[..]) } else { None });
                    if lam == 0.0 && !want {
                        continue;
                    }
                    for ((n, xi), z) in scratch.state.iter_mut().zip(x).zip(&r.zeta) {
                        *n = xi + z;
                    }
                    let diff = f.eval(&scratch.state) - fx;
                    if diff == 0.0 {
                        continue;
                    }
                    total += lam * diff;
                    if let Some(g) = grad.as_deref_mut() {
                        for (gi, si) in g.iter_mut().zip(&scratch.grad) {
                            *gi += si * diff;
                        }
                    }
                }
                total
            }
            Integrand::Intensity { network, reaction } => network.eval(*reaction, theta, x, grad),
        }
    }

    fn check(&self, d: usize, r: usize) -> Result<()> {
        match self {
            Integrand::Observable { f, .. } => f.check(d),
            Integrand::Generator { network, f } => {
                check_network(network, d, r)?;
                f.check(d)
            }
            Integrand::Intensity { network, reaction } => {
                check_network(network, d, r)?;
                if *reaction >= network.num_reactions() {
                    return Err(Error::Config(format!("integrand refers to reaction {}", reaction + 1)));
                }
                Ok(())
            }
        }
    }
}

fn check_network(net: &ReactionNetwork, d: usize, r: usize) -> Result<()> {
    if net.num_species() != d || net.param_dim() != r {
        return Err(Error::Config("integrand network does not match the simulated network".into()));
    }
    Ok(())
}

/// Reusable buffers for integrand evaluation.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    state: Vec<i64>,
    grad: Vec<f64>,
}

impl Scratch {
    fn ensure(&mut self, d: usize, r: usize) {
        self.state.resize(d, 0);
        self.grad.resize(r, 0.0);
    }
}

#[derive(Clone, Debug)]
pub enum Functional {
    /// `offset(x(0)) + int_a^b F(theta, x(s)) ds`.
    Integral { integrand: Integrand, a: f64, b: f64, offset: Option<Observable> },
    /// `f(x(t))`.
    Terminal { f: Observable, t: f64 },
}

impl Functional {
    pub fn integral(integrand: Integrand, a: f64, b: f64) -> Result<Self> {
        let f = Functional::Integral { integrand, a, b, offset: None };
        f.check_window()?;
        Ok(f)
    }

    pub fn terminal(f: Observable, t: f64) -> Result<Self> {
        let f = Functional::Terminal { f, t };
        f.check_window()?;
        Ok(f)
    }

    fn check_window(&self) -> Result<()> {
        match self {
            Functional::Integral { a, b, .. } => {
                if !(a.is_finite() && b.is_finite() && 0.0 <= *a && a <= b) {
                    return Err(Error::Argument(format!("integration window [{a}, {b}] must satisfy 0 <= a <= b")));
                }
            }
            Functional::Terminal { t, .. } => {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(Error::Argument(format!("terminal time {t} must be finite and non-negative")));
                }
            }
        }
        Ok(())
    }

    /// Validates the functional against a network shape.
    pub fn check(&self, d: usize, r: usize) -> Result<()> {
        self.check_window()?;
        match self {
            Functional::Integral { integrand, offset, .. } => {
                integrand.check(d, r)?;
                if let Some(o) = offset {
                    o.check(d)?;
                }
                Ok(())
            }
            Functional::Terminal { f, .. } => f.check(d),
        }
    }

    /// Simulation horizon needed to evaluate the functional.
    pub fn horizon(&self) -> f64 {
        match self {
            Functional::Integral { b, .. } => *b,
            Functional::Terminal { t, .. } => *t,
        }
    }

    pub fn depends_on_theta(&self) -> bool {
        match self {
            Functional::Integral { integrand, .. } => integrand.depends_on_theta(),
            Functional::Terminal { .. } => false,
        }
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Functional::Integral { .. })
    }

    /// Window `[a, b]`, or `[t, t]` for terminal functionals.
    pub fn window(&self) -> (f64, f64) {
        match self {
            Functional::Integral { a, b, .. } => (*a, *b),
            Functional::Terminal { t, .. } => (*t, *t),
        }
    }
}

/// Generator smoothing of `f(x(t))`: the integrand is the generator of
/// `network` applied to `f` on `[0, t]`, and `f(x(0))` is added back.
pub fn make_gs_functional(network: Arc<ReactionNetwork>, f: Observable, t: f64) -> Result<Functional> {
    f.check(network.num_species())?;
    let offset = Some(f.clone());
    let functional = Functional::Integral { integrand: Integrand::Generator { network, f }, a: 0.0, b: t, offset };
    functional.check_window()?;
    Ok(functional)
}

/// Window smoothing of `f(x(t))`: the average of `f` over `[t - w, t + w]`.
pub fn make_rpd_functional(f: Observable, t: f64, w: f64) -> Result<Functional> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::Argument(format!("window half-width must be positive, got {w}")));
    }
    if w > t {
        return Err(Error::Argument(format!("window half-width {w} exceeds the time {t}")));
    }
    Functional::integral(Integrand::Observable { f, scale: 1.0 / (2.0 * w) }, t - w, t + w)
}

/// Observer accumulating the value of a functional and the integral of the
/// explicit parameter derivative of its integrand.
#[derive(Debug)]
pub struct FunctionalTracker<'a> {
    functional: &'a Functional,
    theta: &'a [f64],
    offset: usize,
    d: usize,
    want_grad: bool,
    started: bool,
    terminal_seen: bool,
    pub value: f64,
    /// The part of `value` coming from the offset term.
    pub initial: f64,
    /// `int_a^b dF/dtheta ds` (zero for parameter-free integrands).
    pub explicit_grad: Vec<f64>,
    scratch: Scratch,
    grad_buf: Vec<f64>,
}

impl<'a> FunctionalTracker<'a> {
    /// Tracks `functional` on species `offset..offset + d` of the simulated
    /// state.
    pub fn new(functional: &'a Functional, theta: &'a [f64], offset: usize, d: usize) -> Self {
        let want_grad = functional.depends_on_theta();
        let r = theta.len();
        Self {
            functional,
            theta,
            offset,
            d,
            want_grad,
            started: false,
            terminal_seen: false,
            value: 0.0,
            initial: 0.0,
            explicit_grad: vec![0.0; r],
            scratch: Scratch::default(),
            grad_buf: vec![0.0; r],
        }
    }
}

impl Observer for FunctionalTracker<'_> {
    fn on_step(&mut self, step: &Step<'_>) {
        let x = &step.state[self.offset..self.offset + self.d];
        match self.functional {
            Functional::Integral { integrand, a, b, offset } => {
                if !self.started {
                    self.started = true;
                    if let Some(o) = offset {
                        self.initial = o.eval(x);
                        self.value += self.initial;
                    }
                }
                let len = step.t1.min(*b) - step.t0.max(*a);
                if len > 0.0 {
                    let grad = if self.want_grad { Some(&mut self.grad_buf[..]) } else { None };
                    let fv = integrand.eval(self.theta, x, grad, &mut self.scratch);
                    self.value += len * fv;
                    if self.want_grad {
                        for (e, g) in self.explicit_grad.iter_mut().zip(&self.grad_buf) {
                            *e += len * g;
                        }
                    }
                }
            }
            Functional::Terminal { f, t } => {
                if !self.terminal_seen && step.t0 <= *t && (*t < step.t1 || step.fired.is_none()) {
                    self.terminal_seen = true;
                    self.value = f.eval(x);
                }
            }
        }
    }
}
