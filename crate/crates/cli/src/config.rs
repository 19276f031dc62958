//! Experiment configuration files.
//!
//! ```json
//! {
//!   "model": "birth-death",
//!   "method": "gs_hybrid",
//!   "functional": {"terminal": {"observable": {"species": "A"}, "time": 5.0}},
//!   "params": [2],
//!   "paths": 10000,
//!   "seed": 7
//! }
//! ```
//!
//! `model` is a builtin name, `{"file": "path.json"}` or an inline model
//! description. Parameter and reaction indices are one-based. Species are
//! referred to by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use ctmc_sens::estimators::Precision;
use ctmc_sens::model::{builtin, Model, ModelConfig};
use ctmc_sens::sim::{make_gs_functional, make_rpd_functional, Functional, Integrand, Observable};
use ctmc_sens::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lr,
    LrCv,
    GsPathwise,
    RpdPathwise,
    GsHybrid,
    RpdHybrid,
    Cfd,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Lr,
        Method::LrCv,
        Method::GsPathwise,
        Method::RpdPathwise,
        Method::GsHybrid,
        Method::RpdHybrid,
        Method::Cfd,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::LrCv => "lr_cv",
            Method::GsPathwise => "gs_pathwise",
            Method::RpdPathwise => "rpd_pathwise",
            Method::GsHybrid => "gs_hybrid",
            Method::RpdHybrid => "rpd_hybrid",
            Method::Cfd => "cfd",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }

    fn is_rpd(self) -> bool {
        matches!(self, Method::RpdPathwise | Method::RpdHybrid)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, Method::GsHybrid | Method::RpdHybrid)
    }

    fn is_pathwise(self) -> bool {
        matches!(self, Method::GsPathwise | Method::RpdPathwise | Method::GsHybrid | Method::RpdHybrid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Builtin(String),
    File { file: String },
    Inline(Box<ModelConfig>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    Species(String),
    /// Coefficients by species name.
    Linear(BTreeMap<String, f64>),
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// `f(X(time))`.
    Terminal { observable: ObservableConfig, time: f64 },
    /// `scale * integral_a^b f(X(s)) ds`.
    Integral {
        observable: ObservableConfig,
        a: f64,
        b: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `integral_a^b lambda_k(theta, X(s)) ds` for the one-based reaction `reaction`.
    Flux { reaction: usize, a: f64, b: f64 },
}

fn one() -> f64 {
    1.0
}

/// Finite-difference step: absolute, or relative to the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FdStep {
    Absolute(f64),
    Relative { relative: f64 },
}

impl FdStep {
    pub fn parse(s: &str) -> Result<FdStep> {
        let bad = || Error::Config(format!("bad finite-difference step '{s}' (use 0.05 or rel:0.01)"));
        match s.strip_prefix("rel:") {
            Some(r) => Ok(FdStep::Relative { relative: r.parse().map_err(|_| bad())? }),
            None => Ok(FdStep::Absolute(s.parse().map_err(|_| bad())?)),
        }
    }

    pub fn resolve(self, theta_i: f64) -> Result<f64> {
        let h = match self {
            FdStep::Absolute(h) => h,
            FdStep::Relative { relative } => relative * theta_i.abs(),
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("finite-difference step resolves to {h}")));
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmeConfig {
    /// Upper box bounds by species; missing species get a simulated bound.
    #[serde(default)]
    pub upper: BTreeMap<String, i64>,
    /// Species kept out of the box (first-order decay only).
    #[serde(default)]
    pub untracked: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    pub method: Method,
    pub functional: FunctionalConfig,
    /// One-based parameter indices; empty means all.
    #[serde(default)]
    pub params: Vec<usize>,
    /// Overrides the model's nominal parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// Smoothing window `w` of the rpd methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<FdStep>,
    /// Floor scale applied to every reaction of the approximate process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    /// One-based reactions left unfloored; overrides the model's set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exempt: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_halfwidth: Option<f64>,
    /// Pilot size of each hybrid pilot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_paths: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub no_timing: bool,
    /// Jump cap per path; exceeding it aborts the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_jumps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cme: Option<CmeConfig>,
    /// Output prefix; `<out>.csv` and `<out>.json` are written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Number of sample paths to write next to the report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_paths: Option<u64>,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment config serializes")
    }

    /// Loads the model and checks the method-specific fields.
    pub fn resolve(&self) -> Result<Resolved> {
        let model_config = match &self.model {
            ModelRef::Builtin(name) => builtin(name)?.config,
            ModelRef::File { file } => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| Error::Config(format!("cannot read model file '{file}': {e}")))?;
                ModelConfig::from_json(&text)?
            }
            ModelRef::Inline(c) => (**c).clone(),
        };
        let mut model = model_config.build()?;
        if let Some(theta) = &self.theta {
            model.network.check_theta(theta).map_err(|e| Error::Config(e.to_string()))?;
            model.theta = theta.clone();
        }
        let k_count = model.network.num_reactions();
        if let Some(d) = self.delta {
            model.approx.delta = vec![d; k_count];
        }
        if let Some(m) = self.big_m {
            model.approx.big_m = m;
        }
        if let Some(ex) = &self.exempt {
            model.approx.exempt = ex
                .iter()
                .map(|&k| {
                    if k == 0 || k > k_count {
                        Err(Error::Config(format!("exempt reaction {k} outside 1..={k_count}")))
                    } else {
                        Ok(k - 1)
                    }
                })
                .collect::<Result<_>>()?;
        }
        let r = model.network.param_dim();
        let params: Vec<usize> = if self.params.is_empty() {
            (0..r).collect()
        } else {
            self.params
                .iter()
                .map(|&i| {
                    if i == 0 || i > r {
                        Err(Error::Config(format!("parameter index {i} outside 1..={r}")))
                    } else {
                        Ok(i - 1)
                    }
                })
                .collect::<Result<_>>()?
        };

        let m = self.method;
        let need = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("method {} requires {what}", m.name())))
            }
        };
        need(!m.is_rpd() || self.window.is_some(), "`window`")?;
        need(m != Method::Cfd || self.fd_step.is_some(), "`fd_step`")?;
        let precision = match (self.paths, self.target_halfwidth) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `paths` or `target_halfwidth`, not both".into()))
            }
            (Some(n), None) => Some(Precision::Samples(n)),
            (None, Some(e)) => Some(Precision::Halfwidth(e)),
            (None, None) => None,
        };
        if m != Method::Oracle {
            need(precision.is_some(), "`paths` or `target_halfwidth`")?;
            precision.unwrap().check().map_err(|e| Error::Config(e.to_string()))?;
        }

        let net = Arc::new(model.network.clone());
        let functional = match &self.functional {
            FunctionalConfig::Terminal { observable, time } => {
                let f = observable_of(&model, observable)?;
                match m {
                    Method::GsPathwise | Method::GsHybrid => make_gs_functional(net, f.clone(), *time)?,
                    Method::RpdPathwise | Method::RpdHybrid => {
                        make_rpd_functional(f.clone(), *time, self.window.unwrap())?
                    }
                    _ => Functional::terminal(f.clone(), *time)?,
                }
            }
            FunctionalConfig::Integral { observable, a, b, scale } => {
                if m.is_rpd() {
                    return Err(Error::Config("window smoothing applies to terminal functionals only".into()));
                }
                let f = observable_of(&model, observable)?;
                Functional::integral(Integrand::Observable { f, scale: *scale }, *a, *b)?
            }
            FunctionalConfig::Flux { reaction, a, b } => {
                if m.is_rpd() {
                    return Err(Error::Config("window smoothing applies to terminal functionals only".into()));
                }
                if *reaction == 0 || *reaction > k_count {
                    return Err(Error::Config(format!("flux reaction {reaction} outside 1..={k_count}")));
                }
                Functional::integral(Integrand::Intensity { network: net, reaction: reaction - 1 }, *a, *b)?
            }
        };
        if m.is_pathwise() && !functional.is_integral() {
            return Err(Error::Config(format!("method {} needs an integral functional", m.name())));
        }
        let terminal_observable = match (&self.functional, m) {
            (FunctionalConfig::Terminal { observable, time }, Method::Oracle) => {
                Some((observable_of(&model, observable)?, *time))
            }
            (_, Method::Oracle) => {
                return Err(Error::Config("the oracle method supports terminal functionals only".into()))
            }
            _ => None,
        };
        let mut config = self.clone();
        config.model = ModelRef::Inline(Box::new(model.config.clone()));
        config.theta = Some(model.theta.clone());
        Ok(Resolved { config, model, params, precision, functional, terminal_observable })
    }
}

fn observable_of(model: &Model, o: &ObservableConfig) -> Result<Observable> {
    let index = |name: &str| {
        model.network.species_index(name).ok_or_else(|| Error::Config(format!("unknown species '{name}'")))
    };
    Ok(match o {
        ObservableConfig::Species(s) => Observable::Species(index(s)?),
        ObservableConfig::Constant(c) => Observable::Constant(*c),
        ObservableConfig::Linear(map) => {
            let mut c = vec![0.0; model.network.num_species()];
            for (s, v) in map {
                c[index(s)?] = *v;
            }
            Observable::Linear(c)
        }
    })
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// The input config with the model inlined and theta made explicit.
    pub config: ExperimentConfig,
    pub model: Model,
    /// Zero-based.
    pub params: Vec<usize>,
    pub precision: Option<Precision>,
    pub functional: Functional,
    /// Observable and time of the oracle method.
    pub terminal_observable: Option<(Observable, f64)>,
}
