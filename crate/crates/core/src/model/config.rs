//! JSON model descriptions and the builtin models.
//!
//! ```json
//! {
//!   "name": "birth-death",
//!   "species": ["A"],
//!   "theta": [10.0, 0.5],
//!   "initial_state": {"A": 0},
//!   "reactions": [
//!     {"name": "birth", "reactants": {}, "products": {"A": 1},
//!      "rate": {"kind": "mass_action", "param": 1}},
//!     {"name": "death", "reactants": {"A": 1}, "products": {},
//!      "rate": {"kind": "mass_action", "param": 2}}
//!   ],
//!   "approx": {"exempt": [], "delta": 1.0, "big_m": 1e6}
//! }
//! ```
//!
//! Parameter and reaction indices are one-based. Michaelis–Menten rates use
//! `{"kind": "michaelis_menten", "vmax": i, "km": j, "species": "S"}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ApproxOptions, IntensitySpec, Reaction, ReactionNetwork};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateConfig {
    MassAction { param: usize },
    MichaelisMenten { vmax: usize, km: usize, species: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub reactants: BTreeMap<String, i64>,
    #[serde(default)]
    pub products: BTreeMap<String, i64>,
    pub rate: RateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    /// One-based reaction indices left unfloored.
    #[serde(default)]
    pub exempt: Vec<usize>,
    /// Common floor scale, or one value per reaction.
    #[serde(default)]
    pub delta: Option<DeltaConfig>,
    #[serde(default)]
    pub big_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaConfig {
    Uniform(f64),
    PerReaction(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub species: Vec<String>,
    #[serde(default)]
    pub parameter_names: Option<Vec<String>>,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub initial_state: BTreeMap<String, i64>,
    pub reactions: Vec<ReactionConfig>,
    #[serde(default)]
    pub approx: Option<ApproxConfig>,
}

/// A validated model: network, nominal parameters, initial state and the
/// default approximate-process settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub network: ReactionNetwork,
    pub theta: Vec<f64>,
    pub x0: Vec<i64>,
    pub approx: ApproxOptions,
    pub config: ModelConfig,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model config serializes")
    }

    pub fn build(&self) -> Result<Model> {
        let d = self.species.len();
        let index = |name: &str, ctx: &str| -> Result<usize> {
            self.species
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::Config(format!("{ctx}: unknown species '{name}'")))
        };
        for (i, s) in self.species.iter().enumerate() {
            if s.is_empty() || self.species[..i].contains(s) {
                return Err(Error::Config(format!("species name '{s}' is empty or repeated")));
            }
        }
        let r_dim = self.theta.len();
        if let Some(names) = &self.parameter_names {
            if names.len() != r_dim {
                return Err(Error::Config("parameter_names and theta differ in length".into()));
            }
        }
        let param = |p: usize, ctx: &str| -> Result<usize> {
            if p == 0 || p > r_dim {
                Err(Error::Config(format!("{ctx}: parameter index {p} outside 1..={r_dim}")))
            } else {
                Ok(p - 1)
            }
        };
        let mut reactions = Vec::with_capacity(self.reactions.len());
        for (k, rc) in self.reactions.iter().enumerate() {
            let name = rc.name.clone().unwrap_or_else(|| format!("R{}", k + 1));
            let ctx = format!("reaction {} ({name})", k + 1);
            let mut nu = vec![0i64; d];
            let mut nu_prime = vec![0i64; d];
            for (s, c) in &rc.reactants {
                if *c < 0 {
                    return Err(Error::Config(format!("{ctx}: negative coefficient for '{s}'")));
                }
                nu[index(s, &ctx)?] = *c;
            }
            for (s, c) in &rc.products {
                if *c < 0 {
                    return Err(Error::Config(format!("{ctx}: negative coefficient for '{s}'")));
                }
                nu_prime[index(s, &ctx)?] = *c;
            }
            let intensity = match &rc.rate {
                RateConfig::MassAction { param: p } => IntensitySpec::MassAction { rate: param(*p, &ctx)? },
                RateConfig::MichaelisMenten { vmax, km, species } => IntensitySpec::MichaelisMenten {
                    vmax: param(*vmax, &ctx)?,
                    km: param(*km, &ctx)?,
                    species: index(species, &ctx)?,
                },
            };
            reactions.push(Reaction::new(name, nu, nu_prime, intensity));
        }
        let network = ReactionNetwork::new(self.species.clone(), reactions, r_dim.max(1), Some(vec![0; d]))?;
        if r_dim == 0 {
            return Err(Error::Config("theta must not be empty".into()));
        }
        network.check_theta(&self.theta).map_err(|e| Error::Config(e.to_string()))?;
        let mut x0 = vec![0i64; d];
        for (s, c) in &self.initial_state {
            if *c < 0 {
                return Err(Error::Config(format!("initial_state: negative count for '{s}'")));
            }
            x0[index(s, "initial_state")?] = *c;
        }
        let k_count = network.num_reactions();
        let mut approx = ApproxOptions::new(k_count);
        if let Some(ac) = &self.approx {
            approx.exempt = ac
                .exempt
                .iter()
                .map(|&k| {
                    if k == 0 || k > k_count {
                        Err(Error::Config(format!("approx.exempt: reaction {k} outside 1..={k_count}")))
                    } else {
                        Ok(k - 1)
                    }
                })
                .collect::<Result<_>>()?;
            match &ac.delta {
                None => {}
                Some(DeltaConfig::Uniform(v)) => approx.delta = vec![*v; k_count],
                Some(DeltaConfig::PerReaction(v)) => {
                    if v.len() != k_count {
                        return Err(Error::Config(format!("approx.delta needs {k_count} entries")));
                    }
                    approx.delta = v.clone();
                }
            }
            if let Some(m) = ac.big_m {
                approx.big_m = m;
            }
        }
        Ok(Model { name: self.name.clone(), network, theta: self.theta.clone(), x0, approx, config: self.clone() })
    }
}

impl Model {
    pub fn from_json(text: &str) -> Result<Self> {
        ModelConfig::from_json(text)?.build()
    }

    pub fn param_name(&self, i: usize) -> String {
        match &self.config.parameter_names {
            Some(names) => names[i].clone(),
            None => format!("theta{}", i + 1),
        }
    }
}

const BUILTINS: &[(&str, &str)] = &[
    ("birth-death", include_str!("../../models/birth-death.json")),
    ("switch", include_str!("../../models/switch.json")),
    ("mm-switch", include_str!("../../models/mm-switch.json")),
    ("dimerization", include_str!("../../models/dimerization.json")),
    ("dimerization-set2", include_str!("../../models/dimerization-set2.json")),
    ("dimerization-flux", include_str!("../../models/dimerization-flux.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Raw JSON of a builtin model.
pub fn builtin_json(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, j)| *j)
}

pub fn builtin(name: &str) -> Result<Model> {
    let text = builtin_json(name).ok_or_else(|| {
        Error::Config(format!("unknown builtin model '{name}' (known: {})", builtin_names().join(", ")))
    })?;
    Model::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_approx_process, check_non_interruptive, ScanBox};

    #[test]
    fn builtins_parse_and_round_trip() {
        for name in builtin_names() {
            let m = builtin(name).unwrap();
            assert_eq!(m.name, name);
            let again = Model::from_json(&m.config.to_json()).unwrap();
            assert_eq!(again, m);
        }
    }

    #[test]
    fn builtin_values() {
        let bd = builtin("birth-death").unwrap();
        assert_eq!(bd.theta, vec![10.0, 0.5]);
        assert_eq!(bd.x0, vec![0]);
        let sw = builtin("switch").unwrap();
        assert_eq!(sw.theta, vec![0.25, 1.0, 1.0]);
        assert_eq!(sw.x0, vec![10, 0, 0]);
        assert_eq!(sw.approx.exempt, vec![2]);
        let mm = builtin("mm-switch").unwrap();
        assert_eq!(mm.theta, vec![0.05, 1.0, 1.0, 11.0]);
        assert_eq!(mm.x0, vec![10, 0, 0]);
        let d1 = builtin("dimerization").unwrap();
        assert_eq!(d1.theta, vec![200.0, 100.0, 0.1, 25.0, 1.0, 1.0]);
        assert_eq!(d1.x0, vec![0, 0, 0]);
        assert_eq!(d1.approx.exempt, vec![3, 5]);
        assert_eq!(d1.approx.big_m, 1e6);
        let d2 = builtin("dimerization-set2").unwrap();
        assert_eq!(d2.theta, vec![1000.0, 200.0, 0.1, 20.0, 0.1, 0.1]);
        assert_eq!(d2.x0, vec![50, 0, 0]);
        let fl = builtin("dimerization-flux").unwrap();
        assert_eq!(fl.theta, vec![200.0, 10.0, 0.01, 25.0, 1.0, 1.0]);
    }

    #[test]
    fn builtin_approximations_are_non_interruptive() {
        for name in builtin_names() {
            let m = builtin(name).unwrap();
            let z = build_approx_process(&m.network, &m.approx).unwrap();
            let d = m.network.num_species();
            let scan = ScanBox::new(vec![-3; d], vec![12; d]).unwrap();
            let report = check_non_interruptive(&z, &m.theta, &scan, Some(&m.network)).unwrap();
            assert!(report.non_interruptive, "{name}");
            assert!(report.kink_compatible, "{name}");
        }
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = ModelConfig::from_json("{\n  \"name\": \"x\",\n  \"species\": 3\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn rejects_semantic_errors() {
        let base = builtin("birth-death").unwrap().config;
        let mut c = base.clone();
        c.reactions[0].rate = RateConfig::MassAction { param: 3 };
        assert!(c.build().is_err());
        let mut c = base.clone();
        c.reactions[0].products.insert("B".into(), 1);
        assert!(c.build().is_err());
        let mut c = base.clone();
        c.theta[0] = -1.0;
        assert!(c.build().is_err());
        let mut c = base;
        c.approx = Some(ApproxConfig { exempt: vec![9], delta: None, big_m: None });
        assert!(c.build().is_err());
    }
}
