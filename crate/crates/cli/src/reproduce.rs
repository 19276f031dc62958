//! Scaled-down versions of the reference experiments.
//!
//! Each exhibit is a grid of experiment configs run through [`execute`], so
//! every row can be re-run on its own from the config in the JSON bundle.

use std::time::Instant;

use ctmc_sens::model::{builtin, ModelConfig};
use ctmc_sens::oracle::{closed_form_birth_death, closed_form_switch};
use ctmc_sens::{Error, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, FdStep, FunctionalConfig, Method, ModelRef, ObservableConfig};
use crate::exec::execute;

pub const EXHIBITS: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "dimer", "table2"];

/// Dimer sensitivity at the second parameter set, from a master-equation
/// solve too large to repeat here (box of about 10^5 states).
pub const DIMER_SET2_REFERENCE: f64 = 556.83365;
/// Same quantity at the first parameter set; the oracle tests recompute it.
pub const DIMER_SET1_REFERENCE: f64 = 145.35137;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExhibitRow {
    pub exhibit: String,
    pub model: String,
    pub case: String,
    pub t: f64,
    pub method: String,
    pub param: usize,
    pub estimate: f64,
    pub halfwidth: f64,
    pub n_pathwise: u64,
    pub n_coupled: u64,
    pub cpu_seconds: f64,
    pub reference: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    /// Multiplies every fixed path count.
    pub scale: f64,
    /// Target halfwidth of the efficiency exhibits, relative to the reference.
    pub rel_halfwidth: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self { scale: 1.0, rel_halfwidth: 0.05, seed: 1, workers: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Bundle {
    pub exhibit: String,
    pub rows: Vec<ExhibitRow>,
    pub configs: Vec<ExperimentConfig>,
}

impl Bundle {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?)
            .map_err(|e| Error::Invariant(format!("csv: {e}")))
    }
}

enum Budget {
    Paths(u64),
    Halfwidth(f64),
}

struct Case<'a> {
    model: ModelRef,
    model_name: &'a str,
    case: String,
    t: f64,
    functional: FunctionalConfig,
    param: usize,
    reference: Option<f64>,
}

struct Runner<'o> {
    opts: &'o ReproduceOptions,
    bundle: Bundle,
}

impl Runner<'_> {
    fn paths(&self, n: f64) -> u64 {
        ((n * self.opts.scale).round() as u64).max(10)
    }

    fn config(&self, c: &Case, method: Method, budget: &Budget) -> ExperimentConfig {
        let (paths, target_halfwidth) = match *budget {
            Budget::Paths(n) => (Some(n), None),
            Budget::Halfwidth(e) => (None, Some(e)),
        };
        ExperimentConfig {
            model: c.model.clone(),
            method,
            functional: c.functional.clone(),
            params: vec![c.param],
            theta: None,
            window: None,
            fd_step: None,
            delta: None,
            big_m: None,
            exempt: None,
            paths,
            target_halfwidth,
            pilot_paths: None,
            seed: self.opts.seed,
            workers: self.opts.workers,
            no_timing: false,
            max_jumps: None,
            cme: None,
            out: None,
            dump_paths: None,
        }
    }

    fn run(&mut self, c: &Case, cfg: ExperimentConfig, label: &str) -> Result<()> {
        let resolved = cfg.resolve()?;
        let report = execute(&resolved)?;
        let note = match report.diagnostics.get("pathwise_fraction").and_then(|v| v.as_f64()) {
            Some(p) => format!("pathwise fraction {:.2}", p),
            None => String::new(),
        };
        for r in &report.rows {
            self.bundle.rows.push(ExhibitRow {
                exhibit: self.bundle.exhibit.clone(),
                model: c.model_name.into(),
                case: c.case.clone(),
                t: c.t,
                method: label.into(),
                param: r.param,
                estimate: r.estimate,
                halfwidth: r.halfwidth,
                n_pathwise: r.n_pathwise,
                n_coupled: r.n_coupled,
                cpu_seconds: r.cpu_seconds,
                reference: c.reference,
                note: note.clone(),
            });
        }
        self.bundle.configs.push(resolved.config);
        Ok(())
    }

    fn method(&mut self, c: &Case, m: Method, budget: &Budget) -> Result<()> {
        let cfg = self.config(c, m, budget);
        self.run(c, cfg, m.name())
    }

    fn rpd(&mut self, c: &Case, m: Method, frac: f64, budget: &Budget) -> Result<()> {
        let mut cfg = self.config(c, m, budget);
        cfg.window = Some(frac * c.t);
        self.run(c, cfg, &format!("{}(w={frac}t)", m.name()))
    }

    fn cfd(&mut self, c: &Case, rel: f64, budget: &Budget) -> Result<()> {
        let mut cfg = self.config(c, Method::Cfd, budget);
        cfg.fd_step = Some(FdStep::Relative { relative: rel });
        self.run(c, cfg, &format!("cfd(h={rel}theta)"))
    }
}

fn terminal(species: &str, t: f64) -> FunctionalConfig {
    FunctionalConfig::Terminal { observable: ObservableConfig::Species(species.into()), time: t }
}

fn with_initial(name: &str, species: &str, count: i64) -> Result<ModelRef> {
    let mut c: ModelConfig = builtin(name)?.config;
    c.initial_state.insert(species.into(), count);
    Ok(ModelRef::Inline(Box::new(c)))
}

fn birth_death_case(t: f64) -> Result<Case<'static>> {
    Ok(Case {
        model: ModelRef::Builtin("birth-death".into()),
        model_name: "birth-death",
        case: format!("t={t}"),
        t,
        functional: terminal("A", t),
        param: 2,
        reference: Some(closed_form_birth_death(&[10.0, 0.5], t)?.2),
    })
}

fn switch_case(a: i64, t: f64) -> Result<Case<'static>> {
    Ok(Case {
        model: with_initial("switch", "A", a)?,
        model_name: "switch",
        case: format!("a={a}"),
        t,
        functional: terminal("C", t),
        param: 1,
        reference: Some(closed_form_switch(0.25, a as f64, t)?),
    })
}

/// Runs one exhibit.
pub fn reproduce(id: &str, opts: &ReproduceOptions) -> Result<Bundle> {
    if !EXHIBITS.contains(&id) {
        return Err(Error::Config(format!("unknown exhibit '{id}' (known: {})", EXHIBITS.join(", "))));
    }
    if !(opts.scale.is_finite() && opts.scale > 0.0) {
        return Err(Error::Config(format!("scale must be positive, got {}", opts.scale)));
    }
    let mut r = Runner { opts, bundle: Bundle { exhibit: id.into(), rows: Vec::new(), configs: Vec::new() } };
    let rel = opts.rel_halfwidth;
    match id {
        "fig1" => {
            let n = Budget::Paths(r.paths(1e4));
            for t in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
                let c = birth_death_case(t)?;
                r.method(&c, Method::GsPathwise, &n)?;
                r.method(&c, Method::LrCv, &n)?;
                r.cfd(&c, 0.01, &n)?;
                r.cfd(&c, 0.1, &n)?;
                if t > 0.0 {
                    r.rpd(&c, Method::RpdPathwise, 0.01, &n)?;
                    r.rpd(&c, Method::RpdPathwise, 0.1, &n)?;
                }
            }
        }
        "fig2" => {
            for t in [5.0, 50.0] {
                let c = birth_death_case(t)?;
                let eps = Budget::Halfwidth(rel * c.reference.unwrap().abs());
                r.method(&c, Method::GsPathwise, &eps)?;
                r.method(&c, Method::LrCv, &eps)?;
                r.cfd(&c, 0.01, &eps)?;
                r.rpd(&c, Method::RpdPathwise, 0.1, &eps)?;
            }
        }
        "fig3" => {
            let n = Budget::Paths(r.paths(1e4));
            for t in [0.5, 2.0, 10.0] {
                for a in [1, 5, 10, 20] {
                    let c = switch_case(a, t)?;
                    r.method(&c, Method::GsPathwise, &n)?;
                    r.rpd(&c, Method::RpdPathwise, 0.1, &n)?;
                    r.method(&c, Method::GsHybrid, &n)?;
                    r.rpd(&c, Method::RpdHybrid, 0.1, &n)?;
                }
            }
        }
        "fig4" => {
            for t in [0.5, 2.0, 10.0] {
                let c = switch_case(10, t)?;
                let eps = Budget::Halfwidth(rel * c.reference.unwrap().abs());
                r.method(&c, Method::GsHybrid, &eps)?;
                r.rpd(&c, Method::RpdHybrid, 0.1, &eps)?;
                r.method(&c, Method::LrCv, &eps)?;
                r.cfd(&c, 0.1, &eps)?;
            }
        }
        "fig5" => {
            for t in [2.0, 20.0] {
                let mut c = Case {
                    model: ModelRef::Builtin("mm-switch".into()),
                    model_name: "mm-switch",
                    case: format!("t={t}"),
                    t,
                    functional: terminal("Pt", t),
                    param: 1,
                    reference: None,
                };
                let oracle = r.config(&c, Method::Oracle, &Budget::Paths(2));
                let truth = execute(&oracle.resolve()?)?.rows[0].estimate;
                c.reference = Some(truth);
                let eps = Budget::Halfwidth(rel * truth.abs());
                r.method(&c, Method::GsHybrid, &eps)?;
                r.rpd(&c, Method::RpdHybrid, 0.1, &eps)?;
                r.method(&c, Method::LrCv, &eps)?;
                r.cfd(&c, 0.1, &eps)?;
            }
        }
        "dimer" => {
            for (name, t, truth) in
                [("dimerization", 1.0, DIMER_SET1_REFERENCE), ("dimerization-set2", 2.0, DIMER_SET2_REFERENCE)]
            {
                let c = Case {
                    model: ModelRef::Builtin(name.into()),
                    model_name: name,
                    case: name.into(),
                    t,
                    functional: terminal("D", t),
                    param: 3,
                    reference: Some(truth),
                };
                let eps = Budget::Halfwidth(rel * truth);
                r.method(&c, Method::GsHybrid, &eps)?;
                r.rpd(&c, Method::RpdHybrid, 0.1, &eps)?;
                r.cfd(&c, 0.1, &eps)?;
            }
        }
        "table2" => table2(&mut r)?,
        _ => unreachable!(),
    }
    Ok(r.bundle)
}

/// Full gradient of the integrated dimerization flux. LR+CV and CFD get the
/// wall-clock time the hybrid took, CFD split evenly over the parameters.
fn table2(r: &mut Runner) -> Result<()> {
    let mut c = Case {
        model: ModelRef::Builtin("dimerization-flux".into()),
        model_name: "dimerization-flux",
        case: "flux".into(),
        t: 5.0,
        functional: FunctionalConfig::Flux { reaction: 3, a: 0.0, b: 5.0 },
        param: 1,
        reference: None,
    };
    let all = |mut cfg: ExperimentConfig| {
        cfg.params = Vec::new();
        cfg
    };
    let start = Instant::now();
    let cfg = all(r.config(&c, Method::GsHybrid, &Budget::Paths(r.paths(4000.0))));
    r.run(&c, cfg, "hybrid")?;
    let budget = start.elapsed().as_secs_f64();

    let pilot = r.paths(500.0).max(100);
    let per_path = |r: &Runner, c: &Case, m: Method, step: Option<FdStep>| -> Result<f64> {
        let mut cfg = all(r.config(c, m, &Budget::Paths(pilot)));
        cfg.fd_step = step;
        if step.is_some() {
            cfg.params = vec![c.param];
        }
        let t0 = Instant::now();
        execute(&cfg.resolve()?)?;
        Ok(t0.elapsed().as_secs_f64() / pilot as f64)
    };
    let n_lr = ((budget / per_path(r, &c, Method::LrCv, None)?) as u64).max(pilot);
    let cfg = all(r.config(&c, Method::LrCv, &Budget::Paths(n_lr)));
    r.run(&c, cfg, "lr_cv")?;

    let step = FdStep::Relative { relative: 0.1 };
    let dim = builtin("dimerization-flux")?.network.param_dim();
    for i in 1..=dim {
        c.param = i;
        let n = ((budget / dim as f64 / per_path(r, &c, Method::Cfd, Some(step))?) as u64).max(pilot);
        let mut cfg = r.config(&c, Method::Cfd, &Budget::Paths(n));
        cfg.fd_step = Some(step);
        r.run(&c, cfg, "cfd(h=0.1theta)")?;
    }
    Ok(())
}
