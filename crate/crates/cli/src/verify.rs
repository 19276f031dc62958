//! Oracle-versus-estimator tables.

use ctmc_sens::estimators::Z95;
use ctmc_sens::oracle::{closed_form_birth_death, closed_form_switch};
use ctmc_sens::Result;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::exec::execute;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub case: String,
    pub method: String,
    pub estimate: f64,
    pub halfwidth: f64,
    pub reference: f64,
    pub ok: bool,
}

/// Estimates agree when within three standard errors; the master-equation
/// oracle must match the closed form to 1e-3 relative.
fn agrees(method: &str, estimate: f64, halfwidth: f64, reference: f64) -> bool {
    if method == "oracle" {
        (estimate - reference).abs() <= 1e-3 * reference.abs().max(1e-12)
    } else {
        (estimate - reference).abs() <= 3.0 * halfwidth / Z95
    }
}

struct Check {
    case: &'static str,
    model: serde_json::Value,
    species: &'static str,
    t: f64,
    param: usize,
    reference: Option<f64>,
    methods: &'static [&'static str],
}

pub fn verify(paths: u64, seed: u64, workers: usize) -> Result<Vec<VerifyRow>> {
    let checks = [
        Check {
            case: "birth-death t=5",
            model: json!("birth-death"),
            species: "A",
            t: 5.0,
            param: 2,
            reference: Some(closed_form_birth_death(&[10.0, 0.5], 5.0)?.2),
            methods: &["oracle", "gs_pathwise", "lr_cv", "gs_hybrid"],
        },
        Check {
            case: "birth-death t=50",
            model: json!("birth-death"),
            species: "A",
            t: 50.0,
            param: 2,
            reference: Some(closed_form_birth_death(&[10.0, 0.5], 50.0)?.2),
            methods: &["gs_pathwise", "lr_cv"],
        },
        Check {
            case: "switch t=0.5",
            model: json!("switch"),
            species: "C",
            t: 0.5,
            param: 1,
            reference: Some(closed_form_switch(0.25, 10.0, 0.5)?),
            methods: &["oracle", "gs_hybrid", "lr_cv"],
        },
        Check {
            case: "switch t=2",
            model: json!("switch"),
            species: "C",
            t: 2.0,
            param: 1,
            reference: Some(closed_form_switch(0.25, 10.0, 2.0)?),
            methods: &["oracle", "gs_hybrid", "lr_cv"],
        },
        Check {
            case: "switch t=10",
            model: json!("switch"),
            species: "C",
            t: 10.0,
            param: 1,
            reference: Some(closed_form_switch(0.25, 10.0, 10.0)?),
            methods: &["oracle", "gs_hybrid"],
        },
        Check {
            case: "mm-switch t=2",
            model: json!("mm-switch"),
            species: "Pt",
            t: 2.0,
            param: 1,
            reference: None,
            methods: &["oracle", "gs_hybrid", "lr_cv"],
        },
    ];
    let mut rows = Vec::new();
    for c in &checks {
        let mut reference = c.reference;
        for m in c.methods {
            let cfg = ExperimentConfig::from_json(
                &json!({
                    "model": c.model,
                    "method": m,
                    "functional": {"terminal": {"observable": {"species": c.species}, "time": c.t}},
                    "params": [c.param],
                    "paths": paths,
                    "seed": seed,
                    "workers": workers,
                })
                .to_string(),
            )?;
            let rep = execute(&cfg.resolve()?)?;
            let row = &rep.rows[0];
            let truth = *reference.get_or_insert(row.estimate);
            rows.push(VerifyRow {
                case: c.case.into(),
                method: m.to_string(),
                estimate: row.estimate,
                halfwidth: row.halfwidth,
                reference: truth,
                ok: agrees(m, row.estimate, row.halfwidth, truth),
            });
        }
    }
    Ok(rows)
}

pub fn format_table(rows: &[VerifyRow]) -> String {
    let mut s = format!(
        "{:<18} {:<12} {:>14} {:>12} {:>14}  {}\n",
        "case", "method", "estimate", "halfwidth", "reference", "status"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<18} {:<12} {:>14.6} {:>12.6} {:>14.6}  {}\n",
            r.case,
            r.method,
            r.estimate,
            r.halfwidth,
            r.reference,
            if r.ok { "ok" } else { "MISS" }
        ));
    }
    s
}
