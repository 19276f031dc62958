//! CSV and JSON reports of estimator runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One reported sensitivity. `param` is one-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub param: usize,
    pub estimate: f64,
    pub halfwidth: f64,
    pub n_pathwise: u64,
    pub n_coupled: u64,
    pub cpu_seconds: f64,
    pub bias_note: String,
}

/// Rows plus the resolved configuration and free-form diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub provenance: serde_json::Value,
    #[serde(default)]
    pub diagnostics: serde_json::Value,
}

impl Report {
    pub fn new(provenance: serde_json::Value) -> Self {
        Self { rows: Vec::new(), provenance, diagnostics: serde_json::Value::Null }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "method",
                "param",
                "estimate",
                "halfwidth",
                "n_pathwise",
                "n_coupled",
                "cpu_seconds",
                "bias_note",
            ])
            .map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_round_trips() {
        let mut r = Report::new(serde_json::json!({"seed": 1}));
        r.rows.push(ReportRow {
            method: "cfd".into(),
            param: 3,
            estimate: 145.2,
            halfwidth: 1.0,
            n_pathwise: 0,
            n_coupled: 100,
            cpu_seconds: 0.0,
            bias_note: "O(h^2), h = 0.01".into(),
        });
        let text = r.to_csv().unwrap();
        assert!(text.starts_with("method,param,estimate,halfwidth,n_pathwise,n_coupled,cpu_seconds,bias_note\n"));
        assert!(text.contains("\"O(h^2), h = 0.01\""));
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<ReportRow> = rd.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, r.rows);
        let again: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(again, r);
    }
}
