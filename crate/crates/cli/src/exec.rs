//! Runs a resolved experiment and builds its report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ctmc_sens::error::InterruptingPair;
use ctmc_sens::estimators::report::{Report, ReportRow};
use ctmc_sens::estimators::{
    cfd_estimate, hybrid_estimate, lr_cv_estimate, lr_estimate, pathwise_estimate, CvMode, Estimate, HybridOptions,
    McOptions, RunOptions,
};
use ctmc_sens::model::{build_approx_process, check_non_interruptive, ScanBox};
use ctmc_sens::oracle::{cme_sensitivity, default_box, CmeBox, CmeOptions};
use ctmc_sens::rng::{phase, StreamKey};
use ctmc_sens::sim::{simulate, SimOptions};
use ctmc_sens::{Error, Result};
use serde_json::json;

use crate::config::{CmeConfig, ExperimentConfig, Method, Resolved};

const SCAN_STATES: usize = 200_000;

pub fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    let mut sim = SimOptions::default();
    if let Some(cap) = cfg.max_jumps {
        sim.max_jumps = cap;
    }
    RunOptions {
        seed: cfg.seed,
        mc: McOptions { workers: cfg.workers, timing: !cfg.no_timing },
        sim,
        ..Default::default()
    }
}

fn row(method: Method, param: usize, e: &Estimate, n_pathwise: u64, n_coupled: u64, note: &str) -> ReportRow {
    ReportRow {
        method: method.name().into(),
        param: param + 1,
        estimate: e.mean,
        halfwidth: e.halfwidth,
        n_pathwise,
        n_coupled,
        cpu_seconds: e.cpu_seconds,
        bias_note: note.into(),
    }
}

/// Box around the initial state for the interruption scan, kept to a few
/// hundred thousand states.
fn scan_region(x0: &[i64]) -> Result<ScanBox> {
    let size = |span: i64| x0.iter().map(|&v| (v + span + 1) as f64).product::<f64>();
    let mut span = 16i64;
    while span > 1 && size(span) > SCAN_STATES as f64 {
        span /= 2;
    }
    ScanBox::new(vec![0; x0.len()], x0.iter().map(|&v| v + span).collect())
}

/// Checks the approximate process for interruptions near the initial state.
pub fn precheck_hybrid(r: &Resolved) -> Result<()> {
    let net = &r.model.network;
    let z = build_approx_process(net, &r.model.approx)?;
    let report = check_non_interruptive(&z, &r.model.theta, &scan_region(&r.model.x0)?, Some(net))?;
    if !report.non_interruptive {
        let mut pairs: Vec<InterruptingPair> = Vec::new();
        for v in &report.violations {
            let p = InterruptingPair { interrupter: v.interrupter, interrupted: v.interrupted };
            if !pairs.contains(&p) {
                pairs.push(p);
            }
        }
        return Err(Error::NonInterruptive { pairs });
    }
    Ok(())
}

/// Runs the experiment. The report embeds the resolved config.
pub fn execute(r: &Resolved) -> Result<Report> {
    let cfg = &r.config;
    let opts = run_options(cfg);
    let m = &r.model;
    let (net, theta, x0) = (&m.network, &m.theta[..], &m.x0[..]);
    let f = &r.functional;
    let mut report = Report::new(json!({
        "config": cfg,
        "seed": cfg.seed,
        "tool": format!("ctmc-sens {}", env!("CARGO_PKG_VERSION")),
    }));
    let method = cfg.method;
    match method {
        Method::Lr => {
            let est = lr_estimate(net, theta, x0, &r.params, f, r.precision.unwrap(), &opts)?;
            for (&i, e) in r.params.iter().zip(&est) {
                report.rows.push(row(method, i, e, e.n, 0, ""));
            }
        }
        Method::LrCv => {
            let est = lr_cv_estimate(net, theta, x0, &r.params, f, r.precision.unwrap(), CvMode::SameSample, &opts)?;
            for e in &est {
                report.rows.push(row(
                    method,
                    e.param,
                    &e.estimate,
                    e.estimate.n,
                    0,
                    "beta estimated from the same samples",
                ));
            }
            report.diagnostics = json!({ "lr_cv": est });
        }
        Method::GsPathwise | Method::RpdPathwise => {
            let res = pathwise_estimate(net, theta, x0, &r.params, f, None, r.precision.unwrap(), &opts)?;
            let note = if method == Method::RpdPathwise {
                "window smoothing bias; no correction for interruptions"
            } else {
                "no correction for interruptions"
            };
            for &i in &r.params {
                report.rows.push(row(method, i, &res.estimates[i], res.n, 0, note));
            }
            report.diagnostics = json!({ "mean_work": res.mean_work });
        }
        Method::GsHybrid | Method::RpdHybrid => {
            precheck_hybrid(r)?;
            let mut ho = HybridOptions::new(m.approx.clone(), r.params.clone(), r.precision.unwrap());
            ho.run = opts;
            if let Some(p) = cfg.pilot_paths {
                ho.pilot_pathwise = p;
                ho.pilot_coupled = p;
            }
            let res = hybrid_estimate(net, theta, x0, f, &ho)?;
            let note = if method == Method::RpdHybrid { "window smoothing bias" } else { "" };
            for &i in &r.params {
                report.rows.push(row(method, i, &res.estimates[i], res.n_pathwise, res.n_coupled, note));
            }
            report.diagnostics = json!({
                "pathwise_fraction": res.pathwise_fraction(),
                "shortcut": res.shortcut,
                "diverged": res.diverged,
                "pilot": res.pilot,
                "plans": res.plans.iter().map(|(i, p)| json!({"param": i + 1, "plan": p})).collect::<Vec<_>>(),
                "pathwise": res.pathwise,
                "correction": res.correction,
            });
        }
        Method::Cfd => {
            let step = cfg.fd_step.expect("checked at resolve");
            let mut steps = Vec::new();
            for &i in &r.params {
                let h = step.resolve(theta[i])?;
                let e = cfd_estimate(net, theta, x0, i, h, f, r.precision.unwrap(), &opts)?;
                report.rows.push(row(method, i, &e, 0, e.n, "finite-difference bias O(h^2)"));
                steps.push(json!({"param": i + 1, "h": h}));
            }
            report.diagnostics = json!({ "steps": steps });
        }
        Method::Oracle => {
            let (obs, t) = r.terminal_observable.clone().expect("checked at resolve");
            let start = Instant::now();
            let bx = oracle_box(r, t, cfg.cme.as_ref().cloned().unwrap_or_default())?;
            let h = cfg.cme.as_ref().and_then(|c| c.fd_step);
            for &i in &r.params {
                let v = cme_sensitivity(net, theta, x0, i, &obs, t, &bx, h, &CmeOptions::default())?;
                let e = Estimate::new(v, 0.0, 0, start.elapsed().as_secs_f64());
                report.rows.push(row(method, i, &e, 0, 0, "deterministic; truncated master equation"));
            }
            report.diagnostics = json!({ "box_upper": bx.upper, "untracked": bx.untracked });
        }
    }
    Ok(report)
}

fn oracle_box(r: &Resolved, t: f64, c: CmeConfig) -> Result<CmeBox> {
    let net = &r.model.network;
    let index = |s: &str| net.species_index(s).ok_or_else(|| Error::Config(format!("unknown species '{s}'")));
    let untracked = c.untracked.iter().map(|s| index(s)).collect::<Result<Vec<_>>>()?;
    let d = net.num_species();
    let mut upper = vec![None; d];
    for (s, v) in &c.upper {
        upper[index(s)?] = Some(*v);
    }
    let need_pilot = (0..d).any(|j| upper[j].is_none() && !untracked.contains(&j));
    let pilot = if need_pilot {
        Some(default_box(net, &r.model.theta, &r.model.x0, t, 200, r.config.seed, &SimOptions::default())?)
    } else {
        None
    };
    let upper = (0..d).map(|j| upper[j].unwrap_or_else(|| pilot.as_ref().map_or(0, |b| b.upper[j]))).collect();
    Ok(CmeBox::new(upper).with_untracked(untracked))
}

/// Strips a `.csv` or `.json` extension from an output prefix.
pub fn out_prefix(out: &str) -> PathBuf {
    let p = Path::new(out);
    match p.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => p.with_extension(""),
        _ => p.to_path_buf(),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Argument(format!("cannot write {}: {e}", path.display()))
}

/// Writes `<prefix>.csv` and `<prefix>.json`, plus sample paths when asked.
pub fn write_outputs(r: &Resolved, report: &Report, prefix: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let csv_path = with_suffix(prefix, ".csv");
    let json_path = with_suffix(prefix, ".json");
    std::fs::write(&csv_path, report.to_csv()?).map_err(|e| io_err(&csv_path, e))?;
    std::fs::write(&json_path, report.to_json()).map_err(|e| io_err(&json_path, e))?;
    let mut written = vec![csv_path, json_path];
    if let Some(n) = r.config.dump_paths {
        let m = &r.model;
        for k in 0..n {
            let mut s = StreamKey::new(r.config.seed, phase::PLAIN, k).arrivals(m.network.num_reactions());
            let path =
                simulate(&m.network, &m.theta, &m.x0, r.functional.horizon(), &mut s, &run_options(&r.config).sim)?;
            let file = with_suffix(prefix, &format!(".path{k}.csv"));
            let mut buf = Vec::new();
            path.write_csv(&mut buf, m.network.species()).map_err(|e| io_err(&file, e))?;
            std::fs::write(&file, buf).map_err(|e| io_err(&file, e))?;
            written.push(file);
        }
    }
    Ok(written)
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::NonInterruptive { .. } => 3,
        Error::Explosion { .. } => 4,
        Error::Truncation { .. } => 5,
        _ => 1,
    }
}
