use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctmc_sens::model::{build_approx_process, builtin_names, check_non_interruptive, ScanBox};
use ctmc_sens::{Error, Result};
use ctmc_sens_cli::config::{FdStep, FunctionalConfig, ModelRef, ObservableConfig};
use ctmc_sens_cli::exec::{out_prefix, write_outputs};
use ctmc_sens_cli::reproduce::{reproduce, ReproduceOptions};
use ctmc_sens_cli::verify::{format_table, verify};
use ctmc_sens_cli::{execute, exit_code, ExperimentConfig, Method};

/// Parameter sensitivities of reaction-network Markov chains.
///
/// Every flag can also be set through an environment variable named
/// CTMC_SENS_ followed by the flag name in upper case with dashes replaced
/// by underscores, e.g. CTMC_SENS_WORKERS=4.
#[derive(Parser)]
#[command(name = "ctmc-sens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator and write CSV and JSON reports.
    Run(Box<RunArgs>),
    /// Re-run a scaled-down exhibit (fig1..fig5, dimer, table2).
    Reproduce(ReproduceArgs),
    /// Compare estimators with the closed forms and the master-equation oracle.
    Verify(VerifyArgs),
    /// Scan a model's approximate process for interruptions.
    Check(CheckArgs),
    /// List the builtin models.
    Models,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON); other flags override its fields.
    #[arg(long, env = "CTMC_SENS_CONFIG")]
    config: Option<PathBuf>,
    /// Builtin model name or model JSON file.
    #[arg(long, env = "CTMC_SENS_MODEL")]
    model: Option<String>,
    #[arg(long, env = "CTMC_SENS_METHOD")]
    method: Option<String>,
    /// One-based parameter index; repeat for several.
    #[arg(long = "param", env = "CTMC_SENS_PARAM", value_delimiter = ',')]
    params: Vec<usize>,
    /// Observed species of a terminal functional.
    #[arg(long, env = "CTMC_SENS_SPECIES")]
    species: Option<String>,
    /// Integrate the intensity of this one-based reaction over [0, time].
    #[arg(long, env = "CTMC_SENS_FLUX", conflicts_with = "species")]
    flux: Option<usize>,
    #[arg(long, env = "CTMC_SENS_TIME")]
    time: Option<f64>,
    /// Smoothing window w of the rpd methods.
    #[arg(long, env = "CTMC_SENS_WINDOW")]
    window: Option<f64>,
    /// Finite-difference step: absolute (0.05) or relative to theta_i (rel:0.01).
    #[arg(long, env = "CTMC_SENS_FD_STEP")]
    fd_step: Option<String>,
    #[arg(long, env = "CTMC_SENS_DELTA")]
    delta: Option<f64>,
    #[arg(long, env = "CTMC_SENS_BIG_M")]
    big_m: Option<f64>,
    /// One-based reactions left unfloored in the approximate process.
    #[arg(long, env = "CTMC_SENS_EXEMPT", value_delimiter = ',')]
    exempt: Option<Vec<usize>>,
    #[arg(long, env = "CTMC_SENS_PATHS", conflicts_with = "target_halfwidth")]
    paths: Option<u64>,
    #[arg(long, env = "CTMC_SENS_TARGET_HALFWIDTH")]
    target_halfwidth: Option<f64>,
    #[arg(long, env = "CTMC_SENS_SEED")]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, env = "CTMC_SENS_WORKERS")]
    workers: Option<usize>,
    /// Output prefix for <out>.csv and <out>.json; CSV goes to stdout otherwise.
    #[arg(long, env = "CTMC_SENS_OUT")]
    out: Option<String>,
    /// Also write this many sample paths as CSV next to the report.
    #[arg(long, env = "CTMC_SENS_DUMP_PATHS")]
    dump_paths: Option<u64>,
    /// Skip wall-clock timing.
    #[arg(long, env = "CTMC_SENS_NO_TIMING")]
    no_timing: bool,
    /// Abort when a path makes more jumps than this.
    #[arg(long, env = "CTMC_SENS_MAX_JUMPS")]
    max_jumps: Option<u64>,
}

#[derive(Args)]
struct ReproduceArgs {
    id: String,
    /// Output directory.
    #[arg(long, env = "CTMC_SENS_OUT", default_value = "reproduce")]
    out: PathBuf,
    /// Multiplies the fixed path counts.
    #[arg(long, env = "CTMC_SENS_SCALE", default_value_t = 1.0)]
    scale: f64,
    /// Target halfwidth of the efficiency exhibits relative to the reference.
    #[arg(long, env = "CTMC_SENS_REL_HALFWIDTH", default_value_t = 0.05)]
    rel_halfwidth: f64,
    #[arg(long, env = "CTMC_SENS_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "CTMC_SENS_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "CTMC_SENS_PATHS", default_value_t = 10_000)]
    paths: u64,
    #[arg(long, env = "CTMC_SENS_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "CTMC_SENS_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, env = "CTMC_SENS_MODEL")]
    model: String,
    #[arg(long, env = "CTMC_SENS_EXEMPT", value_delimiter = ',')]
    exempt: Option<Vec<usize>>,
    #[arg(long, env = "CTMC_SENS_DELTA")]
    delta: Option<f64>,
    #[arg(long, env = "CTMC_SENS_BIG_M")]
    big_m: Option<f64>,
    /// Scan states up to the initial state plus this much per species.
    #[arg(long, default_value_t = 20)]
    span: i64,
}

fn model_ref(s: &str) -> ModelRef {
    if builtin_names().contains(&s) {
        ModelRef::Builtin(s.into())
    } else {
        ModelRef::File { file: s.into() }
    }
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => read_config(path)?,
        None => {
            let need = |v: bool, flag: &str| {
                if v {
                    Ok(())
                } else {
                    Err(Error::Config(format!("--{flag} is required without --config")))
                }
            };
            need(a.model.is_some(), "model")?;
            need(a.method.is_some(), "method")?;
            need(a.time.is_some(), "time")?;
            need(a.species.is_some() || a.flux.is_some(), "species or --flux")?;
            ExperimentConfig {
                model: model_ref(a.model.as_deref().unwrap()),
                method: Method::parse(a.method.as_deref().unwrap())?,
                functional: FunctionalConfig::Terminal { observable: ObservableConfig::Constant(0.0), time: 0.0 },
                params: Vec::new(),
                theta: None,
                window: None,
                fd_step: None,
                delta: None,
                big_m: None,
                exempt: None,
                paths: None,
                target_halfwidth: None,
                pilot_paths: None,
                seed: 1,
                workers: 0,
                no_timing: false,
                max_jumps: None,
                cme: None,
                out: None,
                dump_paths: None,
            }
        }
    };
    if let Some(m) = &a.model {
        cfg.model = model_ref(m);
    }
    if let Some(m) = &a.method {
        cfg.method = Method::parse(m)?;
    }
    match (&a.species, a.flux, a.time) {
        (Some(s), _, Some(t)) => {
            cfg.functional = FunctionalConfig::Terminal { observable: ObservableConfig::Species(s.clone()), time: t }
        }
        (_, Some(k), Some(t)) => cfg.functional = FunctionalConfig::Flux { reaction: k, a: 0.0, b: t },
        (None, None, Some(t)) => match &mut cfg.functional {
            FunctionalConfig::Terminal { time, .. } => *time = t,
            FunctionalConfig::Integral { b, .. } | FunctionalConfig::Flux { b, .. } => *b = t,
        },
        (Some(_), _, None) | (_, Some(_), None) => {
            return Err(Error::Config("--species and --flux need --time".into()))
        }
        (None, None, None) => {}
    }
    if !a.params.is_empty() {
        cfg.params = a.params.clone();
    }
    if a.window.is_some() {
        cfg.window = a.window;
    }
    if let Some(s) = &a.fd_step {
        cfg.fd_step = Some(FdStep::parse(s)?);
    }
    if a.delta.is_some() {
        cfg.delta = a.delta;
    }
    if a.big_m.is_some() {
        cfg.big_m = a.big_m;
    }
    if a.exempt.is_some() {
        cfg.exempt = a.exempt.clone();
    }
    if a.paths.is_some() {
        cfg.paths = a.paths;
        cfg.target_halfwidth = None;
    }
    if a.target_halfwidth.is_some() {
        cfg.target_halfwidth = a.target_halfwidth;
        cfg.paths = None;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if a.dump_paths.is_some() {
        cfg.dump_paths = a.dump_paths;
    }
    cfg.no_timing |= a.no_timing;
    if a.max_jumps.is_some() {
        cfg.max_jumps = a.max_jumps;
    }
    Ok(cfg)
}

fn run(a: &RunArgs) -> Result<()> {
    let cfg = build_config(a)?;
    let resolved = cfg.resolve()?;
    if resolved.config.dump_paths.is_some() && resolved.config.out.is_none() {
        return Err(Error::Config("--dump-paths needs --out".into()));
    }
    let report = execute(&resolved)?;
    match &resolved.config.out {
        Some(out) => {
            for p in write_outputs(&resolved, &report, &out_prefix(out))? {
                eprintln!("wrote {}", p.display());
            }
            print!("{}", report.to_csv()?);
        }
        None => print!("{}", report.to_csv()?),
    }
    Ok(())
}

fn run_reproduce(a: &ReproduceArgs) -> Result<()> {
    let opts = ReproduceOptions { scale: a.scale, rel_halfwidth: a.rel_halfwidth, seed: a.seed, workers: a.workers };
    let bundle = reproduce(&a.id, &opts)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Argument(format!("cannot create {}: {e}", a.out.display())))?;
    let csv_path = a.out.join(format!("{}.csv", a.id));
    let json_path = a.out.join(format!("{}.json", a.id));
    let csv = bundle.to_csv()?;
    let write = |p: &PathBuf, s: &str| {
        std::fs::write(p, s).map_err(|e| Error::Argument(format!("cannot write {}: {e}", p.display())))
    };
    write(&csv_path, &csv)?;
    write(&json_path, &serde_json::to_string_pretty(&bundle).expect("bundle serializes"))?;
    print!("{csv}");
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<bool> {
    let rows = verify(a.paths, a.seed, a.workers)?;
    print!("{}", format_table(&rows));
    Ok(rows.iter().all(|r| r.ok))
}

fn run_check(a: &CheckArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_json(
        &serde_json::json!({
            "model": model_ref(&a.model),
            "method": "gs_hybrid",
            "functional": {"terminal": {"observable": {"constant": 0.0}, "time": 1.0}},
            "paths": 2,
        })
        .to_string(),
    )?;
    let mut cfg = cfg;
    cfg.exempt = a.exempt.clone();
    cfg.delta = a.delta;
    cfg.big_m = a.big_m;
    let r = cfg.resolve()?;
    let m = &r.model;
    let z = build_approx_process(&m.network, &m.approx)?;
    let region = ScanBox::new(vec![0; m.x0.len()], m.x0.iter().map(|v| v + a.span.max(0)).collect())?;
    let rep = check_non_interruptive(&z, &m.theta, &region, Some(&m.network))?;
    println!("model {}: {} states scanned", m.name, region.len());
    println!("non-interruptive: {}", rep.non_interruptive);
    println!("kink compatible: {}", rep.kink_compatible);
    println!("violations: {}", rep.violation_count);
    for v in rep.violations.iter().take(10) {
        println!("  state {:?}: reaction {} switches off reaction {}", v.state, v.interrupter + 1, v.interrupted + 1);
    }
    if !rep.non_interruptive {
        return Err(Error::NonInterruptive { pairs: Vec::new() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Reproduce(a) => run_reproduce(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
        Command::Check(a) => run_check(a).map(|_| true),
        Command::Models => {
            for n in builtin_names() {
                println!("{n}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
