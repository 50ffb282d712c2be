//! `freqsize`: single-scenario simulation, full grid sweeps, sizing and
//! verification of sized reserves.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use freqsize_core::report::{self, Manifest, MetricsBlock};
use freqsize_core::sweep::{self, heatmap, run_sweep_until, verify_rows, Surface};
use freqsize_core::{
    check_compliance, compute_h_eq, extract_metrics, generate_grid, simulate, GenerationMix,
    RunConfig, Scenario, SweepRow,
};

#[derive(Parser)]
#[command(
    name = "freqsize",
    version,
    about = "Frequency response and reserve sizing for low-inertia grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace and metrics.
    Simulate(SimulateArgs),
    /// Simulate, size and verify every scenario of the grid.
    Sweep(SweepArgs),
    /// Size virtual inertia and additional power for every grid scenario.
    Size(SizeArgs),
    /// Re-simulate scenarios with sized values from a rows file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// RES share of system capacity (pu).
    #[arg(long)]
    res: f64,
    /// Load step (pu of system capacity).
    #[arg(long)]
    imbalance: f64,
    /// Thermal inertia constant (s).
    #[arg(long)]
    ht: f64,
    /// Hydro inertia constant (s).
    #[arg(long)]
    hh: f64,
    /// Virtual inertia constant emulated by RES (s).
    #[arg(long, default_value_t = 0.0)]
    h_res: f64,
    /// Fast additional power (pu).
    #[arg(long, default_value_t = 0.0)]
    dp_add: f64,
    /// Trace CSV; metrics go to the same path with a `.metrics.json` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

/// Error tagged with the exit code it maps to.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

trait Tag<T> {
    fn config_err(self) -> Result<T, Failure>;
    fn runtime_err(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Tag<T> for Result<T, E> {
    fn config_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn runtime_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).config_err(),
        None => Ok(RunConfig::default()),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let mut mix = GenerationMix::from_res_level(args.res, cfg.grid.hydro_share, args.ht, args.hh);
    mix.h_res_virtual = args.h_res;
    let scenario = Scenario {
        id: sweep::scenario_id(args.res, args.imbalance, args.ht, args.hh),
        constants: cfg.system.clone(),
        mix,
        plants: cfg.plants.clone(),
        dp_imbalance: args.imbalance,
        t_event: cfg.event.t_event,
        dp_add: args.dp_add,
        t_add_lag: cfg.event.t_add_lag,
    };
    scenario.validate().config_err()?;

    let trace = simulate(&scenario).runtime_err()?;
    let metrics = extract_metrics(&trace, &cfg.rocof_limits).runtime_err()?;
    let compliance = check_compliance(&metrics, &cfg.rocof_limits, cfg.system.f0).runtime_err()?;
    let block = MetricsBlock {
        scenario_id: scenario.id.clone(),
        h_eq: compute_h_eq(&scenario.mix),
        metrics,
        compliance,
    };

    report::write_trace(create(&args.out).runtime_err()?, &trace).runtime_err()?;
    let metrics_path = args.out.with_extension("metrics.json");
    report::write_json(create(&metrics_path).runtime_err()?, &block).runtime_err()?;
    report::write_json(std::io::stdout().lock(), &block).runtime_err()?;
    Ok(())
}

fn install_interrupt() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = flag.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        handler_flag.store(true, Ordering::SeqCst);
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    flag
}

fn fname(v: f64) -> String {
    report::fmt_num(v)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let out_dir = args.out_dir.unwrap_or_else(|| cfg.output.dir.clone());
    let workers = args.workers.unwrap_or(cfg.output.workers);
    if workers == 0 {
        return Err(Failure::Config(anyhow!("workers must be at least 1")));
    }
    let spec = cfg.grid_spec();
    let scenarios = generate_grid(&spec).config_err()?;
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .runtime_err()?;

    let cancel = install_interrupt();
    let settings = cfg.sweep_settings(true);
    log::info!(
        "sweeping {} scenarios on {workers} worker(s)",
        scenarios.len()
    );
    let results = run_sweep_until(&scenarios, &settings, workers, &cancel);
    let rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    let complete = rows.len() == scenarios.len();

    let mut files = vec!["rows.csv".to_string()];
    let rows_path = out_dir.join("rows.csv");
    report::write_rows(
        create(&rows_path).runtime_err()?,
        &rows,
        &cfg.rocof_limits,
        true,
    )
    .runtime_err()?;

    if complete {
        // aggregate from the file so every summary number is recomputable from it
        let written = report::read_rows(File::open(&rows_path).runtime_err()?, &cfg.rocof_limits)
            .runtime_err()?;
        let summary = report::build_summary(&written);
        report::write_json(
            create(&out_dir.join("summary.json")).runtime_err()?,
            &summary,
        )
        .runtime_err()?;
        files.push("summary.json".into());

        let heat_dir = out_dir.join("heatmaps");
        let mut surfaces = vec![("nadir_hz".to_string(), Surface::Nadir)];
        for (i, w) in cfg.rocof_limits.windows().enumerate() {
            surfaces.push((format!("rocof_{}s", fname(w)), Surface::Rocof(i)));
        }
        surfaces.push(("h_res_s".into(), Surface::HRes));
        surfaces.push(("h_res_capped_s".into(), Surface::HResCapped));
        surfaces.push(("dp_add_pu".into(), Surface::DpAdd));
        for &ht in &spec.h_thermal_set {
            for &hh in &spec.h_hydro_set {
                for (name, surface) in &surfaces {
                    let map = heatmap(&written, &spec, ht, hh, *surface);
                    let file = format!("heatmaps/{name}_ht{}_hh{}.csv", fname(ht), fname(hh));
                    report::write_heatmap(create(&out_dir.join(&file)).runtime_err()?, &map)
                        .runtime_err()?;
                    files.push(file);
                }
            }
        }
        log::info!(
            "wrote {} heatmaps to {}",
            files.len() - 2,
            heat_dir.display()
        );
    }

    let manifest = Manifest {
        complete,
        rows_expected: scenarios.len(),
        rows_written: rows.len(),
        files,
    };
    report::write_json(
        create(&out_dir.join("manifest.json")).runtime_err()?,
        &manifest,
    )
    .runtime_err()?;

    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "{} of {} scenarios written to {} ({failed} failed)",
        rows.len(),
        scenarios.len(),
        out_dir.display()
    );
    if !complete {
        return Err(Failure::Runtime(anyhow!(
            "interrupted; partial results flushed"
        )));
    }
    Ok(())
}

fn cmd_size(args: SizeArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let workers = args.workers.unwrap_or(cfg.output.workers).max(1);
    let scenarios = generate_grid(&cfg.grid_spec()).config_err()?;
    let cancel = install_interrupt();
    let rows: Vec<SweepRow> =
        run_sweep_until(&scenarios, &cfg.sweep_settings(false), workers, &cancel)
            .into_iter()
            .flatten()
            .collect();
    report::write_rows(
        create(&args.out).runtime_err()?,
        &rows,
        &cfg.rocof_limits,
        false,
    )
    .runtime_err()?;
    let feasible = rows.iter().filter(|r| r.h_res_feasible).count();
    println!(
        "sized {} scenarios; {feasible} within the {} s virtual inertia cap",
        rows.len(),
        cfg.sizing.h_res_cap
    );
    if rows.len() != scenarios.len() {
        return Err(Failure::Runtime(anyhow!(
            "interrupted; partial results flushed"
        )));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let workers = args.workers.unwrap_or(cfg.output.workers).max(1);
    let file = File::open(&args.rows)
        .with_context(|| format!("opening {}", args.rows.display()))
        .config_err()?;
    let rows = report::read_rows(file, &cfg.rocof_limits).config_err()?;
    if rows.is_empty() {
        return Err(Failure::Config(anyhow!(
            "{} contains no rows",
            args.rows.display()
        )));
    }
    let grid = generate_grid(&cfg.grid_spec()).config_err()?;
    let by_id: HashMap<&str, &Scenario> = grid.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut scenarios = Vec::with_capacity(rows.len());
    for row in &rows {
        match by_id.get(row.id.as_str()) {
            Some(s) => scenarios.push((*s).clone()),
            None => {
                return Err(Failure::Config(anyhow!(
                    "row {} does not match any scenario of the configured grid",
                    row.id
                )))
            }
        }
    }

    let verified = verify_rows(&rows, &scenarios, &cfg.rocof_limits, workers);
    report::write_rows(
        create(&args.out).runtime_err()?,
        &verified,
        &cfg.rocof_limits,
        true,
    )
    .runtime_err()?;

    let checked: Vec<_> = verified
        .iter()
        .filter_map(|r| r.verified.as_ref())
        .collect();
    let pass = checked.iter().filter(|v| v.passes()).count();
    let nadir_ok = checked.iter().filter(|v| v.nadir_ok).count();
    println!(
        "verified {} rows: {pass} pass, {} fail ({nadir_ok} with nadir ok)",
        verified.len(),
        verified.len() - pass
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Size(a) => cmd_size(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Config(e) | Failure::Runtime(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
