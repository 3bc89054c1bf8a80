//! Command-line front end. Exit codes: 0 success, 1 input error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::simulation::export::write_csv;
use crate::simulation::presets::{run_fig3, run_table1, PRESET_NAMES, TABLE1_SEED};
use crate::simulation::{
    export_run, export_sweep, load_scenario, run, sweep_memory, ExportError, RunResult, Scenario, SweepError,
};
use crate::Execution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wayfind", version, about = "Agent wayfinding simulation at route intersections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trajectories.csv and metrics.json.
    Run(RunArgs),
    /// Sweep the memory window over several seeds and write sweep.csv.
    Sweep(SweepArgs),
    /// Run a built-in experiment (table1 or fig3).
    Preset(PresetArgs),
    /// Load and validate a scenario file without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub memory_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Memory windows to evaluate.
    #[arg(long = "w", value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Seed count for fig3; base seed for table1.
    #[arg(long)]
    pub seeds: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Export(#[from] ExportError),
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Export(_) => EXIT_IO,
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run(a) => cmd_run(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Preset(a) => cmd_preset(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    }
}

fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Input(format!("scenario not found: {}", path.display()))
        } else {
            CliError::Input(format!("cannot read scenario {}: {e}", path.display()))
        }
    })?;
    load_scenario(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let base = read_scenario(&a.scenario)?;
    let scenario = base
        .modified(|d| {
            if let Some(seed) = a.seed {
                d.seed = seed;
            }
            if let Some(n) = a.agents {
                d.agents.count = n;
            }
            if let Some(theta) = a.theta {
                d.tunables.theta = theta;
            }
            if let Some(w) = a.memory_window {
                d.tunables.memory_window = w;
            }
        })
        .map_err(|e| CliError::Input(e.to_string()))?;
    let result = run(&scenario).map_err(|e| CliError::Input(e.to_string()))?;
    export_run(&result, &a.out)?;
    let _ = writeln!(out, "{}", summary(&scenario, &result));
    Ok(())
}

fn route_label(scenario: &Scenario, r: usize) -> String {
    scenario
        .environment()
        .and_then(|e| e.intersection.routes[r].label.clone())
        .unwrap_or_else(|| format!("route {r}"))
}

/// One-line summary: route shares, evacuation time and commitment count.
pub fn summary(scenario: &Scenario, result: &RunResult) -> String {
    let shares: Vec<String> = result
        .route_percent
        .iter()
        .enumerate()
        .map(|(r, p)| format!("{} {p:.1}%", route_label(scenario, r)))
        .collect();
    let committed = result.agents.len() - result.uncommitted.len();
    format!(
        "routes: {} | evac {:.1} s | committed {committed}/{}",
        shares.join(" "),
        result.evac_time_s,
        result.agents.len()
    )
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.windows.is_empty() || a.seeds == 0 {
        return Err(CliError::Input("sweep needs at least one window and one seed".into()));
    }
    let mut scenario = read_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario = scenario.with_seed(seed);
    }
    let rows = sweep_memory(&scenario, &a.windows, a.seeds, Execution::default())?;
    let path = export_sweep(&rows, &a.out)?;
    let _ = writeln!(out, "wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn cmd_preset(a: PresetArgs, out: &mut dyn Write) -> Result<(), CliError> {
    match a.name.as_str() {
        "table1" => {
            let seed = a.seeds.unwrap_or(TABLE1_SEED);
            let rows = run_table1(seed, Execution::default()).map_err(|e| CliError::Input(e.to_string()))?;
            fs::create_dir_all(&a.out).map_err(|source| ExportError::Io {
                path: a.out.clone(),
                source,
            })?;
            let path = a.out.join("table1.csv");
            write_csv(&rows, &path)?;
            for r in &rows {
                let _ = writeln!(
                    out,
                    "case {} ({}): L {:.0}% R {:.0}% | paper L {:.0}% R {:.0}%",
                    r.case, r.label, r.left_pct, r.right_pct, r.paper_left_pct, r.paper_right_pct
                );
            }
            let _ = writeln!(out, "wrote {}", path.display());
            Ok(())
        }
        "fig3" => {
            let seeds = a.seeds.unwrap_or(20) as usize;
            if seeds == 0 {
                return Err(CliError::Input("fig3 needs at least one seed".into()));
            }
            let rows = run_fig3(seeds, Execution::default())?;
            let path = export_sweep(&rows, &a.out)?;
            for r in &rows {
                let _ = writeln!(out, "W={} entropy {:.4} ± {:.4}", r.memory_window, r.mean_entropy, r.std_entropy);
            }
            let _ = writeln!(out, "wrote {}", path.display());
            Ok(())
        }
        other => Err(CliError::Input(format!(
            "unknown preset `{other}`; valid names: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = read_scenario(&a.scenario)?;
    let _ = writeln!(
        out,
        "OK: M={} routes, N={} active sources, {} agents, {:?} mode",
        s.route_count(),
        s.active_sources(),
        s.agent_count(),
        s.mode()
    );
    Ok(())
}
