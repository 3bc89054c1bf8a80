//! Scenario loading, world stepping, the background crowd, experiments and
//! result export.

pub mod crowd;
pub mod engine;
pub mod export;
pub mod presets;
pub mod scenario;
pub mod sweep;

pub use crowd::{step_crowd, CrowdState};
pub use engine::{run, run_with, AgentOutcome, RunResult, SimError, TrajectoryRow};
pub use export::{export_run, export_sweep, ExportError};
pub use scenario::{load_scenario, Mode, Scenario, ScenarioDoc, ScenarioError};
pub use sweep::{sweep_memory, SweepError, SweepRow};
