//! Built-in experiments: the eight two-route level combinations and the
//! memory-window sweep on the reference junction.

use serde::Serialize;

use crate::info_sources::{Level, SourceLevels};
use crate::Execution;

use super::engine::{run_with, SimError};
use super::scenario::{load_scenario, Scenario, ScenarioDoc, ScenarioError};
use super::sweep::{sweep_memory, SweepError, SweepRow};

pub const PRESET_NAMES: [&str; 2] = ["table1", "fig3"];

pub const REFERENCE_JUNCTION: &str = include_str!("../../scenarios/junction.json");
pub const JUNCTION_M4: &str = include_str!("../../scenarios/junction_m4.json");
pub const SCHEDULED_CHANGE: &str = include_str!("../../scenarios/scheduled_change.json");

pub const TABLE1_AGENTS: usize = 100;
pub const TABLE1_SEED: u64 = 2019;
pub const FIG3_WINDOWS: [usize; 6] = [1, 2, 3, 4, 5, 6];

/// One level combination with the published left/right shares.
#[derive(Debug, Clone, Copy)]
pub struct Table1Case {
    pub case: usize,
    pub label: &'static str,
    /// (sign, crowd, space) for the left route, then the right route.
    pub left: [Level; 3],
    pub right: [Level; 3],
    pub paper_left_pct: f64,
    pub paper_right_pct: f64,
}

use Level::{High, Low, Med, No, Yes};

pub const TABLE1: [Table1Case; 8] = [
    Table1Case { case: 1, label: "S+, C+, P+", left: [Yes, High, High], right: [No, Med, Med], paper_left_pct: 89.0, paper_right_pct: 11.0 },
    Table1Case { case: 2, label: "S+, C-, P+", left: [Yes, Low, Low], right: [No, High, High], paper_left_pct: 4.0, paper_right_pct: 96.0 },
    Table1Case { case: 3, label: "S+, C-, P-", left: [Yes, Med, Low], right: [No, High, High], paper_left_pct: 5.0, paper_right_pct: 95.0 },
    Table1Case { case: 4, label: "C-, P+", left: [No, Low, Med], right: [No, Med, Med], paper_left_pct: 5.0, paper_right_pct: 95.0 },
    Table1Case { case: 5, label: "C+, P+", left: [No, Low, High], right: [No, Med, Low], paper_left_pct: 6.0, paper_right_pct: 94.0 },
    Table1Case { case: 6, label: "C-, P+", left: [No, Low, High], right: [No, Low, Low], paper_left_pct: 27.0, paper_right_pct: 73.0 },
    Table1Case { case: 7, label: "C-, P-", left: [No, High, Med], right: [No, Low, High], paper_left_pct: 44.0, paper_right_pct: 56.0 },
    Table1Case { case: 8, label: "C+, P-", left: [No, High, Low], right: [No, Med, High], paper_left_pct: 11.0, paper_right_pct: 89.0 },
];

impl Table1Case {
    pub fn levels(&self) -> SourceLevels {
        SourceLevels {
            sign: vec![self.left[0], self.right[0]],
            crowd: vec![self.left[1], self.right[1]],
            space: vec![self.left[2], self.right[2]],
        }
    }

    pub fn paper_majority(&self) -> usize {
        usize::from(self.paper_right_pct > self.paper_left_pct)
    }

    /// Synthetic scenario for this case with all tunables at their defaults.
    pub fn scenario(&self, seed: u64) -> Scenario {
        self.scenario_with_levels(self.levels(), seed)
    }

    pub fn scenario_with_levels(&self, levels: SourceLevels, seed: u64) -> Scenario {
        let text = serde_json::json!({
            "mode": "synthetic",
            "agents": {"count": TABLE1_AGENTS},
            "synthetic": {"levels": levels, "label": format!("case {} ({})", self.case, self.label)},
            "seed": seed,
        });
        let doc: ScenarioDoc = serde_json::from_value(text).expect("preset document is well formed");
        Scenario::from_doc(doc).expect("preset levels are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub case: usize,
    pub label: String,
    pub left_pct: f64,
    pub right_pct: f64,
    pub paper_left_pct: f64,
    pub paper_right_pct: f64,
}

/// Runs all eight cases. Case `k` uses seed `seed + k`.
pub fn run_table1(seed: u64, exec: Execution) -> Result<Vec<Table1Row>, SimError> {
    TABLE1
        .iter()
        .map(|c| {
            let r = run_with(&c.scenario(seed.wrapping_add(c.case as u64)), exec)?;
            Ok(Table1Row {
                case: c.case,
                label: c.label.to_string(),
                left_pct: r.route_percent[0],
                right_pct: r.route_percent[1],
                paper_left_pct: c.paper_left_pct,
                paper_right_pct: c.paper_right_pct,
            })
        })
        .collect()
}

pub fn reference_junction() -> Result<Scenario, ScenarioError> {
    load_scenario(REFERENCE_JUNCTION)
}

/// Memory-window sweep over `W = 1..6` on the reference junction.
pub fn run_fig3(n_seeds: usize, exec: Execution) -> Result<Vec<SweepRow>, SweepError> {
    sweep_memory(&reference_junction()?, &FIG3_WINDOWS, n_seeds, exec)
}
