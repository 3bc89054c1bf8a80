//! Synchronous multi-agent runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::agent::{
    prediction_entropy, tick, tick_with_rows, AgentError, AgentState, MacroEvaluation, World,
    TICK_SECONDS,
};
use crate::geometry::{Point2, Rect};
use crate::info_sources::{levels_to_distributions, RouteDistribution, SourceError};
use crate::Execution;

use super::crowd::{step_crowd, CrowdState};
use super::scenario::{Mode, Scenario};

/// Rejection-sampling attempts per agent before giving up on a spawn region.
const SPAWN_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("no free spawn position found for agent {0}")]
    NoSpawnPosition(usize),
}

/// One row of an agent trajectory, written after the agent's tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub agent_id: usize,
    pub x: f64,
    pub y: f64,
    pub heading_rad: f64,
    /// Latest macro-decision, if any evaluation has happened yet.
    pub pred_route: Option<usize>,
    /// Largest fused confidence of the latest evaluation.
    pub pred_conf: f64,
    pub committed_route: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct AgentOutcome {
    pub id: usize,
    pub committed_route: Option<usize>,
    pub commit_tick: Option<u64>,
    pub trajectory: Vec<TrajectoryRow>,
    pub trace: Vec<MacroEvaluation>,
}

impl AgentOutcome {
    pub fn prediction_entropy(&self) -> Option<f64> {
        prediction_entropy(&self.trace)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub route_count: usize,
    pub agents: Vec<AgentOutcome>,
    pub route_counts: Vec<usize>,
    pub route_percent: Vec<f64>,
    /// Tick of the last commitment, in seconds.
    pub evac_time_s: f64,
    /// Mean over agents of the per-agent prediction entropy.
    pub mean_prediction_entropy: Option<f64>,
    /// Ids of agents still deliberating at the tick limit.
    pub uncommitted: Vec<usize>,
    pub seed: u64,
    pub config_echo: serde_json::Value,
}

impl RunResult {
    fn from_outcomes(scenario: &Scenario, agents: Vec<AgentOutcome>) -> Self {
        let m = scenario.route_count();
        let mut route_counts = vec![0usize; m];
        for r in agents.iter().filter_map(|a| a.committed_route) {
            route_counts[r] += 1;
        }
        let committed: usize = route_counts.iter().sum();
        let route_percent = route_counts
            .iter()
            .map(|&c| if committed == 0 { 0.0 } else { 100.0 * c as f64 / committed as f64 })
            .collect();
        let last_commit = agents.iter().filter_map(|a| a.commit_tick).max().unwrap_or(0);
        let entropies: Vec<f64> = agents.iter().filter_map(AgentOutcome::prediction_entropy).collect();
        let mean_prediction_entropy =
            (!entropies.is_empty()).then(|| entropies.iter().sum::<f64>() / entropies.len() as f64);
        let uncommitted = agents.iter().filter(|a| a.committed_route.is_none()).map(|a| a.id).collect();
        Self {
            route_count: m,
            agents,
            route_counts,
            route_percent,
            evac_time_s: last_commit as f64 * TICK_SECONDS,
            mean_prediction_entropy,
            uncommitted,
            seed: scenario.seed(),
            config_echo: config_echo(scenario),
        }
    }
}

/// Effective configuration of a run, enough to reproduce it together with
/// the scenario file.
pub fn config_echo(scenario: &Scenario) -> serde_json::Value {
    let doc = scenario.doc();
    serde_json::json!({
        "mode": doc.mode,
        "seed": doc.seed,
        "agents": doc.agents.count,
        "agent_config": scenario.agent_config(),
        "tunables": doc.tunables,
    })
}

/// Runs a scenario with the default execution strategy.
pub fn run(scenario: &Scenario) -> Result<RunResult, SimError> {
    run_with(scenario, Execution::default())
}

pub fn run_with(scenario: &Scenario, exec: Execution) -> Result<RunResult, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed());
    let spawns = spawn_poses(scenario, &mut rng)?;
    let outcomes = match scenario.mode() {
        Mode::Geometric => run_geometric(scenario, spawns, exec)?,
        Mode::Synthetic => run_synthetic(scenario, spawns, exec)?,
    };
    Ok(RunResult::from_outcomes(scenario, outcomes))
}

fn spawn_poses(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Result<Vec<(Point2, f64)>, SimError> {
    let n = scenario.agent_count();
    let Some(env) = scenario.environment() else {
        return Ok(vec![(Point2::new(0.0, 0.0), 0.0); n]);
    };
    let center = env.intersection.center;
    let clearance = scenario.agent_config().clearance;
    let region = env.spawn_regions.first().copied().unwrap_or_else(|| bounding_box(&env.walls()[0].vertices));
    (0..n)
        .map(|id| {
            for _ in 0..SPAWN_ATTEMPTS {
                let p = sample_rect(rng, &region);
                if env.is_free(p) && env.wall_distance(p) > clearance {
                    return Ok((p, p.bearing_to(center)));
                }
            }
            Err(SimError::NoSpawnPosition(id))
        })
        .collect()
}

fn sample_rect(rng: &mut ChaCha8Rng, r: &Rect) -> Point2 {
    let x = if r.max.x > r.min.x { rng.gen_range(r.min.x..r.max.x) } else { r.min.x };
    let y = if r.max.y > r.min.y { rng.gen_range(r.min.y..r.max.y) } else { r.min.y };
    Point2::new(x, y)
}

fn bounding_box(points: &[Point2]) -> Rect {
    let mut r = Rect {
        min: points[0],
        max: points[0],
    };
    for p in points {
        r.min.x = r.min.x.min(p.x);
        r.min.y = r.min.y.min(p.y);
        r.max.x = r.max.x.max(p.x);
        r.max.y = r.max.y.max(p.y);
    }
    r
}

fn trajectory_row(state: &AgentState) -> TrajectoryRow {
    let latest = state.latest_evaluation();
    TrajectoryRow {
        tick: state.tick,
        agent_id: state.id,
        x: state.position.x,
        y: state.position.y,
        heading_rad: state.heading,
        pred_route: latest.and_then(|e| e.decision.route()),
        pred_conf: latest.map_or(0.0, |e| e.confidence.max()),
        committed_route: state.committed_route,
    }
}

fn outcome(state: AgentState, trajectory: Vec<TrajectoryRow>) -> AgentOutcome {
    AgentOutcome {
        id: state.id,
        committed_route: state.committed_route,
        commit_tick: state.commit_tick,
        trajectory,
        trace: state.prediction_trace,
    }
}

fn run_geometric(
    scenario: &Scenario,
    spawns: Vec<(Point2, f64)>,
    exec: Execution,
) -> Result<Vec<AgentOutcome>, SimError> {
    let env = scenario.environment().expect("geometric scenarios carry an environment");
    let cfg = scenario.agent_config();
    let mut crowd = CrowdState::new(scenario);
    for _ in 0..scenario.doc().crowd.warmup_ticks {
        crowd = step_crowd(scenario, crowd);
    }

    let mut active: Vec<(AgentState, Vec<TrajectoryRow>)> = spawns
        .into_iter()
        .enumerate()
        .map(|(id, (p, h))| (AgentState::new(id, p, h, cfg), Vec::new()))
        .collect();
    let mut done = Vec::with_capacity(active.len());

    for _ in 0..scenario.doc().tunables.tick_limit {
        if active.is_empty() {
            break;
        }
        let positions = crowd.positions();
        let world = World { env, crowd: &positions };
        let advanced = exec.map(active, |(state, mut rows)| {
            let next = tick(&world, state, cfg)?;
            rows.push(trajectory_row(&next));
            Ok::<_, AgentError>((next, rows))
        });
        active = Vec::with_capacity(advanced.len());
        for item in advanced {
            let (state, rows) = item?;
            if state.is_committed() {
                done.push(outcome(state, rows));
            } else {
                active.push((state, rows));
            }
        }
        crowd = step_crowd(scenario, crowd);
    }
    done.extend(active.into_iter().map(|(s, rows)| outcome(s, rows)));
    done.sort_by_key(|o| o.id);
    Ok(done)
}

fn run_synthetic(
    scenario: &Scenario,
    spawns: Vec<(Point2, f64)>,
    exec: Execution,
) -> Result<Vec<AgentOutcome>, SimError> {
    let doc = scenario.doc();
    let levels = &doc.synthetic.as_ref().expect("synthetic scenarios carry levels").levels;
    let base = levels_to_distributions(levels, doc.tunables.v_table)?;
    let cfg = scenario.agent_config();
    let noise = doc.tunables.noise;
    let tick_limit = doc.tunables.tick_limit;
    let seed = doc.seed;

    let agents: Vec<(usize, Point2, f64)> = spawns.into_iter().enumerate().map(|(i, (p, h))| (i, p, h)).collect();
    let results = exec.map(agents, |(id, p, h)| {
        // agents are independent, so each gets its own random stream
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        let mut state = AgentState::new(id, p, h, cfg);
        let mut rows = Vec::new();
        while !state.is_committed() && state.tick < tick_limit {
            let physical = base.iter().map(|row| perturb(row, noise, &mut rng)).collect();
            state = tick_with_rows(state, physical, cfg)?;
            rows.push(trajectory_row(&state));
        }
        Ok::<_, AgentError>(outcome(state, rows))
    });
    results.into_iter().map(|r| r.map_err(SimError::from)).collect()
}

/// Adds independent uniform noise in `[-eta, eta]` to each entry, clips at
/// zero and renormalizes.
pub fn perturb(row: &RouteDistribution, eta: f64, rng: &mut impl Rng) -> RouteDistribution {
    if eta == 0.0 {
        return row.clone();
    }
    let noisy: Vec<f64> = row
        .as_slice()
        .iter()
        .map(|&p| (p + rng.gen_range(-eta..=eta)).max(0.0))
        .collect();
    RouteDistribution::from_weights(&noisy)
}
