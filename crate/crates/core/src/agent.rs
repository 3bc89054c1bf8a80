//! Per-agent perception and decision cycle.
//!
//! Every tick an agent perceives its surroundings, stores the physical
//! source distributions in memory and takes one step toward the candidate
//! position whose sign or spatial evidence is most decisive. Every `W`
//! ticks the full source matrix is fused and thresholded into a
//! macro-decision. Near the intersection (or at the deliberation deadline)
//! the agent commits to a route.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{
    fuse, fuse_detailed, macro_decide, ConfidenceOverRoutes, FusionError, MacroDecision,
    SourceMatrix, DEFAULT_EPSILON, DEFAULT_THETA,
};
use crate::geometry::{
    compute_isovist, line_of_sight, partition_fov, wrap_angle, Environment, GeometryError, Point2,
    DEFAULT_D_CAP,
};
use crate::info_sources::{
    f_crowd, f_mem, f_sign, f_space, observe, MemoryBuffer, Observation, RouteDistribution,
    SourceError, DEFAULT_LAMBDA, DEFAULT_SPACE_WEIGHTS,
};

/// Wall-clock length of one tick, used for speeds and reported times.
pub const TICK_SECONDS: f64 = 0.4;

/// Two candidate scores closer than this are treated as tied.
const SCORE_TIE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Source(#[from] SourceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Memory window `W`, also the macro-decision cadence in ticks.
    pub memory_window: usize,
    pub theta: f64,
    pub epsilon: f64,
    pub step_len: f64,
    pub lambda: f64,
    pub beta: f64,
    pub space_weights: [f64; 4],
    pub d_cap: f64,
    pub stop_radius: f64,
    pub max_deliberation_ticks: u64,
    pub candidate_headings: usize,
    /// Minimum distance a candidate position keeps from walls.
    pub clearance: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            fov: TAU / 3.0,
            memory_window: 3,
            theta: DEFAULT_THETA,
            epsilon: DEFAULT_EPSILON,
            step_len: 0.5,
            lambda: DEFAULT_LAMBDA,
            beta: 1.0,
            space_weights: DEFAULT_SPACE_WEIGHTS,
            d_cap: DEFAULT_D_CAP,
            stop_radius: 1.5,
            max_deliberation_ticks: 60,
            candidate_headings: 7,
            clearance: 0.02,
        }
    }
}

/// Immutable snapshot an agent perceives during one tick.
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    pub env: &'a Environment,
    pub crowd: &'a [Point2],
}

/// One fused evaluation recorded while deliberating.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroEvaluation {
    pub tick: u64,
    pub confidence: ConfidenceOverRoutes,
    pub decision: MacroDecision,
    /// Weight `Crd_i * (1 - H_i)` of each source row.
    pub source_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: Point2,
    pub heading: f64,
    /// Walking speed in m/s.
    pub speed: f64,
    pub memory: MemoryBuffer,
    pub tick: u64,
    pub committed_route: Option<usize>,
    pub commit_tick: Option<u64>,
    pub prediction_trace: Vec<MacroEvaluation>,
    /// Source matrix assembled at the latest tick.
    pub last_matrix: Option<SourceMatrix>,
}

impl AgentState {
    pub fn new(id: usize, position: Point2, heading: f64, cfg: &AgentConfig) -> Self {
        Self {
            id,
            position,
            heading,
            speed: cfg.step_len / TICK_SECONDS,
            memory: MemoryBuffer::new(cfg.memory_window),
            tick: 0,
            committed_route: None,
            commit_tick: None,
            prediction_trace: Vec::new(),
            last_matrix: None,
        }
    }

    pub fn is_committed(&self) -> bool {
        self.committed_route.is_some()
    }

    pub fn latest_evaluation(&self) -> Option<&MacroEvaluation> {
        self.prediction_trace.last()
    }

    /// Stores this tick's physical rows and builds the full source matrix
    /// (physical rows followed by the memory row).
    fn remember(
        &mut self,
        physical: Vec<RouteDistribution>,
        cfg: &AgentConfig,
    ) -> Result<SourceMatrix, AgentError> {
        self.memory.push(self.tick, physical.clone());
        let mem = f_mem(&self.memory, cfg.lambda)?;
        let mut rows = physical;
        rows.push(mem);
        let matrix = SourceMatrix::new(rows)?;
        self.last_matrix = Some(matrix.clone());
        Ok(matrix)
    }

    fn evaluate_if_due(&mut self, matrix: &SourceMatrix, cfg: &AgentConfig) -> Result<(), AgentError> {
        if !self.tick.is_multiple_of(cfg.memory_window.max(1) as u64) {
            return Ok(());
        }
        let b = fuse_detailed(matrix, cfg.epsilon)?;
        let decision = macro_decide(&b.confidence, cfg.theta);
        self.prediction_trace.push(MacroEvaluation {
            tick: self.tick,
            confidence: b.confidence,
            decision,
            source_weights: b.source_weights,
        });
        Ok(())
    }

    /// Final route: the latest confident macro-decision, otherwise the
    /// argmax of the latest fused confidence regardless of threshold.
    fn commit(&mut self, cfg: &AgentConfig) -> Result<(), AgentError> {
        let confident = self
            .prediction_trace
            .iter()
            .rev()
            .find_map(|e| e.decision.route());
        let route = match confident {
            Some(r) => r,
            None => match (self.prediction_trace.last(), &self.last_matrix) {
                (Some(e), _) => e.confidence.argmax(),
                (None, Some(m)) => fuse(m, cfg.epsilon)?.argmax(),
                (None, None) => 0,
            },
        };
        self.committed_route = Some(route);
        self.commit_tick = Some(self.tick);
        Ok(())
    }
}

/// Physical-source rows (sign, crowd, space) seen from one pose.
fn physical_rows(obs: &Observation, cfg: &AgentConfig) -> Vec<RouteDistribution> {
    vec![
        f_sign(obs),
        f_crowd(&obs.crowd_counts(), cfg.beta),
        f_space(&obs.measures(), &cfg.space_weights),
    ]
}

fn observe_from(
    world: &World<'_>,
    pos: Point2,
    heading: f64,
    crowd: &[Point2],
    tick: u64,
    cfg: &AgentConfig,
) -> Result<Observation, AgentError> {
    let iso = compute_isovist(world.env, pos, heading, cfg.fov, cfg.d_cap)?;
    let sectors = partition_fov(pos, heading, cfg.fov, &world.env.intersection)?;
    Ok(observe(world.env, &iso, &sectors, crowd, heading, tick))
}

/// Perceives from the agent's pose, records the physical rows in memory and
/// returns the observation with the 4-row matrix (sign, crowd, space, memory).
pub fn perceive(
    world: &World<'_>,
    state: &mut AgentState,
    cfg: &AgentConfig,
) -> Result<(Observation, SourceMatrix), AgentError> {
    let obs = observe_from(world, state.position, state.heading, world.crowd, state.tick, cfg)?;
    let matrix = state.remember(physical_rows(&obs, cfg), cfg)?;
    Ok((obs, matrix))
}

/// A neighboring position reachable in one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub position: Point2,
    pub heading: f64,
    /// Heading change relative to the current heading; positive is left.
    pub turn: f64,
}

/// `K` positions one step away, headings spread evenly over the view wedge.
/// Positions inside walls, too close to them, or behind them are dropped;
/// if all are dropped the current pose is the only candidate.
pub fn candidate_positions(env: &Environment, state: &AgentState, cfg: &AgentConfig) -> Vec<Candidate> {
    let k = cfg.candidate_headings.max(2);
    let half = cfg.fov.min(TAU) / 2.0;
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let turn = -half + cfg.fov.min(TAU) * i as f64 / (k - 1) as f64;
        let heading = wrap_angle(state.heading + turn);
        let p = Point2::from_polar(state.position, heading, cfg.step_len);
        if env.is_free(p)
            && env.wall_distance(p) > cfg.clearance
            && line_of_sight(env, state.position, p)
        {
            out.push(Candidate {
                position: p,
                heading,
                turn,
            });
        }
    }
    if out.is_empty() {
        // wait in place, turning toward the intersection so the next tick
        // offers a fresh fan of candidates
        let heading = state.position.bearing_to(env.intersection.center);
        out.push(Candidate {
            position: state.position,
            heading,
            turn: wrap_angle(heading - state.heading),
        });
    }
    out
}

/// Candidate score: the larger peak of the sign and space distributions.
fn candidate_score(world: &World<'_>, c: &Candidate, tick: u64, cfg: &AgentConfig) -> Option<f64> {
    let obs = observe_from(world, c.position, c.heading, &[], tick, cfg).ok()?;
    let sign = f_sign(&obs).max();
    let space = f_space(&obs.measures(), &cfg.space_weights).max();
    Some(sign.max(space))
}

/// Picks the candidate maximizing the sign/space peak; ties go to the
/// smallest turn, then to the left.
pub fn micro_decide(world: &World<'_>, state: &AgentState, cfg: &AgentConfig) -> Candidate {
    let scored = candidate_positions(world.env, state, cfg)
        .into_iter()
        .filter_map(|c| candidate_score(world, &c, state.tick, cfg).map(|s| (s, c)));
    select(scored).unwrap_or(Candidate {
        position: state.position,
        heading: state.heading,
        turn: 0.0,
    })
}

fn select(scored: impl IntoIterator<Item = (f64, Candidate)>) -> Option<Candidate> {
    let mut best: Option<(f64, Candidate)> = None;
    for (score, c) in scored {
        let better = match &best {
            None => true,
            Some((s, b)) => {
                if score > s + SCORE_TIE {
                    true
                } else if score < s - SCORE_TIE {
                    false
                } else if (c.turn.abs() - b.turn.abs()).abs() > 1e-12 {
                    c.turn.abs() < b.turn.abs()
                } else {
                    c.turn > b.turn
                }
            }
        };
        if better {
            best = Some((score, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Advances a deliberating agent by one tick in a geometric world.
pub fn tick(world: &World<'_>, mut state: AgentState, cfg: &AgentConfig) -> Result<AgentState, AgentError> {
    debug_assert!(!state.is_committed());
    state.tick += 1;
    let (_, matrix) = perceive(world, &mut state, cfg)?;
    let step = micro_decide(world, &state, cfg);
    state.position = step.position;
    state.heading = step.heading;
    state.evaluate_if_due(&matrix, cfg)?;
    let near = state.position.dist(world.env.intersection.center) <= cfg.stop_radius;
    if near || state.tick >= cfg.max_deliberation_ticks {
        state.commit(cfg)?;
    }
    Ok(state)
}

/// Advances an agent whose physical rows are supplied directly instead of
/// perceived. The agent does not move and commits at the deadline.
pub fn tick_with_rows(
    mut state: AgentState,
    physical: Vec<RouteDistribution>,
    cfg: &AgentConfig,
) -> Result<AgentState, AgentError> {
    debug_assert!(!state.is_committed());
    state.tick += 1;
    let matrix = state.remember(physical, cfg)?;
    state.evaluate_if_due(&matrix, cfg)?;
    if state.tick >= cfg.max_deliberation_ticks {
        state.commit(cfg)?;
    }
    Ok(state)
}

/// Mean normalized entropy of the fused confidence over a trace.
/// All-zero confidence counts as maximally uncertain.
pub fn prediction_entropy(trace: &[MacroEvaluation]) -> Option<f64> {
    if trace.is_empty() {
        return None;
    }
    let total: f64 = trace.iter().map(|e| evaluation_entropy(&e.confidence)).sum();
    Some(total / trace.len() as f64)
}

fn evaluation_entropy(g: &ConfidenceOverRoutes) -> f64 {
    let m = g.0.len();
    if m < 2 {
        return 0.0;
    }
    match g.normalized() {
        None => 1.0,
        Some(p) => {
            let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
            (h / (m as f64).log2()).clamp(0.0, 1.0)
        }
    }
}
