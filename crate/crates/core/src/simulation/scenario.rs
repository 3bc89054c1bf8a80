//! Scenario documents (UTF-8 JSON) and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::AgentConfig;
use crate::fusion::{DEFAULT_EPSILON, DEFAULT_THETA};
use crate::geometry::{Environment, Exit, Intersection, Point2, Polygon, Rect, Sign, DEFAULT_D_CAP};
use crate::info_sources::{Level, SourceError, SourceLevels, DEFAULT_LAMBDA, DEFAULT_SPACE_WEIGHTS, DEFAULT_V_TABLE};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Geometric,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignDoc {
    pub pos: Point2,
    pub facing_deg: f64,
    pub target_route: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_vis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDoc {
    /// First polygon is the outer boundary, the rest are obstacles.
    pub walls: Vec<Vec<Point2>>,
    pub intersection: Intersection,
    #[serde(default)]
    pub signs: Vec<SignDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn_region: Option<Rect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exits: Vec<Exit>,
}

/// Optional per-scenario overrides of the agent's motion and perception.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_len: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_deliberation_ticks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_headings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsDoc {
    #[serde(default = "default_agent_count")]
    pub count: usize,
    #[serde(default)]
    pub config: AgentOverrides,
}

fn default_agent_count() -> usize {
    100
}

impl Default for AgentsDoc {
    fn default() -> Self {
        Self {
            count: default_agent_count(),
            config: AgentOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDoc {
    pub route: usize,
    /// Background agents spawned per tick.
    pub rate: f64,
    /// Walking speed, m/s.
    pub speed: f64,
    /// Polyline followed by the flow; defaults to center -> portal midpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Point2>>,
    /// Half-width of the uniform sideways offset of spawned agents, meters.
    #[serde(default)]
    pub lateral_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateChange {
    /// Run tick from which the new rate applies; warmup ticks do not count.
    pub tick: u64,
    /// Index into `crowd.flows`.
    pub flow: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrowdDoc {
    #[serde(default)]
    pub flows: Vec<FlowDoc>,
    #[serde(default)]
    pub schedule: Vec<RateChange>,
    /// Crowd ticks simulated before focal agents spawn.
    #[serde(default)]
    pub warmup_ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDoc {
    pub levels: SourceLevels,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tunables {
    pub theta: f64,
    pub memory_window: usize,
    pub lambda: f64,
    pub beta: f64,
    pub v_table: f64,
    pub space_weights: [f64; 4],
    pub d_cap: f64,
    /// Visibility range for signs that do not set their own.
    pub d_vis: f64,
    pub epsilon: f64,
    /// Half-width of the per-entry uniform noise in synthetic mode.
    pub noise: f64,
    pub tick_limit: u64,
}

impl Default for Tunables {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            memory_window: 3,
            lambda: DEFAULT_LAMBDA,
            beta: 1.0,
            v_table: DEFAULT_V_TABLE,
            space_weights: DEFAULT_SPACE_WEIGHTS,
            d_cap: DEFAULT_D_CAP,
            d_vis: 15.0,
            epsilon: DEFAULT_EPSILON,
            noise: 0.05,
            tick_limit: 500,
        }
    }
}

/// Raw scenario document, one-to-one with the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentDoc>,
    #[serde(default)]
    pub agents: AgentsDoc,
    #[serde(default)]
    pub crowd: CrowdDoc,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticDoc>,
    #[serde(default)]
    pub tunables: Tunables,
    #[serde(default)]
    pub seed: u64,
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    doc: ScenarioDoc,
    environment: Option<Environment>,
    agent_config: AgentConfig,
    route_count: usize,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    Scenario::from_doc(doc)
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        let t = &doc.tunables;
        if t.memory_window < 1 {
            return Err(ScenarioError::invalid("tunables.memory_window", "must be at least 1"));
        }
        if !(t.theta > 0.0 && t.theta <= 1.0) {
            return Err(ScenarioError::invalid("tunables.theta", "must lie in (0, 1]"));
        }
        if !(t.lambda > 0.0 && t.lambda < 1.0) {
            return Err(ScenarioError::invalid("tunables.lambda", "must lie in (0, 1)"));
        }
        if !(t.beta > 0.0) {
            return Err(ScenarioError::invalid("tunables.beta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&t.v_table) {
            return Err(ScenarioError::invalid("tunables.v_table", "must lie in [0, 1]"));
        }
        let wsum: f64 = t.space_weights.iter().sum();
        if t.space_weights.iter().any(|w| *w < 0.0) || (wsum - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::invalid(
                "tunables.space_weights",
                "weights must be non-negative and sum to 1",
            ));
        }
        if !(t.d_cap > 0.0) || !(t.d_vis > 0.0) || !(t.epsilon > 0.0) {
            return Err(ScenarioError::invalid(
                "tunables",
                "d_cap, d_vis and epsilon must be positive",
            ));
        }
        if !(t.noise >= 0.0) {
            return Err(ScenarioError::invalid("tunables.noise", "must be non-negative"));
        }

        let agent_config = build_agent_config(&doc)?;
        let environment = match &doc.environment {
            Some(e) => Some(build_environment(e, t.d_vis)?),
            None => None,
        };

        let route_count = match doc.mode {
            Mode::Geometric => {
                let env = environment.as_ref().ok_or_else(|| {
                    ScenarioError::invalid("environment", "required in geometric mode")
                })?;
                env.route_count()
            }
            Mode::Synthetic => {
                let syn = doc.synthetic.as_ref().ok_or_else(|| {
                    ScenarioError::invalid("synthetic", "required in synthetic mode")
                })?;
                syn.levels
                    .validate()
                    .map_err(|e| ScenarioError::invalid(levels_field(&e), e.to_string()))?;
                let m = syn.levels.route_count();
                if m < 2 {
                    return Err(ScenarioError::invalid("synthetic.levels", "at least two routes are required"));
                }
                if let Some(env) = &environment {
                    if env.route_count() != m {
                        return Err(ScenarioError::invalid(
                            "synthetic.levels",
                            format!("{m} routes, environment has {}", env.route_count()),
                        ));
                    }
                }
                m
            }
        };

        for (i, f) in doc.crowd.flows.iter().enumerate() {
            if f.route >= route_count {
                return Err(ScenarioError::invalid(
                    &format!("crowd.flows[{i}].route"),
                    format!("route {} out of range", f.route),
                ));
            }
            if !(f.rate >= 0.0) || !(f.speed >= 0.0) || !(f.lateral_jitter >= 0.0) {
                return Err(ScenarioError::invalid(
                    &format!("crowd.flows[{i}]"),
                    "rate, speed and lateral_jitter must be non-negative",
                ));
            }
            if let Some(path) = &f.path {
                if path.len() < 2 {
                    return Err(ScenarioError::invalid(
                        &format!("crowd.flows[{i}].path"),
                        "needs at least two points",
                    ));
                }
            }
        }
        for (i, c) in doc.crowd.schedule.iter().enumerate() {
            if c.flow >= doc.crowd.flows.len() {
                return Err(ScenarioError::invalid(
                    &format!("crowd.schedule[{i}].flow"),
                    format!("flow {} does not exist", c.flow),
                ));
            }
            if !(c.rate >= 0.0) {
                return Err(ScenarioError::invalid(&format!("crowd.schedule[{i}].rate"), "must be non-negative"));
            }
        }

        Ok(Self {
            doc,
            environment,
            agent_config,
            route_count,
        })
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn environment(&self) -> Option<&Environment> {
        self.environment.as_ref()
    }

    pub fn agent_config(&self) -> &AgentConfig {
        &self.agent_config
    }

    pub fn route_count(&self) -> usize {
        self.route_count
    }

    pub fn mode(&self) -> Mode {
        self.doc.mode
    }

    pub fn seed(&self) -> u64 {
        self.doc.seed
    }

    pub fn agent_count(&self) -> usize {
        self.doc.agents.count
    }

    /// Number of sources whose rows can carry evidence: memory, space, and
    /// sign and crowd when the scenario gives them something to report.
    pub fn active_sources(&self) -> usize {
        let (sign, crowd, space) = match self.doc.mode {
            Mode::Synthetic => {
                let l = &self.doc.synthetic.as_ref().expect("validated").levels;
                let varies = |row: &[Level]| row.windows(2).any(|w| w[0] != w[1]);
                (l.sign.contains(&Level::Yes), varies(&l.crowd), varies(&l.space))
            }
            Mode::Geometric => {
                let env = self.environment.as_ref().expect("validated");
                let crowd = self.doc.crowd.flows.iter().any(|f| f.rate > 0.0)
                    || self.doc.crowd.schedule.iter().any(|c| c.rate > 0.0);
                (!env.signs.is_empty(), crowd, true)
            }
        };
        1 + usize::from(sign) + usize::from(crowd) + usize::from(space)
    }

    /// Re-validates a modified copy of the document.
    pub fn modified(&self, edit: impl FnOnce(&mut ScenarioDoc)) -> Result<Self, ScenarioError> {
        let mut doc = self.doc.clone();
        edit(&mut doc);
        Self::from_doc(doc)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.doc.seed = seed;
        s
    }

    pub fn with_agents(&self, count: usize) -> Self {
        let mut s = self.clone();
        s.doc.agents.count = count;
        s
    }
}

fn levels_field(e: &SourceError) -> &'static str {
    match e {
        SourceError::BadLevel { source_name: "crowd", .. } => "synthetic.levels.crowd",
        SourceError::BadLevel { source_name: "space", .. } => "synthetic.levels.space",
        SourceError::RouteCountMismatch | SourceError::Empty => "synthetic.levels",
        _ => "synthetic.levels.sign",
    }
}

fn build_agent_config(doc: &ScenarioDoc) -> Result<AgentConfig, ScenarioError> {
    let t = &doc.tunables;
    let o = &doc.agents.config;
    let base = AgentConfig::default();
    let cfg = AgentConfig {
        fov: o.fov_deg.map_or(base.fov, f64::to_radians),
        memory_window: t.memory_window,
        theta: t.theta,
        epsilon: t.epsilon,
        step_len: o.step_len.unwrap_or(base.step_len),
        lambda: t.lambda,
        beta: t.beta,
        space_weights: t.space_weights,
        d_cap: t.d_cap,
        stop_radius: o.stop_radius.unwrap_or(base.stop_radius),
        max_deliberation_ticks: o.max_deliberation_ticks.unwrap_or(base.max_deliberation_ticks),
        candidate_headings: o.candidate_headings.unwrap_or(base.candidate_headings),
        clearance: o.clearance.unwrap_or(base.clearance),
    };
    if !(cfg.fov > 0.0 && cfg.fov <= std::f64::consts::TAU + 1e-12) {
        return Err(ScenarioError::invalid("agents.config.fov_deg", "must lie in (0, 360]"));
    }
    if !(cfg.step_len > 0.0) {
        return Err(ScenarioError::invalid("agents.config.step_len", "must be positive"));
    }
    if cfg.candidate_headings < 2 {
        return Err(ScenarioError::invalid("agents.config.candidate_headings", "must be at least 2"));
    }
    if !(cfg.stop_radius >= 0.0) || !(cfg.clearance >= 0.0) {
        return Err(ScenarioError::invalid(
            "agents.config",
            "stop_radius and clearance must be non-negative",
        ));
    }
    if cfg.max_deliberation_ticks < 1 {
        return Err(ScenarioError::invalid("agents.config.max_deliberation_ticks", "must be at least 1"));
    }
    Ok(cfg)
}

fn build_environment(e: &EnvironmentDoc, default_d_vis: f64) -> Result<Environment, ScenarioError> {
    let walls: Vec<Polygon> = e.walls.iter().cloned().map(Polygon::new).collect();
    let signs: Vec<Sign> = e
        .signs
        .iter()
        .map(|s| {
            let a = s.facing_deg.to_radians();
            Sign {
                position: s.pos,
                facing: Point2::new(a.cos(), a.sin()),
                target_route: s.target_route,
                d_vis: s.d_vis.unwrap_or(default_d_vis),
            }
        })
        .collect();
    let spawn: Vec<Rect> = e.spawn_region.into_iter().collect();
    let env = Environment::new(walls, e.intersection.clone(), signs, e.exits.clone(), spawn)
        .map_err(|err| ScenarioError::invalid("environment", err.to_string()))?;
    if let Some(r) = e.spawn_region {
        if !(r.min.x <= r.max.x && r.min.y <= r.max.y) {
            return Err(ScenarioError::invalid("environment.spawn_region", "min must not exceed max"));
        }
    }
    Ok(env)
}
