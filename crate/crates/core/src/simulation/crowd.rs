//! Background crowd: agents leaving the intersection along each route at
//! scheduled rates. They are perceived by focal agents but never decide.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::TICK_SECONDS;
use crate::geometry::Point2;

use super::scenario::Scenario;

/// Stream id reserved for crowd randomness, distinct from focal agents.
const CROWD_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Walker {
    pub flow: usize,
    /// Arc length travelled along the flow path, meters.
    pub travelled: f64,
    /// Signed sideways offset from the path, meters.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct CrowdState {
    pub tick: u64,
    pub walkers: Vec<Walker>,
    /// Current spawn rate of each flow, agents per tick.
    pub rates: Vec<f64>,
    /// Total agents spawned per flow.
    pub spawned: Vec<u64>,
    /// Total agents that reached the end of their path per flow.
    pub exited: Vec<u64>,
    accumulators: Vec<f64>,
    paths: Vec<FlowPath>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
struct FlowPath {
    points: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl FlowPath {
    fn new(points: Vec<Point2>) -> Self {
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + w[0].dist(w[1]));
        }
        Self { points, cumulative }
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn locate(&self, s: f64, offset: f64) -> Point2 {
        let seg = self
            .cumulative
            .windows(2)
            .position(|c| s <= c[1])
            .unwrap_or(self.points.len() - 2);
        let (a, b) = (self.points[seg], self.points[seg + 1]);
        let len = a.dist(b);
        if len == 0.0 {
            return a;
        }
        let dir = (b - a).scale(1.0 / len);
        let normal = Point2::new(-dir.y, dir.x);
        let along = (s - self.cumulative[seg]).clamp(0.0, len);
        a + dir.scale(along) + normal.scale(offset)
    }
}

impl CrowdState {
    pub fn new(scenario: &Scenario) -> Self {
        let flows = &scenario.doc().crowd.flows;
        let paths = flows
            .iter()
            .map(|f| {
                let points = match (&f.path, scenario.environment()) {
                    (Some(p), _) => p.clone(),
                    (None, Some(env)) => vec![
                        env.intersection.center,
                        env.intersection.routes[f.route].portal_midpoint(),
                    ],
                    (None, None) => vec![Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)],
                };
                FlowPath::new(points)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed());
        rng.set_stream(CROWD_STREAM);
        Self {
            tick: 0,
            walkers: Vec::new(),
            rates: flows.iter().map(|f| f.rate).collect(),
            spawned: vec![0; flows.len()],
            exited: vec![0; flows.len()],
            accumulators: vec![0.0; flows.len()],
            paths,
            rng,
        }
    }

    /// World positions of all walkers currently in transit.
    pub fn positions(&self) -> Vec<Point2> {
        self.walkers
            .iter()
            .map(|w| self.paths[w.flow].locate(w.travelled, w.offset))
            .collect()
    }

    pub fn in_transit(&self, flow: usize) -> usize {
        self.walkers.iter().filter(|w| w.flow == flow).count()
    }
}

/// Advances the crowd by one tick: applies rate changes scheduled for the
/// new tick, moves walkers, retires those past their path end and spawns new
/// ones from the fractional rate accumulators.
pub fn step_crowd(scenario: &Scenario, mut state: CrowdState) -> CrowdState {
    let doc = &scenario.doc().crowd;
    state.tick += 1;
    // schedule ticks count run ticks, after warmup
    let run_tick = state.tick.checked_sub(doc.warmup_ticks);
    for change in doc.schedule.iter().filter(|c| Some(c.tick) == run_tick) {
        state.rates[change.flow] = change.rate;
    }

    let paths = &state.paths;
    let mut exited = vec![0u64; doc.flows.len()];
    state.walkers.retain_mut(|w| {
        w.travelled += doc.flows[w.flow].speed * TICK_SECONDS;
        if w.travelled > paths[w.flow].length() {
            exited[w.flow] += 1;
            false
        } else {
            true
        }
    });
    for (total, n) in state.exited.iter_mut().zip(exited) {
        *total += n;
    }

    for (i, flow) in doc.flows.iter().enumerate() {
        state.accumulators[i] += state.rates[i];
        let n = state.accumulators[i].floor();
        state.accumulators[i] -= n;
        for _ in 0..n as u64 {
            let offset = if flow.lateral_jitter > 0.0 {
                state.rng.gen_range(-flow.lateral_jitter..=flow.lateral_jitter)
            } else {
                0.0
            };
            state.walkers.push(Walker {
                flow: i,
                travelled: 0.0,
                offset,
            });
            state.spawned[i] += 1;
        }
    }
    state
}
