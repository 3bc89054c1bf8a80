//! Constituent route-choice models: one probability distribution over the
//! `M` routes per information source.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    count_in_sector, isovist_measures, line_of_sight, wrap_angle, Environment, IsovistMeasures,
    IsovistPolygon, Point2, AngularSector, Sign,
};

/// Tolerance on the unit-sum constraint of a [`RouteDistribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("distribution needs at least one route")]
    Empty,
    #[error("entry {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("entries sum to {0}, expected 1")]
    BadSum(f64),
    #[error("memory buffer is empty")]
    EmptyMemory,
    #[error("level {level} is not valid for the {source_name} source")]
    BadLevel { source_name: &'static str, level: Level },
    #[error("sign levels mark {0} routes as Yes, at most one is allowed")]
    MultipleSigns(usize),
    #[error("level rows disagree on the route count")]
    RouteCountMismatch,
}

/// Probability over the `M` routes of an intersection.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RouteDistribution(Vec<f64>);

impl RouteDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self, SourceError> {
        if p.is_empty() {
            return Err(SourceError::Empty);
        }
        for (index, &value) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SourceError::OutOfRange { index, value });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SourceError::BadSum(sum));
        }
        Ok(Self(p))
    }

    /// Scales non-negative weights to unit sum; all-zero weights give uniform.
    pub fn from_weights(w: &[f64]) -> Self {
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            Self(w.iter().map(|x| x / total).collect())
        } else {
            Self::uniform(w.len())
        }
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn point_mass(m: usize, k: usize) -> Self {
        let mut p = vec![0.0; m];
        p[k] = 1.0;
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.0)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for RouteDistribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// The best sign visible toward one route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignSignal {
    pub sign_id: usize,
    pub view_angle: f64,
    pub distance: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteObservation {
    pub sign: Option<SignSignal>,
    pub crowd_count: usize,
    pub measures: IsovistMeasures,
}

/// Everything perceived from one location at one tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub routes: Vec<RouteObservation>,
    pub position: Point2,
    pub heading: f64,
    pub tick: u64,
}

impl Observation {
    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn crowd_counts(&self) -> Vec<usize> {
        self.routes.iter().map(|r| r.crowd_count).collect()
    }

    pub fn measures(&self) -> Vec<IsovistMeasures> {
        self.routes.iter().map(|r| r.measures).collect()
    }
}

/// Visibility in `[0, 1]` of `sign` from `pos` looking along `heading`.
///
/// Zero when the sign is occluded, outside the view wedge, or seen from
/// behind its face. Otherwise `cos(view angle) * (1 - d / d_vis)`, both
/// factors floored at zero.
pub fn sign_visibility(env: &Environment, pos: Point2, heading: f64, fov: f64, sign: &Sign) -> f64 {
    sign_signal(env, pos, heading, fov, sign).map_or(0.0, |(_, _, v)| v)
}

fn sign_signal(
    env: &Environment,
    pos: Point2,
    heading: f64,
    fov: f64,
    sign: &Sign,
) -> Option<(f64, f64, f64)> {
    let to_sign = sign.position - pos;
    let d = to_sign.norm();
    if d == 0.0 {
        return Some((0.0, 0.0, 1.0));
    }
    if sign.facing.dot(pos - sign.position) <= 0.0 {
        return None;
    }
    let view = wrap_angle(pos.bearing_to(sign.position) - heading);
    if view.abs() > fov / 2.0 + 1e-9 {
        return None;
    }
    if !line_of_sight(env, pos, sign.position) {
        return None;
    }
    let v = view.cos().max(0.0) * (1.0 - d / sign.d_vis).max(0.0);
    Some((view, d, v))
}

/// Signals of the strongest visible sign per route (ties to the lower sign id).
pub fn observe_signs(
    env: &Environment,
    pos: Point2,
    heading: f64,
    fov: f64,
) -> Vec<Option<SignSignal>> {
    let mut best: Vec<Option<SignSignal>> = vec![None; env.route_count()];
    for (sign_id, sign) in env.signs.iter().enumerate() {
        let Some((view_angle, distance, visibility)) = sign_signal(env, pos, heading, fov, sign)
        else {
            continue;
        };
        if visibility <= 0.0 {
            continue;
        }
        let slot = &mut best[sign.target_route];
        if slot.is_none_or(|s| visibility > s.visibility) {
            *slot = Some(SignSignal {
                sign_id,
                view_angle,
                distance,
                visibility,
            });
        }
    }
    best
}

/// Assembles an observation from an isovist and its per-route sectors.
pub fn observe(
    env: &Environment,
    iso: &IsovistPolygon,
    sectors: &[AngularSector],
    crowd: &[Point2],
    heading: f64,
    tick: u64,
) -> Observation {
    let signs = observe_signs(env, iso.apex, heading, iso.fov());
    let routes = sectors
        .iter()
        .zip(signs)
        .map(|(sector, sign)| RouteObservation {
            sign,
            crowd_count: count_in_sector(iso, sector, crowd),
            measures: isovist_measures(iso, sector),
        })
        .collect();
    Observation {
        routes,
        position: iso.apex,
        heading,
        tick,
    }
}

/// Sign model: the target route of the most visible sign gets
/// `1/M + v (1 - 1/M)`, the rest share the remainder evenly.
pub fn f_sign(obs: &Observation) -> RouteDistribution {
    let m = obs.route_count();
    let best = obs
        .routes
        .iter()
        .enumerate()
        .filter_map(|(route, r)| r.sign.map(|s| (route, s)))
        .fold(None::<(usize, SignSignal)>, |acc, (route, s)| match acc {
            Some((_, b))
                if b.visibility > s.visibility
                    || (b.visibility == s.visibility && b.sign_id < s.sign_id) =>
            {
                acc
            }
            _ => Some((route, s)),
        });
    match best {
        Some((route, s)) => sign_distribution(m, route, s.visibility),
        None => RouteDistribution::uniform(m),
    }
}

/// Interpolates between uniform (`v = 0`) and a point mass on `target` (`v = 1`).
pub fn sign_distribution(m: usize, target: usize, v: f64) -> RouteDistribution {
    let v = v.clamp(0.0, 1.0);
    if v == 0.0 {
        return RouteDistribution::uniform(m);
    }
    let base = 1.0 / m as f64;
    let pk = base + v * (1.0 - base);
    let rest = if m > 1 { (1.0 - pk) / (m - 1) as f64 } else { 0.0 };
    let mut p = vec![rest; m];
    p[target] = pk;
    RouteDistribution(p)
}

/// Default weights of (max radial, area, perimeter, occlusivity).
pub const DEFAULT_SPACE_WEIGHTS: [f64; 4] = [0.25; 4];

/// Spatial-layout model over per-route partial isovist measures.
///
/// Each measure is normalized across routes (uniform when it is zero for
/// every route) and the four shares are mixed with `weights`.
pub fn f_space(measures: &[IsovistMeasures], weights: &[f64; 4]) -> RouteDistribution {
    let m = measures.len();
    let mut p = vec![0.0; m];
    for (k, &w) in weights.iter().enumerate() {
        let column: Vec<f64> = measures.iter().map(|x| x.as_array()[k]).collect();
        let share = RouteDistribution::from_weights(&column);
        for (pi, si) in p.iter_mut().zip(share.as_slice()) {
            *pi += w * si;
        }
    }
    RouteDistribution::from_weights(&p)
}

/// Crowd model: Laplace-smoothed share of visible agents per route.
pub fn f_crowd(counts: &[usize], beta: f64) -> RouteDistribution {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64 + beta).collect();
    RouteDistribution::from_weights(&w)
}

/// Default recency decay of the memory source.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// The last `W` ticks of physical-source distributions, newest last.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBuffer {
    window: usize,
    entries: VecDeque<(u64, Vec<RouteDistribution>)>,
}

impl MemoryBuffer {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            entries: VecDeque::with_capacity(window.max(1)),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ticks(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|(t, _)| *t)
    }

    /// Appends one tick, evicting the oldest entry beyond the window.
    /// Ticks must be strictly increasing.
    pub fn push(&mut self, tick: u64, rows: Vec<RouteDistribution>) {
        debug_assert!(self.entries.back().is_none_or(|(t, _)| *t < tick));
        if self.entries.len() == self.window {
            self.entries.pop_front();
        }
        self.entries.push_back((tick, rows));
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, &[RouteDistribution])> {
        self.entries.iter().map(|(t, r)| (*t, r.as_slice()))
    }
}

/// Memory model: recency-weighted linear pool of the buffered ticks.
///
/// Each tick's rows are averaged, then tick `k` is weighted by
/// `lambda^age_k` normalized over the buffer.
pub fn f_mem(buf: &MemoryBuffer, lambda: f64) -> Result<RouteDistribution, SourceError> {
    let newest = buf.entries.back().ok_or(SourceError::EmptyMemory)?.0;
    let m = buf.entries[0].1[0].len();
    let mut acc = vec![0.0; m];
    let mut total = 0.0;
    for (tick, rows) in &buf.entries {
        let w = lambda.powi((newest - tick) as i32);
        total += w;
        let scale = w / rows.len() as f64;
        for row in rows {
            for (a, x) in acc.iter_mut().zip(row.as_slice()) {
                *a += scale * x;
            }
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(RouteDistribution::from_weights(&acc))
}

/// Qualitative source level used by the synthetic test-case encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Yes,
    No,
    High,
    Med,
    Low,
}

impl Level {
    fn weight(self) -> Option<f64> {
        match self {
            Level::High => Some(3.0),
            Level::Med => Some(2.0),
            Level::Low => Some(1.0),
            Level::Yes | Level::No => None,
        }
    }

    pub fn mirrored(levels: &[Level]) -> Vec<Level> {
        levels.iter().rev().copied().collect()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::Yes => "Yes",
            Level::No => "No",
            Level::High => "High",
            Level::Med => "Med",
            Level::Low => "Low",
        };
        f.write_str(s)
    }
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Yes" => Ok(Level::Yes),
            "No" => Ok(Level::No),
            "High" => Ok(Level::High),
            "Med" => Ok(Level::Med),
            "Low" => Ok(Level::Low),
            other => Err(format!("unknown level {other:?}")),
        }
    }
}

/// Per-route qualitative levels of the three physical sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLevels {
    pub sign: Vec<Level>,
    pub crowd: Vec<Level>,
    pub space: Vec<Level>,
}

impl SourceLevels {
    pub fn route_count(&self) -> usize {
        self.sign.len()
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        let m = self.sign.len();
        if m == 0 {
            return Err(SourceError::Empty);
        }
        if self.crowd.len() != m || self.space.len() != m {
            return Err(SourceError::RouteCountMismatch);
        }
        for &level in &self.sign {
            if !matches!(level, Level::Yes | Level::No) {
                return Err(SourceError::BadLevel {
                    source_name: "sign",
                    level,
                });
            }
        }
        for (name, row) in [("crowd", &self.crowd), ("space", &self.space)] {
            if let Some(&level) = row.iter().find(|l| l.weight().is_none()) {
                return Err(SourceError::BadLevel {
                    source_name: name,
                    level,
                });
            }
        }
        let yes = self.sign.iter().filter(|l| **l == Level::Yes).count();
        if yes > 1 {
            return Err(SourceError::MultipleSigns(yes));
        }
        Ok(())
    }

    /// Reverses the route order of every source.
    pub fn mirrored(&self) -> Self {
        Self {
            sign: Level::mirrored(&self.sign),
            crowd: Level::mirrored(&self.crowd),
            space: Level::mirrored(&self.space),
        }
    }
}

/// Default sign visibility assumed for a `Yes` level.
pub const DEFAULT_V_TABLE: f64 = 0.8;

/// Maps qualitative levels to (sign, crowd, space) distributions.
///
/// Crowd and space map High/Med/Low to weights 3/2/1 and normalize across
/// routes. A `Yes` sign yields the sign model at visibility `v_table`.
pub fn levels_to_distributions(
    levels: &SourceLevels,
    v_table: f64,
) -> Result<Vec<RouteDistribution>, SourceError> {
    levels.validate()?;
    let m = levels.route_count();
    let sign = match levels.sign.iter().position(|l| *l == Level::Yes) {
        Some(k) => sign_distribution(m, k, v_table),
        None => RouteDistribution::uniform(m),
    };
    let weights = |row: &[Level]| -> Vec<f64> { row.iter().filter_map(|l| l.weight()).collect() };
    Ok(vec![
        sign,
        RouteDistribution::from_weights(&weights(&levels.crowd)),
        RouteDistribution::from_weights(&weights(&levels.space)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intersection, Polygon, Route};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    fn obs_with_sign(m: usize, target: usize, v: f64) -> Observation {
        let mut routes = vec![
            RouteObservation {
                sign: None,
                crowd_count: 0,
                measures: IsovistMeasures::default(),
            };
            m
        ];
        routes[target].sign = Some(SignSignal {
            sign_id: 0,
            view_angle: 0.0,
            distance: 1.0,
            visibility: v,
        });
        Observation {
            routes,
            position: Point2::default(),
            heading: 0.0,
            tick: 0,
        }
    }

    fn hall_with_sign(sign_pos: Point2, facing: Point2) -> Environment {
        let outer = Polygon::new(vec![
            Point2::new(-10.0, -10.0),
            Point2::new(10.0, -10.0),
            Point2::new(10.0, 10.0),
            Point2::new(-10.0, 10.0),
        ]);
        let wall = Polygon::new(vec![
            Point2::new(4.0, -1.0),
            Point2::new(5.0, -1.0),
            Point2::new(5.0, 1.0),
            Point2::new(4.0, 1.0),
        ]);
        let inter = Intersection {
            center: Point2::new(0.0, 5.0),
            routes: vec![
                Route { id: 0, portal: [Point2::new(-9.0, 8.0), Point2::new(-8.0, 9.0)], label: None },
                Route { id: 1, portal: [Point2::new(8.0, 9.0), Point2::new(9.0, 8.0)], label: None },
            ],
        };
        let sign = Sign { position: sign_pos, facing, target_route: 0, d_vis: 8.0 };
        Environment::new(vec![outer, wall], inter, vec![sign], vec![], vec![]).unwrap()
    }

    #[test]
    fn sign_visibility_formula() {
        let env = hall_with_sign(Point2::new(0.0, 0.0), Point2::new(-1.0, 0.0));
        let fov = 120f64.to_radians();
        // sign at 60 degrees off heading, half the visibility range away
        let d = 4.0;
        let pos = Point2::new(-d * 60f64.to_radians().cos(), -d * 60f64.to_radians().sin());
        let v = sign_visibility(&env, pos, 0.0, fov, &env.signs[0]);
        assert!((v - 0.25).abs() < 1e-9, "{v}");
        // right in front and very close
        let v = sign_visibility(&env, Point2::new(-1e-6, 0.0), 0.0, fov, &env.signs[0]);
        assert!(v > 1.0 - 1e-6);
        // behind the face
        let v = sign_visibility(&env, Point2::new(1.0, 0.0), std::f64::consts::PI, fov, &env.signs[0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn occluded_sign_is_invisible() {
        let env = hall_with_sign(Point2::new(6.0, 0.0), Point2::new(-1.0, 0.0));
        let v = sign_visibility(&env, Point2::new(2.0, 0.0), 0.0, 2.0, &env.signs[0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sign_model_examples() {
        assert!(close(f_sign(&obs_with_sign(2, 0, 0.0)).as_slice(), &[0.5, 0.5]));
        assert!(close(f_sign(&obs_with_sign(2, 0, 1.0)).as_slice(), &[1.0, 0.0]));
        assert!(close(
            f_sign(&obs_with_sign(4, 2, 0.5)).as_slice(),
            &[0.125, 0.125, 0.625, 0.125]
        ));
        let mut none = obs_with_sign(2, 0, 0.3);
        none.routes[0].sign = None;
        assert!(close(f_sign(&none).as_slice(), &[0.5, 0.5]));
    }

    #[test]
    fn sign_model_prefers_lower_id_on_ties() {
        let mut obs = obs_with_sign(3, 2, 0.4);
        obs.routes[2].sign.as_mut().unwrap().sign_id = 5;
        obs.routes[1].sign = Some(SignSignal { sign_id: 1, view_angle: 0.0, distance: 1.0, visibility: 0.4 });
        assert_eq!(f_sign(&obs).argmax(), 1);
    }

    #[test]
    fn space_model_examples() {
        let b = IsovistMeasures { max_radial: 3.0, area: 5.0, perimeter: 7.0, occlusivity: 1.5 };
        let a = IsovistMeasures {
            max_radial: 6.0,
            area: 10.0,
            perimeter: 14.0,
            occlusivity: 3.0,
        };
        let p = f_space(&[a, b], &DEFAULT_SPACE_WEIGHTS);
        assert!(close(p.as_slice(), &[2.0 / 3.0, 1.0 / 3.0]));
        let p = f_space(&[a, IsovistMeasures::default()], &DEFAULT_SPACE_WEIGHTS);
        assert!(close(p.as_slice(), &[1.0, 0.0]));
        let p = f_space(&[b, b, b], &DEFAULT_SPACE_WEIGHTS);
        assert!(close(p.as_slice(), &[1.0 / 3.0; 3]));
    }

    #[test]
    fn space_model_zero_measure_column_is_uniform() {
        let a = IsovistMeasures { max_radial: 3.0, area: 0.0, perimeter: 0.0, occlusivity: 0.0 };
        let b = IsovistMeasures { max_radial: 1.0, ..a };
        let p = f_space(&[a, b], &[1.0, 0.0, 0.0, 0.0]);
        assert!(close(p.as_slice(), &[0.75, 0.25]));
        let p = f_space(&[a, b], &[0.0, 0.0, 0.0, 1.0]);
        assert!(close(p.as_slice(), &[0.5, 0.5]));
    }

    #[test]
    fn crowd_model_examples() {
        assert!(close(f_crowd(&[0, 0], 1.0).as_slice(), &[0.5, 0.5]));
        assert!(close(f_crowd(&[9, 4], 1.0).as_slice(), &[10.0 / 15.0, 5.0 / 15.0]));
        assert!(close(
            f_crowd(&[0, 0, 0, 12], 1.0).as_slice(),
            &[1.0 / 16.0, 1.0 / 16.0, 1.0 / 16.0, 13.0 / 16.0]
        ));
    }

    #[test]
    fn memory_examples() {
        let p = |v: Vec<f64>| RouteDistribution::new(v).unwrap();
        let mut buf = MemoryBuffer::new(1);
        buf.push(1, vec![p(vec![0.2, 0.8]), p(vec![0.6, 0.4])]);
        assert!(close(f_mem(&buf, 0.5).unwrap().as_slice(), &[0.4, 0.6]));

        let mut buf = MemoryBuffer::new(2);
        buf.push(1, vec![p(vec![1.0, 0.0])]);
        buf.push(2, vec![p(vec![0.0, 1.0])]);
        assert!(close(f_mem(&buf, 0.5).unwrap().as_slice(), &[1.0 / 3.0, 2.0 / 3.0]));

        let mut buf = MemoryBuffer::new(3);
        for t in 1..=5 {
            buf.push(t, vec![p(vec![0.3, 0.7])]);
        }
        assert_eq!(buf.len(), 3);
        assert_eq!(buf.ticks().collect::<Vec<_>>(), vec![3, 4, 5]);
        assert!(close(f_mem(&buf, 0.5).unwrap().as_slice(), &[0.3, 0.7]));

        assert_eq!(f_mem(&MemoryBuffer::new(3), 0.5).unwrap_err(), SourceError::EmptyMemory);
    }

    #[test]
    fn level_encodings() {
        use Level::*;
        let levels = SourceLevels { sign: vec![Yes, No], crowd: vec![High, Med], space: vec![Low, Low] };
        let rows = levels_to_distributions(&levels, 0.8).unwrap();
        assert!(close(rows[0].as_slice(), &[0.9, 0.1]));
        assert!(close(rows[1].as_slice(), &[0.6, 0.4]));
        assert!(close(rows[2].as_slice(), &[0.5, 0.5]));

        let two_yes = SourceLevels { sign: vec![Yes, Yes], ..levels.clone() };
        assert_eq!(levels_to_distributions(&two_yes, 0.8).unwrap_err(), SourceError::MultipleSigns(2));
        let bad = SourceLevels { crowd: vec![Yes, Low], ..levels };
        assert!(matches!(levels_to_distributions(&bad, 0.8), Err(SourceError::BadLevel { .. })));
    }

    #[test]
    fn distribution_validation() {
        assert!(RouteDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(matches!(RouteDistribution::new(vec![0.6, 0.6]), Err(SourceError::BadSum(_))));
        assert!(matches!(
            RouteDistribution::new(vec![1.5, -0.5]),
            Err(SourceError::OutOfRange { index: 0, .. })
        ));
        assert_eq!(RouteDistribution::new(vec![]), Err(SourceError::Empty));
    }

    fn is_distribution(p: &RouteDistribution) -> bool {
        let s: f64 = p.as_slice().iter().sum();
        (s - 1.0).abs() < SUM_TOLERANCE && p.as_slice().iter().all(|x| *x >= 0.0)
    }

    fn dist_strategy(m: usize) -> impl Strategy<Value = RouteDistribution> {
        prop::collection::vec(0.0f64..1.0, m).prop_map(|w| {
            if w.iter().sum::<f64>() == 0.0 {
                RouteDistribution::uniform(w.len())
            } else {
                RouteDistribution::from_weights(&w)
            }
        })
    }

    proptest! {
        #[test]
        fn sign_model_is_monotone(m in 2usize..7, v1 in 0.0f64..1.0, v2 in 0.0f64..1.0, t in 0usize..6) {
            let t = t % m;
            let (lo, hi) = if v1 < v2 { (v1, v2) } else { (v2, v1) };
            prop_assume!(hi - lo > 1e-9);
            let a = sign_distribution(m, t, lo);
            let b = sign_distribution(m, t, hi);
            prop_assert!(is_distribution(&a) && is_distribution(&b));
            prop_assert!(b[t] > a[t]);
        }

        #[test]
        fn crowd_model_is_permutation_equivariant(counts in prop::collection::vec(0usize..50, 2..7), rot in 0usize..7, beta in 0.1f64..5.0) {
            let p = f_crowd(&counts, beta);
            prop_assert!(is_distribution(&p));
            let k = rot % counts.len();
            let mut rotated = counts.clone();
            rotated.rotate_left(k);
            let q = f_crowd(&rotated, beta);
            let mut expect = p.as_slice().to_vec();
            expect.rotate_left(k);
            for (x, y) in q.as_slice().iter().zip(&expect) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }

        #[test]
        fn memory_stays_in_hull(rows in prop::collection::vec(dist_strategy(3), 1..6), lambda in 0.01f64..0.99) {
            let mut buf = MemoryBuffer::new(rows.len());
            for (t, r) in rows.iter().enumerate() {
                buf.push(t as u64, vec![r.clone()]);
            }
            let p = f_mem(&buf, lambda).unwrap();
            prop_assert!(is_distribution(&p));
            for k in 0..3 {
                let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(p[k] >= lo - 1e-12 && p[k] <= hi + 1e-12);
            }
        }

        #[test]
        fn space_model_is_a_distribution(vals in prop::collection::vec(0.0f64..20.0, 8..=24)) {
            let ms: Vec<IsovistMeasures> = vals.chunks_exact(4).map(|c| IsovistMeasures {
                max_radial: c[0], area: c[1], perimeter: c[2], occlusivity: c[3],
            }).collect();
            prop_assert!(is_distribution(&f_space(&ms, &DEFAULT_SPACE_WEIGHTS)));
        }
    }

    #[test]
    fn memory_decay_limits() {
        let p = |v: Vec<f64>| RouteDistribution::new(v).unwrap();
        let mut buf = MemoryBuffer::new(3);
        buf.push(1, vec![p(vec![1.0, 0.0])]);
        buf.push(2, vec![p(vec![0.5, 0.5])]);
        buf.push(3, vec![p(vec![0.0, 1.0])]);
        let near_one = f_mem(&buf, 1.0 - 1e-9).unwrap();
        assert!((near_one[0] - 0.5).abs() < 1e-6);
        let near_zero = f_mem(&buf, 1e-9).unwrap();
        assert!((near_zero[1] - 1.0).abs() < 1e-6);
    }
}
