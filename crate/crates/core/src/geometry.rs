//! Planar environment model and isovist (visibility polygon) analysis.
//!
//! Walls are simple polygons: the first one is the outer boundary of the
//! walkable area, every following polygon is an obstacle. Isovists are
//! computed by an angular sweep over wall vertices with exact ray/segment
//! intersection, clipped to a field-of-view wedge and a maximum sight
//! distance. Circular cap arcs are approximated by chords.

use std::f64::consts::{PI, TAU};
use std::ops;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for vertex grazing and collinearity, in meters.
pub const EPS_GEOM: f64 = 1e-9;

/// Default ray cap for isovists, in meters.
pub const DEFAULT_D_CAP: f64 = 50.0;

/// Angular step used to approximate cap arcs by chords.
const ARC_STEP: f64 = PI / 180.0;

const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x:.3}, {y:.3}) is not in free space")]
    NotInFreeSpace { x: f64, y: f64 },
    #[error("field of view must lie in (0, 2pi], got {0}")]
    InvalidFov(f64),
    #[error("ray cap must be positive, got {0}")]
    InvalidCap(f64),
    #[error("routes {0} and {1} have identical bearing from the viewpoint")]
    DegenerateBearing(usize, usize),
    #[error("{0}")]
    InvalidEnvironment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl ops::Add for Point2 {
    type Output = Point2;

    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl ops::Sub for Point2 {
    type Output = Point2;

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(origin: Point2, angle: f64, r: f64) -> Self {
        Self::new(origin.x + r * angle.cos(), origin.y + r * angle.sin())
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Bearing of `o` seen from `self`, in `(-pi, pi]`.
    pub fn bearing_to(self, o: Point2) -> f64 {
        let d = o - self;
        d.y.atan2(d.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return p.dist(self.a);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        p.dist(self.a + d.scale(t))
    }

    /// Minimum distance between two segments; zero when they cross.
    pub fn distance_to_segment(&self, o: &Segment) -> f64 {
        if self.crosses(o) {
            return 0.0;
        }
        self.distance_to_point(o.a)
            .min(self.distance_to_point(o.b))
            .min(o.distance_to_point(self.a))
            .min(o.distance_to_point(self.b))
    }

    fn crosses(&self, o: &Segment) -> bool {
        let d1 = orient(o.a, o.b, self.a);
        let d2 = orient(o.a, o.b, self.b);
        let d3 = orient(self.a, self.b, o.a);
        let d4 = orient(self.a, self.b, o.b);
        ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    }

    /// Distance along the unit ray `origin + t * dir` to this segment.
    fn ray_hit(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            return None;
        }
        let w = self.a - origin;
        let t = w.cross(e) / denom;
        let u = w.cross(dir) / denom;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            Some(t)
        } else {
            None
        }
    }

    /// Distance along the unit ray to the supporting line of this segment.
    fn ray_line_hit(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            return None;
        }
        Some((self.a - origin).cross(e) / denom)
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    /// Shoelace area, positive for counter-clockwise winding.
    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|s| s.length()).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd point containment; boundary points are unspecified.
    pub fn contains(&self, p: Point2) -> bool {
        point_in_ring(&self.vertices, p)
    }

    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|e| e.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<Segment> = self.edges().collect();
        let n = edges.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if edges[i].distance_to_segment(&edges[j]) <= EPS_GEOM {
                    return false;
                }
            }
        }
        true
    }
}

fn shoelace(pts: &[Point2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * s
}

fn point_in_ring(pts: &[Point2], p: Point2) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (pi, pj) = (pts[i], pts[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = pj.x + (p.y - pj.y) / (pi.y - pj.y) * (pi.x - pj.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: usize,
    pub portal: [Point2; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Route {
    pub fn portal_segment(&self) -> Segment {
        Segment::new(self.portal[0], self.portal[1])
    }

    pub fn portal_midpoint(&self) -> Point2 {
        self.portal[0].midpoint(self.portal[1])
    }
}

/// A decision point with `M` route choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub center: Point2,
    pub routes: Vec<Route>,
}

impl Intersection {
    pub fn route_count(&self) -> usize {
        self.routes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sign {
    pub position: Point2,
    /// Unit vector the sign face points toward.
    pub facing: Point2,
    pub target_route: usize,
    pub d_vis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exit {
    pub label: String,
    pub pos: Point2,
}

/// Walkable layout around one intersection.
#[derive(Debug, Clone)]
pub struct Environment {
    walls: Vec<Polygon>,
    pub intersection: Intersection,
    pub signs: Vec<Sign>,
    pub exits: Vec<Exit>,
    pub spawn_regions: Vec<Rect>,
    segments: Vec<Segment>,
    vertices: Vec<Point2>,
}

impl Environment {
    /// Builds and validates an environment. `walls[0]` is the outer boundary.
    pub fn new(
        walls: Vec<Polygon>,
        intersection: Intersection,
        signs: Vec<Sign>,
        exits: Vec<Exit>,
        spawn_regions: Vec<Rect>,
    ) -> Result<Self, GeometryError> {
        let invalid = |m: String| Err(GeometryError::InvalidEnvironment(m));
        if walls.is_empty() {
            return invalid("walls: an outer boundary polygon is required".into());
        }
        for (i, w) in walls.iter().enumerate() {
            if w.vertices.iter().any(|p| !p.is_finite()) {
                return invalid(format!("walls[{i}]: non-finite coordinate"));
            }
            if !w.is_simple() {
                return invalid(format!("walls[{i}]: polygon is not simple"));
            }
        }
        for i in 0..walls.len() {
            for j in (i + 1)..walls.len() {
                let touching = walls[i].edges().any(|a| {
                    walls[j]
                        .edges()
                        .any(|b| a.distance_to_segment(&b) <= EPS_GEOM)
                });
                if touching {
                    return invalid(format!("walls[{i}] and walls[{j}] intersect"));
                }
            }
        }
        let segments: Vec<Segment> = walls.iter().flat_map(|w| w.edges()).collect();
        let vertices: Vec<Point2> = walls.iter().flat_map(|w| w.vertices.clone()).collect();
        let env = Self {
            walls,
            intersection,
            signs,
            exits,
            spawn_regions,
            segments,
            vertices,
        };
        env.validate_intersection()?;
        for (i, s) in env.signs.iter().enumerate() {
            if s.target_route >= env.intersection.route_count() {
                return invalid(format!(
                    "signs[{i}].target_route: {} out of range",
                    s.target_route
                ));
            }
            if !(s.d_vis > 0.0) {
                return invalid(format!("signs[{i}].d_vis must be positive"));
            }
        }
        Ok(env)
    }

    fn validate_intersection(&self) -> Result<(), GeometryError> {
        let routes = &self.intersection.routes;
        let invalid = |m: String| Err(GeometryError::InvalidEnvironment(m));
        if routes.len() < 2 {
            return invalid("intersection.routes: at least two routes are required".into());
        }
        for (i, r) in routes.iter().enumerate() {
            if r.id != i {
                return invalid(format!(
                    "intersection.routes.id: ids must be contiguous from 0, found {} at position {i}",
                    r.id
                ));
            }
            if !self.is_free(r.portal_midpoint()) {
                return invalid(format!(
                    "intersection.routes.portal: route {} portal is not in free space",
                    r.id
                ));
            }
        }
        for i in 0..routes.len() {
            for j in (i + 1)..routes.len() {
                let d = routes[i]
                    .portal_segment()
                    .distance_to_segment(&routes[j].portal_segment());
                if d <= EPS_GEOM {
                    return invalid(format!(
                        "intersection.routes.portal: portals of routes {i} and {j} overlap"
                    ));
                }
            }
        }
        if !self.is_free(self.intersection.center) {
            return invalid("intersection.center: not in free space".into());
        }
        Ok(())
    }

    pub fn walls(&self) -> &[Polygon] {
        &self.walls
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn route_count(&self) -> usize {
        self.intersection.route_count()
    }

    /// Distance from `p` to the nearest wall edge.
    pub fn wall_distance(&self, p: Point2) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inside the outer boundary, outside every obstacle, and off all walls.
    pub fn is_free(&self, p: Point2) -> bool {
        if !p.is_finite() || !self.walls[0].contains(p) {
            return false;
        }
        if self.walls[1..].iter().any(|w| w.contains(p)) {
            return false;
        }
        self.wall_distance(p) > EPS_GEOM
    }
}

/// True iff segment `ab` clears every wall by more than [`EPS_GEOM`].
/// Grazing contact with a wall vertex or edge counts as blocked.
pub fn line_of_sight(env: &Environment, a: Point2, b: Point2) -> bool {
    let ab = Segment::new(a, b);
    env.segments
        .iter()
        .all(|s| ab.distance_to_segment(s) > EPS_GEOM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Wall,
    Occluding,
    FovLimit,
}

#[derive(Debug, Clone, Copy)]
struct RimVertex {
    p: Point2,
    angle: f64,
}

/// Visible region from an apex, star-shaped with respect to it.
#[derive(Debug, Clone)]
pub struct IsovistPolygon {
    pub apex: Point2,
    /// Polygon vertices in counter-clockwise order. The apex is the first
    /// vertex unless the view is a full circle.
    pub boundary: Vec<Point2>,
    /// `edge_kinds[i]` tags the edge `boundary[i] -> boundary[i + 1]` (cyclic).
    pub edge_kinds: Vec<EdgeKind>,
    start: f64,
    fov: f64,
    rim: Vec<RimVertex>,
    rim_kinds: Vec<EdgeKind>,
}

impl IsovistPolygon {
    pub fn is_full_circle(&self) -> bool {
        self.fov >= TAU - ANGLE_EPS
    }

    /// Lower wedge bound; the wedge spans `[start_angle, start_angle + fov]`.
    pub fn start_angle(&self) -> f64 {
        self.start
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.boundary).abs()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Segment, EdgeKind)> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| {
            (
                Segment::new(self.boundary[i], self.boundary[(i + 1) % n]),
                self.edge_kinds[i],
            )
        })
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(s, _)| s.length()).sum()
    }

    pub fn edge_length(&self, kind: EdgeKind) -> f64 {
        self.edges()
            .filter(|(_, k)| *k == kind)
            .map(|(s, _)| s.length())
            .sum()
    }

    /// Measures of the whole isovist.
    pub fn measures(&self) -> IsovistMeasures {
        measures_of(self.apex, &self.boundary, &self.edge_kinds)
    }

    /// Boundary of the partial isovist inside `sector`, apex first.
    /// Returns `None` when the partial isovist is empty.
    pub fn restrict(&self, sector: &AngularSector) -> Option<(Vec<Point2>, Vec<EdgeKind>)> {
        let (a, b) = self.sector_bounds(sector)?;
        let mut pts: Vec<Point2> = Vec::new();
        let mut kinds: Vec<EdgeKind> = Vec::new();
        let shifts: &[f64] = if self.is_full_circle() { &[0.0, TAU] } else { &[0.0] };
        let n = self.rim.len();
        let edge_count = if self.is_full_circle() { n } else { n - 1 };
        for &shift in shifts {
            for i in 0..edge_count {
                let v0 = self.rim[i];
                let v1 = if i + 1 < n {
                    self.rim[i + 1]
                } else {
                    // seam edge of a full circle, back to the first rim vertex
                    RimVertex {
                        p: self.rim[0].p,
                        angle: self.rim[0].angle + TAU,
                    }
                };
                let (t0, t1) = (v0.angle + shift, v1.angle + shift);
                let kind = self.rim_kinds[i];
                if (t1 - t0).abs() <= ANGLE_EPS {
                    if t0 > a + ANGLE_EPS && t0 < b - ANGLE_EPS {
                        push_edge(&mut pts, &mut kinds, v0.p, v1.p, kind);
                    }
                    continue;
                }
                let lo = t0.max(a);
                let hi = t1.min(b);
                if hi - lo <= ANGLE_EPS {
                    continue;
                }
                let seg = Segment::new(v0.p, v1.p);
                let q0 = if lo == t0 { v0.p } else { self.point_at(&seg, lo) };
                let q1 = if hi == t1 { v1.p } else { self.point_at(&seg, hi) };
                push_edge(&mut pts, &mut kinds, q0, q1, kind);
            }
        }
        if pts.len() < 2 {
            return None;
        }
        // pts holds rim points, kinds the edges between consecutive ones
        let mut boundary = Vec::with_capacity(pts.len() + 1);
        boundary.push(self.apex);
        boundary.extend(pts);
        let mut edge_kinds = Vec::with_capacity(boundary.len());
        edge_kinds.push(EdgeKind::FovLimit);
        edge_kinds.extend(kinds);
        edge_kinds.push(EdgeKind::FovLimit);
        Some((boundary, edge_kinds))
    }

    fn point_at(&self, seg: &Segment, angle: f64) -> Point2 {
        let dir = Point2::new(angle.cos(), angle.sin());
        match seg.ray_line_hit(self.apex, dir) {
            Some(t) => self.apex + dir.scale(t),
            None => seg.a,
        }
    }

    /// Maps a sector into this isovist's unwrapped angle frame.
    fn sector_bounds(&self, sector: &AngularSector) -> Option<(f64, f64)> {
        let width = sector.width();
        if width <= ANGLE_EPS {
            return None;
        }
        let mut a = self.start + (sector.start - self.start).rem_euclid(TAU);
        if a >= self.start + TAU - 1e-9 {
            a -= TAU;
        }
        let mut b = a + width.min(TAU);
        if !self.is_full_circle() {
            let end = self.start + self.fov;
            if a < self.start {
                a = self.start;
            }
            b = b.min(end);
            if b - a <= ANGLE_EPS {
                return None;
            }
        }
        Some((a, b))
    }
}

fn push_edge(
    pts: &mut Vec<Point2>,
    kinds: &mut Vec<EdgeKind>,
    p0: Point2,
    p1: Point2,
    kind: EdgeKind,
) {
    match pts.last() {
        None => pts.push(p0),
        Some(last) if last.dist(p0) > 1e-9 => {
            // only reachable through rounding at a clip angle
            kinds.push(EdgeKind::Occluding);
            pts.push(p0);
        }
        Some(_) => {}
    }
    kinds.push(kind);
    pts.push(p1);
}

fn measures_of(apex: Point2, boundary: &[Point2], kinds: &[EdgeKind]) -> IsovistMeasures {
    let n = boundary.len();
    if n < 3 {
        return IsovistMeasures::default();
    }
    let mut perimeter = 0.0;
    let mut occlusivity = 0.0;
    for i in 0..n {
        let len = boundary[i].dist(boundary[(i + 1) % n]);
        perimeter += len;
        if kinds[i] == EdgeKind::Occluding {
            occlusivity += len;
        }
    }
    let max_radial = boundary
        .iter()
        .map(|p| p.dist(apex))
        .fold(0.0, f64::max);
    IsovistMeasures {
        max_radial,
        area: shoelace(boundary).abs(),
        perimeter,
        occlusivity,
    }
}

/// Computes the isovist from `apex` within the wedge
/// `[heading - fov/2, heading + fov/2]`, clipped at distance `d_cap`.
pub fn compute_isovist(
    env: &Environment,
    apex: Point2,
    heading: f64,
    fov: f64,
    d_cap: f64,
) -> Result<IsovistPolygon, GeometryError> {
    if !(fov > 0.0 && fov <= TAU + ANGLE_EPS) {
        return Err(GeometryError::InvalidFov(fov));
    }
    if !(d_cap > 0.0) || !d_cap.is_finite() {
        return Err(GeometryError::InvalidCap(d_cap));
    }
    if !env.is_free(apex) {
        return Err(GeometryError::NotInFreeSpace {
            x: apex.x,
            y: apex.y,
        });
    }
    let fov = fov.min(TAU);
    let full = fov >= TAU - ANGLE_EPS;
    let start = heading - fov / 2.0;
    let end = start + fov;
    let unwrap = |theta: f64| start + (theta - start).rem_euclid(TAU);

    let mut critical = vec![start, end];
    for &v in &env.vertices {
        if v.dist(apex) > EPS_GEOM {
            let t = unwrap(apex.bearing_to(v));
            if t <= end {
                critical.push(t);
            }
        }
    }
    for s in &env.segments {
        for p in circle_crossings(s, apex, d_cap) {
            let t = unwrap(apex.bearing_to(p));
            if t <= end {
                critical.push(t);
            }
        }
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_EPS);

    let mut rim: Vec<RimVertex> = Vec::new();
    let mut rim_kinds: Vec<EdgeKind> = Vec::new();
    let mut append = |v: RimVertex, kind_before: EdgeKind, rim: &mut Vec<RimVertex>| {
        if let Some(last) = rim.last() {
            if last.p.dist(v.p) <= 1e-9 {
                return;
            }
            rim_kinds.push(kind_before);
        }
        rim.push(v);
    };

    for w in critical.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= ANGLE_EPS {
            continue;
        }
        let mid = 0.5 * (a + b);
        let dir = Point2::new(mid.cos(), mid.sin());
        let nearest = env
            .segments
            .iter()
            .filter_map(|s| s.ray_hit(apex, dir).map(|t| (t, s)))
            .filter(|(t, _)| *t < d_cap)
            .min_by(|x, y| x.0.total_cmp(&y.0));
        match nearest {
            Some((_, seg)) => {
                let pa = ray_point(apex, a, seg, d_cap);
                let pb = ray_point(apex, b, seg, d_cap);
                append(RimVertex { p: pa, angle: a }, EdgeKind::Occluding, &mut rim);
                append(RimVertex { p: pb, angle: b }, EdgeKind::Wall, &mut rim);
            }
            None => {
                append(
                    RimVertex {
                        p: Point2::from_polar(apex, a, d_cap),
                        angle: a,
                    },
                    EdgeKind::Occluding,
                    &mut rim,
                );
                // chord samples on a global angular grid
                let mut k = (a / ARC_STEP).floor() + 1.0;
                while k * ARC_STEP < b - 1e-9 {
                    let t = k * ARC_STEP;
                    append(
                        RimVertex {
                            p: Point2::from_polar(apex, t, d_cap),
                            angle: t,
                        },
                        EdgeKind::FovLimit,
                        &mut rim,
                    );
                    k += 1.0;
                }
                append(
                    RimVertex {
                        p: Point2::from_polar(apex, b, d_cap),
                        angle: b,
                    },
                    EdgeKind::FovLimit,
                    &mut rim,
                );
            }
        }
    }

    let mut boundary: Vec<Point2>;
    let mut edge_kinds: Vec<EdgeKind>;
    if full {
        if rim.len() >= 2 && rim[0].p.dist(rim[rim.len() - 1].p) <= 1e-9 {
            // seam closes on itself: the last edge now wraps to rim[0]
            rim.pop();
        } else {
            rim_kinds.push(EdgeKind::Occluding);
        }
        boundary = rim.iter().map(|v| v.p).collect();
        edge_kinds = rim_kinds.clone();
    } else {
        boundary = Vec::with_capacity(rim.len() + 1);
        boundary.push(apex);
        boundary.extend(rim.iter().map(|v| v.p));
        edge_kinds = Vec::with_capacity(boundary.len());
        edge_kinds.push(EdgeKind::FovLimit);
        edge_kinds.extend(rim_kinds.iter().copied());
        edge_kinds.push(EdgeKind::FovLimit);
    }
    if boundary.len() < 3 {
        boundary.clear();
        edge_kinds.clear();
    }
    Ok(IsovistPolygon {
        apex,
        boundary,
        edge_kinds,
        start,
        fov,
        rim,
        rim_kinds,
    })
}

fn ray_point(apex: Point2, angle: f64, seg: &Segment, d_cap: f64) -> Point2 {
    let dir = Point2::new(angle.cos(), angle.sin());
    let t = seg
        .ray_line_hit(apex, dir)
        .filter(|t| *t > 0.0)
        .unwrap_or(d_cap)
        .min(d_cap);
    apex + dir.scale(t)
}

fn circle_crossings(s: &Segment, c: Point2, r: f64) -> Vec<Point2> {
    let d = s.b - s.a;
    let f = s.a - c;
    let a = d.dot(d);
    if a == 0.0 {
        return Vec::new();
    }
    let b = 2.0 * f.dot(d);
    let cc = f.dot(f) - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| s.a + d.scale(t))
        .collect()
}

/// Counter-clockwise angular interval `[start, end]` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub start: f64,
    pub end: f64,
}

impl AngularSector {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn empty_at(angle: f64) -> Self {
        Self::new(angle, angle)
    }

    pub fn width(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() <= ANGLE_EPS
    }

    /// Whether the absolute direction `angle` falls inside the sector.
    pub fn contains_angle(&self, angle: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let rel = (angle - self.start).rem_euclid(TAU);
        rel <= self.width() || rel >= TAU - ANGLE_EPS
    }
}

/// Splits the view wedge into one sector per route of `intersection`.
///
/// Each sector is centered on the bearing to its route's portal midpoint,
/// bounded by angular bisectors between neighboring bearings and clipped to
/// the wedge. The result is indexed by route id.
pub fn partition_fov(
    apex: Point2,
    heading: f64,
    fov: f64,
    intersection: &Intersection,
) -> Result<Vec<AngularSector>, GeometryError> {
    let m = intersection.route_count();
    let rel: Vec<f64> = intersection
        .routes
        .iter()
        .map(|r| wrap_angle(apex.bearing_to(r.portal_midpoint()) - heading))
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| rel[i].total_cmp(&rel[j]));
    for w in order.windows(2) {
        if (rel[w[1]] - rel[w[0]]).abs() <= ANGLE_EPS {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(GeometryError::DegenerateBearing(a, b));
        }
    }
    if m >= 2 && (rel[order[0]] + TAU - rel[order[m - 1]]).abs() <= ANGLE_EPS {
        return Err(GeometryError::DegenerateBearing(
            order[0].min(order[m - 1]),
            order[0].max(order[m - 1]),
        ));
    }
    let half = fov.min(TAU) / 2.0;
    let full = fov >= TAU - ANGLE_EPS;
    let mut sectors = vec![AngularSector::empty_at(heading); m];
    for (k, &route) in order.iter().enumerate() {
        let b = rel[route];
        let prev = if k == 0 { rel[order[m - 1]] - TAU } else { rel[order[k - 1]] };
        let next = if k + 1 == m { rel[order[0]] + TAU } else { rel[order[k + 1]] };
        let lo = 0.5 * (prev + b);
        let hi = 0.5 * (b + next);
        let (lo, hi) = if full {
            (lo, hi)
        } else {
            match clip_to_wedge(lo, hi, b, half) {
                Some(r) => r,
                None => {
                    sectors[route] = AngularSector::empty_at(heading + b);
                    continue;
                }
            }
        };
        sectors[route] = AngularSector::new(heading + lo, heading + hi);
    }
    Ok(sectors)
}

/// Intersects the circular interval `[lo, hi]` (relative to heading) with
/// `[-half, half]`. When the intersection has two pieces the one holding
/// `bearing` wins, otherwise the wider one.
fn clip_to_wedge(lo: f64, hi: f64, bearing: f64, half: f64) -> Option<(f64, f64)> {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for shift in [-TAU, 0.0, TAU] {
        let a = (lo + shift).max(-half);
        let b = (hi + shift).min(half);
        if b - a > ANGLE_EPS {
            pieces.push((a, b));
        }
    }
    if pieces.is_empty() {
        return None;
    }
    let holding = pieces
        .iter()
        .copied()
        .find(|&(a, b)| bearing >= a && bearing <= b);
    holding.or_else(|| {
        pieces
            .into_iter()
            .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
    })
}

/// The four classic isovist descriptors of one (partial) isovist.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IsovistMeasures {
    pub max_radial: f64,
    pub area: f64,
    pub perimeter: f64,
    pub occlusivity: f64,
}

impl IsovistMeasures {
    pub fn as_array(&self) -> [f64; 4] {
        [self.max_radial, self.area, self.perimeter, self.occlusivity]
    }
}

/// Measures of the partial isovist inside `sector`; all zero when empty.
pub fn isovist_measures(iso: &IsovistPolygon, sector: &AngularSector) -> IsovistMeasures {
    match iso.restrict(sector) {
        Some((boundary, kinds)) => measures_of(iso.apex, &boundary, &kinds),
        None => IsovistMeasures::default(),
    }
}

/// Number of `points` strictly inside the partial isovist for `sector`.
pub fn count_in_sector(iso: &IsovistPolygon, sector: &AngularSector, points: &[Point2]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let Some((boundary, _)) = iso.restrict(sector) else {
        return 0;
    };
    let n = boundary.len();
    points
        .iter()
        .filter(|&&p| {
            point_in_ring(&boundary, p)
                && (0..n).all(|i| {
                    Segment::new(boundary[i], boundary[(i + 1) % n]).distance_to_point(p)
                        > EPS_GEOM
                })
        })
        .count()
}
