//! Independent reference implementations shared by integration tests.
//! Nothing here calls into the library's geometry or fusion code.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::Rng;
use wayfind::geometry::{Environment, Intersection, Point2, Polygon, Route};
use wayfind::info_sources::RouteDistribution;
use wayfind::simulation::presets::{JUNCTION_M4, REFERENCE_JUNCTION};

pub type Xy = [f64; 2];

// ---------------------------------------------------------------- geometry

/// Distance along the ray `origin + t * dir` to segment `a-b`, if hit.
fn ray_segment(origin: Xy, dir: Xy, a: Xy, b: Xy) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = dir[0] * e[1] - dir[1] * e[0];
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = [a[0] - origin[0], a[1] - origin[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / denom;
    let u = (w[0] * dir[1] - w[1] * dir[0]) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}

/// Samples the visible boundary with one ray every `step_deg` degrees and
/// returns (area, perimeter) of the sampled polygon. A partial view closes
/// through the apex.
pub fn raycast_isovist(walls: &[Vec<Xy>], apex: Xy, heading: f64, fov: f64, d_cap: f64, step_deg: f64) -> (f64, f64) {
    let full = fov >= TAU - 1e-12;
    let n = (fov.to_degrees() / step_deg).round() as usize;
    let start = heading - fov / 2.0;
    let mut pts: Vec<Xy> = Vec::with_capacity(n + 2);
    let count = if full { n } else { n + 1 };
    for i in 0..count {
        let ang = start + fov * i as f64 / n as f64;
        let dir = [ang.cos(), ang.sin()];
        let mut best = d_cap;
        for poly in walls {
            for k in 0..poly.len() {
                let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
                if let Some(t) = ray_segment(apex, dir, a, b) {
                    best = best.min(t);
                }
            }
        }
        pts.push([apex[0] + best * dir[0], apex[1] + best * dir[1]]);
    }
    if !full {
        pts.insert(0, apex);
    }
    let mut area = 0.0;
    let mut perim = 0.0;
    for k in 0..pts.len() {
        let (p, q) = (pts[k], pts[(k + 1) % pts.len()]);
        area += p[0] * q[1] - q[0] * p[1];
        perim += ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    }
    (area.abs() / 2.0, perim)
}

pub struct IsovistFixture {
    pub name: &'static str,
    pub walls: Vec<Vec<Xy>>,
    pub center: Xy,
    pub portals: Vec<[Xy; 2]>,
    pub apex: Xy,
    pub heading_deg: f64,
    pub fov_deg: f64,
    pub d_cap: f64,
}

impl IsovistFixture {
    pub fn environment(&self) -> Environment {
        let walls = self
            .walls
            .iter()
            .map(|w| Polygon::new(w.iter().map(|p| Point2::new(p[0], p[1])).collect()))
            .collect();
        let routes = self
            .portals
            .iter()
            .enumerate()
            .map(|(id, p)| Route {
                id,
                portal: [Point2::new(p[0][0], p[0][1]), Point2::new(p[1][0], p[1][1])],
                label: None,
            })
            .collect();
        let inter = Intersection {
            center: Point2::new(self.center[0], self.center[1]),
            routes,
        };
        Environment::new(walls, inter, vec![], vec![], vec![]).expect("fixture environment is valid")
    }

    pub fn oracle(&self) -> (f64, f64) {
        raycast_isovist(
            &self.walls,
            self.apex,
            self.heading_deg.to_radians(),
            self.fov_deg.to_radians(),
            self.d_cap,
            0.05,
        )
    }
}

fn scenario_walls(text: &str) -> (Vec<Vec<Xy>>, Xy, Vec<[Xy; 2]>) {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    let env = &v["environment"];
    let xy = |p: &serde_json::Value| [p[0].as_f64().unwrap(), p[1].as_f64().unwrap()];
    let walls = env["walls"]
        .as_array()
        .unwrap()
        .iter()
        .map(|poly| poly.as_array().unwrap().iter().map(xy).collect())
        .collect();
    let center = xy(&env["intersection"]["center"]);
    let portals = env["intersection"]["routes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| [xy(&r["portal"][0]), xy(&r["portal"][1])])
        .collect();
    (walls, center, portals)
}

fn boxed(cx: f64, cy: f64, hw: f64, hh: f64) -> Vec<Xy> {
    vec![[cx - hw, cy - hh], [cx + hw, cy - hh], [cx + hw, cy + hh], [cx - hw, cy + hh]]
}

/// The five isovist fixtures: square room, L-shaped room, the two-route
/// and four-route junctions, and a room with scattered obstacles.
pub fn isovist_fixtures() -> Vec<IsovistFixture> {
    let two_exits = vec![[[-4.0, 3.0], [-3.0, 4.0]], [[3.0, 4.0], [4.0, 3.0]]];
    let (j2_walls, j2_center, j2_portals) = scenario_walls(REFERENCE_JUNCTION);
    let (j4_walls, j4_center, j4_portals) = scenario_walls(JUNCTION_M4);
    vec![
        IsovistFixture {
            name: "square room",
            walls: vec![boxed(0.0, 0.0, 5.0, 5.0)],
            center: [0.0, 0.0],
            portals: two_exits.clone(),
            apex: [1.0, -2.0],
            heading_deg: 30.0,
            fov_deg: 360.0,
            d_cap: 50.0,
        },
        IsovistFixture {
            name: "L-shaped room",
            walls: vec![vec![[0.0, 0.0], [10.0, 0.0], [10.0, 4.0], [4.0, 4.0], [4.0, 10.0], [0.0, 10.0]]],
            center: [2.0, 2.0],
            portals: vec![[[9.5, 1.0], [9.5, 3.0]], [[1.0, 9.5], [3.0, 9.5]]],
            apex: [1.0, 1.5],
            heading_deg: 40.0,
            fov_deg: 120.0,
            d_cap: 50.0,
        },
        IsovistFixture {
            name: "junction M=2",
            walls: j2_walls,
            center: j2_center,
            portals: j2_portals,
            apex: [0.4, -6.0],
            heading_deg: 95.0,
            fov_deg: 120.0,
            d_cap: 50.0,
        },
        IsovistFixture {
            name: "junction M=4",
            walls: j4_walls,
            center: j4_center,
            portals: j4_portals,
            apex: [0.5, 1.0],
            heading_deg: 80.0,
            fov_deg: 120.0,
            d_cap: 50.0,
        },
        IsovistFixture {
            name: "occluder field",
            walls: vec![
                boxed(0.0, 0.0, 15.0, 10.0),
                boxed(-6.0, 3.0, 1.0, 1.5),
                boxed(4.0, 4.0, 2.0, 0.5),
                boxed(6.0, -4.0, 0.7, 0.7),
                boxed(-3.0, -5.0, 1.5, 0.6),
                boxed(9.0, 5.0, 0.5, 2.0),
            ],
            center: [0.0, -8.0],
            portals: vec![[[-14.0, -9.0], [-13.0, -9.0]], [[13.0, -9.0], [14.0, -9.0]]],
            apex: [0.5, 0.5],
            heading_deg: 0.0,
            fov_deg: 360.0,
            d_cap: 12.0,
        },
    ]
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// ------------------------------------------------------------------ fusion

fn xlog2(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence in bits, written out term by term.
pub fn oracle_jsd(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let mid = 0.5 * (a + b);
        if a > 0.0 {
            d += 0.5 * a * (a / mid).log2();
        }
        if b > 0.0 {
            d += 0.5 * b * (b / mid).log2();
        }
    }
    d
}

/// Straight-line fused confidence: average divergence, support, credibility,
/// normalized entropy, weighted sum.
pub fn oracle_fuse(rows: &[Vec<f64>], eps: f64) -> Vec<f64> {
    let n = rows.len();
    let m = rows[0].len();
    let mut avg = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i != j {
                s += oracle_jsd(&rows[i], &rows[j]);
            }
        }
        avg[i] = s / (n as f64 - 1.0);
    }
    let sup: Vec<f64> = avg.iter().map(|a| 1.0 / a.max(eps)).collect();
    let sup_total: f64 = sup.iter().sum();
    let agreement = 1.0 - avg.iter().sum::<f64>() / n as f64;
    let mut g = vec![0.0; m];
    for i in 0..n {
        let crd = sup[i] / sup_total * agreement;
        let h = -rows[i].iter().map(|&p| xlog2(p)).sum::<f64>() / (m as f64).log2();
        for x in 0..m {
            g[x] += crd * (1.0 - h) * rows[i][x];
        }
    }
    g
}

/// Random distribution; about one in five entries is exactly zero.
pub fn random_row(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..m)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { -rng.gen::<f64>().max(1e-300).ln() })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.iter().map(|x| x / s).collect();
        }
    }
}

pub fn distribution(row: &[f64]) -> RouteDistribution {
    RouteDistribution::new(row.to_vec()).expect("normalized row")
}

// ------------------------------------------------------------- statistics

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn circle_area(r: f64) -> f64 {
    PI * r * r
}
