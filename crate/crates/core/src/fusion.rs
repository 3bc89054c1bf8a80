//! Credibility-weighted fusion of per-source route distributions.
//!
//! Sources are weighted by how much they agree with each other
//! (Jensen-Shannon divergence, base 2) and by how decisive each one is
//! (normalized Shannon entropy). The fused confidence vector keeps the mass
//! lost to discounting, so it may sum to less than one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info_sources::{argmax_lowest, RouteDistribution};

/// Floor on average divergence before inversion into a support degree.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Default confidence threshold of the macro-decision rule.
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("source matrix needs at least one row")]
    NoSources,
    #[error("row {row} has {found} routes, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("entropy is undefined for a single route")]
    SingleRoute,
}

/// `N x M` matrix of source distributions (rows: sources, columns: routes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceMatrix {
    rows: Vec<RouteDistribution>,
}

impl SourceMatrix {
    pub fn new(rows: Vec<RouteDistribution>) -> Result<Self, FusionError> {
        let first = rows.first().ok_or(FusionError::NoSources)?;
        let expected = first.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != expected {
                return Err(FusionError::RaggedRows {
                    row,
                    expected,
                    found: r.len(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RouteDistribution] {
        &self.rows
    }

    pub fn source_count(&self) -> usize {
        self.rows.len()
    }

    pub fn route_count(&self) -> usize {
        self.rows[0].len()
    }
}

/// Fused confidence per route; entries in `[0, 1]`, sum at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfidenceOverRoutes(pub Vec<f64>);

impl ConfidenceOverRoutes {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.0)
    }

    /// Rescaled to unit sum, `None` when all mass was discounted away.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let t = self.total();
        (t > 0.0).then(|| self.0.iter().map(|x| x / t).collect())
    }
}

/// Outcome of the threshold rule: a route id or no decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MacroDecision(pub Option<usize>);

impl MacroDecision {
    pub const NONE: MacroDecision = MacroDecision(None);

    pub fn route(self) -> Option<usize> {
        self.0
    }

    pub fn is_none(self) -> bool {
        self.0.is_none()
    }
}

fn plogp_ratio(p: f64, q: f64) -> f64 {
    if p > 0.0 {
        p * (2.0 * p / (p + q)).log2()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence in bits; symmetric, in `[0, 1]`.
pub fn jsd(p: &RouteDistribution, q: &RouteDistribution) -> f64 {
    let (p, q) = (p.as_slice(), q.as_slice());
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| 0.5 * plogp_ratio(a, b) + 0.5 * plogp_ratio(b, a))
        .sum();
    s.clamp(0.0, 1.0)
}

/// Mean divergence of each source from all others. A lone source gets 0.
pub fn avg_jsd(f: &SourceMatrix) -> Vec<f64> {
    let n = f.source_count();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut pair = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = jsd(&f.rows[i], &f.rows[j]);
            pair[i][j] = d;
            pair[j][i] = d;
        }
    }
    pair.iter()
        .map(|row| row.iter().sum::<f64>() / (n - 1) as f64)
        .collect()
}

pub fn support_degrees(avg: &[f64], epsilon: f64) -> Vec<f64> {
    avg.iter().map(|&a| 1.0 / a.max(epsilon)).collect()
}

/// Normalized support scaled by the overall agreement `1 - mean(avg)`.
pub fn credibility_degrees(sup: &[f64], avg: &[f64]) -> Vec<f64> {
    let total: f64 = sup.iter().sum();
    let agreement = 1.0 - avg.iter().sum::<f64>() / avg.len() as f64;
    sup.iter().map(|s| s / total * agreement).collect()
}

/// Shannon entropy over `log2 M`; 1 for uniform, 0 for a point mass.
pub fn normalized_entropy(p: &RouteDistribution) -> Result<f64, FusionError> {
    let m = p.len();
    if m < 2 {
        return Err(FusionError::SingleRoute);
    }
    let s = p.as_slice();
    if s.iter().all(|&x| x == s[0]) {
        return Ok(1.0);
    }
    let h: f64 = s
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum();
    Ok((h / (m as f64).log2()).clamp(0.0, 1.0))
}

/// Every intermediate quantity of one fusion pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionBreakdown {
    pub avg_jsd: Vec<f64>,
    pub support: Vec<f64>,
    pub credibility: Vec<f64>,
    pub entropy: Vec<f64>,
    /// `credibility[i] * (1 - entropy[i])`, the weight of source `i`.
    pub source_weights: Vec<f64>,
    /// Per-source contribution `source_weights[i] * F_i`.
    pub terms: Vec<Vec<f64>>,
    pub confidence: ConfidenceOverRoutes,
}

pub fn fuse_detailed(f: &SourceMatrix, epsilon: f64) -> Result<FusionBreakdown, FusionError> {
    let avg = avg_jsd(f);
    let support = support_degrees(&avg, epsilon);
    let credibility = credibility_degrees(&support, &avg);
    let entropy = f
        .rows
        .iter()
        .map(normalized_entropy)
        .collect::<Result<Vec<_>, _>>()?;
    let source_weights: Vec<f64> = credibility
        .iter()
        .zip(&entropy)
        .map(|(c, h)| c * (1.0 - h))
        .collect();
    let m = f.route_count();
    let terms: Vec<Vec<f64>> = f
        .rows
        .iter()
        .zip(&source_weights)
        .map(|(row, w)| row.as_slice().iter().map(|x| w * x).collect())
        .collect();
    let mut g = vec![0.0; m];
    for t in &terms {
        for (gx, tx) in g.iter_mut().zip(t) {
            *gx += tx;
        }
    }
    Ok(FusionBreakdown {
        avg_jsd: avg,
        support,
        credibility,
        entropy,
        source_weights,
        terms,
        confidence: ConfidenceOverRoutes(g),
    })
}

/// Fused confidence over routes.
pub fn fuse(f: &SourceMatrix, epsilon: f64) -> Result<ConfidenceOverRoutes, FusionError> {
    fuse_detailed(f, epsilon).map(|b| b.confidence)
}

/// Argmax route when its confidence reaches `theta`, otherwise no decision.
pub fn macro_decide(g: &ConfidenceOverRoutes, theta: f64) -> MacroDecision {
    if g.0.is_empty() || g.max() < theta {
        MacroDecision::NONE
    } else {
        MacroDecision(Some(g.argmax()))
    }
}
