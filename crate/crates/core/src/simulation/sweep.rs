//! Memory-window sweeps over seeds.

use serde::Serialize;

use crate::Execution;

use super::engine::{run_with, SimError};
use super::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "W")]
    pub memory_window: usize,
    pub mean_entropy: f64,
    /// Sample standard deviation across seeds (zero for a single seed).
    pub std_entropy: f64,
    pub n_seeds: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("memory window {0} produced no macro evaluations")]
    NoEvaluations(usize),
}

/// Runs every `(W, seed)` pair, with seeds `base, base + 1, ...`, and
/// aggregates the per-run mean prediction entropy for each `W`.
pub fn sweep_memory(
    scenario: &Scenario,
    windows: &[usize],
    n_seeds: usize,
    exec: Execution,
) -> Result<Vec<SweepRow>, SweepError> {
    let base = scenario.seed();
    let mut variants = Vec::with_capacity(windows.len());
    for &w in windows {
        variants.push(scenario.modified(|d| d.tunables.memory_window = w)?);
    }
    let jobs: Vec<(usize, u64)> = (0..windows.len())
        .flat_map(|i| (0..n_seeds as u64).map(move |k| (i, base.wrapping_add(k))))
        .collect();
    // the outer loop carries the parallelism, each run stays sequential
    let entropies = exec.map(jobs, |(i, seed)| {
        run_with(&variants[i].with_seed(seed), Execution::Sequential).map(|r| (i, r.mean_prediction_entropy))
    });

    let mut per_window: Vec<Vec<f64>> = vec![Vec::new(); windows.len()];
    for item in entropies {
        let (i, h) = item?;
        per_window[i].push(h.ok_or(SweepError::NoEvaluations(windows[i]))?);
    }
    Ok(windows
        .iter()
        .zip(per_window)
        .map(|(&w, hs)| {
            let (mean, std) = mean_std(&hs);
            SweepRow {
                memory_window: w,
                mean_entropy: mean,
                std_entropy: std,
                n_seeds: hs.len(),
            }
        })
        .collect())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
