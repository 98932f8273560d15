//! Parameter sweeps over seeds, team sizes, difficulties, trust and noise.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_episode, EpisodeMetrics, SimConfig, TerminationCause};
use crate::error::{Error, Result};
use crate::policy::Policy;

/// Builds a fresh policy for each episode.
pub type PolicyFactory = dyn Fn(&SimConfig) -> Box<dyn Policy> + Sync;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub agents: Vec<usize>,
    pub difficulties: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePlan {
    pub betas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// One CSV row: `kind` is `episode` for a single run or `aggregate` for the
/// mean over the seeds of one parameter cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub agents: usize,
    pub difficulty: f64,
    pub beta: f64,
    pub sigma: f64,
    pub seed: Option<u64>,
    pub episodes: usize,
    pub steps: f64,
    pub time_s: f64,
    pub cumulative_distance: f64,
    pub coverage: f64,
    pub accuracy: Option<f64>,
    pub accuracy_se: Option<f64>,
    pub timeouts: usize,
    pub collisions: f64,
}

impl SweepRow {
    pub fn episode(config: &SimConfig, m: &EpisodeMetrics) -> Self {
        Self {
            kind: "episode",
            agents: config.agents,
            difficulty: config.difficulty,
            beta: config.beta,
            sigma: config.sigma,
            seed: Some(config.seed),
            episodes: 1,
            steps: m.steps as f64,
            time_s: m.completion_time,
            cumulative_distance: m.cumulative_distance,
            coverage: m.final_coverage,
            accuracy: m.final_accuracy,
            accuracy_se: None,
            timeouts: usize::from(m.cause == TerminationCause::Timeout),
            collisions: (m.static_collisions + m.agent_collisions) as f64,
        }
    }

    fn cell(&self) -> (usize, u64, u64, u64) {
        (
            self.agents,
            self.difficulty.to_bits(),
            self.beta.to_bits(),
            self.sigma.to_bits(),
        )
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Aggregate rows, one per parameter cell in first-seen order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut cells: Vec<(usize, u64, u64, u64)> = Vec::new();
    for r in rows.iter().filter(|r| r.kind == "episode") {
        if !cells.contains(&r.cell()) {
            cells.push(r.cell());
        }
    }
    cells
        .into_iter()
        .map(|cell| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.kind == "episode" && r.cell() == cell)
                .collect();
            let acc: Vec<f64> = group.iter().filter_map(|r| r.accuracy).collect();
            let (accuracy, accuracy_se) = if acc.is_empty() {
                (None, None)
            } else {
                let m = mean(acc.iter().copied());
                let se = if acc.len() > 1 {
                    let var = acc.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (acc.len() - 1) as f64;
                    (var / acc.len() as f64).sqrt()
                } else {
                    0.0
                };
                (Some(m), Some(se))
            };
            let first = group[0];
            SweepRow {
                kind: "aggregate",
                seed: None,
                episodes: group.len(),
                steps: mean(group.iter().map(|r| r.steps)),
                time_s: mean(group.iter().map(|r| r.time_s)),
                cumulative_distance: mean(group.iter().map(|r| r.cumulative_distance)),
                coverage: mean(group.iter().map(|r| r.coverage)),
                accuracy,
                accuracy_se,
                timeouts: group.iter().map(|r| r.timeouts).sum(),
                collisions: mean(group.iter().map(|r| r.collisions)),
                ..first.clone()
            }
        })
        .collect()
}

/// Runs every configuration on a pool of `workers` threads. Results come
/// back in input order, so output is independent of scheduling.
pub fn run_batch(configs: &[SimConfig], workers: usize, factory: &PolicyFactory) -> Result<Vec<EpisodeMetrics>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let mut policy = factory(c);
                run_episode(c, policy.as_mut())
            })
            .collect()
    })
}

fn rows_for(configs: &[SimConfig], metrics: &[EpisodeMetrics]) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = configs
        .iter()
        .zip(metrics)
        .map(|(c, m)| SweepRow::episode(c, m))
        .collect();
    let agg = aggregate(&rows);
    rows.extend(agg);
    rows
}

/// Team size × difficulty × seed cross product.
pub fn sweep(template: &SimConfig, plan: &SweepPlan, workers: usize, factory: &PolicyFactory) -> Result<Vec<SweepRow>> {
    let mut configs = Vec::new();
    for &agents in &plan.agents {
        for &difficulty in &plan.difficulties {
            for &seed in &plan.seeds {
                configs.push(SimConfig {
                    agents,
                    difficulty,
                    seed,
                    ..template.clone()
                });
            }
        }
    }
    let metrics = run_batch(&configs, workers, factory)?;
    Ok(rows_for(&configs, &metrics))
}

/// Trust × noise × seed cross product.
pub fn noise_sweep(
    template: &SimConfig,
    plan: &NoisePlan,
    workers: usize,
    factory: &PolicyFactory,
) -> Result<Vec<SweepRow>> {
    let mut configs = Vec::new();
    for &beta in &plan.betas {
        for &sigma in &plan.sigmas {
            for &seed in &plan.seeds {
                configs.push(SimConfig {
                    beta,
                    sigma,
                    seed,
                    ..template.clone()
                });
            }
        }
    }
    let metrics = run_batch(&configs, workers, factory)?;
    Ok(rows_for(&configs, &metrics))
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::format("csv", e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
