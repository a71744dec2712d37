use std::path::Path;

use omc::parallel::mix_seed;
use omc::simulators::Simulator;
use serde::Serialize;

use crate::run::execute;
use crate::settings::{Algorithm, Settings};
use crate::CliResult;

/// One (algorithm, ε, repetition) measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRun {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub repetition: usize,
    pub seed: u64,
    pub ss: f64,
    pub ess_over_n: f64,
}

/// Aggregate over repetitions for one (algorithm, ε).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub repetitions: usize,
    pub ss_mean: f64,
    pub ss_std: f64,
    pub ess_over_n_mean: f64,
    pub ess_over_n_std: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every configured algorithm on the same repetition seeds and writes
/// `comparison.csv` (aggregates) and `comparison_runs.csv` to `out_dir`.
pub fn compare(settings: &Settings, sim: &dyn Simulator, out_dir: &Path) -> CliResult<(Vec<ComparisonRow>, Vec<ComparisonRun>)> {
    let mut runs = Vec::new();
    for &algorithm in &settings.compare.algorithms {
        for repetition in 0..settings.compare.repetitions {
            let seed = mix_seed(settings.seed, repetition as u64);
            let s = Settings {
                alg: algorithm,
                seed,
                ..settings.clone()
            };
            let outcome = execute(&s, sim)?;
            for round in &outcome.rounds {
                runs.push(ComparisonRun {
                    algorithm,
                    epsilon: round.epsilon,
                    repetition,
                    seed,
                    ss: round.ss_mean,
                    ess_over_n: round.ess_over_n,
                });
            }
            log::info!("compare {algorithm} repetition {repetition} done");
        }
    }

    let mut rows: Vec<ComparisonRow> = Vec::new();
    for r in &runs {
        if rows.iter().any(|row| row.algorithm == r.algorithm && row.epsilon == r.epsilon) {
            continue;
        }
        let group: Vec<&ComparisonRun> = runs
            .iter()
            .filter(|x| x.algorithm == r.algorithm && x.epsilon == r.epsilon)
            .collect();
        let (ss_mean, ss_std) = mean_std(&group.iter().map(|x| x.ss).collect::<Vec<_>>());
        let (ess_over_n_mean, ess_over_n_std) = mean_std(&group.iter().map(|x| x.ess_over_n).collect::<Vec<_>>());
        rows.push(ComparisonRow {
            algorithm: r.algorithm,
            epsilon: r.epsilon,
            repetitions: group.len(),
            ss_mean,
            ss_std,
            ess_over_n_mean,
            ess_over_n_std,
        });
    }

    std::fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join("comparison.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out_dir.join("comparison_runs.csv"))?;
    for run in &runs {
        w.serialize(run)?;
    }
    w.flush()?;
    Ok((rows, runs))
}
