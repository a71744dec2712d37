use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use omc::ensemble::WeightedEnsemble;
use omc::simulators::Simulator;
use omc::summary::{coordinate, posterior_predictive, weighted_histogram, HISTOGRAM_BINS};
use serde_json::{json, Value};

use crate::run::Outcome;
use crate::settings::Settings;
use crate::CliResult;

/// Simulators whose statistics are trajectories or quantiles worth
/// comparing against the posterior predictive.
const PREDICTIVE_SIMULATORS: [&str; 2] = ["lotka-volterra", "mg1"];

pub fn write_particles(ensemble: &WeightedEnsemble, path: &Path) -> CliResult<()> {
    let d = ensemble.particles().first().map_or(0, |p| p.theta_opt.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["index", "accepted", "discrepancy", "sim_count", "weight"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=d).map(|k| format!("theta_{k}")));
    header.extend((1..=d).map(|k| format!("theta_star_{k}")));
    w.write_record(&header)?;
    for (i, (p, wt)) in ensemble.particles().iter().zip(ensemble.weights()).enumerate() {
        let mut row = vec![
            i.to_string(),
            p.accepted.to_string(),
            p.discrepancy.to_string(),
            p.sim_count.to_string(),
            wt.to_string(),
        ];
        row.extend(p.theta_opt.iter().map(f64::to_string));
        row.extend(p.theta_star.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The metrics document. Only `timestamp_unix` varies between identical runs.
pub fn metrics_json(outcome: &Outcome, settings: &Settings, sim: &dyn Simulator) -> CliResult<Value> {
    let ens = &outcome.ensemble;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(json!({
        "algorithm": settings.alg.to_string(),
        "simulator": settings.sim,
        "seed": settings.seed,
        "n": ens.len(),
        "epsilon": ens.epsilon(),
        "ess": ens.ess(),
        "ess_over_n": ens.ess_over_n(),
        "ss_mean": outcome.ss_mean(),
        "ss_denominator": outcome.ss_denominator,
        "sims_prior_rounds": outcome.sims_prior_rounds,
        "total_sims": ens.total_sims(),
        "accepted": ens.accepted_count(),
        "acceptance_fraction": ens.acceptance_fraction(),
        "posterior_mean": ens.mean(),
        "rounds": serde_json::to_value(&outcome.rounds)?,
        "snapshots": serde_json::to_value(&outcome.snapshots)?,
        "observed": sim.observed().0,
        "kernel_scale": sim.default_scale(),
        "prior": serde_json::to_value(sim.prior())?,
        "config": serde_json::to_value(settings)?,
        "timestamp_unix": timestamp,
    }))
}

/// Writes `particles.csv`, `metrics.json`, one `histogram_theta_<k>.csv`
/// per parameter and, for trajectory-like simulators,
/// `posterior_predictive.csv`. Returns the written paths.
pub fn emit_outputs(outcome: &Outcome, settings: &Settings, sim: &dyn Simulator, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let ens = &outcome.ensemble;
    let mut written = Vec::new();

    let path = out_dir.join("particles.csv");
    write_particles(ens, &path)?;
    written.push(path);

    let path = out_dir.join("metrics.json");
    let metrics = metrics_json(outcome, settings, sim)?;
    std::fs::write(&path, serde_json::to_string_pretty(&metrics)? + "\n")?;
    written.push(path);

    for k in 0..sim.d_theta() {
        let bins = weighted_histogram(&coordinate(ens, k), ens.weights(), HISTOGRAM_BINS)?;
        let path = out_dir.join(format!("histogram_theta_{}.csv", k + 1));
        let mut w = csv::Writer::from_path(&path)?;
        for b in bins {
            w.serialize(b)?;
        }
        w.flush()?;
        written.push(path);
    }

    if PREDICTIVE_SIMULATORS.contains(&sim.name()) {
        let path = out_dir.join("posterior_predictive.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for band in posterior_predictive(sim, ens, settings.seed)? {
            w.serialize(band)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
