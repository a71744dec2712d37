//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr, bypassing the test harness capture so the lines are visible in a
//! plain `cargo test` run.

use std::io::Write;

use omc::baselines::{rejection_abc, sequential_omc, EpsilonSchedule};
use omc::ensemble::WeightedEnsemble;
use omc::kernel::DiscrepancyKernel;
use omc::optimize::{fd_jacobian, Method, OptimizerConfig};
use omc::parallel::{run_anytime, run_batch, AnytimeOptions, Mode, ParticleSeedStream, RunPlan, StreamLabel};
use omc::simulators::*;
use omc::summary::{coordinate, kolmogorov_distance, mean_standard_error, posterior_predictive};
use omc::types::SeedVector;
use omc::weighting::particle_weight;
use omc_cli::{compare, execute, write_particles, Algorithm, CompareSettings, Settings};

// Tolerances, pinned.
const THETA_OPT_TOL: f64 = 1e-8;
const WEIGHT_REL_TOL: f64 = 1e-8;
const MC_SIGMAS: f64 = 3.0;
const SS_MAX_UNKNOWN_MEAN: f64 = 6.0;
const ESS_EXACT_TOL: f64 = 1e-12;
const MIXTURE_KS_MAX: f64 = 0.03;
const MIXTURE_TAIL_REL: f64 = 0.30;
const JACOBIAN_REL_TOL: f64 = 1e-4;
const LINKED_ACCEPT_RANGE: (f64, f64) = (0.05, 0.30);
const EPS_CONVERGENCE_SIGMAS: f64 = 2.0;
const LV_BAND_SIGMAS: f64 = 3.0;
const LV_BAND_FRACTION: f64 = 0.80;
const MG1_THETA3_RANGE: (f64, f64) = (0.1, 0.3);
const RESCALE_TOL: f64 = 1e-12;

/// Collects sub-checks of one criterion and reports them on one line.
struct Criterion {
    id: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: &'static str) -> Self {
        Self {
            id,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if self.failures.is_empty() {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        let _ = writeln!(std::io::stderr(), "{status} criterion {}: {detail}", self.id);
        assert!(self.failures.is_empty(), "criterion {} failed: {detail}", self.id);
    }
}

// ---------------------------------------------------------------------------
// independent oracles

/// Standard normal quantile by Acklam's rational approximation
/// (relative error below 1.2e-9).
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Composite Simpson rule.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn seeds(sim: &dyn Simulator, count: usize, master: u64) -> Vec<SeedVector> {
    (0..count)
        .map(|i| SeedVector::sample(sim.d_u(), &mut ParticleSeedStream::new(master, i as u64).rng(StreamLabel::Seed)))
        .collect()
}

fn max_fd_rel_err(sim: &dyn Simulator, thetas: &[Vec<f64>], seeds: &[SeedVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (theta, u) in thetas.iter().zip(seeds) {
        let Ok(f) = sim.forward(theta, u) else { continue };
        let fd = fd_jacobian(sim, theta, u, &f, 1e-7).unwrap();
        let exact = sim.analytic_jacobian(theta, u).unwrap();
        let scale = exact.norm().max(1e-12);
        worst = worst.max((&fd - &exact).norm() / scale);
    }
    worst
}

fn omc_batch(sim: &dyn Simulator, n: usize, eps: f64, config: &OptimizerConfig, seed: u64) -> WeightedEnsemble {
    let y = sim.observed().0.clone();
    let kernel = DiscrepancyKernel::new(eps).unwrap();
    let plan = RunPlan::batch(seed, n, 1, config.max_sims_per_round);
    run_batch(&plan, sim, &y, &kernel, config).unwrap().ensemble
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_exact_weight_oracle() {
    let mut c = Criterion::new("1 (unknown-mean exact weights)");
    let sim = UnknownMean::new(UnknownMeanOptions::default()).unwrap();
    let y = sim.observed()[0];
    let ens = omc_batch(&sim, 1000, 0.01, &OptimizerConfig::default(), 1);

    let mut worst_theta: f64 = 0.0;
    let mut worst_weight: f64 = 0.0;
    for p in ens.particles() {
        let r: f64 = (0..p.seed.len()).map(|i| normal_quantile(p.seed.clipped(i))).sum::<f64>() / p.seed.len() as f64;
        worst_theta = worst_theta.max((p.theta_opt[0] - (y - r)).abs());
        worst_weight = worst_weight.max(rel_err(p.raw_weight(), normal_pdf(p.theta_opt[0], 0.0, 1.0)));
    }
    c.check(worst_theta < THETA_OPT_TOL, format!("max |θ° − (y − R)| = {worst_theta:.2e}"));
    c.check(worst_weight < WEIGHT_REL_TOL, format!("max weight rel err = {worst_weight:.2e}"));

    // normal-normal posterior: N(y·M/(M+1), 1/(M+1)) with unit prior and noise
    let (mean, var) = (0.0, 1.0 / 3.0);
    let m = ens.mean()[0];
    let se = mean_standard_error(&ens)[0];
    c.check((m - mean).abs() < MC_SIGMAS * se, format!("mean {m:.4} vs {mean} (se {se:.4})"));
    let v = ens.variance()[0];
    // se of a weighted variance, ≈ var·√(2/ESS) for a normal target
    let se_v = var * (2.0 / ens.ess()).sqrt();
    c.check((v - var).abs() < MC_SIGMAS * se_v, format!("var {v:.4} vs {var:.4} (se {se_v:.4})"));
    let ss = ens.ss_mean();
    c.check(ss <= SS_MAX_UNKNOWN_MEAN, format!("SS = {ss:.2}"));
    // see criterion_01_ess_over_n_exactly_one for the ESS/n = 1 sub-check
    let limit = 2.0 * 2f64.sqrt() / 3.0;
    c.check(
        (ens.ess_over_n() - limit).abs() < 0.02,
        format!("ESS/n = {:.4} (prior-ratio limit {limit:.4})", ens.ess_over_n()),
    );
    c.finish();
}

#[test]
#[ignore = "with θ° ~ N(0, 1/2) and weights ∝ N(θ°; 0, 1), ESS/n tends to 2√2/3 ≈ 0.943, not 1"]
fn criterion_01_ess_over_n_exactly_one() {
    let mut c = Criterion::new("1 (unknown-mean ESS/n = 1.0 exactly)");
    let sim = UnknownMean::new(UnknownMeanOptions::default()).unwrap();
    let ens = omc_batch(&sim, 1000, 0.01, &OptimizerConfig::default(), 1);
    let r = ens.ess_over_n();
    c.check((r - 1.0).abs() <= ESS_EXACT_TOL, format!("ESS/n = {r:.6}"));
    c.finish();
}

#[test]
fn criterion_02_mixture_tails() {
    let mut c = Criterion::new("2 (mixture tails)");
    let sim = Mixture::new(MixtureOptions::default()).unwrap();
    let ens = omc_batch(&sim, 5000, 0.01, &OptimizerConfig::default(), 2);
    let r = ens.ess_over_n();
    c.check((r - 1.0).abs() <= ESS_EXACT_TOL, format!("ESS/n = {r:.12}"));

    let o = MixtureOptions::default();
    let density = |t: f64| o.weight * normal_pdf(t, 0.0, o.sigma1) + (1.0 - o.weight) * normal_pdf(t, 0.0, o.sigma2);
    let z = simpson(density, o.lo, o.hi, 200_000);
    let cdf = |t: f64| simpson(density, o.lo, t.clamp(o.lo, o.hi), 4_000) / z;
    let theta = coordinate(&ens, 0);
    let ks = kolmogorov_distance(&theta, ens.weights(), cdf);
    c.check(ks < MIXTURE_KS_MAX, format!("Kolmogorov distance {ks:.4}"));

    let tail_exact = 1.0 - simpson(density, -2.0, 2.0, 200_000) / z;
    let tail: f64 = theta
        .iter()
        .zip(ens.weights())
        .filter(|(t, _)| t.abs() > 2.0)
        .map(|(_, w)| w)
        .sum();
    c.check(
        rel_err(tail, tail_exact) <= MIXTURE_TAIL_REL,
        format!("tail mass {tail:.5} vs {tail_exact:.5}"),
    );
    c.finish();
}

#[test]
fn criterion_03_exponential_conjugacy() {
    let mut c = Criterion::new("3 (exponential conjugacy)");
    let o = ExponentialOptions::default();
    let sim = Exponential::new(o.clone()).unwrap();
    let y = sim.observed()[0];
    let ens = omc_batch(&sim, 5000, 0.01, &OptimizerConfig::default(), 3);
    let exact = (o.alpha + o.m as f64) / (o.beta + o.m as f64 * y);
    let m = ens.mean()[0];
    let se = mean_standard_error(&ens)[0];
    c.check((m - exact).abs() < MC_SIGMAS * se, format!("mean {m:.5} vs {exact:.5} (se {se:.5})"));

    let us = seeds(&sim, 200, 33);
    let thetas: Vec<Vec<f64>> = (0..200).map(|i| vec![0.05 + 0.02 * i as f64]).collect();
    let jerr = max_fd_rel_err(&sim, &thetas, &us);
    c.check(jerr < JACOBIAN_REL_TOL, format!("FD Jacobian rel err {jerr:.2e}"));

    let mut worst: f64 = 0.0;
    for p in ens.particles() {
        // R(u) is the mean of M unit exponentials −ln(1 − u)
        let r: f64 = (0..p.seed.len()).map(|i| -(1.0 - p.seed.clipped(i)).ln()).sum::<f64>() / p.seed.len() as f64;
        worst = worst.max((p.theta_opt[0] - r / y).abs());
    }
    c.check(worst < THETA_OPT_TOL, format!("max |θ° − R/y| = {worst:.2e}"));
    c.finish();
}

#[test]
fn criterion_04_linked_normal() {
    let mut c = Criterion::new("4 (linked normal)");
    let sim = LinkedNormal::new(LinkedNormalOptions::default()).unwrap();
    let y = sim.observed().0.clone();
    let config = OptimizerConfig::with_method(Method::GaussNewton);
    let schedule = EpsilonSchedule::new(vec![0.25, 0.1]).unwrap();
    let plan = RunPlan::batch(4, 2000, 1, config.max_sims_per_round);
    let kernel = DiscrepancyKernel::with_scale(0.25, sim.default_scale().unwrap()).unwrap();
    let run = sequential_omc(&plan, &sim, &y, &kernel, &config, &schedule).unwrap();
    let ens = run.ensemble();
    let acc = ens.acceptance_fraction();
    c.check(
        (LINKED_ACCEPT_RANGE.0..=LINKED_ACCEPT_RANGE.1).contains(&acc),
        format!("acceptance at ε=0.1 = {acc:.4}"),
    );
    let sum: f64 = ens.weights().iter().sum();
    c.check(
        ens.accepted_count() > 0 && (sum - 1.0).abs() < 1e-9,
        format!("{} accepted, Σw = {sum:.12}", ens.accepted_count()),
    );

    let us = seeds(&sim, 200, 44);
    let thetas: Vec<Vec<f64>> = (0..200).map(|i| vec![0.1 + 0.049 * i as f64]).collect();
    let mut worst: f64 = 0.0;
    for (theta, u) in thetas.iter().zip(&us) {
        // [R(u), 2θV(u)]ᵀ with (R, V) recovered from the simulator at θ = 1
        let f1 = sim.forward(&[1.0], u).unwrap();
        let exact = [f1[0], 2.0 * theta[0] * f1[1]];
        let f = sim.forward(theta, u).unwrap();
        let fd = fd_jacobian(&sim, theta, u, &f, 1e-7).unwrap();
        let lib = sim.analytic_jacobian(theta, u).unwrap();
        for r in 0..2 {
            worst = worst.max(rel_err(fd[(r, 0)], exact[r])).max(rel_err(lib[(r, 0)], exact[r]));
        }
    }
    c.check(worst < JACOBIAN_REL_TOL, format!("Jacobian rel err {worst:.2e}"));
    c.finish();
}

#[test]
fn criterion_05_oracle_equivalence() {
    let mut c = Criterion::new("5 (OMC vs rejection ABC)");
    let sim = UnknownMean::new(UnknownMeanOptions::default()).unwrap();
    let y = sim.observed().0.clone();
    let omc = omc_batch(&sim, 2000, 0.01, &OptimizerConfig::default(), 5);
    let plan = RunPlan {
        total_sim_budget: 2000 * 40_000,
        ..RunPlan::batch(55, 2000, 1, 1)
    };
    let rej = rejection_abc(&plan, &sim, &y, &DiscrepancyKernel::new(0.001).unwrap()).unwrap();
    let rej = rej.ensemble();
    c.check(rej.accepted_count() == 2000, format!("rejection accepted {}", rej.accepted_count()));
    let (m1, m2) = (omc.mean()[0], rej.mean()[0]);
    let (s1, s2) = (mean_standard_error(&omc)[0], mean_standard_error(rej)[0]);
    let se = (s1 * s1 + s2 * s2).sqrt();
    c.check((m1 - m2).abs() < MC_SIGMAS * se, format!("means {m1:.4} vs {m2:.4} (se {se:.4})"));
    c.finish();
}

#[test]
fn criterion_06_epsilon_convergence() {
    let mut c = Criterion::new("6 (ε-convergence)");
    let config = OptimizerConfig {
        convergence_tol: None,
        ..OptimizerConfig::default()
    };
    let um = UnknownMean::new(UnknownMeanOptions::default()).unwrap();
    let eo = ExponentialOptions::default();
    let ex = Exponential::new(eo.clone()).unwrap();
    let ex_mean = (eo.alpha + eo.m as f64) / (eo.beta + eo.m as f64 * eo.observed);
    let cases: [(&dyn Simulator, f64); 2] = [(&um, 0.0), (&ex, ex_mean)];
    for (sim, exact) in cases {
        let mut prev: Option<(f64, f64)> = None;
        let mut trail = Vec::new();
        for eps in [1.0, 0.1, 0.01] {
            let ens = omc_batch(sim, 2000, eps, &config, 6);
            let err = (ens.mean()[0] - exact).abs();
            let se = mean_standard_error(&ens)[0];
            if let Some((e0, s0)) = prev {
                let slack = EPS_CONVERGENCE_SIGMAS * (s0 * s0 + se * se).sqrt();
                c.check(err <= e0 + slack, format!("{} ε={eps}: err {err:.4} vs {e0:.4} + {slack:.4}", sim.name()));
            }
            trail.push(format!("{err:.4}"));
            prev = Some((err, se));
        }
        c.check(true, format!("{} errors {}", sim.name(), trail.join(" → ")));
    }
    c.finish();
}

#[test]
fn criterion_07_lotka_volterra_and_mg1() {
    let mut c = Criterion::new("7 (Lotka-Volterra and M/G/1)");

    let sim = LotkaVolterra::new(LotkaVolterraOptions::default()).unwrap();
    let y = sim.observed().0.clone();
    let kernel = DiscrepancyKernel::with_scale(3.0, sim.default_scale().unwrap()).unwrap();
    let config = OptimizerConfig::with_method(Method::GaussNewton);
    let plan = RunPlan::batch(7, 1000, 1, config.max_sims_per_round);
    let run = sequential_omc(&plan, &sim, &y, &kernel, &config, &EpsilonSchedule::new(vec![3.0, 2.0]).unwrap()).unwrap();
    let ens = run.ensemble();
    let finite = ens
        .particles()
        .iter()
        .filter(|p| p.accepted)
        .all(|p| p.log_weight.is_finite())
        && ens.weights().iter().all(|w| w.is_finite());
    c.check(finite, "L-V weights finite");
    let r = ens.ess_over_n();
    c.check(r > 0.0 && r < 1.0, format!("L-V ESS/n = {r:.4}"));
    let acc = ens.acceptance_fraction();
    c.check(acc > 0.0, format!("L-V acceptance {acc:.3}"));
    let bands = posterior_predictive(&sim, ens, 7).unwrap();
    let inside = bands
        .iter()
        .filter(|b| (b.mean - b.observed).abs() <= LV_BAND_SIGMAS * b.std)
        .count() as f64
        / bands.len() as f64;
    c.check(inside >= LV_BAND_FRACTION, format!("L-V predictive coverage {inside:.2}"));

    let sim = Mg1Queue::new(Mg1Options::default()).unwrap();
    let y = sim.observed().0.clone();
    let config = OptimizerConfig::with_method(Method::RandomWalk);
    let kernel = DiscrepancyKernel::new(sim.default_schedule()[0]).unwrap();
    let plan = RunPlan::batch(8, 1000, 1, config.max_sims_per_round);
    let ens = run_batch(&plan, &sim, &y, &kernel, &config).unwrap().ensemble;
    let t3 = ens.mean()[2];
    c.check(
        (MG1_THETA3_RANGE.0..=MG1_THETA3_RANGE.1).contains(&t3),
        format!("M/G/1 E[θ₃] = {t3:.4}"),
    );
    c.check(
        ens.ess_over_n() <= ens.acceptance_fraction(),
        format!("M/G/1 ESS/n {:.4} ≤ acceptance {:.4}", ens.ess_over_n(), ens.acceptance_fraction()),
    );
    c.finish();
}

#[test]
fn criterion_08_efficiency_ordering() {
    let mut c = Criterion::new("8 (OMC needs fewer simulations than SMC)");
    let dir = tempfile::tempdir().unwrap();
    for name in ["unknown-mean", "mixture", "exponential"] {
        let settings = Settings {
            sim: name.into(),
            n: 1000,
            seed: 8,
            compare: CompareSettings {
                algorithms: vec![Algorithm::OmcSeq, Algorithm::Smc],
                repetitions: 5,
            },
            ..Settings::default()
        };
        let sim = settings.simulator().unwrap();
        let final_eps = settings.schedule(&*sim).unwrap().last();
        let (_, runs) = compare(&settings, &*sim, dir.path()).unwrap();
        let at = |alg: Algorithm, rep: usize| {
            runs.iter()
                .find(|r| r.algorithm == alg && r.repetition == rep && r.epsilon == final_eps)
                .map(|r| r.ss)
                .unwrap()
        };
        let mut pairs = Vec::new();
        for rep in 0..5 {
            let (o, s) = (at(Algorithm::OmcSeq, rep), at(Algorithm::Smc, rep));
            c.check(o < s, format!("{name} rep {rep}: OMC SS {o:.1} vs SMC SS {s:.1}"));
            pairs.push(format!("{o:.1}/{s:.1}"));
        }
        c.check(true, format!("{name} OMC/SMC SS {}", pairs.join(" ")));
    }
    c.notes.retain(|n| !n.contains(" rep "));
    c.finish();
}

#[test]
fn criterion_09_determinism_and_anytime() {
    let mut c = Criterion::new("9 (worker invariance and anytime)");
    let dir = tempfile::tempdir().unwrap();
    for alg in [Algorithm::Omc, Algorithm::OmcSeq, Algorithm::Smc] {
        let mut files = Vec::new();
        for workers in [1, 8] {
            let settings = Settings {
                sim: "exponential".into(),
                alg,
                n: 500,
                seed: 9,
                workers,
                ..Settings::default()
            };
            let sim = settings.simulator().unwrap();
            let outcome = execute(&settings, &*sim).unwrap();
            let path = dir.path().join(format!("{alg}-{workers}.csv"));
            write_particles(&outcome.ensemble, &path).unwrap();
            files.push(std::fs::read(&path).unwrap());
        }
        c.check(files[0] == files[1], format!("{alg}: particles.csv identical for 1 and 8 workers"));
    }

    let sim = LinkedNormal::new(LinkedNormalOptions::default()).unwrap();
    let y = sim.observed().0.clone();
    let kernel = DiscrepancyKernel::with_scale(0.1, sim.default_scale().unwrap()).unwrap();
    let config = OptimizerConfig::with_method(Method::GaussNewton);
    let plan = RunPlan::anytime(9, 300, 1, 300 * 200);
    let opts = AnytimeOptions {
        checkpoint_every: 50,
        ..AnytimeOptions::default()
    };
    let run = run_anytime(&plan, &sim, &y, &kernel, &config, &opts, &|_| {}).unwrap();
    let maxes: Vec<f64> = run.snapshots.iter().map(|s| s.max_discrepancy).collect();
    c.check(
        maxes.windows(2).all(|w| w[1] <= w[0]),
        format!("{} snapshots with nonincreasing max ρ", maxes.len()),
    );

    // stops partway through the first sweep over the particles
    let early = RunPlan {
        total_sim_budget: 300 * 12,
        mode: Mode::Anytime,
        ..plan
    };
    let run = run_anytime(&early, &sim, &y, &kernel, &config, &opts, &|_| {}).unwrap();
    let ok = run.latest().is_some_and(|e| {
        let s: f64 = e.weights().iter().sum();
        (s - 1.0).abs() < 1e-9 && e.weights().iter().all(|w| *w >= 0.0)
    });
    c.check(ok, format!("early-stopped anytime ensemble normalized ({} accepted)", run.latest().map_or(0, |e| e.accepted_count())));
    c.finish();
}

#[test]
fn criterion_10_numerical_suite() {
    let mut c = Criterion::new("10 (numerical suite)");

    let sims: Vec<Box<dyn Simulator>> = vec![
        Box::new(UnknownMean::new(UnknownMeanOptions::default()).unwrap()),
        Box::new(Mixture::new(MixtureOptions::default()).unwrap()),
        Box::new(Exponential::new(ExponentialOptions::default()).unwrap()),
        Box::new(LinkedNormal::new(LinkedNormalOptions::default()).unwrap()),
    ];
    for sim in &sims {
        let us = seeds(&**sim, 100, 10);
        let thetas: Vec<Vec<f64>> = (0..100).map(|i| vec![0.1 + 0.05 * i as f64]).collect();
        let err = max_fd_rel_err(&**sim, &thetas, &us);
        c.check(err < JACOBIAN_REL_TOL, format!("{} FD rel err {err:.1e}", sim.name()));
    }

    // linearization residual at converged optima
    for sim in &sims {
        let config = OptimizerConfig {
            method: if sim.d_theta() == sim.d_y() { Method::Newton } else { Method::GaussNewton },
            ..OptimizerConfig::default()
        };
        let ens = omc_batch(&**sim, 50, f64::INFINITY, &config, 11);
        let mut worst_ratio: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for p in ens.particles().iter().filter(|p| p.accepted) {
            let theta = p.theta_opt[0];
            let j = sim.analytic_jacobian(&p.theta_opt, &p.seed).unwrap();
            let f0 = sim.forward(&p.theta_opt, &p.seed).unwrap();
            let resid = |h: f64| {
                let f = sim.forward(&[theta + h], &p.seed).unwrap();
                (0..f.len())
                    .map(|r| (f[r] - f0[r] - j[(r, 0)] * h).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            let h = 1e-3 * theta.abs().max(1e-2);
            let (r1, r2) = (resid(h), resid(h / 2.0));
            max_abs = max_abs.max(r1 / (h * h));
            if r1 > 1e-9 * h {
                worst_ratio = worst_ratio.max((r1 / r2 - 4.0).abs());
            }
        }
        c.check(
            worst_ratio < 0.5 && max_abs.is_finite(),
            format!("{} residual/‖δ‖² ≤ {max_abs:.2e}, halving ratio off 4 by ≤ {worst_ratio:.2}", sim.name()),
        );
    }

    // global rescaling of raw weights is invisible after normalization
    let sim = Exponential::new(ExponentialOptions::default()).unwrap();
    let ens = omc_batch(&sim, 500, 0.01, &OptimizerConfig::default(), 12);
    let mut worst: f64 = 0.0;
    for log_gamma in [-300.0, -1.5, 2.0, 400.0] {
        let shifted: Vec<_> = ens
            .particles()
            .iter()
            .cloned()
            .map(|mut p| {
                p.log_weight += log_gamma;
                p
            })
            .collect();
        let other = WeightedEnsemble::normalize(shifted, ens.epsilon()).unwrap();
        for (a, b) in ens.weights().iter().zip(other.weights()) {
            worst = worst.max((a - b).abs());
        }
    }
    c.check(worst <= RESCALE_TOL, format!("rescaling changes weights by ≤ {worst:.1e}"));

    // det(JᵀJ)^{-1/2} homogeneity: scaling J by s scales the weight by s^{-D}
    let prior = omc::prior::Prior::independent(vec![omc::prior::Marginal::Normal { mean: 0.0, sd: 1.0 }; 2]);
    let j = nalgebra::DMatrix::from_row_slice(3, 2, &[1.0, 0.3, -0.2, 2.0, 0.7, 0.1]);
    let w0 = particle_weight(&[0.1, -0.2], &j, &prior).unwrap();
    let mut worst: f64 = 0.0;
    for s in [1e-3, 0.5, 3.0, 1e4] {
        let w = particle_weight(&[0.1, -0.2], &(&j * s), &prior).unwrap();
        worst = worst.max(rel_err(w, w0 * s.powi(-2)));
    }
    c.check(worst < 1e-12, format!("homogeneity rel err {worst:.1e}"));
    c.finish();
}
