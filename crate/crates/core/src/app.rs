//! Experiment drivers: each takes a config, runs the corresponding
//! simulation, and renders a CSV document with a fixed header.

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::config::{
    AnnealConfig, EquilibriumConfig, InitKind, KmcConfig, MaxcutConfig, OdeConfig, QuantumConfig,
    QuantumInit, RunConfig,
};
use crate::error::{Error, Result};
use crate::graph::{brute_force_maxcut, cut_value, maxcut_instance, parse_edge_list, readout_signs};
use crate::kmc::{
    ensemble_statistics, final_states_ensemble, AnnealingSchedule, InitMode, anneal_ensemble,
};
use crate::master::{
    boltzmann_distribution, equilibration_time_ode, evolve_distribution, l1_distance,
    InitialDistribution, StateIndexer,
};
use crate::model::{
    beta_for_error, equilibrium_stats, ground_search, ProblemInstance, StatisticsKind,
};
use crate::ode::OdeOptions;
use crate::quantum::{
    build_site_operators, evolve_density_matrix, feedback_generator_residual, hermiticity_defect,
    offdiagonal_mass, trace, FeedbackParams,
};

fn kind_name(kind: StatisticsKind) -> &'static str {
    match kind {
        StatisticsKind::Bosonic => "bosonic",
        StatisticsKind::Distinguishable => "distinguishable",
    }
}

pub fn run_equilibrium(cfg: &EquilibriumConfig) -> Result<String> {
    let grid = cfg.kt_over_jn.build()?;
    if !(cfg.j_scale > 0.0) {
        return Err(Error::Config("j_scale must be positive".into()));
    }
    let mut csv = String::from("kind,N,kT_over_JN,mean_spin_over_N,error_prob\n");
    for &kind in &cfg.kinds {
        for &n in &cfg.n_list {
            let instance = cfg.instance.build_with_n(n)?;
            for &x in &grid {
                let kt = x * cfg.j_scale * f64::from(n);
                let stats = equilibrium_stats(&instance, 1.0 / kt, kind)?;
                let spin = stats.mean_spin[0] / f64::from(n);
                let eps = stats.error_probability.unwrap_or(f64::NAN);
                let _ = writeln!(csv, "{},{n},{x},{spin},{eps}", kind_name(kind));
            }
        }
    }
    Ok(csv)
}

pub fn run_ode(cfg: &OdeConfig) -> Result<String> {
    let instance = cfg.instance.build()?;
    let beta = cfg.params.required_beta()?;
    let params = cfg.params.to_params(beta)?;
    let grid = cfg.t_grid.build()?;
    let init = match cfg.init {
        InitKind::Half => InitialDistribution::HalfFilled,
        InitKind::Uniform => InitialDistribution::Uniform,
    };
    let p_eq = boltzmann_distribution(&instance, beta)?;
    let indexer = StateIndexer::new(&instance)?;
    let ground = ground_search(&instance)?;
    let ground_indices: Vec<usize> = ground
        .minimizers
        .iter()
        .map(|s| indexer.encode(s.occupations()))
        .collect::<Result<_>>()?;
    let trajectory = evolve_distribution(&instance, &params, &init, &grid, &OdeOptions::default())?;
    let mut csv = String::from("t,L1_to_eq,ground_pop\n");
    for snapshot in &trajectory {
        let l1 = l1_distance(&snapshot.p, &p_eq);
        let ground_pop: f64 = ground_indices.iter().map(|&i| snapshot.p[i]).sum();
        let _ = writeln!(csv, "{},{l1},{ground_pop}", snapshot.time);
    }
    if let Ok(tau) = equilibration_time_ode(&trajectory, &p_eq, 0.02) {
        eprintln!("equilibration time (L1 <= 0.02): {tau}");
    }
    Ok(csv)
}

pub fn run_kmc(cfg: &KmcConfig) -> Result<String> {
    let instance = cfg.instance.build()?;
    let beta = match (cfg.params.beta, cfg.error_target) {
        (Some(beta), None) => beta,
        (None, Some(target)) => beta_for_error(&instance, target, StatisticsKind::Bosonic)?,
        _ => {
            return Err(Error::Config(
                "set exactly one of params.beta or error_target".into(),
            ))
        }
    };
    let params = cfg.params.to_params(beta)?;
    let times = cfg.t_grid.build()?;
    let schedule = AnnealingSchedule::constant(1.0 / beta, *times.last().expect("non-empty"))?;
    let init = match cfg.init {
        InitKind::Half => InitMode::Half,
        InitKind::Uniform => InitMode::Uniform,
    };
    let summary = ensemble_statistics(
        &instance, &params, &schedule, init, &times, cfg.n_traj, cfg.seed,
    )?;
    let mut csv = String::from("t,error_est,error_stderr,mean_energy\n");
    for (i, &t) in summary.times.iter().enumerate() {
        let (eps, se) = summary.error_curve[i];
        let _ = writeln!(csv, "{t},{eps},{se},{}", summary.mean_energy_curve[i]);
    }
    Ok(csv)
}

pub fn run_anneal(cfg: &AnnealConfig) -> Result<String> {
    let mut csv = String::from("tau0,N,residual_energy,stderr\n");
    for &tau0 in &cfg.tau0_list {
        for &n in &cfg.n_list {
            let instance = cfg.instance.build_with_n(n)?;
            let params = cfg.params.to_params(0.0)?;
            let summary = anneal_ensemble(&instance, &params, tau0, cfg.n_traj, cfg.seed)?;
            let (res, se) = summary.residual_energy;
            let _ = writeln!(csv, "{tau0},{n},{res},{se}");
        }
    }
    Ok(csv)
}

pub fn run_quantum(cfg: &QuantumConfig) -> Result<String> {
    let instance = cfg.instance.build()?;
    let m = instance.site_count();
    let ops = build_site_operators(instance.bosons_per_site(), m)?;
    let mut j = Array2::<f64>::zeros((m, m));
    for a in 0..m {
        for b in 0..m {
            j[(a, b)] = instance.coupling(a, b);
        }
    }
    let params = FeedbackParams {
        gamma_feedback: cfg.gamma_feedback,
        eta: cfg.eta,
        gamma_meas: cfg.gamma_meas,
        alpha: cfg.alpha,
    };
    let dim = ops.dim();
    let rho0: Array2<C64> = match &cfg.init {
        QuantumInit::MaximallyMixed => {
            Array2::eye(dim).mapv(|v: f64| C64::new(v / dim as f64, 0.0))
        }
        QuantumInit::PureState { occupations } => {
            let indexer = StateIndexer::new(&instance)?;
            let idx = indexer.encode(occupations)?;
            let mut rho = Array2::zeros((dim, dim));
            rho[(idx, idx)] = C64::new(1.0, 0.0);
            rho
        }
    };
    let grid = cfg.t_grid.build()?;
    let states = evolve_density_matrix(&ops, &params, &j, &rho0, &grid, &OdeOptions::default())?;
    let mut csv = String::from("t,trace_defect,offdiag_mass,max_residual\n");
    for (t, rho) in &states {
        let tr = trace(rho);
        let defect = ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt().max(hermiticity_defect(rho));
        let offdiag = offdiagonal_mass(rho);
        let residual = feedback_generator_residual(&ops, &j, rho)?;
        let _ = writeln!(csv, "{t},{defect},{offdiag},{residual}");
    }
    Ok(csv)
}

/// Hot starting temperature for cut annealing: a few times the largest
/// single-site energy scale.
pub fn maxcut_default_t0(instance: &ProblemInstance) -> f64 {
    let n = f64::from(instance.bosons_per_site());
    let m = instance.site_count();
    let mut max_row = 0.0f64;
    for i in 0..m {
        let row: f64 = instance.coupling_row(i).iter().map(|j| j.abs()).sum();
        max_row = max_row.max(row);
    }
    4.0 * n * (max_row + instance.lambda().abs()).max(1.0)
}

pub fn run_maxcut(cfg: &MaxcutConfig) -> Result<String> {
    let text = std::fs::read_to_string(&cfg.graph)?;
    let graph = parse_edge_list(&text)?;
    let instance = maxcut_instance(&graph, cfg.n, 0.0)?;
    let params = cfg.params.to_params(0.0)?;
    let t0 = cfg.t0.unwrap_or_else(|| maxcut_default_t0(&instance));
    let schedule = AnnealingSchedule::exponential(t0, cfg.tau0, 4.0 * cfg.tau0, cfg.n_slices)?;
    let finals = final_states_ensemble(
        &instance,
        &params,
        &schedule,
        InitMode::Uniform,
        cfg.n_runs,
        cfg.seed,
    )?;
    let mut best = f64::NEG_INFINITY;
    for state in &finals {
        let signs = readout_signs(state, instance.bosons_per_site());
        best = best.max(cut_value(&graph, &signs)?);
    }
    let mut csv = String::from("graph,n_vertices,sim_best_cut,oracle_cut\n");
    if cfg.oracle {
        let (optimum, _) = brute_force_maxcut(&graph)?;
        println!("simulated best cut: {best}    brute-force optimum: {optimum}");
        let _ = writeln!(csv, "{},{},{best},{optimum}", cfg.graph, graph.n_vertices);
    } else {
        println!("simulated best cut: {best}");
        let _ = writeln!(csv, "{},{},{best},", cfg.graph, graph.n_vertices);
    }
    Ok(csv)
}

/// Dispatch a parsed run configuration.
pub fn execute(config: &RunConfig) -> Result<String> {
    match config {
        RunConfig::Equilibrium(c) => run_equilibrium(c),
        RunConfig::Ode(c) => run_ode(c),
        RunConfig::Kmc(c) => run_kmc(c),
        RunConfig::Anneal(c) => run_anneal(c),
        RunConfig::Quantum(c) => run_quantum(c),
        RunConfig::Maxcut(c) => run_maxcut(c),
    }
}
