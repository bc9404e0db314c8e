//! Kinetic Monte Carlo sampling of the same transition rates the master
//! equation integrates: Gillespie's direct method with exponential waiting
//! times, piecewise-constant temperature schedules, and reproducible
//! per-trajectory RNG streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::StateIndexer;
use crate::model::{
    beta_for_error, energy_unchecked, for_each_state, ground_search, sign_matches,
    OccupationState, ProblemInstance, StatisticsKind,
};
use crate::rates::{rate_table_into, DynamicsParams, TransitionWeight};

pub const DEFAULT_SCHEDULE_SLICES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Exponential,
}

/// Temperature protocol `T(t)`, discretized into piecewise-constant slices.
///
/// Exponential waiting times are memoryless, so resampling at slice
/// boundaries reproduces the piecewise-constant process exactly; the slice
/// count only controls how well the slices track the continuous schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub kind: ScheduleKind,
    /// Initial temperature (energy units, k_B = 1).
    pub t0: f64,
    /// Exponential time constant; unused for constant schedules.
    pub tau0: Option<f64>,
    pub t_end: f64,
    pub n_slices: usize,
}

impl AnnealingSchedule {
    pub fn constant(temperature: f64, t_end: f64) -> Result<Self> {
        let s = Self {
            kind: ScheduleKind::Constant,
            t0: temperature,
            tau0: None,
            t_end,
            n_slices: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(t0: f64, tau0: f64, t_end: f64, n_slices: usize) -> Result<Self> {
        let s = Self {
            kind: ScheduleKind::Exponential,
            t0,
            tau0: Some(tau0),
            t_end,
            n_slices,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !self.t0.is_finite() {
            return Err(Error::InvalidParameter(
                "schedule temperature must be positive".into(),
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(
                "schedule t_end must be finite and >= 0".into(),
            ));
        }
        if self.n_slices < 1 {
            return Err(Error::InvalidParameter(
                "schedule needs at least one slice".into(),
            ));
        }
        if self.kind == ScheduleKind::Exponential {
            match self.tau0 {
                Some(tau0) if tau0 > 0.0 && tau0.is_finite() => {}
                _ => {
                    return Err(Error::InvalidParameter(
                        "exponential schedule needs tau0 > 0".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn temperature(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.t0,
            ScheduleKind::Exponential => self.t0 * (-t / self.tau0.unwrap()).exp(),
        }
    }

    /// Inverse temperature in slice `s`, sampled at the slice midpoint.
    fn slice_beta(&self, slice: usize) -> f64 {
        let dt = self.t_end / self.n_slices as f64;
        let mid = (slice as f64 + 0.5) * dt;
        1.0 / self.temperature(mid)
    }
}

/// How a trajectory's first state is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Deterministic `k_i = floor(N/2)` on every site.
    Half,
    /// Every `k_i` independently uniform on `[0, N]`.
    Uniform,
}

/// Draw an initial occupation state.
pub fn sample_initial_state(
    instance: &ProblemInstance,
    mode: InitMode,
    rng: &mut impl Rng,
) -> OccupationState {
    let n = instance.bosons_per_site();
    match mode {
        InitMode::Half => OccupationState::half_filled(instance),
        InitMode::Uniform => OccupationState::new(
            (0..instance.site_count())
                .map(|_| rng.gen_range(0..=n))
                .collect(),
        ),
    }
}

/// Independent per-trajectory RNG: one ChaCha key per master seed, one
/// stream per trajectory index.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

struct StepScratch {
    table: Vec<TransitionWeight>,
    weights: Vec<f64>,
}

impl StepScratch {
    fn new() -> Self {
        Self {
            table: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Total rate via shifted exponentiation; `None` when every channel
    /// has underflowed to zero.
    fn total_rate(
        &mut self,
        instance: &ProblemInstance,
        params: &DynamicsParams,
        k: &[u32],
    ) -> Option<f64> {
        rate_table_into(instance, params, k, &mut self.table);
        let max_log = self
            .table
            .iter()
            .map(|t| t.log_rate)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max_log.is_finite() {
            return None;
        }
        self.weights.clear();
        let mut total = 0.0;
        for t in &self.table {
            let w = (t.log_rate - max_log).exp();
            self.weights.push(w);
            total += w;
        }
        let rate = total * max_log.exp();
        if rate > 0.0 {
            Some(rate)
        } else {
            None
        }
    }

    /// Channel choice proportional to the shifted weights.
    fn choose(&self, rng: &mut impl Rng) -> TransitionWeight {
        let total: f64 = self.weights.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (t, &w) in self.table.iter().zip(&self.weights) {
            acc += w;
            if target < acc {
                return *t;
            }
        }
        *self.table.last().expect("non-empty table")
    }
}

fn exponential_waiting_time(rate: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return -u.ln() / rate;
        }
    }
}

/// One Gillespie step at the params' fixed temperature: exponential waiting
/// time at the total rate, then a channel drawn proportionally to its rate.
pub fn kmc_step(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    state: &OccupationState,
    rng: &mut impl Rng,
) -> Result<(f64, TransitionWeight)> {
    params.validate()?;
    state.validate(instance)?;
    let mut scratch = StepScratch::new();
    let rate = scratch
        .total_rate(instance, params, state.occupations())
        .ok_or(Error::AbsorbingState)?;
    let dt = exponential_waiting_time(rate, rng);
    Ok((dt, scratch.choose(rng)))
}

/// Full event log of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// `(time, site, delta_k)` in strictly increasing time order.
    pub events: Vec<(f64, usize, i32)>,
    /// States observed at the requested output times (right-continuous).
    pub sampled_states: Vec<OccupationState>,
    pub final_state: OccupationState,
    pub final_energy: f64,
}

fn check_output_times(output_times: &[f64], t_end: f64) -> Result<()> {
    if output_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "output times must be non-decreasing".into(),
        ));
    }
    if output_times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(Error::InvalidParameter(format!(
            "output times must lie within [0, {t_end}]"
        )));
    }
    Ok(())
}

/// Shared stepping loop. `on_event` sees every transition; `on_sample`
/// sees the state at each requested output time, in order.
#[allow(clippy::too_many_arguments)]
fn run_trajectory_core(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    schedule: &AnnealingSchedule,
    state: &mut OccupationState,
    rng: &mut impl Rng,
    output_times: &[f64],
    mut on_event: impl FnMut(f64, usize, i32),
    mut on_sample: impl FnMut(usize, &OccupationState),
) -> Result<()> {
    schedule.validate()?;
    params.validate()?;
    state.validate(instance)?;
    check_output_times(output_times, schedule.t_end)?;

    let mut scratch = StepScratch::new();
    let mut t = 0.0f64;
    let mut out_pos = 0usize;
    let slice_len = schedule.t_end / schedule.n_slices as f64;

    if schedule.t_end > 0.0 {
        for slice in 0..schedule.n_slices {
            let boundary = if slice + 1 == schedule.n_slices {
                schedule.t_end
            } else {
                (slice + 1) as f64 * slice_len
            };
            let slice_params = params.with_beta(schedule.slice_beta(slice));
            loop {
                let Some(rate) = scratch.total_rate(instance, &slice_params, state.occupations())
                else {
                    // Every channel is frozen out: nothing can fire before
                    // the slice boundary.
                    t = boundary;
                    break;
                };
                let dt = exponential_waiting_time(rate, rng);
                if t + dt > boundary {
                    // Memoryless: advance to the boundary and resample
                    // under the next slice's temperature.
                    t = boundary;
                    break;
                }
                let t_new = t + dt;
                while out_pos < output_times.len() && output_times[out_pos] < t_new {
                    on_sample(out_pos, state);
                    out_pos += 1;
                }
                let chosen = scratch.choose(rng);
                let k = state.occupations_mut();
                k[chosen.site] = (i64::from(k[chosen.site]) + i64::from(chosen.delta_k)) as u32;
                on_event(t_new, chosen.site, chosen.delta_k);
                t = t_new;
            }
            while out_pos < output_times.len() && output_times[out_pos] < t {
                on_sample(out_pos, state);
                out_pos += 1;
            }
        }
    }
    while out_pos < output_times.len() {
        on_sample(out_pos, state);
        out_pos += 1;
    }
    Ok(())
}

/// Run one trajectory from a mode-drawn initial state, logging everything.
pub fn run_trajectory(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    schedule: &AnnealingSchedule,
    init: InitMode,
    output_times: &[f64],
    seed: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut state = sample_initial_state(instance, init, &mut rng);
    let mut events = Vec::new();
    let mut sampled = Vec::with_capacity(output_times.len());
    run_trajectory_core(
        instance,
        params,
        schedule,
        &mut state,
        &mut rng,
        output_times,
        |t, site, dk| events.push((t, site, dk)),
        |_, s| sampled.push(s.clone()),
    )?;
    let final_energy = energy_unchecked(instance, state.occupations());
    Ok(TrajectoryRecord {
        seed,
        events,
        sampled_states: sampled,
        final_state: state,
        final_energy,
    })
}

/// Ensemble observables on a fixed grid of output times.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub times: Vec<f64>,
    /// Readout error estimate and its binomial standard error per time.
    pub error_curve: Vec<(f64, f64)>,
    pub mean_energy_curve: Vec<f64>,
    /// Mean final energy above the ground energy, with standard error.
    pub residual_energy: (f64, f64),
}

enum EnsembleInit<'a> {
    Mode(InitMode),
    /// Unnormalized CDF over indexer order plus the indexer to decode with.
    Boltzmann(&'a [f64], &'a StateIndexer),
}

fn draw_initial<'a>(
    instance: &ProblemInstance,
    init: &EnsembleInit<'a>,
    rng: &mut impl Rng,
) -> Result<OccupationState> {
    match init {
        EnsembleInit::Mode(mode) => Ok(sample_initial_state(instance, *mode, rng)),
        EnsembleInit::Boltzmann(cdf, indexer) => {
            let total = *cdf.last().expect("non-empty CDF");
            let target = rng.gen::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= target);
            Ok(OccupationState::new(indexer.decode(idx.min(cdf.len() - 1))?))
        }
    }
}

fn run_ensemble(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    schedule: &AnnealingSchedule,
    init: &EnsembleInit<'_>,
    output_times: &[f64],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    let ground = ground_search(instance)?;
    let pattern = ground.unique_sign_pattern()?;
    let n = instance.bosons_per_site();

    struct TrajStats {
        success: Vec<bool>,
        energy: Vec<f64>,
        final_energy: f64,
    }

    let per_traj: Vec<TrajStats> = (0..n_traj)
        .into_par_iter()
        .map(|j| -> Result<TrajStats> {
            let mut rng = stream_rng(master_seed, j as u64);
            let mut state = draw_initial(instance, init, &mut rng)?;
            let mut success = vec![false; output_times.len()];
            let mut energy = vec![0.0; output_times.len()];
            run_trajectory_core(
                instance,
                params,
                schedule,
                &mut state,
                &mut rng,
                output_times,
                |_, _, _| {},
                |idx, s| {
                    success[idx] = sign_matches(s.occupations(), n, &pattern);
                    energy[idx] = energy_unchecked(instance, s.occupations());
                },
            )?;
            let final_energy = energy_unchecked(instance, state.occupations());
            Ok(TrajStats {
                success,
                energy,
                final_energy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_times = output_times.len();
    let nf = n_traj as f64;
    let mut error_curve = Vec::with_capacity(n_times);
    let mut mean_energy_curve = Vec::with_capacity(n_times);
    for idx in 0..n_times {
        let successes = per_traj.iter().filter(|t| t.success[idx]).count() as f64;
        let eps = 1.0 - successes / nf;
        let stderr = (eps * (1.0 - eps) / nf).sqrt();
        error_curve.push((eps, stderr));
        mean_energy_curve.push(per_traj.iter().map(|t| t.energy[idx]).sum::<f64>() / nf);
    }
    let mean_final = per_traj.iter().map(|t| t.final_energy).sum::<f64>() / nf;
    let var_final = if n_traj > 1 {
        per_traj
            .iter()
            .map(|t| (t.final_energy - mean_final).powi(2))
            .sum::<f64>()
            / (nf - 1.0)
    } else {
        0.0
    };
    Ok(EnsembleSummary {
        n_traj,
        times: output_times.to_vec(),
        error_curve,
        mean_energy_curve,
        residual_energy: (mean_final - ground.min_energy, (var_final / nf).sqrt()),
    })
}

/// Readout-error and energy statistics over `n_traj` independent
/// trajectories; trajectory `j` uses the RNG stream `(master_seed, j)`.
pub fn ensemble_statistics(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    schedule: &AnnealingSchedule,
    init: InitMode,
    output_times: &[f64],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    run_ensemble(
        instance,
        params,
        schedule,
        &EnsembleInit::Mode(init),
        output_times,
        n_traj,
        master_seed,
    )
}

/// Time for the sampled readout error to settle onto its equilibrium value.
///
/// Runs a constant-temperature ensemble at the inverse temperature whose
/// equilibrium error equals `eps_target`, starting from the uniform
/// (infinite-temperature) ensemble, and returns the first output time at
/// which the estimate stays within the band `(1 + band) * eps_target` for
/// three consecutive checkpoints.
pub fn equilibration_time_kmc(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    eps_target: f64,
    output_times: &[f64],
    n_traj: usize,
    master_seed: u64,
    band: f64,
) -> Result<f64> {
    if output_times.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three output times".into(),
        ));
    }
    let beta = beta_for_error(instance, eps_target, StatisticsKind::Bosonic)?;
    let schedule =
        AnnealingSchedule::constant(1.0 / beta, *output_times.last().expect("non-empty"))?;
    let summary = ensemble_statistics(
        instance,
        &params.with_beta(beta),
        &schedule,
        InitMode::Uniform,
        output_times,
        n_traj,
        master_seed,
    )?;
    let threshold = (1.0 + band) * eps_target;
    for i in 0..summary.error_curve.len().saturating_sub(2) {
        if summary.error_curve[i..i + 3]
            .iter()
            .all(|&(eps, _)| eps <= threshold)
        {
            return Ok(summary.times[i]);
        }
    }
    Err(Error::NotConverged)
}

/// Exponential anneal from the temperature whose equilibrium error is 0.7,
/// over `t_end = 4 tau0`, starting from that equilibrium ensemble.
pub fn anneal_ensemble(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    tau0: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    let beta0 = beta_for_error(instance, 0.7, StatisticsKind::Bosonic)?;
    let schedule = AnnealingSchedule::exponential(
        1.0 / beta0,
        tau0,
        4.0 * tau0,
        DEFAULT_SCHEDULE_SLICES,
    )?;
    let indexer = StateIndexer::new(instance)?;
    // Unnormalized Boltzmann CDF at the starting temperature.
    let mut e_min = f64::INFINITY;
    let mut energies = Vec::with_capacity(indexer.dim());
    for_each_state(instance.site_count(), instance.bosons_per_site(), |k| {
        let e = energy_unchecked(instance, k);
        e_min = e_min.min(e);
        energies.push(e);
    });
    let mut cdf = Vec::with_capacity(energies.len());
    let mut acc = 0.0;
    for e in energies {
        acc += (-beta0 * (e - e_min)).exp();
        cdf.push(acc);
    }
    let output_times: Vec<f64> = (0..=4).map(|i| i as f64 * tau0).collect();
    run_ensemble(
        instance,
        params,
        &schedule,
        &EnsembleInit::Boltzmann(&cdf, &indexer),
        &output_times,
        n_traj,
        master_seed,
    )
}

/// Final states of `n_traj` trajectories; the readout path for instances
/// whose ground sign pattern is degenerate (e.g. unbiased cut problems).
pub fn final_states_ensemble(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    schedule: &AnnealingSchedule,
    init: InitMode,
    n_traj: usize,
    master_seed: u64,
) -> Result<Vec<OccupationState>> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    (0..n_traj)
        .into_par_iter()
        .map(|j| -> Result<OccupationState> {
            let mut rng = stream_rng(master_seed, j as u64);
            let mut state = sample_initial_state(instance, init, &mut rng);
            run_trajectory_core(
                instance,
                params,
                schedule,
                &mut state,
                &mut rng,
                &[],
                |_, _, _| {},
                |_, _| {},
            )?;
            Ok(state)
        })
        .collect()
}
