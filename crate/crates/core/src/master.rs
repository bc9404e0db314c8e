//! Master-equation evolution of the full distribution over occupation
//! states,
//!
//! ```text
//! dp_k/dt = sum_i sum_{dk} [ -w(k, dk_i) p_k + w(k + dk_i, -dk_i) p_{k+dk_i} ]
//! ```
//!
//! on the `(N+1)^M` hypercube, plus equilibration-time extraction and the
//! closed-form two-level rate equation.

use crate::error::{Error, Result};
use crate::model::{
    energy_unchecked, for_each_state, ProblemInstance, OccupationState, STATE_COUNT_GUARD,
};
use crate::ode::{integrate_to_grid, OdeOptions};
use crate::rates::{rate_table_into, DynamicsParams};

/// Bijection between occupation vectors and flat indices,
/// `index = sum_i k_i (N+1)^i`.
#[derive(Debug, Clone)]
pub struct StateIndexer {
    m: usize,
    n: u32,
    dim: usize,
}

impl StateIndexer {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        let dim = instance.check_state_guard(STATE_COUNT_GUARD)?;
        Ok(Self {
            m: instance.site_count(),
            n: instance.bosons_per_site(),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encode(&self, k: &[u32]) -> Result<usize> {
        if k.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "state has {} sites, indexer has {}",
                k.len(),
                self.m
            )));
        }
        let radix = self.n as usize + 1;
        let mut idx = 0usize;
        for &ki in k.iter().rev() {
            if ki > self.n {
                return Err(Error::InvalidParameter(format!(
                    "occupation {ki} exceeds N = {}",
                    self.n
                )));
            }
            idx = idx * radix + ki as usize;
        }
        Ok(idx)
    }

    pub fn decode(&self, index: usize) -> Result<Vec<u32>> {
        if index >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "index {index} out of range for {} states",
                self.dim
            )));
        }
        let radix = self.n as usize + 1;
        let mut rem = index;
        let mut k = vec![0u32; self.m];
        for ki in k.iter_mut() {
            *ki = (rem % radix) as u32;
            rem /= radix;
        }
        Ok(k)
    }
}

/// Probability vector over occupation states at a point in time.
#[derive(Debug, Clone)]
pub struct DistributionOnStates {
    pub p: Vec<f64>,
    pub time: f64,
}

impl DistributionOnStates {
    pub fn validate(&self) -> Result<()> {
        for &pi in &self.p {
            if pi < -1e-9 {
                return Err(Error::NegativeProbability(pi));
            }
        }
        let total: f64 = self.p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Exact bosonic Boltzmann distribution in indexer order.
pub fn boltzmann_distribution(instance: &ProblemInstance, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(
            "beta must be finite and >= 0".into(),
        ));
    }
    let indexer = StateIndexer::new(instance)?;
    let mut energies = Vec::with_capacity(indexer.dim());
    let mut e_min = f64::INFINITY;
    for_each_state(instance.site_count(), instance.bosons_per_site(), |k| {
        let e = energy_unchecked(instance, k);
        e_min = e_min.min(e);
        energies.push(e);
    });
    let mut p: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = p.iter().sum();
    for pi in &mut p {
        *pi /= z;
    }
    Ok(p)
}

/// Sparse flow list representation of the master-equation generator at
/// fixed parameters: `dp = diag .* p + sum_flows rate * p[src] -> dp[dst]`.
pub struct Generator {
    dim: usize,
    diag: Vec<f64>,
    flows: Vec<(u32, u32, f64)>,
}

impl Generator {
    pub fn build(instance: &ProblemInstance, params: &DynamicsParams) -> Result<Self> {
        params.validate()?;
        if !params.beta.is_finite() {
            return Err(Error::InvalidParameter(
                "generator assembly needs finite beta".into(),
            ));
        }
        let indexer = StateIndexer::new(instance)?;
        let dim = indexer.dim();
        let mut diag = vec![0.0; dim];
        let mut flows = Vec::new();
        let mut table = Vec::new();
        let radix_pow: Vec<i64> = (0..instance.site_count())
            .map(|i| (i64::from(instance.bosons_per_site()) + 1).pow(i as u32))
            .collect();
        let mut src = 0usize;
        for_each_state(instance.site_count(), instance.bosons_per_site(), |k| {
            rate_table_into(instance, params, k, &mut table);
            for t in &table {
                let rate = t.log_rate.exp();
                let dst = (src as i64 + i64::from(t.delta_k) * radix_pow[t.site]) as usize;
                diag[src] -= rate;
                flows.push((src as u32, dst as u32, rate));
            }
            src += 1;
        });
        Ok(Self { dim, diag, flows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal of the generator (negative total outflow per state).
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal flows as `(src, dst, rate)` triples.
    pub fn flows(&self) -> &[(u32, u32, f64)] {
        &self.flows
    }

    /// `dp = G p`.
    pub fn apply(&self, p: &[f64], dp: &mut [f64]) {
        for (dpi, (di, pi)) in dp.iter_mut().zip(self.diag.iter().zip(p)) {
            *dpi = di * pi;
        }
        for &(src, dst, rate) in &self.flows {
            dp[dst as usize] += rate * p[src as usize];
        }
    }

    /// Dense column-generator matrix; column `s` is `G e_s`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.dim]; self.dim];
        for (s, &d) in self.diag.iter().enumerate() {
            g[s][s] = d;
        }
        for &(src, dst, rate) in &self.flows {
            g[dst as usize][src as usize] += rate;
        }
        g
    }
}

/// Right-hand side of the master equation for an arbitrary distribution.
pub fn master_rhs(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    p: &[f64],
) -> Result<Vec<f64>> {
    let generator = Generator::build(instance, params)?;
    if p.len() != generator.dim() {
        return Err(Error::DimensionMismatch(format!(
            "distribution has {} entries, state space has {}",
            p.len(),
            generator.dim()
        )));
    }
    let mut dp = vec![0.0; p.len()];
    generator.apply(p, &mut dp);
    Ok(dp)
}

/// Supported initial conditions for distribution evolution.
#[derive(Debug, Clone)]
pub enum InitialDistribution {
    /// Point mass on the half-filled state `k_i = floor(N/2)`.
    HalfFilled,
    /// Uniform over all occupation vectors (infinite-temperature state).
    Uniform,
    Explicit(Vec<f64>),
}

impl InitialDistribution {
    pub fn build(&self, instance: &ProblemInstance) -> Result<Vec<f64>> {
        let indexer = StateIndexer::new(instance)?;
        match self {
            Self::HalfFilled => {
                let mut p = vec![0.0; indexer.dim()];
                let half = OccupationState::half_filled(instance);
                p[indexer.encode(half.occupations())?] = 1.0;
                Ok(p)
            }
            Self::Uniform => Ok(vec![1.0 / indexer.dim() as f64; indexer.dim()]),
            Self::Explicit(p) => {
                if p.len() != indexer.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "initial distribution has {} entries, expected {}",
                        p.len(),
                        indexer.dim()
                    )));
                }
                let d = DistributionOnStates {
                    p: p.clone(),
                    time: 0.0,
                };
                d.validate()?;
                Ok(p.clone())
            }
        }
    }
}

/// Evolve `p0` and sample it on `grid` (which must start at or after 0).
///
/// Outputs are renormalized to unit mass; any component below `-1e-9`
/// aborts the integration.
pub fn evolve_distribution(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    p0: &InitialDistribution,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<DistributionOnStates>> {
    let generator = Generator::build(instance, params)?;
    let p_init = p0.build(instance)?;
    let mut out = Vec::with_capacity(grid.len());
    integrate_to_grid(
        |_t, y, dy| generator.apply(y, dy),
        0.0,
        &p_init,
        grid,
        opts,
        |t, y| {
            let mut p = y.to_vec();
            let mut total = 0.0;
            for &pi in &p {
                if pi < -1e-9 {
                    return Err(Error::NegativeProbability(pi));
                }
                total += pi;
            }
            if !(total > 0.0) {
                return Err(Error::Integration(format!(
                    "probability mass vanished at t = {t}"
                )));
            }
            for pi in &mut p {
                *pi /= total;
            }
            out.push(DistributionOnStates { p, time: t });
            Ok(())
        },
    )?;
    Ok(out)
}

/// L1 distance between two probability vectors.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// First time along a sampled trajectory at which the L1 distance to
/// `p_eq` drops to `tol`, linearly interpolated between bracketing samples.
pub fn equilibration_time_ode(
    trajectory: &[DistributionOnStates],
    p_eq: &[f64],
    tol: f64,
) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let mut prev: Option<(f64, f64)> = None;
    for snapshot in trajectory {
        let d = l1_distance(&snapshot.p, p_eq);
        if d <= tol {
            return Ok(match prev {
                // Crossing inside the bracket; distances are sampled, so
                // interpolate linearly.
                Some((t_prev, d_prev)) if d_prev > tol => {
                    t_prev + (snapshot.time - t_prev) * (d_prev - tol) / (d_prev - d)
                }
                _ => snapshot.time,
            });
        }
        prev = Some((snapshot.time, d));
    }
    Err(Error::NotConverged)
}

/// Closed-form solution of the two-level low-temperature rate equation
/// `dn1/dt = -dn2/dt = alpha (n1 + 1) n2` with `n1 + n2 = N`.
pub fn rate_equation_two_level(n1_0: f64, n2_0: f64, alpha: f64, t: f64) -> (f64, f64) {
    let total = n1_0 + n2_0;
    if n2_0 == 0.0 {
        return (n1_0, n2_0);
    }
    // n2(t) = (N+1) u / (1 + u), u = c exp(-alpha (N+1) t).
    let c = n2_0 / (total + 1.0 - n2_0);
    let u = c * (-alpha * (total + 1.0) * t).exp();
    let n2 = (total + 1.0) * u / (1.0 + u);
    (total - n2, n2)
}
