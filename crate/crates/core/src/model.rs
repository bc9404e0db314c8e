//! Problem instances, energies, and exact equilibrium statistics.
//!
//! A problem is an Ising-type coupling matrix over `M` sites, each holding
//! `N` two-state bosons. A microstate is the vector `k` of spin-up
//! occupation numbers, with site spin `S_i = 2 k_i - N`. The energy is
//!
//! ```text
//! E(k) = sum_{i<j} J_ij S_i S_j + lambda * N * sum_i S_i
//! ```
//!
//! so changing `k_i` by `dk` changes the energy by exactly
//! `2 * dk * local_field(i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of microstates exact enumeration will walk.
pub const STATE_COUNT_GUARD: u64 = 10_000_000;

/// Coupling matrix, field coefficient, and site geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    m: usize,
    n: u32,
    coupling: Vec<f64>, // row-major M x M, symmetric, zero diagonal
    lambda: f64,
}

impl ProblemInstance {
    /// Build an instance from a square coupling matrix.
    pub fn new(coupling: Vec<Vec<f64>>, n: u32, lambda: f64) -> Result<Self> {
        let m = coupling.len();
        let mut flat = Vec::with_capacity(m * m);
        for row in &coupling {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "coupling matrix row has length {}, expected {}",
                    row.len(),
                    m
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(m, flat, n, lambda)
    }

    /// Build an instance from a row-major flattened coupling matrix.
    pub fn from_flat(m: usize, coupling: Vec<f64>, n: u32, lambda: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("site count must be >= 1".into()));
        }
        if n < 1 {
            return Err(Error::InvalidParameter(
                "bosons per site must be >= 1".into(),
            ));
        }
        if coupling.len() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix has {} entries, expected {}",
                coupling.len(),
                m * m
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        for i in 0..m {
            if coupling[i * m + i] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "coupling diagonal must be zero, J[{i}][{i}] = {}",
                    coupling[i * m + i]
                )));
            }
            for j in 0..m {
                let v = coupling[i * m + j];
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "coupling J[{i}][{j}] is not finite"
                    )));
                }
                if v != coupling[j * m + i] {
                    return Err(Error::InvalidParameter(format!(
                        "coupling matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            m,
            n,
            coupling,
            lambda,
        })
    }

    /// Single-site instance whose per-particle excitation costs exactly `gap`.
    ///
    /// With `lambda = gap / (2N)` a transition `k -> k+1` changes the energy
    /// by `2 * lambda * N = gap`.
    pub fn two_level(n: u32, gap: f64) -> Result<Self> {
        if !(gap > 0.0) {
            return Err(Error::InvalidParameter(
                "two-level gap must be positive".into(),
            ));
        }
        Self::from_flat(1, vec![0.0], n, gap / (2.0 * f64::from(n)))
    }

    /// All-pairs instance with a uniform coupling.
    pub fn complete_graph(m: usize, coupling: f64, n: u32, lambda: f64) -> Result<Self> {
        let mut j = vec![coupling; m * m];
        for i in 0..m {
            j[i * m + i] = 0.0;
        }
        Self::from_flat(m, j, n, lambda)
    }

    pub fn site_count(&self) -> usize {
        self.m
    }

    pub fn bosons_per_site(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.m + j]
    }

    pub fn coupling_row(&self, i: usize) -> &[f64] {
        &self.coupling[i * self.m..(i + 1) * self.m]
    }

    /// Number of microstates, `(N+1)^M`.
    pub fn state_count(&self) -> u128 {
        (u128::from(self.n) + 1).pow(self.m as u32)
    }

    /// Errors out when the state space exceeds `guard`.
    pub fn check_state_guard(&self, guard: u64) -> Result<usize> {
        let size = self.state_count();
        if size > u128::from(guard) {
            return Err(Error::StateSpaceTooLarge { size, guard });
        }
        Ok(size as usize)
    }
}

/// Occupation-number microstate: `k[i]` spin-up bosons on site `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationState {
    k: Vec<u32>,
}

impl OccupationState {
    pub fn new(k: Vec<u32>) -> Self {
        Self { k }
    }

    /// All sites at `floor(N/2)` spin-up bosons.
    pub fn half_filled(instance: &ProblemInstance) -> Self {
        Self {
            k: vec![instance.bosons_per_site() / 2; instance.site_count()],
        }
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if self.k.len() != instance.site_count() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} sites, instance has {}",
                self.k.len(),
                instance.site_count()
            )));
        }
        for (i, &ki) in self.k.iter().enumerate() {
            if ki > instance.bosons_per_site() {
                return Err(Error::InvalidParameter(format!(
                    "occupation k[{i}] = {ki} exceeds N = {}",
                    instance.bosons_per_site()
                )));
            }
        }
        Ok(())
    }

    pub fn occupations(&self) -> &[u32] {
        &self.k
    }

    pub fn occupation(&self, i: usize) -> u32 {
        self.k[i]
    }

    pub(crate) fn occupations_mut(&mut self) -> &mut [u32] {
        &mut self.k
    }

    /// Site spin `S_i = 2 k_i - N`.
    pub fn spin(&self, i: usize, n: u32) -> i64 {
        2 * i64::from(self.k[i]) - i64::from(n)
    }

    /// Sign of each site spin: -1, 0, or +1.
    pub fn sign_pattern(&self, n: u32) -> Vec<i8> {
        self.k
            .iter()
            .map(|&ki| {
                let s = 2 * i64::from(ki) - i64::from(n);
                match s.cmp(&0) {
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                    std::cmp::Ordering::Greater => 1,
                }
            })
            .collect()
    }
}

/// Walk every occupation vector in mixed-radix order (site 0 fastest).
pub(crate) fn for_each_state(m: usize, n: u32, mut f: impl FnMut(&[u32])) {
    let mut k = vec![0u32; m];
    loop {
        f(&k);
        let mut i = 0;
        loop {
            if i == m {
                return;
            }
            if k[i] < n {
                k[i] += 1;
                break;
            }
            k[i] = 0;
            i += 1;
        }
    }
}

/// Energy of a microstate.
pub fn energy(instance: &ProblemInstance, state: &OccupationState) -> Result<f64> {
    state.validate(instance)?;
    Ok(energy_unchecked(instance, state.occupations()))
}

pub(crate) fn energy_unchecked(instance: &ProblemInstance, k: &[u32]) -> f64 {
    let m = instance.site_count();
    let n = i64::from(instance.bosons_per_site());
    let mut e = 0.0;
    let mut spin_sum = 0i64;
    for i in 0..m {
        let si = 2 * i64::from(k[i]) - n;
        spin_sum += si;
        let row = instance.coupling_row(i);
        for (j, &jij) in row.iter().enumerate().skip(i + 1) {
            let sj = 2 * i64::from(k[j]) - n;
            e += jij * (si as f64) * (sj as f64);
        }
    }
    e + instance.lambda() * (n as f64) * (spin_sum as f64)
}

/// Local field `h_i = lambda*N + sum_{j != i} J_ij S_j`.
///
/// Changing `k_i` by `dk` changes the energy by `2 * dk * h_i`.
pub fn local_field(instance: &ProblemInstance, state: &OccupationState, site: usize) -> Result<f64> {
    state.validate(instance)?;
    if site >= instance.site_count() {
        return Err(Error::IndexOutOfRange(format!(
            "site {site} out of range for {} sites",
            instance.site_count()
        )));
    }
    Ok(local_field_unchecked(instance, state.occupations(), site))
}

pub(crate) fn local_field_unchecked(instance: &ProblemInstance, k: &[u32], site: usize) -> f64 {
    let n = i64::from(instance.bosons_per_site());
    let mut h = instance.lambda() * (n as f64);
    let row = instance.coupling_row(site);
    for (j, &jij) in row.iter().enumerate() {
        if j != site {
            let sj = 2 * i64::from(k[j]) - n;
            h += jij * (sj as f64);
        }
    }
    h
}

/// Which counting rule weights the microstates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticsKind {
    /// Each occupation vector is one microstate.
    Bosonic,
    /// Each occupation vector carries the binomial degeneracy
    /// `prod_i C(N, k_i)` of labelled particles.
    Distinguishable,
}

/// Exact equilibrium summary from full enumeration.
#[derive(Debug, Clone)]
pub struct EquilibriumStats {
    /// Natural log of the partition function.
    pub log_z: f64,
    pub mean_energy: f64,
    pub mean_spin: Vec<f64>,
    /// `None` when the ground sign pattern is degenerate.
    pub error_probability: Option<f64>,
    pub kind: StatisticsKind,
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    // ln C(n, k) by summing logs; exact enough for weights.
    let k = k.min(n - k.min(n));
    let mut acc = 0.0;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

/// Streaming log-sum-exp accumulator over weighted observables.
struct ShiftedAccumulator {
    max_exp: f64,
    total: f64,
    sums: Vec<f64>,
}

impl ShiftedAccumulator {
    fn new(n_obs: usize) -> Self {
        Self {
            max_exp: f64::NEG_INFINITY,
            total: 0.0,
            sums: vec![0.0; n_obs],
        }
    }

    fn add(&mut self, exponent: f64, observables: impl FnOnce(&mut dyn FnMut(usize, f64))) {
        if exponent > self.max_exp {
            if self.max_exp.is_finite() {
                let scale = (self.max_exp - exponent).exp();
                self.total *= scale;
                for s in &mut self.sums {
                    *s *= scale;
                }
            }
            self.max_exp = exponent;
        }
        let w = (exponent - self.max_exp).exp();
        self.total += w;
        observables(&mut |idx, value| self.sums[idx] += w * value);
    }
}

/// Exact Boltzmann statistics of an instance at inverse temperature `beta`.
pub fn equilibrium_stats(
    instance: &ProblemInstance,
    beta: f64,
    kind: StatisticsKind,
) -> Result<EquilibriumStats> {
    if !(beta >= 0.0) || beta.is_nan() || beta == f64::INFINITY {
        return Err(Error::InvalidParameter(
            "beta must be finite and >= 0".into(),
        ));
    }
    instance.check_state_guard(STATE_COUNT_GUARD)?;
    let ground = ground_search(instance)?;
    let sign_pattern = ground.unique_sign_pattern().ok();

    let m = instance.site_count();
    let n = instance.bosons_per_site();
    // Observables: [energy, S_0..S_{M-1}, success]
    let mut acc = ShiftedAccumulator::new(m + 2);
    for_each_state(m, n, |k| {
        let e = energy_unchecked(instance, k);
        let mut exponent = -beta * (e - ground.min_energy);
        if kind == StatisticsKind::Distinguishable {
            for &ki in k {
                exponent += ln_binomial(n, ki);
            }
        }
        let success = match &sign_pattern {
            Some(pattern) => sign_matches(k, n, pattern),
            None => false,
        };
        acc.add(exponent, |put| {
            put(0, e);
            for (i, &ki) in k.iter().enumerate() {
                put(1 + i, (2 * i64::from(ki) - i64::from(n)) as f64);
            }
            put(m + 1, if success { 1.0 } else { 0.0 });
        });
    });

    let log_z = -beta * ground.min_energy + acc.max_exp + acc.total.ln();
    let mean_energy = acc.sums[0] / acc.total;
    let mean_spin = acc.sums[1..=m].iter().map(|s| s / acc.total).collect();
    let error_probability = sign_pattern.map(|_| {
        let eps = 1.0 - acc.sums[m + 1] / acc.total;
        eps.clamp(0.0, 1.0)
    });
    Ok(EquilibriumStats {
        log_z,
        mean_energy,
        mean_spin,
        error_probability,
        kind,
    })
}

/// True when every site spin is nonzero and matches the target sign.
pub(crate) fn sign_matches(k: &[u32], n: u32, pattern: &[i8]) -> bool {
    k.iter().zip(pattern).all(|(&ki, &s)| {
        let spin = 2 * i64::from(ki) - i64::from(n);
        (spin > 0 && s > 0) || (spin < 0 && s < 0)
    })
}

/// Probability that a single sign readout misses the ground pattern.
///
/// Sites with `S_i = 0` always count as failure, so even `N` keeps a
/// residual error floor at any temperature.
pub fn error_probability(
    instance: &ProblemInstance,
    beta: f64,
    kind: StatisticsKind,
) -> Result<f64> {
    let stats = equilibrium_stats(instance, beta, kind)?;
    stats.error_probability.ok_or(Error::DegenerateGroundState)
}

/// Exhaustive ground-state search result.
#[derive(Debug, Clone)]
pub struct GroundSearch {
    pub min_energy: f64,
    pub minimizers: Vec<OccupationState>,
    n: u32,
}

impl GroundSearch {
    /// The shared sign pattern of all minimizers.
    ///
    /// Errors when minimizers disagree or any ground spin is exactly zero.
    pub fn unique_sign_pattern(&self) -> Result<Vec<i8>> {
        let mut pattern: Option<Vec<i8>> = None;
        for state in &self.minimizers {
            let p = state.sign_pattern(self.n);
            if p.contains(&0) {
                return Err(Error::DegenerateGroundState);
            }
            match &pattern {
                None => pattern = Some(p),
                Some(prev) if *prev != p => return Err(Error::DegenerateGroundState),
                Some(_) => {}
            }
        }
        pattern.ok_or(Error::DegenerateGroundState)
    }
}

/// Enumerate every microstate and return all global minimizers.
pub fn ground_search(instance: &ProblemInstance) -> Result<GroundSearch> {
    instance.check_state_guard(STATE_COUNT_GUARD)?;
    let m = instance.site_count();
    let n = instance.bosons_per_site();
    let mut min_energy = f64::INFINITY;
    let mut minimizers: Vec<OccupationState> = Vec::new();
    for_each_state(m, n, |k| {
        let e = energy_unchecked(instance, k);
        if minimizers.is_empty() {
            min_energy = e;
            minimizers.push(OccupationState::new(k.to_vec()));
            return;
        }
        let tol = 1e-9 * min_energy.abs().max(1.0);
        if e < min_energy - tol {
            min_energy = e;
            minimizers.clear();
            minimizers.push(OccupationState::new(k.to_vec()));
        } else if e <= min_energy + tol {
            minimizers.push(OccupationState::new(k.to_vec()));
        }
    });
    Ok(GroundSearch {
        min_energy,
        minimizers,
        n,
    })
}

/// Invert `error_probability` in `beta` by bracketed bisection.
pub fn beta_for_error(
    instance: &ProblemInstance,
    target: f64,
    kind: StatisticsKind,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(
            "target error must lie in (0, 1)".into(),
        ));
    }
    let eps0 = error_probability(instance, 0.0, kind)?;
    if target >= eps0 {
        return Err(Error::TargetUnreachable(format!(
            "target {target} >= error {eps0} at infinite temperature"
        )));
    }
    let mut lo = 0.0f64;
    let mut eps_lo = eps0;
    let mut hi = 1e-4f64;
    let mut eps_hi = error_probability(instance, hi, kind)?;
    while eps_hi > target {
        if eps_hi > eps_lo + 1e-9 {
            return Err(Error::NonMonotoneBracket);
        }
        lo = hi;
        eps_lo = eps_hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::TargetUnreachable(format!(
                "error still {eps_hi} at beta = {lo}"
            )));
        }
        eps_hi = error_probability(instance, hi, kind)?;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let eps_mid = error_probability(instance, mid, kind)?;
        if eps_mid > eps_lo + 1e-9 || eps_mid < eps_hi - 1e-9 {
            return Err(Error::NonMonotoneBracket);
        }
        if eps_mid > target {
            lo = mid;
            eps_lo = eps_mid;
        } else {
            hi = mid;
            eps_hi = eps_mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let eps = error_probability(instance, beta, kind)?;
    if (eps - target).abs() > 1e-6 {
        return Err(Error::TargetUnreachable(format!(
            "bisection stalled at beta = {beta}, error {eps} vs target {target}"
        )));
    }
    Ok(beta)
}
