//! Transition weights of the bosonic Glauber dynamics.
//!
//! A move changes one site's occupation by `dk != 0` and carries the weight
//!
//! ```text
//! w(k, dk_i) = (1 + gamma_i(dk)) * alpha * xi^(|dk|-1) / ((|dk|-1)!)^2 * F(k_i, dk)
//! ```
//!
//! where `gamma_i(dk) = tanh(-dk * beta * h_i)` is the thermal bias and `F`
//! is the bosonic stimulation factor. Everything is computed in the log
//! domain: `F` grows factorially while `xi^(|dk|-1)` shrinks geometrically,
//! and the `1 + gamma` factor underflows long before `tanh` saturates.
//!
//! Forward and reverse weights then satisfy detailed balance,
//! `ln w(k, dk) - ln w(k + dk, -dk) = -beta * dE`, to machine precision:
//! the stimulation factor is symmetric under `(k, dk) -> (k+dk, -dk)` and
//! `ln(1 + tanh(x))` is evaluated as `ln 2 - softplus(-2x)`, which cancels
//! exactly in the difference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{local_field_unchecked, OccupationState, ProblemInstance};

/// Rate constant, suppression coefficient, temperature, and jump cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    /// Base rate constant, sets the overall timescale.
    pub alpha: f64,
    /// Multi-transition suppression, `0 < xi <= 1`.
    pub xi: f64,
    /// Inverse temperature; `f64::INFINITY` means strict downhill moves.
    pub beta: f64,
    /// Largest |dk| enumerated; `None` means the full range `N`.
    pub delta_k_max: Option<u32>,
}

impl DynamicsParams {
    pub fn new(alpha: f64, xi: f64, beta: f64) -> Result<Self> {
        let p = Self {
            alpha,
            xi,
            beta,
            delta_k_max: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta_k_max(mut self, delta_k_max: u32) -> Result<Self> {
        if delta_k_max < 1 {
            return Err(Error::InvalidParameter("delta_k_max must be >= 1".into()));
        }
        self.delta_k_max = Some(delta_k_max);
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::InvalidParameter("xi must lie in (0, 1]".into()));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidParameter("beta must be >= 0".into()));
        }
        if let Some(dkm) = self.delta_k_max {
            if dkm < 1 {
                return Err(Error::InvalidParameter("delta_k_max must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Jump cutoff clamped to the instance's boson number.
    pub fn effective_delta_k_max(&self, n: u32) -> u32 {
        self.delta_k_max.map_or(n, |d| d.min(n))
    }
}

/// One admissible move and its log rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionWeight {
    pub site: usize,
    pub delta_k: i32,
    pub log_rate: f64,
}

fn check_transition(
    instance: &ProblemInstance,
    state: &OccupationState,
    site: usize,
    delta_k: i32,
) -> Result<()> {
    state.validate(instance)?;
    if site >= instance.site_count() {
        return Err(Error::IndexOutOfRange(format!(
            "site {site} out of range for {} sites",
            instance.site_count()
        )));
    }
    let k = i64::from(state.occupation(site));
    let target = k + i64::from(delta_k);
    if delta_k == 0 || target < 0 || target > i64::from(instance.bosons_per_site()) {
        return Err(Error::InvalidTransition(format!(
            "delta_k = {delta_k} from k = {k} leaves [0, {}]",
            instance.bosons_per_site()
        )));
    }
    Ok(())
}

/// Thermal bias factor `tanh(-dk * beta * h_i)`.
pub fn glauber_gamma(
    instance: &ProblemInstance,
    state: &OccupationState,
    site: usize,
    delta_k: i32,
    beta: f64,
) -> Result<f64> {
    check_transition(instance, state, site, delta_k)?;
    let h = local_field_unchecked(instance, state.occupations(), site);
    Ok(bias_argument(delta_k, beta, h).tanh())
}

/// `x = -dk * beta * h`, with the `beta = inf, h = 0` limit pinned to 0.
fn bias_argument(delta_k: i32, beta: f64, h: f64) -> f64 {
    let x = -f64::from(delta_k) * beta * h;
    if x.is_nan() {
        0.0
    } else {
        x
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 40.0 {
        t
    } else {
        t.exp().ln_1p()
    }
}

/// `ln(1 + tanh(x))`, exact where tanh saturates.
fn ln_one_plus_tanh(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0; // 1 + tanh(0) = 1 exactly
    }
    std::f64::consts::LN_2 - softplus(-2.0 * x)
}

fn ln_factorial(n: u32) -> f64 {
    let mut acc = 0.0;
    for i in 2..=u64::from(n) {
        acc += (i as f64).ln();
    }
    acc
}

/// Log of the final-state stimulation factor
/// `F(k, dk) = prod_{m=1}^{dk} (k+m)(N-k-dk+m)` for `dk > 0` and
/// `prod_{m=1}^{|dk|} (k-|dk|+m)(N-k+m)` for `dk < 0`.
///
/// Exactly symmetric under `(k, dk) -> (k+dk, -dk)`: both directions sum
/// logs of the same integer factors in the same order.
pub fn log_stimulation_factor(n: u32, k: u32, delta_k: i32) -> Result<f64> {
    let k = i64::from(k);
    let n = i64::from(n);
    let target = k + i64::from(delta_k);
    if delta_k == 0 || target < 0 || target > n {
        return Err(Error::InvalidTransition(format!(
            "delta_k = {delta_k} from k = {k} leaves [0, {n}]"
        )));
    }
    // Canonicalize to the upward direction so both orientations of the same
    // pair of states produce bit-identical sums.
    let (lo, dk) = if delta_k > 0 {
        (k, i64::from(delta_k))
    } else {
        (target, i64::from(-delta_k))
    };
    let mut acc = 0.0;
    for m in 1..=dk {
        acc += (((lo + m) * (n - lo - dk + m)) as f64).ln();
    }
    Ok(acc)
}

/// Log transition weight `ln w(k, dk_i)`.
pub fn transition_log_weight(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    state: &OccupationState,
    site: usize,
    delta_k: i32,
) -> Result<f64> {
    params.validate()?;
    check_transition(instance, state, site, delta_k)?;
    let a = delta_k.unsigned_abs();
    if a > params.effective_delta_k_max(instance.bosons_per_site()) {
        return Err(Error::InvalidTransition(format!(
            "|delta_k| = {a} exceeds cutoff {}",
            params.effective_delta_k_max(instance.bosons_per_site())
        )));
    }
    let h = local_field_unchecked(instance, state.occupations(), site);
    Ok(log_weight_unchecked(
        instance,
        params,
        state.occupation(site),
        h,
        delta_k,
    ))
}

pub(crate) fn log_weight_unchecked(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    k: u32,
    field: f64,
    delta_k: i32,
) -> f64 {
    let a = delta_k.unsigned_abs();
    let x = bias_argument(delta_k, params.beta, field);
    let ln_f = log_stimulation_factor(instance.bosons_per_site(), k, delta_k)
        .expect("caller guarantees a valid transition");
    ln_one_plus_tanh(x) + params.alpha.ln() + f64::from(a - 1) * params.xi.ln()
        - 2.0 * ln_factorial(a - 1)
        + ln_f
}

/// Every admissible move from `state`, duplicate-free.
pub fn rate_table(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    state: &OccupationState,
) -> Result<Vec<TransitionWeight>> {
    params.validate()?;
    state.validate(instance)?;
    let mut out = Vec::new();
    rate_table_into(instance, params, state.occupations(), &mut out);
    Ok(out)
}

/// Allocation-free variant used by the samplers and generator assembly.
pub(crate) fn rate_table_into(
    instance: &ProblemInstance,
    params: &DynamicsParams,
    k: &[u32],
    out: &mut Vec<TransitionWeight>,
) {
    out.clear();
    let n = instance.bosons_per_site();
    let dkm = params.effective_delta_k_max(n);
    for site in 0..instance.site_count() {
        let ki = k[site];
        let h = local_field_unchecked(instance, k, site);
        let down = ki.min(dkm);
        for a in 1..=down {
            let dk = -(a as i32);
            out.push(TransitionWeight {
                site,
                delta_k: dk,
                log_rate: log_weight_unchecked(instance, params, ki, h, dk),
            });
        }
        let up = (n - ki).min(dkm);
        for a in 1..=up {
            let dk = a as i32;
            out.push(TransitionWeight {
                site,
                delta_k: dk,
                log_rate: log_weight_unchecked(instance, params, ki, h, dk),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::energy;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn two_site() -> ProblemInstance {
        ProblemInstance::new(vec![vec![0.0, -10.0], vec![-10.0, 0.0]], 1, -0.5).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let inst = two_site();
        let state = OccupationState::new(vec![1, 1]);
        assert_eq!(glauber_gamma(&inst, &state, 0, -1, 0.0).unwrap(), 0.0);
        let g = glauber_gamma(&inst, &state, 0, -1, 0.1).unwrap();
        assert!((g - (-1.05f64).tanh()).abs() < 1e-15, "g = {g}");
        assert!((g + 0.7818063576087741).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_odd_in_delta_k() {
        let inst = ProblemInstance::new(
            vec![vec![0.0, 2.5, -1.0], vec![2.5, 0.0, 0.5], vec![-1.0, 0.5, 0.0]],
            4,
            0.3,
        )
        .unwrap();
        let state = OccupationState::new(vec![2, 1, 3]);
        for dk in 1..=1i32 {
            let fwd = glauber_gamma(&inst, &state, 1, dk, 0.7).unwrap();
            let rev = glauber_gamma(&inst, &state, 1, -dk, 0.7).unwrap();
            assert_eq!(fwd, -rev);
        }
    }

    #[test]
    fn stimulation_factor_examples() {
        assert!((log_stimulation_factor(5, 0, 1).unwrap() - 5.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_stimulation_factor(1, 0, 1).unwrap(), 0.0);
        let expected = 576.0f64.ln(); // (1*2*3*4)^2
        assert!((log_stimulation_factor(4, 0, 4).unwrap() - expected).abs() < 1e-12);
        assert!(log_stimulation_factor(4, 3, 2).is_err());
        assert!(log_stimulation_factor(4, 3, 0).is_err());
    }

    #[test]
    fn stimulation_factor_is_exactly_symmetric() {
        for n in 1u32..=9 {
            for k in 0..=n {
                for dk in 1..=(n - k) {
                    let fwd = log_stimulation_factor(n, k, dk as i32).unwrap();
                    let rev = log_stimulation_factor(n, k + dk, -(dk as i32)).unwrap();
                    assert_eq!(fwd, rev, "n={n} k={k} dk={dk}");
                }
            }
        }
    }

    #[test]
    fn single_step_stimulation_matches_closed_form() {
        let n = 7u32;
        for k in 0..n {
            let expected = (f64::from(k + 1) * f64::from(n - k)).ln();
            assert!((log_stimulation_factor(n, k, 1).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_examples() {
        let inst = two_site();
        let params = DynamicsParams::new(1.0, 1e-3, 0.1).unwrap();
        let state = OccupationState::new(vec![1, 1]);
        let lw = transition_log_weight(&inst, &params, &state, 0, -1).unwrap();
        let expected = 1.0 - (1.05f64).tanh(); // (1 + gamma) * alpha * F, F = 1
        assert!((lw.exp() - expected).abs() < 1e-12);
        assert!((lw.exp() - 0.21819).abs() < 1e-5);

        // At infinite temperature single moves carry no suppression at all.
        let hot = DynamicsParams::new(1.5, 1e-3, 0.0).unwrap();
        let inst4 = ProblemInstance::new(vec![vec![0.0; 2]; 2], 4, -0.25).unwrap();
        let state4 = OccupationState::new(vec![2, 0]);
        let lw = transition_log_weight(&inst4, &hot, &state4, 0, 1).unwrap();
        let f = log_stimulation_factor(4, 2, 1).unwrap();
        assert_eq!(lw, 1.5f64.ln() + f);

        // Four-boson jump: suppression xi^3 / (3!)^2 against F = (4!)^2.
        let lw = transition_log_weight(&inst4, &hot.with_beta(0.0), &state4, 1, 4).unwrap();
        let expected = 1.5f64.ln() + 3.0 * 1e-3f64.ln() - 2.0 * 6.0f64.ln() + 576.0f64.ln();
        assert!((lw - expected).abs() < 1e-12);
    }

    #[test]
    fn weight_rejects_out_of_range() {
        let inst = two_site();
        let params = DynamicsParams::new(1.0, 1e-3, 0.1).unwrap();
        let state = OccupationState::new(vec![1, 1]);
        assert!(transition_log_weight(&inst, &params, &state, 0, 1).is_err());
        assert!(transition_log_weight(&inst, &params, &state, 0, 0).is_err());
        let capped = params.with_delta_k_max(1).unwrap();
        let inst4 = ProblemInstance::new(vec![vec![0.0; 2]; 2], 4, -0.25).unwrap();
        let wide = OccupationState::new(vec![0, 0]);
        assert!(transition_log_weight(&inst4, &capped, &wide, 0, 2).is_err());
    }

    #[test]
    fn zero_temperature_freezes_uphill_moves() {
        let inst = two_site();
        let params = DynamicsParams::new(1.0, 1e-3, f64::INFINITY).unwrap();
        let top = OccupationState::new(vec![1, 1]);
        // Leaving the ground state is fully suppressed.
        let lw = transition_log_weight(&inst, &params, &top, 0, -1).unwrap();
        assert_eq!(lw, f64::NEG_INFINITY);
        // Falling into it happens at the doubled rate.
        let near = OccupationState::new(vec![0, 1]);
        let lw = transition_log_weight(&inst, &params, &near, 0, 1).unwrap();
        assert!((lw - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rate_table_counts() {
        let single = ProblemInstance::new(vec![vec![0.0]], 1, 1.0).unwrap();
        let params = DynamicsParams::new(1.0, 1e-3, 0.2).unwrap();
        let table = rate_table(&single, &params, &OccupationState::new(vec![0])).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!((table[0].site, table[0].delta_k), (0, 1));

        let inst = ProblemInstance::new(vec![vec![0.0; 2]; 2], 4, -0.25).unwrap();
        let table = rate_table(&inst, &params, &OccupationState::new(vec![2, 2])).unwrap();
        assert_eq!(table.len(), 8);

        let capped = params.with_delta_k_max(1).unwrap();
        let table = rate_table(&inst, &capped, &OccupationState::new(vec![2, 2])).unwrap();
        assert_eq!(table.len(), 4);
    }

    #[test]
    fn rates_scale_linearly_in_alpha() {
        let inst = two_site();
        let state = OccupationState::new(vec![0, 1]);
        let base = DynamicsParams::new(1.0, 1e-3, 0.3).unwrap();
        let doubled = DynamicsParams::new(2.0, 1e-3, 0.3).unwrap();
        for dk in [-1i32, 1] {
            let site = if dk < 0 { 1 } else { 0 };
            let a = transition_log_weight(&inst, &base, &state, site, dk).unwrap();
            let b = transition_log_weight(&inst, &doubled, &state, site, dk).unwrap();
            assert!((b - a - 2.0f64.ln()).abs() < 1e-15);
        }
    }

    fn random_instance(rng: &mut impl Rng) -> (ProblemInstance, OccupationState) {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=8);
        let mut j = vec![0.0; m * m];
        for i in 0..m {
            for l in (i + 1)..m {
                let v = rng.gen_range(-10.0..10.0);
                j[i * m + l] = v;
                j[l * m + i] = v;
            }
        }
        let inst = ProblemInstance::from_flat(m, j, n, rng.gen_range(-2.0..2.0)).unwrap();
        let k: Vec<u32> = (0..m).map(|_| rng.gen_range(0..=n)).collect();
        (inst, OccupationState::new(k))
    }

    #[test]
    fn detailed_balance_on_random_draws() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..500 {
            let (inst, state) = random_instance(&mut rng);
            let n = inst.bosons_per_site();
            let m = inst.site_count();
            let params = DynamicsParams::new(1.0, 1e-3, rng.gen_range(0.0..2.0)).unwrap();
            let site = rng.gen_range(0..m);
            let k = state.occupation(site);
            let lo = -(k as i64);
            let hi = (n - k) as i64;
            let dk = rng.gen_range(lo..=hi);
            if dk == 0 {
                continue;
            }
            let mut k2 = state.occupations().to_vec();
            k2[site] = (k2[site] as i64 + dk) as u32;
            let reverse = OccupationState::new(k2);
            let fwd = transition_log_weight(&inst, &params, &state, site, dk as i32).unwrap();
            let rev =
                transition_log_weight(&inst, &params, &reverse, site, -(dk as i32)).unwrap();
            let de = energy(&inst, &reverse).unwrap() - energy(&inst, &state).unwrap();
            assert!(
                (fwd - rev + params.beta * de).abs() < 1e-9,
                "detailed balance violated: {} vs {}",
                fwd - rev,
                -params.beta * de
            );
        }
    }

    proptest! {
        #[test]
        fn rate_table_is_complete_and_finite(seed in 0u64..500) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let (inst, state) = random_instance(&mut rng);
            let params = DynamicsParams::new(1.0, 1e-3, rng.gen_range(0.0..5.0)).unwrap();
            let table = rate_table(&inst, &params, &state).unwrap();
            let n = inst.bosons_per_site();
            let expected: usize = (0..inst.site_count())
                .map(|i| (n - state.occupation(i) + state.occupation(i)) as usize)
                .sum();
            prop_assert_eq!(table.len(), expected);
            let mut seen = std::collections::HashSet::new();
            for t in &table {
                prop_assert!(!t.log_rate.is_nan());
                prop_assert!(seen.insert((t.site, t.delta_k)));
            }
        }
    }
}
