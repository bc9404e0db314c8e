//! Dense density-matrix verifier for the measurement-feedback derivation.
//!
//! Builds per-site collective spin operators on the `(N+1)^M` product
//! space, checks that the feedback superoperator collapses to a coherent
//! Ising Hamiltonian for symmetric couplings, and integrates the resulting
//! Lindblad equation at small scale. This module is a verifier, not a
//! production simulator: everything is dense and guarded at dimension 4096.

use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lapack::eigvals_hermitian;
use crate::ode::{integrate_to_grid, OdeOptions};

pub const DENSE_DIM_GUARD: usize = 4096;

/// Per-site `S_z` and `S_-` embedded in the full product space.
///
/// In the occupation basis `|k>` (k spin-up bosons of N): `S_z` is diagonal
/// with eigenvalue `2k - N`, and `S_- |k> = sqrt(k (N - k + 1)) |k-1>`.
/// Site 0 is the least-significant digit of the product-space index,
/// matching the master-equation state indexer.
pub struct SiteOperators {
    n: u32,
    m: usize,
    dim: usize,
    sz: Vec<Array2<C64>>,
    s_minus: Vec<Array2<C64>>,
}

pub fn build_site_operators(n: u32, m: usize) -> Result<SiteOperators> {
    if n < 1 || m < 1 {
        return Err(Error::InvalidParameter(
            "need n >= 1 bosons and m >= 1 sites".into(),
        ));
    }
    let d = n as usize + 1;
    let dim = d
        .checked_pow(m as u32)
        .filter(|&dim| dim <= DENSE_DIM_GUARD)
        .ok_or(Error::StateSpaceTooLarge {
            size: (d as u128).pow(m as u32),
            guard: DENSE_DIM_GUARD as u64,
        })?;

    let mut sz_local = Array2::<C64>::zeros((d, d));
    let mut sm_local = Array2::<C64>::zeros((d, d));
    for k in 0..=n {
        let ki = k as usize;
        sz_local[(ki, ki)] = C64::new(2.0 * f64::from(k) - f64::from(n), 0.0);
        if k > 0 {
            let amp = (f64::from(k) * f64::from(n - k + 1)).sqrt();
            sm_local[(ki - 1, ki)] = C64::new(amp, 0.0);
        }
    }

    let embed = |local: &Array2<C64>, site: usize| -> Array2<C64> {
        let low = d.pow(site as u32);
        let high = dim / (low * d);
        let id_low = Array2::<C64>::eye(low);
        let id_high = Array2::<C64>::eye(high);
        kron(&kron(&id_high, local), &id_low)
    };

    let sz = (0..m).map(|i| embed(&sz_local, i)).collect();
    let s_minus = (0..m).map(|i| embed(&sm_local, i)).collect();
    Ok(SiteOperators {
        n,
        m,
        dim,
        sz,
        s_minus,
    })
}

impl SiteOperators {
    pub fn bosons_per_site(&self) -> u32 {
        self.n
    }

    pub fn site_count(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sz(&self, site: usize) -> &Array2<C64> {
        &self.sz[site]
    }

    pub fn s_minus(&self, site: usize) -> &Array2<C64> {
        &self.s_minus[site]
    }

    pub fn s_plus(&self, site: usize) -> Array2<C64> {
        adjoint(&self.s_minus[site])
    }
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Lindblad dissipator `D[C] rho = C rho C^+ - {C^+ C, rho} / 2`.
pub fn dissipator(c: &Array2<C64>, rho: &Array2<C64>) -> Array2<C64> {
    let cdag = adjoint(c);
    let cdc = cdag.dot(c);
    let half = C64::new(0.5, 0.0);
    c.dot(rho).dot(&cdag) - (cdc.dot(rho) + rho.dot(&cdc)) * half
}

/// Measurement-feedback rates: feedback gain, detector efficiency,
/// measurement rate, and dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackParams {
    pub gamma_feedback: f64,
    pub eta: f64,
    pub gamma_meas: f64,
    pub alpha: f64,
}

impl FeedbackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter("eta must lie in (0, 1]".into()));
        }
        for (name, v) in [
            ("gamma_feedback", self.gamma_feedback),
            ("gamma_meas", self.gamma_meas),
            ("alpha", self.alpha),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

fn validate_coupling(ops: &SiteOperators, j: &Array2<f64>) -> Result<()> {
    let m = ops.site_count();
    if j.shape() != [m, m] {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrix is {:?}, expected [{m}, {m}]",
            j.shape()
        )));
    }
    for i in 0..m {
        if j[(i, i)] != 0.0 {
            return Err(Error::InvalidParameter(
                "coupling diagonal must be zero".into(),
            ));
        }
        for l in 0..m {
            if j[(i, l)] != j[(l, i)] {
                return Err(Error::InvalidParameter(format!(
                    "coupling matrix is not symmetric at ({i},{l})"
                )));
            }
        }
    }
    Ok(())
}

fn validate_shape(ops: &SiteOperators, rho: &Array2<C64>) -> Result<()> {
    if rho.shape() != [ops.dim(), ops.dim()] {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {:?}, expected [{}, {}]",
            rho.shape(),
            ops.dim(),
            ops.dim()
        )));
    }
    Ok(())
}

/// Coupling Hamiltonian `H = sum_{i != j} J_ij S^z_i S^z_j` over ordered
/// pairs (twice the unordered pair sum).
pub fn ising_hamiltonian(ops: &SiteOperators, j: &Array2<f64>) -> Result<Array2<C64>> {
    validate_coupling(ops, j)?;
    let dim = ops.dim();
    let mut h = Array2::<C64>::zeros((dim, dim));
    for a in 0..ops.site_count() {
        for b in 0..ops.site_count() {
            if a != b && j[(a, b)] != 0.0 {
                h = h + C64::new(j[(a, b)], 0.0) * ops.sz(a).dot(ops.sz(b));
            }
        }
    }
    Ok(h)
}

/// Max-abs residual between the raw feedback superoperator
/// `-i sum_{i, j != i} [J_ij S^z_i, S^z_j rho + rho S^z_j]` and the coherent
/// form `-i [H, rho]` (feedback gain fixed at 1; the residual is linear in
/// it). Symmetric couplings must cancel to machine precision.
pub fn feedback_generator_residual(
    ops: &SiteOperators,
    j: &Array2<f64>,
    rho: &Array2<C64>,
) -> Result<f64> {
    validate_coupling(ops, j)?;
    validate_shape(ops, rho)?;
    let dim = ops.dim();
    let minus_i = C64::new(0.0, -1.0);
    let mut raw = Array2::<C64>::zeros((dim, dim));
    for a in 0..ops.site_count() {
        for b in 0..ops.site_count() {
            if a != b && j[(a, b)] != 0.0 {
                let meas = ops.sz(b).dot(rho) + rho.dot(ops.sz(b));
                let fb = C64::new(j[(a, b)], 0.0) * ops.sz(a).to_owned();
                raw = raw + minus_i * (fb.dot(&meas) - meas.dot(&fb));
            }
        }
    }
    let h = ising_hamiltonian(ops, j)?;
    let target = minus_i * commutator(&h, rho);
    let diff = raw - target;
    Ok(diff.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Per-site dephasing rate `kappa_i = Gamma^2/(eta gamma) sum_{j != i}
/// J_ij^2 + gamma`; the feedback-noise part vanishes with the gain.
fn dephasing_rates(params: &FeedbackParams, j: &Array2<f64>, m: usize) -> Result<Vec<f64>> {
    let mut rates = Vec::with_capacity(m);
    for i in 0..m {
        let j2: f64 = (0..m).filter(|&l| l != i).map(|l| j[(i, l)].powi(2)).sum();
        let feedback_noise = if params.gamma_feedback == 0.0 || j2 == 0.0 {
            0.0
        } else if params.gamma_meas == 0.0 {
            return Err(Error::InvalidParameter(
                "feedback with zero measurement rate has divergent noise".into(),
            ));
        } else {
            params.gamma_feedback.powi(2) / (params.eta * params.gamma_meas) * j2
        };
        rates.push(feedback_noise + params.gamma_meas);
    }
    Ok(rates)
}

/// Time derivative of the density matrix:
/// `-i Gamma [H, rho] + alpha sum_i D[S^-_i] rho + sum_i kappa_i D[S^z_i] rho`.
pub fn lindblad_rhs(
    ops: &SiteOperators,
    params: &FeedbackParams,
    j: &Array2<f64>,
    rho: &Array2<C64>,
) -> Result<Array2<C64>> {
    params.validate()?;
    validate_coupling(ops, j)?;
    validate_shape(ops, rho)?;
    let h = ising_hamiltonian(ops, j)?;
    let kappa = dephasing_rates(params, j, ops.site_count())?;
    let mut drho = C64::new(0.0, -params.gamma_feedback) * commutator(&h, rho);
    for (i, &rate) in kappa.iter().enumerate() {
        if params.alpha > 0.0 {
            drho = drho + C64::new(params.alpha, 0.0) * dissipator(ops.s_minus(i), rho);
        }
        if rate > 0.0 {
            drho = drho + C64::new(rate, 0.0) * dissipator(ops.sz(i), rho);
        }
    }
    Ok(drho)
}

/// Max-abs deviation from Hermiticity.
pub fn hermiticity_defect(rho: &Array2<C64>) -> f64 {
    let diff = rho - &adjoint(rho);
    diff.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Total absolute mass off the diagonal.
pub fn offdiagonal_mass(rho: &Array2<C64>) -> f64 {
    let mut acc = 0.0;
    for ((r, c), v) in rho.indexed_iter() {
        if r != c {
            acc += v.norm();
        }
    }
    acc
}

pub fn trace(rho: &Array2<C64>) -> C64 {
    rho.diag().sum()
}

fn smallest_eigenvalue(rho: &Array2<C64>) -> Result<f64> {
    // Symmetrize first; the defect is checked separately.
    let herm = (rho + &adjoint(rho)) * C64::new(0.5, 0.0);
    let n = herm.nrows();
    let mut buf: Vec<C64> = herm.iter().copied().collect();
    let vals = eigvals_hermitian(&mut buf, n)?;
    Ok(vals.first().copied().unwrap_or(f64::INFINITY))
}

fn check_state_invariants(rho: &Array2<C64>, context: &str) -> Result<()> {
    let defect = hermiticity_defect(rho);
    if defect > 1e-10 {
        return Err(Error::Integration(format!(
            "{context}: hermiticity defect {defect:.3e}"
        )));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::Integration(format!(
            "{context}: trace drifted to {tr}"
        )));
    }
    let min_eig = smallest_eigenvalue(rho)?;
    if min_eig < -1e-8 {
        return Err(Error::Integration(format!(
            "{context}: negative eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

/// Integrate the Lindblad equation and sample the state on `grid`.
///
/// Hermiticity, unit trace, and positivity are checked on the initial state
/// and at every sampled time.
pub fn evolve_density_matrix(
    ops: &SiteOperators,
    params: &FeedbackParams,
    j: &Array2<f64>,
    rho0: &Array2<C64>,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<(f64, Array2<C64>)>> {
    params.validate()?;
    validate_coupling(ops, j)?;
    validate_shape(ops, rho0)?;
    check_state_invariants(rho0, "initial state")?;

    let dim = ops.dim();
    let h = ising_hamiltonian(ops, j)?;
    let kappa = dephasing_rates(params, j, ops.site_count())?;
    let mut collapse: Vec<(f64, Array2<C64>)> = Vec::new();
    for (i, &rate) in kappa.iter().enumerate() {
        if params.alpha > 0.0 {
            collapse.push((params.alpha, ops.s_minus(i).clone()));
        }
        if rate > 0.0 {
            collapse.push((rate, ops.sz(i).clone()));
        }
    }
    let cdc: Vec<Array2<C64>> = collapse
        .iter()
        .map(|(_, c)| adjoint(c).dot(c))
        .collect();

    let pack = |rho: &Array2<C64>, out: &mut [f64]| {
        for (slot, v) in out.chunks_exact_mut(2).zip(rho.iter()) {
            slot[0] = v.re;
            slot[1] = v.im;
        }
    };
    let unpack = |data: &[f64]| -> Array2<C64> {
        Array2::from_shape_vec(
            (dim, dim),
            data.chunks_exact(2)
                .map(|s| C64::new(s[0], s[1]))
                .collect(),
        )
        .expect("packed layout matches")
    };

    let mut y0 = vec![0.0; 2 * dim * dim];
    pack(rho0, &mut y0);
    let mut out = Vec::with_capacity(grid.len());
    integrate_to_grid(
        |_t, y, dy| {
            let rho = unpack(y);
            let half = C64::new(0.5, 0.0);
            let mut drho = commutator(&h, &rho) * C64::new(0.0, -params.gamma_feedback);
            for ((rate, c), cdagc) in collapse.iter().zip(&cdc) {
                let term =
                    c.dot(&rho).dot(&adjoint(c)) - (cdagc.dot(&rho) + rho.dot(cdagc)) * half;
                drho = drho + term * C64::new(*rate, 0.0);
            }
            pack(&drho, dy);
        },
        0.0,
        &y0,
        grid,
        opts,
        |t, y| {
            let rho = unpack(y);
            check_state_invariants(&rho, &format!("t = {t}"))?;
            out.push((t, rho));
            Ok(())
        },
    )?;
    Ok(out)
}

/// Diagonal of the density matrix as a probability vector over occupation
/// states (same mixed-radix indexing as the classical state indexer).
pub fn diagonal_populations(rho: &Array2<C64>) -> Result<Vec<f64>> {
    let mut p = Vec::with_capacity(rho.nrows());
    let mut total = 0.0;
    for v in rho.diag().iter() {
        if v.im.abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry has imaginary part {:.3e}",
                v.im
            )));
        }
        if v.re < -1e-8 {
            return Err(Error::NegativeProbability(v.re));
        }
        p.push(v.re);
        total += v.re;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "diagonal populations sum to {total}"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn no_feedback(alpha: f64, gamma_meas: f64) -> FeedbackParams {
        FeedbackParams {
            gamma_feedback: 0.0,
            eta: 1.0,
            gamma_meas,
            alpha,
        }
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Array2<C64> {
        let mut a = Array2::<C64>::zeros((dim, dim));
        for r in 0..dim {
            for col in 0..dim {
                a[(r, col)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        (&a + &adjoint(&a)) * c(0.5)
    }

    fn random_symmetric_coupling(m: usize, rng: &mut impl Rng) -> Array2<f64> {
        let mut j = Array2::<f64>::zeros((m, m));
        for a in 0..m {
            for b in (a + 1)..m {
                let v = rng.gen_range(-1.0..1.0);
                j[(a, b)] = v;
                j[(b, a)] = v;
            }
        }
        j
    }

    #[test]
    fn spin_half_operators() {
        let ops = build_site_operators(1, 1).unwrap();
        assert_eq!(ops.sz(0), &array![[c(-1.0), c(0.0)], [c(0.0), c(1.0)]]);
        assert_eq!(
            ops.s_minus(0),
            &array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]]
        );
    }

    #[test]
    fn three_level_operators() {
        let ops = build_site_operators(2, 1).unwrap();
        let sz = ops.sz(0);
        assert_eq!(
            (sz[(0, 0)].re, sz[(1, 1)].re, sz[(2, 2)].re),
            (-2.0, 0.0, 2.0)
        );
        let sm = ops.s_minus(0);
        let amp = 2.0f64.sqrt();
        assert!((sm[(0, 1)].re - amp).abs() < 1e-15);
        assert!((sm[(1, 2)].re - amp).abs() < 1e-15);
        // Lowering annihilates the bottom of the ladder.
        let bottom: Array2<C64> = {
            let mut m = Array2::zeros((3, 3));
            m[(0, 0)] = c(1.0);
            m
        };
        let moved = sm.dot(&bottom);
        assert!(moved.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn site_z_operators_commute() {
        let ops = build_site_operators(2, 2).unwrap();
        let comm = commutator(ops.sz(0), ops.sz(1));
        assert!(comm.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn operator_dimension_guard() {
        assert!(build_site_operators(15, 4).is_err());
        assert!(build_site_operators(1, 13).is_err());
        assert_eq!(build_site_operators(15, 3).unwrap().dim(), 4096);
    }

    #[test]
    fn feedback_identity_zero_coupling() {
        let ops = build_site_operators(1, 2).unwrap();
        let j = Array2::<f64>::zeros((2, 2));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let rho = random_hermitian(4, &mut rng);
        assert_eq!(feedback_generator_residual(&ops, &j, &rho).unwrap(), 0.0);
    }

    #[test]
    fn feedback_identity_random_draws() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for (n, m) in [(1u32, 2usize), (2, 2), (1, 3)] {
            let ops = build_site_operators(n, m).unwrap();
            for _ in 0..20 {
                let j = random_symmetric_coupling(m, &mut rng);
                let rho = random_hermitian(ops.dim(), &mut rng);
                let r = feedback_generator_residual(&ops, &j, &rho).unwrap();
                assert!(r < 1e-12, "residual {r} at n={n} m={m}");
            }
        }
    }

    #[test]
    fn feedback_rejects_asymmetric_coupling() {
        let ops = build_site_operators(1, 2).unwrap();
        let mut j = Array2::<f64>::zeros((2, 2));
        j[(0, 1)] = 1.0;
        j[(1, 0)] = -1.0;
        let rho = Array2::<C64>::eye(4) * c(0.25);
        assert!(feedback_generator_residual(&ops, &j, &rho).is_err());
    }

    #[test]
    fn dephasing_leaves_maximally_mixed_alone() {
        let ops = build_site_operators(2, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        let rho = Array2::<C64>::eye(3) * c(1.0 / 3.0);
        let drho = lindblad_rhs(&ops, &no_feedback(0.0, 0.7), &j, &rho).unwrap();
        for v in drho.diag().iter() {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn single_site_decay_matrix_element() {
        let ops = build_site_operators(1, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        let mut rho = Array2::<C64>::zeros((2, 2));
        rho[(1, 1)] = c(1.0);
        let drho = lindblad_rhs(&ops, &no_feedback(1.0, 0.0), &j, &rho).unwrap();
        assert!((drho[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((drho[(1, 1)].re + 1.0).abs() < 1e-15);
        assert!(drho[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn lindblad_preserves_trace_and_hermiticity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let ops = build_site_operators(2, 2).unwrap();
        let params = FeedbackParams {
            gamma_feedback: 0.5,
            eta: 0.8,
            gamma_meas: 0.3,
            alpha: 1.0,
        };
        for _ in 0..10 {
            let j = random_symmetric_coupling(2, &mut rng);
            let rho = random_hermitian(9, &mut rng);
            let drho = lindblad_rhs(&ops, &params, &j, &rho).unwrap();
            assert!(trace(&drho).norm() < 1e-12);
            assert!(hermiticity_defect(&drho) < 1e-12);
        }
    }

    #[test]
    fn feedback_without_measurement_is_rejected() {
        let ops = build_site_operators(1, 2).unwrap();
        let mut j = Array2::<f64>::zeros((2, 2));
        j[(0, 1)] = 1.0;
        j[(1, 0)] = 1.0;
        let rho = Array2::<C64>::eye(4) * c(0.25);
        let params = FeedbackParams {
            gamma_feedback: 1.0,
            eta: 1.0,
            gamma_meas: 0.0,
            alpha: 0.0,
        };
        assert!(lindblad_rhs(&ops, &params, &j, &rho).is_err());
    }

    #[test]
    fn evolution_zero_horizon_returns_initial() {
        let ops = build_site_operators(1, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        let rho0 = Array2::<C64>::eye(2) * c(0.5);
        let out = evolve_density_matrix(
            &ops,
            &no_feedback(1.0, 0.0),
            &j,
            &rho0,
            &[0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1, rho0);
    }

    #[test]
    fn dephasing_only_evolution_contracts_coherences() {
        let ops = build_site_operators(1, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        // Pure superposition state: strong off-diagonal element.
        let mut rho0 = Array2::<C64>::zeros((2, 2));
        rho0[(0, 0)] = c(0.5);
        rho0[(1, 1)] = c(0.5);
        rho0[(0, 1)] = c(0.5);
        rho0[(1, 0)] = c(0.5);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.2).collect();
        let out = evolve_density_matrix(
            &ops,
            &no_feedback(0.0, 0.5),
            &j,
            &rho0,
            &grid,
            &OdeOptions::default(),
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for (t, rho) in &out {
            let mass = offdiagonal_mass(rho);
            assert!(mass <= prev + 1e-12, "coherences grew at t = {t}");
            prev = mass;
            assert!((rho[(0, 0)].re - 0.5).abs() < 1e-10);
            assert!((rho[(1, 1)].re - 0.5).abs() < 1e-10);
        }
        // Dephasing rate for S_z jumps: |0><1| decays at 2 gamma (2k-N
        // eigenvalue gap squared over 2 = 2 for N = 1).
        let (_, rho_end) = &out[out.len() - 1];
        let expected = 0.5 * (-2.0f64 * 0.5 * 2.0).exp();
        assert!((rho_end[(0, 1)].re - expected).abs() < 1e-6);
    }

    #[test]
    fn diagonal_states_stay_diagonal() {
        let ops = build_site_operators(2, 2).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let j = random_symmetric_coupling(2, &mut rng);
        let params = FeedbackParams {
            gamma_feedback: 0.7,
            eta: 0.9,
            gamma_meas: 0.4,
            alpha: 1.0,
        };
        let dim = ops.dim();
        let mut rho0 = Array2::<C64>::zeros((dim, dim));
        let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        for (i, w) in weights.iter().enumerate() {
            rho0[(i, i)] = c(*w);
        }
        let out = evolve_density_matrix(
            &ops,
            &params,
            &j,
            &rho0,
            &[1.0, 5.0],
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, rho) in &out {
            assert!(
                offdiagonal_mass(rho) < 1e-10,
                "off-diagonal mass appeared at t = {t}"
            );
            diagonal_populations(rho).unwrap();
        }
    }

    /// Decay-only diagonal dynamics reproduces the classical strictly
    /// downhill single-step master equation with bare stimulated rates
    /// alpha k (N - k + 1).
    #[test]
    fn decay_matches_classical_single_step_generator() {
        use crate::rates::log_stimulation_factor;
        let n = 4u32;
        let ops = build_site_operators(n, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        let dim = ops.dim();
        let alpha = 1.0;

        // Quantum generator column by column from basis states.
        let mut quantum = vec![vec![0.0f64; dim]; dim];
        for s in 0..dim {
            let mut rho = Array2::<C64>::zeros((dim, dim));
            rho[(s, s)] = c(1.0);
            let drho = lindblad_rhs(&ops, &no_feedback(alpha, 0.0), &j, &rho).unwrap();
            for r in 0..dim {
                quantum[r][s] = drho[(r, r)].re;
            }
        }
        let mut classical = vec![vec![0.0f64; dim]; dim];
        for k in 1..=n {
            let rate = alpha * log_stimulation_factor(n, k, -1).unwrap().exp();
            classical[(k - 1) as usize][k as usize] += rate;
            classical[k as usize][k as usize] -= rate;
        }
        for r in 0..dim {
            for s in 0..dim {
                assert!(
                    (quantum[r][s] - classical[r][s]).abs() < 1e-12,
                    "generator mismatch at ({r},{s})"
                );
            }
        }
    }

    /// Populations of the decay-only Lindblad evolution track the
    /// classical pure-decay master equation.
    #[test]
    fn decay_populations_match_classical_evolution() {
        use crate::ode::integrate_to_grid;
        use crate::rates::log_stimulation_factor;
        let n = 4u32;
        let ops = build_site_operators(n, 1).unwrap();
        let j = Array2::<f64>::zeros((1, 1));
        let dim = ops.dim();
        let mut rho0 = Array2::<C64>::zeros((dim, dim));
        for i in 0..dim {
            rho0[(i, i)] = c(1.0 / dim as f64);
        }
        let grid = [0.2, 1.0, 3.0];
        let quantum_out = evolve_density_matrix(
            &ops,
            &no_feedback(1.0, 0.0),
            &j,
            &rho0,
            &grid,
            &OdeOptions::default(),
        )
        .unwrap();

        let rates: Vec<f64> = (1..=n)
            .map(|k| log_stimulation_factor(n, k, -1).unwrap().exp())
            .collect();
        let rhs = |_t: f64, p: &[f64], dp: &mut [f64]| {
            dp.fill(0.0);
            for k in 1..=n as usize {
                let flow = rates[k - 1] * p[k];
                dp[k] -= flow;
                dp[k - 1] += flow;
            }
        };
        let p0 = vec![1.0 / dim as f64; dim];
        let mut classical_out = Vec::new();
        integrate_to_grid(rhs, 0.0, &p0, &grid, &OdeOptions::default(), |_t, p| {
            classical_out.push(p.to_vec());
            Ok(())
        })
        .unwrap();
        for ((_, rho), p_cl) in quantum_out.iter().zip(&classical_out) {
            let p_q = diagonal_populations(rho).unwrap();
            for (a, b) in p_q.iter().zip(p_cl) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn population_readout_of_simple_states() {
        let dim = 4;
        let mut pure = Array2::<C64>::zeros((dim, dim));
        pure[(2, 2)] = c(1.0);
        assert_eq!(diagonal_populations(&pure).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);

        let mixed = Array2::<C64>::eye(dim) * c(0.25);
        assert_eq!(diagonal_populations(&mixed).unwrap(), vec![0.25; 4]);
    }
}
