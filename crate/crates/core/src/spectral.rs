//! Exact dense propagation of the master equation by eigendecomposition.
//!
//! Detailed balance makes the generator `G` similar to a symmetric matrix
//! via the stationary distribution: `A = D^{-1/2} G D^{1/2}` with
//! `D = diag(pi)`. Diagonalizing `A` once gives `p(t)` in closed form at
//! any `t`, which is the only practical route through metastable instances
//! whose relaxation times exceed explicit-integrator step budgets by many
//! orders of magnitude.

use crate::error::{Error, Result};
use crate::lapack::eigh_symmetric;
use crate::master::{boltzmann_distribution, Generator};
use crate::model::ProblemInstance;
use crate::rates::DynamicsParams;

pub struct SpectralPropagator {
    dim: usize,
    sqrt_pi: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Column-major eigenvector matrix from LAPACK.
    eigenvectors: Vec<f64>,
}

impl SpectralPropagator {
    pub fn build(instance: &ProblemInstance, params: &DynamicsParams) -> Result<Self> {
        let generator = Generator::build(instance, params)?;
        let pi = boltzmann_distribution(instance, params.beta)?;
        let dim = generator.dim();
        let sqrt_pi: Vec<f64> = pi.iter().map(|&x| x.sqrt()).collect();

        // Column-major symmetrized generator: a[row + col*dim].
        let mut a = vec![0.0f64; dim * dim];
        for (s, &d) in generator.diag().iter().enumerate() {
            a[s + s * dim] = d;
        }
        for &(src, dst, rate) in generator.flows() {
            let (src, dst) = (src as usize, dst as usize);
            a[dst + src * dim] += rate * sqrt_pi[src] / sqrt_pi[dst];
        }
        for col in 0..dim {
            for row in (col + 1)..dim {
                let v = 0.5 * (a[row + col * dim] + a[col + row * dim]);
                a[row + col * dim] = v;
                a[col + row * dim] = v;
            }
        }
        let eigenvalues = eigh_symmetric(&mut a, dim)?;
        Ok(Self {
            dim,
            sqrt_pi,
            eigenvalues,
            eigenvectors: a,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Relaxation rates: negated generator spectrum, ascending, with the
    /// zero mode first.
    pub fn relaxation_rates(&self) -> Vec<f64> {
        let mut rates: Vec<f64> = self.eigenvalues.iter().map(|&l| -l).collect();
        rates.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
        rates
    }

    /// `p(t) = D^{1/2} V exp(L t) V^T D^{-1/2} p0`, renormalized.
    pub fn distribution_at(&self, p0: &[f64], t: f64) -> Result<Vec<f64>> {
        if p0.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "distribution has {} entries, state space has {}",
                p0.len(),
                self.dim
            )));
        }
        let dim = self.dim;
        let scaled: Vec<f64> = p0
            .iter()
            .zip(&self.sqrt_pi)
            .map(|(&p, &s)| p / s)
            .collect();
        let mut coeffs = vec![0.0f64; dim];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let col = &self.eigenvectors[j * dim..(j + 1) * dim];
            let dot: f64 = col.iter().zip(&scaled).map(|(&v, &y)| v * y).sum();
            // The stationary eigenvalue may carry +1e-14 noise; never amplify.
            *c = dot * (self.eigenvalues[j].min(0.0) * t).exp();
        }
        let mut p = vec![0.0f64; dim];
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                let col = &self.eigenvectors[j * dim..(j + 1) * dim];
                for (pi, &v) in p.iter_mut().zip(col) {
                    *pi += v * c;
                }
            }
        }
        let mut total = 0.0;
        for (pi, &s) in p.iter_mut().zip(&self.sqrt_pi) {
            *pi *= s;
            total += *pi;
        }
        if !(total > 0.0) {
            return Err(Error::Integration(format!(
                "spectral propagation lost probability mass at t = {t}"
            )));
        }
        for pi in &mut p {
            *pi /= total;
        }
        Ok(p)
    }
}
