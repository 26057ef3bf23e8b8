//! Exact EA capacity of the pure dephasing channel acting on blocks of `m`
//! modes that share one uniformly random phase.
//!
//! The optimal input spreads each total-photon shell `|n| = n` evenly over
//! its `C(n+m-1, m-1)` patterns, and the total-photon law is
//! `P_n ∝ C(n+m-1, m-1)^2 λ^n` with `λ` fixed by the mean-energy constraint.
//! Joint distributions are never materialized: everything depends on the
//! pattern only through `|n|`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::distribution::PhotonDistribution;
use crate::error::{check_energy, check_modes, domain, Error, Result};
use crate::special_math::{
    g_unchecked as g, ln_binomial, log_squared_binomial_term, squared_binomial_sums, sum_certified,
    CertifiedSeries,
};

/// Block length of the dephasing channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DephasingChannelSpec {
    m: u64,
}

impl DephasingChannelSpec {
    pub fn new(m: u64) -> Result<Self> {
        check_modes(m)?;
        Ok(DephasingChannelSpec { m })
    }

    pub fn modes(&self) -> u64 {
        self.m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DephasingSolution {
    pub m: u64,
    pub energy: f64,
    pub lambda1: f64,
    pub dist: PhotonDistribution,
    /// Bits per m-mode block.
    pub capacity: f64,
    /// Mean total photon number actually achieved by `dist`.
    pub mean_check: f64,
}

impl DephasingSolution {
    pub fn per_mode(&self) -> f64 {
        self.capacity / self.m as f64
    }

    /// `C_EA / (m g(E))`; `None` at zero energy.
    pub fn ratio_to_hsw(&self) -> Option<f64> {
        (self.energy > 0.0).then(|| self.capacity / (self.m as f64 * g(self.energy)))
    }
}

const BISECTION_MAX_ITER: usize = 200;
const LAMBDA_UPPER: f64 = 1.0 - 1e-15;
const DIST_TAIL_REL: f64 = 1e-14;

/// Mean total photon number of the weights `C(n+m-1, m-1)^2 λ^n`.
pub fn mean_total_photons(m: u64, lambda: f64) -> Result<f64> {
    Ok(squared_binomial_sums(m, lambda)?.mean())
}

/// Solves `mean_total_photons(m, λ) = m E` for `λ` by bisection.
///
/// The upper end of the bracket is grown as `1 - 2^-k` (capped at
/// `1 - 1e-15`) so that the series stay short; bisection runs until the
/// bracket collapses to a few ulps of `λ`.
pub fn solve_lambda(m: u64, energy: f64) -> Result<f64> {
    check_modes(m)?;
    check_energy(energy)?;
    if energy == 0.0 {
        return Ok(0.0);
    }
    let target = m as f64 * energy;

    let mut lo = 0.0_f64;
    let mut hi = 0.5_f64;
    loop {
        let mean = mean_total_photons(m, hi)?;
        if mean >= target {
            break;
        }
        lo = hi;
        if hi >= LAMBDA_UPPER {
            return Err(Error::Solver {
                iterations: 0,
                target,
            });
        }
        hi = (1.0 - (1.0 - hi) / 2.0).min(LAMBDA_UPPER);
    }

    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let mean = mean_total_photons(m, mid)?;
        if mean == target {
            return Ok(mid);
        }
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Solver {
        iterations: BISECTION_MAX_ITER,
        target,
    })
}

fn squared_binomial_series(m: u64, lambda: f64) -> Result<CertifiedSeries> {
    sum_certified(
        |n| log_squared_binomial_term(m, lambda, n),
        1e-16,
        DIST_TAIL_REL,
        0,
    )
}

/// Total-photon distribution `C(n+m-1, m-1)^2 λ^n / 2F1(m, m; 1; λ)`.
pub fn total_distribution_at(m: u64, lambda: f64) -> Result<PhotonDistribution> {
    check_modes(m)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(PhotonDistribution::point_mass(0));
    }
    Ok(PhotonDistribution::from_series(&squared_binomial_series(m, lambda)?))
}

pub fn optimal_total_distribution(m: u64, energy: f64) -> Result<PhotonDistribution> {
    total_distribution_at(m, solve_lambda(m, energy)?)
}

/// `Σ_n -P_n log2(P_n / C(n+m-1, m-1)^2)` in bits.
fn block_capacity(m: u64, dist: &PhotonDistribution) -> f64 {
    let nats: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(n, &p)| -p * (p.ln() - 2.0 * ln_binomial(n as u64 + m - 1, m - 1)))
        .sum();
    nats / LN_2
}

pub fn solve(m: u64, energy: f64) -> Result<DephasingSolution> {
    let lambda1 = solve_lambda(m, energy)?;
    let dist = total_distribution_at(m, lambda1)?;
    let capacity = block_capacity(m, &dist);
    let mean_check = dist.mean();
    Ok(DephasingSolution {
        m,
        energy,
        lambda1,
        dist,
        capacity,
        mean_check,
    })
}

/// EA capacity of the m-mode pure dephasing channel, in bits per block.
pub fn ea_capacity_pure_dephasing(m: u64, energy: f64) -> Result<f64> {
    Ok(solve(m, energy)?.capacity)
}

/// HSW capacity per mode, `g(E)`; independent of `m`.
pub fn hsw_capacity_pure_dephasing(m: u64, energy: f64) -> Result<f64> {
    check_modes(m)?;
    check_energy(energy)?;
    Ok(g(energy))
}

/// Probability of the photon-number pattern `nvec` under the optimal input:
/// `C(|n|+m-1, m-1) λ^|n| / 2F1(m, m; 1; λ)`.
pub fn optimal_joint_weight(m: u64, lambda: f64, nvec: &[u64]) -> Result<f64> {
    check_modes(m)?;
    if nvec.len() as u64 != m {
        return Err(domain(format!(
            "pattern has {} entries, expected m = {m}",
            nvec.len()
        )));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let total: u64 = nvec.iter().sum();
    if lambda == 0.0 {
        return Ok(if total == 0 { 1.0 } else { 0.0 });
    }
    let log_norm = squared_binomial_sums(m, lambda)?.log_norm.ln();
    let log_w = ln_binomial(total + m - 1, m - 1) + total as f64 * lambda.ln() - log_norm;
    Ok(log_w.exp())
}

/// Single-mode marginal of the optimal two-mode pattern distribution,
/// `(1-λ)/(1+λ) λ^n ((1-λ) n + 1)`. It is not geometric, so the optimal
/// input is not Gaussian.
pub fn marginal_m2(n1: u64, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let n = n1 as f64;
    Ok((1.0 - lambda) / (1.0 + lambda) * lambda.powf(n) * ((1.0 - lambda) * n + 1.0))
}
