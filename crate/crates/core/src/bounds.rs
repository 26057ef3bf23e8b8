//! Upper and lower bounds on the EA capacity of the thermal-loss dephasing
//! channel, per mode.
//!
//! The upper bound is the EA capacity of the thermal-loss channel alone.
//! The lower bound subtracts the entropy of the total photon number of `m`
//! iid thermal states (a negative binomial law), divided by `m`.

use std::f64::consts::{E as EULER, LN_2, PI};

use serde::Serialize;

use crate::distribution::PhotonDistribution;
use crate::error::{check_energy, check_modes, Result};
use crate::special_math::{ln_binomial, sum_certified};
use crate::thermal_loss::{self, ThermalLossChannel};

/// `sqrt(2 pi e)`, the prefactor of the Gaussian entropy approximation.
pub fn entropy_constant() -> f64 {
    (2.0 * PI * EULER).sqrt()
}

/// A value from the large-`m` approximation, or a marker when its argument
/// lies where the approximation is meaningless (logarithm of a number < 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Asymptotic {
    InRegime(f64),
    OutOfRegime { argument: f64 },
}

impl Asymptotic {
    pub fn value(self) -> Option<f64> {
        match self {
            Asymptotic::InRegime(v) => Some(v),
            Asymptotic::OutOfRegime { .. } => None,
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Asymptotic {
        match self {
            Asymptotic::InRegime(v) => Asymptotic::InRegime(f(v)),
            other => other,
        }
    }
}

const TAIL_REL: f64 = 1e-13;

/// Total photon number of `m` iid thermal modes with mean `E`:
/// `P_n = C(n+m-1, m-1) E^n / (E+1)^(n+m)`.
///
/// Evaluated in log space; the cutoff starts at `mean + max(12 sd, 64)` and
/// is extended until the certified tail is below 1e-12.
pub fn thermal_total_photon_dist(m: u64, energy: f64) -> Result<PhotonDistribution> {
    check_modes(m)?;
    check_energy(energy)?;
    if energy == 0.0 {
        return Ok(PhotonDistribution::point_mass(0));
    }
    let mf = m as f64;
    let mean = mf * energy;
    let sd = (mf * energy * (energy + 1.0)).sqrt();
    let min_terms = (mean + (12.0 * sd).max(64.0)).ceil() as usize;
    let ln_e = energy.ln();
    let ln_1pe = energy.ln_1p();
    let series = sum_certified(
        |n| ln_binomial(n + m - 1, n) + n as f64 * ln_e - (n as f64 + mf) * ln_1pe,
        1e-16,
        TAIL_REL,
        min_terms,
    )?;
    Ok(PhotonDistribution::from_series(&series))
}

/// Shannon entropy in bits of [`thermal_total_photon_dist`].
pub fn entropy_total_exact(m: u64, energy: f64) -> Result<f64> {
    Ok(thermal_total_photon_dist(m, energy)?.entropy())
}

/// `log2(sqrt(2 pi e) sqrt(m E (E+1)))`.
pub fn entropy_total_asym(m: u64, energy: f64) -> Result<Asymptotic> {
    check_modes(m)?;
    check_energy(energy)?;
    let argument = entropy_constant() * (m as f64 * energy * (energy + 1.0)).sqrt();
    if argument < 1.0 {
        Ok(Asymptotic::OutOfRegime { argument })
    } else {
        Ok(Asymptotic::InRegime(argument.ln() / LN_2))
    }
}

/// Data-processing upper bound, bits per mode.
pub fn ea_upper_bound(ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    thermal_loss::ea_capacity(ch, energy)
}

/// `C_EA(L) - H(P^t)/m`, bits per mode. May be negative for small `m`.
pub fn ea_lower_bound(m: u64, ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    Ok(thermal_loss::ea_capacity(ch, energy)? - entropy_total_exact(m, energy)? / m as f64)
}

/// Lower bound with the asymptotic entropy in place of the exact one.
pub fn ea_lower_bound_asym(m: u64, ch: &ThermalLossChannel, energy: f64) -> Result<Asymptotic> {
    let upper = thermal_loss::ea_capacity(ch, energy)?;
    Ok(entropy_total_asym(m, energy)?.map(|h| upper - h / m as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub m: u64,
    pub upper: f64,
    pub lower_exact: f64,
    pub lower_asym: Option<f64>,
    pub entropy_exact: f64,
    pub entropy_asym: Option<f64>,
    /// Capacity the ratios are taken against.
    pub baseline: f64,
    pub upper_ratio: f64,
    pub lower_ratio: f64,
    pub lower_asym_ratio: Option<f64>,
}

/// All bound quantities at one point, with ratios against the HSW capacity
/// of the thermal-loss channel.
pub fn bounds_report(m: u64, ch: &ThermalLossChannel, energy: f64) -> Result<BoundsReport> {
    let baseline = thermal_loss::hsw_capacity(ch, energy)?;
    bounds_report_with_baseline(m, ch, energy, baseline)
}

pub fn bounds_report_with_baseline(
    m: u64,
    ch: &ThermalLossChannel,
    energy: f64,
    baseline: f64,
) -> Result<BoundsReport> {
    let upper = ea_upper_bound(ch, energy)?;
    let entropy_exact = entropy_total_exact(m, energy)?;
    let entropy_asym = entropy_total_asym(m, energy)?.value();
    let mf = m as f64;
    let lower_exact = upper - entropy_exact / mf;
    let lower_asym = entropy_asym.map(|h| upper - h / mf);
    Ok(BoundsReport {
        m,
        upper,
        lower_exact,
        lower_asym,
        entropy_exact,
        entropy_asym,
        baseline,
        upper_ratio: upper / baseline,
        lower_ratio: lower_exact / baseline,
        lower_asym_ratio: lower_asym.map(|l| l / baseline),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::g_unchecked as g;

    #[test]
    fn single_mode_is_geometric() {
        for e in [0.1, 1.0, 10.0] {
            let d = thermal_total_photon_dist(1, e).unwrap();
            for n in 0..30 {
                let want = e.powi(n as i32) / (e + 1.0).powi(n as i32 + 1);
                assert!((d.get(n) / want - 1.0).abs() < 1e-12);
            }
            assert!((d.entropy() - g(e)).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_term() {
        let d = thermal_total_photon_dist(2, 1.0).unwrap();
        assert!((d.get(0) - 0.25).abs() < 1e-15);
        let d = thermal_total_photon_dist(7, 0.3).unwrap();
        assert!((d.get(0) - 1.3f64.powi(-7)).abs() < 1e-15);
    }

    #[test]
    fn zero_energy() {
        assert_eq!(entropy_total_exact(10, 0.0).unwrap(), 0.0);
        assert!(matches!(
            entropy_total_asym(10, 0.0).unwrap(),
            Asymptotic::OutOfRegime { .. }
        ));
    }

    #[test]
    fn moments_are_negative_binomial() {
        for (m, e) in [(1u64, 0.5), (3, 2.0), (20, 1.0), (1000, 0.001), (100_000, 0.001), (10_000_000, 0.001)] {
            let d = thermal_total_photon_dist(m, e).unwrap();
            let mean = m as f64 * e;
            let var = m as f64 * e * (e + 1.0);
            assert!((d.mean() / mean - 1.0).abs() < 1e-9, "m={m}");
            assert!((d.variance() / var - 1.0).abs() < 1e-9, "m={m}");
            assert!(d.tail_bound() < 1e-12);
            assert!((d.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_edge_is_zero_bits() {
        // m E (E+1) = 1/(2 pi e): pick m = 1 and solve for E.
        let target = 1.0 / (2.0 * PI * EULER);
        let e = (-1.0 + (1.0 + 4.0 * target).sqrt()) / 2.0;
        match entropy_total_asym(1, e).unwrap() {
            Asymptotic::InRegime(v) => assert!(v.abs() < 1e-12),
            Asymptotic::OutOfRegime { argument } => assert!((argument - 1.0).abs() < 1e-12),
        }
        assert!((entropy_constant() - 4.13).abs() < 0.01);
    }

    #[test]
    fn out_of_regime_propagates() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        assert!(ea_lower_bound_asym(1, &ch, 0.001).unwrap().value().is_none());
        assert!(ea_lower_bound_asym(100_000, &ch, 0.001).unwrap().value().is_some());
    }

    #[test]
    fn lower_bound_approaches_upper() {
        let ch = ThermalLossChannel::new(0.8, 1.0).unwrap();
        let upper = ea_upper_bound(&ch, 0.001).unwrap();
        let lower = ea_lower_bound(100_000_000, &ch, 0.001).unwrap();
        assert!(upper - lower < 1e-3 && upper > lower);
    }

    #[test]
    fn fig2_lower_bound_point() {
        let ch = ThermalLossChannel::identity();
        let lb = ea_lower_bound(20, &ch, 1.0).unwrap();
        let h = entropy_total_exact(20, 1.0).unwrap();
        assert!((lb - (2.0 * g(1.0) - h / 20.0)).abs() < 1e-14);
    }

    #[test]
    fn report_is_consistent() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        let r = bounds_report(100_000, &ch, 0.001).unwrap();
        assert!(r.lower_exact <= r.upper + 1e-12);
        assert!((r.upper_ratio - r.upper / r.baseline).abs() < 1e-12);
        assert!(r.lower_asym.is_some());
    }
}
