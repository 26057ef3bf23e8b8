use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::special_math::{self, neumaier_sum, CertifiedSeries, MASS_TOLERANCE};

/// Truncated probability vector over total photon number, with a certified
/// upper bound on the mass beyond the last index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_bound: f64,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("photon distribution needs at least one entry"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return Err(domain(format!("probability at photon number {i} is {p}")));
        }
        if !(tail_bound >= 0.0) {
            return Err(domain(format!("tail bound must be >= 0, got {tail_bound}")));
        }
        let mass = neumaier_sum(probs.iter().copied());
        if mass > 1.0 + MASS_TOLERANCE || mass + tail_bound < 1.0 - MASS_TOLERANCE {
            return Err(Error::Consistency(format!(
                "mass {mass} with tail bound {tail_bound:e} is not normalized"
            )));
        }
        Ok(PhotonDistribution { probs, tail_bound })
    }

    pub fn point_mass(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        PhotonDistribution {
            probs,
            tail_bound: 0.0,
        }
    }

    /// Normalizes a certified series into a distribution; the relative
    /// tail of the series becomes the tail bound.
    pub(crate) fn from_series(series: &CertifiedSeries) -> Self {
        let probs = series
            .log_terms
            .iter()
            .map(|&l| (l - series.log_sum).exp())
            .collect();
        PhotonDistribution {
            probs,
            tail_bound: series.rel_tail,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `n` photons; zero past the cutoff.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn mass(&self) -> f64 {
        neumaier_sum(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.probs.iter().enumerate().map(|(n, p)| n as f64 * p))
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        neumaier_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(n, p)| (n as f64 - mean).powi(2) * p),
        )
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        special_math::shannon_entropy(&self.probs, self.tail_bound)
            .expect("validated distribution")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            PhotonDistribution::new(vec![0.5, -0.5, 1.0], 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            PhotonDistribution::new(vec![0.5, 0.4], 0.0),
            Err(Error::Consistency(_))
        ));
        assert!(PhotonDistribution::new(vec![], 0.0).is_err());
        assert!(PhotonDistribution::new(vec![0.5, 0.4], 0.1).is_ok());
    }

    #[test]
    fn point_mass_moments() {
        let d = PhotonDistribution::point_mass(3);
        assert_eq!(d.mean(), 3.0);
        assert_eq!(d.variance(), 0.0);
        assert_eq!(d.entropy(), 0.0);
        assert_eq!(d.get(10), 0.0);
        assert_eq!(d.cutoff(), 3);
    }
}
