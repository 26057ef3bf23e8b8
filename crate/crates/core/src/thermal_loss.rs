//! Closed-form entanglement-assisted (EA) and unassisted (HSW) capacities
//! of the phase-covariant thermal-loss channel `a -> sqrt(k) a + sqrt(1-k) e`.

use serde::Serialize;

use crate::error::{check_energy, domain, Error, Result};
use crate::special_math::g_unchecked as g;

/// Thermal-loss channel with transmissivity `kappa` and added noise `n_b`.
/// The environment mode holds `n_b / (1 - kappa)` thermal photons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermalLossChannel {
    kappa: f64,
    n_b: f64,
}

impl ThermalLossChannel {
    pub fn new(kappa: f64, n_b: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(domain(format!("transmissivity must lie in (0, 1], got {kappa}")));
        }
        if !(n_b >= 0.0 && n_b.is_finite()) {
            return Err(domain(format!("noise N_B must be finite and >= 0, got {n_b}")));
        }
        Ok(ThermalLossChannel { kappa, n_b })
    }

    pub const fn identity() -> Self {
        ThermalLossChannel { kappa: 1.0, n_b: 0.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_b(&self) -> f64 {
        self.n_b
    }

    /// Mean photon number of the environment mode in the beamsplitter
    /// dilation. Infinite for `kappa = 1, n_b > 0`, which has no dilation.
    pub fn env_mean(&self) -> f64 {
        if self.n_b == 0.0 {
            0.0
        } else {
            self.n_b / (1.0 - self.kappa)
        }
    }

    /// Output mean photon number `kappa E + N_B`.
    pub fn output_mean(&self, energy: f64) -> f64 {
        self.kappa * energy + self.n_b
    }
}

/// Intermediate quantities of the EA capacity formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossSymbols {
    pub e_prime: f64,
    pub d: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

/// `E' = kE + N_B`, `D = sqrt((E+E'+1)^2 - 4kE(E+1))`, `A± = (D-1±(E'-E))/2`.
///
/// `D^2` is expanded into a sum of nonnegative terms, and each `A±` uses
/// `(D - s)/2 = (D^2 - s^2) / (2(D + s))` with `D^2 - s^2` in closed form,
/// so neither cancels catastrophically at small `E` or `N_B`.
pub fn loss_symbols(ch: &ThermalLossChannel, energy: f64) -> Result<LossSymbols> {
    check_energy(energy)?;
    let (k, nb, e) = (ch.kappa, ch.n_b, energy);
    let loss = 1.0 - k;
    let d2 = loss * loss * e * e + 2.0 * e * (loss + nb * (1.0 + k)) + (nb + 1.0).powi(2);
    let d = d2.sqrt();

    // A- = (D - s)/2 with s = 1 + N_B - (1-k)E; D^2 - s^2 = 2E[(1-k)(N_B+2) + N_B(1+k)]
    let s = 1.0 + nb - loss * e;
    let a_minus = if s > 0.0 {
        e * (loss * (nb + 2.0) + nb * (1.0 + k)) / (d + s)
    } else {
        (d - s) / 2.0
    };
    // A+ = (D - t)/2 with t = 1 - N_B + (1-k)E; D^2 - t^2 = 4 N_B (E+1)
    let t = 1.0 - nb + loss * e;
    let a_plus = if t > 0.0 {
        2.0 * nb * (e + 1.0) / (d + t)
    } else {
        (d - t) / 2.0
    };
    Ok(LossSymbols {
        e_prime: ch.output_mean(e),
        d,
        a_plus: clamp_tiny_negative(a_plus),
        a_minus: clamp_tiny_negative(a_minus),
    })
}

fn clamp_tiny_negative(x: f64) -> f64 {
    if x < 0.0 && x > -1e-12 {
        0.0
    } else {
        x
    }
}

/// EA classical capacity in bits per mode: `g(E) + g(E') - g(A+) - g(A-)`.
pub fn ea_capacity(ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    let sym = loss_symbols(ch, energy)?;
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(g(energy) + g(sym.e_prime) - g(sym.a_plus) - g(sym.a_minus))
}

/// Entropy of the joint output of the channel on one arm of a two-mode
/// squeezed vacuum: `g(A+) + g(A-)`.
pub fn joint_output_entropy(ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    let sym = loss_symbols(ch, energy)?;
    Ok(g(sym.a_plus) + g(sym.a_minus))
}

/// HSW classical capacity in bits per mode: `g(kE + N_B) - g(N_B)`.
pub fn hsw_capacity(ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(g(ch.output_mean(energy)) - g(ch.n_b))
}

/// EA-to-HSW capacity ratio.
pub fn advantage_ratio(ch: &ThermalLossChannel, energy: f64) -> Result<f64> {
    check_energy(energy)?;
    if energy == 0.0 {
        return Err(Error::UndefinedRatio(
            "both capacities vanish at E = 0".into(),
        ));
    }
    Ok(ea_capacity(ch, energy)? / hsw_capacity(ch, energy)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub ea_capacity: f64,
    pub hsw_capacity: f64,
    /// `None` at zero energy.
    pub advantage_ratio: Option<f64>,
    pub intermediate: LossSymbols,
}

pub fn capacity_report(ch: &ThermalLossChannel, energy: f64) -> Result<CapacityReport> {
    let intermediate = loss_symbols(ch, energy)?;
    let ea = ea_capacity(ch, energy)?;
    let hsw = hsw_capacity(ch, energy)?;
    Ok(CapacityReport {
        ea_capacity: ea,
        hsw_capacity: hsw,
        advantage_ratio: (energy > 0.0).then(|| ea / hsw),
        intermediate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_symbols(k: f64, nb: f64, e: f64) -> (f64, f64, f64) {
        let ep = k * e + nb;
        let d = ((e + ep + 1.0).powi(2) - 4.0 * k * e * (e + 1.0)).sqrt();
        (d, (d - 1.0 + (ep - e)) / 2.0, (d - 1.0 - (ep - e)) / 2.0)
    }

    #[test]
    fn identity_channel() {
        let ch = ThermalLossChannel::identity();
        let ea = ea_capacity(&ch, 1.0).unwrap();
        assert!((ea - 4.0).abs() < 1e-14);
        assert!((hsw_capacity(&ch, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((advantage_ratio(&ch, 1.0).unwrap() - 2.0).abs() < 1e-14);
        for e in [0.01, 0.1, 1.0, 10.0] {
            let want = 2.0 * g(e);
            assert!((ea_capacity(&ch, e).unwrap() - want).abs() < 1e-12);
            let sym = loss_symbols(&ch, e).unwrap();
            assert_eq!(sym.d, 1.0);
            assert_eq!((sym.a_plus, sym.a_minus), (0.0, 0.0));
        }
    }

    #[test]
    fn zero_energy() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        assert_eq!(ea_capacity(&ch, 0.0).unwrap(), 0.0);
        assert_eq!(hsw_capacity(&ch, 0.0).unwrap(), 0.0);
        assert!(matches!(advantage_ratio(&ch, 0.0), Err(Error::UndefinedRatio(_))));
        let sym = loss_symbols(&ch, 0.0).unwrap();
        assert!((sym.a_plus - 10.0).abs() < 1e-14);
        assert_eq!(sym.a_minus, 0.0);
    }

    #[test]
    fn pure_loss_symbols() {
        let ch = ThermalLossChannel::new(0.3, 0.0).unwrap();
        let sym = loss_symbols(&ch, 2.0).unwrap();
        assert_eq!(sym.a_plus, 0.0);
        assert!((sym.a_minus - 0.7 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ThermalLossChannel::new(0.0, 1.0).is_err());
        assert!(ThermalLossChannel::new(1.1, 1.0).is_err());
        assert!(ThermalLossChannel::new(0.5, -1.0).is_err());
        let ch = ThermalLossChannel::new(0.5, 1.0).unwrap();
        assert!(ea_capacity(&ch, -1.0).is_err());
        assert!(hsw_capacity(&ch, f64::NAN).is_err());
    }

    #[test]
    fn advantage_ratio_decreasing_in_energy() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        let ratios: Vec<f64> = (0..=60)
            .map(|i| 10f64.powf(-6.0 + i as f64 * 0.1))
            .filter(|&e| e < 1.0)
            .map(|e| advantage_ratio(&ch, e).unwrap())
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(advantage_ratio(&ch, 1e-4).unwrap() > advantage_ratio(&ch, 1e-2).unwrap());
    }

    proptest! {
        #[test]
        fn stable_symbols_match_naive_where_naive_is_safe(
            k in 0.05f64..1.0, nb in 0.0f64..20.0, e in 0.05f64..20.0
        ) {
            let ch = ThermalLossChannel::new(k, nb).unwrap();
            let sym = loss_symbols(&ch, e).unwrap();
            let (d, ap, am) = naive_symbols(k, nb, e);
            prop_assert!((sym.d - d).abs() < 1e-12 * d);
            prop_assert!((sym.a_plus - ap).abs() < 1e-10 * (1.0 + ap));
            prop_assert!((sym.a_minus - am).abs() < 1e-10 * (1.0 + am));
        }

        #[test]
        fn ea_dominates_hsw(k in 0.01f64..=1.0, nb in 0.0f64..50.0, e in 1e-6f64..50.0) {
            let ch = ThermalLossChannel::new(k, nb).unwrap();
            let ea = ea_capacity(&ch, e).unwrap();
            let hsw = hsw_capacity(&ch, e).unwrap();
            prop_assert!(hsw >= 0.0);
            prop_assert!(ea >= hsw - 1e-12);
            let sym = loss_symbols(&ch, e).unwrap();
            prop_assert!(sym.a_plus >= 0.0 && sym.a_minus >= 0.0);
            prop_assert!(sym.d >= 1.0 - 1e-12);
        }
    }
}
