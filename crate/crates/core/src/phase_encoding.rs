//! Holevo information of independent uniform phase encoding on two-mode
//! squeezed vacuum (TMSV) sources sent through the thermal-loss channel, and
//! its lower bound when the modes additionally share a random phase.
//!
//! Covariance matrices use quadrature order `(x_A, p_A, x_B, p_B)` with the
//! vacuum equal to the identity, so a symplectic eigenvalue `ν` contributes
//! `g((ν - 1) / 2)` to the entropy.

use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use crate::bounds;
use crate::error::{check_energy, check_modes, domain, Error, Result};
use crate::special_math::{g_unchecked as g, ln_binomial, shannon_entropy};
use crate::thermal_loss::ThermalLossChannel;

const STATE_TOL: f64 = 1e-10;

/// Zero-mean two-mode Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTwoModeState {
    cm: Matrix4<f64>,
}

impl GaussianTwoModeState {
    /// Validates symmetry and the uncertainty principle `ν_- >= 1`.
    pub fn new(cm: Matrix4<f64>) -> Result<Self> {
        let scale = cm.amax().max(1.0);
        if (cm - cm.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidState("covariance matrix is not symmetric".into()));
        }
        let st = GaussianTwoModeState { cm };
        let (_, nu_minus) = st.symplectic_eigenvalues();
        if !(nu_minus >= 1.0 - STATE_TOL) {
            return Err(Error::InvalidState(format!(
                "smallest symplectic eigenvalue {nu_minus} < 1"
            )));
        }
        Ok(st)
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.cm
    }

    fn block(&self, r: usize, c: usize) -> Matrix2<f64> {
        self.cm.fixed_view::<2, 2>(r, c).into_owned()
    }

    /// `(ν_+, ν_-)`.
    ///
    /// Standard-form matrices use `(sqrt((a+b)^2 - 4c^2) ± |a-b|) / 2`; the
    /// general path goes through the invariants `Δ = det A + det B + 2 det C`
    /// and `det V`, which lose accuracy for nearly pure states.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        if let Some((a, b, c)) = self.standard_form() {
            let root = ((a + b).powi(2) - 4.0 * c * c).max(0.0).sqrt();
            let diff = (a - b).abs();
            return ((root + diff) / 2.0, (root - diff) / 2.0);
        }
        let delta = self.block(0, 0).determinant()
            + self.block(2, 2).determinant()
            + 2.0 * self.block(0, 2).determinant();
        let det = self.cm.determinant().max(0.0);
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        let nu_plus = ((delta + disc) / 2.0).sqrt();
        let nu_minus = if nu_plus > 0.0 { det.sqrt() / nu_plus } else { 0.0 };
        (nu_plus, nu_minus)
    }

    /// `(a, b, c)` when the matrix has the phase-covariant form
    /// `[[a I, c Z], [c Z, b I]]` with `Z = diag(1, -1)`.
    pub fn standard_form(&self) -> Option<(f64, f64, f64)> {
        let v = &self.cm;
        let tol = 1e-12 * v.amax().max(1.0);
        let a = v[(0, 0)];
        let b = v[(2, 2)];
        let c = v[(0, 2)];
        let expected = Matrix4::new(
            a, 0.0, c, 0.0, //
            0.0, a, 0.0, -c, //
            c, 0.0, b, 0.0, //
            0.0, -c, 0.0, b,
        );
        ((v - expected).amax() <= tol).then_some((a, b, c))
    }
}

/// Covariance matrix of a TMSV with `E` photons per arm after the signal arm
/// crosses the channel.
pub fn tmsv_through_loss(energy: f64, ch: &ThermalLossChannel) -> Result<GaussianTwoModeState> {
    check_energy(energy)?;
    let a = 2.0 * ch.output_mean(energy) + 1.0;
    let b = 2.0 * energy + 1.0;
    let c = 2.0 * (ch.kappa() * energy * (energy + 1.0)).sqrt();
    GaussianTwoModeState::new(Matrix4::new(
        a, 0.0, c, 0.0, //
        0.0, a, 0.0, -c, //
        c, 0.0, b, 0.0, //
        0.0, -c, 0.0, b,
    ))
}

/// Von Neumann entropy of the two-mode state, `Σ g((ν - 1) / 2)`, in bits.
pub fn gaussian_conditional_entropy(st: &GaussianTwoModeState) -> f64 {
    let (p, m) = st.symplectic_eigenvalues();
    g(((p - 1.0) / 2.0).max(0.0)) + g(((m - 1.0) / 2.0).max(0.0))
}

/// Photon-number-diagonal part of a phase-covariant two-mode state, as a
/// table `p[n_signal][n_idler]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointFockDiagonal {
    probs: Vec<f64>,
    signal_cutoff: usize,
    idler_cutoff: usize,
    tail_bound: f64,
}

impl JointFockDiagonal {
    pub fn get(&self, signal: usize, idler: usize) -> f64 {
        if signal < self.signal_cutoff && idler < self.idler_cutoff {
            self.probs[signal * self.idler_cutoff + idler]
        } else {
            0.0
        }
    }

    /// `(signal, idler)` table dimensions.
    pub fn cutoffs(&self) -> (usize, usize) {
        (self.signal_cutoff, self.idler_cutoff)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn signal_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.idler_cutoff)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn idler_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.idler_cutoff];
        for row in self.probs.chunks(self.idler_cutoff) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// Shannon entropy of the table in bits.
    pub fn entropy(&self) -> Result<f64> {
        shannon_entropy(&self.probs, self.tail_bound)
    }
}

const DIAGONAL_TAIL: f64 = 1e-9;
const DEFAULT_TAIL: f64 = 1e-12;
const MIN_CUTOFF: usize = 16;

/// Probability that a thermal mode with mean `mean` holds `cutoff` or more
/// photons.
pub(crate) fn thermal_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return if cutoff == 0 { 1.0 } else { 0.0 };
    }
    (cutoff as f64 * (mean / (mean + 1.0)).ln()).exp()
}

/// Smallest cutoff whose thermal tail is below `tail`.
pub(crate) fn thermal_cutoff(mean: f64, tail: f64) -> usize {
    if mean == 0.0 {
        return 1;
    }
    let per_step = (mean / (mean + 1.0)).ln();
    ((tail.ln() / per_step).ceil().max(1.0)) as usize
}

pub(crate) fn thermal_prob(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * (mean / (mean + 1.0)).ln() - mean.ln_1p()).exp()
}

/// `k ln(base)` with `0^0 = 1`.
fn ln_pow(base: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * base.ln()
    }
}

/// Joint Fock-basis diagonal of a standard-form state.
///
/// Writing the state as a thermal-loss channel on one arm of a TMSV, each
/// entry is `P_thermal(n; E) T(s | n)`. The thermal-loss transition `T` is
/// evaluated by splitting the channel into pure loss with transmissivity
/// `κ / (1 + N_B)` followed by a quantum-limited amplifier of gain
/// `1 + N_B`, which turns `T` into a sum of nonnegative terms.
///
/// `cutoffs` are `(signal, idler)`; by default each is the smallest value
/// whose thermal tail is below 1e-12 (at least 16).
pub fn fock_diagonal(
    st: &GaussianTwoModeState,
    cutoffs: Option<(usize, usize)>,
) -> Result<JointFockDiagonal> {
    let (a, b, c) = st
        .standard_form()
        .ok_or_else(|| domain("Fock diagonal needs a phase-covariant standard-form state"))?;
    let signal_mean = ((a - 1.0) / 2.0).max(0.0);
    let idler_mean = ((b - 1.0) / 2.0).max(0.0);

    let (signal_cutoff, idler_cutoff) = match cutoffs {
        Some((ns, ni)) => {
            let tail = thermal_tail(signal_mean, ns) + thermal_tail(idler_mean, ni);
            if tail > DIAGONAL_TAIL {
                let suggested = thermal_cutoff(signal_mean, DIAGONAL_TAIL / 2.0)
                    .max(thermal_cutoff(idler_mean, DIAGONAL_TAIL / 2.0));
                return Err(Error::TailBound {
                    tail,
                    tolerance: DIAGONAL_TAIL,
                    suggested,
                });
            }
            (ns, ni)
        }
        None => (
            thermal_cutoff(signal_mean, DEFAULT_TAIL).max(MIN_CUTOFF),
            thermal_cutoff(idler_mean, DEFAULT_TAIL).max(MIN_CUTOFF),
        ),
    };
    let tail_bound = thermal_tail(signal_mean, signal_cutoff) + thermal_tail(idler_mean, idler_cutoff);

    let mut probs = vec![0.0; signal_cutoff * idler_cutoff];
    if idler_mean == 0.0 {
        if c.abs() > 1e-12 {
            return Err(Error::InvalidState("correlations with a vacuum idler".into()));
        }
        for s in 0..signal_cutoff {
            probs[s * idler_cutoff] = thermal_prob(signal_mean, s);
        }
    } else {
        let kappa = c * c / (4.0 * idler_mean * (idler_mean + 1.0));
        let noise = (signal_mean - kappa * idler_mean).max(0.0);
        let gain = 1.0 + noise;
        let eta = kappa / gain;
        if eta > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "correlations too strong for the signal noise (loss factor {eta})"
            )));
        }
        let eta = eta.min(1.0);
        let (leak, keep) = (1.0 - eta, 1.0 / gain);
        for n in 0..idler_cutoff {
            let pn = thermal_prob(idler_mean, n);
            let nu = n as u64;
            for s in 0..signal_cutoff {
                let su = s as u64;
                let mut t = 0.0;
                for k in 0..=nu.min(su) {
                    let ln_term = ln_binomial(nu, k)
                        + ln_pow(eta, k)
                        + ln_pow(leak, nu - k)
                        + ln_binomial(su, k)
                        + ln_pow(keep, k + 1)
                        + ln_pow(1.0 - keep, su - k);
                    t += ln_term.exp();
                }
                probs[s * idler_cutoff + n] = pn * t;
            }
        }
    }
    Ok(JointFockDiagonal {
        probs,
        signal_cutoff,
        idler_cutoff,
        tail_bound,
    })
}

/// Holevo information of uniform phase encoding on one TMSV pair without
/// shared phase noise, in bits per mode: entropy of the phase-averaged
/// state (diagonal in the joint Fock basis) minus the state entropy.
pub fn holevo_phase_encoding(energy: f64, ch: &ThermalLossChannel) -> Result<f64> {
    check_energy(energy)?;
    if energy == 0.0 {
        return Ok(0.0);
    }
    let st = tmsv_through_loss(energy, ch)?;
    let diag = fock_diagonal(&st, None)?;
    Ok(diag.entropy()? - gaussian_conditional_entropy(&st))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolevoLowerBound {
    pub m: u64,
    /// Holevo information per mode without shared phase noise.
    pub chi_single: f64,
    /// `chi_single - H(P^t)/m`
    pub per_mode: f64,
    /// Same with the asymptotic entropy; `None` out of regime.
    pub per_mode_asym: Option<f64>,
}

/// Lower bound on the Holevo information per mode of phase encoding over a
/// channel whose `m` modes share one random phase.
pub fn holevo_lb_with_dephasing(
    m: u64,
    energy: f64,
    ch: &ThermalLossChannel,
) -> Result<HolevoLowerBound> {
    check_modes(m)?;
    let chi_single = holevo_phase_encoding(energy, ch)?;
    holevo_lb_from_parts(m, energy, chi_single)
}

/// As [`holevo_lb_with_dephasing`] with a precomputed single-pair Holevo
/// information (it does not depend on `m`).
pub fn holevo_lb_from_parts(m: u64, energy: f64, chi_single: f64) -> Result<HolevoLowerBound> {
    let mf = m as f64;
    let h = bounds::entropy_total_exact(m, energy)?;
    let h_asym = bounds::entropy_total_asym(m, energy)?;
    Ok(HolevoLowerBound {
        m,
        chi_single,
        per_mode: chi_single - h / mf,
        per_mode_asym: h_asym.value().map(|h| chi_single - h / mf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal_loss::{ea_capacity, loss_symbols};

    #[test]
    fn vacuum_covariance() {
        let st = tmsv_through_loss(0.0, &ThermalLossChannel::identity()).unwrap();
        assert_eq!(*st.covariance(), Matrix4::identity());
        assert_eq!(gaussian_conditional_entropy(&st), 0.0);
        let d = fock_diagonal(&st, None).unwrap();
        assert_eq!(d.get(0, 0), 1.0);
    }

    #[test]
    fn lossless_tmsv_is_pure() {
        for e in [0.001, 0.5, 3.0] {
            let st = tmsv_through_loss(e, &ThermalLossChannel::identity()).unwrap();
            let (p, m) = st.symplectic_eigenvalues();
            assert!((p - 1.0).abs() < 1e-9 && (m - 1.0).abs() < 1e-9);
            assert!(gaussian_conditional_entropy(&st) < 1e-8);
        }
    }

    #[test]
    fn lossless_diagonal_is_schmidt_spectrum() {
        let e = 0.7;
        let st = tmsv_through_loss(e, &ThermalLossChannel::identity()).unwrap();
        let d = fock_diagonal(&st, None).unwrap();
        let (ns, ni) = d.cutoffs();
        for s in 0..ns.min(40) {
            for n in 0..ni.min(40) {
                let want = if s == n { thermal_prob(e, n) } else { 0.0 };
                assert!((d.get(s, n) - want).abs() < 1e-15);
            }
        }
        let chi = holevo_phase_encoding(e, &ThermalLossChannel::identity()).unwrap();
        assert!((chi - g(e)).abs() < 1e-8);
    }

    #[test]
    fn symplectic_identity_with_closed_form() {
        for k in [0.1, 0.5, 0.8, 0.99, 1.0] {
            for nb in [0.0, 0.01, 0.5, 3.0, 10.0] {
                for e in [1e-4, 0.01, 0.3, 1.0, 7.0] {
                    let ch = ThermalLossChannel::new(k, nb).unwrap();
                    let st = tmsv_through_loss(e, &ch).unwrap();
                    let (p, m) = st.symplectic_eigenvalues();
                    let sym = loss_symbols(&ch, e).unwrap();
                    let (hi, lo) = if sym.a_plus >= sym.a_minus {
                        (sym.a_plus, sym.a_minus)
                    } else {
                        (sym.a_minus, sym.a_plus)
                    };
                    assert!(((p - 1.0) / 2.0 - hi).abs() < 1e-9, "k={k} nb={nb} e={e}");
                    assert!(((m - 1.0) / 2.0 - lo).abs() < 1e-9, "k={k} nb={nb} e={e}");
                }
            }
        }
    }

    #[test]
    fn marginals_are_thermal() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        let e = 0.001;
        let d = fock_diagonal(&tmsv_through_loss(e, &ch).unwrap(), None).unwrap();
        for (s, p) in d.signal_marginal().iter().enumerate() {
            assert!((p - thermal_prob(ch.output_mean(e), s)).abs() < 1e-8);
        }
        for (n, p) in d.idler_marginal().iter().enumerate() {
            assert!((p - thermal_prob(e, n)).abs() < 1e-8);
        }
        assert!(d.tail_bound() < 1e-11);
    }

    #[test]
    fn explicit_cutoffs_checked() {
        let ch = ThermalLossChannel::new(0.8, 10.0).unwrap();
        let st = tmsv_through_loss(0.001, &ch).unwrap();
        match fock_diagonal(&st, Some((50, 8))) {
            Err(Error::TailBound { suggested, .. }) => assert!(suggested > 150),
            other => panic!("expected tail-bound error, got {other:?}"),
        }
        assert!(fock_diagonal(&st, Some((260, 8))).is_ok());
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(GaussianTwoModeState::new(Matrix4::identity() * 0.5).is_err());
        let mut cm = Matrix4::identity();
        cm[(0, 1)] = 0.3;
        assert!(GaussianTwoModeState::new(cm).is_err());
        // Valid but not phase covariant.
        let squeezed = Matrix4::from_diagonal(&nalgebra::Vector4::new(2.0, 0.5, 1.0, 1.0));
        let st = GaussianTwoModeState::new(squeezed).unwrap();
        assert!(fock_diagonal(&st, None).is_err());
    }

    #[test]
    fn holevo_below_ea_capacity() {
        for k in [0.3, 0.8, 1.0] {
            for nb in [0.0, 0.1, 1.0, 10.0] {
                for e in [0.001, 0.1, 1.0] {
                    let ch = ThermalLossChannel::new(k, nb).unwrap();
                    let chi = holevo_phase_encoding(e, &ch).unwrap();
                    assert!(chi >= -1e-10);
                    assert!(chi <= ea_capacity(&ch, e).unwrap() + 1e-10);
                }
            }
        }
        assert_eq!(holevo_phase_encoding(0.0, &ThermalLossChannel::identity()).unwrap(), 0.0);
    }

    #[test]
    fn lower_bound_tends_to_single_pair_value() {
        let ch = ThermalLossChannel::new(0.8, 1.0).unwrap();
        let lb = holevo_lb_with_dephasing(10_000_000, 0.001, &ch).unwrap();
        assert!((lb.per_mode - lb.chi_single).abs() < 1e-5);
        assert!(lb.per_mode < lb.chi_single);
    }
}
