//! Closed-form figures of merit for photon-number-resolving detection.
//!
//! With `N` photons per mode, the intensity difference has mean `alpha N`
//! and variance `N [alpha^2 Q + 2 (1 - alpha) sigma + alpha]`. A defect adds
//! `delta_alpha N` to the mean. Everything here follows from those two
//! lines plus the loss/dark-count corrections in [`crate::channels`].
//!
//! Divergent ratios (a noiseless difference) are returned as
//! `f64::INFINITY` rather than as errors.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelParams;
use crate::error::{check_range, loss_rate, non_negative, positive, Error, Result};
use crate::states::TwinModeDescriptor;

/// `alpha^2 Q + 2 (1 - alpha) sigma + alpha`: differential variance per photon
/// in the ideal setup.
pub fn noise_factor(alpha: f64, q: f64, sigma: f64) -> f64 {
    alpha * alpha * q + 2.0 * (1.0 - alpha) * sigma + alpha
}

fn ratio(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator < 0.0 || denominator.is_nan() {
        return Err(Error::NegativeNoise { value: denominator });
    }
    if denominator == 0.0 {
        return Ok(if numerator == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(numerator / denominator.sqrt())
}

fn q_sigma(q: f64, sigma: f64) -> Result<()> {
    check_range("q", q, q >= -1.0, ">= -1")?;
    check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
    Ok(())
}

fn absorption(alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, alpha > 0.0 && alpha <= 1.0, "(0, 1]")
}

/// Signal-to-noise ratio of the intensity difference.
pub fn snr(alpha: f64, n_mean: f64, q: f64, sigma: f64) -> Result<f64> {
    q_sigma(q, sigma)?;
    absorption(alpha)?;
    positive("n_mean", n_mean)?;
    ratio(alpha * n_mean.sqrt(), noise_factor(alpha, q, sigma))
}

/// Defect SNR `(delta_alpha / alpha) * SNR` without imperfections.
pub fn snr_star_ideal(alpha: f64, delta_alpha: f64, n_mean: f64, q: f64, sigma: f64) -> Result<f64> {
    q_sigma(q, sigma)?;
    positive("delta_alpha", delta_alpha)?;
    absorption(alpha)?;
    positive("n_mean", n_mean)?;
    ratio(delta_alpha * n_mean.sqrt(), noise_factor(alpha, q, sigma))
}

/// SNR* relative to a coherent probe at the same absorption. Independent of
/// the defect size and the photon budget.
pub fn quantum_gain(alpha: f64, q: f64, sigma: f64) -> Result<f64> {
    q_sigma(q, sigma)?;
    absorption(alpha)?;
    ratio((2.0 - alpha).sqrt(), noise_factor(alpha, q, sigma))
}

/// Noise factor including loss `gamma` and relative dark counts `eta`.
pub fn imperfect_noise_factor(alpha: f64, q: f64, sigma: f64, gamma: f64, eta: f64) -> f64 {
    let t = 1.0 - gamma;
    noise_factor(alpha, q, sigma) + gamma * (2.0 - alpha) / t + 2.0 * eta / (t * t)
}

/// Defect SNR with loss and dark counts, in terms of the effective photon
/// number `n_eff = delta_alpha^2 * c_bar`.
pub fn snr_star_imperfect(
    alpha: f64,
    q: f64,
    sigma: f64,
    gamma: f64,
    eta: f64,
    n_eff: f64,
) -> Result<f64> {
    q_sigma(q, sigma)?;
    absorption(alpha)?;
    loss_rate(gamma)?;
    non_negative("eta", eta)?;
    positive("n_eff", n_eff)?;
    ratio(n_eff.sqrt(), imperfect_noise_factor(alpha, q, sigma, gamma, eta))
}

/// Defect contrast of the intensity difference under loss.
pub fn signal_contrast(delta_alpha: f64, gamma: f64, n_mean: f64) -> f64 {
    delta_alpha * (1.0 - gamma) * n_mean
}

/// Largest loss rate that still gives `SNR* > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CriticalLoss {
    /// Any loss below this value keeps `SNR* > 1`.
    Bound(f64),
    /// `SNR* <= 1` even without loss. `raw` carries the (negative) root when
    /// one exists.
    Infeasible { raw: Option<f64> },
}

impl CriticalLoss {
    fn classify(raw: f64) -> Self {
        if raw >= 0.0 {
            CriticalLoss::Bound(raw)
        } else {
            CriticalLoss::Infeasible { raw: Some(raw) }
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, CriticalLoss::Bound(_))
    }

    /// The root of `SNR*(gamma) = 1`, negative when infeasible.
    pub fn value(&self) -> Option<f64> {
        match *self {
            CriticalLoss::Bound(g) => Some(g),
            CriticalLoss::Infeasible { raw } => raw,
        }
    }
}

/// `N_eff - alpha^2 Q + 2 (1 - alpha)(1 - sigma)`.
pub fn loss_budget(alpha: f64, q: f64, sigma: f64, n_eff: f64) -> f64 {
    n_eff - alpha * alpha * q + 2.0 * (1.0 - alpha) * (1.0 - sigma)
}

/// Exact critical loss: the root in `gamma` of `snr_star_imperfect = 1`.
pub fn critical_loss(alpha: f64, q: f64, sigma: f64, eta: f64, n_eff: f64) -> CriticalLoss {
    let budget = loss_budget(alpha, q, sigma, n_eff);
    if !(budget > 0.0) {
        return CriticalLoss::Infeasible { raw: None };
    }
    let s = 2.0 - alpha;
    let root = 1.0 - s / (2.0 * budget) * (1.0 + (1.0 + 8.0 * eta * budget / (s * s)).sqrt());
    CriticalLoss::classify(root)
}

/// First-order expansion of [`critical_loss`] in `eta`.
pub fn critical_loss_approx(alpha: f64, q: f64, sigma: f64, eta: f64, n_eff: f64) -> CriticalLoss {
    let budget = loss_budget(alpha, q, sigma, n_eff);
    if !(budget > 0.0) {
        return CriticalLoss::Infeasible { raw: None };
    }
    let s = 2.0 - alpha;
    CriticalLoss::classify(1.0 - s / budget - 2.0 * eta / s)
}

/// Absorption regime for the `N_eff` feasibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Nearly transparent sample (`alpha -> 0`).
    SmallAlpha,
    /// Nearly opaque sample (`alpha -> 1`).
    LargeAlpha,
}

/// Minimum `N_eff` for `SNR* > 1` in the given regime.
pub fn neff_threshold(regime: Regime, q: f64, sigma: f64, gamma: f64, eta: f64) -> Result<f64> {
    q_sigma(q, sigma)?;
    loss_rate(gamma)?;
    non_negative("eta", eta)?;
    let t = 1.0 - gamma;
    let dark = 2.0 * eta / (t * t);
    Ok(match regime {
        Regime::SmallAlpha => 2.0 * sigma + 2.0 * gamma / t + dark,
        Regime::LargeAlpha => q + 1.0 / t + dark,
    })
}

/// Inputs for a full SNR* evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrInputs {
    pub descriptor: TwinModeDescriptor,
    pub channel: ChannelParams,
    pub n_eff: f64,
    pub c_bar: f64,
}

impl SnrInputs {
    /// From the average click number over the exposure.
    pub fn from_c_bar(
        descriptor: TwinModeDescriptor,
        channel: ChannelParams,
        c_bar: f64,
    ) -> Result<Self> {
        positive("c_bar", c_bar)?;
        Ok(Self {
            descriptor,
            channel,
            n_eff: channel.delta_alpha().powi(2) * c_bar,
            c_bar,
        })
    }

    pub fn from_n_eff(
        descriptor: TwinModeDescriptor,
        channel: ChannelParams,
        n_eff: f64,
    ) -> Result<Self> {
        positive("n_eff", n_eff)?;
        Ok(Self {
            descriptor,
            channel,
            n_eff,
            c_bar: n_eff / channel.delta_alpha().powi(2),
        })
    }

    pub fn eta(&self) -> Result<f64> {
        self.channel.eta(self.descriptor.n_mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub snr_star: f64,
    /// SNR* over the coherent SNR* in the same channel.
    pub gain_ratio: f64,
    pub feasible: bool,
}

pub fn gain_report(inputs: &SnrInputs) -> Result<GainReport> {
    let eta = inputs.eta()?;
    let ch = &inputs.channel;
    let d = &inputs.descriptor;
    let snr_star = snr_star_imperfect(ch.alpha(), d.q(), d.sigma(), ch.gamma(), eta, inputs.n_eff)?;
    let coherent = snr_star_imperfect(ch.alpha(), 0.0, 1.0, ch.gamma(), eta, inputs.n_eff)?;
    Ok(GainReport {
        snr_star,
        gain_ratio: snr_star / coherent,
        feasible: snr_star > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const COH: (f64, f64) = (0.0, 1.0);
    const TMSV: (f64, f64) = (0.0, 0.0);
    const TF: (f64, f64) = (-1.0, 0.0);

    fn star(state: (f64, f64), alpha: f64, gamma: f64, eta: f64, n_eff: f64) -> f64 {
        snr_star_imperfect(alpha, state.0, state.1, gamma, eta, n_eff).unwrap()
    }

    #[test]
    fn snr_examples() {
        for n in [0.01, 1.0, 42.0] {
            assert!((snr(1.0, n, 0.0, 0.3).unwrap() - n.sqrt()).abs() < 1e-14);
        }
        assert!((snr(0.5, 1.0, -1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(snr(1e-12, 1.0, 0.0, 1.0).unwrap() < 1e-11);
        assert_eq!(snr(1.0, 1.0, -1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(matches!(snr(0.5, 1.0, -1.0, -1.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(snr(0.5, 1.0, -3.0, 0.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(ratio(1.0, -0.25), Err(Error::NegativeNoise { .. })));
    }

    #[test]
    fn snr_star_examples() {
        let s = snr(0.3, 2.0, 0.0, 1.0).unwrap();
        assert!((snr_star_ideal(0.3, 0.3, 2.0, 0.0, 1.0).unwrap() - s).abs() < 1e-15);
        // N_eff = delta_alpha^2 N = 1
        assert!((snr_star_ideal(0.5, 1e-3, 1e6, -1.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((snr_star_ideal(0.01, 1e-3, 1e6, 0.0, 1.0).unwrap() - 0.708_881_205_008_335_9).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        for a in [0.001, 0.3, 0.999] {
            assert!((quantum_gain(a, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((quantum_gain(0.01, 0.0, 0.0).unwrap() - 14.106_735_979_665_884).abs() < 1e-12);
        assert!(quantum_gain(1e-9, 0.0, 0.0).unwrap() > 4e4);
        assert_eq!(quantum_gain(1.0, -1.0, 0.0).unwrap(), f64::INFINITY);
        // alpha -> 1 limit (Q + 1)^(-1/2) with Q = 0.25
        assert!((quantum_gain(1.0 - 1e-9, 0.25, 0.5).unwrap() - 0.8f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn imperfect_reduces_and_hits_boundaries() {
        let a = 0.37;
        assert!((star(TF, a, 0.0, 0.0, 2.0) - snr_star_ideal(a, 1e-3, 2e6, -1.0, 0.0).unwrap()).abs() < 1e-12);
        assert!((star(TF, 0.01, 0.332, 0.0, 1.0) - 1.0).abs() < 1e-3);
        assert!((star(TF, 0.99, 0.495, 0.0, 1.0) - 1.0).abs() < 1e-3);
        assert!(snr_star_imperfect(0.5, 0.0, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn critical_loss_examples() {
        let g = critical_loss(0.01, -1.0, 0.0, 0.0, 1.0).value().unwrap();
        assert!((g - 0.332).abs() < 5e-4);
        let g = critical_loss(0.99, -1.0, 0.0, 0.0, 1.0).value().unwrap();
        assert!((g - 0.495).abs() < 5e-4);
        let c = critical_loss(0.01, 0.0, 1.0, 0.0, 1.0);
        assert!(!c.is_feasible());
        assert!((c.value().unwrap() + 0.99).abs() < 1e-12);
        assert_eq!(
            critical_loss(0.5, 3.0, 1.0, 0.0, 0.5),
            CriticalLoss::Infeasible { raw: None }
        );
    }

    #[test]
    fn threshold_table() {
        for i in 0..10 {
            let g = i as f64 / 10.0;
            let t = 1.0 - g;
            let th = |r, s: (f64, f64)| neff_threshold(r, s.0, s.1, g, 0.0).unwrap();
            assert!((th(Regime::SmallAlpha, COH) - 2.0 / t).abs() < 1e-12);
            assert!((th(Regime::SmallAlpha, TMSV) - 2.0 * g / t).abs() < 1e-12);
            assert!((th(Regime::SmallAlpha, TF) - 2.0 * g / t).abs() < 1e-12);
            assert!((th(Regime::LargeAlpha, COH) - 1.0 / t).abs() < 1e-12);
            assert!((th(Regime::LargeAlpha, TMSV) - 1.0 / t).abs() < 1e-12);
            assert!((th(Regime::LargeAlpha, TF) - g / t).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast() {
        assert_eq!(signal_contrast(1e-3, 0.0, 0.01), 1e-5);
        assert_eq!(signal_contrast(1e-3, 1.0, 0.01), 0.0);
        assert!((signal_contrast(1e-3, 0.5, 0.01) - 5e-6).abs() < 1e-20);
    }

    #[test]
    fn gain_report_against_coherent() {
        use crate::states::{descriptor_for, StateKind};
        let ch = ChannelParams::new(0.2, 1e-3, 0.1, 1e-4).unwrap();
        let d = descriptor_for(StateKind::TwinFock, 0.01).unwrap();
        let inputs = SnrInputs::from_c_bar(d, ch, 2e6).unwrap();
        assert!((inputs.n_eff - 2.0).abs() < 1e-12);
        let r = gain_report(&inputs).unwrap();
        let coh = star(COH, 0.2, 0.1, 0.01, 2.0);
        assert!((r.gain_ratio - r.snr_star / coh).abs() < 1e-12);
        assert_eq!(r.feasible, r.snr_star > 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn states() -> [(f64, f64); 3] {
            [TF, TMSV, COH]
        }

        proptest! {
            #[test]
            fn reduction_to_ideal(alpha in 1e-6f64..=1.0, n_eff in 1e-3f64..1e3, q in -1.0f64..2.0, sigma in 0.0f64..2.0) {
                prop_assume!(noise_factor(alpha, q, sigma) > 1e-9);
                let a = snr_star_imperfect(alpha, q, sigma, 0.0, 0.0, n_eff).unwrap();
                let b = snr_star_ideal(alpha, 1e-3, n_eff * 1e6, q, sigma).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }

            #[test]
            fn ordering(alpha in 1e-6f64..1.0, gamma in 0.0f64..0.999, eta in 0.0f64..1.0, n_eff in 1e-2f64..1e2) {
                let [tf, tmsv, coh] = states().map(|s| star(s, alpha, gamma, eta, n_eff));
                prop_assert!(tf >= tmsv && tmsv >= coh);
            }

            #[test]
            fn decreasing_in_loss_and_dark(alpha in 1e-3f64..1.0, gamma in 0.0f64..0.9, eta in 0.0f64..0.5, d in 1e-3f64..0.09) {
                for s in states() {
                    let base = star(s, alpha, gamma, eta, 1.0);
                    prop_assert!(star(s, alpha, gamma + d, eta, 1.0) < base);
                    prop_assert!(star(s, alpha, gamma, eta + d, 1.0) < base);
                }
            }

            #[test]
            fn root_is_consistent(alpha in 1e-3f64..=1.0, eta in 0.0f64..0.1, n_eff in 0.5f64..50.0) {
                for s in states() {
                    if let CriticalLoss::Bound(g) = critical_loss(alpha, s.0, s.1, eta, n_eff) {
                        if g < 1.0 {
                            let v = star(s, alpha, g, eta, n_eff);
                            prop_assert!((v - 1.0).abs() < 1e-9, "{v}");
                        }
                    }
                }
            }

            #[test]
            fn approx_close_for_small_eta(alpha in 1e-3f64..=1.0, eta in 0.0f64..=1e-2, n_eff in 0.5f64..100.0) {
                for s in states() {
                    let exact = critical_loss(alpha, s.0, s.1, eta, n_eff).value();
                    let approx = critical_loss_approx(alpha, s.0, s.1, eta, n_eff).value();
                    if let (Some(e), Some(a)) = (exact, approx) {
                        prop_assert!((e - a).abs() <= 20.0 * eta / (2.0 - alpha) + 1e-15);
                    }
                }
            }

            #[test]
            fn threshold_straddles(gamma in 0.0f64..0.95, eta in 0.0f64..0.1) {
                for s in states() {
                    for (regime, alpha) in [(Regime::SmallAlpha, 1e-6), (Regime::LargeAlpha, 1.0)] {
                        let th = neff_threshold(regime, s.0, s.1, gamma, eta).unwrap();
                        if th < 0.05 {
                            continue;
                        }
                        prop_assert!(star(s, alpha, gamma, eta, th * (1.0 - 1e-3)) < 1.0);
                        prop_assert!(star(s, alpha, gamma, eta, th * (1.0 + 1e-3)) > 1.0);
                    }
                }
            }
        }
    }
}
