//! Absorption, loss and dark-count channels.
//!
//! The signal mode sees the sample (transmission `1 - alpha`) and then the
//! common loss `gamma`; the reference mode only sees the loss. Dark counts
//! act on both detectors identically and independently, modelled as a weak
//! coherent inflow of `n_dark` photons per bin. Loss is always applied before
//! dark counts.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, loss_rate, non_negative, positive, unit_interval, Result};
use crate::states::{check_four, ClickBasisState, TwinModeDescriptor};

/// Sample and detection-chain parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    alpha: f64,
    delta_alpha: f64,
    gamma: f64,
    n_dark: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, delta_alpha: f64, gamma: f64, n_dark: f64) -> Result<Self> {
        unit_interval("alpha", alpha)?;
        positive("delta_alpha", delta_alpha)?;
        check_range(
            "delta_alpha",
            delta_alpha,
            alpha + delta_alpha <= 1.0,
            "alpha + delta_alpha <= 1",
        )?;
        loss_rate(gamma)?;
        non_negative("n_dark", n_dark)?;
        Ok(Self {
            alpha,
            delta_alpha,
            gamma,
            n_dark,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta_alpha(&self) -> f64 {
        self.delta_alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn n_dark(&self) -> f64 {
        self.n_dark
    }

    /// Absorption at the defect.
    pub fn alpha_defect(&self) -> f64 {
        self.alpha + self.delta_alpha
    }

    /// Dark counts relative to the probe's mean photon number.
    pub fn eta(&self, n_mean: f64) -> Result<f64> {
        effective_eta(self.n_dark, n_mean)
    }
}

/// Detector outcome probabilities `P00, P01, P10, P11` (signal digit first,
/// `1` = click).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbs {
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

impl OutcomeProbs {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        check_four([p00, p01, p10, p11])?;
        Ok(Self { p00, p01, p10, p11 })
    }

    pub(crate) fn from_raw(p: [f64; 4]) -> Self {
        debug_assert!(check_four(p).is_ok(), "{p:?}");
        Self {
            p00: p[0],
            p01: p[1],
            p10: p[2],
            p11: p[3],
        }
    }

    pub fn p00(&self) -> f64 {
        self.p00
    }
    pub fn p01(&self) -> f64 {
        self.p01
    }
    pub fn p10(&self) -> f64 {
        self.p10
    }
    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }

    /// Click probability of the signal detector.
    pub fn signal_click(&self) -> f64 {
        self.p10 + self.p11
    }

    /// Click probability of the reference detector.
    pub fn reference_click(&self) -> f64 {
        self.p01 + self.p11
    }
}

/// Populations after absorption `alpha` on the signal mode and loss `gamma`
/// on both modes.
pub fn propagate_loss(s: &ClickBasisState, alpha: f64, gamma: f64) -> Result<ClickBasisState> {
    unit_interval("alpha", alpha)?;
    loss_rate(gamma)?;
    let [p00, p01, p10, p11] = s.to_array();
    // probability that a signal photon is lost to the sample or the channel
    let lost = alpha + gamma * (1.0 - alpha);
    let out = [
        p00 + gamma * p01 + lost * p10 + gamma * lost * p11,
        (1.0 - gamma) * (p01 + lost * p11),
        (1.0 - alpha) * (1.0 - gamma) * (p10 + gamma * p11),
        (1.0 - alpha) * (1.0 - gamma).powi(2) * p11,
    ];
    Ok(ClickBasisState::from_raw(out))
}

/// Derivative of [`propagate_loss`] with respect to `alpha`. The map is
/// affine in `alpha`, so this is exact.
pub fn propagate_loss_alpha_derivative(s: &ClickBasisState, gamma: f64) -> Result<[f64; 4]> {
    loss_rate(gamma)?;
    let [_, _, p10, p11] = s.to_array();
    let t = 1.0 - gamma;
    Ok([
        t * p10 + gamma * t * p11,
        t * t * p11,
        -t * (p10 + gamma * p11),
        -t * t * p11,
    ])
}

// Linear action of the dark-count dressing on any population-like vector.
fn dress(p: [f64; 4], n_dark: f64) -> [f64; 4] {
    let [p00, p01, p10, p11] = p;
    let quiet = (-n_dark).exp();
    let fire = -(-n_dark).exp_m1();
    [
        quiet * quiet * p00,
        quiet * p01 + quiet * fire * p00,
        quiet * p10 + quiet * fire * p00,
        p11 + fire * (p01 + p10) + fire * fire * p00,
    ]
}

/// Outcome probabilities once both detectors also fire on dark counts with
/// mean `n_dark` per bin.
pub fn apply_dark_counts(s: &ClickBasisState, n_dark: f64) -> Result<OutcomeProbs> {
    non_negative("n_dark", n_dark)?;
    Ok(OutcomeProbs::from_raw(dress(s.to_array(), n_dark)))
}

/// Derivative of the outcome probabilities with respect to `alpha`.
pub fn outcome_alpha_derivative(s: &ClickBasisState, gamma: f64, n_dark: f64) -> Result<[f64; 4]> {
    non_negative("n_dark", n_dark)?;
    Ok(dress(propagate_loss_alpha_derivative(s, gamma)?, n_dark))
}

/// Loss followed by dark counts.
pub fn outcome_probs(
    s: &ClickBasisState,
    alpha: f64,
    gamma: f64,
    n_dark: f64,
) -> Result<OutcomeProbs> {
    apply_dark_counts(&propagate_loss(s, alpha, gamma)?, n_dark)
}

/// Output photon-number statistics of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov: f64,
}

impl MomentSet {
    /// Mean of the reference-minus-signal difference.
    pub fn difference_mean(&self) -> f64 {
        self.mean2 - self.mean1
    }

    /// Variance of the photon-number difference.
    pub fn difference_variance(&self) -> f64 {
        self.var1 + self.var2 - 2.0 * self.cov
    }
}

/// Photon-number moments after absorption, loss and dark counts (`eta` is
/// the dark-count mean relative to `N`).
///
/// The covariance transforms as `(1 - alpha)(1 - gamma)^2 Cov_in`, the unique
/// choice for which the difference variance equals
/// `(1-gamma)^2 [N(alpha^2 Q + 2(1-alpha) sigma + alpha) + gamma(2-alpha)N/(1-gamma) + 2 eta N/(1-gamma)^2]`.
pub fn moment_transform(
    d: &TwinModeDescriptor,
    alpha: f64,
    gamma: f64,
    eta: f64,
) -> Result<MomentSet> {
    unit_interval("alpha", alpha)?;
    loss_rate(gamma)?;
    non_negative("eta", eta)?;
    let n = d.n_mean();
    let var_in = d.variance();
    let t1 = (1.0 - alpha) * (1.0 - gamma);
    let t2 = 1.0 - gamma;
    Ok(MomentSet {
        mean1: t1 * n + eta * n,
        mean2: t2 * n + eta * n,
        var1: t1 * t1 * var_in + (t1 * (alpha + gamma - alpha * gamma) + eta) * n,
        var2: t2 * t2 * var_in + (gamma * t2 + eta) * n,
        cov: (1.0 - alpha) * t2 * t2 * d.covariance(),
    })
}

/// `n_dark / n_mean`.
pub fn effective_eta(n_dark: f64, n_mean: f64) -> Result<f64> {
    positive("n_mean", n_mean)?;
    non_negative("n_dark", n_dark)?;
    Ok(n_dark / n_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{click_probs, descriptor_for, StateKind};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_channel() {
        let s = click_probs(StateKind::Coherent, 0.05).unwrap();
        assert_eq!(propagate_loss(&s, 0.0, 0.0).unwrap(), s);
        assert_eq!(apply_dark_counts(&s, 0.0).unwrap().to_array(), s.to_array());
    }

    #[test]
    fn full_absorption_keeps_reference() {
        let out = propagate_loss(&ClickBasisState::PAIR, 1.0, 0.0).unwrap();
        assert_eq!(out.to_array(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn pair_through_lossy_sample() {
        // signal survives w.p. 0.8 * 0.9 = 0.72, reference w.p. 0.9
        let out = propagate_loss(&ClickBasisState::PAIR, 0.2, 0.1).unwrap();
        assert!(close(&out.to_array(), &[0.028, 0.252, 0.072, 0.648], 1e-15));
    }

    #[test]
    fn dark_counts_on_vacuum() {
        let out = apply_dark_counts(&ClickBasisState::VACUUM, 2f64.ln()).unwrap();
        assert!(close(&out.to_array(), &[0.25; 4], 1e-15));
    }

    #[test]
    fn dark_counts_cannot_unclick() {
        for nd in [0.0, 1e-3, 0.7, 30.0] {
            let out = apply_dark_counts(&ClickBasisState::PAIR, nd).unwrap();
            assert_eq!(out.to_array(), [0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = ClickBasisState::PAIR;
        assert!(propagate_loss(&s, -0.1, 0.0).is_err());
        assert!(propagate_loss(&s, 0.1, 1.0).is_err());
        assert!(apply_dark_counts(&s, -1e-3).is_err());
        assert!(ChannelParams::new(0.9, 0.2, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(0.5, 0.0, 0.0, 0.0).is_err());
        assert!(effective_eta(1.0, 0.0).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(effective_eta(0.0, 0.01).unwrap(), 0.0);
        assert!((effective_eta(1e-5, 1e-2).unwrap() - 1e-3).abs() < 1e-18);
        assert!((effective_eta(1e-3, 1e-2).unwrap() - 0.1).abs() < 1e-16);
    }

    // Independent oracle: every photon survives its own Bernoulli trial, and
    // each detector can additionally fire on a dark count.
    fn enumerate(s: &ClickBasisState, alpha: f64, gamma: f64, n_dark: f64) -> [f64; 4] {
        let surv = [(1.0 - alpha) * (1.0 - gamma), 1.0 - gamma];
        let dark = 1.0 - (-n_dark).exp();
        let mut out = [0.0; 4];
        for (cfg, &pop) in s.to_array().iter().enumerate() {
            let present = [cfg >> 1 & 1 == 1, cfg & 1 == 1];
            for kept in 0..4usize {
                let kept = [kept >> 1 & 1 == 1, kept & 1 == 1];
                let mut w = pop;
                for j in 0..2 {
                    if present[j] {
                        w *= if kept[j] { surv[j] } else { 1.0 - surv[j] };
                    } else if kept[j] {
                        w = 0.0;
                    }
                }
                for fired in 0..4usize {
                    let fired = [fired >> 1 & 1 == 1, fired & 1 == 1];
                    let mut v = w;
                    for f in fired {
                        v *= if f { dark } else { 1.0 - dark };
                    }
                    let click = [kept[0] || fired[0], kept[1] || fired[1]];
                    out[(click[0] as usize) << 1 | click[1] as usize] += v;
                }
            }
        }
        out
    }

    #[test]
    fn loss_matches_bernoulli_enumeration() {
        for kind in StateKind::BUILT_IN {
            let s = click_probs(kind, 0.07).unwrap();
            for i in 0..=20 {
                for j in 0..=20 {
                    let (alpha, gamma) = (i as f64 / 20.0, j as f64 / 20.0 * 0.99);
                    let got = propagate_loss(&s, alpha, gamma).unwrap().to_array();
                    assert!(close(&got, &enumerate(&s, alpha, gamma, 0.0), 1e-12));
                }
            }
        }
    }

    #[test]
    fn dark_counts_match_enumeration() {
        for kind in StateKind::BUILT_IN {
            let s = click_probs(kind, 0.03).unwrap();
            for nd in [0.0, 1e-4, 0.01, 0.3, 2.0] {
                let got = outcome_probs(&s, 0.3, 0.2, nd).unwrap().to_array();
                assert!(close(&got, &enumerate(&s, 0.3, 0.2, nd), 1e-12));
            }
        }
    }

    #[test]
    fn alpha_derivative_matches_difference() {
        let s = click_probs(StateKind::Coherent, 0.04).unwrap();
        let d = outcome_alpha_derivative(&s, 0.3, 0.01).unwrap();
        let lo = outcome_probs(&s, 0.2, 0.3, 0.01).unwrap().to_array();
        let hi = outcome_probs(&s, 0.6, 0.3, 0.01).unwrap().to_array();
        for k in 0..4 {
            assert!(((hi[k] - lo[k]) / 0.4 - d[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn moments_coherent_ideal() {
        let d = descriptor_for(StateKind::Coherent, 0.3).unwrap();
        let m = moment_transform(&d, 0.4, 0.0, 0.0).unwrap();
        assert!((m.var1 - (0.36 * 0.3 + 0.24 * 0.3)).abs() < 1e-15);
        assert!((m.var2 - 0.3).abs() < 1e-15);
        assert_eq!(m.cov, 0.0);
    }

    #[test]
    fn moments_twin_fock_noiseless() {
        let d = descriptor_for(StateKind::TwinFock, 1.0).unwrap();
        let m = moment_transform(&d, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((m.var1, m.var2, m.cov), (0.0, 0.0, 0.0));
    }

    #[test]
    fn moments_reduce_to_ideal_relations() {
        // gamma = eta = 0: var1' = (1-a)^2 V + a(1-a) N, var2' = V, cov' = (1-a) Cov
        let d = TwinModeDescriptor::new(0.2, 0.7, 0.4).unwrap();
        let a = 0.35;
        let m = moment_transform(&d, a, 0.0, 0.0).unwrap();
        let v = d.variance();
        assert!((m.var1 - ((1.0 - a) * (1.0 - a) * v + a * (1.0 - a) * 0.2)).abs() < 1e-15);
        assert!((m.var2 - v).abs() < 1e-15);
        assert!((m.cov - (1.0 - a) * d.covariance()).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn assembled_noise_matches_closed_form(
                n in 1e-4f64..10.0,
                q in -1.0f64..3.0,
                sigma in 0.0f64..2.0,
                alpha in 0.0f64..=1.0,
                gamma in 0.0f64..0.99,
                eta in 0.0f64..1.0,
            ) {
                let d = TwinModeDescriptor::new(n, q, sigma).unwrap();
                let m = moment_transform(&d, alpha, gamma, eta).unwrap();
                let ideal = n * (alpha * alpha * q + 2.0 * (1.0 - alpha) * sigma + alpha);
                let g = 1.0 - gamma;
                let expected = g * g
                    * (ideal + gamma * (2.0 - alpha) * n / g + 2.0 * eta * n / (g * g));
                let scale = expected.abs().max(n);
                prop_assert!((m.difference_variance() - expected).abs() <= 1e-12 * scale);
                prop_assert!((m.difference_mean() - alpha * g * n).abs() <= 1e-12 * n);
            }

            #[test]
            fn covariance_bounded(
                n in 1e-4f64..10.0,
                alpha in 0.0f64..=1.0,
                gamma in 0.0f64..0.99,
                eta in 0.0f64..1.0,
            ) {
                for kind in StateKind::BUILT_IN {
                    let d = descriptor_for(kind, n).unwrap();
                    let m = moment_transform(&d, alpha, gamma, eta).unwrap();
                    prop_assert!(m.var1 >= 0.0 && m.var2 >= 0.0);
                    prop_assert!(m.cov.abs() <= (m.var1 * m.var2).sqrt() + 1e-9);
                }
            }

            #[test]
            fn probability_conserved(
                n in 1e-6f64..0.5,
                alpha in 0.0f64..=1.0,
                gamma in 0.0f64..0.999,
                n_dark in 0.0f64..1.0,
            ) {
                for kind in StateKind::BUILT_IN {
                    let s = click_probs(kind, n).unwrap();
                    let lossy = propagate_loss(&s, alpha, gamma).unwrap();
                    prop_assert!((lossy.sum() - 1.0).abs() <= 1e-12);
                    let p = apply_dark_counts(&lossy, n_dark).unwrap();
                    prop_assert!((p.sum() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
