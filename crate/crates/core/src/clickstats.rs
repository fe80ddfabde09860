//! Click statistics of two threshold detectors integrated over `m` bins.
//!
//! Each bin yields one of four outcomes (`00`, `01`, `10`, `11`, signal digit
//! first), so the outcome counts over an exposure are multinomial. The
//! differential signal is the reference click count minus the signal click
//! count, `c2 - c1 = nu01 - nu10`.
//!
//! Twin-Fock probes use a mixed model: exactly `m N` bins carry a photon
//! pair, the rest only see dark counts. The two populations are independent
//! multinomials, so their moments add.

use serde::{Deserialize, Serialize};

use crate::channels::{apply_dark_counts, outcome_alpha_derivative, outcome_probs, ChannelParams, OutcomeProbs};
use crate::error::{check_range, non_negative, positive, Error, Result};
use crate::states::{click_probs, ClickBasisState, StateKind};

/// Index of an outcome in `[P00, P01, P10, P11]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Neither = 0,
    ReferenceOnly = 1,
    SignalOnly = 2,
    Both = 3,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Neither,
        Outcome::ReferenceOnly,
        Outcome::SignalOnly,
        Outcome::Both,
    ];

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self as usize]
    }
}

/// One exposure: `m` bins of length `delta_t` (seconds, informational only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureConfig {
    pub m: u64,
    pub delta_t: f64,
    pub n_mean: f64,
}

impl ExposureConfig {
    pub fn new(m: u64, delta_t: f64, n_mean: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("m must be at least 1".into()));
        }
        non_negative("delta_t", delta_t)?;
        non_negative("n_mean", n_mean)?;
        Ok(Self { m, delta_t, n_mean })
    }

    /// Exposure time `m * delta_t`.
    pub fn exposure_time(&self) -> f64 {
        self.m as f64 * self.delta_t
    }

    /// Number of occupied bins in the twin-Fock mixed model.
    pub fn occupancy(&self) -> Result<u64> {
        occupancy(self.m, self.n_mean)
    }
}

/// `round(m N)`, rejecting products that are not integers to within
/// `1e-6 * m N`.
pub fn occupancy(m: u64, n_mean: f64) -> Result<u64> {
    non_negative("n_mean", n_mean)?;
    let product = m as f64 * n_mean;
    let k = product.round();
    if (product - k).abs() > 1e-6 * product || k > m as f64 {
        return Err(Error::NonIntegerOccupancy { product });
    }
    Ok(k as u64)
}

/// Means and covariance matrix of the four outcome counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickMoments {
    pub mean: [f64; 4],
    /// Symmetric; the diagonal holds the variances.
    pub cov: [[f64; 4]; 4],
}

impl ClickMoments {
    pub fn e(&self, mu: Outcome) -> f64 {
        self.mean[mu as usize]
    }

    pub fn var(&self, mu: Outcome) -> f64 {
        self.cov[mu as usize][mu as usize]
    }

    pub fn covariance(&self, mu: Outcome, beta: Outcome) -> f64 {
        self.cov[mu as usize][beta as usize]
    }

    /// Moments of the sum of two independent count vectors.
    pub fn combine(&self, other: &ClickMoments) -> ClickMoments {
        let mut out = *self;
        for i in 0..4 {
            out.mean[i] += other.mean[i];
            for j in 0..4 {
                out.cov[i][j] += other.cov[i][j];
            }
        }
        out
    }

    /// `E(c2 - c1)`.
    pub fn difference_mean(&self) -> f64 {
        self.e(Outcome::ReferenceOnly) - self.e(Outcome::SignalOnly)
    }

    /// `Var(c2 - c1) = Var(nu01) + Var(nu10) - 2 Cov(nu01, nu10)`.
    pub fn difference_variance(&self) -> f64 {
        self.var(Outcome::ReferenceOnly) + self.var(Outcome::SignalOnly)
            - 2.0 * self.covariance(Outcome::ReferenceOnly, Outcome::SignalOnly)
    }

    /// Mean and variance of the signal click count `c1 = nu10 + nu11`.
    pub fn signal_clicks(&self) -> (f64, f64) {
        self.pair_sum(Outcome::SignalOnly, Outcome::Both)
    }

    /// Mean and variance of the reference click count `c2 = nu01 + nu11`.
    pub fn reference_clicks(&self) -> (f64, f64) {
        self.pair_sum(Outcome::ReferenceOnly, Outcome::Both)
    }

    fn pair_sum(&self, a: Outcome, b: Outcome) -> (f64, f64) {
        (
            self.e(a) + self.e(b),
            self.var(a) + self.var(b) + 2.0 * self.covariance(a, b),
        )
    }
}

pub fn multinomial_moments(p: &OutcomeProbs, m: u64) -> ClickMoments {
    let p = p.to_array();
    let m = m as f64;
    let mut cov = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = if i == j {
                m * p[i] * (1.0 - p[i])
            } else {
                -m * p[i] * p[j]
            };
        }
    }
    ClickMoments {
        mean: p.map(|x| m * x),
        cov,
    }
}

/// Moments for `occupied` bins drawn from `p_occupied` and the remaining
/// `m - occupied` bins drawn from `p_empty`.
pub fn mixed_moments(
    p_occupied: &OutcomeProbs,
    occupied: u64,
    p_empty: &OutcomeProbs,
    m: u64,
) -> Result<ClickMoments> {
    if occupied > m {
        return Err(Error::Invalid(format!(
            "occupied bins {occupied} exceed m = {m}"
        )));
    }
    Ok(multinomial_moments(p_occupied, occupied).combine(&multinomial_moments(p_empty, m - occupied)))
}

/// Differential click statistics of one exposure and its defect counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialStats {
    /// `E(c2 - c1)` at `alpha`.
    pub i_minus: f64,
    /// Change of `E(c2 - c1)` caused by the defect.
    pub gamma_minus: f64,
    /// `Var(c2 - c1)` at `alpha`.
    pub noise_sq: f64,
    pub snr_star: f64,
}

impl DifferentialStats {
    pub fn new(i_minus: f64, gamma_minus: f64, noise_sq: f64) -> Self {
        let snr_star = if noise_sq > 0.0 {
            gamma_minus / noise_sq.sqrt()
        } else if gamma_minus == 0.0 {
            0.0
        } else {
            gamma_minus.signum() * f64::INFINITY
        };
        Self {
            i_minus,
            gamma_minus,
            noise_sq,
            snr_star,
        }
    }
}

fn difference(p: &OutcomeProbs) -> f64 {
    p.p01() - p.p10()
}

/// Differential statistics from the outcome probabilities without
/// (`p_at_alpha`) and with (`p_at_alpha_plus`) the defect. The noise is taken
/// at `alpha`.
pub fn differential_stats(
    p_at_alpha: &OutcomeProbs,
    p_at_alpha_plus: &OutcomeProbs,
    m: u64,
) -> Result<DifferentialStats> {
    if m == 0 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    let mf = m as f64;
    let moments = multinomial_moments(p_at_alpha, m);
    Ok(DifferentialStats::new(
        moments.difference_mean(),
        mf * (difference(p_at_alpha_plus) - difference(p_at_alpha)),
        moments.difference_variance(),
    ))
}

/// How the defect contrast is evaluated in [`snr_star_click_with`]. The
/// outcome probabilities are affine in `alpha`, so both agree up to rounding;
/// the derivative avoids subtracting two nearly equal probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ContrastMode {
    /// `delta_alpha` times the derivative in `alpha`.
    #[default]
    Derivative,
    /// Outcome probabilities evaluated at `alpha + delta_alpha`.
    Difference,
}

/// SNR* of the click record for any probe, through the generic pipeline
/// (states, then channels, then multinomial statistics). Twin-Fock light uses
/// the mixed occupied/empty bin model.
pub fn snr_star_click(
    kind: StateKind,
    n_mean: f64,
    channel: &ChannelParams,
    m: u64,
) -> Result<DifferentialStats> {
    snr_star_click_with(kind, n_mean, channel, m, ContrastMode::default())
}

pub fn snr_star_click_with(
    kind: StateKind,
    n_mean: f64,
    channel: &ChannelParams,
    m: u64,
    mode: ContrastMode,
) -> Result<DifferentialStats> {
    non_negative("n_mean", n_mean)?;
    if m == 0 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    let (alpha, gamma, n_dark) = (channel.alpha(), channel.gamma(), channel.n_dark());
    let contrast = |s: &ClickBasisState, p_alpha: &OutcomeProbs| -> Result<f64> {
        Ok(match mode {
            ContrastMode::Difference => {
                let p_defect = outcome_probs(s, channel.alpha_defect(), gamma, n_dark)?;
                difference(&p_defect) - difference(p_alpha)
            }
            ContrastMode::Derivative => {
                let d = outcome_alpha_derivative(s, gamma, n_dark)?;
                channel.delta_alpha() * (d[1] - d[2])
            }
        })
    };

    if let StateKind::TwinFock = kind {
        let occupied = occupancy(m, n_mean)?;
        let pair = ClickBasisState::PAIR;
        let p_pair = outcome_probs(&pair, alpha, gamma, n_dark)?;
        let p_empty = apply_dark_counts(&ClickBasisState::VACUUM, n_dark)?;
        let moments = mixed_moments(&p_pair, occupied, &p_empty, m)?;
        return Ok(DifferentialStats::new(
            moments.difference_mean(),
            occupied as f64 * contrast(&pair, &p_pair)?,
            moments.difference_variance(),
        ));
    }

    let s = if n_mean == 0.0 {
        ClickBasisState::VACUUM
    } else {
        click_probs(kind, n_mean)?
    };
    let p_alpha = outcome_probs(&s, alpha, gamma, n_dark)?;
    let moments = multinomial_moments(&p_alpha, m);
    Ok(DifferentialStats::new(
        moments.difference_mean(),
        m as f64 * contrast(&s, &p_alpha)?,
        moments.difference_variance(),
    ))
}

fn closed_form_args(n_mean: f64, m: u64) -> Result<f64> {
    positive("n_mean", n_mean)?;
    if m == 0 {
        return Err(Error::Invalid("m must be at least 1".into()));
    }
    Ok(m as f64)
}

/// Outcome probabilities of a coherent probe written out per outcome.
pub fn coherent_outcomes(n_mean: f64, alpha: f64, gamma: f64, n_dark: f64) -> Result<OutcomeProbs> {
    let (e_n, e_d) = ((-n_mean).exp(), (-n_dark).exp());
    let k = alpha + gamma - alpha * gamma;
    let f = 1.0 - e_n;
    let sig = e_n + gamma * f;
    let refr = e_n + k * f;
    let a = 1.0 - (-n_mean - n_dark).exp() - gamma * e_d * f;
    let b = 1.0 - k * e_d - (1.0 - alpha) * (1.0 - gamma) * (-n_mean - n_dark).exp();
    OutcomeProbs::new(e_d * e_d * sig * refr, e_d * a * refr, e_d * sig * b, a * b)
}

/// Outcome probabilities of a TMSV probe written out per outcome.
pub fn tmsv_outcomes(n_mean: f64, alpha: f64, gamma: f64, n_dark: f64) -> Result<OutcomeProbs> {
    let (e_n, e_d) = ((-n_mean).exp(), (-n_dark).exp());
    let k = alpha + gamma - alpha * gamma;
    let g = 1.0 - gamma;
    OutcomeProbs::new(
        e_d * e_d * (e_n + gamma * k * (1.0 - e_n)),
        e_d * (k * (1.0 - gamma * e_d) - e_n * g * (e_d - (1.0 - alpha) * (1.0 - gamma * e_d))),
        e_d * (gamma * (1.0 - k * e_d) + e_n * g * (1.0 - e_d - gamma * (1.0 - alpha) * e_d)),
        (1.0 - gamma * e_d) * (1.0 - k * e_d)
            + (-n_mean - n_dark).exp() * g * (e_d - (2.0 - alpha) + gamma * (1.0 - alpha) * e_d),
    )
}

/// Outcome probabilities of a bin carrying a twin-Fock photon pair.
pub fn twin_fock_outcomes(alpha: f64, gamma: f64, n_dark: f64) -> Result<OutcomeProbs> {
    let e_d = (-n_dark).exp();
    let k = alpha + gamma - alpha * gamma;
    OutcomeProbs::new(
        e_d * e_d * gamma * k,
        e_d * (1.0 - gamma * e_d) * k,
        e_d * gamma * (1.0 - k * e_d),
        (1.0 - gamma * e_d) * (1.0 - k * e_d),
    )
}

fn checked(channel: &ChannelParams) -> (f64, f64, f64, f64) {
    (
        channel.alpha(),
        channel.delta_alpha(),
        channel.gamma(),
        channel.n_dark(),
    )
}

// u = 1 - exp(-N) and v = 1 - exp(-N_d) keep the O(1) terms of the expanded
// variances from cancelling at weak illumination.
fn weak(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Closed-form click statistics for a coherent probe.
pub fn closed_form_coherent(n_mean: f64, channel: &ChannelParams, m: u64) -> Result<DifferentialStats> {
    let mf = closed_form_args(n_mean, m)?;
    let (a, da, g, nd) = checked(channel);
    let (u, v) = (weak(n_mean), weak(nd));
    let t = 1.0 - g;
    let e_d = 1.0 - v;
    let noise_sq = mf
        * e_d
        * (2.0 * v + (2.0 - a) * t * u * (1.0 - 2.0 * v) - t * t * (2.0 - 2.0 * a + a * a) * u * u * e_d);
    Ok(DifferentialStats::new(
        mf * a * e_d * t * u,
        mf * da * e_d * t * u,
        noise_sq,
    ))
}

/// Closed-form click statistics for a TMSV probe. The contrast is identical
/// to the coherent one.
pub fn closed_form_tmsv(n_mean: f64, channel: &ChannelParams, m: u64) -> Result<DifferentialStats> {
    let mf = closed_form_args(n_mean, m)?;
    let (a, da, g, nd) = checked(channel);
    let (u, v) = (weak(n_mean), weak(nd));
    let t = 1.0 - g;
    let e_d = 1.0 - v;
    let noise_sq = mf
        * e_d
        * (2.0 * v + t * u * (a + 2.0 * g * (1.0 - a) - 2.0 * v * (1.0 + g - a * g))
            - a * a * t * t * u * u * e_d);
    Ok(DifferentialStats::new(
        mf * a * e_d * t * u,
        mf * da * e_d * t * u,
        noise_sq,
    ))
}

/// Closed-form click statistics for twin-Fock light under the mixed model
/// (`m N` occupied bins, which must be an integer).
pub fn closed_form_tf(n_mean: f64, channel: &ChannelParams, m: u64) -> Result<DifferentialStats> {
    let mf = closed_form_args(n_mean, m)?;
    check_range("n_mean", n_mean, n_mean <= 1.0, "<= 1")?;
    let occupied = occupancy(m, n_mean)? as f64;
    let (a, da, g, nd) = checked(channel);
    let v = weak(nd);
    let t = 1.0 - g;
    let e_d = 1.0 - v;
    let noise_sq = mf
        * e_d
        * (2.0 * v
            + n_mean
                * t
                * (a * (1.0 - a) + g * (2.0 - 2.0 * a + a * a)
                    - v * (2.0 + 2.0 * g - 2.0 * a * g - a * a * t)));
    // empty bins are symmetric and add nothing to either difference
    Ok(DifferentialStats::new(
        occupied * a * e_d * t,
        occupied * da * e_d * t,
        noise_sq,
    ))
}

/// Dispatch to the per-state closed form. Custom states have none.
pub fn closed_form(kind: StateKind, n_mean: f64, channel: &ChannelParams, m: u64) -> Result<DifferentialStats> {
    match kind {
        StateKind::Coherent => closed_form_coherent(n_mean, channel, m),
        StateKind::Tmsv => closed_form_tmsv(n_mean, channel, m),
        StateKind::TwinFock => closed_form_tf(n_mean, channel, m),
        StateKind::Custom(_) => Err(Error::Invalid("custom states have no closed form".into())),
    }
}

/// Per-bin outcome frequencies expected in an exposure, i.e. the mean of
/// `nu / m`. For twin-Fock light this averages the two populations.
pub fn expected_moments(kind: StateKind, n_mean: f64, alpha: f64, gamma: f64, n_dark: f64, m: u64) -> Result<ClickMoments> {
    if let StateKind::TwinFock = kind {
        let occupied = occupancy(m, n_mean)?;
        let p_pair = outcome_probs(&ClickBasisState::PAIR, alpha, gamma, n_dark)?;
        let p_empty = apply_dark_counts(&ClickBasisState::VACUUM, n_dark)?;
        return mixed_moments(&p_pair, occupied, &p_empty, m);
    }
    let s = if n_mean == 0.0 {
        ClickBasisState::VACUUM
    } else {
        click_probs(kind, n_mean)?
    };
    Ok(multinomial_moments(&outcome_probs(&s, alpha, gamma, n_dark)?, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn deterministic_outcome() {
        let p = OutcomeProbs::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let c = multinomial_moments(&p, 10);
        assert_eq!(c.e(Outcome::Neither), 10.0);
        assert!(c.cov.iter().flatten().all(|&v| v == 0.0));
    }

    // Exact enumeration of the multinomial at m = 4; the moments scale
    // linearly in m, giving the m = 100 values.
    #[test]
    fn uniform_outcomes_match_enumeration() {
        let m = 4usize;
        let mut mean = [0.0; 4];
        let mut second = [[0.0; 4]; 4];
        let mut total = 0.0;
        for a in 0..=m {
            for b in 0..=m - a {
                for c in 0..=m - a - b {
                    let d = m - a - b - c;
                    let fact = |n: usize| (1..=n).product::<usize>() as f64;
                    let w = fact(m) / (fact(a) * fact(b) * fact(c) * fact(d)) * 0.25f64.powi(m as i32);
                    let nu = [a, b, c, d].map(|x| x as f64);
                    total += w;
                    for i in 0..4 {
                        mean[i] += w * nu[i];
                        for j in 0..4 {
                            second[i][j] += w * nu[i] * nu[j];
                        }
                    }
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-14);
        let scale = 100.0 / m as f64;
        let p = OutcomeProbs::new(0.25, 0.25, 0.25, 0.25).unwrap();
        let mm = multinomial_moments(&p, 100);
        for i in 0..4 {
            assert!((mm.mean[i] - mean[i] * scale).abs() < 1e-12);
            for j in 0..4 {
                let c = (second[i][j] - mean[i] * mean[j]) * scale;
                assert!((mm.cov[i][j] - c).abs() < 1e-12);
            }
        }
        assert_eq!(mm.e(Outcome::Both), 25.0);
        assert_eq!(mm.var(Outcome::Both), 18.75);
        assert_eq!(mm.covariance(Outcome::Neither, Outcome::Both), -6.25);
    }

    #[test]
    fn no_defect_no_contrast() {
        let p = OutcomeProbs::new(0.6, 0.2, 0.15, 0.05).unwrap();
        let d = differential_stats(&p, &p, 1000).unwrap();
        assert_eq!(d.gamma_minus, 0.0);
        assert_eq!(d.snr_star, 0.0);
        let sym = OutcomeProbs::new(0.6, 0.15, 0.15, 0.1).unwrap();
        assert_eq!(differential_stats(&sym, &sym, 7).unwrap().i_minus, 0.0);
    }

    #[test]
    fn infinite_snr_marker() {
        let d = DifferentialStats::new(0.0, 2.0, 0.0);
        assert_eq!(d.snr_star, f64::INFINITY);
    }

    #[test]
    fn coherent_pipeline_matches_closed_form() {
        let ch = ChannelParams::new(0.1, 1e-3, 0.0, 0.0).unwrap();
        let a = closed_form_coherent(0.01, &ch, 10_000_000).unwrap();
        let b = snr_star_click(StateKind::Coherent, 0.01, &ch, 10_000_000).unwrap();
        assert!(rel(a.snr_star, b.snr_star) < 1e-9);
    }

    // Variances in expanded exponential form, before regrouping in powers of 1 - exp(-N) and
    // 1 - exp(-N_d).
    fn expanded_noise(kind: StateKind, n: f64, a: f64, g: f64, nd: f64) -> f64 {
        let (e_n, e_d) = ((-n).exp(), (-nd).exp());
        e_d * match kind {
            StateKind::Coherent => {
                a * (1.0 - g) + 2.0 * g + e_n * (2.0 - a) * (1.0 - g)
                    - (-2.0 * n - nd).exp() * (2.0 - a * (2.0 - a)) * (1.0 - g).powi(2)
                    - 2.0 * (-n - nd).exp() * (1.0 - g) * (a - a * a * (1.0 - g) + 2.0 * g - 2.0 * a * g)
                    - e_d * (a * a * (1.0 - g).powi(2) + 2.0 * a * g * (1.0 - g) + 2.0 * g * g)
            }
            StateKind::Tmsv => {
                2.0 * e_n * (1.0 - e_d)
                    + (1.0 - e_n)
                        * (a * (1.0 - g) + 2.0 * g
                            - e_d * (2.0 * g * (a + g - a * g) + a * a * (1.0 - e_n) * (1.0 - g).powi(2)))
            }
            _ => {
                2.0 * (1.0 - e_d) - n * (2.0 - a) * (1.0 - g)
                    - n * e_d * (1.0 - g) * (a * a * (1.0 - g) + 2.0 * a * g - 2.0 * g - 2.0)
            }
        }
    }

    #[test]
    fn regrouped_variances_match_expanded() {
        for kind in StateKind::BUILT_IN {
            for (n, a, g, nd) in [(0.1, 0.3, 0.2, 0.05), (0.5, 0.7, 0.6, 0.3), (0.2, 0.05, 0.0, 0.0), (1.0, 0.9, 0.4, 1.0)] {
                let ch = ChannelParams::new(a, 1e-3, g, nd).unwrap();
                let m = 1000;
                let cf = closed_form(kind, n, &ch, m).unwrap();
                let want = m as f64 * expanded_noise(kind, n, a, g, nd);
                assert!(rel(cf.noise_sq, want) < 1e-13, "{kind} {n} {a} {g} {nd}");
            }
        }
    }

    #[test]
    fn full_parameter_point() {
        let ch = ChannelParams::new(0.3, 1e-3, 0.2, 1e-4).unwrap();
        for kind in StateKind::BUILT_IN {
            let a = closed_form(kind, 0.01, &ch, 1_000_000).unwrap();
            let b = snr_star_click(kind, 0.01, &ch, 1_000_000).unwrap();
            assert!(rel(a.gamma_minus, b.gamma_minus) < 1e-12, "{kind}");
            assert!(rel(a.noise_sq, b.noise_sq) < 1e-12, "{kind}");
            assert!(rel(a.i_minus, b.i_minus) < 1e-12, "{kind}");
        }
    }

    #[test]
    fn small_n_noise_limits() {
        let m = 1_000_000u64;
        let n = 1e-6;
        let alpha = 0.3;
        let ch = ChannelParams::new(alpha, 1e-3, 0.0, 0.0).unwrap();
        let tot = m as f64 * n;
        let coh = closed_form_coherent(n, &ch, m).unwrap();
        assert!(rel(coh.noise_sq, tot * (2.0 - alpha)) < 1e-5);
        let tmsv = closed_form_tmsv(n, &ch, m).unwrap();
        assert!(rel(tmsv.noise_sq, tot * alpha) < 1e-5);
        let tf = closed_form_tf(n, &ch, m).unwrap();
        assert!(rel(tf.noise_sq, tot * alpha * (1.0 - alpha)) < 1e-12);
        assert!(rel(tf.gamma_minus, tot * 1e-3) < 1e-12);
    }

    #[test]
    fn tmsv_contrast_equals_coherent() {
        let ch = ChannelParams::new(0.45, 2e-3, 0.35, 3e-3).unwrap();
        let a = closed_form_coherent(0.02, &ch, 123_456).unwrap();
        let b = closed_form_tmsv(0.02, &ch, 123_456).unwrap();
        assert_eq!(a.gamma_minus.to_bits(), b.gamma_minus.to_bits());
    }

    #[test]
    fn twin_fock_occupancy() {
        assert_eq!(occupancy(1000, 0.01).unwrap(), 10);
        assert_eq!(occupancy(10_000_000, 1e-3).unwrap(), 10_000);
        assert!(matches!(
            occupancy(1000, 0.0015),
            Err(Error::NonIntegerOccupancy { .. })
        ));
        let ch = ChannelParams::new(0.5, 1e-3, 0.0, 0.0).unwrap();
        assert!(closed_form_tf(0.0015, &ch, 1000).is_err());
    }

    #[test]
    fn twin_fock_without_dark_counts() {
        let ch = ChannelParams::new(0.4, 1e-3, 0.25, 0.0).unwrap();
        let d = closed_form_tf(0.01, &ch, 100_000).unwrap();
        assert!(rel(d.gamma_minus, 1000.0 * 1e-3 * 0.75) < 1e-12);
    }

    #[test]
    fn vacuum_probe_guarded() {
        let ch = ChannelParams::new(0.5, 1e-3, 0.0, 0.0).unwrap();
        for kind in StateKind::BUILT_IN {
            let d = snr_star_click(kind, 0.0, &ch, 1000).unwrap();
            assert_eq!(d.snr_star, 0.0);
        }
        let ch = ChannelParams::new(0.5, 1e-3, 0.0, 1e-3).unwrap();
        assert_eq!(snr_star_click(StateKind::Coherent, 0.0, &ch, 1000).unwrap().snr_star, 0.0);
    }

    #[test]
    fn linearized_contrast_agrees() {
        let ch = ChannelParams::new(0.2, 1e-2, 0.1, 1e-3).unwrap();
        for kind in StateKind::BUILT_IN {
            let a = snr_star_click_with(kind, 0.02, &ch, 100_000, ContrastMode::Difference).unwrap();
            let b = snr_star_click_with(kind, 0.02, &ch, 100_000, ContrastMode::Derivative).unwrap();
            assert!(rel(a.gamma_minus, b.gamma_minus) < 1e-12);
        }
    }

    #[test]
    fn outcome_tables_match_pipeline() {
        let (n, a, g, nd) = (0.03, 0.6, 0.15, 2e-3);
        let pipe = |kind| outcome_probs(&click_probs(kind, n).unwrap(), a, g, nd).unwrap().to_array();
        let tables = [
            coherent_outcomes(n, a, g, nd).unwrap().to_array(),
            tmsv_outcomes(n, a, g, nd).unwrap().to_array(),
            twin_fock_outcomes(a, g, nd).unwrap().to_array(),
        ];
        for (kind, table) in StateKind::BUILT_IN.into_iter().zip(tables) {
            let p = pipe(kind);
            for k in 0..4 {
                assert!((p[k] - table[k]).abs() < 1e-15);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn counts_partition_bins(p in proptest::array::uniform4(0.0f64..1.0), m in 1u64..1_000_000) {
                let s: f64 = p.iter().sum();
                prop_assume!(s > 1e-3);
                let q = OutcomeProbs::new(p[0] / s, p[1] / s, p[2] / s, 1.0 - (p[0] + p[1] + p[2]) / s).unwrap();
                let c = multinomial_moments(&q, m);
                prop_assert!((c.mean.iter().sum::<f64>() - m as f64).abs() <= 1e-9 * m as f64);
                // PSD: every vector's quadratic form is non-negative
                for v in [[1.0, -1.0, 0.5, 2.0], [0.0, 1.0, -1.0, 0.0], [3.0, 0.1, -2.0, -0.7]] {
                    let mut quad = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            quad += v[i] * c.cov[i][j] * v[j];
                        }
                    }
                    prop_assert!(quad >= -1e-9 * m as f64);
                }
                for i in 0..4 {
                    prop_assert!(c.cov[i][i] >= 0.0);
                }
            }
        }
    }
}
