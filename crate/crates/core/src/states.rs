//! Probe states.
//!
//! Two views of the same light are used. The analytic layer only needs the
//! coarse statistics of a twin-mode state: the mean photon number per mode
//! `N`, the Mandel Q-parameter of each mode and the noise-reduction factor
//! `sigma` of the photon-number difference. The click layer instead needs the
//! populations of the four photon-presence configurations of one time bin,
//! obtained by truncating the state at one photon per mode (valid for
//! `N << 1`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, positive, Error, Result};
use crate::NORMALIZATION_TOL;

/// Above this mean photon number the one-photon truncation is flagged.
pub const TRUNCATION_LIMIT: f64 = 0.1;

/// Probabilities of the four photon-presence configurations `(signal, reference)`
/// of one time bin: `00`, `01`, `10`, `11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickBasisState {
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

pub(crate) fn check_four(p: [f64; 4]) -> Result<()> {
    for (name, v) in ["p00", "p01", "p10", "p11"].into_iter().zip(p) {
        check_range(
            name,
            v,
            (-NORMALIZATION_TOL..=1.0 + NORMALIZATION_TOL).contains(&v),
            "[0, 1]",
        )?;
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

impl ClickBasisState {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        check_four([p00, p01, p10, p11])?;
        Ok(Self { p00, p01, p10, p11 })
    }

    /// Both modes empty.
    pub const VACUUM: Self = Self {
        p00: 1.0,
        p01: 0.0,
        p10: 0.0,
        p11: 0.0,
    };

    /// One photon in each mode.
    pub const PAIR: Self = Self {
        p00: 0.0,
        p01: 0.0,
        p10: 0.0,
        p11: 1.0,
    };

    // Internal constructor for values produced by normalization-preserving maps.
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
}

/// A user-supplied state. Both pipelines need their own description of it,
/// so the click-basis populations and the `(Q, sigma)` pair are carried
/// side by side and are not cross-checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomState {
    pub click: ClickBasisState,
    pub q: f64,
    pub sigma: f64,
}

impl CustomState {
    pub fn new(click: ClickBasisState, q: f64, sigma: f64) -> Result<Self> {
        check_range("q", q, q >= -1.0, ">= -1")?;
        check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
        Ok(Self { click, q, sigma })
    }

    /// Single-mode TMSV, whose individual modes are thermal: `Q = N`, `sigma = 0`.
    pub fn single_mode_tmsv(n_mean: f64) -> Result<Self> {
        let click = click_probs(StateKind::Tmsv, n_mean)?;
        Self::new(click, n_mean, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateKind {
    Coherent,
    Tmsv,
    TwinFock,
    Custom(CustomState),
}

impl StateKind {
    /// The three named probes, in the order used for tables.
    pub const BUILT_IN: [StateKind; 3] = [StateKind::Coherent, StateKind::Tmsv, StateKind::TwinFock];

    /// Short command-line tag.
    pub fn tag(&self) -> &'static str {
        match self {
            StateKind::Coherent => "coh",
            StateKind::Tmsv => "tmsv",
            StateKind::TwinFock => "tf",
            StateKind::Custom(_) => "custom",
        }
    }

    /// `(Q, sigma)` of the state.
    pub fn q_sigma(&self) -> (f64, f64) {
        match self {
            StateKind::Coherent => (0.0, 1.0),
            // Multi-spectral-mode averaging washes out the thermal excess of
            // each mode while the pair correlation survives.
            StateKind::Tmsv => (0.0, 0.0),
            StateKind::TwinFock => (-1.0, 0.0),
            StateKind::Custom(c) => (c.q, c.sigma),
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for StateKind {
    type Err = Error;

    /// Parses the built-in tags. `custom` needs explicit parameters and is
    /// rejected here.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coh" | "coherent" => Ok(StateKind::Coherent),
            "tmsv" => Ok(StateKind::Tmsv),
            "tf" | "twinfock" | "twin-fock" => Ok(StateKind::TwinFock),
            other => Err(Error::Invalid(format!(
                "unknown state '{other}' (expected coh, tmsv or tf)"
            ))),
        }
    }
}

/// Mean photon number per mode with the Mandel Q-parameter and the
/// noise-reduction factor of the photon-number difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinModeDescriptor {
    n_mean: f64,
    q: f64,
    sigma: f64,
}

impl TwinModeDescriptor {
    pub fn new(n_mean: f64, q: f64, sigma: f64) -> Result<Self> {
        positive("n_mean", n_mean)?;
        check_range("q", q, q >= -1.0, ">= -1")?;
        check_range("sigma", sigma, sigma >= 0.0, ">= 0")?;
        Ok(Self { n_mean, q, sigma })
    }

    pub fn n_mean(&self) -> f64 {
        self.n_mean
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Single-mode photon-number variance `(Q + 1) N`.
    pub fn variance(&self) -> f64 {
        (self.q + 1.0) * self.n_mean
    }

    /// Inter-mode covariance `N (Q + 1 - sigma)`, fixed by
    /// `Var(n1 - n2) = 2 sigma N` with equal single-mode variances.
    pub fn covariance(&self) -> f64 {
        self.n_mean * (self.q + 1.0 - self.sigma)
    }
}

pub fn descriptor_for(kind: StateKind, n_mean: f64) -> Result<TwinModeDescriptor> {
    let (q, sigma) = kind.q_sigma();
    TwinModeDescriptor::new(n_mean, q, sigma)
}

/// Mean photon number per mode of a two-mode squeezed vacuum with squeezing `r`.
pub fn tmsv_n_from_r(r: f64) -> Result<f64> {
    check_range("r", r, r >= 0.0, ">= 0")?;
    Ok(r.sinh().powi(2))
}

/// Raised when the one-photon truncation is used beyond [`TRUNCATION_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    pub n_mean: f64,
}

impl fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mean photon number {} exceeds {}; one-photon truncation is inaccurate",
            self.n_mean, TRUNCATION_LIMIT
        )
    }
}

pub fn truncation_warning(n_mean: f64) -> Option<TruncationWarning> {
    (n_mean > TRUNCATION_LIMIT).then_some(TruncationWarning { n_mean })
}

/// Per-bin photon-presence populations of a probe with `n_mean` photons per
/// mode and bin.
///
/// Twin-Fock light is always a photon pair here; how often a bin is occupied
/// is handled by the mixed model in [`crate::clickstats`].
pub fn click_probs(kind: StateKind, n_mean: f64) -> Result<ClickBasisState> {
    positive("n_mean", n_mean)?;
    if let Some(w) = truncation_warning(n_mean) {
        log::warn!("{w}");
    }
    let empty = (-n_mean).exp();
    let full = -(-n_mean).exp_m1();
    Ok(match kind {
        StateKind::Coherent => {
            ClickBasisState::from_raw([empty * empty, empty * full, empty * full, full * full])
        }
        StateKind::Tmsv => ClickBasisState::from_raw([empty, 0.0, 0.0, full]),
        StateKind::TwinFock => ClickBasisState::PAIR,
        StateKind::Custom(c) => c.click,
    })
}
