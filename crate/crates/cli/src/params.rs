//! Flat parameter sets and their resolution into a fully specified point.
//!
//! The photon budget can be given as `n_eff`, as `c_bar` (mean photons per
//! mode over the exposure) or implicitly through `m` bins of `n_mean` photons;
//! `n_eff = delta_alpha^2 * c_bar` and `c_bar = m * n_mean`. Dark counts can be
//! given as the ratio `eta`, as a per-bin mean `n_dark`, or as a total over
//! the exposure, in which case `eta = total / c_bar`.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

pub const DEFAULT_DELTA_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dark {
    Eta(f64),
    PerBin(f64),
    Total(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    NEff(f64),
    CBar(f64),
}

/// Parameters as supplied, any of which may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub alpha: Option<f64>,
    pub delta_alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub dark: Option<Dark>,
    pub budget: Option<Budget>,
    pub n_mean: Option<f64>,
    pub m: Option<u64>,
}

impl Params {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: &Params) -> Params {
        Params {
            alpha: other.alpha.or(self.alpha),
            delta_alpha: other.delta_alpha.or(self.delta_alpha),
            gamma: other.gamma.or(self.gamma),
            dark: other.dark.or(self.dark),
            budget: other.budget.or(self.budget),
            n_mean: other.n_mean.or(self.n_mean),
            m: other.m.or(self.m),
        }
    }

    pub fn resolve(&self) -> Result<Point> {
        let alpha = self.alpha.ok_or_else(|| usage("alpha is required"))?;
        let delta_alpha = self.delta_alpha.unwrap_or(DEFAULT_DELTA_ALPHA);
        let gamma = self.gamma.unwrap_or(0.0);
        if !(delta_alpha > 0.0) {
            return Err(twinbeam::Error::OutOfRange {
                name: "delta_alpha",
                value: delta_alpha,
                expected: "> 0",
            }
            .into());
        }
        let da2 = delta_alpha * delta_alpha;
        let implied = match (self.m, self.n_mean) {
            (Some(m), Some(n)) => Some(m as f64 * n),
            _ => None,
        };
        let c_bar = match self.budget {
            Some(Budget::NEff(x)) => x / da2,
            Some(Budget::CBar(x)) => x,
            None => implied.unwrap_or(1.0 / da2),
        };
        if let (Some(_), Some(mn)) = (self.budget, implied) {
            if (mn - c_bar).abs() > 1e-9 * c_bar.abs() {
                return Err(usage(format!(
                    "photon budget over-determined: m * n = {mn} but the budget implies {c_bar}"
                )));
            }
        }
        let (m, n_mean) = match (self.m, self.n_mean) {
            (Some(m), Some(n)) => (Some(m), Some(n)),
            (None, Some(n)) => (Some(((c_bar / n).round() as u64).max(1)), Some(n)),
            (Some(m), None) => (Some(m), Some(c_bar / m as f64)),
            (None, None) => (None, None),
        };
        let (eta, n_dark) = match self.dark {
            None => (0.0, Some(0.0)),
            Some(Dark::Eta(0.0)) => (0.0, Some(0.0)),
            Some(Dark::Eta(eta)) => (eta, n_mean.map(|n| eta * n)),
            Some(Dark::PerBin(nd)) => {
                let n = n_mean.ok_or_else(|| usage("a per-bin dark count needs the mean photon number n"))?;
                (twinbeam::channels::effective_eta(nd, n)?, Some(nd))
            }
            Some(Dark::Total(total)) => (total / c_bar, m.map(|m| total / m as f64)),
        };
        Ok(Point {
            alpha,
            delta_alpha,
            gamma,
            eta,
            n_dark,
            n_eff: da2 * c_bar,
            c_bar,
            n_mean,
            m,
        })
    }
}

/// A fully resolved parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub alpha: f64,
    pub delta_alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub n_dark: Option<f64>,
    pub n_eff: f64,
    pub c_bar: f64,
    pub n_mean: Option<f64>,
    pub m: Option<u64>,
}

impl Point {
    pub fn channel(&self) -> Result<twinbeam::ChannelParams> {
        let nd = self.n_dark.unwrap_or(0.0);
        Ok(twinbeam::ChannelParams::new(self.alpha, self.delta_alpha, self.gamma, nd)?)
    }

    /// Per-bin parameters required by the click model and the simulator.
    pub fn per_bin(&self) -> Option<(f64, u64, f64)> {
        Some((self.n_mean?, self.m?, self.n_dark?))
    }
}
