//! Three-way comparison of analytic, click-model and simulated SNR*.

use rayon::prelude::*;
use serde::Serialize;
use twinbeam::analytic::snr_star_imperfect;
use twinbeam::clickstats::snr_star_click;
use twinbeam::montecarlo::estimate_snr_star;
use twinbeam::{ChannelParams, McConfig, StateKind};

use crate::error::Result;
use crate::row::format_float;

pub const ALPHAS: [f64; 7] = [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99];
pub const LOSSES: [f64; 4] = [0.0, 0.3, 0.6, 0.9];
pub const DARK_RATIOS: [f64; 3] = [0.01, 0.05, 0.1];

pub const COLUMNS: [&str; 16] = [
    "state",
    "family",
    "alpha",
    "gamma",
    "eta",
    "n_dark",
    "n_mean",
    "m",
    "runs",
    "snr_analytic",
    "snr_click",
    "click_gap",
    "mc_snr_star",
    "mc_std_err",
    "mc_z",
    "pass",
];

#[derive(Debug, Clone, Serialize)]
pub struct ValidateConfig {
    pub m: u64,
    pub n_mean: f64,
    pub delta_alpha: f64,
    pub runs: usize,
    pub seed: u64,
    /// Largest accepted `|click / analytic - 1|`.
    pub click_tolerance: f64,
    /// Largest accepted Monte Carlo deviation in standard errors.
    pub mc_sigmas: f64,
}

impl ValidateConfig {
    pub fn full(seed: u64) -> Self {
        Self {
            m: 10_000_000,
            n_mean: 1e-3,
            delta_alpha: 1e-3,
            runs: 100,
            seed,
            click_tolerance: 0.02,
            mc_sigmas: 5.0,
        }
    }

    pub fn quick(seed: u64) -> Self {
        Self {
            m: 100_000,
            runs: 30,
            ..Self::full(seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationRow {
    pub state: StateKind,
    pub family: &'static str,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub n_dark: f64,
    pub snr_analytic: f64,
    pub snr_click: f64,
    pub click_gap: f64,
    pub mc_snr_star: f64,
    pub mc_std_err: f64,
    pub mc_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub config: ValidateConfig,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn max_click_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.click_gap).fold(0.0, f64::max)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.mc_z.abs()).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&ValidationRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.state.tag().to_string(),
                r.family.to_string(),
                format_float(r.alpha),
                format_float(r.gamma),
                format_float(r.eta),
                format_float(r.n_dark),
                format_float(self.config.n_mean),
                self.config.m.to_string(),
                self.config.runs.to_string(),
                format_float(r.snr_analytic),
                format_float(r.snr_click),
                format_float(r.click_gap),
                format_float(r.mc_snr_star),
                format_float(r.mc_std_err),
                format_float(r.mc_z),
                r.pass.to_string(),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `(state, family, alpha, gamma, eta)` in report order.
pub fn grid() -> Vec<(StateKind, &'static str, f64, f64, f64)> {
    let mut out = Vec::new();
    for kind in StateKind::BUILT_IN {
        for alpha in ALPHAS {
            for gamma in LOSSES {
                out.push((kind, "loss", alpha, gamma, 0.0));
            }
            for eta in DARK_RATIOS {
                out.push((kind, "dark", alpha, 0.0, eta));
            }
        }
    }
    out
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run(cfg: &ValidateConfig) -> Result<ValidationReport> {
    let n_eff = cfg.delta_alpha * cfg.delta_alpha * cfg.m as f64 * cfg.n_mean;
    let rows = grid()
        .into_par_iter()
        .enumerate()
        .map(|(i, (kind, family, alpha, gamma, eta))| {
            let n_dark = eta * cfg.n_mean;
            let (q, sigma) = kind.q_sigma();
            let channel = ChannelParams::new(alpha, cfg.delta_alpha, gamma, n_dark)?;
            let snr_analytic = snr_star_imperfect(alpha, q, sigma, gamma, eta, n_eff)?;
            let snr_click = snr_star_click(kind, cfg.n_mean, &channel, cfg.m)?.snr_star;
            let mc = McConfig::new(cfg.m, cfg.runs, point_seed(cfg.seed, i))?;
            let est = estimate_snr_star(kind, cfg.n_mean, &channel, &mc)?;
            let click_gap = (snr_click / snr_analytic - 1.0).abs();
            let mc_z = if est.se_snr_star > 0.0 {
                (est.snr_star - snr_click) / est.se_snr_star
            } else if est.snr_star == snr_click {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(ValidationRow {
                state: kind,
                family,
                alpha,
                gamma,
                eta,
                n_dark,
                snr_analytic,
                snr_click,
                click_gap,
                mc_snr_star: est.snr_star,
                mc_std_err: est.se_snr_star,
                mc_z,
                pass: click_gap < cfg.click_tolerance && mc_z.abs() <= cfg.mc_sigmas,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport {
        config: cfg.clone(),
        rows,
    })
}
