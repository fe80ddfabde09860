use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twinbeam::states::CustomState;
use twinbeam::{ClickBasisState, StateKind};

use crate::error::{usage, Result};
use crate::params::{Budget, Dark, Params};
use crate::spec::Axis;

/// Differential absorption estimates for coherent, TMSV and twin-Fock probes.
#[derive(Debug, Parser)]
#[command(name = "twinbeam", version)]
pub struct Cli {
    /// Worker threads [default: $TWINBEAM_THREADS, else all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic SNR*, gain, critical loss and N_eff thresholds at one point
    Point(PointArgs),
    /// Grid evaluation over one or two axes, or a named preset
    Sweep(SweepArgs),
    /// Compare analytic, click-model and Monte Carlo SNR* over a fixed grid
    Validate(ValidateArgs),
    /// Monte Carlo estimate at one point
    Mc(McArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Probe state(s), comma separated: coh, tmsv, tf, custom
    #[arg(long = "state", alias = "states", value_delimiter = ',',
          value_parser = ["coh", "tmsv", "tf", "custom"])]
    pub states: Vec<String>,
    /// Absorption of the sample
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Absorption change caused by the defect
    #[arg(long, allow_hyphen_values = true)]
    pub dalpha: Option<f64>,
    /// Loss rate
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Dark counts relative to the probe, N_d / N
    #[arg(long, conflicts_with_all = ["ndark", "ndark_total"], allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Mean dark counts per bin and detector
    #[arg(long, conflicts_with = "ndark_total", allow_hyphen_values = true)]
    pub ndark: Option<f64>,
    /// Mean dark counts per detector over the whole exposure
    #[arg(long, allow_hyphen_values = true)]
    pub ndark_total: Option<f64>,
    /// Effective photon number (delta_alpha^2 * c_bar)
    #[arg(long, conflicts_with = "cbar", allow_hyphen_values = true)]
    pub neff: Option<f64>,
    /// Mean photons per mode over the exposure
    #[arg(long, allow_hyphen_values = true)]
    pub cbar: Option<f64>,
    /// Mean photon number per mode per bin
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<f64>,
    /// Number of time bins
    #[arg(long)]
    pub m: Option<u64>,
    /// Mandel Q of a custom state
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Noise-reduction factor of a custom state
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    /// Click-basis populations p00,p01,p10,p11 of a custom state
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
}

impl ParamArgs {
    pub fn params(&self) -> Params {
        let dark = match (self.eta, self.ndark, self.ndark_total) {
            (Some(e), _, _) => Some(Dark::Eta(e)),
            (_, Some(d), _) => Some(Dark::PerBin(d)),
            (_, _, Some(t)) => Some(Dark::Total(t)),
            _ => None,
        };
        let budget = match (self.neff, self.cbar) {
            (Some(x), _) => Some(Budget::NEff(x)),
            (_, Some(c)) => Some(Budget::CBar(c)),
            _ => None,
        };
        Params {
            alpha: self.alpha,
            delta_alpha: self.dalpha,
            gamma: self.gamma,
            dark,
            budget,
            n_mean: self.n,
            m: self.m,
        }
    }

    pub fn custom(&self) -> Result<Option<CustomState>> {
        match (self.q, self.sigma, &self.p) {
            (None, None, None) => Ok(None),
            (Some(_), Some(_), Some(p)) if p.len() != 4 => {
                Err(usage("--p takes four populations p00,p01,p10,p11"))
            }
            (Some(q), Some(sigma), Some(p)) => {
                let click = ClickBasisState::new(p[0], p[1], p[2], p[3])?;
                Ok(Some(CustomState::new(click, q, sigma)?))
            }
            _ => Err(usage("a custom state needs --q, --sigma and --p")),
        }
    }
}

/// Turn state tags into kinds, attaching the custom state where requested.
pub fn resolve_states(tags: &[String], custom: Option<CustomState>) -> Result<Vec<StateKind>> {
    let tags: Vec<String> = if tags.is_empty() {
        vec!["coh".into(), "tmsv".into(), "tf".into()]
    } else {
        tags.to_vec()
    };
    tags.iter()
        .map(|t| match t.as_str() {
            "custom" => custom
                .map(StateKind::Custom)
                .ok_or_else(|| usage("--state custom needs --q, --sigma and --p")),
            other => other.parse::<StateKind>().map_err(|e| usage(e.to_string())),
        })
        .collect()
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Built-in sweep: fig4, fig5, fig6 or figS7
    #[arg(long, value_parser = ["fig4", "fig5", "fig6", "figS7"])]
    pub preset: Option<String>,
    /// JSON sweep spec, laid over the preset
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Axis as name:min:max:count[:log]; at most two, replacing preset axes
    #[arg(long = "axis")]
    pub axes: Vec<Axis>,
    /// Also evaluate the click-model SNR* where per-bin parameters are known
    #[arg(long)]
    pub click: bool,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Bins per exposure [default: 1e7, or 1e5 with --quick]
    #[arg(long)]
    pub m: Option<u64>,
    /// Mean photon number per bin
    #[arg(long, default_value_t = 1e-3)]
    pub n: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dalpha: f64,
    /// Exposure pairs per point [default: 100, or 30 with --quick]
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Small budget: m = 1e5, 30 runs
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Share random streams between the exposures with and without defect
    #[arg(long)]
    pub paired: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}
