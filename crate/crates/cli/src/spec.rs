//! Sweep specifications, the built-in presets and grid expansion.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, Result};
use crate::params::{Budget, Dark, Params};

/// Recorded in the `fig6` metadata: its dark count is a total over the
/// exposure, not a per-bin mean.
pub const FIG6_ASSUMPTION: &str = "figure6-darkcount-total";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Alpha,
    Gamma,
    Eta,
    NEff,
    NMean,
    NDark,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Alpha => "alpha",
            AxisName::Gamma => "gamma",
            AxisName::Eta => "eta",
            AxisName::NEff => "n_eff",
            AxisName::NMean => "n_mean",
            AxisName::NDark => "n_dark",
        }
    }

    fn apply(self, p: &mut Params, v: f64) {
        match self {
            AxisName::Alpha => p.alpha = Some(v),
            AxisName::Gamma => p.gamma = Some(v),
            AxisName::Eta => p.dark = Some(Dark::Eta(v)),
            AxisName::NEff => p.budget = Some(Budget::NEff(v)),
            AxisName::NMean => p.n_mean = Some(v),
            AxisName::NDark => p.dark = Some(Dark::PerBin(v)),
        }
    }

    // Axes that set the same underlying quantity.
    fn slot(self) -> u8 {
        match self {
            AxisName::Eta | AxisName::NDark => 2,
            AxisName::Alpha => 0,
            AxisName::Gamma => 1,
            AxisName::NEff => 3,
            AxisName::NMean => 4,
        }
    }
}

impl FromStr for AxisName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "alpha" => AxisName::Alpha,
            "gamma" => AxisName::Gamma,
            "eta" => AxisName::Eta,
            "n_eff" | "neff" => AxisName::NEff,
            "n_mean" | "n" => AxisName::NMean,
            "n_dark" | "ndark" => AxisName::NDark,
            _ => return Err(format!("unknown axis '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Self { name, min, max, count, spacing: Spacing::Linear }
    }

    pub fn log(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Self { name, min, max, count, spacing: Spacing::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(usage(format!("axis {} has no points", self.name.as_str())));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(usage(format!("axis {} bounds must be finite", self.name.as_str())));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(usage(format!(
                "log axis {} needs positive bounds",
                self.name.as_str()
            )));
        }
        Ok(())
    }

    /// Grid values, endpoints exact. A one-point axis yields `min`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        if n == 1 {
            return vec![self.min];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == n - 1 {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

/// `name:min:max:count[:log|:lin]`
impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(format!("axis '{s}' must look like name:min:max:count[:log]"));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("axis '{s}': {e}"));
        let spacing = match parts.get(4) {
            None | Some(&"lin") | Some(&"linear") => Spacing::Linear,
            Some(&"log") => Spacing::Log,
            Some(other) => return Err(format!("axis '{s}': unknown spacing '{other}'")),
        };
        Ok(Axis {
            name: parts[0].parse()?,
            min: num(parts[1])?,
            max: num(parts[2])?,
            count: parts[3].parse().map_err(|e| format!("axis '{s}': {e}"))?,
            spacing,
        })
    }
}

/// A list of fixed values of one parameter, each producing a separate block
/// of the sweep (for example small and large absorption).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub label: Option<String>,
    pub assumption: Option<String>,
    pub axes: Vec<Axis>,
    pub panel: Option<Panel>,
    pub fixed: Params,
    pub states: Vec<String>,
    /// Also evaluate the click-model SNR*.
    pub click: bool,
}

/// A partial spec read from a file and laid over a preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub label: Option<String>,
    pub assumption: Option<String>,
    pub axes: Option<Vec<Axis>>,
    pub panel: Option<Panel>,
    pub fixed: Option<Params>,
    pub states: Option<Vec<String>>,
    pub click: Option<bool>,
}

impl SweepFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec {
            path: path.into(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Spec {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

fn three_states() -> Vec<String> {
    ["coh", "tmsv", "tf"].iter().map(|s| s.to_string()).collect()
}

fn neff_one() -> Params {
    Params {
        delta_alpha: Some(1e-3),
        gamma: Some(0.0),
        dark: Some(Dark::Eta(0.0)),
        budget: Some(Budget::CBar(1e6)),
        ..Default::default()
    }
}

impl SweepSpec {
    pub fn empty() -> Self {
        Self {
            label: None,
            assumption: None,
            axes: Vec::new(),
            panel: None,
            fixed: Params::default(),
            states: three_states(),
            click: false,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let panels = Some(Panel {
            name: AxisName::Alpha,
            values: vec![0.01, 0.99],
        });
        Ok(match name {
            "fig4" => Self {
                label: Some("fig4".into()),
                axes: vec![Axis::log(AxisName::Alpha, 1e-3, 1.0, 301)],
                fixed: neff_one(),
                ..Self::empty()
            },
            "fig5" => Self {
                label: Some("fig5".into()),
                axes: vec![
                    Axis::linear(AxisName::Gamma, 0.0, 0.95, 96),
                    Axis::log(AxisName::Eta, 1e-6, 0.1, 51),
                ],
                panel: panels,
                fixed: neff_one(),
                ..Self::empty()
            },
            "fig6" => Self {
                label: Some("fig6".into()),
                assumption: Some(FIG6_ASSUMPTION.into()),
                axes: vec![
                    Axis::linear(AxisName::Gamma, 0.0, 0.95, 96),
                    Axis::log(AxisName::NEff, 0.1, 1000.0, 81),
                ],
                panel: panels,
                fixed: Params {
                    delta_alpha: Some(1e-3),
                    dark: Some(Dark::Total(1e3)),
                    ..Default::default()
                },
                ..Self::empty()
            },
            "figS7" => Self {
                label: Some("figS7".into()),
                axes: vec![
                    Axis::linear(AxisName::Alpha, 0.01, 0.99, 99),
                    Axis::linear(AxisName::Gamma, 0.0, 0.9, 10),
                ],
                fixed: Params {
                    delta_alpha: Some(1e-3),
                    dark: Some(Dark::Eta(0.0)),
                    n_mean: Some(1e-3),
                    m: Some(10_000_000),
                    ..Default::default()
                },
                click: true,
                ..Self::empty()
            },
            other => {
                return Err(usage(format!(
                    "unknown preset '{other}', expected fig4, fig5, fig6 or figS7"
                )))
            }
        })
    }

    pub fn overlay_file(mut self, f: SweepFile) -> Self {
        if f.label.is_some() {
            self.label = f.label;
        }
        if f.assumption.is_some() {
            self.assumption = f.assumption;
        }
        if let Some(axes) = f.axes {
            self.axes = axes;
        }
        if f.panel.is_some() {
            self.panel = f.panel;
        }
        if let Some(fixed) = f.fixed {
            self.fixed = self.fixed.overlay(&fixed);
        }
        if let Some(states) = f.states {
            self.states = states;
        }
        if let Some(click) = f.click {
            self.click = click;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.axes.len()) {
            return Err(usage("a sweep needs one or two axes"));
        }
        for a in &self.axes {
            a.validate()?;
        }
        let mut slots: Vec<u8> = self.axes.iter().map(|a| a.name.slot()).collect();
        if let Some(p) = &self.panel {
            if p.values.is_empty() {
                return Err(usage("panel has no values"));
            }
            slots.push(p.name.slot());
        }
        let n = slots.len();
        slots.sort_unstable();
        slots.dedup();
        if slots.len() != n {
            return Err(usage("axes and panel must vary different parameters"));
        }
        if self.states.is_empty() {
            return Err(usage("no states selected"));
        }
        Ok(())
    }

    /// Parameter sets in output order: panel, first axis, second axis.
    pub fn grid(&self) -> Vec<Params> {
        let panel: Vec<Option<(AxisName, f64)>> = match &self.panel {
            Some(p) => p.values.iter().map(|&v| Some((p.name, v))).collect(),
            None => vec![None],
        };
        let first = self.axes[0].values();
        let second: Vec<Option<f64>> = match self.axes.get(1) {
            Some(a) => a.values().into_iter().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::with_capacity(panel.len() * first.len() * second.len());
        for pv in &panel {
            for &x in &first {
                for y in &second {
                    let mut p = self.fixed;
                    if let Some((name, v)) = pv {
                        name.apply(&mut p, *v);
                    }
                    self.axes[0].name.apply(&mut p, x);
                    if let (Some(a), Some(y)) = (self.axes.get(1), y) {
                        a.name.apply(&mut p, *y);
                    }
                    out.push(p);
                }
            }
        }
        out
    }
}
