//! Output rows and their byte-stable CSV and JSON encodings.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use twinbeam::analytic::{critical_loss, critical_loss_approx, neff_threshold, snr_star_imperfect};
use twinbeam::clickstats::snr_star_click;
use twinbeam::{CriticalLoss, McEstimate, Regime, StateKind};

use crate::error::Result;
use crate::params::Point;

pub const COLUMNS: [&str; 20] = [
    "state",
    "alpha",
    "delta_alpha",
    "gamma",
    "eta",
    "n_dark",
    "n_eff",
    "c_bar",
    "n_mean",
    "m",
    "snr_star",
    "gain_ratio",
    "feasible",
    "gamma_c",
    "gamma_c_approx",
    "neff_small_alpha",
    "neff_large_alpha",
    "snr_click",
    "mc_snr_star",
    "mc_std_err",
];

/// One grid point evaluated for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub state: StateKind,
    pub point: Point,
    pub snr_star: f64,
    pub gain_ratio: f64,
    pub feasible: bool,
    pub gamma_c: CriticalLoss,
    pub gamma_c_approx: CriticalLoss,
    pub neff_small_alpha: f64,
    pub neff_large_alpha: f64,
    pub snr_click: Option<f64>,
    pub mc: Option<McEstimate>,
}

impl ResultRow {
    /// Analytic columns, plus the click-model SNR* when `click` is set and the
    /// point carries per-bin parameters.
    pub fn evaluate(state: StateKind, point: &Point, click: bool) -> Result<Self> {
        let (q, sigma) = state.q_sigma();
        let (a, g, eta, n_eff) = (point.alpha, point.gamma, point.eta, point.n_eff);
        let snr_star = snr_star_imperfect(a, q, sigma, g, eta, n_eff)?;
        let coherent = snr_star_imperfect(a, 0.0, 1.0, g, eta, n_eff)?;
        let snr_click = match (click, point.per_bin()) {
            (true, Some((n, m, _))) => Some(snr_star_click(state, n, &point.channel()?, m)?.snr_star),
            _ => None,
        };
        Ok(Self {
            state,
            point: *point,
            snr_star,
            gain_ratio: snr_star / coherent,
            feasible: snr_star > 1.0,
            gamma_c: critical_loss(a, q, sigma, eta, n_eff),
            gamma_c_approx: critical_loss_approx(a, q, sigma, eta, n_eff),
            neff_small_alpha: neff_threshold(Regime::SmallAlpha, q, sigma, g, eta)?,
            neff_large_alpha: neff_threshold(Regime::LargeAlpha, q, sigma, g, eta)?,
            snr_click,
            mc: None,
        })
    }

    fn cells(&self) -> Vec<Cell> {
        let p = &self.point;
        vec![
            Cell::Text(self.state.tag().to_string()),
            Cell::Num(p.alpha),
            Cell::Num(p.delta_alpha),
            Cell::Num(p.gamma),
            Cell::Num(p.eta),
            p.n_dark.map_or(Cell::Empty, Cell::Num),
            Cell::Num(p.n_eff),
            Cell::Num(p.c_bar),
            p.n_mean.map_or(Cell::Empty, Cell::Num),
            p.m.map_or(Cell::Empty, Cell::Int),
            Cell::Num(self.snr_star),
            Cell::Num(self.gain_ratio),
            Cell::Bool(self.feasible),
            loss_cell(self.gamma_c),
            loss_cell(self.gamma_c_approx),
            Cell::Num(self.neff_small_alpha),
            Cell::Num(self.neff_large_alpha),
            self.snr_click.map_or(Cell::Empty, Cell::Num),
            self.mc.map_or(Cell::Empty, |e| Cell::Num(e.snr_star)),
            self.mc.map_or(Cell::Empty, |e| Cell::Num(e.se_snr_star)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Cell {
    Text(String),
    Num(f64),
    Int(u64),
    Bool(bool),
    Empty,
}

fn loss_cell(c: CriticalLoss) -> Cell {
    match c {
        CriticalLoss::Bound(g) => Cell::Num(g),
        CriticalLoss::Infeasible { .. } => Cell::Text("infeasible".into()),
    }
}

/// Shortest round-trip representation (exponent form outside
/// `[1e-4, 1e15)`), with `inf`, `-inf` and `nan` spelled out.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => Value::String(format_float(*x)),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// A generic table: header plus rows of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub(crate) rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        Self {
            columns: COLUMNS.to_vec(),
            rows: rows.iter().map(ResultRow::cells).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        obj.insert((*c).to_string(), v.json());
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}
