//! Command-line driver for the `twinbeam` library: single points, sweeps and
//! presets, Monte Carlo estimates and the validation report.
//!
//! Exit codes: 0 success, 1 usage, 2 domain or I/O error, 3 validation
//! tolerance exceeded.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};
use twinbeam::montecarlo::estimate_snr_star;
use twinbeam::{McConfig, StateKind};

pub mod args;
pub mod error;
pub mod params;
pub mod row;
pub mod spec;
pub mod validate;

use args::{resolve_states, Cli, Command, Format, McArgs, OutputArgs, PointArgs, SweepArgs, ValidateArgs};
pub use error::{CliError, Result};
use params::Point;
use row::{ResultRow, Table};
use spec::{SweepFile, SweepSpec};

pub const THREADS_ENV: &str = "TWINBEAM_THREADS";

/// Parse `args` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a thread count, got '{v}'"))),
        _ => Ok(0),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cli.threads)?)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Point(a) => cmd_point(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Mc(a) => cmd_mc(&a),
    })
}

fn cmd_point(a: &PointArgs) -> Result<()> {
    let states = resolve_states(&a.params.states, a.params.custom()?)?;
    let point = a.params.params().resolve()?;
    let rows = point_rows(&states, &point)?;
    let meta = json!({ "command": "point", "point": point });
    emit(&Table::from_rows(&rows), meta, &a.output)
}

/// Analytic (and, where per-bin parameters are known, click-model) rows for
/// one point.
pub fn point_rows(states: &[StateKind], point: &Point) -> Result<Vec<ResultRow>> {
    states
        .iter()
        .map(|&s| ResultRow::evaluate(s, point, true))
        .collect()
}

/// Spec from preset, then file, then command-line flags.
pub fn build_spec(a: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match &a.preset {
        Some(name) => SweepSpec::preset(name)?,
        None => SweepSpec::empty(),
    };
    if let Some(path) = &a.spec {
        spec = spec.overlay_file(SweepFile::read(path)?);
    }
    spec.fixed = spec.fixed.overlay(&a.params.params());
    if !a.axes.is_empty() {
        spec.axes = a.axes.clone();
    }
    if !a.params.states.is_empty() {
        spec.states = a.params.states.clone();
    }
    spec.click |= a.click;
    spec.validate()?;
    Ok(spec)
}

/// One row per grid point and state, in grid order.
pub fn sweep_rows(spec: &SweepSpec, custom: Option<twinbeam::states::CustomState>) -> Result<Vec<ResultRow>> {
    let states = resolve_states(&spec.states, custom)?;
    let blocks = spec
        .grid()
        .into_par_iter()
        .map(|p| {
            let point = p.resolve()?;
            states
                .iter()
                .map(|&s| ResultRow::evaluate(s, &point, spec.click))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let spec = build_spec(a)?;
    let rows = sweep_rows(&spec, a.params.custom()?)?;
    let meta = json!({ "command": "sweep", "spec": spec });
    emit(&Table::from_rows(&rows), meta, &a.output)
}

fn cmd_mc(a: &McArgs) -> Result<()> {
    let states = resolve_states(&a.params.states, a.params.custom()?)?;
    let point = a.params.params().resolve()?;
    let (n, m, _) = point
        .per_bin()
        .ok_or_else(|| CliError::Usage("mc needs the per-bin photon number --n or the bin count --m".into()))?;
    let mc = McConfig::new(m, a.runs, a.seed)?.paired(a.paired);
    let channel = point.channel()?;
    let rows = states
        .iter()
        .map(|&s| {
            let mut row = ResultRow::evaluate(s, &point, true)?;
            row.mc = Some(estimate_snr_star(s, n, &channel, &mc)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = json!({ "command": "mc", "point": point, "mc": mc });
    emit(&Table::from_rows(&rows), meta, &a.output)
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let mut cfg = if a.quick {
        validate::ValidateConfig::quick(a.seed)
    } else {
        validate::ValidateConfig::full(a.seed)
    };
    cfg.n_mean = a.n;
    cfg.delta_alpha = a.dalpha;
    if let Some(m) = a.m {
        cfg.m = m;
    }
    if let Some(runs) = a.runs {
        cfg.runs = runs;
    }
    let report = validate::run(&cfg)?;
    let summary = json!({
        "max_click_gap": report.max_click_gap(),
        "max_abs_z": report.max_abs_z(),
        "failures": report.failures().len(),
    });
    let meta = json!({ "command": "validate", "config": cfg, "summary": summary });
    let body = match a.output.format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let rows = serde_json::to_value(&report.rows).expect("rows serialize");
            json_document(meta.clone(), rows)
        }
    };
    write_body(&body, meta, &a.output)?;
    eprintln!(
        "max |click/analytic - 1| = {}, max |MC z| = {}, {} of {} points outside tolerance",
        row::format_float(report.max_click_gap()),
        row::format_float(report.max_abs_z()),
        report.failures().len(),
        report.rows.len()
    );
    let failures = report.failures();
    if failures.is_empty() {
        return Ok(());
    }
    for r in &failures {
        eprintln!(
            "  {} {} alpha={} gamma={} eta={}: click gap {} (limit {}), MC z {} (limit {})",
            r.state.tag(),
            r.family,
            r.alpha,
            r.gamma,
            r.eta,
            row::format_float(r.click_gap),
            cfg.click_tolerance,
            row::format_float(r.mc_z),
            cfg.mc_sigmas
        );
    }
    Err(CliError::Tolerance(format!(
        "{} validation points outside tolerance",
        failures.len()
    )))
}

fn json_document(meta: Value, rows: Value) -> String {
    let doc = json!({ "meta": with_version(meta), "rows": rows });
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    s
}

fn with_version(mut meta: Value) -> Value {
    if let Value::Object(m) = &mut meta {
        m.insert("tool".into(), json!("twinbeam"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    }
    meta
}

fn emit(table: &Table, meta: Value, out: &OutputArgs) -> Result<()> {
    let body = match out.format {
        Format::Csv => table.to_csv(),
        Format::Json => json_document(meta.clone(), table.to_json_rows()),
    };
    write_body(&body, meta, out)
}

/// Path of the metadata file written next to CSV output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn write_body(body: &str, meta: Value, out: &OutputArgs) -> Result<()> {
    match &out.out {
        Some(path) => {
            write_file(path, body)?;
            if out.format == Format::Csv {
                let mut m = serde_json::to_string_pretty(&with_version(meta)).expect("json");
                m.push('\n');
                write_file(&sidecar_path(path), &m)?;
            }
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
