//! CSV rendering and atomic file output.
//!
//! Every file starts with `#` metadata lines, followed by the header row and
//! the data rows. Everything after the metadata is the data section, which
//! depends only on the resolved experiment and integrator settings.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::config::{Config, ExperimentConfig, IntegratorConfig};
use super::run::{Health, ResultTable};
use super::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed-width scientific notation with 16 significant digits.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.15e}")
}

fn push_config_block(out: &mut String, experiment: &ExperimentConfig, integrator: &IntegratorConfig) {
    let single = Config {
        integrator: *integrator,
        experiments: vec![experiment.clone()],
    };
    out.push_str("# config:\n");
    for line in single.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "#   {line}");
        }
    }
}

fn push_health(out: &mut String, table: &ResultTable) {
    match &table.health {
        Health::Open(d) => {
            let _ = writeln!(out, "# diagnostics.max_trace_drift = {:.3e}", d.max_trace_drift);
            let _ = writeln!(out, "# diagnostics.max_hermitian_deviation = {:.3e}", d.max_hermitian_deviation);
            let _ = writeln!(out, "# diagnostics.min_eigenvalue = {:.3e}", d.min_eigenvalue);
            if let Some(inc) = d.max_excitation_increase {
                let _ = writeln!(out, "# diagnostics.max_excitation_increase = {inc:.3e}");
            }
            for (label, pop) in &d.leakage {
                let _ = writeln!(out, "# diagnostics.leakage.{label} = {pop:.3e}");
            }
            let _ = writeln!(
                out,
                "# diagnostics.steps = {} accepted, {} rejected",
                d.steps.accepted, d.steps.rejected
            );
            for w in &d.warnings {
                let _ = writeln!(out, "# warning: {w}");
            }
        }
        Health::Unitary {
            max_norm_drift,
            steps,
            dim,
        } => {
            let _ = writeln!(out, "# diagnostics.fock_dim = {dim}");
            let _ = writeln!(out, "# diagnostics.max_norm_drift = {max_norm_drift:.3e}");
            if let Some(s) = steps {
                let _ = writeln!(out, "# diagnostics.steps = {} accepted, {} rejected", s.accepted, s.rejected);
            }
        }
    }
    if let Some(s) = &table.steady {
        let tol = super::run::steady_tolerances(table.integrator.tolerances(), req_tol(table));
        let _ = writeln!(
            out,
            "# steady.integrator = rel_tol = {:.1e}, abs_tol = {:.1e}",
            tol.rel_tol, tol.abs_tol
        );
        let _ = writeln!(out, "# steady.time = {}", format_value(s.time));
        let _ = writeln!(out, "# steady.residual = {:.3e}", s.residual);
        for (label, v) in &s.values {
            let _ = writeln!(out, "# steady.{label} = {}", format_value(*v));
        }
    }
}

fn req_tol(table: &ResultTable) -> f64 {
    table.experiment.steady_state.map_or(crate::lindblad::DEFAULT_TOL_SS, |r| r.tol)
}

/// Header row plus data rows.
pub fn render_data(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Full CSV text of one experiment.
pub fn render_csv(table: &ResultTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# dwbec {VERSION}");
    let _ = writeln!(out, "# experiment = {}", table.experiment.name);
    let _ = writeln!(
        out,
        "# integrator = Dormand-Prince 5(4), rel_tol = {:e}, abs_tol = {:e}",
        table.integrator.rel_tol, table.integrator.abs_tol
    );
    push_config_block(&mut out, &table.experiment, &table.integrator);
    push_health(&mut out, table);
    out.push_str(&render_data(&table.columns, &table.rows));
    out
}

/// Lines after the `#` metadata block.
pub fn data_section(csv: &str) -> String {
    csv.lines()
        .skip_while(|l| l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// Rerunnable manifest: the resolved config, with outputs listed as comments.
pub fn render_manifest(resolved: &Config, written: &[PathBuf]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# dwbec {VERSION} manifest; rerun with `dwbec run --config <this file>`");
    for p in written {
        let _ = writeln!(out, "# output: {}", p.display());
    }
    out.push('\n');
    out.push_str(&resolved.to_toml());
    out
}
