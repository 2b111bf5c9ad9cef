//! Text tables and plot-data CSVs for comparison runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use monoblade_core::io::{DesignFile, IoError};
use monoblade_core::optimizer::VariantTag;
use monoblade_core::sixdof::Trajectory;

use crate::pipeline::{published_reference, Comparison, ComparisonReport, VariantReport};

const COLUMNS: [&str; 14] = [
    "variant", "source", "length", "area", "C_p", "C_p(own)", "mass", "v_z", "v_x", "v_y", "omega_z", "roll", "pitch",
    "settle",
];

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into())
}

fn measured_row(v: &VariantReport) -> Vec<String> {
    let d = v.design.as_ref();
    let m = v.simulation.as_ref().and_then(|s| s.metrics.as_ref());
    let settle = v.simulation.as_ref().and_then(|s| s.settle_time);
    vec![
        v.tag.to_string(),
        "measured".into(),
        fmt_opt(d.map(|d| d.wing_length), 4),
        fmt_opt(d.map(|d| d.area), 5),
        fmt_opt(d.and_then(|d| d.cp_comparison), 6),
        fmt_opt(d.and_then(|d| d.cp), 6),
        fmt_opt(d.map(|d| d.mass), 4),
        fmt_opt(m.map(|m| m.v_z), 4),
        fmt_opt(m.map(|m| m.v_x), 4),
        fmt_opt(m.map(|m| m.v_y), 4),
        fmt_opt(m.map(|m| m.omega_z), 4),
        fmt_opt(m.map(|m| m.roll), 4),
        fmt_opt(m.map(|m| m.pitch), 4),
        fmt_opt(settle, 3),
    ]
}

fn published_row(tag: VariantTag) -> Vec<String> {
    let r = published_reference(tag);
    let f = |x: f64| format!("{x:.4}");
    vec![
        tag.to_string(),
        "published".into(),
        f(r.wing_length),
        f(r.area),
        f(r.cp),
        "-".into(),
        f(r.mass),
        f(r.v_z),
        f(r.v_x),
        f(r.v_y),
        f(r.omega_z),
        f(r.roll),
        f(r.pitch),
        "-".into(),
    ]
}

/// Aligned measured-versus-published table followed by the ordering checks.
/// `C_p` is evaluated with tip loss on for every variant; `C_p(own)` uses the
/// variant's own objective setting.
pub fn render_table(report: &ComparisonReport) -> String {
    let mut rows = vec![COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for v in &report.variants {
        rows.push(measured_row(v));
        rows.push(published_row(v.tag));
    }
    let widths: Vec<usize> = (0..COLUMNS.len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();

    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, &w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
        if i == 0 {
            writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))).unwrap();
        }
    }
    writeln!(out).unwrap();
    for c in &report.checks {
        let verdict = match c.holds {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "n/a ",
        };
        let values: Vec<String> = c.measured.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
        writeln!(out, "{verdict}  {:<22} {}  [{}]", c.name, c.expected, values.join(", ")).unwrap();
    }
    for v in &report.variants {
        if let Some(e) = &v.error {
            writeln!(out, "{}: {e}", v.tag).unwrap();
        }
    }
    out
}

/// Chord against radius for each design, `n` samples from root to tip.
pub fn planform_csv(designs: &[&DesignFile], n: usize) -> String {
    let mut out = String::from("r");
    for d in designs {
        write!(out, ",{}", d.variant).unwrap();
    }
    out.push('\n');
    let length = designs.iter().map(|d| d.wing_length).fold(0.0, f64::max);
    for i in 0..n {
        let r = length * i as f64 / (n - 1).max(1) as f64;
        write!(out, "{r:.8e}").unwrap();
        for d in designs {
            write!(out, ",{:.8e}", d.coefficients.chord_at(r)).unwrap();
        }
        out.push('\n');
    }
    out
}

type Columns = (&'static str, fn(&monoblade_core::sixdof::RigidBodyState<f64>) -> Vec<f64>);

const FIGURES: [(&str, Columns); 4] = [
    ("fig_descent_speed.csv", ("vz", |s| vec![s.v[2]])),
    ("fig_spin_rate.csv", ("wz", |s| vec![s.w[2]])),
    ("fig_attitude.csv", ("roll,pitch", |s| vec![s.euler[0], s.euler[1]])),
    ("fig_ground_track.csv", ("x,y", |s| vec![s.p[0], s.p[1]])),
];

/// Long-format time series (`variant,t,...`), keeping every `stride`-th sample
/// plus the last.
pub fn series_csv(trajectories: &[(VariantTag, Trajectory<f64>)], columns: &Columns, stride: usize) -> String {
    let mut out = format!("variant,t,{}\n", columns.0);
    let stride = stride.max(1);
    for (tag, traj) in trajectories {
        let n = traj.len();
        for i in (0..n).filter(|&i| i % stride == 0 || i + 1 == n) {
            write!(out, "{tag},{:.8e}", traj.times[i]).unwrap();
            for v in (columns.1)(&traj.states[i]) {
                write!(out, ",{v:.8e}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Writes the planform and time-series CSVs into `dir`, sampled every 10 ms.
pub fn write_figures(dir: &Path, cmp: &Comparison) -> Result<Vec<PathBuf>, IoError> {
    let mut written = Vec::new();
    let designs: Vec<&DesignFile> = cmp.report.variants.iter().filter_map(|v| v.design.as_ref()).collect();
    if !designs.is_empty() {
        let path = dir.join("fig_planform.csv");
        write_text(&path, &planform_csv(&designs, 101))?;
        written.push(path);
    }
    let stride = cmp
        .trajectories
        .first()
        .map(|(_, t)| (0.01 / t.meta.config.dt).round().max(1.0) as usize)
        .unwrap_or(1);
    for (name, cols) in &FIGURES {
        let path = dir.join(name);
        write_text(&path, &series_csv(&cmp.trajectories, cols, stride))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use monoblade_core::sixdof::{RigidBodyState, SimConfig, TrajectoryMeta};

    #[test]
    fn series_keeps_stride_and_last_sample() {
        let traj = Trajectory {
            times: (0..25).map(|i| i as f64 * 1e-3).collect(),
            states: vec![RigidBodyState::default(); 25],
            meta: TrajectoryMeta { config: SimConfig::default(), design: "W1".into() },
        };
        let csv = series_csv(&[(VariantTag::W1, traj)], &FIGURES[2].1, 10);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "variant,t,roll,pitch");
        // samples 0, 10, 20 and the final 24
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("W1,2.40000000e-2,"));
    }

    #[test]
    fn table_columns_align() {
        let report = ComparisonReport {
            toolkit_version: "0".into(),
            config_hash: String::new(),
            rng_seed: 0,
            variants: vec![VariantReport { tag: VariantTag::W2, design: None, simulation: None, error: Some("boom".into()) }],
            reference: vec![],
            checks: vec![],
        };
        let text = render_table(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("variant"));
        assert!(lines[2].starts_with("W2       measured"));
        assert!(lines[3].contains("26.0586"));
        assert!(text.contains("W2: boom"));
    }
}
