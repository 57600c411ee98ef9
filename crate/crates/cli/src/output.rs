//! CSV artifacts. Floats are written in Rust's shortest round-trip form, so
//! re-reading a trajectory gives back the exact samples.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cumstl::plant::ControlPolicy;
use cumstl::semantics::Trajectory;

fn writer(dir: &Path, name: &str) -> Result<(csv::Writer<std::fs::File>, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((w, path))
}

/// `k, t, x1..xn`.
pub fn write_trajectory(dir: &Path, name: &str, traj: &Trajectory) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, name)?;
    let mut header = vec!["k".to_string(), "t".to_string()];
    header.extend((1..=traj.state_dim()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (k, row) in traj.values().rows().into_iter().enumerate() {
        let mut rec = vec![k.to_string(), (k as f64 * traj.dt()).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

/// `k, u1..um`.
pub fn write_policy(dir: &Path, name: &str, policy: &ControlPolicy) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, name)?;
    let mut header = vec!["k".to_string()];
    header.extend((1..=policy.control_dim()).map(|i| format!("u{i}")));
    w.write_record(&header)?;
    for (k, row) in policy.values().rows().into_iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes `header` and `rows` (already formatted) to `dir/name`.
pub fn write_table(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, name)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Reads a trace with a header row. Columns named `x1, x2, ...` are the
/// state; a `t` column, when present, sets the sampling period.
pub fn read_trace(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let mut cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(c, name)| name.trim().strip_prefix('x')?.parse::<usize>().ok().map(|i| (i, c)))
        .collect();
    cols.sort();
    if cols.is_empty() || cols.iter().enumerate().any(|(j, &(i, _))| i != j + 1) {
        bail!("{}: header needs state columns x1..xn", path.display());
    }
    let t_col = header.iter().position(|h| h.trim() == "t");
    let mut rows = Vec::new();
    let mut times = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse().with_context(|| format!("{} row {}: bad number `{s}`", path.display(), line + 2))
        };
        rows.push(cols.iter().map(|&(_, c)| field(c)).collect::<Result<Vec<_>>>()?);
        if let Some(c) = t_col {
            times.push(field(c)?);
        }
    }
    let dt = match times.as_slice() {
        [t0, t1, ..] if t1 > t0 => t1 - t0,
        _ => 1.0,
    };
    Ok(Trajectory::from_rows(&rows, dt)?)
}
