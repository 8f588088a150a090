//! File formats: field snapshots (CSV and binary), result tables and JSON reports.
//!
//! Every float is written with `{:.16e}`, i.e. 17 significant digits, which is
//! enough to read back the exact same `f64`. Columns holding wall-clock
//! measurements are prefixed `wall_` so that reproducibility checks can skip them.

use crate::error::{Error, Result};
use crate::experiments::convergence::ConvergenceTable;
use crate::experiments::efficiency::RatioRow;
use crate::experiments::hysteresis::{Branch, HysteresisLoop};
use crate::experiments::stability::StabilityCell;
use crate::mesh::{AngleMap, Mesh, VectorField};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the output directory from the config.
pub const OUT_DIR_ENV: &str = "GSPM_OUT_DIR";

pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output directory: explicit flag, else the environment override, else the
/// config value, else `out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn mesh_comment(mesh: &Mesh) -> String {
    let [nx, ny, nz] = mesh.dims();
    let [dx, dy, dz] = mesh.spacing();
    let [ox, oy, oz] = mesh.origin;
    format!(
        "# nx={nx} ny={ny} nz={nz} dx={} dy={} dz={} ox={} oy={} oz={} order=x-fastest\n",
        f17(dx),
        f17(dy),
        f17(dz),
        f17(ox),
        f17(oy),
        f17(oz)
    )
}

/// Snapshot as CSV: one comment line with the mesh, the header
/// `x,y,z,m1,m2,m3`, then one row per cell in x-fastest order.
pub fn snapshot_csv(f: &VectorField) -> String {
    let mut out = mesh_comment(&f.mesh);
    out.push_str("x,y,z,m1,m2,m3\n");
    for (idx, v) in f.data.iter().enumerate() {
        let c = f.mesh.center_of(idx);
        let _ = writeln!(out, "{},{},{},{},{},{}", f17(c[0]), f17(c[1]), f17(c[2]), f17(v[0]), f17(v[1]), f17(v[2]));
    }
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse { line, message: format!("not a number: `{s}`") })
}

pub fn parse_snapshot_csv(text: &str) -> Result<VectorField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, comment) = lines.next().ok_or_else(|| Error::Parse { line: 1, message: "empty snapshot".into() })?;
    let body = comment
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse { line: 1, message: "expected `# nx=...` mesh line".into() })?;
    let get = |key: &str| -> Result<f64> {
        body.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Parse { line: 1, message: format!("mesh line lacks `{key}`") })
            .and_then(|v| parse_f64(v, 1))
    };
    let dims = [get("nx")? as usize, get("ny")? as usize, get("nz")? as usize];
    let spacing = [get("dx")?, get("dy")?, get("dz")?];
    let origin = [get("ox").unwrap_or(0.0), get("oy").unwrap_or(0.0), get("oz").unwrap_or(0.0)];
    let mesh = Mesh::with_origin(dims, spacing, origin)?;
    match lines.next() {
        Some((_, "x,y,z,m1,m2,m3")) => {}
        Some((line, other)) => return Err(Error::Parse { line, message: format!("unexpected header `{other}`") }),
        None => return Err(Error::Parse { line: 2, message: "missing header".into() }),
    }
    let mut data = Vec::with_capacity(mesh.n_cells());
    for (line, row) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Parse { line, message: format!("expected 6 columns, got {}", cols.len()) });
        }
        data.push([parse_f64(cols[3], line)?, parse_f64(cols[4], line)?, parse_f64(cols[5], line)?]);
    }
    VectorField::from_data(mesh, data)
}

/// Binary snapshot: `nx, ny, nz` as `u64`, `dx, dy, dz` as `f64`, then the
/// cell triples as `f64`, all little-endian. The origin is not stored.
pub fn snapshot_binary(f: &VectorField) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + 24 * f.len());
    for n in f.mesh.dims() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for d in f.mesh.spacing() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in &f.data {
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn parse_snapshot_binary(bytes: &[u8]) -> Result<VectorField> {
    if bytes.len() < 48 || (bytes.len() - 48) % 24 != 0 {
        return Err(Error::Format(format!("binary snapshot has {} bytes, expected 48 + 24 n", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8-byte slice") };
    let dims = [0, 1, 2].map(|i| u64::from_le_bytes(word(i)) as usize);
    let spacing = [3, 4, 5].map(|i| f64::from_le_bytes(word(i)));
    let mesh = Mesh::new(dims, spacing)?;
    let values: Vec<f64> = (6..bytes.len() / 8).map(|i| f64::from_le_bytes(word(i))).collect();
    let data = values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    VectorField::from_data(mesh, data)
}

/// Reads a snapshot, binary if the extension is `bin`, CSV otherwise.
pub fn read_snapshot(path: &Path) -> Result<VectorField> {
    if path.extension().is_some_and(|e| e == "bin") {
        parse_snapshot_binary(&fs::read(path)?)
    } else {
        parse_snapshot_csv(&fs::read_to_string(path)?)
    }
}

pub fn write_snapshot(path: &Path, f: &VectorField) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, snapshot_binary(f))?;
        Ok(())
    } else {
        write_text(path, &snapshot_csv(f))
    }
}

/// `x,y,z,angle,degenerate`, angle in radians.
pub fn angle_map_csv(a: &AngleMap) -> String {
    let mut out = mesh_comment(&a.mesh);
    out.push_str("x,y,z,angle,degenerate\n");
    for (idx, (angle, deg)) in a.angle.iter().zip(&a.degenerate).enumerate() {
        let c = a.mesh.center_of(idx);
        let _ = writeln!(out, "{},{},{},{},{}", f17(c[0]), f17(c[1]), f17(c[2]), f17(*angle), u8::from(*deg));
    }
    out
}

/// In-plane arrows `x,y,u,v` for plotting with a quiver tool.
pub fn arrows_csv(f: &VectorField) -> String {
    let mut out = mesh_comment(&f.mesh);
    out.push_str("x,y,u,v\n");
    for (idx, v) in f.data.iter().enumerate() {
        let c = f.mesh.center_of(idx);
        let _ = writeln!(out, "{},{},{},{}", f17(c[0]), f17(c[1]), f17(v[0]), f17(v[1]));
    }
    out
}

pub fn convergence_csv(case: &str, tables: &[ConvergenceTable]) -> String {
    let mut out = String::from("case,scheme,vary,step_size,steps,error,max_norm_deviation,slope,wall_seconds\n");
    for t in tables {
        let vary = match t.vary {
            crate::experiments::convergence::Vary::Time => "time",
            crate::experiments::convergence::Vary::Space => "space",
        };
        for p in &t.points {
            let _ = writeln!(
                out,
                "{case},{},{vary},{},{},{},{},{},{}",
                t.scheme,
                f17(p.step_size),
                p.steps,
                f17(p.error),
                f17(p.max_norm_deviation),
                f17(t.slope),
                f17(p.seconds)
            );
        }
    }
    out
}

pub fn ratios_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from("dt,dx,solve_ratio_a,solve_ratio_b,wall_seconds_gspm,wall_seconds_a,wall_seconds_b,wall_ratio_a,wall_ratio_b\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            f17(r.dt),
            f17(r.dx),
            f17(r.solve_ratio_a),
            f17(r.solve_ratio_b),
            f17(r.seconds[0]),
            f17(r.seconds[1]),
            f17(r.seconds[2]),
            f17(r.ratio_a),
            f17(r.ratio_b)
        );
    }
    out
}

pub fn stability_csv(cells: &[StabilityCell]) -> String {
    let mut out = String::from("scheme,alpha,dt,steps,finite,stable,counters_exact,initial_energy,max_energy,max_norm_deviation,failure\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.scheme,
            f17(c.alpha),
            f17(c.dt),
            c.steps,
            c.finite,
            c.stable,
            c.counters_exact,
            f17(c.initial_energy),
            f17(c.max_energy),
            f17(c.max_norm_deviation),
            c.failure.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    out
}

/// `to_tesla` converts a dimensionless field value for the `b_mt` column.
pub fn loop_csv(l: &HysteresisLoop, to_tesla: impl Fn(f64) -> f64) -> String {
    let mut out = String::from("branch,h,b_mt,m1,m2,m3,steps,energy,converged,max_energy_increase\n");
    for p in &l.points {
        let branch = match p.branch {
            Branch::Descending => "down",
            Branch::Ascending => "up",
        };
        let _ = writeln!(
            out,
            "{branch},{},{},{},{},{},{},{},{},{}",
            f17(p.h),
            f17(to_tesla(p.h) * 1e3),
            f17(p.average[0]),
            f17(p.average[1]),
            f17(p.average[2]),
            p.steps,
            f17(p.energy),
            p.converged,
            f17(p.max_energy_increase)
        );
    }
    out
}

/// Drops every column whose header starts with `wall_`.
pub fn strip_wall_columns(csv: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let Some(header) = lines.next() else { return String::new() };
    let keep: Vec<bool> = header.split(',').map(|h| !h.starts_with("wall_")).collect();
    let filter = |l: &str| -> String {
        l.split(',').zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c).collect::<Vec<_>>().join(",")
    };
    let mut out = filter(header);
    out.push('\n');
    for l in lines {
        out.push_str(&filter(l));
        out.push('\n');
    }
    out
}
