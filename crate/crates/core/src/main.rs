use clap::{Args, Parser, Subcommand, ValueEnum};
use gspm::config::{load_config, RunConfig};
use gspm::experiments::convergence::{convergence_study, desk_plan, Vary};
use gspm::experiments::efficiency::efficiency_ratios;
use gspm::experiments::hysteresis::{hysteresis_loop, Branch};
use gspm::experiments::manufactured::CaseDim;
use gspm::experiments::profile::{center_slice, profile_relaxation};
use gspm::experiments::stability::stability_sweep;
use gspm::io;
use gspm::mesh::{in_plane_angle_map, Mesh};
use gspm::{Dimensionless, Error, FieldContext, Result, SchemeKind, Stepper, VectorField};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gspm", version, about = "Gauss-Seidel projection solvers for the Landau-Lifshitz-Gilbert equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study; writes convergence.csv.
    Converge(ConvergeArgs),
    /// Wall-clock savings of schemes A and B over GSPM; writes ratios.csv.
    Ratios(RatiosArgs),
    /// Long exchange-only runs over a damping x step grid; writes stability.csv.
    Stability(StabilityArgs),
    /// Field sweep on a film; writes loop.csv.
    Hysteresis(FilmArgs),
    /// Zero-field relaxation from the banded state; writes slice snapshots.
    Profile(ProfileArgs),
    /// One step on a snapshot; prints stats to stderr and the new snapshot.
    StepDebug(StepDebugArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    #[value(name = "1d")]
    One,
    #[value(name = "3d")]
    Three,
}

impl From<Case> for CaseDim {
    fn from(c: Case) -> Self {
        match c {
            Case::One => CaseDim::One,
            Case::Three => CaseDim::Three,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VaryArg {
    Time,
    Space,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides the environment and the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, value_enum, default_value = "1d")]
    case: Case,
    #[arg(long, value_enum, default_value = "time")]
    vary: VaryArg,
    /// gspm, a, b or all.
    #[arg(long, default_value = "all")]
    scheme: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RatiosArgs {
    #[arg(long, value_enum, default_value = "1d")]
    case: Case,
    #[arg(long, value_enum, default_value = "time")]
    vary: VaryArg,
    /// Timed runs per scheme and grid; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value = "all")]
    scheme: String,
    #[arg(long, default_value_t = 100)]
    nx: usize,
    #[arg(long, default_value_t = 10_000)]
    steps: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1")]
    alphas: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FilmArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config scheme.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Exit with status 1 if any field value fails to relax.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Default 1000 (1 ns at 1 ps) when the config has no time section.
    #[arg(long)]
    steps: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StepDebugArgs {
    #[arg(long)]
    scheme: SchemeKind,
    /// Snapshot to start from (`.bin` for binary, CSV otherwise).
    #[arg(long)]
    input: PathBuf,
    /// Parameters and field terms; without it: exchange only, q = 0, eps = 1.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Where to write the new snapshot; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn schemes(arg: &str) -> Result<Vec<SchemeKind>> {
    if arg.eq_ignore_ascii_case("all") {
        Ok(SchemeKind::ALL.to_vec())
    } else {
        arg.split(',').map(str::parse).collect()
    }
}

fn vary(v: VaryArg) -> Vary {
    match v {
        VaryArg::Time => Vary::Time,
        VaryArg::Space => Vary::Space,
    }
}

fn config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p).map_err(|e| match e {
            Error::Io(io) => Error::InvalidArgument(format!("cannot read config {}: {io}", p.display())),
            other => other,
        }),
        None => Ok(RunConfig::default()),
    }
}

fn converge(a: ConvergeArgs) -> Result<()> {
    let out = io::resolve_out_dir(a.common.out.as_deref(), None);
    let (case, grids) = desk_plan(a.case.into(), vary(a.vary));
    let mut tables = Vec::new();
    for scheme in schemes(&a.scheme)? {
        let t = convergence_study(&case, scheme, vary(a.vary), &grids)?;
        println!("{scheme}: slope {:.4}", t.slope);
        tables.push(t);
    }
    let label = match a.case {
        Case::One => "1d",
        Case::Three => "3d",
    };
    io::write_text(&out.join("convergence.csv"), &io::convergence_csv(label, &tables))?;
    io::write_json(&out.join("report.json"), &json!({ "case": case, "tables": tables }))
}

fn ratios(a: RatiosArgs) -> Result<()> {
    let out = io::resolve_out_dir(a.common.out.as_deref(), None);
    let (case, grids) = desk_plan(a.case.into(), vary(a.vary));
    let rows = efficiency_ratios(&case, &grids, a.repeats)?;
    for r in &rows {
        println!("dt {:.3e} dx {:.3e}: ratio-A {:.3} ratio-B {:.3}", r.dt, r.dx, r.ratio_a, r.ratio_b);
    }
    io::write_text(&out.join("ratios.csv"), &io::ratios_csv(&rows))?;
    io::write_json(&out.join("report.json"), &json!({ "case": case, "rows": rows }))
}

fn stability(a: StabilityArgs) -> Result<()> {
    let out = io::resolve_out_dir(a.common.out.as_deref(), None);
    let dx = 1.0 / a.nx as f64;
    let mesh = Mesh::line(a.nx, dx)?;
    let mut cells = Vec::new();
    for scheme in schemes(&a.scheme)? {
        cells.extend(stability_sweep(scheme, &a.alphas, &[dx, 10.0 * dx * dx], mesh, a.steps, a.seed)?);
    }
    for c in &cells {
        println!("{} alpha {} dt {:.1e}: {}", c.scheme, c.alpha, c.dt, if c.stable { "stable" } else { "unstable" });
    }
    io::write_text(&out.join("stability.csv"), &io::stability_csv(&cells))?;
    io::write_json(&out.join("report.json"), &json!({ "seed": a.seed, "cells": cells }))
}

fn hysteresis(a: FilmArgs) -> Result<()> {
    let cfg = config(a.config.as_deref())?;
    let out = io::resolve_out_dir(a.common.out.as_deref(), cfg.out_dir.as_deref());
    let scheme = a.scheme.unwrap_or(cfg.scheme);
    let protocol = cfg.hysteresis_protocol(scheme)?;
    let ctx = cfg.context()?;
    let mut dir = [0.0; 3];
    dir[protocol.axis] = 1.0;
    let m0 = VectorField::uniform(ctx.mesh, dir);
    let l = hysteresis_loop(&protocol, ctx, m0)?;
    let down = l.switch_field(Branch::Descending).map(|h| cfg.field_to_mt(h));
    let up = l.switch_field(Branch::Ascending).map(|h| cfg.field_to_mt(h));
    println!("{scheme}: switch fields {down:?} / {up:?} mT, {} unrelaxed fields", l.unconverged());
    io::write_text(&out.join("loop.csv"), &io::loop_csv(&l, |h| cfg.material.field_to_tesla(h)))?;
    io::write_json(
        &out.join("report.json"),
        &json!({
            "config": cfg,
            "protocol": protocol,
            "switch_mt": [down, up],
            "area": l.enclosed_area(),
            "unconverged": l.unconverged(),
            "stats": l.stats,
            "counters_exact": l.counters_exact,
        }),
    )?;
    if a.strict && l.unconverged() > 0 {
        return Err(Error::NotConverged(format!("{} field values did not relax", l.unconverged())));
    }
    Ok(())
}

fn profile(a: ProfileArgs) -> Result<()> {
    let cfg = config(a.config.as_deref())?;
    let out = io::resolve_out_dir(a.common.out.as_deref(), cfg.out_dir.as_deref());
    let scheme = a.scheme.unwrap_or(cfg.scheme);
    let alpha = a.alpha.unwrap_or(cfg.params.alpha);
    let steps = match a.steps {
        Some(n) => n,
        None => cfg.n_steps(1000)?,
    };
    let run = profile_relaxation(scheme, alpha, cfg.context()?, cfg.dt, steps)?;
    let stem = format!("profile_{scheme}_alpha{alpha}");
    let slice = run.final_slice()?;
    io::write_text(&out.join(format!("{stem}_initial.csv")), &io::snapshot_csv(&center_slice(&run.initial)?))?;
    io::write_text(&out.join(format!("{stem}_final.csv")), &io::snapshot_csv(&run.final_state))?;
    io::write_text(&out.join(format!("{stem}_angle.csv")), &io::angle_map_csv(&in_plane_angle_map(&slice)))?;
    io::write_text(&out.join(format!("{stem}_arrows.csv")), &io::arrows_csv(&slice))?;
    let s = &run.summary;
    println!(
        "{scheme} alpha {alpha}: energy {:.6e} -> {:.6e} (max {:.6e}), norm deviation {:.1e}",
        s.initial_energy, s.final_energy, s.max_energy, s.max_norm_deviation
    );
    io::write_json(&out.join(format!("{stem}_report.json")), &json!({ "config": cfg, "summary": s }))
}

fn step_debug(a: StepDebugArgs) -> Result<()> {
    let m = io::read_snapshot(&a.input)?;
    let (ctx, dt) = match &a.config {
        Some(p) => {
            let cfg = config(Some(p))?;
            (cfg.context_on(m.mesh)?, cfg.dt)
        }
        None => (FieldContext::exchange_only(m.mesh, Dimensionless { q: 0.0, eps: 1.0, alpha: a.alpha }), a.dt),
    };
    let mut stepper = Stepper::new(a.scheme, ctx, m, dt)?;
    stepper.step()?;
    eprintln!("{}", serde_json::to_string(&stepper.report())?);
    match &a.output {
        Some(p) => io::write_snapshot(p, stepper.magnetization()),
        None => {
            print!("{}", io::snapshot_csv(stepper.magnetization()));
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::InvalidArgument(_) | Error::Format(_) | Error::MeshMismatch(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Converge(a) => converge(a),
        Command::Ratios(a) => ratios(a),
        Command::Stability(a) => stability(a),
        Command::Hysteresis(a) => hysteresis(a),
        Command::Profile(a) => profile(a),
        Command::StepDebug(a) => step_debug(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
