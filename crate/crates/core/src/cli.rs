//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a verification check
//! fails.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::distance::DistanceField;
use crate::flow::{
    check_semiconcavity_pairs, eikonal_defect, integrate, integrate_batch, is_eikonal, verify_speed_bound, Trajectory,
};
use crate::geom::{pt, Point};
use crate::io::{render_svg, write_skeleton_csv, write_trajectory_csv};
use crate::mintime::{halton_interior, hjb_residual, min_time};
use crate::scene::{MetricField, Scene};
use crate::topology::{check_retraction, extract_skeleton, homotopy_map_with_horizon, RETRACTION_TIMES};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "medflow",
    version,
    about = "Distance functions, singular sets and their gradient flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distance, nearest boundary points and superdifferential at a point.
    Distance(DistanceArgs),
    /// Integrate a generalized characteristic to CSV.
    Flow(FlowArgs),
    /// Singular-set point cloud on a grid, to CSV.
    Skeleton(SkeletonArgs),
    /// Evaluate the retraction at one point, or check it on samples.
    Homotopy(HomotopyArgs),
    /// Minimum exit time for a control-field scene.
    Mintime(MintimeArgs),
    /// Run the verification suite and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SceneArg {
    #[arg(long, value_name = "PATH")]
    scene: PathBuf,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "X,Y", value_parser = parse_point, allow_hyphen_values = true)]
    point: Point,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "X,Y", value_parser = parse_point, allow_hyphen_values = true)]
    seed: Point,
    #[arg(long, value_name = "R")]
    tmax: Option<f64>,
    #[arg(long, value_name = "R", default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SkeletonArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "N", default_value_t = 129)]
    res: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HomotopyArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "X,Y", value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<Point>,
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    #[arg(long, value_name = "R", default_value_t = 1e-2)]
    dt: f64,
    #[arg(long, value_name = "N", default_value_t = 129)]
    res: usize,
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MintimeArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "X,Y", value_parser = parse_point, allow_hyphen_values = true)]
    point: Point,
    /// Also report the HJB residual on an N x N grid.
    #[arg(long, value_name = "N")]
    res: Option<usize>,
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    scene: SceneArg,
    #[arg(long, value_name = "N", default_value_t = 50)]
    samples: usize,
    #[arg(long, value_name = "R", default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, value_name = "N", default_value_t = 129)]
    res: usize,
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("malformed point literal '{s}', expected X,Y"))?;
    let parse = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| format!("malformed point literal '{s}', expected X,Y"))
    };
    let (x, y) = (parse(a)?, parse(b)?);
    if !x.is_finite() || !y.is_finite() {
        return Err(format!("malformed point literal '{s}', expected finite X,Y"));
    }
    Ok(pt(x, y))
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Distance(a) => cmd_distance(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Skeleton(a) => cmd_skeleton(a),
        Command::Homotopy(a) => cmd_homotopy(a),
        Command::Mintime(a) => cmd_mintime(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn load_scene(path: &Path) -> Result<Scene> {
    Scene::load(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidArgument(format!("cannot read scene {}: {io}", path.display())),
        other => other,
    })
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s.into_bytes()
}

fn cmd_distance(a: DistanceArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    let projections = field.project(&a.point)?;
    let fan = field.superdifferential(&a.point)?;
    emit(
        a.out.as_deref(),
        &to_json(&json!({ "projections": projections, "superdifferential": fan })),
    )?;
    Ok(true)
}

fn cmd_flow(a: FlowArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    let t_max = a.tmax.unwrap_or_else(|| 2.0 * scene.diameter());
    let traj = integrate(&field, &a.seed, t_max, a.dt)?;
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj)?;
    emit(a.out.as_deref(), &buf)?;
    if let Some(svg) = a.svg {
        fs::write(svg, render_svg(scene.boundary(), None, &[&traj]))?;
    }
    Ok(true)
}

fn cmd_skeleton(a: SkeletonArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    let cloud = extract_skeleton(&field, a.res)?;
    let mut buf = Vec::new();
    write_skeleton_csv(&mut buf, &cloud)?;
    emit(a.out.as_deref(), &buf)?;
    if let Some(svg) = a.svg {
        fs::write(svg, render_svg(scene.boundary(), Some(&cloud), &[]))?;
    }
    Ok(true)
}

fn cmd_homotopy(a: HomotopyArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    match (a.point, a.samples) {
        (Some(x), None) => {
            let big_t = 2.0 * scene.diameter();
            let path: Vec<_> = RETRACTION_TIMES
                .iter()
                .map(|&t| homotopy_map_with_horizon(&field, &x, t, a.dt, big_t).map(|p| json!({ "t": t, "point": p })))
                .collect::<Result<_>>()?;
            emit(
                a.report.as_deref(),
                &to_json(&json!({ "horizon": big_t, "point": x, "path": path })),
            )?;
            if let Some(svg) = a.svg {
                let traj = integrate(&field, &x, big_t, a.dt)?;
                fs::write(svg, render_svg(scene.boundary(), None, &[&traj]))?;
            }
            Ok(true)
        }
        (None, Some(n)) => {
            let report = check_retraction(&field, n, a.dt, a.res)?;
            emit(a.report.as_deref(), &to_json(&report))?;
            if let Some(svg) = a.svg {
                let cloud = extract_skeleton(&field, a.res)?;
                fs::write(svg, render_svg(scene.boundary(), Some(&cloud), &[]))?;
            }
            Ok(report.identity_exact
                && report.fraction_endpoint_singular == 1.0
                && report.fraction_skeleton_invariant == 1.0)
        }
        _ => Err(Error::InvalidArgument(
            "homotopy needs exactly one of --point or --samples".into(),
        )),
    }
}

fn cmd_mintime(a: MintimeArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    let time = min_time(&field, &a.point)?;
    let hjb = a.res.map(|n| hjb_residual(&field, n)).transpose()?;
    emit(
        a.report.as_deref(),
        &to_json(&json!({ "point": a.point, "min_time": time, "hjb": hjb })),
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    applicable: bool,
    pass: bool,
    measured: f64,
    limit: f64,
    note: String,
}

impl Check {
    fn new(name: &'static str, measured: f64, limit: f64, pass: bool) -> Self {
        Self {
            name,
            applicable: true,
            pass,
            measured,
            limit,
            note: String::new(),
        }
    }

    fn skipped(name: &'static str, note: &str) -> Self {
        Self {
            name,
            applicable: false,
            pass: true,
            measured: 0.0,
            limit: 0.0,
            note: note.into(),
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = note;
        self
    }
}

#[derive(Serialize)]
struct VerifyReport {
    metric: &'static str,
    backend: crate::distance::BackendKind,
    vertices: usize,
    diameter: f64,
    samples: usize,
    dt: f64,
    checks: Vec<Check>,
    pass: bool,
}

/// Trajectory seeds: Halton points plus skeleton points.
fn battery_seeds(field: &DistanceField, n: usize, res: usize) -> Result<Vec<Point>> {
    let mut seeds = halton_interior(field.scene(), n);
    let cloud = extract_skeleton(field, res)?;
    let m = cloud.points.len().min(n / 5);
    seeds.extend((0..m).map(|k| cloud.points[k * cloud.points.len() / m.max(1)].x));
    Ok(seeds)
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let scene = load_scene(&a.scene.scene)?;
    let field = DistanceField::new(&scene);
    let diameter = scene.diameter();
    let t_max = 2.0 * diameter;
    let mut checks = Vec::new();
    let samples = halton_interior(&scene, a.samples.max(2));

    let eik = eikonal_defect(&field, &samples)?;
    checks.push(Check::new(
        "eikonal_saturation",
        eik,
        crate::distance::TOL_EIK,
        is_eikonal(eik),
    ));

    if scene.metric().is_euclidean() {
        let pairs: Vec<(Point, Point)> = samples
            .iter()
            .zip(samples.iter().skip(1))
            .map(|(x, y)| (*x, *y))
            .collect();
        let rep = check_semiconcavity_pairs(&field, &pairs)?;
        checks.push(
            Check::new(
                "semiconcavity_pairs",
                rep.max_violation,
                1e-9,
                rep.max_violation <= 1e-9,
            )
            .with_note(format!("{} pairs, {} skipped", rep.pairs, rep.skipped)),
        );
    } else {
        checks.push(Check::skipped("semiconcavity_pairs", "euclidean scenes only"));
    }

    let seeds = battery_seeds(&field, a.samples, a.res)?;
    let trajectories: Vec<Trajectory> = integrate_batch(&field, &seeds, t_max, a.dt)
        .into_iter()
        .collect::<Result<_>>()?;
    let exits = trajectories.iter().filter(|t| t.singular_exit().is_some()).count();
    let rise = trajectories.iter().map(|t| t.max_speed_rise()).fold(0.0, f64::max);
    checks.push(
        Check::new("sigma_invariance", exits as f64, 0.0, exits == 0).with_note(format!(
            "{} trajectories, largest speed rise between samples {rise:.3e}",
            trajectories.len()
        )),
    );
    let drop = trajectories.iter().map(|t| t.max_delta_drop()).fold(0.0, f64::max);
    let tol_mono = 1e-9 * diameter;
    checks.push(Check::new("delta_monotone", drop, tol_mono, drop <= tol_mono));

    let needs_bound = !scene.metric().is_euclidean() && scene.curvature_bound().is_none();
    if needs_bound {
        checks.push(Check::skipped("speed_bound", "no curvature_bound in scene"));
    } else {
        let mut worst = f64::INFINITY;
        let mut checked = 0;
        for tail in trajectories.iter().filter_map(|t| t.singular_tail()) {
            let rep = verify_speed_bound(&tail, &field)?;
            worst = worst.min(rep.min_margin);
            checked += 1;
        }
        let worst = if checked == 0 { 0.0 } else { worst };
        checks.push(
            Check::new(
                "speed_bound",
                -worst,
                crate::flow::TOL_BOUND,
                -worst <= crate::flow::TOL_BOUND,
            )
            .with_note(format!("{checked} singular tails")),
        );
    }

    let rr = check_retraction(&field, a.samples, 10.0 * a.dt, a.res)?;
    let ok = rr.identity_exact && rr.fraction_endpoint_singular == 1.0 && rr.fraction_skeleton_invariant == 1.0;
    checks.push(
        Check::new(
            "retraction",
            rr.fraction_endpoint_singular.min(rr.fraction_skeleton_invariant),
            1.0,
            ok,
        )
        .with_note(format!(
            "endpoint {} skeleton {} identity {} horizon {}",
            rr.fraction_endpoint_singular, rr.fraction_skeleton_invariant, rr.identity_exact, rr.horizon
        )),
    );
    checks.push(Check::new(
        "regular_time_within_diameter",
        rr.max_regular_time,
        diameter,
        rr.max_regular_time <= diameter,
    ));

    match scene.metric() {
        MetricField::ControlField(_) | MetricField::GridSampled(_) => {
            let h = scene.grid_h();
            let (lo, hi) = scene.boundary().bbox();
            let res = (((hi.x - lo.x).max(hi.y - lo.y) / h).round() as usize + 1).min(401);
            let rep = hjb_residual(&field, res)?;
            checks.push(
                Check::new("hjb_residual", rep.max_residual, h, rep.max_residual <= h)
                    .with_note(format!("{} nodes checked, {} excluded", rep.checked, rep.excluded)),
            );
        }
        _ => checks.push(Check::skipped("hjb_residual", "control scenes only")),
    }

    let report = VerifyReport {
        metric: scene.metric().kind(),
        backend: field.backend(),
        vertices: scene.boundary().len(),
        diameter,
        samples: a.samples,
        dt: a.dt,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    emit(a.report.as_deref(), &to_json(&report))?;
    Ok(report.pass)
}
