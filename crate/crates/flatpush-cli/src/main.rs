//! Batch front end for the pushing toolkit: geometric factors, contact
//! simulation, flatness inflation, time-law reprofiling, and two-stage
//! planning. Outputs are CSV, JSON, and SVG files; exit codes separate
//! input errors (2), solver failures (3), and numeric breakdown (4).

mod error;
mod paths;
mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use error::CliError;
use flatpush::flatness::{inflate_input, inflate_state, AngleUnwrapper, FlatJet, FlatPath};
use flatpush::geometry::{slider_polygon, Scene};
use flatpush::model::{self, ContactInput, SimEnd, SliderParams, SliderState};
use flatpush::planner::{
    plan, plan_geometric, sample_plan, GeoOptions, SqpReport, TimeOptions, TrajectoryRow,
};
use flatpush::splines::BSplinePath;
use flatpush::timelaw::{compose_jet, reprofile, TauJet, VelocityProfile};
use flatpush::Vec2;
use paths::PathSpec;
use svg::Svg;

#[derive(Parser)]
#[command(name = "flatpush", version, about = "Planar pushing: flat maps, time laws, planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the geometric factors of a rectangular slider.
    Beta(BetaArgs),
    /// Integrate the contact kinematics under scripted inputs.
    Simulate(SimulateArgs),
    /// Expand a geometric path into states and inputs under a uniform clock.
    Inflate(InflateArgs),
    /// Ride a geometric path under a speed or curvature time law.
    Reprofile(ReprofileArgs),
    /// Plan a shortest path through a scene, then its fastest ride.
    Plan(PlanArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLATPUSH_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Beta(args) => run_beta(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Inflate(args) => run_inflate(args),
        Command::Reprofile(args) => run_reprofile(args),
        Command::Plan(args) => run_plan(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Slider selection shared by the trajectory subcommands.
#[derive(Args)]
struct SliderArgs {
    /// Scene file supplying the slider block; overrides the flags below.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Side along the pushed face.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Side along the push direction.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Pusher radius.
    #[arg(long, default_value_t = 0.2)]
    r: f64,
    /// Geometric factor: beta1, beta2, or a number.
    #[arg(long, default_value = "beta2")]
    beta: String,
}

#[derive(Args)]
struct BetaArgs {
    /// Side along the pushed face.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Side along the push direction.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Sweep aspect ratios over a log grid and emit CSV instead.
    #[arg(long)]
    grid: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    slider: SliderArgs,
    /// Initial state "x,y,theta,c".
    #[arg(long, default_value = "0,0,0,0")]
    start: String,
    /// Input script: zero | const:VT,VN | replay:FILE.
    #[arg(long, default_value = "const:0,1")]
    input: String,
    /// Simulation horizon.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Integrator step; t_end / 10000 when absent.
    #[arg(long)]
    dt: Option<f64>,
    /// Standard deviation of additive piecewise-constant input noise.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Number of noise intervals across the horizon.
    #[arg(long, default_value_t = 250)]
    noise_grid: usize,
    /// Seed of the noise generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Picture of the swept slider.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct InflateArgs {
    #[command(flatten)]
    slider: SliderArgs,
    /// Geometric path: ellipse | eight | slalom | twin-ellipses | FILE.json.
    #[arg(long, default_value = "ellipse")]
    path: String,
    /// Ride duration under the uniform clock.
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    /// Number of output intervals.
    #[arg(long, default_value_t = 400)]
    grid_k: usize,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Picture of the path and slider sweep.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReprofileArgs {
    #[command(flatten)]
    slider: SliderArgs,
    /// Geometric path: ellipse | eight | slalom | twin-ellipses | FILE.json.
    #[arg(long, default_value = "twin-ellipses")]
    path: String,
    /// Time law: constant:V | trapezoid:A0,DELTA | curvature:K0.
    #[arg(long, default_value = "constant:1")]
    profile: String,
    /// Ride duration.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Number of clock-grid intervals.
    #[arg(long, default_value_t = 400)]
    grid_k: usize,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Picture of the path and slider sweep.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Scene file.
    #[arg(long)]
    scene: PathBuf,
    /// Output directory for plan.json, trajectory.csv, and plan.svg.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Number of clock-grid intervals of the time stage.
    #[arg(long, default_value_t = 100)]
    grid_k: usize,
    /// Number of sampled trajectory intervals.
    #[arg(long, default_value_t = 400)]
    samples: usize,
    /// Stop after the geometric stage.
    #[arg(long)]
    skip_time: bool,
}

fn run_beta(args: &BetaArgs) -> Result<(), CliError> {
    let mut text = String::new();
    if args.grid {
        text.push_str("aspect,beta1,beta2,ratio\n");
        let n = 41;
        for i in 0..n {
            let aspect = 10f64.powf(-1.0 + 2.0 * i as f64 / (n - 1) as f64);
            let b1 = model::beta1(aspect, 1.0)?;
            let b2 = model::beta2(aspect, 1.0)?;
            let _ = writeln!(text, "{},{},{},{}", num(aspect), num(b1), num(b2), num(b1 / b2));
        }
    } else {
        let b1 = model::beta1(args.a, args.b)?;
        let b2 = model::beta2(args.a, args.b)?;
        let _ = writeln!(text, "beta1 {}", num(b1));
        let _ = writeln!(text, "beta2 {}", num(b2));
        let _ = writeln!(text, "ratio {}", num(b1 / b2));
    }
    emit(args.out.as_deref(), &text)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (params, scene) = resolve_slider(&args.slider)?;
    let start = parse_start(&args.start)?;
    let script = InputScript::parse(&args.input)?;
    let noise = noise_table(args.noise_sigma, args.noise_grid, args.seed)?;
    let t_end = args.t_end;
    let input = |t: f64| -> ContactInput {
        let mut u = script.eval(t);
        if let Some(table) = &noise {
            let idx = ((t / t_end * table.len() as f64) as usize).min(table.len() - 1);
            u.v_t += table[idx].v_t;
            u.v_n += table[idx].v_n;
        }
        u
    };
    let dt = args.dt.unwrap_or(t_end / 1e4);
    let traj = model::simulate(&params, &start, input, t_end, dt)?;
    log::info!("simulated {} samples, end {:?}", traj.t.len(), traj.end);

    let mut text = String::from("t,x_s,y_s,theta_s,c\n");
    for (i, state) in traj.states.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            num(traj.t[i]),
            num(state.x),
            num(state.y),
            num(state.theta),
            num(state.c)
        );
    }
    let reason = match traj.end {
        SimEnd::Finished => "finished",
        SimEnd::ContactLost { .. } => "contact_lost",
    };
    let _ = writeln!(text, "# termination_reason={reason}");
    emit(args.out.as_deref(), &text)?;

    if let Some(path) = &args.svg {
        let mut pic = Svg::new();
        if let Some(scene) = &scene {
            draw_scene(&mut pic, scene, Vec2::zeros());
        }
        draw_state_sweep(&mut pic, &traj.states, &params, Vec2::zeros());
        pic.save(path, 640.0)?;
    }
    Ok(())
}

fn run_inflate(args: &InflateArgs) -> Result<(), CliError> {
    let (params, scene) = resolve_slider(&args.slider)?;
    let path = PathSpec::parse(&args.path)?;
    if !(args.t_end.is_finite() && args.t_end > 0.0) {
        return Err(CliError::Input(format!("--t-end must be positive, got {}", args.t_end)));
    }
    if args.grid_k == 0 {
        return Err(CliError::Input("--grid-k must be positive".into()));
    }

    let mut rows = Vec::with_capacity(args.grid_k + 1);
    let mut wrap_s = AngleUnwrapper::new();
    let mut wrap_p = AngleUnwrapper::new();
    for i in 0..=args.grid_k {
        let tau = i as f64 / args.grid_k as f64;
        let clock = TauJet { tau, d1: 1.0 / args.t_end, d2: 0.0, d3: 0.0, d4: 0.0 };
        let jet = compose_jet(&path.jet(tau), &clock);
        rows.push(full_row(args.t_end * tau, &jet, &params, &mut wrap_s, &mut wrap_p)?);
    }
    emit(args.out.as_deref(), &trajectory_csv(&rows))?;

    if let Some(file) = &args.svg {
        let mut pic = Svg::new();
        if let Some(scene) = &scene {
            draw_scene(&mut pic, scene, Vec2::zeros());
        }
        draw_row_sweep(&mut pic, &rows, &params, Vec2::zeros());
        pic.save(file, 640.0)?;
    }
    Ok(())
}

fn run_reprofile(args: &ReprofileArgs) -> Result<(), CliError> {
    let (params, scene) = resolve_slider(&args.slider)?;
    let path = PathSpec::parse(&args.path)?;
    let profile = parse_profile(&args.profile)?;
    let ride = reprofile(&path, &profile, args.t_end, args.grid_k)?;
    log::info!("clock normalization eta = {}", ride.eta);

    let mut rows = Vec::with_capacity(ride.jets.len());
    let mut wrap_s = AngleUnwrapper::new();
    let mut wrap_p = AngleUnwrapper::new();
    for (i, clock) in ride.jets.iter().enumerate() {
        let geo = path.jet(clock.tau);
        let row = if clock.d1.abs() < 1e-9 {
            rest_row(ride.t[i], &geo, &params, &mut wrap_s, &mut wrap_p)?
        } else {
            full_row(ride.t[i], &compose_jet(&geo, clock), &params, &mut wrap_s, &mut wrap_p)?
        };
        rows.push((clock.tau, row));
    }

    let mut text = format!("# eta={}\n", num(ride.eta));
    text.push_str("t,tau,x_s,y_s,theta_s,c,x_p,y_p,theta_p,v_t,v_n,v_p,omega_p\n");
    for (tau, row) in &rows {
        let _ = writeln!(text, "{},{},{}", num(row.t), num(*tau), row_fields(row));
    }
    emit(args.out.as_deref(), &text)?;

    if let Some(file) = &args.svg {
        let plain: Vec<TrajectoryRow> = rows.iter().map(|(_, r)| *r).collect();
        let mut pic = Svg::new();
        if let Some(scene) = &scene {
            draw_scene(&mut pic, scene, Vec2::zeros());
        }
        draw_row_sweep(&mut pic, &plain, &params, Vec2::zeros());
        pic.save(file, 640.0)?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct StageDiag {
    status: String,
    iterations: usize,
    objective: f64,
    kkt_residual: f64,
    constraint_violation: f64,
}

impl From<&SqpReport> for StageDiag {
    fn from(report: &SqpReport) -> Self {
        Self {
            status: format!("{:?}", report.status),
            iterations: report.iterations,
            objective: report.objective,
            kkt_residual: report.kkt_residual,
            constraint_violation: report.constraint_violation,
        }
    }
}

#[derive(serde::Serialize)]
struct Diagnostics {
    geometric: StageDiag,
    time: Option<StageDiag>,
}

#[derive(serde::Serialize)]
struct TimeBlock {
    tau_step: f64,
    rates: Vec<f64>,
    z: Vec<f64>,
    duration: f64,
}

#[derive(serde::Serialize)]
struct PlanFile<'a> {
    path: &'a BSplinePath,
    time: Option<TimeBlock>,
    diagnostics: Diagnostics,
}

fn run_plan(args: &PlanArgs) -> Result<(), CliError> {
    let scene = load_scene(&args.scene)?;
    if args.grid_k == 0 {
        return Err(CliError::Input("--grid-k must be positive".into()));
    }
    if args.samples == 0 {
        return Err(CliError::Input("--samples must be positive".into()));
    }
    let geo_options = GeoOptions::default();
    fs::create_dir_all(&args.out)?;
    let json_path = args.out.join("plan.json");
    let svg_path = args.out.join("plan.svg");

    if args.skip_time {
        let geometric = plan_geometric(&scene, &geo_options)?;
        let file = PlanFile {
            path: &geometric.path,
            time: None,
            diagnostics: Diagnostics { geometric: StageDiag::from(&geometric.report), time: None },
        };
        fs::write(&json_path, serde_json::to_string_pretty(&file)? + "\n")?;
        let mut pic = Svg::new();
        draw_plan_panels(&mut pic, &scene, &geometric.path, None);
        pic.save(&svg_path, 960.0)?;
        say(format!("geometric {}", stage_summary(&geometric.report)))?;
        say(format!("wrote {} {}", json_path.display(), svg_path.display()))?;
        return Ok(());
    }

    let time_options = TimeOptions { intervals: args.grid_k, ..TimeOptions::default() };
    let result = plan(&scene, &geo_options, &time_options)?;
    let rows = sample_plan(&result, args.samples + 1)?;
    let csv_path = args.out.join("trajectory.csv");

    let file = PlanFile {
        path: result.path(),
        time: Some(TimeBlock {
            tau_step: result.time.tau_step,
            rates: result.time.rates.clone(),
            z: result.time.z_nodes(),
            duration: result.duration(),
        }),
        diagnostics: Diagnostics {
            geometric: StageDiag::from(&result.geometric.report),
            time: Some(StageDiag::from(&result.time.report)),
        },
    };
    fs::write(&json_path, serde_json::to_string_pretty(&file)? + "\n")?;
    fs::write(&csv_path, trajectory_csv(&rows))?;
    let mut pic = Svg::new();
    draw_plan_panels(&mut pic, &scene, result.path(), Some(&rows));
    pic.save(&svg_path, 960.0)?;

    say(format!("geometric {}", stage_summary(&result.geometric.report)))?;
    say(format!("time {}", stage_summary(&result.time.report)))?;
    say(format!("duration {}", num(result.duration())))?;
    say(format!("wrote {} {} {}", json_path.display(), csv_path.display(), svg_path.display()))?;
    Ok(())
}

fn stage_summary(report: &SqpReport) -> String {
    format!(
        "status={:?} iterations={} objective={} kkt={}",
        report.status,
        report.iterations,
        num(report.objective),
        num(report.kkt_residual)
    )
}

/// Fixed-precision scientific notation keeps every emitted file
/// byte-identical across runs of the same configuration.
fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            Ok(())
        }
        None => {
            use std::io::Write as _;
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn say(line: String) -> Result<(), CliError> {
    emit(None, &(line + "\n"))
}

fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read scene {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("scene {}: {e}", path.display())))
}

fn resolve_slider(args: &SliderArgs) -> Result<(SliderParams, Option<Scene>), CliError> {
    if let Some(path) = &args.scene {
        let scene = load_scene(path)?;
        return Ok((scene.slider, Some(scene)));
    }
    let params = match args.beta.as_str() {
        "beta1" => SliderParams::with_beta1(args.a, args.b, args.r)?,
        "beta2" => SliderParams::with_beta2(args.a, args.b, args.r)?,
        other => {
            let value = other.parse::<f64>().map_err(|_| {
                CliError::Input(format!("--beta expects beta1, beta2, or a number, got {other:?}"))
            })?;
            SliderParams::new(args.a, args.b, args.r, value)?
        }
    };
    Ok((params, None))
}

fn parse_floats(text: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| CliError::Input(format!("{what}: {e}")))?;
    if vals.len() != n {
        return Err(CliError::Input(format!(
            "{what} expects {n} comma-separated numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_start(text: &str) -> Result<SliderState, CliError> {
    let v = parse_floats(text, 4, "--start")?;
    Ok(SliderState::new(v[0], v[1], v[2], v[3]))
}

fn parse_profile(spec: &str) -> Result<VelocityProfile, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "constant" => {
            let v = parse_floats(rest, 1, "constant profile")?;
            Ok(VelocityProfile::Constant { v0: v[0] })
        }
        "trapezoid" => {
            let v = parse_floats(rest, 2, "trapezoid profile")?;
            Ok(VelocityProfile::Trapezoid { a0: v[0], delta: v[1] })
        }
        "curvature" => {
            let v = parse_floats(rest, 1, "curvature profile")?;
            Ok(VelocityProfile::Curvature { kappa0: v[0] })
        }
        other => Err(CliError::Input(format!(
            "unknown profile kind {other:?}: expected constant, trapezoid, or curvature"
        ))),
    }
}

enum InputScript {
    Zero,
    Const(ContactInput),
    Replay { t: Vec<f64>, v_t: Vec<f64>, v_n: Vec<f64> },
}

impl InputScript {
    fn parse(spec: &str) -> Result<Self, CliError> {
        if spec == "zero" {
            return Ok(InputScript::Zero);
        }
        if let Some(rest) = spec.strip_prefix("const:") {
            let v = parse_floats(rest, 2, "const input")?;
            return Ok(InputScript::Const(ContactInput::new(v[0], v[1])));
        }
        if let Some(file) = spec.strip_prefix("replay:") {
            return InputScript::replay(Path::new(file));
        }
        Err(CliError::Input(format!(
            "unknown input script {spec:?}: expected zero, const:VT,VN, or replay:FILE"
        )))
    }

    /// Reads a trajectory CSV back and replays its t, v_t, v_n columns
    /// with piecewise-linear interpolation, clamped at both ends.
    fn replay(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read replay {}: {e}", path.display())))?;
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| CliError::Input(format!("replay file {} is empty", path.display())))?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        let col = |name: &str| {
            names.iter().position(|n| *n == name).ok_or_else(|| {
                CliError::Input(format!("replay file {} lacks a {name:?} column", path.display()))
            })
        };
        let (ti, vti, vni) = (col("t")?, col("v_t")?, col("v_n")?);

        let (mut t, mut v_t, mut v_n) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let get = |idx: usize| -> Result<f64, CliError> {
                fields
                    .get(idx)
                    .ok_or_else(|| CliError::Input(format!("short row in {}", path.display())))?
                    .parse::<f64>()
                    .map_err(|e| CliError::Input(format!("bad number in {}: {e}", path.display())))
            };
            t.push(get(ti)?);
            v_t.push(get(vti)?);
            v_n.push(get(vni)?);
        }
        if t.is_empty() {
            return Err(CliError::Input(format!("replay file {} has no rows", path.display())));
        }
        if !t.windows(2).all(|w| w[1] > w[0]) {
            return Err(CliError::Input(format!(
                "replay times in {} must strictly increase",
                path.display()
            )));
        }
        Ok(InputScript::Replay { t, v_t, v_n })
    }

    fn eval(&self, time: f64) -> ContactInput {
        match self {
            InputScript::Zero => ContactInput::new(0.0, 0.0),
            InputScript::Const(u) => *u,
            InputScript::Replay { t, v_t, v_n } => {
                let n = t.len();
                if time <= t[0] {
                    return ContactInput::new(v_t[0], v_n[0]);
                }
                if time >= t[n - 1] {
                    return ContactInput::new(v_t[n - 1], v_n[n - 1]);
                }
                let hi = t.partition_point(|&tk| tk <= time);
                let lo = hi - 1;
                let w = (time - t[lo]) / (t[hi] - t[lo]);
                ContactInput::new(
                    v_t[lo] + w * (v_t[hi] - v_t[lo]),
                    v_n[lo] + w * (v_n[hi] - v_n[lo]),
                )
            }
        }
    }
}

fn noise_table(
    sigma: f64,
    grid: usize,
    seed: u64,
) -> Result<Option<Vec<ContactInput>>, CliError> {
    if sigma == 0.0 {
        return Ok(None);
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(CliError::Input(format!("--noise-sigma must be non-negative, got {sigma}")));
    }
    if grid == 0 {
        return Err(CliError::Input("--noise-grid must be positive".into()));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| CliError::Input(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Some(
        (0..grid)
            .map(|_| ContactInput::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect(),
    ))
}

fn full_row(
    t: f64,
    jet: &FlatJet,
    params: &SliderParams,
    wrap_s: &mut AngleUnwrapper,
    wrap_p: &mut AngleUnwrapper,
) -> Result<TrajectoryRow, CliError> {
    let state = inflate_state(jet, params)?;
    let inputs = inflate_input(jet, params)?;
    Ok(TrajectoryRow {
        t,
        x_s: state.slider.x,
        y_s: state.slider.y,
        theta_s: wrap_s.unwrap(state.slider.theta),
        c: state.slider.c,
        x_p: state.pusher.x,
        y_p: state.pusher.y,
        theta_p: wrap_p.unwrap(inputs.pusher_heading),
        v_t: inputs.contact.v_t,
        v_n: inputs.contact.v_n,
        v_p: inputs.car.v,
        omega_p: inputs.car.omega,
    })
}

/// Row at a rest node of a time law: the clock rate vanishes, so every
/// input is zero and the poses come from the geometric jet alone.
fn rest_row(
    t: f64,
    geo: &FlatJet,
    params: &SliderParams,
    wrap_s: &mut AngleUnwrapper,
    wrap_p: &mut AngleUnwrapper,
) -> Result<TrajectoryRow, CliError> {
    let state = inflate_state(geo, params)?;
    let heading = state.pusher_heading.unwrap_or(state.slider.theta);
    Ok(TrajectoryRow {
        t,
        x_s: state.slider.x,
        y_s: state.slider.y,
        theta_s: wrap_s.unwrap(state.slider.theta),
        c: state.slider.c,
        x_p: state.pusher.x,
        y_p: state.pusher.y,
        theta_p: wrap_p.unwrap(heading),
        v_t: 0.0,
        v_n: 0.0,
        v_p: 0.0,
        omega_p: 0.0,
    })
}

fn row_fields(r: &TrajectoryRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        num(r.x_s),
        num(r.y_s),
        num(r.theta_s),
        num(r.c),
        num(r.x_p),
        num(r.y_p),
        num(r.theta_p),
        num(r.v_t),
        num(r.v_n),
        num(r.v_p),
        num(r.omega_p)
    )
}

fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut text = String::from("t,x_s,y_s,theta_s,c,x_p,y_p,theta_p,v_t,v_n,v_p,omega_p\n");
    for row in rows {
        let _ = writeln!(text, "{},{}", num(row.t), row_fields(row));
    }
    text
}

fn draw_scene(pic: &mut Svg, scene: &Scene, offset: Vec2) {
    for poly in &scene.obstacles {
        let points = poly.vertices().iter().map(|v| v + offset).collect();
        pic.polygon(points, "#555555", 1.0, "#d9d9d9");
    }
    let radius = 0.15 * scene.slider.a.min(scene.slider.b);
    pic.marker(scene.start + offset, radius, "#2c9c4a");
    pic.marker(scene.goal + offset, radius, "#c44e52");
}

fn draw_footprint(
    pic: &mut Svg,
    state: &SliderState,
    params: &SliderParams,
    offset: Vec2,
    color: &'static str,
) {
    let poly = slider_polygon(state, params);
    let points = poly.vertices().iter().map(|v| v + offset).collect();
    pic.polygon(points, color, 1.0, "none");
}

fn pusher_point(state: &SliderState, params: &SliderParams) -> Vec2 {
    let (s, c) = state.theta.sin_cos();
    let local = Vec2::new(state.c, -(0.5 * params.b + params.r));
    Vec2::new(state.x, state.y) + Vec2::new(c * local.x - s * local.y, s * local.x + c * local.y)
}

fn draw_state_sweep(pic: &mut Svg, states: &[SliderState], params: &SliderParams, offset: Vec2) {
    if states.is_empty() {
        return;
    }
    let centers = states.iter().map(|s| Vec2::new(s.x, s.y) + offset).collect();
    pic.polyline(centers, "#1f6fb4", 1.5);
    let pushers = states.iter().map(|s| pusher_point(s, params) + offset).collect();
    pic.polyline(pushers, "#2c9c4a", 1.0);
    let stride = (states.len() / 12).max(1);
    for state in states.iter().step_by(stride) {
        draw_footprint(pic, state, params, offset, "#c44e52");
    }
    draw_footprint(pic, states.last().expect("nonempty"), params, offset, "#c44e52");
}

fn draw_row_sweep(pic: &mut Svg, rows: &[TrajectoryRow], params: &SliderParams, offset: Vec2) {
    let states: Vec<SliderState> =
        rows.iter().map(|r| SliderState::new(r.x_s, r.y_s, r.theta_s, r.c)).collect();
    draw_state_sweep(pic, &states, params, offset);
}

/// Snapshot panels: the scene with its seed chord, the shortest path
/// with slider footprints, and (when a time plan exists) footprints at
/// uniform time steps, whose crowding shows the speed profile.
fn draw_plan_panels(
    pic: &mut Svg,
    scene: &Scene,
    path: &BSplinePath,
    rows: Option<&[TrajectoryRow]>,
) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2| {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    };
    grow(scene.start);
    grow(scene.goal);
    for poly in &scene.obstacles {
        for &v in poly.vertices() {
            grow(v);
        }
    }
    let pad = 0.5 * scene.slider.a.hypot(scene.slider.b) + 0.5;
    let dx = Vec2::new(hi.x - lo.x + 2.0 * pad, 0.0);

    draw_scene(pic, scene, Vec2::zeros());
    pic.polyline(vec![scene.start, scene.goal], "#9a9a9a", 1.0);

    draw_scene(pic, scene, dx);
    let centers: Vec<Vec2> =
        (0..=200).map(|i| path.eval_jet(i as f64 / 200.0, 0).zeta + dx).collect();
    pic.polyline(centers, "#1f6fb4", 1.5);
    for i in 0..=12 {
        let jet = path.eval_jet(i as f64 / 12.0, 4);
        if let Ok(state) = inflate_state(&jet, &scene.slider) {
            draw_footprint(pic, &state.slider, &scene.slider, dx, "#c44e52");
        }
    }

    if let Some(rows) = rows {
        draw_scene(pic, scene, 2.0 * dx);
        let centers = rows.iter().map(|r| Vec2::new(r.x_s, r.y_s) + 2.0 * dx).collect();
        pic.polyline(centers, "#1f6fb4", 1.0);
        let stride = (rows.len() / 25).max(1);
        for row in rows.iter().step_by(stride) {
            let state = SliderState::new(row.x_s, row.y_s, row.theta_s, row.c);
            draw_footprint(pic, &state, &scene.slider, 2.0 * dx, "#7b52a1");
        }
    }
}
