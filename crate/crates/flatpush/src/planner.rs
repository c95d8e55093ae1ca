//! Two-stage pushing planner: shape the flat output curve around the
//! obstacles, then pace it in time against the input bounds.
//!
//! The geometric stage optimizes interior control points of a clamped
//! B-spline between the start and goal positions, minimizing a length
//! objective regularized toward uniform parameter speed, subject to
//! obstacle clearance of the slider footprint and pusher containment on
//! the pushed face. The time stage rides the fixed curve with a
//! monotone clock `tau(t)` whose squared rate is piecewise linear on a
//! uniform grid and vanishes at both ends, minimizing total duration
//! subject to pusher speed and turn-rate bounds. Every input of the
//! contact system is a rate, so along a fixed curve each input scales
//! linearly with the clock rate; the stage exploits that by freezing the
//! geometric input gains per node and constraining the rate itself.

pub mod qp;
pub mod sqp;

pub use sqp::{nlp_solve, NlpProblem, SqpOptions, SqpReport, SqpStatus};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::flatness::{inflate_input, inflate_state, FlatJet, FlatnessError};
use crate::geometry::{slider_polygon, Scene};
use crate::model::{SliderParams, SliderState};
use crate::splines::{clamped_uniform_knots, BSplinePath, SplineError};
use crate::timelaw::{compose_jet, grid_duration, TauJet};
use crate::Vec2;
use sqp::SqpError;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid planner options: {0}")]
    Options(String),
    #[error("planner setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Flatness(#[from] FlatnessError),
    #[error(transparent)]
    Solver(#[from] SqpError),
    #[error("{stage} stage did not converge: {status:?}, constraint violation {violation:.3e}")]
    Stage { stage: &'static str, status: SqpStatus, violation: f64 },
    #[error("scene is infeasible: {0}")]
    Infeasible(String),
    #[error("planned trajectory violates {what} by {amount:.3e}")]
    Inconsistent { what: &'static str, amount: f64 },
}

/// Options of the geometric stage.
#[derive(Debug, Clone)]
pub struct GeoOptions {
    pub degree: usize,
    pub control_points: usize,
    /// Number of parameter intervals carrying the objective quadrature and
    /// the constraint collocation nodes.
    pub grid: usize,
    /// Weight of the squared-speed regularizer that evens out the
    /// parameterization.
    pub gamma: f64,
    pub sqp: SqpOptions,
}

impl Default for GeoOptions {
    fn default() -> Self {
        Self { degree: 5, control_points: 9, grid: 100, gamma: 0.1, sqp: SqpOptions::default() }
    }
}

/// Options of the time stage.
#[derive(Debug, Clone)]
pub struct TimeOptions {
    /// Number of uniform parameter intervals of the clock grid.
    pub intervals: usize,
    /// Lower bound keeping interior clock rates strictly positive.
    pub rate_floor: f64,
    /// Safety cap keeping the subproblems bounded when a node has no
    /// finite input bound.
    pub rate_cap: f64,
    /// Fraction of the per-node feasible rate used as the initial guess.
    pub utilization: f64,
    pub sqp: SqpOptions,
}

impl Default for TimeOptions {
    fn default() -> Self {
        Self {
            intervals: 100,
            rate_floor: 1e-6,
            rate_cap: 1e6,
            utilization: 0.5,
            sqp: SqpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeometricPlan {
    pub path: BSplinePath,
    pub report: SqpReport,
}

#[derive(Debug, Clone)]
pub struct TimePlan {
    /// Parameter spacing of the clock grid.
    pub tau_step: f64,
    /// Clock rate `d tau / dt` at the grid nodes; zero at both ends.
    pub rates: Vec<f64>,
    /// Total duration of the ride.
    pub duration: f64,
    pub report: SqpReport,
}

impl TimePlan {
    /// Squared clock rate at the grid nodes.
    pub fn z_nodes(&self) -> Vec<f64> {
        self.rates.iter().map(|s| s * s).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub params: SliderParams,
    pub geometric: GeometricPlan,
    pub time: TimePlan,
}

impl Plan {
    pub fn path(&self) -> &BSplinePath {
        &self.geometric.path
    }

    pub fn duration(&self) -> f64 {
        self.time.duration
    }
}

/// One sampled point of a planned trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x_s: f64,
    pub y_s: f64,
    pub theta_s: f64,
    pub c: f64,
    pub x_p: f64,
    pub y_p: f64,
    pub theta_p: f64,
    pub v_t: f64,
    pub v_n: f64,
    pub v_p: f64,
    pub omega_p: f64,
}

/// Slider pose read off a possibly degenerate jet. Used only inside
/// constraint evaluations, where iterates may pass through parameter
/// speeds the exact inflation rejects; the clamps turn those into large
/// finite constraint violations instead of errors.
fn relaxed_state(jet: &FlatJet, params: &SliderParams) -> SliderState {
    let v = jet.d1.norm().max(1e-9);
    let theta = (-jet.d1.x).atan2(jet.d1.y);
    let w = jet.d1.x * jet.d2.y - jet.d2.x * jet.d1.y;
    let c = (params.beta * params.beta * w / v.powi(3)).clamp(-1e3, 1e3);
    SliderState::new(jet.zeta.x, jet.zeta.y, theta, c)
}

/// Greville abscissae of a knot vector: the parameter sites at which
/// control points reproduce affine curves exactly.
fn greville(knots: &[f64], degree: usize, n_control: usize) -> Vec<f64> {
    (0..n_control)
        .map(|j| knots[j + 1..j + 1 + degree].iter().sum::<f64>() / degree as f64)
        .collect()
}

struct GeometricProblem<'a> {
    scene: &'a Scene,
    template: BSplinePath,
    seed: Vec<Vec2>,
    /// Constraint collocation nodes, uniform over the parameter domain.
    nodes: Vec<f64>,
    /// Objective quadrature nodes and weights: per-knot-span Gauss rules,
    /// accurate enough that the discrete optimum matches the functional's.
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    /// First-derivative basis values, `quad_nodes x control`, for the
    /// analytic objective gradient. Exact because the curve is linear in
    /// control.
    bprime: DMatrix<f64>,
    gamma: f64,
    n_pieces: usize,
}

impl<'a> GeometricProblem<'a> {
    fn new(scene: &'a Scene, options: &GeoOptions) -> Result<Self, PlannerError> {
        if options.degree < 2 {
            return Err(PlannerError::Options("geometric degree must be at least 2".into()));
        }
        if options.control_points < options.degree + 1 || options.control_points < 3 {
            return Err(PlannerError::Options(format!(
                "need at least {} control points for degree {}",
                (options.degree + 1).max(3),
                options.degree
            )));
        }
        if options.grid < 2 {
            return Err(PlannerError::Options("geometric grid needs at least 2 intervals".into()));
        }
        if !(options.gamma.is_finite() && options.gamma >= 0.0) {
            return Err(PlannerError::Options(format!(
                "speed regularizer must be non-negative, got {}",
                options.gamma
            )));
        }
        let n_ctrl = options.control_points;
        let knots = clamped_uniform_knots(n_ctrl, options.degree);
        let sites = greville(&knots, options.degree, n_ctrl);
        let chord = scene.goal - scene.start;
        let seed: Vec<Vec2> = sites.iter().map(|&xi| scene.start + chord * xi).collect();
        let template = BSplinePath::new(options.degree, knots, seed.clone())?;

        let grid = options.grid;
        let step = 1.0 / grid as f64;
        let nodes: Vec<f64> = (0..=grid).map(|i| i as f64 * step).collect();

        // A trapezoid rule here would let the optimizer shave the
        // objective by bending the speed profile into the quadrature
        // error, so integrate span by span with a Gauss rule instead.
        let (gl_nodes, gl_weights) = crate::numerics::gauss_legendre(8);
        let mut quad_nodes = Vec::new();
        let mut quad_weights = Vec::new();
        let knots = template.knots();
        for span in knots.windows(2) {
            let (lo, hi) = (span[0], span[1]);
            if hi <= lo {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&u, &w) in gl_nodes.iter().zip(&gl_weights) {
                quad_nodes.push(mid + half * u);
                quad_weights.push(half * w);
            }
        }

        // Unit bumps of single control points give the exact basis
        // derivative at every quadrature node.
        let mut bprime = DMatrix::zeros(quad_nodes.len(), n_ctrl);
        for j in 0..n_ctrl {
            let mut bump = vec![Vec2::zeros(); n_ctrl];
            bump[j] = Vec2::new(1.0, 0.0);
            let probe = template.with_control(bump);
            for (i, &tau) in quad_nodes.iter().enumerate() {
                bprime[(i, j)] = probe.eval_jet(tau, 1).d1.x;
            }
        }

        Ok(Self {
            scene,
            template,
            seed,
            nodes,
            quad_nodes,
            quad_weights,
            bprime,
            gamma: options.gamma,
            n_pieces: scene.convex_obstacles().len(),
        })
    }

    fn controls(&self, x: &DVector<f64>) -> Vec<Vec2> {
        let mut control = self.seed.clone();
        let interior = control.len() - 2;
        for j in 0..interior {
            control[j + 1] = Vec2::new(x[2 * j], x[2 * j + 1]);
        }
        control
    }

    fn path(&self, x: &DVector<f64>) -> BSplinePath {
        self.template.with_control(self.controls(x))
    }
}

impl NlpProblem for GeometricProblem<'_> {
    fn dim(&self) -> usize {
        2 * (self.seed.len() - 2)
    }

    fn n_ineq(&self) -> usize {
        self.nodes.len() * (2 + self.n_pieces)
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        let path = self.path(x);
        self.quad_nodes
            .iter()
            .zip(&self.quad_weights)
            .map(|(&tau, &w)| {
                let speed = path.eval_jet(tau, 1).d1.norm();
                w * (speed + self.gamma * speed * speed)
            })
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let path = self.path(x);
        let mut grad = DVector::zeros(self.dim());
        for (i, (&tau, &w)) in self.quad_nodes.iter().zip(&self.quad_weights).enumerate() {
            let d1 = path.eval_jet(tau, 1).d1;
            let speed = d1.norm();
            let sensitivity = if speed > 1e-12 {
                d1 / speed + 2.0 * self.gamma * d1
            } else {
                2.0 * self.gamma * d1
            };
            let interior = self.seed.len() - 2;
            for j in 0..interior {
                let basis = self.bprime[(i, j + 1)];
                grad[2 * j] += w * sensitivity.x * basis;
                grad[2 * j + 1] += w * sensitivity.y * basis;
            }
        }
        grad
    }

    fn ineq_constraints(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let path = self.path(x);
        let limit = self.scene.slider.contact_limit();
        let mut row = 0;
        for &tau in &self.nodes {
            let jet = path.eval_jet(tau, 2);
            let state = relaxed_state(&jet, &self.scene.slider);
            out[row] = limit - state.c;
            out[row + 1] = limit + state.c;
            row += 2;
            if self.n_pieces > 0 {
                let footprint = slider_polygon(&state, &self.scene.slider);
                for piece in self.scene.convex_obstacles() {
                    out[row] = crate::geometry::convex_distance(&footprint, piece)
                        - self.scene.clearance;
                    row += 1;
                }
            }
        }
    }

    fn initial(&self) -> DVector<f64> {
        let interior = self.seed.len() - 2;
        let mut x = DVector::zeros(2 * interior);
        for j in 0..interior {
            x[2 * j] = self.seed[j + 1].x;
            x[2 * j + 1] = self.seed[j + 1].y;
        }
        x
    }
}

/// Shape the flat output curve of a scene.
pub fn plan_geometric(scene: &Scene, options: &GeoOptions) -> Result<GeometricPlan, PlannerError> {
    // A terminal inside an obstacle cannot be fixed by any path shape or
    // slider orientation (the footprint always covers its center), so
    // refuse it before burning solver iterations on it.
    for (name, point) in [("start", scene.start), ("goal", scene.goal)] {
        if scene.convex_obstacles().iter().any(|piece| piece.contains(point)) {
            return Err(PlannerError::Infeasible(format!("{name} lies inside an obstacle")));
        }
    }
    let problem = GeometricProblem::new(scene, options)?;
    let report = nlp_solve(&problem, &options.sqp)?;
    let ok = report.status == SqpStatus::Converged
        && report.constraint_violation <= options.sqp.feas_tol;
    if !ok {
        return Err(PlannerError::Stage {
            stage: "geometric",
            status: report.status,
            violation: report.constraint_violation,
        });
    }
    let path = problem.path(&report.x);
    Ok(GeometricPlan { path, report })
}

/// Input magnitudes per unit clock rate at one parameter value. Every
/// input of the contact system is a rate, so its value under a clock is
/// the clock rate times the gain measured at unit rate.
#[derive(Debug, Clone, Copy)]
struct NodeGains {
    pusher_speed: f64,
    pusher_turn: f64,
    normal_speed: f64,
}

#[derive(Debug, Clone, Copy)]
enum RowKind {
    PusherSpeed,
    PusherTurn,
    NormalFloor,
    RateFloor,
    RateCap,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    /// Interior node index, 1-based on the clock grid.
    node: usize,
    kind: RowKind,
    gain: f64,
    bound: f64,
}

struct TimeProblem {
    intervals: usize,
    tau_step: f64,
    rows: Vec<Row>,
    seed: Vec<f64>,
}

impl TimeProblem {
    fn new(scene: &Scene, path: &BSplinePath, options: &TimeOptions) -> Result<Self, PlannerError> {
        if options.intervals < 2 {
            return Err(PlannerError::Options("time grid needs at least 2 intervals".into()));
        }
        if !(options.rate_floor > 0.0 && options.rate_cap > options.rate_floor) {
            return Err(PlannerError::Options("clock rate floor/cap must satisfy 0 < floor < cap".into()));
        }
        if !(options.utilization > 0.0 && options.utilization < 1.0) {
            return Err(PlannerError::Options("initial utilization must lie in (0, 1)".into()));
        }
        let k = options.intervals;
        let tau_step = 1.0 / k as f64;
        let bounds = &scene.bounds;
        let normal_floor = bounds.v_n_min.unwrap_or(0.0);

        // The squared rate is affine on each interval, so the rate between
        // nodes never exceeds the larger endpoint rate. Capping both
        // endpoints of an interval against the worst gain inside it bounds
        // the input over the whole interval, not just at nodes. The worst
        // gain is estimated from nine samples per interval, padded by half
        // the largest adjacent-sample jump so a peak between samples of
        // comparable local slope stays covered.
        const SUBS: usize = 8;
        let mut speed_max = vec![0.0f64; k];
        let mut turn_max = vec![0.0f64; k];
        let mut normal_min = vec![f64::INFINITY; k];
        for interval in 0..k {
            let mut speed = [0.0f64; SUBS + 1];
            let mut turn = [0.0f64; SUBS + 1];
            let mut normal = [0.0f64; SUBS + 1];
            for sub in 0..=SUBS {
                let tau = ((interval as f64 + sub as f64 / SUBS as f64) * tau_step).min(1.0);
                let gains = node_gains(path, &scene.slider, tau)?;
                speed[sub] = gains.pusher_speed.abs();
                turn[sub] = gains.pusher_turn.abs();
                normal[sub] = gains.normal_speed;
            }
            let pad = |g: &[f64]| {
                0.5 * g.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
            };
            let peak = |g: &[f64]| g.iter().copied().fold(0.0, f64::max);
            speed_max[interval] = peak(&speed) + pad(&speed);
            turn_max[interval] = peak(&turn) + pad(&turn);
            normal_min[interval] =
                (normal.iter().copied().fold(f64::INFINITY, f64::min) - pad(&normal)).max(0.0);
        }

        let mut rows = Vec::new();
        let mut seed = vec![0.0; k - 1];
        for node in 1..k {
            let tau = node as f64 * tau_step;
            let speed_gain = speed_max[node - 1].max(speed_max[node]);
            let turn_gain = turn_max[node - 1].max(turn_max[node]);
            let normal_gain = normal_min[node - 1].min(normal_min[node]);
            let mut cap = options.rate_cap;
            if bounds.v_p.is_finite() && speed_gain > 1e-12 {
                rows.push(Row {
                    node,
                    kind: RowKind::PusherSpeed,
                    gain: speed_gain,
                    bound: bounds.v_p,
                });
                cap = cap.min(bounds.v_p / speed_gain);
            }
            if bounds.omega_p.is_finite() && turn_gain > 1e-12 {
                rows.push(Row {
                    node,
                    kind: RowKind::PusherTurn,
                    gain: turn_gain,
                    bound: bounds.omega_p,
                });
                cap = cap.min(bounds.omega_p / turn_gain);
            }
            let mut floor = options.rate_floor;
            if normal_floor > 0.0 {
                if normal_gain <= 1e-12 {
                    return Err(PlannerError::Setup(format!(
                        "normal-speed floor {normal_floor} unreachable at tau = {tau}"
                    )));
                }
                rows.push(Row {
                    node,
                    kind: RowKind::NormalFloor,
                    gain: normal_gain,
                    bound: normal_floor,
                });
                floor = floor.max(normal_floor / normal_gain);
            }
            if floor >= cap {
                return Err(PlannerError::Setup(format!(
                    "input bounds leave no feasible clock rate at tau = {tau}"
                )));
            }
            rows.push(Row { node, kind: RowKind::RateFloor, gain: 1.0, bound: floor });
            rows.push(Row { node, kind: RowKind::RateCap, gain: 1.0, bound: options.rate_cap });
            seed[node - 1] = (floor + options.utilization * (cap - floor)).min(0.999 * cap);
        }
        Ok(Self { intervals: k, tau_step, rows, seed })
    }

    /// Full rate profile with the pinned zero endpoints.
    fn profile(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.intervals + 1);
        s.push(0.0);
        s.extend(x.iter().copied());
        s.push(0.0);
        s
    }
}

/// Input gains of a path at one parameter value, measured by inflating
/// the inputs under the identity clock.
fn node_gains(
    path: &BSplinePath,
    params: &SliderParams,
    tau: f64,
) -> Result<NodeGains, PlannerError> {
    let geo = path.eval_jet(tau, 4);
    let unit = TauJet { tau, d1: 1.0, d2: 0.0, d3: 0.0, d4: 0.0 };
    let inputs = inflate_input(&compose_jet(&geo, &unit), params).map_err(|e| {
        PlannerError::Setup(format!("path is singular at tau = {tau}: {e}"))
    })?;
    Ok(NodeGains {
        pusher_speed: inputs.car.v,
        pusher_turn: inputs.car.omega,
        normal_speed: inputs.contact.v_n,
    })
}

impl NlpProblem for TimeProblem {
    fn dim(&self) -> usize {
        self.intervals - 1
    }

    fn n_ineq(&self) -> usize {
        self.rows.len()
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        if x.iter().any(|&s| s <= 0.0) {
            return f64::INFINITY;
        }
        let s = self.profile(x);
        s.windows(2).map(|w| 2.0 * self.tau_step / (w[0] + w[1])).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let s = self.profile(x);
        let mut grad = DVector::zeros(self.dim());
        for k in 1..self.intervals {
            let left = s[k - 1] + s[k];
            let right = s[k] + s[k + 1];
            grad[k - 1] = -2.0 * self.tau_step * (1.0 / (left * left) + 1.0 / (right * right));
        }
        grad
    }

    fn ineq_constraints(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for (i, row) in self.rows.iter().enumerate() {
            let s = x[row.node - 1];
            out[i] = match row.kind {
                RowKind::PusherSpeed | RowKind::PusherTurn => row.bound - row.gain * s,
                RowKind::NormalFloor => row.gain * s - row.bound,
                RowKind::RateFloor => s - row.bound,
                RowKind::RateCap => row.bound - s,
            };
        }
    }

    fn ineq_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.rows.len(), self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            jac[(i, row.node - 1)] = match row.kind {
                RowKind::PusherSpeed | RowKind::PusherTurn => -row.gain,
                RowKind::NormalFloor => row.gain,
                RowKind::RateFloor => 1.0,
                RowKind::RateCap => -1.0,
            };
        }
        jac
    }

    fn initial(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.seed)
    }
}

/// Pace a fixed geometric path against the scene's input bounds.
pub fn plan_time(
    scene: &Scene,
    path: &BSplinePath,
    options: &TimeOptions,
) -> Result<TimePlan, PlannerError> {
    let problem = TimeProblem::new(scene, path, options)?;
    let report = nlp_solve(&problem, &options.sqp)?;
    let ok = report.status == SqpStatus::Converged
        && report.constraint_violation <= options.sqp.feas_tol;
    if !ok {
        return Err(PlannerError::Stage {
            stage: "time",
            status: report.status,
            violation: report.constraint_violation,
        });
    }
    let rates = problem.profile(&report.x);
    let z: Vec<f64> = rates.iter().map(|s| s * s).collect();
    let duration = grid_duration(&z, problem.tau_step);
    Ok(TimePlan { tau_step: problem.tau_step, rates, duration, report })
}

/// Full pipeline: geometric stage, time stage, and an independent
/// feasibility recheck of the composed trajectory through the exact
/// inflation maps.
pub fn plan(
    scene: &Scene,
    geo_options: &GeoOptions,
    time_options: &TimeOptions,
) -> Result<Plan, PlannerError> {
    let geometric = plan_geometric(scene, geo_options)?;
    let time = plan_time(scene, &geometric.path, time_options)?;

    let k = time.rates.len() - 1;
    let params = scene.slider;
    let tol = 1e-6;
    // Probe each interval at interior offsets as well as its right node:
    // the transcription guarantees the bounds across whole intervals, so
    // the recheck must look between nodes too.
    let mut probes = Vec::with_capacity(4 * k);
    for seg in 0..k {
        for sigma in [0.25, 0.5, 0.75] {
            probes.push((seg, sigma));
        }
        if seg + 1 < k {
            probes.push((seg, 1.0));
        }
    }
    for (seg, sigma) in probes {
        let z0 = time.rates[seg].powi(2);
        let z1 = time.rates[seg + 1].powi(2);
        let dz = (z1 - z0) / time.tau_step;
        let rate = (z0 + sigma * (z1 - z0)).max(0.0).sqrt();
        if rate < 1e-9 {
            continue;
        }
        let tau = (seg as f64 + sigma) * time.tau_step;
        let clock = TauJet { tau, d1: rate, d2: 0.5 * dz, d3: 0.0, d4: 0.0 };
        let jet = compose_jet(&geometric.path.eval_jet(tau, 4), &clock);
        let inputs = inflate_input(&jet, &params)?;
        if scene.bounds.v_p.is_finite() && inputs.car.v.abs() > scene.bounds.v_p * (1.0 + tol) {
            return Err(PlannerError::Inconsistent {
                what: "pusher speed bound",
                amount: inputs.car.v.abs() - scene.bounds.v_p,
            });
        }
        if scene.bounds.omega_p.is_finite()
            && inputs.car.omega.abs() > scene.bounds.omega_p * (1.0 + tol)
        {
            return Err(PlannerError::Inconsistent {
                what: "pusher turn bound",
                amount: inputs.car.omega.abs() - scene.bounds.omega_p,
            });
        }
        let state = inflate_state(&jet, &params)?;
        let slack = params.contact_limit() - state.slider.c.abs();
        if slack < -1e-9 {
            return Err(PlannerError::Inconsistent { what: "contact containment", amount: -slack });
        }
    }
    Ok(Plan { params, geometric, time })
}

/// Sample a plan at `samples` uniformly spaced times, including both
/// endpoints. The clock inversion is closed form because the squared rate
/// is piecewise linear: on each interval `t - t_k = 2 dtau (sqrt z - s_k)
/// / dz`, matching the duration rule exactly.
pub fn sample_plan(plan: &Plan, samples: usize) -> Result<Vec<TrajectoryRow>, PlannerError> {
    if samples < 2 {
        return Err(PlannerError::Options("need at least 2 samples".into()));
    }
    let k = plan.time.rates.len() - 1;
    let dt_tau = plan.time.tau_step;
    let s = &plan.time.rates;

    // Exact node times of the piecewise-linear squared-rate clock.
    let mut node_t = Vec::with_capacity(k + 1);
    node_t.push(0.0);
    for i in 0..k {
        let last = *node_t.last().unwrap();
        node_t.push(last + 2.0 * dt_tau / (s[i] + s[i + 1]));
    }
    let total = *node_t.last().unwrap();

    let params = plan.params;
    let path = plan.path();
    let mut unwrap_s = crate::flatness::AngleUnwrapper::new();
    let mut unwrap_p = crate::flatness::AngleUnwrapper::new();
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = total * i as f64 / (samples - 1) as f64;
        // Interval containing t.
        let seg = match node_t.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(idx) => idx.min(k - 1),
            Err(idx) => idx.saturating_sub(1).min(k - 1),
        };
        let (z0, z1) = (s[seg] * s[seg], s[seg + 1] * s[seg + 1]);
        let dz = (z1 - z0) / dt_tau;
        let local = t - node_t[seg];
        let sigma = if dz.abs() > 1e-30 {
            let root = s[seg] + 0.5 * local * dz;
            ((root * root - z0) / (dz * dt_tau)).clamp(0.0, 1.0)
        } else {
            (local * s[seg] / dt_tau).clamp(0.0, 1.0)
        };
        let tau = (seg as f64 + sigma) * dt_tau;
        let rate = (z0 + sigma * (z1 - z0)).max(0.0).sqrt();

        let geo = path.eval_jet(tau, 4);
        let full = inflate_state(&geo, &params)?;
        let heading = full.pusher_heading.ok_or(PlannerError::Setup(
            "path is singular where the sampler needs a pusher heading".into(),
        ))?;
        let row = if rate >= 1e-9 {
            let clock = TauJet { tau, d1: rate, d2: 0.5 * dz, d3: 0.0, d4: 0.0 };
            let inputs = inflate_input(&compose_jet(&geo, &clock), &params)?;
            TrajectoryRow {
                t,
                x_s: full.slider.x,
                y_s: full.slider.y,
                theta_s: unwrap_s.unwrap(full.slider.theta),
                c: full.slider.c,
                x_p: full.pusher.x,
                y_p: full.pusher.y,
                theta_p: unwrap_p.unwrap(inputs.pusher_heading),
                v_t: inputs.contact.v_t,
                v_n: inputs.contact.v_n,
                v_p: inputs.car.v,
                omega_p: inputs.car.omega,
            }
        } else {
            TrajectoryRow {
                t,
                x_s: full.slider.x,
                y_s: full.slider.y,
                theta_s: unwrap_s.unwrap(full.slider.theta),
                c: full.slider.c,
                x_p: full.pusher.x,
                y_p: full.pusher.y,
                theta_p: unwrap_p.unwrap(heading),
                v_t: 0.0,
                v_n: 0.0,
                v_p: 0.0,
                omega_p: 0.0,
            }
        };
        out.push(row);
    }
    Ok(out)
}
