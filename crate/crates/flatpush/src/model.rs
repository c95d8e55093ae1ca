//! Quasi-static kinematics of a pushed planar slider.
//!
//! A rectangular slider of width `a` and length `b` rests on a horizontal
//! support plane and is pushed along its bottom edge by a disc finger of
//! radius `r`. With sufficient support friction the motion is quasi-static,
//! and with frictionless slider-finger contact the dynamics reduce to a
//! driftless kinematic model driven by the finger's tangential and normal
//! sliding speeds. The rotational mobility of the slider is governed by a
//! single geometric factor `beta` aggregating the support pressure
//! distribution; two classical closures ([`beta1`], [`beta2`]) and a
//! maximum-entropy reconciliation ([`maxent_fit`]) are provided, along with
//! a generalized model for star-shaped slider outlines ([`generalized_rhs`]).

use crate::numerics::{brent_root, gauss_legendre, integrate_adaptive, rk4_step};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by model construction, closures, and simulation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("side lengths must be positive and finite, got a = {a}, b = {b}")]
    InvalidSides { a: f64, b: f64 },
    #[error("pusher radius must be non-negative and finite, got {0}")]
    InvalidRadius(f64),
    #[error("geometric factor must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("unknown geometric factor name {0:?}, expected \"beta1\" or \"beta2\"")]
    UnknownBetaName(String),
    #[error("invalid simulation setup: {0}")]
    InvalidSimulation(String),
    #[error("initial contact offset {c} outside the slider face (|c| <= {limit})")]
    StartsOutOfContact { c: f64, limit: f64 },
    #[error("radial profile must be positive, r({phi}) = {r}")]
    InvalidRadialProfile { phi: f64, r: f64 },
    #[error("target moment {target} outside the attainable range (0, {max})")]
    TargetOutOfRange { target: f64, max: f64 },
    #[error("moment fit failed to converge: {0}")]
    MomentFit(#[from] crate::numerics::NumericsError),
}

/// Root-mean-square support distance of a uniform-pressure rectangle:
/// the geometric factor of the least-work closure.
///
/// Equals `sqrt((a^2 + b^2) / 12)`.
pub fn beta1(a: f64, b: f64) -> Result<f64, ModelError> {
    check_sides(a, b)?;
    Ok(((a * a + b * b) / 12.0).sqrt())
}

/// Mean support distance of a uniform-pressure rectangle: the geometric
/// factor of the limit-surface closure.
///
/// The closed form is written with both logarithms in a form that stays
/// stable for extreme aspect ratios and is manifestly symmetric in `a`, `b`.
pub fn beta2(a: f64, b: f64) -> Result<f64, ModelError> {
    check_sides(a, b)?;
    let d = a.hypot(b);
    Ok(a * a / (12.0 * b) * ((d + b) / a).ln() + b * b / (12.0 * a) * ((d + a) / b).ln() + d / 6.0)
}

fn check_sides(a: f64, b: f64) -> Result<(), ModelError> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(ModelError::InvalidSides { a, b });
    }
    Ok(())
}

/// Geometry of the slider-pusher pair.
///
/// `beta` is the aggregate pressure-distribution factor; use
/// [`SliderParams::with_beta1`] / [`SliderParams::with_beta2`] for the two
/// standard closures or [`SliderParams::new`] for a custom value.
///
/// Deserializes from `{"a": .., "b": .., "r": .., "beta": ..}` where `beta`
/// is either a number or one of the names `"beta1"`, `"beta2"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSliderParams")]
pub struct SliderParams {
    /// Slider width (the pushed face), m.
    pub a: f64,
    /// Slider length, m.
    pub b: f64,
    /// Pusher disc radius, m.
    pub r: f64,
    /// Aggregate pressure-distribution factor, m.
    pub beta: f64,
}

impl SliderParams {
    pub fn new(a: f64, b: f64, r: f64, beta: f64) -> Result<Self, ModelError> {
        check_sides(a, b)?;
        if !(r.is_finite() && r >= 0.0) {
            return Err(ModelError::InvalidRadius(r));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(Self { a, b, r, beta })
    }

    /// Parameters closed with the root-mean-square factor [`beta1`].
    pub fn with_beta1(a: f64, b: f64, r: f64) -> Result<Self, ModelError> {
        Self::new(a, b, r, beta1(a, b)?)
    }

    /// Parameters closed with the mean-distance factor [`beta2`].
    pub fn with_beta2(a: f64, b: f64, r: f64) -> Result<Self, ModelError> {
        Self::new(a, b, r, beta2(a, b)?)
    }

    /// Distance from the slider center line to the pusher center, b/2 + r.
    pub fn alpha(&self) -> f64 {
        0.5 * self.b + self.r
    }

    /// Half-width of the pushed face; contact requires |c| below this.
    pub fn contact_limit(&self) -> f64 {
        0.5 * self.a
    }
}

#[derive(Deserialize)]
struct RawSliderParams {
    a: f64,
    b: f64,
    #[serde(default)]
    r: f64,
    beta: BetaSpec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BetaSpec {
    Named(String),
    Value(f64),
}

impl TryFrom<RawSliderParams> for SliderParams {
    type Error = ModelError;

    fn try_from(raw: RawSliderParams) -> Result<Self, ModelError> {
        let beta = match raw.beta {
            BetaSpec::Value(v) => v,
            BetaSpec::Named(name) => match name.as_str() {
                "beta1" => beta1(raw.a, raw.b)?,
                "beta2" => beta2(raw.a, raw.b)?,
                _ => return Err(ModelError::UnknownBetaName(name)),
            },
        };
        SliderParams::new(raw.a, raw.b, raw.r, beta)
    }
}

/// Planar pose of the slider plus the contact offset `c` of the pusher
/// along the pushed face (measured from the face midpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliderState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub c: f64,
}

impl SliderState {
    pub fn new(x: f64, y: f64, theta: f64, c: f64) -> Self {
        Self { x, y, theta, c }
    }

    fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.theta, self.c]
    }

    fn from_array(y: [f64; 4]) -> Self {
        Self { x: y[0], y: y[1], theta: y[2], c: y[3] }
    }
}

/// Sliding speeds of the pusher relative to the contact face: tangential
/// along the face and normal into it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInput {
    pub v_t: f64,
    pub v_n: f64,
}

impl ContactInput {
    pub fn new(v_t: f64, v_n: f64) -> Self {
        Self { v_t, v_n }
    }
}

/// Planar pose of the pusher center, interpreted as a kinematic car
/// heading along its +y axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PusherState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Drive input of the pusher seen as a kinematic car: forward speed and
/// heading rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarInput {
    pub v: f64,
    pub omega: f64,
}

/// Time derivative of [`SliderState`] under the frictionless quasi-static
/// model, as `[dx, dy, dtheta, dc]`.
///
/// The slider face normal points along the slider's +y axis at
/// `theta = 0`; a positive normal speed at centered contact pushes the
/// slider straight along +y.
pub fn slider_rhs(state: &SliderState, input: &ContactInput, params: &SliderParams) -> [f64; 4] {
    let bsq = params.beta * params.beta;
    let den = bsq + state.c * state.c;
    let gain = bsq / den * input.v_n;
    [
        -gain * state.theta.sin(),
        gain * state.theta.cos(),
        state.c / den * input.v_n,
        input.v_t - params.alpha() * state.c / den * input.v_n,
    ]
}

/// How a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEnd {
    /// Reached `t_end` with contact maintained.
    Finished,
    /// The contact offset left the pushed face; the last sample sits on the
    /// face boundary at the bisection-refined crossing time.
    ContactLost { t: f64 },
}

/// Fixed-step simulation output. `t` and `states` run in parallel.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<SliderState>,
    pub end: SimEnd,
}

impl Trajectory {
    pub fn last_state(&self) -> &SliderState {
        self.states.last().expect("trajectory holds at least the start sample")
    }
}

/// Crossing times are refined to this absolute accuracy.
const CONTACT_LOSS_TOL: f64 = 1e-9;

/// Integrate the slider under a time-dependent contact input with classic
/// fixed-step fourth-order Runge-Kutta.
///
/// The grid is `0, dt, 2 dt, ...` with a shortened final step so `t_end`
/// is hit exactly. If the contact offset leaves the face (|c| > a/2) the
/// crossing time is refined by bisection on the step and the trajectory is
/// truncated there with [`SimEnd::ContactLost`]. Face departure inside a
/// step that returns before the step ends is not detected.
pub fn simulate<F>(
    params: &SliderParams,
    start: &SliderState,
    input: F,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, ModelError>
where
    F: Fn(f64) -> ContactInput,
{
    if !(dt.is_finite() && dt > 0.0) || !(t_end.is_finite() && t_end >= 0.0) {
        return Err(ModelError::InvalidSimulation(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let limit = params.contact_limit();
    if start.c.abs() > limit {
        return Err(ModelError::StartsOutOfContact { c: start.c, limit });
    }
    let rhs = |t: f64, y: &[f64; 4]| {
        let state = SliderState::from_array(*y);
        slider_rhs(&state, &input(t), params)
    };

    let mut t = 0.0;
    let mut y = start.to_array();
    let mut times = vec![0.0];
    let mut states = vec![*start];
    let mut step_index: u64 = 0;
    while t < t_end {
        step_index += 1;
        let t_next = (step_index as f64 * dt).min(t_end);
        let h = t_next - t;
        let y_next = rk4_step(&rhs, t, &y, h);
        if y_next[3].abs() > limit {
            // Bisect the step length for the face crossing.
            let (mut lo, mut hi) = (0.0, h);
            let mut y_cross = y_next;
            while hi - lo > CONTACT_LOSS_TOL {
                let mid = 0.5 * (lo + hi);
                let y_mid = rk4_step(&rhs, t, &y, mid);
                if y_mid[3].abs() > limit {
                    hi = mid;
                    y_cross = y_mid;
                } else {
                    lo = mid;
                }
            }
            let t_cross = t + hi;
            times.push(t_cross);
            states.push(SliderState::from_array(y_cross));
            return Ok(Trajectory { t: times, states, end: SimEnd::ContactLost { t: t_cross } });
        }
        t = t_next;
        y = y_next;
        times.push(t);
        states.push(SliderState::from_array(y));
    }
    Ok(Trajectory { t: times, states, end: SimEnd::Finished })
}

// ---------------------------------------------------------------------------
// Generalized slider outlines.
// ---------------------------------------------------------------------------

/// Star-shaped slider outline given in polar form around the center of
/// mass: boundary distance `r(phi)` and its derivative `r'(phi)`.
///
/// The aggregate geometric factor is computed on construction from the
/// uniform-pressure second moment, normalized by area so a rectangle
/// outline reproduces [`beta1`]. The profile callbacks must describe a
/// closed, positive, piecewise-smooth boundary with the center of mass at
/// the origin; `r_prime` must be the derivative of `r_of_phi` wherever the
/// boundary is smooth.
pub struct RadialGeometry {
    r_of_phi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    r_prime: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    beta_r: f64,
}

impl RadialGeometry {
    pub fn new<R, D>(r_of_phi: R, r_prime: D) -> Result<Self, ModelError>
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let samples = 1024;
        for i in 0..samples {
            let phi = i as f64 / samples as f64 * std::f64::consts::TAU;
            let r = r_of_phi(phi);
            if !(r.is_finite() && r > 1e-12) || !r_prime(phi).is_finite() {
                return Err(ModelError::InvalidRadialProfile { phi, r });
            }
        }
        let tau = std::f64::consts::TAU;
        let quarter = |f: &dyn Fn(f64) -> f64| {
            // Integrate per quadrant; adaptive refinement absorbs corners.
            (0..4)
                .map(|q| {
                    let lo = q as f64 / 4.0 * tau;
                    integrate_adaptive(&f, lo, lo + tau / 4.0, 1e-13)
                })
                .sum::<f64>()
        };
        let area = quarter(&|phi| 0.5 * r_of_phi(phi).powi(2));
        let second = quarter(&|phi| 0.25 * r_of_phi(phi).powi(4));
        let beta_r = (second / area).sqrt();
        Ok(Self { r_of_phi: Box::new(r_of_phi), r_prime: Box::new(r_prime), beta_r })
    }

    pub fn r(&self, phi: f64) -> f64 {
        (self.r_of_phi)(phi)
    }

    pub fn r_prime(&self, phi: f64) -> f64 {
        (self.r_prime)(phi)
    }

    /// Aggregate geometric factor of the outline (RMS support distance).
    pub fn beta_r(&self) -> f64 {
        self.beta_r
    }
}

impl std::fmt::Debug for RadialGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialGeometry").field("beta_r", &self.beta_r).finish_non_exhaustive()
    }
}

/// Aggregate geometric factor of a radial outline; see
/// [`RadialGeometry::beta_r`].
pub fn beta_r(geom: &RadialGeometry) -> f64 {
    geom.beta_r()
}

/// Slider pose plus contact azimuth for the generalized outline model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Time derivative of [`GenState`] as `[dx, dy, dtheta, dphi]`.
///
/// The input sliding speeds are expressed in the boundary-normal frame at
/// the contact point (slider frame rotated by the contact azimuth `phi`,
/// then by the boundary slope angle). For a rectangle outline this model
/// collapses onto [`slider_rhs`] with a point pusher.
pub fn generalized_rhs(geom: &RadialGeometry, state: &GenState, input: &ContactInput) -> [f64; 4] {
    let r = geom.r(state.phi);
    let rp = geom.r_prime(state.phi);
    let bsq = geom.beta_r() * geom.beta_r();
    let usq = r * r + rp * rp;
    let u = usq.sqrt();
    let den = bsq * usq + r * r * rp * rp;
    // Boundary slope rotation: cos = r/u, sin = -r'/u.
    let alpha = (-rp).atan2(r);
    let bearing = alpha + state.phi + state.theta;
    let gain = bsq * usq / den * input.v_n;
    [
        -gain * bearing.sin(),
        gain * bearing.cos(),
        r * rp * u / den * input.v_n,
        input.v_t / u - r.powi(3) * rp / (u * den) * input.v_n,
    ]
}

// ---------------------------------------------------------------------------
// Maximum-entropy pressure distributions.
// ---------------------------------------------------------------------------

/// Moment functional constrained by the maximum-entropy pressure fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureMoment {
    /// Mean squared support distance (the quantity aggregated by `beta1^2`).
    SquaredDistance,
    /// Mean support distance (the quantity aggregated by `beta2`).
    Distance,
}

/// Result of a maximum-entropy pressure fit over the rectangle.
///
/// The fitted density is `rho(q) = mu * exp(-lambda * m(q))` with `m` the
/// chosen moment kernel, normalized to unit total force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEntPressure {
    pub lambda: f64,
    pub mu: f64,
    /// Moment of the fitted density (should reproduce the target).
    pub moment: f64,
    /// |moment - target| after the fit.
    pub residual: f64,
}

/// Fit the maximum-entropy pressure distribution on an `a` by `b` rectangle
/// whose `kind` moment equals `target`.
///
/// The exponential family has a strictly decreasing moment in `lambda`, so
/// the multiplier is found by bracketed root finding on quadratured
/// moments (64 x 64 tensor Gauss-Legendre). `lambda = 0` recovers the
/// uniform distribution; targets must lie strictly between zero and the
/// corner value of the moment kernel.
pub fn maxent_fit(
    a: f64,
    b: f64,
    kind: PressureMoment,
    target: f64,
) -> Result<MaxEntPressure, ModelError> {
    check_sides(a, b)?;
    let m_max = match kind {
        PressureMoment::SquaredDistance => (a * a + b * b) / 4.0,
        PressureMoment::Distance => a.hypot(b) / 2.0,
    };
    if !(target.is_finite() && target > 0.0 && target < m_max) {
        return Err(ModelError::TargetOutOfRange { target, max: m_max });
    }

    // Precompute quadrature pairs (m_k, w_k) so that any smooth function of
    // the moment kernel integrates over the rectangle as sum w_k f(m_k).
    // The distance kernel is kinked at the center, so its rule works in
    // polar wedges where the integrand is smooth; the squared kernel is
    // smooth everywhere and keeps a plain tensor grid.
    let n = 64;
    let (nodes, weights) = gauss_legendre(n);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    match kind {
        PressureMoment::SquaredDistance => {
            for i in 0..n {
                for j in 0..n {
                    let x = 0.5 * a * nodes[i];
                    let y = 0.5 * b * nodes[j];
                    let w = 0.25 * a * b * weights[i] * weights[j];
                    pairs.push((x * x + y * y, w));
                }
            }
        }
        PressureMoment::Distance => {
            // One quadrant, symmetry factor 4; two wedges split where the
            // boundary switches sides. rho = R(phi) u, area element
            // R^2 u du dphi.
            let corner = (b / a).atan();
            let wedges: [(f64, f64, &dyn Fn(f64) -> f64); 2] = [
                (0.0, corner, &|phi: f64| 0.5 * a / phi.cos()),
                (corner, std::f64::consts::FRAC_PI_2, &|phi: f64| 0.5 * b / phi.sin()),
            ];
            for (lo, hi, radius) in wedges {
                for i in 0..n {
                    let phi = 0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes[i];
                    let wphi = 0.5 * (hi - lo) * weights[i];
                    let rmax = radius(phi);
                    for j in 0..n {
                        let u = 0.5 + 0.5 * nodes[j];
                        let wu = 0.5 * weights[j];
                        pairs.push((rmax * u, 4.0 * wphi * wu * rmax * rmax * u));
                    }
                }
            }
        }
    }

    // Normalized moment and partition integral, with the exponent shifted
    // so the integrand never overflows for either sign of lambda.
    let stats = |lambda: f64| {
        let shift = if lambda >= 0.0 { 0.0 } else { m_max };
        let mut den = 0.0;
        let mut num = 0.0;
        for &(m, w) in &pairs {
            let e = w * (-lambda * (m - shift)).exp();
            den += e;
            num += m * e;
        }
        (num / den, den, shift)
    };

    let objective = |lambda: f64| stats(lambda).0 - target;
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut expansions = 0;
    while objective(lo) <= 0.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > 40 {
            return Err(ModelError::TargetOutOfRange { target, max: m_max });
        }
    }
    while objective(hi) >= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 40 {
            return Err(ModelError::TargetOutOfRange { target, max: m_max });
        }
    }
    let lambda = brent_root(objective, lo, hi, 1e-14, 200)?;
    let (moment, den, shift) = stats(lambda);
    let mu = (lambda * shift).exp() / den;
    Ok(MaxEntPressure { lambda, mu, moment, residual: (moment - target).abs() })
}
