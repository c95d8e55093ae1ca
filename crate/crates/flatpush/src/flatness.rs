//! Differential flatness of the slider-pusher system.
//!
//! The slider center position is a flat output: every state and input of
//! the contact model can be written in terms of the center path and its
//! time derivatives up to fourth order. [`project`] drops a full state to
//! the flat output, [`inflate_state`] rebuilds the slider pose, contact
//! offset, and pusher placement from a second-order jet, and
//! [`inflate_input`] rebuilds the sliding speeds and the pusher's
//! car-like drive from a fourth-order jet. The maps are exact inverses of
//! the kinematics along any sufficiently smooth, never-stopping path.

use crate::model::{CarInput, ContactInput, PusherState, SliderParams, SliderState};
use crate::Vec2;
use thiserror::Error;

/// Below this path speed the flatness maps are numerically meaningless.
pub const SPEED_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FlatnessError {
    #[error("flat output speed {speed} is below the invertibility floor")]
    SingularJet { speed: f64 },
    #[error("pusher speed {speed} is too small to define its heading rate")]
    SingularPusher { speed: f64 },
    #[error("jet carries derivatives up to order {got}, but order {needed} is required")]
    InsufficientOrder { needed: usize, got: usize },
}

/// Flat output value and time derivatives at one instant.
///
/// `order` records how many derivatives are meaningful; the unused tails
/// are zero. State inflation needs order 2 (order 3 to also orient the
/// pusher), input inflation needs order 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatJet {
    pub zeta: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d3: Vec2,
    pub d4: Vec2,
    pub order: usize,
}

impl FlatJet {
    pub fn order2(zeta: Vec2, d1: Vec2, d2: Vec2) -> Self {
        Self { zeta, d1, d2, d3: Vec2::zeros(), d4: Vec2::zeros(), order: 2 }
    }

    pub fn order3(zeta: Vec2, d1: Vec2, d2: Vec2, d3: Vec2) -> Self {
        Self { zeta, d1, d2, d3, d4: Vec2::zeros(), order: 3 }
    }

    pub fn order4(zeta: Vec2, d1: Vec2, d2: Vec2, d3: Vec2, d4: Vec2) -> Self {
        Self { zeta, d1, d2, d3, d4, order: 4 }
    }

    fn require(&self, needed: usize) -> Result<(), FlatnessError> {
        if self.order < needed {
            return Err(FlatnessError::InsufficientOrder { needed, got: self.order });
        }
        Ok(())
    }
}

/// Geometric path that can report a fourth-order jet of the flat output
/// at any parameter value in `[0, 1]`; implementations clamp outside it.
pub trait FlatPath {
    fn jet(&self, tau: f64) -> FlatJet;
}

impl<F> FlatPath for F
where
    F: Fn(f64) -> FlatJet,
{
    fn jet(&self, tau: f64) -> FlatJet {
        self(tau)
    }
}

/// Slider state together with the pusher placement implied by flatness.
///
/// `pusher_heading` is `None` when the producing jet had order below 3 or
/// the pusher is momentarily at rest, leaving its heading undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub slider: SliderState,
    pub pusher: Vec2,
    pub pusher_heading: Option<f64>,
}

impl FullState {
    pub fn pusher_state(&self) -> Option<PusherState> {
        self.pusher_heading.map(|theta| PusherState { x: self.pusher.x, y: self.pusher.y, theta })
    }
}

/// Sliding-speed and car-drive inputs recovered from a fourth-order jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatInputs {
    pub contact: ContactInput,
    pub car: CarInput,
    pub pusher_heading: f64,
}

/// Drop a slider state to the flat output (its center position).
pub fn project(state: &SliderState) -> Vec2 {
    Vec2::new(state.x, state.y)
}

/// Everything the inflation maps share, computed once from a jet.
struct JetFrame {
    v: f64,
    theta: f64,
    sin_t: f64,
    cos_t: f64,
    c: f64,
    /// Signed parallelogram rate d1 x d2 governing curvature.
    w: f64,
}

impl JetFrame {
    fn build(jet: &FlatJet, params: &SliderParams) -> Result<Self, FlatnessError> {
        let v = jet.d1.norm();
        if v < SPEED_FLOOR {
            return Err(FlatnessError::SingularJet { speed: v });
        }
        let theta = (-jet.d1.x).atan2(jet.d1.y);
        let w = jet.d1.x * jet.d2.y - jet.d2.x * jet.d1.y;
        let c = params.beta * params.beta * w / v.powi(3);
        Ok(Self { v, theta, sin_t: theta.sin(), cos_t: theta.cos(), c, w })
    }

    fn pusher_position(&self, jet: &FlatJet, params: &SliderParams) -> Vec2 {
        let alpha = params.alpha();
        Vec2::new(
            jet.zeta.x + alpha * self.sin_t + self.c * self.cos_t,
            jet.zeta.y - alpha * self.cos_t + self.c * self.sin_t,
        )
    }

    /// Pusher-center velocity, available from order 3.
    fn pusher_velocity(&self, jet: &FlatJet, params: &SliderParams) -> Vec2 {
        let (v, c, w) = (self.v, self.c, self.w);
        let bsq = params.beta * params.beta;
        let theta_dot = w / (v * v);
        let s = jet.d1.dot(&jet.d2);
        let w_dot = jet.d1.x * jet.d3.y - jet.d3.x * jet.d1.y;
        let c_dot = bsq * (w_dot / v.powi(3) - 3.0 * w * s / v.powi(5));
        let alpha = params.alpha();
        Vec2::new(
            jet.d1.x + (alpha * theta_dot + c_dot) * self.cos_t - c * self.sin_t * theta_dot,
            jet.d1.y + (alpha * theta_dot + c_dot) * self.sin_t + c * self.cos_t * theta_dot,
        )
    }
}

/// Rebuild the slider pose, contact offset, and pusher placement from a
/// flat jet of order at least 2.
///
/// The slider heading comes out in `(-pi, pi]`; feed a sampled sequence
/// through [`AngleUnwrapper`] when continuity matters.
pub fn inflate_state(jet: &FlatJet, params: &SliderParams) -> Result<FullState, FlatnessError> {
    jet.require(2)?;
    let frame = JetFrame::build(jet, params)?;
    let pusher = frame.pusher_position(jet, params);
    let pusher_heading = if jet.order >= 3 {
        let vel = frame.pusher_velocity(jet, params);
        let speed = vel.norm();
        (speed >= SPEED_FLOOR).then(|| (-vel.x).atan2(vel.y))
    } else {
        None
    };
    Ok(FullState {
        slider: SliderState::new(jet.zeta.x, jet.zeta.y, frame.theta, frame.c),
        pusher,
        pusher_heading,
    })
}

/// Rebuild the contact sliding speeds and the pusher's car-like drive from
/// a fourth-order flat jet.
///
/// Fails with [`FlatnessError::SingularPusher`] when the pusher center is
/// momentarily at rest, which leaves its heading and heading rate
/// undefined even though the contact speeds still exist.
pub fn inflate_input(jet: &FlatJet, params: &SliderParams) -> Result<FlatInputs, FlatnessError> {
    jet.require(4)?;
    let frame = JetFrame::build(jet, params)?;
    let (v, c, w) = (frame.v, frame.c, frame.w);
    let bsq = params.beta * params.beta;
    let alpha = params.alpha();

    let s = jet.d1.dot(&jet.d2);
    let s_dot = jet.d2.norm_squared() + jet.d1.dot(&jet.d3);
    let w_dot = jet.d1.x * jet.d3.y - jet.d3.x * jet.d1.y;
    let w_ddot =
        jet.d2.x * jet.d3.y + jet.d1.x * jet.d4.y - jet.d4.x * jet.d1.y - jet.d3.x * jet.d2.y;

    let theta_dot = w / (v * v);
    let theta_ddot = w_dot / (v * v) - 2.0 * w * s / v.powi(4);
    let c_dot = bsq * (w_dot / v.powi(3) - 3.0 * w * s / v.powi(5));
    let c_ddot = bsq
        * (w_ddot / v.powi(3) - (6.0 * w_dot * s + 3.0 * w * s_dot) / v.powi(5)
            + 15.0 * w * s * s / v.powi(7));

    let v_n = (1.0 + c * c / bsq) * v;
    let v_t = alpha * theta_dot + c_dot;

    let (sin_t, cos_t) = (frame.sin_t, frame.cos_t);
    let swing = alpha * theta_dot + c_dot;
    let xp_dot = jet.d1.x + swing * cos_t - c * sin_t * theta_dot;
    let yp_dot = jet.d1.y + swing * sin_t + c * cos_t * theta_dot;
    let xp_ddot = jet.d2.x + alpha * (cos_t * theta_ddot - sin_t * theta_dot * theta_dot)
        + c_ddot * cos_t
        - 2.0 * c_dot * sin_t * theta_dot
        - c * cos_t * theta_dot * theta_dot
        - c * sin_t * theta_ddot;
    let yp_ddot = jet.d2.y + alpha * (sin_t * theta_ddot + cos_t * theta_dot * theta_dot)
        + c_ddot * sin_t
        + 2.0 * c_dot * cos_t * theta_dot
        - c * sin_t * theta_dot * theta_dot
        + c * cos_t * theta_ddot;

    let vp_sq = xp_dot * xp_dot + yp_dot * yp_dot;
    let v_p = vp_sq.sqrt();
    if v_p < SPEED_FLOOR {
        return Err(FlatnessError::SingularPusher { speed: v_p });
    }
    let omega_p = (xp_dot * yp_ddot - xp_ddot * yp_dot) / vp_sq;
    Ok(FlatInputs {
        contact: ContactInput::new(v_t, v_n),
        car: CarInput { v: v_p, omega: omega_p },
        pusher_heading: (-xp_dot).atan2(yp_dot),
    })
}

/// Removes 2 pi jumps from a sampled angle sequence.
///
/// Feed raw `atan2` outputs in sample order; consecutive true angles must
/// differ by less than pi for the reconstruction to be unambiguous.
#[derive(Debug, Default, Clone)]
pub struct AngleUnwrapper {
    prev: Option<f64>,
}

impl AngleUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unwrap(&mut self, angle: f64) -> f64 {
        let out = match self.prev {
            None => angle,
            Some(prev) => {
                let delta = (angle - prev).sin().atan2((angle - prev).cos());
                prev + delta
            }
        };
        self.prev = Some(out);
        out
    }
}
