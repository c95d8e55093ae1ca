//! Motion planning toolkit for planar slider-pusher systems.
//!
//! A rectangular slider rests on a horizontal plane and is pushed along one
//! edge by a disc-shaped finger. Under quasi-static, frictionless-contact
//! assumptions the system is differentially flat: the slider's planar
//! position is a flat output, and every state and input can be written in
//! closed form in terms of that output and its derivatives. The crate
//! exploits a second structural property, invariance of the state geometry
//! to the pacing of the path coordinate, to split time-optimal planning
//! into a purely geometric problem followed by a small time-scaling
//! optimal control problem.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: kinematic models (rectangular and generalized radial
//!   geometry), geometric pressure factors, open-loop simulation.
//! * [`flatness`]: the flat projection and the inflation maps recovering
//!   states and inputs from output jets.
//! * [`splines`]: clamped B-spline paths with exact derivative jets.
//! * [`timelaw`]: mappings between geometric and time parametrizations,
//!   velocity profiles, and the squared-rate substitution used by the
//!   time planner.
//! * [`geometry`]: polygons, signed clearance, and planning scenes.
//! * [`planner`]: an SQP solver over dense quadratic subproblems, the
//!   geometric shortest-path stage, and the time-scaling stage.
//!
//! The `flatpush` binary in the companion crate exposes the planner and
//! simulation facilities on the command line.

pub mod flatness;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod planner;
pub mod splines;
pub mod timelaw;

/// Planar vector used for positions, velocities, and jet components.
pub type Vec2 = nalgebra::Vector2<f64>;
