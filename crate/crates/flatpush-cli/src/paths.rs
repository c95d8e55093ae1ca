//! Geometric paths selectable on the command line: a few built-in
//! closed-form curves exercising the flatness maps, or a spline file.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use flatpush::flatness::{FlatJet, FlatPath};
use flatpush::splines::{fit_interpolating, BSplinePath};
use flatpush::Vec2;

/// A demo curve or a user-supplied spline, all parameterized on [0, 1].
pub enum PathSpec {
    /// Ellipse with 2:1 axes, one full turn.
    Ellipse,
    /// Figure eight: the ellipse's x sweep against a doubled y frequency.
    Eight,
    /// Interpolating quintic spline through a six-waypoint slalom.
    Slalom(BSplinePath),
    /// Two tangent ellipses glued into a C1 curve; the curvature jumps
    /// at the junction, which time laws must absorb.
    TwinEllipses,
    /// Clamped B-spline loaded from a JSON file.
    File(BSplinePath),
}

impl PathSpec {
    /// Accepts a built-in name or a file path.
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        match spec {
            "ellipse" => Ok(PathSpec::Ellipse),
            "eight" => Ok(PathSpec::Eight),
            "slalom" => Ok(PathSpec::Slalom(slalom_spline()?)),
            "twin-ellipses" => Ok(PathSpec::TwinEllipses),
            other => {
                let path = Path::new(other);
                if !path.exists() {
                    return Err(CliError::Input(format!(
                        "unknown path {other:?}: expected ellipse, eight, slalom, \
                         twin-ellipses, or an existing spline file"
                    )));
                }
                let text = fs::read_to_string(path)?;
                let spline: BSplinePath = serde_json::from_str(&text)?;
                Ok(PathSpec::File(spline))
            }
        }
    }
}

impl FlatPath for PathSpec {
    fn jet(&self, tau: f64) -> FlatJet {
        match self {
            PathSpec::Ellipse => ellipse_jet(tau),
            PathSpec::Eight => eight_jet(tau),
            PathSpec::Slalom(spline) => spline.eval_jet(tau, 4),
            PathSpec::TwinEllipses => twin_ellipses_jet(tau),
            PathSpec::File(spline) => spline.eval_jet(tau, 4),
        }
    }
}

fn ellipse_jet(tau: f64) -> FlatJet {
    let du = 2.0 * PI;
    let u = du * tau;
    let (s, c) = u.sin_cos();
    FlatJet::order4(
        Vec2::new(2.0 * c, s),
        Vec2::new(-2.0 * s, c) * du,
        Vec2::new(-2.0 * c, -s) * du.powi(2),
        Vec2::new(2.0 * s, -c) * du.powi(3),
        Vec2::new(2.0 * c, s) * du.powi(4),
    )
}

fn eight_jet(tau: f64) -> FlatJet {
    let du = 2.0 * PI;
    let u = du * tau;
    let (s, c) = u.sin_cos();
    let (s2, c2) = (2.0 * u).sin_cos();
    FlatJet::order4(
        Vec2::new(2.0 * c, s2),
        Vec2::new(-2.0 * s, 2.0 * c2) * du,
        Vec2::new(-2.0 * c, -4.0 * s2) * du.powi(2),
        Vec2::new(2.0 * s, -8.0 * c2) * du.powi(3),
        Vec2::new(2.0 * c, 16.0 * s2) * du.powi(4),
    )
}

/// Three quarter turns on an upper ellipse followed by three quarter
/// turns on its mirrored twin; the branches meet at the origin with a
/// common tangent.
fn twin_ellipses_jet(tau: f64) -> FlatJet {
    let du = 3.0 * PI;
    let u = du * tau;
    let (s, c) = u.sin_cos();
    if tau < 0.5 {
        FlatJet::order4(
            Vec2::new(4.0 * c, 2.0 * s + 2.0),
            Vec2::new(-4.0 * s, 2.0 * c) * du,
            Vec2::new(-4.0 * c, -2.0 * s) * du.powi(2),
            Vec2::new(4.0 * s, -2.0 * c) * du.powi(3),
            Vec2::new(4.0 * c, 2.0 * s) * du.powi(4),
        )
    } else {
        FlatJet::order4(
            Vec2::new(4.0 * c, -2.0 * s - 2.0),
            Vec2::new(-4.0 * s, -2.0 * c) * du,
            Vec2::new(-4.0 * c, 2.0 * s) * du.powi(2),
            Vec2::new(4.0 * s, 2.0 * c) * du.powi(3),
            Vec2::new(4.0 * c, -2.0 * s) * du.powi(4),
        )
    }
}

fn slalom_spline() -> Result<BSplinePath, CliError> {
    let waypoints = [
        Vec2::new(-2.0, -1.0),
        Vec2::new(-2.0, 1.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(0.0, -1.0),
        Vec2::new(2.0, -1.0),
        Vec2::new(2.0, 1.0),
    ];
    Ok(fit_interpolating(&waypoints, 5, 0)?)
}
