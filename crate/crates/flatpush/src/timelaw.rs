//! Time parameterization of geometric paths.
//!
//! A plan is split into a geometric path `zeta(tau)` on `[0, 1]` and a
//! monotone clock map `tau(t)`. This module converts between the two
//! views: [`compose_jet`] turns path jets plus clock jets into time jets
//! for the flatness maps, [`tau_jet_from_velocity`] builds clock jets
//! from a prescribed ground speed, [`tau_jet_from_z`] from the squared
//! parameter rate used by the time-optimal planner, and
//! [`reprofile`] / [`tau_from_velocity`] / [`tau_from_curvature`]
//! integrate whole clock trajectories along a path.

use crate::flatness::{FlatJet, FlatPath};
use crate::numerics::{integrate_adaptive, rk4_step};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimelawError {
    #[error("path speed {speed} at tau = {tau} is too small to reparameterize")]
    SingularPath { tau: f64, speed: f64 },
    #[error("invalid speed profile: {0}")]
    InvalidProfile(String),
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("need at least one grid interval, got {0}")]
    InvalidGrid(usize),
}

/// Clock value and time derivatives of the path parameter at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauJet {
    pub tau: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl TauJet {
    /// Identity clock: time runs along the parameter unchanged.
    pub fn identity(tau: f64) -> Self {
        Self { tau, d1: 1.0, d2: 0.0, d3: 0.0, d4: 0.0 }
    }
}

/// Reciprocal path speed `psi = 1 / |zeta'|` and its parameter
/// derivatives, the bridge between ground speed and parameter rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiJet {
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Squared parameter rate `z(tau) = (dtau/dt)^2` with parameter
/// derivatives up to third order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZState {
    pub z: f64,
    pub dz: f64,
    pub ddz: f64,
    pub dddz: f64,
}

/// Chain rule for jets: compose a geometric jet with a clock jet to get
/// the time jet of `zeta(tau(t))`.
///
/// The composed order matches the geometric jet's order.
pub fn compose_jet(geo: &FlatJet, tau: &TauJet) -> FlatJet {
    let (t1, t2, t3, t4) = (tau.d1, tau.d2, tau.d3, tau.d4);
    FlatJet {
        zeta: geo.zeta,
        d1: t1 * geo.d1,
        d2: t2 * geo.d1 + t1 * t1 * geo.d2,
        d3: t3 * geo.d1 + 3.0 * t1 * t2 * geo.d2 + t1.powi(3) * geo.d3,
        d4: t4 * geo.d1
            + (4.0 * t1 * t3 + 3.0 * t2 * t2) * geo.d2
            + 6.0 * t1 * t1 * t2 * geo.d3
            + t1.powi(4) * geo.d4,
        order: geo.order,
    }
}

/// Time jet of a path ridden with the given clock jet.
pub fn time_jet(path: &impl FlatPath, tau: &TauJet) -> FlatJet {
    compose_jet(&path.jet(tau.tau), tau)
}

/// Reciprocal speed jet of a geometric jet (order at least 2 for `d1`,
/// 3 for `d2`, 4 for `d3`; missing tails come out as if zero).
pub fn psi_jet(geo: &FlatJet) -> Result<PsiJet, TimelawError> {
    let g = geo.d1.norm();
    if g < crate::flatness::SPEED_FLOOR {
        return Err(TimelawError::SingularPath { tau: f64::NAN, speed: g });
    }
    let u = geo.d1.dot(&geo.d2);
    let w2 = geo.d2.norm_squared() + geo.d1.dot(&geo.d3);
    let w3 = 3.0 * geo.d2.dot(&geo.d3) + geo.d1.dot(&geo.d4);
    let g1 = u / g;
    let g2 = w2 / g - u * u / g.powi(3);
    let g3 = w3 / g - 3.0 * u * w2 / g.powi(3) + 3.0 * u.powi(3) / g.powi(5);
    Ok(PsiJet {
        psi: 1.0 / g,
        d1: -g1 / (g * g),
        d2: -g2 / (g * g) + 2.0 * g1 * g1 / g.powi(3),
        d3: -g3 / (g * g) + 6.0 * g1 * g2 / g.powi(3) - 6.0 * g1.powi(3) / g.powi(4),
    })
}

/// Clock jet from a ground-speed jet `v = [v, dv, ddv, dddv]` and the
/// reciprocal path speed at the current parameter value.
///
/// Encodes `dtau/dt = psi(tau) v(t)` and its three time derivatives.
pub fn tau_jet_from_velocity(psi: &PsiJet, v: &[f64; 4], tau: f64) -> TauJet {
    let d1 = psi.psi * v[0];
    let d2 = psi.d1 * d1 * v[0] + psi.psi * v[1];
    let d3 = psi.d2 * d1 * d1 * v[0] + psi.d1 * d2 * v[0] + 2.0 * psi.d1 * d1 * v[1]
        + psi.psi * v[2];
    let d4 = psi.d3 * d1.powi(3) * v[0]
        + 3.0 * psi.d2 * d1 * d2 * v[0]
        + psi.d1 * d3 * v[0]
        + 3.0 * psi.d2 * d1 * d1 * v[1]
        + 3.0 * psi.d1 * d2 * v[1]
        + 3.0 * psi.d1 * d1 * v[2]
        + psi.psi * v[3];
    TauJet { tau, d1, d2, d3, d4 }
}

/// Clock jet from the squared parameter rate `z` and its parameter
/// derivatives: `dtau/dt = sqrt(z)`.
///
/// The chain collapses so that no division by `sqrt(z)` survives in the
/// higher rows, keeping them finite as `z` approaches zero.
pub fn tau_jet_from_z(zs: &ZState, tau: f64) -> TauJet {
    let sqrt_z = zs.z.max(0.0).sqrt();
    TauJet {
        tau,
        d1: sqrt_z,
        d2: 0.5 * zs.dz,
        d3: 0.5 * sqrt_z * zs.ddz,
        d4: 0.5 * zs.z * zs.dddz + 0.25 * zs.dz * zs.ddz,
    }
}

/// Arc length of a path over its unit parameter domain.
pub fn path_length(path: &impl FlatPath) -> f64 {
    integrate_adaptive(&|tau| path.jet(tau).d1.norm(), 0.0, 1.0, 1e-10)
}

/// Duration of a piecewise-linear squared-rate profile on a uniform
/// parameter grid with spacing `tau_step`.
///
/// Each interval contributes `2 dtau / (sqrt(z_k) + sqrt(z_k1))`, the
/// exact value of `integral dtau / sqrt(z)` for affine `z`, which stays
/// finite when an endpoint rate vanishes.
pub fn grid_duration(z: &[f64], tau_step: f64) -> f64 {
    z.windows(2).map(|w| 2.0 * tau_step / (w[0].max(0.0).sqrt() + w[1].max(0.0).sqrt())).sum()
}

/// Ground-speed law for riding a geometric path.
#[derive(Clone)]
pub enum VelocityProfile {
    /// Constant ground speed.
    Constant { v0: f64 },
    /// Ramp up at rate `a0` for `delta`, cruise, ramp down for `delta`.
    /// Requires a duration of at least `2 delta`.
    Trapezoid { a0: f64, delta: f64 },
    /// Slow down with path curvature: the parameter rate follows
    /// `psi / (kappa0 + kappa)`. Not a time-domain speed, so
    /// [`VelocityProfile::eval`] returns `None` for it.
    Curvature { kappa0: f64 },
    /// Arbitrary smooth speed jet `t -> [v, dv, ddv, dddv]`.
    Custom(Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>),
}

impl std::fmt::Debug for VelocityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant { v0 } => f.debug_struct("Constant").field("v0", v0).finish(),
            Self::Trapezoid { a0, delta } => {
                f.debug_struct("Trapezoid").field("a0", a0).field("delta", delta).finish()
            }
            Self::Curvature { kappa0 } => {
                f.debug_struct("Curvature").field("kappa0", kappa0).finish()
            }
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl VelocityProfile {
    /// Speed jet at time `t` for a run of duration `t_end`, or `None` for
    /// the curvature law, which lives in the parameter domain.
    ///
    /// At the trapezoid's corner times the jet of the segment being
    /// entered is reported.
    pub fn eval(&self, t: f64, t_end: f64) -> Option<[f64; 4]> {
        match self {
            Self::Constant { v0 } => Some([*v0, 0.0, 0.0, 0.0]),
            Self::Trapezoid { a0, delta } => {
                let v = a0 * t.min(*delta).min(t_end - t);
                let dv = if t < *delta {
                    *a0
                } else if t > t_end - delta {
                    -*a0
                } else {
                    0.0
                };
                Some([v, dv, 0.0, 0.0])
            }
            Self::Curvature { .. } => None,
            Self::Custom(f) => Some(f(t)),
        }
    }

    /// Times inside `(0, t_end)` where the speed jet is discontinuous.
    fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        match self {
            Self::Trapezoid { delta, .. } => vec![*delta, t_end - delta],
            _ => Vec::new(),
        }
    }

    fn validate(&self, t_end: f64) -> Result<(), TimelawError> {
        match self {
            Self::Constant { v0 } if !(v0.is_finite() && *v0 > 0.0) => {
                Err(TimelawError::InvalidProfile(format!("constant speed must be positive, got {v0}")))
            }
            Self::Trapezoid { a0, delta } => {
                if !(a0.is_finite() && *a0 > 0.0 && delta.is_finite() && *delta > 0.0) {
                    return Err(TimelawError::InvalidProfile(format!(
                        "trapezoid needs positive a0 and delta, got a0 = {a0}, delta = {delta}"
                    )));
                }
                if t_end < 2.0 * delta {
                    return Err(TimelawError::InvalidProfile(format!(
                        "trapezoid ramps need t_end >= 2 delta, got t_end = {t_end}, delta = {delta}"
                    )));
                }
                Ok(())
            }
            Self::Curvature { kappa0 } if !(kappa0.is_finite() && *kappa0 > 0.0) => {
                Err(TimelawError::InvalidProfile(format!(
                    "curvature law needs kappa0 > 0, got {kappa0}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A clock trajectory: parameter jets sampled on a (possibly non-uniform)
/// time grid covering `[0, t_end]`, plus the scale factor `eta` that was
/// applied to the law so the path completes exactly at `t_end`.
#[derive(Debug, Clone)]
pub struct TauTrajectory {
    pub t: Vec<f64>,
    pub jets: Vec<TauJet>,
    pub eta: f64,
}

impl TauTrajectory {
    pub fn duration(&self) -> f64 {
        *self.t.last().expect("trajectory holds at least one node")
    }

    /// Clock jet at an arbitrary time, by cubic Hermite interpolation of
    /// each derivative level between the bracketing nodes. Exact at nodes.
    pub fn tau_at(&self, t: f64) -> TauJet {
        let t = t.clamp(self.t[0], self.duration());
        let i = match self.t.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.jets[i],
            Err(i) => i.clamp(1, self.t.len() - 1) - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (a, b) = (&self.jets[i], &self.jets[i + 1]);
        let hermite = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + d0 * h * (s3 - 2.0 * s2 + s)
                + y1 * (-2.0 * s3 + 3.0 * s2)
                + d1 * h * (s3 - s2)
        };
        let lerp = |y0: f64, y1: f64| y0 + (y1 - y0) * s;
        TauJet {
            tau: hermite(a.tau, a.d1, b.tau, b.d1),
            d1: hermite(a.d1, a.d2, b.d1, b.d2),
            d2: hermite(a.d2, a.d3, b.d2, b.d3),
            d3: hermite(a.d3, a.d4, b.d3, b.d4),
            d4: lerp(a.d4, b.d4),
        }
    }
}

/// Ride `path` with a time-domain speed law, scaled so the whole path is
/// covered in exactly `t_end`; `k` sets the integration resolution.
///
/// The clock satisfies `dtau/dt = psi(tau) eta v(t)` integrated with
/// fixed-step fourth-order Runge-Kutta on a grid aligned with the law's
/// breakpoints. The reported `eta` is the speed multiplier
/// `path_length / integral of v`.
pub fn tau_from_velocity(
    path: &impl FlatPath,
    profile: &VelocityProfile,
    t_end: f64,
    k: usize,
) -> Result<TauTrajectory, TimelawError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(TimelawError::InvalidDuration(t_end));
    }
    if k == 0 {
        return Err(TimelawError::InvalidGrid(k));
    }
    profile.validate(t_end)?;
    if matches!(profile, VelocityProfile::Curvature { .. }) {
        return Err(TimelawError::InvalidProfile(
            "curvature law has no time-domain speed; use tau_from_curvature".into(),
        ));
    }
    let speed = |t: f64| {
        profile.eval(t, t_end).expect("curvature law is dispatched separately")[0]
    };

    // Segment the run at speed-jet discontinuities so every integration
    // step sees a smooth law.
    let mut cuts = vec![0.0];
    for b in profile.breakpoints(t_end) {
        if b > cuts[cuts.len() - 1] + 1e-12 && b < t_end - 1e-12 {
            cuts.push(b);
        }
    }
    cuts.push(t_end);

    let length = path_length(path);
    let mut ride = 0.0;
    for w in cuts.windows(2) {
        ride += integrate_adaptive(&speed, w[0], w[1], 1e-12);
    }
    if !(ride.is_finite() && ride > 0.0) {
        return Err(TimelawError::InvalidProfile(format!(
            "speed law covers no distance over [0, {t_end}] (integral {ride})"
        )));
    }
    let eta = length / ride;

    let psi_at = |tau: f64| -> Result<PsiJet, TimelawError> {
        psi_jet(&path.jet(tau.clamp(0.0, 1.0)))
            .map_err(|_| TimelawError::SingularPath {
                tau,
                speed: path.jet(tau.clamp(0.0, 1.0)).d1.norm(),
            })
    };
    // Fallible RK4: stash the first path singularity instead of unwinding.
    let failure = std::cell::RefCell::new(None);
    let rhs = |t: f64, y: &[f64; 1]| match psi_at(y[0]) {
        Ok(p) => [p.psi * eta * speed(t.min(t_end))],
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            [0.0]
        }
    };
    let mut t = 0.0;
    let mut tau = [0.0f64];
    let mut times = vec![0.0];
    let mut taus = vec![0.0f64];
    for w in cuts.windows(2) {
        let seg = w[1] - w[0];
        let steps = ((seg / t_end * k as f64).ceil() as usize).max(1);
        let h = seg / steps as f64;
        for i in 0..steps {
            tau = rk4_step(&rhs, t, &tau, h);
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
            t = w[0] + (i + 1) as f64 * h;
            times.push(t);
            taus.push(tau[0].min(1.0));
        }
    }

    let mut jets = Vec::with_capacity(times.len());
    for (&t, &tau) in times.iter().zip(&taus) {
        let mut v = profile.eval(t, t_end).expect("time-domain law");
        for d in &mut v {
            *d *= eta;
        }
        jets.push(tau_jet_from_velocity(&psi_at(tau)?, &v, tau));
    }
    Ok(TauTrajectory { t: times, jets, eta })
}

/// Ride `path` slowing down with curvature: the parameter rate is
/// proportional to `psi / (kappa0 + kappa)`, scaled by `eta` so the run
/// takes exactly `t_end`.
///
/// The law's parameter derivatives are obtained by finite differences of
/// the rate function, which is smooth wherever the path is.
pub fn tau_from_curvature(
    path: &impl FlatPath,
    kappa0: f64,
    t_end: f64,
    k: usize,
) -> Result<TauTrajectory, TimelawError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(TimelawError::InvalidDuration(t_end));
    }
    if k == 0 {
        return Err(TimelawError::InvalidGrid(k));
    }
    VelocityProfile::Curvature { kappa0 }.validate(t_end)?;

    let chi = |tau: f64| -> Result<f64, TimelawError> {
        let tau = tau.clamp(0.0, 1.0);
        let geo = path.jet(tau);
        let psi = psi_jet(&geo).map_err(|_| TimelawError::SingularPath {
            tau,
            speed: geo.d1.norm(),
        })?;
        let bend = psi.psi * psi.psi * geo.d2 + psi.d1 * psi.psi * geo.d1;
        Ok(psi.psi / (kappa0 + bend.norm()))
    };
    // Probe once so singular paths error out before quadrature.
    chi(0.0)?;
    chi(1.0)?;
    let chi_ok = |tau: f64| chi(tau).unwrap_or(f64::NAN);
    let inv_time = integrate_adaptive(&|tau| 1.0 / chi_ok(tau), 0.0, 1.0, 1e-10);
    if !inv_time.is_finite() {
        return Err(TimelawError::SingularPath { tau: f64::NAN, speed: 0.0 });
    }
    let eta = inv_time / t_end;

    // Rate jets in tau by central differences; stencils near the domain
    // ends are re-centered inward, trading a small bias for staying off
    // the clamped-path kinks at 0 and 1.
    let fd = 1e-4;
    let chi_jet = |tau: f64| -> Result<[f64; 4], TimelawError> {
        let c = tau.clamp(2.0 * fd, 1.0 - 2.0 * fd);
        let f: Vec<f64> = (-2..=2)
            .map(|i| chi(c + i as f64 * fd))
            .collect::<Result<_, _>>()?;
        let d0 = chi(tau)?;
        let d1 = (f[3] - f[1]) / (2.0 * fd);
        let d2 = (f[3] - 2.0 * f[2] + f[1]) / (fd * fd);
        let d3 = (f[4] - 2.0 * f[3] + 2.0 * f[1] - f[0]) / (2.0 * fd * fd * fd);
        Ok([d0, d1, d2, d3])
    };

    let failure = std::cell::RefCell::new(None);
    let rhs = |_t: f64, y: &[f64; 1]| match chi(y[0]) {
        Ok(c) => [eta * c],
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            [0.0]
        }
    };
    let mut t = 0.0;
    let mut tau = [0.0f64];
    let mut times = vec![0.0];
    let mut taus = vec![0.0f64];
    let h = t_end / k as f64;
    for i in 0..k {
        tau = rk4_step(&rhs, t, &tau, h);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        t = (i + 1) as f64 * h;
        times.push(t);
        taus.push(tau[0].min(1.0));
    }

    let mut jets = Vec::with_capacity(times.len());
    for &tau in &taus {
        let c = chi_jet(tau)?;
        let d1 = eta * c[0];
        let d2 = eta * c[1] * d1;
        let d3 = eta * (c[2] * d1 * d1 + c[1] * d2);
        let d4 = eta * (c[3] * d1.powi(3) + 3.0 * c[2] * d1 * d2 + c[1] * d3);
        jets.push(TauJet { tau, d1, d2, d3, d4 });
    }
    Ok(TauTrajectory { t: times, jets, eta })
}

/// Dispatch a speed law to the matching clock integrator.
pub fn reprofile(
    path: &impl FlatPath,
    profile: &VelocityProfile,
    t_end: f64,
    k: usize,
) -> Result<TauTrajectory, TimelawError> {
    match profile {
        VelocityProfile::Curvature { kappa0 } => tau_from_curvature(path, *kappa0, t_end, k),
        _ => tau_from_velocity(path, profile, t_end, k),
    }
}
