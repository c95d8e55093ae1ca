//! Clamped B-spline paths for the flat output.
//!
//! Geometric plans are carried by planar B-spline curves: they give exact
//! polynomial jets to any order, their convex-hull and endpoint properties
//! suit constraint handling, and degree 5 provides the C4 continuity the
//! input inflation needs. [`BSplinePath`] evaluates jets via the standard
//! knot-span recurrences; [`fit_interpolating`] builds a path through
//! waypoints, minimizing bending energy when control points outnumber
//! interpolation conditions.

use crate::flatness::{FlatJet, FlatPath};
use crate::Vec2;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("spline degree must be at least 1, got {0}")]
    InvalidDegree(usize),
    #[error("need at least degree + 1 = {needed} control points, got {got}")]
    TooFewControl { needed: usize, got: usize },
    #[error("knot vector must have control + degree + 1 = {expected} entries, got {got}")]
    KnotCount { expected: usize, got: usize },
    #[error("knot vector must be non-decreasing with a positive span")]
    BadKnots,
    #[error("knot vector must be clamped (first and last knots repeated degree + 1 times)")]
    NotClamped,
    #[error("need at least two distinct waypoints")]
    TooFewWaypoints,
    #[error("waypoint spacing collapsed; chord parameterization is undefined")]
    DegenerateChords,
    #[error("{control} control points cannot interpolate {waypoints} waypoints")]
    TooFewControlForFit { control: usize, waypoints: usize },
    #[error("interpolation system is singular for this waypoint layout")]
    SingularFit,
    #[error("interpolation residual {0} exceeds the fit tolerance")]
    FitResidual(f64),
}

/// Planar clamped B-spline curve.
///
/// The parameter domain is the clamped knot range, `[0, 1]` for every
/// curve this crate constructs. Jets are exact polynomial derivatives,
/// so the curve can feed the flatness maps directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawBSpline", try_from = "RawBSpline")]
pub struct BSplinePath {
    degree: usize,
    knots: Vec<f64>,
    control: Vec<Vec2>,
}

#[derive(Serialize, Deserialize)]
struct RawBSpline {
    degree: usize,
    knots: Vec<f64>,
    control_points: Vec<[f64; 2]>,
}

impl From<BSplinePath> for RawBSpline {
    fn from(path: BSplinePath) -> Self {
        Self {
            degree: path.degree,
            knots: path.knots,
            control_points: path.control.iter().map(|p| [p.x, p.y]).collect(),
        }
    }
}

impl TryFrom<RawBSpline> for BSplinePath {
    type Error = SplineError;

    fn try_from(raw: RawBSpline) -> Result<Self, SplineError> {
        BSplinePath::new(
            raw.degree,
            raw.knots,
            raw.control_points.iter().map(|&[x, y]| Vec2::new(x, y)).collect(),
        )
    }
}

impl BSplinePath {
    pub fn new(degree: usize, knots: Vec<f64>, control: Vec<Vec2>) -> Result<Self, SplineError> {
        if degree < 1 {
            return Err(SplineError::InvalidDegree(degree));
        }
        if control.len() < degree + 1 {
            return Err(SplineError::TooFewControl { needed: degree + 1, got: control.len() });
        }
        let expected = control.len() + degree + 1;
        if knots.len() != expected {
            return Err(SplineError::KnotCount { expected, got: knots.len() });
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) || !knots.iter().all(|k| k.is_finite()) {
            return Err(SplineError::BadKnots);
        }
        let n = control.len();
        if knots[degree] >= knots[n] {
            return Err(SplineError::BadKnots);
        }
        if knots[..=degree].iter().any(|&k| k != knots[0])
            || knots[n..].iter().any(|&k| k != knots[expected - 1])
        {
            return Err(SplineError::NotClamped);
        }
        Ok(Self { degree, knots, control })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn control_points(&self) -> &[Vec2] {
        &self.control
    }

    /// Clamped parameter range `(start, end)`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.control.len()])
    }

    /// Index of the knot span containing `t` (clamped to the domain).
    fn find_span(&self, t: f64) -> usize {
        let n = self.control.len() - 1;
        let p = self.degree;
        if t >= self.knots[n + 1] {
            // Rightmost non-empty span keeps the basis well-defined at the
            // end of the domain.
            let mut span = n;
            while self.knots[span] == self.knots[span + 1] {
                span -= 1;
            }
            return span;
        }
        if t <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, n + 1);
        let mut mid = (lo + hi) / 2;
        while t < self.knots[mid] || t >= self.knots[mid + 1] {
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Nonzero basis functions and derivatives at `t`: `ders[k][j]` is the
    /// k-th derivative of basis `span - degree + j`.
    fn basis_derivatives(&self, span: usize, t: f64, n_ders: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let du = n_ders.min(p);
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; n_ders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=du {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                    d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=du {
            for j in 0..=p {
                ders[k][j] *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Curve point and derivatives up to `order` (at most 4) at `t`,
    /// clamped to the domain. Derivatives beyond the degree are zero.
    pub fn eval_jet(&self, t: f64, order: usize) -> FlatJet {
        let order = order.min(4);
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let span = self.find_span(t);
        let ders = self.basis_derivatives(span, t, order);
        let mut d = [Vec2::zeros(); 5];
        for (k, slot) in d.iter_mut().enumerate().take(order + 1) {
            if k < ders.len() {
                for j in 0..=self.degree {
                    *slot += ders[k][j] * self.control[span - self.degree + j];
                }
            }
        }
        FlatJet { zeta: d[0], d1: d[1], d2: d[2], d3: d[3], d4: d[4], order }
    }

    /// Basis row at `t`: the `control.len()` basis values (mostly zero).
    pub(crate) fn basis_row(&self, t: f64) -> Vec<f64> {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let span = self.find_span(t);
        let ders = self.basis_derivatives(span, t, 0);
        let mut row = vec![0.0; self.control.len()];
        for j in 0..=self.degree {
            row[span - self.degree + j] = ders[0][j];
        }
        row
    }

    /// Replace the control points, keeping degree and knots.
    pub(crate) fn with_control(&self, control: Vec<Vec2>) -> Self {
        assert_eq!(control.len(), self.control.len());
        Self { degree: self.degree, knots: self.knots.clone(), control }
    }
}

impl FlatPath for BSplinePath {
    fn jet(&self, tau: f64) -> FlatJet {
        self.eval_jet(tau, 4)
    }
}

/// Clamped knot vector on `[0, 1]` with evenly spaced interior knots, for
/// `n_control` control points at the given degree.
pub fn clamped_uniform_knots(n_control: usize, degree: usize) -> Vec<f64> {
    let interior = n_control.saturating_sub(degree + 1);
    let mut knots = vec![0.0; degree + 1];
    for i in 1..=interior {
        knots.push(i as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    knots
}

/// Chord-length parameter values in `[0, 1]` for a waypoint sequence.
pub fn chord_parameters(waypoints: &[Vec2]) -> Result<Vec<f64>, SplineError> {
    if waypoints.len() < 2 {
        return Err(SplineError::TooFewWaypoints);
    }
    let mut params = vec![0.0];
    let mut acc = 0.0;
    for w in waypoints.windows(2) {
        acc += (w[1] - w[0]).norm();
        params.push(acc);
    }
    if acc <= 0.0 {
        return Err(SplineError::DegenerateChords);
    }
    for p in &mut params {
        *p /= acc;
    }
    Ok(params)
}

/// Interpolate `waypoints` with a clamped degree-`degree` spline carrying
/// `interior` evenly spaced interior knots.
///
/// Waypoints sit at chord-length parameters. With exactly as many control
/// points as waypoints the interpolation system is solved directly; with
/// more, the spare freedom minimizes the bending energy (integral of the
/// squared second derivative). The result is checked to pass through the
/// waypoints to 1e-9.
pub fn fit_interpolating(
    waypoints: &[Vec2],
    degree: usize,
    interior: usize,
) -> Result<BSplinePath, SplineError> {
    let m = waypoints.len();
    let n = interior + degree + 1;
    if n < m {
        return Err(SplineError::TooFewControlForFit { control: n, waypoints: m });
    }
    let params = chord_parameters(waypoints)?;
    let skeleton =
        BSplinePath::new(degree, clamped_uniform_knots(n, degree), vec![Vec2::zeros(); n])?;

    let mut a = DMatrix::zeros(m, n);
    for (i, &u) in params.iter().enumerate() {
        let row = skeleton.basis_row(u);
        for (j, &v) in row.iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let rhs_x = DVector::from_iterator(m, waypoints.iter().map(|w| w.x));
    let rhs_y = DVector::from_iterator(m, waypoints.iter().map(|w| w.y));

    let (sol_x, sol_y) = if n == m {
        let lu = a.clone().lu();
        let x = lu.solve(&rhs_x).ok_or(SplineError::SingularFit)?;
        let y = lu.solve(&rhs_y).ok_or(SplineError::SingularFit)?;
        (x, y)
    } else {
        // Minimum bending energy subject to interpolation, solved as a KKT
        // system [2G, A^T; A, 0]. G is assembled by per-span quadrature
        // that is exact for the polynomial integrand.
        let g = bending_gram(&skeleton);
        let dim = n + m;
        let mut kkt = DMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = 2.0 * g[(i, j)];
            }
        }
        for i in 0..m {
            for j in 0..n {
                kkt[(n + i, j)] = a[(i, j)];
                kkt[(j, n + i)] = a[(i, j)];
            }
        }
        let mut rhs = DMatrix::zeros(dim, 2);
        for i in 0..m {
            rhs[(n + i, 0)] = waypoints[i].x;
            rhs[(n + i, 1)] = waypoints[i].y;
        }
        let sol = kkt.lu().solve(&rhs).ok_or(SplineError::SingularFit)?;
        (sol.column(0).rows(0, n).into_owned(), sol.column(1).rows(0, n).into_owned())
    };

    let control: Vec<Vec2> = (0..n).map(|j| Vec2::new(sol_x[j], sol_y[j])).collect();
    let path = skeleton.with_control(control);
    let residual = params
        .iter()
        .zip(waypoints)
        .map(|(&u, w)| (path.eval_jet(u, 0).zeta - w).norm())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(SplineError::FitResidual(residual));
    }
    Ok(path)
}

/// Gram matrix of second derivatives of the basis functions.
fn bending_gram(skeleton: &BSplinePath) -> DMatrix<f64> {
    let p = skeleton.degree();
    let n = skeleton.control_points().len();
    let knots = skeleton.knots();
    let (nodes, weights) = crate::numerics::gauss_legendre(p + 1);
    let mut g = DMatrix::zeros(n, n);
    for span in p..n {
        let (lo, hi) = (knots[span], knots[span + 1]);
        if hi <= lo {
            continue;
        }
        for (node, weight) in nodes.iter().zip(&weights) {
            let t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * node;
            let w = 0.5 * (hi - lo) * weight;
            let ders = skeleton.basis_derivatives(span, t, 2);
            for j in 0..=p {
                for k in 0..=p {
                    g[(span - p + j, span - p + k)] += w * ders[2][j] * ders[2][k];
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bezier() -> BSplinePath {
        BSplinePath::new(
            2,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 2.0), Vec2::new(2.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn quadratic_bezier_midpoint_and_derivatives() {
        let path = bezier();
        let jet = path.eval_jet(0.5, 2);
        assert_relative_eq!(jet.zeta.x, 1.0);
        assert_relative_eq!(jet.zeta.y, 1.0);
        assert_relative_eq!(jet.d1.x, 2.0);
        assert_relative_eq!(jet.d1.y, 0.0);
        assert_relative_eq!(jet.d2.x, 0.0);
        assert_relative_eq!(jet.d2.y, -8.0);
        // Endpoints land on the first and last control points.
        assert_relative_eq!(path.eval_jet(0.0, 0).zeta.x, 0.0);
        assert_relative_eq!(path.eval_jet(1.0, 0).zeta.x, 2.0);
    }

    #[test]
    fn quintic_bezier_endpoint_jets_match_difference_formulas() {
        // Single-span degree 5: derivatives at t = 0 are scaled forward
        // differences of the control polygon, an exact oracle.
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.3, 1.0),
            Vec2::new(1.1, 1.4),
            Vec2::new(2.0, 0.8),
            Vec2::new(2.7, -0.4),
            Vec2::new(3.5, 0.2),
        ];
        let path = BSplinePath::new(
            5,
            vec![0.0; 6].into_iter().chain(vec![1.0; 6]).collect(),
            pts.to_vec(),
        )
        .unwrap();
        let jet = path.eval_jet(0.0, 4);
        let d1 = 5.0 * (pts[1] - pts[0]);
        let d2 = 20.0 * (pts[2] - 2.0 * pts[1] + pts[0]);
        let d3 = 60.0 * (pts[3] - 3.0 * pts[2] + 3.0 * pts[1] - pts[0]);
        let d4 = 120.0 * (pts[4] - 4.0 * pts[3] + 6.0 * pts[2] - 4.0 * pts[1] + pts[0]);
        assert_relative_eq!(jet.d1, d1, epsilon = 1e-12);
        assert_relative_eq!(jet.d2, d2, epsilon = 1e-12);
        assert_relative_eq!(jet.d3, d3, epsilon = 1e-11);
        assert_relative_eq!(jet.d4, d4, epsilon = 1e-10);
    }

    #[test]
    fn greville_control_reproduces_affine_paths() {
        // Control points sampled from an affine map at the Greville
        // abscissae must reproduce the map exactly, with vanishing higher
        // derivatives: a joint test of basis values and derivative scaling.
        let (n, p) = (9, 5);
        let knots = clamped_uniform_knots(n, p);
        let control: Vec<Vec2> = (0..n)
            .map(|j| {
                let g = knots[j + 1..j + 1 + p].iter().sum::<f64>() / p as f64;
                Vec2::new(2.0 * g - 1.0, 3.0 * g)
            })
            .collect();
        let path = BSplinePath::new(p, knots, control).unwrap();
        for i in 0..=32 {
            let t = i as f64 / 32.0;
            let jet = path.eval_jet(t, 4);
            assert_abs_diff_eq!(jet.zeta.x, 2.0 * t - 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(jet.zeta.y, 3.0 * t, epsilon = 1e-12);
            assert_abs_diff_eq!(jet.d1.x, 2.0, epsilon = 1e-11);
            assert_abs_diff_eq!(jet.d1.y, 3.0, epsilon = 1e-11);
            for d in [jet.d2, jet.d3, jet.d4] {
                assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn jets_match_finite_differences_midspan() {
        let pts: Vec<Vec2> = (0..9)
            .map(|j| {
                let s = j as f64;
                Vec2::new(s + (1.3 * s).sin(), 0.5 * s * s / 9.0 + (0.7 * s).cos())
            })
            .collect();
        let path = BSplinePath::new(5, clamped_uniform_knots(9, 5), pts).unwrap();
        let f = |t: f64| path.eval_jet(t, 0).zeta;
        // Small step for low orders (truncation-limited), larger for high
        // orders (roundoff-limited); stencils stay inside one knot span.
        let h = 1e-4;
        let g = 2e-3;
        for &t in &[0.125, 0.375, 0.625, 0.875] {
            let jet = path.eval_jet(t, 4);
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let d3 = (f(t + 2.0 * g) - 2.0 * f(t + g) + 2.0 * f(t - g) - f(t - 2.0 * g))
                / (2.0 * g * g * g);
            let d4 = (f(t + 2.0 * g) - 4.0 * f(t + g) + 6.0 * f(t) - 4.0 * f(t - g)
                + f(t - 2.0 * g))
                / (g * g * g * g);
            assert_relative_eq!(jet.d1, d1, epsilon = 1e-6, max_relative = 1e-5);
            assert_relative_eq!(jet.d2, d2, epsilon = 1e-3, max_relative = 1e-3);
            assert_relative_eq!(jet.d3, d3, epsilon = 1.0, max_relative = 1e-2);
            assert_relative_eq!(jet.d4, d4, epsilon = 10.0, max_relative = 1e-2);
        }
    }

    #[test]
    fn clamped_uniform_knots_layout() {
        assert_eq!(clamped_uniform_knots(6, 5), vec![0.0; 6].into_iter().chain(vec![1.0; 6]).collect::<Vec<_>>());
        assert_eq!(
            clamped_uniform_knots(7, 3),
            vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0]
        );
    }

    fn zigzag() -> Vec<Vec2> {
        vec![
            Vec2::new(-2.0, -1.0),
            Vec2::new(-2.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(2.0, -1.0),
            Vec2::new(2.0, 1.0),
        ]
    }

    #[test]
    fn interpolation_hits_waypoints_square_case() {
        let pts = zigzag();
        let path = fit_interpolating(&pts, 5, 0).unwrap();
        assert_eq!(path.control_points().len(), 6);
        let params = chord_parameters(&pts).unwrap();
        for (u, w) in params.iter().zip(&pts) {
            assert_abs_diff_eq!((path.eval_jet(*u, 0).zeta - w).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn interpolation_hits_waypoints_energy_case() {
        let pts = zigzag();
        for interior in [1, 3, 6] {
            let path = fit_interpolating(&pts, 5, interior).unwrap();
            assert_eq!(path.control_points().len(), interior + 6);
            let params = chord_parameters(&pts).unwrap();
            for (u, w) in params.iter().zip(&pts) {
                assert_abs_diff_eq!((path.eval_jet(*u, 0).zeta - w).norm(), 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn energy_fit_prefers_straighter_paths() {
        // On collinear waypoints the minimum-energy interpolant is the
        // straight segment itself.
        let pts: Vec<Vec2> =
            (0..4).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        let path = fit_interpolating(&pts, 3, 4).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let jet = path.eval_jet(t, 2);
            assert_abs_diff_eq!(jet.zeta.y, 2.0 * jet.zeta.x, epsilon = 1e-8);
            assert_abs_diff_eq!(jet.d2.norm(), 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn fit_rejects_bad_setups() {
        assert!(matches!(
            fit_interpolating(&zigzag(), 3, 0),
            Err(SplineError::TooFewControlForFit { .. })
        ));
        assert!(matches!(
            fit_interpolating(&[Vec2::zeros()], 3, 2),
            Err(SplineError::TooFewWaypoints)
        ));
        let same = vec![Vec2::new(1.0, 1.0); 4];
        assert!(matches!(fit_interpolating(&same, 3, 0), Err(SplineError::DegenerateChords)));
    }

    #[test]
    fn constructor_validates_structure() {
        assert!(BSplinePath::new(0, vec![0.0, 1.0], vec![Vec2::zeros(); 1]).is_err());
        assert!(BSplinePath::new(
            2,
            vec![0.0, 0.0, 0.0, 1.0, 1.0],
            vec![Vec2::zeros(); 3]
        )
        .is_err());
        assert!(BSplinePath::new(
            2,
            vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0],
            vec![Vec2::zeros(); 3]
        )
        .is_err());
        assert!(BSplinePath::new(
            2,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.9],
            vec![Vec2::zeros(); 3]
        )
        .is_err());
    }

    #[test]
    fn serde_round_trip_uses_control_points_field() {
        let path = bezier();
        let json = serde_json::to_string(&path).unwrap();
        assert!(json.contains("control_points"));
        let back: BSplinePath = serde_json::from_str(&json).unwrap();
        assert_eq!(path, back);
        assert!(serde_json::from_str::<BSplinePath>(
            r#"{"degree": 2, "knots": [0,0,0,1,1,1], "control_points": [[0,0],[1,1]]}"#
        )
        .is_err());
    }

    #[test]
    fn evaluation_clamps_to_domain() {
        let path = bezier();
        let lo = path.eval_jet(-0.5, 1);
        let hi = path.eval_jet(1.5, 1);
        assert_eq!(lo.zeta, path.eval_jet(0.0, 1).zeta);
        assert_eq!(hi.zeta, path.eval_jet(1.0, 1).zeta);
    }
}
