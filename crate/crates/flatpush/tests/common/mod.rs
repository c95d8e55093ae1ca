//! Independent oracles shared by the acceptance tests: quadrature on
//! radial sections, brute-force geometric distances, and high-order
//! finite-difference stencils. Everything here is written against the
//! definitions, not against the library's own algorithms.

#![allow(dead_code)]

use flatpush::Vec2;

/// Adaptive Simpson integration with absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(m), f(hi));
    let whole = simpson(lo, hi, fa, fm, fb);
    recurse(f, lo, hi, fa, fm, fb, whole, tol, 40)
}

/// Radial extent of an `a` by `b` rectangle centered at the origin, for a
/// ray at angle `phi` in the first quadrant.
fn rect_radius(a: f64, b: f64, phi: f64) -> f64 {
    let corner = (b / a).atan();
    if phi <= corner {
        0.5 * a / phi.cos()
    } else {
        0.5 * b / phi.sin()
    }
}

/// Root-mean-square distance of the uniform rectangle: quadrature oracle.
///
/// In polar wedges the area integral of r^2 over a quadrant becomes the
/// angular integral of R(phi)^4 / 4, split at the corner angle where the
/// boundary expression switches faces.
pub fn beta1_quadrature(a: f64, b: f64) -> f64 {
    let corner = (b / a).atan();
    let half = std::f64::consts::FRAC_PI_2;
    let fourth = |phi: f64| 0.25 * rect_radius(a, b, phi).powi(4);
    let second = integrate(&fourth, 0.0, corner, 1e-13)
        + integrate(&fourth, corner, half, 1e-13);
    (4.0 * second / (a * b)).sqrt()
}

/// Mean distance of the uniform rectangle: quadrature oracle, same wedge
/// decomposition with R(phi)^3 / 3 as the angular integrand.
pub fn beta2_quadrature(a: f64, b: f64) -> f64 {
    let corner = (b / a).atan();
    let half = std::f64::consts::FRAC_PI_2;
    let third = |phi: f64| rect_radius(a, b, phi).powi(3) / 3.0;
    let mean =
        integrate(&third, 0.0, corner, 1e-13) + integrate(&third, corner, half, 1e-13);
    4.0 * mean / (a * b)
}

fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).perp(&(c - a))
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Distance between two segments: zero when they cross, otherwise the
/// smallest endpoint-to-segment distance.
pub fn segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b))
}

/// Gap between two disjoint polygons by exhaustive edge-pair search.
pub fn brute_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let (a0, a1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (b0, b1) = (b[j], b[(j + 1) % b.len()]);
            best = best.min(segment_distance(a0, a1, b0, b1));
        }
    }
    best
}

/// Nine-point central finite differences for derivatives 1 through 4.
///
/// The first two stencils are eighth-order, the last two sixth-order;
/// all are exact on polynomials up to degree 6, so on a quintic spline
/// span the only error is roundoff.
pub fn fd_derivatives<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> [f64; 4] {
    const D1: [f64; 9] = [
        1.0 / 280.0,
        -4.0 / 105.0,
        1.0 / 5.0,
        -4.0 / 5.0,
        0.0,
        4.0 / 5.0,
        -1.0 / 5.0,
        4.0 / 105.0,
        -1.0 / 280.0,
    ];
    const D2: [f64; 9] = [
        -1.0 / 560.0,
        8.0 / 315.0,
        -1.0 / 5.0,
        8.0 / 5.0,
        -205.0 / 72.0,
        8.0 / 5.0,
        -1.0 / 5.0,
        8.0 / 315.0,
        -1.0 / 560.0,
    ];
    const D3: [f64; 9] = [
        -7.0 / 240.0,
        3.0 / 10.0,
        -169.0 / 120.0,
        61.0 / 30.0,
        0.0,
        -61.0 / 30.0,
        169.0 / 120.0,
        -3.0 / 10.0,
        7.0 / 240.0,
    ];
    const D4: [f64; 9] = [
        7.0 / 240.0,
        -2.0 / 5.0,
        169.0 / 60.0,
        -122.0 / 15.0,
        91.0 / 8.0,
        -122.0 / 15.0,
        169.0 / 60.0,
        -2.0 / 5.0,
        7.0 / 240.0,
    ];
    let samples: Vec<f64> = (-4..=4).map(|j| f(x + j as f64 * h)).collect();
    let apply = |c: &[f64; 9], power: i32| -> f64 {
        c.iter().zip(&samples).map(|(ci, fi)| ci * fi).sum::<f64>() / h.powi(power)
    };
    [apply(&D1, 1), apply(&D2, 2), apply(&D3, 3), apply(&D4, 4)]
}

/// Rectangle outline in polar form, valid piecewise per face; the
/// derivative matches wherever the boundary is smooth.
pub fn rect_outline(
    a: f64,
    b: f64,
) -> (impl Fn(f64) -> f64 + Send + Sync, impl Fn(f64) -> f64 + Send + Sync) {
    let wrap = |phi: f64| {
        let tau = std::f64::consts::TAU;
        let mut p = phi % tau;
        if p > std::f64::consts::PI {
            p -= tau;
        } else if p < -std::f64::consts::PI {
            p += tau;
        }
        p
    };
    let corner = (a / b).atan();
    let r = move |phi: f64| {
        let phi = wrap(phi);
        if phi.abs() <= corner {
            b / (2.0 * phi.cos())
        } else if phi.abs() >= std::f64::consts::PI - corner {
            -b / (2.0 * phi.cos())
        } else {
            a / (2.0 * phi.sin().abs())
        }
    };
    let rp = move |phi: f64| {
        let phi = wrap(phi);
        if phi.abs() <= corner {
            b / 2.0 * phi.sin() / (phi.cos() * phi.cos())
        } else if phi.abs() >= std::f64::consts::PI - corner {
            -b / 2.0 * phi.sin() / (phi.cos() * phi.cos())
        } else {
            -a / 2.0 * phi.signum() * phi.cos() / (phi.sin() * phi.sin())
        }
    };
    (r, rp)
}
