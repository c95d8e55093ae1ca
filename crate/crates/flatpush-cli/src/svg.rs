//! Minimal static SVG writer. Shapes accumulate in world coordinates;
//! rendering fits them into a fixed-width viewport with y pointing up.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use flatpush::Vec2;

pub struct Svg {
    shapes: Vec<Shape>,
}

struct Shape {
    points: Vec<Vec2>,
    closed: bool,
    stroke: &'static str,
    width: f64,
    fill: &'static str,
}

impl Svg {
    pub fn new() -> Self {
        Self { shapes: Vec::new() }
    }

    pub fn polyline(&mut self, points: Vec<Vec2>, stroke: &'static str, width: f64) {
        self.shapes.push(Shape { points, closed: false, stroke, width, fill: "none" });
    }

    pub fn polygon(
        &mut self,
        points: Vec<Vec2>,
        stroke: &'static str,
        width: f64,
        fill: &'static str,
    ) {
        self.shapes.push(Shape { points, closed: true, stroke, width, fill });
    }

    /// Small diamond marker centered at `at`.
    pub fn marker(&mut self, at: Vec2, radius: f64, fill: &'static str) {
        let points = vec![
            at + Vec2::new(radius, 0.0),
            at + Vec2::new(0.0, radius),
            at + Vec2::new(-radius, 0.0),
            at + Vec2::new(0.0, -radius),
        ];
        self.polygon(points, "none", 0.0, fill);
    }

    pub fn render(&self, pixel_width: f64) -> String {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for shape in &self.shapes {
            for p in &shape.points {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        if !(lo.x.is_finite() && hi.x.is_finite()) {
            lo = Vec2::new(0.0, 0.0);
            hi = Vec2::new(1.0, 1.0);
        }
        let span = Vec2::new((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
        let margin = 0.05 * span.x.max(span.y);
        let scale = pixel_width / (span.x + 2.0 * margin);
        let pixel_height = (span.y + 2.0 * margin) * scale;
        let place = |p: Vec2| ((p.x - lo.x + margin) * scale, (hi.y - p.y + margin) * scale);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1}\" height=\"{:.1}\" \
             viewBox=\"0 0 {:.1} {:.1}\">",
            pixel_width, pixel_height, pixel_width, pixel_height
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{pixel_width:.1}\" height=\"{pixel_height:.1}\" \
             fill=\"#ffffff\"/>"
        );
        for shape in &self.shapes {
            if shape.points.is_empty() {
                continue;
            }
            let tag = if shape.closed { "polygon" } else { "polyline" };
            let mut coords = String::new();
            for (i, &p) in shape.points.iter().enumerate() {
                let (x, y) = place(p);
                if i > 0 {
                    coords.push(' ');
                }
                let _ = write!(coords, "{x:.2},{y:.2}");
            }
            let _ = writeln!(
                out,
                "<{tag} points=\"{coords}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{:.2}\"/>",
                shape.fill, shape.stroke, shape.width
            );
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn save(&self, path: &Path, pixel_width: f64) -> io::Result<()> {
        fs::write(path, self.render(pixel_width))
    }
}
