//! Arcs, closed curves and probe segments.
//!
//! Scatterers and probe-side geometries are smooth parametric curves supplied
//! as analytic closures (position plus derivative); the Nystrom solver needs
//! smooth parameterizations, so polyline input is deliberately not supported.
//! Constructors run sample-based regularity and simplicity checks: exact
//! self-intersection tests for analytic curves are out of scope and the
//! built-in arcs are known to be simple.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Point (or vector) in the plane.
pub type Point2 = nalgebra::Vector2<f64>;

type CurveFn = Arc<dyn Fn(f64) -> Point2 + Send + Sync>;

/// Minimum admissible |z'(s)| on the regularity sample grid.
const REGULARITY_FLOOR: f64 = 1e-6;
/// Sample count for the regularity check.
const REGULARITY_SAMPLES: usize = 10_000;
/// Sample count for the pairwise simplicity check.
const SIMPLICITY_SAMPLES: usize = 512;
/// Pairs closer than this many grid steps are exempt from the separation
/// test; local injectivity there is covered by the regularity check.
const SIMPLICITY_INDEX_GAP: usize = 16;
/// Minimum separation for distant parameter pairs, as a fraction of arc length.
const SIMPLICITY_TOL_FACTOR: f64 = 1e-3;

/// Smooth nonintersecting open arc `z(s)`, `s` in `[-1, 1]`.
#[derive(Clone)]
pub struct ParametricArc {
    position: CurveFn,
    derivative: CurveFn,
    label: String,
}

impl fmt::Debug for ParametricArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricArc")
            .field("label", &self.label)
            .finish()
    }
}

impl ParametricArc {
    /// Build an arc from position and derivative closures, checking
    /// regularity and simplicity on fine sample grids.
    pub fn new<P, D>(label: &str, position: P, derivative: D) -> Result<Self>
    where
        P: Fn(f64) -> Point2 + Send + Sync + 'static,
        D: Fn(f64) -> Point2 + Send + Sync + 'static,
    {
        let arc = Self {
            position: Arc::new(position),
            derivative: Arc::new(derivative),
            label: label.to_string(),
        };
        arc.check_regularity()?;
        arc.check_simplicity()?;
        Ok(arc)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Position `z(s)`. The caller is responsible for `s` in `[-1, 1]`.
    pub fn at(&self, s: f64) -> Point2 {
        (self.position)(s)
    }

    /// Derivative `z'(s)`. The caller is responsible for `s` in `[-1, 1]`.
    pub fn deriv_at(&self, s: f64) -> Point2 {
        (self.derivative)(s)
    }

    /// Range-checked position lookup.
    pub fn point(&self, s: f64) -> Result<Point2> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::invalid_argument(format!(
                "arc parameter {s} outside [-1, 1]"
            )));
        }
        Ok(self.at(s))
    }

    /// Equispaced sample polyline with `samples` points.
    pub fn polyline(&self, samples: usize) -> Vec<Point2> {
        assert!(samples >= 2);
        (0..samples)
            .map(|i| self.at(-1.0 + 2.0 * i as f64 / (samples - 1) as f64))
            .collect()
    }

    /// Arc length estimated from a sample polyline.
    pub fn length_estimate(&self, samples: usize) -> f64 {
        polyline_length(&self.polyline(samples))
    }

    fn check_regularity(&self) -> Result<()> {
        for i in 0..REGULARITY_SAMPLES {
            let s = -1.0 + 2.0 * i as f64 / (REGULARITY_SAMPLES - 1) as f64;
            let p = self.at(s);
            let d = self.deriv_at(s);
            if !p.x.is_finite() || !p.y.is_finite() || !d.x.is_finite() || !d.y.is_finite() {
                return Err(Error::invalid_argument(format!(
                    "arc '{}' is not finite at s = {s}",
                    self.label
                )));
            }
            if d.norm() < REGULARITY_FLOOR {
                return Err(Error::invalid_argument(format!(
                    "arc '{}' fails regularity at s = {s}: |z'| = {:.3e}",
                    self.label,
                    d.norm()
                )));
            }
        }
        Ok(())
    }

    fn check_simplicity(&self) -> Result<()> {
        let pts: Vec<Point2> = (0..SIMPLICITY_SAMPLES)
            .map(|i| self.at(-1.0 + 2.0 * i as f64 / (SIMPLICITY_SAMPLES - 1) as f64))
            .collect();
        let tol = SIMPLICITY_TOL_FACTOR * polyline_length(&pts);
        for i in 0..pts.len() {
            for j in (i + SIMPLICITY_INDEX_GAP)..pts.len() {
                if (pts[i] - pts[j]).norm() < tol {
                    return Err(Error::invalid_argument(format!(
                        "arc '{}' fails simplicity: samples {i} and {j} are {:.3e} apart",
                        self.label,
                        (pts[i] - pts[j]).norm()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Smooth simple closed curve `b(t)`, `t` in `[0, 2*pi)`.
#[derive(Clone)]
pub struct ClosedCurve {
    position: CurveFn,
    derivative: CurveFn,
    label: String,
}

impl fmt::Debug for ClosedCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedCurve")
            .field("label", &self.label)
            .finish()
    }
}

impl ClosedCurve {
    pub fn new<P, D>(label: &str, position: P, derivative: D) -> Result<Self>
    where
        P: Fn(f64) -> Point2 + Send + Sync + 'static,
        D: Fn(f64) -> Point2 + Send + Sync + 'static,
    {
        let curve = Self {
            position: Arc::new(position),
            derivative: Arc::new(derivative),
            label: label.to_string(),
        };
        curve.check_periodicity()?;
        curve.check_regularity()?;
        curve.check_simplicity()?;
        Ok(curve)
    }

    /// Circle of given radius around a center.
    pub fn circle(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid_argument(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        let label = format!("circle c=({},{}) r={}", center.x, center.y, radius);
        Self::new(
            &label,
            move |t: f64| center + radius * Point2::new(t.cos(), t.sin()),
            move |t: f64| radius * Point2::new(-t.sin(), t.cos()),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at(&self, t: f64) -> Point2 {
        (self.position)(t)
    }

    pub fn deriv_at(&self, t: f64) -> Point2 {
        (self.derivative)(t)
    }

    /// Curve length estimated from an equispaced parameter polyline.
    pub fn length_estimate(&self, samples: usize) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut len = 0.0;
        let mut prev = self.at(0.0);
        for i in 1..=samples {
            let p = self.at(two_pi * i as f64 / samples as f64);
            len += (p - prev).norm();
            prev = p;
        }
        len
    }

    fn check_periodicity(&self) -> Result<()> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let gap = (self.at(0.0) - self.at(two_pi)).norm();
        let scale = 1.0 + self.length_estimate(64);
        if gap > 1e-9 * scale {
            return Err(Error::invalid_argument(format!(
                "curve '{}' is not 2*pi-periodic: |b(0) - b(2*pi)| = {gap:.3e}",
                self.label
            )));
        }
        Ok(())
    }

    fn check_regularity(&self) -> Result<()> {
        let two_pi = 2.0 * std::f64::consts::PI;
        for i in 0..REGULARITY_SAMPLES {
            let t = two_pi * i as f64 / REGULARITY_SAMPLES as f64;
            let p = self.at(t);
            let d = self.deriv_at(t);
            if !p.x.is_finite() || !p.y.is_finite() || !d.x.is_finite() || !d.y.is_finite() {
                return Err(Error::invalid_argument(format!(
                    "curve '{}' is not finite at t = {t}",
                    self.label
                )));
            }
            if d.norm() < REGULARITY_FLOOR {
                return Err(Error::invalid_argument(format!(
                    "curve '{}' fails regularity at t = {t}: |b'| = {:.3e}",
                    self.label,
                    d.norm()
                )));
            }
        }
        Ok(())
    }

    fn check_simplicity(&self) -> Result<()> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let n = SIMPLICITY_SAMPLES;
        let pts: Vec<Point2> = (0..n)
            .map(|i| self.at(two_pi * i as f64 / n as f64))
            .collect();
        let tol = SIMPLICITY_TOL_FACTOR * self.length_estimate(n);
        for i in 0..n {
            for j in (i + 1)..n {
                // circular index distance; nearby parameters are exempt
                let gap = (j - i).min(n - (j - i));
                if gap < SIMPLICITY_INDEX_GAP {
                    continue;
                }
                if (pts[i] - pts[j]).norm() < tol {
                    return Err(Error::invalid_argument(format!(
                        "curve '{}' fails simplicity: samples {i} and {j} are {:.3e} apart",
                        self.label,
                        (pts[i] - pts[j]).norm()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Straight probe segment: center, unit direction, length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSegment {
    center: Point2,
    direction: Point2,
    length: f64,
}

impl ProbeSegment {
    pub fn new(center: Point2, direction: Point2, length: f64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid_argument(format!(
                "probe direction must be a unit vector, |d| = {}",
                direction.norm()
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid_argument(format!(
                "probe length must be positive, got {length}"
            )));
        }
        Ok(Self {
            center,
            direction,
            length,
        })
    }

    /// Vertical probe, direction (0, 1).
    pub fn vertical(center: Point2, length: f64) -> Result<Self> {
        Self::new(center, Point2::new(0.0, 1.0), length)
    }

    /// Horizontal probe, direction (1, 0).
    pub fn horizontal(center: Point2, length: f64) -> Result<Self> {
        Self::new(center, Point2::new(1.0, 0.0), length)
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn direction(&self) -> Point2 {
        self.direction
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// The two endpoints `c -/+ (L/2) d`.
    pub fn endpoints(&self) -> (Point2, Point2) {
        let half = 0.5 * self.length * self.direction;
        (self.center - half, self.center + half)
    }
}

/// The three built-in benchmark cracks, selected by id 1..3.
///
/// 1: the diagonal segment `(s, s)`;
/// 2: `(2 sin(pi/8 + (1+s) 3 pi/8) - 2/3, sin(pi/4 + (1+s) 3 pi/4))`;
/// 3: the sine graph `(s, sin(pi/4 + (1+s) 3 pi/4))`.
pub fn benchmark_arc(id: u32) -> Result<ParametricArc> {
    use std::f64::consts::PI;
    match id {
        1 => ParametricArc::new(
            "gamma1",
            |s| Point2::new(s, s),
            |_| Point2::new(1.0, 1.0),
        ),
        2 => ParametricArc::new(
            "gamma2",
            |s| {
                Point2::new(
                    2.0 * (PI / 8.0 + (1.0 + s) * 3.0 * PI / 8.0).sin() - 2.0 / 3.0,
                    (PI / 4.0 + (1.0 + s) * 3.0 * PI / 4.0).sin(),
                )
            },
            |s| {
                Point2::new(
                    2.0 * (3.0 * PI / 8.0) * (PI / 8.0 + (1.0 + s) * 3.0 * PI / 8.0).cos(),
                    (3.0 * PI / 4.0) * (PI / 4.0 + (1.0 + s) * 3.0 * PI / 4.0).cos(),
                )
            },
        ),
        3 => ParametricArc::new(
            "gamma3",
            |s| Point2::new(s, (PI / 4.0 + (1.0 + s) * 3.0 * PI / 4.0).sin()),
            |s| {
                Point2::new(
                    1.0,
                    (3.0 * PI / 4.0) * (PI / 4.0 + (1.0 + s) * 3.0 * PI / 4.0).cos(),
                )
            },
        ),
        other => Err(Error::invalid_argument(format!(
            "unknown benchmark arc id {other}, expected 1, 2 or 3"
        ))),
    }
}

/// Benchmark arc by CLI name ("gamma1" | "gamma2" | "gamma3").
pub fn arc_by_name(name: &str) -> Result<ParametricArc> {
    match name {
        "gamma1" => benchmark_arc(1),
        "gamma2" => benchmark_arc(2),
        "gamma3" => benchmark_arc(3),
        other => Err(Error::invalid_argument(format!(
            "unknown arc name '{other}', expected gamma1, gamma2 or gamma3"
        ))),
    }
}

/// Total length of a polyline.
pub fn polyline_length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Distance from a point to a polyline (segment distance, not vertex distance).
pub fn polyline_distance(pts: &[Point2], p: Point2) -> f64 {
    let mut best = f64::INFINITY;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ab = b - a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = (p - (a + t * ab)).norm();
        if d < best {
            best = d;
        }
    }
    best
}
