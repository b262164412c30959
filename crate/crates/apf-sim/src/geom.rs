//! Tolerance-aware planar geometry.
//!
//! All comparisons between lengths, radii and angles go through the process
//! wide tolerance configured by [`set_tolerance`]: two quantities `a` and `b`
//! are considered equal when `|a - b| <= eps_abs + eps_rel * max(|a|, |b|)`.
//! The default of `1e-9` for both knobs is appropriate for configurations
//! normalised so that the initial enclosing circle has unit radius.

use std::sync::atomic::{AtomicU64, Ordering};

/// Default absolute and relative tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Distance under which two stopped robots (or a robot and its target) are
/// merged onto the same coordinates by the simulation engine.
pub const SNAP_EPS: f64 = 1e-7;

static EPS_ABS: AtomicU64 = AtomicU64::new(0);
static EPS_REL: AtomicU64 = AtomicU64::new(0);

fn load(cell: &AtomicU64) -> f64 {
    let bits = cell.load(Ordering::Relaxed);
    if bits == 0 {
        DEFAULT_EPS
    } else {
        f64::from_bits(bits)
    }
}

/// Sets the process-wide comparison tolerance. Passing `None` keeps the
/// corresponding knob unchanged.
pub fn set_tolerance(eps_abs: Option<f64>, eps_rel: Option<f64>) {
    if let Some(a) = eps_abs {
        EPS_ABS.store(a.to_bits(), Ordering::Relaxed);
    }
    if let Some(r) = eps_rel {
        EPS_REL.store(r.to_bits(), Ordering::Relaxed);
    }
}

/// Current absolute tolerance.
pub fn eps_abs() -> f64 {
    load(&EPS_ABS)
}

/// Current relative tolerance.
pub fn eps_rel() -> f64 {
    load(&EPS_REL)
}

/// Comparison tolerance for two magnitudes.
pub fn tol(a: f64, b: f64) -> f64 {
    eps_abs() + eps_rel() * a.abs().max(b.abs())
}

/// `a` and `b` are equal within tolerance.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= tol(a, b)
}

/// `a <= b` within tolerance.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + tol(a, b)
}

/// `a >= b` within tolerance.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a + tol(a, b) >= b
}

/// `a < b` by more than the tolerance.
pub fn approx_lt(a: f64, b: f64) -> bool {
    a < b - tol(a, b)
}

/// `a > b` by more than the tolerance.
pub fn approx_gt(a: f64, b: f64) -> bool {
    a > b + tol(a, b)
}

/// `a` is zero within tolerance.
pub fn approx_zero(a: f64) -> bool {
    approx_eq(a, 0.0)
}

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self × o`.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }

    /// Unit vector in the direction of `self`; the zero vector is returned
    /// unchanged.
    pub fn normalize(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    /// Rotation by `angle` radians around the origin (counter-clockwise).
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rotation by `angle` radians around `center`.
    pub fn rotate_about(self, center: Point, angle: f64) -> Point {
        self.sub(center).rotate(angle).add(center)
    }

    /// Mirror image across the line through `a` with direction `dir`.
    pub fn reflect_across(self, a: Point, dir: Point) -> Point {
        let d = dir.normalize();
        let v = self.sub(a);
        let proj = d.scale(v.dot(d));
        a.add(proj.scale(2.0).sub(v))
    }

    /// Linear interpolation: `self` at `t = 0`, `o` at `t = 1`.
    pub fn lerp(self, o: Point, t: f64) -> Point {
        self.add(o.sub(self).scale(t))
    }

    /// Polar angle in `[-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// The two points coincide within tolerance (measured as a distance, with
    /// the relative part scaled by the larger of the two norms).
    pub fn approx_eq(self, o: Point) -> bool {
        self.dist(o) <= eps_abs() + eps_rel() * self.norm().max(o.norm())
    }

    /// Exact total order on coordinate bits; used only to make choices
    /// deterministic when the alternatives are geometrically equivalent.
    pub fn canonical_cmp(self, o: Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then_with(|| self.y.total_cmp(&o.y))
    }
}

/// Unsigned angle at vertex `c` between the rays `c -> x` and `c -> y`,
/// in `[0, pi]`.
pub fn angle_at(c: Point, x: Point, y: Point) -> f64 {
    let u = x.sub(c);
    let v = y.sub(c);
    u.cross(v).abs().atan2(u.dot(v))
}

/// Counter-clockwise angle in `[0, 2*pi)` that takes the ray `c -> from` onto
/// the ray `c -> to`.
pub fn ccw_angle(c: Point, from: Point, to: Point) -> f64 {
    let u = from.sub(c);
    let v = to.sub(c);
    let a = v.angle() - u.angle();
    normalize_angle(a)
}

/// Normalises an angle into `[0, 2*pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    if r >= two_pi {
        r = 0.0;
    }
    r
}

/// A circle with center and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Circle {
        Circle { center, radius }
    }

    /// `p` lies inside or on the circle (within tolerance).
    pub fn contains(&self, p: Point) -> bool {
        approx_le(self.center.dist(p), self.radius)
    }

    /// `p` lies on the circle (within tolerance).
    pub fn on_boundary(&self, p: Point) -> bool {
        approx_eq(self.center.dist(p), self.radius)
    }

    /// `p` lies strictly inside the circle (by more than the tolerance).
    pub fn strictly_inside(&self, p: Point) -> bool {
        approx_lt(self.center.dist(p), self.radius)
    }

    /// Point on the circle at the given polar angle.
    pub fn point_at(&self, angle: f64) -> Point {
        self.center
            .add(Point::new(angle.cos(), angle.sin()).scale(self.radius))
    }

    /// Polar angle of `p` as seen from the center.
    pub fn angle_of(&self, p: Point) -> f64 {
        p.sub(self.center).angle()
    }

    /// Radial projection of `p` onto the circle. `p` must not coincide with
    /// the center.
    pub fn project(&self, p: Point) -> Point {
        self.center
            .add(p.sub(self.center).normalize().scale(self.radius))
    }

    /// The two circles coincide within tolerance.
    pub fn approx_eq(&self, o: &Circle) -> bool {
        self.center.approx_eq(o.center) && approx_eq(self.radius, o.radius)
    }
}

/// Intersections of the segment `[a, b]` with a circle, as `(t, point)` pairs
/// with `t` in `[0, 1]`, ordered by increasing `t`.
pub fn segment_circle_intersections(a: Point, b: Point, c: &Circle) -> Vec<(f64, Point)> {
    let d = b.sub(a);
    let f = a.sub(c.center);
    let qa = d.norm2();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - c.radius * c.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    // Treat near-tangency as tangency so that radial moves that merely touch a
    // circle are still detected.
    let scale = qa.max(qb.abs()).max(qc.abs());
    let mut out = Vec::new();
    if disc < -tol(disc, scale * scale) {
        return out;
    }
    let sq = disc.max(0.0).sqrt();
    let mut ts = [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
    ts.sort_by(f64::total_cmp);
    let ttol = tol(1.0, 1.0);
    for (i, &t) in ts.iter().enumerate() {
        if i == 1 && approx_zero(sq) {
            break; // tangency: report a single point
        }
        if t >= -ttol && t <= 1.0 + ttol {
            let tc = t.clamp(0.0, 1.0);
            out.push((tc, a.lerp(b, tc)));
        }
    }
    out
}

/// First intersection of the ray `origin + t * dir (t >= 0)` with a circle.
pub fn ray_circle_first_hit(origin: Point, dir: Point, c: &Circle) -> Option<(f64, Point)> {
    let d = dir;
    let f = origin.sub(c.center);
    let qa = d.norm2();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - c.radius * c.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
        if t >= -tol(1.0, 1.0) {
            let tc = t.max(0.0);
            return Some((tc, origin.add(d.scale(tc))));
        }
    }
    None
}

/// Intersections of the full line through `origin` with direction `dir` and a
/// circle (zero, one or two points).
pub fn line_circle_intersections(origin: Point, dir: Point, c: &Circle) -> Vec<Point> {
    let d = dir;
    let f = origin.sub(c.center);
    let qa = d.norm2();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - c.radius * c.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    let scale = qa.max(qb.abs()).max(qc.abs());
    if disc < -tol(disc, scale * scale) {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    let mut out = vec![origin.add(d.scale((-qb - sq) / (2.0 * qa)))];
    if !approx_zero(sq) {
        out.push(origin.add(d.scale((-qb + sq) / (2.0 * qa))));
    }
    out
}

/// `p` lies on the closed segment `[a, b]` (within tolerance).
pub fn point_on_segment(p: Point, a: Point, b: Point) -> bool {
    let seg = b.sub(a);
    let len2 = seg.norm2();
    if approx_zero(len2) {
        return p.approx_eq(a);
    }
    let t = p.sub(a).dot(seg) / len2;
    let tt = t.clamp(0.0, 1.0);
    p.approx_eq(a.add(seg.scale(tt)))
}

/// Circle through two points: the one with the segment as its diameter.
pub fn circle_from_two(a: Point, b: Point) -> Circle {
    Circle::new(a.lerp(b, 0.5), a.dist(b) / 2.0)
}

/// Circumcircle of three points; `None` when they are (nearly) collinear.
pub fn circumcircle(a: Point, b: Point, c: Point) -> Option<Circle> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let scale = a.norm().max(b.norm()).max(c.norm()).max(1.0);
    if d.abs() <= 1e-14 * scale * scale {
        return None;
    }
    let a2 = a.norm2();
    let b2 = b.norm2();
    let c2 = c.norm2();
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point::new(ux, uy);
    let radius = center.dist(a).max(center.dist(b)).max(center.dist(c));
    Some(Circle::new(center, radius))
}

fn circle_from_boundary(boundary: &[Point]) -> Circle {
    match boundary.len() {
        0 => Circle::new(Point::ORIGIN, 0.0),
        1 => Circle::new(boundary[0], 0.0),
        2 => circle_from_two(boundary[0], boundary[1]),
        _ => circumcircle(boundary[0], boundary[1], boundary[2])
            .unwrap_or_else(|| widest_two_point_circle(boundary)),
    }
}

fn widest_two_point_circle(points: &[Point]) -> Circle {
    let mut best = Circle::new(points[0], 0.0);
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            let c = circle_from_two(a, b);
            if c.radius > best.radius {
                best = c;
            }
        }
    }
    best
}

fn welzl(points: &mut Vec<Point>, boundary: &mut Vec<Point>, n: usize) -> Circle {
    if n == 0 || boundary.len() == 3 {
        return circle_from_boundary(boundary);
    }
    let p = points[n - 1];
    let c = welzl(points, boundary, n - 1);
    // A slightly enlarged containment test keeps the recursion numerically
    // stable without changing the result beyond the tolerance.
    if c.center.dist(p) <= c.radius * (1.0 + 1e-12) + 1e-14 {
        return c;
    }
    boundary.push(p);
    let c = welzl(points, boundary, n - 1);
    boundary.pop();
    c
}

/// Smallest enclosing circle of a non-empty multiset of points.
///
/// Uses Welzl's algorithm over a deterministic shuffle, so the result is
/// reproducible across runs and platforms for identical input order.
pub fn smallest_enclosing_circle(points: &[Point]) -> Circle {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    assert!(!points.is_empty(), "enclosing circle of an empty set");
    // Duplicate positions do not affect the circle; deduplicate exactly to
    // keep the recursion shallow.
    let mut distinct: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if !distinct.iter().any(|q| q.x == p.x && q.y == p.y) {
            distinct.push(p);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EC0_5EC0);
    distinct.shuffle(&mut rng);
    let n = distinct.len();
    let mut boundary = Vec::with_capacity(3);
    welzl(&mut distinct, &mut boundary, n)
}

/// Indices of the points lying on the boundary of `circle` (within
/// tolerance).
pub fn boundary_indices(points: &[Point], circle: &Circle) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| circle.on_boundary(**p))
        .map(|(i, _)| i)
        .collect()
}

/// A point of a multiset is critical when removing one instance of it changes
/// the smallest enclosing circle.
pub fn is_critical(points: &[Point], idx: usize) -> bool {
    let full = smallest_enclosing_circle(points);
    let mut rest: Vec<Point> = Vec::with_capacity(points.len() - 1);
    for (i, &p) in points.iter().enumerate() {
        if i != idx {
            rest.push(p);
        }
    }
    if rest.is_empty() {
        return true;
    }
    let reduced = smallest_enclosing_circle(&rest);
    !full.approx_eq(&reduced)
}

/// The family of circles centered on the enclosing-circle center that pass
/// through at least one point of the multiset.
///
/// Radii are clustered with the comparison tolerance, sorted increasingly and
/// exclude zero; whether the center itself is occupied is tracked separately.
/// By convention the upward family starts with the degenerate circle of
/// radius zero (the center), and the downward family ends with it.
#[derive(Debug, Clone)]
pub struct ConcentricFamily {
    pub center: Point,
    /// Strictly positive occupied radii, increasing.
    pub radii: Vec<f64>,
    /// Number of points on each positive circle, parallel to `radii`.
    pub counts: Vec<usize>,
    /// Number of points at the center.
    pub center_count: usize,
}

impl ConcentricFamily {
    pub fn build(points: &[Point], center: Point) -> ConcentricFamily {
        let mut ds: Vec<f64> = points.iter().map(|p| p.dist(center)).collect();
        ds.sort_by(f64::total_cmp);
        let mut radii: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut center_count = 0usize;
        for d in ds {
            if approx_zero(d) {
                center_count += 1;
            } else if let Some(last) = radii.last().copied() {
                if approx_eq(last, d) {
                    *counts.last_mut().unwrap() += 1;
                } else {
                    radii.push(d);
                    counts.push(1);
                }
            } else {
                radii.push(d);
                counts.push(1);
            }
        }
        ConcentricFamily {
            center,
            radii,
            counts,
            center_count,
        }
    }

    /// Radius of the i-th circle counted upward from the center; index 0 is
    /// the center itself (radius zero) whether or not it is occupied.
    pub fn up_radius(&self, i: usize) -> Option<f64> {
        if i == 0 {
            Some(0.0)
        } else {
            self.radii.get(i - 1).copied()
        }
    }

    /// Radius of the i-th circle counted downward from the outermost one; the
    /// final index is the center (radius zero) whether or not it is occupied.
    pub fn down_radius(&self, i: usize) -> Option<f64> {
        let k = self.radii.len();
        if i < k {
            Some(self.radii[k - 1 - i])
        } else if i == k {
            Some(0.0)
        } else {
            None
        }
    }

    /// Number of points on the circle of the given positive radius index
    /// (0-based into `radii`).
    pub fn count_at(&self, radius: f64) -> usize {
        if approx_zero(radius) {
            return self.center_count;
        }
        for (r, c) in self.radii.iter().zip(&self.counts) {
            if approx_eq(*r, radius) {
                return *c;
            }
        }
        0
    }

    /// Radius of the outermost circle (zero when all points sit on the
    /// center).
    pub fn delta0(&self) -> f64 {
        self.down_radius(0).unwrap_or(0.0)
    }

    /// Radius of the second circle from the outside; zero when it does not
    /// exist.
    pub fn delta1(&self) -> f64 {
        self.down_radius(1).unwrap_or(0.0)
    }

    /// Radius of the third circle from the outside; zero when it does not
    /// exist.
    pub fn delta2(&self) -> f64 {
        self.down_radius(2).unwrap_or(0.0)
    }

    /// Radius `(delta0 + delta1) / 2` of the first intermediate landing
    /// circle.
    pub fn delta01(&self) -> f64 {
        (self.delta0() + self.delta1()) / 2.0
    }

    /// Radius `(delta0 + delta2) / 2` of the second intermediate landing
    /// circle.
    pub fn delta02(&self) -> f64 {
        (self.delta0() + self.delta2()) / 2.0
    }

    /// Points of `points` lying on the circle with the given radius around
    /// the family center.
    pub fn points_on<'a>(&self, points: &'a [Point], radius: f64) -> Vec<(usize, Point)> {
        points
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| approx_eq(p.dist(self.center), radius))
            .collect()
    }
}

/// Guard and teleporter circles.
///
/// Given the radius `d` of the innermost positive circle of the (rescaled)
/// pattern, the guard circle has radius `d / 2^i` and the teleporter circle
/// radius `d / 2^(i-1)`, for the minimal `i > 1` such that, in the current
/// configuration:
///
/// * the open guard disk contains no robot except possibly at the center;
/// * the open teleporter disk minus the open guard disk contains at most one
///   robot (this region includes the guard circle itself);
/// * at most one robot lies on the teleporter circle.
///
/// The scan is cut off at `i = 64`; beyond that the circles are reported as
/// undefined, which in turn makes every dependent predicate false.
pub fn guard_teleporter_circles(
    points: &[Point],
    center: Point,
    d: f64,
) -> Option<(Circle, Circle)> {
    if !(d > 0.0) {
        return None;
    }
    let dists: Vec<f64> = points.iter().map(|p| p.dist(center)).collect();
    for i in 2u32..=64 {
        let rg = d / f64::powi(2.0, i as i32);
        let rt = d / f64::powi(2.0, i as i32 - 1);
        if rg <= 0.0 || !rg.is_finite() {
            break;
        }
        let mut interior_guard = 0usize;
        let mut annulus = 0usize;
        let mut on_teleporter = 0usize;
        for &dist in &dists {
            if approx_zero(dist) {
                continue; // robots at the center are always allowed
            }
            let strictly_in_guard = approx_lt(dist, rg);
            let strictly_in_tele = approx_lt(dist, rt);
            if strictly_in_guard {
                interior_guard += 1;
            } else if strictly_in_tele {
                annulus += 1; // includes robots sitting on the guard circle
            }
            if approx_eq(dist, rt) {
                on_teleporter += 1;
            }
        }
        if interior_guard == 0 && annulus <= 1 && on_teleporter <= 1 {
            return Some((Circle::new(center, rg), Circle::new(center, rt)));
        }
    }
    None
}

/// Reference angle of a pattern: one third of the smallest central angle
/// between distinct points on the pattern's enclosing circle.
pub fn reference_angle(boundary: &[Point], center: Point) -> f64 {
    let mut min_angle = f64::INFINITY;
    for (i, &x) in boundary.iter().enumerate() {
        for &y in &boundary[i + 1..] {
            if x.approx_eq(y) {
                continue;
            }
            let a = angle_at(center, x, y);
            if a < min_angle {
                min_angle = a;
            }
        }
    }
    assert!(
        min_angle.is_finite(),
        "reference angle needs two distinct boundary points"
    );
    min_angle / 3.0
}

/// A movement path: a chain of straight segments and circular arcs.
#[derive(Debug, Clone)]
pub enum PathSeg {
    Line {
        from: Point,
        to: Point,
    },
    /// Circular arc starting at angle `start` and sweeping by `sweep`
    /// radians (positive = counter-clockwise).
    Arc {
        circle: Circle,
        start: f64,
        sweep: f64,
    },
}

impl PathSeg {
    pub fn length(&self) -> f64 {
        match self {
            PathSeg::Line { from, to } => from.dist(*to),
            PathSeg::Arc { circle, sweep, .. } => circle.radius * sweep.abs(),
        }
    }

    pub fn start_point(&self) -> Point {
        match self {
            PathSeg::Line { from, .. } => *from,
            PathSeg::Arc { circle, start, .. } => circle.point_at(*start),
        }
    }

    pub fn end_point(&self) -> Point {
        match self {
            PathSeg::Line { to, .. } => *to,
            PathSeg::Arc {
                circle,
                start,
                sweep,
            } => circle.point_at(start + sweep),
        }
    }

    /// Point at the given fraction of this segment's arc length.
    pub fn point_at(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        match self {
            PathSeg::Line { from, to } => from.lerp(*to, t),
            PathSeg::Arc {
                circle,
                start,
                sweep,
            } => circle.point_at(start + sweep * t),
        }
    }
}

/// A polyline/arc path with arc-length parametrisation.
#[derive(Debug, Clone)]
pub struct Path {
    pub segs: Vec<PathSeg>,
}

impl Path {
    pub fn line(from: Point, to: Point) -> Path {
        Path {
            segs: vec![PathSeg::Line { from, to }],
        }
    }

    /// Arc on `circle` from the angle of `from` sweeping by `sweep` radians.
    pub fn arc(circle: Circle, from: Point, sweep: f64) -> Path {
        let start = circle.angle_of(from);
        Path {
            segs: vec![PathSeg::Arc {
                circle,
                start,
                sweep,
            }],
        }
    }

    pub fn length(&self) -> f64 {
        self.segs.iter().map(PathSeg::length).sum()
    }

    pub fn start_point(&self) -> Point {
        self.segs.first().expect("empty path").start_point()
    }

    pub fn end_point(&self) -> Point {
        self.segs.last().expect("empty path").end_point()
    }

    /// Point at fraction `t` of the total arc length.
    pub fn point_at(&self, t: f64) -> Point {
        let total = self.length();
        if total == 0.0 {
            return self.start_point();
        }
        let mut remaining = t.clamp(0.0, 1.0) * total;
        for seg in &self.segs {
            let len = seg.length();
            if remaining <= len || len == 0.0 {
                if len == 0.0 {
                    continue;
                }
                return seg.point_at(remaining / len);
            }
            remaining -= len;
        }
        self.end_point()
    }

    /// Evenly spaced sample fractions (including both endpoints).
    pub fn sample_fractions(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

/// Nearest crossing, along the ray `origin + t * dir (t > 0)`, of the
/// boundary of the region of points at least as close to `site` as to every
/// point of `others`. Returns `None` when the ray never leaves the region.
pub fn voronoi_cell_ray_exit(
    origin: Point,
    dir: Point,
    site: Point,
    others: &[Point],
) -> Option<(f64, Point)> {
    let d = dir.normalize();
    let mut best: Option<f64> = None;
    for &s in others {
        if s.approx_eq(site) {
            continue;
        }
        // Points equidistant from `site` and `s` satisfy a linear equation.
        let m = site.lerp(s, 0.5);
        let n = s.sub(site); // normal pointing from the site's side to s's side
        let denom = d.dot(n);
        if denom.abs() < 1e-15 {
            continue;
        }
        let t = m.sub(origin).dot(n) / denom;
        if t <= tol(1.0, 1.0) {
            continue;
        }
        if denom > 0.0 {
            // The ray exits the half-plane that is closer to `site`.
            best = Some(best.map_or(t, |b| b.min(t)));
        }
    }
    // The exit of the intersection of half-planes is the nearest half-plane
    // exit that is still inside every other half-plane; because the cell is
    // convex and the origin may be outside it, verify the candidate.
    let t = best?;
    let p = origin.add(d.scale(t));
    Some((t, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// O(n^4) reference implementation: try every diameter pair and every
    /// circumcircle, keep the smallest circle covering all points.
    fn brute_force_sec(points: &[Point]) -> Circle {
        let covers = |c: &Circle| {
            points
                .iter()
                .all(|p| c.center.dist(*p) <= c.radius * (1.0 + 1e-9) + 1e-9)
        };
        let mut best: Option<Circle> = None;
        let mut consider = |c: Circle| {
            if covers(&c) && best.map_or(true, |b| c.radius < b.radius) {
                best = Some(c);
            }
        };
        if points.len() == 1 {
            return Circle::new(points[0], 0.0);
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                consider(circle_from_two(points[i], points[j]));
                for k in j + 1..points.len() {
                    if let Some(c) = circumcircle(points[i], points[j], points[k]) {
                        consider(c);
                    }
                }
            }
        }
        best.unwrap_or_else(|| Circle::new(points[0], 0.0))
    }

    #[test]
    fn sec_simple_cases() {
        let c = smallest_enclosing_circle(&[pt(0.0, 0.0)]);
        assert!(c.center.approx_eq(pt(0.0, 0.0)) && approx_zero(c.radius));

        let c = smallest_enclosing_circle(&[pt(-1.0, 0.0), pt(1.0, 0.0)]);
        assert!(c.center.approx_eq(Point::ORIGIN));
        assert!(approx_eq(c.radius, 1.0));

        // An obtuse triangle: circle determined by the longest side.
        let c = smallest_enclosing_circle(&[pt(0.0, 0.0), pt(4.0, 0.0), pt(1.0, 0.5)]);
        assert!(c.center.approx_eq(pt(2.0, 0.0)));
        assert!(approx_eq(c.radius, 2.0));

        // An acute triangle: circumcircle.
        let c = smallest_enclosing_circle(&[pt(0.0, 0.0), pt(2.0, 0.0), pt(1.0, 1.8)]);
        let expected = circumcircle(pt(0.0, 0.0), pt(2.0, 0.0), pt(1.0, 1.8)).unwrap();
        assert!(c.approx_eq(&expected));
    }

    #[test]
    fn sec_ignores_duplicates_and_interior() {
        let base = [pt(-1.0, 0.0), pt(1.0, 0.0), pt(0.0, 0.3), pt(0.0, 0.3)];
        let c = smallest_enclosing_circle(&base);
        assert!(approx_eq(c.radius, 1.0));
        assert!(c.center.approx_eq(Point::ORIGIN));
    }

    #[test]
    fn criticality_matches_definition() {
        // Two antipodal points are both critical; an interior point is not.
        let pts = [pt(-1.0, 0.0), pt(1.0, 0.0), pt(0.2, 0.1)];
        assert!(is_critical(&pts, 0));
        assert!(is_critical(&pts, 1));
        assert!(!is_critical(&pts, 2));

        // A duplicated boundary point is not critical: its twin remains.
        let pts = [pt(-1.0, 0.0), pt(1.0, 0.0), pt(1.0, 0.0)];
        assert!(!is_critical(&pts, 1));
        assert!(!is_critical(&pts, 2));

        // On a square every boundary point is redundant for the circle.
        let pts = [pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.0, 1.0), pt(0.0, -1.0)];
        for i in 0..4 {
            assert!(!is_critical(&pts, i));
        }
    }

    #[test]
    fn concentric_family_orders_radii() {
        let center = Point::ORIGIN;
        let pts = [
            pt(0.0, 0.0),
            pt(0.5, 0.0),
            pt(0.0, -0.5),
            pt(1.0, 0.0),
            pt(0.0, 1.0),
        ];
        let fam = ConcentricFamily::build(&pts, center);
        assert_eq!(fam.center_count, 1);
        assert_eq!(fam.radii.len(), 2);
        assert!(approx_eq(fam.up_radius(1).unwrap(), 0.5));
        assert!(approx_eq(fam.up_radius(2).unwrap(), 1.0));
        assert!(approx_eq(fam.down_radius(0).unwrap(), 1.0));
        assert!(approx_eq(fam.down_radius(1).unwrap(), 0.5));
        assert!(approx_eq(fam.down_radius(2).unwrap(), 0.0));
        assert_eq!(fam.down_radius(3), None);
        assert!(approx_eq(fam.delta0(), 1.0));
        assert!(approx_eq(fam.delta1(), 0.5));
        assert!(approx_eq(fam.delta2(), 0.0));
        assert!(approx_eq(fam.delta01(), 0.75));
        assert!(approx_eq(fam.delta02(), 0.5));
    }

    #[test]
    fn guard_scan_respects_occupancy() {
        // Robots on the unit circle only: the first attempt i = 2 works.
        let pts = [pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.0, 1.0)];
        let (g, t) = guard_teleporter_circles(&pts, Point::ORIGIN, 0.8).unwrap();
        assert!(approx_eq(g.radius, 0.2));
        assert!(approx_eq(t.radius, 0.4));

        // A robot strictly inside the would-be guard disk forces a smaller i.
        let pts = [pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.05, 0.0)];
        let (g, t) = guard_teleporter_circles(&pts, Point::ORIGIN, 0.8).unwrap();
        assert!(g.radius < 0.05 || approx_eq(g.radius, 0.05));
        // The interior robot must not be strictly inside the guard circle,
        // and the annulus budget of one robot must hold.
        assert!(!g.strictly_inside(pt(0.05, 0.0)));
        assert!(t.radius > g.radius);

        // A robot at the center never blocks the scan.
        let pts = [pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.0, 0.0)];
        assert!(guard_teleporter_circles(&pts, Point::ORIGIN, 0.8).is_some());

        // Two robots in the annulus block a given i and push the scan on.
        let pts = [pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.3, 0.0), pt(-0.25, 0.0)];
        if let Some((g, t)) = guard_teleporter_circles(&pts, Point::ORIGIN, 0.8) {
            let in_annulus = |p: Point| {
                let d = p.dist(Point::ORIGIN);
                !approx_lt(d, g.radius) && approx_lt(d, t.radius)
            };
            let count = pts.iter().filter(|p| in_annulus(**p)).count();
            assert!(count <= 1);
        }
    }

    #[test]
    fn reference_angle_of_square() {
        let b = [pt(1.0, 0.0), pt(0.0, 1.0), pt(-1.0, 0.0), pt(0.0, -1.0)];
        let a = reference_angle(&b, Point::ORIGIN);
        assert!(approx_eq(a, std::f64::consts::FRAC_PI_2 / 3.0));
    }

    #[test]
    fn segment_circle_hits() {
        let c = Circle::new(Point::ORIGIN, 1.0);
        let hits = segment_circle_intersections(pt(-2.0, 0.0), pt(2.0, 0.0), &c);
        assert_eq!(hits.len(), 2);
        assert!(hits[0].1.approx_eq(pt(-1.0, 0.0)));
        assert!(hits[1].1.approx_eq(pt(1.0, 0.0)));

        let hits = segment_circle_intersections(pt(0.0, 0.0), pt(0.5, 0.0), &c);
        assert!(hits.is_empty());

        // Tangent segment reports one hit.
        let hits = segment_circle_intersections(pt(-2.0, 1.0), pt(2.0, 1.0), &c);
        assert_eq!(hits.len(), 1);
        assert!(hits[0].1.approx_eq(pt(0.0, 1.0)));
    }

    #[test]
    fn angles_behave() {
        let c = Point::ORIGIN;
        assert!(approx_eq(
            angle_at(c, pt(1.0, 0.0), pt(0.0, 1.0)),
            std::f64::consts::FRAC_PI_2
        ));
        assert!(approx_eq(
            ccw_angle(c, pt(1.0, 0.0), pt(0.0, 1.0)),
            std::f64::consts::FRAC_PI_2
        ));
        assert!(approx_eq(
            ccw_angle(c, pt(0.0, 1.0), pt(1.0, 0.0)),
            1.5 * std::f64::consts::PI
        ));
    }

    #[test]
    fn path_parametrisation() {
        let p = Path {
            segs: vec![
                PathSeg::Line {
                    from: pt(0.0, 0.0),
                    to: pt(1.0, 0.0),
                },
                PathSeg::Line {
                    from: pt(1.0, 0.0),
                    to: pt(1.0, 1.0),
                },
            ],
        };
        assert!(approx_eq(p.length(), 2.0));
        assert!(p.point_at(0.25).approx_eq(pt(0.5, 0.0)));
        assert!(p.point_at(0.75).approx_eq(pt(1.0, 0.5)));

        let arc = Path::arc(Circle::new(Point::ORIGIN, 1.0), pt(1.0, 0.0), std::f64::consts::PI);
        assert!(arc.point_at(0.5).approx_eq(pt(0.0, 1.0)));
        assert!(arc.end_point().approx_eq(pt(-1.0, 0.0)));
    }

    #[test]
    fn voronoi_ray_exit_two_sites() {
        // Site at origin, competitor at (2, 0): the bisector is x = 1.
        let exit = voronoi_cell_ray_exit(
            pt(0.0, 0.0),
            pt(1.0, 0.0),
            pt(0.0, 0.0),
            &[pt(2.0, 0.0)],
        );
        let (t, p) = exit.unwrap();
        assert!(approx_eq(t, 1.0));
        assert!(p.approx_eq(pt(1.0, 0.0)));

        // Ray pointing away from the competitor never exits.
        let exit = voronoi_cell_ray_exit(
            pt(0.0, 0.0),
            pt(-1.0, 0.0),
            pt(0.0, 0.0),
            &[pt(2.0, 0.0)],
        );
        assert!(exit.is_none());
    }

    proptest! {
        #[test]
        fn sec_matches_brute_force(
            xs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..12)
        ) {
            let pts: Vec<Point> = xs.iter().map(|&(x, y)| pt(x, y)).collect();
            let fast = smallest_enclosing_circle(&pts);
            let slow = brute_force_sec(&pts);
            prop_assert!((fast.radius - slow.radius).abs() <= 1e-7 * slow.radius.max(1.0),
                "radius mismatch: {} vs {}", fast.radius, slow.radius);
            prop_assert!(fast.center.dist(slow.center) <= 1e-6 * slow.radius.max(1.0),
                "center mismatch");
            for p in &pts {
                prop_assert!(fast.center.dist(*p) <= fast.radius * (1.0 + 1e-9) + 1e-9);
            }
        }

        #[test]
        fn rotations_preserve_angles(
            x in -10.0f64..10.0, y in -10.0f64..10.0, a in 0.0f64..std::f64::consts::TAU
        ) {
            let p = pt(x, y);
            let q = p.rotate(a);
            prop_assert!(approx_eq(p.norm(), q.norm()));
        }

        #[test]
        fn segment_hits_lie_on_circle(
            ax in -3.0f64..3.0, ay in -3.0f64..3.0,
            bx in -3.0f64..3.0, by in -3.0f64..3.0,
        ) {
            let c = Circle::new(Point::ORIGIN, 1.0);
            for (t, p) in segment_circle_intersections(pt(ax, ay), pt(bx, by), &c) {
                prop_assert!((c.center.dist(p) - c.radius).abs() <= 1e-7);
                prop_assert!((0.0..=1.0).contains(&t));
            }
        }
    }
}
