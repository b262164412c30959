//! Configurations as multisets of points: views, symmetry detection, leader
//! election, orientation and similarity.
//!
//! The *view* of a point is the sequence of polar records of the whole
//! multiset read from that point's ray, scanning either counter-clockwise or
//! clockwise. Views are the only device the robots have to rank one another,
//! so everything here is defined purely in terms of mutual distances and
//! angles and is therefore invariant under rigid motions and uniform scaling
//! of the input.

use crate::geom::{self, approx_eq, ccw_angle, normalize_angle, Point};

/// Scanning direction used to read a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Ccw,
    Cw,
}

impl Dir {
    pub fn sign(self) -> f64 {
        match self {
            Dir::Ccw => 1.0,
            Dir::Cw => -1.0,
        }
    }

    pub fn flip(self) -> Dir {
        match self {
            Dir::Ccw => Dir::Cw,
            Dir::Cw => Dir::Ccw,
        }
    }
}

/// One entry of a view: a point described by the angular offset of its ray
/// from the anchor's ray (in scanning direction), its distance from the
/// center, and how many points share that exact position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewRecord {
    pub angle: f64,
    pub radius: f64,
    pub mult: usize,
}

/// The view of an anchor point: its own polar record first, then every
/// distinct position of the multiset ordered by (ray offset, distance).
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub anchor_radius: f64,
    pub anchor_mult: usize,
    pub records: Vec<ViewRecord>,
}

fn angle_tol() -> f64 {
    geom::tol(std::f64::consts::TAU, 0.0)
}

impl View {
    /// Tolerant lexicographic comparison.
    pub fn cmp(&self, other: &View) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        if !approx_eq(self.anchor_radius, other.anchor_radius) {
            return self.anchor_radius.total_cmp(&other.anchor_radius);
        }
        match self.anchor_mult.cmp(&other.anchor_mult) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.records.iter().zip(&other.records) {
            if (a.angle - b.angle).abs() > angle_tol() {
                return a.angle.total_cmp(&b.angle);
            }
            if !approx_eq(a.radius, b.radius) {
                return a.radius.total_cmp(&b.radius);
            }
            match a.mult.cmp(&b.mult) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.records.len().cmp(&other.records.len())
    }

    pub fn approx_eq(&self, other: &View) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

/// Distinct positions of a multiset together with their multiplicities.
pub fn distinct_with_mult(points: &[Point]) -> Vec<(Point, usize)> {
    let mut out: Vec<(Point, usize)> = Vec::new();
    for &p in points {
        if let Some(entry) = out.iter_mut().find(|(q, _)| q.approx_eq(p)) {
            entry.1 += 1;
        } else {
            out.push((p, 1));
        }
    }
    out
}

/// True when at least two points of the multiset coincide.
pub fn has_multiplicity(points: &[Point]) -> bool {
    distinct_with_mult(points).len() < points.len()
}

/// The view of `anchor` (which must not coincide with `center`), scanning in
/// direction `dir`.
pub fn view(points: &[Point], center: Point, anchor: Point, dir: Dir) -> View {
    let distinct = distinct_with_mult(points);
    let anchor_mult = distinct
        .iter()
        .find(|(p, _)| p.approx_eq(anchor))
        .map_or(1, |(_, m)| *m);
    let mut records: Vec<ViewRecord> = Vec::with_capacity(distinct.len());
    for (p, mult) in distinct {
        let radius = p.dist(center);
        let angle = if geom::approx_zero(radius) {
            0.0
        } else {
            let ccw = ccw_angle(center, anchor, p);
            let mut a = match dir {
                Dir::Ccw => ccw,
                Dir::Cw => normalize_angle(-ccw),
            };
            if std::f64::consts::TAU - a <= angle_tol() {
                a = 0.0;
            }
            a
        };
        records.push(ViewRecord {
            angle,
            radius,
            mult,
        });
    }
    records.sort_by(|a, b| a.angle.total_cmp(&b.angle).then(a.radius.total_cmp(&b.radius)));
    View {
        anchor_radius: anchor.dist(center),
        anchor_mult,
        records,
    }
}

/// The canonical view of a point: the smaller of its two directed views,
/// together with the direction that realises it. When both directions read
/// the same (the anchor lies on a mirror axis) the counter-clockwise one is
/// returned.
pub fn min_view(points: &[Point], center: Point, anchor: Point) -> (View, Dir) {
    let plus = view(points, center, anchor, Dir::Ccw);
    let minus = view(points, center, anchor, Dir::Cw);
    if minus.cmp(&plus) == std::cmp::Ordering::Less {
        (minus, Dir::Cw)
    } else {
        (plus, Dir::Ccw)
    }
}

/// Index (into `points`) of a point of minimum view among `candidates`.
///
/// A point standing on the center always wins. Among equal views the point
/// with the smaller coordinate pair is returned so that the choice is
/// deterministic; equal views only arise between symmetric (interchangeable)
/// candidates.
pub fn min_view_index(points: &[Point], candidates: &[usize], center: Point) -> Option<usize> {
    if candidates.is_empty() {
        return None;
    }
    for &i in candidates {
        if points[i].approx_eq(center) {
            return Some(i);
        }
    }
    let mut best: Option<(usize, View)> = None;
    for &i in candidates {
        let (v, _) = min_view(points, center, points[i]);
        best = match best {
            None => Some((i, v)),
            Some((bi, bv)) => match v.cmp(&bv) {
                std::cmp::Ordering::Less => Some((i, v)),
                std::cmp::Ordering::Equal => {
                    if points[i].canonical_cmp(points[bi]) == std::cmp::Ordering::Less {
                        Some((i, v))
                    } else {
                        Some((bi, bv))
                    }
                }
                std::cmp::Ordering::Greater => Some((bi, bv)),
            },
        };
    }
    best.map(|(i, _)| i)
}

/// A mirror axis through the multiset center, identified by a unit direction
/// (with `dir` and `-dir` equivalent).
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub center: Point,
    pub dir: Point,
}

impl Axis {
    /// Distance of `p` from the axis line.
    pub fn distance(&self, p: Point) -> f64 {
        self.dir.cross(p.sub(self.center)).abs()
    }

    /// `p` lies on the axis (within tolerance, scaled by the distance from
    /// the center).
    pub fn contains(&self, p: Point) -> bool {
        self.distance(p) <= geom::eps_abs() + geom::eps_rel() * p.sub(self.center).norm().max(1.0)
    }

    pub fn reflect(&self, p: Point) -> Point {
        p.reflect_across(self.center, self.dir)
    }

    /// Angle of the axis folded into `[0, pi)`.
    pub fn folded_angle(&self) -> f64 {
        let a = normalize_angle(self.dir.angle());
        if a >= std::f64::consts::PI {
            a - std::f64::consts::PI
        } else {
            a
        }
    }
}

/// Symmetry classification of a multiset.
#[derive(Debug, Clone)]
pub struct SymmetryInfo {
    pub has_multiplicity: bool,
    /// All verified mirror axes (each passes through the center).
    pub reflection_axes: Vec<Axis>,
    /// True when a non-trivial rotation about the center maps the multiset to
    /// itself.
    pub has_rotation: bool,
}

impl SymmetryInfo {
    /// Symmetric in the full sense: mirror, rotation, or interchangeable
    /// coincident points.
    pub fn is_symmetric(&self) -> bool {
        self.has_multiplicity || self.has_rotation || !self.reflection_axes.is_empty()
    }
}

/// Greedy tolerant multiset equality. The tolerance is far below any
/// inter-point separation that matters, so the greedy matching is exact in
/// practice.
pub fn multisets_match(a: &[Point], b: &[Point]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for &p in a {
        for (j, &q) in b.iter().enumerate() {
            if !used[j] && p.approx_eq(q) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Detects mirror and rotational symmetries of the multiset about `center`.
pub fn symmetry_info(points: &[Point], center: Point) -> SymmetryInfo {
    let distinct = distinct_with_mult(points);
    let has_mult = distinct.len() < points.len();
    let off_center: Vec<Point> = distinct
        .iter()
        .map(|(p, _)| *p)
        .filter(|p| !p.approx_eq(center))
        .collect();

    let mut axes: Vec<Axis> = Vec::new();
    let mut has_rotation = false;

    let verify_map = |f: &dyn Fn(Point) -> Point| -> bool {
        let image: Vec<Point> = points.iter().map(|&p| f(p)).collect();
        multisets_match(&image, points)
    };

    // Candidate mirror axes bisect pairs of same-radius positions (a pair may
    // be a single point, giving the axis through it). Candidate rotations map
    // one position onto another at the same radius.
    for (i, &p) in off_center.iter().enumerate() {
        for &q in &off_center[i..] {
            if !approx_eq(p.dist(center), q.dist(center)) {
                continue;
            }
            let ap = normalize_angle(p.sub(center).angle());
            let aq = normalize_angle(q.sub(center).angle());
            let bis = (ap + aq) / 2.0;
            let dir = Point::new(bis.cos(), bis.sin());
            let axis = Axis { center, dir };
            let folded = axis.folded_angle();
            let novel = !axes.iter().any(|ax| {
                let d = (ax.folded_angle() - folded).abs();
                d.min(std::f64::consts::PI - d) <= angle_tol()
            });
            if novel && verify_map(&|x| axis.reflect(x)) {
                axes.push(axis);
            }
            // Also consider the perpendicular bisector candidate: for points
            // at equal radius the mirror mapping p -> q uses the angular
            // bisector, which is what was just tested; rotations need p != q.
            if !p.approx_eq(q) && !has_rotation {
                let theta = ccw_angle(center, p, q);
                if theta > angle_tol() && verify_map(&|x| x.rotate_about(center, theta)) {
                    has_rotation = true;
                }
            }
        }
    }

    SymmetryInfo {
        has_multiplicity: has_mult,
        reflection_axes: axes,
        has_rotation,
    }
}

/// True when some robot is fixed by every isometry of the configuration:
/// the configuration can elect a leader.
pub fn is_leader_configuration(points: &[Point]) -> bool {
    if points.len() == 1 {
        return true;
    }
    let sec = geom::smallest_enclosing_circle(points);
    let center = sec.center;
    let info = symmetry_info(points, center);
    if !info.is_symmetric() {
        return true;
    }
    let distinct = distinct_with_mult(points);
    let center_single = distinct
        .iter()
        .any(|(p, m)| p.approx_eq(center) && *m == 1);
    if info.has_rotation || info.reflection_axes.len() > 1 {
        // Only the center is fixed by a rotation (or by two distinct
        // mirrors), so a single robot must stand there.
        return center_single;
    }
    if let Some(axis) = info.reflection_axes.first() {
        // A unique mirror axis: any non-coincident robot on it is fixed.
        return distinct
            .iter()
            .any(|(p, m)| *m == 1 && axis.contains(*p));
    }
    // Only multiplicities: a robot not in any multiplicity is fixed exactly
    // when every distance-preserving permutation keeps it in place; with two
    // or more distinct positions this reduces to asymmetry of the distinct
    // support, which was already handled above. Be conservative.
    distinct.iter().any(|(_, m)| *m == 1) && distinct.len() == points.len()
}

/// The scanning direction that defines the multiset's own counter-clockwise
/// orientation, or `None` when the multiset is mirror-symmetric (both
/// directions read identically).
///
/// For every anchor of minimum view the winning direction is the same, which
/// makes this a well-defined invariant of the multiset.
pub fn orientation(points: &[Point], center: Point) -> Option<Dir> {
    let distinct = distinct_with_mult(points);
    let mut best: Option<(View, Dir)> = None;
    let mut ambiguous = false;
    for (p, _) in &distinct {
        if p.approx_eq(center) {
            continue;
        }
        let plus = view(points, center, *p, Dir::Ccw);
        let minus = view(points, center, *p, Dir::Cw);
        let (v, d, tie) = match minus.cmp(&plus) {
            std::cmp::Ordering::Less => (minus, Dir::Cw, false),
            std::cmp::Ordering::Equal => (plus, Dir::Ccw, true),
            std::cmp::Ordering::Greater => (plus, Dir::Ccw, false),
        };
        match &best {
            None => {
                best = Some((v, d));
                ambiguous = tie;
            }
            Some((bv, bd)) => match v.cmp(bv) {
                std::cmp::Ordering::Less => {
                    best = Some((v, d));
                    ambiguous = tie;
                }
                std::cmp::Ordering::Equal => {
                    // Two anchors reading the same minimal view in opposite
                    // directions are mirror images of each other: the
                    // multiset has no orientation of its own.
                    ambiguous = ambiguous || tie || d != *bd;
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
    let (_, d) = best?;
    if ambiguous {
        None
    } else {
        Some(d)
    }
}

/// Multiset similarity: `a` can be mapped onto `b` by a combination of
/// translation, rotation, uniform scaling and (optionally) reflection.
pub fn similar(a: &[Point], b: &[Point]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let sec_a = geom::smallest_enclosing_circle(a);
    let sec_b = geom::smallest_enclosing_circle(b);
    let degenerate_a = geom::approx_zero(sec_a.radius);
    let degenerate_b = geom::approx_zero(sec_b.radius);
    if degenerate_a || degenerate_b {
        return degenerate_a && degenerate_b;
    }
    let norm = |pts: &[Point], sec: &geom::Circle| -> Vec<Point> {
        pts.iter()
            .map(|p| p.sub(sec.center).scale(1.0 / sec.radius))
            .collect()
    };
    let na = norm(a, &sec_a);
    let nb = norm(b, &sec_b);
    let unit = geom::Circle::new(Point::ORIGIN, 1.0);
    let ba: Vec<Point> = na.iter().copied().filter(|p| unit.on_boundary(*p)).collect();
    let bb: Vec<Point> = nb.iter().copied().filter(|p| unit.on_boundary(*p)).collect();
    let anchor = ba[0];
    let aa = anchor.angle();
    for q in &bb {
        for flip in [false, true] {
            let pre: Vec<Point> = na
                .iter()
                .map(|p| if flip { Point::new(p.x, -p.y) } else { *p })
                .collect();
            let anchor_f = if flip { Point::new(anchor.x, -anchor.y) } else { anchor };
            let theta = q.angle() - if flip { anchor_f.angle() } else { aa };
            let image: Vec<Point> = pre.iter().map(|p| p.rotate(theta)).collect();
            if multisets_match(&image, &nb) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Independent oracle: search for a non-identity permutation of the
    /// points that preserves all pairwise distances.
    fn brute_force_symmetric(points: &[Point]) -> bool {
        let n = points.len();
        let d = |i: usize, j: usize| points[i].dist(points[j]);
        let mut perm: Vec<usize> = Vec::with_capacity(n);
        let mut used = vec![false; n];
        fn search(
            points: &[Point],
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            d: &dyn Fn(usize, usize) -> f64,
        ) -> bool {
            let i = perm.len();
            if i == points.len() {
                return perm.iter().enumerate().any(|(a, &b)| a != b);
            }
            for j in 0..points.len() {
                if used[j] {
                    continue;
                }
                let ok = (0..i).all(|k| approx_eq(d(i, k), d(j, perm[k])));
                if ok {
                    used[j] = true;
                    perm.push(j);
                    if search(points, perm, used, d) {
                        return true;
                    }
                    perm.pop();
                    used[j] = false;
                }
            }
            false
        }
        search(points, &mut perm, &mut used, &d)
    }

    #[test]
    fn view_orders_rays() {
        // Square plus a marker breaking symmetry.
        let pts = [
            pt(1.0, 0.0),
            pt(0.0, 1.0),
            pt(-1.0, 0.0),
            pt(0.0, -1.0),
            pt(0.5, 0.0),
        ];
        let v = view(&pts, Point::ORIGIN, pt(1.0, 0.0), Dir::Ccw);
        assert_eq!(v.records.len(), 5);
        assert!(approx_eq(v.records[0].angle, 0.0));
        assert!(approx_eq(v.records[0].radius, 0.5));
        assert!(approx_eq(v.records[1].radius, 1.0));
        assert!(approx_eq(v.records[2].angle, std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn symmetry_detection_basic_shapes() {
        // Equilateral triangle: rotation and three axes.
        let tri: Vec<Point> = (0..3)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 3.0;
                pt(a.cos(), a.sin())
            })
            .collect();
        let info = symmetry_info(&tri, Point::ORIGIN);
        assert!(info.has_rotation);
        assert_eq!(info.reflection_axes.len(), 3);
        assert!(!info.has_multiplicity);

        // Isosceles, non-equilateral triangle: one axis, no rotation.
        let iso = [pt(0.0, 1.0), pt(-0.6, -0.4), pt(0.6, -0.4)];
        let sec = geom::smallest_enclosing_circle(&iso);
        let info = symmetry_info(&iso, sec.center);
        assert!(!info.has_rotation);
        assert_eq!(info.reflection_axes.len(), 1);
        assert!(info.reflection_axes[0].contains(pt(0.0, 1.0)));

        // Scalene: nothing.
        let sca = [pt(0.1, 1.0), pt(-0.7, -0.3), pt(0.6, -0.45)];
        let sec = geom::smallest_enclosing_circle(&sca);
        let info = symmetry_info(&sca, sec.center);
        assert!(!info.is_symmetric());

        // Multiplicity makes the configuration symmetric.
        let multi = [pt(0.1, 1.0), pt(-0.7, -0.3), pt(-0.7, -0.3)];
        let sec = geom::smallest_enclosing_circle(&multi);
        let info = symmetry_info(&multi, sec.center);
        assert!(info.has_multiplicity && info.is_symmetric());
    }

    #[test]
    fn leader_configurations() {
        // Asymmetric: leader.
        assert!(is_leader_configuration(&[
            pt(0.1, 1.0),
            pt(-0.7, -0.3),
            pt(0.6, -0.45),
            pt(0.2, 0.2),
        ]));
        // One axis with a robot on it: leader.
        assert!(is_leader_configuration(&[
            pt(0.0, 1.0),
            pt(-0.6, -0.4),
            pt(0.6, -0.4),
            pt(0.0, -0.9),
        ]));
        // One axis with no robot on it: not a leader.
        assert!(!is_leader_configuration(&[
            pt(-0.3, 1.0),
            pt(0.3, 1.0),
            pt(-0.6, -0.4),
            pt(0.6, -0.4),
        ]));
        // Rotational with an occupied center: leader.
        let mut rot: Vec<Point> = (0..4)
            .map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_2;
                pt(a.cos(), a.sin())
            })
            .collect();
        assert!(!is_leader_configuration(&rot));
        rot.push(Point::ORIGIN);
        assert!(is_leader_configuration(&rot));
    }

    #[test]
    fn orientation_of_asymmetric_sets() {
        let pts = [pt(1.0, 0.0), pt(0.0, 1.0), pt(-1.0, 0.0), pt(0.3, 0.4)];
        let sec = geom::smallest_enclosing_circle(&pts);
        let d = orientation(&pts, sec.center);
        assert!(d.is_some());
        // Mirroring the configuration flips its orientation.
        let mirrored: Vec<Point> = pts.iter().map(|p| pt(p.x, -p.y)).collect();
        let sec_m = geom::smallest_enclosing_circle(&mirrored);
        let dm = orientation(&mirrored, sec_m.center);
        assert_eq!(dm, Some(d.unwrap().flip()));

        // A mirror-symmetric set has no orientation.
        let sym = [pt(0.0, 1.0), pt(-0.6, -0.4), pt(0.6, -0.4)];
        let sec_s = geom::smallest_enclosing_circle(&sym);
        assert_eq!(orientation(&sym, sec_s.center), None);
    }

    #[test]
    fn similarity_is_invariant() {
        let a = [pt(0.1, 1.0), pt(-0.7, -0.3), pt(0.6, -0.45), pt(0.0, 0.2)];
        // Rotate, scale, translate, reflect.
        let f = |p: Point| {
            let q = p.rotate(1.234).scale(3.7);
            pt(q.x + 5.0, -q.y - 2.0)
        };
        let b: Vec<Point> = a.iter().map(|&p| f(p)).collect();
        assert!(similar(&a, &b));

        let c = [pt(0.1, 1.0), pt(-0.7, -0.3), pt(0.6, -0.45), pt(0.0, 0.3)];
        assert!(!similar(&a, &c));

        // Multiplicities must be preserved. A doubled endpoint is similar to
        // a doubled endpoint on the other side (rotate by half a turn), but
        // not to three distinct collinear points.
        let m1 = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 0.0)];
        let m2 = [pt(0.0, 0.0), pt(0.0, 0.0), pt(1.0, 0.0)];
        assert!(similar(&m1, &m2));
        let m3 = [pt(5.0, 5.0), pt(5.0, 7.0), pt(5.0, 7.0)];
        assert!(similar(&m1, &m3));
        let m4 = [pt(0.0, 0.0), pt(0.5, 0.0), pt(1.0, 0.0)];
        assert!(!similar(&m1, &m4));
    }

    #[test]
    fn min_view_prefers_center() {
        let pts = [pt(0.0, 0.0), pt(1.0, 0.0), pt(-0.5, 0.2)];
        let all: Vec<usize> = (0..3).collect();
        let idx = min_view_index(&pts, &all, Point::ORIGIN).unwrap();
        assert_eq!(idx, 0);
    }

    fn arbitrary_points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Point>> {
        proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n)
            .prop_map(|v| v.into_iter().map(|(x, y)| pt(x, y)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetry_matches_permutation_oracle(pts in arbitrary_points(3..8)) {
            let sec = geom::smallest_enclosing_circle(&pts);
            let info = symmetry_info(&pts, sec.center);
            let oracle = brute_force_symmetric(&pts);
            prop_assert_eq!(info.is_symmetric(), oracle);
        }

        #[test]
        fn constructed_mirrors_are_found(pts in arbitrary_points(2..5), angle in 0.0f64..std::f64::consts::PI) {
            // Build an exactly mirror-symmetric multiset and check detection.
            let dir = pt(angle.cos(), angle.sin());
            let mut sym: Vec<Point> = Vec::new();
            for p in &pts {
                sym.push(*p);
                sym.push(p.reflect_across(Point::ORIGIN, dir));
            }
            let sec = geom::smallest_enclosing_circle(&sym);
            let info = symmetry_info(&sym, sec.center);
            prop_assert!(info.is_symmetric());
            prop_assert!(!info.reflection_axes.is_empty() || info.has_rotation || info.has_multiplicity);
        }

        #[test]
        fn similarity_reflexive_under_transform(
            pts in arbitrary_points(3..8),
            theta in 0.0f64..std::f64::consts::TAU,
            s in 0.1f64..10.0,
            tx in -5.0f64..5.0,
            ty in -5.0f64..5.0,
            flip in proptest::bool::ANY,
        ) {
            let f = |p: Point| {
                let p = if flip { pt(p.x, -p.y) } else { p };
                let q = p.rotate(theta).scale(s);
                pt(q.x + tx, q.y + ty)
            };
            let image: Vec<Point> = pts.iter().map(|&p| f(p)).collect();
            prop_assert!(similar(&pts, &image));
        }
    }
}
