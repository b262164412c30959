//! Pattern analysis and the guard-based embedding of the target pattern.
//!
//! The formation algorithm works in two regimes. Before any common reference
//! frame exists, robots can only use rotation-invariant facts about the
//! pattern: the radius of its smallest enclosing circle, its concentric-ring
//! structure, the reference angle derived from its boundary, and whether its
//! centre carries a multiplicity. Once the three guard robots are in place
//! (one on the small guard circle at the reference angle, one on the outer
//! circle, and one antipodal to it), every robot can reconstruct the same
//! rigid embedding of the pattern onto the current configuration and agree
//! on which robots and targets are already matched.

use crate::config::{min_view_index, orientation, Dir};
use crate::geom::{
    approx_eq, approx_zero, ccw_angle, guard_teleporter_circles, normalize_angle,
    smallest_enclosing_circle, tol, Circle, ConcentricFamily, Point,
};

/// Rotation-invariant facts about a pattern, valid for any embedding that
/// maps the pattern's enclosing circle onto the configuration's.
#[derive(Debug, Clone)]
pub struct PatternStats {
    /// Centre of the pattern's smallest enclosing circle (pattern frame).
    pub center: Point,
    /// Radius of the pattern's smallest enclosing circle (pattern frame).
    pub radius: f64,
    /// Reference angle: one third of the smallest central angle between
    /// distinct boundary points of the pattern.
    pub alpha: f64,
    /// Number of pattern points lying exactly on the centre.
    pub center_count: usize,
    /// True when every pattern point lies on the boundary, there are no
    /// multiplicities, and all points but one fit on an open half circle
    /// (the "thin crown" shape that needs the special finalization moves).
    pub crown: bool,
    /// Radius of the innermost positive ring of the pattern (pattern frame).
    pub first_ring_radius: f64,
    /// All distinct ring radii of the pattern, ascending, starting at 0
    /// (pattern frame). Used to clamp staged moves onto pattern rings.
    pub ring_radii: Vec<f64>,
    /// Boundary points of the pattern in canonical order: the minimum-view
    /// boundary point first, then the rest counter-clockwise (pattern frame,
    /// using the pattern's own orientation). Distinct positions only.
    pub boundary_ccw: Vec<Point>,
    /// Orientation used to order `boundary_ccw`.
    pub boundary_dir: Dir,
}

impl PatternStats {
    /// Analyse a pattern. The pattern must contain at least two distinct
    /// points (a single-point pattern is the gathering problem, which this
    /// simulator does not handle).
    pub fn new(pattern: &[Point]) -> PatternStats {
        assert!(pattern.len() >= 2, "pattern must have at least two points");
        let sec = smallest_enclosing_circle(pattern);
        let fam = ConcentricFamily::build(pattern, sec.center);
        let boundary: Vec<Point> = pattern
            .iter()
            .copied()
            .filter(|p| approx_eq(p.dist(sec.center), sec.radius))
            .collect();
        let mut distinct: Vec<Point> = Vec::new();
        for &p in &boundary {
            if !distinct.iter().any(|q| q.approx_eq(p)) {
                distinct.push(p);
            }
        }
        // Smallest central angle between distinct boundary points.
        let mut min_angle = std::f64::consts::PI;
        for i in 0..distinct.len() {
            for j in (i + 1)..distinct.len() {
                let a = crate::geom::angle_at(sec.center, distinct[i], distinct[j]);
                if a < min_angle {
                    min_angle = a;
                }
            }
        }
        let alpha = min_angle / 3.0;
        let center_count = pattern
            .iter()
            .filter(|p| p.approx_eq(sec.center))
            .count();

        // Canonical boundary order: minimum-view first, then around the
        // circle following the pattern's own orientation (falling back to
        // counter-clockwise in pattern coordinates when the pattern is
        // mirror-symmetric and has no orientation of its own).
        let boundary_dir = orientation(pattern, sec.center).unwrap_or(Dir::Ccw);
        let all: Vec<usize> = (0..boundary.len()).collect();
        let anchor = min_view_index(&boundary, &all, sec.center).unwrap_or(0);
        let mut boundary_ccw = Vec::new();
        if !distinct.is_empty() {
            let a0 = boundary[anchor];
            let key = |p: &Point| {
                let raw = ccw_angle(sec.center, a0, *p);
                match boundary_dir {
                    Dir::Ccw => raw,
                    Dir::Cw => normalize_angle(-raw),
                }
            };
            let mut rest: Vec<Point> = distinct
                .iter()
                .copied()
                .filter(|p| !p.approx_eq(a0))
                .collect();
            rest.sort_by(|p, q| key(p).total_cmp(&key(q)));
            boundary_ccw.push(a0);
            boundary_ccw.extend(rest);
        }

        let crown = crown_shape(pattern, &fam, sec.center, &boundary_ccw, boundary_dir);

        PatternStats {
            center: sec.center,
            radius: sec.radius,
            alpha,
            center_count,
            crown,
            first_ring_radius: fam.up_radius(1).unwrap_or(0.0),
            ring_radii: {
                let mut r = vec![0.0];
                r.extend(fam.radii.iter().copied());
                r
            },
            boundary_ccw,
            boundary_dir,
        }
    }

    /// Ring radii rescaled so the pattern's enclosing circle has radius
    /// `target_radius`.
    pub fn scaled_ring_radii(&self, target_radius: f64) -> Vec<f64> {
        let k = target_radius / self.radius;
        self.ring_radii.iter().map(|r| r * k).collect()
    }

    /// True when the pattern puts `k > 1` points on its own centre.
    pub fn center_multiplicity(&self) -> bool {
        self.center_count > 1
    }
}

/// Decide the "thin crown" property: all points on the boundary, no
/// multiplicities, and sweeping from the last boundary point to the second
/// one (in the canonical order) covers more than a half turn.
fn crown_shape(
    pattern: &[Point],
    fam: &ConcentricFamily,
    center: Point,
    boundary_ccw: &[Point],
    dir: Dir,
) -> bool {
    let n = pattern.len();
    if boundary_ccw.len() != n || n < 3 {
        return false; // multiplicities present or interior points
    }
    if fam.radii.len() != 1 || fam.center_count != 0 {
        return false;
    }
    let f2 = boundary_ccw[1];
    let fn_ = boundary_ccw[n - 1];
    let sweep = match dir {
        Dir::Ccw => ccw_angle(center, fn_, f2),
        Dir::Cw => normalize_angle(-ccw_angle(center, fn_, f2)),
    };
    sweep > std::f64::consts::PI + tol(std::f64::consts::PI, 0.0)
}

/// Indices of the three guard robots inside a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    /// Inner guard: the unique robot on the guard circle.
    pub inner: usize,
    /// Primary outer guard: the unique boundary robot seen from the centre
    /// at the reference angle from the inner guard.
    pub outer: usize,
    /// Secondary outer guard: a boundary robot antipodal to the primary one.
    pub antipode: usize,
}

/// Everything derived from a configuration that the guard machinery needs.
#[derive(Debug, Clone)]
pub struct GuardScan {
    /// Guard circle, when the ring scan converges.
    pub guard_circle: Option<Circle>,
    /// Teleporter circle, when the ring scan converges.
    pub teleporter_circle: Option<Circle>,
    /// Robots lying exactly on the guard circle.
    pub on_guard: Vec<usize>,
    /// Robots lying exactly on the teleporter circle.
    pub on_teleporter: Vec<usize>,
}

/// Locate the guard and teleporter circles for a configuration, using the
/// pattern's innermost ring radius (rescaled to the configuration) as the
/// base diameter of the scan.
pub fn guard_scan(robots: &[Point], sec: &Circle, stats: &PatternStats) -> GuardScan {
    let scale = sec.radius / stats.radius;
    let d = stats.first_ring_radius * scale;
    let circles = if d > 0.0 {
        guard_teleporter_circles(robots, sec.center, d)
    } else {
        None
    };
    let (guard_circle, teleporter_circle) = match circles {
        Some((g, t)) => (Some(g), Some(t)),
        None => (None, None),
    };
    let on = |c: &Option<Circle>| -> Vec<usize> {
        match c {
            Some(circle) => robots
                .iter()
                .enumerate()
                .filter(|(_, p)| approx_eq(p.dist(circle.center), circle.radius))
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        }
    };
    let on_guard = on(&guard_circle);
    let on_teleporter = on(&teleporter_circle);
    GuardScan {
        guard_circle,
        teleporter_circle,
        on_guard,
        on_teleporter,
    }
}

/// Try to recognise the three guards in a configuration: a unique robot on
/// the guard circle, a unique boundary robot at the reference angle from it,
/// and a boundary robot antipodal to that one.
pub fn recognize_guards(
    robots: &[Point],
    sec: &Circle,
    scan: &GuardScan,
    alpha: f64,
) -> Option<Guards> {
    if scan.on_guard.len() != 1 {
        return None;
    }
    let inner = scan.on_guard[0];
    let boundary: Vec<usize> = robots
        .iter()
        .enumerate()
        .filter(|(_, p)| approx_eq(p.dist(sec.center), sec.radius))
        .map(|(i, _)| i)
        .collect();
    let at_alpha: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|&i| {
            let a = crate::geom::angle_at(sec.center, robots[inner], robots[i]);
            approx_eq(a, alpha)
        })
        .collect();
    if at_alpha.len() != 1 {
        return None;
    }
    let outer = at_alpha[0];
    let anti = boundary.iter().copied().find(|&i| {
        i != outer && robots[i].approx_eq(sec.center.scale(2.0).sub(robots[outer]))
    })?;
    Some(Guards {
        inner,
        outer,
        antipode: anti,
    })
}

/// A rigid embedding of the pattern onto the world plane, fixed by the three
/// guards, together with the targets reserved for the guards themselves.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// The guards that define the frame.
    pub guards: Guards,
    /// World direction that plays the role of "counter-clockwise" in the
    /// common frame: rotating the inner guard by the reference angle in this
    /// direction lines it up with the primary outer guard.
    pub ccw: Dir,
    /// All pattern points mapped into world coordinates (same multiset size
    /// as the pattern).
    pub targets: Vec<Point>,
    /// Reserved target of the inner guard.
    pub inner_target: Point,
    /// Reserved target of the primary outer guard (always its own position).
    pub outer_target: Point,
    /// Reserved target of the secondary outer guard.
    pub antipode_target: Point,
}

/// Compute the common embedding once guards are recognised.
///
/// The frame is fixed as follows: the common counter-clockwise direction is
/// the rotation that carries the inner guard onto the primary outer guard's
/// ray in one reference angle; the pattern boundary point that follows the
/// minimum-view boundary point (in the pattern's own orientation) lands on
/// the primary outer guard; the rest of the pattern follows with matching
/// orientation.
pub fn embed_pattern(
    robots: &[Point],
    pattern: &[Point],
    sec: &Circle,
    stats: &PatternStats,
    guards: Guards,
) -> Embedding {
    let c = sec.center;
    let scale = sec.radius / stats.radius;
    // World ccw: rotating hline(c, inner) by alpha must land on outer's ray.
    let inner_angle = robots[guards.inner].sub(c).angle();
    let outer_angle = robots[guards.outer].sub(c).angle();
    let ccw = if approx_eq(normalize_angle(outer_angle - inner_angle), stats.alpha)
        || (normalize_angle(outer_angle - inner_angle) - stats.alpha).abs() <= angle_slack(sec)
    {
        Dir::Ccw
    } else {
        Dir::Cw
    };

    // Second boundary point of the pattern (the one that follows the
    // minimum-view boundary point): it may equal the first when the pattern
    // stacks a multiplicity on that boundary point.
    let f1 = stats.boundary_ccw[0];
    let f1_mult = pattern.iter().filter(|p| p.approx_eq(f1)).count();
    let f_second = if f1_mult >= 2 || stats.boundary_ccw.len() == 1 {
        f1
    } else {
        stats.boundary_ccw[1]
    };

    // Angle of a pattern point measured from f_second in the pattern's own
    // counter-clockwise direction.
    let pat_angle = |p: Point| -> f64 {
        let raw = ccw_angle(stats.center, f_second, p);
        match stats.boundary_dir {
            Dir::Ccw => raw,
            Dir::Cw => normalize_angle(-raw),
        }
    };
    let base = outer_angle;
    let targets: Vec<Point> = pattern
        .iter()
        .map(|&p| {
            let r = p.dist(stats.center) * scale;
            if approx_zero(r) {
                return c;
            }
            let theta = base + ccw.sign() * pat_angle(p);
            Point::new(c.x + r * theta.cos(), c.y + r * theta.sin())
        })
        .collect();

    // Reserved guard targets.
    let outer_target = robots[guards.outer];
    let antipode_target = closest_boundary_target(
        &targets,
        sec,
        robots[guards.antipode],
        ccw,
    );
    let inner_target = if stats.center_count > 0 {
        c
    } else {
        closest_first_ring_target(&targets, sec, stats, robots[guards.inner], ccw)
    };

    Embedding {
        guards,
        ccw,
        targets,
        inner_target,
        outer_target,
        antipode_target,
    }
}

/// Slack used when checking whether an angle matches the reference angle
/// while fixing the frame direction; positions are exact at decision points
/// so this only needs to absorb rounding noise.
fn angle_slack(sec: &Circle) -> f64 {
    tol(sec.radius, 0.0) * 64.0
}

/// The embedded boundary target closest to `from`; ties are broken in favour
/// of the target reached first when travelling in direction `dir`.
fn closest_boundary_target(targets: &[Point], sec: &Circle, from: Point, dir: Dir) -> Point {
    let mut best: Option<(f64, f64, Point)> = None;
    for &t in targets {
        if !approx_eq(t.dist(sec.center), sec.radius) {
            continue;
        }
        let d = from.dist(t);
        let sweep = match dir {
            Dir::Ccw => ccw_angle(sec.center, from, t),
            Dir::Cw => normalize_angle(-ccw_angle(sec.center, from, t)),
        };
        let better = match &best {
            None => true,
            Some((bd, bs, _)) => {
                if approx_eq(d, *bd) {
                    sweep < *bs
                } else {
                    d < *bd
                }
            }
        };
        if better {
            best = Some((d, sweep, t));
        }
    }
    best.expect("pattern has boundary targets").2
}

/// The embedded first-ring target closest to `from`; ties are broken by the
/// target first swept by the half-line from the centre through `from` when
/// rotated in direction `dir`.
fn closest_first_ring_target(
    targets: &[Point],
    sec: &Circle,
    stats: &PatternStats,
    from: Point,
    dir: Dir,
) -> Point {
    let scale = sec.radius / stats.radius;
    let ring = stats.first_ring_radius * scale;
    let mut best: Option<(f64, f64, Point)> = None;
    for &t in targets {
        if !approx_eq(t.dist(sec.center), ring) {
            continue;
        }
        let d = from.dist(t);
        let sweep = match dir {
            Dir::Ccw => ccw_angle(sec.center, from, t),
            Dir::Cw => normalize_angle(-ccw_angle(sec.center, from, t)),
        };
        let better = match &best {
            None => true,
            Some((bd, bs, _)) => {
                if approx_eq(d, *bd) {
                    sweep < *bs
                } else {
                    d < *bd
                }
            }
        };
        if better {
            best = Some((d, sweep, t));
        }
    }
    best.expect("pattern has first-ring targets").2
}

/// The matching between non-guard robots and non-reserved targets.
#[derive(Debug, Clone)]
pub struct Matching {
    /// Robot indices that sit exactly on an available target.
    pub matched_robots: Vec<usize>,
    /// Targets (world points) still unclaimed, one entry per multiset
    /// instance.
    pub free_targets: Vec<Point>,
    /// Robot indices that are neither guards nor matched.
    pub free_robots: Vec<usize>,
    /// Minimum distance between a free robot and a free target, when both
    /// sets are non-empty.
    pub eta: Option<f64>,
    /// The designated mover: the minimum-view free robot among those at
    /// distance `eta` from the free targets.
    pub mover: Option<usize>,
    /// The mover's target: a free target at distance `eta` from the mover.
    pub mover_target: Option<Point>,
    /// Free targets closest to the centre (the candidate exits of the
    /// teleporter detour).
    pub central_targets: Vec<Point>,
}

/// Compute the matching state for a configuration under a fixed embedding.
pub fn compute_matching(robots: &[Point], emb: &Embedding, sec: &Circle) -> Matching {
    let reserved = [emb.inner_target, emb.outer_target, emb.antipode_target];
    let mut available: Vec<Point> = emb.targets.clone();
    for r in reserved {
        if let Some(pos) = available.iter().position(|t| t.approx_eq(r)) {
            available.remove(pos);
        }
    }
    let guard_set = [emb.guards.inner, emb.guards.outer, emb.guards.antipode];
    let mut taken = vec![false; available.len()];
    let mut matched_robots = Vec::new();
    let mut free_robots = Vec::new();
    for (i, &p) in robots.iter().enumerate() {
        let claim = available
            .iter()
            .enumerate()
            .position(|(j, t)| !taken[j] && t.approx_eq(p));
        match claim {
            Some(j) => {
                taken[j] = true;
                matched_robots.push(i);
            }
            None => {
                if !guard_set.contains(&i) {
                    free_robots.push(i);
                }
            }
        }
    }
    // Guards that happened to claim a target stay guards: put the target
    // back and reclassify the robot.
    let mut really_matched = Vec::new();
    for &i in &matched_robots {
        if guard_set.contains(&i) {
            if let Some(j) = available
                .iter()
                .enumerate()
                .position(|(j, t)| taken[j] && t.approx_eq(robots[i]))
            {
                taken[j] = false;
            }
        } else {
            really_matched.push(i);
        }
    }
    let matched_robots = really_matched;
    let free_targets: Vec<Point> = available
        .iter()
        .enumerate()
        .filter(|(j, _)| !taken[*j])
        .map(|(_, t)| *t)
        .collect();

    let mut eta = None;
    let mut at_eta: Vec<usize> = Vec::new();
    if !free_robots.is_empty() && !free_targets.is_empty() {
        let dist_to_targets = |i: usize| -> f64 {
            free_targets
                .iter()
                .map(|t| robots[i].dist(*t))
                .fold(f64::INFINITY, f64::min)
        };
        let mut best = f64::INFINITY;
        for &i in &free_robots {
            best = best.min(dist_to_targets(i));
        }
        eta = Some(best);
        at_eta = free_robots
            .iter()
            .copied()
            .filter(|&i| approx_eq(dist_to_targets(i), best))
            .collect();
    }
    let mover = if at_eta.is_empty() {
        None
    } else {
        min_view_index(robots, &at_eta, sec.center)
    };
    let mover_target = mover.map(|i| {
        let e = eta.unwrap();
        let mut cands: Vec<Point> = free_targets
            .iter()
            .copied()
            .filter(|t| approx_eq(robots[i].dist(*t), e))
            .collect();
        cands.sort_by(|a, b| a.canonical_cmp(*b));
        cands[0]
    });

    let central_targets = if free_targets.is_empty() {
        Vec::new()
    } else {
        let dmin = free_targets
            .iter()
            .map(|t| t.dist(sec.center))
            .fold(f64::INFINITY, f64::min);
        free_targets
            .iter()
            .copied()
            .filter(|t| approx_eq(t.dist(sec.center), dmin))
            .collect()
    };

    Matching {
        matched_robots,
        free_targets,
        free_robots,
        eta,
        mover,
        mover_target,
        central_targets,
    }
}

/// The embedding found for crown-shaped patterns during finalization: it
/// matches all middle boundary targets with robots and exposes the embedded
/// first, second and last boundary targets.
#[derive(Debug, Clone)]
pub struct CrownEmbedding {
    /// Embedded positions of the full canonical boundary sequence.
    pub ring: Vec<Point>,
    /// Robots matched with `ring[1..n-1]`, in sequence order.
    pub middle_robots: Vec<usize>,
    /// The two robots left over (their roles depend on the sub-case).
    pub leftovers: Vec<usize>,
    /// World direction playing the pattern's counter-clockwise role.
    pub ccw: Dir,
}

/// Search for an embedding of a crown-shaped pattern that matches the
/// middle of its boundary sequence (everything but the first and last
/// points) with robots of the configuration. Both orientations and every
/// anchor robot are tried; the first hit in canonical order is returned.
pub fn crown_embedding(
    robots: &[Point],
    sec: &Circle,
    stats: &PatternStats,
) -> Option<CrownEmbedding> {
    let n = stats.boundary_ccw.len();
    if !stats.crown || n < 4 {
        return None;
    }
    let c = sec.center;
    let boundary_robots: Vec<usize> = robots
        .iter()
        .enumerate()
        .filter(|(_, p)| approx_eq(p.dist(c), sec.radius))
        .map(|(i, _)| i)
        .collect();
    // Pattern-frame angles of the boundary sequence measured from the
    // second point, in the pattern's counter-clockwise direction.
    let pat_angle = |p: Point| -> f64 {
        let raw = ccw_angle(stats.center, stats.boundary_ccw[1], p);
        match stats.boundary_dir {
            Dir::Ccw => raw,
            Dir::Cw => normalize_angle(-raw),
        }
    };
    let mut anchors = boundary_robots.clone();
    anchors.sort_by(|a, b| robots[*a].canonical_cmp(robots[*b]));
    for dir in [Dir::Ccw, Dir::Cw] {
        for &anchor in &anchors {
            let base = robots[anchor].sub(c).angle();
            let place = |p: Point| -> Point {
                let theta = base + dir.sign() * pat_angle(p);
                Point::new(c.x + sec.radius * theta.cos(), c.y + sec.radius * theta.sin())
            };
            let ring: Vec<Point> = stats.boundary_ccw.iter().map(|&p| place(p)).collect();
            // Match ring[1..=n-2] with distinct robots.
            let mut used = vec![false; robots.len()];
            let mut middle = Vec::new();
            let mut ok = true;
            for t in ring.iter().take(n - 1).skip(1) {
                let hit = robots.iter().enumerate().position(|(i, p)| {
                    !used[i] && p.approx_eq(*t)
                });
                match hit {
                    Some(i) => {
                        used[i] = true;
                        middle.push(i);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let leftovers: Vec<usize> = (0..robots.len()).filter(|&i| !used[i]).collect();
            if leftovers.len() != 2 {
                continue;
            }
            return Some(CrownEmbedding {
                ring,
                middle_robots: middle,
                leftovers,
                ccw: dir,
            });
        }
    }
    None
}

/// A similarity transform (uniform scale, rotation, optional reflection)
/// that maps one point multiset onto another, anchored at the respective
/// enclosing-circle centres.
#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub from_center: Point,
    pub to_center: Point,
    pub scale: f64,
    pub rotation: f64,
    pub reflect: bool,
}

impl Similarity {
    /// Map a point of the source plane into the target plane.
    pub fn apply(&self, p: Point) -> Point {
        let mut v = p.sub(self.from_center);
        if self.reflect {
            v = Point::new(v.x, -v.y);
        }
        v = v.rotate(self.rotation).scale(self.scale);
        self.to_center.add(v)
    }
}

/// All similarity transforms carrying multiset `from` onto multiset `to`
/// (empty when the two are not similar). Transforms are anchored at the
/// enclosing-circle centres, so only rotation and reflection are searched.
pub fn superimpositions(from: &[Point], to: &[Point]) -> Vec<Similarity> {
    let mut out: Vec<Similarity> = Vec::new();
    if from.len() != to.len() || from.is_empty() {
        return out;
    }
    if !radial_profiles_match(from, to) {
        return out;
    }
    let ca = smallest_enclosing_circle(from);
    let cb = smallest_enclosing_circle(to);
    if approx_zero(ca.radius) || approx_zero(cb.radius) {
        return out;
    }
    let scale = cb.radius / ca.radius;
    // Anchor: first distinct boundary point of `from` in canonical order.
    let mut anchor: Option<Point> = None;
    for &p in from {
        if approx_eq(p.dist(ca.center), ca.radius)
            && anchor.map_or(true, |a| p.canonical_cmp(a) == std::cmp::Ordering::Less)
        {
            anchor = Some(p);
        }
    }
    let anchor = match anchor {
        Some(a) => a,
        None => return out,
    };
    for &b in to {
        if !approx_eq(b.dist(cb.center), cb.radius) {
            continue;
        }
        for reflect in [false, true] {
            let mut v = anchor.sub(ca.center);
            if reflect {
                v = Point::new(v.x, -v.y);
            }
            let rotation = b.sub(cb.center).angle() - v.angle();
            let cand = Similarity {
                from_center: ca.center,
                to_center: cb.center,
                scale,
                rotation,
                reflect,
            };
            let image: Vec<Point> = from.iter().map(|&p| cand.apply(p)).collect();
            if match_multisets(&image, to).is_some() {
                let dup = out.iter().any(|s| {
                    let d = normalize_angle(s.rotation - cand.rotation);
                    s.reflect == cand.reflect
                        && (approx_zero(d) || approx_eq(d, std::f64::consts::TAU))
                });
                if !dup {
                    out.push(cand);
                }
            }
        }
    }
    out
}

/// Pair up two point multisets position-by-position within tolerance.
/// Returns for each element of `a` the index of its partner in `b`, or
/// `None` when the multisets do not coincide.
pub fn match_multisets(a: &[Point], b: &[Point]) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut out = Vec::with_capacity(a.len());
    for &p in a {
        let hit = b
            .iter()
            .enumerate()
            .position(|(j, q)| !used[j] && q.approx_eq(p))?;
        used[hit] = true;
        out.push(hit);
    }
    Some(out)
}

/// Quick rejection test for similarity searches: the sorted multisets of
/// distances from the respective centres must agree up to a common scale.
pub fn radial_profiles_match(a: &[Point], b: &[Point]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let ca = smallest_enclosing_circle(a);
    let cb = smallest_enclosing_circle(b);
    if approx_zero(ca.radius) || approx_zero(cb.radius) {
        return approx_zero(ca.radius) && approx_zero(cb.radius);
    }
    let mut ra: Vec<f64> = a.iter().map(|p| p.dist(ca.center) / ca.radius).collect();
    let mut rb: Vec<f64> = b.iter().map(|p| p.dist(cb.center) / cb.radius).collect();
    ra.sort_by(f64::total_cmp);
    rb.sort_by(f64::total_cmp);
    ra.iter().zip(rb.iter()).all(|(x, y)| approx_eq(*x, *y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::smallest_enclosing_circle;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn pattern_stats_reads_rings_and_alpha() {
        // Square of side sqrt(2) on the unit circle plus its centre twice.
        let pat = pts(&[
            (1.0, 0.0),
            (0.0, 1.0),
            (-1.0, 0.0),
            (0.0, -1.0),
            (0.0, 0.0),
            (0.0, 0.0),
        ]);
        let s = PatternStats::new(&pat);
        assert!(s.center.approx_eq(Point::ORIGIN));
        assert!(approx_eq(s.radius, 1.0));
        assert!(approx_eq(s.alpha, std::f64::consts::FRAC_PI_2 / 3.0));
        assert_eq!(s.center_count, 2);
        assert!(s.center_multiplicity());
        assert!(!s.crown);
        assert!(approx_eq(s.first_ring_radius, 1.0));
    }

    #[test]
    fn crown_detection() {
        // Crown: the anchor point leads into the tightest gap (58 degrees)
        // and the remaining four points span 177 degrees, so sweeping from
        // the last point back to the second covers 183 degrees.
        let deg = |d: f64| d.to_radians();
        let on = |a: f64| (a.cos(), a.sin());
        let crown = pts(&[
            on(deg(302.0)),
            on(deg(0.0)),
            on(deg(59.0)),
            on(deg(118.0)),
            on(deg(177.0)),
        ]);
        let s = PatternStats::new(&crown);
        assert!(s.crown, "packed boundary pattern should be a crown");
        // The anchor's leading gap is the smallest central angle, so the
        // reference angle is a third of it.
        assert!(approx_eq(s.alpha, deg(58.0) / 3.0));

        // A regular pentagon spreads evenly: the sweep from the last point
        // to the second covers only two gaps, well under a half turn.
        let penta: Vec<Point> = (0..5)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 5.0;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        assert!(!PatternStats::new(&penta).crown);

        // An interior point rules the shape out immediately.
        let mut hex: Vec<Point> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_3;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        hex.push(Point::ORIGIN);
        let s2 = PatternStats::new(&hex);
        assert!(!s2.crown);
    }

    #[test]
    fn guard_recognition_and_embedding_round_trip() {
        // Pattern: two antipodal boundary points, one interior ring point,
        // one more interior point. alpha = 60 degrees.
        let pat = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.3, 0.0), (0.0, -0.45)]);
        let stats = PatternStats::new(&pat);
        assert!(approx_eq(stats.alpha, std::f64::consts::PI / 3.0));

        // Configuration: outer guards antipodal on the unit circle, inner
        // guard on the guard circle at exactly alpha from (1, 0), plus a
        // spare robot elsewhere.
        let robots_base = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.5, 0.2)]);
        let sec = smallest_enclosing_circle(&robots_base);
        let scan_probe = guard_scan(&robots_base, &sec, &stats);
        let rg = scan_probe.guard_circle.expect("guard circle").radius;
        // Place the inner guard so that rotating it counter-clockwise by
        // alpha lines it up with the outer guard at (1, 0).
        let inner = Point::new(rg * stats.alpha.cos(), -rg * stats.alpha.sin());
        let mut robots = robots_base.clone();
        robots.push(inner);
        let sec = smallest_enclosing_circle(&robots);
        let scan = guard_scan(&robots, &sec, &stats);
        let guards = recognize_guards(&robots, &sec, &scan, stats.alpha).expect("guards");
        assert_eq!(guards.inner, 3);
        assert_eq!(guards.outer, 0);
        assert_eq!(guards.antipode, 1);

        let emb = embed_pattern(&robots, &pat, &sec, &stats, guards);
        assert_eq!(emb.ccw, Dir::Ccw);
        // The primary outer guard's target is its own position.
        assert!(emb.outer_target.approx_eq(Point::new(1.0, 0.0)));
        // The antipodal guard's target is the embedded antipodal point.
        assert!(emb.antipode_target.approx_eq(Point::new(-1.0, 0.0)));
        // All embedded targets keep their distances from the centre.
        for (p, t) in pat.iter().zip(emb.targets.iter()) {
            assert!(approx_eq(p.dist(stats.center), t.dist(sec.center)));
        }
        // The embedded boundary point following the minimum-view boundary
        // point lands exactly on the primary outer guard.
        assert!(emb
            .targets
            .iter()
            .any(|t| t.approx_eq(Point::new(1.0, 0.0))));
    }

    #[test]
    fn matching_tracks_free_robots_and_targets() {
        let pat = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.3, 0.0), (0.0, -0.45)]);
        let stats = PatternStats::new(&pat);
        let robots = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.5, 0.2)]);
        let sec = smallest_enclosing_circle(&robots);
        let scan = guard_scan(&robots, &sec, &stats);
        let rg = scan.guard_circle.unwrap().radius;
        let inner = Point::new(rg * stats.alpha.cos(), rg * stats.alpha.sin());
        let mut all = robots.clone();
        all.push(inner);
        let sec = smallest_enclosing_circle(&all);
        let scan = guard_scan(&all, &sec, &stats);
        let guards = recognize_guards(&all, &sec, &scan, stats.alpha).unwrap();
        let emb = embed_pattern(&all, &pat, &sec, &stats, guards);
        let m = compute_matching(&all, &emb, &sec);
        // One free robot (index 2) and one free target remain.
        assert_eq!(m.free_robots, vec![2]);
        assert_eq!(m.free_targets.len(), 1);
        assert_eq!(m.mover, Some(2));
        let t = m.mover_target.unwrap();
        assert!(approx_eq(m.eta.unwrap(), all[2].dist(t)));
        assert_eq!(m.central_targets.len(), 1);
    }

    #[test]
    fn multiset_matching_and_radial_profiles() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let m = match_multisets(&a, &b).unwrap();
        assert_eq!(m.len(), 3);
        let mut seen = m.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
        assert!(match_multisets(&a, &pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])).is_none());
        assert!(radial_profiles_match(&a, &b));
        assert!(!radial_profiles_match(
            &a,
            &pts(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.0)])
        ));
    }
}
