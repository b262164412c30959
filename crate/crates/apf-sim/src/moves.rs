//! Command computation: turning a classified snapshot into the path the
//! designated mover (or movers) must follow.
//!
//! Commands are expressed as [`Path`] values (straight segments or circular
//! arcs) so that the scheduler can advance a mover part of the way and the
//! safety monitors can sample intermediate positions of the trajectory.

use crate::config::{min_view, min_view_index, orientation, Dir, View};
use crate::embedding::PatternStats;
use crate::geom::{
    angle_at, approx_eq, approx_lt, approx_zero, ccw_angle, circumcircle, is_critical,
    line_circle_intersections, normalize_angle, point_on_segment, ray_circle_first_hit,
    segment_circle_intersections, smallest_enclosing_circle, tol, voronoi_cell_ray_exit, Circle,
    Path, Point,
};
use crate::predicates::{has_rotational_free_path, Analysis, Phase, SubPhase};

use std::f64::consts::PI;

/// The rule that produced a command. Numbered rules belong to the main
/// (n >= 4) algorithm; the `Tri*` rules belong to the dedicated three-robot
/// algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// One of the numbered moves of the main algorithm (1..=24).
    Move(u8),
    /// Three robots: slide the apex along the symmetry axis until its angle
    /// matches the pattern's smallest angle.
    TriAxis,
    /// Three robots, symmetric start: rotate the apex along the circumcircle
    /// toward the nearer of the two equivalent completing points.
    TriTwin,
    /// Three robots, asymmetric: rotate the smallest-angle robot along the
    /// circumcircle toward the unique completing point.
    TriCircle,
    /// Three robots: move the largest-angle robot straight to the nearest
    /// embedded copy of its target.
    TriFree,
    /// Three robots, degenerate pattern: rotate the smallest-angle robot
    /// until the two smallest angles tie.
    TriBalance,
    /// Three robots, degenerate pattern: slide the apex to the midpoint of
    /// the opposite side (the configuration becomes collinear).
    TriMerge,
    /// Three collinear robots: move the middle robot straight to the
    /// embedded copy of its target.
    TriLine,
}

const MOVE_LABELS: [&str; 24] = [
    "m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9", "m10", "m11", "m12", "m13", "m14",
    "m15", "m16", "m17", "m18", "m19", "m20", "m21", "m22", "m23", "m24",
];

impl Rule {
    /// Stable label used in traces.
    pub fn label(self) -> &'static str {
        match self {
            Rule::Move(k) => MOVE_LABELS[(k - 1) as usize],
            Rule::TriAxis => "tri-a",
            Rule::TriTwin => "tri-b",
            Rule::TriCircle => "tri-c",
            Rule::TriFree => "tri-d",
            Rule::TriBalance => "tri-e",
            Rule::TriMerge => "tri-f",
            Rule::TriLine => "tri-g",
        }
    }
}

/// One robot's command: follow `path` starting at its current position.
#[derive(Debug, Clone)]
pub struct Action {
    pub robot: usize,
    pub path: Path,
}

/// The full instruction derived from a snapshot. An empty action list means
/// nobody has to move (the pattern is formed, the designated movers already
/// stand on their targets, or the configuration is not recognised).
#[derive(Debug, Clone)]
pub struct Plan {
    pub rule: Option<Rule>,
    pub actions: Vec<Action>,
}

impl Plan {
    fn empty() -> Plan {
        Plan {
            rule: None,
            actions: Vec::new(),
        }
    }

    fn one(rule: Rule, robot: usize, from: Point, path: Path) -> Plan {
        if path.length() <= tol(from.norm(), 1.0) {
            return Plan {
                rule: Some(rule),
                actions: Vec::new(),
            };
        }
        Plan {
            rule: Some(rule),
            actions: vec![Action { robot, path }],
        }
    }

    /// The action assigned to `robot`, if any.
    pub fn action_for(&self, robot: usize) -> Option<&Action> {
        self.actions.iter().find(|a| a.robot == robot)
    }
}

/// Compute the command(s) for a configuration. This is the single entry
/// point used both by the scheduler (in each robot's local frame) and by the
/// monitors (in the world frame).
pub fn plan(robots: &[Point], pattern: &[Point], stats: &PatternStats) -> Plan {
    plan_with_options(robots, pattern, stats, PlanOptions::default())
}

/// Knobs used only by the fault-injection suite; the defaults give the
/// correct algorithm.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanOptions {
    /// Deliberately skip the staged circle stops of the boundary retreats,
    /// reproducing the unsafe-move class of bug the monitors must detect.
    pub skip_retreat_stops: bool,
}

/// [`plan`] with explicit options.
pub fn plan_with_options(
    robots: &[Point],
    pattern: &[Point],
    stats: &PatternStats,
    opts: PlanOptions,
) -> Plan {
    if robots.len() == 3 {
        return three_robot_plan(robots, pattern);
    }
    let analysis = Analysis::new(robots, pattern, stats);
    let plan = plan_from_analysis(&analysis);
    if opts.skip_retreat_stops {
        if let Some(Rule::Move(k @ (1 | 2))) = plan.rule {
            return unstaged_retreat(&analysis, k);
        }
    }
    plan
}

/// The broken retreat used for fault injection: the full move in one leg,
/// with no intermediate stops on the rescaled pattern circles.
fn unstaged_retreat(a: &Analysis, k: u8) -> Plan {
    let staged = if k == 1 {
        retreat_boundary(a)
    } else {
        continue_retreat(a)
    };
    let action = match staged.actions.first() {
        Some(act) => act,
        None => return staged,
    };
    let c = a.center();
    let from = a.robots[action.robot];
    let radius = if k == 1 {
        a.fam.delta01()
    } else {
        a.fam.delta02()
    };
    let target = c.add(from.sub(c).normalize().scale(radius));
    Plan::one(Rule::Move(k), action.robot, from, Path::line(from, target))
}

/// Compute the command(s) from an already-built analysis.
pub fn plan_from_analysis(a: &Analysis) -> Plan {
    let class = a.classify();
    if class.phase == Phase::Formed {
        return Plan::empty();
    }
    let sub = match class.sub {
        Some(s) => s,
        None => return Plan::empty(),
    };
    match sub {
        SubPhase::A1 | SubPhase::E1 => retreat_boundary(a),
        SubPhase::A2 | SubPhase::E2 => continue_retreat(a),
        SubPhase::B => promote_third(a),
        SubPhase::C1 => square_triangle(a),
        SubPhase::C2 => sharpen_triangle(a),
        SubPhase::D => fill_center(a),
        SubPhase::G1 => descend_to_guard(a),
        SubPhase::G2 => align_guard(a),
        SubPhase::H => evict_center(a),
        SubPhase::M => rotate_on_transfer(a),
        SubPhase::N => approach_transfer(a),
        SubPhase::O => approach_target(a),
        SubPhase::P1 => finish_antipode(a),
        SubPhase::P2 => finish_last(a),
        SubPhase::Q1 => crown_lift(a),
        SubPhase::Q2 => crown_park(a),
        SubPhase::Q3 => crown_close(a),
        SubPhase::Q4 => crown_land(a),
        SubPhase::T => leave_axis(a),
        SubPhase::U => rotate_faraway(a),
        SubPhase::V1 => descend_with_park(a),
        SubPhase::V2 => descend_with_slide(a),
        SubPhase::V3 => descend_center(a),
        SubPhase::V4 => step_to_boundary(a),
        SubPhase::W => eject_center(a),
    }
}

// ---------------------------------------------------------------------------
// shared helpers

/// The canonical scan sign used to break exact mirror ties: the multiset's
/// own orientation when it has one, counter-clockwise otherwise.
fn tie_sign(points: &[Point], center: Point) -> f64 {
    orientation(points, center).unwrap_or(Dir::Ccw).sign()
}

/// Minimum view of a single anchored robot (both scan directions).
fn robot_view(points: &[Point], center: Point, anchor: Point) -> View {
    min_view(points, center, anchor).0
}

/// True when `p` lies strictly inside the arc swept from `start` by `sweep`.
fn arc_covers(circle: &Circle, start: Point, sweep: f64, p: Point) -> bool {
    if !approx_eq(p.dist(circle.center), circle.radius) {
        return false;
    }
    let rel = ccw_angle(circle.center, start, p);
    let inside = if sweep >= 0.0 {
        rel < sweep
    } else {
        rel > 2.0 * PI + sweep
    };
    inside && !p.approx_eq(start) && !p.approx_eq(circle.point_at(circle.angle_of(start) + sweep))
}

/// Signed sweep from `from` to `to` along `circle`, choosing the shorter
/// direction whose open arc avoids all `blockers`; falls back to the shorter
/// direction when both are blocked.
fn free_sweep(circle: &Circle, from: Point, to: Point, blockers: &[Point]) -> f64 {
    let raw = ccw_angle(circle.center, from, to);
    let mut options = [raw, raw - 2.0 * PI];
    if options[0].abs() > options[1].abs() {
        options.swap(0, 1);
    }
    for sweep in options {
        if !blockers
            .iter()
            .any(|&b| arc_covers(circle, from, sweep, b))
        {
            return sweep;
        }
    }
    options[0]
}

/// First crossing with one of the pattern's rings (rescaled onto the
/// configuration) in the open radial interval between the mover and its
/// target; used to stage the straight inward moves.
fn clamp_to_pattern_rings(a: &Analysis, from: Point, to: Point) -> Point {
    let c = a.center();
    let start_r = from.dist(c);
    let end_r = to.dist(c);
    let (lo, hi) = if start_r < end_r {
        (start_r, end_r)
    } else {
        (end_r, start_r)
    };
    let mut best: Option<f64> = None;
    for ring in a.stats.scaled_ring_radii(a.sec.radius) {
        if approx_lt(lo, ring) && approx_lt(ring, hi) {
            // Closest to the start of the move.
            let better = match best {
                None => true,
                Some(b) => (ring - start_r).abs() < (b - start_r).abs(),
            };
            if better {
                best = Some(ring);
            }
        }
    }
    match best {
        Some(ring) => c.add(from.sub(c).normalize().scale(ring)),
        None => to,
    }
}

/// Representative robot indices of the distinct boundary positions.
fn boundary_reps(a: &Analysis) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    for &i in &a.boundary {
        if !reps.iter().any(|&j| a.robots[j].approx_eq(a.robots[i])) {
            reps.push(i);
        }
    }
    reps
}

// ---------------------------------------------------------------------------
// boundary-trimming moves (the first shaping stage)

/// m1: the non-critical boundary robot of minimum view retreats radially to
/// the circle lying halfway between the outer two occupied circles.
fn retreat_boundary(a: &Analysis) -> Plan {
    let candidates: Vec<usize> = boundary_reps(a)
        .into_iter()
        .filter(|&i| !is_critical(&a.robots, i))
        .collect();
    let mover = match min_view_index(&a.robots, &candidates, a.center()) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    let target = c.add(from.sub(c).normalize().scale(a.fam.delta01()));
    let target = clamp_to_pattern_rings(a, from, target);
    Plan::one(Rule::Move(1), mover, from, Path::line(from, target))
}

/// m2: the robot already detached from the boundary continues inward to the
/// circle halfway between the outer circle and the next inner one.
fn continue_retreat(a: &Analysis) -> Plan {
    let ring = match a.fam.down_radius(1) {
        Some(r) => r,
        None => return Plan::empty(),
    };
    let on_ring = a.fam.points_on(&a.robots, ring);
    let candidates: Vec<usize> = on_ring.iter().map(|&(i, _)| i).collect();
    let mover = match min_view_index(&a.robots, &candidates, a.center()) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    let target = c.add(from.sub(c).normalize().scale(a.fam.delta02()));
    let target = clamp_to_pattern_rings(a, from, target);
    Plan::one(Rule::Move(2), mover, from, Path::line(from, target))
}

/// m3: with two boundary robots, promote the minimum-view robot of the next
/// circle radially onto the boundary (deviating tangentially when the radial
/// exit would land on one of the four distinguished boundary points).
fn promote_third(a: &Analysis) -> Plan {
    let ring = match a.fam.down_radius(1) {
        Some(r) => r,
        None => return Plan::empty(),
    };
    let candidates: Vec<usize> = a
        .fam
        .points_on(&a.robots, ring)
        .iter()
        .map(|&(i, _)| i)
        .collect();
    let mover = match min_view_index(&a.robots, &candidates, a.center()) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    let reps = boundary_reps(a);
    if reps.len() != 2 {
        return Plan::empty();
    }
    let (b1, b2) = (a.robots[reps[0]], a.robots[reps[1]]);
    let mut special = vec![b1, b2];
    special.extend(line_circle_intersections(
        c,
        b2.sub(b1).normalize().perp(),
        &a.sec,
    ));

    let radial_ok = !approx_zero(from.dist(c));
    if radial_ok {
        let t = c.add(from.sub(c).normalize().scale(a.sec.radius));
        if !special.iter().any(|s| s.approx_eq(t)) {
            return Plan::one(Rule::Move(3), mover, from, Path::line(from, t));
        }
        // Tangent escape: leave along the tangent of the inner circle.
        let dir = from.sub(c).normalize().perp().scale(tie_sign(&a.robots, c));
        let reach = (a.sec.radius * a.sec.radius - ring * ring).max(0.0).sqrt();
        let t = from.add(dir.scale(reach));
        return Plan::one(Rule::Move(3), mover, from, Path::line(from, t));
    }
    // Degenerate: the mover sits on the centre; pick a direction clear of
    // the four distinguished points.
    let dir = b1.sub(c).normalize().rotate(tie_sign(&a.robots, c) * PI / 4.0);
    let t = c.add(dir.scale(a.sec.radius));
    Plan::one(Rule::Move(3), mover, from, Path::line(from, t))
}

/// Boundary triangle roles ordered by descending interior angle, with ties
/// broken by view as the shaping rules require.
fn triangle_roles(a: &Analysis) -> Option<[usize; 3]> {
    let reps = boundary_reps(a);
    if reps.len() != 3 {
        return None;
    }
    let c = a.center();
    let mut items: Vec<(f64, usize)> = reps
        .iter()
        .map(|&i| {
            let others: Vec<Point> = reps
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| a.robots[j])
                .collect();
            (angle_at(a.robots[i], others[0], others[1]), i)
        })
        .collect();
    // Near-equal angles (equal up to coordinate noise) must fall through to
    // the view comparison, otherwise the ordering would hinge on noise that
    // differs from frame to frame.
    items.sort_by(|x, y| {
        if approx_eq(x.0, y.0) {
            robot_view(&a.robots, c, a.robots[x.1])
                .cmp(&robot_view(&a.robots, c, a.robots[y.1]))
        } else {
            y.0.total_cmp(&x.0)
        }
    });
    Some([items[0].1, items[1].1, items[2].1])
}

/// m4: the middle-angle boundary robot rotates until the largest angle
/// becomes a right angle, with the staged stops of the shaping procedure.
fn square_triangle(a: &Analysis) -> Plan {
    let [r1, r2, r3] = match triangle_roles(a) {
        Some(r) => r,
        None => return Plan::empty(),
    };
    let c = a.center();
    let (pa, pb) = (a.robots[r1], a.robots[r3]);
    let from = a.robots[r2];
    // The largest angle (at r1) subtends the chord between the mover and r3;
    // it becomes right exactly when that chord is a diameter.
    let target = c.scale(2.0).sub(pb);
    let mut sweep = free_sweep(&a.sec, from, target, &[pa, pb]);
    sweep = clamp_similar_triangle(a, from, sweep, pa, pb);
    sweep = clamp_guard_angle(a, from, sweep);
    sweep = clamp_symmetry_entry(a, r2, from, sweep);
    Plan::one(Rule::Move(4), r2, from, Path::arc(a.sec, from, sweep))
}

/// Staged stop of the rotation: the first point at which the boundary
/// triangle becomes similar to the pattern's boundary triangle.
fn clamp_similar_triangle(a: &Analysis, from: Point, sweep: f64, pa: Point, pb: Point) -> f64 {
    if a.stats.boundary_ccw.len() != 3 {
        return sweep;
    }
    let f = &a.stats.boundary_ccw;
    let goal = [
        angle_at(f[0], f[1], f[2]),
        angle_at(f[1], f[0], f[2]),
        angle_at(f[2], f[0], f[1]),
    ];
    // The mover's own angle stays constant along the rotation, so a match is
    // possible only when it occurs among the pattern's angles; the other two
    // angles vary linearly (half the swept arc).
    let at = |s: f64| -> (Point, f64, f64) {
        let p = a
            .sec
            .point_at(a.sec.angle_of(from) + s);
        (p, angle_at(pa, pb, p), angle_at(pb, pa, p))
    };
    let (_, a0_start, b0_start) = at(0.0);
    let (_, a0_end, b0_end) = at(sweep);
    let mut best: Option<f64> = None;
    let mut consider = |s: f64| {
        if s <= tol(1.0, 0.0) || s >= sweep.abs() - tol(1.0, 0.0) {
            return;
        }
        let s_signed = s * sweep.signum();
        let (p, ang_a, ang_b) = at(s_signed);
        let mine = angle_at(p, pa, pb);
        let mut got = [mine, ang_a, ang_b];
        let mut want = goal;
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        if got
            .iter()
            .zip(want.iter())
            .all(|(x, y)| approx_eq(*x, *y))
        {
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    };
    for g in goal {
        // Linear interpolation is exact for inscribed angles.
        for (v0, v1) in [(a0_start, a0_end), (b0_start, b0_end)] {
            if approx_eq(v0, v1) {
                continue;
            }
            let t = (g - v0) / (v1 - v0);
            if t.is_finite() && t > 0.0 && t < 1.0 {
                consider(t * sweep.abs());
            }
        }
    }
    match best {
        Some(s) => s * sweep.signum(),
        None => sweep,
    }
}

/// Staged stop of the rotation: the first point seen from the centre at the
/// reference angle from a robot on the guard circle.
fn clamp_guard_angle(a: &Analysis, from: Point, sweep: f64) -> f64 {
    if a.scan.on_guard.is_empty() {
        return sweep;
    }
    let c = a.center();
    let start = a.sec.angle_of(from);
    let mut best = sweep;
    for &g in &a.scan.on_guard {
        let base = a.robots[g].sub(c).angle();
        for cand in [base + a.stats.alpha, base - a.stats.alpha] {
            let rel = normalize_angle(cand - start);
            let s = if sweep >= 0.0 { rel } else { rel - 2.0 * PI };
            if s.abs() > tol(1.0, 0.0)
                && s.abs() < best.abs() - tol(1.0, 0.0)
                && s.signum() == sweep.signum()
            {
                best = s;
            }
        }
    }
    best
}

/// Staged stop of the rotation: the first point at which the symmetry-break
/// escape condition would start to hold for the moved configuration.
fn clamp_symmetry_entry(a: &Analysis, mover: usize, from: Point, sweep: f64) -> f64 {
    let holds = |s: f64| -> bool {
        let mut pts = a.robots.clone();
        pts[mover] = a.sec.point_at(a.sec.angle_of(from) + s);
        Analysis::new(&pts, a.pattern, a.stats).faraway().is_some()
    };
    let steps = 512;
    let mut prev = 0.0;
    for k in 1..=steps {
        let s = sweep * k as f64 / steps as f64;
        if holds(s) {
            // Bisect the entry point, landing on the holding side.
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        prev = s;
    }
    sweep
}

/// m5: the boundary robot without an antipodal partner rotates until the
/// boundary triangle has the 30-60-90 shape.
fn sharpen_triangle(a: &Analysis) -> Plan {
    let reps = boundary_reps(a);
    if reps.len() != 3 {
        return Plan::empty();
    }
    let c = a.center();
    let occupied = |p: Point| reps.iter().any(|&i| a.robots[i].approx_eq(p));
    let mover = match reps
        .iter()
        .copied()
        .find(|&i| !occupied(c.scale(2.0).sub(a.robots[i])))
    {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let ends: Vec<Point> = reps
        .iter()
        .filter(|&&i| i != mover)
        .map(|&i| a.robots[i])
        .collect();
    let from = a.robots[mover];
    let side = |p: Point| ends[1].sub(ends[0]).cross(p.sub(ends[0])).signum();
    let my_side = side(from);
    let mut best: Option<(f64, Point)> = None;
    for &end in &ends {
        let base = end.sub(c).angle();
        for off in [PI / 3.0, -PI / 3.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0] {
            let cand = a.sec.point_at(base + off);
            if side(cand) != my_side {
                continue;
            }
            let raw = ccw_angle(c, from, cand);
            let dist = raw.min(2.0 * PI - raw);
            let better = match &best {
                None => true,
                Some((d, p)) => {
                    dist < d - tol(1.0, 0.0)
                        || (approx_eq(dist, *d) && cand.canonical_cmp(*p).is_lt())
                }
            };
            if better {
                best = Some((dist, cand));
            }
        }
    }
    let (_, target) = match best {
        Some(b) => b,
        None => return Plan::empty(),
    };
    let sweep = free_sweep(&a.sec, from, target, &ends);
    Plan::one(Rule::Move(5), mover, from, Path::arc(a.sec, from, sweep))
}

/// m6: the minimum-view robot nearest to the centre (but not on it) walks
/// straight onto the centre.
fn fill_center(a: &Analysis) -> Plan {
    let c = a.center();
    let mut dists: Vec<(f64, usize)> = a
        .robots
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.approx_eq(c))
        .map(|(i, p)| (p.dist(c), i))
        .collect();
    dists.sort_by(|x, y| x.0.total_cmp(&y.0));
    let closest = match dists.first() {
        Some(&(d, _)) => d,
        None => return Plan::empty(),
    };
    let candidates: Vec<usize> = dists
        .iter()
        .filter(|(d, _)| approx_eq(*d, closest))
        .map(|&(_, i)| i)
        .collect();
    let mover = match min_view_index(&a.robots, &candidates, c) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    Plan::one(Rule::Move(6), mover, a.robots[mover], Path::line(a.robots[mover], c))
}

// ---------------------------------------------------------------------------
// guard placement moves

/// m7: the minimum-view robot of the innermost occupied circle descends
/// radially onto the guard circle.
fn descend_to_guard(a: &Analysis) -> Plan {
    let ring = match a.fam.up_radius(1) {
        Some(r) => r,
        None => return Plan::empty(),
    };
    let candidates: Vec<usize> = a
        .fam
        .points_on(&a.robots, ring)
        .iter()
        .map(|&(i, _)| i)
        .collect();
    let mover = match min_view_index(&a.robots, &candidates, a.center()) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let rg = match &a.scan.guard_circle {
        Some(g) => g.radius,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    if from.dist(c) <= rg + tol(rg, 1.0) {
        return Plan::empty();
    }
    let target = c.add(from.sub(c).normalize().scale(rg));
    let target = clamp_to_pattern_rings(a, from, target);
    Plan::one(Rule::Move(7), mover, from, Path::line(from, target))
}

/// m8: the robot on the guard circle rotates to the closest point seen at
/// the reference angle from one of the two antipodal boundary robots.
fn align_guard(a: &Analysis) -> Plan {
    let mover = match a.scan.on_guard.first() {
        Some(&m) => m,
        None => return Plan::empty(),
    };
    let guard = match &a.scan.guard_circle {
        Some(g) => *g,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    let reps = boundary_reps(a);
    let mut best: Option<(f64, Point)> = None;
    for &b in &reps {
        let base = a.robots[b].sub(c).angle();
        for off in [a.stats.alpha, -a.stats.alpha] {
            let cand = guard.point_at(base + off);
            let raw = ccw_angle(c, from, cand);
            let dist = raw.min(2.0 * PI - raw);
            let better = match &best {
                None => true,
                Some((d, p)) => {
                    dist < d - tol(1.0, 0.0)
                        || (approx_eq(dist, *d) && cand.canonical_cmp(*p).is_lt())
                }
            };
            if better {
                best = Some((dist, cand));
            }
        }
    }
    let (_, target) = match best {
        Some(b) => b,
        None => return Plan::empty(),
    };
    let sweep = free_sweep(&guard, from, target, &[]);
    Plan::one(Rule::Move(8), mover, from, Path::arc(guard, from, sweep))
}

/// m9: the robot on the centre leaves it, landing on the guard circle at
/// half the reference angle from the minimum-view boundary robot.
fn evict_center(a: &Analysis) -> Plan {
    let c = a.center();
    let mover = match a.robots.iter().position(|p| p.approx_eq(c)) {
        Some(m) => m,
        None => return Plan::empty(),
    };
    let guard = match &a.scan.guard_circle {
        Some(g) => *g,
        None => return Plan::empty(),
    };
    let reps = boundary_reps(a);
    let anchor = match min_view_index(&a.robots, &reps, c) {
        Some(i) => i,
        None => return Plan::empty(),
    };
    let base = a.robots[anchor].sub(c).angle();
    let sign = tie_sign(&a.robots, c);
    let target = guard.point_at(base + sign * a.stats.alpha / 2.0);
    Plan::one(Rule::Move(9), mover, a.robots[mover], Path::line(a.robots[mover], target))
}

// ---------------------------------------------------------------------------
// matching moves (walking free robots onto free targets)

/// m10: the robot on the transfer circle rotates to the closest exit point
/// (the crossing of the circle with a ray from the centre through one of the
/// innermost free targets).
fn rotate_on_transfer(a: &Analysis) -> Plan {
    let mover = match a.scan.on_teleporter.first() {
        Some(&m) => m,
        None => return Plan::empty(),
    };
    let tele = match &a.scan.teleporter_circle {
        Some(t) => *t,
        None => return Plan::empty(),
    };
    let (_, matching) = match a.embedding() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[mover];
    let mut best: Option<(f64, Point)> = None;
    for f in &matching.central_targets {
        let off = f.sub(c);
        if approx_zero(off.norm()) {
            continue;
        }
        let cand = c.add(off.normalize().scale(tele.radius));
        let raw = ccw_angle(c, from, cand);
        let dist = raw.min(2.0 * PI - raw);
        let better = match &best {
            None => true,
            Some((d, p)) => {
                dist < d - tol(1.0, 0.0) || (approx_eq(dist, *d) && cand.canonical_cmp(*p).is_lt())
            }
        };
        if better {
            best = Some((dist, cand));
        }
    }
    let (_, target) = match best {
        Some(b) => b,
        None => return Plan::empty(),
    };
    let sweep = free_sweep(&tele, from, target, &[]);
    Plan::one(Rule::Move(10), mover, from, Path::arc(tele, from, sweep))
}

/// m11: the designated mover heads for the first crossing of its target
/// segment with the transfer circle, avoiding collisions.
fn approach_transfer(a: &Analysis) -> Plan {
    let (_, matching) = match a.embedding() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let (mover, target) = match (matching.mover, matching.mover_target) {
        (Some(m), Some(t)) => (m, t),
        _ => return Plan::empty(),
    };
    let tele = match &a.scan.teleporter_circle {
        Some(t) => *t,
        None => return Plan::empty(),
    };
    let from = a.robots[mover];
    let hit = segment_circle_intersections(from, target, &tele)
        .into_iter()
        .find(|(_, p)| !p.approx_eq(from));
    let p1 = match hit {
        Some((_, p)) => p,
        None => return Plan::empty(),
    };
    dist_min(a, mover, p1, Rule::Move(11))
}

/// m12: the designated mover walks to its matched target, avoiding
/// collisions.
fn approach_target(a: &Analysis) -> Plan {
    let (_, matching) = match a.embedding() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let (mover, target) = match (matching.mover, matching.mover_target) {
        (Some(m), Some(t)) => (m, t),
        _ => return Plan::empty(),
    };
    dist_min(a, mover, target, Rule::Move(12))
}

/// The collision-avoiding step: go straight when the segment to the target
/// is free, otherwise step aside around the nearest obstructing robot.
fn dist_min(a: &Analysis, mover: usize, f: Point, rule: Rule) -> Plan {
    let r = a.robots[mover];
    let mut blockers: Vec<(f64, Point)> = a
        .robots
        .iter()
        .enumerate()
        .filter(|&(i, p)| i != mover && !p.approx_eq(r) && !p.approx_eq(f))
        .filter(|&(_, p)| point_on_segment(*p, r, f))
        .map(|(_, p)| (p.dist(r), *p))
        .collect();
    if blockers.is_empty() {
        return Plan::one(rule, mover, r, Path::line(r, f));
    }
    blockers.sort_by(|x, y| x.0.total_cmp(&y.0));
    let rbar = blockers[0].1;
    let c = a.center();
    let axis = f.sub(r).normalize();
    let mut dir = axis.perp();
    let side = dir.dot(c.sub(rbar));
    if side > tol(side.abs(), 1.0) {
        dir = dir.scale(-1.0);
    } else if approx_zero(side) {
        dir = dir.scale(tie_sign(&a.robots, c));
    }

    let mut reach: Vec<f64> = Vec::new();
    // Crossings with the sight lines from the mover through every other
    // robot.
    for (i, &x) in a.robots.iter().enumerate() {
        if i == mover || x.approx_eq(r) {
            continue;
        }
        let u = x.sub(r);
        let denom = u.cross(dir);
        if approx_zero(denom) {
            continue;
        }
        let w = rbar.sub(r);
        let along_ray = w.cross(dir) / denom;
        let along_ell = u.cross(w) / -denom;
        if along_ray >= 0.0 && along_ell > tol(1.0, 0.0) {
            reach.push(along_ell);
        }
    }
    if let Some((t, _)) = ray_circle_first_hit(rbar, dir, &a.sec) {
        reach.push(t);
    }
    let around = Circle::new(f, f.dist(r));
    if let Some((t, _)) = ray_circle_first_hit(rbar, dir, &around) {
        reach.push(t);
    }
    if let Some((emb, matching)) = a.embedding() {
        let _ = emb;
        if let Some((t, _)) = voronoi_cell_ray_exit(rbar, dir, f, &matching.free_targets) {
            reach.push(t);
        }
    }
    let best = reach
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Plan::one(rule, mover, r, Path::line(r, f));
    }
    let p = rbar.add(dir.scale(best / 2.0));
    Plan::one(rule, mover, r, Path::line(r, p))
}

// ---------------------------------------------------------------------------
// finalization moves

/// m13 in the non-crown case: the loose antipodal guard rotates to its
/// reserved target.
fn finish_antipode(a: &Analysis) -> Plan {
    let guards = match a.loose_guards() {
        Some(g) => g,
        None => return Plan::empty(),
    };
    let (emb, _) = match a.embedding() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let from = a.robots[guards.antipode];
    let blockers: Vec<Point> = boundary_reps(a)
        .into_iter()
        .filter(|&i| i != guards.antipode)
        .map(|i| a.robots[i])
        .collect();
    let sweep = free_sweep(&a.sec, from, emb.antipode_target, &blockers);
    Plan::one(Rule::Move(13), guards.antipode, from, Path::arc(a.sec, from, sweep))
}

/// m14: the last unmatched robot walks straight onto the remaining target.
fn finish_last(a: &Analysis) -> Plan {
    let exit = match a.center_exit() {
        Some(e) => e,
        None => return Plan::empty(),
    };
    let from = a.robots[exit.robot];
    Plan::one(Rule::Move(14), exit.robot, from, Path::line(from, exit.target))
}

/// m15: the inner crown robot returns radially to the outer circle.
fn crown_lift(a: &Analysis) -> Plan {
    let (_, roles) = match a.crown_case() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[roles.r1];
    if from.approx_eq(c) {
        return Plan::empty();
    }
    let target = c.add(from.sub(c).normalize().scale(a.sec.radius));
    Plan::one(Rule::Move(15), roles.r1, from, Path::line(from, target))
}

/// m16: the far crown robot rotates to the closest of its own target and
/// the point antipodal to the inner-role robot.
fn crown_park(a: &Analysis) -> Plan {
    let (_, roles) = match a.crown_case() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[roles.rn];
    let fn_ = roles.emb.ring[roles.emb.ring.len() - 1];
    let anti = c.scale(2.0).sub(a.robots[roles.r1]);
    let pick = |x: Point, y: Point| -> Point {
        let dx = {
            let raw = ccw_angle(c, from, x);
            raw.min(2.0 * PI - raw)
        };
        let dy = {
            let raw = ccw_angle(c, from, y);
            raw.min(2.0 * PI - raw)
        };
        if dx < dy - tol(1.0, 0.0) {
            x
        } else if dy < dx - tol(1.0, 0.0) {
            y
        } else if x.canonical_cmp(y).is_lt() {
            x
        } else {
            y
        }
    };
    let target = pick(fn_, anti);
    let blockers: Vec<Point> = boundary_reps(a)
        .into_iter()
        .filter(|&i| i != roles.rn)
        .map(|i| a.robots[i])
        .collect();
    let sweep = free_sweep(&a.sec, from, target, &blockers);
    Plan::one(Rule::Move(16), roles.rn, from, Path::arc(a.sec, from, sweep))
}

/// m17: the first-role crown robot rotates onto the first boundary target.
fn crown_close(a: &Analysis) -> Plan {
    let (_, roles) = match a.crown_case() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let from = a.robots[roles.r1];
    let target = roles.emb.ring[0];
    let blockers: Vec<Point> = boundary_reps(a)
        .into_iter()
        .filter(|&i| i != roles.r1)
        .map(|i| a.robots[i])
        .collect();
    let sweep = free_sweep(&a.sec, from, target, &blockers);
    Plan::one(Rule::Move(17), roles.r1, from, Path::arc(a.sec, from, sweep))
}

/// m13 in the last crown case: the far crown robot rotates onto the last
/// boundary target.
fn crown_land(a: &Analysis) -> Plan {
    let (_, roles) = match a.crown_case() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let from = a.robots[roles.rn];
    let target = roles.emb.ring[roles.emb.ring.len() - 1];
    let blockers: Vec<Point> = boundary_reps(a)
        .into_iter()
        .filter(|&i| i != roles.rn)
        .map(|i| a.robots[i])
        .collect();
    let sweep = free_sweep(&a.sec, from, target, &blockers);
    Plan::one(Rule::Move(13), roles.rn, from, Path::arc(a.sec, from, sweep))
}

// ---------------------------------------------------------------------------
// symmetry-breaking moves

/// m18: the only robot on the axis walks to the centre of the others when
/// that path is free of blockers, and otherwise slides along the axis until
/// the configuration gains a clear escape structure.
fn leave_axis(a: &Analysis) -> Plan {
    let (axis, mover) = match a.axis_with_one() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let from = a.robots[mover];
    if has_rotational_free_path(&a.robots, mover) {
        let rest: Vec<Point> = a
            .robots
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != mover)
            .map(|(_, p)| *p)
            .collect();
        let c_rest = smallest_enclosing_circle(&rest).center;
        return Plan::one(Rule::Move(18), mover, from, Path::line(from, c_rest));
    }
    let target = match faraway_slide_target(a, &axis, mover) {
        Some(t) => t,
        None => return Plan::empty(),
    };
    Plan::one(Rule::Move(18), mover, from, Path::line(from, target))
}

/// The closest point on the axis at which the remaining robots, plus the
/// slid mover, form the escape structure: three boundary robots with the
/// moved one strictly farthest and seeing the mirror pair under an angle of
/// at most 59 degrees.
fn faraway_slide_target(a: &Analysis, axis: &crate::config::Axis, mover: usize) -> Option<Point> {
    let from = a.robots[mover];
    let rest: Vec<Point> = a
        .robots
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mover)
        .map(|(_, p)| *p)
        .collect();
    // Distinct mirror pairs of the remaining robots.
    let mut pairs: Vec<(Point, Point)> = Vec::new();
    for &p in &rest {
        let q = axis.reflect(p);
        if p.approx_eq(q) {
            continue;
        }
        if !pairs
            .iter()
            .any(|&(x, y)| (x.approx_eq(p) && y.approx_eq(q)) || (x.approx_eq(q) && y.approx_eq(p)))
        {
            pairs.push((p, q));
        }
    }
    let wedge = 59.0_f64.to_radians();
    let mut best: Option<(f64, Point)> = None;
    for &(p, q) in &pairs {
        let half = 0.5 * p.dist(q);
        let mid = p.lerp(q, 0.5);
        for dir in [axis.dir, axis.dir.scale(-1.0)] {
            for k in 0..=64 {
                let d = half / (wedge / 2.0).tan() * (1.0 + 0.05 * k as f64);
                let t = mid.add(dir.scale(d));
                let mut pts = rest.clone();
                pts.push(t);
                let check = Analysis::new(&pts, a.pattern, a.stats);
                let ok = check
                    .faraway()
                    .map_or(false, |fw| pts[fw.mover].approx_eq(t));
                if ok {
                    let dist = from.dist(t);
                    if best.as_ref().map_or(true, |(b, _)| dist < *b) {
                        best = Some((dist, t));
                    }
                    break;
                }
            }
        }
    }
    best.map(|(_, t)| t)
}

/// m19: the escaped robot rotates along the boundary toward the antipode
/// singled out by the escape structure.
fn rotate_faraway(a: &Analysis) -> Plan {
    let fw = match a.faraway() {
        Some(f) => f,
        None => return Plan::empty(),
    };
    let c = a.center();
    let from = a.robots[fw.mover];
    // Rotate away from the axis pole, along the short arc that carries the
    // entry point onto the designated antipode.
    let total_raw = ccw_angle(c, fw.entry, fw.target);
    let sign = if total_raw <= PI { 1.0 } else { -1.0 };
    let total = total_raw.min(2.0 * PI - total_raw);
    let done_raw = ccw_angle(c, fw.entry, from);
    let done = done_raw.min(2.0 * PI - done_raw);
    let sweep = sign * (total - done).max(0.0);
    Plan::one(Rule::Move(19), fw.mover, from, Path::arc(a.sec, from, sweep))
}

/// Radial slide of an axis robot to the given distance from the centre.
fn radial_to(c: Point, from: Point, radius: f64) -> Path {
    let target = c.add(from.sub(c).normalize().scale(radius));
    Path::line(from, target)
}

/// The occupied distances from the centre of every robot except `skip`.
fn other_radii(a: &Analysis, skip: usize) -> Vec<f64> {
    let c = a.center();
    let mut radii: Vec<f64> = Vec::new();
    for (i, p) in a.robots.iter().enumerate() {
        if i == skip {
            continue;
        }
        let d = p.dist(c);
        if !radii.iter().any(|&r| approx_eq(r, d)) {
            radii.push(d);
        }
    }
    radii.sort_by(f64::total_cmp);
    radii
}

/// The parking slide of the outer axis robot: the nearest radius at which it
/// would sit alone, halfway between its neighbouring occupied circles.
fn parking_target(a: &Analysis, rhat2: usize) -> Option<Point> {
    let c = a.center();
    let from = a.robots[rhat2];
    let rho = from.dist(c);
    if approx_zero(rho) {
        return None;
    }
    let radii = other_radii(a, rhat2);
    let inner = radii
        .iter()
        .copied()
        .filter(|&r| approx_lt(r, rho))
        .fold(0.0, f64::max);
    let outer = radii.iter().copied().find(|&r| approx_lt(rho, r));
    let shares = radii.iter().any(|&r| approx_eq(r, rho));
    let target = if shares {
        let down = 0.5 * (inner + rho);
        match outer {
            Some(o) => {
                let up = 0.5 * (rho + o);
                if (rho - down) <= (up - rho) {
                    down
                } else {
                    up
                }
            }
            None => down,
        }
    } else {
        match outer {
            Some(o) => 0.5 * (inner + o),
            None => return None,
        }
    };
    if approx_eq(target, rho) {
        return None;
    }
    Some(c.add(from.sub(c).normalize().scale(target)))
}

/// m20: the inner axis robot walks to the centre while the outer one parks
/// alone halfway between its neighbouring circles.
fn descend_with_park(a: &Analysis) -> Plan {
    let axis = match a.axis_two_free() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let order = a.axis_order(&axis);
    if order.len() < 2 {
        return Plan::empty();
    }
    let (r1, r2) = (order[0], order[1]);
    let c = a.center();
    let mut actions = Vec::new();
    if has_rotational_free_path(&a.robots, r1) && !a.robots[r1].approx_eq(c) {
        actions.push(Action {
            robot: r1,
            path: Path::line(a.robots[r1], c),
        });
    }
    if !a.second_axis_robot_parked(&axis) {
        if let Some(t) = parking_target(a, r2) {
            actions.push(Action {
                robot: r2,
                path: Path::line(a.robots[r2], t),
            });
        }
    }
    Plan {
        rule: Some(Rule::Move(20)),
        actions,
    }
}

/// m21: the inner axis robot walks to the centre (or halves its distance to
/// the next circle when blocked) while the critical axis robot slides out of
/// the locked window.
fn descend_with_slide(a: &Analysis) -> Plan {
    let axis = match a.axis_pair_one_critical() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let order = a.axis_order(&axis);
    if order.len() < 2 {
        return Plan::empty();
    }
    let (r1, r2) = (order[0], order[1]);
    let c = a.center();
    let mut actions = Vec::new();
    if !a.robots[r1].approx_eq(c) {
        if has_rotational_free_path(&a.robots, r1) {
            actions.push(Action {
                robot: r1,
                path: Path::line(a.robots[r1], c),
            });
        } else {
            let rho = a.robots[r1].dist(c);
            let next = other_radii(a, r1)
                .into_iter()
                .filter(|&r| approx_lt(r, rho))
                .fold(0.0, f64::max);
            let halfway = 0.5 * (rho + next);
            if !approx_eq(halfway, rho) {
                actions.push(Action {
                    robot: r1,
                    path: radial_to(c, a.robots[r1], halfway),
                });
            }
        }
    }
    if let Some(window) = a.slide_window(&axis, r2) {
        let at = a.robots[r2];
        if window.contains(at) && !at.approx_eq(window.outer_stop) {
            let target = window.safe_stop.unwrap_or(window.outer_stop);
            if !target.approx_eq(at) {
                actions.push(Action {
                    robot: r2,
                    path: Path::line(at, target),
                });
            }
        }
    }
    Plan {
        rule: Some(Rule::Move(21)),
        actions,
    }
}

/// m22: the free axis robot walks to the centre.
fn descend_center(a: &Analysis) -> Plan {
    let axis = match a.axis_triple_two_critical() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let order = a.axis_order(&axis);
    let r1 = match order.first() {
        Some(&r) => r,
        None => return Plan::empty(),
    };
    let c = a.center();
    Plan::one(Rule::Move(22), r1, a.robots[r1], Path::line(a.robots[r1], c))
}

/// m23: the axis robot nearer to the others' circle steps onto the free pole
/// of that circle.
fn step_to_boundary(a: &Analysis) -> Plan {
    let axis = match a.axis_pair_both_critical() {
        Some(x) => x,
        None => return Plan::empty(),
    };
    let order = a.axis_order(&axis);
    if order.len() < 2 {
        return Plan::empty();
    }
    let others: Vec<Point> = a
        .robots
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != order[0] && i != order[1])
        .map(|(_, p)| *p)
        .collect();
    if others.is_empty() {
        return Plan::empty();
    }
    let ring = smallest_enclosing_circle(&others);
    let gap = |i: usize| (a.robots[i].dist(ring.center) - ring.radius).abs();
    let mover = if gap(order[1]) < gap(order[0]) - tol(gap(order[0]), 1.0) {
        order[1]
    } else {
        order[0]
    };
    let other_axis = if mover == order[0] { order[1] } else { order[0] };
    let rest: Vec<Point> = a
        .robots
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mover)
        .map(|(_, p)| *p)
        .collect();
    let circ = smallest_enclosing_circle(&rest);
    let from = a.robots[mover];
    let blocked = |t: Point| {
        let x = a.robots[other_axis];
        point_on_segment(x, from, t) && !x.approx_eq(t) && !x.approx_eq(from)
    };
    let mut candidates: Vec<Point> = line_circle_intersections(circ.center, axis.dir, &circ)
        .into_iter()
        .filter(|&t| !t.approx_eq(a.robots[other_axis]) && !blocked(t))
        .collect();
    candidates.sort_by(|x, y| {
        from.dist(*x)
            .total_cmp(&from.dist(*y))
            .then(x.canonical_cmp(*y))
    });
    let target = match candidates.first() {
        Some(&t) => t,
        None => return Plan::empty(),
    };
    Plan::one(Rule::Move(23), mover, from, Path::line(from, target))
}

/// m24: the robot closest to the centre leaves it for a point of the guard
/// circle lying on no symmetry axis and away from the reference angle of
/// every boundary robot.
fn eject_center(a: &Analysis) -> Plan {
    let c = a.center();
    let mut dists: Vec<(f64, usize)> = a
        .robots
        .iter()
        .enumerate()
        .map(|(i, p)| (p.dist(c), i))
        .collect();
    dists.sort_by(|x, y| x.0.total_cmp(&y.0));
    let closest = dists[0].0;
    let candidates: Vec<usize> = dists
        .iter()
        .filter(|(d, _)| approx_eq(*d, closest))
        .map(|&(_, i)| i)
        .collect();
    let mover = match min_view_index(&a.robots, &candidates, c) {
        Some(m) => m,
        None => candidates[0],
    };
    let guard = match &a.scan.guard_circle {
        Some(g) => *g,
        None => return Plan::empty(),
    };
    let from = a.robots[mover];

    // Forbidden directions: symmetry axes and the reference angle around
    // every boundary robot.
    let mut forbidden: Vec<f64> = Vec::new();
    for axis in &a.sym.reflection_axes {
        let base = axis.dir.angle();
        forbidden.push(normalize_angle(base));
        forbidden.push(normalize_angle(base + PI));
    }
    for &b in &boundary_reps(a) {
        let base = a.robots[b].sub(c).angle();
        forbidden.push(normalize_angle(base + a.stats.alpha));
        forbidden.push(normalize_angle(base - a.stats.alpha));
    }
    let margin = (a.stats.alpha / 8.0).min(0.01);
    let theta0 = if !from.approx_eq(c) {
        from.sub(c).angle()
    } else {
        let reps = boundary_reps(a);
        let anchor = min_view_index(&a.robots, &reps, c).unwrap_or(reps[0]);
        a.robots[anchor].sub(c).angle()
    };
    let sign = tie_sign(&a.robots, c);
    let step = a.stats.alpha / 3.0;
    let mut theta = theta0;
    for k in 0..2048 {
        theta = theta0 + sign * step * k as f64;
        let clear = forbidden.iter().all(|&f| {
            let d = normalize_angle(theta - f);
            d.min(2.0 * PI - d) > margin
        });
        if clear {
            break;
        }
    }
    let target = guard.point_at(theta);
    Plan::one(Rule::Move(24), mover, from, Path::line(from, target))
}

// ---------------------------------------------------------------------------
// the dedicated three-robot algorithm

/// Interior angles of the triangle at each of the three points.
fn tri_angles(p: &[Point; 3]) -> [f64; 3] {
    [
        angle_at(p[0], p[1], p[2]),
        angle_at(p[1], p[0], p[2]),
        angle_at(p[2], p[0], p[1]),
    ]
}

/// Indices ordered by ascending interior angle. Ties between the two
/// smallest are broken by keeping the robot farther from the largest-angle
/// robot first, matching the side-length convention of the case analysis.
fn tri_order(p: &[Point; 3]) -> [usize; 3] {
    let ang = tri_angles(p);
    let mut idx = [0, 1, 2];
    idx.sort_by(|&i, &j| ang[i].total_cmp(&ang[j]));
    let top = p[idx[2]];
    if approx_eq(ang[idx[0]], ang[idx[1]]) {
        let (d0, d1) = (p[idx[0]].dist(top), p[idx[1]].dist(top));
        if d1 > d0 + tol(d0, 1.0)
            || (approx_eq(d0, d1) && p[idx[1]].canonical_cmp(p[idx[0]]).is_lt())
        {
            idx.swap(0, 1);
        }
    }
    idx
}

/// Similarity images of `f3` under the two maps carrying `(f1, f2)` onto
/// `(q1, q2)`.
fn embed_third(f1: Point, f2: Point, f3: Point, q1: Point, q2: Point) -> Vec<Point> {
    let base_f = f2.sub(f1);
    let base_q = q2.sub(q1);
    if approx_zero(base_f.norm()) || approx_zero(base_q.norm()) {
        return Vec::new();
    }
    let k = base_q.norm() / base_f.norm();
    let rot = base_q.angle() - base_f.angle();
    let direct = q1.add(f3.sub(f1).rotate(rot).scale(k));
    let mirrored_f3 = f3.reflect_across(f1, base_f);
    let mirrored = q1.add(mirrored_f3.sub(f1).rotate(rot).scale(k));
    if direct.approx_eq(mirrored) {
        vec![direct]
    } else {
        vec![direct, mirrored]
    }
}

/// The command for a three-robot configuration.
pub fn three_robot_plan(robots: &[Point], pattern: &[Point]) -> Plan {
    assert_eq!(robots.len(), 3);
    assert_eq!(pattern.len(), 3);
    if crate::config::similar(robots, pattern) {
        return Plan::empty();
    }
    let p: [Point; 3] = [robots[0], robots[1], robots[2]];
    let ang = tri_angles(&p);
    let order = tri_order(&p);
    let (a1, a2, a3) = (ang[order[0]], ang[order[1]], ang[order[2]]);

    let mut pat_distinct: Vec<Point> = Vec::new();
    for &f in pattern {
        if !pat_distinct.iter().any(|q| q.approx_eq(f)) {
            pat_distinct.push(f);
        }
    }
    let pat_mult = pat_distinct.len() < 3;
    let degenerate_f = pat_mult || {
        let f: [Point; 3] = [pattern[0], pattern[1], pattern[2]];
        let bang = tri_angles(&f);
        bang.iter().any(|&b| approx_eq(b, PI))
    };

    if approx_eq(a3, PI) {
        return tri_line(robots, pattern, order, pat_mult);
    }
    if degenerate_f {
        if approx_lt(a1, a2) {
            return tri_balance(robots, order);
        }
        return tri_merge(robots, order);
    }

    let f: [Point; 3] = [pattern[0], pattern[1], pattern[2]];
    let fang = tri_angles(&f);
    let forder = tri_order(&f);
    let (b1, b2, b3) = (fang[forder[0]], fang[forder[1]], fang[forder[2]]);

    if approx_eq(a2, a3) {
        if !approx_eq(a1, b1) {
            return tri_axis(robots, order, b1);
        }
        return tri_circle(robots, order, (a1, a2, a3), (b1, b2, b3), Rule::TriTwin);
    }
    if approx_eq(a1, b1) {
        return tri_circle(robots, order, (a1, a2, a3), (b1, b2, b3), Rule::TriCircle);
    }
    tri_free(robots, &f, forder, order)
}

/// The apex slides along the axis until its angle matches the pattern's
/// smallest one.
fn tri_axis(robots: &[Point], order: [usize; 3], b1: f64) -> Plan {
    let apex = order[0];
    let (x, y) = (robots[order[1]], robots[order[2]]);
    let mid = x.lerp(y, 0.5);
    let from = robots[apex];
    let u = from.sub(mid);
    if approx_zero(u.norm()) {
        return Plan::empty();
    }
    let h = 0.5 * x.dist(y) / (b1 / 2.0).tan();
    let target = mid.add(u.normalize().scale(h));
    Plan::one(Rule::TriAxis, apex, from, Path::line(from, target))
}

/// The smallest-angle robot rotates along the circumcircle to the point
/// completing the pattern's angles.
fn tri_circle(
    robots: &[Point],
    order: [usize; 3],
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    rule: Rule,
) -> Plan {
    let circ = match circumcircle(robots[0], robots[1], robots[2]) {
        Some(c) => c,
        None => return Plan::empty(),
    };
    // Enumerate role assignments consistent with the (possibly tied) angle
    // ordering: the mover gets the smallest pattern angle, the other two are
    // assigned the middle and largest angles.
    let mut assignments: Vec<(usize, usize, usize)> = vec![(order[0], order[1], order[2])];
    if approx_eq(a.1, a.2) {
        assignments.push((order[0], order[2], order[1]));
    }
    if approx_eq(a.0, a.1) {
        assignments.push((order[1], order[0], order[2]));
        if approx_eq(a.1, a.2) {
            assignments.push((order[1], order[2], order[0]));
        }
    }
    let _ = (a.0, b.0);
    let mut best: Option<(f64, usize, f64)> = None; // (arc dist, mover, sweep)
    for (m, i2, i3) in assignments {
        let (q2, q3) = (robots[i2], robots[i3]);
        let from = robots[m];
        let chord_side = q3.sub(q2).cross(from.sub(q2)).signum();
        // Inscribed angle at q2 equals b2 when the arc from q3 to the mover
        // (away from q2) spans twice that angle.
        for sgn in [1.0, -1.0] {
            let cand = q3.rotate_about(circ.center, sgn * 2.0 * b.1);
            if q3.sub(q2).cross(cand.sub(q2)).signum() != chord_side {
                continue;
            }
            if cand.approx_eq(q2) || cand.approx_eq(q3) {
                continue;
            }
            if !approx_eq(angle_at(q2, q3, cand), b.1) || !approx_eq(angle_at(q3, q2, cand), b.2) {
                continue;
            }
            let sweep = free_sweep(&circ, from, cand, &[q2, q3]);
            let dist = sweep.abs();
            if best.as_ref().map_or(true, |(d, _, _)| dist < *d) {
                best = Some((dist, m, sweep));
            }
        }
    }
    let (_, mover, sweep) = match best {
        Some(b) => b,
        None => return Plan::empty(),
    };
    Plan::one(rule, mover, robots[mover], Path::arc(circ, robots[mover], sweep))
}

/// The largest-angle robot walks straight to the nearest embedded image of
/// its pattern point.
fn tri_free(robots: &[Point], f: &[Point; 3], forder: [usize; 3], order: [usize; 3]) -> Plan {
    let mover = order[2];
    let from = robots[mover];
    let ang = tri_angles(&[robots[0], robots[1], robots[2]]);
    let mut assignments: Vec<(usize, usize)> = vec![(order[0], order[1])];
    if approx_eq(ang[order[0]], ang[order[1]]) {
        assignments.push((order[1], order[0]));
    }
    let (f1, f2, f3) = (f[forder[0]], f[forder[1]], f[forder[2]]);
    let mut best: Option<Point> = None;
    for (i1, i2) in assignments {
        for t in embed_third(f1, f2, f3, robots[i1], robots[i2]) {
            let better = match &best {
                None => true,
                Some(b) => {
                    from.dist(t) < from.dist(*b) - tol(from.dist(*b), 1.0)
                        || (approx_eq(from.dist(t), from.dist(*b)) && t.canonical_cmp(*b).is_lt())
                }
            };
            if better {
                best = Some(t);
            }
        }
    }
    let target = match best {
        Some(t) => t,
        None => return Plan::empty(),
    };
    Plan::one(Rule::TriFree, mover, from, Path::line(from, target))
}

/// Degenerate pattern: the smallest-angle robot rotates along the
/// circumcircle until the two smallest angles tie.
fn tri_balance(robots: &[Point], order: [usize; 3]) -> Plan {
    let circ = match circumcircle(robots[0], robots[1], robots[2]) {
        Some(c) => c,
        None => return Plan::empty(),
    };
    let mover = order[0];
    let from = robots[mover];
    let ang = tri_angles(&[robots[0], robots[1], robots[2]]);
    let a1 = ang[mover];
    let mut best: Option<(f64, f64)> = None; // (|sweep|, sweep)
    for (fixed, other) in [(order[1], order[2]), (order[2], order[1])] {
        let (q, o) = (robots[fixed], robots[other]);
        let chord_side = o.sub(q).cross(from.sub(q)).signum();
        for sgn in [1.0, -1.0] {
            // Make the angle at `q` equal to the mover's (constant) angle.
            let cand = o.rotate_about(circ.center, sgn * 2.0 * a1);
            if o.sub(q).cross(cand.sub(q)).signum() != chord_side {
                continue;
            }
            if cand.approx_eq(q) || cand.approx_eq(o) {
                continue;
            }
            if !approx_eq(angle_at(q, o, cand), a1) {
                continue;
            }
            let sweep = free_sweep(&circ, from, cand, &[q, o]);
            if best.as_ref().map_or(true, |(d, _)| sweep.abs() < *d) {
                best = Some((sweep.abs(), sweep));
            }
        }
    }
    let (_, sweep) = match best {
        Some(b) => b,
        None => return Plan::empty(),
    };
    Plan::one(Rule::TriBalance, mover, from, Path::arc(circ, from, sweep))
}

/// Degenerate pattern, isosceles configuration: the apex slides down the
/// perpendicular bisector onto the midpoint of the base.
fn tri_merge(robots: &[Point], order: [usize; 3]) -> Plan {
    let mover = order[2];
    let from = robots[mover];
    let q = robots[order[0]].lerp(robots[order[1]], 0.5);
    Plan::one(Rule::TriMerge, mover, from, Path::line(from, q))
}

/// Collinear configuration: the middle robot walks straight to the embedded
/// image of the pattern's middle point.
fn tri_line(robots: &[Point], pattern: &[Point], order: [usize; 3], pat_mult: bool) -> Plan {
    let mover = order[2]; // the middle robot carries the straight angle
    let from = robots[mover];
    let (r1, r2) = (robots[order[0]], robots[order[1]]);
    let (f1, f2, f3) = if pat_mult {
        // The doubled point plays the roles of both nearer points.
        let mut distinct: Vec<(Point, usize)> = Vec::new();
        for &f in pattern {
            match distinct.iter_mut().find(|(q, _)| q.approx_eq(f)) {
                Some((_, m)) => *m += 1,
                None => distinct.push((f, 1)),
            }
        }
        if distinct.len() != 2 {
            return Plan::empty();
        }
        let single = distinct.iter().find(|(_, m)| *m == 1).map(|(q, _)| *q);
        let double = distinct.iter().find(|(_, m)| *m > 1).map(|(q, _)| *q);
        match (single, double) {
            (Some(s), Some(d)) => (s, d, d),
            _ => return Plan::empty(),
        }
    } else {
        let f: [Point; 3] = [pattern[0], pattern[1], pattern[2]];
        let forder = tri_order(&f);
        (f[forder[0]], f[forder[1]], f[forder[2]])
    };
    let mut best: Option<Point> = None;
    for t in embed_third(f1, f2, f3, r1, r2) {
        let better = match &best {
            None => true,
            Some(b) => {
                from.dist(t) < from.dist(*b) - tol(from.dist(*b), 1.0)
                    || (approx_eq(from.dist(t), from.dist(*b)) && t.canonical_cmp(*b).is_lt())
            }
        };
        if better {
            best = Some(t);
        }
    }
    let target = match best {
        Some(t) => t,
        None => return Plan::empty(),
    };
    Plan::one(Rule::TriLine, mover, from, Path::line(from, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::approx_ge;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn on_circle(deg: f64) -> Point {
        let a = deg.to_radians();
        pt(a.cos(), a.sin())
    }

    fn base_pattern() -> Vec<Point> {
        vec![pt(1.0, 0.0), pt(-1.0, 0.0), pt(0.3, 0.0), pt(0.0, -0.45)]
    }

    fn make_plan(robots: &[Point], pattern: &[Point]) -> Plan {
        let stats = PatternStats::new(pattern);
        plan(robots, pattern, &stats)
    }

    #[test]
    fn retreat_clamps_onto_pattern_ring() {
        // Five boundary robots and one interior robot; the configuration is
        // in the trimming stage and the retreating robot must stop on the
        // rescaled 0.3-ring of the pattern, which lies between the target
        // circle and the boundary... or reach the target if no ring is
        // crossed strictly inside the path.
        let robots = vec![
            on_circle(10.0),
            on_circle(80.0),
            on_circle(160.0),
            on_circle(220.0),
            on_circle(300.0),
            pt(0.03, 0.04),
        ];
        let pattern = base_pattern();
        let p = make_plan(&robots, &pattern);
        assert_eq!(p.rule, Some(Rule::Move(1)));
        assert_eq!(p.actions.len(), 1);
        let act = &p.actions[0];
        let end = act.path.end_point();
        let stats = PatternStats::new(&pattern);
        let a = Analysis::new(&robots, &pattern, &stats);
        let d01 = a.fam.delta01();
        let end_r = end.norm();
        // Either the halfway circle or a pattern ring strictly outside it.
        assert!(approx_ge(end_r, d01) && end_r < 1.0);
        let rings = stats.scaled_ring_radii(1.0);
        let on_ring = rings.iter().any(|&r| approx_eq(r, end_r));
        assert!(approx_eq(end_r, d01) || on_ring);
    }

    #[test]
    fn square_triangle_targets_antipode() {
        // Boundary triangle with angles ~ (75, 65, 40): no right angle, so
        // the mover is the middle-angle robot and the end of the rotation
        // must make the chord between it and the smallest-angle robot a
        // diameter.
        let robots = vec![
            on_circle(0.0),
            on_circle(130.0),
            on_circle(280.0),
            pt(0.1, 0.23),
        ];
        let pattern = base_pattern();
        let p = make_plan(&robots, &pattern);
        assert_eq!(p.rule, Some(Rule::Move(4)));
        let act = &p.actions[0];
        let end = act.path.end_point();
        // After the full rotation the largest angle must be right.
        let mut pts = robots.clone();
        pts[act.robot] = end;
        let stats = PatternStats::new(&pattern);
        let a = Analysis::new(&pts, &pattern, &stats);
        let angles = a.triangle_angles().expect("three boundary robots");
        assert!(angles.iter().any(|&x| approx_eq(x, PI / 2.0)));
    }

    #[test]
    fn dist_min_sidesteps_blocker() {
        // A robot straight on the segment forces the sidestep: the waypoint
        // must leave the segment, stay inside the boundary circle, and
        // strictly reduce the distance to the target.
        let robots = vec![
            on_circle(90.0),
            on_circle(270.0),
            pt(0.6, 0.05),
            pt(0.2, 0.05),
            pt(-0.4, 0.05),
        ];
        let pattern = base_pattern();
        let stats = PatternStats::new(&pattern);
        let a = Analysis::new(&robots, &pattern, &stats);
        let f = pt(-0.8, 0.05);
        let plan = dist_min(&a, 2, f, Rule::Move(12));
        let act = &plan.actions[0];
        let end = act.path.end_point();
        assert!(end.dist(f) < robots[2].dist(f));
        assert!(end.norm() < 1.0);
        for (i, r) in robots.iter().enumerate() {
            if i != 2 {
                assert!(!point_on_segment(*r, end, f) || r.approx_eq(f));
            }
        }
    }

    #[test]
    fn three_robots_axis_case() {
        // Isosceles with apex angle 40 degrees; pattern isosceles with apex
        // 60: the apex slides along the axis.
        let apex = pt(0.0, (20.0_f64.to_radians()).cos() / (20.0_f64.to_radians()).sin() * 0.5);
        let robots = vec![pt(-0.5, 0.0), pt(0.5, 0.0), apex];
        let pattern = vec![pt(-0.5, 0.0), pt(0.5, 0.0), pt(0.0, 0.866_025_403_784_438_6)];
        let p = make_plan(&robots, &pattern);
        assert_eq!(p.rule, Some(Rule::TriAxis));
        let act = &p.actions[0];
        assert_eq!(act.robot, 2);
        let end = act.path.end_point();
        // The slide must make the apex angle equal to 60 degrees.
        let ang = angle_at(end, robots[0], robots[1]);
        assert!(approx_eq(ang, PI / 3.0));
        // And the target stays on the axis.
        assert!(approx_zero(end.x));
    }

    #[test]
    fn three_robots_collinear_multiplicity() {
        // Collinear robots, pattern with a doubled point: the middle robot
        // walks onto the nearer endpoint, forming the multiplicity.
        let robots = vec![pt(-1.0, 0.0), pt(1.0, 0.0), pt(0.4, 0.0)];
        let pattern = vec![pt(0.0, 0.0), pt(2.0, 0.0), pt(2.0, 0.0)];
        let p = make_plan(&robots, &pattern);
        assert_eq!(p.rule, Some(Rule::TriLine));
        let act = &p.actions[0];
        assert_eq!(act.robot, 2);
        let end = act.path.end_point();
        assert!(end.approx_eq(pt(1.0, 0.0)));
    }

    #[test]
    fn three_robots_circle_case_completes_pattern() {
        // Asymmetric triangle sharing its smallest angle with the pattern:
        // the smallest-angle robot rotates along the circumcircle and the
        // end point makes the triangles similar.
        let pattern = vec![on_circle(0.0), on_circle(140.0), on_circle(250.0)];
        let p_ang = tri_angles(&[pattern[0], pattern[1], pattern[2]]);
        let order = tri_order(&[pattern[0], pattern[1], pattern[2]]);
        let b1 = p_ang[order[0]];
        // Build a configuration with the same smallest angle but different
        // larger angles: keep the chord of the two other robots, move the
        // smallest-angle robot along the circle.
        let robots = vec![on_circle(20.0), on_circle(140.0), on_circle(250.0)];
        let r_ang = tri_angles(&[robots[0], robots[1], robots[2]]);
        let r_order = tri_order(&[robots[0], robots[1], robots[2]]);
        assert!(approx_eq(r_ang[r_order[0]], b1), "construction keeps the smallest angle");
        let p = make_plan(&robots, &pattern);
        assert_eq!(p.rule, Some(Rule::TriCircle));
        let act = &p.actions[0];
        let mut pts = robots.clone();
        pts[act.robot] = act.path.end_point();
        assert!(crate::config::similar(&pts, &pattern));
    }

    #[test]
    fn eject_center_avoids_axes_and_reference_angles() {
        // A square with a centre robot: the centre robot is sent onto the
        // guard circle in a direction away from every axis.
        let robots = vec![
            on_circle(0.0),
            on_circle(90.0),
            on_circle(180.0),
            on_circle(270.0),
            pt(0.0, 0.0),
        ];
        let pattern = vec![
            on_circle(10.0),
            on_circle(100.0),
            on_circle(190.0),
            on_circle(280.0),
            pt(0.2, 0.0),
        ];
        let stats = PatternStats::new(&pattern);
        let p = plan(&robots, &pattern, &stats);
        assert_eq!(p.rule, Some(Rule::Move(24)));
        let act = &p.actions[0];
        assert_eq!(act.robot, 4);
        let end = act.path.end_point();
        let a = Analysis::new(&robots, &pattern, &stats);
        for axis in &a.sym.reflection_axes {
            assert!(!axis.contains(end), "landing point must avoid axes");
        }
        for &b in &a.boundary {
            assert!(!approx_eq(angle_at(pt(0.0, 0.0), end, robots[b]), stats.alpha));
        }
    }

    #[test]
    fn faraway_slide_creates_escape_structure() {
        // An axis configuration without a free path to the centre: the slid
        // robot must land so that the escape structure (three boundary
        // robots, mover farthest, narrow wedge) holds.
        let robots = vec![
            on_circle(90.0),
            on_circle(200.0),
            on_circle(340.0),
            pt(0.3, 0.1),
            pt(-0.3, 0.1),
        ];
        let pattern = base_pattern();
        let stats = PatternStats::new(&pattern);
        let a = Analysis::new(&robots, &pattern, &stats);
        if let Some((axis, mover)) = a.axis_with_one() {
            if let Some(t) = faraway_slide_target(&a, &axis, mover) {
                let mut pts: Vec<Point> = robots
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != mover)
                    .map(|(_, p)| *p)
                    .collect();
                pts.push(t);
                let check = Analysis::new(&pts, &pattern, &stats);
                let fw = check.faraway().expect("slide target forms the escape structure");
                assert!(pts[fw.mover].approx_eq(t));
            }
        }
    }
}
