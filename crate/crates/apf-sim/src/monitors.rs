//! Trace verification: replay a JSONL trace while re-deriving every decision
//! independently, and flag anything the algorithm's correctness argument
//! forbids.
//!
//! The checker never trusts the recorded classification: positions are
//! replayed event by event, snapshots are re-classified, commands are
//! re-planned, and mid-move configurations are re-sampled (including the
//! exact parameter values where a mover crosses a scaled pattern ring, the
//! guard circle or the teleporter circle, since those crossings are where a
//! stop-skipping bug flips the classification).

use crate::config::{distinct_with_mult, is_leader_configuration, similar};
use crate::embedding::{guard_scan, PatternStats};
use crate::engine::{
    digest, CommandRecord, Scenario, SegRecord, TraceEvent, TraceFooter, TraceHeader,
};
use crate::geom::{
    approx_eq, boundary_indices, segment_circle_intersections, smallest_enclosing_circle, Circle,
    Path, PathSeg, Point, SNAP_EPS,
};
use crate::moves;
use crate::predicates::{Analysis, Classification, Phase, SubPhase};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// What a trace check can flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ViolationKind {
    /// A stationary snapshot matched more than one sub-phase predicate.
    MultiPhase,
    /// A stationary, unformed snapshot matched no sub-phase predicate.
    ZeroPhase,
    /// Motion not covered by the designation of the move in progress.
    UnsafeMove,
    /// A mover passed through an occupied point away from its target.
    Collision,
    /// A stationary, unformed configuration stopped being a leader
    /// configuration.
    LeaderLost,
    /// A multiplicity appeared somewhere the pattern does not ask for one.
    BadMultiplicity,
    /// A phase transition outside the declared end states, or a bounded
    /// loop that ran past its bound.
    Regression,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::MultiPhase => "multiPhase",
            ViolationKind::ZeroPhase => "zeroPhase",
            ViolationKind::UnsafeMove => "unsafeMove",
            ViolationKind::Collision => "collision",
            ViolationKind::LeaderLost => "leaderLost",
            ViolationKind::BadMultiplicity => "badMultiplicity",
            ViolationKind::Regression => "regression",
        };
        f.write_str(s)
    }
}

/// One flagged defect, tied to the trace step and the offending snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub step: u64,
    pub kind: ViolationKind,
    pub detail: String,
    pub digest: String,
}

/// Why a trace could not be checked at all.
#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error("IncompleteTrace: {0}")]
    IncompleteTrace(String),
    #[error("TooSmall: need at least 3 points, got {0}")]
    TooSmall(usize),
}

// ---------------------------------------------------------------------------
// leader election pattern

/// The collinear pattern whose formation elects a leader: points at
/// x = 0, 1, ..., n-2 and one more at x = n, so exactly one point ends up
/// with its unique nearest neighbour at twice the base spacing.
pub fn leader_election_pattern(n: usize) -> Result<Vec<Point>, MonitorError> {
    if n < 3 {
        return Err(MonitorError::TooSmall(n));
    }
    let mut pts: Vec<Point> = (0..n - 1).map(|i| Point::new(i as f64, 0.0)).collect();
    pts.push(Point::new(n as f64, 0.0));
    Ok(pts)
}

/// If the configuration elects a leader by spacing — exactly one robot whose
/// nearest neighbour sits at twice the minimum pairwise distance — return
/// that robot.
pub fn elected_leader(positions: &[Point]) -> Option<usize> {
    let n = positions.len();
    if n < 3 {
        return None;
    }
    let mut min_dist = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_dist = min_dist.min(positions[i].dist(positions[j]));
        }
    }
    if !(min_dist > 0.0) {
        return None;
    }
    let nearest = |i: usize| -> f64 {
        positions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.dist(positions[i]))
            .fold(f64::INFINITY, f64::min)
    };
    let mut leader = None;
    for i in 0..n {
        let d = nearest(i);
        if approx_eq(d, 2.0 * min_dist) {
            if leader.is_some() {
                return None; // not unique
            }
            leader = Some(i);
        } else if !approx_eq(d, min_dist) {
            return None; // a third spacing class breaks the scheme
        }
    }
    leader
}

// ---------------------------------------------------------------------------
// the per-sub-phase end states (which stationary classes a move may reach)

/// Declared reachable states when a move fired from `sub` completes:
/// sub-phases inside or outside the current phase, whole phases, and whether
/// the terminal predicate may become true. Staying in `sub` itself is always
/// legal (staged stops re-fire the same move).
fn end_states(sub: SubPhase) -> (&'static [SubPhase], &'static [Phase], bool) {
    use Phase::*;
    use SubPhase::*;
    match sub {
        A1 | A2 => (&[A1, A2, C1, C2, D, E1], &[Finish], true),
        B => (&[C1, C2, D], &[], false),
        C1 => (&[C2, D, E1], &[Finish, BreakSymmetry], true),
        C2 => (&[D], &[], false),
        D => (&[E1], &[MatchTargets], false),
        E1 => (&[E2], &[PlaceGuards, Finish], true),
        E2 => (&[], &[PlaceGuards, Finish], true),
        G1 => (&[G2], &[MatchTargets, Finish], true),
        G2 => (&[], &[MatchTargets, Finish], false),
        H => (&[G2], &[], false),
        M => (&[O], &[], false),
        N => (&[M, O], &[], false),
        O => (&[M, N, O], &[Finish], false),
        P1 => (&[P2], &[], false),
        P2 => (&[], &[], true),
        Q1 => (&[Q2, Q3], &[], false),
        Q2 => (&[Q3], &[], false),
        Q3 => (&[Q4], &[], true),
        Q4 => (&[], &[], true),
        T => (&[T, U, W], &[], true),
        U => (&[U], &[TrimBoundary], true),
        V1 | V2 | V3 => (&[W], &[], true),
        V4 => (&[V2], &[], true),
        W => (&[], &[TrimBoundary, PlaceGuards, Finish], false),
    }
}

fn phase_subs(p: Phase) -> &'static [SubPhase] {
    use SubPhase::*;
    match p {
        Phase::TrimBoundary => &[A1, A2, B, C1, C2, D, E1, E2],
        Phase::PlaceGuards => &[G1, G2, H],
        Phase::MatchTargets => &[M, N, O],
        Phase::Finish => &[P1, P2, Q1, Q2, Q3, Q4],
        Phase::BreakSymmetry => &[T, U, V1, V2, V3, V4, W],
        Phase::Formed => &[],
    }
}

/// Stationary epochs only sample the run: with obsolete-snapshot computes in
/// flight, several moves can complete between two observed epochs, so the
/// observed transition must be a chain of at most `k` declared end-state
/// steps (staying put is always such a step).
fn reachable_within(from: SubPhase, to: Option<SubPhase>, to_formed: bool, k: u64) -> bool {
    let mut seen: BTreeSet<SubPhase> = BTreeSet::new();
    let mut formed_seen = false;
    seen.insert(from);
    let rounds = k.min(32);
    for _ in 0..rounds {
        let frontier: Vec<SubPhase> = seen.iter().copied().collect();
        let before = (seen.len(), formed_seen);
        for s in frontier {
            let (subs, phases, w_ok) = end_states(s);
            seen.extend(subs.iter().copied());
            for p in phases {
                seen.extend(phase_subs(*p).iter().copied());
            }
            formed_seen |= w_ok;
        }
        if (seen.len(), formed_seen) == before {
            break;
        }
        let done = match (to, to_formed) {
            (_, true) => formed_seen,
            (Some(t), false) => seen.contains(&t),
            (None, false) => true,
        };
        if done {
            return true;
        }
    }
    match (to, to_formed) {
        (_, true) => formed_seen,
        (Some(t), false) => seen.contains(&t),
        (None, false) => true,
    }
}

// ---------------------------------------------------------------------------
// transition-sequence audits

/// Bounds on how often the phase graph may revisit its loops.
#[derive(Debug, Clone, Copy)]
pub struct LoopBounds {
    /// Maximum boundary-trim alternations (one per robot retreat, with a
    /// safety factor for staged stops).
    pub trim_alternations: u64,
    /// Maximum re-entries into the target-matching loop.
    pub matching_revisits: u64,
}

impl LoopBounds {
    /// Bounds derived from the run parameters: each activation of a move
    /// traverses at least `nu`, so loop lengths scale with 1/nu.
    pub fn from_run(initial_boundary: usize, n: usize, nu: f64) -> LoopBounds {
        let per = (1.0 / nu).ceil() as u64;
        LoopBounds {
            trim_alternations: initial_boundary as u64 * per,
            // Normalised configurations have diameter two.
            matching_revisits: n as u64 * (2.0 / nu).ceil() as u64,
        }
    }
}

/// Audit a compressed stationary classification sequence: the two bounded
/// loops and the once-only cycle through the symmetry-breaking phase.
pub fn audit_sequence(
    seq: &[(Phase, Option<SubPhase>)],
    bounds: LoopBounds,
) -> Vec<String> {
    let mut problems = Vec::new();
    let mut trim_alt = 0u64;
    let mut match_moves = 0u64;
    let mut break_visits = 0u64;
    for w in seq.windows(2) {
        let (xp, xs) = w[0];
        let (yp, ys) = w[1];
        if xs == Some(SubPhase::A1) && ys == Some(SubPhase::A2) {
            trim_alt += 1;
        }
        let in_matching = |s: Option<SubPhase>| {
            matches!(s, Some(SubPhase::M) | Some(SubPhase::N) | Some(SubPhase::O))
        };
        if in_matching(xs) && in_matching(ys) && xs != ys {
            match_moves += 1;
        }
        if yp == Phase::BreakSymmetry && xp != Phase::BreakSymmetry {
            break_visits += 1;
        }
    }
    if let Some(&(first, _)) = seq.first() {
        if first == Phase::BreakSymmetry {
            break_visits += 1;
        }
    }
    if trim_alt > bounds.trim_alternations {
        problems.push(format!(
            "boundary-trim loop ran {trim_alt} times, bound {}",
            bounds.trim_alternations
        ));
    }
    if match_moves > bounds.matching_revisits {
        problems.push(format!(
            "target-matching loop ran {match_moves} times, bound {}",
            bounds.matching_revisits
        ));
    }
    if break_visits > 2 {
        problems.push(format!(
            "symmetry-breaking phase entered {break_visits} times, allowed at most twice"
        ));
    }
    problems
}

// ---------------------------------------------------------------------------
// trace replay

#[derive(Debug, Clone)]
struct Flight {
    path: Path,
    movers: Vec<usize>,
    move_id: String,
    frac: f64,
}

/// What independent re-planning of a snapshot yields: the rule, the sorted
/// designated movers, and each designated robot's commanded endpoint.
#[derive(Debug, Clone)]
struct PlanSummary {
    rule: Option<String>,
    movers: Vec<usize>,
    ends: Vec<(usize, Point)>,
}

#[derive(Debug, Clone, Default)]
struct RobotTrack {
    looked: Option<Vec<Point>>,
    flight: Option<Flight>,
    started: bool,
}

fn path_from_records(segs: &[SegRecord]) -> Path {
    let segs = segs
        .iter()
        .map(|rec| match rec {
            SegRecord::Line { from, to } => PathSeg::Line {
                from: Point::new(from[0], from[1]),
                to: Point::new(to[0], to[1]),
            },
            SegRecord::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let circle = Circle::new(Point::new(center[0], center[1]), *radius);
                PathSeg::Arc {
                    circle,
                    start: circle.angle_of(Point::new(start[0], start[1])),
                    sweep: *sweep,
                }
            }
        })
        .collect();
    Path { segs }
}

/// Arc-length fraction of the path point nearest to `p`, preferring the
/// earliest candidate at or after `hint` among near-ties.
fn fraction_of(path: &Path, p: Point, hint: f64) -> f64 {
    let total = path.length();
    if total <= 0.0 {
        return 1.0;
    }
    let mut best: Option<(f64, f64)> = None; // (distance, fraction)
    let mut acc = 0.0;
    for seg in &path.segs {
        let len = seg.length();
        if len == 0.0 {
            continue;
        }
        let local = match seg {
            PathSeg::Line { from, to } => {
                let dir = to.sub(*from).scale(1.0 / len);
                p.sub(*from).dot(dir).clamp(0.0, len) / len
            }
            PathSeg::Arc {
                circle,
                start,
                sweep,
            } => {
                let raw = crate::geom::normalize_angle(circle.angle_of(p) - start);
                let along = if *sweep >= 0.0 {
                    raw
                } else {
                    crate::geom::normalize_angle(-raw)
                };
                let span = sweep.abs();
                if along <= span {
                    along / span
                } else if along - span < std::f64::consts::TAU - along {
                    1.0
                } else {
                    0.0
                }
            }
        };
        for cand in [local, 0.0, 1.0] {
            let frac = (acc + cand * len) / total;
            let d = path.point_at(frac).dist(p);
            let better = match best {
                None => true,
                Some((bd, bf)) => {
                    d + 1e-12 < bd || (approx_eq(d, bd) && frac >= hint && bf < hint)
                }
            };
            if better {
                best = Some((d, frac));
            }
        }
        acc += len;
    }
    best.map(|(_, f)| f).unwrap_or(1.0)
}

/// Fractions in `(lo, hi)` where the path crosses any of the circles.
fn crossing_fractions(path: &Path, circles: &[Circle], lo: f64, hi: f64) -> Vec<f64> {
    let total = path.length();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut acc = 0.0;
    for seg in &path.segs {
        let len = seg.length();
        if len == 0.0 {
            continue;
        }
        if let PathSeg::Line { from, to } = seg {
            for c in circles {
                for (t, _) in segment_circle_intersections(*from, *to, c) {
                    let frac = (acc + t * len) / total;
                    if frac > lo + 1e-9 && frac < hi - 1e-9 {
                        out.push(frac);
                    }
                }
            }
        }
        // Arc segments keep a constant distance from their own centre; the
        // moves only ever arc around the configuration centre, so they cannot
        // cross a concentric circle.
        acc += len;
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

struct Checker<'a> {
    n: usize,
    pattern: &'a [Point],
    stats: &'a PatternStats,
    nu: f64,
    positions: Vec<Point>,
    tracks: Vec<RobotTrack>,
    violations: Vec<Violation>,
    seen: BTreeSet<(ViolationKind, String)>,
    /// Classification / plan caches keyed by the snapshot digest.
    class_cache: HashMap<String, Option<Classification>>,
    plan_cache: HashMap<String, Option<PlanSummary>>,
    /// Stationary classification sequence, compressed, with epoch digests.
    epochs: Vec<(Phase, Option<SubPhase>, String)>,
    /// Robots that completed a move since the previous stationary epoch.
    moved_since_epoch: BTreeSet<usize>,
    /// Completed moves since the previous stationary epoch.
    moves_since_epoch: u64,
    last_epoch_digest: String,
    /// Transition labels as the engine records them (at stationary looks).
    look_labels: Vec<String>,
    initial_boundary: usize,
    step: u64,
}

impl<'a> Checker<'a> {
    fn new(header: &TraceHeader, pattern: &'a [Point], stats: &'a PatternStats) -> Checker<'a> {
        let positions: Vec<Point> = header.robots.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let sec = smallest_enclosing_circle(&positions);
        let initial_boundary = boundary_indices(&positions, &sec).len();
        Checker {
            n: header.n,
            pattern,
            stats,
            nu: header.nu,
            tracks: vec![RobotTrack::default(); positions.len()],
            violations: Vec::new(),
            seen: BTreeSet::new(),
            class_cache: HashMap::new(),
            plan_cache: HashMap::new(),
            epochs: Vec::new(),
            moved_since_epoch: BTreeSet::new(),
            moves_since_epoch: 0,
            last_epoch_digest: String::new(),
            look_labels: Vec::new(),
            initial_boundary,
            positions,
            step: 0,
        }
    }

    fn flag(&mut self, kind: ViolationKind, digest: String, detail: String) {
        if self.seen.insert((kind, digest.clone())) {
            self.violations.push(Violation {
                step: self.step,
                kind,
                detail,
                digest,
            });
        }
    }

    fn formed(&self, positions: &[Point]) -> bool {
        similar(positions, self.pattern)
    }

    fn classify(&mut self, positions: &[Point]) -> Option<Classification> {
        let key = digest(positions);
        if let Some(hit) = self.class_cache.get(&key) {
            return hit.clone();
        }
        let pattern = self.pattern;
        let stats = self.stats;
        let result = catch_unwind(AssertUnwindSafe(|| {
            Analysis::new(positions, pattern, stats).classify()
        }))
        .ok();
        self.class_cache.insert(key, result.clone());
        result
    }

    fn plan_summary(&mut self, positions: &[Point]) -> Option<PlanSummary> {
        let key = digest(positions);
        if let Some(hit) = self.plan_cache.get(&key) {
            return hit.clone();
        }
        let pattern = self.pattern;
        let stats = self.stats;
        let result = catch_unwind(AssertUnwindSafe(|| {
            let plan = moves::plan(positions, pattern, stats);
            let mut movers: Vec<usize> = plan.actions.iter().map(|a| a.robot).collect();
            movers.sort_unstable();
            movers.dedup();
            let ends = plan
                .actions
                .iter()
                .map(|a| (a.robot, a.path.end_point()))
                .collect();
            PlanSummary {
                rule: plan.rule.map(|r| r.label().to_string()),
                movers,
                ends,
            }
        }))
        .ok();
        self.plan_cache.insert(key, result.clone());
        result
    }

    /// Robots currently allowed to move: everyone designated by any command
    /// still in flight.
    fn allowed_movers(&self) -> BTreeSet<usize> {
        let mut allowed = BTreeSet::new();
        for (i, track) in self.tracks.iter().enumerate() {
            if let Some(flight) = &track.flight {
                allowed.insert(i);
                allowed.extend(flight.movers.iter().copied());
            }
        }
        allowed
    }

    /// Engine-equivalent stationarity: no committed or running move, and no
    /// robot holding a stale snapshot.
    fn all_stationary(&self) -> bool {
        self.tracks.iter().all(|t| {
            t.flight.is_none()
                && match &t.looked {
                    None => true,
                    Some(snap) => {
                        snap.len() == self.positions.len()
                            && snap
                                .iter()
                                .zip(&self.positions)
                                .all(|(a, b)| a.approx_eq(*b))
                    }
                }
        })
    }

    // -- checks at stationary configurations --------------------------------

    fn stationary_epoch(&mut self) {
        let dig = digest(&self.positions);
        if dig == self.last_epoch_digest {
            return;
        }
        self.last_epoch_digest = dig.clone();
        let positions = self.positions.clone();
        let formed = self.formed(&positions);

        // Multiplicities must be ones the pattern asks for.
        self.check_multiplicities(&positions, &dig);

        if !formed && !is_leader_configuration(&positions) {
            self.flag(
                ViolationKind::LeaderLost,
                dig.clone(),
                "stationary configuration admits a symmetry fixing no robot".into(),
            );
        }

        if self.n == 3 {
            return;
        }

        let class = self.classify(&positions);
        let entry = match (formed, &class) {
            (true, _) => (Phase::Formed, None),
            (false, Some(c)) => {
                self.check_exactly_one(c, &dig);
                (c.phase, c.sub)
            }
            (false, None) => {
                self.flag(
                    ViolationKind::ZeroPhase,
                    dig.clone(),
                    "classification failed on a stationary snapshot".into(),
                );
                return;
            }
        };

        if let Some(&(xp, xs, _)) = self.epochs.last() {
            if (xp, xs) != entry {
                let k = self.moves_since_epoch.max(1);
                self.check_transition(xp, xs, entry, &positions, &dig, k);
            }
        }
        if self.epochs.last().map(|&(p, s, _)| (p, s)) != Some(entry) {
            self.epochs.push((entry.0, entry.1, dig));
        }
        self.moved_since_epoch.clear();
        self.moves_since_epoch = 0;
    }

    fn check_exactly_one(&mut self, class: &Classification, dig: &str) {
        if class.matches.len() > 1 {
            let labels: Vec<&str> = class.matches.iter().map(|s| s.label()).collect();
            self.flag(
                ViolationKind::MultiPhase,
                dig.to_string(),
                format!(
                    "snapshot matches {} sub-phases at once: {}",
                    labels.len(),
                    labels.join(", ")
                ),
            );
        } else if class.matches.is_empty() && class.phase != Phase::Formed {
            self.flag(
                ViolationKind::ZeroPhase,
                dig.to_string(),
                format!(
                    "no sub-phase predicate holds in phase {}",
                    class.phase.label()
                ),
            );
        }
    }

    fn check_transition(
        &mut self,
        xp: Phase,
        xs: Option<SubPhase>,
        (yp, ys): (Phase, Option<SubPhase>),
        positions: &[Point],
        dig: &str,
        k: u64,
    ) {
        if xp == Phase::Formed {
            self.flag(
                ViolationKind::Regression,
                dig.to_string(),
                "configuration left the formed state".into(),
            );
            return;
        }
        let xs = match xs {
            Some(s) => s,
            None => return, // already flagged as zeroPhase
        };
        if reachable_within(xs, ys, yp == Phase::Formed, k) {
            return;
        }
        // Staged stop: the landing is still legal when the new snapshot
        // designates only robots that were already moving in this gap.
        if let Some(summary) = self.plan_summary(positions) {
            if !summary.movers.is_empty()
                && summary
                    .movers
                    .iter()
                    .all(|r| self.moved_since_epoch.contains(r))
            {
                return;
            }
        }
        let from = format!("{}/{}", xp.label(), xs.label());
        let to = match ys {
            Some(s) => format!("{}/{}", yp.label(), s.label()),
            None => yp.label().to_string(),
        };
        self.flag(
            ViolationKind::Regression,
            dig.to_string(),
            format!("transition {from} -> {to} is outside the declared end states"),
        );
    }

    fn check_multiplicities(&mut self, positions: &[Point], dig: &str) {
        let stacks: Vec<(Point, usize)> = distinct_with_mult(positions)
            .into_iter()
            .filter(|(_, k)| *k >= 2)
            .collect();
        if stacks.is_empty() {
            return;
        }
        let sec = smallest_enclosing_circle(positions);
        let mut robot_stacks: Vec<usize> = Vec::new();
        for (p, k) in &stacks {
            if p.approx_eq(sec.center) {
                if *k <= self.stats.center_count {
                    continue;
                }
                self.flag(
                    ViolationKind::BadMultiplicity,
                    dig.to_string(),
                    format!(
                        "{k} robots stacked on the centre but the pattern has {} centre points",
                        self.stats.center_count
                    ),
                );
                return;
            }
            robot_stacks.push(*k);
        }
        let mut pattern_stacks: Vec<usize> = distinct_with_mult(self.pattern)
            .into_iter()
            .filter(|(p, k)| *k >= 2 && !p.approx_eq(self.stats.center))
            .map(|(_, k)| k)
            .collect();
        robot_stacks.sort_unstable_by(|a, b| b.cmp(a));
        pattern_stacks.sort_unstable_by(|a, b| b.cmp(a));
        let dominated = robot_stacks.len() <= pattern_stacks.len()
            && robot_stacks
                .iter()
                .zip(&pattern_stacks)
                .all(|(r, p)| r <= p);
        if !dominated {
            self.flag(
                ViolationKind::BadMultiplicity,
                dig.to_string(),
                format!(
                    "robot stacks {robot_stacks:?} exceed the pattern's stacks {pattern_stacks:?}"
                ),
            );
        }
    }

    // -- checks during motion ------------------------------------------------

    /// Circles whose crossing can flip the classification: the pattern rings
    /// rescaled to the current configuration, plus the guard and teleporter
    /// circles.
    fn critical_circles(&self, positions: &[Point]) -> Vec<Circle> {
        let sec = smallest_enclosing_circle(positions);
        let mut out: Vec<Circle> = self
            .stats
            .scaled_ring_radii(sec.radius)
            .into_iter()
            .filter(|r| *r > 0.0)
            .map(|r| Circle::new(sec.center, r))
            .collect();
        let scan = guard_scan(positions, &sec, self.stats);
        out.extend(scan.guard_circle);
        out.extend(scan.teleporter_circle);
        out
    }

    /// Transition safety at one mid-move configuration: whatever the
    /// algorithm designates there must already be moving (or the terminal
    /// predicate holds and it designates nothing), and a designated retreat
    /// must not have run past its staged circle stop.
    fn check_containment(&mut self, positions: &[Point], robot: usize, t: f64, context: &str) {
        let allowed = self.allowed_movers();
        let summary = match self.plan_summary(positions) {
            Some(s) => s,
            None => {
                let dig = digest(positions);
                self.flag(
                    ViolationKind::UnsafeMove,
                    dig,
                    format!("planner failed on a mid-move snapshot ({context})"),
                );
                return;
            }
        };
        let stray: Vec<usize> = summary
            .movers
            .iter()
            .copied()
            .filter(|r| !allowed.contains(r))
            .collect();
        if !stray.is_empty() {
            let dig = digest(positions);
            self.flag(
                ViolationKind::UnsafeMove,
                dig,
                format!(
                    "mid-move snapshot ({context}) designates stationary robots \
                     {stray:?}; only {allowed:?} may move"
                ),
            );
            return;
        }
        // The boundary retreats stop on every rescaled pattern circle they
        // cross; when the sampled snapshot re-derives a retreat for the very
        // robot in flight, the re-derived stop must still lie ahead on the
        // committed path.
        let retreat = matches!(summary.rule.as_deref(), Some("m1") | Some("m2"));
        if retreat && summary.movers == [robot] {
            if let Some(&(_, end)) = summary.ends.iter().find(|(r, _)| *r == robot) {
                if let Some(flight) = &self.tracks[robot].flight {
                    let te = fraction_of(&flight.path, end, t);
                    let on_path = flight.path.point_at(te).dist(end) <= 2.0 * SNAP_EPS;
                    if !on_path || te + 1e-6 < t {
                        let dig = digest(positions);
                        self.flag(
                            ViolationKind::UnsafeMove,
                            dig,
                            format!(
                                "robot {robot} is moving past its staged retreat stop \
                                 ({context})"
                            ),
                        );
                    }
                }
            }
        }
    }

    fn check_collision(&mut self, robot: usize, at: Point, end: Point) {
        if at.dist(end) <= SNAP_EPS {
            return;
        }
        let hit = self.positions.iter().enumerate().find(|&(j, p)| {
            j != robot && p.dist(at) <= SNAP_EPS && !p.approx_eq(self.positions[robot])
        });
        if let Some((j, _)) = hit {
            let dig = digest(&self.positions);
            self.flag(
                ViolationKind::Collision,
                dig,
                format!("robot {robot} passes through robot {j} in transit"),
            );
        }
    }

    /// Re-examine the interval a mover just traversed: collisions at sampled
    /// points, and designation containment at every crossing of a critical
    /// circle (both sides of the crossing) and at the realised endpoint.
    fn check_interval(&mut self, robot: usize, lo: f64, hi: f64) {
        let (path, end) = match &self.tracks[robot].flight {
            Some(f) => (f.path.clone(), f.path.end_point()),
            None => return,
        };
        let at_start = {
            let mut pos = self.positions.clone();
            pos[robot] = path.point_at(lo);
            pos
        };
        let circles = self.critical_circles(&at_start);
        let crossings = crossing_fractions(&path, &circles, lo, hi);

        let mut samples: Vec<f64> = Vec::new();
        for &t in &crossings {
            samples.push((t - 1e-4).max(lo + 1e-9));
            samples.push((t + 1e-4).min(hi));
        }
        // A couple of uniform points for the collision sweep.
        for k in 1..=3 {
            samples.push(lo + (hi - lo) * k as f64 / 3.0);
        }
        samples.sort_by(f64::total_cmp);
        samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let is_crossing_sample = |t: f64| {
            crossings
                .iter()
                .any(|&c| (t - c).abs() <= 1.5e-4)
        };
        for t in samples {
            let at = path.point_at(t);
            self.check_collision(robot, at, end);
            if t < 1.0 - 1e-9 && is_crossing_sample(t) {
                let mut pos = self.positions.clone();
                pos[robot] = at;
                let context = format!("robot {robot} at fraction {t:.4} of its path");
                self.check_containment(&pos, robot, t, &context);
            }
        }
    }

    // -- event dispatch --------------------------------------------------------

    fn on_look(&mut self, ev: &TraceEvent) {
        let recorded: Option<Vec<Point>> = ev
            .positions
            .as_ref()
            .map(|ps| ps.iter().map(|&[x, y]| Point::new(x, y)).collect());
        if let Some(rec) = &recorded {
            let agrees = rec.len() == self.positions.len()
                && rec.iter().zip(&self.positions).all(|(a, b)| a.approx_eq(*b));
            if !agrees {
                let dig = digest(&self.positions);
                self.flag(
                    ViolationKind::Regression,
                    dig,
                    format!(
                        "recorded snapshot of robot {} diverges from the replayed positions",
                        ev.robot
                    ),
                );
            }
        }
        let snapshot = recorded.unwrap_or_else(|| self.positions.clone());
        let stationary = self.all_stationary();

        if stationary {
            // Record the label sequence the way the engine does, for the
            // footer cross-check.
            let label = if self.n == 3 {
                if self.formed(&snapshot) {
                    Some("formed".to_string())
                } else {
                    Some("tri".to_string())
                }
            } else if self.formed(&snapshot) {
                Some("formed".to_string())
            } else {
                self.classify(&snapshot).map(|c| match c.sub {
                    Some(s) => format!("{}/{}", c.phase.label(), s.label()),
                    None => c.phase.label().to_string(),
                })
            };
            if let Some(label) = label {
                if self.look_labels.last() != Some(&label) {
                    self.look_labels.push(label);
                }
            }

            // Injected-fault visibility: the recorded predicate map must
            // agree in shape with a sane classification.
            if self.n > 3 {
                if let Some(preds) = &ev.preds {
                    let true_count = preds.values().filter(|v| **v).count();
                    let dig = digest(&snapshot);
                    if true_count > 1 {
                        self.flag(
                            ViolationKind::MultiPhase,
                            dig.clone(),
                            format!("look records {true_count} matching sub-phases"),
                        );
                    }
                    if true_count == 0 && !self.formed(&snapshot) {
                        self.flag(
                            ViolationKind::ZeroPhase,
                            dig,
                            "look records no matching sub-phase on an unformed snapshot".into(),
                        );
                    }
                }
            }
        }
        self.tracks[ev.robot].looked = Some(snapshot);
    }

    fn on_compute(&mut self, ev: &TraceEvent) {
        let cmd: &CommandRecord = match &ev.command {
            Some(c) => c,
            None => return,
        };
        let snapshot = self.tracks[ev.robot].looked.take();
        let snapshot = match snapshot {
            Some(s) => s,
            None => {
                let dig = digest(&self.positions);
                self.flag(
                    ViolationKind::UnsafeMove,
                    dig,
                    format!("robot {} computes without a snapshot", ev.robot),
                );
                self.positions.clone()
            }
        };

        // Independent re-planning on the same snapshot must designate the
        // same robots (the command itself is frame-independent).
        if let Some(PlanSummary { movers, .. }) = self.plan_summary(&snapshot) {
            let mut recorded = cmd.movers.clone();
            recorded.sort_unstable();
            recorded.dedup();
            if recorded != movers {
                let dig = digest(&snapshot);
                self.flag(
                    ViolationKind::UnsafeMove,
                    dig,
                    format!(
                        "recorded designation {recorded:?} differs from the re-derived \
                         designation {movers:?}"
                    ),
                );
            }
        }

        match &cmd.path {
            Some(segs) => {
                if !cmd.movers.contains(&ev.robot) {
                    let dig = digest(&snapshot);
                    self.flag(
                        ViolationKind::UnsafeMove,
                        dig,
                        format!("robot {} commits a path it is not designated for", ev.robot),
                    );
                }
                self.tracks[ev.robot].flight = Some(Flight {
                    path: path_from_records(segs),
                    movers: cmd.movers.clone(),
                    frac: 0.0,
                });
                self.tracks[ev.robot].started = false;
            }
            None => {
                self.tracks[ev.robot].flight = None;
            }
        }
    }

    fn on_move_start(&mut self, ev: &TraceEvent) {
        let track = &mut self.tracks[ev.robot];
        match &mut track.flight {
            Some(flight) => {
                track.started = true;
                flight.frac = 0.0;
                let start = flight.path.start_point();
                if start.dist(self.positions[ev.robot]) > SNAP_EPS {
                    let dig = digest(&self.positions);
                    let detail = format!(
                        "robot {} starts a path anchored away from its position",
                        ev.robot
                    );
                    self.flag(ViolationKind::UnsafeMove, dig, detail);
                }
            }
            None => {
                let dig = digest(&self.positions);
                self.flag(
                    ViolationKind::UnsafeMove,
                    dig,
                    format!("robot {} starts moving without a committed command", ev.robot),
                );
            }
        }
    }

    fn on_move_advance(&mut self, ev: &TraceEvent, terminal: bool) {
        let pos = match ev.pos {
            Some([x, y]) => Point::new(x, y),
            None => self.positions[ev.robot],
        };
        let flight = self.tracks[ev.robot].flight.clone();
        let started = self.tracks[ev.robot].started;
        match flight {
            Some(flight) if started => {
                let lo = flight.frac;
                let hi = if terminal {
                    1.0
                } else {
                    fraction_of(&flight.path, pos, lo).max(lo)
                };
                let on_path_end = flight.path.end_point().dist(pos) <= 2.0 * SNAP_EPS;
                let on_path = flight.path.point_at(hi).dist(pos) <= 2.0 * SNAP_EPS;
                if (terminal && !on_path_end) || (!terminal && !on_path) {
                    let dig = digest(&self.positions);
                    self.flag(
                        ViolationKind::UnsafeMove,
                        dig,
                        format!("robot {} reports a position off its committed path", ev.robot),
                    );
                }
                self.check_collision(ev.robot, pos, flight.path.end_point());
                self.check_interval(ev.robot, lo, hi);
                self.positions[ev.robot] = pos;
                if terminal {
                    self.tracks[ev.robot].flight = None;
                    self.tracks[ev.robot].started = false;
                    self.moved_since_epoch.insert(ev.robot);
                    self.moves_since_epoch += 1;
                    self.check_landing(ev.robot);
                } else if let Some(f) = &mut self.tracks[ev.robot].flight {
                    f.frac = hi;
                    // The adversary must grant minimum progress on every
                    // activation (or finish the move).
                    let advanced = (hi - lo) * f.path.length();
                    if advanced + 1e-9 < self.nu.min((1.0 - lo) * f.path.length()) {
                        let dig = digest(&self.positions);
                        self.flag(
                            ViolationKind::Regression,
                            dig,
                            format!(
                                "robot {} advanced {advanced:.6}, below the promised minimum",
                                ev.robot
                            ),
                        );
                    }
                }
            }
            _ => {
                let dig = digest(&self.positions);
                self.flag(
                    ViolationKind::UnsafeMove,
                    dig,
                    format!("robot {} moves without a started command", ev.robot),
                );
                self.positions[ev.robot] = pos;
                if terminal {
                    self.moved_since_epoch.insert(ev.robot);
                    self.moves_since_epoch += 1;
                }
            }
        }
    }

    /// A completed move may land on another robot only to build a stack the
    /// pattern asks for; that legality is re-checked at the next stationary
    /// epoch, but an illegal merge is also flagged right away.
    fn check_landing(&mut self, robot: usize) {
        let landing = self.positions[robot];
        let stacked = self
            .positions
            .iter()
            .enumerate()
            .any(|(j, p)| j != robot && p.approx_eq(landing));
        if !stacked {
            return;
        }
        let dig = digest(&self.positions);
        let positions = self.positions.clone();
        self.check_multiplicities(&positions, &dig);
    }

    fn finish(&mut self, footer: &TraceFooter) -> Result<(), MonitorError> {
        // Engine-recorded transitions must match the replayed ones.
        if footer.transitions != self.look_labels {
            let dig = self.last_epoch_digest.clone();
            self.flag(
                ViolationKind::Regression,
                dig,
                format!(
                    "footer transitions {:?} disagree with the replayed sequence {:?}",
                    footer.transitions, self.look_labels
                ),
            );
        }
        if self.n > 3 {
            let seq: Vec<(Phase, Option<SubPhase>)> =
                self.epochs.iter().map(|&(p, s, _)| (p, s)).collect();
            let bounds = LoopBounds::from_run(self.initial_boundary, self.n, self.nu);
            for problem in audit_sequence(&seq, bounds) {
                let dig = self.last_epoch_digest.clone();
                self.flag(ViolationKind::Regression, dig, problem);
            }
        }
        Ok(())
    }
}

/// Check a complete JSONL trace against the scenario it came from. The
/// scenario is optional: the header carries the normalised inputs, and the
/// scenario (when given) is only used to cross-check them.
pub fn check_trace(trace: &str, scenario: Option<&Scenario>) -> Result<Vec<Violation>, MonitorError> {
    let lines: Vec<&str> = trace.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(MonitorError::IncompleteTrace(
            "trace needs at least a header and a footer".into(),
        ));
    }
    let header: TraceHeader = serde_json::from_str(lines[0])
        .map_err(|e| MonitorError::IncompleteTrace(format!("bad header: {e}")))?;
    let footer: TraceFooter = serde_json::from_str(lines[lines.len() - 1])
        .map_err(|e| MonitorError::IncompleteTrace(format!("missing footer: {e}")))?;

    let pattern: Vec<Point> = header.pattern.iter().map(|&[x, y]| Point::new(x, y)).collect();
    if header.n != header.robots.len() || header.n != pattern.len() {
        return Err(MonitorError::IncompleteTrace(
            "header sizes are inconsistent".into(),
        ));
    }
    if let Some(scenario) = scenario {
        let prepared = scenario.prepare().map_err(|e| {
            MonitorError::IncompleteTrace(format!("scenario does not prepare: {e}"))
        })?;
        let same = prepared.pattern.len() == pattern.len()
            && prepared
                .pattern
                .iter()
                .zip(&pattern)
                .all(|(a, b)| a.approx_eq(*b));
        if !same {
            return Err(MonitorError::IncompleteTrace(
                "trace header does not match the scenario".into(),
            ));
        }
    }
    let stats = PatternStats::new(&pattern);

    let mut checker = Checker::new(&header, &pattern, &stats);
    checker.stationary_epoch();

    for (idx, line) in lines[1..lines.len() - 1].iter().enumerate() {
        let ev: TraceEvent = serde_json::from_str(line).map_err(|e| {
            MonitorError::IncompleteTrace(format!("bad event at line {}: {e}", idx + 2))
        })?;
        checker.step = ev.step;
        if ev.robot >= checker.positions.len() {
            return Err(MonitorError::IncompleteTrace(format!(
                "event at line {} names robot {} of {}",
                idx + 2,
                ev.robot,
                checker.positions.len()
            )));
        }
        match ev.kind.as_str() {
            "look" => checker.on_look(&ev),
            "computeStart" => checker.on_compute(&ev),
            "moveStart" => checker.on_move_start(&ev),
            "moveProgress" => checker.on_move_advance(&ev, false),
            "moveEnd" => checker.on_move_advance(&ev, true),
            other => {
                return Err(MonitorError::IncompleteTrace(format!(
                    "unknown event kind `{other}` at line {}",
                    idx + 2
                )))
            }
        }
        if checker.all_stationary() {
            checker.stationary_epoch();
        }
    }
    checker.step = footer.steps;
    checker.finish(&footer)?;
    Ok(checker.violations)
}

/// Render violations as JSONL.
pub fn violations_jsonl(violations: &[Violation]) -> String {
    let mut out = String::new();
    for v in violations {
        out.push_str(&serde_json::to_string(v).expect("violation serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, AdversaryConfig, Limits, Mode};

    fn small_scenario(seed: u64) -> Scenario {
        Scenario {
            robots: vec![
                [1.0, 0.0],
                [-1.0, 0.05],
                [0.3, 0.8],
                [-0.2, -0.6],
                [0.1, 0.2],
            ],
            pattern: Some(vec![
                [1.0, 0.0],
                [-0.9, 0.3],
                [0.2, -0.85],
                [0.4, 0.4],
                [-0.3, -0.2],
            ]),
            pattern_distances: None,
            adversary: AdversaryConfig {
                mode: Mode::Async,
                seed,
                nu: crate::engine::DEFAULT_NU,
            },
            limits: Limits::default(),
        }
    }

    fn clean_trace(seed: u64) -> (Scenario, String) {
        let scenario = small_scenario(seed);
        let prepared = scenario.prepare().expect("valid scenario");
        let result = run(&prepared);
        assert_eq!(result.outcome, crate::engine::Outcome::Formed);
        (scenario, result.trace_text())
    }

    #[test]
    fn clean_traces_check_clean() {
        let (scenario, trace) = clean_trace(3);
        let violations = check_trace(&trace, Some(&scenario)).expect("complete trace");
        assert!(violations.is_empty(), "unexpected: {violations:?}");
    }

    /// A wide boundary forces the retreat moves (six robots, five on the
    /// outer circle), exercising the staged stops.
    fn retreat_scenario(seed: u64) -> Scenario {
        Scenario {
            robots: vec![
                [1.0, 0.0],
                [0.31, 0.95],
                [-0.81, 0.59],
                [-0.95, -0.31],
                [0.31, -0.95],
                [0.2, 0.1],
            ],
            pattern: Some(vec![
                [1.0, 0.0],
                [-0.9, 0.35],
                [0.1, -0.95],
                [0.5, 0.5],
                [-0.4, -0.3],
                [0.1, 0.25],
            ]),
            pattern_distances: None,
            adversary: AdversaryConfig {
                mode: Mode::Async,
                seed,
                nu: crate::engine::DEFAULT_NU,
            },
            limits: Limits::default(),
        }
    }

    #[test]
    fn clean_retreats_check_clean() {
        let scenario = retreat_scenario(23);
        let prepared = scenario.prepare().expect("valid scenario");
        let result = run(&prepared);
        assert_eq!(result.outcome, crate::engine::Outcome::Formed);
        let violations =
            check_trace(&result.trace_text(), Some(&scenario)).expect("complete trace");
        assert!(violations.is_empty(), "unexpected: {violations:?}");
    }

    #[test]
    fn skipped_retreat_stops_are_flagged() {
        let scenario = retreat_scenario(23);
        let mut prepared = scenario.prepare().expect("valid scenario");
        prepared.fault = crate::moves::PlanOptions {
            skip_retreat_stops: true,
        };
        let result = run(&prepared);
        let violations = check_trace(&result.trace_text(), None).expect("complete trace");
        assert!(
            violations.iter().any(|v| matches!(
                v.kind,
                ViolationKind::UnsafeMove | ViolationKind::MultiPhase
            )),
            "expected the skipped stops to be flagged, got {violations:?}"
        );
    }

    #[test]
    fn truncated_traces_are_rejected() {
        let (_, trace) = clean_trace(5);
        let cut: Vec<&str> = trace.lines().take(20).collect();
        let err = check_trace(&cut.join("\n"), None).unwrap_err();
        assert!(matches!(err, MonitorError::IncompleteTrace(_)));
    }

    #[test]
    fn leader_election_pattern_spacing() {
        let pts = leader_election_pattern(4).expect("n >= 3");
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 4.0]);
        let pts = leader_election_pattern(5).expect("n >= 3");
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 5.0]);
        assert!(matches!(
            leader_election_pattern(2),
            Err(MonitorError::TooSmall(2))
        ));
        let leader = elected_leader(&pts).expect("unique leader");
        assert_eq!(leader, 4);
        // A plain evenly spaced line elects nobody.
        let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 0.0)).collect();
        assert_eq!(elected_leader(&line), None);
    }

    #[test]
    fn audit_flags_loop_overruns() {
        use Phase::*;
        use SubPhase::*;
        let bounds = LoopBounds {
            trim_alternations: 2,
            matching_revisits: 2,
        };
        let ok = vec![
            (TrimBoundary, Some(A1)),
            (TrimBoundary, Some(A2)),
            (TrimBoundary, Some(A1)),
            (PlaceGuards, Some(G1)),
        ];
        assert!(audit_sequence(&ok, bounds).is_empty());

        let trim_loop = vec![
            (TrimBoundary, Some(A1)),
            (TrimBoundary, Some(A2)),
            (TrimBoundary, Some(A1)),
            (TrimBoundary, Some(A2)),
            (TrimBoundary, Some(A1)),
            (TrimBoundary, Some(A2)),
        ];
        assert_eq!(audit_sequence(&trim_loop, bounds).len(), 1);

        let break_cycle = vec![
            (TrimBoundary, Some(C1)),
            (BreakSymmetry, Some(T)),
            (TrimBoundary, Some(A1)),
            (BreakSymmetry, Some(U)),
            (TrimBoundary, Some(A1)),
            (BreakSymmetry, Some(T)),
        ];
        let problems = audit_sequence(&break_cycle, bounds);
        assert!(problems.iter().any(|p| p.contains("symmetry-breaking")));
    }

    // -- injected faults, one per violation kind ------------------------------

    fn parse_lines(trace: &str) -> Vec<String> {
        trace.lines().map(str::to_string).collect()
    }

    #[test]
    fn injected_second_mover_is_unsafe() {
        let (scenario, trace) = clean_trace(7);
        let mut lines = parse_lines(&trace);
        // After the first moveStart, let a robot that never computed jump.
        let at = lines
            .iter()
            .position(|l| l.contains("\"moveStart\""))
            .expect("some move starts");
        let ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        let other = (ev.robot + 1) % 5;
        let fake = TraceEvent {
            step: ev.step,
            robot: other,
            kind: "moveProgress".into(),
            digest: None,
            stationary: None,
            phase: None,
            sub: None,
            preds: None,
            positions: None,
            command: None,
            pos: Some([0.123, 0.456]),
        };
        lines.insert(at + 1, serde_json::to_string(&fake).unwrap());
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(
            violations
                .iter()
                .any(|v| v.kind == ViolationKind::UnsafeMove),
            "expected unsafeMove, got {violations:?}"
        );
    }

    #[test]
    fn injected_pred_edits_flag_phase_counts() {
        let (scenario, trace) = clean_trace(9);
        let mut lines = parse_lines(&trace);
        let at = lines
            .iter()
            .position(|l| l.contains("\"preds\":{") && l.contains("true"))
            .expect("a stationary look with predicates");
        let mut ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        let preds = ev.preds.as_mut().unwrap();
        preds.insert("T".into(), true);
        preds.insert("W".into(), true);
        lines[at] = serde_json::to_string(&ev).unwrap();
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(violations.iter().any(|v| v.kind == ViolationKind::MultiPhase));

        // Now erase every claim instead: zeroPhase.
        let mut lines = parse_lines(&trace);
        let mut ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        let preds = ev.preds.as_mut().unwrap();
        let keys: Vec<String> = preds.keys().cloned().collect();
        for k in keys {
            preds.insert(k, false);
        }
        lines[at] = serde_json::to_string(&ev).unwrap();
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(violations.iter().any(|v| v.kind == ViolationKind::ZeroPhase));
    }

    #[test]
    fn injected_transit_through_robot_is_collision() {
        let (scenario, trace) = clean_trace(11);
        let mut lines = parse_lines(&trace);
        let at = lines
            .iter()
            .position(|l| l.contains("\"moveProgress\""))
            .expect("some progress event");
        let mut ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        // Replay up to this point to find another robot's position.
        let prefix: Vec<&str> = lines[..at].iter().map(String::as_str).collect();
        let header: TraceHeader = serde_json::from_str(&prefix[0]).unwrap();
        let mut positions: Vec<[f64; 2]> = header.robots.clone();
        for l in &prefix[1..] {
            let e: TraceEvent = serde_json::from_str(l).unwrap();
            if let Some(p) = e.pos {
                if e.kind == "moveProgress" || e.kind == "moveEnd" {
                    positions[e.robot] = p;
                }
            }
        }
        let other = (ev.robot + 1) % positions.len();
        ev.pos = Some(positions[other]);
        lines[at] = serde_json::to_string(&ev).unwrap();
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(
            violations.iter().any(|v| v.kind == ViolationKind::Collision),
            "expected collision, got {violations:?}"
        );
    }

    #[test]
    fn injected_symmetric_landing_loses_the_leader() {
        let (scenario, trace) = clean_trace(13);
        let lines = parse_lines(&trace);
        let at = lines
            .iter()
            .position(|l| l.contains("\"moveEnd\""))
            .expect("some completed move");
        let mut ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        // Rebuild the positions right before the landing, then land the mover
        // so that the five robots form a perfect regular pentagon: a
        // symmetric, unformed configuration fixing no robot.
        let header: TraceHeader = serde_json::from_str(&lines[0]).unwrap();
        let mut positions: Vec<[f64; 2]> = header.robots.clone();
        for l in &lines[1..at] {
            let e: TraceEvent = serde_json::from_str(l).unwrap();
            if let Some(p) = e.pos {
                if e.kind == "moveProgress" || e.kind == "moveEnd" {
                    positions[e.robot] = p;
                }
            }
        }
        for (j, pos) in positions.iter_mut().enumerate() {
            if j != ev.robot {
                let a = std::f64::consts::TAU * j as f64 / 5.0;
                *pos = [a.cos(), a.sin()];
            }
        }
        let a = std::f64::consts::TAU * ev.robot as f64 / 5.0;
        ev.pos = Some([a.cos(), a.sin()]);
        // Rewrite history: feed the checker a synthetic trace with those
        // positions from the start and a single hand-made landing.
        let new_header = TraceHeader {
            robots: positions.clone(),
            ..header
        };
        let look = TraceEvent {
            step: 0,
            robot: ev.robot,
            kind: "look".into(),
            digest: None,
            stationary: Some(true),
            phase: None,
            sub: None,
            preds: None,
            positions: Some(positions.clone()),
            command: None,
            pos: None,
        };
        let command = TraceEvent {
            step: 1,
            robot: ev.robot,
            kind: "computeStart".into(),
            digest: None,
            stationary: None,
            phase: None,
            sub: None,
            preds: None,
            positions: None,
            command: Some(CommandRecord {
                move_id: "m1".into(),
                movers: vec![ev.robot],
                path: Some(vec![SegRecord::Line {
                    from: positions[ev.robot],
                    to: ev.pos.unwrap(),
                }]),
            }),
            pos: None,
        };
        let start = TraceEvent {
            step: 2,
            robot: ev.robot,
            kind: "moveStart".into(),
            digest: None,
            stationary: None,
            phase: None,
            sub: None,
            preds: None,
            positions: None,
            command: None,
            pos: Some(positions[ev.robot]),
        };
        let end = TraceEvent {
            step: 3,
            robot: ev.robot,
            kind: "moveEnd".into(),
            digest: None,
            stationary: None,
            phase: None,
            sub: None,
            preds: None,
            positions: None,
            command: None,
            pos: ev.pos,
        };
        let footer = TraceFooter {
            outcome: crate::engine::Outcome::LimitExceeded,
            steps: 4,
            transitions: vec![],
        };
        let synthetic = [
            serde_json::to_string(&new_header).unwrap(),
            serde_json::to_string(&look).unwrap(),
            serde_json::to_string(&command).unwrap(),
            serde_json::to_string(&start).unwrap(),
            serde_json::to_string(&end).unwrap(),
            serde_json::to_string(&footer).unwrap(),
        ]
        .join("\n");
        let violations = check_trace(&synthetic, None).expect("complete");
        assert!(
            violations.iter().any(|v| v.kind == ViolationKind::LeaderLost),
            "expected leaderLost, got {violations:?}"
        );
        let _ = scenario;
        let _ = lines.len();
    }

    #[test]
    fn injected_merge_is_bad_multiplicity() {
        let (scenario, trace) = clean_trace(17);
        let mut lines = parse_lines(&trace);
        let at = lines
            .iter()
            .position(|l| l.contains("\"moveEnd\""))
            .expect("some completed move");
        let mut ev: TraceEvent = serde_json::from_str(&lines[at]).unwrap();
        let header: TraceHeader = serde_json::from_str(&lines[0]).unwrap();
        let mut positions: Vec<[f64; 2]> = header.robots.clone();
        for l in &lines[1..at] {
            let e: TraceEvent = serde_json::from_str(l).unwrap();
            if let Some(p) = e.pos {
                if e.kind == "moveProgress" || e.kind == "moveEnd" {
                    positions[e.robot] = p;
                }
            }
        }
        let other = (ev.robot + 1) % positions.len();
        ev.pos = Some(positions[other]);
        lines[at] = serde_json::to_string(&ev).unwrap();
        lines.truncate(at + 1);
        let footer = TraceFooter {
            outcome: crate::engine::Outcome::LimitExceeded,
            steps: ev.step + 1,
            transitions: vec![],
        };
        lines.push(serde_json::to_string(&footer).unwrap());
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(
            violations
                .iter()
                .any(|v| v.kind == ViolationKind::BadMultiplicity),
            "expected badMultiplicity, got {violations:?}"
        );
    }

    #[test]
    fn injected_footer_edit_is_regression() {
        let (scenario, trace) = clean_trace(19);
        let mut lines = parse_lines(&trace);
        let last = lines.len() - 1;
        let mut footer: TraceFooter = serde_json::from_str(&lines[last]).unwrap();
        footer.transitions.push("5/T".into());
        lines[last] = serde_json::to_string(&footer).unwrap();
        let violations = check_trace(&lines.join("\n"), Some(&scenario)).expect("complete");
        assert!(violations.iter().any(|v| v.kind == ViolationKind::Regression));
    }
}
