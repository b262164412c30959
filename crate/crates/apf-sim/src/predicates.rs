//! Snapshot classification: the boolean observables the robots extract from
//! what they see, the five working phases, and the sub-phase dispatcher that
//! decides which move applies.
//!
//! Everything in this module is a pure function of the observed multiset of
//! positions and the target pattern, so every robot reaches the same verdict
//! regardless of its private coordinate system.

use crate::config::{
    has_multiplicity, is_leader_configuration, similar, symmetry_info, Axis,
    SymmetryInfo,
};
use crate::embedding::{
    compute_matching, crown_embedding, embed_pattern, guard_scan, radial_profiles_match,
    recognize_guards, superimpositions, CrownEmbedding, Embedding, GuardScan, Guards, Matching,
    PatternStats,
};
use crate::geom::{
    self, angle_at, approx_eq, approx_ge, approx_le, approx_lt, approx_zero, ccw_angle,
    is_critical, normalize_angle, segment_circle_intersections, smallest_enclosing_circle,
    Circle, ConcentricFamily, Point,
};
use std::cell::OnceCell;

/// The five working phases plus the terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Thin the outer circle down to two antipodal robots.
    TrimBoundary,
    /// Park a robot on the guard circle at the reference angle.
    PlaceGuards,
    /// Walk the remaining robots onto their targets one at a time.
    MatchTargets,
    /// Send the three guards to their own reserved targets.
    Finish,
    /// Symmetric or near-symmetric snapshots: elect and extract a single
    /// robot to make the configuration workable.
    BreakSymmetry,
    /// The pattern is formed.
    Formed,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::TrimBoundary => "1",
            Phase::PlaceGuards => "2",
            Phase::MatchTargets => "3",
            Phase::Finish => "4",
            Phase::BreakSymmetry => "5",
            Phase::Formed => "formed",
        }
    }
}

/// Sub-phases: each one owns exactly one move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(clippy::upper_case_acronyms)]
pub enum SubPhase {
    A1,
    A2,
    B,
    C1,
    C2,
    D,
    E1,
    E2,
    G1,
    G2,
    H,
    M,
    N,
    O,
    P1,
    P2,
    Q1,
    Q2,
    Q3,
    Q4,
    T,
    U,
    V1,
    V2,
    V3,
    V4,
    W,
}

impl SubPhase {
    pub fn label(self) -> &'static str {
        match self {
            SubPhase::A1 => "A1",
            SubPhase::A2 => "A2",
            SubPhase::B => "B",
            SubPhase::C1 => "C1",
            SubPhase::C2 => "C2",
            SubPhase::D => "D",
            SubPhase::E1 => "E1",
            SubPhase::E2 => "E2",
            SubPhase::G1 => "G1",
            SubPhase::G2 => "G2",
            SubPhase::H => "H",
            SubPhase::M => "M",
            SubPhase::N => "N",
            SubPhase::O => "O",
            SubPhase::P1 => "P1",
            SubPhase::P2 => "P2",
            SubPhase::Q1 => "Q1",
            SubPhase::Q2 => "Q2",
            SubPhase::Q3 => "Q3",
            SubPhase::Q4 => "Q4",
            SubPhase::T => "T",
            SubPhase::U => "U",
            SubPhase::V1 => "V1",
            SubPhase::V2 => "V2",
            SubPhase::V3 => "V3",
            SubPhase::V4 => "V4",
            SubPhase::W => "W",
        }
    }

    /// The phase a sub-phase belongs to.
    pub fn phase(self) -> Phase {
        use SubPhase::*;
        match self {
            A1 | A2 | B | C1 | C2 | D | E1 | E2 => Phase::TrimBoundary,
            G1 | G2 | H => Phase::PlaceGuards,
            M | N | O => Phase::MatchTargets,
            P1 | P2 | Q1 | Q2 | Q3 | Q4 => Phase::Finish,
            T | U | V1 | V2 | V3 | V4 | W => Phase::BreakSymmetry,
        }
    }
}

/// Outcome of classifying a snapshot.
#[derive(Debug, Clone)]
pub struct Classification {
    pub phase: Phase,
    /// The sub-phase whose move applies (absent when formed, or when no
    /// sub-phase matched — which the monitors flag).
    pub sub: Option<SubPhase>,
    /// Every sub-phase start predicate that held inside the phase; the
    /// safety monitors require exactly one entry.
    pub matches: Vec<SubPhase>,
}

/// The structure found when a snapshot is one rotation away from a previous
/// symmetric state: a lone boundary robot travelling along the circle.
#[derive(Debug, Clone)]
pub struct Faraway {
    /// The travelling boundary robot.
    pub mover: usize,
    /// The two mirror boundary robots.
    pub pair: (usize, usize),
    /// The mirror axis of the configuration without the mover.
    pub axis: Axis,
    /// Rotation target: the boundary point antipodal to one of the pair,
    /// whichever is nearer to the mover.
    pub target: Point,
    /// The axis endpoint on the mover's side of the circle.
    pub entry: Point,
}

/// Roles extracted when finalizing a crown-shaped pattern.
#[derive(Debug, Clone)]
pub struct CrownRoles {
    pub emb: CrownEmbedding,
    /// The robot playing the "first point" role (absent when already placed).
    pub r1: usize,
    /// The robot playing the "last point" role.
    pub rn: usize,
}

/// The witness of the center-exit test: a lone central robot whose removal
/// leaves a configuration similar to the pattern minus one target.
#[derive(Debug, Clone)]
pub struct CenterExit {
    pub robot: usize,
    /// World position of the missing target under the witnessing transform.
    pub target: Point,
}

/// All cached analysis of one snapshot against one pattern.
pub struct Analysis<'a> {
    pub robots: Vec<Point>,
    pub pattern: &'a [Point],
    pub stats: &'a PatternStats,
    pub sec: Circle,
    pub fam: ConcentricFamily,
    /// Robot indices on the outer circle.
    pub boundary: Vec<usize>,
    /// Distinct outer-circle positions.
    pub boundary_distinct: Vec<Point>,
    pub sym: SymmetryInfo,
    pub scan: GuardScan,
    guards: OnceCell<Option<Guards>>,
    emb: OnceCell<Option<(Embedding, Matching)>>,
    crown: OnceCell<Option<CrownEmbedding>>,
    crown_roles: OnceCell<Option<(SubPhase, CrownRoles)>>,
    center_exit: OnceCell<Option<CenterExit>>,
    faraway: OnceCell<Option<Faraway>>,
}

impl<'a> Analysis<'a> {
    pub fn new(robots: &[Point], pattern: &'a [Point], stats: &'a PatternStats) -> Analysis<'a> {
        let robots = robots.to_vec();
        let sec = smallest_enclosing_circle(&robots);
        let fam = ConcentricFamily::build(&robots, sec.center);
        let boundary: Vec<usize> = robots
            .iter()
            .enumerate()
            .filter(|(_, p)| approx_eq(p.dist(sec.center), sec.radius))
            .map(|(i, _)| i)
            .collect();
        let mut boundary_distinct: Vec<Point> = Vec::new();
        for &i in &boundary {
            if !boundary_distinct.iter().any(|q| q.approx_eq(robots[i])) {
                boundary_distinct.push(robots[i]);
            }
        }
        let sym = symmetry_info(&robots, sec.center);
        let scan = guard_scan(&robots, &sec, stats);
        Analysis {
            robots,
            pattern,
            stats,
            sec,
            fam,
            boundary,
            boundary_distinct,
            sym,
            scan,
            guards: OnceCell::new(),
            emb: OnceCell::new(),
            crown: OnceCell::new(),
            crown_roles: OnceCell::new(),
            center_exit: OnceCell::new(),
            faraway: OnceCell::new(),
        }
    }

    pub fn center(&self) -> Point {
        self.sec.center
    }

    /// Number of robots standing exactly on the center.
    pub fn center_instances(&self) -> usize {
        self.robots
            .iter()
            .filter(|p| p.approx_eq(self.sec.center))
            .count()
    }

    // ----- basic observables -------------------------------------------------

    /// The snapshot is workable at all (admits an agreed leader).
    pub fn leader(&self) -> bool {
        is_leader_configuration(&self.robots)
    }

    /// Exactly two distinct positions on the outer circle.
    pub fn two_on_boundary(&self) -> bool {
        self.boundary_distinct.len() == 2
    }

    /// Exactly three distinct positions on the outer circle.
    pub fn three_on_boundary(&self) -> bool {
        self.boundary_distinct.len() == 3
    }

    /// More than three distinct positions on the outer circle.
    pub fn many_on_boundary(&self) -> bool {
        self.boundary_distinct.len() > 3
    }

    /// Exactly one robot on the center.
    pub fn center_occupied(&self) -> bool {
        self.center_instances() == 1
    }

    /// Interior angles of the boundary triangle, ascending (requires three
    /// distinct boundary positions).
    pub fn triangle_angles(&self) -> Option<[f64; 3]> {
        if !self.three_on_boundary() {
            return None;
        }
        let [a, b, c] = [
            self.boundary_distinct[0],
            self.boundary_distinct[1],
            self.boundary_distinct[2],
        ];
        let mut angles = [angle_at(a, b, c), angle_at(b, a, c), angle_at(c, a, b)];
        angles.sort_by(f64::total_cmp);
        Some(angles)
    }

    /// Boundary triangle with no right angle.
    pub fn triangle_no_right(&self) -> bool {
        match self.triangle_angles() {
            Some(angles) => angles
                .iter()
                .all(|&a| !approx_eq(a, std::f64::consts::FRAC_PI_2)),
            None => false,
        }
    }

    /// Boundary triangle with angles 30, 60 and 90 degrees.
    pub fn triangle_30_60_90(&self) -> bool {
        match self.triangle_angles() {
            Some(angles) => {
                approx_eq(angles[0], std::f64::consts::PI / 6.0)
                    && approx_eq(angles[1], std::f64::consts::PI / 3.0)
                    && approx_eq(angles[2], std::f64::consts::FRAC_PI_2)
            }
            None => false,
        }
    }

    /// The "settled interior" test: either the first inner ring holds at
    /// least two robots, or its radius has already dropped to the midpoint
    /// of the outer gap.
    pub fn interior_settled(&self) -> bool {
        let inner_count = match self.fam.down_radius(1) {
            Some(r) => {
                if approx_zero(r) {
                    self.center_instances()
                } else {
                    self.fam.count_at(r)
                }
            }
            None => 0,
        };
        inner_count >= 2 || approx_le(self.fam.delta1(), self.fam.delta02())
    }

    /// The pattern stacks several points on its own center.
    pub fn pattern_center_mult(&self) -> bool {
        self.stats.center_multiplicity()
    }

    /// The configuration already carries the pattern's center multiplicity
    /// minus one robot.
    pub fn center_mult_built(&self) -> bool {
        self.pattern_center_mult() && self.center_instances() == self.stats.center_count - 1
    }

    // ----- guard observables -------------------------------------------------

    /// Exactly one robot on the guard circle.
    pub fn guard_parked(&self) -> bool {
        self.scan.on_guard.len() == 1
    }

    /// Guard parked and exactly one boundary robot at the reference angle
    /// from it.
    pub fn guard_aligned(&self) -> bool {
        self.guard_candidates().map_or(false, |(_, at)| at.len() == 1)
    }

    /// Guard aligned and a boundary robot antipodal to the aligned one.
    pub fn guard_antipodal(&self) -> bool {
        self.exact_guards().is_some()
    }

    fn guard_candidates(&self) -> Option<(usize, Vec<usize>)> {
        if self.scan.on_guard.len() != 1 {
            return None;
        }
        let inner = self.scan.on_guard[0];
        let at: Vec<usize> = self
            .boundary
            .iter()
            .copied()
            .filter(|&i| {
                approx_eq(
                    angle_at(self.sec.center, self.robots[inner], self.robots[i]),
                    self.stats.alpha,
                )
            })
            .collect();
        Some((inner, at))
    }

    fn exact_guards(&self) -> Option<Guards> {
        recognize_guards(&self.robots, &self.sec, &self.scan, self.stats.alpha)
    }

    /// Guards in the loose sense used during finalization: the antipodal
    /// role is filled by the boundary robot nearest to the true antipode.
    pub fn loose_guards(&self) -> Option<Guards> {
        *self.guards.get_or_init(|| {
            let (inner, at) = self.guard_candidates()?;
            if at.len() != 1 {
                return None;
            }
            let outer = at[0];
            let anti_point = self.sec.center.scale(2.0).sub(self.robots[outer]);
            let anti = self
                .boundary
                .iter()
                .copied()
                .filter(|&i| i != outer)
                .min_by(|&i, &j| {
                    self.robots[i]
                        .dist(anti_point)
                        .total_cmp(&self.robots[j].dist(anti_point))
                        .then(self.robots[i].canonical_cmp(self.robots[j]))
                })?;
            Some(Guards {
                inner,
                outer,
                antipode: anti,
            })
        })
    }

    /// The common embedding and matching, when the guards exist.
    pub fn embedding(&self) -> Option<&(Embedding, Matching)> {
        self.emb
            .get_or_init(|| {
                let guards = self.loose_guards()?;
                let emb =
                    embed_pattern(&self.robots, self.pattern, &self.sec, self.stats, guards);
                let matching = compute_matching(&self.robots, &emb, &self.sec);
                Some((emb, matching))
            })
            .as_ref()
    }

    // ----- transfer observables ----------------------------------------------

    /// Exactly one robot on the teleporter circle.
    pub fn transfer_occupied(&self) -> bool {
        self.scan.on_teleporter.len() == 1
    }

    /// The robot on the teleporter circle stands on the ray from the center
    /// through one of the innermost free targets.
    pub fn transfer_on_exit_ray(&self) -> bool {
        if !self.transfer_occupied() || !self.guard_antipodal() {
            return false;
        }
        let (emb, matching) = match self.embedding() {
            Some(x) => x,
            None => return false,
        };
        let _ = emb;
        let tele = match &self.scan.teleporter_circle {
            Some(c) => *c,
            None => return false,
        };
        let r = self.robots[self.scan.on_teleporter[0]];
        matching.central_targets.iter().any(|f| {
            let off = f.sub(self.sec.center);
            if approx_zero(off.norm()) {
                return false;
            }
            let exit = self.sec.center.add(off.normalize().scale(tele.radius));
            exit.approx_eq(r)
        })
    }

    /// The segment from the designated mover to its target touches the
    /// teleporter circle (the mover must take the detour).
    pub fn transfer_needed(&self) -> bool {
        if !self.guard_antipodal() {
            return false;
        }
        let tele = match &self.scan.teleporter_circle {
            Some(c) => *c,
            None => return false,
        };
        let (_, matching) = match self.embedding() {
            Some(x) => x,
            None => return false,
        };
        let (mover, target) = match (matching.mover, matching.mover_target) {
            (Some(m), Some(t)) => (m, t),
            _ => return false,
        };
        let r = self.robots[mover];
        segment_circle_intersections(r, target, &tele)
            .iter()
            .any(|(_, p)| !p.approx_eq(r))
    }

    // ----- finalization observables -------------------------------------------

    /// The pattern is crown-shaped.
    pub fn crown_pattern(&self) -> bool {
        self.stats.crown
    }

    fn crown_emb(&self) -> Option<&CrownEmbedding> {
        self.crown
            .get_or_init(|| crown_embedding(&self.robots, &self.sec, self.stats))
            .as_ref()
    }

    /// Which crown finalization case applies, with the extracted roles.
    pub fn crown_case(&self) -> Option<&(SubPhase, CrownRoles)> {
        self.crown_roles
            .get_or_init(|| self.compute_crown_case())
            .as_ref()
    }

    fn compute_crown_case(&self) -> Option<(SubPhase, CrownRoles)> {
        if !self.crown_pattern() {
            return None;
        }
        let emb = self.crown_emb()?.clone();
        let n = emb.ring.len();
        let c = self.sec.center;
        let alpha = self.stats.alpha;
        let f1 = emb.ring[0];
        let f2 = emb.ring[1];
        let fn_ = emb.ring[n - 1];
        let p = c.scale(2.0).sub(f2);
        let r2_pos = self.robots[emb.middle_robots[0]];
        let on_sec = |i: usize| approx_eq(self.robots[i].dist(c), self.sec.radius);
        // Sweep from f1 towards f2 in the embedding direction, in [0, 2pi).
        let sweep_from_f1 = |x: Point| -> f64 {
            let raw = ccw_angle(c, f1, x);
            match emb.ccw {
                crate::config::Dir::Ccw => raw,
                crate::config::Dir::Cw => normalize_angle(-raw),
            }
        };
        let gap = sweep_from_f1(f2);
        let between_first = |x: Point| -> bool {
            let s = sweep_from_f1(x);
            s > 0.0 && s < gap && !x.approx_eq(f1) && !x.approx_eq(f2)
        };
        // Directed sweep from p towards the last target.
        let sweep_from_p = |x: Point| -> f64 {
            let raw = ccw_angle(c, p, x);
            let toward_fn = ccw_angle(c, p, fn_);
            if toward_fn <= std::f64::consts::PI {
                raw
            } else {
                normalize_angle(-raw)
            }
        };
        let fn_sweep = sweep_from_p(fn_);

        let try_case = |x: usize, y: usize| -> Option<(SubPhase, CrownRoles)> {
            let roles = |sub| {
                Some((
                    sub,
                    CrownRoles {
                        emb: emb.clone(),
                        r1: x,
                        rn: y,
                    },
                ))
            };
            let px = self.robots[x];
            let py = self.robots[y];
            // Case: the first-role robot still inside, alone on the first
            // ring, at the reference angle from the second target.
            if !on_sec(x) {
                let first_ring = self.fam.up_radius(1)?;
                let on_first = self.fam.count_at(first_ring) == 1
                    && approx_eq(px.dist(c), first_ring);
                if on_first
                    && approx_eq(angle_at(c, px, f2), alpha)
                    && on_sec(y)
                    && py.approx_eq(c.scale(2.0).sub(r2_pos))
                {
                    return roles(SubPhase::Q1);
                }
                return None;
            }
            if !on_sec(y) {
                return None;
            }
            // Remaining cases: both leftovers on the outer circle.
            if between_first(px) && approx_eq(angle_at(c, px, f2), alpha) {
                let y_sweep = sweep_from_p(py);
                if !py.approx_eq(fn_) && approx_lt(y_sweep, alpha) && y_sweep < std::f64::consts::PI
                {
                    return roles(SubPhase::Q2);
                }
            }
            if between_first(px)
                && approx_ge(angle_at(c, px, f2), alpha)
                && approx_lt(angle_at(c, px, f2), gap)
            {
                let y_sweep = sweep_from_p(py);
                if py.approx_eq(fn_) || approx_eq(y_sweep, alpha) {
                    return roles(SubPhase::Q3);
                }
            }
            if px.approx_eq(f1) {
                let y_sweep = sweep_from_p(py);
                if !py.approx_eq(fn_)
                    && approx_ge(y_sweep, alpha)
                    && approx_lt(y_sweep, fn_sweep)
                    && y_sweep < std::f64::consts::PI
                {
                    return roles(SubPhase::Q4);
                }
            }
            None
        };
        let (a, b) = (emb.leftovers[0], emb.leftovers[1]);
        try_case(a, b).or_else(|| try_case(b, a))
    }

    /// The guard-completion test: with the loose guards removed, everything
    /// else already stands on its target and the loose antipodal guard is
    /// off its own.
    pub fn guards_once_removed_match(&self) -> bool {
        if self.crown_pattern() {
            return false;
        }
        let guards = match self.loose_guards() {
            Some(g) => g,
            None => return false,
        };
        let (emb, matching) = match self.embedding() {
            Some(x) => x,
            None => return false,
        };
        if self.robots[guards.antipode].approx_eq(emb.antipode_target) {
            return false;
        }
        // Everyone except the guards must be matched; the guards' own
        // reserved targets are out of the matching by construction.
        matching.free_robots.is_empty() && matching.free_targets.is_empty()
    }

    /// The center-exit test: a lone central (or innermost) robot whose
    /// removal leaves the others similar to the pattern minus one suitable
    /// target.
    pub fn center_exit(&self) -> Option<&CenterExit> {
        self.center_exit
            .get_or_init(|| self.compute_center_exit())
            .as_ref()
    }

    fn compute_center_exit(&self) -> Option<CenterExit> {
        let mut candidates: Vec<usize> = Vec::new();
        if let Some(i) = self
            .robots
            .iter()
            .position(|p| p.approx_eq(self.sec.center))
        {
            candidates.push(i);
        }
        if let Some(r1) = self.fam.up_radius(1) {
            if self.fam.count_at(r1) == 1 {
                if let Some(i) = self
                    .robots
                    .iter()
                    .position(|p| approx_eq(p.dist(self.sec.center), r1))
                {
                    candidates.push(i);
                }
            }
        }
        let pat_stats = self.stats;
        let pat_first_ring = pat_stats.first_ring_radius;
        let mut best: Option<(f64, CenterExit)> = None;
        for &r in &candidates {
            let rest: Vec<Point> = self
                .robots
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != r)
                .map(|(_, p)| *p)
                .collect();
            // Try removing each distinct pattern point.
            let mut seen: Vec<Point> = Vec::new();
            for (fi, &f) in self.pattern.iter().enumerate() {
                if seen.iter().any(|q| q.approx_eq(f)) {
                    continue;
                }
                seen.push(f);
                let f_central = f.approx_eq(pat_stats.center);
                let f_first_ring = pat_stats.center_count == 0
                    && approx_eq(f.dist(pat_stats.center), pat_first_ring);
                if !f_central && !f_first_ring {
                    continue;
                }
                let pat_rest: Vec<Point> = self
                    .pattern
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != fi)
                    .map(|(_, p)| *p)
                    .collect();
                if !radial_profiles_match(&rest, &pat_rest) {
                    continue;
                }
                for t in superimpositions(&pat_rest, &rest) {
                    let target = t.apply(f);
                    if f_first_ring {
                        // The departing robot must still be strictly inside
                        // the ring its target sits on.
                        let cr = smallest_enclosing_circle(&rest).center;
                        if !approx_lt(self.robots[r].dist(cr), target.dist(cr)) {
                            continue;
                        }
                    }
                    let d = self.robots[r].dist(target);
                    let better = match &best {
                        None => true,
                        Some((bd, be)) => {
                            if approx_eq(d, *bd) {
                                target.canonical_cmp(be.target) == std::cmp::Ordering::Less
                            } else {
                                d < *bd
                            }
                        }
                    };
                    if better {
                        best = Some((d, CenterExit { robot: r, target }));
                    }
                }
            }
        }
        best.map(|(_, e)| e)
    }

    // ----- symmetric-phase observables ----------------------------------------

    /// Geometric symmetry (mirror axis or rotation) of the whole snapshot.
    pub fn symmetric(&self) -> bool {
        self.sym.has_rotation || !self.sym.reflection_axes.is_empty()
    }

    /// The unique mirror axis, when the snapshot has exactly one.
    ///
    /// The axis-robot machinery is only well defined in that case: with two
    /// or more axes (hence a rotation) the on-axis robots come in
    /// indistinguishable groups and no single mover can be agreed on, so
    /// those snapshots are handled by ejecting the center robot instead.
    pub fn single_axis(&self) -> Option<&Axis> {
        match self.sym.reflection_axes.as_slice() {
            [axis] => Some(axis),
            _ => None,
        }
    }

    /// No two robots share a position.
    pub fn no_multiplicity(&self) -> bool {
        !has_multiplicity(&self.robots)
    }

    /// Robot indices lying on a mirror axis.
    pub fn axis_robots(&self, axis: &Axis) -> Vec<usize> {
        self.robots
            .iter()
            .enumerate()
            .filter(|(_, p)| axis.contains(**p))
            .map(|(i, _)| i)
            .collect()
    }

    fn axis_criticals(&self, axis: &Axis) -> (usize, usize) {
        let on = self.axis_robots(axis);
        let crit = on
            .iter()
            .filter(|&&i| is_critical(&self.robots, i))
            .count();
        (on.len(), crit)
    }

    /// The unique mirror axis holds exactly one robot.
    pub fn axis_with_one(&self) -> Option<(Axis, usize)> {
        let axis = self.single_axis()?;
        match self.axis_robots(axis).as_slice() {
            [only] => Some((*axis, *only)),
            _ => None,
        }
    }

    /// The unique mirror axis holds at least two robots, at least two of
    /// them non-critical.
    pub fn axis_two_free(&self) -> Option<Axis> {
        let axis = self.single_axis()?;
        let (on, crit) = self.axis_criticals(axis);
        (on >= 2 && on - crit >= 2).then_some(*axis)
    }

    /// The unique mirror axis holds exactly two robots, exactly one
    /// critical.
    pub fn axis_pair_one_critical(&self) -> Option<Axis> {
        let axis = self.single_axis()?;
        let (on, crit) = self.axis_criticals(axis);
        (on == 2 && crit == 1).then_some(*axis)
    }

    /// The unique mirror axis holds exactly three robots, exactly two
    /// critical.
    pub fn axis_triple_two_critical(&self) -> Option<Axis> {
        let axis = self.single_axis()?;
        let (on, crit) = self.axis_criticals(axis);
        (on == 3 && crit == 2).then_some(*axis)
    }

    /// The unique mirror axis holds exactly two robots, both critical.
    pub fn axis_pair_both_critical(&self) -> Option<Axis> {
        let axis = self.single_axis()?;
        let (on, crit) = self.axis_criticals(axis);
        (on == 2 && crit == 2).then_some(*axis)
    }

    /// Order the robots on an axis: nearest to the center first, then
    /// non-critical before critical, then robots that can slide to the
    /// center without creating rotational symmetry, then minimum view.
    pub fn axis_order(&self, axis: &Axis) -> Vec<usize> {
        let mut on = self.axis_robots(axis);
        let c = self.sec.center;
        on.sort_by(|&i, &j| {
            let di = self.robots[i].dist(c);
            let dj = self.robots[j].dist(c);
            if !approx_eq(di, dj) {
                return di.total_cmp(&dj);
            }
            let ci = is_critical(&self.robots, i);
            let cj = is_critical(&self.robots, j);
            if ci != cj {
                return ci.cmp(&cj); // false (non-critical) first
            }
            let fi = has_rotational_free_path(&self.robots, i);
            let fj = has_rotational_free_path(&self.robots, j);
            if fi != fj {
                return fj.cmp(&fi); // true (free path) first
            }
            let (vi, _) = crate::config::min_view(&self.robots, c, self.robots[i]);
            let (vj, _) = crate::config::min_view(&self.robots, c, self.robots[j]);
            vi.cmp(&vj)
                .then(self.robots[i].canonical_cmp(self.robots[j]))
        });
        on
    }

    /// The faraway structure, when present.
    pub fn faraway(&self) -> Option<&Faraway> {
        self.faraway
            .get_or_init(|| self.compute_faraway())
            .as_ref()
    }

    fn compute_faraway(&self) -> Option<Faraway> {
        if self.boundary.len() != 3 || self.boundary_distinct.len() != 3 {
            return None;
        }
        let c = self.sec.center;
        for k in 0..3 {
            let mover = self.boundary[k];
            let r1 = self.boundary[(k + 1) % 3];
            let r2 = self.boundary[(k + 2) % 3];
            let pm = self.robots[mover];
            let p1 = self.robots[r1];
            let p2 = self.robots[r2];
            // The pair must be the two farthest robots from the mover.
            let dmin = pm.dist(p1).min(pm.dist(p2));
            let far_ok = self
                .robots
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != mover && *i != r1 && *i != r2)
                .all(|(_, p)| approx_le(pm.dist(*p), dmin));
            if !far_ok {
                continue;
            }
            // Narrow wedge at the mover.
            if !approx_le(angle_at(pm, p1, p2), 59f64.to_radians()) {
                continue;
            }
            // The rest must be mirror-symmetric across the perpendicular
            // bisector of the pair, with no robot on the axis itself.
            let mid = p1.add(p2).scale(0.5);
            let axis = Axis {
                center: mid,
                dir: p2.sub(p1).perp().normalize(),
            };
            let rest: Vec<Point> = self
                .robots
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != mover)
                .map(|(_, p)| *p)
                .collect();
            let reflected: Vec<Point> = rest.iter().map(|p| axis.reflect(*p)).collect();
            if !crate::config::multisets_match(&rest, &reflected) {
                continue;
            }
            if rest.iter().any(|p| axis.contains(*p)) {
                continue;
            }
            // Rotation target: the nearer point completing a right-angled
            // triangle with the pair, i.e. the closer antipode.
            let anti1 = c.scale(2.0).sub(p1);
            let anti2 = c.scale(2.0).sub(p2);
            let target = if pm.dist(anti1) <= pm.dist(anti2) {
                anti1
            } else {
                anti2
            };
            if pm.approx_eq(target) {
                continue;
            }
            // The mover sits on the shortest arc between the axis and the
            // target: from the axis pole nearest the target, target excluded.
            let entry = crate::geom::line_circle_intersections(axis.center, axis.dir, &self.sec)
                .into_iter()
                .min_by(|a, b| a.dist(target).total_cmp(&b.dist(target)))?;
            let sweep = ccw_angle(c, entry, target);
            let (forward, span) = if sweep <= std::f64::consts::PI {
                (true, sweep)
            } else {
                (false, std::f64::consts::TAU - sweep)
            };
            let pos = if forward {
                ccw_angle(c, entry, pm)
            } else {
                normalize_angle(-ccw_angle(c, entry, pm))
            };
            if pm.approx_eq(entry) || pos <= span {
                return Some(Faraway {
                    mover,
                    pair: (r1, r2),
                    axis,
                    target,
                    entry,
                });
            }
        }
        None
    }

    /// The lone-innermost-robot test for the symmetric phase: a unique
    /// robot on the first ring whose removal leaves a symmetric multiset,
    /// plus the positional side conditions; or a symmetric snapshot with
    /// the center occupied.
    pub fn lone_inner_breaks_symmetry(&self) -> bool {
        if self.symmetric() && self.center_occupied() {
            return true;
        }
        let first_ring = match self.fam.up_radius(1) {
            Some(r) => r,
            None => return false,
        };
        if self.fam.count_at(first_ring) != 1 {
            return false;
        }
        let r = match self
            .robots
            .iter()
            .position(|p| approx_eq(p.dist(self.sec.center), first_ring))
        {
            Some(i) => i,
            None => return false,
        };
        let rest: Vec<Point> = self
            .robots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, p)| *p)
            .collect();
        let rest_sec = smallest_enclosing_circle(&rest);
        let rest_sym = symmetry_info(&rest, rest_sec.center);
        if !rest_sym.has_rotation && rest_sym.reflection_axes.is_empty() {
            return false;
        }
        if self.center_occupied() {
            return true;
        }
        if self.symmetric() {
            return false;
        }
        if self.center_exit().is_some() {
            return false;
        }
        let guard_radius = match &self.scan.guard_circle {
            Some(c) => c.radius,
            None => return false,
        };
        let pr = self.robots[r];
        if !approx_lt(pr.dist(self.sec.center), guard_radius) {
            return false;
        }
        self.boundary.iter().all(|&b| {
            !approx_eq(
                angle_at(self.sec.center, pr, self.robots[b]),
                self.stats.alpha,
            )
        })
    }

    /// The parked-second-robot test: some ring holds exactly the second
    /// axis robot, exactly midway between its neighbouring rings.
    pub fn second_axis_robot_parked(&self, axis: &Axis) -> bool {
        let order = self.axis_order(axis);
        if order.len() < 2 {
            return false;
        }
        let rhat2 = order[1];
        let d = self.robots[rhat2].dist(self.sec.center);
        if approx_zero(d) {
            return false;
        }
        // Find the ring index of the robot.
        let mut idx = None;
        for i in 1.. {
            match self.fam.up_radius(i) {
                Some(r) => {
                    if approx_eq(r, d) {
                        idx = Some(i);
                        break;
                    }
                    if r > d {
                        break;
                    }
                }
                None => break,
            }
        }
        let i = match idx {
            Some(i) => i,
            None => return false,
        };
        if self.fam.count_at(d) != 1 {
            return false;
        }
        let below = match self.fam.up_radius(i - 1) {
            Some(r) => r,
            None => return false,
        };
        let above = match self.fam.up_radius(i + 1) {
            Some(r) => r,
            None => return false,
        };
        approx_eq(d, 0.5 * (below + above))
    }

    /// The second axis robot is outside the critical slide window, or
    /// parked exactly on one of its two admissible stops.
    pub fn second_axis_robot_clear(&self, axis: &Axis) -> bool {
        let order = self.axis_order(axis);
        if order.len() < 2 {
            return true;
        }
        let rhat2 = order[1];
        match self.slide_window(axis, rhat2) {
            Some(w) => {
                let p = self.robots[rhat2];
                let between = w.contains(p);
                !between
                    || p.approx_eq(w.outer_stop)
                    || w.safe_stop.map_or(false, |t| p.approx_eq(t))
            }
            None => true,
        }
    }

    /// The slide window of the second axis robot on a mirror axis: the
    /// segment between the 60-degree and 55-degree wedge points, plus the
    /// optional safe stop where the outer circle picks up extra robots.
    pub fn slide_window(&self, _axis: &Axis, rhat2: usize) -> Option<SlideWindow> {
        let _c = self.sec.center;
        let p = self.robots[rhat2];
        // The two boundary robots nearest to the second axis robot.
        let mut flank: Vec<usize> = self
            .boundary
            .iter()
            .copied()
            .filter(|&i| i != rhat2)
            .collect();
        if flank.len() < 2 {
            return None;
        }
        flank.sort_by(|&i, &j| {
            self.robots[i]
                .dist(p)
                .total_cmp(&self.robots[j].dist(p))
                .then(self.robots[i].canonical_cmp(self.robots[j]))
        });
        let (ra, rb) = (self.robots[flank[0]], self.robots[flank[1]]);
        // On the perpendicular bisector of the flanker chord, the wedge at
        // distance s from the chord midpoint is 2*atan((b/2)/s): solve the
        // two stops in closed form, on the robot's side of the chord.
        let chord_mid = ra.add(rb).scale(0.5);
        if p.approx_eq(chord_mid) {
            return None;
        }
        let out_dir = p.sub(chord_mid).normalize();
        let half = 0.5 * ra.dist(rb);
        let t60 = chord_mid.add(out_dir.scale(half / 30f64.to_radians().tan()));
        let t55 = chord_mid.add(out_dir.scale(half / 27.5f64.to_radians().tan()));
        // Safe stop: the earliest point of the window where swapping the
        // robot there puts more than three robots on the grown outer circle.
        let rest: Vec<Point> = self
            .robots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != rhat2)
            .map(|(_, q)| *q)
            .collect();
        let wide = |t: Point| -> bool {
            let mut h = rest.clone();
            h.push(t);
            let s = smallest_enclosing_circle(&h);
            self.robots
                .iter()
                .filter(|q| approx_eq(q.dist(s.center), s.radius))
                .count()
                > 3
        };
        let mut safe_stop = None;
        if wide(t60) {
            safe_stop = Some(t60);
        } else {
            let steps = 512;
            let mut prev = t60;
            for k in 1..=steps {
                let cur = t60.lerp(t55, k as f64 / steps as f64);
                if wide(cur) {
                    // Refine the entry point of the region by bisection.
                    let mut lo = prev;
                    let mut hi = cur;
                    for _ in 0..64 {
                        let mid = lo.lerp(hi, 0.5);
                        if wide(mid) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    safe_stop = Some(hi);
                    break;
                }
                prev = cur;
            }
        }
        Some(SlideWindow {
            inner_stop: t60,
            outer_stop: t55,
            safe_stop,
        })
    }

    // ----- composite phase predicates ------------------------------------------

    /// Entry condition of the guard-placing phase.
    pub fn ready_for_guards(&self) -> bool {
        (!self.pattern_center_mult() || self.center_mult_built())
            && self.two_on_boundary()
            && self.interior_settled()
    }

    /// Entry condition of the target-matching phase.
    pub fn ready_for_matching(&self) -> bool {
        (!self.pattern_center_mult() || self.center_mult_built()) && self.guard_antipodal()
    }

    /// Entry condition of the finalization phase.
    pub fn ready_for_finish(&self) -> bool {
        if self.crown_pattern() {
            self.crown_case().is_some()
        } else {
            self.guards_once_removed_match() || self.center_exit().is_some()
        }
    }

    /// Entry condition of the symmetric phase.
    pub fn needs_symmetry_break(&self) -> bool {
        (self.symmetric() || self.faraway().is_some() || self.lone_inner_breaks_symmetry())
            && self.no_multiplicity()
    }

    /// The pattern is already formed.
    pub fn formed(&self) -> bool {
        radial_profiles_match(&self.robots, self.pattern) && similar(&self.robots, self.pattern)
    }

    // ----- classification --------------------------------------------------------

    pub fn phase(&self) -> Phase {
        if self.formed() {
            Phase::Formed
        } else if self.needs_symmetry_break() {
            Phase::BreakSymmetry
        } else if self.ready_for_finish() {
            Phase::Finish
        } else if self.ready_for_matching() {
            Phase::MatchTargets
        } else if self.ready_for_guards() {
            Phase::PlaceGuards
        } else {
            Phase::TrimBoundary
        }
    }

    /// All sub-phase start predicates of a phase, evaluated on this snapshot.
    fn sub_matches(&self, phase: Phase) -> Vec<SubPhase> {
        let mut out = Vec::new();
        let mut add = |cond: bool, sub: SubPhase| {
            if cond {
                out.push(sub);
            }
        };
        match phase {
            Phase::TrimBoundary => {
                let s2 = self.two_on_boundary();
                let s3 = self.three_on_boundary();
                let splus = self.many_on_boundary();
                let l = self.interior_settled();
                let t0 = self.triangle_no_right();
                let t1 = self.triangle_30_60_90();
                let m0 = self.pattern_center_mult();
                let m1 = self.center_mult_built();
                add(splus && l, SubPhase::A1);
                add((splus || s3) && !l, SubPhase::A2);
                add(s2 && m0 && !m1, SubPhase::B);
                add(s3 && t0 && l, SubPhase::C1);
                add(s3 && !t0 && !t1 && l && m0 && !m1, SubPhase::C2);
                add(s3 && t1 && l && m0 && !m1, SubPhase::D);
                add(s3 && !t0 && l && (!m0 || m1), SubPhase::E1);
                add(s2 && !l && (!m0 || m1), SubPhase::E2);
            }
            Phase::PlaceGuards => {
                let g0 = self.guard_parked();
                let g1 = self.guard_aligned();
                let c = self.center_occupied();
                let m1 = self.center_mult_built();
                add(!g0 && (!c || m1), SubPhase::G1);
                add(g0 && !g1 && (!c || m1), SubPhase::G2);
                add(c && !self.pattern_center_mult(), SubPhase::H);
            }
            Phase::MatchTargets => {
                let d0 = self.transfer_occupied();
                let d1 = self.transfer_on_exit_ray();
                let d2 = self.transfer_needed();
                add(d0 && !d1, SubPhase::M);
                add((!d0 || d1) && d2, SubPhase::N);
                add((!d0 || d1) && !d2, SubPhase::O);
            }
            Phase::Finish => {
                if self.crown_pattern() {
                    if let Some((sub, _)) = self.crown_case() {
                        out.push(*sub);
                    }
                } else {
                    add(self.guards_once_removed_match(), SubPhase::P1);
                    add(self.center_exit().is_some(), SubPhase::P2);
                }
            }
            Phase::BreakSymmetry => {
                let b0 = self.symmetric();
                let c = self.center_occupied();
                let z1 = self.faraway().is_some();
                let z2 = self.lone_inner_breaks_symmetry();
                let b1 = self.axis_with_one().is_some();
                let v1 = b0
                    && self.axis_two_free().map_or(false, |axis| {
                        !c || !self.second_axis_robot_parked(&axis)
                    });
                let v2 = b0
                    && self.axis_pair_one_critical().map_or(false, |axis| {
                        !c || !self.second_axis_robot_clear(&axis)
                    });
                add(b0 && !c && b1 && !z1, SubPhase::T);
                add(z1, SubPhase::U);
                add(v1, SubPhase::V1);
                add(v2, SubPhase::V2);
                add(
                    b0 && !c && self.axis_triple_two_critical().is_some(),
                    SubPhase::V3,
                );
                add(
                    b0 && !c && self.axis_pair_both_critical().is_some(),
                    SubPhase::V4,
                );
                add(z2 && !v1 && !v2, SubPhase::W);
            }
            Phase::Formed => {}
        }
        out
    }

    pub fn classify(&self) -> Classification {
        let phase = self.phase();
        let matches = self.sub_matches(phase);
        Classification {
            phase,
            sub: matches.first().copied(),
            matches,
        }
    }
}

/// The slide window of the second axis robot: two wedge stops and the
/// optional stop where the outer circle widens.
#[derive(Debug, Clone, Copy)]
pub struct SlideWindow {
    /// Stop nearer the center (60-degree wedge).
    pub inner_stop: Point,
    /// Stop nearer the pole (55-degree wedge).
    pub outer_stop: Point,
    /// First point from the inner stop where the outer circle would hold
    /// more than three robots.
    pub safe_stop: Option<Point>,
}

impl SlideWindow {
    /// `p` lies on the closed segment between the two stops.
    pub fn contains(&self, p: Point) -> bool {
        let seg = self.outer_stop.sub(self.inner_stop);
        let len2 = seg.norm2();
        if approx_zero(len2) {
            return p.approx_eq(self.inner_stop);
        }
        let t = p.sub(self.inner_stop).dot(seg) / len2;
        let proj = self.inner_stop.add(seg.scale(t));
        proj.approx_eq(p) && (-1e-9..=1.0 + 1e-9).contains(&t)
    }
}

/// True when the segment from the mover towards the center of the others is
/// free of robots and of rotation-creating points.
pub fn has_rotational_free_path(robots: &[Point], mover: usize) -> bool {
    let rest: Vec<Point> = robots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != mover)
        .map(|(_, p)| *p)
        .collect();
    let target = smallest_enclosing_circle(&rest).center;
    let from = robots[mover];
    if from.approx_eq(target) {
        return true;
    }
    for &p in &rest {
        if p.approx_eq(from) || p.approx_eq(target) {
            continue;
        }
        if crate::geom::point_on_segment(p, from, target) {
            return false;
        }
    }
    rotation_blockers(&rest, from, target).is_empty()
}

/// All points strictly between `from` and `to` whose insertion into `rest`
/// yields a rotationally symmetric multiset.
pub fn rotation_blockers(rest: &[Point], from: Point, to: Point) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    let sec_rest = smallest_enclosing_circle(rest);
    let n = rest.len() + 1;
    let mut push_if_valid = |t: Point| {
        if t.approx_eq(from) || t.approx_eq(to) {
            return;
        }
        if !crate::geom::point_on_segment(t, from, to) {
            return;
        }
        let mut h = rest.to_vec();
        h.push(t);
        let sec_h = smallest_enclosing_circle(&h);
        if symmetry_info(&h, sec_h.center).has_rotation && !out.iter().any(|q| q.approx_eq(t)) {
            out.push(t);
        }
    };
    // Candidates with the insertion inside the others' circle: rotations of
    // existing robots about that circle's center.
    for m in 2..=n {
        for k in 1..m {
            let theta = std::f64::consts::TAU * k as f64 / m as f64;
            for &x in rest {
                push_if_valid(x.rotate_about(sec_rest.center, -theta));
                push_if_valid(x.rotate_about(sec_rest.center, theta));
            }
        }
    }
    // Candidates with the insertion on the enlarged outer circle: points of
    // the segment where some robot reaches the new outer circle. Found by a
    // sign scan of (distance to new center) - (new radius) per robot.
    let steps = 128;
    for &x in rest {
        let f = |t: f64| -> f64 {
            let cand = from.lerp(to, t);
            let mut h = rest.to_vec();
            h.push(cand);
            let s = smallest_enclosing_circle(&h);
            x.dist(s.center) - s.radius
        };
        let mut prev_t = 0.0;
        let mut prev_v = f(prev_t);
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            let v = f(t);
            if (prev_v <= 0.0) != (v <= 0.0) || v.abs() < geom::tol(1.0, 0.0) {
                let mut lo = prev_t;
                let mut hi = t;
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if (f(lo) <= 0.0) != (f(mid) <= 0.0) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                push_if_valid(from.lerp(to, 0.5 * (lo + hi)));
            }
            prev_t = t;
            prev_v = v;
        }
    }
    out.sort_by(|a, b| a.dist(from).total_cmp(&b.dist(from)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    fn on_circle(deg: f64) -> (f64, f64) {
        let a = deg.to_radians();
        (a.cos(), a.sin())
    }

    /// A generic asymmetric pattern used by most tests: two antipodal
    /// boundary points, a ring point and an off-axis interior point.
    fn base_pattern() -> Vec<Point> {
        pts(&[(1.0, 0.0), (-1.0, 0.0), (0.3, 0.0), (0.0, -0.45)])
    }

    #[test]
    fn boundary_counts_and_triangles() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);

        // Four robots on the circle: many_on_boundary and settled interior.
        let square = pts(&[on_circle(0.0), on_circle(90.0), on_circle(180.0), on_circle(270.0)]);
        let a = Analysis::new(&square, &pat, &stats);
        assert!(a.many_on_boundary());
        assert!(a.interior_settled(), "no interior robots means settled");
        assert_eq!(a.phase(), Phase::BreakSymmetry); // square is symmetric

        // Right triangle on the circle plus interior ballast.
        let tri = pts(&[
            on_circle(0.0),
            on_circle(180.0),
            on_circle(60.0),
            (0.2, 0.11),
        ]);
        let a = Analysis::new(&tri, &pat, &stats);
        assert!(a.three_on_boundary());
        assert!(!a.triangle_no_right(), "inscribed on a diameter is right");
        assert!(a.triangle_30_60_90());
    }

    #[test]
    fn settled_interior_via_midpoint() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // A lone robot on the first inner circle at radius ~0.95, well above
        // the midpoint (1 + 0.1) / 2 = 0.55 of its neighbouring circles.
        let cfg = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.69, 0.65), (0.1, 0.0)]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert!(!a.interior_settled(), "lone inner robot above the midpoint");

        // The same robot parked exactly on the midpoint circle: settled.
        let a40 = 40f64.to_radians();
        let cfg2 = pts(&[
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.55 * a40.cos(), 0.55 * a40.sin()),
            (0.1, 0.0),
        ]);
        let a2 = Analysis::new(&cfg2, &pat, &stats);
        assert!(
            a2.interior_settled(),
            "inner robot at the midpoint radius settles the interior"
        );
    }

    #[test]
    fn guard_observables_line_up() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        let robots = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.5, 0.2)]);
        let sec = smallest_enclosing_circle(&robots);
        let scan = crate::embedding::guard_scan(&robots, &sec, &stats);
        let rg = scan.guard_circle.unwrap().radius;
        let inner = Point::new(rg * stats.alpha.cos(), -rg * stats.alpha.sin());
        let mut all = robots;
        all.push(inner);
        let a = Analysis::new(&all, &pat, &stats);
        assert!(a.guard_parked());
        assert!(a.guard_aligned());
        assert!(a.guard_antipodal());
        assert!(a.ready_for_matching());
        assert_eq!(a.phase(), Phase::MatchTargets);
        let cls = a.classify();
        assert_eq!(cls.matches.len(), 1, "exactly one sub-phase: {:?}", cls.matches);
    }

    #[test]
    fn faraway_structure_detected() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // Mirror pair near the top, mover rotating along the bottom arc
        // between the lower axis pole (270) and the nearer antipode (280),
        // interior mirror-symmetric ballast.
        let cfg = pts(&[
            on_circle(80.0),
            on_circle(100.0),
            on_circle(275.0),
            (0.1, 0.2),
            (-0.1, 0.2),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        let fw = a.faraway();
        assert!(fw.is_some(), "faraway structure should be detected");
        let fw = fw.unwrap();
        assert_eq!(fw.mover, 2);
        // The wedge at the mover subtends the 20-degree arc: 10 degrees.
        assert!(fw.target.approx_eq(Point::new(
            280f64.to_radians().cos(),
            280f64.to_radians().sin()
        )));
        assert!(a.needs_symmetry_break());
        let cls = a.classify();
        assert_eq!(cls.sub, Some(SubPhase::U));
        assert_eq!(cls.matches, vec![SubPhase::U]);
    }

    #[test]
    fn symmetric_with_center_goes_to_w() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // A square with its center occupied: symmetric, center robot, no
        // multiplicities.
        let cfg = pts(&[
            on_circle(0.0),
            on_circle(90.0),
            on_circle(180.0),
            on_circle(270.0),
            (0.0, 0.0),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert!(a.symmetric());
        assert!(a.center_occupied());
        assert_eq!(a.phase(), Phase::BreakSymmetry);
        let cls = a.classify();
        assert_eq!(cls.sub, Some(SubPhase::W), "matches: {:?}", cls.matches);
        assert_eq!(cls.matches.len(), 1);
    }

    #[test]
    fn lone_axis_robot_goes_to_t() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // Isosceles five-robot set: unique mirror axis through the apex,
        // apex is the only robot on it.
        let cfg = pts(&[
            on_circle(90.0),
            on_circle(200.0),
            on_circle(340.0),
            (0.3, 0.1),
            (-0.3, 0.1),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert!(a.symmetric());
        assert!(!a.center_occupied());
        let cls = a.classify();
        assert_eq!(cls.phase, Phase::BreakSymmetry);
        assert_eq!(cls.sub, Some(SubPhase::T), "matches: {:?}", cls.matches);
    }

    #[test]
    fn axis_counting_predicates() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // Equilateral triangle with occupied center: three axes, each with
        // one vertex (critical) and the center robot. With several axes the
        // per-axis machinery is ill-posed (the vertices are mutually
        // indistinguishable), so the axis helpers decline and the center
        // robot is ejected instead.
        let cfg = pts(&[
            on_circle(90.0),
            on_circle(210.0),
            on_circle(330.0),
            (0.0, 0.0),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert!(a.symmetric());
        assert!(a.single_axis().is_none(), "three axes, not one");
        assert!(a.axis_pair_one_critical().is_none());
        assert!(a.axis_two_free().is_none());
        // The center robot is first in the order along any of the axes.
        let axis = a.sym.reflection_axes[0];
        let order = a.axis_order(&axis);
        assert!(a.robots[order[0]].approx_eq(Point::ORIGIN));
        let cls = a.classify();
        assert_eq!(cls.sub, Some(SubPhase::W), "matches: {:?}", cls.matches);
        assert_eq!(cls.matches.len(), 1);
    }

    #[test]
    fn single_axis_pair_goes_to_v2() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // One mirror axis (vertical): a critical robot at the top pole with
        // its two flankers at a 120-degree central spread (wedge 60, so the
        // robot sits exactly on the inner stop of its slide window), plus an
        // interior robot on the axis and asymmetry-free ballast.
        let cfg = pts(&[
            on_circle(90.0),
            on_circle(210.0),
            on_circle(330.0),
            (0.0, -0.4),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert!(a.single_axis().is_some(), "exactly one mirror axis");
        let axis = a.axis_pair_one_critical();
        assert!(axis.is_some(), "top robot critical, inner robot not");
        let axis = axis.unwrap();
        let order = a.axis_order(&axis);
        assert!(a.robots[order[0]].approx_eq(Point::new(0.0, -0.4)));
        let w = a.slide_window(&axis, order[1]).unwrap();
        assert!(
            a.robots[order[1]].approx_eq(w.inner_stop),
            "equilateral spread puts the critical robot exactly at the 60-degree stop"
        );
        assert!(!a.second_axis_robot_clear(&axis));
        let cls = a.classify();
        assert_eq!(cls.sub, Some(SubPhase::V2), "matches: {:?}", cls.matches);
        assert_eq!(cls.matches.len(), 1);
    }

    #[test]
    fn formed_is_detected_up_to_similarity() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // The pattern itself, rotated, scaled and translated.
        let moved: Vec<Point> = pat
            .iter()
            .map(|p| p.rotate(1.1).scale(3.0).add(Point::new(5.0, -2.0)))
            .collect();
        let a = Analysis::new(&moved, &pat, &stats);
        assert!(a.formed());
        assert_eq!(a.phase(), Phase::Formed);
    }

    #[test]
    fn trim_boundary_subphases_are_exclusive() {
        let pat = base_pattern();
        let stats = PatternStats::new(&pat);
        // Five boundary robots plus a deep interior robot: settled, so A1.
        let cfg = pts(&[
            on_circle(10.0),
            on_circle(80.0),
            on_circle(160.0),
            on_circle(220.0),
            on_circle(300.0),
            (0.03, 0.04),
        ]);
        let a = Analysis::new(&cfg, &pat, &stats);
        assert_eq!(a.phase(), Phase::TrimBoundary);
        let cls = a.classify();
        assert_eq!(cls.sub, Some(SubPhase::A1), "matches: {:?}", cls.matches);
        assert_eq!(cls.matches.len(), 1);

        // Mid-detachment: a robot between the first inner ring and the
        // boundary midpoint: not settled, so A2.
        let cfg2 = pts(&[
            on_circle(10.0),
            on_circle(80.0),
            on_circle(160.0),
            on_circle(220.0),
            on_circle(300.0),
            (0.03, 0.04),
            (0.9, 0.1),
        ]);
        let a2 = Analysis::new(&cfg2, &pat, &stats);
        assert_eq!(a2.phase(), Phase::TrimBoundary);
        let cls2 = a2.classify();
        assert_eq!(cls2.sub, Some(SubPhase::A2), "matches: {:?}", cls2.matches);
        assert_eq!(cls2.matches.len(), 1);
    }

    #[test]
    fn rotational_free_path_blocks_on_symmetry() {
        // Others form a square; sliding a robot down the vertical axis to
        // the center passes the point that would make a centered plus sign
        // rotationally symmetric... a square plus center is 4-fold
        // symmetric at the exact center only, which is the excluded
        // endpoint, so the path is free.
        let robots = pts(&[
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (0.0, 0.5),
        ]);
        // Wait: robot 4 sits between (0,1) and the center; the square
        // itself is already 4-fold rotationally symmetric, and inserting
        // the mover anywhere except the center breaks that rotation, so
        // the path is free of rotation-creating points but passes through
        // no robots either.
        assert!(has_rotational_free_path(&robots, 4));

        // Now make the others two horizontal robots: inserting the mover
        // at the midpoint of the segment creates a 2-fold rotation.
        let robots2 = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.8)]);
        // The mover heads to (0,0); inserting it there is the endpoint
        // (excluded). Points elsewhere on the open segment give no
        // rotation. So free.
        assert!(has_rotational_free_path(&robots2, 2));

        // Three robots where the mover's path crosses a point completing a
        // 2-fold rotation: others at (1,0) and (-1,0) and (0,0.5); mover
        // descending from (0,-0.9) toward the center of the others. The
        // center of the others is near (0, 0.25-ish)... inserting the mover
        // at (0,-0.5) mirrors (0,0.5) through (0,0): rotation by pi about
        // (0,0) maps (1,0)->(-1,0) and (0,0.5)->(0,-0.5). The insertion
        // point (0,-0.5) must lie between the mover and its target for the
        // path to be blocked.
        let robots3 = pts(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.5), (0.0, -0.9)]);
        let rest: Vec<Point> = robots3[..3].to_vec();
        let blockers = rotation_blockers(&rest, Point::new(0.0, -0.9), Point::new(0.0, 0.25));
        assert!(
            blockers.iter().any(|p| p.approx_eq(Point::new(0.0, -0.5))),
            "blockers: {blockers:?}"
        );
    }
}
