//! Execution: scenario I/O and validation, normalisation, the adversarial
//! Look-Compute-Move scheduler and JSONL trace production.
//!
//! A run is deterministic in (scenario, seed, mode): all randomness — the
//! activation order, the stop fractions of interrupted moves and the local
//! coordinate frames — is drawn from one seeded stream, and trace lines are
//! serialized with a stable field order, so identical inputs produce
//! byte-identical traces.

use crate::config::{has_multiplicity, is_leader_configuration, similar};
use crate::embedding::PatternStats;
use crate::geom::{smallest_enclosing_circle, Circle, ConcentricFamily, Path, PathSeg, Point};
use crate::moves::{self, PlanOptions};
use crate::predicates::Analysis;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

/// Default minimum progress of an interrupted move, in units of the initial
/// boundary-circle radius.
pub const DEFAULT_NU: f64 = 0.05;

/// Positions closer than this after a completed move are merged exactly;
/// distinct circle radii of valid scenarios must stay 10x further apart.
pub const MERGE_EPS: f64 = crate::geom::SNAP_EPS;

// ---------------------------------------------------------------------------
// scenario files

/// Scheduling model, ordered by decreasing adversary power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fsync,
    Ssync,
    Async,
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Async
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Fsync => "fsync",
            Mode::Ssync => "ssync",
            Mode::Async => "async",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fsync" => Ok(Mode::Fsync),
            "ssync" => Ok(Mode::Ssync),
            "async" => Ok(Mode::Async),
            other => Err(format!("unknown mode `{other}` (expected fsync|ssync|async)")),
        }
    }
}

fn default_nu() -> f64 {
    DEFAULT_NU
}

/// Adversary parameters of a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversaryConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_nu")]
    pub nu: f64,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            mode: Mode::Async,
            seed: 0,
            nu: DEFAULT_NU,
        }
    }
}

/// Step and termination limits of a scenario file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Limits {
    #[serde(rename = "maxSteps", default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(rename = "quietRounds", default, skip_serializing_if = "Option::is_none")]
    pub quiet_rounds: Option<u64>,
}

/// A scenario file: initial positions, the pattern (given directly or as a
/// full pairwise distance matrix) and the adversary/limit knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub robots: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<[f64; 2]>>,
    #[serde(
        rename = "patternDistances",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub pattern_distances: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default)]
    pub limits: Limits,
}

/// Why a scenario was rejected at load.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("NotLeaderConfiguration: the initial configuration has a symmetry fixing no robot")]
    NotLeaderConfiguration,
    #[error("SizeMismatch: {robots} robots but {pattern} pattern points")]
    SizeMismatch { robots: usize, pattern: usize },
    #[error("InitialMultiplicity: two robots share an initial position")]
    InitialMultiplicity,
    #[error("GatheringDelegated: single-point patterns are delegated to a gathering algorithm")]
    GatheringDelegated,
    #[error("the problem is unsolvable for n={0}")]
    Unsolvable(usize),
    #[error("NotPlanar: the distance matrix is not realizable in the plane")]
    NotPlanar,
    #[error("distinct circle radii are closer than 10x the merge tolerance")]
    RadiiTooClose,
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validate and normalise into a runnable setup.
    pub fn prepare(&self) -> Result<Prepared, ScenarioError> {
        let robots: Vec<Point> = self.robots.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let pattern: Vec<Point> = match (&self.pattern, &self.pattern_distances) {
            (Some(p), None) => p.iter().map(|&[x, y]| Point::new(x, y)).collect(),
            (None, Some(d)) => pattern_from_distances(d)?,
            (Some(_), Some(_)) => {
                return Err(ScenarioError::Invalid(
                    "give either `pattern` or `patternDistances`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ScenarioError::Invalid(
                    "missing `pattern` or `patternDistances`".into(),
                ))
            }
        };
        if robots.len() != pattern.len() {
            return Err(ScenarioError::SizeMismatch {
                robots: robots.len(),
                pattern: pattern.len(),
            });
        }
        let n = robots.len();
        let mut distinct_pattern: Vec<Point> = Vec::new();
        for &f in &pattern {
            if !distinct_pattern.iter().any(|q| q.approx_eq(f)) {
                distinct_pattern.push(f);
            }
        }
        if distinct_pattern.len() <= 1 {
            return Err(ScenarioError::GatheringDelegated);
        }
        if n < 3 {
            return Err(ScenarioError::Unsolvable(n));
        }
        if has_multiplicity(&robots) {
            return Err(ScenarioError::InitialMultiplicity);
        }
        if !is_leader_configuration(&robots) {
            return Err(ScenarioError::NotLeaderConfiguration);
        }
        let nu = self.adversary.nu;
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(ScenarioError::Invalid(format!(
                "nu must be in (0, 1], got {nu}"
            )));
        }

        let robots = normalize(&robots);
        let pattern = normalize(&pattern);
        check_radii_separation(&robots)?;
        check_radii_separation(&pattern)?;

        let stats = PatternStats::new(&pattern);
        let max_steps = self
            .limits
            .max_steps
            .unwrap_or_else(|| 50 * n as u64 * (1.0 / nu).ceil() as u64);
        let quiet_rounds = self.limits.quiet_rounds.unwrap_or(3 * n as u64);
        Ok(Prepared {
            robots,
            pattern,
            stats,
            mode: self.adversary.mode,
            seed: self.adversary.seed,
            nu,
            max_steps,
            quiet_rounds,
            fault: PlanOptions::default(),
        })
    }
}

/// Rescale and translate a point set so its enclosing circle is the unit
/// circle at the origin.
pub fn normalize(points: &[Point]) -> Vec<Point> {
    let sec = smallest_enclosing_circle(points);
    let r = if sec.radius > 0.0 { sec.radius } else { 1.0 };
    points
        .iter()
        .map(|p| p.sub(sec.center).scale(1.0 / r))
        .collect()
}

/// Distinct occupied radii must be separated well beyond the merge snap.
fn check_radii_separation(points: &[Point]) -> Result<(), ScenarioError> {
    let sec = smallest_enclosing_circle(points);
    let fam = ConcentricFamily::build(points, sec.center);
    for pair in fam.radii.windows(2) {
        if (pair[1] - pair[0]).abs() <= 10.0 * MERGE_EPS {
            return Err(ScenarioError::RadiiTooClose);
        }
    }
    Ok(())
}

/// Reconstruct a point set from its full pairwise distance matrix: the first
/// point is placed at the origin, the second on the positive x-axis, and the
/// first off-axis point fixes the reflection sign.
pub fn pattern_from_distances(d: &[Vec<f64>]) -> Result<Vec<Point>, ScenarioError> {
    let n = d.len();
    if n == 0 || d.iter().any(|row| row.len() != n) {
        return Err(ScenarioError::Invalid(
            "patternDistances must be a square matrix".into(),
        ));
    }
    let scale = d
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0, f64::max);
    let eps = 1e-7 * scale.max(1.0);
    for i in 0..n {
        if d[i][i].abs() > eps {
            return Err(ScenarioError::Invalid("nonzero diagonal".into()));
        }
        for j in 0..n {
            if (d[i][j] - d[j][i]).abs() > eps || d[i][j] < 0.0 {
                return Err(ScenarioError::Invalid("matrix must be symmetric".into()));
            }
        }
    }
    // Anchor: first point at the origin, first point at positive distance on
    // the +x axis.
    let mut pts = vec![Point::ORIGIN; n];
    let anchor = match (1..n).find(|&j| d[0][j] > eps) {
        Some(j) => j,
        None => return Ok(pts), // all points coincide; caught as gathering later
    };
    pts[anchor] = Point::new(d[0][anchor], 0.0);
    let base = d[0][anchor];
    let mut sign_ref: Option<usize> = None;
    for k in 1..n {
        if k == anchor {
            continue;
        }
        let x = (d[0][k] * d[0][k] - d[anchor][k] * d[anchor][k] + base * base) / (2.0 * base);
        let y2 = d[0][k] * d[0][k] - x * x;
        let y = y2.max(0.0).sqrt();
        if y <= eps {
            pts[k] = Point::new(x, 0.0);
            continue;
        }
        match sign_ref {
            None => {
                // Canonical reflection rule: the first off-axis point gets a
                // positive y coordinate.
                pts[k] = Point::new(x, y);
                sign_ref = Some(k);
            }
            Some(r) => {
                let up = Point::new(x, y);
                let down = Point::new(x, -y);
                let err_up = (up.dist(pts[r]) - d[k][r]).abs();
                let err_down = (down.dist(pts[r]) - d[k][r]).abs();
                pts[k] = if err_up <= err_down { up } else { down };
            }
        }
    }
    // Planarity: every pairwise distance of the embedding must reproduce the
    // matrix (this subsumes the four-point flatness conditions).
    for i in 0..n {
        for j in (i + 1)..n {
            if (pts[i].dist(pts[j]) - d[i][j]).abs() > 1e-6 * scale.max(1.0) {
                return Err(ScenarioError::NotPlanar);
            }
        }
    }
    Ok(pts)
}

/// A validated, normalised, runnable scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub robots: Vec<Point>,
    pub pattern: Vec<Point>,
    pub stats: PatternStats,
    pub mode: Mode,
    pub seed: u64,
    pub nu: f64,
    pub max_steps: u64,
    pub quiet_rounds: u64,
    /// Fault injection knobs (defaults = correct algorithm).
    pub fault: PlanOptions,
}

// ---------------------------------------------------------------------------
// local frames

/// A robot's private coordinate frame for one activation: translation to its
/// own position, rotation, uniform scale and an optional reflection.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub origin: Point,
    pub angle: f64,
    pub scale: f64,
    pub reflect: bool,
}

impl Frame {
    /// The identity frame anchored at `origin`.
    pub fn identity(origin: Point) -> Frame {
        Frame {
            origin,
            angle: 0.0,
            scale: 1.0,
            reflect: false,
        }
    }

    /// A random frame: angle uniform, scale log-uniform in [0.5, 2],
    /// reflection with probability one half.
    pub fn random<R: Rng>(rng: &mut R, origin: Point) -> Frame {
        let angle = rng.gen_range(0.0..2.0 * PI);
        let scale = (rng.gen_range((0.5f64).ln()..=(2.0f64).ln())).exp();
        let reflect = rng.gen_bool(0.5);
        Frame {
            origin,
            angle,
            scale,
            reflect,
        }
    }

    pub fn to_local(&self, p: Point) -> Point {
        let d = p.sub(self.origin).rotate(self.angle).scale(self.scale);
        if self.reflect {
            Point::new(d.x, -d.y)
        } else {
            d
        }
    }

    pub fn to_world(&self, q: Point) -> Point {
        let q = if self.reflect {
            Point::new(q.x, -q.y)
        } else {
            q
        };
        q.scale(1.0 / self.scale).rotate(-self.angle).add(self.origin)
    }

    /// Map a path computed in this frame back to world coordinates, pinning
    /// its start point exactly to `start` (the mover's true position).
    pub fn path_to_world(&self, path: &Path, start: Point) -> Path {
        let seg = match path.segs.first() {
            Some(s) => s,
            None => return Path::line(start, start),
        };
        match seg {
            PathSeg::Line { to, .. } => Path::line(start, self.to_world(*to)),
            PathSeg::Arc { circle, sweep, .. } => {
                let center = self.to_world(circle.center);
                let radius = circle.radius / self.scale;
                let sweep = if self.reflect { -sweep } else { *sweep };
                Path::arc(Circle::new(center, radius), start, sweep)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// trace records

/// One serialized path segment of a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegRecord {
    Line {
        from: [f64; 2],
        to: [f64; 2],
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start: [f64; 2],
        sweep: f64,
    },
}

fn xy(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

fn seg_records(path: &Path) -> Vec<SegRecord> {
    path.segs
        .iter()
        .map(|seg| match seg {
            PathSeg::Line { from, to } => SegRecord::Line {
                from: xy(*from),
                to: xy(*to),
            },
            PathSeg::Arc { circle, start, sweep } => SegRecord::Arc {
                center: xy(circle.center),
                radius: circle.radius,
                start: xy(circle.point_at(*start)),
                sweep: *sweep,
            },
        })
        .collect()
}

/// A computed command as recorded in the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandRecord {
    /// Rule label ("m1".."m24", "tri-a".."tri-g") or "none" for null moves.
    #[serde(rename = "moveId")]
    pub move_id: String,
    /// Every robot the rule designates on this snapshot.
    pub movers: Vec<usize>,
    /// The activated robot's own trajectory, absent on null moves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<SegRecord>>,
}

/// One trace line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub robot: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preds: Option<BTreeMap<String, bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<[f64; 2]>,
}

/// First line of a trace: run parameters and normalized inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub nu: f64,
    #[serde(rename = "maxSteps")]
    pub max_steps: u64,
    #[serde(rename = "quietRounds")]
    pub quiet_rounds: u64,
    pub robots: Vec<[f64; 2]>,
    pub pattern: Vec<[f64; 2]>,
}

/// Last line of a trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFooter {
    pub outcome: Outcome,
    pub steps: u64,
    /// Compressed sequence of stationary (phase, sub) labels.
    pub transitions: Vec<String>,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Outcome {
    Formed,
    LimitExceeded,
    Violation,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Formed => "formed",
            Outcome::LimitExceeded => "limitExceeded",
            Outcome::Violation => "violation",
        };
        f.write_str(s)
    }
}

/// FNV-1a hash of the position multiset, order-independent.
pub fn digest(points: &[Point]) -> String {
    let mut sorted: Vec<Point> = points.to_vec();
    sorted.sort_by(|a, b| a.canonical_cmp(*b));
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in &sorted {
        for v in [p.x, p.y] {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x1_0000_0000_01b3);
            }
        }
    }
    format!("{h:016x}")
}

// ---------------------------------------------------------------------------
// the scheduler

#[derive(Debug, Clone)]
enum Cycle {
    Idle,
    /// Snapshot taken; the compute may run on it later (obsolete data).
    Looked { snapshot: Vec<Point> },
    /// Command computed; `None` is a null move (the robot is stationary).
    Computed { path: Option<Path> },
    Moving { path: Path, traveled: f64 },
}

struct RobotState {
    pos: Point,
    cycle: Cycle,
    last_active: u64,
}

impl RobotState {
    fn stationary(&self, current: &[Point]) -> bool {
        match &self.cycle {
            Cycle::Idle => true,
            Cycle::Computed { path } => path.is_none(),
            Cycle::Looked { snapshot } => {
                snapshot.len() == current.len()
                    && snapshot.iter().zip(current).all(|(a, b)| a.approx_eq(*b))
            }
            Cycle::Moving { .. } => false,
        }
    }
}

/// Result of a simulation: the trace lines plus the headline numbers.
#[derive(Debug)]
pub struct SimResult {
    pub outcome: Outcome,
    pub steps: u64,
    pub lines: Vec<String>,
    pub transitions: Vec<String>,
    pub final_positions: Vec<Point>,
}

impl SimResult {
    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

struct Sim<'a> {
    p: &'a Prepared,
    rng: ChaCha8Rng,
    states: Vec<RobotState>,
    step: u64,
    lines: Vec<String>,
    transitions: Vec<String>,
    /// Per-robot count of null computes since the formed configuration was
    /// first observed stationary.
    quiet: Option<Vec<u64>>,
}

impl<'a> Sim<'a> {
    fn new(p: &'a Prepared) -> Sim<'a> {
        let states = p
            .robots
            .iter()
            .map(|&pos| RobotState {
                pos,
                cycle: Cycle::Idle,
                last_active: 0,
            })
            .collect();
        Sim {
            p,
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            states,
            step: 0,
            lines: Vec::new(),
            transitions: Vec::new(),
            quiet: None,
        }
    }

    fn positions(&self) -> Vec<Point> {
        self.states.iter().map(|s| s.pos).collect()
    }

    fn all_stationary(&self) -> bool {
        let current = self.positions();
        self.states.iter().all(|s| s.stationary(&current))
    }

    fn emit<T: Serialize>(&mut self, value: &T) {
        self.lines
            .push(serde_json::to_string(value).expect("trace line serializes"));
    }

    fn record_transition(&mut self, phase: &str, sub: Option<&str>) {
        let label = match sub {
            Some(s) => format!("{phase}/{s}"),
            None => phase.to_string(),
        };
        if self.transitions.last().map(String::as_str) != Some(label.as_str()) {
            self.transitions.push(label);
        }
    }

    /// Grant a Look: snapshot the current world (possibly with robots in
    /// transit) and classify it for the trace.
    fn do_look(&mut self, i: usize) {
        let positions = self.positions();
        let stationary = self.all_stationary();
        let (phase, sub, preds) = if self.p.robots.len() == 3 {
            let formed = similar(&positions, &self.p.pattern);
            let label = if formed { "formed" } else { "tri" };
            (Some(label.to_string()), None, None)
        } else {
            let analysis = Analysis::new(&positions, &self.p.pattern, &self.p.stats);
            let class = analysis.classify();
            let mut preds: BTreeMap<String, bool> = BTreeMap::new();
            for m in &class.matches {
                preds.insert(m.label().to_string(), true);
            }
            (
                Some(class.phase.label().to_string()),
                class.sub.map(|s| s.label().to_string()),
                if stationary { Some(preds) } else { None },
            )
        };
        if stationary {
            if let Some(ref ph) = phase {
                let sub_ref = sub.as_deref();
                self.record_transition(ph, sub_ref);
            }
        }
        let event = TraceEvent {
            step: self.step,
            robot: i,
            kind: "look".into(),
            digest: Some(digest(&positions)),
            stationary: Some(stationary),
            phase,
            sub,
            preds,
            positions: Some(positions.iter().map(|&p| xy(p)).collect()),
            command: None,
            pos: None,
        };
        self.emit(&event);
        self.states[i].cycle = Cycle::Looked {
            snapshot: positions,
        };
    }

    /// Run the Compute on the stored snapshot, in a fresh random local
    /// frame, and map the command back to world coordinates.
    fn do_compute(&mut self, i: usize) {
        let snapshot = match &self.states[i].cycle {
            Cycle::Looked { snapshot } => snapshot.clone(),
            _ => return,
        };
        let frame = Frame::random(&mut self.rng, self.states[i].pos);
        let local: Vec<Point> = snapshot.iter().map(|&p| frame.to_local(p)).collect();
        let plan = moves::plan_with_options(&local, &self.p.pattern, &self.p.stats, self.p.fault);
        let world_path = plan
            .action_for(i)
            .map(|act| frame.path_to_world(&act.path, self.states[i].pos))
            .filter(|path| path.length() > 1e-12);
        let record = CommandRecord {
            move_id: plan
                .rule
                .map(|r| r.label().to_string())
                .unwrap_or_else(|| "none".into()),
            movers: plan.actions.iter().map(|a| a.robot).collect(),
            path: world_path.as_ref().map(seg_records),
        };
        let event = TraceEvent {
            step: self.step,
            robot: i,
            kind: "computeStart".into(),
            digest: None,
            stationary: None,
            phase: None,
            sub: None,
            preds: None,
            positions: None,
            command: Some(record),
            pos: None,
        };
        self.emit(&event);
        if world_path.is_none() {
            if let Some(quiet) = &mut self.quiet {
                quiet[i] += 1;
            }
        } else {
            self.quiet = None;
        }
        self.states[i].cycle = Cycle::Computed { path: world_path };
    }

    /// Begin or finish a committed move.
    fn do_move_stage(&mut self, i: usize, complete: bool) {
        let path = match &self.states[i].cycle {
            Cycle::Computed { path } => path.clone(),
            _ => return,
        };
        match path {
            None => {
                self.states[i].cycle = Cycle::Idle;
            }
            Some(path) => {
                let event = TraceEvent {
                    step: self.step,
                    robot: i,
                    kind: "moveStart".into(),
                    digest: None,
                    stationary: None,
                    phase: None,
                    sub: None,
                    preds: None,
                    positions: None,
                    command: None,
                    pos: Some(xy(self.states[i].pos)),
                };
                self.emit(&event);
                self.states[i].cycle = Cycle::Moving { path, traveled: 0.0 };
                if complete {
                    self.advance_move(i, true);
                }
            }
        }
    }

    /// Advance a mover: by a stop fraction at least `nu` of the remaining
    /// distance (with an absolute floor of `nu`), or to the end.
    fn advance_move(&mut self, i: usize, to_completion: bool) {
        let (path, traveled) = match &self.states[i].cycle {
            Cycle::Moving { path, traveled } => (path.clone(), *traveled),
            _ => return,
        };
        let total = path.length();
        let remaining = total - traveled;
        let nu = self.p.nu;
        let advance = if to_completion {
            remaining
        } else {
            let u: f64 = self.rng.gen_range(0.0f64..=1.0).max(nu);
            (u * remaining).max(remaining.min(nu))
        };
        let new_traveled = traveled + advance;
        if new_traveled >= total - 1e-12 {
            let mut landing = path.end_point();
            // Merge-only snapping: a completed move landing within the merge
            // tolerance of another robot joins it exactly.
            for (j, other) in self.states.iter().enumerate() {
                if j != i && other.pos.dist(landing) <= MERGE_EPS {
                    landing = other.pos;
                    break;
                }
            }
            self.states[i].pos = landing;
            self.states[i].cycle = Cycle::Idle;
            let event = TraceEvent {
                step: self.step,
                robot: i,
                kind: "moveEnd".into(),
                digest: None,
                stationary: None,
                phase: None,
                sub: None,
                preds: None,
                positions: None,
                command: None,
                pos: Some(xy(landing)),
            };
            self.emit(&event);
        } else {
            self.states[i].pos = path.point_at(new_traveled / total);
            self.states[i].cycle = Cycle::Moving {
                path,
                traveled: new_traveled,
            };
            let event = TraceEvent {
                step: self.step,
                robot: i,
                kind: "moveProgress".into(),
                digest: None,
                stationary: None,
                phase: None,
                sub: None,
                preds: None,
                positions: None,
                command: None,
                pos: Some(xy(self.states[i].pos)),
            };
            self.emit(&event);
        }
    }

    /// One micro-step of the asynchronous adversary: pick a robot fairly and
    /// advance its cycle one stage.
    fn async_step(&mut self) {
        let n = self.states.len();
        let window = 4 * n as u64;
        let i = {
            let forced: Option<usize> = (0..n)
                .filter(|&j| self.step.saturating_sub(self.states[j].last_active) >= window)
                .min_by_key(|&j| self.states[j].last_active);
            match forced {
                Some(j) => j,
                None => {
                    if self.rng.gen_bool(0.5) {
                        self.rng.gen_range(0..n)
                    } else {
                        (0..n)
                            .min_by_key(|&j| (self.states[j].last_active, j))
                            .unwrap()
                    }
                }
            }
        };
        self.states[i].last_active = self.step;
        match &self.states[i].cycle {
            Cycle::Idle => self.do_look(i),
            Cycle::Looked { .. } => self.do_compute(i),
            Cycle::Computed { .. } => self.do_move_stage(i, false),
            Cycle::Moving { .. } => self.advance_move(i, false),
        }
    }

    /// One synchronous round: the chosen robots look at the same snapshot,
    /// compute, and move to completion.
    fn sync_round(&mut self, chosen: &[usize]) {
        for &i in chosen {
            self.states[i].last_active = self.step;
            self.do_look(i);
            self.step += 1;
        }
        for &i in chosen {
            self.do_compute(i);
            self.step += 1;
        }
        for &i in chosen {
            self.do_move_stage(i, true);
            self.step += 1;
        }
    }

    fn formed_now(&self) -> bool {
        self.all_stationary() && similar(&self.positions(), &self.p.pattern)
    }

    fn run(mut self) -> SimResult {
        let n = self.states.len();
        let header = TraceHeader {
            version: 1,
            n,
            mode: self.p.mode,
            seed: self.p.seed,
            nu: self.p.nu,
            max_steps: self.p.max_steps,
            quiet_rounds: self.p.quiet_rounds,
            robots: self.p.robots.iter().map(|&p| xy(p)).collect(),
            pattern: self.p.pattern.iter().map(|&p| xy(p)).collect(),
        };
        self.emit(&header);

        let outcome = loop {
            // Termination: the formed configuration has stayed quiet for the
            // configured number of full rounds.
            if self.formed_now() {
                match &self.quiet {
                    None => self.quiet = Some(vec![0; n]),
                    Some(counts) => {
                        if counts.iter().all(|&c| c >= self.p.quiet_rounds) {
                            break Outcome::Formed;
                        }
                    }
                }
            } else if self.quiet.is_some() && self.all_stationary() {
                // Stationary but not similar: formed detection was premature.
                self.quiet = None;
            }
            if self.step >= self.p.max_steps {
                break Outcome::LimitExceeded;
            }
            match self.p.mode {
                Mode::Async => {
                    self.async_step();
                    self.step += 1;
                }
                Mode::Fsync => {
                    let all: Vec<usize> = (0..n).collect();
                    self.sync_round(&all);
                }
                Mode::Ssync => {
                    let mut chosen: Vec<usize> = (0..n)
                        .filter(|_| self.rng.gen_bool(0.5))
                        .collect();
                    // Fairness: starving robots are forced into the round.
                    let window = 4 * n as u64;
                    for j in 0..n {
                        if self.step.saturating_sub(self.states[j].last_active) >= window
                            && !chosen.contains(&j)
                        {
                            chosen.push(j);
                        }
                    }
                    if chosen.is_empty() {
                        chosen.push(self.rng.gen_range(0..n));
                    }
                    chosen.sort_unstable();
                    self.sync_round(&chosen);
                }
            }
        };

        let footer = TraceFooter {
            outcome,
            steps: self.step,
            transitions: self.transitions.clone(),
        };
        self.emit(&footer);
        let final_positions = self.positions();
        SimResult {
            outcome,
            steps: self.step,
            lines: self.lines,
            transitions: self.transitions,
            final_positions,
        }
    }
}

/// Run a prepared scenario to completion or to its step limit.
pub fn run(prepared: &Prepared) -> SimResult {
    Sim::new(prepared).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_scenario() -> Scenario {
        Scenario {
            robots: vec![[0.0, 0.0], [4.0, 0.1], [1.0, 2.0]],
            pattern: Some(vec![[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]),
            adversary: AdversaryConfig::default(),
            limits: Limits::default(),
            pattern_distances: None,
        }
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = triangle_scenario();
        s.robots = vec![[0.0, 0.0], [1.0, 0.0]];
        s.pattern = Some(vec![[0.0, 0.0], [1.0, 0.0]]);
        assert!(matches!(s.prepare(), Err(ScenarioError::Unsolvable(2))));

        let mut s = triangle_scenario();
        s.pattern = Some(vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(s.prepare(), Err(ScenarioError::GatheringDelegated)));

        let mut s = triangle_scenario();
        s.robots[1] = s.robots[0];
        assert!(matches!(
            s.prepare(),
            Err(ScenarioError::InitialMultiplicity)
        ));

        let mut s = triangle_scenario();
        s.pattern = Some(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        assert!(matches!(s.prepare(), Err(ScenarioError::SizeMismatch { .. })));
    }

    #[test]
    fn distance_matrix_roundtrip() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(1.0, 2.5),
            Point::new(-1.0, 1.0),
            Point::new(2.0, -1.5),
        ];
        let d: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| a.dist(*b)).collect())
            .collect();
        let rec = pattern_from_distances(&d).expect("embeddable");
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert!((rec[i].dist(rec[j]) - d[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distance_matrix_rejects_non_planar() {
        // Distances of a regular tetrahedron cannot be realized in the
        // plane.
        let d = vec![
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
        ];
        assert!(matches!(
            pattern_from_distances(&d),
            Err(ScenarioError::NotPlanar)
        ));
    }

    #[test]
    fn three_robots_form_under_every_mode() {
        for mode in [Mode::Fsync, Mode::Ssync, Mode::Async] {
            let mut s = triangle_scenario();
            s.adversary.mode = mode;
            s.adversary.seed = 7;
            let prepared = s.prepare().expect("valid");
            let result = run(&prepared);
            assert_eq!(result.outcome, Outcome::Formed, "mode {mode}");
            assert!(similar(&result.final_positions, &prepared.pattern));
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let mut s = triangle_scenario();
        s.adversary.seed = 99;
        let prepared = s.prepare().expect("valid");
        let a = run(&prepared).trace_text();
        let b = run(&prepared).trace_text();
        assert_eq!(a, b);
        let mut s2 = triangle_scenario();
        s2.adversary.seed = 100;
        let c = run(&s2.prepare().expect("valid")).trace_text();
        assert_ne!(a, c, "different seeds should differ");
    }

    #[test]
    fn frame_roundtrip_preserves_commands() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let origin = Point::new(0.3, -0.2);
        for _ in 0..50 {
            let frame = Frame::random(&mut rng, origin);
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let q = frame.to_world(frame.to_local(p));
            assert!(p.dist(q) < 1e-12);
        }
    }
}
