//! Seeded scenario generation: classes of initial configurations crossed
//! with classes of patterns, for the CLI and the acceptance suite. Every
//! generated scenario is validated (leader configuration, no initial
//! multiplicities, well-separated circle radii) before being returned.

use crate::config::{is_leader_configuration, symmetry_info};
use crate::embedding::PatternStats;
use crate::engine::{AdversaryConfig, Limits, Mode, Scenario};
use crate::geom::Point;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Shape classes of initial configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialClass {
    /// No symmetry at all.
    Asymmetric,
    /// Exactly one reflection axis, with a robot on it.
    SingleAxis,
    /// Rotational symmetry with a single robot on the center.
    RotationalCenter,
}

impl InitialClass {
    pub const ALL: [InitialClass; 3] = [
        InitialClass::Asymmetric,
        InitialClass::SingleAxis,
        InitialClass::RotationalCenter,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InitialClass::Asymmetric => "asym",
            InitialClass::SingleAxis => "axis",
            InitialClass::RotationalCenter => "rotc",
        }
    }
}

/// Shape classes of patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternClass {
    /// Random distinct points, no symmetry.
    Generic,
    /// A symmetric pattern (regular outer ring).
    Symmetric,
    /// A repeated point away from the center.
    Multiplicity,
    /// Several pattern points on the center of the pattern's own circle.
    CenterMultiplicity,
    /// Thin crown: all points on the circle with a gap wider than a
    /// half-turn, which triggers the dedicated finalization cases.
    QTrue,
}

impl PatternClass {
    pub const ALL: [PatternClass; 5] = [
        PatternClass::Generic,
        PatternClass::Symmetric,
        PatternClass::Multiplicity,
        PatternClass::CenterMultiplicity,
        PatternClass::QTrue,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PatternClass::Generic => "generic",
            PatternClass::Symmetric => "symmetric",
            PatternClass::Multiplicity => "mult",
            PatternClass::CenterMultiplicity => "centermult",
            PatternClass::QTrue => "crown",
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, rmin: f64, rmax: f64) -> Point {
    let r = rng.gen_range(rmin..rmax);
    let a = rng.gen_range(0.0..2.0 * PI);
    Point::new(r * a.cos(), r * a.sin())
}

fn well_separated(points: &[Point], min_dist: f64) -> bool {
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].dist(points[j]) < min_dist {
                return false;
            }
        }
    }
    true
}

/// Draw one initial configuration of the requested class. Candidates are
/// resampled until they are valid leader configurations of the right shape.
pub fn initial_points(n: usize, class: InitialClass, rng: &mut ChaCha8Rng) -> Vec<Point> {
    assert!(n >= 3);
    loop {
        let pts = match class {
            InitialClass::Asymmetric => {
                let mut pts: Vec<Point> = (0..n).map(|_| random_point(rng, 0.05, 1.0)).collect();
                // Pin two robots to a diameter so the enclosing circle is
                // stable across candidates.
                pts[0] = Point::new(1.0, 0.0);
                pts[1] = Point::new(-1.0, rng.gen_range(-0.2..0.2));
                pts
            }
            InitialClass::SingleAxis => {
                let mut pts = Vec::with_capacity(n);
                let pairs = (n - 1) / 2;
                for _ in 0..pairs {
                    let p = random_point(rng, 0.15, 1.0);
                    let p = Point::new(p.x.abs().max(0.05), p.y);
                    pts.push(p);
                    pts.push(Point::new(-p.x, p.y));
                }
                // One robot on the axis (two if n is even).
                pts.push(Point::new(0.0, rng.gen_range(-0.9..0.9)));
                if pts.len() < n {
                    pts.push(Point::new(0.0, rng.gen_range(-0.9..0.9)));
                }
                pts
            }
            InitialClass::RotationalCenter => {
                // One robot on the center plus full orbits of order k, where
                // k is the smallest divisor of n-1 (n-1 itself when prime),
                // so every orbit is complete and the rotation is exact.
                let rest = n - 1;
                let k = (2..=rest).find(|d| rest % d == 0).unwrap_or(rest);
                let orbits = rest / k;
                let mut pts = vec![Point::ORIGIN];
                for _ in 0..orbits {
                    let base = random_point(rng, 0.2, 1.0);
                    for j in 0..k {
                        pts.push(base.rotate(2.0 * PI * j as f64 / k as f64));
                    }
                }
                pts
            }
        };
        if pts.len() != n || !well_separated(&pts, 0.02) {
            continue;
        }
        let sec = crate::geom::smallest_enclosing_circle(&pts);
        let sym = symmetry_info(&pts, sec.center);
        let shape_ok = match class {
            InitialClass::Asymmetric => !sym.is_symmetric(),
            InitialClass::SingleAxis => {
                sym.reflection_axes.len() == 1
                    && !sym.has_rotation
                    && pts
                        .iter()
                        .any(|p| sym.reflection_axes[0].contains(*p))
            }
            InitialClass::RotationalCenter => {
                sym.has_rotation && pts.iter().any(|p| p.approx_eq(Point::ORIGIN))
            }
        };
        if shape_ok && is_leader_configuration(&pts) {
            return pts;
        }
    }
}

/// Draw one pattern of the requested class.
pub fn pattern_points(n: usize, class: PatternClass, rng: &mut ChaCha8Rng) -> Vec<Point> {
    assert!(n >= 3);
    loop {
        let pts: Vec<Point> = match class {
            PatternClass::Generic => {
                let mut pts: Vec<Point> = (0..n).map(|_| random_point(rng, 0.1, 1.0)).collect();
                pts[0] = Point::new(1.0, 0.0);
                pts[1] = Point::new(-1.0, rng.gen_range(-0.2..0.2));
                pts
            }
            PatternClass::Symmetric => {
                // A regular outer ring plus interior points on one of its
                // axes keeps a clean reflection symmetry.
                let ring = (n + 1) / 2 + 1;
                let mut pts: Vec<Point> = (0..ring)
                    .map(|i| Point::new(0.0, 1.0).rotate(2.0 * PI * i as f64 / ring as f64))
                    .collect();
                let mut rho = 0.55;
                while pts.len() < n {
                    pts.push(Point::new(0.0, rho));
                    rho -= 0.17;
                }
                pts
            }
            PatternClass::Multiplicity => {
                let mut pts: Vec<Point> = (0..n - 1).map(|_| random_point(rng, 0.1, 1.0)).collect();
                pts[0] = Point::new(1.0, 0.0);
                pts[1] = Point::new(-1.0, rng.gen_range(-0.2..0.2));
                // Double one interior point.
                let dup = pts[n - 2];
                pts.push(dup);
                pts
            }
            PatternClass::CenterMultiplicity => {
                // Needs at least two boundary points and two center copies:
                // the boundary ring must keep the circle centered on the
                // stacked points, so a ring of two is exactly antipodal and
                // larger rings only get a jitter small enough to keep every
                // angular gap under a half turn.
                assert!(n >= 4, "center multiplicity patterns need n >= 4");
                let ring = n - 2;
                let offset = rng.gen_range(0.0..2.0 * PI);
                let mut pts: Vec<Point> = (0..ring)
                    .map(|i| {
                        let jitter = if ring >= 3 {
                            rng.gen_range(-0.05..0.05)
                        } else {
                            0.0
                        };
                        let a = offset + 2.0 * PI * i as f64 / ring as f64 + jitter;
                        Point::new(a.cos(), a.sin())
                    })
                    .collect();
                pts.push(Point::ORIGIN);
                pts.push(Point::ORIGIN);
                pts
            }
            PatternClass::QTrue => {
                // All points on the circle. The canonical first boundary
                // point is the one leading into the globally tightest gap, so
                // give one point a tight gap on one side and a near-half-turn
                // gap on the other: the two gaps flanking it then sum past a
                // half turn while every single gap stays under one, keeping
                // all points on the enclosing circle.
                let m_hi = 0.16_f64.min(0.8 * PI / (1.125 * n as f64));
                let m = rng.gen_range(0.6 * m_hi..m_hi);
                let mu = m / 8.0;
                let g_big = rng.gen_range((PI - m + 2.0 * mu)..(PI - 2.0 * mu));
                let rest_sum = 2.0 * PI - m - g_big;
                let extra = rest_sum - (n - 2) as f64 * (m + mu);
                debug_assert!(extra > 0.0);
                let weights: Vec<f64> = (0..n - 2).map(|_| rng.gen_range(0.2..1.0)).collect();
                let wsum: f64 = weights.iter().sum();
                let mut a = rng.gen_range(0.0..2.0 * PI);
                let mut pts = Vec::with_capacity(n);
                pts.push(Point::new(a.cos(), a.sin()));
                a += m;
                pts.push(Point::new(a.cos(), a.sin()));
                for w in &weights {
                    a += (m + mu) + extra * w / wsum;
                    pts.push(Point::new(a.cos(), a.sin()));
                }
                pts
            }
        };
        if pts.len() != n {
            continue;
        }
        let distinct: Vec<Point> = {
            let mut d: Vec<Point> = Vec::new();
            for &p in &pts {
                if !d.iter().any(|q| q.approx_eq(p)) {
                    d.push(p);
                }
            }
            d
        };
        if distinct.len() < 2 {
            continue;
        }
        let expect_mult = matches!(
            class,
            PatternClass::Multiplicity | PatternClass::CenterMultiplicity
        );
        if expect_mult && distinct.len() == pts.len() {
            continue;
        }
        if class == PatternClass::CenterMultiplicity && PatternStats::new(&pts).center_count < 2 {
            continue;
        }
        if class == PatternClass::QTrue && !PatternStats::new(&pts).crown {
            continue;
        }
        return pts;
    }
}

/// A named, validated scenario.
#[derive(Debug, Clone)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: Scenario,
}

/// Build one validated scenario of the given classes; the candidate is
/// resampled until `prepare` accepts it.
pub fn build_scenario(
    n: usize,
    initial: InitialClass,
    pattern: PatternClass,
    mode: Mode,
    nu: f64,
    seed: u64,
) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    loop {
        let robots = initial_points(n, initial, &mut rng);
        let pts = pattern_points(n, pattern, &mut rng);
        let scenario = Scenario {
            robots: robots.iter().map(|p| [p.x, p.y]).collect(),
            pattern: Some(pts.iter().map(|p| [p.x, p.y]).collect()),
            pattern_distances: None,
            adversary: AdversaryConfig { mode, seed, nu },
            limits: Limits::default(),
        };
        if scenario.prepare().is_ok() {
            return scenario;
        }
    }
}

/// The axis-trap scenario: a regular polygon with its apex removed plus a
/// lone robot on the axis beyond the gap. The straight path from the axis
/// robot to the center of the others passes the point completing the
/// rotational symmetry, so the robot must slide instead of walking in.
pub fn axis_trap_scenario(n: usize, seed: u64) -> Scenario {
    assert!(n >= 5 && n % 2 == 1, "the trap construction needs odd n >= 5");
    let mut robots: Vec<Point> = Vec::with_capacity(n);
    for k in 1..n {
        let a = PI / 2.0 + 2.0 * PI * k as f64 / n as f64;
        robots.push(Point::new(a.cos(), a.sin()));
    }
    robots.push(Point::new(0.0, 1.35));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = pattern_points(n, PatternClass::Generic, &mut rng);
    Scenario {
        robots: robots.iter().map(|p| [p.x, p.y]).collect(),
        pattern: Some(pattern.iter().map(|p| [p.x, p.y]).collect()),
        pattern_distances: None,
        adversary: AdversaryConfig {
            mode: Mode::Async,
            seed,
            nu: crate::engine::DEFAULT_NU,
        },
        limits: Limits::default(),
    }
}

/// Generate `count` scenarios for each requested size, cycling through the
/// class grid deterministically.
pub fn corpus(sizes: &[usize], count: usize, seed: u64, mode: Mode) -> Vec<NamedScenario> {
    let mut out = Vec::new();
    for &n in sizes {
        for k in 0..count {
            let initial = InitialClass::ALL[k % InitialClass::ALL.len()];
            let pattern = PatternClass::ALL[(k / InitialClass::ALL.len()) % PatternClass::ALL.len()];
            let scn_seed = seed
                .wrapping_mul(0x100001b3)
                .wrapping_add((n as u64) << 32)
                .wrapping_add(k as u64);
            let scenario = build_scenario(n, initial, pattern, mode, crate::engine::DEFAULT_NU, scn_seed);
            out.push(NamedScenario {
                name: format!(
                    "n{n:02}-{}-{}-{k:03}.json",
                    initial.label(),
                    pattern.label()
                ),
                scenario,
            });
        }
        // One axis-trap scenario per odd size.
        if n >= 5 && n % 2 == 1 {
            out.push(NamedScenario {
                name: format!("n{n:02}-axistrap.json"),
                scenario: axis_trap_scenario(n, seed.wrapping_add(n as u64)),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_produce_valid_scenarios() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &class in &InitialClass::ALL {
            for n in [4usize, 5, 7] {
                let pts = initial_points(n, class, &mut rng);
                assert_eq!(pts.len(), n);
                assert!(is_leader_configuration(&pts), "{class:?} n={n}");
            }
        }
        for &class in &PatternClass::ALL {
            for n in [4usize, 6, 9] {
                let pts = pattern_points(n, class, &mut rng);
                assert_eq!(pts.len(), n, "{class:?}");
            }
        }
    }

    #[test]
    fn crown_patterns_have_the_wide_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [4usize, 5, 8] {
            let pts = pattern_points(n, PatternClass::QTrue, &mut rng);
            let stats = PatternStats::new(&pts);
            assert!(stats.crown, "n={n}");
        }
    }

    #[test]
    fn axis_trap_blocks_the_straight_descent() {
        let scenario = axis_trap_scenario(5, 1);
        let prepared = scenario.prepare().expect("valid");
        let a = crate::predicates::Analysis::new(
            &prepared.robots,
            &prepared.pattern,
            &prepared.stats,
        );
        let (_, mover) = a.axis_with_one().expect("single axis robot");
        assert!(
            !crate::predicates::has_rotational_free_path(&prepared.robots, mover),
            "the trap point must block the straight path"
        );
    }

    #[test]
    fn corpus_is_deterministic() {
        let a = corpus(&[4, 5], 3, 42, Mode::Async);
        let b = corpus(&[4, 5], 3, 42, Mode::Async);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.scenario.to_json(), y.scenario.to_json());
        }
    }
}
