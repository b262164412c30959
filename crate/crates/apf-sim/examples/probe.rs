use apf_sim::engine::{run, AdversaryConfig, Frame, Limits, Mode, Scenario, TraceEvent};
use apf_sim::geom::Point;
use apf_sim::moves;
use rand::SeedableRng;
use std::f64::consts::TAU;

fn main() {
    let angles = [0.0, 0.2, 0.4, 0.55, 0.8];
    let mut robots: Vec<[f64; 2]> = angles
        .iter()
        .map(|f| [(f * TAU).cos(), (f * TAU).sin()])
        .collect();
    robots.push([0.07, 0.07]);
    let scenario = Scenario {
        robots,
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
            seed: 23,
            nu: apf_sim::engine::DEFAULT_NU,
        },
        limits: Limits::default(),
    };
    let prepared = scenario.prepare().expect("valid scenario");
    let result = run(&prepared);
    // find robot 0's look snapshot right before its computeStart at step 119
    let mut snapshot: Option<Vec<Point>> = None;
    let mut looked: Vec<Option<Vec<Point>>> = vec![None; 6];
    for line in &result.lines[1..result.lines.len() - 1] {
        let ev: TraceEvent = serde_json::from_str(line).unwrap();
        if ev.kind == "look" {
            looked[ev.robot] = ev
                .positions
                .as_ref()
                .map(|ps| ps.iter().map(|&[x, y]| Point::new(x, y)).collect());
        }
        if ev.kind == "computeStart" && ev.step == 119 {
            snapshot = looked[ev.robot].clone();
            println!("step 119 robot {} recorded movers {:?}", ev.robot, ev.command.as_ref().unwrap().movers);
            break;
        }
    }
    let snap = snapshot.expect("snapshot found");
    for (i, p) in snap.iter().enumerate() {
        println!("  s{i}: ({:.6},{:.6}) |r|={:.6}", p.x, p.y, p.norm());
    }
    let world = moves::plan(&snap, &prepared.pattern, &prepared.stats);
    println!("world plan: rule {:?} movers {:?}", world.rule, world.actions.iter().map(|a| a.robot).collect::<Vec<_>>());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for k in 0..16 {
        let frame = Frame::random(&mut rng, snap[0]);
        let local: Vec<Point> = snap.iter().map(|&p| frame.to_local(p)).collect();
        let plan = moves::plan(&local, &prepared.pattern, &prepared.stats);
        println!(
            "frame {k}: reflect={} movers {:?} rule {:?}",
            frame.reflect,
            plan.actions.iter().map(|a| a.robot).collect::<Vec<_>>(),
            plan.rule
        );
    }
}
