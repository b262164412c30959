//! Deterministic simulator and verification harness for an asynchronous
//! arbitrary-pattern-formation algorithm executed by oblivious, anonymous,
//! disoriented point robots.
//!
//! The crate is organised in layers:
//!
//! * [`geom`] — tolerance-aware planar primitives: points, circles, arcs,
//!   smallest enclosing circles, concentric circle families and the derived
//!   landmark circles used by the robot rules.
//! * [`config`] — configurations as multisets of points: views, symmetry
//!   detection, leader election, orientation and similarity tests.
//! * [`predicates`] — the boolean classification layer: every stationary
//!   snapshot is mapped to exactly one phase and sub-phase.
//! * [`embedding`] — the common reference system induced by the three guard
//!   robots, the robot/target matching and the mover selection.
//! * [`moves`] — the per-rule target computations, including the clamped
//!   ("stationary") targets, the collision-avoiding detour waypoints, the
//!   teleporter routing and the dedicated three-robot algorithm.
//! * [`engine`] — scenario I/O, normalisation, the adversarial scheduler
//!   (fully synchronous, semi-synchronous and asynchronous), snapping and
//!   JSONL trace emission.
//! * [`monitors`] — trace verification: phase uniqueness, transition
//!   legality, safe-move checks and loop-bound audits.
//! * [`svg`] — scenario and trace rendering.
//! * [`corpus`] — seeded scenario generators used by the CLI and the
//!   acceptance suite.

pub mod config;
pub mod corpus;
pub mod embedding;
pub mod engine;
pub mod geom;
pub mod monitors;
pub mod moves;
pub mod predicates;
pub mod svg;
