//! Nonlocal correlations and nonlocal dynamics that respect relativistic
//! causality.
//!
//! * [`spacetime`]: Minkowski events, intervals, boosts, light cones and
//!   frame-dependent time orderings.
//! * [`correlations`]: no-signalling boxes, correlation models `E(θ)`, the
//!   CHSH functional, its optimization and finite-sample estimation.
//! * [`jamming`]: the unary and binary jamming conditions, the latest
//!   admissible jammer time, the jam transform and causal-loop detection.

// Probability tables are indexed by setting and outcome labels.
#![allow(clippy::needless_range_loop)]

pub mod correlations;
pub mod jamming;
pub mod spacetime;

pub use correlations::{
    box_from_correlation, builtin_box, builtin_boxes, check_no_signalling, chsh, chsh_at_angles,
    enumerate_deterministic, eval_correlation, maximize_chsh, maximize_chsh_with, sample_outcomes,
    ChshAngles, ChshOptimum, ChshResult, CorrelationError, CorrelationModel, CorrelationTable,
    DeterministicStrategy, Interpolant, NoSignallingBox, NoSignallingReport, OptimizerSettings,
    SampleReport, DEFAULT_PROBABILITY_TOL,
};
pub use jamming::{
    apply_jamming, apply_partial_jamming, binary_condition, check_unary, detect_causal_loops,
    latest_jammer_time, validate_configuration, BinaryVerdict, ConfigurationVerdict, JamScenario,
    JammingConfiguration, JammingError, LatestJammerTime, LoopVerdict, UnaryVerdict,
};
pub use spacetime::{
    achievable_orderings, boost, canonicalize_pair, in_future_cone, interval, interval_with_tol,
    Boost, CanonicalFrame, ConeMembership, Event, Interval, IntervalKind, LightCone,
    OrderingWitness, SpacetimeError, VelocityGrid, DEFAULT_GEOMETRIC_TOL,
};
