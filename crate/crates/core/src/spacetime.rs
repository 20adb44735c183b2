//! Minkowski geometry in `d` spatial dimensions.
//!
//! Natural units (`c = 1`) throughout. An [`Event`] is a point `(x⃗; t)`;
//! the squared interval between two events is `s² = Δt² − ‖Δx⃗‖²`, so
//! positive is timelike and negative is spacelike.
//!
//! Light cones are closed: a point on the null surface counts as inside.
//! Classification uses a symmetric band `±tol` around zero.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default classification band for geometric predicates.
pub const DEFAULT_GEOMETRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpacetimeError {
    #[error("dimension mismatch: {left} vs {right} spatial dimensions")]
    DimensionMismatch { left: usize, right: usize },
    #[error("events need at least one spatial dimension")]
    ZeroDimension,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("boost speed {speed} is not below the speed of light")]
    Superluminal { speed: f64 },
    #[error("events {first} and {second} are not spacelike separated (s² = {squared_interval})")]
    NotSpacelike {
        first: usize,
        second: usize,
        squared_interval: f64,
    },
    #[error("invalid velocity grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, SpacetimeError>;

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// A point in `(d+1)`-dimensional Minkowski spacetime.
///
/// Serializes as the JSON array `[x1, ..., xd, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    spatial: Vec<f64>,
    time: f64,
}

impl Event {
    pub fn new(spatial: Vec<f64>, time: f64) -> Result<Self> {
        if spatial.is_empty() {
            return Err(SpacetimeError::ZeroDimension);
        }
        if !time.is_finite() || spatial.iter().any(|x| !x.is_finite()) {
            return Err(SpacetimeError::NonFinite);
        }
        Ok(Self { spatial, time })
    }

    /// The spatial origin at time zero.
    pub fn origin(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], 0.0)
    }

    /// Builds an event from `[x1, ..., xd, t]`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((&t, xs)) => Self::new(xs.to_vec(), t),
            None => Err(SpacetimeError::ZeroDimension),
        }
    }

    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = self.spatial.clone();
        out.push(self.time);
        out
    }

    pub fn dim(&self) -> usize {
        self.spatial.len()
    }

    pub fn spatial(&self) -> &[f64] {
        &self.spatial
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(&self, time: f64) -> Result<Self> {
        Self::new(self.spatial.clone(), time)
    }

    pub(crate) fn check_same_dim(&self, other: &Event) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(SpacetimeError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// `self + other`, component-wise.
    pub fn translate(&self, shift: &Event) -> Result<Event> {
        self.check_same_dim(shift)?;
        let spatial = self
            .spatial
            .iter()
            .zip(&shift.spatial)
            .map(|(a, b)| a + b)
            .collect();
        Event::new(spatial, self.time + shift.time)
    }

    fn minus(&self, other: &Event) -> Event {
        Event {
            spatial: self
                .spatial
                .iter()
                .zip(&other.spatial)
                .map(|(a, b)| a - b)
                .collect(),
            time: self.time - other.time,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.spatial.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "; t={})", self.time)
    }
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_coords().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        if coords.len() < 2 {
            return Err(D::Error::custom(
                "an event needs at least one spatial coordinate and a time",
            ));
        }
        Event::from_coords(&coords).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    Timelike,
    Spacelike,
    Null,
}

/// Causal class of a pair of events together with `s² = Δt² − ‖Δx⃗‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub kind: IntervalKind,
    pub squared: f64,
}

impl Interval {
    pub fn is_spacelike(&self) -> bool {
        self.kind == IntervalKind::Spacelike
    }
}

pub fn interval(e1: &Event, e2: &Event) -> Result<Interval> {
    interval_with_tol(e1, e2, DEFAULT_GEOMETRIC_TOL)
}

pub fn interval_with_tol(e1: &Event, e2: &Event, tol: f64) -> Result<Interval> {
    e1.check_same_dim(e2)?;
    let dt = e2.time - e1.time;
    let dx2: f64 = e1
        .spatial
        .iter()
        .zip(&e2.spatial)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    let squared = dt * dt - dx2;
    let kind = if squared > tol {
        IntervalKind::Timelike
    } else if squared < -tol {
        IntervalKind::Spacelike
    } else {
        IntervalKind::Null
    };
    Ok(Interval { kind, squared })
}

/// A pure Lorentz boost with velocity `v⃗`, `‖v⃗‖ < 1`.
///
/// Serializes as `{"v": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoostRepr", into = "BoostRepr")]
pub struct Boost {
    velocity: Vec<f64>,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct BoostRepr {
    v: Vec<f64>,
}

impl TryFrom<BoostRepr> for Boost {
    type Error = SpacetimeError;

    fn try_from(repr: BoostRepr) -> Result<Self> {
        Boost::new(repr.v)
    }
}

impl From<Boost> for BoostRepr {
    fn from(b: Boost) -> Self {
        BoostRepr { v: b.velocity }
    }
}

impl Boost {
    pub fn new(velocity: Vec<f64>) -> Result<Self> {
        if velocity.is_empty() {
            return Err(SpacetimeError::ZeroDimension);
        }
        if velocity.iter().any(|v| !v.is_finite()) {
            return Err(SpacetimeError::NonFinite);
        }
        let speed2 = dot(&velocity, &velocity);
        if speed2 >= 1.0 {
            return Err(SpacetimeError::Superluminal {
                speed: speed2.sqrt(),
            });
        }
        let gamma = 1.0 / (1.0 - speed2).sqrt();
        Ok(Self { velocity, gamma })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn speed(&self) -> f64 {
        norm(&self.velocity)
    }

    pub fn dim(&self) -> usize {
        self.velocity.len()
    }

    /// The boost with velocity `−v⃗`.
    pub fn inverse(&self) -> Boost {
        Boost {
            velocity: self.velocity.iter().map(|v| -v).collect(),
            gamma: self.gamma,
        }
    }

    /// `t′ = γ(t − v⃗·x⃗)`, `x⃗′ = x⃗ + ((γ−1)(v⃗·x⃗)/v² − γt) v⃗`.
    pub fn apply(&self, e: &Event) -> Result<Event> {
        if e.dim() != self.dim() {
            return Err(SpacetimeError::DimensionMismatch {
                left: e.dim(),
                right: self.dim(),
            });
        }
        let v2 = dot(&self.velocity, &self.velocity);
        if v2 == 0.0 {
            return Ok(e.clone());
        }
        let vx = dot(&self.velocity, &e.spatial);
        let time = self.gamma * (e.time - vx);
        let coef = (self.gamma - 1.0) * vx / v2 - self.gamma * e.time;
        let spatial = e
            .spatial
            .iter()
            .zip(&self.velocity)
            .map(|(x, v)| x + coef * v)
            .collect();
        Event::new(spatial, time)
    }
}

pub fn boost(e: &Event, b: &Boost) -> Result<Event> {
    b.apply(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Future,
    Past,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeMembership {
    Inside,
    Boundary,
    Outside,
}

impl ConeMembership {
    /// Inside or on the boundary (closed cone).
    pub fn is_contained(self) -> bool {
        self != ConeMembership::Outside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightCone {
    pub apex: Event,
    pub orientation: Orientation,
}

impl LightCone {
    pub fn future(apex: Event) -> Self {
        Self {
            apex,
            orientation: Orientation::Future,
        }
    }

    pub fn past(apex: Event) -> Self {
        Self {
            apex,
            orientation: Orientation::Past,
        }
    }

    /// Signed containment slack: `(t − t₀) − ‖x⃗ − x⃗₀‖` for a future cone,
    /// `(t₀ − t) − ‖x⃗ − x⃗₀‖` for a past cone. Non-negative means inside the
    /// closed cone.
    pub fn slack(&self, e: &Event) -> Result<f64> {
        self.apex.check_same_dim(e)?;
        let dt = match self.orientation {
            Orientation::Future => e.time - self.apex.time,
            Orientation::Past => self.apex.time - e.time,
        };
        Ok(dt - distance(&e.spatial, &self.apex.spatial))
    }

    pub fn classify(&self, e: &Event, tol: f64) -> Result<ConeMembership> {
        let s = self.slack(e)?;
        Ok(if s > tol {
            ConeMembership::Inside
        } else if s < -tol {
            ConeMembership::Outside
        } else {
            ConeMembership::Boundary
        })
    }
}

/// Classifies `e` against `cone` (mirrored for past cones).
pub fn in_future_cone(e: &Event, cone: &LightCone, tol: f64) -> Result<ConeMembership> {
    cone.classify(e, tol)
}

/// Householder reflection `I − 2wwᵀ/‖w‖²`, optionally followed by negating
/// the last axis so the composite is a proper rotation when `d ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
struct Orthogonal {
    reflector: Option<Vec<f64>>,
    flip_last: bool,
}

impl Orthogonal {
    /// Maps the unit vector `u` onto `+e₁`.
    fn aligning(u: &[f64]) -> Self {
        let mut w = u.to_vec();
        w[0] = if u[0] > 0.0 {
            // u₀ − 1 without cancellation when u is close to e₁.
            -dot(&u[1..], &u[1..]) / (1.0 + u[0])
        } else {
            u[0] - 1.0
        };
        if norm(&w) < 1e-15 {
            return Self {
                reflector: None,
                flip_last: false,
            };
        }
        Self {
            reflector: Some(w),
            flip_last: u.len() >= 2,
        }
    }

    fn reflect(&self, x: &mut [f64]) {
        if let Some(w) = &self.reflector {
            let coef = 2.0 * dot(w, x) / dot(w, w);
            for (xi, wi) in x.iter_mut().zip(w) {
                *xi -= coef * wi;
            }
        }
    }

    fn apply(&self, x: &mut [f64]) {
        self.reflect(x);
        if self.flip_last {
            if let Some(last) = x.last_mut() {
                *last = -*last;
            }
        }
    }

    fn invert(&self, x: &mut [f64]) {
        if self.flip_last {
            if let Some(last) = x.last_mut() {
                *last = -*last;
            }
        }
        self.reflect(x);
    }

    fn is_identity(&self) -> bool {
        self.reflector.is_none()
    }
}

/// The frame in which a spacelike pair sits at `(∓1, 0⃗; 0)`.
///
/// The map is `e ↦ scale · R · (Λ e − c)`: a boost `Λ` to simultaneity, a
/// translation by the boosted midpoint `c`, an orthogonal map `R` that puts
/// the pair on the positive x-axis, and a positive uniform scaling. Every
/// piece maps light cones to light cones. In one spatial dimension `R` may
/// be the reflection `x ↦ −x`; for `d ≥ 2` it is a proper rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFrame {
    boost: Boost,
    // Midpoint of the pair before boosting; `center` is its boosted image.
    midpoint: Event,
    center: Event,
    orientation: Orthogonal,
    scale: f64,
}

impl CanonicalFrame {
    pub fn boost(&self) -> &Boost {
        &self.boost
    }

    /// The boosted-frame point that is sent to the origin.
    pub fn center(&self) -> &Event {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotates(&self) -> bool {
        !self.orientation.is_identity()
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn apply(&self, e: &Event) -> Result<Event> {
        e.check_same_dim(&self.midpoint)?;
        // Λe − Λm = Λ(e − m); boosting the offset avoids cancellation.
        let mut rel = self.boost.apply(&e.minus(&self.midpoint))?;
        self.orientation.apply(&mut rel.spatial);
        Event::new(
            rel.spatial.iter().map(|x| x * self.scale).collect(),
            rel.time * self.scale,
        )
    }

    pub fn invert(&self, e: &Event) -> Result<Event> {
        e.check_same_dim(&self.center)?;
        let mut spatial: Vec<f64> = e.spatial.iter().map(|x| x / self.scale).collect();
        self.orientation.invert(&mut spatial);
        let rel = Event::new(spatial, e.time / self.scale)?;
        self.boost.inverse().apply(&rel)?.translate(&self.midpoint)
    }
}

/// Builds the [`CanonicalFrame`] for a spacelike pair and returns the images
/// of `a` and `b` (which equal `(∓1, 0⃗; 0)` up to rounding).
pub fn canonicalize_pair(
    a: &Event,
    b: &Event,
    tol: f64,
) -> Result<(CanonicalFrame, Event, Event)> {
    let iv = interval_with_tol(a, b, tol)?;
    if !iv.is_spacelike() {
        return Err(SpacetimeError::NotSpacelike {
            first: 0,
            second: 1,
            squared_interval: iv.squared,
        });
    }
    let delta = b.minus(a);
    let dx2 = dot(&delta.spatial, &delta.spatial);
    // γ(Δt − v⃗·Δx⃗) = 0 with v⃗ ∥ Δx⃗.
    let velocity: Vec<f64> = delta.spatial.iter().map(|x| delta.time * x / dx2).collect();
    let boost = Boost::new(velocity)?;
    let midpoint = Event::new(
        a.spatial.iter().zip(&b.spatial).map(|(x, y)| 0.5 * (x + y)).collect(),
        0.5 * (a.time + b.time),
    )?;
    let center = boost.apply(&midpoint)?;
    let sep = boost.apply(&delta)?.spatial;
    let sep_len = norm(&sep);
    let unit: Vec<f64> = sep.iter().map(|x| x / sep_len).collect();
    let frame = CanonicalFrame {
        boost,
        midpoint,
        center,
        orientation: Orthogonal::aligning(&unit),
        scale: 2.0 / sep_len,
    };
    let a_img = frame.apply(a)?;
    let b_img = frame.apply(b)?;
    Ok((frame, a_img, b_img))
}

/// Sampling plan for [`achievable_orderings`].
///
/// Speeds run over `0, step, 2·step, …, max_speed`. Directions are `±x̂` in
/// one dimension, `directions` evenly spaced angles in two, and the `±`
/// coordinate axes plus `directions` seeded pseudo-random unit vectors in
/// three or more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub max_speed: f64,
    pub speed_step: f64,
    pub directions: usize,
    pub seed: u64,
}

impl Default for VelocityGrid {
    fn default() -> Self {
        Self {
            max_speed: 0.99,
            speed_step: 0.01,
            directions: 72,
            seed: 0,
        }
    }
}

impl VelocityGrid {
    fn validate(&self) -> Result<()> {
        if !(self.max_speed.is_finite() && self.max_speed > 0.0 && self.max_speed < 1.0) {
            return Err(SpacetimeError::InvalidGrid(format!(
                "max_speed {} must lie in (0, 1)",
                self.max_speed
            )));
        }
        if !(self.speed_step.is_finite() && self.speed_step > 0.0) {
            return Err(SpacetimeError::InvalidGrid(format!(
                "speed_step {} must be positive",
                self.speed_step
            )));
        }
        if self.directions == 0 {
            return Err(SpacetimeError::InvalidGrid("need at least one direction".into()));
        }
        Ok(())
    }

    fn unit_directions(&self, dim: usize) -> Vec<Vec<f64>> {
        match dim {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..self.directions)
                .map(|k| {
                    let phi = std::f64::consts::TAU * k as f64 / self.directions as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect(),
            _ => {
                let mut dirs = Vec::with_capacity(2 * dim + self.directions);
                for axis in 0..dim {
                    for sign in [1.0, -1.0] {
                        let mut u = vec![0.0; dim];
                        u[axis] = sign;
                        dirs.push(u);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                while dirs.len() < 2 * dim + self.directions {
                    let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    let n = norm(&g);
                    if n > 1e-12 {
                        dirs.push(g.iter().map(|x| x / n).collect());
                    }
                }
                dirs
            }
        }
    }

    /// All sampled velocities, starting with the rest frame.
    pub fn velocities(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        if dim == 0 {
            return Err(SpacetimeError::ZeroDimension);
        }
        let steps = (self.max_speed / self.speed_step + 1e-9).floor() as usize;
        let mut out = vec![vec![0.0; dim]];
        for u in self.unit_directions(dim) {
            for k in 1..=steps {
                let s = (k as f64 * self.speed_step).min(self.max_speed);
                out.push(u.iter().map(|x| x * s).collect());
            }
        }
        Ok(out)
    }
}

/// A time ordering realised in some frame, with the velocity of that frame.
///
/// `tiers` lists event indices from earliest to latest; events whose boosted
/// times agree within the tolerance share a tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingWitness {
    pub tiers: Vec<Vec<usize>>,
    pub velocity: Vec<f64>,
}

impl OrderingWitness {
    fn tier_of(&self, event: usize) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(&event))
    }

    /// `first` happens strictly before `second` in the witness frame.
    pub fn precedes(&self, first: usize, second: usize) -> bool {
        match (self.tier_of(first), self.tier_of(second)) {
            (Some(i), Some(k)) => i < k,
            _ => false,
        }
    }

    pub fn is_strict(&self) -> bool {
        self.tiers.iter().all(|t| t.len() == 1)
    }
}

/// Enumerates the time orderings of pairwise spacelike events realised over
/// a grid of boosts, one witness per distinct ordering.
///
/// Completeness holds only up to grid resolution: orderings realised only in
/// frames between grid points can be missed.
pub fn achievable_orderings(
    events: &[Event],
    grid: &VelocityGrid,
    tol: f64,
) -> Result<Vec<OrderingWitness>> {
    let Some(first) = events.first() else {
        return Ok(Vec::new());
    };
    for e in events {
        first.check_same_dim(e)?;
    }
    for i in 0..events.len() {
        for k in i + 1..events.len() {
            let iv = interval_with_tol(&events[i], &events[k], tol)?;
            if !iv.is_spacelike() {
                return Err(SpacetimeError::NotSpacelike {
                    first: i,
                    second: k,
                    squared_interval: iv.squared,
                });
            }
        }
    }

    let mut found: BTreeMap<Vec<Vec<usize>>, Vec<f64>> = BTreeMap::new();
    for v in grid.velocities(first.dim())? {
        let b = Boost::new(v.clone())?;
        let mut timed: Vec<(f64, usize)> = events
            .iter()
            .enumerate()
            .map(|(i, e)| b.apply(e).map(|e| (e.time(), i)))
            .collect::<Result<_>>()?;
        timed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut tiers: Vec<Vec<usize>> = Vec::new();
        let mut last_time = f64::NEG_INFINITY;
        for (t, i) in timed {
            match tiers.last_mut() {
                Some(tier) if t - last_time <= tol => tier.push(i),
                _ => tiers.push(vec![i]),
            }
            last_time = t;
        }
        for tier in &mut tiers {
            tier.sort_unstable();
        }
        found.entry(tiers).or_insert(v);
    }
    Ok(found
        .into_iter()
        .map(|(tiers, velocity)| OrderingWitness { tiers, velocity })
        .collect())
}
