//! The jamming model: a third party's event `j` destroys the correlations
//! between two spacelike separated measurement events `a` and `b`.
//!
//! Jamming stays causal under two conditions:
//!
//! * **unary**: neither party's own outcome statistics change, so only
//!   correlations carry the effect ([`check_unary`]);
//! * **binary**: the overlap of the forward light cones of `a` and `b`, the
//!   only region where the two records can be compared, lies inside the
//!   forward light cone of `j` ([`binary_condition`]).
//!
//! The binary check works in the frame where `a = (−1, 0⃗; 0)` and
//! `b = (1, 0⃗; 0)`. There `A ∩ B` is the causal future of the ridge
//! `∂A ∩ ∂B`: the single point `(0; 1)` when `d = 1`, and for `d ≥ 2` the
//! family of `(d−2)`-spheres of radius `√(t² − 1)` in the plane `x₁ = 0`.
//! Containment in `J` therefore reduces to the ridge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlations::{CorrelationError, NoSignallingBox};
use crate::spacetime::{
    canonicalize_pair, interval_with_tol, Event, Interval, IntervalKind, LightCone,
    SpacetimeError,
};

/// Boxes this close to their own product of marginals are returned as-is by
/// the jam transform, which makes it exactly idempotent.
pub const PRODUCT_FIXED_POINT_TOL: f64 = 1e-15;

const RIDGE_GRID: usize = 2048;
const GOLDEN_TOL: f64 = 1e-13;
const LATEST_BRACKET: f64 = 3.0;
const LATEST_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JammingError {
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("configuration declares d={declared} but has events of dimension {found}")]
    DeclaredDimension { declared: usize, found: usize },
    #[error("configuration {index} is not mutually spacelike")]
    InvalidConfiguration { index: usize },
    #[error("no admissible jammer time at this position")]
    NoAdmissibleTime,
    #[error("scenario is empty")]
    EmptyScenario,
}

pub type Result<T> = std::result::Result<T, JammingError>;

/// Alice's measurement `a`, Bob's measurement `b` and the jammer's button
/// press `j`, all in the same spacetime.
///
/// Serializes as `{"a": [..], "b": [..], "j": [..], "d": n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct JammingConfiguration {
    pub a: Event,
    pub b: Event,
    pub j: Event,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    a: Event,
    b: Event,
    j: Event,
    d: usize,
}

impl TryFrom<ConfigRepr> for JammingConfiguration {
    type Error = JammingError;

    fn try_from(r: ConfigRepr) -> Result<Self> {
        let cfg = JammingConfiguration::new(r.a, r.b, r.j)?;
        if cfg.dim() != r.d {
            return Err(JammingError::DeclaredDimension {
                declared: r.d,
                found: cfg.dim(),
            });
        }
        Ok(cfg)
    }
}

impl From<JammingConfiguration> for ConfigRepr {
    fn from(c: JammingConfiguration) -> Self {
        let d = c.dim();
        ConfigRepr {
            a: c.a,
            b: c.b,
            j: c.j,
            d,
        }
    }
}

impl JammingConfiguration {
    pub fn new(a: Event, b: Event, j: Event) -> Result<Self> {
        a.check_same_dim(&b)?;
        a.check_same_dim(&j)?;
        Ok(Self { a, b, j })
    }

    /// `a = (−1, 0⃗; 0)`, `b = (1, 0⃗; 0)` and the given jammer.
    pub fn canonical(j: Event) -> Result<Self> {
        let d = j.dim();
        let mut xa = vec![0.0; d];
        xa[0] = -1.0;
        let mut xb = vec![0.0; d];
        xb[0] = 1.0;
        Self::new(Event::new(xa, 0.0)?, Event::new(xb, 0.0)?, j)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn with_jammer(&self, j: Event) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pair: String,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationVerdict {
    /// All three pairs strictly spacelike.
    pub valid: bool,
    pub pairs: Vec<PairCheck>,
    /// `j` sits on the edge of the admissible region: null separated from
    /// `a` or `b`, or with binary-condition margin within the tolerance of 0.
    pub on_region_boundary: bool,
}

fn mutually_spacelike(cfg: &JammingConfiguration, tol: f64) -> Result<bool> {
    for (p, q) in [(&cfg.a, &cfg.b), (&cfg.a, &cfg.j), (&cfg.b, &cfg.j)] {
        if !interval_with_tol(p, q, tol)?.is_spacelike() {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn validate_configuration(cfg: &JammingConfiguration, tol: f64) -> Result<ConfigurationVerdict> {
    let ab = interval_with_tol(&cfg.a, &cfg.b, tol)?;
    let aj = interval_with_tol(&cfg.a, &cfg.j, tol)?;
    let bj = interval_with_tol(&cfg.b, &cfg.j, tol)?;
    let valid = [ab, aj, bj].iter().all(Interval::is_spacelike);
    let null_edge = aj.kind == IntervalKind::Null || bj.kind == IntervalKind::Null;
    let margin_edge = ab.is_spacelike() && ridge_search(cfg, tol)?.margin.abs() <= tol;
    let pairs = [("a-b", ab), ("a-j", aj), ("b-j", bj)]
        .into_iter()
        .map(|(pair, interval)| PairCheck {
            pair: pair.to_string(),
            interval,
        })
        .collect();
    Ok(ConfigurationVerdict {
        valid,
        pairs,
        on_region_boundary: null_edge || margin_edge,
    })
}

/// Outcome of the containment test `A ∩ B ⊆ J`.
///
/// `margin` is the infimum over the ridge of `(t − t_j) − ‖x⃗ − x⃗_j‖`,
/// measured in the canonical frame of `(a, b)` (where `|ab| = 2`). Its sign
/// is frame independent; its magnitude is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryVerdict {
    pub holds: bool,
    pub margin: f64,
    /// A point of `A ∩ B` outside `J`, in the caller's coordinates; present
    /// only when the condition fails.
    pub witness: Option<Event>,
    /// Canonical time of the worst ridge point, `None` when the infimum is
    /// only approached as `t → ∞`.
    pub critical_time: Option<f64>,
    /// `lim_{t→∞}` of the ridge slack (`d ≥ 2` only).
    pub asymptotic_limit: Option<f64>,
}

/// Slack of the worst ridge point at parameter `s = √(t² − 1)`, with `j` in
/// canonical coordinates: `jx` along the a–b axis, `rho` the norm of the
/// orthogonal part, `jt` its time.
#[derive(Debug, Clone, Copy)]
struct Ridge {
    jx: f64,
    rho: f64,
    jt: f64,
}

impl Ridge {
    /// `√(1+s²) − t_j − √(jx² + (s+ρ)²)`, with the difference of roots
    /// rewritten as a quotient so large `s` does not cancel.
    fn slack(&self, s: f64) -> f64 {
        let t = (1.0 + s * s).sqrt();
        let far = (self.jx * self.jx + (s + self.rho) * (s + self.rho)).sqrt();
        let num = 1.0 - self.jx * self.jx - self.rho * self.rho - 2.0 * s * self.rho;
        num / (t + far) - self.jt
    }

    fn limit(&self) -> f64 {
        -self.jt - self.rho
    }
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

struct RidgeSearch {
    margin: f64,
    /// `s` of the worst finite ridge point, if the infimum is attained.
    argmin: Option<f64>,
    limit: Option<f64>,
}

fn ridge_of(cfg: &JammingConfiguration, tol: f64) -> Result<(crate::spacetime::CanonicalFrame, Ridge, Vec<f64>)> {
    let (frame, _, _) = canonicalize_pair(&cfg.a, &cfg.b, tol)?;
    let j = frame.apply(&cfg.j)?;
    let orth: Vec<f64> = j.spatial()[1..].to_vec();
    let rho = orth.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((
        frame,
        Ridge {
            jx: j.spatial()[0],
            rho,
            jt: j.time(),
        },
        orth,
    ))
}

fn ridge_search(cfg: &JammingConfiguration, tol: f64) -> Result<RidgeSearch> {
    let (_, ridge, _) = ridge_of(cfg, tol)?;
    Ok(search(&ridge, cfg.dim()))
}

fn search(ridge: &Ridge, dim: usize) -> RidgeSearch {
    if dim == 1 {
        return RidgeSearch {
            margin: ridge.slack(0.0),
            argmin: Some(0.0),
            limit: None,
        };
    }
    // s = tan φ maps φ ∈ [0, π/2) onto the whole ridge.
    let half_pi = std::f64::consts::FRAC_PI_2;
    let h = half_pi / RIDGE_GRID as f64;
    let f = |phi: f64| ridge.slack(phi.tan());
    let (mut best_k, mut best) = (0, f(0.0));
    for k in 1..RIDGE_GRID {
        let v = f(k as f64 * h);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let lo = best_k.saturating_sub(1) as f64 * h;
    let hi = ((best_k + 1) as f64 * h).min(half_pi - 1e-12);
    let (phi, v) = golden_section_min(f, lo, hi);
    let (phi, v) = if v <= best { (phi, v) } else { (best_k as f64 * h, best) };
    let limit = ridge.limit();
    if limit < v {
        RidgeSearch {
            margin: limit,
            argmin: None,
            limit: Some(limit),
        }
    } else {
        RidgeSearch {
            margin: v,
            argmin: Some(phi.tan()),
            limit: Some(limit),
        }
    }
}

/// Decides `A ∩ B ⊆ J` on closed cones. The configuration must be
/// mutually spacelike.
pub fn binary_condition(cfg: &JammingConfiguration, tol: f64) -> Result<BinaryVerdict> {
    if !mutually_spacelike(cfg, tol)? {
        return Err(JammingError::InvalidConfiguration { index: 0 });
    }
    binary_condition_unchecked(cfg, tol)
}

/// [`binary_condition`] without the mutual-spacelike precondition; only
/// `a` and `b` need to be spacelike separated.
pub fn binary_condition_unchecked(cfg: &JammingConfiguration, tol: f64) -> Result<BinaryVerdict> {
    let (frame, ridge, orth) = ridge_of(cfg, tol)?;
    let found = search(&ridge, cfg.dim());
    let holds = found.margin >= -tol;
    let critical_time = found.argmin.map(|s| (1.0 + s * s).sqrt());
    let witness = if holds {
        None
    } else {
        let s = match found.argmin {
            Some(s) => s,
            None => {
                // The slack decreases towards a negative limit; walk out
                // until it is clearly below the tolerance.
                let target = 0.5 * (found.margin - tol);
                let mut s = 1.0;
                for _ in 0..200 {
                    if ridge.slack(s) < target {
                        break;
                    }
                    s *= 2.0;
                }
                s
            }
        };
        Some(frame.invert(&ridge_point(&ridge, &orth, s, cfg.dim())?)?)
    };
    Ok(BinaryVerdict {
        holds,
        margin: found.margin,
        witness,
        critical_time,
        asymptotic_limit: found.limit,
    })
}

/// Canonical ridge point at parameter `s` farthest from the jammer.
fn ridge_point(ridge: &Ridge, orth: &[f64], s: f64, dim: usize) -> Result<Event> {
    let mut spatial = vec![0.0; dim];
    if dim >= 2 {
        if ridge.rho > 0.0 {
            for (dst, o) in spatial[1..].iter_mut().zip(orth) {
                *dst = -s * o / ridge.rho;
            }
        } else {
            spatial[1] = s;
        }
    }
    Ok(Event::new(spatial, (1.0 + s * s).sqrt())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    /// Above the supremum `j` stops being spacelike to `a` or `b`; the
    /// supremum itself is excluded.
    Spacelike,
    /// Above the supremum the binary condition fails; closed cones make the
    /// supremum itself admissible.
    Binary,
    /// The search bracket ended before either constraint bound.
    Bracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatestJammerTime {
    pub d: usize,
    pub position: Vec<f64>,
    pub time: f64,
    pub attained: bool,
    pub binding: Binding,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Admissibility {
    Admissible,
    NotSpacelike,
    BinaryFails,
}

fn admissibility(cfg: &JammingConfiguration, tol: f64) -> Result<Admissibility> {
    if !mutually_spacelike(cfg, tol)? {
        return Ok(Admissibility::NotSpacelike);
    }
    Ok(if binary_condition_unchecked(cfg, tol)?.holds {
        Admissibility::Admissible
    } else {
        Admissibility::BinaryFails
    })
}

/// Supremum of jammer times `t` for which `j = (position; t)` is spacelike to
/// the canonical `a = (−1, 0⃗; 0)`, `b = (1, 0⃗; 0)` and satisfies the binary
/// condition. Bisection inside `[−3, 3]` down to width `1e−9`.
///
/// The admissible times form an interval: spacelike separation from both
/// events is an open interval around `t = 0`, and the binary condition is
/// inherited by the causal past of any jammer that satisfies it.
pub fn latest_jammer_time(d: usize, position: Option<&[f64]>, tol: f64) -> Result<LatestJammerTime> {
    if d == 0 {
        return Err(SpacetimeError::ZeroDimension.into());
    }
    let position = match position {
        Some(p) if p.len() != d => {
            return Err(SpacetimeError::DimensionMismatch {
                left: p.len(),
                right: d,
            }
            .into())
        }
        Some(p) => p.to_vec(),
        None => vec![0.0; d],
    };
    let base = JammingConfiguration::canonical(Event::new(position.clone(), 0.0)?)?;
    let status = |t: f64| -> Result<Admissibility> {
        admissibility(&base.with_jammer(Event::new(position.clone(), t)?)?, tol)
    };

    let dist = |x0: f64| {
        let mut s = (position[0] - x0).powi(2);
        s += position[1..].iter().map(|v| v * v).sum::<f64>();
        s.sqrt()
    };
    let reach = dist(-1.0).min(dist(1.0));
    let mut hi = reach.min(LATEST_BRACKET);
    let mut lo = (-reach + (0.5 * reach).min(1e-4)).max(-LATEST_BRACKET);
    if lo >= hi || status(lo)? != Admissibility::Admissible {
        return Err(JammingError::NoAdmissibleTime);
    }
    let mut hi_status = status(hi)?;
    if hi_status == Admissibility::Admissible {
        return Ok(LatestJammerTime {
            d,
            position,
            time: hi,
            attained: true,
            binding: Binding::Bracket,
            lower: hi,
            upper: hi,
        });
    }
    while hi - lo > LATEST_WIDTH {
        let mid = 0.5 * (lo + hi);
        match status(mid)? {
            Admissibility::Admissible => lo = mid,
            s => {
                hi = mid;
                hi_status = s;
            }
        }
    }
    let binding = match hi_status {
        Admissibility::BinaryFails => Binding::Binary,
        _ => Binding::Spacelike,
    };
    Ok(LatestJammerTime {
        d,
        position,
        time: 0.5 * (lo + hi),
        attained: binding == Binding::Binary,
        binding,
        lower: lo,
        upper: hi,
    })
}

fn product_of_marginals(b: &NoSignallingBox) -> [[[[f64; 2]; 2]; 2]; 2] {
    let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let pa = b.alice_marginal(x, y);
            let pb = b.bob_marginal(x, y);
            for a in 0..2 {
                for o in 0..2 {
                    probs[x][y][a][o] = pa[a] * pb[o];
                }
            }
        }
    }
    probs
}

/// Full jamming: each setting pair's table is replaced by the product of
/// its two single-party marginals. Correlations between the parties vanish;
/// each party's own statistics are untouched.
///
/// Takes no outcome data, so the jammer cannot condition on results.
pub fn apply_jamming(b: &NoSignallingBox) -> NoSignallingBox {
    let product = product_of_marginals(b);
    let distance = b
        .probs()
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .zip(product.iter().flatten().flatten().flatten())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    if distance <= PRODUCT_FIXED_POINT_TOL {
        return b.clone();
    }
    NoSignallingBox::new(product).expect("product of normalized marginals is normalized")
}

/// `strength·jammed + (1 − strength)·original`, `strength ∈ [0, 1]`.
pub fn apply_partial_jamming(b: &NoSignallingBox, strength: f64) -> Result<NoSignallingBox> {
    if strength == 1.0 {
        return Ok(apply_jamming(b));
    }
    Ok(b.mix(&apply_jamming(b), strength)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnaryVerdict {
    pub holds: bool,
    pub max_deviation: f64,
    pub tol: f64,
}

/// Every single-party marginal of `jammed` matches `original` within `tol`.
pub fn check_unary(original: &NoSignallingBox, jammed: &NoSignallingBox, tol: f64) -> UnaryVerdict {
    let mut max_deviation: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let pairs = [
                (original.alice_marginal(x, y), jammed.alice_marginal(x, y)),
                (original.bob_marginal(x, y), jammed.bob_marginal(x, y)),
            ];
            for (m0, m1) in pairs {
                for o in 0..2 {
                    max_deviation = max_deviation.max((m0[o] - m1[o]).abs());
                }
            }
        }
    }
    UnaryVerdict {
        holds: max_deviation <= tol,
        max_deviation,
        tol,
    }
}

/// Several jamming configurations in one spacetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JamScenario {
    pub configurations: Vec<JammingConfiguration>,
}

impl JamScenario {
    pub fn new(configurations: Vec<JammingConfiguration>) -> Result<Self> {
        let Some(first) = configurations.first() else {
            return Err(JammingError::EmptyScenario);
        };
        let d = first.dim();
        if let Some(c) = configurations.iter().find(|c| c.dim() != d) {
            return Err(SpacetimeError::DimensionMismatch {
                left: d,
                right: c.dim(),
            }
            .into());
        }
        Ok(Self { configurations })
    }

    pub fn dim(&self) -> Option<usize> {
        self.configurations.first().map(JammingConfiguration::dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum LoopVerdict {
    Acyclic { edges: Vec<(usize, usize)> },
    /// `path` starts and ends at the same configuration.
    Cycle {
        path: Vec<usize>,
        edges: Vec<(usize, usize)>,
    },
}

impl LoopVerdict {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, LoopVerdict::Acyclic { .. })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        match self {
            LoopVerdict::Acyclic { edges } | LoopVerdict::Cycle { edges, .. } => edges,
        }
    }
}

/// Influence graph: configuration `i` can affect configuration `k` when `j_k`
/// lies in the closed overlap `A_i ∩ B_i`, the only region where the effect
/// of `j_i` is readable.
pub fn influence_edges(scenario: &JamScenario, tol: f64) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, ci) in scenario.configurations.iter().enumerate() {
        let cone_a = LightCone::future(ci.a.clone());
        let cone_b = LightCone::future(ci.b.clone());
        for (k, ck) in scenario.configurations.iter().enumerate() {
            if cone_a.classify(&ck.j, tol)?.is_contained() && cone_b.classify(&ck.j, tol)?.is_contained() {
                edges.push((i, k));
            }
        }
    }
    Ok(edges)
}

pub fn detect_causal_loops(scenario: &JamScenario, tol: f64) -> Result<LoopVerdict> {
    for (index, cfg) in scenario.configurations.iter().enumerate() {
        if !mutually_spacelike(cfg, tol)? {
            return Err(JammingError::InvalidConfiguration { index });
        }
    }
    let edges = influence_edges(scenario, tol)?;
    Ok(match find_cycle(scenario.configurations.len(), &edges) {
        Some(path) => LoopVerdict::Cycle { path, edges },
        None => LoopVerdict::Acyclic { edges },
    })
}

/// Depth-first search for a directed cycle; returns it closed (first node
/// repeated at the end).
pub(crate) fn find_cycle(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut adj = vec![Vec::new(); n];
    for &(from, to) in edges {
        adj[from].push(to);
    }
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (node, next child index)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&child) = adj[node].get(*next) {
                *next += 1;
                match mark[child] {
                    Mark::New => {
                        mark[child] = Mark::Active;
                        stack.push((child, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(v, _)| v == child).unwrap();
                        let mut path: Vec<usize> = stack[start..].iter().map(|&(v, _)| v).collect();
                        path.push(child);
                        return Some(path);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
