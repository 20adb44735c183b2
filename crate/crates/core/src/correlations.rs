//! Two-party, two-setting, two-outcome correlation boxes and the CHSH
//! functional.
//!
//! A box holds the joint table `P(a, b | x, y)` with settings `x, y ∈ {0, 1}`
//! (`x = 0` is Alice's `A`, `x = 1` her `A′`; likewise `B`, `B′` for Bob) and
//! outcomes `a, b ∈ {+1, −1}`. Outcome index 0 is `+1`, index 1 is `−1`.
//!
//! The CHSH value is `E(A,B) + E(A,B′) + E(A′,B) − E(A′,B′)`, with
//! `E(x,y) = Σ ab·P(a,b|x,y)`. Local deterministic strategies reach at most
//! 2 in absolute value, the singlet reaches 2√2, and the superquantum
//! family built here reaches the algebraic maximum 4 without signalling.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for identities that are exact up to rounding.
pub const DEFAULT_PROBABILITY_TOL: f64 = 1e-12;

/// Outcome values in index order.
pub const OUTCOMES: [f64; 2] = [1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("correlation {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("negative probability {value} at (x={x}, y={y})")]
    Negative { x: usize, y: usize, value: f64 },
    #[error("probabilities for (x={x}, y={y}) sum to {sum}, not 1")]
    NotNormalized { x: usize, y: usize, sum: f64 },
    #[error("sample size must be at least 1")]
    ZeroSamples,
    #[error("deterministic strategy id {0} is not in 0..16")]
    InvalidStrategy(u8),
    #[error("invalid correlation table: {0}")]
    InvalidTable(String),
}

pub type Result<T> = std::result::Result<T, CorrelationError>;

/// Joint outcome distribution `P(a, b | x, y)`, indexed `[x][y][a][b]`.
///
/// Construction checks non-negativity and per-setting normalization.
/// No-signalling is not assumed; see [`check_no_signalling`].
///
/// Serializes as `{"P": [[[p++, p+-, p-+, p--] for y] for x]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct NoSignallingBox {
    probs: [[[[f64; 2]; 2]; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    #[serde(rename = "P")]
    p: [[[f64; 4]; 2]; 2],
}

impl TryFrom<BoxRepr> for NoSignallingBox {
    type Error = CorrelationError;

    fn try_from(repr: BoxRepr) -> Result<Self> {
        NoSignallingBox::from_entries(repr.p)
    }
}

impl From<NoSignallingBox> for BoxRepr {
    fn from(b: NoSignallingBox) -> Self {
        BoxRepr { p: b.entries() }
    }
}

impl NoSignallingBox {
    pub fn new(probs: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        for (x, row) in probs.iter().enumerate() {
            for (y, table) in row.iter().enumerate() {
                let mut sum = 0.0;
                for &p in table.iter().flatten() {
                    if !p.is_finite() {
                        return Err(CorrelationError::NonFinite);
                    }
                    if p < 0.0 {
                        return Err(CorrelationError::Negative { x, y, value: p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > DEFAULT_PROBABILITY_TOL {
                    return Err(CorrelationError::NotNormalized { x, y, sum });
                }
            }
        }
        Ok(Self { probs })
    }

    /// Builds a box from `[x][y] = [P(++), P(+−), P(−+), P(−−)]`.
    pub fn from_entries(entries: [[[f64; 4]; 2]; 2]) -> Result<Self> {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let e = entries[x][y];
                probs[x][y] = [[e[0], e[1]], [e[2], e[3]]];
            }
        }
        Self::new(probs)
    }

    /// The product box `P(a,b|x,y) = p(a|x)·q(b|y)`.
    pub fn product(alice: [[f64; 2]; 2], bob: [[f64; 2]; 2]) -> Result<Self> {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        probs[x][y][a][b] = alice[x][a] * bob[y][b];
                    }
                }
            }
        }
        Self::new(probs)
    }

    pub fn entries(&self) -> [[[f64; 4]; 2]; 2] {
        let mut out = [[[0.0; 4]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let t = self.probs[x][y];
                out[x][y] = [t[0][0], t[0][1], t[1][0], t[1][1]];
            }
        }
        out
    }

    pub fn probs(&self) -> &[[[[f64; 2]; 2]; 2]; 2] {
        &self.probs
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[x][y][a][b]
    }

    /// `E(x,y) = Σ ab·P(a,b|x,y)`.
    pub fn correlation(&self, x: usize, y: usize) -> f64 {
        let t = self.probs[x][y];
        t[0][0] - t[0][1] - t[1][0] + t[1][1]
    }

    pub fn correlations(&self) -> [[f64; 2]; 2] {
        [
            [self.correlation(0, 0), self.correlation(0, 1)],
            [self.correlation(1, 0), self.correlation(1, 1)],
        ]
    }

    /// Alice's outcome distribution `P(a | x, y)` in setting pair `(x, y)`.
    pub fn alice_marginal(&self, x: usize, y: usize) -> [f64; 2] {
        let t = self.probs[x][y];
        [t[0][0] + t[0][1], t[1][0] + t[1][1]]
    }

    /// Bob's outcome distribution `P(b | x, y)` in setting pair `(x, y)`.
    pub fn bob_marginal(&self, x: usize, y: usize) -> [f64; 2] {
        let t = self.probs[x][y];
        [t[0][0] + t[1][0], t[0][1] + t[1][1]]
    }

    /// `weight·other + (1 − weight)·self`.
    pub fn mix(&self, other: &NoSignallingBox, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(CorrelationError::OutOfRange(weight));
        }
        let mut probs = self.probs;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        probs[x][y][a][b] =
                            weight * other.probs[x][y][a][b] + (1.0 - weight) * self.probs[x][y][a][b];
                    }
                }
            }
        }
        Self::new(probs)
    }
}

/// Lifts one correlation per setting pair to a box with uniform marginals:
/// `P(++) = P(−−) = (1+E)/4`, `P(+−) = P(−+) = 1/2 − P(++)`.
///
/// Writing the anti-matched entries as `1/2 − P(++)` makes every marginal
/// exactly `1/2` in floating point, not just up to rounding.
pub fn box_from_correlation(correlations: [[f64; 2]; 2]) -> Result<NoSignallingBox> {
    let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let e = correlations[x][y];
            if !e.is_finite() {
                return Err(CorrelationError::NonFinite);
            }
            if !(-1.0..=1.0).contains(&e) {
                return Err(CorrelationError::OutOfRange(e));
            }
            let same = (1.0 + e) / 4.0;
            let diff = 0.5 - same;
            probs[x][y] = [[same, diff], [diff, same]];
        }
    }
    NoSignallingBox::new(probs)
}

/// One of the 16 local deterministic strategies.
///
/// Bit 0 is Alice's outcome for `x = 0`, bit 1 for `x = 1`, bit 2 is Bob's
/// outcome for `y = 0`, bit 3 for `y = 1`; a set bit means `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct DeterministicStrategy(u8);

impl TryFrom<u8> for DeterministicStrategy {
    type Error = CorrelationError;

    fn try_from(id: u8) -> Result<Self> {
        Self::new(id)
    }
}

impl From<DeterministicStrategy> for u8 {
    fn from(s: DeterministicStrategy) -> u8 {
        s.0
    }
}

impl DeterministicStrategy {
    pub fn new(id: u8) -> Result<Self> {
        if id < 16 {
            Ok(Self(id))
        } else {
            Err(CorrelationError::InvalidStrategy(id))
        }
    }

    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        (0..16).map(DeterministicStrategy)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Outcome index (0 for `+1`, 1 for `−1`) of Alice in setting `x`.
    pub fn alice(self, x: usize) -> usize {
        ((self.0 >> x) & 1) as usize
    }

    pub fn bob(self, y: usize) -> usize {
        ((self.0 >> (2 + y)) & 1) as usize
    }

    pub fn correlation(self, x: usize, y: usize) -> f64 {
        OUTCOMES[self.alice(x)] * OUTCOMES[self.bob(y)]
    }

    pub fn to_box(self) -> NoSignallingBox {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                probs[x][y][self.alice(x)][self.bob(y)] = 1.0;
            }
        }
        NoSignallingBox { probs }
    }
}

/// Smooth monotone bridge used by the superquantum model on `(π/4, 3π/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolant {
    /// `cos(2θ − π/2)`.
    #[default]
    Sine,
    /// `1 − 2s(u)` with the cubic smoothstep `s(u) = 3u² − 2u³`,
    /// `u = (θ − π/4)/(π/2)`; C¹ at both joins.
    Smoothstep,
}

impl Interpolant {
    fn eval(self, theta: f64) -> f64 {
        match self {
            Interpolant::Sine => (2.0 * theta - FRAC_PI_2).cos(),
            Interpolant::Smoothstep => {
                let u = (theta - FRAC_PI_4) / FRAC_PI_2;
                1.0 - 2.0 * (u * u * (3.0 - 2.0 * u))
            }
        }
    }
}

/// Piecewise-linear `E(θ)` sampled on `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct CorrelationTable {
    theta: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    theta: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TableRepr> for CorrelationTable {
    type Error = CorrelationError;

    fn try_from(r: TableRepr) -> Result<Self> {
        CorrelationTable::new(r.theta, r.values)
    }
}

impl From<CorrelationTable> for TableRepr {
    fn from(t: CorrelationTable) -> Self {
        TableRepr {
            theta: t.theta,
            values: t.values,
        }
    }
}

impl CorrelationTable {
    /// Knots must start at 0, end at π and increase strictly; values must lie
    /// in `[−1, 1]`.
    pub fn new(theta: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |msg: &str| Err(CorrelationError::InvalidTable(msg.to_string()));
        if theta.len() != values.len() {
            return bad("theta and values differ in length");
        }
        if theta.len() < 2 {
            return bad("need at least two knots");
        }
        if theta.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(CorrelationError::NonFinite);
        }
        if theta[0] != 0.0 || (theta[theta.len() - 1] - PI).abs() > 1e-12 {
            return bad("knots must span [0, pi]");
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return bad("knots must increase strictly");
        }
        if let Some(&v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(CorrelationError::OutOfRange(v));
        }
        Ok(Self { theta, values })
    }

    fn eval(&self, theta: f64) -> f64 {
        let k = self.theta.partition_point(|&t| t <= theta);
        if k == 0 {
            return self.values[0];
        }
        if k >= self.theta.len() {
            return self.values[self.values.len() - 1];
        }
        let (t0, t1) = (self.theta[k - 1], self.theta[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (theta - t0) / (t1 - t0)
    }
}

/// A correlation function `E(θ)` of the relative analyser angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationModel {
    /// `E(θ) = −cos θ`.
    Singlet,
    /// `1` on `[0, π/4]`, the interpolant on `(π/4, 3π/4)`, `−1` on `[3π/4, π]`.
    Superquantum {
        #[serde(default)]
        interpolant: Interpolant,
    },
    /// A local deterministic strategy; correlations depend on the setting
    /// labels only, never on angles.
    ClassicalDeterministic { strategy: DeterministicStrategy },
    CustomTable(CorrelationTable),
}

/// Folds any finite angle into `[0, π]` using `E(θ) = E(−θ) = E(2π − θ)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        TAU - r
    } else {
        r
    }
}

impl CorrelationModel {
    pub fn superquantum() -> Self {
        CorrelationModel::Superquantum {
            interpolant: Interpolant::default(),
        }
    }

    /// `E(θ)`. For a deterministic strategy this is the `(A, B)` correlation.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        self.correlation_for(0, 0, theta)
    }

    /// Correlation for setting pair `(x, y)` at relative angle `θ`.
    pub fn correlation_for(&self, x: usize, y: usize, theta: f64) -> Result<f64> {
        if !theta.is_finite() {
            return Err(CorrelationError::NonFinite);
        }
        let theta = reduce_angle(theta);
        Ok(match self {
            CorrelationModel::Singlet => -theta.cos(),
            CorrelationModel::Superquantum { interpolant } => {
                if theta <= FRAC_PI_4 {
                    1.0
                } else if theta >= 3.0 * FRAC_PI_4 {
                    -1.0
                } else {
                    interpolant.eval(theta)
                }
            }
            CorrelationModel::ClassicalDeterministic { strategy } => strategy.correlation(x, y),
            CorrelationModel::CustomTable(table) => table.eval(theta),
        })
    }

    /// The four correlations at the given analyser angles, `[x][y]`.
    pub fn correlations_at(&self, angles: &ChshAngles) -> Result<[[f64; 2]; 2]> {
        angles.check_finite()?;
        let alice = [angles.a, angles.a_prime];
        let bob = [angles.b, angles.b_prime];
        let mut out = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                out[x][y] = self.correlation_for(x, y, alice[x] - bob[y])?;
            }
        }
        Ok(out)
    }

    /// The box realised at the given angles. Angle-based models use the
    /// uniform-marginal lift; deterministic strategies give their own box.
    pub fn box_at_angles(&self, angles: &ChshAngles) -> Result<NoSignallingBox> {
        match self {
            CorrelationModel::ClassicalDeterministic { strategy } => Ok(strategy.to_box()),
            _ => box_from_correlation(self.correlations_at(angles)?),
        }
    }
}

pub fn eval_correlation(model: &CorrelationModel, theta: f64) -> Result<f64> {
    model.eval(theta)
}

/// Analyser angles (radians) for Alice's `A`, `A′` and Bob's `B`, `B′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    /// Coplanar axes `â′, b̂, â, b̂′` at successive separations of π/4.
    pub fn eq2() -> Self {
        Self {
            a_prime: 0.0,
            b: FRAC_PI_4,
            a: FRAC_PI_2,
            b_prime: 3.0 * FRAC_PI_4,
        }
    }

    /// `â = 0, â′ = π/2, b̂ = π/4, b̂′ = −π/4`, optimal for the singlet.
    pub fn tsirelson() -> Self {
        Self {
            a: 0.0,
            a_prime: FRAC_PI_2,
            b: FRAC_PI_4,
            b_prime: -FRAC_PI_4,
        }
    }

    fn check_finite(&self) -> Result<()> {
        if [self.a, self.a_prime, self.b, self.b_prime]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(CorrelationError::NonFinite)
        }
    }
}

/// The four CHSH terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshTerms {
    pub ab: f64,
    pub ab_prime: f64,
    pub a_prime_b: f64,
    pub a_prime_b_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub value: f64,
    pub terms: ChshTerms,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<ChshAngles>,
}

fn chsh_from_correlations(e: [[f64; 2]; 2], angles: Option<ChshAngles>) -> ChshResult {
    let terms = ChshTerms {
        ab: e[0][0],
        ab_prime: e[0][1],
        a_prime_b: e[1][0],
        a_prime_b_prime: e[1][1],
    };
    ChshResult {
        value: terms.ab + terms.ab_prime + terms.a_prime_b - terms.a_prime_b_prime,
        terms,
        angles,
    }
}

pub fn chsh(b: &NoSignallingBox) -> ChshResult {
    chsh_from_correlations(b.correlations(), None)
}

pub fn chsh_at_angles(model: &CorrelationModel, angles: &ChshAngles) -> Result<ChshResult> {
    Ok(chsh_from_correlations(
        model.correlations_at(angles)?,
        Some(*angles),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// Where the largest marginal discrepancy occurs: `party`'s outcome
/// `outcome` in its own setting `setting` shifts when the other party
/// switches settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignallingSite {
    pub party: Party,
    pub setting: usize,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignallingReport {
    pub passes: bool,
    pub max_deviation: f64,
    pub worst: Option<SignallingSite>,
    pub tol: f64,
}

pub fn check_no_signalling(b: &NoSignallingBox, tol: f64) -> NoSignallingReport {
    let mut max_deviation = 0.0;
    let mut worst = None;
    for own in 0..2 {
        let alice = (b.alice_marginal(own, 0), b.alice_marginal(own, 1));
        let bob = (b.bob_marginal(0, own), b.bob_marginal(1, own));
        for (party, (m0, m1)) in [(Party::Alice, alice), (Party::Bob, bob)] {
            for o in 0..2 {
                let dev = (m0[o] - m1[o]).abs();
                if dev > max_deviation {
                    max_deviation = dev;
                    worst = Some(SignallingSite {
                        party,
                        setting: own,
                        outcome: OUTCOMES[o],
                    });
                }
            }
        }
    }
    NoSignallingReport {
        passes: max_deviation <= tol,
        max_deviation,
        worst,
        tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicEntry {
    pub strategy: DeterministicStrategy,
    #[serde(rename = "box")]
    pub table: NoSignallingBox,
    pub chsh: ChshResult,
}

/// All 16 local deterministic boxes with their CHSH values.
pub fn enumerate_deterministic() -> Vec<DeterministicEntry> {
    DeterministicStrategy::all()
        .map(|strategy| {
            let table = strategy.to_box();
            let chsh = chsh(&table);
            DeterministicEntry {
                strategy,
                table,
                chsh,
            }
        })
        .collect()
}

/// Search parameters for [`maximize_chsh_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Coarse grid spacing in radians; rounded down to divide 2π evenly.
    pub grid_step: f64,
    /// Coordinate descent stops once its step falls below this.
    pub min_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_step: PI / 180.0,
            min_step: 1e-8,
        }
    }
}

/// Best angles found by the search. `value` keeps its sign; `magnitude` is
/// `|value|`. The search is heuristic: `magnitude` is a lower bound on the
/// true maximum of `|CHSH|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimum {
    pub angles: ChshAngles,
    pub value: f64,
    pub magnitude: f64,
    pub grid_magnitude: f64,
}

pub fn maximize_chsh(model: &CorrelationModel) -> Result<ChshOptimum> {
    maximize_chsh_with(model, &OptimizerSettings::default())
}

/// Maximizes `|CHSH|` over analyser angles: exhaustive grid over `â′, b̂, b̂′`
/// with `â = 0` (every angle model depends only on relative angles), then
/// shrinking-step coordinate descent from the best grid point.
pub fn maximize_chsh_with(
    model: &CorrelationModel,
    settings: &OptimizerSettings,
) -> Result<ChshOptimum> {
    if !(settings.grid_step.is_finite() && settings.grid_step > 0.0 && settings.min_step > 0.0) {
        return Err(CorrelationError::NonFinite);
    }
    let n = ((TAU / settings.grid_step).ceil() as usize).max(4);
    let step = TAU / n as f64;

    // Grid angle differences are grid angles, so tabulate E once per pair.
    let mut table = [[Vec::with_capacity(n), Vec::with_capacity(n)], [Vec::with_capacity(n), Vec::with_capacity(n)]];
    for (x, row) in table.iter_mut().enumerate() {
        for (y, col) in row.iter_mut().enumerate() {
            for k in 0..n {
                col.push(model.correlation_for(x, y, k as f64 * step)?);
            }
        }
    }
    let [[t00, t01], [t10, t11]] = &table;

    let mut best_max = (f64::NEG_INFINITY, [0usize; 3]);
    let mut best_min = (f64::INFINITY, [0usize; 3]);
    for ib in 0..n {
        let e_ab = t00[(n - ib) % n];
        for ibp in 0..n {
            let base = e_ab + t01[(n - ibp) % n];
            for iap in 0..n {
                let v = base + t10[(iap + n - ib) % n] - t11[(iap + n - ibp) % n];
                if v > best_max.0 {
                    best_max = (v, [iap, ib, ibp]);
                }
                if v < best_min.0 {
                    best_min = (v, [iap, ib, ibp]);
                }
            }
        }
    }
    let (sign, grid_best) = if best_max.0 >= -best_min.0 {
        (1.0, best_max)
    } else {
        (-1.0, best_min)
    };

    let to_angles = |p: [f64; 3]| ChshAngles {
        a: 0.0,
        a_prime: p[0],
        b: p[1],
        b_prime: p[2],
    };
    let objective = |p: [f64; 3]| -> Result<f64> { Ok(sign * chsh_at_angles(model, &to_angles(p))?.value) };

    let mut point = grid_best.1.map(|i| i as f64 * step);
    let mut current = objective(point)?;
    let mut h = step;
    while h >= settings.min_step {
        let mut improved = false;
        for coord in 0..3 {
            for dir in [1.0, -1.0] {
                let mut trial = point;
                trial[coord] += dir * h;
                let v = objective(trial)?;
                if v > current {
                    point = trial;
                    current = v;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let angles = to_angles(point.map(|p| p.rem_euclid(TAU)));
    let value = chsh_at_angles(model, &angles)?.value;
    Ok(ChshOptimum {
        angles,
        value,
        magnitude: value.abs(),
        grid_magnitude: grid_best.0.abs(),
    })
}

/// Finite-sample estimate of a box's correlations and CHSH value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub seed: u64,
    pub samples_per_setting: u64,
    /// `[x][y] = [n++, n+−, n−+, n−−]`.
    pub counts: [[[u64; 4]; 2]; 2],
    pub correlations: [[f64; 2]; 2],
    pub chsh: f64,
    pub standard_error: f64,
}

/// Draws `n` i.i.d. outcome pairs for each setting pair.
///
/// Counts are drawn as a multinomial through conditional binomials, which
/// has exactly the law of `n` independent categorical draws. Generator:
/// ChaCha8 seeded with `seed_from_u64(seed)`; binomials from `rand_distr`.
/// Setting pairs are visited in the order (0,0), (0,1), (1,0), (1,1).
///
/// The standard error combines the per-term binomial variances
/// `(1 − Ê²)/n` of the four correlation estimates.
pub fn sample_outcomes(b: &NoSignallingBox, n: u64, seed: u64) -> Result<SampleReport> {
    if n == 0 {
        return Err(CorrelationError::ZeroSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [[[0u64; 4]; 2]; 2];
    let mut correlations = [[0.0; 2]; 2];
    let mut variance = 0.0;
    let entries = b.entries();
    for x in 0..2 {
        for y in 0..2 {
            let p = entries[x][y];
            let mut remaining = n;
            let mut mass = 1.0;
            for k in 0..3 {
                if remaining == 0 {
                    break;
                }
                let q = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
                let draw = Binomial::new(remaining, q)
                    .expect("probability clamped to [0, 1]")
                    .sample(&mut rng);
                counts[x][y][k] = draw;
                remaining -= draw;
                mass -= p[k];
            }
            counts[x][y][3] = remaining;
            let c = counts[x][y];
            let e = (c[0] as f64 - c[1] as f64 - c[2] as f64 + c[3] as f64) / n as f64;
            correlations[x][y] = e;
            variance += (1.0 - e * e).max(0.0) / n as f64;
        }
    }
    let chsh = correlations[0][0] + correlations[0][1] + correlations[1][0] - correlations[1][1];
    Ok(SampleReport {
        seed,
        samples_per_setting: n,
        counts,
        correlations,
        chsh,
        standard_error: variance.sqrt(),
    })
}

/// Named reference boxes used by the CLI and the verification suites.
pub fn builtin_boxes() -> Vec<(String, NoSignallingBox)> {
    let lift = |e: [[f64; 2]; 2]| box_from_correlation(e).expect("correlations in range");
    let at = |m: CorrelationModel, angles: ChshAngles| {
        m.box_at_angles(&angles).expect("finite angles")
    };
    let mut out = vec![
        (
            "superquantum-eq2".to_string(),
            at(CorrelationModel::superquantum(), ChshAngles::eq2()),
        ),
        (
            "superquantum-smoothstep-eq2".to_string(),
            at(
                CorrelationModel::Superquantum {
                    interpolant: Interpolant::Smoothstep,
                },
                ChshAngles::eq2(),
            ),
        ),
        (
            "singlet-tsirelson".to_string(),
            at(CorrelationModel::Singlet, ChshAngles::tsirelson()),
        ),
        (
            "singlet-eq2".to_string(),
            at(CorrelationModel::Singlet, ChshAngles::eq2()),
        ),
        ("perfect".to_string(), lift([[1.0; 2]; 2])),
        ("anticorrelated".to_string(), lift([[-1.0; 2]; 2])),
        ("uniform".to_string(), lift([[0.0; 2]; 2])),
    ];
    out.extend(
        DeterministicStrategy::all()
            .map(|s| (format!("deterministic-{}", s.id()), s.to_box())),
    );
    out
}

pub fn builtin_box(name: &str) -> Option<NoSignallingBox> {
    builtin_boxes()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, b)| b)
}
