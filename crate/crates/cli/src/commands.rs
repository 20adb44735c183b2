//! Command execution. Every command returns typed results that end up in a
//! [`Report`](crate::Report).

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use nonlocality::jamming::binary_condition_unchecked;
use nonlocality::{
    achievable_orderings, apply_partial_jamming, binary_condition, builtin_box, builtin_boxes,
    check_no_signalling, check_unary, chsh, chsh_at_angles, detect_causal_loops,
    enumerate_deterministic, latest_jammer_time, maximize_chsh, sample_outcomes,
    validate_configuration, BinaryVerdict, Boost, ChshAngles, ChshOptimum, ChshResult,
    ConfigurationVerdict, CorrelationModel, CorrelationTable, DeterministicStrategy, Event,
    Interpolant, JamScenario, JammingConfiguration, LatestJammerTime, LoopVerdict,
    NoSignallingBox, NoSignallingReport, OrderingWitness, SampleReport, UnaryVerdict,
    VelocityGrid,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::CliError;

/// Distance from 2√2 still reported as the quantum maximum.
pub const QUANTUM_MAXIMAL_TOL: f64 = 1e-6;

pub(crate) struct Outcome {
    pub results: Value,
    pub verdict: bool,
    pub seed: Option<u64>,
}

fn outcome(results: impl Serialize, verdict: bool, seed: Option<u64>) -> Result<Outcome, CliError> {
    Ok(Outcome {
        results: serde_json::to_value(results).map_err(CliError::Encode)?,
        verdict,
        seed,
    })
}

pub fn classify(value: f64, prob_tol: f64) -> Classification {
    let m = value.abs();
    if m <= 2.0 + prob_tol {
        Classification::Classical
    } else if (m - 2.0 * SQRT_2).abs() <= QUANTUM_MAXIMAL_TOL {
        Classification::QuantumMaximal
    } else if m < 2.0 * SQRT_2 {
        Classification::Quantum
    } else {
        Classification::Superquantum
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load_box(src: &BoxArgs) -> Result<Option<(String, NoSignallingBox)>, CliError> {
    match (&src.box_file, &src.builtin) {
        (Some(_), Some(_)) => Err(CliError::Invalid("give either --box or --builtin".into())),
        (Some(p), None) => Ok(Some((p.display().to_string(), read_json(p)?))),
        (None, Some(name)) => builtin_box(name)
            .map(|b| Some((name.clone(), b)))
            .ok_or_else(|| {
                let names: Vec<String> = builtin_boxes().into_iter().map(|(n, _)| n).collect();
                CliError::Invalid(format!("unknown built-in box {name:?}; known: {}", names.join(", ")))
            }),
        (None, None) => Ok(None),
    }
}

fn build_model(m: &ModelArgs) -> Result<Option<CorrelationModel>, CliError> {
    let Some(kind) = m.model else {
        return Ok(None);
    };
    Ok(Some(match kind {
        ModelKind::Singlet => CorrelationModel::Singlet,
        ModelKind::Superquantum => CorrelationModel::Superquantum {
            interpolant: match m.interpolant {
                Some(InterpolantArg::Smoothstep) => Interpolant::Smoothstep,
                _ => Interpolant::Sine,
            },
        },
        ModelKind::Deterministic => {
            let id = m
                .strategy
                .ok_or_else(|| CliError::Invalid("--model deterministic needs --strategy".into()))?;
            CorrelationModel::ClassicalDeterministic {
                strategy: DeterministicStrategy::new(id)?,
            }
        }
        ModelKind::Table => {
            let path = m
                .table
                .as_ref()
                .ok_or_else(|| CliError::Invalid("--model table needs --table".into()))?;
            CorrelationModel::CustomTable(read_json::<CorrelationTable>(path)?)
        }
    }))
}

fn resolve_angles(m: &ModelArgs) -> Result<ChshAngles, CliError> {
    let explicit = [m.a, m.a_prime, m.b, m.b_prime];
    match (m.angles, explicit) {
        (None, [Some(a), Some(a_prime), Some(b), Some(b_prime)]) => Ok(ChshAngles {
            a,
            a_prime,
            b,
            b_prime,
        }),
        (Some(_), e) if e.iter().any(Option::is_some) => Err(CliError::Invalid(
            "give either --angles or explicit --a/--a-prime/--b/--b-prime".into(),
        )),
        (None, e) if e.iter().any(Option::is_some) => Err(CliError::Invalid(
            "explicit angles need all of --a, --a-prime, --b and --b-prime".into(),
        )),
        (Some(AnglePreset::Tsirelson), _) => Ok(ChshAngles::tsirelson()),
        _ => Ok(ChshAngles::eq2()),
    }
}

#[derive(Serialize)]
struct ChshReport {
    source: String,
    result: ChshResult,
    classification: Classification,
}

#[derive(Serialize)]
struct OptimumReport {
    source: String,
    optimum: ChshOptimum,
    classification: Classification,
}

#[derive(Serialize)]
struct DeterministicRow {
    strategy: u8,
    alice: [f64; 2],
    bob: [f64; 2],
    chsh: f64,
}

#[derive(Serialize)]
struct DeterministicReport {
    strategies: Vec<DeterministicRow>,
    max_abs: f64,
    classification: Classification,
}

#[derive(Serialize)]
struct CurveRow {
    theta: f64,
    correlation: f64,
}

#[derive(Serialize)]
struct CurveReport {
    curve: String,
    points: usize,
}

fn model_label(m: &CorrelationModel) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.get("kind").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default()
}

pub(crate) fn run_chsh(c: &ChshArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let expect = |class: Classification| c.expect.is_none_or(|e| e == class);
    if let Some(which) = &c.deterministic {
        let table = enumerate_deterministic();
        let selected: Vec<_> = match which.as_str() {
            "all" => table,
            id => {
                let id: u8 = id.parse().map_err(|_| {
                    CliError::Invalid(format!("--deterministic takes `all` or 0..=15, got {id:?}"))
                })?;
                let s = DeterministicStrategy::new(id)?;
                table.into_iter().filter(|e| e.strategy == s).collect()
            }
        };
        let sign = |o: usize| if o == 0 { 1.0 } else { -1.0 };
        let strategies: Vec<DeterministicRow> = selected
            .iter()
            .map(|e| DeterministicRow {
                strategy: e.strategy.id(),
                alice: [sign(e.strategy.alice(0)), sign(e.strategy.alice(1))],
                bob: [sign(e.strategy.bob(0)), sign(e.strategy.bob(1))],
                chsh: e.chsh.value,
            })
            .collect();
        let max_abs = strategies.iter().map(|r| r.chsh.abs()).fold(0.0, f64::max);
        let classification = classify(max_abs, tol.probability);
        return outcome(
            DeterministicReport {
                strategies,
                max_abs,
                classification,
            },
            expect(classification),
            None,
        );
    }

    let model = build_model(&c.model)?;
    if let Some(path) = &c.curve {
        let m = model
            .as_ref()
            .ok_or_else(|| CliError::Invalid("--curve needs --model".into()))?;
        let points = c.points.unwrap_or(181);
        let rows = (0..points)
            .map(|k| {
                let theta = PI * k as f64 / (points - 1) as f64;
                m.eval(theta).map(|correlation| CurveRow { theta, correlation })
            })
            .collect::<Result<Vec<_>, _>>()?;
        write_csv(path, rows)?;
        if !c.optimize && c.model.angles.is_none() && c.model.a.is_none() {
            return outcome(
                CurveReport {
                    curve: path.display().to_string(),
                    points,
                },
                true,
                None,
            );
        }
    }

    if let Some((source, b)) = load_box(&c.source)? {
        if model.is_some() {
            return Err(CliError::Invalid("give either a box or a model, not both".into()));
        }
        let result = chsh(&b);
        let classification = classify(result.value, tol.probability);
        return outcome(
            ChshReport {
                source,
                result,
                classification,
            },
            expect(classification),
            None,
        );
    }

    let m = model.ok_or_else(|| {
        CliError::Invalid("chsh needs --model, --box, --builtin or --deterministic".into())
    })?;
    let source = model_label(&m);
    if c.optimize {
        let optimum = maximize_chsh(&m)?;
        let classification = classify(optimum.magnitude, tol.probability);
        return outcome(
            OptimumReport {
                source,
                optimum,
                classification,
            },
            expect(classification),
            None,
        );
    }
    let result = chsh_at_angles(&m, &resolve_angles(&c.model)?)?;
    let classification = classify(result.value, tol.probability);
    outcome(
        ChshReport {
            source,
            result,
            classification,
        },
        expect(classification),
        None,
    )
}

#[derive(Serialize)]
struct NosigEntry {
    source: String,
    report: NoSignallingReport,
}

pub(crate) fn run_nosig(n: &NosigArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let boxes = if n.all {
        if n.source.is_set() {
            return Err(CliError::Invalid("--all takes no box".into()));
        }
        builtin_boxes()
    } else {
        vec![load_box(&n.source)?
            .ok_or_else(|| CliError::Invalid("nosig needs --box, --builtin or --all".into()))?]
    };
    let entries: Vec<NosigEntry> = boxes
        .into_iter()
        .map(|(source, b)| NosigEntry {
            source,
            report: check_no_signalling(&b, tol.probability),
        })
        .collect();
    let verdict = entries.iter().all(|e| e.report.passes);
    outcome(entries, verdict, None)
}

#[derive(Serialize)]
struct ConfigReport {
    configuration: JammingConfiguration,
    validation: ConfigurationVerdict,
    binary: Option<BinaryVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<String>,
}

#[derive(Serialize)]
struct SweepRow {
    jt: f64,
    valid: bool,
    margin: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ScenarioReport {
    loops: LoopVerdict,
    binary_holds: Vec<bool>,
}

#[derive(Serialize)]
struct TransformReport {
    source: String,
    strength: f64,
    jammed: NoSignallingBox,
    unary: UnaryVerdict,
    chsh_before: f64,
    chsh_after: f64,
    classification_after: Classification,
}

fn event_from(name: &str, coords: &Option<Vec<f64>>) -> Result<Event, CliError> {
    let c = coords
        .as_ref()
        .ok_or_else(|| CliError::Invalid(format!("missing --{name}")))?;
    Ok(Event::from_coords(c)?)
}

pub(crate) fn run_jam(j: &JamArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let inline = j.a.is_some() || j.b.is_some() || j.j.is_some();
    let modes = [
        j.config.is_some() || inline,
        j.latest,
        j.scenario.is_some(),
        j.source.is_set(),
    ];
    if modes.iter().filter(|m| **m).count() != 1 {
        return Err(CliError::Invalid(
            "jam needs exactly one of --config/--a --b --j, --latest, --scenario, --box/--builtin"
                .into(),
        ));
    }

    if j.latest {
        let d = j
            .d
            .or(j.position.as_ref().map(Vec::len))
            .ok_or_else(|| CliError::Invalid("--latest needs --d".into()))?;
        let r: LatestJammerTime = latest_jammer_time(d, j.position.as_deref(), tol.geometric)?;
        return outcome(r, true, None);
    }

    if let Some(path) = &j.scenario {
        let scenario: JamScenario = read_json(path)?;
        let loops = detect_causal_loops(&scenario, tol.geometric)?;
        let binary_holds = scenario
            .configurations
            .iter()
            .map(|c| binary_condition(c, tol.geometric).map(|v| v.holds))
            .collect::<Result<Vec<_>, _>>()?;
        let verdict = loops.is_acyclic();
        return outcome(ScenarioReport { loops, binary_holds }, verdict, None);
    }

    if let Some((source, b)) = load_box(&j.source)? {
        let strength = j.strength.unwrap_or(1.0);
        let jammed = apply_partial_jamming(&b, strength)?;
        let unary = check_unary(&b, &jammed, tol.probability);
        let chsh_after = chsh(&jammed).value;
        let verdict = unary.holds;
        return outcome(
            TransformReport {
                source,
                strength,
                unary,
                chsh_before: chsh(&b).value,
                chsh_after,
                classification_after: classify(chsh_after, tol.probability),
                jammed,
            },
            verdict,
            None,
        );
    }

    let cfg = match &j.config {
        Some(_) if inline => {
            return Err(CliError::Invalid("give either --config or --a/--b/--j".into()))
        }
        Some(path) => read_json::<JammingConfiguration>(path)?,
        None => JammingConfiguration::new(
            event_from("a", &j.a)?,
            event_from("b", &j.b)?,
            event_from("j", &j.j)?,
        )?,
    };
    let validation = validate_configuration(&cfg, tol.geometric)?;
    let binary = if validation.valid {
        Some(binary_condition(&cfg, tol.geometric)?)
    } else {
        None
    };
    let sweep = match &j.sweep {
        Some(path) => {
            let from = j.sweep_from.unwrap_or(-2.0);
            let to = j.sweep_to.unwrap_or(2.0);
            let steps = j.sweep_steps.unwrap_or(401);
            let mut rows = Vec::with_capacity(steps);
            for k in 0..steps {
                let jt = from + (to - from) * k as f64 / (steps - 1) as f64;
                let moved = cfg.with_jammer(cfg.j.with_time(jt)?)?;
                let valid = validate_configuration(&moved, tol.geometric)?.valid;
                let v = binary_condition_unchecked(&moved, tol.geometric)?;
                rows.push(SweepRow {
                    jt,
                    valid,
                    margin: v.margin,
                    holds: valid && v.holds,
                });
            }
            write_csv(path, rows)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let verdict = binary.as_ref().is_some_and(|b| b.holds);
    outcome(
        ConfigReport {
            configuration: cfg,
            validation,
            binary,
            sweep,
        },
        verdict,
        None,
    )
}

#[derive(Serialize)]
struct BoostReport {
    velocity: Vec<f64>,
    gamma: f64,
    events: Vec<Event>,
    transformed: Vec<Event>,
}

#[derive(Serialize)]
struct OrderingReport {
    events: Vec<Event>,
    grid: VelocityGrid,
    orderings: Vec<OrderingWitness>,
}

fn parse_event(s: &str) -> Result<Event, CliError> {
    let coords = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("bad coordinate {p:?} in event {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Event::from_coords(&coords)?)
}

pub(crate) fn run_boost(b: &BoostArgs, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut events: Vec<Event> = match &b.events {
        Some(path) => read_json(path)?,
        None => Vec::new(),
    };
    for s in &b.event {
        events.push(parse_event(s)?);
    }
    if events.is_empty() {
        return Err(CliError::Invalid("boost needs --events or --event".into()));
    }
    match (&b.v, b.enumerate) {
        (Some(v), false) => {
            let boost = Boost::new(v.clone())?;
            let transformed = events
                .iter()
                .map(|e| boost.apply(e))
                .collect::<Result<Vec<_>, _>>()?;
            outcome(
                BoostReport {
                    velocity: v.clone(),
                    gamma: boost.gamma(),
                    events,
                    transformed,
                },
                true,
                None,
            )
        }
        (None, true) => {
            let defaults = VelocityGrid::default();
            let grid = VelocityGrid {
                max_speed: b.max_speed.unwrap_or(defaults.max_speed),
                speed_step: b.speed_step.unwrap_or(defaults.speed_step),
                directions: b.directions.unwrap_or(defaults.directions),
                seed: b.grid_seed.unwrap_or(defaults.seed),
            };
            let orderings = achievable_orderings(&events, &grid, tol.geometric)?;
            let seed = grid.seed;
            outcome(
                OrderingReport {
                    events,
                    grid,
                    orderings,
                },
                true,
                Some(seed),
            )
        }
        _ => Err(CliError::Invalid("boost needs exactly one of --v and --enumerate".into())),
    }
}

#[derive(Serialize)]
struct SampleSummary {
    source: String,
    exact_chsh: f64,
    sample: SampleReport,
    deviation_in_standard_errors: Option<f64>,
}

pub(crate) fn run_sample(s: &SampleArgs, _tol: &Tolerances) -> Result<Outcome, CliError> {
    let n = s.n.ok_or_else(|| CliError::Invalid("sample needs --n".into()))?;
    let seed = s
        .seed
        .ok_or_else(|| CliError::Invalid("the seed must be resolved before running".into()))?;
    let model = build_model(&s.model)?;
    let (source, b) = match (load_box(&s.source)?, model) {
        (Some(_), Some(_)) => {
            return Err(CliError::Invalid("give either a box or a model, not both".into()))
        }
        (Some(found), None) => found,
        (None, Some(m)) => {
            let angles = resolve_angles(&s.model)?;
            (model_label(&m), m.box_at_angles(&angles)?)
        }
        (None, None) => {
            return Err(CliError::Invalid("sample needs --box, --builtin or --model".into()))
        }
    };
    let sample = sample_outcomes(&b, n, seed)?;
    let exact_chsh = chsh(&b).value;
    let verdict = match s.expect_chsh {
        Some(target) => (sample.chsh - target).abs() <= 5.0 * sample.standard_error,
        None => true,
    };
    let deviation_in_standard_errors = s.expect_chsh.and_then(|target| {
        (sample.standard_error > 0.0).then(|| (sample.chsh - target) / sample.standard_error)
    });
    outcome(
        SampleSummary {
            source,
            exact_chsh,
            sample,
            deviation_in_standard_errors,
        },
        verdict,
        Some(seed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_bands() {
        assert_eq!(classify(-2.0, 1e-12), Classification::Classical);
        assert_eq!(classify(2.5, 1e-12), Classification::Quantum);
        assert_eq!(classify(-2.0 * SQRT_2, 1e-12), Classification::QuantumMaximal);
        assert_eq!(classify(2.0 * SQRT_2 + 5e-7, 1e-12), Classification::QuantumMaximal);
        assert_eq!(classify(3.0, 1e-12), Classification::Superquantum);
        assert_eq!(classify(4.0, 1e-12), Classification::Superquantum);
    }

    #[test]
    fn angle_resolution() {
        let preset = ModelArgs {
            angles: Some(AnglePreset::Tsirelson),
            ..Default::default()
        };
        assert_eq!(resolve_angles(&preset).unwrap(), ChshAngles::tsirelson());
        assert_eq!(resolve_angles(&ModelArgs::default()).unwrap(), ChshAngles::eq2());
        let partial = ModelArgs {
            a: Some(0.1),
            ..Default::default()
        };
        assert!(resolve_angles(&partial).is_err());
    }

    #[test]
    fn event_parsing() {
        assert_eq!(parse_event("-1, 0.5").unwrap().to_coords(), vec![-1.0, 0.5]);
        assert!(parse_event("1,x").is_err());
        assert!(parse_event("1").is_err());
    }
}
