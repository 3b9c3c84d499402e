//! Declarative experiment descriptions: parse, validate, resolve, run.
//!
//! Experiments are JSON objects with complex amplitudes written as
//! `[re, im]` pairs. Unknown keys are rejected rather than ignored, and
//! every diagnostic names the offending field. The same schema is echoed
//! back inside every report, which keeps reports self-describing and
//! byte-reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{projector_from_span, RawVector, StateVector};
use crate::measurement::{
    born_distribution, ProjectiveMeasurement, UpdateSemantics,
};
use crate::montecarlo::{estimate_conditional, sample_trials};
use crate::nbox::NBoxScenario;
use crate::pps::{
    conditional_distribution, postselect_probability, raw_eq9_sum, PostState, PrePostEnsemble,
};
use crate::report::{EmpiricalTable, OutputFormat, QueryTable, Report, ReportRow};
use crate::tolerances::DIM_LIMIT;

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSpec,
    pub measurement: MeasurementSpec,
    pub semantics: SemanticsSpec,
    pub queries: Vec<QuerySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSpec>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Which states the ensemble is conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// The N-box arrangement with its prescribed initial and final states.
    Nbox { n: usize },
    /// Arbitrary unit-norm initial and final amplitudes.
    Custom {
        dim: usize,
        initial: Vec<[f64; 2]>,
        #[serde(rename = "final")]
        final_amps: Vec<[f64; 2]>,
    },
}

/// The intermediate measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasurementSpec {
    /// {|i⟩⟨i|, I - |i⟩⟨i|}, 1-based i, excluding box N+1.
    OpenBox { i: usize },
    /// All N+1 rank-1 box projectors.
    AllBoxes,
    /// {|i⟩⟨i|, uniform-rest, remainder}.
    Indistinguishable { i: usize },
    /// Arbitrary projectors given as spanning vectors per outcome.
    Custom { spans: Vec<Vec<Vec<[f64; 2]>>> },
}

/// Update semantics for degenerate outcomes. Mixture semantics always use
/// the box basis as the distinguishing pointer basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticsSpec {
    Pure,
    Mixture,
}

/// One requested analysis table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QuerySpec {
    /// Outcome distribution conditioned on post-selection.
    Conditional,
    /// Born distribution of the intermediate measurement on the initial
    /// state, ignoring post-selection.
    Unconditional,
    /// Joint probabilities of (outcome, successful post-selection).
    Joint,
    /// Per-box populations of the state left by the not-box-i outcome,
    /// plus its overlap with the final state.
    ResidualState,
    /// Refinement and compatibility relations around open-box(i).
    RefinementReport,
    /// The guessing game between two observers.
    GuessingGame { opened: usize, guess: usize },
    /// The literal unweighted sum of final-state box weights excluding i.
    RawEq9 { i: usize },
}

impl QuerySpec {
    /// Stable name used in report tables and error contexts.
    pub fn name(&self) -> String {
        match self {
            QuerySpec::Conditional => "conditional".into(),
            QuerySpec::Unconditional => "unconditional".into(),
            QuerySpec::Joint => "joint".into(),
            QuerySpec::ResidualState => "residual_state".into(),
            QuerySpec::RefinementReport => "refinement_report".into(),
            QuerySpec::GuessingGame { opened, guess } => {
                format!("guessing_game(opened={opened},guess={guess})")
            }
            QuerySpec::RawEq9 { i } => format!("raw_eq9(i={i})"),
        }
    }
}

/// Monte Carlo request: trial count and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub trials: u64,
    pub seed: u64,
}

fn validation(path: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses and fully validates an experiment file.
///
/// Malformed syntax reports line/column; schema and semantic failures
/// report the offending field path. No input text panics.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec> {
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: ExperimentSpec = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Syntax
            | serde_json::error::Category::Eof
            | serde_json::error::Category::Io => Error::Parse {
                message: inner.to_string(),
            },
            serde_json::error::Category::Data => Error::Validation {
                path,
                message: inner.to_string(),
            },
        }
    })?;
    // Trailing garbage after the object is a malformed file, not an object.
    de.end().map_err(|e| Error::Parse {
        message: e.to_string(),
    })?;
    resolve(&spec)?;
    Ok(spec)
}

/// A spec lowered onto domain objects, ready to evaluate.
pub(crate) struct ResolvedExperiment {
    pub nbox: Option<NBoxScenario>,
    /// 1-based box index carried by open_box / indistinguishable.
    pub box_index: Option<usize>,
    pub ensemble: PrePostEnsemble,
}

fn complex_amps(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

fn custom_state(path: &str, dim: usize, pairs: &[[f64; 2]]) -> Result<StateVector> {
    if pairs.len() != dim {
        return Err(validation(
            path,
            format!("has {} amplitudes, stated dim is {dim}", pairs.len()),
        ));
    }
    for (j, [re, im]) in pairs.iter().enumerate() {
        if !re.is_finite() || !im.is_finite() {
            return Err(validation(path, format!("amplitude {j} is not finite")));
        }
    }
    StateVector::new(complex_amps(pairs))
        .map_err(|e| validation(path, format!("not a unit state: {e}")))
}

pub(crate) fn resolve(spec: &ExperimentSpec) -> Result<ResolvedExperiment> {
    // Scenario and states.
    let (nbox, initial, final_state) = match &spec.scenario {
        ScenarioSpec::Nbox { n } => {
            let s = NBoxScenario::new(*n)
                .map_err(|e| validation("scenario.nbox.n", e.to_string()))?;
            (Some(s), s.initial_state(), s.final_state())
        }
        ScenarioSpec::Custom {
            dim,
            initial,
            final_amps,
        } => {
            if *dim == 0 || *dim > DIM_LIMIT {
                return Err(validation(
                    "scenario.custom.dim",
                    format!("must be in 1..={DIM_LIMIT}"),
                ));
            }
            let initial = custom_state("scenario.custom.initial", *dim, initial)?;
            let final_state = custom_state("scenario.custom.final", *dim, final_amps)?;
            (None, initial, final_state)
        }
    };
    let dim = initial.dim();

    // Measurement.
    let require_nbox = |path: &str| {
        nbox.ok_or_else(|| {
            validation(
                path,
                "named box measurements assume an nbox scenario; use a custom measurement here",
            )
        })
    };
    let (measurement, box_index) = match &spec.measurement {
        MeasurementSpec::OpenBox { i } => {
            let s = require_nbox("measurement.open_box")?;
            let m = s.open_box_measurement(*i).map_err(|e| {
                validation(
                    "measurement.open_box.i",
                    format!("{e} (box {} is the excluded one)", s.dim()),
                )
            })?;
            (m, Some(*i))
        }
        MeasurementSpec::AllBoxes => {
            let s = require_nbox("measurement.all_boxes")?;
            (s.all_boxes_measurement(), None)
        }
        MeasurementSpec::Indistinguishable { i } => {
            let s = require_nbox("measurement.indistinguishable")?;
            let m = s
                .indistinguishable_measurement(*i)
                .map_err(|e| validation("measurement.indistinguishable.i", e.to_string()))?;
            (m, Some(*i))
        }
        MeasurementSpec::Custom { spans } => {
            if spans.is_empty() {
                return Err(validation("measurement.custom.spans", "no outcomes given"));
            }
            let mut projectors = Vec::with_capacity(spans.len());
            for (k, span) in spans.iter().enumerate() {
                let path = format!("measurement.custom.spans[{k}]");
                if span.is_empty() {
                    return Err(validation(&path, "outcome span has no vectors"));
                }
                let mut raws = Vec::with_capacity(span.len());
                for (v, pairs) in span.iter().enumerate() {
                    if pairs.len() != dim {
                        return Err(validation(
                            &format!("{path}[{v}]"),
                            format!("has {} amplitudes, scenario dim is {dim}", pairs.len()),
                        ));
                    }
                    raws.push(
                        RawVector::new(complex_amps(pairs))
                            .map_err(|e| validation(&format!("{path}[{v}]"), e.to_string()))?,
                    );
                }
                projectors.push(
                    projector_from_span(&raws)
                        .map_err(|e| validation(&path, e.to_string()))?,
                );
            }
            let labels = (1..=spans.len()).map(|k| format!("outcome-{k}")).collect();
            let m = ProjectiveMeasurement::new(projectors, labels).map_err(|e| {
                validation("measurement.custom.spans", e.to_string())
            })?;
            (m, None)
        }
    };

    // Semantics.
    let semantics = match spec.semantics {
        SemanticsSpec::Pure => UpdateSemantics::pure(),
        SemanticsSpec::Mixture => UpdateSemantics::box_basis_mixture(dim)?,
    };

    // Queries that need scenario context.
    for q in &spec.queries {
        match q {
            QuerySpec::ResidualState | QuerySpec::RefinementReport => {
                if nbox.is_none() || box_index.is_none() {
                    return Err(validation(
                        "queries",
                        format!(
                            "`{}` needs an nbox scenario and a box-indexed measurement \
                             (open_box or indistinguishable)",
                            q.name()
                        ),
                    ));
                }
            }
            QuerySpec::GuessingGame { opened, guess } => {
                let s = nbox.ok_or_else(|| {
                    validation("queries", "`guessing_game` needs an nbox scenario")
                })?;
                for (field, value) in [("opened", opened), ("guess", guess)] {
                    if *value == 0 || *value > s.n() {
                        return Err(validation(
                            &format!("queries.guessing_game.{field}"),
                            format!("must be in 1..={}", s.n()),
                        ));
                    }
                }
            }
            QuerySpec::RawEq9 { i } => {
                if *i == 0 || *i > dim {
                    return Err(validation(
                        "queries.raw_eq9.i",
                        format!("must be in 1..={dim}"),
                    ));
                }
            }
            _ => {}
        }
    }

    if let Some(mc) = &spec.montecarlo {
        if mc.trials == 0 {
            return Err(validation("montecarlo.trials", "must be positive"));
        }
    }

    let ensemble = PrePostEnsemble::new(initial, final_state, measurement, semantics)?;
    Ok(ResolvedExperiment {
        nbox,
        box_index,
        ensemble,
    })
}

/// Runs every requested query exactly, then the Monte Carlo section if one
/// was requested, and assembles the report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    let resolved = resolve(spec)?;
    let mut analytic = Vec::with_capacity(spec.queries.len());
    for q in &spec.queries {
        let table = evaluate_query(&resolved, q).map_err(|e| e.in_query(q.name()))?;
        analytic.push(table);
    }
    let empirical = match &spec.montecarlo {
        Some(mc) => Some(run_montecarlo(&resolved.ensemble, mc)?),
        None => None,
    };
    Ok(Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        analytic,
        empirical,
    })
}

fn rows_from(labels: &[String], values: &[f64]) -> Vec<ReportRow> {
    labels
        .iter()
        .zip(values)
        .map(|(label, &value)| ReportRow {
            label: label.clone(),
            value,
            stderr: None,
        })
        .collect()
}

fn row(label: &str, value: f64) -> ReportRow {
    ReportRow {
        label: label.to_string(),
        value,
        stderr: None,
    }
}

fn evaluate_query(resolved: &ResolvedExperiment, query: &QuerySpec) -> Result<QueryTable> {
    let e = &resolved.ensemble;
    let rows = match query {
        QuerySpec::Conditional => {
            let dist = conditional_distribution(e)?;
            let mut rows = rows_from(&dist.labels, &dist.conditional_probs);
            rows.push(row("postselection-rate", dist.postselection_rate));
            rows
        }
        QuerySpec::Unconditional => {
            let dist = born_distribution(e.initial(), e.measurement())?;
            rows_from(dist.labels(), dist.probs())
        }
        QuerySpec::Joint => {
            let dist = conditional_distribution(e)?;
            let mut rows = rows_from(&dist.labels, &dist.joint_probs);
            rows.push(row("postselection-rate", dist.postselection_rate));
            rows
        }
        QuerySpec::ResidualState => {
            let s = resolved.nbox.expect("validated in resolve");
            let i = resolved.box_index.expect("validated in resolve");
            let (populations, overlap) = match e.semantics() {
                UpdateSemantics::PureProjection => {
                    let residual = s.residual_pure_state(i)?;
                    let pops: Vec<f64> =
                        residual.amps().iter().map(|a| a.norm_sqr()).collect();
                    let overlap = postselect_probability(
                        &PostState::Pure(residual),
                        e.final_state(),
                    )?;
                    (pops, overlap)
                }
                UpdateSemantics::ClassicalMixture(_) => {
                    let residual = s.residual_mixture(i)?;
                    let pops = residual.diagonal();
                    let overlap = postselect_probability(
                        &PostState::Mixed(residual),
                        e.final_state(),
                    )?;
                    (pops, overlap)
                }
            };
            let mut rows: Vec<ReportRow> = populations
                .iter()
                .enumerate()
                .map(|(j, &p)| row(&format!("box-{}", j + 1), p))
                .collect();
            rows.push(row("final-overlap", overlap));
            rows
        }
        QuerySpec::RefinementReport => {
            let s = resolved.nbox.expect("validated in resolve");
            let i = resolved.box_index.expect("validated in resolve");
            let r = s.refinement_report(i)?;
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            vec![
                row("all-boxes-refines-open-box", flag(r.all_boxes_refines_open)),
                row(
                    "indistinguishable-refines-open-box",
                    flag(r.indistinguishable_refines_open),
                ),
                row("extensions-compatible", flag(r.extensions_compatible)),
                row("max-cross-commutator-norm", r.max_cross_commutator_norm),
            ]
        }
        QuerySpec::GuessingGame { opened, guess } => {
            let s = resolved.nbox.expect("validated in resolve");
            let g = s.guessing_game(*opened, *guess, e.semantics())?;
            vec![
                row("record-in-opened-prob", g.record_in_opened_prob),
                row("guess-correct-prob", g.guess_correct_prob),
            ]
        }
        QuerySpec::RawEq9 { i } => {
            vec![row("raw-eq9-sum", raw_eq9_sum(e.final_state(), *i)?)]
        }
    };
    Ok(QueryTable {
        query: query.name(),
        rows,
    })
}

fn run_montecarlo(ensemble: &PrePostEnsemble, mc: &MonteCarloSpec) -> Result<EmpiricalTable> {
    let records = sample_trials(ensemble, mc.trials, mc.seed, true)?;
    let est = estimate_conditional(&records, ensemble.measurement().labels())?;
    let rows = est
        .labels
        .iter()
        .zip(est.freqs.iter().zip(&est.stderrs))
        .map(|(label, (&freq, &stderr))| ReportRow {
            label: label.clone(),
            value: freq,
            stderr: Some(stderr),
        })
        .collect();
    Ok(EmpiricalTable {
        trials: est.total_trials,
        seed: mc.seed,
        postselected: est.postselected,
        postselection_rate: est.postselection_rate,
        rows,
    })
}
