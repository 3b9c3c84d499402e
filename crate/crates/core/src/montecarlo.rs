//! Seeded Monte Carlo trajectory sampling with per-trial RNG streams.
//!
//! Each trial draws from its own ChaCha stream derived from `(seed, trial
//! index)`, so a trial's randomness is a pure function of those two values.
//! Results are therefore identical whether trials run serially or in
//! parallel, and any subset of trials reproduces exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::inner_product;
use crate::measurement::{branch_weight, lueders_update, mixture_update, UpdateSemantics};
use crate::pps::{postselect_probability, PostState, PrePostEnsemble};
use crate::tolerances::ZERO_PROBABILITY_TOL;

/// One sampled trajectory through prepare → measure → post-select.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub outcome_label: String,
    /// Which pointer-basis state the record landed in, 1-based. Present only
    /// under mixture semantics when the outcome subspace has more than one
    /// branch; rank-1 outcomes leave nothing to be ignorant about.
    pub pointer_branch: Option<usize>,
    pub postselected: bool,
}

/// The RNG stream for one trial: same seed, per-trial stream index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

enum BranchPlan {
    /// Born weight below threshold; this outcome is never drawn.
    Impossible,
    Pure {
        postselect: f64,
    },
    Mixture {
        branches: Vec<MixtureBranch>,
    },
}

struct MixtureBranch {
    /// 0-based pointer-basis index.
    index: usize,
    weight: f64,
    postselect: f64,
}

struct OutcomePlan {
    label: String,
    weight: f64,
    branch: BranchPlan,
}

/// Everything a trial needs, computed once per ensemble.
pub struct SamplingPlan {
    outcomes: Vec<OutcomePlan>,
}

impl SamplingPlan {
    pub fn new(ensemble: &PrePostEnsemble) -> Result<Self> {
        let final_state = ensemble.final_state();
        let mut outcomes = Vec::with_capacity(ensemble.measurement().len());
        for (k, projector) in ensemble.measurement().projectors().iter().enumerate() {
            let weight = branch_weight(projector, ensemble.initial())?;
            let label = ensemble.measurement().label(k).to_string();
            if weight < ZERO_PROBABILITY_TOL {
                outcomes.push(OutcomePlan {
                    label,
                    weight: 0.0,
                    branch: BranchPlan::Impossible,
                });
                continue;
            }
            let branch = match ensemble.semantics() {
                UpdateSemantics::PureProjection => {
                    let (updated, _) = lueders_update(ensemble.initial(), projector)?;
                    let postselect =
                        postselect_probability(&PostState::Pure(updated), final_state)?;
                    BranchPlan::Pure { postselect }
                }
                UpdateSemantics::ClassicalMixture(basis) => {
                    let out = mixture_update(ensemble.initial(), projector, basis)?;
                    let branches = out
                        .branch_weights
                        .iter()
                        .map(|&(index, weight)| {
                            let b = &basis.vectors()[index];
                            let postselect = inner_product(final_state, b)?.norm_sqr();
                            Ok(MixtureBranch {
                                index,
                                weight,
                                postselect,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    BranchPlan::Mixture { branches }
                }
            };
            outcomes.push(OutcomePlan {
                label,
                weight,
                branch,
            });
        }
        Ok(Self { outcomes })
    }

    /// Draws one trajectory. Draw order is fixed: outcome, then pointer
    /// branch (composite mixture outcomes only), then post-selection.
    pub fn sample(&self, seed: u64, trial: u64) -> TrialRecord {
        let mut rng = trial_rng(seed, trial);
        let outcome = &self.outcomes[pick_cumulative(
            self.outcomes.iter().map(|o| o.weight),
            rng.random::<f64>(),
        )];
        let (pointer_branch, postselect) = match &outcome.branch {
            BranchPlan::Impossible => unreachable!("zero-weight outcome drawn"),
            BranchPlan::Pure { postselect } => (None, *postselect),
            BranchPlan::Mixture { branches } => {
                let total: f64 = branches.iter().map(|b| b.weight).sum();
                let picked = if branches.len() > 1 {
                    let u = rng.random::<f64>() * total;
                    &branches[pick_cumulative(branches.iter().map(|b| b.weight), u)]
                } else {
                    &branches[0]
                };
                let pointer = (branches.len() > 1).then_some(picked.index + 1);
                (pointer, picked.postselect)
            }
        };
        let postselected = rng.random::<f64>() < postselect;
        TrialRecord {
            trial_index: trial,
            outcome_label: outcome.label.clone(),
            pointer_branch,
            postselected,
        }
    }
}

/// Index of the first bucket whose cumulative weight exceeds `u`, falling
/// back to the last positive-weight bucket against float undershoot.
/// Zero-weight buckets have empty intervals and are never selected.
fn pick_cumulative(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut fallback = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            fallback = i;
            cumulative += w;
            if u < cumulative {
                return i;
            }
        }
    }
    fallback
}

/// Samples a single trial; randomness is a pure function of (seed, trial).
pub fn sample_trajectory(
    ensemble: &PrePostEnsemble,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    Ok(SamplingPlan::new(ensemble)?.sample(seed, trial))
}

/// Samples trials 0..trials. The parallel path partitions work across
/// threads but produces byte-identical records to the serial path because
/// every trial owns its RNG stream.
pub fn sample_trials(
    ensemble: &PrePostEnsemble,
    trials: u64,
    seed: u64,
    parallel: bool,
) -> Result<Vec<TrialRecord>> {
    let plan = SamplingPlan::new(ensemble)?;
    let records = if parallel {
        (0..trials)
            .into_par_iter()
            .map(|t| plan.sample(seed, t))
            .collect()
    } else {
        (0..trials).map(|t| plan.sample(seed, t)).collect()
    };
    Ok(records)
}

/// Empirical conditional distribution over post-selected records.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub labels: Vec<String>,
    /// Per-label frequency among post-selected records.
    pub freqs: Vec<f64>,
    /// Binomial standard error sqrt(p(1-p)/m), m = post-selected count.
    pub stderrs: Vec<f64>,
    pub total_trials: u64,
    pub postselected: u64,
    pub postselection_rate: f64,
}

/// Per-label frequencies among post-selected records, with standard errors.
/// Label order is taken from the caller so that reports stay stable.
pub fn estimate_conditional(
    records: &[TrialRecord],
    labels: &[String],
) -> Result<EmpiricalDistribution> {
    let mut counts = vec![0u64; labels.len()];
    let mut postselected = 0u64;
    for record in records {
        if !record.postselected {
            continue;
        }
        let idx = labels
            .iter()
            .position(|l| l == &record.outcome_label)
            .ok_or_else(|| Error::UnknownLabel {
                label: record.outcome_label.clone(),
            })?;
        counts[idx] += 1;
        postselected += 1;
    }
    if postselected == 0 {
        return Err(Error::InsufficientData);
    }
    let m = postselected as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    let stderrs = freqs.iter().map(|p| (p * (1.0 - p) / m).sqrt()).collect();
    Ok(EmpiricalDistribution {
        labels: labels.to_vec(),
        freqs,
        stderrs,
        total_trials: records.len() as u64,
        postselected,
        postselection_rate: postselected as f64 / records.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Projector, StateVector};
    use crate::measurement::ProjectiveMeasurement;
    use crate::nbox::NBoxScenario;
    use approx::assert_abs_diff_eq;

    fn open_box(dim: usize, i: usize) -> ProjectiveMeasurement {
        let p = Projector::onto_basis_state(dim, i).unwrap();
        let q = p.complement();
        ProjectiveMeasurement::new(
            vec![p, q],
            vec![format!("box-{}", i + 1), format!("not-box-{}", i + 1)],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_chain_always_postselects() {
        let e1 = StateVector::basis(3, 0).unwrap();
        let ensemble = PrePostEnsemble::new(
            e1.clone(),
            e1,
            open_box(3, 0),
            UpdateSemantics::pure(),
        )
        .unwrap();
        for trial in 0..50 {
            let r = sample_trajectory(&ensemble, 1, trial).unwrap();
            assert_eq!(r.outcome_label, "box-1");
            assert!(r.postselected);
            assert_eq!(r.pointer_branch, None);
        }
    }

    #[test]
    fn orthogonal_postselection_never_succeeds() {
        let ensemble = PrePostEnsemble::new(
            StateVector::basis(3, 0).unwrap(),
            StateVector::basis(3, 1).unwrap(),
            open_box(3, 0),
            UpdateSemantics::pure(),
        )
        .unwrap();
        for trial in 0..50 {
            let r = sample_trajectory(&ensemble, 99, trial).unwrap();
            assert_eq!(r.outcome_label, "box-1");
            assert!(!r.postselected);
        }
    }

    #[test]
    fn pure_paradox_postselects_only_the_opened_box() {
        let s = NBoxScenario::new(2).unwrap();
        let ensemble = s
            .ensemble(s.open_box_measurement(1).unwrap(), UpdateSemantics::pure())
            .unwrap();
        let records = sample_trials(&ensemble, 5_000, 7, false).unwrap();
        let postselected: Vec<_> = records.iter().filter(|r| r.postselected).collect();
        assert!(!postselected.is_empty());
        assert!(postselected.iter().all(|r| r.outcome_label == "box-1"));
    }

    #[test]
    fn mixture_records_pointer_branch_only_on_composite_outcomes() {
        let s = NBoxScenario::new(2).unwrap();
        let ensemble = s
            .ensemble(
                s.open_box_measurement(1).unwrap(),
                UpdateSemantics::box_basis_mixture(3).unwrap(),
            )
            .unwrap();
        let records = sample_trials(&ensemble, 2_000, 11, false).unwrap();
        for r in &records {
            match r.outcome_label.as_str() {
                "box-1" => assert_eq!(r.pointer_branch, None),
                "not-box-1" => {
                    let b = r.pointer_branch.expect("composite outcome records branch");
                    assert!(b == 2 || b == 3, "branch {b} outside the unopened boxes");
                }
                other => panic!("unexpected label {other}"),
            }
        }
    }

    #[test]
    fn serial_and_parallel_sampling_agree() {
        let s = NBoxScenario::new(3).unwrap();
        let ensemble = s
            .ensemble(
                s.open_box_measurement(2).unwrap(),
                UpdateSemantics::box_basis_mixture(4).unwrap(),
            )
            .unwrap();
        let serial = sample_trials(&ensemble, 4_096, 42, false).unwrap();
        let parallel = sample_trials(&ensemble, 4_096, 42, true).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn trial_subsets_reproduce_independently() {
        let s = NBoxScenario::new(2).unwrap();
        let ensemble = s
            .ensemble(s.open_box_measurement(1).unwrap(), UpdateSemantics::pure())
            .unwrap();
        let all = sample_trials(&ensemble, 100, 5, true).unwrap();
        for t in [0u64, 17, 63, 99] {
            let single = sample_trajectory(&ensemble, 5, t).unwrap();
            assert_eq!(single, all[t as usize]);
        }
    }

    #[test]
    fn estimate_counts_postselected_records() {
        let records = vec![
            TrialRecord {
                trial_index: 0,
                outcome_label: "box-1".into(),
                pointer_branch: None,
                postselected: true,
            },
            TrialRecord {
                trial_index: 1,
                outcome_label: "not-box-1".into(),
                pointer_branch: None,
                postselected: true,
            },
            TrialRecord {
                trial_index: 2,
                outcome_label: "box-1".into(),
                pointer_branch: None,
                postselected: false,
            },
        ];
        let labels = vec!["box-1".to_string(), "not-box-1".to_string()];
        let est = estimate_conditional(&records, &labels).unwrap();
        assert_abs_diff_eq!(est.freqs[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(est.freqs[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(est.postselection_rate, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(est.postselected, 2);
    }

    #[test]
    fn estimate_with_single_label_has_zero_stderr() {
        let records = vec![
            TrialRecord {
                trial_index: 0,
                outcome_label: "box-1".into(),
                pointer_branch: None,
                postselected: true,
            };
            10
        ];
        let labels = vec!["box-1".to_string(), "not-box-1".to_string()];
        let est = estimate_conditional(&records, &labels).unwrap();
        assert_eq!(est.freqs[0], 1.0);
        assert_eq!(est.stderrs[0], 0.0);
        assert_eq!(est.stderrs[1], 0.0);
    }

    #[test]
    fn estimate_requires_postselected_records() {
        let records = vec![TrialRecord {
            trial_index: 0,
            outcome_label: "box-1".into(),
            pointer_branch: None,
            postselected: false,
        }];
        let labels = vec!["box-1".to_string()];
        assert!(matches!(
            estimate_conditional(&records, &labels),
            Err(Error::InsufficientData)
        ));
    }

    #[test]
    fn mixture_estimate_converges_to_analytic_value() {
        // 20k trials keeps this quick; the acceptance suite runs 100k.
        let s = NBoxScenario::new(2).unwrap();
        let ensemble = s
            .ensemble(
                s.open_box_measurement(1).unwrap(),
                UpdateSemantics::box_basis_mixture(3).unwrap(),
            )
            .unwrap();
        let records = sample_trials(&ensemble, 20_000, 1313, true).unwrap();
        let est = estimate_conditional(&records, ensemble.measurement().labels()).unwrap();
        let expected = 1.0 / 3.0;
        let dev = (est.freqs[0] - expected).abs();
        assert!(
            dev <= 4.0 * est.stderrs[0] + 1e-9,
            "deviation {dev} exceeds 4 standard errors {}",
            est.stderrs[0]
        );
    }
}
