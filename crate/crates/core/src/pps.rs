//! Pre- and post-selection conditioning.
//!
//! An ensemble is prepared in `initial`, subjected to one intermediate
//! projective measurement, and finally filtered on a measurement that
//! projects onto `final`. Statistics are reported for the surviving
//! sub-ensemble. The joint probability of (intermediate outcome k,
//! successful post-selection) multiplies the Born weight of k by the
//! updated state's fidelity to the final state — where "updated state"
//! depends on the chosen [`UpdateSemantics`].

use crate::error::{Error, Result};
use crate::hilbert::{inner_product, StateVector};
use crate::measurement::{
    branch_weight, clamp_probability, lueders_update, mixture_update, DensityMatrix,
    ProjectiveMeasurement, UpdateSemantics,
};
use crate::tolerances::ZERO_PROBABILITY_TOL;

/// Initial state, final state, one intermediate measurement, and the update
/// semantics used for its outcomes.
#[derive(Debug, Clone)]
pub struct PrePostEnsemble {
    initial: StateVector,
    final_state: StateVector,
    measurement: ProjectiveMeasurement,
    semantics: UpdateSemantics,
}

impl PrePostEnsemble {
    pub fn new(
        initial: StateVector,
        final_state: StateVector,
        measurement: ProjectiveMeasurement,
        semantics: UpdateSemantics,
    ) -> Result<Self> {
        let dim = initial.dim();
        if final_state.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: final_state.dim(),
            });
        }
        if measurement.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: measurement.dim(),
            });
        }
        if let UpdateSemantics::ClassicalMixture(basis) = &semantics {
            if basis.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: basis.dim(),
                });
            }
        }
        Ok(Self {
            initial,
            final_state,
            measurement,
            semantics,
        })
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn final_state(&self) -> &StateVector {
        &self.final_state
    }

    pub fn measurement(&self) -> &ProjectiveMeasurement {
        &self.measurement
    }

    pub fn semantics(&self) -> &UpdateSemantics {
        &self.semantics
    }
}

/// Post-measurement state under either semantics.
#[derive(Debug, Clone)]
pub enum PostState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

/// Probability that the final measurement projects the given state onto
/// `final_state`: |⟨final|ψ⟩|² or ⟨final|ρ|final⟩, clamped to [0, 1].
pub fn postselect_probability(state: &PostState, final_state: &StateVector) -> Result<f64> {
    let raw = match state {
        PostState::Pure(psi) => inner_product(final_state, psi)?.norm_sqr(),
        PostState::Mixed(rho) => rho.expectation(final_state)?,
    };
    Ok(clamp_probability(raw))
}

/// Born weight and updated state for one outcome; `None` when the outcome
/// has no probability of occurring (there is then no state to update).
fn outcome_branch(e: &PrePostEnsemble, outcome: usize) -> Result<Option<(f64, PostState)>> {
    let projector = e.measurement.projector(outcome);
    let weight = branch_weight(projector, &e.initial)?;
    if weight < ZERO_PROBABILITY_TOL {
        return Ok(None);
    }
    let post = match &e.semantics {
        UpdateSemantics::PureProjection => {
            let (state, _) = lueders_update(&e.initial, projector)?;
            PostState::Pure(state)
        }
        UpdateSemantics::ClassicalMixture(basis) => {
            let out = mixture_update(&e.initial, projector, basis)?;
            PostState::Mixed(out.density)
        }
    };
    Ok(Some((clamp_probability(weight), post)))
}

/// P(outcome ∧ post-selection succeeds) for a labelled outcome.
pub fn joint_probability(e: &PrePostEnsemble, outcome_label: &str) -> Result<f64> {
    let outcome = e.measurement.outcome_index(outcome_label)?;
    joint_probability_by_index(e, outcome)
}

fn joint_probability_by_index(e: &PrePostEnsemble, outcome: usize) -> Result<f64> {
    match outcome_branch(e, outcome)? {
        None => Ok(0.0),
        Some((weight, post)) => {
            let fidelity = postselect_probability(&post, &e.final_state)?;
            Ok(clamp_probability(weight * fidelity))
        }
    }
}

/// Conditional outcome statistics given successful post-selection.
#[derive(Debug, Clone)]
pub struct ConditionalDistribution {
    pub labels: Vec<String>,
    pub conditional_probs: Vec<f64>,
    pub joint_probs: Vec<f64>,
    /// Σ over outcomes of the joint probability.
    pub postselection_rate: f64,
}

impl ConditionalDistribution {
    pub fn conditional_of(&self, label: &str) -> Result<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.conditional_probs[i])
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
            })
    }
}

/// Conditions every outcome on post-selection: P(k | post) = joint(k) / rate.
pub fn conditional_distribution(e: &PrePostEnsemble) -> Result<ConditionalDistribution> {
    let joint_probs = (0..e.measurement.len())
        .map(|k| joint_probability_by_index(e, k))
        .collect::<Result<Vec<_>>>()?;
    let postselection_rate: f64 = joint_probs.iter().sum();
    if postselection_rate < ZERO_PROBABILITY_TOL {
        return Err(Error::PostselectionImpossible {
            total: postselection_rate,
        });
    }
    let conditional_probs = joint_probs
        .iter()
        .map(|j| clamp_probability(j / postselection_rate))
        .collect();
    Ok(ConditionalDistribution {
        labels: e.measurement.labels().to_vec(),
        conditional_probs,
        joint_probs,
        postselection_rate,
    })
}

/// The literal unweighted sum Σ_{j≠i} |⟨j|final⟩|² over box amplitudes of
/// the final state, excluding 1-based box `excluded_box`.
///
/// This is the naive "sum of per-box projection probabilities" reading; it
/// ignores how likely each box was to begin with. Reported alongside the
/// weighted conditioning for comparison.
pub fn raw_eq9_sum(final_state: &StateVector, excluded_box: usize) -> Result<f64> {
    let dim = final_state.dim();
    if excluded_box == 0 || excluded_box > dim {
        return Err(Error::IndexOutOfRange {
            index: excluded_box,
            min: 1,
            max: dim,
        });
    }
    let sum = final_state
        .amps()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != excluded_box - 1)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Projector, RawVector};
    use crate::tolerances::CONSTRUCTION_TOL;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn uniform_state(dim: usize) -> StateVector {
        let a = 1.0 / (dim as f64).sqrt();
        StateVector::new(vec![c(a, 0.0); dim]).unwrap()
    }

    /// Final state (1, …, 1, -(n-1)) / sqrt(n² - n + 1) in dimension n + 1.
    fn paradox_final(n: usize) -> StateVector {
        let norm = ((n * n - n + 1) as f64).sqrt();
        let mut amps = vec![c(1.0 / norm, 0.0); n + 1];
        amps[n] = c(-((n - 1) as f64) / norm, 0.0);
        StateVector::new(amps).unwrap()
    }

    fn open_box(dim: usize, i: usize) -> ProjectiveMeasurement {
        let p = Projector::onto_basis_state(dim, i).unwrap();
        let q = p.complement();
        ProjectiveMeasurement::new(
            vec![p, q],
            vec![format!("box-{}", i + 1), format!("not-box-{}", i + 1)],
        )
        .unwrap()
    }

    fn all_boxes(dim: usize) -> ProjectiveMeasurement {
        let projectors = (0..dim)
            .map(|i| Projector::onto_basis_state(dim, i).unwrap())
            .collect();
        let labels = (0..dim).map(|i| format!("box-{}", i + 1)).collect();
        ProjectiveMeasurement::new(projectors, labels).unwrap()
    }

    fn paradox_ensemble(n: usize, i: usize, semantics: UpdateSemantics) -> PrePostEnsemble {
        PrePostEnsemble::new(
            uniform_state(n + 1),
            paradox_final(n),
            open_box(n + 1, i),
            semantics,
        )
        .unwrap()
    }

    #[test]
    fn pure_joint_for_complement_outcome_vanishes() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::pure());
        let joint = joint_probability(&e, "not-box-1").unwrap();
        assert_abs_diff_eq!(joint, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pure_joint_for_opened_box() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::pure());
        let joint = joint_probability(&e, "box-1").unwrap();
        assert_abs_diff_eq!(joint, 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn mixture_joint_for_complement_outcome() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::box_basis_mixture(3).unwrap());
        let joint = joint_probability(&e, "not-box-1").unwrap();
        assert_abs_diff_eq!(joint, 2.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn joint_probability_rejects_unknown_label() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::pure());
        assert!(matches!(
            joint_probability(&e, "box-7"),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn pure_conditioning_is_certain() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::pure());
        let dist = conditional_distribution(&e).unwrap();
        assert_abs_diff_eq!(dist.conditional_of("box-1").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.conditional_of("not-box-1").unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.postselection_rate, 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn mixture_conditioning_corrects_the_certainty() {
        let e = paradox_ensemble(2, 0, UpdateSemantics::box_basis_mixture(3).unwrap());
        let dist = conditional_distribution(&e).unwrap();
        assert_abs_diff_eq!(dist.conditional_of("box-1").unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            dist.conditional_of("not-box-1").unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn all_boxes_conditioning_weights_the_last_box() {
        // Weights |⟨final|j⟩⟨j|initial⟩|² ∝ (1, 1, 1, 4) at four boxes.
        let e = PrePostEnsemble::new(
            uniform_state(4),
            paradox_final(3),
            all_boxes(4),
            UpdateSemantics::pure(),
        )
        .unwrap();
        let dist = conditional_distribution(&e).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(dist.conditional_probs[j], 1.0 / 7.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(dist.conditional_probs[3], 4.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn conditioning_requires_possible_postselection() {
        let e = PrePostEnsemble::new(
            StateVector::basis(3, 0).unwrap(),
            StateVector::basis(3, 1).unwrap(),
            open_box(3, 0),
            UpdateSemantics::pure(),
        )
        .unwrap();
        assert!(matches!(
            conditional_distribution(&e),
            Err(Error::PostselectionImpossible { .. })
        ));
    }

    #[test]
    fn postselect_probability_on_residual_state() {
        let residual = StateVector::new(vec![
            c(0.0, 0.0),
            c(1.0 / 2.0_f64.sqrt(), 0.0),
            c(1.0 / 2.0_f64.sqrt(), 0.0),
        ])
        .unwrap();
        let p = postselect_probability(&PostState::Pure(residual), &paradox_final(2)).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn postselect_probability_on_residual_mixture() {
        let rho = DensityMatrix::from_weighted_states(
            &[0.5, 0.5],
            &[
                StateVector::basis(3, 1).unwrap(),
                StateVector::basis(3, 2).unwrap(),
            ],
        )
        .unwrap();
        let p = postselect_probability(&PostState::Mixed(rho), &paradox_final(2)).unwrap();
        assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn postselect_probability_of_state_with_itself() {
        let f = paradox_final(2);
        let p = postselect_probability(&PostState::Pure(f.clone()), &f).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn raw_eq9_sum_for_three_boxes() {
        assert_abs_diff_eq!(
            raw_eq9_sum(&paradox_final(2), 1).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            raw_eq9_sum(&paradox_final(2), 3).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn raw_eq9_sum_for_four_boxes() {
        assert_abs_diff_eq!(
            raw_eq9_sum(&paradox_final(3), 1).unwrap(),
            6.0 / 7.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn raw_eq9_sum_rejects_out_of_range_index() {
        assert!(matches!(
            raw_eq9_sum(&paradox_final(2), 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            raw_eq9_sum(&paradox_final(2), 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    /// Classical enumeration over (box branch, post-selection) events,
    /// written directly from basis amplitudes. Independent of the
    /// mixture-update implementation path.
    fn enumerate_mixture_joint(
        initial: &StateVector,
        final_state: &StateVector,
        member_boxes: &[usize],
    ) -> f64 {
        member_boxes
            .iter()
            .map(|&j| initial.amps()[j].norm_sqr() * final_state.amps()[j].norm_sqr())
            .sum()
    }

    #[test]
    fn mixture_joints_match_classical_enumeration_up_to_six_boxes() {
        for n in 2..=6usize {
            let dim = n + 1;
            for i in 0..n {
                let e = paradox_ensemble(n, i, UpdateSemantics::box_basis_mixture(dim).unwrap());
                let opened = joint_probability(&e, &format!("box-{}", i + 1)).unwrap();
                let rest = joint_probability(&e, &format!("not-box-{}", i + 1)).unwrap();
                let brute_opened =
                    enumerate_mixture_joint(e.initial(), e.final_state(), &[i]);
                let others: Vec<usize> = (0..dim).filter(|&j| j != i).collect();
                let brute_rest =
                    enumerate_mixture_joint(e.initial(), e.final_state(), &others);
                assert_abs_diff_eq!(opened, brute_opened, epsilon = 1e-12);
                assert_abs_diff_eq!(rest, brute_rest, epsilon = 1e-12);
            }
        }
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
            "norm too small",
            |pairs| {
                let amps: Vec<Complex64> = pairs.into_iter().map(|(re, im)| c(re, im)).collect();
                RawVector::new(amps).unwrap().normalized().ok()
            },
        )
    }

    fn rotate(state: &StateVector, theta: f64) -> StateVector {
        let phase = Complex64::from_polar(1.0, theta);
        StateVector::new(state.amps().iter().map(|a| a * phase).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn joints_are_invariant_under_global_phases(
            initial in arb_state(3),
            final_state in arb_state(3),
            theta in 0.0f64..std::f64::consts::TAU,
            phi in 0.0f64..std::f64::consts::TAU,
            i in 0usize..3,
        ) {
            for semantics in [
                UpdateSemantics::pure(),
                UpdateSemantics::box_basis_mixture(3).unwrap(),
            ] {
                let base = PrePostEnsemble::new(
                    initial.clone(),
                    final_state.clone(),
                    open_box(3, i),
                    semantics.clone(),
                )
                .unwrap();
                let shifted = PrePostEnsemble::new(
                    rotate(&initial, theta),
                    rotate(&final_state, phi),
                    open_box(3, i),
                    semantics,
                )
                .unwrap();
                for label in base.measurement().labels().to_vec() {
                    let a = joint_probability(&base, &label).unwrap();
                    let b = joint_probability(&shifted, &label).unwrap();
                    prop_assert!((a - b).abs() <= 1e-12, "{label}: {a} vs {b}");
                }
            }
        }

        #[test]
        fn postselection_rate_is_sum_of_joints(
            initial in arb_state(4),
            final_state in arb_state(4),
            i in 0usize..4,
        ) {
            let e = PrePostEnsemble::new(initial, final_state, open_box(4, i), UpdateSemantics::pure()).unwrap();
            match conditional_distribution(&e) {
                Ok(dist) => {
                    let total: f64 = dist.joint_probs.iter().sum();
                    prop_assert!((dist.postselection_rate - total).abs() <= 1e-12);
                    let cond_total: f64 = dist.conditional_probs.iter().sum();
                    prop_assert!((cond_total - 1.0).abs() <= CONSTRUCTION_TOL);
                }
                Err(Error::PostselectionImpossible { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }

        #[test]
        fn semantics_agree_on_rank_one_outcomes(
            initial in arb_state(4),
            final_state in arb_state(4),
            i in 0usize..4,
        ) {
            // The opened-box branch has a single pointer state, so coherence
            // cannot matter there.
            let label = format!("box-{}", i + 1);
            let pure = PrePostEnsemble::new(
                initial.clone(),
                final_state.clone(),
                open_box(4, i),
                UpdateSemantics::pure(),
            )
            .unwrap();
            let mixed = PrePostEnsemble::new(
                initial,
                final_state,
                open_box(4, i),
                UpdateSemantics::box_basis_mixture(4).unwrap(),
            )
            .unwrap();
            let a = joint_probability(&pure, &label).unwrap();
            let b = joint_probability(&mixed, &label).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}
