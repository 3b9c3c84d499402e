//! The N-box scenario: prescribed states, the three measurement families,
//! residual states, and the certainty analysis under both update semantics.
//!
//! A system with N+1 basis states ("boxes") starts in the uniform
//! superposition and is post-selected on a final state that weights the
//! last box by -(N-1). Opening any single box i ≤ N and conditioning on
//! post-selection then finds the record in box i with certainty — provided
//! the unopened boxes are treated as indistinguishable (pure projection).
//! If they are distinguishable records instead (classical mixture over the
//! box basis), the certainty drops to 1/(N² - N + 1).
//!
//! Box indices are 1-based throughout this module's interface.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{projector_from_span, Operator, Projector, RawVector, StateVector};
use crate::measurement::{
    are_compatible, is_refinement, max_cross_commutator, DensityMatrix, ProjectiveMeasurement,
    UpdateSemantics,
};
use crate::pps::{conditional_distribution, PrePostEnsemble};
use crate::tolerances::DIM_LIMIT;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// An N-box arrangement on an (N+1)-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NBoxScenario {
    n: usize,
}

impl NBoxScenario {
    /// N must be at least 2: with a single box the final state degenerates
    /// and the arrangement loses its structure.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::IndexOutOfRange {
                index: n,
                min: 2,
                max: DIM_LIMIT - 1,
            });
        }
        if n + 1 > DIM_LIMIT {
            return Err(Error::DimensionBounds {
                dim: n + 1,
                limit: DIM_LIMIT,
            });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Uniform superposition over all N+1 boxes.
    pub fn initial_state(&self) -> StateVector {
        let amp = real(1.0 / (self.dim() as f64).sqrt());
        StateVector::new(vec![amp; self.dim()]).expect("unit norm by construction")
    }

    /// (|1⟩ + … + |N⟩ - (N-1)|N+1⟩) / sqrt(N² - N + 1).
    pub fn final_state(&self) -> StateVector {
        let n = self.n as f64;
        let norm = (n * n - n + 1.0).sqrt();
        let mut amps = vec![real(1.0 / norm); self.dim()];
        amps[self.n] = real(-(n - 1.0) / norm);
        StateVector::new(amps).expect("unit norm by construction")
    }

    /// 1-based index validated against 1..=max, returned 0-based.
    fn box_index(&self, i: usize, max: usize) -> Result<usize> {
        if i == 0 || i > max {
            return Err(Error::IndexOutOfRange {
                index: i,
                min: 1,
                max,
            });
        }
        Ok(i - 1)
    }

    fn open_box_impl(&self, idx: usize, excluded: bool) -> ProjectiveMeasurement {
        let p = Projector::onto_basis_state(self.dim(), idx).expect("index validated");
        let q = p.complement();
        let tag = if excluded { "-excluded" } else { "" };
        let labels = vec![
            format!("box-{}{tag}", idx + 1),
            format!("not-box-{}{tag}", idx + 1),
        ];
        ProjectiveMeasurement::new(vec![p, q], labels).expect("complete pair by construction")
    }

    /// "Is the particle in box i?" — the pair {|i⟩⟨i|, I - |i⟩⟨i|}.
    ///
    /// The excluded box N+1 is rejected here; the certainty claim does not
    /// extend to it. Use [`Self::open_box_measurement_force`] to explore it
    /// anyway.
    pub fn open_box_measurement(&self, i: usize) -> Result<ProjectiveMeasurement> {
        let idx = self.box_index(i, self.n)?;
        Ok(self.open_box_impl(idx, false))
    }

    /// Same pair, but permitting the excluded box i = N+1. The outcome
    /// labels carry an `-excluded` marker in that case.
    pub fn open_box_measurement_force(&self, i: usize) -> Result<ProjectiveMeasurement> {
        let idx = self.box_index(i, self.dim())?;
        Ok(self.open_box_impl(idx, i == self.dim()))
    }

    /// All boxes opened at once: the N+1 rank-1 basis projectors.
    pub fn all_boxes_measurement(&self) -> ProjectiveMeasurement {
        let projectors = (0..self.dim())
            .map(|j| Projector::onto_basis_state(self.dim(), j).expect("index in range"))
            .collect();
        let labels = (0..self.dim()).map(|j| format!("box-{}", j + 1)).collect();
        ProjectiveMeasurement::new(projectors, labels).expect("basis family is complete")
    }

    /// "Is the particle in box i, with all other boxes indistinguishable?"
    ///
    /// Three outcomes: box i itself, the equally weighted superposition of
    /// every other box, and a rank-(N-1) remainder that completes the
    /// family. The remainder is orthogonal to the uniform initial state, so
    /// it never fires in the paradox arrangement.
    pub fn indistinguishable_measurement(&self, i: usize) -> Result<ProjectiveMeasurement> {
        let idx = self.box_index(i, self.n)?;
        let dim = self.dim();
        let box_p = Projector::onto_basis_state(dim, idx)?;
        let mut uniform = vec![0.0; dim];
        for (j, u) in uniform.iter_mut().enumerate() {
            if j != idx {
                *u = 1.0;
            }
        }
        let uniform_p = projector_from_span(&[RawVector::from_real(&uniform)?])?;
        let remainder_op = Operator::identity(dim)?
            .sub(box_p.operator())?
            .sub(uniform_p.operator())?;
        let remainder = Projector::try_from_operator(remainder_op)?;
        debug_assert_eq!(remainder.rank(), self.n - 1);
        ProjectiveMeasurement::new(
            vec![box_p, uniform_p, remainder],
            vec![
                format!("box-{}", idx + 1),
                "uniform-rest".to_string(),
                "remainder".to_string(),
            ],
        )
    }

    /// The state left behind when box i is opened and found empty:
    /// (1/sqrt(N)) Σ_{j≠i} |j⟩. Orthogonal to the final state for i ≤ N.
    pub fn residual_pure_state(&self, i: usize) -> Result<StateVector> {
        let idx = self.box_index(i, self.n)?;
        Ok(self.residual_pure_impl(idx))
    }

    fn residual_pure_impl(&self, idx: usize) -> StateVector {
        let amp = real(1.0 / (self.n as f64).sqrt());
        let mut amps = vec![amp; self.dim()];
        amps[idx] = real(0.0);
        StateVector::new(amps).expect("unit norm by construction")
    }

    /// The distinguishable-boxes alternative: a uniform classical mixture
    /// over the other boxes, diag entries 1/N for j ≠ i.
    pub fn residual_mixture(&self, i: usize) -> Result<DensityMatrix> {
        let idx = self.box_index(i, self.n)?;
        Ok(self.residual_mixture_impl(idx))
    }

    /// Same mixture, permitting the excluded box i = N+1.
    pub fn residual_mixture_force(&self, i: usize) -> Result<DensityMatrix> {
        let idx = self.box_index(i, self.dim())?;
        Ok(self.residual_mixture_impl(idx))
    }

    fn residual_mixture_impl(&self, idx: usize) -> DensityMatrix {
        let states: Vec<StateVector> = (0..self.dim())
            .filter(|&j| j != idx)
            .map(|j| StateVector::basis(self.dim(), j).expect("index in range"))
            .collect();
        let weights = vec![1.0; states.len()];
        DensityMatrix::from_weighted_states(&weights, &states).expect("uniform mixture is valid")
    }

    /// Pre/post-selected ensemble with the prescribed initial and final
    /// states and the given intermediate measurement.
    pub fn ensemble(
        &self,
        measurement: ProjectiveMeasurement,
        semantics: UpdateSemantics,
    ) -> Result<PrePostEnsemble> {
        PrePostEnsemble::new(
            self.initial_state(),
            self.final_state(),
            measurement,
            semantics,
        )
    }

    /// P(record in box i | post-selection) when box i is opened.
    ///
    /// Pure projection gives 1 for every i ≤ N; the classical mixture gives
    /// 1/(N² - N + 1).
    pub fn certainty_probability(&self, i: usize, semantics: &UpdateSemantics) -> Result<f64> {
        self.box_index(i, self.n)?;
        let measurement = self.open_box_measurement(i)?;
        let label = format!("box-{i}");
        let e = self.ensemble(measurement, semantics.clone())?;
        let dist = conditional_distribution(&e)?;
        dist.conditional_of(&label)
    }

    /// The guessing game: one observer opens box `opened`, another guesses
    /// box `guess` without being told. The guess is scored as its own
    /// ensemble — "had box `guess` been opened" — which is all the
    /// counterfactual amounts to operationally.
    pub fn guessing_game(
        &self,
        opened: usize,
        guess: usize,
        semantics: &UpdateSemantics,
    ) -> Result<GuessReport> {
        let record_in_opened_prob = self.certainty_probability(opened, semantics)?;
        let guess_correct_prob = if guess == opened {
            record_in_opened_prob
        } else {
            self.certainty_probability(guess, semantics)?
        };
        Ok(GuessReport {
            opened_box: opened,
            guessed_box: guess,
            record_in_opened_prob,
            guess_correct_prob,
            semantics: semantics.clone(),
        })
    }

    /// How the two ways of lifting the open-box degeneracy relate: both
    /// refine the open-box pair, yet they are incompatible with each other.
    pub fn refinement_report(&self, i: usize) -> Result<RefinementReport> {
        self.box_index(i, self.n)?;
        let open = self.open_box_measurement(i)?;
        let all = self.all_boxes_measurement();
        let indist = self.indistinguishable_measurement(i)?;
        Ok(RefinementReport {
            box_index: i,
            all_boxes_refines_open: is_refinement(&open, &all)?.is_some(),
            indistinguishable_refines_open: is_refinement(&open, &indist)?.is_some(),
            extensions_compatible: are_compatible(&all, &indist)?,
            max_cross_commutator_norm: max_cross_commutator(&all, &indist)?,
        })
    }
}

/// Outcome of the guessing game for one (opened, guess) pair.
#[derive(Debug, Clone)]
pub struct GuessReport {
    pub opened_box: usize,
    pub guessed_box: usize,
    /// P(record in opened box | post-selection).
    pub record_in_opened_prob: f64,
    /// The same quantity for the ensemble in which the guessed box is the
    /// one opened.
    pub guess_correct_prob: f64,
    pub semantics: UpdateSemantics,
}

/// Refinement and compatibility relations around open-box(i).
#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub box_index: usize,
    pub all_boxes_refines_open: bool,
    pub indistinguishable_refines_open: bool,
    /// Whether the two refining families commute with each other.
    pub extensions_compatible: bool,
    pub max_cross_commutator_norm: f64,
}
