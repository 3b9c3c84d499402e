//! Projective measurements and the two competing state-update semantics.
//!
//! A [`ProjectiveMeasurement`] is a complete family of pairwise-orthogonal
//! projectors with stable outcome labels. Outcome statistics follow the Born
//! rule. After a degenerate outcome the state can be updated two ways:
//!
//! * [`lueders_update`]: pure projection, `|ψ⟩ → P|ψ⟩ / ‖P|ψ⟩‖`. The
//!   alternatives inside the degenerate subspace stay coherent.
//! * [`mixture_update`]: the branches are treated as distinguishable records
//!   relative to a designated pointer basis, leaving the classical
//!   probability-weighted mixture of pointer states instead.
//!
//! The two agree on outcome probabilities but not on the post-measurement
//! state, which is the entire point of contrasting them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{commutator_norm, Operator, Projector, StateVector};
use crate::tolerances::{
    CONSTRUCTION_TOL, EXACT_ALGEBRA_TOL, NEGATIVITY_ALLOWANCE, ZERO_PROBABILITY_TOL,
};

/// Clamps float dust off a probability. Anything more negative than the
/// allowance is a logic error, not noise.
pub(crate) fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        p >= -NEGATIVITY_ALLOWANCE && p <= 1.0 + NEGATIVITY_ALLOWANCE,
        "probability {p} outside tolerance band"
    );
    p.clamp(0.0, 1.0)
}

/// A complete family of pairwise-orthogonal projectors with outcome labels.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    projectors: Vec<Projector>,
    labels: Vec<String>,
}

impl ProjectiveMeasurement {
    /// Validates completeness, pairwise orthogonality, and label uniqueness.
    pub fn new(projectors: Vec<Projector>, labels: Vec<String>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidMeasurement {
                reason: "no projectors".into(),
            });
        }
        if projectors.len() != labels.len() {
            return Err(Error::InvalidMeasurement {
                reason: format!(
                    "{} projectors but {} labels",
                    projectors.len(),
                    labels.len()
                ),
            });
        }
        let dim = projectors[0].dim();
        for p in &projectors {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidMeasurement {
                    reason: format!("duplicate outcome label {a:?}"),
                });
            }
        }
        let diag = validate_measurement(dim, &projectors)?;
        if diag.completeness_defect > CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!(
                    "projectors do not sum to the identity (defect {:.3e})",
                    diag.completeness_defect
                ),
            });
        }
        if diag.orthogonality_defect > CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!(
                    "projectors are not pairwise orthogonal (defect {:.3e})",
                    diag.orthogonality_defect
                ),
            });
        }
        Ok(Self { projectors, labels })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn projector(&self, outcome: usize) -> &Projector {
        &self.projectors[outcome]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, outcome: usize) -> &str {
        &self.labels[outcome]
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
            })
    }
}

/// Numerical health report for a would-be measurement family.
#[derive(Debug, Clone)]
pub struct MeasurementDiagnostics {
    /// ‖ΣP − I‖_max.
    pub completeness_defect: f64,
    /// max over pairs of ‖P_a P_b‖_max.
    pub orthogonality_defect: f64,
    /// ‖P² − P‖_max per projector.
    pub idempotence_defects: Vec<f64>,
}

impl MeasurementDiagnostics {
    pub fn max_idempotence_defect(&self) -> f64 {
        self.idempotence_defects.iter().copied().fold(0.0, f64::max)
    }
}

/// Measures how far a projector family is from a complete orthogonal
/// measurement. Purely diagnostic; never fails on bad families.
pub fn validate_measurement(
    dim: usize,
    projectors: &[Projector],
) -> Result<MeasurementDiagnostics> {
    let mut sum = Operator::zeros(dim)?;
    for p in projectors {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: p.dim(),
            });
        }
        sum = sum.add(p.operator())?;
    }
    let completeness_defect = sum.sub(&Operator::identity(dim)?)?.max_abs_entry();

    let mut orthogonality_defect = 0.0f64;
    for (i, a) in projectors.iter().enumerate() {
        for b in &projectors[i + 1..] {
            // ‖(P_a P_b)†‖ = ‖P_b P_a‖ for Hermitian factors, so one order
            // per pair suffices.
            let cross = a.operator().mul(b.operator())?.max_abs_entry();
            orthogonality_defect = orthogonality_defect.max(cross);
        }
    }

    let idempotence_defects = projectors.iter().map(Projector::idempotence_defect).collect();

    Ok(MeasurementDiagnostics {
        completeness_defect,
        orthogonality_defect,
        idempotence_defects,
    })
}

/// An orthonormal basis singling out which records count as distinguishable.
#[derive(Debug, Clone)]
pub struct PointerBasis {
    vectors: Vec<StateVector>,
}

impl PointerBasis {
    /// The basis must be orthonormal within 1e-9 and span the full space.
    pub fn new(vectors: Vec<StateVector>) -> Result<Self> {
        let dim = match vectors.first() {
            Some(v) => v.dim(),
            None => {
                return Err(Error::InvalidMeasurement {
                    reason: "pointer basis is empty".into(),
                })
            }
        };
        if vectors.len() != dim {
            return Err(Error::InvalidMeasurement {
                reason: format!("pointer basis has {} vectors in dimension {dim}", vectors.len()),
            });
        }
        for (i, a) in vectors.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: a.dim(),
                });
            }
            for b in &vectors[..i] {
                let overlap = crate::hilbert::inner_product(b, a)?;
                if overlap.norm() > CONSTRUCTION_TOL {
                    return Err(Error::InvalidMeasurement {
                        reason: format!("pointer basis is not orthogonal (overlap {:.3e})", overlap.norm()),
                    });
                }
            }
        }
        Ok(Self { vectors })
    }

    /// The box basis itself: the canonical choice of distinguishing records.
    pub fn computational(dim: usize) -> Result<Self> {
        let vectors = (0..dim)
            .map(|i| StateVector::basis(dim, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }
}

/// How a degenerate outcome updates the state.
#[derive(Debug, Clone)]
pub enum UpdateSemantics {
    /// Pure projection: the state maps to `P|ψ⟩` renormalized.
    PureProjection,
    /// Distinguishable branches: the state maps to the probability-weighted
    /// mixture of pointer-basis states inside the outcome subspace.
    ClassicalMixture(PointerBasis),
}

impl UpdateSemantics {
    pub fn pure() -> Self {
        UpdateSemantics::PureProjection
    }

    /// Mixture semantics with the box basis as the distinguishing record.
    pub fn box_basis_mixture(dim: usize) -> Result<Self> {
        Ok(UpdateSemantics::ClassicalMixture(PointerBasis::computational(dim)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpdateSemantics::PureProjection => "pure",
            UpdateSemantics::ClassicalMixture(_) => "mixture",
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validates hermiticity (1e-12), unit trace (1e-9), and positive
    /// semidefiniteness via a Cholesky factorization with an eigenvalue
    /// slack of 1e-9.
    pub fn try_new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > EXACT_ALGEBRA_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!("density matrix hermiticity defect {herm:.3e}"),
            });
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > CONSTRUCTION_TOL || trace.im.abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!("density matrix trace {trace} is not 1"),
            });
        }
        if !cholesky_psd_with_slack(&op, CONSTRUCTION_TOL) {
            return Err(Error::InvalidMeasurement {
                reason: "density matrix is not positive semidefinite".into(),
            });
        }
        Ok(Self { op })
    }

    /// |ψ⟩⟨ψ| for a unit vector.
    pub fn from_pure(psi: &StateVector) -> Self {
        let op = Operator::outer(psi.amps(), psi.amps()).expect("same dim");
        Self { op }
    }

    /// Σ wᵢ |bᵢ⟩⟨bᵢ| for non-negative weights; rescaled to unit trace.
    pub fn from_weighted_states(weights: &[f64], states: &[StateVector]) -> Result<Self> {
        if weights.len() != states.len() || weights.is_empty() {
            return Err(Error::InvalidMeasurement {
                reason: "weights and states must be non-empty and equal length".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if total < ZERO_PROBABILITY_TOL {
            return Err(Error::ZeroProbabilityOutcome { probability: total });
        }
        let dim = states[0].dim();
        let mut op = Operator::zeros(dim)?;
        for (w, s) in weights.iter().zip(states) {
            if *w < -NEGATIVITY_ALLOWANCE {
                return Err(Error::InvalidMeasurement {
                    reason: format!("negative mixture weight {w}"),
                });
            }
            let outer = Operator::outer(s.amps(), s.amps())?;
            op = op.add(&outer.scale(Complex64::new(w / total, 0.0)))?;
        }
        Ok(Self { op })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    /// ⟨φ|ρ|φ⟩, real by hermiticity.
    pub fn expectation(&self, phi: &StateVector) -> Result<f64> {
        let applied = self.op.apply(phi)?;
        let value: Complex64 = phi
            .amps()
            .iter()
            .zip(applied.amps())
            .map(|(p, a)| p.conj() * a)
            .sum();
        Ok(value.re)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.op.entry(i, i).re).collect()
    }
}

/// Attempts a Cholesky factorization of `op + slack·I`. Success certifies
/// every eigenvalue of `op` is at least `-slack` (up to roundoff), which is
/// the PSD check we need without a general eigensolver.
fn cholesky_psd_with_slack(op: &Operator, slack: f64) -> bool {
    let d = op.dim();
    let mut a: Vec<Complex64> = (0..d * d)
        .map(|idx| {
            let (r, c) = (idx / d, idx % d);
            let mut v = op.entry(r, c);
            if r == c {
                v += Complex64::new(slack, 0.0);
            }
            v
        })
        .collect();
    for k in 0..d {
        let mut pivot = a[k * d + k].re;
        for j in 0..k {
            pivot -= a[k * d + j].norm_sqr();
        }
        if pivot < -NEGATIVITY_ALLOWANCE {
            return false;
        }
        let pivot = pivot.max(0.0).sqrt();
        a[k * d + k] = Complex64::new(pivot, 0.0);
        for i in (k + 1)..d {
            let mut v = a[i * d + k];
            for j in 0..k {
                v -= a[i * d + j] * a[k * d + j].conj();
            }
            a[i * d + k] = if pivot > 0.0 {
                v / pivot
            } else if v.norm() <= CONSTRUCTION_TOL.sqrt() {
                Complex64::new(0.0, 0.0)
            } else {
                return false;
            };
        }
    }
    true
}

/// Born-rule outcome probabilities.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Probabilities must be non-negative within float noise and sum to 1
    /// within 1e-9; they are clamped to [0, 1] on construction.
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::InvalidMeasurement {
                reason: "labels and probabilities differ in length".into(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!("probabilities sum to {total}, expected 1"),
            });
        }
        for &p in &probs {
            if p < -NEGATIVITY_ALLOWANCE || p > 1.0 + NEGATIVITY_ALLOWANCE {
                return Err(Error::InvalidMeasurement {
                    reason: format!("probability {p} outside [0, 1]"),
                });
            }
        }
        let probs = probs.into_iter().map(clamp_probability).collect();
        Ok(Self { labels, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, label: &str) -> Result<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probs[i])
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
            })
    }
}

/// Born weight of one projector on a pure state: ‖P|ψ⟩‖².
///
/// Shared by [`born_distribution`] and [`lueders_update`] so that
/// distribution entries and update probabilities are bit-identical.
pub(crate) fn branch_weight(p: &Projector, psi: &StateVector) -> Result<f64> {
    Ok(p.apply(psi)?.norm_sqr())
}

/// Outcome distribution of a measurement on a pure state.
pub fn born_distribution(
    state: &StateVector,
    m: &ProjectiveMeasurement,
) -> Result<OutcomeDistribution> {
    if state.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: m.dim(),
        });
    }
    let probs = m
        .projectors()
        .iter()
        .map(|p| branch_weight(p, state))
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::new(m.labels().to_vec(), probs)
}

/// Outcome distribution of a measurement on a mixed state: tr(ρ P_k).
pub fn born_distribution_mixed(
    rho: &DensityMatrix,
    m: &ProjectiveMeasurement,
) -> Result<OutcomeDistribution> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: m.dim(),
        });
    }
    let probs = m
        .projectors()
        .iter()
        .map(|p| Ok(crate::hilbert::trace_product(rho.operator(), p.operator())?.re))
        .collect::<Result<Vec<_>>>()?;
    OutcomeDistribution::new(m.labels().to_vec(), probs)
}

/// Pure-projection update: probability ‖P|ψ⟩‖² and the renormalized
/// projected state with its global phase fixed.
pub fn lueders_update(state: &StateVector, p: &Projector) -> Result<(StateVector, f64)> {
    let projected = p.apply(state)?;
    let probability = projected.norm_sqr();
    if probability < ZERO_PROBABILITY_TOL {
        return Err(Error::ZeroProbabilityOutcome { probability });
    }
    let updated = projected.normalized()?.canonical_phase();
    Ok((updated, clamp_probability(probability)))
}

/// Result of a classical-mixture update.
#[derive(Debug, Clone)]
pub struct MixtureOutcome {
    /// Unit-trace mixture, diagonal in the pointer basis.
    pub density: DensityMatrix,
    /// Born weight of the outcome, identical to the pure-update probability.
    pub probability: f64,
    /// Raw (unnormalized) branch weights |⟨b|ψ⟩|² per pointer-basis index.
    pub branch_weights: Vec<(usize, f64)>,
}

/// Classical-mixture update for a projector whose range is spanned by
/// pointer-basis vectors.
///
/// The branch the system actually took is a matter of classical ignorance,
/// so the post-measurement state is the weighted mixture of the pointer
/// states rather than the coherent projection.
pub fn mixture_update(
    state: &StateVector,
    p: &Projector,
    pointer_basis: &PointerBasis,
) -> Result<MixtureOutcome> {
    if state.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: p.dim(),
        });
    }
    if pointer_basis.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            left: pointer_basis.dim(),
            right: p.dim(),
        });
    }

    // Classify each pointer vector as inside the range (Pb = b), orthogonal
    // to it (Pb = 0), or neither — the last makes the classical-ignorance
    // reading ill-defined.
    let mut members = Vec::new();
    for (idx, b) in pointer_basis.vectors().iter().enumerate() {
        let pb = p.apply(b)?;
        let keep_defect = pb
            .amps()
            .iter()
            .zip(b.amps())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let kill_defect = pb.norm();
        if keep_defect <= CONSTRUCTION_TOL {
            members.push(idx);
        } else if kill_defect > CONSTRUCTION_TOL {
            return Err(Error::PointerBasis {
                defect: keep_defect.min(kill_defect),
            });
        }
    }
    if members.len() != p.rank() {
        return Err(Error::PointerBasis {
            defect: (members.len() as f64 - p.rank() as f64).abs(),
        });
    }

    let probability = branch_weight(p, state)?;
    if probability < ZERO_PROBABILITY_TOL {
        return Err(Error::ZeroProbabilityOutcome { probability });
    }

    let mut branch_weights = Vec::with_capacity(members.len());
    let mut weights = Vec::with_capacity(members.len());
    let mut states = Vec::with_capacity(members.len());
    for &idx in &members {
        let b = &pointer_basis.vectors()[idx];
        let amp = crate::hilbert::inner_product(b, state)?;
        let w = amp.norm_sqr();
        branch_weights.push((idx, w));
        weights.push(w);
        states.push(b.clone());
    }
    let density = DensityMatrix::from_weighted_states(&weights, &states)?;
    Ok(MixtureOutcome {
        density,
        probability: clamp_probability(probability),
        branch_weights,
    })
}

/// Witness that a coarse measurement is a sum-decomposition of a fine one:
/// for each coarse label, the fine labels whose projectors sum to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementWitness {
    pub partition: Vec<(String, Vec<String>)>,
}

/// Checks whether `fine` refines `coarse`, i.e. every coarse projector is a
/// sum of fine projectors. Returns the label partition when it does.
pub fn is_refinement(
    coarse: &ProjectiveMeasurement,
    fine: &ProjectiveMeasurement,
) -> Result<Option<RefinementWitness>> {
    if coarse.dim() != fine.dim() {
        return Ok(None);
    }
    // Each fine projector must live inside exactly one coarse subspace.
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); coarse.len()];
    for (j, q) in fine.projectors().iter().enumerate() {
        let mut home = None;
        for (k, p) in coarse.projectors().iter().enumerate() {
            let contained = p
                .operator()
                .mul(q.operator())?
                .sub(q.operator())?
                .max_abs_entry()
                <= CONSTRUCTION_TOL;
            if contained {
                home = Some(k);
                break;
            }
        }
        match home {
            Some(k) => assignment[k].push(j),
            None => return Ok(None),
        }
    }
    // The assigned fine projectors must reproduce each coarse projector.
    for (k, p) in coarse.projectors().iter().enumerate() {
        let mut sum = Operator::zeros(coarse.dim())?;
        for &j in &assignment[k] {
            sum = sum.add(fine.projector(j).operator())?;
        }
        if sum.sub(p.operator())?.max_abs_entry() > CONSTRUCTION_TOL {
            return Ok(None);
        }
    }
    let partition = assignment
        .into_iter()
        .enumerate()
        .map(|(k, js)| {
            (
                coarse.label(k).to_string(),
                js.into_iter().map(|j| fine.label(j).to_string()).collect(),
            )
        })
        .collect();
    Ok(Some(RefinementWitness { partition }))
}

/// True when every projector of one family commutes with every projector of
/// the other. Families on different spaces are never compatible.
pub fn are_compatible(m1: &ProjectiveMeasurement, m2: &ProjectiveMeasurement) -> Result<bool> {
    if m1.dim() != m2.dim() {
        return Ok(false);
    }
    Ok(max_cross_commutator(m1, m2)? <= CONSTRUCTION_TOL)
}

/// Largest commutator norm across the two families.
pub fn max_cross_commutator(
    m1: &ProjectiveMeasurement,
    m2: &ProjectiveMeasurement,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in m1.projectors() {
        for q in m2.projectors() {
            worst = worst.max(commutator_norm(p.operator(), q.operator())?);
        }
    }
    Ok(worst)
}
