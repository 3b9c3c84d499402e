//! Dense complex linear algebra over a finite-dimensional Hilbert space.
//!
//! Vectors come in two roles: [`StateVector`] is always unit-norm, while
//! [`RawVector`] carries unnormalized intermediates (spans, projected
//! vectors) and never escapes an operation as a "state". Operators are
//! stored as full row-major matrices; [`Projector`] additionally tracks its
//! rank. Dimensions in play are tiny, so nothing here tries to be clever.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances::{
    CONSTRUCTION_TOL, DIM_LIMIT, EXACT_ALGEBRA_TOL, PHASE_ANCHOR_TOL, SPAN_DROP_TOL,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > DIM_LIMIT {
        return Err(Error::DimensionBounds {
            dim,
            limit: DIM_LIMIT,
        });
    }
    Ok(())
}

fn check_same_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// An unnormalized vector: span inputs, projected intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVector {
    amps: Vec<Complex64>,
}

impl RawVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        Ok(Self { amps })
    }

    /// Convenience constructor for real amplitudes.
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&re| Complex64::new(re, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. A numerically zero vector has no direction to
    /// keep, so it is rejected.
    pub fn normalized(self) -> Result<StateVector> {
        let norm = self.norm();
        if norm < SPAN_DROP_TOL {
            return Err(Error::DegenerateSpan);
        }
        let amps = self.amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { amps })
    }
}

/// A unit-norm state over the box basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes that are already unit-norm (within 1e-9).
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Basis ket `e_index` (0-based).
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                index,
                min: 0,
                max: dim - 1,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Fixes the global phase: the first amplitude with modulus above the
    /// anchor threshold is rotated to be real and positive.
    pub fn canonical_phase(mut self) -> Self {
        if let Some(anchor) = self
            .amps
            .iter()
            .find(|a| a.norm() > PHASE_ANCHOR_TOL)
            .copied()
        {
            let phase = anchor.conj() / anchor.norm();
            for a in &mut self.amps {
                *a *= phase;
            }
        }
        self
    }

    pub fn to_raw(&self) -> RawVector {
        RawVector {
            amps: self.amps.clone(),
        }
    }
}

/// Inner product with conjugation on the first argument.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(dot(&a.amps, &b.amps))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>, // row-major
}

impl Operator {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            entries: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            op.entries[i * dim + i] = ONE;
        }
        Ok(op)
    }

    /// Builds the matrix with entry `(r, c)` given by `f(r, c)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        check_dim(dim)?;
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Ok(Self { dim, entries })
    }

    /// Outer product |v⟩⟨w|.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Result<Self> {
        check_same_dim(v.len(), w.len())?;
        Self::from_fn(v.len(), |r, c| v[r] * w[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    /// Matrix-vector product; the result is intentionally unnormalized.
    pub fn apply(&self, v: &StateVector) -> Result<RawVector> {
        check_same_dim(self.dim, v.dim())?;
        Ok(self.apply_amps(&v.amps))
    }

    pub fn apply_raw(&self, v: &RawVector) -> Result<RawVector> {
        check_same_dim(self.dim, v.dim())?;
        Ok(self.apply_amps(&v.amps))
    }

    fn apply_amps(&self, amps: &[Complex64]) -> RawVector {
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for r in 0..d {
            let row = &self.entries[r * d..(r + 1) * d];
            out[r] = row.iter().zip(amps).map(|(m, a)| m * a).sum();
        }
        RawVector { amps: out }
    }

    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        check_same_dim(self.dim, rhs.dim)?;
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                // Projector rows are frequently all-zero; skipping keeps
                // large basis-projector families cheap.
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.entries[k * d..(k + 1) * d];
                let out_row = &mut out[r * d..(r + 1) * d];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Operator { dim: d, entries: out })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        check_same_dim(self.dim, rhs.dim)?;
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Operator {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        check_same_dim(self.dim, rhs.dim)?;
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Operator {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Operator { dim: d, entries }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries
            .iter()
            .map(|a| a.norm_sqr())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// ‖A − A†‖_max without materializing the adjoint.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                let diff = self.entries[r * d + c] - self.entries[c * d + r].conj();
                worst = worst.max(diff.norm_sqr());
            }
        }
        worst.sqrt()
    }
}

/// Frobenius norm of the commutator AB − BA.
pub fn commutator_norm(a: &Operator, b: &Operator) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    Ok(ab.sub(&ba)?.frobenius_norm())
}

/// trace(A·B).
pub fn trace_product(a: &Operator, b: &Operator) -> Result<Complex64> {
    check_same_dim(a.dim(), b.dim())?;
    let d = a.dim();
    let mut tr = ZERO;
    for r in 0..d {
        for k in 0..d {
            tr += a.entry(r, k) * b.entry(k, r);
        }
    }
    Ok(tr)
}

/// A Hermitian idempotent operator together with its rank.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    op: Operator,
    rank: usize,
}

impl Projector {
    /// Rank-0 projector.
    pub fn zero(dim: usize) -> Result<Self> {
        Ok(Self {
            op: Operator::zeros(dim)?,
            rank: 0,
        })
    }

    /// Full-rank projector (the identity).
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self {
            op: Operator::identity(dim)?,
            rank: dim,
        })
    }

    /// Rank-1 projector |e_index⟩⟨e_index| (0-based).
    pub fn onto_basis_state(dim: usize, index: usize) -> Result<Self> {
        let e = StateVector::basis(dim, index)?;
        Ok(Self {
            op: Operator::outer(e.amps(), e.amps())?,
            rank: 1,
        })
    }

    /// Rank-1 projector onto a unit vector.
    pub fn onto_state(state: &StateVector) -> Result<Self> {
        Ok(Self {
            op: Operator::outer(state.amps(), state.amps())?,
            rank: 1,
        })
    }

    /// Validates an arbitrary operator as a projector: Hermitian within
    /// 1e-12, idempotent within 1e-9, trace equal to an integer rank
    /// within 1e-9.
    pub fn try_from_operator(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > EXACT_ALGEBRA_TOL {
            return Err(Error::NotProjector {
                reason: format!("hermiticity defect {herm:.3e}"),
            });
        }
        let idem = op.mul(&op)?.sub(&op)?.max_abs_entry();
        if idem > CONSTRUCTION_TOL {
            return Err(Error::NotProjector {
                reason: format!("idempotence defect {idem:.3e}"),
            });
        }
        let trace = op.trace();
        let rank = trace.re.round();
        if (trace.re - rank).abs() > CONSTRUCTION_TOL
            || trace.im.abs() > CONSTRUCTION_TOL
            || rank < 0.0
        {
            return Err(Error::NotProjector {
                reason: format!("trace {trace} is not a non-negative integer"),
            });
        }
        Ok(Self {
            op,
            rank: rank as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn apply(&self, v: &StateVector) -> Result<RawVector> {
        self.op.apply(v)
    }

    /// I − P, projecting onto the orthogonal complement of the range.
    pub fn complement(&self) -> Projector {
        let identity = Operator::identity(self.dim()).expect("dim already validated");
        Projector {
            op: identity.sub(&self.op).expect("same dim"),
            rank: self.dim() - self.rank,
        }
    }

    /// ‖P² − P‖_max.
    pub fn idempotence_defect(&self) -> f64 {
        let sq = self.op.mul(&self.op).expect("same dim");
        sq.sub(&self.op).expect("same dim").max_abs_entry()
    }

    /// An orthonormal basis of the range, recomputed from the matrix
    /// columns.
    pub fn range_basis(&self) -> Vec<StateVector> {
        let d = self.dim();
        let columns: Vec<Vec<Complex64>> = (0..d)
            .map(|c| (0..d).map(|r| self.op.entry(r, c)).collect())
            .collect();
        let basis = orthonormalize(&columns);
        debug_assert_eq!(basis.len(), self.rank);
        basis
            .into_iter()
            .map(|amps| StateVector { amps })
            .collect()
    }
}

/// Gram-Schmidt with one re-orthogonalization pass. Vectors whose residual
/// norm falls below the drop threshold are discarded as linearly dependent.
fn orthonormalize(vectors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let overlap = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= overlap * bi;
                }
            }
        }
        let norm = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm >= SPAN_DROP_TOL {
            for wi in &mut w {
                *wi /= norm;
            }
            basis.push(w);
        }
    }
    basis
}

/// Orthogonal projector onto the span of the given vectors.
///
/// The rank is the dimension of the span; duplicates and linearly dependent
/// inputs are dropped. Normalization of the inputs is immaterial.
pub fn projector_from_span(vectors: &[RawVector]) -> Result<Projector> {
    let first = vectors.first().ok_or(Error::DegenerateSpan)?;
    let dim = first.dim();
    for v in vectors {
        check_same_dim(dim, v.dim())?;
    }
    let amps: Vec<Vec<Complex64>> = vectors.iter().map(|v| v.amps.clone()).collect();
    let basis = orthonormalize(&amps);
    if basis.is_empty() {
        return Err(Error::DegenerateSpan);
    }
    let mut op = Operator::zeros(dim)?;
    for b in &basis {
        let outer = Operator::outer(b, b)?;
        op = op.add(&outer)?;
    }
    Ok(Projector {
        op,
        rank: basis.len(),
    })
}

/// Projector onto the span of a set of unit vectors.
pub fn projector_from_states(states: &[StateVector]) -> Result<Projector> {
    let raws: Vec<RawVector> = states.iter().map(StateVector::to_raw).collect();
    projector_from_span(&raws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Uniform-superposition state on `dim` boxes.
    fn uniform_state(dim: usize) -> StateVector {
        let a = 1.0 / (dim as f64).sqrt();
        StateVector::new(vec![c(a, 0.0); dim]).unwrap()
    }

    #[test]
    fn inner_product_of_unit_state_with_itself_is_one() {
        let psi = uniform_state(3);
        let ip = inner_product(&psi, &psi).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inner_product_of_prescribed_initial_and_final_states() {
        // Three boxes: uniform start, (1,1,-1)/sqrt(3) finish.
        let s = 1.0 / 3.0_f64.sqrt();
        let initial = uniform_state(3);
        let final_state =
            StateVector::new(vec![c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap();
        let ip = inner_product(&final_state, &initial).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn basis_kets_are_orthogonal() {
        let e1 = StateVector::basis(3, 0).unwrap();
        let e2 = StateVector::basis(3, 1).unwrap();
        let ip = inner_product(&e1, &e2).unwrap();
        assert_eq!(ip, c(0.0, 0.0));
    }

    #[test]
    fn inner_product_rejects_dimension_mismatch() {
        let a = StateVector::basis(2, 0).unwrap();
        let b = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            inner_product(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn span_of_single_basis_vector() {
        let p = projector_from_span(&[RawVector::from_real(&[1.0, 0.0, 0.0]).unwrap()]).unwrap();
        assert_eq!(p.rank(), 1);
        for r in 0..3 {
            for c_ in 0..3 {
                let expected = if r == 0 && c_ == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(p.operator().entry(r, c_).re, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn span_normalizes_unnormalized_input() {
        // e2 + e3 projects onto the equally weighted two-box superposition.
        let p = projector_from_span(&[RawVector::from_real(&[0.0, 1.0, 1.0]).unwrap()]).unwrap();
        assert_eq!(p.rank(), 1);
        for (r, c_) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert_abs_diff_eq!(p.operator().entry(r, c_).re, 0.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.operator().entry(0, 0).re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn span_drops_duplicates() {
        let e1 = RawVector::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let e2 = RawVector::from_real(&[0.0, 1.0, 0.0]).unwrap();
        let p = projector_from_span(&[e1.clone(), e1, e2]).unwrap();
        assert_eq!(p.rank(), 2);
        assert_abs_diff_eq!(p.operator().trace().re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn span_of_zero_vectors_is_rejected() {
        let z = RawVector::from_real(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            projector_from_span(&[z]),
            Err(Error::DegenerateSpan)
        ));
        assert!(matches!(projector_from_span(&[]), Err(Error::DegenerateSpan)));
    }

    #[test]
    fn complement_of_basis_projector() {
        let p = Projector::onto_basis_state(3, 0).unwrap();
        let q = p.complement();
        assert_eq!(q.rank(), 2);
        for i in 0..3 {
            let expected = if i == 0 { 0.0 } else { 1.0 };
            assert_abs_diff_eq!(q.operator().entry(i, i).re, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn complement_of_identity_and_zero() {
        let id = Projector::identity(4).unwrap();
        let z = id.complement();
        assert_eq!(z.rank(), 0);
        assert_abs_diff_eq!(z.operator().max_abs_entry(), 0.0, epsilon = 1e-15);
        let back = z.complement();
        assert_eq!(back.rank(), 4);
        assert_abs_diff_eq!(
            back.operator().sub(id.operator()).unwrap().max_abs_entry(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn apply_complement_to_uniform_state() {
        // (I - |e1⟩⟨e1|) on the three-box uniform state leaves (0, a, a).
        let p = Projector::onto_basis_state(3, 0).unwrap().complement();
        let out = p.apply(&uniform_state(3)).unwrap();
        let a = 1.0 / 3.0_f64.sqrt();
        assert_abs_diff_eq!(out.amps()[0].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amps()[1].re, a, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amps()[2].re, a, epsilon = 1e-12);
    }

    #[test]
    fn identity_preserves_states_and_projectors_annihilate() {
        let id = Operator::identity(3).unwrap();
        let psi = uniform_state(3);
        let out = id.apply(&psi).unwrap();
        for (o, a) in out.amps().iter().zip(psi.amps()) {
            assert_eq!(o, a);
        }
        let p = Projector::onto_basis_state(3, 0).unwrap();
        let e2 = StateVector::basis(3, 1).unwrap();
        assert_abs_diff_eq!(p.apply(&e2).unwrap().norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn disjoint_basis_projectors_commute() {
        let p1 = Projector::onto_basis_state(3, 0).unwrap();
        let p2 = Projector::onto_basis_state(3, 1).unwrap();
        let norm = commutator_norm(p1.operator(), p2.operator()).unwrap();
        assert_abs_diff_eq!(norm, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn complement_commutes_with_uniform_rest_projector() {
        // I - |e1⟩⟨e1| commutes with the projector onto (e2+e3)/sqrt(2).
        let not_one = Projector::onto_basis_state(3, 0).unwrap().complement();
        let u = projector_from_span(&[RawVector::from_real(&[0.0, 1.0, 1.0]).unwrap()]).unwrap();
        let norm = commutator_norm(not_one.operator(), u.operator()).unwrap();
        assert_abs_diff_eq!(norm, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_rest_projector_clashes_with_single_box() {
        let u = projector_from_span(&[RawVector::from_real(&[0.0, 1.0, 1.0]).unwrap()]).unwrap();
        let e2 = Projector::onto_basis_state(3, 1).unwrap();
        let norm = commutator_norm(u.operator(), e2.operator()).unwrap();
        assert_abs_diff_eq!(norm, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trace_product_matches_born_weight() {
        // tr(|psi⟩⟨psi| (I - |e1⟩⟨e1|)) = 2/3 on the three-box uniform state.
        let psi = uniform_state(3);
        let rho = Operator::outer(psi.amps(), psi.amps()).unwrap();
        let p = Projector::onto_basis_state(3, 0).unwrap().complement();
        let tr = trace_product(&rho, p.operator()).unwrap();
        assert_abs_diff_eq!(tr.re, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_product_of_identity_and_projectors() {
        let id = Operator::identity(5).unwrap();
        assert_abs_diff_eq!(trace_product(&id, &id).unwrap().re, 5.0, epsilon = 1e-12);
        let p = projector_from_span(&[
            RawVector::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            RawVector::from_real(&[0.0, 1.0, 1.0, 0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let tr = trace_product(p.operator(), p.operator()).unwrap();
        assert_abs_diff_eq!(tr.re, p.rank() as f64, epsilon = 1e-12);
    }

    #[test]
    fn try_from_operator_rejects_non_projectors() {
        let mut op = Operator::identity(2).unwrap();
        op.set_entry(0, 0, c(0.5, 0.0));
        assert!(matches!(
            Projector::try_from_operator(op),
            Err(Error::NotProjector { .. })
        ));
        let mut skew = Operator::zeros(2).unwrap();
        skew.set_entry(0, 1, c(0.0, 1.0));
        assert!(matches!(
            Projector::try_from_operator(skew),
            Err(Error::NotProjector { .. })
        ));
    }

    #[test]
    fn canonical_phase_anchors_first_large_amplitude() {
        let a = c(0.0, 0.7);
        let b = c(0.3, -0.2);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let psi = StateVector::new(vec![a / norm, b / norm]).unwrap().canonical_phase();
        assert!(psi.amps()[0].re > 0.0);
        assert_abs_diff_eq!(psi.amps()[0].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_guard_rejects_zero_and_oversized() {
        assert!(matches!(
            Operator::zeros(0),
            Err(Error::DimensionBounds { .. })
        ));
        assert!(matches!(
            StateVector::basis(DIM_LIMIT + 1, 0),
            Err(Error::DimensionBounds { .. })
        ));
    }

    fn arb_amps(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_map(|pairs| pairs.into_iter().map(|(re, im)| c(re, im)).collect())
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = StateVector> {
        arb_amps(dim).prop_filter_map("norm too small", |amps| {
            RawVector::new(amps).unwrap().normalized().ok()
        })
    }

    proptest! {
        #[test]
        fn inner_product_conjugate_symmetry(a in arb_state(4), b in arb_state(4)) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert_eq!(ab, ba.conj());
        }

        #[test]
        fn commutator_norm_is_symmetric(a in arb_amps(3), b in arb_amps(3)) {
            let op_a = Operator::from_fn(3, |r, c_| a[r] * a[c_].conj() - a[c_] * a[r].conj() + a[(r + c_) % 3]).unwrap();
            let op_b = Operator::from_fn(3, |r, c_| b[r] * b[c_].conj() + b[(r * c_ + 1) % 3]).unwrap();
            let ab = commutator_norm(&op_a, &op_b).unwrap();
            let ba = commutator_norm(&op_b, &op_a).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn span_projectors_are_hermitian_idempotent(
            raw in prop::collection::vec(arb_amps(4), 1..4)
        ) {
            let vs: Vec<RawVector> = raw.into_iter().map(|a| RawVector::new(a).unwrap()).collect();
            if let Ok(p) = projector_from_span(&vs) {
                prop_assert!(p.operator().hermiticity_defect() <= EXACT_ALGEBRA_TOL);
                prop_assert!(p.idempotence_defect() <= CONSTRUCTION_TOL);
                let trace = p.operator().trace();
                prop_assert!((trace.re - p.rank() as f64).abs() <= CONSTRUCTION_TOL);
                prop_assert!(trace.im.abs() <= CONSTRUCTION_TOL);
            }
        }

        #[test]
        fn rebuilding_from_range_basis_reproduces_projector(
            raw in prop::collection::vec(arb_amps(4), 1..4)
        ) {
            let vs: Vec<RawVector> = raw.into_iter().map(|a| RawVector::new(a).unwrap()).collect();
            if let Ok(p) = projector_from_span(&vs) {
                let rebuilt = projector_from_states(&p.range_basis()).unwrap();
                prop_assert_eq!(rebuilt.rank(), p.rank());
                let defect = rebuilt.operator().sub(p.operator()).unwrap().max_abs_entry();
                prop_assert!(defect <= CONSTRUCTION_TOL, "defect {}", defect);
            }
        }

        #[test]
        fn double_complement_is_identity_map(
            raw in prop::collection::vec(arb_amps(4), 1..4)
        ) {
            let vs: Vec<RawVector> = raw.into_iter().map(|a| RawVector::new(a).unwrap()).collect();
            if let Ok(p) = projector_from_span(&vs) {
                let back = p.complement().complement();
                prop_assert_eq!(back.rank(), p.rank());
                let defect = back.operator().sub(p.operator()).unwrap().max_abs_entry();
                prop_assert!(defect <= EXACT_ALGEBRA_TOL);
            }
        }
    }
}
