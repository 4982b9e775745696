//! Signed measures on a finite carrier and their lattice operations.
//!
//! A measure is a dense weight vector. On a cell state the weight is the
//! measure of the whole cell (density times cell width). The order is the
//! setwise order, which on a finite carrier is the entrywise order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{BasisSet, BoundedFunction, SpaceRef, StateId, StateSpace, StateTag};

/// Support threshold used by the absolute-continuity checks.
pub const DEFAULT_TAU_SUPP: f64 = 1e-12;

/// Successive TV increments below this mark a monotone sequence as settled.
pub const SEQUENCE_SETTLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    space: SpaceRef,
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(space: &SpaceRef, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                found: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(SignedMeasure {
            space: Arc::clone(space),
            weights,
        })
    }

    pub(crate) fn from_parts(space: &SpaceRef, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), space.len());
        SignedMeasure {
            space: Arc::clone(space),
            weights,
        }
    }

    pub fn zero(space: &SpaceRef) -> Self {
        SignedMeasure::from_parts(space, vec![0.0; space.len()])
    }

    /// Unit mass at `x`.
    pub fn dirac(space: &SpaceRef, x: StateId) -> Result<Self> {
        space.check_state(x)?;
        let mut weights = vec![0.0; space.len()];
        weights[x] = 1.0;
        Ok(SignedMeasure::from_parts(space, weights))
    }

    /// Reference (Lebesgue-like) measure: cell widths on cells, zero on atoms.
    pub fn reference(space: &SpaceRef) -> Self {
        let weights = space
            .tags()
            .iter()
            .map(|t| match t {
                StateTag::Atom => 0.0,
                StateTag::Cell { width } => *width,
            })
            .collect();
        SignedMeasure::from_parts(space, weights)
    }

    /// Uniform probability measure over all states.
    pub fn uniform(space: &SpaceRef) -> Self {
        let n = space.len();
        SignedMeasure::from_parts(space, vec![1.0 / n as f64; n])
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: StateId) -> f64 {
        self.weights[x]
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    fn ensure_same(&self, other: &SignedMeasure) -> Result<()> {
        StateSpace::ensure_same(&self.space, &other.space)
    }

    fn zip_with(&self, other: &SignedMeasure, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same(other)?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(SignedMeasure::from_parts(&self.space, weights))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        SignedMeasure::from_parts(&self.space, self.weights.iter().map(|&w| f(w)).collect())
    }

    pub fn add(&self, other: &SignedMeasure) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SignedMeasure) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|w| c * w)
    }

    /// `μ(Ω)`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `μ(A)`.
    pub fn mass_of(&self, set: &BasisSet) -> f64 {
        set.members().iter().map(|&x| self.weights[x]).sum()
    }

    /// `μ_A = μ(A ∩ ·)`.
    pub fn restrict(&self, set: &BasisSet) -> Self {
        let weights = (0..self.len())
            .map(|x| {
                if set.contains(x) {
                    self.weights[x]
                } else {
                    0.0
                }
            })
            .collect();
        SignedMeasure::from_parts(&self.space, weights)
    }

    /// `|μ|(Ω)`.
    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// The total-variation measure `|μ|`.
    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|w| w.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|w| (-w).max(0.0))
    }

    /// `(μ⁺, μ⁻)` with `μ = μ⁺ - μ⁻` and disjoint supports.
    pub fn jordan_decomposition(&self) -> (Self, Self) {
        (self.positive_part(), self.negative_part())
    }

    /// Hahn decomposition `(Ω₊, Ω₋)`; zero-weight states go to `Ω₋`.
    pub fn hahn_sets(&self) -> (BasisSet, BasisSet) {
        let (pos, neg): (Vec<StateId>, Vec<StateId>) =
            (0..self.len()).partition(|&x| self.weights[x] > 0.0);
        (
            BasisSet::new(&self.space, pos).expect("states of this space"),
            BasisSet::new(&self.space, neg).expect("states of this space"),
        )
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    /// Setwise order `self ≤ other`.
    pub fn leq(&self, other: &SignedMeasure) -> Result<bool> {
        self.ensure_same(other)?;
        Ok(self.weights.iter().zip(&other.weights).all(|(a, b)| a <= b))
    }

    /// `μ ∨ ν`.
    pub fn sup(&self, other: &SignedMeasure) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// `μ ∧ ν`.
    pub fn inf(&self, other: &SignedMeasure) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn support(&self, tau: f64) -> Vec<StateId> {
        (0..self.len())
            .filter(|&x| self.weights[x].abs() > tau)
            .collect()
    }

    /// `μ ≪ ν`, judged on supports with threshold `tau`.
    pub fn absolutely_continuous(&self, other: &SignedMeasure, tau: f64) -> Result<bool> {
        self.ensure_same(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .all(|(a, b)| a.abs() <= tau || b.abs() > tau))
    }

    /// Mutual absolute continuity.
    pub fn equivalent(&self, other: &SignedMeasure, tau: f64) -> Result<bool> {
        Ok(self.absolutely_continuous(other, tau)? && other.absolutely_continuous(self, tau)?)
    }

    /// `‖μ - ν‖_TV`.
    pub fn tv_distance(&self, other: &SignedMeasure) -> Result<f64> {
        self.ensure_same(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Projection onto the band of atomless measures: keeps cell weights and
    /// drops atoms.
    pub fn band_projection_ac(&self) -> Self {
        let weights = self
            .space
            .tags()
            .iter()
            .zip(&self.weights)
            .map(|(t, &w)| if t.is_atom() { 0.0 } else { w })
            .collect();
        SignedMeasure::from_parts(&self.space, weights)
    }

    pub fn max_abs_diff(&self, other: &SignedMeasure) -> Result<f64> {
        self.ensure_same(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// `⟨f, μ⟩ = Σ f(x) μ(x)`.
pub fn integrate(f: &BoundedFunction, mu: &SignedMeasure) -> Result<f64> {
    StateSpace::ensure_same(f.space(), mu.space())?;
    Ok(f.values()
        .iter()
        .zip(mu.weights())
        .map(|(a, b)| a * b)
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSup {
    pub sup: SignedMeasure,
    /// The last TV increment fell below [`SEQUENCE_SETTLE_TOL`].
    pub settled: bool,
    pub terms: usize,
}

/// Supremum of an increasing sequence bounded above by `bound`.
///
/// Each term must dominate its predecessor and be dominated by `bound`. The
/// result is the entrywise supremum, which for an increasing sequence is also
/// the setwise supremum `A ↦ sup μ_n(A)`.
pub fn sequence_sup(terms: &[SignedMeasure], bound: &SignedMeasure) -> Result<SequenceSup> {
    sequence_sup_iter(terms.iter().cloned(), bound, usize::MAX)
}

/// Like [`sequence_sup`] but pulls terms lazily, stopping once the TV
/// increment settles below [`SEQUENCE_SETTLE_TOL`] or after `max_terms`.
pub fn sequence_sup_iter(
    terms: impl IntoIterator<Item = SignedMeasure>,
    bound: &SignedMeasure,
    max_terms: usize,
) -> Result<SequenceSup> {
    let mut iter = terms.into_iter();
    let mut current = iter
        .next()
        .ok_or_else(|| Error::Precondition("sequence needs at least one term".into()))?;
    if !current.leq(bound)? {
        return Err(Error::Unbounded(0));
    }
    let mut settled = true;
    let mut count = 1;
    while count < max_terms {
        let Some(next) = iter.next() else { break };
        if !current.leq(&next)? {
            return Err(Error::NotMonotone(count));
        }
        if !next.leq(bound)? {
            return Err(Error::Unbounded(count));
        }
        let increment = next.tv_distance(&current)?;
        current = next;
        count += 1;
        settled = increment < SEQUENCE_SETTLE_TOL;
        if settled && max_terms != usize::MAX {
            break;
        }
    }
    Ok(SequenceSup {
        sup: current,
        settled,
        terms: count,
    })
}
