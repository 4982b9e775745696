//! Operators on measures induced by kernels, plus opaque operators that
//! need not come from a kernel.
//!
//! [`MeasureOperator`] is the weakly continuous operator `(Tμ)(A) = ∫ k(x, A) dμ(x)`.
//! [`BlackBoxOperator`] wraps an arbitrary linear map and is used to exhibit
//! operators that are dominated by weakly continuous ones without being
//! weakly continuous themselves.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::TransitionKernel;
use crate::measure::SignedMeasure;
use crate::space::{
    is_continuous, refine_to_disjoint, BasisSet, BoundedFunction, SeqPoint, SpaceRef, StateId,
    StateSpace,
};

/// Largest carrier the brute-force positive-part oracle accepts by default.
pub const DEFAULT_N_ORACLE: usize = 12;

/// Agreement tolerance for weak-continuity and linearity checks.
pub const WEAK_CONTINUITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOperator {
    kernel: TransitionKernel,
    norm: f64,
}

impl MeasureOperator {
    pub fn new(kernel: TransitionKernel) -> Self {
        let norm = kernel.bound();
        MeasureOperator { kernel, norm }
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn space(&self) -> &SpaceRef {
        self.kernel.space()
    }

    /// Operator norm on `(M(Ω), ‖·‖_TV)`, equal to the kernel bound.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `Tμ = Σ_x μ(x) k(x, ·)`, summed in state order.
    pub fn apply(&self, mu: &SignedMeasure) -> Result<SignedMeasure> {
        StateSpace::ensure_same(self.space(), mu.space())?;
        let n = self.kernel.len();
        let mut out = vec![0.0; n];
        for (x, &m) in mu.weights().iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.kernel.row(x)) {
                *o += w * m;
            }
        }
        Ok(SignedMeasure::from_parts(self.space(), out))
    }

    /// `(T*f)(x) = ⟨f, k(x, ·)⟩`.
    pub fn adjoint_apply(&self, f: &BoundedFunction) -> Result<BoundedFunction> {
        StateSpace::ensure_same(self.space(), f.space())?;
        let values = self
            .kernel
            .rows()
            .map(|row| row.iter().zip(f.values()).map(|(k, v)| k * v).sum())
            .collect();
        BoundedFunction::new(self.space(), values)
    }

    /// `T⁺μ` for positive `μ`, by brute force over the defining supremum.
    ///
    /// For each target state `j` this maximizes `Σ_x g(x) k(x, {j}) μ(x)` over
    /// all indicators `g ∈ {0,1}^n`. It never consults the kernel's positive
    /// part.
    pub fn positive_part_oracle(&self, mu: &SignedMeasure, cap: usize) -> Result<SignedMeasure> {
        self.positive_part_oracle_with(mu, cap, Execution::default())
    }

    pub fn positive_part_oracle_with(
        &self,
        mu: &SignedMeasure,
        cap: usize,
        exec: Execution,
    ) -> Result<SignedMeasure> {
        StateSpace::ensure_same(self.space(), mu.space())?;
        let n = self.kernel.len();
        if n > cap || n >= u64::BITS as usize {
            return Err(Error::CarrierTooLarge { n, cap });
        }
        if let Some((state, &weight)) = mu.weights().iter().enumerate().find(|(_, &w)| w < 0.0) {
            return Err(Error::NegativeMeasure { state, weight });
        }
        let weights = mu.weights();
        let sup = exec.map_range(n, |j| {
            let mut best = 0.0_f64;
            for mask in 0u64..(1u64 << n) {
                let mut total = 0.0;
                for (x, &m) in weights.iter().enumerate() {
                    if mask & (1 << x) != 0 {
                        total += self.kernel.entry(x, j) * m;
                    }
                }
                best = best.max(total);
            }
            best
        });
        Ok(SignedMeasure::from_parts(self.space(), sup))
    }

    /// Runs the constructive lower bound for `(T⁺μ_A)(Ω)`.
    ///
    /// Requires `α < k₊(x, Ω)` for every `x ∈ A`. Builds the superlevel pieces
    /// `E_n = A ∩ {k(·, B_n) > α}`, disjointifies them into `Ω_n`, truncates
    /// at the first `N` with `μ(⋃_{n≤N} Ω_n) ≥ μ(A) - ε/α`, refines
    /// `B_1, …, B_N` into disjoint pieces and sums `∫_{G_m} k(x, B̃_m) dμ(x)`
    /// where `G_m` is the union of the `Ω_n` whose `B_n` contains `B̃_m`.
    pub fn keylemma_lower_bound(
        &self,
        mu: &SignedMeasure,
        set: &BasisSet,
        alpha: f64,
        basis: &[BasisSet],
        epsilon: f64,
    ) -> Result<KeyLemmaBound> {
        StateSpace::ensure_same(self.space(), mu.space())?;
        let n = self.kernel.len();
        if set.carrier() != n || basis.iter().any(|b| b.carrier() != n) {
            return Err(Error::SpaceMismatch);
        }
        if basis.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if !(alpha > 0.0) || !(epsilon >= 0.0) {
            return Err(Error::Precondition(format!(
                "need alpha > 0 and epsilon >= 0, got alpha = {alpha}, epsilon = {epsilon}"
            )));
        }
        if let Some((state, &weight)) = mu.weights().iter().enumerate().find(|(_, &w)| w < 0.0) {
            return Err(Error::NegativeMeasure { state, weight });
        }
        let positive = self.kernel.positive_part();
        if let Some(&x) = set
            .members()
            .iter()
            .find(|&&x| !(alpha < positive.row_mass(x)))
        {
            return Err(Error::Precondition(format!(
                "alpha = {alpha} is not below k+(x, Ω) = {} at x = {x}",
                positive.row_mass(x)
            )));
        }

        let weights = mu.weights();
        let mass = |mask: &[bool]| -> f64 {
            mask.iter()
                .zip(weights)
                .filter(|(&inside, _)| inside)
                .map(|(_, &w)| w)
                .sum()
        };
        let mut in_a = vec![false; n];
        for &x in set.members() {
            in_a[x] = true;
        }
        let target_mass = mass(&in_a);
        let needed = target_mass - epsilon / alpha;

        // Ω_n as owner index per state
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut covered = vec![false; n];
        let mut truncation = None;
        let mut covered_mass = 0.0;
        if needed <= 0.0 {
            truncation = Some(0);
        } else {
            for (idx, b) in basis.iter().enumerate() {
                for &x in set.members() {
                    if owner[x].is_none() && self.kernel.mass(x, b) > alpha {
                        owner[x] = Some(idx);
                        covered[x] = true;
                    }
                }
                covered_mass = mass(&covered);
                if covered_mass >= needed {
                    truncation = Some(idx + 1);
                    break;
                }
            }
        }
        let truncation = truncation.ok_or_else(|| {
            Error::Precondition(format!(
                "basis covers mass {covered_mass} of A, need {needed}; the basis is too coarse"
            ))
        })?;

        let mut by_basis_sets = 0.0;
        for (idx, b) in basis.iter().take(truncation).enumerate() {
            for x in (0..n).filter(|&x| owner[x] == Some(idx)) {
                by_basis_sets += self.kernel.mass(x, b) * weights[x];
            }
        }

        let mut value = 0.0;
        let mut pieces = 0;
        if truncation > 0 {
            let refinement = refine_to_disjoint(&basis[..truncation])?;
            pieces = refinement.pieces.len();
            for (piece, members) in refinement.pieces.iter().zip(&refinement.membership) {
                for x in (0..n).filter(|&x| owner[x].is_some_and(|o| members.contains(&o))) {
                    value += self.kernel.mass(x, piece) * weights[x];
                }
            }
        }

        Ok(KeyLemmaBound {
            value,
            by_basis_sets,
            guaranteed: alpha * target_mass - epsilon,
            truncation,
            pieces,
        })
    }
}

/// Outcome of [`MeasureOperator::keylemma_lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLemmaBound {
    /// `Σ_m ∫_{G_m} k(x, B̃_m) dμ(x)` over the refined pieces.
    pub value: f64,
    /// The same sum regrouped as `Σ_n ∫_{Ω_n} k(x, B_n) dμ(x)`.
    pub by_basis_sets: f64,
    /// `α μ(A) - ε`.
    pub guaranteed: f64,
    /// Number of basis sets kept after truncation.
    pub truncation: usize,
    /// Number of disjoint pieces in the refinement.
    pub pieces: usize,
}

type MeasureMap = dyn Fn(&SignedMeasure) -> SignedMeasure + Send + Sync;
type PointMap = dyn Fn(StateId) -> SignedMeasure + Send + Sync;

/// An opaque linear operator on measures.
///
/// Besides its action on carrier measures, a black box reports the image of
/// the point mass at each state. On atoms the point mass is the carrier
/// Dirac measure. On a cell the carrier weight stands for a diffuse mass spread
/// over the cell, and the point mass at a point of that cell is a different,
/// atomic measure; its image is what a kernel would have to reproduce.
#[derive(Clone)]
pub struct BlackBoxOperator {
    space: SpaceRef,
    label: String,
    measure_map: Arc<MeasureMap>,
    point_map: Arc<PointMap>,
}

impl fmt::Debug for BlackBoxOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxOperator")
            .field("label", &self.label)
            .field("states", &self.space.len())
            .finish()
    }
}

impl BlackBoxOperator {
    pub fn new(
        space: &SpaceRef,
        label: impl Into<String>,
        measure_map: impl Fn(&SignedMeasure) -> SignedMeasure + Send + Sync + 'static,
        point_map: impl Fn(StateId) -> SignedMeasure + Send + Sync + 'static,
    ) -> Self {
        BlackBoxOperator {
            space: Arc::clone(space),
            label: label.into(),
            measure_map: Arc::new(measure_map),
            point_map: Arc::new(point_map),
        }
    }

    pub fn from_kernel(kernel: &TransitionKernel) -> Self {
        let op = MeasureOperator::new(kernel.clone());
        let rows = kernel.clone();
        BlackBoxOperator::new(
            kernel.space(),
            "kernel",
            move |mu| {
                op.apply(mu)
                    .expect("space checked by BlackBoxOperator::apply")
            },
            move |x| rows.row_measure(x),
        )
    }

    pub fn zero(space: &SpaceRef) -> Self {
        let s1 = Arc::clone(space);
        let s2 = Arc::clone(space);
        BlackBoxOperator::new(
            space,
            "zero",
            move |_| SignedMeasure::zero(&s1),
            move |_| SignedMeasure::zero(&s2),
        )
    }

    /// `f ⊗ ν : μ ↦ ⟨f, μ⟩ ν`. Weakly continuous, with kernel rows `f(x) ν`.
    pub fn rank_one(f: &BoundedFunction, nu: &SignedMeasure) -> Result<Self> {
        StateSpace::ensure_same(f.space(), nu.space())?;
        let (f1, n1) = (f.clone(), nu.clone());
        let (f2, n2) = (f.clone(), nu.clone());
        Ok(BlackBoxOperator::new(
            nu.space(),
            "rank-one",
            move |mu| n1.scale(crate::measure::integrate(&f1, mu).expect("same space")),
            move |x| n2.scale(f2.value(x)),
        ))
    }

    /// `φ ⊗ ν` with `φ(μ) = (Pμ)(Ω)`, `P` the projection onto atomless
    /// measures. Every point mass is atomic, so `φ(δ_x) = 0` for all `x`.
    pub fn ac_rank_one(nu: &SignedMeasure) -> Self {
        let n1 = nu.clone();
        let space = Arc::clone(nu.space());
        BlackBoxOperator::new(
            nu.space(),
            "ac-rank-one",
            move |mu| n1.scale(mu.band_projection_ac().total_mass()),
            move |_| SignedMeasure::zero(&space),
        )
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, mu: &SignedMeasure) -> Result<SignedMeasure> {
        StateSpace::ensure_same(&self.space, mu.space())?;
        Ok((self.measure_map)(mu))
    }

    /// Image of the point mass at `x`.
    pub fn point_image(&self, x: StateId) -> Result<SignedMeasure> {
        self.space.check_state(x)?;
        Ok((self.point_map)(x))
    }

    /// Spot-check `B(aμ + bν) = aBμ + bBν` over all pairs of test measures.
    pub fn check_linearity(&self, tests: &[SignedMeasure]) -> Result<bool> {
        let (a, b) = (0.75, -1.5);
        for mu in tests {
            for nu in tests {
                let lhs = self.apply(&mu.scale(a).add(&nu.scale(b))?)?;
                let rhs = self.apply(mu)?.scale(a).add(&self.apply(nu)?.scale(b))?;
                if lhs.max_abs_diff(&rhs)? > WEAK_CONTINUITY_TOL {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Kernel whose rows are the images of the point masses.
pub fn reconstruct_kernel(op: &BlackBoxOperator) -> Result<TransitionKernel> {
    let rows = op
        .space()
        .states()
        .map(|x| op.point_image(x))
        .collect::<Result<Vec<_>>>()?;
    TransitionKernel::from_row_measures(op.space(), &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakContinuityReport {
    pub continuous: bool,
    pub max_deviation: f64,
    pub witness_index: Option<usize>,
    pub witness: Option<SignedMeasure>,
}

/// Compares the black box with the operator of its reconstructed kernel on
/// every test measure.
pub fn weak_continuity_check(
    op: &BlackBoxOperator,
    tests: &[SignedMeasure],
) -> Result<WeakContinuityReport> {
    if tests.is_empty() {
        return Err(Error::Precondition("need at least one test measure".into()));
    }
    let induced = MeasureOperator::new(reconstruct_kernel(op)?);
    let mut max_deviation = 0.0_f64;
    let mut witness_index = None;
    for (i, mu) in tests.iter().enumerate() {
        let dev = induced.apply(mu)?.max_abs_diff(&op.apply(mu)?)?;
        max_deviation = max_deviation.max(dev);
        if dev > WEAK_CONTINUITY_TOL && witness_index.is_none() {
            witness_index = Some(i);
        }
    }
    Ok(WeakContinuityReport {
        continuous: witness_index.is_none(),
        max_deviation,
        witness_index,
        witness: witness_index.map(|i| tests[i].clone()),
    })
}

/// `0 ≤ lower(μ) ≤ upper(μ)` for every positive probe.
pub fn dominated_on(
    lower: &BlackBoxOperator,
    upper: &BlackBoxOperator,
    probes: &[SignedMeasure],
) -> Result<bool> {
    for mu in probes.iter().filter(|m| m.is_positive()) {
        let lo = lower.apply(mu)?;
        let hi = upper.apply(mu)?;
        if !(lo.is_positive() && lo.leq(&hi)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Continuous probe functions on a two-sided sequence space: constants,
/// `1/|n|` decay on both sides and on the positive side only, and ramps
/// `min(1, |n|/r)` that equal 1 at `∞`. Candidates that fail the tail test
/// at this truncation (the decay probes for small `N`) are dropped.
pub fn continuous_probes(
    space: &SpaceRef,
    tau_cont: f64,
) -> Result<Vec<(String, BoundedFunction)>> {
    if space.sequence_truncation().is_none() {
        return Err(Error::Unsupported(
            "continuous probes need a two-sided sequence space".into(),
        ));
    }
    let point = |x: StateId| space.seq_point(x).expect("state of a sequence space");
    let mut probes = vec![
        ("one".to_string(), BoundedFunction::one(space)),
        (
            "const(-0.5)".to_string(),
            BoundedFunction::constant(space, -0.5)?,
        ),
        (
            "decay".to_string(),
            BoundedFunction::from_fn(space, |x| match point(x) {
                SeqPoint::Pos(m) | SeqPoint::Neg(m) => 1.0 / m as f64,
                SeqPoint::Infinity => 0.0,
            })?,
        ),
        (
            "decay(+)".to_string(),
            BoundedFunction::from_fn(space, |x| match point(x) {
                SeqPoint::Pos(m) => 1.0 / m as f64,
                _ => 0.0,
            })?,
        ),
    ];
    for r in [2usize, 4, 8] {
        probes.push((
            format!("ramp({r})"),
            BoundedFunction::from_fn(space, |x| match point(x) {
                SeqPoint::Pos(m) | SeqPoint::Neg(m) => (m as f64 / r as f64).min(1.0),
                SeqPoint::Infinity => 1.0,
            })?,
        ));
    }
    probes.retain(|(_, f)| is_continuous(f, tau_cont));
    Ok(probes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbInvarianceReport {
    pub invariant: bool,
    /// Probes whose image under `T*` failed the continuity test.
    pub failing: Vec<String>,
}

/// Whether `T*` maps each continuous probe to a continuous function.
pub fn cb_invariance_check(op: &MeasureOperator, tau_cont: f64) -> Result<CbInvarianceReport> {
    let probes = continuous_probes(op.space(), tau_cont)?;
    let mut failing = Vec::new();
    for (name, f) in &probes {
        if !is_continuous(&op.adjoint_apply(f)?, tau_cont) {
            failing.push(name.clone());
        }
    }
    Ok(CbInvarianceReport {
        invariant: failing.is_empty(),
        failing,
    })
}
