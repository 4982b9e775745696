//! Transition kernels on a finite carrier.
//!
//! Row `x` of a kernel is the signed measure `k(x, ·)`. Rows are stored
//! densely; sparse input is accepted through [`TransitionKernel::from_sparse`].
//! The order is pointwise in `(x, A)`, which on a finite carrier reduces to
//! the entrywise order, so every lattice operation is rowwise on measures.

use std::sync::Arc;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measure::SignedMeasure;
use crate::space::{BasisSet, BoundedFunction, SpaceRef, StateId, StateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    space: SpaceRef,
    data: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(space: &SpaceRef, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: rows.len(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        TransitionKernel::from_flat(space, data)
    }

    /// Row-major `n × n` entries.
    pub fn from_flat(space: &SpaceRef, data: Vec<f64>) -> Result<Self> {
        let n = space.len();
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(TransitionKernel {
            space: Arc::clone(space),
            data,
        })
    }

    /// Build from `(from, to, weight)` triples; repeated pairs accumulate.
    pub fn from_sparse(space: &SpaceRef, entries: &[(StateId, StateId, f64)]) -> Result<Self> {
        let n = space.len();
        let mut data = vec![0.0; n * n];
        for &(from, to, w) in entries {
            space.check_state(from)?;
            space.check_state(to)?;
            data[from * n + to] += w;
        }
        TransitionKernel::from_flat(space, data)
    }

    pub fn from_row_measures(space: &SpaceRef, rows: &[SignedMeasure]) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                found: rows.len(),
            });
        }
        let mut data = Vec::with_capacity(space.len() * space.len());
        for row in rows {
            StateSpace::ensure_same(space, row.space())?;
            data.extend_from_slice(row.weights());
        }
        Ok(TransitionKernel {
            space: Arc::clone(space),
            data,
        })
    }

    pub(crate) fn from_parts(space: &SpaceRef, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), space.len() * space.len());
        TransitionKernel {
            space: Arc::clone(space),
            data,
        }
    }

    pub fn identity(space: &SpaceRef) -> Self {
        let n = space.len();
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            data[x * n + x] = 1.0;
        }
        TransitionKernel::from_parts(space, data)
    }

    pub fn zero(space: &SpaceRef) -> Self {
        TransitionKernel::from_parts(space, vec![0.0; space.len() * space.len()])
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, x: StateId) -> &[f64] {
        let n = self.len();
        &self.data[x * n..(x + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.len().max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `k(x, ·)` as a measure.
    pub fn row_measure(&self, x: StateId) -> SignedMeasure {
        SignedMeasure::from_parts(&self.space, self.row(x).to_vec())
    }

    pub fn entry(&self, x: StateId, y: StateId) -> f64 {
        self.data[x * self.len() + y]
    }

    /// `k(x, A)`.
    pub fn mass(&self, x: StateId, set: &BasisSet) -> f64 {
        let row = self.row(x);
        set.members().iter().map(|&y| row[y]).sum()
    }

    /// `k(x, Ω)`.
    pub fn row_mass(&self, x: StateId) -> f64 {
        self.row(x).iter().sum()
    }

    /// `|k|(x, Ω)`.
    pub fn row_variation(&self, x: StateId) -> f64 {
        self.row(x).iter().map(|w| w.abs()).sum()
    }

    fn ensure_same(&self, other: &TransitionKernel) -> Result<()> {
        StateSpace::ensure_same(&self.space, &other.space)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        TransitionKernel::from_parts(&self.space, self.data.iter().map(|&w| f(w)).collect())
    }

    fn zip_with(&self, other: &TransitionKernel, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same(other)?;
        Ok(TransitionKernel::from_parts(
            &self.space,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &TransitionKernel) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &TransitionKernel) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|w| c * w)
    }

    /// `|k|`: each row replaced by its total-variation measure.
    pub fn modulus(&self) -> Self {
        self.map(f64::abs)
    }

    /// `k₊ = (|k| + k) / 2`, the rowwise Jordan positive part.
    pub fn positive_part(&self) -> Self {
        self.map(|w| w.max(0.0))
    }

    /// `k₋ = (|k| - k) / 2`.
    pub fn negative_part(&self) -> Self {
        self.map(|w| (-w).max(0.0))
    }

    /// Rowwise `k₁(x, ·) ∧ k₂(x, ·)`.
    pub fn meet(&self, other: &TransitionKernel) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    /// Rowwise `k₁(x, ·) ∨ k₂(x, ·)`.
    pub fn join(&self, other: &TransitionKernel) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// `sup_x |k|(x, Ω)`.
    pub fn bound(&self) -> f64 {
        (0..self.len())
            .map(|x| self.row_variation(x))
            .fold(0.0, f64::max)
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|&w| w >= 0.0)
    }

    /// `k₁ ≤ k₂`.
    pub fn leq(&self, other: &TransitionKernel) -> Result<bool> {
        self.ensure_same(other)?;
        Ok(self.data.iter().zip(&other.data).all(|(a, b)| a <= b))
    }

    pub fn max_abs_diff(&self, other: &TransitionKernel) -> Result<f64> {
        self.ensure_same(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `(k₁ k₂)(x, ·) = ∫ k₂(y, ·) k₁(x, dy)`.
    pub fn compose(&self, other: &TransitionKernel) -> Result<Self> {
        self.compose_with(other, Execution::default())
    }

    pub fn compose_with(&self, other: &TransitionKernel, exec: Execution) -> Result<Self> {
        self.ensure_same(other)?;
        let n = self.len();
        let rows = exec.map_range(n, |x| {
            let mut out = vec![0.0; n];
            for (y, &w) in self.row(x).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (o, &v) in out.iter_mut().zip(other.row(y)) {
                    *o += w * v;
                }
            }
            out
        });
        Ok(TransitionKernel::from_parts(&self.space, rows.concat()))
    }

    /// Supremum of `|⟨f, k(x, ·)⟩|` over the first `family_size` members of
    /// [`test_function_family`].
    pub fn tv_via_test_functions(&self, x: StateId, family_size: usize) -> Result<f64> {
        self.space.check_state(x)?;
        if family_size == 0 {
            return Err(Error::Precondition("family_size must be at least 1".into()));
        }
        let row = self.row(x);
        Ok(sign_patterns(self.len())
            .take(family_size)
            .map(|f| f.iter().zip(row).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max))
    }

    /// `⋃_n {x : k(x, B_n) > α}`.
    pub fn superlevel_union(&self, alpha: f64, basis: &[BasisSet]) -> Result<BasisSet> {
        if !(alpha > 0.0) {
            return Err(Error::Precondition(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if basis.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if basis.iter().any(|b| b.carrier() != self.len()) {
            return Err(Error::SpaceMismatch);
        }
        let hits = Execution::default().map_range(self.len(), |x| {
            basis.iter().any(|b| self.mass(x, b) > alpha)
        });
        BasisSet::new(&self.space, hits.into_iter().positions(|hit| hit))
    }

    /// `{x : k(x, Ω) > α}`.
    pub fn superlevel_set(&self, alpha: f64) -> BasisSet {
        BasisSet::new(
            &self.space,
            (0..self.len()).filter(|&x| self.row_mass(x) > alpha),
        )
        .expect("states of this space")
    }
}

/// `2^n - 1` sign vectors: the constant `1` followed by `1_A - 1_{Ω∖A}` for
/// every nonempty proper subset `A`, ordered by size and then lexicographically.
fn sign_patterns(n: usize) -> impl Iterator<Item = Vec<f64>> {
    std::iter::once(vec![1.0; n]).chain((1..n).flat_map(move |k| {
        (0..n).combinations(k).map(move |subset| {
            let mut f = vec![-1.0; n];
            for y in subset {
                f[y] = 1.0;
            }
            f
        })
    }))
}

/// The countable family of unit-ball test functions used to recover total
/// variation: clipped combinations `(1_A - 1_{Ω∖A}) ∧ 1 ∨ -1` over the
/// subsets of the carrier. The first `2^n - 1` members exhaust the sign
/// patterns up to a global sign.
pub fn test_function_family(space: &SpaceRef) -> impl Iterator<Item = BoundedFunction> + '_ {
    sign_patterns(space.len())
        .map(move |f| BoundedFunction::new(space, f).expect("finite ±1 values"))
}

/// Supremum of a sequence of kernels whose running joins have row mass
/// `k(x, Ω) ≤ s_norm`.
///
/// The sequence is first made increasing by running joins `k₁ ∨ … ∨ k_n`; the
/// result is the entrywise limit, i.e. `k(x, A) = sup_n k_n(x, A)` for the
/// increasing sequence.
pub fn kernel_sequence_sup(seq: &[TransitionKernel], s_norm: f64) -> Result<TransitionKernel> {
    let first = seq
        .first()
        .ok_or_else(|| Error::Precondition("sequence needs at least one kernel".into()))?;
    let check = |k: &TransitionKernel, i: usize| -> Result<()> {
        let mass = (0..k.len())
            .map(|x| k.row_mass(x))
            .fold(f64::NEG_INFINITY, f64::max);
        if mass > s_norm + 1e-12 * s_norm.abs().max(1.0) {
            Err(Error::Unbounded(i))
        } else {
            Ok(())
        }
    };
    let mut acc = first.clone();
    check(&acc, 0)?;
    for (i, k) in seq.iter().enumerate().skip(1) {
        acc = acc.join(k)?;
        check(&acc, i)?;
    }
    Ok(acc)
}

/// On a two-sided sequence space with truncation `N`, the kernel with rows
/// `δ_n - δ_{n+1}` for positive `n` and zero rows elsewhere. Row `N` ends at
/// `∞`, which stands in for `N + 1`.
pub fn sequence_difference_kernel(truncation: usize) -> Result<TransitionKernel> {
    let space = StateSpace::two_sided_sequence(truncation)?;
    let entries: Vec<_> = (truncation..2 * truncation)
        .flat_map(|x| [(x, x, 1.0), (x, x + 1, -1.0)])
        .collect();
    TransitionKernel::from_sparse(&space, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::power_set_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(n: usize) -> SpaceRef {
        StateSpace::discrete(n).unwrap()
    }

    fn k(space: &SpaceRef, rows: &[&[f64]]) -> TransitionKernel {
        TransitionKernel::new(space, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn random_kernel(rng: &mut impl Rng, space: &SpaceRef) -> TransitionKernel {
        let n = space.len();
        TransitionKernel::from_flat(
            space,
            (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap()
    }

    fn random_stochastic(rng: &mut impl Rng, space: &SpaceRef) -> TransitionKernel {
        let n = space.len();
        let rows = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        TransitionKernel::new(space, rows).unwrap()
    }

    /// `δ_n - δ_{n+1}` on positive indices; the last positive row feeds `∞`.
    fn sequence_kernel(trunc: usize) -> TransitionKernel {
        sequence_difference_kernel(trunc).unwrap()
    }

    #[test]
    fn modulus_examples() {
        let s = d(2);
        let a = k(&s, &[&[1.0, -1.0], &[0.0, 2.0]]);
        assert_eq!(a.modulus(), k(&s, &[&[1.0, 1.0], &[0.0, 2.0]]));

        let seq = sequence_kernel(4);
        let m = seq.modulus();
        for x in 4..8 {
            let mut expected = vec![0.0; 9];
            expected[x] = 1.0;
            expected[x + 1] = 1.0;
            assert_eq!(m.row(x), expected.as_slice());
        }
        for x in (0..4).chain([8]) {
            assert!(m.row(x).iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn modulus_is_the_least_dominating_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = d(rng.random_range(1..7));
            let a = random_kernel(&mut rng, &s);
            let m = a.modulus();
            assert!(a.leq(&m).unwrap() && a.scale(-1.0).leq(&m).unwrap());
            assert_eq!(m, a.positive_part().add(&a.negative_part()).unwrap());
            assert_eq!(a, a.positive_part().sub(&a.negative_part()).unwrap());
            // any b ≥ ±k dominates |k|
            let slack = random_kernel(&mut rng, &s).modulus();
            let b = m.add(&slack).unwrap();
            assert!(m.leq(&b).unwrap());
        }
    }

    #[test]
    fn positive_part_examples() {
        let s = d(2);
        let a = k(&s, &[&[1.0, -1.0], &[0.0, 2.0]]);
        assert_eq!(a.positive_part(), k(&s, &[&[1.0, 0.0], &[0.0, 2.0]]));
        assert_eq!(a.negative_part(), k(&s, &[&[0.0, 1.0], &[0.0, 0.0]]));
        let p = k(&s, &[&[0.3, 0.7], &[0.0, 1.0]]);
        assert_eq!(p.positive_part(), p);
        // supports of the two parts are disjoint rowwise
        for x in 0..2 {
            for y in 0..2 {
                assert!(
                    a.positive_part().entry(x, y) == 0.0 || a.negative_part().entry(x, y) == 0.0
                );
            }
        }
    }

    #[test]
    fn meet_join_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = d(3);
        let a = random_kernel(&mut rng, &s);
        assert_eq!(a.meet(&a).unwrap(), a);

        let p = random_stochastic(&mut rng, &s);
        let mut rows = random_stochastic(&mut rng, &s).to_rows();
        rows[1] = p.row(1).to_vec();
        let q = TransitionKernel::new(&s, rows).unwrap();
        assert_eq!(p.meet(&q).unwrap().row(1), p.row(1));

        let b = random_kernel(&mut rng, &s);
        assert_eq!(
            a.meet(&b)
                .unwrap()
                .add(&a.join(&b).unwrap())
                .unwrap()
                .max_abs_diff(&a.add(&b).unwrap())
                .unwrap(),
            0.0
        );
        assert_eq!(
            a.meet(&TransitionKernel::zero(&d(2))),
            Err(Error::SpaceMismatch)
        );
    }

    #[test]
    fn bound_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = d(4);
        let p = random_stochastic(&mut rng, &s);
        assert!((p.bound() - 1.0).abs() < 1e-15);
        assert_eq!(sequence_kernel(5).bound(), 2.0);
        for _ in 0..200 {
            let a = random_kernel(&mut rng, &s);
            let b = random_kernel(&mut rng, &s);
            assert!(a.add(&b).unwrap().bound() <= a.bound() + b.bound() + 1e-12);
        }
    }

    #[test]
    fn tv_via_test_functions_examples() {
        let s = d(3);
        let p = k(&s, &[&[0.2, 0.3, 0.5], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!((p.tv_via_test_functions(0, 1).unwrap() - 1.0).abs() < 1e-15);

        let s2 = d(2);
        let a = k(&s2, &[&[1.0, -1.0], &[0.0, 0.0]]);
        assert_eq!(a.tv_via_test_functions(0, 1).unwrap(), 0.0);
        assert_eq!(a.tv_via_test_functions(0, 3).unwrap(), 2.0);
        assert!(a.tv_via_test_functions(0, 0).is_err());
        assert!(a.tv_via_test_functions(2, 1).is_err());
    }

    #[test]
    fn tv_via_test_functions_is_monotone_and_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=10 {
            let s = d(n);
            let a = random_kernel(&mut rng, &s);
            let full = (1usize << n) - 1;
            for x in 0..n {
                let mut prev = 0.0;
                for size in [1, 2, 5, full / 2 + 1, full] {
                    let v = a.tv_via_test_functions(x, size.min(full)).unwrap();
                    assert!(v >= prev);
                    prev = v;
                }
                assert_eq!(prev, a.row_variation(x));
                assert_eq!(a.tv_via_test_functions(x, full + 10).unwrap(), prev);
            }
        }
        let s = d(4);
        assert_eq!(test_function_family(&s).count(), 15);
        assert!(test_function_family(&s).all(|f| f.sup_norm() <= 1.0));
    }

    #[test]
    fn superlevel_examples() {
        let s = d(2);
        let a = k(&s, &[&[1.0, -1.0], &[0.0, 2.0]]);
        let basis = power_set_basis(&s).unwrap();
        assert_eq!(a.superlevel_union(0.5, &basis).unwrap().members(), &[0, 1]);
        assert!(a
            .superlevel_union(a.bound() + 0.1, &basis)
            .unwrap()
            .is_empty());
        assert_eq!(a.superlevel_union(0.5, &[]), Err(Error::EmptyBasis));
        assert!(a.superlevel_union(0.0, &basis).is_err());
    }

    #[test]
    fn superlevel_union_equals_positive_part_superlevel() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = d(rng.random_range(1..7));
            let a = random_kernel(&mut rng, &s);
            let basis = power_set_basis(&s).unwrap();
            for i in 1..=10 {
                let alpha = 0.4 * i as f64;
                let direct = a.positive_part().superlevel_set(alpha);
                assert_eq!(a.superlevel_union(alpha, &basis).unwrap(), direct);
            }
        }
    }

    #[test]
    fn sequence_sup_examples() {
        let s = d(3);
        let id = TransitionKernel::identity(&s);
        let seq: Vec<_> = (1..=50).map(|n| id.scale(1.0 - 1.0 / n as f64)).collect();
        let sup = kernel_sequence_sup(&seq, 1.0).unwrap();
        assert!(sup.max_abs_diff(&id).unwrap() <= 1.0 / 50.0 + 1e-15);
        assert!(sup.leq(&id).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_kernel(&mut rng, &s);
        assert_eq!(
            kernel_sequence_sup(&[a.clone(), a.clone()], a.bound()).unwrap(),
            a
        );

        let b = random_kernel(&mut rng, &s);
        let alternating = [a.clone(), b.clone(), a.clone(), b.clone()];
        let bound = a.join(&b).unwrap().bound();
        assert_eq!(
            kernel_sequence_sup(&alternating, bound).unwrap(),
            a.join(&b).unwrap()
        );
    }

    #[test]
    fn sequence_sup_errors() {
        let s = d(2);
        let id = TransitionKernel::identity(&s);
        assert_eq!(
            kernel_sequence_sup(&[id.scale(3.0)], 1.0),
            Err(Error::Unbounded(0))
        );
        assert_eq!(
            kernel_sequence_sup(&[id.clone(), id.scale(2.0)], 1.0),
            Err(Error::Unbounded(1))
        );
        assert!(kernel_sequence_sup(&[], 1.0).is_err());
        assert_eq!(
            kernel_sequence_sup(&[id, TransitionKernel::zero(&d(3))], 5.0),
            Err(Error::SpaceMismatch)
        );
    }

    #[test]
    fn compose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = d(5);
        let a = random_kernel(&mut rng, &s);
        let id = TransitionKernel::identity(&s);
        assert_eq!(id.compose(&a).unwrap(), a);
        assert_eq!(a.compose(&id).unwrap(), a);
        let p = random_stochastic(&mut rng, &s);
        let q = random_stochastic(&mut rng, &s);
        let pq = p.compose(&q).unwrap();
        for x in 0..5 {
            assert!((pq.row_mass(x) - 1.0).abs() < 1e-14);
        }
        assert!(pq.is_positive());
    }

    #[test]
    fn compose_is_associative_and_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let s = d(rng.random_range(1..8));
            let a = random_kernel(&mut rng, &s);
            let b = random_kernel(&mut rng, &s);
            let c = random_kernel(&mut rng, &s);
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right).unwrap() <= 1e-12 * left.bound().max(1.0));
            assert!(a.compose(&b).unwrap().bound() <= a.bound() * b.bound() + 1e-12);
        }
    }

    #[test]
    fn compose_strategies_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = d(40);
        let a = random_kernel(&mut rng, &s);
        let b = random_kernel(&mut rng, &s);
        assert_eq!(
            a.compose_with(&b, Execution::Sequential).unwrap(),
            a.compose_with(&b, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn leq_agrees_with_all_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_kernel(&mut rng, &d(3));
        assert!(a.leq(&a).unwrap());
        assert!(a.leq(&a.modulus()).unwrap());
        for _ in 0..500 {
            let n = rng.random_range(1..=10);
            let s = d(n);
            let a = random_kernel(&mut rng, &s);
            // nudge b so that entrywise order holds often but not always
            let b = TransitionKernel::from_flat(
                &s,
                a.as_flat()
                    .iter()
                    .map(|&w| w + rng.random_range(-0.02..1.0))
                    .collect(),
            )
            .unwrap();
            let entrywise = a.leq(&b).unwrap();
            let all_sets = (0..n).all(|x| {
                (1u32..(1 << n)).all(|mask| {
                    let (sa, sb) = (0..n)
                        .filter(|&y| mask & (1 << y) != 0)
                        .fold((0.0, 0.0), |(p, q), y| {
                            (p + a.entry(x, y), q + b.entry(x, y))
                        });
                    sa <= sb
                })
            });
            assert_eq!(entrywise, all_sets);
        }
    }
}
