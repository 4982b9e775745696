//! Finite carriers standing in for a Polish state space.
//!
//! A [`StateSpace`] is an ordered list of states, each tagged either as an
//! atom or as a cell of a discretized continuum. Cells carry their reference
//! weight (the cell width). Three layouts are supported: plain discrete sets,
//! uniform partitions of an interval, and a truncation of the two-sided
//! sequence space `(-N) ∪ N ∪ {∞}` in which `∞` is the only non-isolated
//! point.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::error::{Error, Result};

pub type StateId = usize;

/// Shared handle to a state space; measures, kernels and functions hold one.
pub type SpaceRef = Arc<StateSpace>;

/// Upper bound on the size of a generated basis family.
pub const MAX_BASIS: usize = 1 << 20;

/// Default tolerance for the tail-oscillation continuity test.
pub const DEFAULT_TAU_CONT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateTag {
    Atom,
    /// A discretization cell; `width` is its reference weight.
    Cell {
        width: f64,
    },
}

impl StateTag {
    pub fn is_atom(self) -> bool {
        matches!(self, StateTag::Atom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Discrete,
    Interval {
        a: f64,
        b: f64,
    },
    /// `n` negative points, `n` positive points and a point at infinity.
    TwoSidedSequence {
        n: usize,
    },
}

/// Requested layout, as accepted by [`make_space`].
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    Discrete { n: usize },
    Interval { a: f64, b: f64, cells: usize },
    TwoSidedSequence { n: usize },
}

/// A point of the two-sided sequence space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeqPoint {
    Neg(usize),
    Pos(usize),
    Infinity,
}

impl fmt::Display for SeqPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqPoint::Neg(n) => write!(f, "-{n}"),
            SeqPoint::Pos(n) => write!(f, "{n}"),
            SeqPoint::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    tags: Vec<StateTag>,
    topology: Topology,
}

pub fn make_space(kind: &SpaceKind) -> Result<SpaceRef> {
    match *kind {
        SpaceKind::Discrete { n } => StateSpace::discrete(n),
        SpaceKind::Interval { a, b, cells } => StateSpace::interval(a, b, cells),
        SpaceKind::TwoSidedSequence { n } => StateSpace::two_sided_sequence(n),
    }
}

impl StateSpace {
    /// `n` atoms with the discrete topology.
    pub fn discrete(n: usize) -> Result<SpaceRef> {
        if n == 0 {
            return Err(Error::InvalidSpace("size must be at least 1".into()));
        }
        Ok(Arc::new(StateSpace {
            tags: vec![StateTag::Atom; n],
            topology: Topology::Discrete,
        }))
    }

    /// Uniform partition of `[a, b]` into `cells` cells of width `(b - a) / cells`.
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<SpaceRef> {
        if cells == 0 {
            return Err(Error::InvalidSpace("size must be at least 1".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidSpace("interval bounds must be finite".into()));
        }
        if a >= b {
            return Err(Error::InvalidSpace(format!("need a < b, got [{a}, {b}]")));
        }
        let width = (b - a) / cells as f64;
        Ok(Arc::new(StateSpace {
            tags: vec![StateTag::Cell { width }; cells],
            topology: Topology::Interval { a, b },
        }))
    }

    /// Truncation of `(-N) ∪ N ∪ {∞}` with states `-n..-1, 1..n, ∞` in that order.
    pub fn two_sided_sequence(n: usize) -> Result<SpaceRef> {
        if n == 0 {
            return Err(Error::InvalidSpace("size must be at least 1".into()));
        }
        Ok(Arc::new(StateSpace {
            tags: vec![StateTag::Atom; 2 * n + 1],
            topology: Topology::TwoSidedSequence { n },
        }))
    }

    /// Discrete space with explicit tags, e.g. a mix of atoms and cells.
    pub fn with_tags(tags: Vec<StateTag>) -> Result<SpaceRef> {
        if tags.is_empty() {
            return Err(Error::InvalidSpace("size must be at least 1".into()));
        }
        for (i, tag) in tags.iter().enumerate() {
            if let StateTag::Cell { width } = tag {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidSpace(format!(
                        "cell {i} has non-positive reference weight {width}"
                    )));
                }
            }
        }
        Ok(Arc::new(StateSpace {
            tags,
            topology: Topology::Discrete,
        }))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn states(&self) -> std::ops::Range<StateId> {
        0..self.tags.len()
    }

    pub fn tags(&self) -> &[StateTag] {
        &self.tags
    }

    pub fn tag(&self, id: StateId) -> Option<StateTag> {
        self.tags.get(id).copied()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn check_state(&self, id: StateId) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownState {
                id,
                len: self.len(),
            })
        }
    }

    /// Truncation parameter of a two-sided sequence space.
    pub fn sequence_truncation(&self) -> Option<usize> {
        match self.topology {
            Topology::TwoSidedSequence { n } => Some(n),
            _ => None,
        }
    }

    pub fn seq_point(&self, id: StateId) -> Option<SeqPoint> {
        let n = self.sequence_truncation()?;
        if id < n {
            Some(SeqPoint::Neg(n - id))
        } else if id < 2 * n {
            Some(SeqPoint::Pos(id - n + 1))
        } else if id == 2 * n {
            Some(SeqPoint::Infinity)
        } else {
            None
        }
    }

    pub fn seq_index(&self, point: SeqPoint) -> Option<StateId> {
        let n = self.sequence_truncation()?;
        match point {
            SeqPoint::Neg(m) if (1..=n).contains(&m) => Some(n - m),
            SeqPoint::Pos(m) if (1..=n).contains(&m) => Some(n + m - 1),
            SeqPoint::Infinity => Some(2 * n),
            _ => None,
        }
    }

    /// Two handles denote the same space.
    pub fn same(a: &SpaceRef, b: &SpaceRef) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }

    pub fn ensure_same(a: &SpaceRef, b: &SpaceRef) -> Result<()> {
        if StateSpace::same(a, b) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

/// A member of a basis family: a set of states together with the union
/// round that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisSet {
    members: Vec<StateId>,
    generation: usize,
    carrier: usize,
}

impl BasisSet {
    pub fn new(space: &StateSpace, members: impl IntoIterator<Item = StateId>) -> Result<Self> {
        let mut members: Vec<StateId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            space.check_state(last)?;
        }
        Ok(BasisSet {
            members,
            generation: 0,
            carrier: space.len(),
        })
    }

    fn raw(members: Vec<StateId>, generation: usize, carrier: usize) -> Self {
        BasisSet {
            members,
            generation,
            carrier,
        }
    }

    pub fn members(&self) -> &[StateId] {
        &self.members
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn carrier(&self) -> usize {
        self.carrier
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: StateId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn is_subset(&self, other: &BasisSet) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    pub fn is_disjoint(&self, other: &BasisSet) -> bool {
        self.members.iter().all(|&x| !other.contains(x))
    }

    /// Union of two sets over the same carrier, one generation past both.
    pub fn union_of(&self, other: &BasisSet) -> Result<BasisSet> {
        if self.carrier != other.carrier {
            return Err(Error::SpaceMismatch);
        }
        let members = self
            .members
            .iter()
            .merge(other.members.iter())
            .dedup()
            .copied()
            .collect();
        Ok(BasisSet::raw(
            members,
            self.generation.max(other.generation) + 1,
            self.carrier,
        ))
    }
}

fn push_unique(
    family: &mut Vec<BasisSet>,
    seen: &mut HashSet<Vec<StateId>>,
    set: BasisSet,
) -> Result<()> {
    if seen.insert(set.members.clone()) {
        if family.len() >= MAX_BASIS {
            return Err(Error::BasisTooLarge(MAX_BASIS));
        }
        family.push(set);
    }
    Ok(())
}

/// One round of pairwise unions over the whole family.
fn union_round(family: &mut Vec<BasisSet>, seen: &mut HashSet<Vec<StateId>>) -> Result<bool> {
    let before = family.len();
    for i in 0..before {
        for j in (i + 1)..before {
            let u = family[i].union_of(&family[j])?;
            push_unique(family, seen, u)?;
        }
    }
    Ok(family.len() > before)
}

fn ceil_log2(k: usize) -> usize {
    (usize::BITS - (k.max(1) - 1).leading_zeros()) as usize
}

/// Nonempty subsets of size at most `max_size`, ordered by size and then
/// lexicographically.
fn subsets_up_to(n: usize, max_size: usize) -> Result<Vec<BasisSet>> {
    let max_size = max_size.min(n);
    let mut total: usize = 0;
    let mut binom: usize = 1;
    for k in 1..=max_size {
        binom = binom.saturating_mul(n + 1 - k) / k;
        total = total.saturating_add(binom);
        if total > MAX_BASIS {
            return Err(Error::BasisTooLarge(MAX_BASIS));
        }
    }
    let mut family = Vec::with_capacity(total);
    for k in 1..=max_size {
        for combo in (0..n).combinations(k) {
            family.push(BasisSet::raw(combo, ceil_log2(k), n));
        }
    }
    Ok(family)
}

/// Every nonempty subset of the carrier; the basis that generates the full
/// algebra of a finite space.
pub fn power_set_basis(space: &StateSpace) -> Result<Vec<BasisSet>> {
    subsets_up_to(space.len(), space.len())
}

/// A finite basis family for the space's topology.
///
/// Discrete spaces get all subsets of at most `2^depth` states (the result of
/// `depth` rounds of pairwise unions starting from the singletons). Interval
/// spaces get aligned dyadic blocks of up to `2^depth` cells plus their
/// pairwise unions. Two-sided sequence spaces start from the isolated
/// singletons and the tail neighbourhoods of `∞`, followed by `depth` union
/// rounds.
pub fn generate_basis(space: &StateSpace, depth: usize) -> Result<Vec<BasisSet>> {
    let n = space.len();
    match space.topology() {
        Topology::Discrete => {
            let max_size = if depth >= usize::BITS as usize - 1 {
                n
            } else {
                (1usize << depth).min(n)
            };
            subsets_up_to(n, max_size)
        }
        Topology::Interval { .. } => {
            let mut family = Vec::new();
            let mut seen = HashSet::new();
            for level in 0..=depth.min(usize::BITS as usize - 2) {
                let size = 1usize << level;
                let mut start = 0;
                while start < n {
                    let end = (start + size).min(n);
                    push_unique(
                        &mut family,
                        &mut seen,
                        BasisSet::raw((start..end).collect(), level, n),
                    )?;
                    start = end;
                }
                if size >= n {
                    break;
                }
            }
            union_round(&mut family, &mut seen)?;
            Ok(family)
        }
        Topology::TwoSidedSequence { n: trunc } => {
            let mut family = Vec::new();
            let mut seen = HashSet::new();
            let infinity = 2 * trunc;
            for id in 0..infinity {
                push_unique(&mut family, &mut seen, BasisSet::raw(vec![id], 0, n))?;
            }
            for m in 1..=trunc {
                // {∞} ∪ {±k : k ≥ m}
                let tail: Vec<StateId> = (0..=trunc - m).chain(trunc + m - 1..=infinity).collect();
                push_unique(&mut family, &mut seen, BasisSet::raw(tail, 0, n))?;
            }
            for _ in 0..depth {
                if !union_round(&mut family, &mut seen)? {
                    break;
                }
            }
            Ok(family)
        }
    }
}

/// Atoms of the algebra generated by a family of sets, restricted to their
/// union.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub pieces: Vec<BasisSet>,
    /// `membership[m]` lists the input indices `n` with `pieces[m] ⊆ sets[n]`.
    pub membership: Vec<Vec<usize>>,
}

/// Split the union of `sets` into disjoint pieces, each contained in or
/// disjoint from every input set.
pub fn refine_to_disjoint(sets: &[BasisSet]) -> Result<Refinement> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Precondition("refinement needs at least one set".into()))?;
    let carrier = first.carrier;
    if sets.iter().any(|s| s.carrier != carrier) {
        return Err(Error::SpaceMismatch);
    }
    let mut signatures: Vec<Vec<usize>> = Vec::new();
    let mut pieces: Vec<Vec<StateId>> = Vec::new();
    for x in 0..carrier {
        let signature: Vec<usize> = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(x))
            .map(|(i, _)| i)
            .collect();
        if signature.is_empty() {
            continue;
        }
        match signatures.iter().position(|s| *s == signature) {
            Some(m) => pieces[m].push(x),
            None => {
                signatures.push(signature);
                pieces.push(vec![x]);
            }
        }
    }
    let generation = sets.iter().map(|s| s.generation).max().unwrap_or(0);
    Ok(Refinement {
        pieces: pieces
            .into_iter()
            .map(|p| BasisSet::raw(p, generation, carrier))
            .collect(),
        membership: signatures,
    })
}

/// A bounded function on a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedFunction {
    space: SpaceRef,
    values: Vec<f64>,
    sup_norm: f64,
}

impl BoundedFunction {
    pub fn new(space: &SpaceRef, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Dimension {
                expected: space.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(BoundedFunction {
            space: Arc::clone(space),
            values,
            sup_norm,
        })
    }

    pub fn from_fn(space: &SpaceRef, f: impl FnMut(StateId) -> f64) -> Result<Self> {
        BoundedFunction::new(space, space.states().map(f).collect())
    }

    pub fn constant(space: &SpaceRef, c: f64) -> Result<Self> {
        BoundedFunction::new(space, vec![c; space.len()])
    }

    pub fn one(space: &SpaceRef) -> Self {
        BoundedFunction::constant(space, 1.0).expect("constant 1 is finite")
    }

    pub fn indicator(space: &SpaceRef, set: &BasisSet) -> Result<Self> {
        if set.carrier() != space.len() {
            return Err(Error::SpaceMismatch);
        }
        BoundedFunction::from_fn(space, |x| if set.contains(x) { 1.0 } else { 0.0 })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, id: StateId) -> f64 {
        self.values[id]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }
}

/// Continuity test on the finite surrogate.
///
/// Discrete spaces: every function is continuous. Interval spaces: the
/// largest jump between neighbouring cells must stay below `tau`. Two-sided
/// sequence spaces: `|f(±n) - f(∞)|` must stay below `tau` for every `n` in
/// the outer quarter of indices, `n ≥ N - N/4`.
pub fn is_continuous(f: &BoundedFunction, tau: f64) -> bool {
    let space = f.space();
    let v = f.values();
    match space.topology() {
        Topology::Discrete => true,
        Topology::Interval { .. } => v.windows(2).all(|w| (w[1] - w[0]).abs() < tau),
        Topology::TwoSidedSequence { n } => {
            let at_inf = v[2 * n];
            let band_start = n - n / 4;
            (band_start..=n).all(|m| {
                let pos = space.seq_index(SeqPoint::Pos(m)).expect("in range");
                let neg = space.seq_index(SeqPoint::Neg(m)).expect("in range");
                (v[pos] - at_inf).abs().max((v[neg] - at_inf).abs()) < tau
            })
        }
    }
}
