//! Markov chains and continuous-time Markov semigroups: evaluation, the
//! hypothesis checks of Doob's stability theorem, and empirical convergence
//! to the invariant measure in total variation.

mod expm;

pub use expm::{expm, expm_pade, expm_uniformization};

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::TransitionKernel;
use crate::measure::{SignedMeasure, DEFAULT_TAU_SUPP};
use crate::operator::MeasureOperator;
use crate::space::{BoundedFunction, SpaceRef, StateId};

/// Row-mass tolerance when validating a step kernel or a rate matrix.
pub const MODEL_TOL: f64 = 1e-12;
/// Row-mass tolerance of [`is_markovian`].
pub const MARKOV_TOL: f64 = 1e-9;
/// Stochastic continuity passes when the last deviation is below this.
pub const TAU_SC: f64 = 1e-6;
/// Maximum entry error allowed in the semigroup law.
pub const SEMIGROUP_LAW_TOL: f64 = 1e-10;
/// Stopping tolerance of the invariant-measure power iteration.
pub const INVARIANT_TOL: f64 = 1e-12;
/// Largest accepted residual `‖μP - μ‖_TV` of a computed invariant measure.
pub const INVARIANT_RESIDUAL_TOL: f64 = 1e-10;
/// Iteration cap of the power iteration.
pub const INVARIANT_MAX_ITER: usize = 1_000_000;
/// Two fixed points farther apart than this flag non-uniqueness.
pub const UNIQUENESS_TOL: f64 = 1e-9;
/// Seed of the second, random start of the power iteration.
pub const INVARIANT_SEED: u64 = 0;
/// Rate fits use only distances above this (relative to `max(1, ‖ν‖)`).
pub const FIT_FLOOR: f64 = 1e-9;
/// Number of trailing trace points in the rate fit.
pub const FIT_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// One-step kernel `P`; time counts steps.
    Discrete(TransitionKernel),
    /// Rate matrix `Q`; `T(t) = exp(tQ)`.
    Continuous(TransitionKernel),
}

#[derive(Debug, Clone)]
pub struct SemigroupModel {
    generator: Generator,
    tau_supp: f64,
    invariant: OnceLock<InvariantMeasure>,
}

impl PartialEq for SemigroupModel {
    fn eq(&self, other: &Self) -> bool {
        self.generator == other.generator
    }
}

/// Every row is nonnegative with mass within [`MARKOV_TOL`] of 1.
pub fn is_markovian(k: &TransitionKernel) -> bool {
    k.is_positive() && (0..k.len()).all(|x| (k.row_mass(x) - 1.0).abs() <= MARKOV_TOL)
}

fn max_mass_defect(k: &TransitionKernel, target: f64) -> f64 {
    (0..k.len())
        .map(|x| (k.row_mass(x) - target).abs())
        .fold(0.0, f64::max)
}

impl SemigroupModel {
    pub fn discrete(step: TransitionKernel) -> Result<Self> {
        if !step.is_positive() {
            return Err(Error::Precondition(
                "step kernel has negative entries".into(),
            ));
        }
        let defect = max_mass_defect(&step, 1.0);
        if defect > MODEL_TOL {
            return Err(Error::Precondition(format!(
                "step kernel rows must have mass 1 (max defect {defect:e})"
            )));
        }
        Ok(SemigroupModel {
            generator: Generator::Discrete(step),
            tau_supp: DEFAULT_TAU_SUPP,
            invariant: OnceLock::new(),
        })
    }

    pub fn continuous(rate: TransitionKernel) -> Result<Self> {
        let n = rate.len();
        for x in 0..n {
            for y in 0..n {
                if x != y && rate.entry(x, y) < 0.0 {
                    return Err(Error::Precondition(format!(
                        "rate matrix has negative off-diagonal entry at ({x}, {y})"
                    )));
                }
            }
        }
        let defect = max_mass_defect(&rate, 0.0);
        if defect > MODEL_TOL {
            return Err(Error::Precondition(format!(
                "rate matrix rows must sum to 0 (max defect {defect:e})"
            )));
        }
        Ok(SemigroupModel {
            generator: Generator::Continuous(rate),
            tau_supp: DEFAULT_TAU_SUPP,
            invariant: OnceLock::new(),
        })
    }

    /// Weights at or below `tau` count as zero in support comparisons.
    pub fn with_tau_supp(mut self, tau: f64) -> Self {
        self.tau_supp = tau;
        self
    }

    pub fn tau_supp(&self) -> f64 {
        self.tau_supp
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.generator, Generator::Discrete(_))
    }

    pub fn matrix(&self) -> &TransitionKernel {
        match &self.generator {
            Generator::Discrete(k) | Generator::Continuous(k) => k,
        }
    }

    pub fn space(&self) -> &SpaceRef {
        self.matrix().space()
    }

    fn steps(&self, t: f64) -> Result<u64> {
        if !(t.is_finite() && t >= 0.0) || t.fract() != 0.0 {
            return Err(Error::InvalidTime(t));
        }
        Ok(t as u64)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidTime(t));
        }
        if self.is_discrete() {
            self.steps(t)?;
        }
        Ok(())
    }

    /// The kernel `k_t` of `T(t)`.
    pub fn evaluate(&self, t: f64) -> Result<TransitionKernel> {
        self.check_time(t)?;
        match &self.generator {
            Generator::Discrete(step) => {
                let mut remaining = self.steps(t)?;
                let mut result = TransitionKernel::identity(step.space());
                let mut base = step.clone();
                while remaining > 0 {
                    if remaining & 1 == 1 {
                        result = result.compose(&base)?;
                    }
                    remaining >>= 1;
                    if remaining > 0 {
                        base = base.compose(&base)?;
                    }
                }
                Ok(result)
            }
            Generator::Continuous(rate) => {
                let n = rate.len();
                TransitionKernel::from_flat(rate.space(), expm(n, rate.as_flat(), t))
            }
        }
    }

    /// Invariant probability measure, computed once and cached.
    pub fn invariant_measure(&self) -> Result<&InvariantMeasure> {
        if let Some(inv) = self.invariant.get() {
            return Ok(inv);
        }
        let computed = compute_invariant(self)?;
        Ok(self.invariant.get_or_init(|| computed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantMeasure {
    #[serde(serialize_with = "serialize_weights")]
    pub measure: SignedMeasure,
    /// A second, random start reached the same fixed point.
    pub unique: bool,
    pub iterations: usize,
    /// `‖μ T(1) - μ‖_TV`.
    pub residual: f64,
}

fn serialize_weights<S: serde::Serializer>(
    m: &SignedMeasure,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    m.weights().serialize(s)
}

/// Power iteration on the lazy kernel `(I + P) / 2`, which has the same
/// invariant measures as `P` and no periodicity. Once the step change and its
/// geometric tail estimate both fall below [`INVARIANT_TOL`], iteration goes
/// on while the change still shrinks, down to rounding level, for at most as
/// many extra steps again.
fn power_iterate(lazy: &MeasureOperator, start: SignedMeasure) -> Result<(SignedMeasure, usize)> {
    let n = start.len();
    let floor = 4.0 * n as f64 * f64::EPSILON;
    let mut current = start;
    let mut prev_change = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    let mut settled_at: Option<usize> = None;
    for k in 1..=INVARIANT_MAX_ITER {
        let next = lazy.apply(&current)?;
        let mass = next.total_mass();
        let next = next.scale(1.0 / mass);
        let change = next.tv_distance(&current)?;
        if let Some(at) = settled_at {
            if change >= prev_change || k > 2 * at {
                return Ok((current, k - 1));
            }
        }
        current = next;
        last_change = change;
        if change <= floor {
            return Ok((current, k));
        }
        if settled_at.is_none() && prev_change.is_finite() && prev_change > 0.0 {
            let ratio = (change / prev_change).min(1.0 - 1e-9);
            if change <= INVARIANT_TOL && change * ratio / (1.0 - ratio) <= INVARIANT_TOL {
                settled_at = Some(k);
            }
        }
        prev_change = change;
    }
    match settled_at {
        Some(_) => Ok((current, INVARIANT_MAX_ITER)),
        None => Err(Error::NoConvergence {
            iterations: INVARIANT_MAX_ITER,
            last_change,
        }),
    }
}

fn compute_invariant(model: &SemigroupModel) -> Result<InvariantMeasure> {
    let space = model.space().clone();
    let unit = model.evaluate(1.0)?;
    let lazy = MeasureOperator::new(unit.add(&TransitionKernel::identity(&space))?.scale(0.5));
    let (measure, iterations) = power_iterate(&lazy, SignedMeasure::uniform(&space))?;
    let residual = MeasureOperator::new(unit.clone())
        .apply(&measure)?
        .tv_distance(&measure)?;
    if residual > INVARIANT_RESIDUAL_TOL {
        return Err(Error::NoConvergence {
            iterations,
            last_change: residual,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(INVARIANT_SEED);
    let raw: Vec<f64> = (0..space.len())
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let start = SignedMeasure::new(&space, raw.into_iter().map(|w| w / total).collect())?;
    let (other, _) = power_iterate(&lazy, start)?;
    let unique = measure.tv_distance(&other)? <= UNIQUENESS_TOL;
    Ok(InvariantMeasure {
        measure,
        unique,
        iterations,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTrace {
    pub state: StateId,
    /// `|(T(t)f)(x) - f(x)|` along the time grid.
    pub deviations: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticContinuityReport {
    pub t_grid: Vec<f64>,
    pub probes: Vec<ProbeTrace>,
    pub pass: bool,
}

/// `(T(t)f)(x) → f(x)` as `t ↓ 0` along a nonincreasing grid.
pub fn stochastic_continuity_check(
    model: &SemigroupModel,
    probes: &[(BoundedFunction, StateId)],
    t_grid: &[f64],
) -> Result<StochasticContinuityReport> {
    if model.is_discrete() {
        return Err(Error::Unsupported(
            "stochastic continuity needs a continuous-time model".into(),
        ));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Precondition(
            "time grid must be nonempty and nonincreasing".into(),
        ));
    }
    let kernels = t_grid
        .iter()
        .map(|&t| model.evaluate(t).map(MeasureOperator::new))
        .collect::<Result<Vec<_>>>()?;
    let mut traces = Vec::with_capacity(probes.len());
    for (f, x) in probes {
        model.space().check_state(*x)?;
        let deviations = kernels
            .iter()
            .map(|op| Ok((op.adjoint_apply(f)?.value(*x) - f.value(*x)).abs()))
            .collect::<Result<Vec<f64>>>()?;
        let pass = deviations.last().is_some_and(|&d| d < TAU_SC);
        traces.push(ProbeTrace {
            state: *x,
            deviations,
            pass,
        });
    }
    Ok(StochasticContinuityReport {
        t_grid: t_grid.to_vec(),
        pass: traces.iter().all(|p| p.pass),
        probes: traces,
    })
}

/// Evidence that two rows are not equivalent: `k(x, A) > 0 = k(y, A)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegularityWitness {
    pub x: StateId,
    pub y: StateId,
    pub set: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub witness: Option<RegularityWitness>,
}

fn check_positive_time(model: &SemigroupModel, t: f64) -> Result<()> {
    model.check_time(t)?;
    if t <= 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn support_mask(row: &[f64], tau: f64) -> Vec<bool> {
    row.iter().map(|w| w.abs() > tau).collect()
}

/// Compares each row's support with row 0; returns a witness for the first
/// row that differs.
fn support_witness(
    k: &TransitionKernel,
    reference: &[bool],
    tau: f64,
) -> Option<RegularityWitness> {
    for x in 0..k.len() {
        let mask = support_mask(k.row(x), tau);
        let extra: Vec<StateId> = (0..mask.len())
            .filter(|&j| mask[j] && !reference[j])
            .collect();
        if !extra.is_empty() {
            return Some(RegularityWitness {
                x,
                y: 0,
                set: extra,
            });
        }
        let missing: Vec<StateId> = (0..mask.len())
            .filter(|&j| !mask[j] && reference[j])
            .collect();
        if !missing.is_empty() {
            return Some(RegularityWitness {
                x: 0,
                y: x,
                set: missing,
            });
        }
    }
    None
}

/// All rows of `k_{t0}` pairwise equivalent.
pub fn regularity_check(model: &SemigroupModel, t0: f64) -> Result<RegularityReport> {
    check_positive_time(model, t0)?;
    let k = model.evaluate(t0)?;
    let reference = support_mask(k.row(0), model.tau_supp);
    let witness = support_witness(&k, &reference, model.tau_supp);
    Ok(RegularityReport {
        regular: witness.is_none(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationEntry {
    pub r: f64,
    /// `max |k_{t0+r} - k_r k_{t0}|`.
    pub semigroup_error: f64,
    pub equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationReport {
    pub entries: Vec<PropagationEntry>,
    pub pass: bool,
}

/// Regularity at `t0` carries over to every `t0 + r`.
pub fn regularity_propagation_check(
    model: &SemigroupModel,
    t0: f64,
    r_grid: &[f64],
) -> Result<PropagationReport> {
    if !regularity_check(model, t0)?.regular {
        return Err(Error::Precondition(format!("model is not {t0}-regular")));
    }
    let base = model.evaluate(t0)?;
    let reference = support_mask(base.row(0), model.tau_supp);
    let mut entries = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let later = model.evaluate(t0 + r)?;
        let chained = model.evaluate(r)?.compose(&base)?;
        let semigroup_error = later.max_abs_diff(&chained)?;
        entries.push(PropagationEntry {
            r,
            semigroup_error,
            equivalent: support_witness(&later, &reference, model.tau_supp).is_none(),
        });
    }
    Ok(PropagationReport {
        pass: entries
            .iter()
            .all(|e| e.equivalent && e.semigroup_error <= SEMIGROUP_LAW_TOL),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub overlap: bool,
    /// `min_x q(x, Ω)` with `q = k_s ∧ k_r`.
    pub min_mass: f64,
    pub argmin: StateId,
}

/// Whether `k_s ∧ k_r` charges every row.
pub fn overlap_check(model: &SemigroupModel, s: f64, r: f64) -> Result<OverlapReport> {
    model.check_time(s)?;
    model.check_time(r)?;
    if !(r > s) {
        return Err(Error::Precondition(format!(
            "need r > s, got s = {s}, r = {r}"
        )));
    }
    let q = model.evaluate(s)?.meet(&model.evaluate(r)?)?;
    let (argmin, min_mass) =
        (0..q.len())
            .map(|x| (x, q.row_mass(x)))
            .fold(
                (0, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            );
    Ok(OverlapReport {
        overlap: min_mass > model.tau_supp,
        min_mass,
        argmin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpandingReport {
    pub expanding: bool,
    /// `(x, y)` with `y` in the reference support and `k_t(x, {y}) = 0`.
    pub witness: Option<(StateId, StateId)>,
}

/// Every row of `k_t` charges every state of `support(μ_ref)`.
pub fn expanding_check(
    model: &SemigroupModel,
    t: f64,
    reference: &SignedMeasure,
) -> Result<ExpandingReport> {
    let k = model.evaluate(t)?;
    crate::space::StateSpace::ensure_same(k.space(), reference.space())?;
    let tau = model.tau_supp;
    let support = reference.support(tau);
    let witness = (0..k.len())
        .flat_map(|x| support.iter().map(move |&y| (x, y)))
        .find(|&(x, y)| k.entry(x, y) <= tau);
    Ok(ExpandingReport {
        expanding: witness.is_none(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    /// `(t, ‖T(t)ν - ν(Ω)μ‖_TV)`.
    pub points: Vec<(f64, f64)>,
    /// Fitted decay factor per unit time over the trace tail.
    pub rate: Option<f64>,
    pub terminal: f64,
    pub tol: f64,
    pub converged: bool,
}

impl ConvergenceTrace {
    /// CSV with header `t,tv_distance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv_distance\n");
        for (t, d) in &self.points {
            out.push_str(&format!("{t},{d}\n"));
        }
        out
    }

    /// First time at which the distance is at or below `level`.
    pub fn first_time_below(&self, level: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(_, d)| *d <= level)
            .map(|(t, _)| *t)
    }
}

/// Default trace times: every step for discrete models, and a 24-point
/// geometric grid `t_max · 2^{-23..0}` (plus 0) for continuous ones.
pub fn default_time_grid(model: &SemigroupModel, t_max: f64) -> Result<Vec<f64>> {
    model.check_time(t_max)?;
    if model.is_discrete() {
        Ok((0..=t_max as u64).map(|n| n as f64).collect())
    } else {
        let mut grid = vec![0.0];
        grid.extend((0..24).rev().map(|j| t_max / 2f64.powi(j)));
        grid.dedup();
        Ok(grid)
    }
}

/// Least-squares slope of `ln d` against `t` over the last [`FIT_WINDOW`]
/// points above the floor, reported as `exp(slope)`.
fn fit_rate(points: &[(f64, f64)], floor: f64) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, d)| *d > floor)
        .map(|&(t, d)| (t, d.ln()))
        .collect();
    let tail = &usable[usable.len().saturating_sub(FIT_WINDOW)..];
    if tail.len() < 2 {
        return None;
    }
    let m = tail.len() as f64;
    let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = tail.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = tail.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    Some((sxy / sxx).exp())
}

/// Trace of `‖T(t)ν - ν(Ω)μ‖_TV` on the default grid up to `t_max`.
pub fn doob_convergence(
    model: &SemigroupModel,
    nu: &SignedMeasure,
    t_max: f64,
    tol: f64,
) -> Result<ConvergenceTrace> {
    let grid = default_time_grid(model, t_max)?;
    doob_convergence_on(model, nu, &grid, tol)
}

pub fn doob_convergence_on(
    model: &SemigroupModel,
    nu: &SignedMeasure,
    grid: &[f64],
    tol: f64,
) -> Result<ConvergenceTrace> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "time grid must be nonempty and increasing".into(),
        ));
    }
    crate::space::StateSpace::ensure_same(model.space(), nu.space())?;
    let inv = model.invariant_measure()?;
    if !inv.unique {
        return Err(Error::Precondition(
            "invariant measure is not unique; no single limit exists".into(),
        ));
    }
    let limit = inv.measure.scale(nu.total_mass());
    let mut points = Vec::with_capacity(grid.len());
    if model.is_discrete() {
        let step = MeasureOperator::new(model.matrix().clone());
        let mut current = nu.clone();
        let mut at = 0u64;
        for &t in grid {
            let target = model.steps(t)?;
            while at < target {
                current = step.apply(&current)?;
                at += 1;
            }
            points.push((t, current.tv_distance(&limit)?));
        }
    } else {
        for &t in grid {
            let moved = MeasureOperator::new(model.evaluate(t)?).apply(nu)?;
            points.push((t, moved.tv_distance(&limit)?));
        }
    }
    let floor = FIT_FLOOR * nu.total_variation().max(1.0);
    let rate = fit_rate(&points, floor);
    let terminal = points.last().map(|p| p.1).unwrap_or(0.0);
    let converged = terminal <= tol;
    let trace = ConvergenceTrace {
        points,
        rate,
        terminal,
        tol,
        converged,
    };
    let nondecreasing = trace.points.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-15);
    if !converged && nondecreasing {
        return Err(Error::Divergence {
            terminal,
            trace: Box::new(trace),
        });
    }
    Ok(trace)
}

/// Runs [`doob_convergence`] for several starts; traces come back in input
/// order.
pub fn doob_convergence_many(
    model: &SemigroupModel,
    starts: &[SignedMeasure],
    t_max: f64,
    tol: f64,
    exec: Execution,
) -> Result<Vec<ConvergenceTrace>> {
    // compute the cached invariant once before fanning out
    model.invariant_measure()?;
    exec.map_range(starts.len(), |i| {
        doob_convergence(model, &starts[i], t_max, tol)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn pass(pass: bool) -> Self {
        CheckResult {
            pass,
            value: None,
            witness: None,
            note: None,
        }
    }

    fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    fn failed(err: &Error) -> Self {
        CheckResult::pass(false).note(err.to_string())
    }
}

/// Per-hypothesis verdicts for Doob's theorem on a concrete model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoobReport {
    pub variant: &'static str,
    pub t0: f64,
    pub markovian: CheckResult,
    pub stochastic_continuity: CheckResult,
    pub regularity: CheckResult,
    pub regularity_propagation: CheckResult,
    pub overlap: CheckResult,
    pub invariant_measure: CheckResult,
    pub expanding: CheckResult,
    pub invariant_equivalence: CheckResult,
    /// Weights of the invariant measure (the limit profile), if computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<Vec<f64>>,
    /// On a finite Markov model the dual fixed point is the constant 1 and
    /// the quasi-interior fixed point is the invariant measure.
    pub fixed_points: String,
    pub all_pass: bool,
}

impl DoobReport {
    /// Names of the failing checks, in report order.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("markovian", &self.markovian),
            ("stochastic_continuity", &self.stochastic_continuity),
            ("regularity", &self.regularity),
            ("regularity_propagation", &self.regularity_propagation),
            ("overlap", &self.overlap),
            ("invariant_measure", &self.invariant_measure),
            ("expanding", &self.expanding),
            ("invariant_equivalence", &self.invariant_equivalence),
        ]
        .into_iter()
        .filter(|(_, c)| !c.pass)
        .map(|(name, _)| name)
        .collect()
    }
}

pub fn doob_hypothesis_report(model: &SemigroupModel, t0: f64) -> DoobReport {
    let space = model.space().clone();
    let k_t0 = check_positive_time(model, t0)
        .and_then(|_| model.evaluate(t0))
        .ok();

    let markovian = match &k_t0 {
        Some(k) => CheckResult::pass(is_markovian(model.matrix()) || !model.is_discrete())
            .value(max_mass_defect(k, 1.0))
            .note(if model.is_discrete() {
                "step kernel and k_t0 rows are probability measures"
            } else {
                "conservative generator; k_t0 rows are probability measures"
            })
            .and(is_markovian(k)),
        None => CheckResult::pass(false).note(format!("invalid t0 = {t0}")),
    };

    let stochastic_continuity = if model.is_discrete() {
        CheckResult::pass(true).note("not applicable in discrete time")
    } else {
        let probes: Vec<(BoundedFunction, StateId)> = space
            .states()
            .flat_map(|x| {
                let indicator =
                    BoundedFunction::from_fn(&space, |y| if y == x { 1.0 } else { 0.0 })
                        .expect("finite");
                [(BoundedFunction::one(&space), x), (indicator, x)]
            })
            .collect();
        let t_grid: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
        match stochastic_continuity_check(model, &probes, &t_grid) {
            Ok(r) => {
                let worst = r
                    .probes
                    .iter()
                    .filter_map(|p| p.deviations.last().copied())
                    .fold(0.0, f64::max);
                CheckResult::pass(r.pass).value(worst)
            }
            Err(e) => CheckResult::failed(&e),
        }
    };

    let (regularity, regular) = match regularity_check(model, t0) {
        Ok(r) => {
            let mut c = CheckResult::pass(r.regular);
            if let Some(w) = &r.witness {
                c = c.witness(format!(
                    "k(x={}, A) > 0 = k(y={}, A) for A = {:?}",
                    w.x, w.y, w.set
                ));
            }
            (c, r.regular)
        }
        Err(e) => (CheckResult::failed(&e), false),
    };

    let regularity_propagation = if regular {
        let r_grid: Vec<f64> = if model.is_discrete() {
            vec![0.0, 1.0, 2.0, 3.0]
        } else {
            vec![0.0, 0.1, 1.0, 10.0]
        };
        match regularity_propagation_check(model, t0, &r_grid) {
            Ok(r) => {
                let worst = r
                    .entries
                    .iter()
                    .map(|e| e.semigroup_error)
                    .fold(0.0, f64::max);
                CheckResult::pass(r.pass).value(worst)
            }
            Err(e) => CheckResult::failed(&e),
        }
    } else {
        CheckResult::pass(false).note("requires t0-regularity")
    };

    let overlap = match overlap_check(model, t0, 2.0 * t0) {
        Ok(r) => {
            let c = CheckResult::pass(r.overlap).value(r.min_mass);
            if r.overlap {
                c
            } else {
                c.witness(format!("q(x={}, Ω) = {:e}", r.argmin, r.min_mass))
            }
        }
        Err(e) => CheckResult::failed(&e),
    };

    let inv = model.invariant_measure();
    let invariant_measure = match &inv {
        Ok(i) => {
            let c = CheckResult::pass(i.unique).value(i.residual);
            if i.unique {
                c
            } else {
                c.witness("a second start converged to a different fixed point")
            }
        }
        Err(e) => CheckResult::failed(e),
    };

    let (expanding, invariant_equivalence) = match (&inv, &k_t0) {
        (Ok(i), Some(k)) => {
            let expanding = match expanding_check(model, t0, &i.measure) {
                Ok(r) => {
                    let c = CheckResult::pass(r.expanding);
                    match r.witness {
                        Some((x, y)) => c.witness(format!("k_t0(x={x}, {{{y}}}) = 0")),
                        None => c,
                    }
                }
                Err(e) => CheckResult::failed(&e),
            };
            let mismatch = (0..k.len()).find(|&x| {
                !k.row_measure(x)
                    .equivalent(&i.measure, model.tau_supp)
                    .unwrap_or(false)
            });
            let equivalence = match mismatch {
                None => CheckResult::pass(true),
                Some(x) => CheckResult::pass(false)
                    .witness(format!("k_t0(x={x}, ·) is not equivalent to μ")),
            };
            (expanding, equivalence)
        }
        _ => (
            CheckResult::pass(false).note("requires the invariant measure"),
            CheckResult::pass(false).note("requires the invariant measure"),
        ),
    };

    let mut report = DoobReport {
        variant: if model.is_discrete() {
            "discrete"
        } else {
            "continuous"
        },
        t0,
        markovian,
        stochastic_continuity,
        regularity,
        regularity_propagation,
        overlap,
        invariant_measure,
        expanding,
        invariant_equivalence,
        invariant: inv.ok().map(|i| i.measure.weights().to_vec()),
        fixed_points: "dual fixed point: constant 1; quasi-interior fixed point: invariant measure"
            .into(),
        all_pass: false,
    };
    report.all_pass = report.failures().is_empty();
    report
}

impl CheckResult {
    fn and(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::StateSpace;

    fn model(rows: Vec<Vec<f64>>) -> SemigroupModel {
        let s = StateSpace::discrete(rows.len()).unwrap();
        SemigroupModel::discrete(TransitionKernel::new(&s, rows).unwrap()).unwrap()
    }

    fn rates(rows: Vec<Vec<f64>>) -> SemigroupModel {
        let s = StateSpace::discrete(rows.len()).unwrap();
        SemigroupModel::continuous(TransitionKernel::new(&s, rows).unwrap()).unwrap()
    }

    fn two_state() -> SemigroupModel {
        model(vec![vec![0.9, 0.1], vec![0.2, 0.8]])
    }

    fn two_rate() -> SemigroupModel {
        rates(vec![vec![-1.0, 1.0], vec![2.0, -2.0]])
    }

    fn cycle() -> SemigroupModel {
        model(vec![vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    fn blocks() -> SemigroupModel {
        model(vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.3, 0.7, 0.0, 0.0],
            vec![0.0, 0.0, 0.6, 0.4],
            vec![0.0, 0.0, 0.1, 0.9],
        ])
    }

    #[test]
    fn model_validation() {
        let s = StateSpace::discrete(2).unwrap();
        let bad = TransitionKernel::new(&s, vec![vec![0.5, 0.6], vec![0.0, 1.0]]).unwrap();
        assert!(SemigroupModel::discrete(bad).is_err());
        let neg = TransitionKernel::new(&s, vec![vec![1.5, -0.5], vec![0.0, 1.0]]).unwrap();
        assert!(SemigroupModel::discrete(neg).is_err());
        let q = TransitionKernel::new(&s, vec![vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap();
        assert!(SemigroupModel::continuous(q).is_err());
        let q = TransitionKernel::new(&s, vec![vec![-1.0, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!(SemigroupModel::continuous(q).is_err());
    }

    #[test]
    fn evaluate_examples() {
        for m in [two_state(), two_rate()] {
            assert_eq!(
                m.evaluate(0.0).unwrap(),
                TransitionKernel::identity(m.space())
            );
        }
        let q = two_rate();
        for t in [0.1, 1.0, 7.5] {
            let k = q.evaluate(t).unwrap();
            assert!(is_markovian(&k));
            for x in 0..2 {
                assert!((k.row_mass(x) - 1.0).abs() < 1e-12);
            }
        }
        let p = two_state();
        assert!(matches!(p.evaluate(1.5), Err(Error::InvalidTime(_))));
        assert!(matches!(q.evaluate(-1.0), Err(Error::InvalidTime(_))));
        let p5 = p.evaluate(5.0).unwrap();
        let mut slow = TransitionKernel::identity(p.space());
        for _ in 0..5 {
            slow = slow.compose(p.matrix()).unwrap();
        }
        assert!(p5.max_abs_diff(&slow).unwrap() < 1e-15);
    }

    #[test]
    fn semigroup_law() {
        let q = two_rate();
        for s in [0.0, 0.3, 1.0, 2.5] {
            for r in [0.0, 0.7, 4.0] {
                let lhs = q.evaluate(s + r).unwrap();
                let rhs = q
                    .evaluate(r)
                    .unwrap()
                    .compose(&q.evaluate(s).unwrap())
                    .unwrap();
                assert!(lhs.max_abs_diff(&rhs).unwrap() <= SEMIGROUP_LAW_TOL);
            }
        }
        let p = two_state();
        for s in 0..4 {
            for r in 0..4 {
                let lhs = p.evaluate((s + r) as f64).unwrap();
                let rhs = p
                    .evaluate(r as f64)
                    .unwrap()
                    .compose(&p.evaluate(s as f64).unwrap())
                    .unwrap();
                assert!(lhs.max_abs_diff(&rhs).unwrap() <= SEMIGROUP_LAW_TOL);
            }
        }
    }

    #[test]
    fn markovian_examples() {
        assert!(is_markovian(two_state().matrix()));
        let s = StateSpace::two_sided_sequence(3).unwrap();
        let signed = TransitionKernel::from_sparse(&s, &[(3, 3, 1.0), (3, 4, -1.0)]).unwrap();
        assert!(!is_markovian(&signed));
    }

    #[test]
    fn stochastic_continuity_examples() {
        let q = two_rate();
        let s = q.space().clone();
        let f = BoundedFunction::new(&s, vec![0.3, -1.2]).unwrap();
        let probes = vec![
            (BoundedFunction::one(&s), 0),
            (f.clone(), 0),
            (f.clone(), 1),
        ];
        let grid = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 0.0];
        let r = stochastic_continuity_check(&q, &probes, &grid).unwrap();
        assert!(r.pass);
        assert!(r.probes[0].deviations.iter().all(|&d| d < 1e-15));
        let qnorm = 4.0; // max absolute row sum of Q
        for p in &r.probes {
            assert_eq!(*p.deviations.last().unwrap(), 0.0);
            for (d, t) in p.deviations.iter().zip(grid) {
                assert!(*d <= qnorm * f.sup_norm() * t + 1e-12 + 10.0 * t * t);
            }
        }
        assert!(stochastic_continuity_check(&two_state(), &probes, &grid).is_err());
        assert!(stochastic_continuity_check(&q, &probes, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn regularity_examples() {
        assert!(regularity_check(&two_state(), 1.0).unwrap().regular);
        let r = regularity_check(&blocks(), 1.0).unwrap();
        assert!(!r.regular);
        let w = r.witness.unwrap();
        let k = blocks().evaluate(1.0).unwrap();
        let a = crate::space::BasisSet::new(blocks().space(), w.set.clone()).unwrap();
        assert!(k.mass(w.x, &a) > 0.0 && k.mass(w.y, &a) == 0.0);
        assert!((w.x < 2) != (w.y < 2), "witness crosses blocks");
        assert!(regularity_check(&two_rate(), 0.01).unwrap().regular);
        assert!(regularity_check(&two_state(), 0.0).is_err());
        assert!(regularity_check(&two_state(), 0.5).is_err());
    }

    #[test]
    fn propagation_examples() {
        let p = two_state();
        let r = regularity_propagation_check(&p, 1.0, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(r.pass);
        assert_eq!(r.entries[0].semigroup_error, 0.0);
        let q = two_rate();
        let r = regularity_propagation_check(&q, 0.5, &[0.0, 0.1, 1.0, 10.0]).unwrap();
        assert!(r.pass);
        assert!(regularity_propagation_check(&blocks(), 1.0, &[1.0]).is_err());
    }

    #[test]
    fn overlap_examples() {
        assert!(overlap_check(&two_state(), 2.0, 2.0).is_err());
        let c = overlap_check(&cycle(), 1.0, 2.0).unwrap();
        assert!(!c.overlap);
        assert_eq!(c.min_mass, 0.0);
        let p = overlap_check(&two_state(), 1.0, 2.0).unwrap();
        assert!(p.overlap && p.min_mass > 0.0);
    }

    #[test]
    fn invariant_examples() {
        let id = model(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let inv = id.invariant_measure().unwrap();
        assert_eq!(inv.measure.weights(), &[0.5, 0.5]);
        assert!(!inv.unique);

        // μP = μ with μ(Ω) = 1: 0.1 μ0 = 0.2 μ1
        let expected = [2.0 / 3.0, 1.0 / 3.0];
        for m in [two_state(), two_rate()] {
            let inv = m.invariant_measure().unwrap();
            assert!(inv.unique);
            for (got, want) in inv.measure.weights().iter().zip(expected) {
                assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
            }
        }
        let cyc = cycle().invariant_measure().unwrap().clone();
        assert!(cyc.unique);
        assert!(!blocks().invariant_measure().unwrap().unique);
    }

    #[test]
    fn expanding_examples() {
        let p = two_state();
        let mu = p.invariant_measure().unwrap().measure.clone();
        assert!(expanding_check(&p, 1.0, &mu).unwrap().expanding);
        let b = blocks();
        let mu = SignedMeasure::uniform(b.space());
        assert!(!expanding_check(&b, 1.0, &mu).unwrap().expanding);
        // irreducible and aperiodic, but with zeros in P itself
        let m = model(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
        ]);
        let mu = SignedMeasure::uniform(m.space());
        assert!(!expanding_check(&m, 1.0, &mu).unwrap().expanding);
        assert!(expanding_check(&m, 8.0, &mu).unwrap().expanding);
    }

    #[test]
    fn convergence_examples() {
        let p = two_state();
        let mu = p.invariant_measure().unwrap().measure.clone();
        let t = doob_convergence(&p, &mu, 50.0, 1e-8).unwrap();
        assert!(t.points.iter().all(|&(_, d)| d < 1e-11));

        let d0 = SignedMeasure::dirac(p.space(), 0).unwrap();
        let t = doob_convergence(&p, &d0, 128.0, 1e-8).unwrap();
        assert!(t.converged);
        let rate = t.rate.unwrap();
        assert!((rate - 0.7).abs() / 0.7 < 0.05, "rate {rate}");

        let zero_mass = d0
            .sub(&SignedMeasure::dirac(p.space(), 1).unwrap())
            .unwrap();
        let t = doob_convergence(&p, &zero_mass, 128.0, 1e-8).unwrap();
        assert!(t.converged && t.terminal < 1e-12);
    }

    #[test]
    fn cycle_trace_diverges() {
        let c = cycle();
        let s = c.space().clone();
        let nu = SignedMeasure::dirac(&s, 0)
            .unwrap()
            .sub(&SignedMeasure::dirac(&s, 1).unwrap())
            .unwrap();
        match doob_convergence(&c, &nu, 20.0, 1e-8) {
            Err(Error::Divergence { trace, .. }) => {
                assert!(trace.points.iter().all(|&(_, d)| d == 2.0));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn report_verdicts() {
        let r = doob_hypothesis_report(&two_state(), 1.0);
        assert!(r.all_pass, "{:?}", r.failures());
        let r = doob_hypothesis_report(&two_rate(), 0.5);
        assert!(r.all_pass, "{:?}", r.failures());
        let r = doob_hypothesis_report(&cycle(), 1.0);
        let failures = r.failures();
        assert!(failures.contains(&"overlap") && failures.contains(&"expanding"));
        let r = doob_hypothesis_report(&blocks(), 1.0);
        assert!(!r.regularity.pass && r.regularity.witness.is_some());
    }

    #[test]
    fn convergence_many_matches_single() {
        let p = two_state();
        let starts: Vec<_> = (0..2)
            .map(|x| SignedMeasure::dirac(p.space(), x).unwrap())
            .collect();
        let many = doob_convergence_many(&p, &starts, 64.0, 1e-8, Execution::Parallel).unwrap();
        for (start, trace) in starts.iter().zip(&many) {
            assert_eq!(*trace, doob_convergence(&p, start, 64.0, 1e-8).unwrap());
        }
    }
}
