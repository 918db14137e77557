//! Alternating (see-saw) maximization over messages and measurements.
//!
//! With the measurement fixed the metric is linear in each sender's
//! operators, and with the messages fixed it is linear in the measurement.
//! The message half-step is an exact coordinate argmax; the measurement
//! half-step is a monotone ascent over orthonormal bases guarded against
//! the previous measurement. The metric therefore never decreases within a
//! restart.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    c, closest_unitary, expectation, herm_eig, identity, projector, r, slot_contraction,
    symmetrize, trace_product, ComplexMatrix, ComplexVector,
};
use crate::scenario::counterexample::{
    counterexample_value, effective_operator, CounterexampleStrategy, COEFFS,
};
use crate::scenario::partial_bell::{build_partial_w, s_comm};
use crate::scenario::{a_operators, build_all_w, success_metric, witness_terms, AOperators};
use crate::selftest::ppt_min_eig;
use crate::states::{
    ghz_basis_state, random_ket, random_pure_sender, BitString, Povm, SenderStates, Strategy,
};

pub const DEFAULT_CONV_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_RESTARTS: usize = 50;

/// Partial-transpose eigenvalue below which an element is flagged entangled.
pub const ENTANGLEMENT_TOL: f64 = 1e-8;

/// Eigenvalues closer than this count as degenerate when picking vectors.
const DEGENERACY_TOL: f64 = 1e-10;
const ASCENT_STEPS: usize = 500;
const ASCENT_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeesawMetric {
    Ghz,
    Counterexample,
    PartialBell,
}

impl FromStr for SeesawMetric {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().replace('-', "_").as_str() {
            "ghz" => Ok(Self::Ghz),
            "counterexample" => Ok(Self::Counterexample),
            "partial_bell" => Ok(Self::PartialBell),
            _ => Err(invalid(format!(
                "unknown metric {text:?}; expected ghz, counterexample or partial-bell"
            ))),
        }
    }
}

impl fmt::Display for SeesawMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ghz => "ghz",
            Self::Counterexample => "counterexample",
            Self::PartialBell => "partial_bell",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeesawConfig {
    pub n: usize,
    pub metric: SeesawMetric,
    pub restarts: usize,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub seed: u64,
}

impl SeesawConfig {
    /// Default iteration budget, seed 0.
    pub fn new(n: usize, metric: SeesawMetric) -> Self {
        Self {
            n,
            metric,
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
            conv_tol: DEFAULT_CONV_TOL,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(invalid("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.conv_tol > 0.0 && self.conv_tol.is_finite()) {
            return Err(invalid(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        match self.metric {
            SeesawMetric::Ghz if self.n < 2 => {
                Err(invalid(format!("need at least two senders, got {}", self.n)))
            }
            SeesawMetric::Ghz if self.n > crate::MAX_SENDERS => Err(Error::Unsupported(format!(
                "n = {} exceeds the supported maximum of {}",
                self.n,
                crate::MAX_SENDERS
            ))),
            SeesawMetric::Counterexample | SeesawMetric::PartialBell if self.n != 2 => Err(
                invalid(format!("the {} metric has two senders, got n = {}", self.metric, self.n)),
            ),
            _ => Ok(()),
        }
    }
}

/// Best strategy found by a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Optimum {
    Game(Strategy),
    Counterexample(CounterexampleStrategy),
}

impl Optimum {
    pub fn povm(&self) -> Povm {
        match self {
            Self::Game(s) => s.povm.clone(),
            Self::Counterexample(s) => s.povm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeesawResult {
    pub config: SeesawConfig,
    pub best_value: f64,
    pub best_restart: usize,
    pub best_strategy: Optimum,
    /// Iterations performed by the winning restart.
    pub iters_used: usize,
    /// Metric after initialization and after every iteration, per restart.
    pub history: Vec<Vec<f64>>,
}

impl SeesawResult {
    pub fn to_value(&self) -> Value {
        let strategy = match &self.best_strategy {
            Optimum::Game(s) => crate::io::strategy_to_value(s),
            Optimum::Counterexample(s) => crate::io::counterexample_to_value(s),
        };
        json!({
            "config": serde_json::to_value(&self.config).expect("plain data"),
            "best_value": self.best_value,
            "best_restart": self.best_restart,
            "iters_used": self.iters_used,
            "history": self.history,
            "best_strategy": strategy,
        })
    }
}

/// `restart,iter,value` rows.
pub fn write_history_csv<W: Write>(result: &SeesawResult, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["restart", "iter", "value"])?;
    for (restart, values) in result.history.iter().enumerate() {
        for (iter, value) in values.iter().enumerate() {
            writer.write_record([
                restart.to_string(),
                iter.to_string(),
                crate::io::format_g17(*value),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Partial-transpose test of one measurement element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementClass {
    pub ppt_min_eig: f64,
    pub entangled: bool,
}

/// PPT test of every element of a two-qubit measurement, each normalized
/// to unit trace.
pub fn classify_outcome_measurement(povm: &Povm) -> Result<Vec<ElementClass>> {
    povm.elements
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if m.nrows() != 4 || m.ncols() != 4 {
                return Err(invalid(format!(
                    "element {k} is {}x{}; classification needs two qubits",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let trace = m.trace().re;
            if trace <= 1e-14 {
                return Ok(ElementClass {
                    ppt_min_eig: 0.0,
                    entangled: false,
                });
            }
            let ppt_min_eig = ppt_min_eig(&(m / r(trace)))?;
            Ok(ElementClass {
                ppt_min_eig,
                entangled: ppt_min_eig < -ENTANGLEMENT_TOL,
            })
        })
        .collect()
}

// Measurement half-step

fn column_owners(ranks: &[usize]) -> Vec<usize> {
    ranks
        .iter()
        .enumerate()
        .flat_map(|(s, &rank)| std::iter::repeat_n(s, rank))
        .collect()
}

fn basis_objective(basis: &ComplexMatrix, ws: &[ComplexMatrix], owners: &[usize]) -> f64 {
    owners
        .iter()
        .enumerate()
        .map(|(k, &s)| expectation(&basis.column(k).into_owned(), &ws[s]).re)
        .sum()
}

fn elements_from_basis(basis: &ComplexMatrix, ranks: &[usize]) -> Vec<ComplexMatrix> {
    let dim = basis.nrows();
    let mut elements = vec![ComplexMatrix::zeros(dim, dim); ranks.len()];
    for (k, s) in column_owners(ranks).into_iter().enumerate() {
        elements[s] += projector(&basis.column(k).into_owned());
    }
    elements
}

/// Orthonormalized stack of the top `rank` eigenvectors of each element.
fn basis_from_elements(elements: &[ComplexMatrix], ranks: &[usize]) -> Result<ComplexMatrix> {
    let mut cols = Vec::new();
    for (m, &rank) in elements.iter().zip(ranks) {
        let eig = herm_eig(m)?;
        let dim = m.nrows();
        cols.extend((0..rank).map(|k| eig.vector(dim - 1 - k)));
    }
    Ok(closest_unitary(&ComplexMatrix::from_columns(&cols)))
}

/// Monotone ascent of `Σ_k u_k† W_{owner(k)} u_k` over unitaries: each step
/// takes the polar factor of the gradient of the shifted (convex) objective.
fn ascend(
    mut basis: ComplexMatrix,
    ws: &[ComplexMatrix],
    owners: &[usize],
    shift: f64,
) -> (ComplexMatrix, f64) {
    let mut value = basis_objective(&basis, ws, owners);
    for _ in 0..ASCENT_STEPS {
        let cols: Vec<ComplexVector> = owners
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let u = basis.column(k).into_owned();
                &ws[s] * &u + &u * r(shift)
            })
            .collect();
        let next = closest_unitary(&ComplexMatrix::from_columns(&cols));
        let next_value = basis_objective(&next, ws, owners);
        let gain = next_value - value;
        if gain > 0.0 {
            basis = next;
            value = next_value;
        }
        if gain <= ASCENT_TOL * value.abs().max(1.0) {
            break;
        }
    }
    (basis, value)
}

/// Measurement with `ranks[s]`-dimensional projective elements maximizing
/// `Σ_s Tr(M_s W_s)` among the ascents started from the stacked top
/// eigenvectors and from each of `seeds`. Never worse than `previous`.
fn improve_povm(
    ws: &[ComplexMatrix],
    ranks: &[usize],
    seeds: Vec<ComplexMatrix>,
    previous: Option<&[ComplexMatrix]>,
) -> Result<Vec<ComplexMatrix>> {
    let dim = ws[0].nrows();
    if ws.iter().all(|w| w.norm() < 1e-14) {
        return Ok(match previous {
            Some(prev) => prev.to_vec(),
            None => ranks
                .iter()
                .map(|&rank| identity(dim) * r(rank as f64 / dim as f64))
                .collect(),
        });
    }
    let eigs = ws.iter().map(herm_eig).collect::<Result<Vec<_>>>()?;
    let shift = eigs.iter().map(|e| -e.min()).fold(0.0, f64::max);
    let mut cols = Vec::with_capacity(dim);
    for (eig, &rank) in eigs.iter().zip(ranks) {
        if rank == 1 {
            cols.push(eig.top_vector(DEGENERACY_TOL));
        } else {
            cols.extend((0..rank).map(|k| eig.vector(dim - 1 - k)));
        }
    }
    let owners = column_owners(ranks);
    let stacked = closest_unitary(&ComplexMatrix::from_columns(&cols));
    let mut best: Option<(ComplexMatrix, f64)> = None;
    for start in std::iter::once(stacked).chain(seeds) {
        let (basis, value) = ascend(start, ws, &owners, shift);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((basis, value));
        }
    }
    let (basis, value) = best.expect("at least one start");
    if let Some(prev) = previous {
        let prev_value: f64 = prev.iter().zip(ws).map(|(m, w)| trace_product(m, w).re).sum();
        if prev_value > value {
            return Ok(prev.to_vec());
        }
    }
    Ok(elements_from_basis(&basis, ranks))
}

fn ghz_basis(n: usize) -> ComplexMatrix {
    let cols: Vec<ComplexVector> = BitString::all(n)
        .map(|s| ghz_basis_state(&s, n).expect("length matches"))
        .collect();
    ComplexMatrix::from_columns(&cols)
}

/// Rank-one projective measurement maximizing `Σ_s Tr(M_s W_s)` for the
/// given operators, seeded from the stacked top eigenvectors of the `W_s`
/// and from the GHZ basis. Vanishing operators give the uniform split
/// `I/2^n`.
pub fn optimal_povm_for_states(n: usize, ops: &AOperators) -> Result<Povm> {
    let ws = build_all_w(n, ops)?;
    let ranks = vec![1; ws.len()];
    Ok(Povm {
        elements: improve_povm(&ws, &ranks, vec![ghz_basis(n)], None)?,
    })
}

// Message half-step

/// `Tr(matrix · ⊗_k O_k)` with `O_k = A^{(k)}_x` for `Some(x)` and the
/// identity for `None`; coefficients are folded into `matrix`.
struct ProductTerm {
    matrix: ComplexMatrix,
    slots: Vec<Option<usize>>,
}

fn ghz_terms(n: usize, povm: &Povm) -> Vec<ProductTerm> {
    let dim = 1usize << n;
    let mut terms: Vec<ProductTerm> = witness_terms(n, &BitString::zeros(n))
        .into_iter()
        .map(|t| ProductTerm {
            matrix: ComplexMatrix::zeros(dim, dim),
            slots: t.slots,
        })
        .collect();
    for s in BitString::all(n) {
        let m = &povm.elements[s.index()];
        for (term, wt) in terms.iter_mut().zip(witness_terms(n, &s)) {
            term.matrix += m * r(wt.coeff);
        }
    }
    terms
}

/// `Tr((M₁−M₂)P) + Tr((M₁+M₂−2M₃)Q)` with `P = (A¹₀+A¹₁)⊗A²₀` and
/// `Q = (A¹₀−A¹₁)⊗A²₁`.
fn partial_bell_terms(povm: &Povm) -> Vec<ProductTerm> {
    let [m1, m2, m3] = [&povm.elements[0], &povm.elements[1], &povm.elements[2]];
    let d = m1 - m2;
    let e = m1 + m2 - m3 * r(2.0);
    vec![
        ProductTerm { matrix: d.clone(), slots: vec![Some(0), Some(0)] },
        ProductTerm { matrix: d, slots: vec![Some(1), Some(0)] },
        ProductTerm { matrix: e.clone(), slots: vec![Some(0), Some(1)] },
        ProductTerm { matrix: -e, slots: vec![Some(1), Some(1)] },
    ]
}

fn orthogonal_ket(v: &ComplexVector) -> ComplexVector {
    ComplexVector::from_vec(vec![-v[1].conj(), v[0].conj()])
}

fn top_ket(g: &ComplexMatrix) -> ComplexVector {
    herm_eig(&symmetrize(g))
        .expect("symmetrized matrix is Hermitian")
        .top_vector(DEGENERACY_TOL)
}

/// Pure antipodal messages maximizing `Σ_x Tr(G_x (ρ_{0|x} − ρ_{1|x}))`.
pub fn optimal_sender(g: &[ComplexMatrix; 2]) -> SenderStates {
    let k0 = top_ket(&g[0]);
    let k1 = top_ket(&g[1]);
    let (o0, o1) = (orthogonal_ket(&k0), orthogonal_ket(&k1));
    SenderStates::from_kets([[k0, k1], [o0, o1]])
}

/// One cyclic pass over the senders, each replaced by its exact argmax.
fn improve_senders(senders: &mut [SenderStates], terms: &[ProductTerm]) {
    for j in 0..senders.len() {
        let ops = AOperators::from_senders(senders);
        let mut g = [ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)];
        for term in terms {
            let Some(x) = term.slots[j] else { continue };
            let others: Vec<Option<&ComplexMatrix>> = term
                .slots
                .iter()
                .enumerate()
                .map(|(k, slot)| if k == j { None } else { slot.map(|y| &ops.a[k][y]) })
                .collect();
            g[x] += slot_contraction(&term.matrix, &others, j);
        }
        senders[j] = optimal_sender(&g);
    }
}

fn check_game(strategy: &Strategy, metric: SeesawMetric) -> Result<()> {
    strategy.validate()?;
    let expected = match metric {
        SeesawMetric::Ghz => 1usize << strategy.n,
        SeesawMetric::PartialBell if strategy.n == 2 => 3,
        SeesawMetric::PartialBell => {
            return Err(invalid(format!(
                "the partial Bell metric has two senders, got n = {}",
                strategy.n
            )))
        }
        SeesawMetric::Counterexample => {
            return Err(invalid(
                "the counterexample metric uses three messages per sender; see optimal_counterexample_states",
            ))
        }
    };
    if strategy.povm.len() != expected {
        return Err(invalid(format!(
            "{metric} metric needs {expected} measurement elements, got {}",
            strategy.povm.len()
        )));
    }
    Ok(())
}

/// Replaces every sender's messages, one sender at a time, by the pure
/// antipodal messages maximizing the metric with everything else fixed.
pub fn optimal_states_for_povm(strategy: &Strategy, metric: SeesawMetric) -> Result<Strategy> {
    check_game(strategy, metric)?;
    let terms = match metric {
        SeesawMetric::Ghz => ghz_terms(strategy.n, &strategy.povm),
        _ => partial_bell_terms(&strategy.povm),
    };
    let mut next = strategy.clone();
    improve_senders(&mut next.senders, &terms);
    Ok(next)
}

pub fn game_metric(strategy: &Strategy, metric: SeesawMetric) -> Result<f64> {
    match metric {
        SeesawMetric::Ghz => success_metric(strategy),
        SeesawMetric::PartialBell => s_comm(strategy),
        SeesawMetric::Counterexample => Err(invalid(
            "the counterexample metric is evaluated on a CounterexampleStrategy",
        )),
    }
}

/// One message half-step followed by one measurement half-step.
pub fn seesaw_sweep(strategy: &Strategy, metric: SeesawMetric) -> Result<Strategy> {
    let mut next = optimal_states_for_povm(strategy, metric)?;
    let ops = a_operators(&next);
    let (ws, ranks) = match metric {
        SeesawMetric::Ghz => {
            let ws = build_all_w(next.n, &ops)?;
            let len = ws.len();
            (ws, vec![1; len])
        }
        _ => (build_partial_w(&ops)?.to_vec(), vec![1, 1, 2]),
    };
    let seeds = vec![basis_from_elements(&next.povm.elements, &ranks)?];
    next.povm.elements = improve_povm(&ws, &ranks, seeds, Some(&next.povm.elements))?;
    Ok(next)
}

// Counterexample half-steps

/// Projector onto the positive eigenspace of the effective operator, the
/// exact maximizer of `Tr(O M₀)` over `0 ≤ M₀ ≤ I`.
pub fn optimal_counterexample_measurement(
    first: &[ComplexMatrix; 3],
    second: &[ComplexMatrix; 3],
) -> ComplexMatrix {
    let o = effective_operator(first, second);
    let eig = herm_eig(&symmetrize(&o)).expect("symmetrized matrix is Hermitian");
    let mut m0 = ComplexMatrix::zeros(4, 4);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > DEGENERACY_TOL {
            m0 += projector(&eig.vector(k));
        }
    }
    m0
}

/// Sender 1's messages then sender 2's, each replaced by the top
/// eigenvector of its contracted effective operator.
pub fn optimal_counterexample_states(strategy: &CounterexampleStrategy) -> CounterexampleStrategy {
    let mut next = strategy.clone();
    for y1 in 0..3 {
        let mut g = ComplexMatrix::zeros(2, 2);
        for (y2, &coeff) in COEFFS[y1].iter().enumerate() {
            if coeff != 0.0 {
                g += slot_contraction(&next.m0, &[None, Some(&next.second[y2])], 0) * r(coeff);
            }
        }
        next.first[y1] = projector(&top_ket(&g));
    }
    for y2 in 0..3 {
        let mut g = ComplexMatrix::zeros(2, 2);
        for (y1, row) in COEFFS.iter().enumerate() {
            if row[y2] != 0.0 {
                g += slot_contraction(&next.m0, &[Some(&next.first[y1]), None], 1) * r(row[y2]);
            }
        }
        next.second[y2] = projector(&top_ket(&g));
    }
    next
}

pub fn counterexample_sweep(strategy: &CounterexampleStrategy) -> CounterexampleStrategy {
    let mut next = optimal_counterexample_states(strategy);
    next.m0 = optimal_counterexample_measurement(&next.first, &next.second);
    next
}

// Restarts

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn random_basis<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    closest_unitary(&g)
}

struct Run {
    value: f64,
    optimum: Optimum,
    history: Vec<f64>,
}

fn iterate<T>(
    config: &SeesawConfig,
    mut current: T,
    value_of: impl Fn(&T) -> Result<f64>,
    sweep: impl Fn(&T) -> Result<T>,
) -> Result<(T, Vec<f64>)> {
    let mut value = value_of(&current)?;
    let mut history = vec![value];
    for _ in 0..config.max_iters {
        current = sweep(&current)?;
        let next = value_of(&current)?;
        history.push(next);
        let delta = next - value;
        value = next;
        if delta.abs() < config.conv_tol {
            break;
        }
    }
    Ok((current, history))
}

fn run_restart(config: &SeesawConfig, restart: usize) -> Result<Run> {
    let mut rng = restart_rng(config.seed, restart);
    let n = config.n;
    let (optimum, history) = match config.metric {
        SeesawMetric::Counterexample => {
            let mut draw = || projector(&random_ket(&mut rng, 2));
            let first = [draw(), draw(), draw()];
            let second = [draw(), draw(), draw()];
            let m0 = optimal_counterexample_measurement(&first, &second);
            let start = CounterexampleStrategy { first, second, m0 };
            let (best, history) = iterate(
                config,
                start,
                |s| Ok(counterexample_value(s)),
                |s| Ok(counterexample_sweep(s)),
            )?;
            (Optimum::Counterexample(best), history)
        }
        metric => {
            let senders = (0..n).map(|_| random_pure_sender(&mut rng)).collect();
            let ranks = match metric {
                SeesawMetric::Ghz => vec![1; 1 << n],
                _ => vec![1, 1, 2],
            };
            let povm = Povm {
                elements: elements_from_basis(&random_basis(&mut rng, 1 << n), &ranks),
            };
            let start = Strategy { n, senders, povm };
            let (best, history) = iterate(
                config,
                start,
                |s| game_metric(s, metric),
                |s| seesaw_sweep(s, metric),
            )?;
            (Optimum::Game(best), history)
        }
    };
    Ok(Run {
        value: *history.last().expect("initial value recorded"),
        optimum,
        history,
    })
}

/// Runs all restarts (in parallel) and returns the best, with ties going
/// to the lowest restart index. Deterministic in `config.seed`.
pub fn seesaw(config: &SeesawConfig) -> Result<SeesawResult> {
    config.validate()?;
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|k| run_restart(config, k))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = k;
        }
    }
    let iters_used = runs[best].history.len() - 1;
    let best_value = runs[best].value;
    let best_strategy = runs[best].optimum.clone();
    Ok(SeesawResult {
        config: config.clone(),
        best_value,
        best_restart: best,
        best_strategy,
        iters_used,
        history: runs.into_iter().map(|run| run.history).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::scenario::witness_sum;
    use crate::selftest::antipodality_gap;
    use crate::states::{
        aligned_ideal_strategy, computational_povm, ghz_povm, ideal_strategy, random_antipodal_sender,
        rng_from_seed,
    };

    #[test]
    fn metric_names_parse() {
        assert_eq!("partial-bell".parse::<SeesawMetric>().unwrap(), SeesawMetric::PartialBell);
        assert_eq!("GHZ".parse::<SeesawMetric>().unwrap(), SeesawMetric::Ghz);
        assert!("chsh".parse::<SeesawMetric>().is_err());
        assert_eq!(SeesawMetric::PartialBell.to_string(), "partial_bell");
    }

    #[test]
    fn config_validation() {
        let mut config = SeesawConfig::new(2, SeesawMetric::Ghz);
        config.validate().unwrap();
        config.restarts = 0;
        assert!(config.validate().is_err());
        let mut config = SeesawConfig::new(2, SeesawMetric::Ghz);
        config.conv_tol = 0.0;
        assert!(config.validate().is_err());
        assert!(SeesawConfig::new(8, SeesawMetric::Ghz).validate().is_err());
        assert!(SeesawConfig::new(3, SeesawMetric::Counterexample).validate().is_err());
    }

    #[test]
    fn ideal_ops_give_ghz_basis() {
        for n in 2..=3 {
            let povm = optimal_povm_for_states(n, &AOperators::aligned_ideal(n)).unwrap();
            for (m, ghz) in povm.elements.iter().zip(&ghz_povm(n).elements) {
                assert!(max_abs_diff(m, ghz) < 1e-10);
            }
        }
    }

    #[test]
    fn zero_ops_give_uniform_split() {
        let povm = optimal_povm_for_states(2, &AOperators::zeros(2)).unwrap();
        for m in &povm.elements {
            assert!(max_abs_diff(m, &(identity(4) * r(0.25))) < 1e-15);
        }
        let ws = build_all_w(2, &AOperators::zeros(2)).unwrap();
        assert_eq!(witness_sum(&povm.elements, 2, &AOperators::zeros(2)).unwrap(), 0.0);
        assert_eq!(ws.len(), 4);
    }

    #[test]
    fn povm_step_dominates_ghz_basis() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let senders: Vec<_> = (0..2).map(|_| random_antipodal_sender(&mut rng)).collect();
            let ops = AOperators::from_senders(&senders);
            let povm = optimal_povm_for_states(2, &ops).unwrap();
            povm.validate().unwrap();
            let ours = witness_sum(&povm.elements, 2, &ops).unwrap();
            let ghz = witness_sum(&ghz_povm(2).elements, 2, &ops).unwrap();
            assert!(ours >= ghz - 1e-12, "{ours} < {ghz}");
        }
    }

    #[test]
    fn state_step_never_decreases() {
        for seed in 0..100 {
            let strategy = crate::states::random_strategy(2, seed).unwrap();
            let before = success_metric(&strategy).unwrap();
            let after = optimal_states_for_povm(&strategy, SeesawMetric::Ghz).unwrap();
            assert!(success_metric(&after).unwrap() >= before - 1e-12);
            assert!(antipodality_gap(&after) < 1e-12);
        }
    }

    #[test]
    fn state_step_recovers_antipodal_messages() {
        let mut strategy = aligned_ideal_strategy(2).unwrap();
        let mut rng = rng_from_seed(5);
        strategy.senders = (0..2).map(|_| random_pure_sender(&mut rng)).collect();
        let after = optimal_states_for_povm(&strategy, SeesawMetric::Ghz).unwrap();
        assert!(antipodality_gap(&after) <= 1e-8);
    }

    #[test]
    fn ideal_strategy_is_a_fixed_point() {
        for n in 2..=3 {
            let ideal = ideal_strategy(n).unwrap();
            let before = success_metric(&ideal).unwrap();
            let after = success_metric(&seesaw_sweep(&ideal, SeesawMetric::Ghz).unwrap()).unwrap();
            assert!((after - before).abs() <= 1e-10);
        }
    }

    #[test]
    fn ghz_seesaw_reaches_optimum() {
        let mut config = SeesawConfig::new(2, SeesawMetric::Ghz);
        config.restarts = 20;
        let result = seesaw(&config).unwrap();
        assert!(result.best_value >= 1.0 - 1e-6, "{}", result.best_value);
        for history in &result.history {
            assert!(history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
        assert_eq!(seesaw(&config).unwrap(), result);
    }

    #[test]
    fn partial_bell_seesaw_reaches_optimum() {
        let mut config = SeesawConfig::new(2, SeesawMetric::PartialBell);
        config.restarts = 10;
        let result = seesaw(&config).unwrap();
        assert!(result.best_value >= 1.0 - 1e-6, "{}", result.best_value);
    }

    #[test]
    fn counterexample_sweep_never_decreases() {
        let start = crate::scenario::counterexample::separable_fixture();
        let before = counterexample_value(&start);
        let after = counterexample_value(&counterexample_sweep(&start));
        assert!(after >= before - 1e-12);
    }

    #[test]
    fn classification_examples() {
        for class in classify_outcome_measurement(&ghz_povm(2)).unwrap() {
            assert!(class.entangled);
            assert!((class.ppt_min_eig + 0.5).abs() < 1e-12);
        }
        for class in classify_outcome_measurement(&computational_povm(2)).unwrap() {
            assert!(!class.entangled);
        }
        assert!(classify_outcome_measurement(&ghz_povm(3)).is_err());
    }

    #[test]
    fn history_csv_layout() {
        let mut config = SeesawConfig::new(2, SeesawMetric::Ghz);
        config.restarts = 2;
        config.max_iters = 3;
        let result = seesaw(&config).unwrap();
        let mut out = Vec::new();
        write_history_csv(&result, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("restart,iter,value\n0,0,"));
        let rows = result.history.iter().map(Vec::len).sum::<usize>();
        assert_eq!(text.lines().count(), rows + 1);
    }
}
