//! Witness operators and success metrics of the communication game.
//!
//! Each sender j holds `A^{(j)}_x = ρ_{0|x} − ρ_{1|x}`. For outcome `s`,
//!
//! ```text
//! W_s = (n−1)(−1)^{s₁} (A¹₀ + A¹₁) ⊗ A²₀ ⊗ … ⊗ Aⁿ₀
//!     + Σ_{j≥2} (−1)^{s_j} (A¹₀ − A¹₁) ⊗ A^{(j)}₁      (identity elsewhere)
//! ```
//!
//! and `S = Σ_s Tr(M_s W_s) / (2^n (n−1) 2√2)`, which is at most one.

pub mod counterexample;
pub mod partial_bell;

use std::f64::consts::SQRT_2;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{identity, r, tensor, trace_product, ComplexMatrix};
use crate::states::{BitString, SenderStates, Strategy};

/// `a[j][x]` for senders `j = 0..n` (0-based) and inputs `x ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AOperators {
    pub a: Vec<[ComplexMatrix; 2]>,
}

impl AOperators {
    pub fn from_senders(senders: &[SenderStates]) -> Self {
        Self {
            a: senders
                .iter()
                .map(|s| [s.a_operator(0), s.a_operator(1)])
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn zeros(n: usize) -> Self {
        let z = ComplexMatrix::zeros(2, 2);
        Self {
            a: vec![[z.clone(), z]; n],
        }
    }

    /// `A¹_x = (σ_X + (−1)^x σ_Z)/√2`, `A^{(j)}₀ = σ_X`, `A^{(j)}₁ = σ_Z`.
    pub fn aligned_ideal(n: usize) -> Self {
        let (x, z) = (crate::linalg::sigma_x(), crate::linalg::sigma_z());
        let h = r(std::f64::consts::FRAC_1_SQRT_2);
        let mut a = vec![[(&x + &z) * h, (&x - &z) * h]];
        a.extend(std::iter::repeat_n([x, z], n - 1));
        Self { a }
    }

    pub fn conjugated(&self, local: &[ComplexMatrix]) -> Self {
        Self {
            a: self
                .a
                .iter()
                .zip(local)
                .map(|(pair, u)| pair.clone().map(|m| crate::linalg::conjugate(u, &m)))
                .collect(),
        }
    }
}

pub fn a_operators(strategy: &Strategy) -> AOperators {
    AOperators::from_senders(&strategy.senders)
}

/// One product term `coeff · ⊗_k O_k` of a witness, where slot `k` holds
/// `A^{(k)}_x` for `Some(x)` and the identity for `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessTerm {
    pub coeff: f64,
    pub slots: Vec<Option<usize>>,
}

/// Product-term expansion of `W_s`; sender 1's sums `A¹₀ ± A¹₁` are split
/// into separate terms.
pub fn witness_terms(n: usize, s: &BitString) -> Vec<WitnessTerm> {
    let mut terms = Vec::with_capacity(2 * n);
    let lead = (n - 1) as f64 * s.sign(0);
    for x1 in 0..2 {
        let mut slots = vec![Some(0); n];
        slots[0] = Some(x1);
        terms.push(WitnessTerm { coeff: lead, slots });
    }
    for j in 1..n {
        for x1 in 0..2 {
            let mut slots = vec![None; n];
            slots[0] = Some(x1);
            slots[j] = Some(1);
            let coeff = s.sign(j) * if x1 == 0 { 1.0 } else { -1.0 };
            terms.push(WitnessTerm { coeff, slots });
        }
    }
    terms
}

/// Dense matrix of one witness term.
pub fn term_matrix(term: &WitnessTerm, ops: &AOperators) -> ComplexMatrix {
    let id = identity(2);
    let factors: Vec<ComplexMatrix> = term
        .slots
        .iter()
        .enumerate()
        .map(|(k, slot)| match slot {
            Some(x) => ops.a[k][*x].clone(),
            None => id.clone(),
        })
        .collect();
    tensor(&factors).expect("at least one slot") * r(term.coeff)
}

fn check_ops(n: usize, ops: &AOperators) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("need at least two senders, got {n}")));
    }
    if ops.n() != n {
        return Err(invalid(format!("operators for {} senders, expected {n}", ops.n())));
    }
    for (j, pair) in ops.a.iter().enumerate() {
        for (x, m) in pair.iter().enumerate() {
            if m.nrows() != 2 || m.ncols() != 2 {
                return Err(invalid(format!(
                    "A[{}][{x}] is {}x{}, expected 2x2",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
    }
    Ok(())
}

/// The witness operator `W_s`.
pub fn build_w(n: usize, s: &BitString, ops: &AOperators) -> Result<ComplexMatrix> {
    check_ops(n, ops)?;
    if s.len() != n {
        return Err(invalid(format!("bit string {s} has {} bits, expected {n}", s.len())));
    }
    let dim = 1usize << n;
    Ok(witness_terms(n, s)
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, t| acc + term_matrix(t, ops)))
}

/// All `2^n` witnesses ordered by outcome index.
pub fn build_all_w(n: usize, ops: &AOperators) -> Result<Vec<ComplexMatrix>> {
    BitString::all(n).map(|s| build_w(n, &s, ops)).collect()
}

/// `2^n (n−1) 2√2`.
pub fn metric_normalization(n: usize) -> f64 {
    (1usize << n) as f64 * (n - 1) as f64 * 2.0 * SQRT_2
}

/// `Σ_s Tr(M_s W_s)` (unnormalized).
pub fn witness_sum(povm: &[ComplexMatrix], n: usize, ops: &AOperators) -> Result<f64> {
    if povm.len() != 1 << n {
        return Err(invalid(format!(
            "POVM has {} elements, expected 2^{n} = {}",
            povm.len(),
            1usize << n
        )));
    }
    let ws = build_all_w(n, ops)?;
    Ok(povm
        .iter()
        .zip(&ws)
        .map(|(m, w)| trace_product(m, w).re)
        .sum())
}

/// The normalized success metric `S`.
pub fn success_metric(strategy: &Strategy) -> Result<f64> {
    let n = strategy.n;
    let ops = a_operators(strategy);
    Ok(witness_sum(&strategy.povm.elements, n, &ops)? / metric_normalization(n))
}

/// One input configuration of the game together with the outcome
/// distribution it produces. `None` marks a sender whose input is
/// irrelevant for this context; such a sender transmits `I/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub a: Vec<Option<u8>>,
    pub x: Vec<Option<u8>>,
    /// `p[s.index()]`.
    pub p: Vec<f64>,
}

/// Outcome statistics `p(s | a⃗; x⃗)` over every input context entering the
/// probability form of the metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    pub n: usize,
    pub rows: Vec<TableRow>,
}

impl ProbabilityTable {
    pub fn get(&self, a: &[Option<u8>], x: &[Option<u8>]) -> Option<&[f64]> {
        self.rows
            .iter()
            .find(|row| row.a == a && row.x == x)
            .map(|row| row.p.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            if row.p.len() != 1 << self.n {
                return Err(invalid("table row has the wrong number of outcomes"));
            }
            if row.p.iter().any(|&p| !(-1e-9..=1.0 + 1e-9).contains(&p)) {
                return Err(invalid("probability outside [0, 1]"));
            }
            let total: f64 = row.p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("probabilities sum to {total}")));
            }
        }
        Ok(())
    }
}

fn input_contexts(n: usize) -> Vec<(Vec<Option<u8>>, Vec<Option<u8>>)> {
    let mut contexts = Vec::new();
    for x1 in 0..2u8 {
        let mut x = vec![Some(0u8); n];
        x[0] = Some(x1);
        for bits in 0..1usize << n {
            let a = (0..n).map(|k| Some(((bits >> k) & 1) as u8)).collect();
            contexts.push((a, x.clone()));
        }
    }
    for j in 1..n {
        for x1 in 0..2u8 {
            let mut x = vec![None; n];
            x[0] = Some(x1);
            x[j] = Some(1);
            for bits in 0..4u8 {
                let mut a = vec![None; n];
                a[0] = Some(bits & 1);
                a[j] = Some(bits >> 1);
                contexts.push((a, x.clone()));
            }
        }
    }
    contexts
}

/// Evaluates `p(s|a⃗; x⃗) = Tr((⊗_j ρ^{(j)}_{a_j|x_j}) M_s)` on every context.
pub fn probability_table(strategy: &Strategy) -> ProbabilityTable {
    let n = strategy.n;
    let half = identity(2) * r(0.5);
    let rows = input_contexts(n)
        .into_par_iter()
        .map(|(a, x)| {
            let factors: Vec<ComplexMatrix> = (0..n)
                .map(|k| match (a[k], x[k]) {
                    (Some(ak), Some(xk)) => strategy.senders[k].rho[ak as usize][xk as usize].clone(),
                    _ => half.clone(),
                })
                .collect();
            let rho = tensor(&factors).expect("n >= 2");
            let p = strategy
                .povm
                .elements
                .iter()
                .map(|m| trace_product(&rho, m).re)
                .collect();
            TableRow { a, x, p }
        })
        .collect();
    ProbabilityTable { n, rows }
}

fn parity_sign(a: &[Option<u8>]) -> f64 {
    let parity = a.iter().flatten().fold(0u8, |acc, b| acc ^ b);
    if parity == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Recomputes `S` from outcome statistics alone. Two-sender contexts are
/// measured with the idle senders transmitting `I/2`, so each is rescaled
/// by `2^{n−2}` to recover `Tr(M_s (A¹ ⊗ A^{(j)} ⊗ I))`.
pub fn metric_from_table(table: &ProbabilityTable) -> Result<f64> {
    let n = table.n;
    if n < 2 {
        return Err(invalid("table needs at least two senders"));
    }
    let idle_scale = (1usize << (n - 2)) as f64;
    let lookup = |a: &[Option<u8>], x: &[Option<u8>], s: usize| -> Result<f64> {
        table
            .get(a, x)
            .map(|p| p[s])
            .ok_or_else(|| invalid(format!("table lacks context a={a:?}, x={x:?}")))
    };
    let mut total = 0.0;
    for s in BitString::all(n) {
        let idx = s.index();
        let mut full = 0.0;
        for x1 in 0..2u8 {
            let mut x = vec![Some(0u8); n];
            x[0] = Some(x1);
            for bits in 0..1usize << n {
                let a: Vec<Option<u8>> = (0..n).map(|k| Some(((bits >> k) & 1) as u8)).collect();
                full += parity_sign(&a) * lookup(&a, &x, idx)?;
            }
        }
        let mut pairs = 0.0;
        for j in 1..n {
            let mut inner = 0.0;
            for x1 in 0..2u8 {
                let mut x = vec![None; n];
                x[0] = Some(x1);
                x[j] = Some(1);
                let sign_x = if x1 == 0 { 1.0 } else { -1.0 };
                for bits in 0..4u8 {
                    let mut a = vec![None; n];
                    a[0] = Some(bits & 1);
                    a[j] = Some(bits >> 1);
                    inner += sign_x * parity_sign(&a) * lookup(&a, &x, idx)?;
                }
            }
            pairs += s.sign(j) * inner * idle_scale;
        }
        total += (n - 1) as f64 * s.sign(0) * full + pairs;
    }
    Ok(total / metric_normalization(n))
}
