//! Certification of optimal strategies: sum-of-squares residuals, the
//! closed-form witness spectrum, local-unitary alignment, GHZ-basis
//! identification of the measurement, and PPT checks.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    conjugate, expectation, herm_eig, identity, max_abs_diff, min_eigenvalue, partial_transpose,
    r, sigma_x, sigma_z, spectral_radius, tensor, trace_product, ComplexMatrix,
};
use crate::scenario::{a_operators, build_w, success_metric, AOperators};
use crate::states::{ghz_basis_state, BitString, Povm, Strategy};

/// `(−1)^{s₁}(A¹₀+A¹₁)/√2 ⊗ A²₀ ⊗ … ⊗ Aⁿ₀` followed by
/// `(−1)^{s_j}(A¹₀−A¹₁)/√2 ⊗ A^{(j)}₁` for `j = 2..n`.
fn sos_projectors(n: usize, s: &BitString, ops: &AOperators) -> Result<Vec<ComplexMatrix>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&ops.a[0][0] + &ops.a[0][1]) * r(h);
    let z = (&ops.a[0][0] - &ops.a[0][1]) * r(h);
    let mut first = vec![x];
    first.extend((1..n).map(|j| ops.a[j][0].clone()));
    let mut out = vec![tensor(&first)? * r(s.sign(0))];
    for j in 1..n {
        let factors: Vec<ComplexMatrix> = (0..n)
            .map(|k| match k {
                0 => z.clone(),
                k if k == j => ops.a[j][1].clone(),
                _ => identity(2),
            })
            .collect();
        out.push(tensor(&factors)? * r(s.sign(j)));
    }
    Ok(out)
}

/// Largest `‖A_x² − I‖` over all senders and inputs; zero iff every pair of
/// messages is pure and orthogonal.
pub fn antipodal_deviation(ops: &AOperators) -> f64 {
    ops.a
        .iter()
        .flatten()
        .map(|a| max_abs_diff(&(a * a), &identity(2)))
        .fold(0.0, f64::max)
}

/// The three sum-of-squares terms `O†_{sk} O_{sk}`.
pub fn sos_terms(n: usize, s: &BitString, ops: &AOperators) -> Result<[ComplexMatrix; 3]> {
    let p = sos_projectors(n, s, ops)?;
    let dim = 1usize << n;
    let id = identity(dim);
    let m = (n - 1) as f64;
    let o1 = {
        let d = &id - &p[0];
        &d * &d * r(m / SQRT_2)
    };
    let mut o2 = ComplexMatrix::zeros(dim, dim);
    let mut squares = &p[0] * &p[0] * r(m);
    for pj in &p[1..] {
        let d = &id - pj;
        o2 += &d * &d * r(1.0 / SQRT_2);
        squares += pj * pj;
    }
    let o3 = (&id - squares * r(1.0 / (2.0 * m))) * r(SQRT_2 * m);
    Ok([o1, o2, o3])
}

/// `‖(2√2(n−1) I − W_s) − Σ_k O†_{sk} O_{sk}‖`, the largest absolute
/// eigenvalue of the difference.
pub fn sos_residual(n: usize, s: &BitString, ops: &AOperators) -> Result<f64> {
    let deviation = antipodal_deviation(ops);
    if deviation > 1e-9 {
        return Err(Error::PreconditionViolated(format!(
            "messages are not pure and antipodal (max |A^2 - I| = {deviation:e})"
        )));
    }
    let w = build_w(n, s, ops)?;
    let dim = 1usize << n;
    let shifted = identity(dim) * r(bound(n)) - w;
    let [o1, o2, o3] = sos_terms(n, s, ops)?;
    let diff = shifted - o1 - o2 - o3;
    spectral_radius(&crate::linalg::symmetrize(&diff))
}

/// Smallest eigenvalue of `2√2(n−1) I − W_s`.
pub fn shifted_min_eig(n: usize, s: &BitString, ops: &AOperators) -> Result<f64> {
    let w = build_w(n, s, ops)?;
    min_eigenvalue(&(identity(1 << n) * r(bound(n)) - w))
}

/// `2√2(n−1)`, the largest eigenvalue any witness can reach.
pub fn bound(n: usize) -> f64 {
    2.0 * SQRT_2 * (n - 1) as f64
}

/// `μ_{s,s′} = √2 Σ_{j≥2} (−1)^{s′_j ⊕ s_j} + √2 (n−1)(−1)^{s′₁ ⊕ s₁}`,
/// indexed by `s′`.
pub fn spectrum_closed_form(n: usize, s: &BitString) -> Result<Vec<f64>> {
    if s.len() != n {
        return Err(invalid(format!("bit string {s} has {} bits, expected {n}", s.len())));
    }
    Ok(BitString::all(n)
        .map(|sp| {
            let sign = |k: usize| if sp.bit(k) == s.bit(k) { 1.0 } else { -1.0 };
            let tail: f64 = (1..n).map(sign).sum();
            SQRT_2 * tail + SQRT_2 * (n - 1) as f64 * sign(0)
        })
        .collect())
}

pub fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

/// Largest gap between the sorted closed-form spectrum and the sorted
/// numerical spectrum of `W_s` for the given operators.
pub fn spectrum_deviation(n: usize, s: &BitString, ops: &AOperators) -> Result<f64> {
    let closed = sorted(spectrum_closed_form(n, s)?);
    let numeric = herm_eig(&build_w(n, s, ops)?)?.eigenvalues;
    Ok(closed
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Deviation of `W_s` from the X-shaped form with counter-diagonal
/// `√2(n−1)(−1)^{s₁}`: the largest entry off the two diagonals plus the
/// largest counter-diagonal mismatch.
pub fn x_matrix_deviation(n: usize, s: &BitString, ops: &AOperators) -> Result<f64> {
    let w = build_w(n, s, ops)?;
    let dim = 1usize << n;
    let target = SQRT_2 * (n - 1) as f64 * s.sign(0);
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let entry = w[(i, j)];
            if j == dim - 1 - i {
                worst = worst.max((entry - r(target)).norm());
            } else if i != j {
                worst = worst.max(entry.norm());
            }
        }
    }
    Ok(worst)
}

/// Local unitaries bringing each sender's operators to the reference frame,
/// with the largest mapping residual.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub unitaries: Vec<ComplexMatrix>,
    pub error: f64,
}

/// Pair of operators to be mapped onto `(σ_X, σ_Z)`.
fn frame_pair(ops: &AOperators, j: usize) -> (ComplexMatrix, ComplexMatrix) {
    let [a0, a1] = &ops.a[j];
    if j == 0 {
        let h = r(std::f64::consts::FRAC_1_SQRT_2);
        ((a0 + a1) * h, (a0 - a1) * h)
    } else {
        (a0.clone(), a1.clone())
    }
}

pub fn anticommutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    spectral_radius(&crate::linalg::symmetrize(&(a * b + b * a)))
}

/// Finds `U_j` with `U₁ X U₁† = σ_X`, `U₁ Z U₁† = σ_Z` where
/// `X, Z = (A¹₀ ± A¹₁)/√2`, and `U_j A^{(j)}₀ U_j† = σ_X`,
/// `U_j A^{(j)}₁ U_j† = σ_Z` for `j ≥ 2`.
pub fn align_locals(ops: &AOperators) -> Result<Alignment> {
    align_locals_with(ops, 1e-6)
}

pub fn align_locals_with(ops: &AOperators, anticommutator_tol: f64) -> Result<Alignment> {
    let (sx, sz) = (sigma_x(), sigma_z());
    let mut unitaries = Vec::with_capacity(ops.n());
    let mut error: f64 = 0.0;
    for j in 0..ops.n() {
        let anti = anticommutator_norm(&ops.a[j][0], &ops.a[j][1])?;
        if anti > anticommutator_tol {
            return Err(Error::NotSelfTestable {
                sender: j + 1,
                anticommutator: anti,
            });
        }
        let (x, z) = frame_pair(ops, j);
        let eig = herm_eig(&z)?;
        let v_plus = eig.vector(1);
        let mut v_minus = eig.vector(0);
        let t = (v_plus.adjoint() * &x * &v_minus)[(0, 0)];
        if t.norm() > 1e-12 {
            v_minus *= t.conj() / t.norm();
        }
        let u = ComplexMatrix::from_columns(&[v_plus, v_minus]).adjoint();
        let ex = spectral_radius(&crate::linalg::symmetrize(&(conjugate(&u, &x) - &sx)))?;
        let ez = spectral_radius(&crate::linalg::symmetrize(&(conjugate(&u, &z) - &sz)))?;
        error = error.max(ex).max(ez);
        unitaries.push(u);
    }
    Ok(Alignment { unitaries, error })
}

/// `f_s = ⟨ξ_s| (⊗U_j) M_s (⊗U_j)† |ξ_s⟩` for every outcome.
pub fn verify_ghz_measurement(povm: &Povm, unitaries: &[ComplexMatrix]) -> Result<Vec<f64>> {
    let n = unitaries.len();
    if n < 2 || povm.len() != 1 << n || povm.dim() != 1 << n {
        return Err(invalid(format!(
            "{} unitaries do not match a POVM with {} elements on dimension {}",
            n,
            povm.len(),
            povm.dim()
        )));
    }
    let u = tensor(unitaries)?;
    BitString::all(n)
        .zip(&povm.elements)
        .map(|(s, m)| {
            let xi = ghz_basis_state(&s, n)?;
            Ok(expectation(&xi, &conjugate(&u, m)).re)
        })
        .collect()
}

/// Minimum eigenvalue of the partial transpose on the second qubit of a
/// two-qubit operator.
pub fn ppt_min_eig(m: &ComplexMatrix) -> Result<f64> {
    if m.nrows() != 4 || m.ncols() != 4 {
        return Err(invalid(format!(
            "PPT test needs a 4x4 operator, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    min_eigenvalue(&partial_transpose(m, &[2, 2], 1)?)
}

/// Minimum eigenvalue of the partial transpose on qubit 1 against the rest,
/// after normalizing to unit trace.
pub fn bipartite_ppt_min_eig(m: &ComplexMatrix, n: usize) -> Result<f64> {
    let trace = m.trace().re;
    if trace <= 1e-14 {
        return Ok(0.0);
    }
    min_eigenvalue(&partial_transpose(&(m / r(trace)), &[2, 1 << (n - 1)], 0)?)
}

/// Largest overlap `Tr(ρ_{0|x} ρ_{1|x})` and largest purity deficit
/// `1 − Tr ρ²` over all senders and messages.
pub fn antipodality_terms(strategy: &Strategy) -> (f64, f64) {
    let mut overlap: f64 = 0.0;
    let mut deficit: f64 = 0.0;
    for sender in &strategy.senders {
        for x in 0..2 {
            overlap = overlap.max(trace_product(&sender.rho[0][x], &sender.rho[1][x]).re);
            for a in 0..2 {
                let rho = &sender.rho[a][x];
                deficit = deficit.max(1.0 - trace_product(rho, rho).re);
            }
        }
    }
    (overlap, deficit)
}

/// Zero iff every sender's messages are pure and antipodal.
pub fn antipodality_gap(strategy: &Strategy) -> f64 {
    let (overlap, deficit) = antipodality_terms(strategy);
    (overlap + deficit).max(0.0)
}

/// Thresholds used by [`certify`]; every field is overridable by name.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Tolerances {
    pub metric: f64,
    pub sos: f64,
    pub spectrum: f64,
    pub alignment: f64,
    pub anticommutator: f64,
    pub fidelity: f64,
    pub trace: f64,
    pub antipodality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            metric: 1e-8,
            sos: 1e-8,
            spectrum: 1e-9,
            alignment: 1e-8,
            anticommutator: 1e-6,
            fidelity: 1e-8,
            trace: 1e-8,
            antipodality: 1e-9,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 8] = [
        "metric",
        "sos",
        "spectrum",
        "alignment",
        "anticommutator",
        "fidelity",
        "trace",
        "antipodality",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(invalid(format!("tolerance {name} must be a nonnegative number")));
        }
        let slot = match name {
            "metric" => &mut self.metric,
            "sos" => &mut self.sos,
            "spectrum" => &mut self.spectrum,
            "alignment" => &mut self.alignment,
            "anticommutator" => &mut self.anticommutator,
            "fidelity" => &mut self.fidelity,
            "trace" => &mut self.trace,
            "antipodality" => &mut self.antipodality,
            other => {
                return Err(invalid(format!(
                    "unknown tolerance '{other}' (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CertChecks {
    pub metric: bool,
    pub antipodal: bool,
    pub sos: bool,
    pub spectrum: bool,
    pub alignment: bool,
    pub ghz_measurement: bool,
    pub all: bool,
}

/// Outcome of a full certification run.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CertReport {
    pub n: usize,
    pub metric_value: f64,
    pub antipodality_gap: f64,
    /// Per outcome `s` (by index); empty when the messages are not antipodal.
    pub sos_residual_norm: Vec<f64>,
    pub shifted_min_eigs: Vec<f64>,
    pub spectrum_diff: f64,
    pub alignment_error: f64,
    pub unitaries_found: bool,
    pub ghz_fidelities: Vec<f64>,
    pub povm_traces: Vec<f64>,
    pub ppt_min_eigs: Vec<f64>,
    pub tolerances: Tolerances,
    pub passed: CertChecks,
    pub notes: Vec<String>,
}

/// Runs every check against a GHZ-game strategy.
pub fn certify(strategy: &Strategy, tol: &Tolerances) -> Result<CertReport> {
    strategy.validate()?;
    let n = strategy.n;
    let ops = a_operators(strategy);
    let metric_value = success_metric(strategy)?;
    let gap = antipodality_gap(strategy);
    let mut notes = Vec::new();

    let outcomes: Vec<BitString> = BitString::all(n).collect();
    let sos_residual_norm = if antipodal_deviation(&ops) <= 1e-9 {
        outcomes
            .iter()
            .map(|s| sos_residual(n, s, &ops))
            .collect::<Result<Vec<_>>>()?
    } else {
        notes.push("messages are not pure and antipodal; SOS residual skipped".into());
        Vec::new()
    };
    let shifted_min_eigs = outcomes
        .iter()
        .map(|s| shifted_min_eig(n, s, &ops))
        .collect::<Result<Vec<_>>>()?;
    let spectrum_diff = outcomes
        .iter()
        .map(|s| spectrum_deviation(n, s, &ops))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let (unitaries, alignment_error, unitaries_found) =
        match align_locals_with(&ops, tol.anticommutator) {
            Ok(al) => (al.unitaries, al.error, true),
            Err(Error::NotSelfTestable {
                sender,
                anticommutator,
            }) => {
                notes.push(format!(
                    "sender {sender}: anticommutator norm {anticommutator:e} exceeds tolerance; fidelities use identity unitaries"
                ));
                (vec![identity(2); n], anticommutator, false)
            }
            Err(e) => return Err(e),
        };
    let ghz_fidelities = verify_ghz_measurement(&strategy.povm, &unitaries)?;
    let povm_traces: Vec<f64> = strategy.povm.elements.iter().map(|m| m.trace().re).collect();
    let ppt_min_eigs = strategy
        .povm
        .elements
        .iter()
        .map(|m| bipartite_ppt_min_eig(m, n))
        .collect::<Result<Vec<_>>>()?;

    let metric_ok = metric_value >= 1.0 - tol.metric;
    let antipodal_ok = gap <= tol.antipodality;
    let sos_ok = !sos_residual_norm.is_empty()
        && sos_residual_norm.iter().all(|&v| v <= tol.sos)
        && shifted_min_eigs.iter().all(|&v| v >= -tol.sos);
    let spectrum_ok = spectrum_diff <= tol.spectrum;
    let alignment_ok = unitaries_found && alignment_error <= tol.alignment;
    let ghz_ok = ghz_fidelities.iter().all(|&f| f >= 1.0 - tol.fidelity)
        && povm_traces.iter().all(|&t| (t - 1.0).abs() <= tol.trace);
    let all = metric_ok && antipodal_ok && sos_ok && spectrum_ok && alignment_ok && ghz_ok;

    Ok(CertReport {
        n,
        metric_value,
        antipodality_gap: gap,
        sos_residual_norm,
        shifted_min_eigs,
        spectrum_diff,
        alignment_error,
        unitaries_found,
        ghz_fidelities,
        povm_traces,
        ppt_min_eigs,
        tolerances: tol.clone(),
        passed: CertChecks {
            metric: metric_ok,
            antipodal: antipodal_ok,
            sos: sos_ok,
            spectrum: spectrum_ok,
            alignment: alignment_ok,
            ghz_measurement: ghz_ok,
            all,
        },
        notes,
    })
}
