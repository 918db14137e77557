//! Robustness machinery: local unital channels, the operator inequality
//! `K_s ≥ r W_s + μ I`, relabelling unitaries and fidelity lower bounds.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    conjugate, embed, expectation, identity, min_eigenvalue, projector, r, sigma_x, sigma_z,
    tensor, ComplexMatrix,
};
use crate::scenario::{build_w, AOperators};
use crate::states::{ghz_basis_state, BitString, Povm};

/// Analytic two-sender constants `r = (4+5√2)/16`, `μ = −(1+2√2)/4`.
pub const R_TWO: f64 = (4.0 + 5.0 * SQRT_2) / 16.0;
pub const MU_TWO: f64 = -(1.0 + 2.0 * SQRT_2) / 4.0;

/// `σ_A = (σ_X + σ_Z)/√2`.
pub fn sigma_a() -> ComplexMatrix {
    (sigma_x() + sigma_z()) * r(FRAC_1_SQRT_2)
}

/// `σ_B = (σ_X − σ_Z)/√2`.
pub fn sigma_b() -> ComplexMatrix {
    (sigma_x() - sigma_z()) * r(FRAC_1_SQRT_2)
}

fn check_angle(x: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&x) {
        return Err(invalid(format!("angle {x} outside [0, π/2]")));
    }
    Ok(())
}

/// `g(x) = (1+√2)(sin x + cos x − 1)`.
pub fn channel_g(x: f64) -> Result<f64> {
    check_angle(x)?;
    Ok((1.0 + SQRT_2) * (x.sin() + x.cos() - 1.0))
}

/// `Γ^{(1)}` switches between σ_X and σ_Z, `Γ^{(j≥2)}` between σ_A and σ_B,
/// at `x = π/4` (inclusive on the lower branch). `j` is 1-based.
pub fn gamma_operator(j: usize, x: f64) -> ComplexMatrix {
    match (j == 1, x <= FRAC_PI_4) {
        (true, true) => sigma_x(),
        (true, false) => sigma_z(),
        (false, true) => sigma_a(),
        (false, false) => sigma_b(),
    }
}

/// `Λ^{(j)}(x)[ρ] = (1+g)/2 ρ + (1−g)/2 Γ ρ Γ`.
pub fn local_channel(j: usize, x: f64, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let g = channel_g(x)?;
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(invalid("local channel acts on 2x2 matrices"));
    }
    let gamma = gamma_operator(j, x);
    Ok(rho * r((1.0 + g) / 2.0) + conjugate(&gamma, rho) * r((1.0 - g) / 2.0))
}

/// Angles `α_j ∈ [0, π/2]`, one per sender.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleConfig {
    pub alpha: Vec<f64>,
}

impl AngleConfig {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        for &a in &alpha {
            check_angle(a)?;
        }
        Ok(Self { alpha })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }
}

/// `Λ = ⊗_j Λ^{(j)}(α_j)` applied to an `n`-qubit operator.
pub fn product_channel(angles: &AngleConfig, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = angles.n();
    if m.nrows() != 1 << n {
        return Err(invalid(format!(
            "operator of dimension {} does not match {n} angles",
            m.nrows()
        )));
    }
    let mut out = m.clone();
    for (k, &x) in angles.alpha.iter().enumerate() {
        let g = channel_g(x)?;
        let gamma = embed(&gamma_operator(k + 1, x), k, n);
        out = &out * r((1.0 + g) / 2.0) + conjugate(&gamma, &out) * r((1.0 - g) / 2.0);
    }
    Ok(out)
}

/// `K_s = Λ[|ξ_s⟩⟨ξ_s|]` (the channel is self-dual).
pub fn k_operator(n: usize, s: &BitString, angles: &AngleConfig) -> Result<ComplexMatrix> {
    if angles.n() != n {
        return Err(invalid(format!("{} angles for {n} senders", angles.n())));
    }
    product_channel(angles, &projector(&ghz_basis_state(s, n)?))
}

/// `A¹_x = cos α₁ σ_X + (−1)^x sin α₁ σ_Z`,
/// `A^{(j)}_x = cos α_j σ_A + (−1)^x sin α_j σ_B`.
pub fn parametrized_ops(angles: &AngleConfig) -> AOperators {
    let a = angles
        .alpha
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let (p, q) = if k == 0 {
                (sigma_x(), sigma_z())
            } else {
                (sigma_a(), sigma_b())
            };
            let (c, s) = (alpha.cos(), alpha.sin());
            [&p * r(c) + &q * r(s), &p * r(c) - &q * r(s)]
        })
        .collect();
    AOperators { a }
}

/// Coefficients of the operator inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityBoundParams {
    pub r: f64,
    pub mu: f64,
    pub n: usize,
}

impl FidelityBoundParams {
    pub fn new(r: f64, mu: f64, n: usize) -> Result<Self> {
        let params = Self { r, mu, n };
        params.validate()?;
        Ok(params)
    }

    pub fn two_senders() -> Self {
        Self {
            r: R_TWO,
            mu: MU_TWO,
            n: 2,
        }
    }

    /// Analytic constants where known (only `n = 2`).
    pub fn analytic(n: usize) -> Result<Self> {
        if n == 2 {
            Ok(Self::two_senders())
        } else {
            Err(Error::Unsupported(format!(
                "no analytic (r, mu) for n = {n}; supply values and certify them on a grid"
            )))
        }
    }

    /// `r (n−1) 2√2 + μ`, which must equal one.
    pub fn normalization(&self) -> f64 {
        self.slope() + self.mu
    }

    pub fn slope(&self) -> f64 {
        self.r * (self.n - 1) as f64 * 2.0 * SQRT_2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > crate::MAX_SENDERS {
            return Err(Error::Unsupported(format!(
                "operator inequality parameters for n = {}",
                self.n
            )));
        }
        if (self.normalization() - 1.0).abs() > 1e-12 {
            return Err(invalid(format!(
                "r (n-1) 2 sqrt2 + mu = {} must equal 1",
                self.normalization()
            )));
        }
        Ok(())
    }
}

/// `λ_min(K_s − r W_s − μ I)`.
pub fn inequality_margin(
    n: usize,
    s: &BitString,
    angles: &AngleConfig,
    params: &FidelityBoundParams,
) -> Result<f64> {
    min_eigenvalue(&shifted_inequality_operator(n, s, angles, params)?)
}

fn shifted_inequality_operator(
    n: usize,
    s: &BitString,
    angles: &AngleConfig,
    params: &FidelityBoundParams,
) -> Result<ComplexMatrix> {
    let k = k_operator(n, s, angles)?;
    let w = build_w(n, s, &parametrized_ops(angles))?;
    Ok(k - w * r(params.r) - identity(1 << n) * r(params.mu))
}

/// `⊗_j U^{(j)}` with `U^{(1)} = σ_Z` when `s₁ ≠ s′₁` and `U^{(j)} = σ_X`
/// when `s_j ≠ s′_j`, identity otherwise.
pub fn relabel_unitary(s: &BitString, s_prime: &BitString) -> Result<ComplexMatrix> {
    if s.len() != s_prime.len() || s.is_empty() {
        return Err(invalid(format!(
            "cannot relabel {s} to {s_prime}: lengths differ"
        )));
    }
    let factors: Vec<ComplexMatrix> = (0..s.len())
        .map(|k| match (k, s.bit(k) == s_prime.bit(k)) {
            (_, true) => identity(2),
            (0, false) => sigma_z(),
            (_, false) => sigma_x(),
        })
        .collect();
    tensor(&factors)
}

/// `|margin(s′) − λ_min(U (K_s − r W_s − μ I) U†)|` with `U = U_{s→s′}`.
pub fn relabel_margin_deviation(
    s: &BitString,
    s_prime: &BitString,
    angles: &AngleConfig,
    params: &FidelityBoundParams,
) -> Result<f64> {
    let n = s.len();
    let u = relabel_unitary(s, s_prime)?;
    let moved = conjugate(&u, &shifted_inequality_operator(n, s, angles, params)?);
    let direct = inequality_margin(n, s_prime, angles, params)?;
    Ok((min_eigenvalue(&moved)? - direct).abs())
}

/// `min_± ‖Γ^{(j)} ∓ U^{(j)} Γ^{(j)} U^{(j)†}‖_max` for the single-slot
/// relabelling factor flipping bit `j` (1-based).
pub fn gamma_covariance_deviation(j: usize, x: f64) -> f64 {
    let gamma = gamma_operator(j, x);
    let u = if j == 1 { sigma_z() } else { sigma_x() };
    let moved = conjugate(&u, &gamma);
    let plus = crate::linalg::max_abs_diff(&gamma, &moved);
    let minus = crate::linalg::max_abs_diff(&gamma, &(-moved));
    plus.min(minus)
}

/// `(r(n−1)2√2 + μ) − r(n−1)2√2 ε`, clamped below at zero.
pub fn fidelity_lower_bound_with(params: &FidelityBoundParams, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps = {eps} must be nonnegative")));
    }
    params.validate()?;
    Ok((params.normalization() - params.slope() * eps).max(0.0))
}

/// Fidelity bound with the analytic constants (`n = 2` only).
pub fn fidelity_lower_bound(n: usize, eps: f64) -> Result<f64> {
    fidelity_lower_bound_with(&FidelityBoundParams::analytic(n)?, eps)
}

/// Largest `ε` for which the bound still exceeds one half.
pub fn fidelity_edge_eps(params: &FidelityBoundParams) -> f64 {
    (params.normalization() - 0.5) / params.slope()
}

/// `Σ_s ⟨ξ_s| Λ[M_s] |ξ_s⟩ / 2^n` at the given channel angles.
pub fn avg_fidelity(povm: &Povm, angles: &AngleConfig) -> Result<f64> {
    let n = angles.n();
    if povm.len() != 1 << n || povm.dim() != 1 << n {
        return Err(invalid(format!(
            "POVM with {} elements on dimension {} does not match {n} senders",
            povm.len(),
            povm.dim()
        )));
    }
    let mut total = 0.0;
    for (s, m) in BitString::all(n).zip(&povm.elements) {
        let xi = ghz_basis_state(&s, n)?;
        total += expectation(&xi, &product_channel(angles, m)?).re;
    }
    Ok(total / (1usize << n) as f64)
}

/// `r − μ/√2` for the two-sender constants.
pub fn partial_slope_constant() -> f64 {
    R_TWO - MU_TWO / SQRT_2
}

/// `1 − (8√2ε/3)(r − μ/√2) + μ acos(2√2(S^RAC − 1/2))(2 − 4ε/3)`.
pub fn partial_fidelity_bound(eps: f64, s_rac: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps = {eps} must be nonnegative")));
    }
    let max_rac = crate::scenario::partial_bell::optimal_s_rac();
    if !(s_rac <= max_rac + 1e-12) || !s_rac.is_finite() {
        return Err(invalid(format!(
            "S^RAC = {s_rac} exceeds the quantum maximum {max_rac}"
        )));
    }
    let arg = (2.0 * SQRT_2 * (s_rac - 0.5)).clamp(-1.0, 1.0);
    Ok(1.0 - (8.0 * SQRT_2 * eps / 3.0) * partial_slope_constant()
        + MU_TWO * arg.acos() * (2.0 - 4.0 * eps / 3.0))
}

/// Solves `1 − (8√2ε/3)(r − μ/√2) = 1/2` by bisection.
pub fn partial_fidelity_edge_eps() -> f64 {
    let f = |eps: f64| 1.0 - (8.0 * SQRT_2 * eps / 3.0) * partial_slope_constant() - 0.5;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Margins below this value (beyond round-off) trigger local refinement.
pub const REFINE_BELOW: f64 = -1e-10;

/// Grid sweep settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub n: usize,
    /// Grid intervals per axis on `[0, π/2]` (80 gives step π/80).
    pub steps: usize,
    /// Subdivision factor for the neighbourhood of negative margins.
    pub refine: usize,
    pub params: FidelityBoundParams,
}

impl GridConfig {
    pub fn two_senders() -> Self {
        Self {
            n: 2,
            steps: 80,
            refine: 4,
            params: FidelityBoundParams::two_senders(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub s: usize,
    pub alpha: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub config: GridConfig,
    pub min_margin: f64,
    pub argmin: GridPoint,
    pub evaluated: usize,
    pub refined_points: usize,
    /// Minimum at or above `−1e−8`.
    pub passed: bool,
    /// Some margin below `−1e−6`.
    pub violated: bool,
    #[serde(skip)]
    pub points: Vec<GridPoint>,
}

/// Every `n`-tuple over `0..base`, first coordinate fastest.
fn index_combinations(n: usize, base: usize) -> Vec<Vec<usize>> {
    (0..base.pow(n as u32))
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let k = idx % base;
                    idx /= base;
                    k
                })
                .collect()
        })
        .collect()
}

fn grid_axes(n: usize, steps: usize) -> Vec<Vec<f64>> {
    index_combinations(n, steps + 1)
        .into_iter()
        .map(|pick| {
            pick.into_iter()
                .map(|k| FRAC_PI_2 * k as f64 / steps as f64)
                .collect()
        })
        .collect()
}

fn evaluate_points(
    n: usize,
    targets: Vec<(usize, Vec<f64>)>,
    params: &FidelityBoundParams,
) -> Result<Vec<GridPoint>> {
    targets
        .into_par_iter()
        .map(|(s, alpha)| {
            let angles = AngleConfig { alpha };
            let margin = inequality_margin(n, &BitString::from_index(s, n), &angles, params)?;
            Ok(GridPoint {
                s,
                alpha: angles.alpha,
                margin,
            })
        })
        .collect()
}

/// Minimizes the inequality margin over a uniform angle grid for every
/// outcome, refining around negative values.
pub fn grid_sweep(config: &GridConfig) -> Result<GridResult> {
    let n = config.n;
    config.params.validate()?;
    if config.params.n != n {
        return Err(invalid("grid n differs from parameter n"));
    }
    if config.steps == 0 {
        return Err(invalid("grid needs at least one step"));
    }
    let axes = grid_axes(n, config.steps);
    let targets: Vec<(usize, Vec<f64>)> = (0..1usize << n)
        .flat_map(|s| axes.iter().map(move |a| (s, a.clone())))
        .collect();
    let mut points = evaluate_points(n, targets, &config.params)?;
    let evaluated = points.len();

    let step = FRAC_PI_2 / config.steps as f64;
    let fine = step / config.refine.max(1) as f64;
    let seeds: Vec<GridPoint> = points
        .iter()
        .filter(|p| p.margin < REFINE_BELOW)
        .cloned()
        .collect();
    let mut refined = Vec::new();
    if config.refine > 1 {
        let offsets: Vec<f64> = (-(config.refine as i64)..=config.refine as i64)
            .map(|k| k as f64 * fine)
            .collect();
        for seed in &seeds {
            for pick in index_combinations(n, offsets.len()) {
                let alpha: Vec<f64> = pick
                    .iter()
                    .zip(&seed.alpha)
                    .map(|(&k, &centre)| (centre + offsets[k]).clamp(0.0, FRAC_PI_2))
                    .collect();
                refined.push((seed.s, alpha));
            }
        }
    }
    let refined_points = refined.len();
    if !refined.is_empty() {
        points.extend(evaluate_points(n, refined, &config.params)?);
    }

    let argmin = points
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .cloned()
        .expect("grid is nonempty");
    Ok(GridResult {
        config: config.clone(),
        min_margin: argmin.margin,
        passed: argmin.margin >= -1e-8,
        violated: argmin.margin < -1e-6,
        argmin,
        evaluated,
        refined_points,
        points,
    })
}

/// Writes `s, alpha_1, …, alpha_n, margin` rows.
pub fn write_grid_csv<W: Write>(result: &GridResult, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["s".to_string()];
    header.extend((1..=result.config.n).map(|j| format!("alpha_{j}")));
    header.push("margin".into());
    writer.write_record(&header)?;
    for p in &result.points {
        let mut row = vec![BitString::from_index(p.s, result.config.n).to_string()];
        row.extend(p.alpha.iter().map(|a| crate::io::format_g17(*a)));
        row.push(crate::io::format_g17(p.margin));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-element trace guarantees for `M₁, M₂` of a partial Bell strategy:
/// `(Tr M_i, 1 − ε′_i/(2√2))` with `ε′_i = 2√2 − Tr(M_i W′_i)`.
pub fn partial_bell_trace_bounds(strategy: &crate::states::Strategy) -> Result<[(f64, f64); 2]> {
    let traces = crate::scenario::partial_bell::partial_bell_traces(strategy)?;
    let mut out = [(0.0, 0.0); 2];
    for (i, slot) in out.iter_mut().enumerate() {
        let deficit = 2.0 * SQRT_2 - traces[i];
        *slot = (
            strategy.povm.elements[i].trace().re,
            1.0 - deficit / (2.0 * SQRT_2),
        );
    }
    Ok(out)
}
