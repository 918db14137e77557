//! Two-sender, three-input game whose optimum is reached by both entangled
//! and separable binary measurements, so the optimum alone cannot certify
//! the entangled one.
//!
//! `S = −2[p(0|1,1) − p(0|1,3) + p(0|2,1)] + p(0|2,2) − p(0|2,3) + p(0|3,2) − p(0|3,3)`

use crate::error::{invalid, Result};
use crate::linalg::{identity, projector, tensor, trace_product, ComplexMatrix};
use crate::states::{ket0, ket1, ket_from_angles, ket_from_angles_orthogonal};

/// `COEFFS[y1][y2]` multiplies `p(0|y1+1, y2+1)`.
pub const COEFFS: [[f64; 3]; 3] = [[-2.0, 0.0, 2.0], [-2.0, 1.0, -1.0], [0.0, 1.0, -1.0]];

/// `p(0|y1, y2)` with 0-based inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleTable {
    pub p0: Vec<Vec<f64>>,
}

/// Three messages per sender and the outcome-0 effect `M₀` (`M₁ = I − M₀`).
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleStrategy {
    pub first: [ComplexMatrix; 3],
    pub second: [ComplexMatrix; 3],
    pub m0: ComplexMatrix,
}

impl CounterexampleStrategy {
    pub fn m1(&self) -> ComplexMatrix {
        identity(4) - &self.m0
    }

    pub fn povm(&self) -> crate::states::Povm {
        crate::states::Povm {
            elements: vec![self.m0.clone(), self.m1()],
        }
    }
}

pub fn counterexample_table(strategy: &CounterexampleStrategy) -> CounterexampleTable {
    let p0 = (0..3)
        .map(|y1| {
            (0..3)
                .map(|y2| {
                    let rho = tensor(&[strategy.first[y1].clone(), strategy.second[y2].clone()])
                        .expect("two factors");
                    trace_product(&rho, &strategy.m0).re
                })
                .collect()
        })
        .collect();
    CounterexampleTable { p0 }
}

pub fn counterexample_metric(table: &CounterexampleTable) -> Result<f64> {
    if table.p0.len() != 3 || table.p0.iter().any(|row| row.len() != 3) {
        return Err(invalid("counterexample table must be 3x3 over (y1, y2)"));
    }
    let mut total = 0.0;
    for (y1, row) in table.p0.iter().enumerate() {
        for (y2, &p) in row.iter().enumerate() {
            if !p.is_finite() {
                return Err(invalid(format!("p(0|{},{}) is not finite", y1 + 1, y2 + 1)));
            }
            total += COEFFS[y1][y2] * p;
        }
    }
    Ok(total)
}

pub fn counterexample_value(strategy: &CounterexampleStrategy) -> f64 {
    counterexample_metric(&counterexample_table(strategy)).expect("3x3 by construction")
}

/// `Σ C[y1][y2] ρ¹_{y1} ⊗ ρ²_{y2}`; the metric equals `Tr(O M₀)`.
pub fn effective_operator(first: &[ComplexMatrix; 3], second: &[ComplexMatrix; 3]) -> ComplexMatrix {
    let mut o = ComplexMatrix::zeros(4, 4);
    for (y1, row) in COEFFS.iter().enumerate() {
        for (y2, &coeff) in row.iter().enumerate() {
            if coeff != 0.0 {
                o += tensor(&[first[y1].clone(), second[y2].clone()]).expect("two factors")
                    * crate::linalg::r(coeff);
            }
        }
    }
    o
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn pure(theta_deg: f64, phi_deg: f64) -> ComplexMatrix {
    projector(&ket_from_angles(deg(theta_deg), deg(phi_deg)))
}

/// Rank-one terms `|Ψ⟩⟨Ψ|` and `|Ψ⊥⟩⟨Ψ⊥|` of the entangling `M₀`, built
/// from the rounded reference parameters. The kets are used as given, so
/// their sum is only approximately a projector.
pub fn entangled_components() -> [ComplexMatrix; 2] {
    let (l1, l2) = (0.9413, 0.3375);
    let psi = tensor_kets(&ket0(), &ket0()) * crate::linalg::r(l1)
        + tensor_kets(&ket1(), &ket1()) * crate::linalg::r(l2);
    let (t, p, tp, pp) = (deg(179.61), deg(354.23), deg(48.93), deg(116.69));
    let (lt1, lt2) = (0.9240, 0.3357);
    let psi_perp = tensor_kets(&ket_from_angles(t, p), &ket_from_angles(tp, pp))
        * crate::linalg::r(lt1)
        + tensor_kets(
            &ket_from_angles_orthogonal(t, p),
            &ket_from_angles_orthogonal(tp, pp),
        ) * crate::linalg::r(lt2);
    [projector(&psi), projector(&psi_perp)]
}

/// Entangling measurement with messages from the entangled-optimum table.
pub fn entangled_fixture() -> CounterexampleStrategy {
    let [a, b] = entangled_components();
    CounterexampleStrategy {
        first: [pure(118.05, 0.0), pure(125.58, 243.78), pure(125.73, 244.07)],
        second: [pure(151.45, 287.40), pure(69.76, 116.28), pure(65.49, 296.09)],
        m0: a + b,
    }
}

/// Product terms `|0⟩⟨0| ⊗ |u⟩⟨u|` and `|1⟩⟨1| ⊗ |0⟩⟨0|` of the separable `M₀`.
pub fn separable_components() -> [ComplexMatrix; 2] {
    let u = ket_from_angles(deg(89.84), deg(46.08));
    [
        tensor(&[projector(&ket0()), projector(&u)]).expect("two factors"),
        tensor(&[projector(&ket1()), projector(&ket0())]).expect("two factors"),
    ]
}

/// Separable measurement with messages from the separable-optimum table.
pub fn separable_fixture() -> CounterexampleStrategy {
    let [a, b] = separable_components();
    CounterexampleStrategy {
        first: [pure(8.35, 0.0), pure(177.0, 46.08), pure(177.0, 46.08)],
        second: [pure(123.49, 231.77), pure(0.0, 0.0), pure(134.92, 46.08)],
        m0: a + b,
    }
}

fn tensor_kets(a: &crate::linalg::ComplexVector, b: &crate::linalg::ComplexVector) -> crate::linalg::ComplexVector {
    a.kronecker(b)
}
