//! Two-sender game certifying the three-outcome partial Bell measurement.
//!
//! For `k = 3` the receiver measures `{M₁, M₂, M₃}` and scores
//! `S^Comm = Σ_i Tr(M_i W′_i) / (8√2)`. For `k = 1, 2` it runs a 2→1 random
//! access code on sender 1's relabelled messages `ρ′_{a′|x′} = ρ_{a′|x′⊕a′}`,
//! guessing `a′` with observable `mx` and `x′` with observable `mz`.

use std::f64::consts::SQRT_2;

use crate::error::{invalid, Error, Result};
use crate::linalg::{herm_eig, identity, is_hermitian, r, tensor, trace_product, ComplexMatrix};
use crate::scenario::{a_operators, AOperators};
use crate::states::{
    aligned_sender_states, partial_bell_povm, state_to_bloch, SenderStates, Strategy,
};

/// `(W′₁, W′₂, W′₃)`.
pub fn build_partial_w(ops: &AOperators) -> Result<[ComplexMatrix; 3]> {
    if ops.n() != 2 {
        return Err(invalid(format!(
            "partial Bell witnesses need two senders, got {}",
            ops.n()
        )));
    }
    let plus = &ops.a[0][0] + &ops.a[0][1];
    let minus = &ops.a[0][0] - &ops.a[0][1];
    let first = tensor(&[plus, ops.a[1][0].clone()])?;
    let second = tensor(&[minus, ops.a[1][1].clone()])?;
    Ok([&first + &second, &second - &first, second * r(-2.0)])
}

/// `Tr(M_i W′_i)` for `i = 1, 2, 3`.
pub fn partial_bell_traces(strategy: &Strategy) -> Result<[f64; 3]> {
    if strategy.n != 2 || strategy.povm.len() != 3 || strategy.povm.dim() != 4 {
        return Err(invalid(format!(
            "partial Bell evaluation needs 2 senders and a 3-element POVM on dimension 4, got n = {} with {} elements",
            strategy.n,
            strategy.povm.len()
        )));
    }
    let ws = build_partial_w(&a_operators(strategy))?;
    let mut traces = [0.0; 3];
    for (t, (m, w)) in traces.iter_mut().zip(strategy.povm.elements.iter().zip(&ws)) {
        *t = trace_product(m, w).re;
    }
    Ok(traces)
}

pub fn s_comm(strategy: &Strategy) -> Result<f64> {
    Ok(partial_bell_traces(strategy)?.iter().sum::<f64>() / (8.0 * SQRT_2))
}

/// Aligned reference messages with the partial Bell measurement.
pub fn ideal_partial_bell_strategy() -> Strategy {
    Strategy {
        n: 2,
        senders: vec![
            aligned_sender_states(1, 2).expect("valid index"),
            aligned_sender_states(2, 2).expect("valid index"),
        ],
        povm: partial_bell_povm(),
    }
}

/// Bloch vectors `m[a′][x′]` of sender 1's relabelled messages.
pub fn rac_bloch_vectors(sender: &SenderStates) -> [[[f64; 3]; 2]; 2] {
    let mut m = [[[0.0; 3]; 2]; 2];
    for (a, row) in m.iter_mut().enumerate() {
        for (x, slot) in row.iter_mut().enumerate() {
            *slot = state_to_bloch(&sender.rho[a][x ^ a]);
        }
    }
    m
}

fn check_observable(o: &ComplexMatrix, name: &str) -> Result<()> {
    if o.nrows() != 2 || o.ncols() != 2 || !is_hermitian(o, 1e-10) {
        return Err(invalid(format!("{name} must be a Hermitian 2x2 matrix")));
    }
    let eig = herm_eig(o)?;
    if eig.min() < -1.0 - 1e-10 || eig.max() > 1.0 + 1e-10 {
        return Err(invalid(format!(
            "{name} has eigenvalues outside [-1, 1]: {:?}",
            eig.eigenvalues
        )));
    }
    Ok(())
}

/// Random-access-code score with effects `(I ± O)/2`, averaged over the
/// four relabelled inputs and the two questions.
pub fn s_rac(sender: &SenderStates, mx: &ComplexMatrix, mz: &ComplexMatrix) -> Result<f64> {
    check_observable(mx, "mx")?;
    check_observable(mz, "mz")?;
    let id = identity(2);
    let effect = |o: &ComplexMatrix, b: usize| {
        let sign = if b == 0 { 1.0 } else { -1.0 };
        (&id + o * r(sign)) * r(0.5)
    };
    let mut total = 0.0;
    for a in 0..2 {
        for x in 0..2 {
            let rho = &sender.rho[a][x ^ a];
            total += trace_product(rho, &effect(mx, a)).re;
            total += trace_product(rho, &effect(mz, x)).re;
        }
    }
    Ok(total / 8.0)
}

/// Observables maximizing [`s_rac`] for the given messages. A vanishing
/// direction leaves the corresponding observable at zero.
pub fn optimal_rac_observables(sender: &SenderStates) -> (ComplexMatrix, ComplexMatrix) {
    let m = rac_bloch_vectors(sender);
    let combine = |sx: [f64; 4]| {
        let mut v = [0.0; 3];
        for (k, comp) in v.iter_mut().enumerate() {
            *comp = sx[0] * m[0][0][k] + sx[1] * m[0][1][k] + sx[2] * m[1][0][k] + sx[3] * m[1][1][k];
        }
        v
    };
    let to_observable = |v: [f64; 3]| {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-14 {
            return ComplexMatrix::zeros(2, 2);
        }
        let u = v.map(|x| x / norm);
        // u·σ = 2ρ(u) − I
        crate::states::bloch_to_state(u).expect("unit vector") * r(2.0) - identity(2)
    };
    (
        to_observable(combine([1.0, 1.0, -1.0, -1.0])),
        to_observable(combine([1.0, -1.0, 1.0, -1.0])),
    )
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `1/2 + (√(γ+β) + √(γ−β)) / (8√2)` for relabelled Bloch vectors `m[a′][x′]`.
pub fn rac_bound(m: &[[[f64; 3]; 2]; 2]) -> Result<f64> {
    for row in m {
        for v in row {
            let norm = dot(v, v).sqrt();
            if norm > 1.0 + 1e-12 {
                return Err(Error::InvalidBloch { norm });
            }
        }
    }
    let (m00, m01, m10, m11) = (&m[0][0], &m[0][1], &m[1][0], &m[1][1]);
    let squares: f64 = [m00, m01, m10, m11].iter().map(|v| dot(v, v)).sum();
    let gamma = 0.5 * squares - dot(m00, m11) - dot(m01, m10);
    let beta = dot(&sub(m00, m11), &sub(m01, m10));
    let root = |x: f64| x.max(0.0).sqrt();
    Ok(0.5 + (root(gamma + beta) + root(gamma - beta)) / (8.0 * SQRT_2))
}

/// Maximum quantum value of the random-access-code score.
pub fn optimal_s_rac() -> f64 {
    (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, op_norm, sigma_x, sigma_z};
    use crate::states::{depolarized_povm, ideal_sender_states, ket_from_angles, SenderStates};

    #[test]
    fn ideal_partial_witnesses() {
        let ops = AOperators::aligned_ideal(2);
        let [w1, _, w3] = build_partial_w(&ops).unwrap();
        let expected = (tensor(&[sigma_x(), sigma_x()]).unwrap()
            + tensor(&[sigma_z(), sigma_z()]).unwrap())
            * r(SQRT_2);
        assert!(max_abs_diff(&w1, &expected) < 1e-12);
        assert!((op_norm(&w1).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        let m3 = partial_bell_povm().elements[2].clone();
        assert!((trace_product(&m3, &w3).re - 4.0 * SQRT_2).abs() < 1e-12);

        for w in build_partial_w(&AOperators::zeros(2)).unwrap() {
            assert_eq!(w, ComplexMatrix::zeros(4, 4));
        }
        assert!(build_partial_w(&AOperators::aligned_ideal(3)).is_err());
    }

    #[test]
    fn s_comm_examples() {
        let ideal = ideal_partial_bell_strategy();
        assert!((s_comm(&ideal).unwrap() - 1.0).abs() < 1e-12);

        let mut mixed = ideal.clone();
        mixed.senders = vec![SenderStates::maximally_mixed(); 2];
        assert!(s_comm(&mixed).unwrap().abs() < 1e-15);

        let mut noisy = ideal.clone();
        noisy.povm = depolarized_povm(&partial_bell_povm(), 0.12);
        assert!((s_comm(&noisy).unwrap() - 0.88).abs() < 1e-12);

        let ghz = crate::states::aligned_ideal_strategy(2).unwrap();
        assert!(s_comm(&ghz).is_err());
    }

    #[test]
    fn s_rac_examples() {
        let ideal = ideal_sender_states(1, 2).unwrap();
        let value = s_rac(&ideal, &sigma_x(), &sigma_z()).unwrap();
        assert!((value - optimal_s_rac()).abs() < 1e-12);
        assert!((value - 0.853553).abs() < 1e-6);

        let mixed = SenderStates::maximally_mixed();
        assert!((s_rac(&mixed, &sigma_x(), &sigma_z()).unwrap() - 0.5).abs() < 1e-15);

        assert!(s_rac(&ideal, &(sigma_x() * r(2.0)), &sigma_z()).is_err());
    }

    #[test]
    fn rac_bound_examples() {
        let ideal = ideal_sender_states(1, 2).unwrap();
        let bound = rac_bound(&rac_bloch_vectors(&ideal)).unwrap();
        assert!((bound - optimal_s_rac()).abs() < 1e-12);
        assert!((rac_bound(&[[[0.0; 3]; 2]; 2]).unwrap() - 0.5).abs() < 1e-15);
        let mut bad = [[[0.0; 3]; 2]; 2];
        bad[1][0] = [1.0, 1.0, 0.0];
        assert!(matches!(rac_bound(&bad), Err(Error::InvalidBloch { .. })));
    }

    #[test]
    fn rac_bound_is_tight_at_pi_over_three() {
        // A¹_x = cos α σ_X + (−1)^x sin α σ_Z with pure antipodal messages
        let alpha = std::f64::consts::FRAC_PI_3;
        let ket = |x: usize, a: usize| {
            let sign = if x == 0 { 1.0 } else { -1.0 };
            let (bx, bz) = (alpha.cos(), sign * alpha.sin());
            let (bx, bz) = if a == 0 { (bx, bz) } else { (-bx, -bz) };
            ket_from_angles(bz.acos(), if bx >= 0.0 { 0.0 } else { std::f64::consts::PI })
        };
        let sender = SenderStates::from_kets([[ket(0, 0), ket(1, 0)], [ket(0, 1), ket(1, 1)]]);
        let (mx, mz) = optimal_rac_observables(&sender);
        let value = s_rac(&sender, &mx, &mz).unwrap();
        let closed = 0.5
            + ((4.0 + 4.0 * (2.0 * alpha).cos()).sqrt() + (4.0 - 4.0 * (2.0 * alpha).cos()).sqrt())
                / (8.0 * SQRT_2);
        assert!((value - closed).abs() < 1e-12);
        assert!((rac_bound(&rac_bloch_vectors(&sender)).unwrap() - closed).abs() < 1e-12);
    }
}
