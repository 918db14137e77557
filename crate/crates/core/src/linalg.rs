//! Dense complex linear algebra for small qubit registers.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. Tensor
//! products follow the Kronecker convention with the leftmost factor as the
//! most significant index, so sender 1 always occupies the most significant
//! qubit of a register.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Entrywise tolerance for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Looser tolerance accepted on input to [`herm_eig`]; the input is
/// symmetrized before diagonalization.
pub const EIG_INPUT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, r(-1.0)])
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)])
}

/// Kronecker product of the factors, leftmost factor most significant.
pub fn tensor(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| invalid("tensor of an empty factor list"))?;
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kronecker(f)))
}

pub fn tensor_vectors(factors: &[ComplexVector]) -> Result<ComplexVector> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| invalid("tensor of an empty factor list"))?;
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kronecker(f)))
}

/// `op` acting on qubit `slot` (0-based, most significant first) of an
/// `n`-qubit register, identity elsewhere.
pub fn embed(op: &ComplexMatrix, slot: usize, n: usize) -> ComplexMatrix {
    let left = identity(1 << slot);
    let right = identity(1 << (n - slot - 1));
    left.kronecker(op).kronecker(&right)
}

/// `max_{jk} |M[j,k] - conj(M[k,j])|`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_deviation(m) <= tol
}

/// `(M + M^dagger) / 2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.trace().re
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// `<v|M|v>`.
pub fn expectation(v: &ComplexVector, m: &ComplexMatrix) -> C64 {
    (v.adjoint() * m * v)[(0, 0)]
}

/// `U M U^dagger`.
pub fn conjugate(u: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    u * m * u.adjoint()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns, same order).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Eigenvector of the largest eigenvalue. When the top eigenvalue is
    /// degenerate (within `tol`), the vector of the top eigenspace with the
    /// largest overlap on the lowest computational basis state is returned.
    pub fn top_vector(&self, tol: f64) -> ComplexVector {
        let dim = self.eigenvalues.len();
        let top = self.max();
        let block: Vec<usize> = (0..dim)
            .filter(|&k| top - self.eigenvalues[k] <= tol)
            .collect();
        if block.len() == 1 {
            return self.vector(dim - 1);
        }
        pick_in_subspace(&self.eigenvectors, &block)
    }

    /// Eigenvector of the smallest eigenvalue, with the same tie-break as
    /// [`EigenSystem::top_vector`].
    pub fn bottom_vector(&self, tol: f64) -> ComplexVector {
        let bottom = self.min();
        let block: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&k| self.eigenvalues[k] - bottom <= tol)
            .collect();
        if block.len() == 1 {
            return self.vector(0);
        }
        pick_in_subspace(&self.eigenvectors, &block)
    }
}

fn pick_in_subspace(vectors: &ComplexMatrix, block: &[usize]) -> ComplexVector {
    let dim = vectors.nrows();
    for basis in 0..dim {
        let mut v = ComplexVector::zeros(dim);
        for &k in block {
            let col = vectors.column(k);
            let coeff = col[basis].conj();
            v += col * coeff;
        }
        if v.norm() > 1e-8 {
            v /= r(v.norm());
            fix_phase(&mut v);
            return v;
        }
    }
    vectors.column(block[0]).into_owned()
}

/// Rotates the global phase so the first non-negligible component is real
/// and positive.
pub fn fix_phase(v: &mut ComplexVector) {
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn herm_eig(m: &ComplexMatrix) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(invalid(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = hermiticity_deviation(m);
    if deviation > EIG_INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(m.nrows(), m.nrows());
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        eigenvectors.set_column(dst, &v);
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(m)?.eigenvalues)
}

/// Largest eigenvalue of a Hermitian matrix (signed).
pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.max())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.min())
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    let eig = herm_eig(m)?;
    Ok(eig.min().abs().max(eig.max().abs()))
}

/// Transpose on the `target` tensor factor of a matrix on
/// `subsystem_dims[0] ⊗ subsystem_dims[1] ⊗ ...`.
pub fn partial_transpose(
    m: &ComplexMatrix,
    subsystem_dims: &[usize],
    target: usize,
) -> Result<ComplexMatrix> {
    let dim: usize = subsystem_dims.iter().product();
    if !m.is_square() || m.nrows() != dim || subsystem_dims.is_empty() {
        return Err(invalid(format!(
            "subsystem dimensions {subsystem_dims:?} do not match a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if target >= subsystem_dims.len() {
        return Err(invalid(format!(
            "partial transpose target {target} out of range for {} subsystems",
            subsystem_dims.len()
        )));
    }
    // stride of the target digit in the flattened index
    let stride: usize = subsystem_dims[target + 1..].iter().product();
    let local = subsystem_dims[target];
    let digit = |i: usize| (i / stride) % local;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            let (dr, dc) = (digit(row), digit(col));
            let new_row = row - dr * stride + dc * stride;
            let new_col = col - dc * stride + dr * stride;
            out[(new_row, new_col)] = m[(row, col)];
        }
    }
    Ok(out)
}

/// Contracts `m` against single-qubit operators on every slot except
/// `slot`, returning the 2x2 operator `G` with
/// `Tr(m · (O_1 ⊗ … ⊗ X ⊗ … ⊗ O_n)) = Tr(G X)` for all `X`.
/// `None` entries stand for the identity.
pub fn slot_contraction(
    m: &ComplexMatrix,
    ops: &[Option<&ComplexMatrix>],
    slot: usize,
) -> ComplexMatrix {
    let n = ops.len();
    let dim = 1usize << n;
    debug_assert_eq!(m.nrows(), dim);
    let bit = |i: usize, k: usize| (i >> (n - 1 - k)) & 1;
    let mut g = ComplexMatrix::zeros(2, 2);
    for row in 0..dim {
        for col in 0..dim {
            let entry = m[(row, col)];
            if entry.norm_sqr() == 0.0 {
                continue;
            }
            let mut weight = ONE;
            for (k, op) in ops.iter().enumerate() {
                if k == slot {
                    continue;
                }
                let (a, b) = (bit(col, k), bit(row, k));
                weight *= match op {
                    Some(o) => o[(a, b)],
                    None if a == b => ONE,
                    None => ZERO,
                };
                if weight.norm_sqr() == 0.0 {
                    break;
                }
            }
            if weight.norm_sqr() != 0.0 {
                g[(bit(row, slot), bit(col, slot))] += entry * weight;
            }
        }
    }
    g
}

/// Closest unitary to a square matrix in Frobenius norm (polar factor).
pub fn closest_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn brute_force_eigs(m: &ComplexMatrix) -> Vec<f64> {
        // Independent route: characteristic polynomial roots are not cheap,
        // so use Rayleigh power-free Jacobi on the real embedding.
        let n = m.nrows();
        let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                real[(i, j)] = z.re;
                real[(i + n, j + n)] = z.re;
                real[(i, j + n)] = -z.im;
                real[(i + n, j)] = z.im;
            }
        }
        let mut e: Vec<f64> = jacobi_real(real);
        e.sort_by(f64::total_cmp);
        // each eigenvalue appears twice in the real embedding
        e.iter().step_by(2).copied().collect()
    }

    fn jacobi_real(mut a: DMatrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = cs * akp - sn * akq;
                        a[(k, q)] = sn * akp + cs * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = cs * apk - sn * aqk;
                        a[(q, k)] = sn * apk + cs * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[(i, i)]).collect()
    }

    #[test]
    fn tensor_identity_and_bit_flip() {
        assert_eq!(tensor(&[identity(2)]).unwrap(), identity(2));
        let xx = tensor(&[sigma_x(), sigma_x()]).unwrap();
        let ket00 = ComplexVector::from_vec(vec![ONE, ZERO, ZERO, ZERO]);
        let ket11 = ComplexVector::from_vec(vec![ZERO, ZERO, ZERO, ONE]);
        assert_eq!(xx * ket00, ket11);
        assert!(matches!(tensor(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tensor_leftmost_is_most_significant() {
        let z11 = tensor(&[sigma_z(), identity(2), identity(2)]).unwrap();
        for i in 0..8 {
            let expect = if i < 4 { 1.0 } else { -1.0 };
            assert_eq!(z11[(i, i)].re, expect);
        }
        let oracle = brute_force_eigs(&z11);
        assert_eq!(oracle, vec![-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0]);
        let eig = eigenvalues(&z11).unwrap();
        for (a, b) in eig.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn herm_eig_examples() {
        let e = eigenvalues(&sigma_z()).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);

        let m = tensor(&[sigma_x(), sigma_x()]).unwrap() + tensor(&[sigma_z(), sigma_z()]).unwrap();
        let oracle = brute_force_eigs(&m);
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for ((a, b), want) in eigenvalues(&m).unwrap().iter().zip(&oracle).zip(expected) {
            assert!((a - b).abs() < 1e-12);
            assert!((a - want).abs() < 1e-12);
        }

        assert_eq!(eigenvalues(&zeros(4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn herm_eig_reconstructs_and_is_orthonormal() {
        let m = tensor(&[sigma_x(), sigma_y()]).unwrap() * r(0.7)
            + tensor(&[sigma_z(), identity(2)]).unwrap() * r(-0.3)
            + tensor(&[sigma_y(), sigma_z()]).unwrap() * r(1.1);
        let eig = herm_eig(&m).unwrap();
        let mut rebuilt = zeros(4);
        for k in 0..4 {
            let v = eig.vector(k);
            assert!(((&m * &v) - &v * r(eig.eigenvalues[k])).norm() < 1e-10);
            rebuilt += projector(&v) * r(eig.eigenvalues[k]);
        }
        assert!(max_abs_diff(&rebuilt, &m) < 1e-9);
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!(max_abs_diff(&gram, &identity(4)) < 1e-10);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn partial_transpose_examples() {
        for target in 0..2 {
            assert_eq!(partial_transpose(&identity(4), &[2, 2], target).unwrap(), identity(4));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexVector::from_vec(vec![r(h), ZERO, ZERO, r(h)]);
        let pt = partial_transpose(&projector(&phi), &[2, 2], 1).unwrap();
        let oracle = brute_force_eigs(&pt);
        assert!((oracle[0] + 0.5).abs() < 1e-12);
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);

        let rho1 = (identity(2) + sigma_x() * r(0.6)) * r(0.5);
        let rho2 = (identity(2) + sigma_y() * r(-0.8)) * r(0.5);
        let product = tensor(&[rho1, rho2]).unwrap();
        assert!(min_eigenvalue(&partial_transpose(&product, &[2, 2], 1).unwrap()).unwrap() >= -1e-12);

        assert!(matches!(
            partial_transpose(&identity(4), &[2, 3], 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            partial_transpose(&identity(4), &[2, 2], 2),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&sigma_x()).unwrap() - 1.0).abs() < 1e-14);
        let w = (tensor(&[sigma_x(), sigma_x()]).unwrap() + tensor(&[sigma_z(), sigma_z()]).unwrap())
            * r(SQRT_2);
        assert!((op_norm(&w).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
        let scaled = identity(8) * r(4.0 * SQRT_2);
        assert!((op_norm(&scaled).unwrap() - 4.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn embed_matches_tensor() {
        let z = embed(&sigma_z(), 1, 3);
        let t = tensor(&[identity(2), sigma_z(), identity(2)]).unwrap();
        assert_eq!(z, t);
    }

    #[test]
    fn slot_contraction_matches_trace() {
        let a = sigma_x() * r(0.3) + sigma_z() * r(0.5);
        let b = sigma_y() * r(-0.7) + identity(2) * r(0.2);
        let x = sigma_x() * r(0.4) + sigma_y() * r(0.1) + sigma_z() * r(-0.9);
        let m = tensor(&[sigma_y(), sigma_x(), sigma_z()]).unwrap()
            + tensor(&[sigma_z(), identity(2), sigma_y()]).unwrap() * c(0.0, 0.5);
        let full = tensor(&[a.clone(), x.clone(), b.clone()]).unwrap();
        let g = slot_contraction(&m, &[Some(&a), None, Some(&b)], 1);
        let lhs = trace_product(&m, &full);
        let rhs = trace_product(&g, &x);
        assert!((lhs - rhs).norm() < 1e-12);

        let with_identity = tensor(&[a.clone(), x.clone(), identity(2)]).unwrap();
        let g = slot_contraction(&m, &[Some(&a), None, None], 1);
        assert!((trace_product(&m, &with_identity) - trace_product(&g, &x)).norm() < 1e-12);
    }
}
