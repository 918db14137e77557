//! Qubit messages, reference states, GHZ basis vectors and POVMs.
//!
//! Output strings are indexed sender-first: `BitString::bit(0)` is s₁, the
//! bit that selects the relative sign of a GHZ basis vector. The POVM
//! element for `s` lives at `povm.elements[s.index()]` with
//! `index = Σ_k s_k 2^(k-1)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    self, c, hadamard, herm_eig, identity, projector, r, tensor, ComplexMatrix, ComplexVector, C64,
    ONE, ZERO,
};

/// Tolerance on PSD-ness and unit trace of states and POVM elements.
pub const STATE_TOL: f64 = 1e-10;
/// Entrywise tolerance on POVM completeness.
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid(format!("bit string {bits:?} contains non-binary entries")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    /// Inverse of [`BitString::index`].
    pub fn from_index(index: usize, n: usize) -> Self {
        Self {
            bits: (0..n).map(|k| ((index >> k) & 1) as u8).collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .map(|(k, &b)| (b as usize) << k)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit of sender `k + 1`.
    pub fn bit(&self, k: usize) -> u8 {
        self.bits[k]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// All `2^n` strings ordered by index.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << n).map(move |i| BitString::from_index(i, n))
    }

    pub fn sign(&self, k: usize) -> f64 {
        if self.bits[k] == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses `s₁ s₂ … s_n` written left to right.
    fn from_str(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid(format!("'{other}' is not a bit in \"{text}\""))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if bits.is_empty() {
            return Err(invalid("empty bit string"));
        }
        BitString::new(bits)
    }
}

/// The four messages `rho[a][x]` of one sender.
#[derive(Clone, Debug, PartialEq)]
pub struct SenderStates {
    pub rho: [[ComplexMatrix; 2]; 2],
}

impl SenderStates {
    pub fn new(rho: [[ComplexMatrix; 2]; 2]) -> Result<Self> {
        let states = Self { rho };
        states.validate()?;
        Ok(states)
    }

    /// Builds the sender from kets `psi[a][x]`.
    pub fn from_kets(psi: [[ComplexVector; 2]; 2]) -> Self {
        let [[k00, k01], [k10, k11]] = psi;
        Self {
            rho: [
                [projector(&k00), projector(&k01)],
                [projector(&k10), projector(&k11)],
            ],
        }
    }

    pub fn maximally_mixed() -> Self {
        let half = identity(2) * r(0.5);
        Self {
            rho: [[half.clone(), half.clone()], [half.clone(), half]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (a, row) in self.rho.iter().enumerate() {
            for (x, rho) in row.iter().enumerate() {
                validate_density(rho).map_err(|e| invalid(format!("rho[{a}][{x}]: {e}")))?;
            }
        }
        Ok(())
    }

    /// `A_x = rho[0][x] - rho[1][x]`.
    pub fn a_operator(&self, x: usize) -> ComplexMatrix {
        &self.rho[0][x] - &self.rho[1][x]
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        Self {
            rho: self
                .rho
                .clone()
                .map(|row| row.map(|m| linalg::conjugate(u, &m))),
        }
    }
}

fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(invalid(format!("expected a 2x2 matrix, got {}x{}", rho.nrows(), rho.ncols())));
    }
    let eig = herm_eig(rho)?;
    if eig.min() < -STATE_TOL {
        return Err(invalid(format!("negative eigenvalue {}", eig.min())));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
        return Err(invalid(format!("trace {trace} differs from 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    pub elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let povm = Self { elements };
        povm.validate()?;
        Ok(povm)
    }

    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |m| m.nrows())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(COMPLETENESS_TOL)
    }

    /// Checks positivity and completeness with a caller-chosen completeness
    /// tolerance (loose tolerances serve fixtures built from rounded data).
    pub fn validate_with(&self, completeness_tol: f64) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(invalid("POVM has no elements"));
        }
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (k, m) in self.elements.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(invalid(format!("POVM element {k} is not {dim}x{dim}")));
            }
            let eig = herm_eig(m).map_err(|e| invalid(format!("POVM element {k}: {e}")))?;
            if eig.min() < -STATE_TOL.max(completeness_tol) {
                return Err(invalid(format!(
                    "POVM element {k} has negative eigenvalue {}",
                    eig.min()
                )));
            }
            total += m;
        }
        let deviation = linalg::max_abs_diff(&total, &identity(dim));
        if deviation > completeness_tol {
            return Err(invalid(format!(
                "POVM elements sum to identity only within {deviation:e}"
            )));
        }
        Ok(())
    }

    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        Self {
            elements: self.elements.iter().map(|m| linalg::conjugate(u, m)).collect(),
        }
    }
}

/// Sender messages plus the receiver's measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub n: usize,
    pub senders: Vec<SenderStates>,
    pub povm: Povm,
}

impl Strategy {
    pub fn new(senders: Vec<SenderStates>, povm: Povm) -> Result<Self> {
        let strategy = Self {
            n: senders.len(),
            senders,
            povm,
        };
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("need at least two senders, got {}", self.n)));
        }
        if self.senders.len() != self.n {
            return Err(invalid(format!(
                "n = {} but {} senders supplied",
                self.n,
                self.senders.len()
            )));
        }
        for (j, sender) in self.senders.iter().enumerate() {
            sender
                .validate()
                .map_err(|e| invalid(format!("sender {}: {e}", j + 1)))?;
        }
        self.povm.validate()?;
        if self.povm.dim() != 1 << self.n {
            return Err(invalid(format!(
                "POVM acts on dimension {}, expected 2^{} = {}",
                self.povm.dim(),
                self.n,
                1usize << self.n
            )));
        }
        Ok(())
    }

    /// Conjugates sender `j`'s states by `local[j]` and the POVM by `⊗ local`.
    pub fn conjugated(&self, local: &[ComplexMatrix]) -> Result<Self> {
        if local.len() != self.n {
            return Err(invalid(format!(
                "{} local unitaries for {} senders",
                local.len(),
                self.n
            )));
        }
        let global = tensor(local)?;
        Ok(Self {
            n: self.n,
            senders: self
                .senders
                .iter()
                .zip(local)
                .map(|(s, u)| s.conjugated(u))
                .collect(),
            povm: self.povm.conjugated(&global),
        })
    }
}

pub fn ket0() -> ComplexVector {
    ComplexVector::from_vec(vec![ONE, ZERO])
}

pub fn ket1() -> ComplexVector {
    ComplexVector::from_vec(vec![ZERO, ONE])
}

pub fn ket_plus() -> ComplexVector {
    ComplexVector::from_vec(vec![r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)])
}

pub fn ket_minus() -> ComplexVector {
    ComplexVector::from_vec(vec![r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)])
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn ket_from_angles(theta: f64, phi: f64) -> ComplexVector {
    ComplexVector::from_vec(vec![
        r((theta / 2.0).cos()),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// The ket orthogonal to [`ket_from_angles`]: `sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩`.
pub fn ket_from_angles_orthogonal(theta: f64, phi: f64) -> ComplexVector {
    ComplexVector::from_vec(vec![
        r((theta / 2.0).sin()),
        -C64::from_polar((theta / 2.0).cos(), phi),
    ])
}

/// `(I + v·σ)/2`.
pub fn bloch_to_state(v: [f64; 3]) -> Result<ComplexMatrix> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm > 1.0 + 1e-12 {
        return Err(Error::InvalidBloch { norm });
    }
    Ok(ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            r((1.0 + v[2]) / 2.0),
            c(v[0] / 2.0, -v[1] / 2.0),
            c(v[0] / 2.0, v[1] / 2.0),
            r((1.0 - v[2]) / 2.0),
        ],
    ))
}

/// `(Tr ρσ_X, Tr ρσ_Y, Tr ρσ_Z)`.
pub fn state_to_bloch(rho: &ComplexMatrix) -> [f64; 3] {
    [
        2.0 * rho[(0, 1)].re,
        2.0 * rho[(1, 0)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

fn check_sender(j: usize, n: usize) -> Result<()> {
    if j == 0 || j > n {
        return Err(invalid(format!("sender index {j} outside 1..={n}")));
    }
    Ok(())
}

/// Reference messages of the canonical optimal strategy: sender 1 uses the
/// four π/8-rotated states, every other sender uses `|0⟩, |1⟩` for `x = 0`
/// and `|+⟩, |−⟩` for `x = 1`.
pub fn ideal_sender_states(j: usize, n: usize) -> Result<SenderStates> {
    check_sender(j, n)?;
    if j == 1 {
        return Ok(first_sender_states());
    }
    Ok(SenderStates::from_kets([
        [ket0(), ket_plus()],
        [ket1(), ket_minus()],
    ]))
}

/// Reference messages in the frame where `A₀ = σ_X`, `A₁ = σ_Z` for senders
/// `j ≥ 2` (the images of [`ideal_sender_states`] under a Hadamard).
pub fn aligned_sender_states(j: usize, n: usize) -> Result<SenderStates> {
    check_sender(j, n)?;
    if j == 1 {
        return Ok(first_sender_states());
    }
    Ok(SenderStates::from_kets([
        [ket_plus(), ket0()],
        [ket_minus(), ket1()],
    ]))
}

fn first_sender_states() -> SenderStates {
    let (cp, sp) = (FRAC_PI_8.cos(), FRAC_PI_8.sin());
    let ket = |a: f64, b: f64| ComplexVector::from_vec(vec![r(a), r(b)]);
    // β± = ±(σX+σZ)/√2 eigenstates, α± = ±(σX−σZ)/√2 eigenstates
    SenderStates::from_kets([
        [ket(cp, sp), ket(sp, cp)],
        [ket(sp, -cp), ket(cp, -sp)],
    ])
}

/// `(|0 s₂ … s_n⟩ + (−1)^{s₁} |1 s̄₂ … s̄_n⟩)/√2`.
pub fn ghz_basis_state(s: &BitString, n: usize) -> Result<ComplexVector> {
    if s.len() != n {
        return Err(invalid(format!("bit string {s} has {} bits, expected {n}", s.len())));
    }
    let dim = 1usize << n;
    // qubit 1 is the most significant position of the register index
    let tail: usize = (1..n).map(|k| (s.bit(k) as usize) << (n - 1 - k)).sum();
    let flipped = (dim - 1) ^ tail;
    let mut v = ComplexVector::zeros(dim);
    v[tail] = r(FRAC_1_SQRT_2);
    v[flipped] = r(s.sign(0) * FRAC_1_SQRT_2);
    Ok(v)
}

/// Rank-one projectors onto the GHZ basis.
pub fn ghz_povm(n: usize) -> Povm {
    Povm {
        elements: BitString::all(n)
            .map(|s| projector(&ghz_basis_state(&s, n).expect("length matches")))
            .collect(),
    }
}

/// GHZ projectors expressed in the frame of [`ideal_sender_states`]:
/// `(I ⊗ H^{⊗(n−1)}) |ξ_s⟩⟨ξ_s| (I ⊗ H^{⊗(n−1)})`.
pub fn ideal_povm(n: usize) -> Povm {
    let mut factors = vec![identity(2)];
    factors.extend(std::iter::repeat_n(hadamard(), n - 1));
    let u = tensor(&factors).expect("nonempty");
    ghz_povm(n).conjugated(&u)
}

/// Computational-basis projectors, with outcome `s` assigned to
/// `|s₁, s₂⊕s₁, …, s_n⊕s₁⟩` (the product state sharing the support of ξ_s).
pub fn computational_povm(n: usize) -> Povm {
    let dim = 1usize << n;
    let elements = BitString::all(n)
        .map(|s| {
            let first = s.bit(0);
            let register: usize = (0..n)
                .map(|k| {
                    let bit = if k == 0 { first } else { s.bit(k) ^ first };
                    (bit as usize) << (n - 1 - k)
                })
                .sum();
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(register, register)] = ONE;
            m
        })
        .collect();
    Povm { elements }
}

/// `(1 − v) M_s + v I / 2^n` applied to every element.
pub fn depolarized_povm(povm: &Povm, v: f64) -> Povm {
    let dim = povm.dim();
    let noise = identity(dim) * r(v / povm.len() as f64);
    Povm {
        elements: povm
            .elements
            .iter()
            .map(|m| m * r(1.0 - v) + &noise)
            .collect(),
    }
}

/// `{|φ⁺⟩⟨φ⁺|, |φ⁻⟩⟨φ⁻|, |ψ⁺⟩⟨ψ⁺| + |ψ⁻⟩⟨ψ⁻|}`.
pub fn partial_bell_povm() -> Povm {
    let h = FRAC_1_SQRT_2;
    let v = |a: f64, b: f64, c_: f64, d: f64| ComplexVector::from_vec(vec![r(a), r(b), r(c_), r(d)]);
    let phi_plus = v(h, 0.0, 0.0, h);
    let phi_minus = v(h, 0.0, 0.0, -h);
    let psi_plus = v(0.0, h, h, 0.0);
    let psi_minus = v(0.0, h, -h, 0.0);
    Povm {
        elements: vec![
            projector(&phi_plus),
            projector(&phi_minus),
            projector(&psi_plus) + projector(&psi_minus),
        ],
    }
}

/// Optimal strategy with the reference messages and the GHZ measurement
/// expressed in the same frame.
pub fn ideal_strategy(n: usize) -> Result<Strategy> {
    check_n(n)?;
    let senders = (1..=n)
        .map(|j| ideal_sender_states(j, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Strategy {
        n,
        senders,
        povm: ideal_povm(n),
    })
}

/// Optimal strategy in the aligned frame: aligned messages with the plain
/// GHZ basis measurement.
pub fn aligned_ideal_strategy(n: usize) -> Result<Strategy> {
    check_n(n)?;
    let senders = (1..=n)
        .map(|j| aligned_sender_states(j, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(Strategy {
        n,
        senders,
        povm: ghz_povm(n),
    })
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("need at least two senders, got {n}")));
    }
    if n > crate::MAX_SENDERS {
        return Err(Error::Unsupported(format!(
            "n = {n} exceeds the supported maximum of {}",
            crate::MAX_SENDERS
        )));
    }
    Ok(())
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random normalized vector of dimension `dim`.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / r(norm);
        }
    }
}

/// Haar-random 2x2 unitary.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let v = random_ket(rng, 2);
    let phase = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    let w = ComplexVector::from_vec(vec![-v[1].conj() * phase, v[0].conj() * phase]);
    ComplexMatrix::from_columns(&[v, w])
}

/// Independent Haar-random pure messages.
pub fn random_pure_sender<R: Rng + ?Sized>(rng: &mut R) -> SenderStates {
    SenderStates::from_kets([
        [random_ket(rng, 2), random_ket(rng, 2)],
        [random_ket(rng, 2), random_ket(rng, 2)],
    ])
}

/// Pure messages with `rho[1][x] = I − rho[0][x]`.
pub fn random_antipodal_sender<R: Rng + ?Sized>(rng: &mut R) -> SenderStates {
    let k0 = random_ket(rng, 2);
    let k1 = random_ket(rng, 2);
    let orth = |k: &ComplexVector| ComplexVector::from_vec(vec![-k[1].conj(), k[0].conj()]);
    let (o0, o1) = (orth(&k0), orth(&k1));
    SenderStates::from_kets([[k0, k1], [o0, o1]])
}

/// Messages with Bloch vectors drawn uniformly from the unit ball.
pub fn random_mixed_sender<R: Rng + ?Sized>(rng: &mut R) -> SenderStates {
    let mut draw = || {
        let dir = random_ket(rng, 2);
        let bloch = state_to_bloch(&projector(&dir));
        let radius = rng.random::<f64>().cbrt();
        bloch_to_state(bloch.map(|x| x * radius)).expect("radius below one")
    };
    SenderStates {
        rho: [[draw(), draw()], [draw(), draw()]],
    }
}

/// Rank-one projective measurement in the eigenbasis of a random Hermitian
/// matrix (GUE-distributed).
pub fn random_projective_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Povm {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let h = linalg::symmetrize(&g);
    let eig = herm_eig(&h).expect("symmetrized matrix is Hermitian");
    Povm {
        elements: (0..dim).map(|k| projector(&eig.vector(k))).collect(),
    }
}

pub fn random_strategy_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Strategy {
    let senders = (0..n).map(|_| random_pure_sender(rng)).collect();
    let povm = random_projective_povm(rng, 1 << n);
    Strategy { n, senders, povm }
}

/// Haar-random pure messages and a random rank-one projective measurement;
/// deterministic in `seed`.
pub fn random_strategy(n: usize, seed: u64) -> Result<Strategy> {
    check_n(n)?;
    Ok(random_strategy_with(n, &mut rng_from_seed(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, sigma_x, sigma_z, trace_product};

    #[test]
    fn bit_string_index_round_trip() {
        for n in 1..6 {
            for i in 0..1usize << n {
                let s = BitString::from_index(i, n);
                assert_eq!(s.index(), i);
                assert_eq!(s.to_string().parse::<BitString>().unwrap(), s);
            }
        }
        let s: BitString = "10".parse().unwrap();
        assert_eq!(s.bit(0), 1);
        assert_eq!(s.index(), 1);
        assert!("1a".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
    }

    #[test]
    fn bloch_examples() {
        let z = bloch_to_state([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(z, projector(&ket0()));
        let mixed = bloch_to_state([0.0; 3]).unwrap();
        assert!(max_abs_diff(&mixed, &(identity(2) * r(0.5))) < 1e-15);
        let plus = bloch_to_state([1.0, 0.0, 0.0]).unwrap();
        assert!((plus[(0, 1)] - r(0.5)).norm() < 1e-15);
        assert!(max_abs_diff(&plus, &projector(&ket_plus())) < 1e-15);
        assert!(matches!(
            bloch_to_state([1.0, 1.0, 0.0]),
            Err(Error::InvalidBloch { .. })
        ));
        let v = [0.3, -0.4, 0.5];
        let back = state_to_bloch(&bloch_to_state(v).unwrap());
        for k in 0..3 {
            assert!((back[k] - v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn ideal_states_match_reference() {
        let s2 = ideal_sender_states(2, 2).unwrap();
        assert_eq!(s2.rho[0][0], projector(&ket0()));
        assert!(max_abs_diff(&s2.rho[1][1], &projector(&ket_minus())) < 1e-15);
        assert!(max_abs_diff(&s2.a_operator(0), &sigma_z()) < 1e-15);
        assert!(max_abs_diff(&s2.a_operator(1), &sigma_x()) < 1e-15);

        let s1 = ideal_sender_states(1, 3).unwrap();
        assert!(trace_product(&s1.rho[0][0], &s1.rho[1][0]).norm() < 1e-15);
        let h = FRAC_1_SQRT_2;
        let a0 = (sigma_x() + sigma_z()) * r(h);
        let a1 = (sigma_x() - sigma_z()) * r(h);
        assert!(max_abs_diff(&s1.a_operator(0), &a0) < 1e-12);
        assert!(max_abs_diff(&s1.a_operator(1), &a1) < 1e-12);
        s1.validate().unwrap();

        let aligned = aligned_sender_states(3, 3).unwrap();
        assert!(max_abs_diff(&aligned.a_operator(0), &sigma_x()) < 1e-15);
        assert!(max_abs_diff(&aligned.a_operator(1), &sigma_z()) < 1e-15);

        assert!(ideal_sender_states(0, 2).is_err());
        assert!(ideal_sender_states(3, 2).is_err());
    }

    #[test]
    fn ghz_basis_examples() {
        let h = FRAC_1_SQRT_2;
        let phi_plus = ghz_basis_state(&"00".parse().unwrap(), 2).unwrap();
        assert_eq!(phi_plus.as_slice(), &[r(h), ZERO, ZERO, r(h)]);
        // s₁ = 1, s₂ = 0
        let phi_minus = ghz_basis_state(&"10".parse().unwrap(), 2).unwrap();
        assert_eq!(phi_minus.as_slice(), &[r(h), ZERO, ZERO, r(-h)]);
        let psi = ghz_basis_state(&"01".parse().unwrap(), 2).unwrap();
        assert_eq!(psi.as_slice(), &[ZERO, r(h), r(h), ZERO]);

        let basis: Vec<ComplexVector> = BitString::all(3)
            .map(|s| ghz_basis_state(&s, 3).unwrap())
            .collect();
        let gram = ComplexMatrix::from_fn(8, 8, |i, j| basis[i].dotc(&basis[j]));
        assert!(max_abs_diff(&gram, &identity(8)) < 1e-12);

        assert!(ghz_basis_state(&"000".parse().unwrap(), 2).is_err());
    }

    #[test]
    fn povm_constructors_are_valid() {
        for n in 2..5 {
            ghz_povm(n).validate().unwrap();
            ideal_povm(n).validate().unwrap();
            computational_povm(n).validate().unwrap();
            depolarized_povm(&ghz_povm(n), 0.3).validate().unwrap();
        }
        partial_bell_povm().validate().unwrap();
        let broken = Povm {
            elements: vec![identity(2) * r(0.5)],
        };
        assert!(broken.validate().is_err());
    }

    #[test]
    fn ideal_strategies_validate() {
        for n in 2..6 {
            ideal_strategy(n).unwrap().validate().unwrap();
            aligned_ideal_strategy(n).unwrap().validate().unwrap();
        }
        assert!(ideal_strategy(1).is_err());
        assert!(matches!(ideal_strategy(8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn random_strategy_is_deterministic_and_valid() {
        let a = random_strategy(3, 17).unwrap();
        let b = random_strategy(3, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_strategy(3, 18).unwrap());
        a.validate().unwrap();
        for seed in 0..10 {
            let s = random_strategy(2, seed).unwrap();
            for m in &s.povm.elements {
                assert!((m.trace().re - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn random_samplers_are_valid() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let u = random_unitary(&mut rng);
            assert!(max_abs_diff(&(u.adjoint() * &u), &identity(2)) < 1e-12);
            let anti = random_antipodal_sender(&mut rng);
            anti.validate().unwrap();
            for x in 0..2 {
                assert!(trace_product(&anti.rho[0][x], &anti.rho[1][x]).norm() < 1e-12);
            }
            random_mixed_sender(&mut rng).validate().unwrap();
        }
    }
}
