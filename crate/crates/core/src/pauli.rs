//! Pauli strings with exact phase tracking.
//!
//! A string is stored in symplectic form `i^p · X^x · Z^z` where `x` and `z`
//! are per-qubit bitmasks and `p ∈ {0,1,2,3}` is a power of `i`. A literal
//! `Y` letter is `i·XZ`, so building a string from letters bumps `p` once per
//! `Y`. This form makes multiplication a pair of XORs plus a phase update and
//! keeps the action on computational basis states sign-exact.

use num_complex::Complex64;

use crate::{Error, Result};

/// Single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    /// (x, z) symplectic bits of the letter.
    fn bits(self) -> (bool, bool) {
        match self {
            PauliOp::I => (false, false),
            PauliOp::X => (true, false),
            PauliOp::Y => (true, true),
            PauliOp::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliOp::I,
            (true, false) => PauliOp::X,
            (true, true) => PauliOp::Y,
            (false, true) => PauliOp::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// A phase-tracked Pauli string on `n ≤ 64` qubits.
///
/// Represents `i^phase_pow · ∏_q X_q^{x_q} Z_q^{z_q}`. Bit `q` of the masks
/// refers to qubit `q`; the mapping to statevector index bits happens in the
/// statevector layer, keeping the algebra independent of memory layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase_pow: u8,
}

impl PauliString {
    /// The identity string on `n` qubits.
    pub fn identity(n: usize) -> Self {
        assert!(n <= 64, "Pauli strings support at most 64 qubits");
        PauliString {
            n,
            x: 0,
            z: 0,
            phase_pow: 0,
        }
    }

    /// Build a string from `(qubit, letter)` pairs; omitted qubits are `I`.
    ///
    /// The result is the literal operator product of the letters (no hidden
    /// phase): e.g. `from_ops(3, &[(0, Z), (1, Y)])` is `Z₀Y₁`.
    pub fn from_ops(n: usize, ops: &[(usize, PauliOp)]) -> Result<Self> {
        let mut s = PauliString::identity(n);
        for &(q, op) in ops {
            if q >= n {
                return Err(Error::Dimension(format!(
                    "qubit {q} out of range for {n}-qubit Pauli string"
                )));
            }
            let bit = 1u64 << q;
            if (s.x | s.z) & bit != 0 {
                return Err(Error::Config(format!(
                    "qubit {q} listed twice in Pauli string"
                )));
            }
            let (xb, zb) = op.bits();
            if xb {
                s.x |= bit;
            }
            if zb {
                s.z |= bit;
            }
            if op == PauliOp::Y {
                // Y = i·XZ in symplectic form.
                s.phase_pow = (s.phase_pow + 1) % 4;
            }
        }
        Ok(s)
    }

    /// Parse a letter string like `"ZXZ"` or `"IZYX"`, qubit 0 first.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let ops: Vec<(usize, PauliOp)> = letters
            .chars()
            .enumerate()
            .map(|(q, c)| {
                let op = match c {
                    'I' => PauliOp::I,
                    'X' => PauliOp::X,
                    'Y' => PauliOp::Y,
                    'Z' => PauliOp::Z,
                    other => {
                        return Err(Error::Config(format!("unknown Pauli letter '{other}'")))
                    }
                };
                Ok((q, op))
            })
            .collect::<Result<_>>()?;
        PauliString::from_ops(letters.len(), &ops)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// The letter at qubit `q` (ignoring the global phase).
    pub fn letter(&self, q: usize) -> PauliOp {
        let bit = 1u64 << q;
        PauliOp::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| (self.x | self.z) >> q & 1 == 1).collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        ((self.x | self.z) as u64).count_ones() as usize
    }

    /// Global phase as a complex number (`i^phase_pow`).
    pub fn phase(&self) -> Complex64 {
        match self.phase_pow {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Multiply the phase by `i` (e.g. to form an anti-Hermitian generator).
    pub fn times_i(&self) -> Self {
        let mut s = self.clone();
        s.phase_pow = (s.phase_pow + 1) % 4;
        s
    }

    /// Multiply the phase by `-1`.
    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        s.phase_pow = (s.phase_pow + 2) % 4;
        s
    }

    /// Operator product `self · other` with exact phase.
    ///
    /// Using `X^a Z^b · X^c Z^d = (−1)^{|b∧c|} X^{a⊕c} Z^{b⊕d}`.
    pub fn mul(&self, other: &PauliString) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "Pauli product on {} vs {} qubits",
                self.n, other.n
            )));
        }
        let sign_swaps = (self.z & other.x).count_ones();
        Ok(PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase_pow: ((self.phase_pow as u32 + other.phase_pow as u32 + 2 * sign_swaps) % 4)
                as u8,
        })
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        // (i^p X^x Z^z)† = i^{-p} Z^z X^x = i^{-p} (−1)^{|x∧z|} X^x Z^z.
        let mut p = (4 - self.phase_pow) % 4;
        if (self.x & self.z).count_ones() % 2 == 1 {
            p = (p + 2) % 4;
        }
        PauliString {
            n: self.n,
            x: self.x,
            z: self.z,
            phase_pow: p,
        }
    }

    /// Whether the string equals its Hermitian conjugate.
    pub fn is_hermitian(&self) -> bool {
        (self.phase_pow as u32 + (self.x & self.z).count_ones()) % 2 == 0
    }

    /// Whether `self` and `other` commute as operators.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.z & other.x).count_ones() + (self.x & other.z).count_ones()) % 2 == 0
    }

    /// Action on a computational basis state, qubit-index convention:
    /// `P |b⟩ = coeff · |b ⊕ x⟩` with `coeff = i^p (−1)^{|z∧b|}`.
    ///
    /// `b` has bit `q` equal to the value of qubit `q` (this is *not* the
    /// statevector memory index; see `state::StateVector` for the mapping).
    pub fn basis_action(&self, b: u64) -> (u64, Complex64) {
        let mut p = self.phase_pow;
        if (self.z & b).count_ones() % 2 == 1 {
            p = (p + 2) % 4;
        }
        let coeff = match p {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (b ^ self.x, coeff)
    }

    /// X/Z masks in qubit-index space (bit `q` ↔ qubit `q`).
    pub fn masks(&self) -> (u64, u64) {
        (self.x, self.z)
    }

    /// Restriction of the string to `support qubits`, as a string on
    /// `support.len()` qubits (used to build dense matrices on the support).
    pub fn restrict_to(&self, support: &[usize]) -> Result<PauliString> {
        for q in 0..self.n {
            if self.letter(q) != PauliOp::I && !support.contains(&q) {
                return Err(Error::Dimension(format!(
                    "qubit {q} outside the requested support"
                )));
            }
        }
        let mut s = PauliString::identity(support.len());
        s.phase_pow = self.phase_pow;
        for (k, &q) in support.iter().enumerate() {
            let bit = 1u64 << q;
            if self.x & bit != 0 {
                s.x |= 1 << k;
            }
            if self.z & bit != 0 {
                s.z |= 1 << k;
            }
        }
        Ok(s)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Render relative to the letter convention: pull one factor of i per
        // Y back out of the stored phase so `Y` prints as `+Y`, not `-iY`.
        let y_count = (self.x & self.z).count_ones();
        let rel = ((self.phase_pow as u32 + 4 * self.n as u32 - y_count) % 4) as u8;
        let prefix = match rel {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).symbol())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn y_is_i_times_xz() {
        let y = PauliString::from_letters("Y").unwrap();
        let x = PauliString::from_letters("X").unwrap();
        let z = PauliString::from_letters("Z").unwrap();
        let xz = x.mul(&z).unwrap();
        assert_eq!(y, xz.times_i());
    }

    #[test]
    fn single_qubit_products_match_pauli_table() {
        let x = PauliString::from_letters("X").unwrap();
        let y = PauliString::from_letters("Y").unwrap();
        let z = PauliString::from_letters("Z").unwrap();
        // XY = iZ, YZ = iX, ZX = iY, and reversed order flips the sign.
        assert_eq!(x.mul(&y).unwrap(), z.times_i());
        assert_eq!(y.mul(&z).unwrap(), x.times_i());
        assert_eq!(z.mul(&x).unwrap(), y.times_i());
        assert_eq!(y.mul(&x).unwrap(), z.times_i().negated());
        assert_eq!(x.mul(&x).unwrap(), PauliString::identity(1));
    }

    #[test]
    fn basis_action_of_y() {
        let y = PauliString::from_letters("Y").unwrap();
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩.
        assert_eq!(y.basis_action(0), (1, c(0.0, 1.0)));
        assert_eq!(y.basis_action(1), (0, c(0.0, -1.0)));
    }

    #[test]
    fn hermiticity_matches_letter_count() {
        let zyz = PauliString::from_letters("ZYZ").unwrap();
        assert!(zyz.is_hermitian());
        assert!(!zyz.times_i().is_hermitian());
        assert_eq!(zyz.adjoint(), zyz);
        let gen = PauliString::from_letters("ZY").unwrap().times_i();
        // iZY is anti-Hermitian: (iZY)† = −iZY.
        assert_eq!(gen.adjoint(), gen.negated());
    }

    #[test]
    fn display_uses_letter_convention() {
        let s = PauliString::from_letters("ZY").unwrap();
        assert_eq!(s.to_string(), "+ZY");
        assert_eq!(s.times_i().to_string(), "+iZY");
        assert_eq!(s.negated().to_string(), "-ZY");
    }

    #[test]
    fn restriction_keeps_letters_and_phase() {
        let s = PauliString::from_ops(6, &[(1, PauliOp::Z), (4, PauliOp::Y)])
            .unwrap()
            .times_i();
        let r = s.restrict_to(&[1, 4]).unwrap();
        assert_eq!(r.to_string(), "+iZY");
        assert!(s.restrict_to(&[0, 1]).is_err());
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        let letters = prop::collection::vec(0..4u8, n);
        (letters, 0..4u8).prop_map(move |(ls, p)| {
            let ops: Vec<(usize, PauliOp)> = ls
                .iter()
                .enumerate()
                .map(|(q, &l)| {
                    let op = match l {
                        0 => PauliOp::I,
                        1 => PauliOp::X,
                        2 => PauliOp::Y,
                        _ => PauliOp::Z,
                    };
                    (q, op)
                })
                .collect();
            let mut s = PauliString::from_ops(n, &ops).unwrap();
            for _ in 0..p {
                s = s.times_i();
            }
            s
        })
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_pauli(5), b in arb_pauli(5), c in arb_pauli(5)) {
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
        }

        #[test]
        fn square_is_plus_or_minus_identity(a in arb_pauli(5)) {
            let sq = a.mul(&a).unwrap();
            let id = PauliString::identity(5);
            prop_assert!(sq == id || sq == id.negated());
        }

        #[test]
        fn adjoint_is_involutive_and_inverse(a in arb_pauli(4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            // Paulis are unitary: P†P = I.
            prop_assert_eq!(a.adjoint().mul(&a).unwrap(), PauliString::identity(4));
        }

        #[test]
        fn commutation_matches_product_order(a in arb_pauli(4), b in arb_pauli(4)) {
            let ab = a.mul(&b).unwrap();
            let ba = b.mul(&a).unwrap();
            if a.commutes_with(&b) {
                prop_assert_eq!(ab, ba);
            } else {
                prop_assert_eq!(ab, ba.negated());
            }
        }
    }
}
