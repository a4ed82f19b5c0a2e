//! Dense statevector simulation with stride-based gate kernels.
//!
//! Convention: qubit 0 is the **most significant** bit of the memory index,
//! i.e. the amplitude of `|b₀b₁…b_{n−1}⟩` lives at index `b₀b₁…b_{n−1}` read
//! as a binary number. A `k`-qubit gate is applied by gathering the `2^k`
//! amplitudes of each non-target configuration, multiplying by the gate
//! matrix, and scattering back — no Kronecker products are ever formed.

use num_complex::Complex64;

use crate::pauli::PauliString;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Map a qubit-indexed bitmask (bit `q` ↔ qubit `q`) to the equivalent
/// memory-index bitmask (bit `n−1−q` ↔ qubit `q`).
#[inline]
pub fn qubit_mask_to_index_mask(n: usize, mask: u64) -> u64 {
    debug_assert!(n >= 1 && n <= 64);
    debug_assert!(n == 64 || mask < (1u64 << n));
    mask.reverse_bits() >> (64 - n)
}

/// A normalized (unless stated otherwise) pure state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|00…0⟩` on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        Self::basis_state(n, 0)
    }

    /// The computational basis state with qubit `q` set to bit `q` of `bits`.
    pub fn basis_state(n: usize, bits: u64) -> Self {
        assert!(n >= 1 && n <= 28, "qubit count out of supported range");
        let mut amps = vec![ZERO; 1 << n];
        amps[qubit_mask_to_index_mask(n, bits) as usize] = ONE;
        StateVector { n, amps }
    }

    /// Wrap raw amplitudes (length must be a power of two matching `n`).
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::Dimension(format!(
                "{} amplitudes cannot represent {} qubits",
                amps.len(),
                n
            )));
        }
        Ok(StateVector { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Amplitude of the basis state with qubit values given by `bits`
    /// (qubit-indexed, like [`StateVector::basis_state`]).
    pub fn amp(&self, bits: u64) -> Complex64 {
        self.amps[qubit_mask_to_index_mask(self.n, bits) as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let inv = 1.0 / self.norm();
        for a in &mut self.amps {
            *a *= inv;
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.n, other.n);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .fold(ZERO, |acc, t| acc + t)
    }

    /// Complex-conjugate every amplitude in place (the basis-dependent
    /// antiunitary `K`).
    pub fn conjugate_in_place(&mut self) {
        for a in &mut self.amps {
            *a = a.conj();
        }
    }

    /// Apply a Pauli string in place (phase-exact).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        debug_assert_eq!(self.n, p.num_qubits());
        let (x, z) = p.masks();
        let xs = qubit_mask_to_index_mask(self.n, x);
        let zs = qubit_mask_to_index_mask(self.n, z);
        let phase = p.phase();
        let out: Vec<Complex64> = (0..self.amps.len())
            .map(|s| {
                let src = s ^ xs as usize;
                // Sign from Z letters acting on the source bit pattern.
                let neg = (zs & src as u64).count_ones() & 1 == 1;
                let v = phase * self.amps[src];
                if neg {
                    -v
                } else {
                    v
                }
            })
            .collect();
        self.amps = out;
    }

    /// `⟨ψ|P|ψ⟩` without materializing `P|ψ⟩`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        debug_assert_eq!(self.n, p.num_qubits());
        let (x, z) = p.masks();
        let xs = qubit_mask_to_index_mask(self.n, x) as usize;
        let zs = qubit_mask_to_index_mask(self.n, z);
        let mut acc = ZERO;
        for s in 0..self.amps.len() {
            let v = self.amps[s ^ xs].conj() * self.amps[s];
            if (zs & s as u64).count_ones() & 1 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        p.phase() * acc
    }

    /// Apply a dense `k`-qubit gate to the listed qubits.
    ///
    /// `qubits[0]` is the most significant bit of the gate's local index,
    /// mirroring the global convention.
    pub fn apply_gate(&mut self, gate: &DenseGate, qubits: &[usize]) {
        let k = gate.num_qubits();
        assert_eq!(qubits.len(), k, "gate arity does not match target count");
        for (i, &q) in qubits.iter().enumerate() {
            assert!(q < self.n, "target qubit out of range");
            assert!(
                !qubits[i + 1..].contains(&q),
                "duplicate target qubit in gate application"
            );
        }
        match k {
            1 => self.apply_gate1(gate, qubits[0]),
            2 => self.apply_gate2(gate, qubits[0], qubits[1]),
            _ => self.apply_gate_general(gate, qubits),
        }
    }

    fn apply_gate1(&mut self, gate: &DenseGate, q: usize) {
        let b = self.n - 1 - q;
        let stride = 1usize << b;
        let mask = stride - 1;
        let m = gate.elements();
        let (m00, m01, m10, m11) = (m[0], m[1], m[2], m[3]);
        for c in 0..self.amps.len() >> 1 {
            let i0 = ((c & !mask) << 1) | (c & mask);
            let i1 = i0 | stride;
            let a0 = self.amps[i0];
            let a1 = self.amps[i1];
            self.amps[i0] = m00 * a0 + m01 * a1;
            self.amps[i1] = m10 * a0 + m11 * a1;
        }
    }

    fn apply_gate2(&mut self, gate: &DenseGate, q_hi: usize, q_lo: usize) {
        let bh = self.n - 1 - q_hi; // bit position of the gate's MSB qubit
        let bl = self.n - 1 - q_lo;
        let sh = 1usize << bh;
        let sl = 1usize << bl;
        // Insert zero bits lowest-position-first so the second insertion
        // point is measured in the already-expanded index.
        let (b0, b1) = if bh < bl { (bh, bl) } else { (bl, bh) };
        let m0 = (1usize << b0) - 1;
        let m1 = (1usize << b1) - 1;
        let m = gate.elements();
        for c in 0..self.amps.len() >> 2 {
            let t = ((c & !m0) << 1) | (c & m0);
            let base = ((t & !m1) << 1) | (t & m1);
            let i0 = base; // |00⟩ on (q_hi, q_lo)
            let i1 = base | sl; // |01⟩
            let i2 = base | sh; // |10⟩
            let i3 = base | sh | sl; // |11⟩
            let a0 = self.amps[i0];
            let a1 = self.amps[i1];
            let a2 = self.amps[i2];
            let a3 = self.amps[i3];
            self.amps[i0] = m[0] * a0 + m[1] * a1 + m[2] * a2 + m[3] * a3;
            self.amps[i1] = m[4] * a0 + m[5] * a1 + m[6] * a2 + m[7] * a3;
            self.amps[i2] = m[8] * a0 + m[9] * a1 + m[10] * a2 + m[11] * a3;
            self.amps[i3] = m[12] * a0 + m[13] * a1 + m[14] * a2 + m[15] * a3;
        }
    }

    fn apply_gate_general(&mut self, gate: &DenseGate, qubits: &[usize]) {
        let k = qubits.len();
        let dim_k = 1usize << k;
        // Offset of each local basis state within a block: local bit
        // (k−1−j) ↔ qubit qubits[j] ↔ index bit (n−1−qubits[j]).
        let mut offsets = vec![0usize; dim_k];
        for (g, off) in offsets.iter_mut().enumerate() {
            for (j, &q) in qubits.iter().enumerate() {
                if g >> (k - 1 - j) & 1 == 1 {
                    *off |= 1 << (self.n - 1 - q);
                }
            }
        }
        // Insertion points for expanding a compressed counter into a base
        // index with zeros at all target bit positions, ascending.
        let mut positions: Vec<usize> = qubits.iter().map(|&q| self.n - 1 - q).collect();
        positions.sort_unstable();
        let m = gate.elements();
        let mut scratch = vec![ZERO; dim_k];
        for c in 0..self.amps.len() >> k {
            let mut base = c;
            for &b in &positions {
                let mask = (1usize << b) - 1;
                base = ((base & !mask) << 1) | (base & mask);
            }
            for (g, s) in scratch.iter_mut().enumerate() {
                *s = self.amps[base | offsets[g]];
            }
            for g in 0..dim_k {
                let row = &m[g * dim_k..(g + 1) * dim_k];
                let mut acc = ZERO;
                for h in 0..dim_k {
                    acc += row[h] * scratch[h];
                }
                self.amps[base | offsets[g]] = acc;
            }
        }
    }

    /// Marginal probability distribution of measuring the listed qubits in
    /// the computational basis. The first listed qubit is the most
    /// significant bit of the outcome index.
    pub fn readout_distribution(&self, qubits: &[usize]) -> Vec<f64> {
        let m = qubits.len();
        assert!(m <= 20, "readout register too large");
        let positions: Vec<usize> = qubits.iter().map(|&q| self.n - 1 - q).collect();
        let mut probs = vec![0.0f64; 1 << m];
        for (s, a) in self.amps.iter().enumerate() {
            let mut o = 0usize;
            for (j, &b) in positions.iter().enumerate() {
                o |= (s >> b & 1) << (m - 1 - j);
            }
            probs[o] += a.norm_sqr();
        }
        probs
    }
}

/// A dense `k`-qubit operator in row-major order (not necessarily unitary;
/// projectors are applied through the same kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGate {
    k: usize,
    m: Vec<Complex64>,
}

impl DenseGate {
    pub fn new(k: usize, m: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << k;
        if m.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{}-qubit gate needs {} entries, got {}",
                k,
                dim * dim,
                m.len()
            )));
        }
        Ok(DenseGate { k, m })
    }

    pub fn num_qubits(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    pub fn elements(&self) -> &[Complex64] {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row * self.dim() + col]
    }

    pub fn identity(k: usize) -> Self {
        let dim = 1usize << k;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = ONE;
        }
        DenseGate { k, m }
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DenseGate {
            k: 1,
            m: vec![
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
            ],
        }
    }

    /// Controlled-Z (symmetric in its two qubits).
    pub fn cz() -> Self {
        let mut m = vec![ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[10] = ONE;
        m[15] = -ONE;
        DenseGate { k: 2, m }
    }

    /// SWAP of two qubits.
    pub fn swap() -> Self {
        let mut m = vec![ZERO; 16];
        m[0] = ONE;
        m[6] = ONE;
        m[9] = ONE;
        m[15] = ONE;
        DenseGate { k: 2, m }
    }

    /// Adjoint (conjugate transpose).
    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut m = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                m[c * dim + r] = self.m[r * dim + c].conj();
            }
        }
        DenseGate { k: self.k, m }
    }

    /// View as an `nalgebra` matrix (for exponentials, SVDs, ...).
    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<Complex64> {
        let dim = self.dim();
        nalgebra::DMatrix::from_fn(dim, dim, |r, c| self.m[r * dim + c])
    }

    /// Build from an `nalgebra` matrix whose size is a power of two.
    pub fn from_dmatrix(m: &nalgebra::DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Dimension(format!(
                "{}×{} matrix is not a gate on whole qubits",
                m.nrows(),
                m.ncols()
            )));
        }
        let k = dim.trailing_zeros() as usize;
        let mut v = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                v.push(m[(r, c)]);
            }
        }
        DenseGate::new(k, v)
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &DenseGate) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::Dimension("gate product arity mismatch".into()));
        }
        let dim = self.dim();
        let mut m = vec![ZERO; dim * dim];
        for r in 0..dim {
            for t in 0..dim {
                let a = self.m[r * dim + t];
                if a == ZERO {
                    continue;
                }
                for c in 0..dim {
                    m[r * dim + c] += a * other.m[t * dim + c];
                }
            }
        }
        Ok(DenseGate { k: self.k, m })
    }
}

/// Dense matrix of a Pauli string on the given support qubits (which must
/// contain every non-identity letter). `support[0]` is the most significant
/// bit of the local index, matching [`StateVector::apply_gate`].
pub fn pauli_matrix(p: &PauliString, support: &[usize]) -> Result<DenseGate> {
    let r = p.restrict_to(support)?;
    let k = support.len();
    let dim = 1usize << k;
    let mut m = vec![ZERO; dim * dim];
    for col in 0..dim {
        // Local index bits → local qubit values (local qubit j at bit k−1−j).
        let b = (col as u64).reverse_bits() >> (64 - k as u32);
        let (b_out, coeff) = r.basis_action(b);
        let row = qubit_mask_to_index_mask(k, b_out) as usize;
        m[row * dim + col] = coeff;
    }
    DenseGate::new(k, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliOp;
    use crate::test_util::{assert_close, random_state};
    use num_complex::Complex64;

    #[test]
    fn basis_state_puts_qubit0_at_msb() {
        // |100⟩ (qubit 0 set) must sit at memory index 0b100 = 4.
        let s = StateVector::basis_state(3, 0b001);
        assert_eq!(s.amplitudes()[4], ONE);
        assert_eq!(s.amp(0b001), ONE);
        // |001⟩ (qubit 2 set) sits at memory index 1.
        let s = StateVector::basis_state(3, 0b100);
        assert_eq!(s.amplitudes()[1], ONE);
    }

    #[test]
    fn hadamard_on_first_qubit() {
        let mut s = StateVector::zero_state(2);
        s.apply_gate(&DenseGate::hadamard(), &[0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(s.amp(0b00), Complex64::new(r, 0.0), 1e-15);
        assert_close(s.amp(0b01), Complex64::new(r, 0.0), 1e-15);
        assert_close(s.amp(0b10), Complex64::new(0.0, 0.0), 1e-15);
    }

    #[test]
    fn gate_order_convention_matches_matrix() {
        // CNOT with control = first listed qubit, written as a plain matrix.
        let cnot = DenseGate::new(
            2,
            vec![
                ONE, ZERO, ZERO, ZERO, //
                ZERO, ONE, ZERO, ZERO, //
                ZERO, ZERO, ZERO, ONE, //
                ZERO, ZERO, ONE, ZERO,
            ],
        )
        .unwrap();
        // Control qubit 2, target qubit 0, on |001⟩: flips qubit 0.
        let mut s = StateVector::basis_state(3, 0b100);
        s.apply_gate(&cnot, &[2, 0]);
        assert_close(s.amp(0b101), ONE, 1e-15);
        // Control qubit 0 (unset) leaves the state alone.
        let mut s = StateVector::basis_state(3, 0b100);
        s.apply_gate(&cnot, &[0, 2]);
        assert_close(s.amp(0b100), ONE, 1e-15);
    }

    #[test]
    fn pauli_apply_matches_gate_apply() {
        let p = PauliString::from_ops(5, &[(1, PauliOp::Y), (3, PauliOp::Z)])
            .unwrap()
            .times_i();
        let s0 = random_state(5, 11);

        let mut via_pauli = s0.clone();
        via_pauli.apply_pauli(&p);

        let mut via_gate = s0.clone();
        let g = pauli_matrix(&p, &[1, 3]).unwrap();
        via_gate.apply_gate(&g, &[1, 3]);

        for (a, b) in via_pauli.amplitudes().iter().zip(via_gate.amplitudes()) {
            assert_close(*a, *b, 1e-14);
        }
    }

    #[test]
    fn expectation_matches_explicit_application() {
        let s = random_state(6, 3);
        let p = PauliString::from_letters("XIZYIX").unwrap();
        let direct = s.pauli_expectation(&p);
        let mut ps = s.clone();
        ps.apply_pauli(&p);
        let via_inner = s.inner(&ps);
        assert_close(direct, via_inner, 1e-13);
        // Hermitian string ⇒ real expectation.
        assert!(direct.im.abs() < 1e-13);
    }

    #[test]
    fn general_kernel_agrees_with_two_qubit_kernel() {
        // A 3-qubit gate built as (U ⊗ I) must act like U on the first two
        // targets; compare the k=3 path against the k=2 path.
        let u = crate::test_util::random_unitary(2, 7);
        let mut m = vec![ZERO; 64];
        for r in 0..4 {
            for c in 0..4 {
                m[(2 * r) * 8 + 2 * c] = u.entry(r, c);
                m[(2 * r + 1) * 8 + 2 * c + 1] = u.entry(r, c);
            }
        }
        let u3 = DenseGate::new(3, m).unwrap();

        let s0 = random_state(6, 19);
        let mut a = s0.clone();
        a.apply_gate(&u3, &[4, 1, 3]);
        let mut b = s0.clone();
        b.apply_gate(&u, &[4, 1]);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_close(*x, *y, 1e-13);
        }
    }

    #[test]
    fn unitary_gates_preserve_norm() {
        let mut s = random_state(7, 23);
        let u = crate::test_util::random_unitary(2, 5);
        for pair in [[0, 3], [6, 2], [5, 1]] {
            s.apply_gate(&u, &pair);
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_circuit_satisfies_minus_zxz() {
        // H on every site then CZ on nearest-neighbor bonds, starting from
        // |11…1⟩, prepares the cluster state in the −1 eigenvalue convention:
        // ⟨Z_{i−1} X_i Z_{i+1}⟩ = −1 for every bulk site.
        let n = 8;
        let mut s = StateVector::basis_state(n, (1 << n) - 1);
        let h = DenseGate::hadamard();
        for q in 0..n {
            s.apply_gate(&h, &[q]);
        }
        let cz = DenseGate::cz();
        for q in 0..n - 1 {
            s.apply_gate(&cz, &[q, q + 1]);
        }
        for i in 1..n - 1 {
            let zxz = PauliString::from_ops(
                n,
                &[(i - 1, PauliOp::Z), (i, PauliOp::X), (i + 1, PauliOp::Z)],
            )
            .unwrap();
            let val = s.pauli_expectation(&zxz);
            assert!(
                (val.re + 1.0).abs() < 1e-12 && val.im.abs() < 1e-12,
                "bulk stabilizer at site {i} gave {val}"
            );
        }
    }

    #[test]
    fn readout_distribution_matches_brute_force() {
        let s = random_state(6, 41);
        let qubits = [4usize, 1, 5];
        let probs = s.readout_distribution(&qubits);
        // Oracle: enumerate every basis state, decode qubit values from the
        // memory index, and accumulate.
        let mut oracle = vec![0.0f64; 8];
        for (idx, a) in s.amplitudes().iter().enumerate() {
            let bit = |q: usize| idx >> (6 - 1 - q) & 1;
            let o = (bit(4) << 2) | (bit(1) << 1) | bit(5);
            oracle[o] += a.norm_sqr();
        }
        for (p, q) in probs.iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-14);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn readout_order_swaps_bit_significance() {
        // |q0 q1⟩ = |10⟩: outcome index depends on listing order.
        let s = StateVector::basis_state(2, 0b01);
        let p01 = s.readout_distribution(&[0, 1]);
        let p10 = s.readout_distribution(&[1, 0]);
        assert_eq!(p01[0b10], 1.0);
        assert_eq!(p10[0b01], 1.0);
    }

    #[test]
    fn ghz_expectations() {
        // (|000⟩ + |111⟩)/√2: ⟨Z₀Z₁⟩ = 1, ⟨X₀X₁X₂⟩ = 1, ⟨Z₀⟩ = 0.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; 8];
        amps[0] = Complex64::new(r, 0.0);
        amps[7] = Complex64::new(r, 0.0);
        let s = StateVector::from_amplitudes(3, amps).unwrap();
        let zz = PauliString::from_letters("ZZI").unwrap();
        let xxx = PauliString::from_letters("XXX").unwrap();
        let z = PauliString::from_letters("ZII").unwrap();
        assert_close(s.pauli_expectation(&zz), ONE, 1e-14);
        assert_close(s.pauli_expectation(&xxx), ONE, 1e-14);
        assert_close(s.pauli_expectation(&z), ZERO, 1e-14);
    }
}
