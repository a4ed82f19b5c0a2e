//! The convolutional classifier circuit.
//!
//! The ansatz is a stack of convolution levels acting on a shrinking set of
//! active qubits. Each level applies `conv_depth` brick-wall sublayers of
//! two-qubit gates to the active qubits (even pairs, odd pairs, even pairs,
//! …), then pools by keeping the second qubit of every even-aligned pair.
//! When two active qubits remain, one fully-connected two-qubit gate acts on
//! them and both are read out; pooling unitaries are absorbed into the
//! convolution gates rather than represented separately.
//!
//! Every gate is the full 15-parameter two-qubit unitary
//! `U(θ) = exp(−(i/2) Σ_{ργ} θ_{ργ} Ô^ρ ⊗ Ô^γ)` over the non-identity Pauli
//! pairs. In the *non-uniform* layout each gate placement owns its own
//! parameters; in the *uniform* layout all placements within one sublayer
//! share a single parameter vector (translation-invariant convolution).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::expm::expm;
use crate::pauli::PauliString;
use crate::state::{pauli_matrix, DenseGate, StateVector};
use crate::{Error, Result};

/// Number of angles per two-qubit gate (all Pauli pairs except identity).
pub const PARAMS_PER_GATE: usize = 15;

/// Angles of one two-qubit gate, ordered by `(ρ, γ)` with
/// `Ô⁰..Ô³ = I, X, Y, Z`, skipping `(0,0)`: IX, IY, IZ, XI, XX, …, ZZ.
pub type TwoQubitParams = [f64; PARAMS_PER_GATE];

/// One parameterized gate slot and where its copies are applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSlot {
    /// Convolution level, 0-based; the fully-connected gate reports the
    /// level after the last convolution.
    pub level: usize,
    /// Sublayer within the level (0-based), 0 for the fully-connected gate.
    pub sublayer: usize,
    /// Window-relative qubit pairs this slot's gate is applied to, in order.
    pub placements: Vec<[usize; 2]>,
}

/// The full circuit layout for a given read-window size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcnnArchitecture {
    /// Read-window width `N` (a power of two, ≥ 4).
    pub window: usize,
    /// Whether sublayers share parameters across placements.
    pub uniform: bool,
    /// Convolution sublayers per level.
    pub conv_depth: usize,
    /// Gate slots in application order; the last slot is the
    /// fully-connected gate.
    pub slots: Vec<GateSlot>,
    /// Window-relative readout qubits (first is the most significant
    /// outcome bit).
    pub readout: [usize; 2],
}

/// Lay out the circuit for a window of `window` qubits.
pub fn build_architecture(window: usize, uniform: bool, conv_depth: usize) -> Result<QcnnArchitecture> {
    if !window.is_power_of_two() || window < 4 {
        return Err(Error::Config(format!(
            "window must be a power of two ≥ 4, got {window}"
        )));
    }
    if conv_depth == 0 || conv_depth % 2 == 0 {
        return Err(Error::Config(format!(
            "conv_depth must be odd so levels start and end on even pairs, got {conv_depth}"
        )));
    }
    let mut active: Vec<usize> = (0..window).collect();
    let mut slots = Vec::new();
    let mut level = 0;
    while active.len() > 2 {
        for sublayer in 0..conv_depth {
            let offset = sublayer % 2;
            let mut placements = Vec::new();
            let mut j = offset;
            while j + 1 < active.len() {
                placements.push([active[j], active[j + 1]]);
                j += 2;
            }
            if uniform {
                slots.push(GateSlot {
                    level,
                    sublayer,
                    placements,
                });
            } else {
                for p in placements {
                    slots.push(GateSlot {
                        level,
                        sublayer,
                        placements: vec![p],
                    });
                }
            }
        }
        // Pool: keep the second qubit of each even-aligned pair.
        active = active.iter().skip(1).step_by(2).copied().collect();
        level += 1;
    }
    let readout = [active[0], active[1]];
    slots.push(GateSlot {
        level,
        sublayer: 0,
        placements: vec![readout],
    });
    Ok(QcnnArchitecture {
        window,
        uniform,
        conv_depth,
        slots,
        readout,
    })
}

/// Total number of trainable angles.
pub fn param_count(arch: &QcnnArchitecture) -> usize {
    arch.slots.len() * PARAMS_PER_GATE
}

/// Trainable parameters: one angle vector per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcnnParams {
    pub slots: Vec<TwoQubitParams>,
}

impl QcnnParams {
    pub fn zeros(arch: &QcnnArchitecture) -> Self {
        QcnnParams {
            slots: vec![[0.0; PARAMS_PER_GATE]; arch.slots.len()],
        }
    }

    /// I.i.d. normal initialization with standard deviation 0.1.
    pub fn random_init(arch: &QcnnArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        QcnnParams {
            slots: (0..arch.slots.len())
                .map(|_| {
                    let mut t = [0.0; PARAMS_PER_GATE];
                    for v in &mut t {
                        *v = normal.sample(&mut rng);
                    }
                    t
                })
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.slots.iter().flatten().copied().collect()
    }

    pub fn from_flat(arch: &QcnnArchitecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != param_count(arch) {
            return Err(Error::Dimension(format!(
                "{} parameters for an architecture wanting {}",
                flat.len(),
                param_count(arch)
            )));
        }
        Ok(QcnnParams {
            slots: flat
                .chunks_exact(PARAMS_PER_GATE)
                .map(|c| {
                    let mut t = [0.0; PARAMS_PER_GATE];
                    t.copy_from_slice(c);
                    t
                })
                .collect(),
        })
    }
}

/// The 15 two-qubit Pauli-pair matrices in parameter order.
pub fn pauli_pair_basis() -> &'static [DMatrix<Complex64>; PARAMS_PER_GATE] {
    static BASIS: OnceLock<[DMatrix<Complex64>; PARAMS_PER_GATE]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let letters = ['I', 'X', 'Y', 'Z'];
        let mut out: Vec<DMatrix<Complex64>> = Vec::with_capacity(PARAMS_PER_GATE);
        for m in 1..16usize {
            let s: String = [letters[m / 4], letters[m % 4]].iter().collect();
            let p = PauliString::from_letters(&s).expect("valid letters");
            out.push(pauli_matrix(&p, &[0, 1]).expect("full support").to_dmatrix());
        }
        out.try_into().expect("exactly 15 elements")
    })
}

/// The anti-Hermitian generator `A(θ) = −(i/2) Σ_k θ_k P_k`.
pub fn gate_generator(theta: &TwoQubitParams) -> DMatrix<Complex64> {
    let basis = pauli_pair_basis();
    let mut a = DMatrix::<Complex64>::zeros(4, 4);
    for (k, p) in basis.iter().enumerate() {
        if theta[k] != 0.0 {
            a += p * Complex64::new(0.0, -0.5 * theta[k]);
        }
    }
    a
}

/// The two-qubit unitary `U(θ) = exp(A(θ))`.
pub fn gate_matrix(theta: &TwoQubitParams) -> DenseGate {
    DenseGate::from_dmatrix(&expm(&gate_generator(theta))).expect("4×4 exponential")
}

/// Gate application order as `(slot index, absolute qubit pair)`, for a
/// window starting at `window_start` on the host chain.
pub fn gate_sequence(arch: &QcnnArchitecture, window_start: usize) -> Vec<(usize, [usize; 2])> {
    let mut seq = Vec::new();
    for (s, slot) in arch.slots.iter().enumerate() {
        for p in &slot.placements {
            seq.push((s, [p[0] + window_start, p[1] + window_start]));
        }
    }
    seq
}

/// Build the dense unitary for every slot.
pub fn build_gates(params: &QcnnParams) -> Vec<DenseGate> {
    params.slots.iter().map(gate_matrix).collect()
}

/// Run the circuit in place on `state` (which may be larger than the
/// window) and return the readout distribution over the four outcomes.
pub fn apply_and_read(
    arch: &QcnnArchitecture,
    gates: &[DenseGate],
    state: &mut StateVector,
    window_start: usize,
) -> [f64; 4] {
    debug_assert_eq!(gates.len(), arch.slots.len());
    for (slot, pair) in gate_sequence(arch, window_start) {
        state.apply_gate(&gates[slot], &pair);
    }
    let probs = state.readout_distribution(&[
        arch.readout[0] + window_start,
        arch.readout[1] + window_start,
    ]);
    [probs[0], probs[1], probs[2], probs[3]]
}

/// Forward pass on a copy of `state`.
pub fn forward(
    arch: &QcnnArchitecture,
    params: &QcnnParams,
    state: &StateVector,
    window_start: usize,
) -> Result<[f64; 4]> {
    if params.slots.len() != arch.slots.len() {
        return Err(Error::Dimension(format!(
            "{} parameter slots for {} gate slots",
            params.slots.len(),
            arch.slots.len()
        )));
    }
    if window_start + arch.window > state.num_qubits() {
        return Err(Error::Dimension(format!(
            "window [{}, {}) exceeds a {}-qubit state",
            window_start,
            window_start + arch.window,
            state.num_qubits()
        )));
    }
    let gates = build_gates(params);
    let mut work = state.clone();
    Ok(apply_and_read(arch, &gates, &mut work, window_start))
}

/// Argmax over outcome probabilities; ties resolve to the lowest index.
/// Index 3 (`11`) is the "unsuccessful classification" outcome.
pub fn predict(probs: &[f64; 4]) -> usize {
    let mut best = 0usize;
    for j in 1..4 {
        if probs[j] > probs[best] {
            best = j;
        }
    }
    best
}

/// Result of classifying one sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Sample index within its dataset.
    pub index: usize,
    /// True phase label.
    pub label: usize,
    /// Readout distribution over `{00, 01, 10, 11}`.
    pub probs: [f64; 4],
    /// Argmax prediction (3 = unsuccessful).
    pub predicted: usize,
}
