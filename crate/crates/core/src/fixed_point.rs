//! Renormalization fixed-point wavefunctions of the three phases.
//!
//! These are the idealized states the classifier is trained on (after
//! symmetric noise is layered on top):
//!
//! - trivial paramagnet: `|+⟩⊗…⊗|+⟩`
//! - symmetry-broken: the cat state `(|0…0⟩ + |1…1⟩)/√2`, or one of its
//!   symmetry-broken product components `|0…0⟩` / `|1…1⟩`
//! - symmetry-protected topological: the cluster state on an open chain, in
//!   the sign convention where every bulk `Z_{i−1} X_i Z_{i+1}` stabilizer
//!   has eigenvalue **−1** (prepared by Hadamards and controlled-Z bonds
//!   acting on `|1…1⟩`).

use serde::{Deserialize, Serialize};

use crate::pauli::{PauliOp, PauliString};
use crate::state::{DenseGate, StateVector};
use crate::{Error, Result};

/// Phase labels used throughout training and evaluation. The readout
/// bitstring maps as `00 → Trivial`, `01 → SymmetryBroken`, `10 → Spt`;
/// `11` means the classifier failed to commit to a phase.
pub const LABEL_TRIVIAL: usize = 0;
pub const LABEL_SB: usize = 1;
pub const LABEL_SPT: usize = 2;
pub const LABEL_FAIL: usize = 3;

pub const LABEL_NAMES: [&str; 4] = ["trivial", "symmetry_broken", "spt", "unsuccessful"];

/// The available fixed-point wavefunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    /// `(|0…0⟩ + |1…1⟩)/√2` — the symmetric cat state of the broken phase.
    SbCat,
    /// `|0…0⟩` — one broken-symmetry product component.
    SbProduct0,
    /// `|1…1⟩` — the other broken-symmetry product component.
    SbProduct1,
    /// `|+…+⟩` — the trivial paramagnet.
    TrivialPlus,
    /// The open-chain cluster state with bulk `⟨ZXZ⟩ = −1`.
    SptCluster,
}

impl FixedPointKind {
    /// The phase this fixed point belongs to.
    pub fn phase_label(self) -> usize {
        match self {
            FixedPointKind::TrivialPlus => LABEL_TRIVIAL,
            FixedPointKind::SbCat | FixedPointKind::SbProduct0 | FixedPointKind::SbProduct1 => {
                LABEL_SB
            }
            FixedPointKind::SptCluster => LABEL_SPT,
        }
    }
}

/// Build the named fixed point on `n` sites (open chain).
pub fn build_fixed_point(kind: FixedPointKind, n: usize) -> Result<StateVector> {
    if n < 3 {
        return Err(Error::Config(format!(
            "fixed points need at least 3 sites, got {n}"
        )));
    }
    let state = match kind {
        FixedPointKind::SbProduct0 => StateVector::zero_state(n),
        FixedPointKind::SbProduct1 => StateVector::basis_state(n, (1u64 << n) - 1),
        FixedPointKind::SbCat => {
            let mut s = StateVector::zero_state(n);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let amps = s.amplitudes_mut();
            let last = amps.len() - 1;
            amps[0] = num_complex::Complex64::new(r, 0.0);
            amps[last] = num_complex::Complex64::new(r, 0.0);
            s
        }
        FixedPointKind::TrivialPlus => {
            let mut s = StateVector::zero_state(n);
            let h = DenseGate::hadamard();
            for q in 0..n {
                s.apply_gate(&h, &[q]);
            }
            s
        }
        FixedPointKind::SptCluster => {
            let mut s = StateVector::basis_state(n, (1u64 << n) - 1);
            let h = DenseGate::hadamard();
            for q in 0..n {
                s.apply_gate(&h, &[q]);
            }
            let cz = DenseGate::cz();
            for q in 0..n - 1 {
                s.apply_gate(&cz, &[q, q + 1]);
            }
            s
        }
    };
    Ok(state)
}

/// Check the defining stabilizer expectations of a fixed point; returns the
/// largest absolute deviation from the ideal value.
pub fn verify_stabilizers(kind: FixedPointKind, state: &StateVector) -> Result<f64> {
    let n = state.num_qubits();
    let mut worst = 0.0f64;
    let mut check = |p: PauliString, want: f64| {
        let v = state.pauli_expectation(&p);
        let dev = (v.re - want).abs().max(v.im.abs());
        if dev > worst {
            worst = dev;
        }
    };
    match kind {
        FixedPointKind::SbProduct0 | FixedPointKind::SbProduct1 => {
            let want = if kind == FixedPointKind::SbProduct0 {
                1.0
            } else {
                -1.0
            };
            for i in 0..n {
                check(PauliString::from_ops(n, &[(i, PauliOp::Z)])?, want);
            }
        }
        FixedPointKind::SbCat => {
            for i in 0..n - 1 {
                check(
                    PauliString::from_ops(n, &[(i, PauliOp::Z), (i + 1, PauliOp::Z)])?,
                    1.0,
                );
            }
            let all_x: Vec<(usize, PauliOp)> = (0..n).map(|q| (q, PauliOp::X)).collect();
            check(PauliString::from_ops(n, &all_x)?, 1.0);
        }
        FixedPointKind::TrivialPlus => {
            for i in 0..n {
                check(PauliString::from_ops(n, &[(i, PauliOp::X)])?, 1.0);
            }
        }
        FixedPointKind::SptCluster => {
            // Bulk stabilizers only; the chain ends are boundary terms.
            for i in 1..n - 1 {
                check(
                    PauliString::from_ops(
                        n,
                        &[(i - 1, PauliOp::Z), (i, PauliOp::X), (i + 1, PauliOp::Z)],
                    )?,
                    -1.0,
                );
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{group_elements, symmetry_overlap, SymmetryGroup};

    const ALL_KINDS: [FixedPointKind; 5] = [
        FixedPointKind::SbCat,
        FixedPointKind::SbProduct0,
        FixedPointKind::SbProduct1,
        FixedPointKind::TrivialPlus,
        FixedPointKind::SptCluster,
    ];

    #[test]
    fn stabilizers_hold_on_eight_sites() {
        for kind in ALL_KINDS {
            let s = build_fixed_point(kind, 8).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
            let dev = verify_stabilizers(kind, &s).unwrap();
            assert!(dev < 1e-12, "{kind:?}: deviation {dev}");
        }
    }

    #[test]
    fn time_reversal_overlaps() {
        let t = &group_elements(SymmetryGroup::TimeReversal, 8)[1];
        let cat = build_fixed_point(FixedPointKind::SbCat, 8).unwrap();
        let plus = build_fixed_point(FixedPointKind::TrivialPlus, 8).unwrap();
        assert!((symmetry_overlap(&cat, t).norm() - 1.0).abs() < 1e-12);
        assert!((symmetry_overlap(&plus, t).norm() - 1.0).abs() < 1e-12);

        // The broken product states are swapped by the spin flip.
        let p0 = build_fixed_point(FixedPointKind::SbProduct0, 8).unwrap();
        assert!(symmetry_overlap(&p0, t).norm() < 1e-12);

        // The open-chain cluster state flips the sign of its two boundary
        // stabilizers under ∏X, landing in an orthogonal stabilizer sector;
        // the global overlap vanishes even though the bulk is symmetric.
        let cluster = build_fixed_point(FixedPointKind::SptCluster, 8).unwrap();
        assert!(symmetry_overlap(&cluster, t).norm() < 1e-12);
    }

    #[test]
    fn cluster_bulk_is_time_reversal_symmetric() {
        // Bulk stabilizer expectations are invariant under T = (∏X)·K, in
        // contrast to the global overlap: conjugating a bulk ZXZ by T leaves
        // it unchanged, and all bulk expectations stay −1.
        let n = 8;
        let mut s = build_fixed_point(FixedPointKind::SptCluster, n).unwrap();
        // Apply T explicitly: conjugate, then flip every spin.
        s.conjugate_in_place();
        let flip = PauliString::from_ops(
            n,
            &(0..n).map(|q| (q, PauliOp::X)).collect::<Vec<_>>(),
        )
        .unwrap();
        s.apply_pauli(&flip);
        let dev = verify_stabilizers(FixedPointKind::SptCluster, &s).unwrap();
        assert!(dev < 1e-12, "bulk deviation after T: {dev}");
    }

    #[test]
    fn phase_labels() {
        assert_eq!(FixedPointKind::TrivialPlus.phase_label(), LABEL_TRIVIAL);
        assert_eq!(FixedPointKind::SbCat.phase_label(), LABEL_SB);
        assert_eq!(FixedPointKind::SbProduct1.phase_label(), LABEL_SB);
        assert_eq!(FixedPointKind::SptCluster.phase_label(), LABEL_SPT);
    }

    #[test]
    fn cat_equals_superposition_of_products() {
        let cat = build_fixed_point(FixedPointKind::SbCat, 5).unwrap();
        let p0 = build_fixed_point(FixedPointKind::SbProduct0, 5).unwrap();
        let p1 = build_fixed_point(FixedPointKind::SbProduct1, 5).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cat.inner(&p0).re - r).abs() < 1e-12);
        assert!((cat.inner(&p1).re - r).abs() < 1e-12);
    }
}
