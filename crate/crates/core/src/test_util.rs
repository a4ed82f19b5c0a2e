//! Shared helpers for unit tests: seeded random states, random unitaries,
//! and tolerance assertions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::state::{DenseGate, StateVector};

/// Normalized state with i.i.d. complex Gaussian amplitudes.
pub fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    let mut s = StateVector::from_amplitudes(n, amps).unwrap();
    s.normalize();
    s
}

/// Haar-ish random `k`-qubit unitary from the QR decomposition of a complex
/// Gaussian matrix.
pub fn random_unitary(k: usize, seed: u64) -> DenseGate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1usize << k;
    let g = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let q = qr.q();
    let mut m = Vec::with_capacity(dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            m.push(q[(r, c)]);
        }
    }
    DenseGate::new(k, m).unwrap()
}

pub fn assert_close(got: Complex64, want: Complex64, tol: f64) {
    assert!(
        (got - want).norm() <= tol,
        "expected {want} within {tol}, got {got} (|Δ| = {})",
        (got - want).norm()
    );
}
