//! Conventional order parameters used to cross-check learned classifiers:
//! the SPT string order, a two-copy translation-invariant invariant built
//! from singlet-projector and SWAP factors, and the symmetry-breaking
//! two-point correlator — plus the noisy-string histogram experiment.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::par_map_indexed;
use crate::fixed_point::{build_fixed_point, FixedPointKind};
use crate::pauli::{PauliOp, PauliString};
use crate::rng::stream;
use crate::state::{DenseGate, StateVector};
use crate::symmetry::{builtin_generators, sample_symmetric_gate, GeneratorSet, SymmetryGroup};
use crate::{Error, Result};

/// `⟨Z_i Y_{i+1} X_{i+2} ⋯ X_{j−2} Y_{j−1} Z_j⟩`.
///
/// This string is the product of the consecutive bulk cluster stabilizers
/// on sites `i+1 ..= j−1`, so it evaluates to ±1 on cluster-like states and
/// decays (or vanishes) away from the SPT fixed point.
pub fn string_order(state: &StateVector, i: usize, j: usize) -> Result<f64> {
    let n = state.num_qubits();
    if j >= n || i + 3 > j {
        return Err(Error::Dimension(format!(
            "string endpoints ({i}, {j}) invalid for {n} qubits"
        )));
    }
    let mut ops = vec![(i, PauliOp::Z), (i + 1, PauliOp::Y)];
    for q in i + 2..=j - 2 {
        ops.push((q, PauliOp::X));
    }
    ops.push((j - 1, PauliOp::Y));
    ops.push((j, PauliOp::Z));
    let p = PauliString::from_ops(n, &ops)?;
    Ok(state.pauli_expectation(&p).re)
}

/// Summary statistics of a noisy string-order histogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StringHistogram {
    /// String-order value per sample, in [−1, 1].
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population variance of the samples.
    pub variance: f64,
    /// Standard error of the mean, estimated from 10 batch means.
    pub std_error: f64,
}

/// Measure the length-8 bulk string order on a cluster state subjected to
/// `l_noise` layers of symmetric two-qubit noise in which every gate within
/// a layer is sampled independently (breaking translation invariance).
///
/// The chain is padded exactly like the training data (`8 + 2(l_noise+1)`
/// sites, string in the middle) so the string never touches noisy edges.
pub fn noisy_string_histogram(
    n_samples: usize,
    l_noise: usize,
    gens: &GeneratorSet,
    seed: u64,
) -> Result<StringHistogram> {
    if n_samples < 100 {
        return Err(Error::Config(format!(
            "need at least 100 samples for stable statistics, got {n_samples}"
        )));
    }
    let window = 8usize;
    let n = window + 2 * (l_noise + 1);
    let start = l_noise + 1;
    let clean = build_fixed_point(FixedPointKind::SptCluster, n)?;
    let support = gens.sites;
    if support < 2 || support > window {
        return Err(Error::Config(format!(
            "generator support {support} unusable for two-qubit noise layers"
        )));
    }

    let values_r = par_map_indexed(n_samples, |idx| -> Result<f64> {
        let mut rng = stream(seed, idx as u64);
        let mut psi = clean.clone();
        apply_independent_noise(&mut psi, l_noise, gens, &mut rng)?;
        string_order(&psi, start, start + window - 1)
    });
    let mut values = Vec::with_capacity(n_samples);
    for v in values_r {
        values.push(v?);
    }

    let mean = values.iter().sum::<f64>() / n_samples as f64;
    let variance =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_samples as f64;
    let std_error = batch_mean_std_error(&values, 10);
    Ok(StringHistogram {
        values,
        mean,
        variance,
        std_error,
    })
}

/// Brick-wall noise layers with an independent gate at every placement.
fn apply_independent_noise(
    state: &mut StateVector,
    layers: usize,
    gens: &GeneratorSet,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = state.num_qubits();
    for layer in 0..layers {
        let mut q = layer % 2;
        while q + gens.sites <= n {
            let (_, gate) = sample_symmetric_gate(gens, rng)?;
            let targets: Vec<usize> = (q..q + gens.sites).collect();
            state.apply_gate(&gate, &targets);
            q += 2;
        }
    }
    Ok(())
}

/// Standard error of the mean from `k` batch means.
fn batch_mean_std_error(values: &[f64], k: usize) -> f64 {
    let b = values.len() / k;
    let means: Vec<f64> = (0..k)
        .map(|i| values[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (k as f64 - 1.0);
    (var / k as f64).sqrt()
}

/// Two adjacent equal blocks `A = [start, start + L/2)`,
/// `B = [start + L/2, start + L)` hosting the two-copy invariant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionPair {
    pub start: usize,
    pub len: usize,
}

impl RegionPair {
    pub fn new(start: usize, len: usize) -> Result<Self> {
        if len % 4 != 0 || len == 0 {
            return Err(Error::Config(format!(
                "region length must be a positive multiple of 4, got {len}"
            )));
        }
        Ok(RegionPair { start, len })
    }
}

/// Symmetric rank-one pair coupler `|s⁺⟩⟨s⁺|` with
/// `|s⁺⟩ = (|01⟩ + |10⟩)/√2`.
fn r_gate() -> DenseGate {
    let h = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    DenseGate::new(2, vec![z, z, z, z, z, h, h, z, z, h, h, z, z, z, z, z]).expect("4×4")
}

/// Two-copy invariant for translation-invariant time-reversal systems.
///
/// Each site `A[k]` pairs with the corresponding site `B[k]` (its image
/// under translation by `L/2`). Across the first halves of the blocks the
/// pairs are coupled by the projector `R = |s⁺⟩⟨s⁺|`; across the second
/// halves, by SWAP. All factors act on disjoint pairs and have unit
/// operator norm, so ‖Ô‖ = 1 by construction.
///
/// Scaled by `2^{L/4}`, the expectation is +1 on trivial product states,
/// −1/8 on cluster-like SPT states, and 0 in symmetry-broken phases
/// (for `L` well beyond the correlation length).
pub fn ti_order_parameter(state: &StateVector, regions: RegionPair) -> Result<f64> {
    let n = state.num_qubits();
    let l = regions.len;
    if regions.start + l > n {
        return Err(Error::Dimension(format!(
            "regions [{}, {}) exceed {n} qubits",
            regions.start,
            regions.start + l
        )));
    }
    let r = r_gate();
    let swap = DenseGate::swap();
    let mut phi = state.clone();
    let half = l / 2;
    for k in 0..half {
        let qa = regions.start + k;
        let qb = regions.start + half + k;
        let gate = if k < l / 4 { &r } else { &swap };
        phi.apply_gate(gate, &[qa, qb]);
    }
    Ok(state.inner(&phi).re)
}

/// `⟨Z_i Z_{i+distance}⟩`, optionally with the antiferromagnetic staggering
/// `(−1)^distance` (use `staggered` for bond-alternating models, plain sign
/// for ferromagnetic orderings).
pub fn sb_correlator(
    state: &StateVector,
    i: usize,
    distance: usize,
    staggered: bool,
) -> Result<f64> {
    let n = state.num_qubits();
    if distance == 0 || i + distance >= n {
        return Err(Error::Dimension(format!(
            "correlator sites ({i}, {}) invalid for {n} qubits",
            i + distance
        )));
    }
    let p = PauliString::from_ops(n, &[(i, PauliOp::Z), (i + distance, PauliOp::Z)])?;
    let v = state.pauli_expectation(&p).re;
    Ok(if staggered && distance % 2 == 1 { -v } else { v })
}

/// Convenience: the generator set used by the histogram experiment.
pub fn histogram_generator_set() -> GeneratorSet {
    builtin_generators(SymmetryGroup::Z2xZ2T, 2).expect("built-in pair generators")
}
