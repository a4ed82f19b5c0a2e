//! Monte-Carlo twirling experiments: numerical evidence that averaging over
//! symmetric local unitaries collapses any observable to its component in
//! the centralizer of the symmetric gate algebra.
//!
//! For the time-reversal pair generator set the centralizer is trivial, so
//! `E_u[u M u†] = (Tr M / N) I`; block-wise, the twirled expectation of any
//! observable loses all dependence on the input state. Haar measure on the
//! generated subgroup is approximated by random words: products of
//! `word_length` independently sampled symmetric gates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::par_map_indexed;
use crate::pauli::PauliString;
use crate::rng::stream;
use crate::state::StateVector;
use crate::symmetry::{
    centralizer_basis, sample_symmetric_gate, GeneratorSet, SymmetryGroup, SymmetrySpec,
};
use crate::{Error, Result};

/// Default word length for the random-walk approximation to Haar measure.
pub const DEFAULT_WORD_LENGTH: usize = 10;

/// One random group element: a product of `word_length` symmetric gates.
fn random_word(
    gens: &GeneratorSet,
    word_length: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << gens.sites;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for _ in 0..word_length {
        let (_, gate) = sample_symmetric_gate(gens, rng)?;
        u = gate.to_dmatrix() * u;
    }
    Ok(u)
}

/// Monte-Carlo estimate of `E_u[u M u†]` over `k` random group elements.
pub fn twirl_average(
    m: &DMatrix<Complex64>,
    gens: &GeneratorSet,
    k: usize,
    word_length: usize,
    seed: u64,
) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << gens.sites;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Dimension(format!(
            "matrix is {}×{} but the generators act on dimension {dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    if k < 100 {
        return Err(Error::Config(format!(
            "need at least 100 Monte-Carlo samples, got {k}"
        )));
    }
    let samples = par_map_indexed(k, |i| -> Result<DMatrix<Complex64>> {
        let mut rng = stream(seed, i as u64);
        let u = random_word(gens, word_length, &mut rng)?;
        Ok(&u * m * u.adjoint())
    });
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for s in samples {
        acc += s?;
    }
    Ok(acc / Complex64::new(k as f64, 0.0))
}

/// Frobenius distance `‖A − B‖_F`.
pub fn frobenius_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// The collapse target of a full twirl: `(Tr M / N) I`.
pub fn twirl_fixed_point(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let tr = m.trace();
    DMatrix::identity(n, n) * (tr / Complex64::new(n as f64, 0.0))
}

/// One point of a Monte-Carlo convergence curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub k: usize,
    /// Frobenius distance to the collapse target, averaged over repetitions.
    pub mean_distance: f64,
    pub distances: Vec<f64>,
}

/// Distance to the collapse target at each sample count in `ks`, repeated
/// `reps` times with independent seeds.
pub fn twirl_convergence(
    m: &DMatrix<Complex64>,
    gens: &GeneratorSet,
    ks: &[usize],
    reps: usize,
    word_length: usize,
    seed: u64,
) -> Result<Vec<ConvergencePoint>> {
    let target = twirl_fixed_point(m);
    let mut out = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut distances = Vec::with_capacity(reps);
        for r in 0..reps {
            let avg = twirl_average(
                m,
                gens,
                k,
                word_length,
                seed ^ ((i as u64) << 32) ^ (r as u64 + 1),
            )?;
            distances.push(frobenius_distance(&avg, &target));
        }
        let mean_distance = distances.iter().sum::<f64>() / reps as f64;
        out.push(ConvergencePoint {
            k,
            mean_distance,
            distances,
        });
    }
    Ok(out)
}

/// Least-squares slope of `log d` against `log k`.
pub fn log_log_slope(points: &[ConvergencePoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.k as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_distance.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Monte-Carlo estimate of `E ⟨ψ| (⊗u_b)† O (⊗u_b) |ψ⟩` with an independent
/// random symmetric unitary on every `gens.sites`-qubit block.
///
/// Returns `(mean, std_error)`; the standard error comes from 10 batch means.
pub fn product_twirl_expectation(
    state: &StateVector,
    observable: &[(f64, PauliString)],
    gens: &GeneratorSet,
    k: usize,
    word_length: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = state.num_qubits();
    if n % gens.sites != 0 {
        return Err(Error::Dimension(format!(
            "{n} qubits do not split into {}-site blocks",
            gens.sites
        )));
    }
    for (_, p) in observable {
        if p.num_qubits() != n {
            return Err(Error::Dimension(
                "observable strings must match the state size".into(),
            ));
        }
    }
    if k < 100 {
        return Err(Error::Config(format!(
            "need at least 100 Monte-Carlo samples, got {k}"
        )));
    }
    let blocks = n / gens.sites;
    let values = par_map_indexed(k, |i| -> Result<f64> {
        let mut rng = stream(seed, i as u64);
        let mut psi = state.clone();
        for b in 0..blocks {
            let (_, gate) = sample_symmetric_gate(gens, &mut rng)?;
            let word = if word_length > 1 {
                let mut u = gate;
                for _ in 1..word_length {
                    let (_, g) = sample_symmetric_gate(gens, &mut rng)?;
                    u = g.matmul(&u)?;
                }
                u
            } else {
                gate
            };
            let targets: Vec<usize> = (b * gens.sites..(b + 1) * gens.sites).collect();
            psi.apply_gate(&word, &targets);
        }
        Ok(observable
            .iter()
            .map(|(c, p)| c * psi.pauli_expectation(p).re)
            .sum())
    });
    let mut vals = Vec::with_capacity(k);
    for v in values {
        vals.push(v?);
    }
    let mean = vals.iter().sum::<f64>() / k as f64;
    let batches = 10usize;
    let b = k / batches;
    let means: Vec<f64> = (0..batches)
        .map(|i| vals[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>()
        / (batches as f64 - 1.0);
    Ok((mean, (var / batches as f64).sqrt()))
}

/// Result of one centralizer dimension check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    /// Which symmetric-gate algebra was analyzed.
    pub lemma: String,
    pub group: SymmetryGroup,
    pub sites: usize,
    pub expected_dim: usize,
    pub computed_dim: usize,
    /// Pauli labels of the commutant basis.
    pub basis_labels: Vec<String>,
    pub ok: bool,
}

/// Compute the commutant of the symmetric gate algebra for the three
/// symmetry settings and compare against the expected dimensions
/// (1, 2, 4). Returns an error if any dimension disagrees.
pub fn lemma_centralizer_report() -> Result<Vec<LemmaReport>> {
    let cases = [
        ("pair gates, time reversal", SymmetryGroup::TimeReversal, 2, 1),
        ("triple gates, Z2xZ2 with conjugation", SymmetryGroup::Z2xZ2T, 3, 2),
        ("pair gates, unitary Z2xZ2", SymmetryGroup::Z2xZ2, 2, 4),
    ];
    let mut reports = Vec::new();
    let mut all_ok = true;
    for (lemma, group, sites, expected_dim) in cases {
        let basis = centralizer_basis(SymmetrySpec { group, sites })?;
        let computed_dim = basis.len();
        let ok = computed_dim == expected_dim;
        all_ok &= ok;
        reports.push(LemmaReport {
            lemma: lemma.to_string(),
            group,
            sites,
            expected_dim,
            computed_dim,
            basis_labels: basis.iter().map(|p| p.to_string()).collect(),
            ok,
        });
    }
    if !all_ok {
        return Err(Error::Convergence(format!(
            "centralizer dimensions disagree: {:?}",
            reports
                .iter()
                .map(|r| (r.lemma.clone(), r.expected_dim, r.computed_dim))
                .collect::<Vec<_>>()
        )));
    }
    Ok(reports)
}

/// The generator set used by the twirl collapse experiments.
pub fn twirl_generator_set() -> GeneratorSet {
    crate::symmetry::builtin_generators(SymmetryGroup::TimeReversal, 2)
        .expect("built-in pair generators")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_point::{build_fixed_point, FixedPointKind};
    use crate::pauli::PauliOp;

    fn z1_dense() -> DMatrix<Complex64> {
        // Z ⊗ I on two qubits.
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0, 0.0);
        m[(2, 2)] = Complex64::new(-1.0, 0.0);
        m[(3, 3)] = Complex64::new(-1.0, 0.0);
        m
    }

    #[test]
    fn identity_twirls_to_itself_exactly() {
        let gens = twirl_generator_set();
        let id = DMatrix::<Complex64>::identity(4, 4);
        let avg = twirl_average(&id, &gens, 100, 3, 1).unwrap();
        assert!(frobenius_distance(&avg, &id) < 1e-12);
    }

    #[test]
    fn traceless_observable_twirls_toward_zero() {
        let gens = twirl_generator_set();
        let m = z1_dense();
        let avg = twirl_average(&m, &gens, 2000, DEFAULT_WORD_LENGTH, 7).unwrap();
        let zero = DMatrix::<Complex64>::zeros(4, 4);
        let d = frobenius_distance(&avg, &zero);
        assert!(d < 0.2, "distance after 2000 samples: {d}");
        // Untwirled distance is ‖Z⊗I‖_F = 2; the average must be far closer.
        assert!(d < 0.5 * frobenius_distance(&m, &zero));
    }

    #[test]
    fn convergence_distances_shrink_with_sample_count() {
        let gens = twirl_generator_set();
        let m = z1_dense();
        let pts = twirl_convergence(&m, &gens, &[100, 1600], 3, 5, 11).unwrap();
        assert!(
            pts[1].mean_distance < pts[0].mean_distance,
            "{} vs {}",
            pts[0].mean_distance,
            pts[1].mean_distance
        );
        let slope = log_log_slope(&pts);
        assert!(
            (-0.9..=-0.1).contains(&slope),
            "Monte-Carlo error slope {slope}"
        );
    }

    #[test]
    fn centralizer_report_matches_expected_dimensions() {
        let reports = lemma_centralizer_report().unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(reports[0].computed_dim, 1);
        assert_eq!(reports[1].computed_dim, 2);
        assert_eq!(reports[2].computed_dim, 4);
        assert!(reports.iter().all(|r| r.ok));
        assert!(reports[0].basis_labels.contains(&"+II".to_string()));
        assert!(reports[1].basis_labels.contains(&"+XXX".to_string()));
    }

    #[test]
    fn identity_observable_has_unit_expectation_and_zero_error() {
        let gens = twirl_generator_set();
        let state = build_fixed_point(FixedPointKind::TrivialPlus, 4).unwrap();
        let id = PauliString::identity(4);
        let (mean, se) =
            product_twirl_expectation(&state, &[(1.0, id)], &gens, 100, 2, 3).unwrap();
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn single_block_observable_collapses_to_zero() {
        let gens = twirl_generator_set();
        let state = build_fixed_point(FixedPointKind::SbCat, 4).unwrap();
        let zz = PauliString::from_ops(4, &[(0, PauliOp::Z), (1, PauliOp::Z)]).unwrap();
        let (mean, se) =
            product_twirl_expectation(&state, &[(1.0, zz)], &gens, 800, DEFAULT_WORD_LENGTH, 9)
                .unwrap();
        assert!(
            mean.abs() < 4.0 * se.max(0.01),
            "mean {mean} vs standard error {se}"
        );
    }

    #[test]
    fn twirled_expectations_cannot_distinguish_cat_from_cluster() {
        let gens = twirl_generator_set();
        let cat = build_fixed_point(FixedPointKind::SbCat, 8).unwrap();
        let cluster = build_fixed_point(FixedPointKind::SptCluster, 8).unwrap();
        use PauliOp::{X, Y, Z};
        let obs = vec![
            (
                0.7,
                PauliString::from_ops(8, &[(1, Z), (2, Y), (5, X)]).unwrap(),
            ),
            (0.3, PauliString::from_ops(8, &[(3, Z), (4, Z)]).unwrap()),
        ];
        let (m1, s1) =
            product_twirl_expectation(&cat, &obs, &gens, 600, DEFAULT_WORD_LENGTH, 21).unwrap();
        let (m2, s2) =
            product_twirl_expectation(&cluster, &obs, &gens, 600, DEFAULT_WORD_LENGTH, 22)
                .unwrap();
        let tol = 4.0 * (s1 * s1 + s2 * s2).sqrt().max(0.02);
        assert!(m1.abs() < tol, "cat estimate {m1} ± {s1}");
        assert!(m2.abs() < tol, "cluster estimate {m2} ± {s2}");
        assert!((m1 - m2).abs() < tol, "difference {}", m1 - m2);
    }

    #[test]
    fn estimates_are_invariant_under_symmetric_preprocessing() {
        let gens = twirl_generator_set();
        let state = build_fixed_point(FixedPointKind::SptCluster, 4).unwrap();
        let mut pre = state.clone();
        let (_, fixed_gate) = sample_symmetric_gate(&gens, &mut stream(99, 0)).unwrap();
        pre.apply_gate(&fixed_gate, &[0, 1]);
        let zz = PauliString::from_ops(4, &[(1, PauliOp::Z), (2, PauliOp::Z)]).unwrap();
        let obs = [(1.0, zz)];
        let (a, sa) =
            product_twirl_expectation(&state, &obs, &gens, 800, DEFAULT_WORD_LENGTH, 31).unwrap();
        let (b, sb) =
            product_twirl_expectation(&pre, &obs, &gens, 800, DEFAULT_WORD_LENGTH, 32).unwrap();
        let tol = 4.0 * (sa * sa + sb * sb).sqrt().max(0.02);
        assert!((a - b).abs() < tol, "{a}±{sa} vs {b}±{sb}");
    }

    #[test]
    fn small_sample_counts_are_rejected() {
        let gens = twirl_generator_set();
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert!(twirl_average(&id, &gens, 50, 3, 1).is_err());
    }
}
