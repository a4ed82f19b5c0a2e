//! Matrix exponentials and directional derivatives for small dense matrices.
//!
//! Gate generators here are at most 8×8 (a two-qubit generator, or its
//! doubled block form for derivatives), so a single Padé-13 approximant with
//! scaling and squaring covers every case comfortably at double precision.
//! The directional (Fréchet) derivative is computed from the block identity
//!
//! ```text
//! exp([[A, E], [0, A]]) = [[exp(A), L(A,E)], [0, exp(A)]]
//! ```
//!
//! which needs no eigendecomposition and is exact to the accuracy of the
//! exponential itself.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Padé-13 numerator coefficients (denominator uses alternating signs).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the order-13 approximant meets double precision
/// without scaling.
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for c in 0..a.ncols() {
        let s: f64 = a.column(c).iter().map(|x| x.norm()).sum();
        if s > best {
            best = s;
        }
    }
    best
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.nrows(), a.ncols(), "expm requires a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a / Complex64::new((2.0f64).powi(s as i32), 0.0);

    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let b = |i: usize| Complex64::new(PADE13[i], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator must be invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `exp(A)` together with the directional derivative `L(A, E)`, i.e.
/// `d/dt exp(A + tE) |_{t=0}`, via the doubled block matrix.
pub fn expm_frechet(
    a: &DMatrix<Complex64>,
    e: &DMatrix<Complex64>,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(e.nrows(), n);
    assert_eq!(e.ncols(), n);
    let zero = Complex64::new(0.0, 0.0);
    let mut block = DMatrix::<Complex64>::from_element(2 * n, 2 * n, zero);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(e);
    block.view_mut((n, n), (n, n)).copy_from(a);
    let big = expm(&block);
    let exp_a = big.view((0, 0), (n, n)).into_owned();
    let deriv = big.view((0, n), (n, n)).into_owned();
    (exp_a, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, scale: f64, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
    }

    fn anti_hermitian(n: usize, scale: f64, seed: u64) -> DMatrix<Complex64> {
        let g = random_matrix(n, scale, seed);
        (&g - &g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Independent oracle: scale until the norm is tiny, run a plain Taylor
    /// series, then square back up.
    fn expm_taylor(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = a.nrows();
        let norm = one_norm(a);
        let s = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let a = a / Complex64::new((2.0f64).powi(s as i32), 0.0);
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..=30 {
            term = (&term * &a) / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        let mut r = sum;
        for _ in 0..s {
            r = &r * &r;
        }
        r
    }

    fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        ((a - b).norm()) / b.norm().max(1e-300)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::<Complex64>::zeros(5, 5);
        assert!(rel_err(&expm(&z), &DMatrix::identity(5, 5)) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.3, -1.2),
            Complex64::new(-2.0, 0.7),
            Complex64::new(4.1, 3.3),
        ]));
        let e = expm(&d);
        for i in 0..3 {
            let want = d[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() < 1e-13 * want.norm());
        }
    }

    #[test]
    fn matches_taylor_oracle_for_generic_matrices() {
        for (seed, scale) in [(1u64, 0.2), (2, 1.0), (3, 4.0)] {
            let a = random_matrix(6, scale, seed);
            let got = expm(&a);
            let want = expm_taylor(&a);
            assert!(
                rel_err(&got, &want) < 1e-12,
                "seed {seed} scale {scale}: rel err {}",
                rel_err(&got, &want)
            );
        }
    }

    #[test]
    fn matches_taylor_oracle_for_large_generators() {
        // Anti-Hermitian generators with norms up to the scale of a full
        // 15-angle two-qubit gate (≲ 15π).
        for (seed, scale) in [(4u64, 5.0), (5, 12.0)] {
            let a = anti_hermitian(4, scale, seed);
            let got = expm(&a);
            let want = expm_taylor(&a);
            assert!(rel_err(&got, &want) < 1e-12);
        }
    }

    #[test]
    fn pauli_generator_has_closed_form() {
        // exp(iα P) = cos(α) I + i sin(α) P for any Pauli string P.
        let p = crate::state::pauli_matrix(
            &crate::pauli::PauliString::from_letters("XZ").unwrap(),
            &[0, 1],
        )
        .unwrap();
        let pm = DMatrix::from_fn(4, 4, |r, c| p.entry(r, c));
        let alpha = 0.83;
        let gen = &pm * Complex64::new(0.0, alpha);
        let got = expm(&gen);
        let want = DMatrix::<Complex64>::identity(4, 4) * Complex64::new(alpha.cos(), 0.0)
            + &pm * Complex64::new(0.0, alpha.sin());
        assert!(rel_err(&got, &want) < 1e-14);
    }

    #[test]
    fn anti_hermitian_generator_gives_unitary() {
        let a = anti_hermitian(4, 3.0, 9);
        let u = expm(&a);
        let err = (&u * u.adjoint() - DMatrix::<Complex64>::identity(4, 4)).norm();
        assert!(err < 1e-12, "unitarity defect {err}");
    }

    #[test]
    fn frechet_matches_central_difference() {
        let a = anti_hermitian(4, 1.5, 11);
        let e = anti_hermitian(4, 1.0, 12);
        let (_, l) = expm_frechet(&a, &e);
        let h = 1e-5;
        let hp = expm(&(&a + &e * Complex64::new(h, 0.0)));
        let hm = expm(&(&a - &e * Complex64::new(h, 0.0)));
        let fd = (hp - hm) / Complex64::new(2.0 * h, 0.0);
        assert!(rel_err(&l, &fd) < 1e-8);
    }

    #[test]
    fn frechet_along_commuting_direction() {
        // When [A, E] = 0 the derivative is exactly E·exp(A); take E = A.
        let a = anti_hermitian(4, 2.0, 13);
        let (ea, l) = expm_frechet(&a, &a);
        let want = &a * &ea;
        assert!(rel_err(&l, &want) < 1e-12);
        // And the repeated block also reproduces exp(A) itself.
        assert!(rel_err(&ea, &expm(&a)) < 1e-13);
    }
}
