//! Symmetry groups, symmetric gate generators, twirls and centralizers.
//!
//! Every group element is represented as a Pauli-string unitary, optionally
//! composed with the basis-dependent complex conjugation `K` (antiunitary
//! elements). A gate generator `iσ` is *symmetric* when the gate it
//! generates commutes with the representation:
//!
//! - unitary `g`:      `u(g) · iσ = iσ · u(g)`
//! - antiunitary `g`:  `u(g) · (iσ)* = iσ · u(g)`
//!
//! Both conditions are linear over real coefficient vectors, so the full
//! space of symmetric generators is the nullspace of a stacked constraint
//! map. Because Pauli conjugation maps basis strings to basis strings, that
//! nullspace is always spanned by individual Pauli strings; the solver
//! cross-checks the SVD nullity against an exact per-string test and returns
//! the strings themselves.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expm::expm;
use crate::pauli::{PauliOp, PauliString};
use crate::state::{pauli_matrix, DenseGate, StateVector};
use crate::{Error, Result};

/// Singular values below this (relative to the largest) count as zero when
/// extracting constraint nullspaces.
const NULLSPACE_CUTOFF: f64 = 1e-9;

/// The on-site symmetry groups under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryGroup {
    /// `Z₂ᵀ = {1, (∏X)·K}`: global spin flip times complex conjugation.
    TimeReversal,
    /// `Z₂ × Z₂ᵀ = {1, ∏X, K, (∏X)·K}`.
    Z2xZ2T,
    /// `Z₂ × Z₂`: independent spin flips on the even and odd sublattices.
    Z2xZ2,
}

/// A group element in its chain representation.
#[derive(Debug, Clone)]
pub struct GroupElement {
    /// The unitary part, a (possibly identity) Pauli string.
    pub unitary: PauliString,
    /// Whether the element additionally conjugates amplitudes (`K`).
    pub antiunitary: bool,
}

/// A symmetry group together with the number of sites it is represented on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub group: SymmetryGroup,
    pub sites: usize,
}

impl SymmetrySpec {
    pub fn new(group: SymmetryGroup, sites: usize) -> Self {
        SymmetrySpec { group, sites }
    }

    /// All group elements (including the identity) represented on
    /// `self.sites` sites. Site parity for the sublattice flips is the
    /// site's index within this representation.
    pub fn elements(&self) -> Vec<GroupElement> {
        group_elements(self.group, self.sites)
    }
}

/// Group elements represented on an `n`-site chain segment.
pub fn group_elements(group: SymmetryGroup, n: usize) -> Vec<GroupElement> {
    let identity = PauliString::identity(n);
    let all_x = x_on_sites(n, |_| true);
    match group {
        SymmetryGroup::TimeReversal => vec![
            GroupElement {
                unitary: identity,
                antiunitary: false,
            },
            GroupElement {
                unitary: all_x,
                antiunitary: true,
            },
        ],
        SymmetryGroup::Z2xZ2T => vec![
            GroupElement {
                unitary: identity.clone(),
                antiunitary: false,
            },
            GroupElement {
                unitary: all_x.clone(),
                antiunitary: false,
            },
            GroupElement {
                unitary: identity,
                antiunitary: true,
            },
            GroupElement {
                unitary: all_x,
                antiunitary: true,
            },
        ],
        SymmetryGroup::Z2xZ2 => vec![
            GroupElement {
                unitary: identity,
                antiunitary: false,
            },
            GroupElement {
                unitary: x_on_sites(n, |q| q % 2 == 0),
                antiunitary: false,
            },
            GroupElement {
                unitary: x_on_sites(n, |q| q % 2 == 1),
                antiunitary: false,
            },
            GroupElement {
                unitary: x_on_sites(n, |_| true),
                antiunitary: false,
            },
        ],
    }
}

fn x_on_sites(n: usize, pred: impl Fn(usize) -> bool) -> PauliString {
    let ops: Vec<(usize, PauliOp)> = (0..n).filter(|&q| pred(q)).map(|q| (q, PauliOp::X)).collect();
    PauliString::from_ops(n, &ops).expect("X string construction cannot fail")
}

/// `⟨ψ| g |ψ⟩` for a group element; for antiunitary `g` this is
/// `⟨ψ| u(g) K |ψ⟩ = ⟨ψ| u(g) |ψ*⟩`.
pub fn symmetry_overlap(state: &StateVector, elem: &GroupElement) -> Complex64 {
    let mut t = state.clone();
    if elem.antiunitary {
        t.conjugate_in_place();
    }
    t.apply_pauli(&elem.unitary);
    state.inner(&t)
}

/// An ordered set of anti-Hermitian Pauli generators `iσ` on `sites` sites.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub sites: usize,
    pub generators: Vec<PauliString>,
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Coefficients pairing with a [`GeneratorSet`] to define a gate
/// `U = exp(Σ_k θ_k G_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieCoefficients {
    pub theta: Vec<f64>,
}

/// The hand-derived generator sets used in the experiments.
///
/// Available: time reversal on 2 sites (the six-element set), `Z₂ × Z₂ᵀ` on
/// 2 and 3 sites, and `Z₂ × Z₂` on 2 sites. All other combinations go
/// through [`solve_symmetric_generators`], which these tables are checked
/// against in the tests.
pub fn builtin_generators(group: SymmetryGroup, sites: usize) -> Result<GeneratorSet> {
    let strings: Vec<&str> = match (group, sites) {
        (SymmetryGroup::TimeReversal, 2) => vec!["ZI", "IZ", "ZY", "YZ", "ZX", "XZ"],
        (SymmetryGroup::Z2xZ2T, 2) => vec!["ZY", "YZ"],
        (SymmetryGroup::Z2xZ2T, 3) => vec![
            // One Y and one Z with the remaining site I or X.
            "YZI", "YIZ", "IYZ", "ZYI", "ZIY", "IZY", //
            "YZX", "YXZ", "XYZ", "ZYX", "ZXY", "XZY",
        ],
        (SymmetryGroup::Z2xZ2, 2) => vec!["II", "XI", "IX", "XX"],
        _ => {
            return Err(Error::Config(format!(
                "no built-in generator table for {group:?} on {sites} sites"
            )))
        }
    };
    let generators = strings
        .into_iter()
        .map(|s| Ok(PauliString::from_letters(s)?.times_i()))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratorSet { sites, generators })
}

/// Exact symmetry test for a Hermitian Pauli string `σ` (the generator being
/// `iσ`): returns whether `exp(θ·iσ)` commutes with every group element.
fn is_symmetric_string(sigma: &PauliString, elements: &[GroupElement]) -> bool {
    let (x, z) = sigma.masks();
    let y_count = (x & z).count_ones();
    elements.iter().all(|g| {
        let commutes = sigma.commutes_with(&g.unitary);
        if g.antiunitary {
            // u (iσ)* u† = iσ ⇔ u σ u† = −σ* sign-wise:
            // (−1)^{#Y} · (±1 from conjugation by u) must equal −1.
            let conj_sign = if commutes { 1i32 } else { -1 };
            let star_sign = if y_count % 2 == 0 { 1i32 } else { -1 };
            star_sign * conj_sign == -1
        } else {
            commutes
        }
    })
}

/// Enumerate all 4^k Hermitian Pauli strings on `k` sites in a fixed order
/// (site 0 is the lowest base-4 digit; letter order I, X, Y, Z).
fn enumerate_paulis(k: usize) -> Vec<PauliString> {
    let count = 1usize << (2 * k);
    (0..count)
        .map(|m| {
            let ops: Vec<(usize, PauliOp)> = (0..k)
                .map(|q| {
                    let letter = match m >> (2 * q) & 3 {
                        0 => PauliOp::I,
                        1 => PauliOp::X,
                        2 => PauliOp::Y,
                        _ => PauliOp::Z,
                    };
                    (q, letter)
                })
                .collect();
            PauliString::from_ops(k, &ops).expect("valid enumeration")
        })
        .collect()
}

fn pauli_index(p: &PauliString) -> usize {
    let mut m = 0usize;
    for q in 0..p.num_qubits() {
        let code = match p.letter(q) {
            PauliOp::I => 0,
            PauliOp::X => 1,
            PauliOp::Y => 2,
            PauliOp::Z => 3,
        };
        m |= code << (2 * q);
    }
    m
}

/// Solve for all symmetric generators `iσ` on `spec.sites` sites.
///
/// The constraint for real coefficients `c` over the Pauli basis is linear;
/// its matrix is assembled in Pauli coordinates (each column touches exactly
/// one row per group element because Pauli conjugation permutes the basis),
/// and the SVD nullity at cutoff 1e−9 is required to match the number of
/// strings passing the exact sign test.
pub fn solve_symmetric_generators(spec: SymmetrySpec) -> Result<GeneratorSet> {
    let k = spec.sites;
    if k == 0 || k > 4 {
        return Err(Error::Config(format!(
            "symmetric generator solve supports 1..=4 sites, got {k}"
        )));
    }
    let elements = spec.elements();
    let basis = enumerate_paulis(k);
    let dim = basis.len();

    // Constraint map in Pauli coordinates. For generator candidate iσ_m and
    // element g with unitary u:
    //   unitary:      u·(iσ_m) − (iσ_m)·u          = (1 − s) u·(iσ_m)
    //   antiunitary:  u·(iσ_m)* − (iσ_m)·u         = (−(−1)^{Y_m} − s) i·u·σ_m
    // where s = ±1 is the commutation sign of σ_m with u. Both are complex
    // multiples of the single Pauli u·σ_m, giving one complex row per (g, m).
    let nontrivial: Vec<&GroupElement> = elements
        .iter()
        .filter(|g| g.antiunitary || g.unitary.weight() > 0)
        .collect();
    let mut complex_rows = DMatrix::<Complex64>::zeros(nontrivial.len() * dim, dim);
    for (gi, g) in nontrivial.iter().enumerate() {
        for (m, sigma) in basis.iter().enumerate() {
            let s = if sigma.commutes_with(&g.unitary) {
                1.0
            } else {
                -1.0
            };
            let coeff = if g.antiunitary {
                let (x, z) = sigma.masks();
                let star = if (x & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(0.0, -star - s)
            } else {
                Complex64::new(0.0, 1.0 - s)
            };
            if coeff.norm() > 0.0 {
                let prod = g.unitary.mul(sigma)?;
                let row = gi * dim + pauli_index(&prod);
                complex_rows[(row, m)] += coeff * prod.phase();
            }
        }
    }
    // Real coefficients: split each complex row into two real rows.
    let mut real_rows = DMatrix::<f64>::zeros(2 * complex_rows.nrows(), dim);
    for r in 0..complex_rows.nrows() {
        for c in 0..dim {
            real_rows[(2 * r, c)] = complex_rows[(r, c)].re;
            real_rows[(2 * r + 1, c)] = complex_rows[(r, c)].im;
        }
    }
    let svd = real_rows.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > NULLSPACE_CUTOFF * smax.max(1.0))
        .count();
    let nullity = dim - rank;

    let generators: Vec<PauliString> = basis
        .iter()
        .filter(|sigma| is_symmetric_string(sigma, &elements))
        .map(|sigma| sigma.times_i())
        .collect();
    if generators.len() != nullity {
        return Err(Error::Convergence(format!(
            "nullspace dimension {nullity} disagrees with exact count {}",
            generators.len()
        )));
    }
    Ok(GeneratorSet {
        sites: k,
        generators,
    })
}

/// Dense matrix of a group element's unitary part on its full site range.
pub fn element_matrix(elem: &GroupElement) -> DMatrix<Complex64> {
    let n = elem.unitary.num_qubits();
    let support: Vec<usize> = (0..n).collect();
    pauli_matrix(&elem.unitary, &support)
        .expect("full support always contains the string")
        .to_dmatrix()
}

/// Group-average (twirl) of an operator on `spec.sites` sites:
/// `ô ↦ (1/|G|) Σ_g u(g) ô^{(g)} u(g)†`, where `ô^{(g)}` is the entrywise
/// conjugate for antiunitary `g` and `ô` itself otherwise. The result is the
/// projection of `ô` onto the symmetric subspace.
pub fn twirl_operator(spec: SymmetrySpec, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let elements = spec.elements();
    let dim = 1usize << spec.sites;
    assert_eq!(op.nrows(), dim, "operator size must match the site count");
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for g in &elements {
        let u = element_matrix(g);
        let inner = if g.antiunitary { op.map(|x| x.conj()) } else { op.clone() };
        acc += &u * inner * u.adjoint();
    }
    acc / Complex64::new(elements.len() as f64, 0.0)
}

/// Twirl of a Pauli generator `iσ` (as a dense matrix); returns the
/// symmetric projection, which is either `±iσ` itself or zero.
pub fn twirl_generator(spec: SymmetrySpec, gen: &PauliString) -> Result<DMatrix<Complex64>> {
    if gen.num_qubits() != spec.sites {
        return Err(Error::Dimension(format!(
            "generator on {} sites twirled over a {}-site group",
            gen.num_qubits(),
            spec.sites
        )));
    }
    let support: Vec<usize> = (0..spec.sites).collect();
    let dense = pauli_matrix(gen, &support)?.to_dmatrix();
    Ok(twirl_operator(spec, &dense))
}

/// Pauli strings commuting with **every** symmetric generator of the group:
/// the centralizer of the symmetric gate algebra. Returned in canonical
/// enumeration order, identity first.
pub fn centralizer_basis(spec: SymmetrySpec) -> Result<Vec<PauliString>> {
    let gens = solve_symmetric_generators(spec)?;
    let basis = enumerate_paulis(spec.sites);
    Ok(basis
        .into_iter()
        .filter(|tau| gens.generators.iter().all(|g| tau.commutes_with(g)))
        .collect())
}

/// `U = exp(Σ_k θ_k G_k)` for anti-Hermitian Pauli generators `G_k`.
pub fn exp_lie(gens: &GeneratorSet, theta: &[f64]) -> Result<DenseGate> {
    if theta.len() != gens.generators.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} generators",
            theta.len(),
            gens.generators.len()
        )));
    }
    let dim = 1usize << gens.sites;
    let support: Vec<usize> = (0..gens.sites).collect();
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for (g, &t) in gens.generators.iter().zip(theta) {
        if t != 0.0 {
            a += pauli_matrix(g, &support)?.to_dmatrix() * Complex64::new(t, 0.0);
        }
    }
    DenseGate::from_dmatrix(&expm(&a))
}

/// Draw angles uniformly from `(−π, π]` (one per generator) and build the
/// corresponding symmetric gate.
pub fn sample_symmetric_gate(
    gens: &GeneratorSet,
    rng: &mut ChaCha8Rng,
) -> Result<(LieCoefficients, DenseGate)> {
    let theta: Vec<f64> = (0..gens.generators.len())
        .map(|_| {
            let u: f64 = rng.gen::<f64>(); // [0, 1)
            std::f64::consts::PI - 2.0 * std::f64::consts::PI * u
        })
        .collect();
    let gate = exp_lie(gens, &theta)?;
    Ok((LieCoefficients { theta }, gate))
}

/// Residual of the symmetry condition for a dense gate: the largest over
/// group elements of `‖u(g)·U^{(g)} − U·u(g)‖_F`, where `U^{(g)}` is the
/// entrywise conjugate of `U` for antiunitary `g`.
pub fn symmetry_residual(spec: SymmetrySpec, gate: &DenseGate) -> f64 {
    let u = gate.to_dmatrix();
    spec.elements()
        .iter()
        .map(|g| {
            let v = element_matrix(g);
            let lhs = if g.antiunitary {
                &v * u.map(|x| x.conj())
            } else {
                &v * &u
            };
            (lhs - &u * &v).norm()
        })
        .fold(0.0f64, f64::max)
}
