//! Synthetic training data: fixed points dressed with translation-invariant
//! symmetric noise.
//!
//! A sample is produced on a **padded** open chain so that every qubit the
//! classifier reads sees the same local environment as an infinite chain:
//! with `L` noise layers the light cone grows by at most `L` sites, and the
//! chain adds `L + 1` sites of padding on each side of the read window.
//!
//! Each noise layer draws **one** symmetric gate (angles uniform in
//! `(−π, π]` over the layer's generator set) and repeats it across the chain
//! in a brick-wall pattern: layer `ℓ` places the gate at starting sites
//! `(ℓ + first_layer_offset) mod 2, +2, +4, …`, skipping incomplete
//! placements at the boundary.
//!
//! Datasets are never materialized or serialized: the dataset *is* its
//! descriptor, and sample `i` is regenerated on demand from the stream
//! `(seed, i)`, independent of evaluation order and thread count.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fixed_point::{build_fixed_point, FixedPointKind};
use crate::rng::stream;
use crate::state::StateVector;
use crate::symmetry::{builtin_generators, sample_symmetric_gate, GeneratorSet, SymmetryGroup};
use crate::{Error, Result};

/// Which fixed points represent the three phases in the data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Trivial → `|+…+⟩`, broken → cat state, SPT → cluster state.
    #[default]
    SymmetricCat,
    /// As above but the broken phase uses the product state `|0…0⟩`,
    /// representing data drawn deep in one symmetry-broken branch.
    AsymmetricProduct,
}

impl LabelSource {
    /// Fixed point backing the given phase label.
    pub fn fixed_point(self, label: usize) -> FixedPointKind {
        match (self, label) {
            (_, 0) => FixedPointKind::TrivialPlus,
            (LabelSource::SymmetricCat, 1) => FixedPointKind::SbCat,
            (LabelSource::AsymmetricProduct, 1) => FixedPointKind::SbProduct0,
            (_, 2) => FixedPointKind::SptCluster,
            _ => unreachable!("labels are 0..3"),
        }
    }
}

/// Noise model configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Symmetry group every noise gate respects.
    pub group: SymmetryGroup,
    /// Number of brick-wall layers (`L`).
    pub layers: usize,
    /// Sites each noise gate acts on (2, or 3 for the larger
    /// `Z₂ × Z₂ᵀ`-symmetric family).
    #[serde(default = "default_support")]
    pub support: usize,
    /// Parity of the first layer's starting site (0 = even bonds first).
    #[serde(default)]
    pub first_layer_offset: usize,
}

fn default_support() -> usize {
    2
}

impl NoiseConfig {
    pub fn validate(&self, window: usize) -> Result<()> {
        if self.support < 2 || self.support > 3 {
            return Err(Error::Config(format!(
                "noise gates support 2 or 3 sites, got {}",
                self.support
            )));
        }
        if self.first_layer_offset > 1 {
            return Err(Error::Config(
                "first_layer_offset must be 0 or 1".into(),
            ));
        }
        // Beyond window/2 layers the noise can scramble the window outright.
        if 2 * self.layers >= window {
            return Err(Error::Config(format!(
                "{} noise layers exceed the depth budget for a {window}-site window",
                self.layers
            )));
        }
        Ok(())
    }

    fn generator_set(&self) -> Result<GeneratorSet> {
        builtin_generators(self.group, self.support)
    }
}

/// Total chain length for a read window of `window` sites under `layers`
/// noise layers: padding of `layers + 1` sites on each side.
pub fn padded_system_size(window: usize, layers: usize) -> usize {
    window + 2 * (layers + 1)
}

/// Flat JSON object that stands in for a persisted dataset: regenerating
/// from these fields reproduces every sample bit-for-bit, so this
/// descriptor *is* the dataset on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub size: usize,
    /// Read-window width.
    pub n: usize,
    pub l_noise: usize,
    pub symmetry: SymmetryGroup,
    #[serde(default)]
    pub label_source: LabelSource,
    pub seed: u64,
}

impl DatasetDescriptor {
    /// Expand into a full generation spec (default 2-site noise gates,
    /// first layer on even bonds).
    pub fn to_spec(self) -> DatasetSpec {
        DatasetSpec {
            window: self.n,
            noise: NoiseConfig {
                group: self.symmetry,
                layers: self.l_noise,
                support: default_support(),
                first_layer_offset: 0,
            },
            label_source: self.label_source,
            size: self.size,
            seed: self.seed,
        }
    }
}

/// A label together with the noisy padded state carrying it.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    /// Phase label in `{0, 1, 2}`.
    pub label: usize,
    /// State on the padded chain.
    pub state: StateVector,
    /// First site of the read window within the padded chain.
    pub window_start: usize,
}

/// Everything needed to regenerate a dataset sample-by-sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Read-window width `N` (the classifier input size).
    pub window: usize,
    pub noise: NoiseConfig,
    pub label_source: LabelSource,
    /// Number of samples.
    pub size: usize,
    /// Root seed; sample `i` uses the derived stream `(seed, i)`.
    pub seed: u64,
}

impl DatasetSpec {
    pub fn padded_size(&self) -> usize {
        padded_system_size(self.window, self.noise.layers)
    }

    pub fn window_start(&self) -> usize {
        self.noise.layers + 1
    }
}

fn apply_ti_noise_with(
    state: &mut StateVector,
    noise: &NoiseConfig,
    gens: &GeneratorSet,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = state.num_qubits();
    for layer in 0..noise.layers {
        let (_, gate) = sample_symmetric_gate(gens, rng)?;
        let start = (layer + noise.first_layer_offset) % 2;
        let mut q = start;
        while q + noise.support <= n {
            let targets: Vec<usize> = (q..q + noise.support).collect();
            state.apply_gate(&gate, &targets);
            q += 2;
        }
    }
    Ok(())
}

/// Apply the brick-wall symmetric noise circuit in place, drawing one gate
/// per layer from `rng`.
pub fn apply_ti_noise(state: &mut StateVector, noise: &NoiseConfig, rng: &mut ChaCha8Rng) -> Result<()> {
    let gens = noise.generator_set()?;
    apply_ti_noise_with(state, noise, &gens, rng)
}

/// Streams samples of one dataset with the static ingredients (clean fixed
/// points, generator set) prepared once. Produces bit-identical states to
/// [`make_sample`]; this is the path the training loop uses.
#[derive(Debug, Clone)]
pub struct SampleFactory {
    spec: DatasetSpec,
    clean: Vec<StateVector>,
    gens: GeneratorSet,
}

impl SampleFactory {
    pub fn new(spec: DatasetSpec) -> Result<Self> {
        spec.noise.validate(spec.window)?;
        let n = spec.padded_size();
        let clean = (0..3)
            .map(|label| build_fixed_point(spec.label_source.fixed_point(label), n))
            .collect::<Result<Vec<_>>>()?;
        let gens = spec.noise.generator_set()?;
        Ok(SampleFactory { spec, clean, gens })
    }

    pub fn spec(&self) -> &DatasetSpec {
        &self.spec
    }

    pub fn sample(&self, index: usize) -> Result<TrainingSample> {
        let mut rng = stream(self.spec.seed, index as u64);
        let label = (rand::Rng::gen_range(&mut rng, 0..3u8)) as usize;
        let mut state = self.clean[label].clone();
        apply_ti_noise_with(&mut state, &self.spec.noise, &self.gens, &mut rng)?;
        Ok(TrainingSample {
            label,
            state,
            window_start: self.spec.window_start(),
        })
    }
}

/// Regenerate sample `index` of the dataset.
pub fn make_sample(spec: &DatasetSpec, index: usize) -> Result<TrainingSample> {
    spec.noise.validate(spec.window)?;
    let mut rng = stream(spec.seed, index as u64);
    let label = (rand::Rng::gen_range(&mut rng, 0..3u8)) as usize;
    let kind = spec.label_source.fixed_point(label);
    let mut state = build_fixed_point(kind, spec.padded_size())?;
    apply_ti_noise(&mut state, &spec.noise, &mut rng)?;
    Ok(TrainingSample {
        label,
        state,
        window_start: spec.window_start(),
    })
}

/// Materialize the whole dataset (mainly for tests and small diagnostics;
/// training streams samples individually to bound memory).
pub fn make_dataset(spec: &DatasetSpec) -> Result<Vec<TrainingSample>> {
    spec.noise.validate(spec.window)?;
    let results = crate::exec::par_map_indexed(spec.size, |i| make_sample(spec, i));
    results.into_iter().collect()
}
