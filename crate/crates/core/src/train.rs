//! Training: sharpened softmax cross-entropy, exact adjoint gradients,
//! Adam, and the noise-depth curriculum.
//!
//! The loss for a batch `B` of labelled samples is
//!
//! ```text
//! L(B) = −(1/|B|) Σ_{(ψ, l) ∈ B} log( e^{C·p_l} / Σ_j e^{C·p_j} )
//! ```
//!
//! with `p_j` the four readout probabilities and `C` a sharpening constant.
//!
//! Gradients are computed analytically in one backward sweep per sample.
//! Each gate's parameter derivatives `∂U/∂θ_k` come from the block-matrix
//! Fréchet exponential (the gate generators mix non-commuting Paulis, so no
//! shift rule applies); they are built once per optimization step and shared
//! across the batch. For a gate applied at position `t` with incoming state
//! `ψ_{t−1}` and adjoint vector `λ_t`, the contribution to `∂L/∂θ_k` is
//! `2 Re ⟨λ_t| ∂U/∂θ_k |ψ_{t−1}⟩`, evaluated on the gate's two-qubit block.
//! States are rewound exactly (`ψ_{t−1} = U† ψ_t`), so memory stays at two
//! statevectors per sample regardless of circuit depth.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{AdamConfig, ArchConfig, RunConfig, StageConfig};
use crate::dataset::{DatasetSpec, LabelSource, NoiseConfig, SampleFactory, TrainingSample};
use crate::symmetry::SymmetryGroup;
use crate::exec::par_map_indexed;
use crate::expm::expm_frechet;
use crate::qcnn::{
    build_architecture, gate_generator, gate_sequence, param_count, pauli_pair_basis, predict,
    PredictionRecord, QcnnArchitecture, QcnnParams, PARAMS_PER_GATE,
};
use crate::rng::{derive_seed, stream};
use crate::state::{DenseGate, StateVector};
use crate::{Error, Result};

/// Seed salts for the independent random streams of a run.
const SALT_INIT: u64 = 0x01;
const SALT_TRAIN_BASE: u64 = 0x100; // + l_noise
const SALT_TEST_BASE: u64 = 0x200; // + l_noise
const SALT_BATCH_BASE: u64 = 0x300; // + stage index

/// Training dataset descriptor for a given noise depth under `cfg`.
pub fn train_dataset_spec(cfg: &RunConfig, l_noise: usize) -> DatasetSpec {
    DatasetSpec {
        window: cfg.arch.n,
        noise: NoiseConfig {
            group: cfg.symmetry,
            layers: l_noise,
            support: cfg.data.noise_support,
            first_layer_offset: cfg.data.first_layer_offset,
        },
        label_source: cfg.data.label_source,
        size: cfg.data.train_size,
        seed: derive_seed(cfg.seed, SALT_TRAIN_BASE + l_noise as u64),
    }
}

/// Held-out dataset descriptor for a given noise depth under `cfg`.
pub fn test_dataset_spec(cfg: &RunConfig, l_noise: usize) -> DatasetSpec {
    let mut spec = train_dataset_spec(cfg, l_noise);
    spec.size = cfg.data.test_size;
    spec.seed = derive_seed(cfg.seed, SALT_TEST_BASE + l_noise as u64);
    spec
}

/// Per-slot matrices prepared once per optimization step.
struct SlotGates {
    u: DenseGate,
    u_dag: DenseGate,
    du: Vec<DenseGate>,
}

fn build_slot_gates(params: &QcnnParams) -> Vec<SlotGates> {
    params
        .slots
        .iter()
        .map(|theta| {
            let a = gate_generator(theta);
            let basis = pauli_pair_basis();
            let mut du = Vec::with_capacity(PARAMS_PER_GATE);
            let mut u = None;
            for p in basis.iter() {
                let e = p * Complex64::new(0.0, -0.5);
                let (exp_a, deriv) = expm_frechet(&a, &e);
                if u.is_none() {
                    u = Some(exp_a);
                }
                du.push(DenseGate::from_dmatrix(&deriv).expect("4×4 derivative"));
            }
            let u = DenseGate::from_dmatrix(&u.expect("at least one direction")).expect("4×4 gate");
            SlotGates {
                u_dag: u.adjoint(),
                u,
                du,
            }
        })
        .collect()
}

/// Sharpened cross-entropy of one outcome distribution.
pub(crate) fn loss_from_probs(probs: &[f64; 4], label: usize, c: f64) -> f64 {
    let logits = probs.map(|p| c * p);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// `∂L/∂p_j` for one sample: `C (softmax(C·p)_j − δ_{j,label})`.
fn prob_weights(probs: &[f64; 4], label: usize, c: f64) -> [f64; 4] {
    let logits = probs.map(|p| c * p);
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    let mut w = [0.0; 4];
    for j in 0..4 {
        w[j] = c * ((logits[j] - lse).exp() - if j == label { 1.0 } else { 0.0 });
    }
    w
}

/// Accumulate the 4×4 block matrix `M[h][g] = Σ_rest conj(λ[h,rest]) ψ[g,rest]`
/// for a two-qubit block at the given absolute qubit pair.
fn cross_block(
    lambda: &StateVector,
    psi: &StateVector,
    q_hi: usize,
    q_lo: usize,
) -> [Complex64; 16] {
    let n = psi.num_qubits();
    let bh = n - 1 - q_hi;
    let bl = n - 1 - q_lo;
    let sh = 1usize << bh;
    let sl = 1usize << bl;
    let (b0, b1) = if bh < bl { (bh, bl) } else { (bl, bh) };
    let m0 = (1usize << b0) - 1;
    let m1 = (1usize << b1) - 1;
    let la = lambda.amplitudes();
    let pa = psi.amplitudes();
    let mut m = [Complex64::new(0.0, 0.0); 16];
    for c in 0..pa.len() >> 2 {
        let t = ((c & !m0) << 1) | (c & m0);
        let base = ((t & !m1) << 1) | (t & m1);
        let idx = [base, base | sl, base | sh, base | sh | sl];
        for (h, &ih) in idx.iter().enumerate() {
            let lh = la[ih].conj();
            if lh == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (g, &ig) in idx.iter().enumerate() {
                m[h * 4 + g] += lh * pa[ig];
            }
        }
    }
    m
}

/// Loss and flat parameter gradient for a single sample.
fn sample_loss_grad(
    arch: &QcnnArchitecture,
    seq: &[(usize, [usize; 2])],
    slots: &[SlotGates],
    sample: &TrainingSample,
    c: f64,
) -> (f64, Vec<f64>) {
    let ws = sample.window_start;
    let n = sample.state.num_qubits();
    let mut psi = sample.state.clone();
    for &(slot, pair) in seq {
        psi.apply_gate(&slots[slot].u, &pair);
    }
    let probs_v = psi.readout_distribution(&[arch.readout[0] + ws, arch.readout[1] + ws]);
    let probs = [probs_v[0], probs_v[1], probs_v[2], probs_v[3]];
    let loss = loss_from_probs(&probs, sample.label, c);
    let w = prob_weights(&probs, sample.label, c);

    // λ[s] = ∂L/∂ψ*[s] = w_{j(s)} ψ[s], with j(s) the readout outcome of s.
    let pa = n - 1 - (arch.readout[0] + ws);
    let pb = n - 1 - (arch.readout[1] + ws);
    let mut lambda = psi.clone();
    for (s, a) in lambda.amplitudes_mut().iter_mut().enumerate() {
        let j = ((s >> pa & 1) << 1) | (s >> pb & 1);
        *a *= w[j];
    }

    let mut grad = vec![0.0f64; slots.len() * PARAMS_PER_GATE];
    for &(slot, pair) in seq.iter().rev() {
        let sg = &slots[slot];
        // Rewind the state below this gate.
        psi.apply_gate(&sg.u_dag, &pair);
        let m = cross_block(&lambda, &psi, pair[0], pair[1]);
        for k in 0..PARAMS_PER_GATE {
            let du = sg.du[k].elements();
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..16 {
                acc += du[e] * m[e];
            }
            grad[slot * PARAMS_PER_GATE + k] += 2.0 * acc.re;
        }
        lambda.apply_gate(&sg.u_dag, &pair);
    }
    (loss, grad)
}

/// Mean loss over the given sample indices (forward passes only).
pub fn batch_loss(
    arch: &QcnnArchitecture,
    params: &QcnnParams,
    factory: &SampleFactory,
    indices: &[usize],
    c: f64,
) -> Result<f64> {
    let gates = crate::qcnn::build_gates(params);
    let seq = gate_sequence(arch, factory.spec().window_start());
    let losses = par_map_indexed(indices.len(), |i| -> Result<f64> {
        let sample = factory.sample(indices[i])?;
        let mut psi = sample.state.clone();
        for &(slot, pair) in &seq {
            psi.apply_gate(&gates[slot], &pair);
        }
        let ws = sample.window_start;
        let pv = psi.readout_distribution(&[arch.readout[0] + ws, arch.readout[1] + ws]);
        Ok(loss_from_probs(&[pv[0], pv[1], pv[2], pv[3]], sample.label, c))
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / indices.len() as f64)
}

/// Mean loss and mean flat gradient over the given sample indices.
pub fn batch_gradient(
    arch: &QcnnArchitecture,
    params: &QcnnParams,
    factory: &SampleFactory,
    indices: &[usize],
    c: f64,
) -> Result<(f64, Vec<f64>)> {
    if params.slots.len() != arch.slots.len() {
        return Err(Error::Dimension(
            "parameter slots do not match the architecture".into(),
        ));
    }
    let slots = build_slot_gates(params);
    let seq = gate_sequence(arch, factory.spec().window_start());
    let per_sample = par_map_indexed(indices.len(), |i| -> Result<(f64, Vec<f64>)> {
        let sample = factory.sample(indices[i])?;
        Ok(sample_loss_grad(arch, &seq, &slots, &sample, c))
    });
    let dim = param_count(arch);
    let mut loss = 0.0;
    let mut grad = vec![0.0f64; dim];
    for r in per_sample {
        let (l, g) = r?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let inv = 1.0 / indices.len() as f64;
    for g in &mut grad {
        *g *= inv;
    }
    Ok((loss * inv, grad))
}

/// Adam optimizer state (bias-corrected first and second moments).
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// One update step: `θ ← θ − lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64, cfg: &AdamConfig) {
        assert_eq!(theta.len(), grad.len());
        assert_eq!(theta.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - cfg.beta1.powi(self.t as i32);
        let b2t = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            theta[i] -= lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

/// Fraction of dataset samples whose argmax prediction equals the label
/// (outcome `11` never matches and counts as a failure).
pub fn test_accuracy(
    arch: &QcnnArchitecture,
    params: &QcnnParams,
    factory: &SampleFactory,
) -> Result<f64> {
    let gates = crate::qcnn::build_gates(params);
    let seq = gate_sequence(arch, factory.spec().window_start());
    let size = factory.spec().size;
    let hits = par_map_indexed(size, |i| -> Result<u32> {
        let sample = factory.sample(i)?;
        let mut psi = sample.state;
        for &(slot, pair) in &seq {
            psi.apply_gate(&gates[slot], &pair);
        }
        let ws = sample.window_start;
        let pv = psi.readout_distribution(&[arch.readout[0] + ws, arch.readout[1] + ws]);
        let p = [pv[0], pv[1], pv[2], pv[3]];
        Ok((predict(&p) == sample.label) as u32)
    });
    let mut total = 0u32;
    for h in hits {
        total += h?;
    }
    Ok(total as f64 / size as f64)
}

/// Classify every sample of a dataset, returning one record per sample.
pub fn evaluate_dataset(
    arch: &QcnnArchitecture,
    params: &QcnnParams,
    factory: &SampleFactory,
) -> Result<Vec<PredictionRecord>> {
    let gates = crate::qcnn::build_gates(params);
    let seq = gate_sequence(arch, factory.spec().window_start());
    let size = factory.spec().size;
    par_map_indexed(size, |i| -> Result<PredictionRecord> {
        let sample = factory.sample(i)?;
        let mut psi = sample.state;
        for &(slot, pair) in &seq {
            psi.apply_gate(&gates[slot], &pair);
        }
        let ws = sample.window_start;
        let pv = psi.readout_distribution(&[arch.readout[0] + ws, arch.readout[1] + ws]);
        let probs = [pv[0], pv[1], pv[2], pv[3]];
        Ok(PredictionRecord {
            index: i,
            label: sample.label,
            probs,
            predicted: predict(&probs),
        })
    })
    .into_iter()
    .collect()
}

/// Progress of one curriculum stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub l_noise: usize,
    pub learning_rate: f64,
    /// Epochs actually run (one epoch = `train_size / batch_size` steps).
    pub epochs_run: usize,
    pub steps_run: usize,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    /// `(epoch, accuracy)` at each test check.
    pub accuracy_history: Vec<(usize, f64)>,
    /// Accuracy at the last check of the stage.
    pub final_test_accuracy: f64,
    /// Whether the stage reached the accuracy threshold.
    pub reached_threshold: bool,
}

/// Summary of a whole training session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub task: String,
    pub seed: u64,
    pub window: usize,
    pub uniform: bool,
    pub conv_depth: usize,
    pub param_count: usize,
    pub accuracy_threshold: f64,
    pub stages: Vec<StageReport>,
    /// Whether the first curriculum stage reached the accuracy threshold.
    /// A later stage ending below threshold is the curriculum's normal
    /// stopping condition and does not count against convergence.
    pub converged: bool,
    /// Wall-clock time; excluded from serialized reports so identical
    /// configs produce byte-identical output files.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// One line of training provenance kept in checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub l_noise: usize,
    pub learning_rate: f64,
    pub epochs_run: usize,
    pub final_test_accuracy: f64,
    pub reached_threshold: bool,
}

/// Provenance stored alongside trained parameters: everything needed to
/// regenerate matching datasets and to identify the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub task: String,
    pub symmetry: SymmetryGroup,
    /// History of the curriculum stages actually run.
    pub curriculum: Vec<StageSummary>,
    pub seed: u64,
    #[serde(default)]
    pub label_source: LabelSource,
    #[serde(default = "default_meta_support")]
    pub noise_support: usize,
    #[serde(default)]
    pub first_layer_offset: usize,
}

fn default_meta_support() -> usize {
    2
}

/// A trained model as persisted by the driver: the architecture block, the
/// flat parameter vector, and run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub arch: ArchConfig,
    pub params: Vec<f64>,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    /// Package a finished training run.
    pub fn from_outcome(cfg: &RunConfig, outcome: &TrainOutcome) -> Self {
        Checkpoint {
            arch: cfg.arch,
            params: outcome.params.flat(),
            meta: CheckpointMeta {
                task: cfg.task.clone(),
                symmetry: cfg.symmetry,
                curriculum: outcome
                    .report
                    .stages
                    .iter()
                    .map(|s| StageSummary {
                        l_noise: s.l_noise,
                        learning_rate: s.learning_rate,
                        epochs_run: s.epochs_run,
                        final_test_accuracy: s.final_test_accuracy,
                        reached_threshold: s.reached_threshold,
                    })
                    .collect(),
                seed: cfg.seed,
                label_source: cfg.data.label_source,
                noise_support: cfg.data.noise_support,
                first_layer_offset: cfg.data.first_layer_offset,
            },
        }
    }

    /// Rebuild the circuit layout and parameter struct.
    pub fn restore(&self) -> Result<(QcnnArchitecture, QcnnParams)> {
        let arch = build_architecture(self.arch.n, self.arch.uniform, self.arch.conv_depth)?;
        let params = QcnnParams::from_flat(&arch, &self.params)?;
        Ok((arch, params))
    }

    /// Noise depth of the last stage this model was trained on.
    pub fn trained_l_noise(&self) -> usize {
        self.meta.curriculum.last().map_or(0, |s| s.l_noise)
    }
}

/// Held-out dataset spec for evaluating a checkpoint at a given noise
/// depth, seeded exactly like the training session's test sets.
pub fn checkpoint_test_spec(ckpt: &Checkpoint, l_noise: usize, size: usize) -> DatasetSpec {
    DatasetSpec {
        window: ckpt.arch.n,
        noise: NoiseConfig {
            group: ckpt.meta.symmetry,
            layers: l_noise,
            support: ckpt.meta.noise_support,
            first_layer_offset: ckpt.meta.first_layer_offset,
        },
        label_source: ckpt.meta.label_source,
        size,
        seed: derive_seed(ckpt.meta.seed, SALT_TEST_BASE + l_noise as u64),
    }
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub arch: QcnnArchitecture,
    pub params: QcnnParams,
}

/// Run the full curriculum described by `cfg`.
///
/// Stages run in order; training advances to the next stage only when the
/// held-out accuracy reaches the threshold (checked every `check_interval`
/// epochs and at the stage's epoch cap), and the curriculum stops at the
/// first stage that ends below it. Parameters carry over between stages;
/// Adam moments reset with each stage's learning rate.
pub fn train_session(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let arch = build_architecture(cfg.arch.n, cfg.arch.uniform, cfg.arch.conv_depth)?;
    let mut params = QcnnParams::random_init(&arch, derive_seed(cfg.seed, SALT_INIT));
    let dim = param_count(&arch);

    let mut stages = Vec::new();
    for (stage_idx, stage) in cfg.curriculum.iter().enumerate() {
        let report = run_stage(cfg, &arch, &mut params, stage, stage_idx, dim)?;
        let reached = report.reached_threshold;
        stages.push(report);
        if !reached {
            break;
        }
    }
    let converged = stages.first().is_some_and(|s| s.reached_threshold);

    let report = TrainReport {
        task: cfg.task.clone(),
        seed: cfg.seed,
        window: cfg.arch.n,
        uniform: cfg.arch.uniform,
        conv_depth: cfg.arch.conv_depth,
        param_count: dim,
        accuracy_threshold: cfg.accuracy_threshold,
        stages,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        report,
        arch,
        params,
    })
}

fn run_stage(
    cfg: &RunConfig,
    arch: &QcnnArchitecture,
    params: &mut QcnnParams,
    stage: &StageConfig,
    stage_idx: usize,
    dim: usize,
) -> Result<StageReport> {
    let train_factory = SampleFactory::new(train_dataset_spec(cfg, stage.l_noise))?;
    let test_factory = SampleFactory::new(test_dataset_spec(cfg, stage.l_noise))?;
    let mut batch_rng = stream(cfg.seed, SALT_BATCH_BASE + stage_idx as u64);
    let mut adam = AdamState::new(dim);
    let steps_per_epoch = cfg.data.train_size.div_ceil(cfg.adam.batch_size);

    let mut loss_curve = Vec::new();
    let mut accuracy_history: Vec<(usize, f64)> = Vec::new();
    let mut reached = false;
    let mut epochs_run = 0;
    let mut steps_run = 0;

    for epoch in 1..=stage.max_epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..steps_per_epoch {
            let indices: Vec<usize> = (0..cfg.adam.batch_size)
                .map(|_| rand::Rng::gen_range(&mut batch_rng, 0..cfg.data.train_size))
                .collect();
            let (loss, grad) = batch_gradient(arch, params, &train_factory, &indices, cfg.loss_c)?;
            let mut flat = params.flat();
            adam.step(&mut flat, &grad, stage.learning_rate, &cfg.adam);
            *params = QcnnParams::from_flat(arch, &flat)?;
            epoch_loss += loss;
            steps_run += 1;
        }
        loss_curve.push(epoch_loss / steps_per_epoch as f64);
        epochs_run = epoch;

        if epoch % cfg.check_interval == 0 || epoch == stage.max_epochs {
            let acc = test_accuracy(arch, params, &test_factory)?;
            accuracy_history.push((epoch, acc));
            if acc >= cfg.accuracy_threshold {
                reached = true;
                break;
            }
        }
    }

    let final_test_accuracy = accuracy_history
        .last()
        .map(|&(_, a)| a)
        .expect("at least one accuracy check per stage");
    Ok(StageReport {
        l_noise: stage.l_noise,
        learning_rate: stage.learning_rate,
        epochs_run,
        steps_run,
        loss_curve,
        accuracy_history,
        final_test_accuracy,
        reached_threshold: reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;
    use crate::dataset::LabelSource;
    use crate::symmetry::SymmetryGroup;

    fn small_factory(seed: u64) -> (QcnnArchitecture, SampleFactory) {
        let arch = build_architecture(4, false, 3).unwrap();
        let spec = DatasetSpec {
            window: 4,
            noise: NoiseConfig {
                group: SymmetryGroup::TimeReversal,
                layers: 1,
                support: 2,
                first_layer_offset: 0,
            },
            label_source: LabelSource::SymmetricCat,
            size: 64,
            seed,
        };
        (arch, SampleFactory::new(spec).unwrap())
    }

    #[test]
    fn loss_matches_hand_formula() {
        let probs = [0.1f64, 0.6, 0.2, 0.1];
        let c = 50.0f64;
        let z: f64 = probs.iter().map(|p| (c * p).exp()).sum();
        let want = -((c * probs[1]).exp() / z).ln();
        let got = loss_from_probs(&probs, 1, c);
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn prob_weights_sum_to_zero_at_the_label() {
        // Σ_j w_j = C(Σ softmax − 1) = 0.
        let w = prob_weights(&[0.3, 0.3, 0.2, 0.2], 2, 50.0);
        assert!(w.iter().sum::<f64>().abs() < 1e-10);
        assert!(w[2] < 0.0, "the true label's weight must be negative");
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (arch, factory) = small_factory(5);
        let params = QcnnParams::random_init(&arch, 33);
        let indices = [0usize, 1, 2];
        let c = 50.0;
        let (_, grad) = batch_gradient(&arch, &params, &factory, &indices, c).unwrap();

        let h = 1e-4;
        let flat = params.flat();
        let mut worst = 0.0f64;
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            plus[k] += h;
            let mut minus = flat.clone();
            minus[k] -= h;
            let lp = batch_loss(
                &arch,
                &QcnnParams::from_flat(&arch, &plus).unwrap(),
                &factory,
                &indices,
                c,
            )
            .unwrap();
            let lm = batch_loss(
                &arch,
                &QcnnParams::from_flat(&arch, &minus).unwrap(),
                &factory,
                &indices,
                c,
            )
            .unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let denom = grad[k].abs().max(fd.abs()).max(1e-8);
            worst = worst.max((grad[k] - fd).abs() / denom);
        }
        assert!(worst <= 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn uniform_architecture_gradient_also_matches_fd() {
        // Shared slots accumulate over placements; check the same identity.
        let arch = build_architecture(4, true, 3).unwrap();
        let spec = DatasetSpec {
            window: 4,
            noise: NoiseConfig {
                group: SymmetryGroup::Z2xZ2T,
                layers: 1,
                support: 2,
                first_layer_offset: 0,
            },
            label_source: LabelSource::SymmetricCat,
            size: 16,
            seed: 8,
        };
        let factory = SampleFactory::new(spec).unwrap();
        let params = QcnnParams::random_init(&arch, 12);
        let indices = [3usize, 7];
        let (_, grad) = batch_gradient(&arch, &params, &factory, &indices, 50.0).unwrap();
        let h = 1e-4;
        let flat = params.flat();
        for k in (0..flat.len()).step_by(7) {
            let mut plus = flat.clone();
            plus[k] += h;
            let mut minus = flat.clone();
            minus[k] -= h;
            let lp = batch_loss(&arch, &QcnnParams::from_flat(&arch, &plus).unwrap(), &factory, &indices, 50.0).unwrap();
            let lm = batch_loss(&arch, &QcnnParams::from_flat(&arch, &minus).unwrap(), &factory, &indices, 50.0).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let denom = grad[k].abs().max(fd.abs()).max(1e-8);
            assert!(
                (grad[k] - fd).abs() / denom <= 1e-5,
                "coordinate {k}: analytic {} vs fd {fd}",
                grad[k]
            );
        }
    }

    #[test]
    fn adam_first_step_size_is_learning_rate() {
        // With bias correction, the first step moves each coordinate by
        // ~lr·sign(g) regardless of gradient magnitude.
        let cfg = AdamConfig::default();
        let mut adam = AdamState::new(2);
        let mut theta = [1.0, -2.0];
        adam.step(&mut theta, &[1e-3, -1e3], 0.01, &cfg);
        assert!((theta[0] - (1.0 - 0.01)).abs() < 1e-6);
        assert!((theta[1] - (-2.0 + 0.01)).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let cfg = AdamConfig::default();
        let mut adam = AdamState::new(3);
        let mut x = [2.0, -1.5, 0.7];
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|&v| 2.0 * v).collect();
            adam.step(&mut x, &g, 0.01, &cfg);
        }
        for v in x {
            assert!(v.abs() < 1e-3, "residual {v}");
        }
    }

    #[test]
    fn accuracy_is_deterministic_and_bounded() {
        let (arch, factory) = small_factory(21);
        let params = QcnnParams::random_init(&arch, 4);
        let a = test_accuracy(&arch, &params, &factory).unwrap();
        let b = test_accuracy(&arch, &params, &factory).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn training_reduces_loss_on_a_tiny_problem() {
        let mut cfg = preset("tr-4q").unwrap();
        cfg.data.train_size = 120;
        cfg.data.test_size = 60;
        cfg.adam.batch_size = 30;
        cfg.curriculum[0].max_epochs = 40;
        cfg.check_interval = 40;
        cfg.seed = 3;
        let outcome = train_session(&cfg).unwrap();
        let stage = &outcome.report.stages[0];
        let first = stage.loss_curve.first().unwrap();
        let last = stage.loss_curve.last().unwrap();
        assert!(
            last < first,
            "loss should drop: {first} → {last} over {} epochs ({:?})",
            stage.epochs_run,
            stage.loss_curve
        );
        assert_eq!(outcome.params.slots.len(), 6);
    }

    /// Full preset runs; slow, so ignored by default. Run explicitly with
    /// `cargo test -- --ignored` to reproduce the headline accuracies.
    #[test]
    #[ignore]
    fn tr_4q_preset_plateaus_in_the_expected_band() {
        let outcome = train_session(&preset("tr-4q").unwrap()).unwrap();
        let acc = outcome.report.stages[0].final_test_accuracy;
        assert!((0.80..=0.95).contains(&acc), "accuracy {acc}");
    }

    /// Forks the second curriculum stage at several learning rates from the
    /// same converged first stage, to size the desk-scale preset. Caches the
    /// stage-1 parameters under `target/` so repeat probes skip the first
    /// stage.
    #[test]
    #[ignore]
    fn dev_probe_stage2_lr() {
        let cfg = preset("tr-8q").unwrap();
        let arch = build_architecture(cfg.arch.n, cfg.arch.uniform, cfg.arch.conv_depth).unwrap();
        let mut params = QcnnParams::random_init(&arch, derive_seed(cfg.seed, SALT_INIT));
        let dim = param_count(&arch);
        let t0 = std::time::Instant::now();
        let cache = std::path::Path::new("../../target/probe-stage1.json");
        match std::fs::read_to_string(cache) {
            Ok(text) => {
                let flat: Vec<f64> = serde_json::from_str(&text).unwrap();
                params = QcnnParams::from_flat(&arch, &flat).unwrap();
                eprintln!("stage1: loaded cached parameters");
            }
            Err(_) => {
                let s1 = run_stage(&cfg, &arch, &mut params, &cfg.curriculum[0], 0, dim).unwrap();
                eprintln!(
                    "stage1: epochs={} acc={} ({:.0}s)",
                    s1.epochs_run,
                    s1.final_test_accuracy,
                    t0.elapsed().as_secs_f64()
                );
                let _ = std::fs::write(cache, serde_json::to_string(&params.flat()).unwrap());
            }
        }
        let l1_factory = SampleFactory::new(test_dataset_spec(&cfg, 1)).unwrap();
        for lr in [3e-4] {
            let mut fork = params.clone();
            let stage = StageConfig {
                l_noise: 2,
                learning_rate: lr,
                max_epochs: 8,
            };
            let r = run_stage(&cfg, &arch, &mut fork, &stage, 1, dim).unwrap();
            let l1 = test_accuracy(&arch, &fork, &l1_factory).unwrap();
            eprintln!(
                "stage2 lr={lr}: history={:?} l1_after={l1} ({:.0}s)",
                r.accuracy_history,
                t0.elapsed().as_secs_f64()
            );
            // Persist the forked model so phase-diagram sweeps can run on it.
            let ckpt = Checkpoint {
                arch: cfg.arch,
                params: fork.flat(),
                meta: CheckpointMeta {
                    task: cfg.task.clone(),
                    symmetry: cfg.symmetry,
                    curriculum: vec![StageSummary {
                        l_noise: 2,
                        learning_rate: lr,
                        epochs_run: r.epochs_run,
                        final_test_accuracy: r.final_test_accuracy,
                        reached_threshold: r.reached_threshold,
                    }],
                    seed: cfg.seed,
                    label_source: cfg.data.label_source,
                    noise_support: cfg.data.noise_support,
                    first_layer_offset: cfg.data.first_layer_offset,
                },
            };
            let path = format!("../../target/probe-fork-{lr}.ckpt.json");
            std::fs::write(&path, serde_json::to_string(&ckpt).unwrap()).unwrap();
            eprintln!("checkpoint saved to {path}");
        }
    }

    #[test]
    #[ignore]
    fn dev_probe_tr8q_full() {
        let cfg = preset("tr-8q").unwrap();
        let t0 = std::time::Instant::now();
        let outcome = train_session(&cfg).unwrap();
        eprintln!("elapsed {:.1}s", t0.elapsed().as_secs_f64());
        for s in &outcome.report.stages {
            eprintln!(
                "stage L={} epochs={} final_acc={} reached={} history={:?}",
                s.l_noise, s.epochs_run, s.final_test_accuracy, s.reached_threshold,
                s.accuracy_history
            );
        }
        for l in 1..=3usize {
            let f = SampleFactory::new(test_dataset_spec(&cfg, l)).unwrap();
            let acc = test_accuracy(&outcome.arch, &outcome.params, &f).unwrap();
            eprintln!("cross-eval L={l}: accuracy {acc}");
        }
        eprintln!("total elapsed {:.1}s", t0.elapsed().as_secs_f64());
    }

    #[test]
    fn evaluation_records_are_consistent_with_accuracy() {
        let (arch, factory) = small_factory(9);
        let params = QcnnParams::random_init(&arch, 2);
        let records = evaluate_dataset(&arch, &params, &factory).unwrap();
        let acc = test_accuracy(&arch, &params, &factory).unwrap();
        let frac = records.iter().filter(|r| r.predicted == r.label).count() as f64
            / records.len() as f64;
        assert!((acc - frac).abs() < 1e-12);
        for r in &records {
            assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
