//! Times one training step on depth-2 noise data (the stage-2 hot path).

use std::time::Instant;

use qphase_core::dataset::{DatasetSpec, NoiseConfig, SampleFactory};
use qphase_core::qcnn::{build_architecture, QcnnParams};
use qphase_core::symmetry::SymmetryGroup;
use qphase_core::train::batch_gradient;

fn main() {
    let arch = build_architecture(8, false, 3).unwrap();
    let params = QcnnParams::random_init(&arch, 1);
    let spec = DatasetSpec {
        window: 8,
        noise: NoiseConfig {
            group: SymmetryGroup::TimeReversal,
            layers: 2,
            support: 2,
            first_layer_offset: 0,
        },
        label_source: Default::default(),
        size: 64,
        seed: 3,
    };
    let factory = SampleFactory::new(spec).unwrap();
    let indices: Vec<usize> = (0..50).collect();
    // Warm up, then time.
    let _ = batch_gradient(&arch, &params, &factory, &indices, 50.0).unwrap();
    let t0 = Instant::now();
    let reps = 5;
    for _ in 0..reps {
        let _ = batch_gradient(&arch, &params, &factory, &indices, 50.0).unwrap();
    }
    println!(
        "batch of 50 on 14 qubits: {:.1} ms/step",
        t0.elapsed().as_secs_f64() * 1e3 / reps as f64
    );
}
