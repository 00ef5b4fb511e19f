//! Fixtures shared by the benchmarks.

use std::fmt::Write;
use std::sync::Arc;

use xtrepan::dataset::parse_dataset;
use xtrepan::trainer::{train, LayerSpec, Loss, TopologySpec, TrainConfig};
use xtrepan::{Activation, Dataset, DatasetSchema, Network};

const BAND_SCHEMA: &str = r#"class_labels = ["0", "1"]

[[attribute]]
name = "x1"
kind = "continuous"
role = "input"

[[attribute]]
name = "x2"
kind = "continuous"
role = "input"

[[attribute]]
name = "y"
kind = "nominal"
tokens = ["0", "1"]
role = "target"
"#;

/// `n` points on a low-discrepancy sequence in the unit square, labelled
/// by whether they lie above the anti-diagonal.
pub fn band_data(n: usize) -> Dataset {
    let schema = Arc::new(DatasetSchema::from_toml(BAND_SCHEMA).expect("fixture schema parses"));
    let mut csv = String::from("x1,x2,y\n");
    for i in 0..n {
        let x1 = (i as f64 * 0.618_033_988_75).fract();
        let x2 = (i as f64 * 0.754_877_666_25).fract();
        let y = u8::from(x1 + x2 > 1.0);
        writeln!(csv, "{x1:.4},{x2:.4},{y}").expect("writing to a String");
    }
    parse_dataset(&csv, &schema).expect("fixture data parses")
}

pub fn small_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        topology: TopologySpec {
            hidden: vec![LayerSpec {
                units: 4,
                activation: Activation::Hyperbolic,
            }],
            output_activation: Activation::Logistic,
            skips: Vec::new(),
        },
        loss: Loss::CrossEntropy,
        learning_rate: 0.5,
        max_epochs: epochs,
        patience: epochs,
        seed: 3,
    }
}

/// A network trained briefly on [`band_data`].
pub fn band_network(data: &Dataset) -> Network {
    train(data, data, &small_config(100))
        .expect("fixture training succeeds")
        .0
}
