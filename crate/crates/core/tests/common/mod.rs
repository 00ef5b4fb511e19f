#![allow(dead_code)]

use std::sync::Arc;

use xtrepan::dataset::{parse_dataset, AttributeSpec, Role};
use xtrepan::network::{FeatureEncoding, InputEncoding, Layer, Matrix, Task};
use xtrepan::{Activation, Dataset, DatasetSchema, Network, Value};

pub fn concept_schema() -> Arc<DatasetSchema> {
    Arc::new(
        DatasetSchema::new(vec![
            AttributeSpec::continuous("x1", Role::Input),
            AttributeSpec::continuous("x2", Role::Input),
            AttributeSpec::continuous("x3", Role::Input),
            AttributeSpec::nominal("y", ["0", "1"], Role::Target),
        ])
        .unwrap(),
    )
}

/// All eight 0/1 input vectors, in binary counting order.
pub fn boolean_inputs() -> Vec<[f64; 3]> {
    (0..8u8)
        .map(|b| [f64::from(b & 1), f64::from(b >> 1 & 1), f64::from(b >> 2 & 1)])
        .collect()
}

pub fn majority(x: &[f64; 3]) -> bool {
    x.iter().filter(|&&v| v > 0.5).count() >= 2
}

/// The eight rows of the 2-of-3 truth table.
pub fn two_of_three_data() -> Dataset {
    let rows: String = boolean_inputs()
        .iter()
        .map(|x| format!("{},{},{},{}\n", x[0], x[1], x[2], u8::from(majority(x))))
        .collect();
    parse_dataset(&format!("x1,x2,x3,y\n{rows}"), &concept_schema()).unwrap()
}

/// Step units on each input, then a step on their sum: exactly
/// "at least two of x1, x2, x3 exceed 0.5".
pub fn two_of_three_net() -> Network {
    let identity = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let sum = Matrix::from_rows(vec![vec![1.0, 1.0, 1.0]]).unwrap();
    Network::new(
        3,
        vec![
            Layer::new(identity, vec![-0.5; 3], Activation::Step),
            Layer::new(sum, vec![-1.5], Activation::Step),
        ],
        vec![],
        Task::Classification {
            labels: vec!["0".into(), "1".into()],
        },
        InputEncoding::new(
            ["x1", "x2", "x3"]
                .iter()
                .map(|n| FeatureEncoding::scaled(n, 0.0, 1.0))
                .collect(),
        ),
    )
    .unwrap()
}

pub fn values(x: &[f64; 3]) -> Vec<Value> {
    x.iter().map(|&v| Value::Real(v)).collect()
}

/// A noise-free synthetic concept on three continuous inputs: the label is
/// 1 when x1 + x2 > 1 or x3 > 0.8. Inputs follow a low-discrepancy
/// sequence so the data needs no RNG.
pub fn concept_data(n: usize) -> Dataset {
    let mut rows = String::from("x1,x2,x3,y\n");
    for i in 0..n {
        let f = |a: f64| ((i as f64 + 1.0) * a).fract();
        let x = [f(0.618_033_988_7), f(0.754_877_666_2), f(0.569_840_290_9)];
        let y = u8::from(x[0] + x[1] > 1.0 || x[2] > 0.8);
        rows.push_str(&format!("{:.4},{:.4},{:.4},{y}\n", x[0], x[1], x[2]));
    }
    parse_dataset(&rows, &concept_schema()).unwrap()
}
