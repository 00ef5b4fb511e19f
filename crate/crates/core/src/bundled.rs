//! Small datasets and networks shipped with the crate.

use std::sync::Arc;

use crate::dataset::{parse_dataset, Dataset, DatasetSchema};

pub const PLAY_TENNIS_CSV: &str = include_str!("../data/play_tennis.csv");
pub const PLAY_TENNIS_SCHEMA: &str = include_str!("../data/play_tennis.schema.toml");
pub const XOR_CSV: &str = include_str!("../data/xor.csv");
pub const XOR_SCHEMA: &str = include_str!("../data/xor.schema.toml");
/// Hand-set 2-2-1 network (hyperbolic hidden, logistic output) computing XOR.
pub const XOR_NETWORK: &str = include_str!("../data/xor.network");

/// Quinlan's 14-day weather table.
pub fn play_tennis() -> Dataset {
    parse_dataset(PLAY_TENNIS_CSV, &play_tennis_schema()).expect("bundled play-tennis data parses")
}

pub fn play_tennis_schema() -> Arc<DatasetSchema> {
    Arc::new(DatasetSchema::from_toml(PLAY_TENNIS_SCHEMA).expect("bundled schema parses"))
}

/// The four XOR truth-table rows.
pub fn xor() -> Dataset {
    let schema = Arc::new(DatasetSchema::from_toml(XOR_SCHEMA).expect("bundled schema parses"));
    parse_dataset(XOR_CSV, &schema).expect("bundled XOR data parses")
}
