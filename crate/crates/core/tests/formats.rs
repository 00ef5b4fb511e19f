mod common;

use xtrepan::network::{load_network, save_network};
use xtrepan::trepan::{extract_tree, TrepanParams};
use xtrepan::{bundled, DatasetSchema, DecisionTree, Error};

#[test]
fn extracted_trees_survive_a_round_trip() {
    let net = common::two_of_three_net();
    let data = common::two_of_three_data();
    let tree = extract_tree(
        &net,
        &data,
        &TrepanParams {
            min_sample: 200,
            ..Default::default()
        },
    )
    .unwrap();
    let text = tree.serialize();
    let back = DecisionTree::deserialize(&text).unwrap();
    assert_eq!(back, tree);
    assert_eq!(back.serialize(), text);
    for x in common::boolean_inputs() {
        let v = common::values(&x);
        assert_eq!(back.classify(&v).unwrap(), tree.classify(&v).unwrap());
    }
}

#[test]
fn networks_survive_a_round_trip() {
    for net in [common::two_of_three_net(), load_network(bundled::XOR_NETWORK).unwrap()] {
        let text = save_network(&net);
        let back = load_network(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(save_network(&back), text);
    }
}

#[test]
fn schemas_survive_a_round_trip() {
    let schema = bundled::play_tennis_schema();
    let back = DatasetSchema::from_toml(&schema.to_toml()).unwrap();
    assert_eq!(&back, schema.as_ref());
}

#[test]
fn damaged_files_are_validation_errors() {
    let tree = DecisionTree::deserialize("{\"root\": 3}").unwrap_err();
    assert!(tree.is_validation(), "{tree:?}");
    let net: Error = load_network("layers 2\n").unwrap_err();
    assert!(net.is_validation(), "{net:?}");
    assert!(DatasetSchema::from_toml("[[attribute]]\nname = 1\n")
        .unwrap_err()
        .is_validation());
}
