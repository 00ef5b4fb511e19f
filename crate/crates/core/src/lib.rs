//! Decision-tree extraction from trained feed-forward neural networks.
//!
//! The crate extracts m-of-n decision trees from multilayer perceptrons and
//! generalized feed-forward networks by querying the network as an oracle,
//! induces C4.5-style baseline trees from data, and scores both kinds of
//! tree for accuracy, kappa, fidelity to the network and size.
//!
//! ```
//! use xtrepan::{bundled, c45};
//!
//! let data = bundled::play_tennis();
//! let params = c45::C45Params { use_gain_ratio: false, ..Default::default() };
//! let tree = c45::induce_c45(&data, &params).unwrap();
//! assert_eq!(tree.complexity().leaves, 5);
//! ```

pub mod bundled;
pub mod c45;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod network;
pub mod oracle;
pub mod trainer;
pub mod tree;
pub mod trepan;

pub use dataset::{Dataset, DatasetSchema, Instance, Target, Value};
pub use error::{Error, Result};
pub use network::{Activation, Network};
pub use tree::{DecisionTree, Literal, MofNTest};
