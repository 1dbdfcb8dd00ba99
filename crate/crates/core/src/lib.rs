//! Standard cell library extension.
//!
//! A mapped netlist is loaded into an e-graph and saturated with Boolean
//! rewrite rules. The saturated e-graph is flattened into a bipartite,
//! pin-labelled graph, frequent single-output subcircuits are mined from it
//! with DFS-code canonical forms, grouped by Boolean function, and the
//! candidates that shrink the design the most are added to the library.
//!
//! Areas and costs are generic over [`Scalar`]; the aliases at the crate
//! root fix them to `f64`.

pub mod boolfn;
pub mod egraph;
pub mod graphify;
pub mod library;
pub mod miner;
pub mod netlist;
pub mod pipeline;
pub mod scalar;
pub mod selector;
pub mod truth;

pub use library::{parse_library, serialize_library, CellLibrary, CellType};
pub use netlist::{make_adder, parse_netlist, serialize_netlist, Netlist, NetlistBuilder};
pub use scalar::Scalar;
pub use truth::TruthTable;

/// Candidate cell priced in `f64`.
pub type Candidate = selector::CandidateCell<f64>;
pub type AreaModel = selector::AreaModel<f64>;
pub type OpCosts = egraph::OpCosts<f64>;
pub type Composite = egraph::Composite<f64>;
pub type Extracted = egraph::Extracted<f64>;
pub type Evaluation = selector::Evaluation<f64>;
pub type Selection = selector::Selection<f64>;
pub type Extension = pipeline::Extension<f64>;
pub type RunOutput = pipeline::RunOutput<f64>;
