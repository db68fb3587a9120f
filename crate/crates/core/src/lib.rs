//! Simulation and analysis of bidirectional quantum secure direct
//! communication over entanglement swapping between GHZ states.
//!
//! The crate is layered bottom-up:
//!
//! - [`state`]: a small dense state-vector engine with Z, X, Bell and GHZ
//!   basis measurements.
//! - [`codebook`]: GHZ/Bell labels, the eight composite encodings `U_0 … U_7`
//!   and the GHZ transformation table.
//! - [`swap`]: Bell-measurement statistics of swapping two GHZ triples and the
//!   eight outcome collections.
//! - [`protocol`]: the full seven-step session with its three eavesdropping
//!   checks.
//! - [`adversary`]: intercept-resend, measure-resend and entangle-measure
//!   attacks, and Monte Carlo detection estimates.
//! - [`analysis`]: entropies, announcement leakage, efficiency and the
//!   protocol comparison table.
//!
//! ```
//! use bqsdc::codebook::{transform_label, CompositeOp, GhzLabel};
//! use bqsdc::swap::collection_table;
//!
//! let psi0: GhzLabel = "psi0".parse().unwrap();
//! let alice = transform_label(psi0, "U2".parse::<CompositeOp>().unwrap());
//! let bob = transform_label(psi0, "U5".parse::<CompositeOp>().unwrap());
//! assert_eq!(collection_table(alice, bob).to_string(), "c7");
//! ```

pub mod adversary;
pub mod analysis;
pub mod codebook;
pub mod error;
pub mod protocol;
pub mod published;
pub mod rng;
pub mod state;
pub mod swap;

pub use error::{AnalysisError, AttackError, LabelError, ProtocolError, StateError};
pub use rng::StreamRng;
pub use state::StateVector;

/// The guide's chapters, compiled as doctests so their snippets stay correct.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    pub mod states {}
    #[doc = include_str!("../../../book/src/codebook.md")]
    pub mod codebook {}
    #[doc = include_str!("../../../book/src/swapping.md")]
    pub mod swapping {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    pub mod protocol {}
    #[doc = include_str!("../../../book/src/eavesdropping.md")]
    pub mod eavesdropping {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    pub mod analysis {}
}
