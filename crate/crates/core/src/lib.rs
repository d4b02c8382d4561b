//! Rate-distortion-cost regions for three-node cascade source coding with an
//! action-controlled ("vending machine") side-information channel.
//!
//! The crate evaluates and optimizes the single-letter achievable regions of
//! two models:
//!
//! - the **cascade** model: Node 1 observes a source pair `(X, Y)` and talks
//!   to Node 2 at rate `R1`; Node 2 (which also sees `Y`) talks to Node 3 at
//!   rate `R2`; Node 3 buys its side information `Z` through a cost-bearing
//!   action channel `p(z|a, y)` and reconstructs via a symbol-by-symbol
//!   decoder.
//! - the **cascade-broadcast** model with a common-reconstruction constraint:
//!   Node 1 holds `X`, a broadcast link of rate `Rb` reaches Nodes 2 and 3,
//!   the action channel `p(y|a, x)` sits at Node 2, and both reconstructions
//!   are required to be computable from the source alone.
//!
//! Supporting machinery: an exact discrete probability engine over named
//! axes ([`prob`]), exact-rational Fourier-Motzkin elimination in the
//! joint-entropy coordinate basis ([`fm`]), a multi-start projected local
//! search over products of probability simplices ([`search`]), and a
//! brute-force lattice oracle with deterministic enumeration ([`oracle`]).

pub mod broadcast;
pub mod cascade;
pub mod cli;
pub mod config;
pub mod fm;
pub mod models;
pub mod oracle;
pub mod prob;
pub mod rng;
pub mod search;
pub mod suite;

pub use models::{BroadcastCRModel, CascadeVendingModel, ConstraintBudget, CostTable, DistortionTable};
pub use prob::{CondKernel, FiniteAlphabet, JointPmf};
