//! Graph collaborative filtering where users have no embedding of their own.
//!
//! A user's representation is assembled from two social signals: the mean
//! of learnable embeddings of the communities it belongs to, and the items
//! its friends interacted with, weighted by behavioural similarity. A
//! per-user gate blends the two before LightGCN propagation over the
//! user-item graph. The only trainable state is the community embeddings,
//! the item embeddings and the gate, so the user-side parameter count does
//! not grow with the number of users.

pub mod community;
pub mod error;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod model;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use exec::Parallelism;
