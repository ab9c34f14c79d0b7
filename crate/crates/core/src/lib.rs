//! Exact probabilistic inference over sum-product expressions.
//!
//! Programs in a small imperative language are translated into a DAG of sum,
//! product and leaf nodes ([`spe::SpeGraph`]). Probability, density, sampling
//! and conditioning queries then run in time linear in the graph size.
//!
//! The modules build on each other bottom-up: [`outcomes`] (sets of reals and
//! strings), [`transforms`] (univariate numeric transforms and their
//! preimages), [`events`], [`distributions`], [`spe`], [`inference`] and
//! [`translator`].

pub mod distributions;
pub mod error;
pub mod events;
pub mod format;
pub mod inference;
pub mod outcomes;
pub mod poly;
mod serde_ext;
pub mod spe;
pub mod transforms;
pub mod translator;
mod var;

pub use error::{Error, Result};
pub use var::Var;
