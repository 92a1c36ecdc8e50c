//! Perceptual character distance matrices and network-theoretic tools for
//! comparing them.
//!
//! Human matrices come from grapheme-color annotations scored with CIEDE2000;
//! model matrices come from character embeddings via cosine distance. Both
//! are analyzed with Ward clustering, a weighted clustering coefficient,
//! betweenness centrality, and the cut norm.

pub mod clustering;
pub mod color;
pub mod cutnorm;
pub mod distmat;
pub mod error;
pub mod io;
pub mod netmetrics;
pub mod pipeline;
pub mod simtask;
pub mod synthetic;

pub use error::{Error, Result};
