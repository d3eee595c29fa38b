//! Exemplar-guided paraphrase generation with contrastive content/style
//! representation learning.
//!
//! The pipeline: mine a style exemplar for every paraphrase pair
//! ([`exemplar`]), train a dual-encoder/decoder model with a generation loss
//! plus content- and style-contrastive losses ([`model`], [`losses`],
//! [`training`]), and score generations with lexical, syntactic and
//! embedding-quality metrics ([`evaluation`]).

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod exemplar;
pub mod losses;
pub mod model;
pub mod nn;
pub mod synth;
pub mod syntax;
pub mod training;

pub use error::{Error, Result};
