//! Measures how news sources use emotional and biased vocabulary around
//! controversial versus non-controversial topics, and scores topics on a
//! 0 to 1 controversy scale from those measurements.

pub mod corpus;
pub mod text;
pub mod lexicons;
pub mod scoring;
pub mod annotation;
pub mod stats;
pub mod classifier;
pub mod synth;
