//! Non-contextual sarcasm detection for star-rated product reviews.
//!
//! Text is tokenized and tagged, reduced to a fixed 15-feature vector, and
//! classified by a small feed-forward network trained per star category.

pub mod cli;
pub mod corpus;
pub mod features;
pub mod lexicon;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod provenance;
pub mod report;
pub mod rng;
pub mod text;
pub mod train;
