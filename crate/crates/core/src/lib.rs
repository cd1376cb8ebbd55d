//! Bug report destiny prediction: ingest issue-tracker exports, score
//! descriptions with a sentiment lexicon, cluster them into topics, and train
//! small from-scratch models to predict time-to-resolution, time-to-fix,
//! exact resolution hours, and the final resolution label.

pub mod binio;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod learn;
pub mod pipeline;
pub mod sentiment;
pub mod textprep;
pub mod topics;
