//! Feature extraction, classical classifiers and evaluation harness for
//! screening Alzheimer's dementia from picture-description speech.
//!
//! The crate covers three pipelines:
//!
//! * acoustic: an 88-column eGeMAPS table, optionally reduced by recursive
//!   feature elimination ([`selection`]);
//! * linguistic: 13 lexical-richness and part-of-speech features computed from
//!   transcripts ([`lexical`]);
//! * text fusion: 768-d sentence embeddings concatenated with TF-IDF weights
//!   ([`vectorize`]).
//!
//! Each feeds logistic regression, a random forest or a polynomial-kernel SVM
//! ([`learners`]), scored by stratified cross-validation ([`evaluation`]).
//! Batch loops run on rayon when the `parallel` feature is on (see [`exec`]).

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod learners;
pub mod lexical;
pub mod pipeline;
pub mod selection;
pub mod text;
pub mod vectorize;

pub use corpus::{Dataset, Document, DocumentSet, FeatureTable, Label, LabelMap};
pub use error::{Error, ErrorClass, Result};
pub use exec::Exec;
