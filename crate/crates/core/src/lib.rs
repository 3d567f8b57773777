//! Persian tweet sentiment classification.
//!
//! The crate covers the whole experiment path: loading labeled tweets
//! ([`corpus`]), Persian text cleaning ([`preprocess`]), bag-of-words and
//! subword-embedding features ([`vectorize`]), one-vs-rest KNN / linear SVM /
//! AdaBoost models ([`classify`]) and accuracy, macro recall and macro F1
//! reporting ([`evaluate`]). Every stochastic step is seeded through [`rng`].

pub mod classify;
pub mod container;
pub mod corpus;
pub mod evaluate;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod vectorize;
