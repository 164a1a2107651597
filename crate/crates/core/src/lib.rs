//! Collaborative filtering with immune-network neighbourhood selection.
//!
//! The engine selects recommendation neighbourhoods two ways: a Simple
//! Pearson top-k baseline, and an idiotypic artificial immune network in
//! which reviewer "antibodies" gain concentration from matching the test
//! user ("antigen") and lose it to mutual suppression and decay. Surviving
//! antibodies become neighbours, weighted by correlation times
//! concentration. The crate also ships the full evaluation harness:
//! leave-one-out prediction trials, parameter sweeps, neighbourhood-swap
//! experiments, and the nonparametric statistics used to compare them.

pub mod ais;
pub mod csvio;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod harness;
pub mod neighborhood;
pub mod normal;
pub mod predictor;
pub mod similarity;

pub use ais::{AisParams, AisState, Antibody};
pub use dataset::{Dataset, MovieId, Score, TestCase, UserId, UserProfile, Vote, VoteFormat};
pub use error::{Error, Result};
pub use eval::{PredictionRecord, Summary, WilcoxonResult};
pub use harness::{Algo, ExperimentConfig, SweepParam};
pub use neighborhood::{Characteristics, Method, NeighborEntry, Neighborhood, Weighting};
pub use predictor::{Prediction, PredictionOptions, Recommendation};
pub use similarity::SimilarityParams;
