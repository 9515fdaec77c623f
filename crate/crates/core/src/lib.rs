//! Dirichlet-Multinomial models of noisy group labelling and the efficiency
//! of logistic regression trained on aggregated votes.

pub mod dataio;
pub mod diagnostics;
pub mod efficiency;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod logreg;
pub mod models;
pub mod overdispersion;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use models::{GroupModel, LogisticModel, ProbabilityVector, VoteCounts};
