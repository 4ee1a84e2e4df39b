//! N-gram frequency tensors for hallucination detection.
//!
//! Texts sharing a label are grouped, each group becomes a sparse order-N
//! count tensor over its own vocabulary, and the tensor's spectrum (matrix
//! SVD, Tucker core magnitudes or CP weights) becomes a fixed-length feature
//! vector for a small MLP classifier. Classical ROUGE-L and n-gram perplexity
//! scorers with Youden-calibrated thresholds serve as baselines.

pub mod baselines;
pub mod classifier;
pub mod corpus;
pub mod decomp;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod ngram;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
