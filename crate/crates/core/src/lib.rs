//! Unsupervised domain adaptation by compacting the embedding-space class
//! clusters of a source-trained model.
//!
//! The pipeline: pretrain a dense encoder/classifier on the labeled source
//! domain, estimate the class-conditional Gaussian mixture of the source
//! embeddings in closed form, sample a pseudo-dataset of points the
//! classifier is confident about, then fine-tune the encoder so that both
//! source and target embeddings align with the pseudo-dataset under the
//! sliced Wasserstein distance while the classifier keeps fitting the source
//! and pseudo labels.
//!
//! Modules follow the pipeline stages:
//!
//! - [`data`]: synthetic covariate-shift generators and CSV/IDX I/O
//! - [`nn`]: dense networks, exact gradients, Adam, checkpoints
//! - [`swd`]: sliced Wasserstein distance and exact small-instance oracles
//! - [`gmm`]: closed-form mixture estimation and sampling
//! - [`pseudo`]: confident pseudo-dataset generation
//! - [`adapt`]: pretraining and adaptation loops
//! - [`metrics`]: evaluation, bound diagnostics, PCA export
//!
//! All randomness flows through labeled ChaCha streams ([`rng`]); a run seed
//! determines every output bit.

pub mod adapt;
pub mod data;
pub mod error;
pub mod gmm;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod pseudo;
pub mod rng;
pub mod swd;

pub use error::{Error, Result};
