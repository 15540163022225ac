//! On-device metric differential privacy for text.
//!
//! A word is privatized by perturbing its embedding and decoding the result
//! back to the nearest vocabulary word. Two mechanisms share that shape:
//!
//! * **BRR** — binarize the embedding, flip bits by randomized response,
//!   decode with an exact Hamming nearest-neighbor search. Fast and small:
//!   packed 256-bit codes instead of 300 floats per word.
//! * **Madlib** — add heavy-tailed noise (uniform direction, Gamma radius)
//!   to the real vector and decode with exact Euclidean search. The
//!   classical baseline.
//!
//! Both satisfy metric differential privacy: outputs for words `w`, `w'`
//! are `e^{eps * d(w, w')}`-indistinguishable, where `d` is Hamming distance
//! between codes for BRR and Euclidean distance between vectors for Madlib.
//! Because the metrics live on different scales, the same `eps` does not
//! mean the same protection; [`ratio`] computes pairwise-distance aggregates
//! and transfers a budget from one space to the other so comparisons are
//! fair. [`audit`] re-derives output distributions exactly on small
//! instances and verifies the inequality literally, and [`bench`] measures
//! the storage and latency gap between the two pipelines.
//!
//! Everything randomized draws from explicitly seeded, stream-addressed
//! generators ([`rng::RngStream`]); batch operations give bit-identical
//! results sequentially and in parallel. The `parallel` feature (default on)
//! enables rayon data parallelism; disabling it leaves the same API fully
//! sequential.

pub mod audit;
pub mod bench;
pub mod embeddings;
mod error;
pub mod mechanisms;
pub mod nn;
pub mod noise;
pub mod ratio;
pub mod rng;
mod util;

pub use error::{Error, Result};
