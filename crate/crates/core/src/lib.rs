//! AoI and peak AoI distributions of bufferless and single-buffer queues,
//! computed exactly through Markov fluid queues.
//!
//! ```
//! use aoi_mfq::models::{BufferlessSpec, ModelSpec};
//! use aoi_mfq::{fit_mean_scov, MatrixExpDistribution, PhDistribution};
//!
//! # fn main() -> aoi_mfq::Result<()> {
//! let arrival = PhDistribution::exponential(0.5)?;
//! let service = fit_mean_scov(1.0, 0.5)?; // Erlang(2) with mean 1
//! let model = ModelSpec::Bufferless(BufferlessSpec::new(arrival, service, 1.0)?);
//! let res = model.analyze()?;
//! assert_eq!(format!("{:.4}", res.mean_aoi), "3.1250");
//! assert!(res.aoi.tail(6.0)? < 0.2);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod linalg;
pub mod mfq;
pub mod models;
pub mod phdist;
pub mod policy;
pub mod simulator;
pub mod validation;

pub use error::{Error, Result};
pub use phdist::{fit_mean_scov, me_from_form, MatrixExpDistribution, MeDistribution, PhDistribution};
pub use policy::NumericPolicy;
