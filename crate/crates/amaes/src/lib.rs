//! Data engine for masked-image-modeling pretraining on brain MRI.
//!
//! The crate covers the full pathway from raw NIfTI volumes to training-ready
//! samples:
//!
//! * [`nifti`] — NIfTI-1 reading and writing (plain or gzip).
//! * [`preprocess`] — reorientation to RAS, isotropic resampling, percentile
//!   clipping, normalization, and foreground cropping.
//! * [`augment`] — the full parameterized 3D augmentation suite, split into
//!   spatial kernels (applied to both input and reconstruction target) and
//!   intensity kernels (applied to the input only).
//! * [`masking`] — subpatch mask generation and application.
//! * [`pipeline`] — patch extraction, pretraining/finetuning sample
//!   construction, manifests, and deterministic epoch iteration.
//! * [`loss`] — masked reconstruction error and Dice overlap.
//! * [`config`] — the file-level configuration surface shared by the CLI.
//!
//! Everything downstream of a seed is deterministic: a sample is a pure
//! function of `(seed, volume id, epoch, config)`, independent of worker
//! count and iteration order.

pub mod augment;
pub mod config;
mod error;
mod grid;
pub mod loss;
pub mod masking;
pub mod nifti;
pub mod pipeline;
pub mod preprocess;
pub mod volume;

pub use error::{Error, Result};
pub use grid::Grid;
