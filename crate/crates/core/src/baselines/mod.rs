//! Matrix baselines compared against the tensor models.

pub mod nmf;
pub mod pca;

pub use nmf::{NmfDetector, NmfModel};
pub use pca::{PcaDetector, PcaModel};
