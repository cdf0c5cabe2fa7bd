//! Molecular contrastive representation learning toolkit.
//!
//! The pipeline: SMILES text is parsed into attributed molecular graphs
//! ([`chem`]), fingerprinted ([`fingerprint`]) and fragmented ([`fragment`]),
//! augmented into contrastive views ([`augment`]), encoded by a GIN with
//! exact reverse-mode gradients ([`nn`]), and trained against
//! similarity-weighted and fragment-level contrastive losses ([`loss`],
//! [`train`]).

pub mod augment;
pub mod chem;
pub mod fingerprint;
pub mod fragment;
pub mod loss;
pub mod nn;
pub mod train;
pub mod util;
