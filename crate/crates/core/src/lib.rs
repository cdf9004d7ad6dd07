//! Activity recognition from Wi-Fi channel state information.
//!
//! Two feature streams are computed from a CSI trace: a phase stream
//! (calibrated inter-antenna phase difference, summarised by singular values)
//! and an amplitude stream (WMA-smoothed first principal component, Haar
//! approximation coefficients). Each feeds a one-vs-one SVM ensemble and the
//! two posterior vectors are combined by a weighted sum.

pub mod amplitude;
pub mod csi;
pub mod error;
pub mod fusion;
pub mod ingest;
pub mod phase;
pub mod svm;
pub mod synth;

pub use csi::{ActivityLabel, ComplexSample, CsiFrame, CsiTrace, SubcarrierIndexSet};
pub use error::{Error, ErrorClass, Result};
pub use svm::PosteriorVector;
