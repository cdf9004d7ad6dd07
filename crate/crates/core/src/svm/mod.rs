//! Kernels, the SMO solver, Platt calibration and the one-vs-one ensemble.

pub mod dtw;
pub mod kernel;
pub mod ovo;
pub mod platt;
pub mod smo;

pub use dtw::dtw_distance;
pub use kernel::{kernel_eval, Gram, KernelKind, KernelSpec};
pub use ovo::{posterior_from_pairwise, OvoConfig, OvoEnsemble, PairwiseClassifier, PosteriorVector};
pub use platt::{fit_platt, PlattSigmoid};
pub use smo::{train_binary, BinarySvm, SmoConfig, SmoSolution};
