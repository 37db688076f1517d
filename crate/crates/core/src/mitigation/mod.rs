//! Error mitigation: readout unfolding, symmetry postselection, tapering and extrapolation.

pub mod extrapolate;
pub mod postselect;
pub mod readout;
pub mod taper;

pub use extrapolate::{
    extrapolate, ExtrapolationKind, ExtrapolationPolicy, GuardFailure, GuardReport, GuardStatus,
};
pub use postselect::{
    postselect, postselect_probabilities, staircase_transform, ParityRule, Staircase,
};
pub use readout::{
    calibrate_readout, project_simplex, unfold_counts, unfold_frequencies, CalibrationMatrix,
};
pub use taper::{sector_states, taper_parity_custom, taper_standard, TaperKind, TaperMap};
