//! Empirical spectral and pair-correlation measures.

mod dos;
mod measure;
mod testfn;

pub use dos::{dos_estimate, dos_estimate_full, dos_from_eigen, sampling_centres, Averaging, DosOptions};
pub use measure::{fmt_float, ids, weak_star_distance, Atom, EmpiricalMeasure, Ids, IDS_TIE_TOL};
pub use testfn::{
    adaptive_simpson, autocorrelation, correlation, pair_measure_apply, periodize, TestFunction, TestKind,
};
