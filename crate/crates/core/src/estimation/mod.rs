//! Least-squares fitting and the analysis pipelines: peak finding and scan
//! alignment, Voigt multiplets, polarization contrasts, joint fine-structure
//! fits, three-level kinetics and threshold readout fidelity.

mod contrast;
mod joint;
mod kinetics;
mod nls;
mod oscillation;
mod readout;
mod report;
mod spectrum;
mod voigt_fit;

pub use contrast::{extract_contrasts, ContrastEstimate, WavePlateSweep, MIN_ANGLES};
pub use joint::{
    delta_spin_exclusion, joint_finestructure_fit, predict_observables, ExclusionEntry, ExclusionReport, FitMethod,
    JointFit, JointFitOptions, Measured, NvObservables,
};
pub use kinetics::{fit_charge_cycling, CyclingFit, CyclingFitMode};
pub use nls::{fit_named, least_squares, nls_fit, FitData, FitResult, FitSettings};
pub use oscillation::{local_maxima, oscillation_frequency};
pub use readout::{
    poisson_cdf_below, poisson_error_rates, poisson_tail_at_or_above, readout_fidelity, threshold_classify,
    CountHistogram, Estimate, ReadoutFidelity, SpinCall,
};
pub use report::{FitReport, ReportRow};
pub use spectrum::{
    add_poisson_noise, align_and_sum, detect_peaks, find_peaks, median_absolute_deviation, synthesize_spectrum,
    uniform_grid, AlignedSum, LineShape, Peak, Spectrum, SpectrumMeta, SMOOTHING_SIGMA_BINS,
};
pub use voigt_fit::{fit_voigt_multiplet, multiplet_model, MultipletFit, VoigtPeak, TRANSFORM_LIMIT_MHZ};
