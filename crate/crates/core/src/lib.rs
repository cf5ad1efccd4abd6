//! Gaussian phase-space numerics for a three-mode entanglement-sharing
//! protocol: covariance matrices, symplectic transforms, PPT separability
//! tests, measurement conditioning and the protocol's analytic thresholds.

pub mod error;
pub mod gaussian_ops;
pub mod phase_space;
pub mod protocol;
pub mod sampling;
pub mod separability;

pub use error::{GaussError, Result};
pub use gaussian_ops::{
    apply_symplectic, beam_splitter, condition_on_measurement, embed_vacuum, BsVariant,
    MeasurementKind, MeasurementSpec, SymplecticTransform,
};
pub use phase_space::{
    char_poly_invariants, is_classical, partial_transpose, reduce, symplectic_eigenvalues,
    validate_cm, CmFile, CovarianceMatrix, GaussianState, InvariantTriple, SymplecticForm,
};
pub use protocol::{ProtocolParams, Route, Stage, StageState, ThresholdReport};
pub use sampling::{sample_preparation, SampleBatch};
pub use separability::{
    classify_three_mode, localizable_mu, log_negativity, measurement_scan_oracle, sigma_x,
    two_mode_condition, EntanglementMetrics, ScanGrid, SeparabilityClass, SeparabilityReport,
    SplittingVerdict,
};
