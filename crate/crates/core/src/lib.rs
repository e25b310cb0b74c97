//! Numerical free probability for linear forms in free random variables.
//!
//! * [`cumulants`]: moments and free cumulants, in both directions.
//! * [`measures`]: atomic and gridded probability measures.
//! * [`transforms`]: Cauchy and Voiculescu transforms, and recovery of a
//!   density from a polynomial Voiculescu transform.
//! * [`admissibility`]: whether a finite sequence is a free cumulant
//!   sequence, and the closed-form region for `(0, 1, k3, k4)`.
//! * [`linear_forms`]: freeness of `sum a_j T_j` and `sum b_j T_j`.
//! * [`characterization`]: the exponential sums `Lambda1`, `Lambda2` and
//!   the semicircular characterization conditions.
//! * [`convolution`]: free additive convolution by subordination.

// `!(x > 0.0)` rejects NaN too; index loops mirror the recursions they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admissibility;
pub mod characterization;
pub mod convolution;
pub mod cumulants;
pub mod error;
pub mod linear_forms;
pub mod measures;
pub mod poly;
pub mod transforms;

pub use admissibility::{
    is_admissible, region_d_boundary, region_d_membership, AdmissibilityConfig, AdmissibilityVerdict, OmegaGrid,
    Status, UpperBranch,
};
pub use characterization::{classify, gallery_phi, identity_residual, ConditionVerdict, GalleryCase, GalleryPhi};
pub use convolution::{free_convolve, subordination_solve, ConvolutionConfig, SubordinationPoint};
pub use cumulants::{cumulants_to_moments, moments_to_cumulants, CumulantSeq};
pub use error::{Error, Result};
pub use linear_forms::{check_freeness, construct_free_family, mixed_cumulant, CoeffPair, FreenessReport, SearchConfig};
pub use measures::{AtomicMeasure, GridDensity, Measure};
pub use transforms::{recover_measure, GridSpec, PhiPoly, Recovery, RecoveryConfig};

pub use num_complex::Complex64;
