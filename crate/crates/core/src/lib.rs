//! Ricci curvature of left-invariant metrics on nilpotent Lie groups.
//!
//! A nilpotent Lie algebra is represented by its structure constants in a
//! fixed basis. The crate computes the Ricci endomorphism of any metric
//! (parametrised by an invertible frame), enumerates the complete set of
//! signatures the Ricci curvature can attain, and constructs a metric
//! realising any admissible signature through an orbit-norm minimisation
//! followed by a Newton-targeted perturbation.

pub mod algebra;
pub mod catalog;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod invariants;
pub mod linalg;
pub mod rational;
pub mod realize;

pub use algebra::{act, MetricFrame, SkewTensor, StructureTensor, Subspace};
pub use catalog::{
    builtin, builtin_names, load, sample_metrics, sample_metrics_with_tol, save, CatalogEntry,
    SampleReport,
};
pub use curvature::{
    infinitesimal_action, l_gram_matrix, moment_pairing, pq_forms, ricci, ricci_derivative,
    RicciEndomorphism, SemiDefForm,
};
pub use error::Error;
pub use flow::{
    minimize, standard_decomposition, verify_kernel, FlowOptions, FlowReport, SubgroupSpec,
};
pub use invariants::{
    attainable_set, central_defect, conjectured_set, profile, signature, signature_lower_bounds,
    Profile, Signature, SignatureBounds,
};
pub use realize::{
    check_s_transversality, homotopy_signature_check, realize, schur_reduce, DecompositionFrame,
    RealizationResult, RealizeOptions,
};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
