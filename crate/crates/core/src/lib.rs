//! Empirical regularity oracles and certificate calculus for set-valued maps
//! on `ℝⁿ`.
//!
//! The crate is organized bottom-up:
//!
//! * [`spaces`]: norms, balls, grids and lattices.
//! * [`maps`]: catalog set-valued maps with exact image sets.
//! * [`moduli`]: brute-force estimators of subregularity, calmness and
//!   Lipschitz moduli; the ground truth every certificate is checked against.
//! * [`certificates`]: typed regularity claims and the rules that propagate
//!   them under single- and set-valued perturbations.
//! * [`uniformize`]: per-point certificates on a sampled compact set turned
//!   into one uniform certificate through a finite subcover.
//! * [`pathfollow`]: warm-started solves of `p(t) ∈ f(t, x) + F(x)` along a
//!   parameter grid, certified with [`uniformize`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod maps;
pub mod moduli;
pub mod pathfollow;
pub mod report;
pub mod serde_ext;
pub mod spaces;
pub mod uniformize;

pub use maps::{
    Body, ImageSet, MapError, ParamRule, ParametricSingleValuedMap, Rule, SetValuedMap,
    SingleValuedMap,
};
pub use spaces::{Ball, BallLattice, Grid, Norm, Point, Sampling, Space, SpaceError};
pub use moduli::{EstimateKind, ModuliError, ModulusEstimate, Oracle, Sweep, Witness};
pub use certificates::{
    CalmnessCert, CertError, Certificate, IsolatedSelectionCert, Provenance, StrongSubregAroundCert,
    StrongSubregAtCert, SubregAtCert, ValidationReport,
};
pub use uniformize::{
    CompactSample, Family, LocalUniformRecord, SamplePoint, UniformAtCert, UniformCert, UniformizeError,
    UniformizeOptions,
};
pub use pathfollow::{ParametricGE, PathError, PathRule, Trajectory, TrajectoryCertificate, TrajectoryNode};
