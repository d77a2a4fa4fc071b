//! Exact reconstruction of the rank-`μ_A` Frobenius potential attached to an
//! orbifold projective line with orbifold orders `A = (a_1, ..., a_r)`.
//!
//! The potential is determined by the WDVV equations together with a small
//! set of initial conditions (pairing, grading, the cubic terms of each
//! sector, the separation of the degree-zero part, and the degree-one
//! normalisation). Everything is computed over exact rationals.
//!
//! The positions of the orbifold points never enter any formula and are not
//! modelled.

pub mod error;
pub mod format;
pub mod geometry;
pub mod reconstruct;
pub mod series;
pub mod verify;
pub mod wdvv;

pub use error::{
    FormatError, GeometryError, ReconstructError, SeedModeError, SeriesError, VerifyError,
};
pub use geometry::{CoordLabel, Geometry, Multiplet, MultipletClass};
pub use num_rational::BigRational;
pub use reconstruct::{
    build_schedule, reconstruct, reconstruct_with_schedule, rescale_novikov, seed, Candidate,
    ReconstructionTrace, ScheduleEntry, ScheduleKind, SeedMode, TraceEntry,
};
pub use series::{admissible_keys, weighted_degree, ExponentVector, Potential, SeriesKey};
pub use verify::{build_limit_ring, CheckReport, LimitRing};
pub use wdvv::{admissible_targets, residual_scan, wdvv_coefficient, ResidualReport, WdvvQuad};
