//! Guiding vector fields for path following.
//!
//! The crate builds the field `chi = wedge(grad e) - sum k_i e_i grad e_i` from a set of
//! surface functions whose joint zero set is the desired path, integrates its flow, and
//! provides the numerical machinery used to audit the structure of the domain of
//! attraction: the Lyapunov tube around the path, its exit surface, hitting times, and
//! an explicit chart onto `R^{n-1} x S^1`.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature enables `std` and
//! runs batch operations (grid scans, sampled verification) on rayon.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(a > b)` checks double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chart;
pub mod doa;
pub mod dual;
pub mod dynamics;
pub mod expr;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod scenarios;
pub mod wazewski;

mod par;

pub use chart::{ChartError, ChartPoint, PathAtlas};
pub use doa::{CellLabel, DoaGrid, WindingResult};
pub use dual::DualVector;
pub use dynamics::{Domain, Dynamics, Puncture};
pub use expr::{Expr, ParseError};
pub use field::{GuidingField, SingularReport};
pub use flow::{HitRecord, IntegratorOptions, Termination, Trajectory};
pub use geometry::{GeometryError, SurfaceSystem};
pub use scenarios::{get_scenario, Scenario};
pub use wazewski::{SetClass, SetMembership, VerificationReport, WazewskiConfig};
