#![no_std]
// NaN-rejecting checks are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constraint;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod judge;
pub mod math;
pub mod optimizer;
pub mod scene;
pub mod task;
pub mod vac;

pub use error::{SceneError, SpecError};
pub use math::{Point2, Vec3};
pub use scene::{AssetRecord, ObjectInstance, Scene};
