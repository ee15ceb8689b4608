//! Distortion-aware seeded selection of developable patches on triangle
//! meshes.
//!
//! The core is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases below fix it for common use.

pub mod bench;
pub mod dataset;
pub mod diffparam;
pub mod distortion;
pub mod error;
pub mod mesh;
pub mod obj;
pub mod param;
pub mod postprocess;
pub mod scalar;
pub mod selectors;
pub mod shapes;
pub mod sparse;
pub mod topology;

pub use error::{Result, WandError};
pub use mesh::TriMesh;
pub use param::{Pins, UvMap};
pub use scalar::Real;
pub use topology::{Patch, PatchDomain};

pub type TriMesh64 = mesh::TriMesh<f64>;
pub type TriMesh32 = mesh::TriMesh<f32>;
pub type UvMap64 = param::UvMap<f64>;
pub type UvMap32 = param::UvMap<f32>;
