//! Core 3D primitives: vectors, rigid transforms, signed-distance objects,
//! scalar grids, marching cubes, gradients, connected components, sampling.

pub mod grid;
pub mod marching;
pub mod mesh;
pub mod region;
pub mod sampling;
pub mod sdf;
pub mod transform;
pub mod vec3;

pub use grid::{grid_gradient, gradient_magnitude, GridLattice, ScalarGrid3};
pub use marching::marching_cubes;
pub use mesh::TriangleMesh;
pub use region::{connected_components, Region3};
pub use sampling::sample_points;
pub use sdf::{sdf_body, sdf_handle, sdf_normal, sdf_object, ObjectSpec};
pub use transform::RigidTransform;
pub use vec3::{Aabb, Vec3};
