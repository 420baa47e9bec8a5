//! Shape completion with objective uncertain regions, at desk scale.
//!
//! Pipeline: synthesize ambiguous partial views of handle-bearing objects,
//! train a small implicit occupancy model (binary and trinary variants),
//! extract occupied and uncertain regions from the predicted field, and
//! evaluate with volumetric, surface, and grasp-risk metrics.

pub mod ambiguity;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod geometry;
pub mod grasping;
pub mod io;
pub mod model;
pub mod rng;
pub mod synthdata;
