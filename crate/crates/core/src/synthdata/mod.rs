//! Synthetic partial-view data generation: parametric object sampling,
//! sphere-traced depth rendering, sensor-style augmentation, and query
//! labeling with train/test splits.

pub mod augment;
pub mod camera;
pub mod dataset;
pub mod render;

pub use augment::{augment, cosine_to_camera};
pub use camera::{sample_camera, CameraModel, CameraSampling};
pub use dataset::{
    generate_sample, label_point, make_query_set, posed_bbox, sample_object_spec, sample_pose,
    scale_object, split_specs, sweep_lattice, DatasetSample, GenParams, QuerySet, Split,
    SplitSets, LABEL_FREE, LABEL_OCCUPIED, LABEL_UNCERTAIN,
};
pub use render::{
    project_to_cloud, render, to_robot_world, trace_ray, DepthNormalImage, Frame,
    OrientedPointCloud,
};
