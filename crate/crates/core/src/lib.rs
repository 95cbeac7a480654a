//! Image-space motion planning for simulated planar robots.
//!
//! The library plans collision-free motions without joint-space models of
//! the world: it samples robot pose images, builds a k-nearest-neighbour
//! graph over them (the visual roadmap), prunes colliding poses by image
//! superposition against an obstacle image, certifies edges with visual
//! local planners, and searches the surviving graph. A simulated planar
//! robot (articulated arm or rigid mobile body), a software renderer, and an
//! exact geometric oracle close the loop for evaluation.
//!
//! The numeric core is generic over the scalar type through [`Scalar`];
//! the pipeline instantiates everything at the crate-root alias [`Real`].

pub mod angles;
pub mod features;
pub mod camera;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod image;
pub mod metrics;
pub mod pca;
pub mod planner;
pub mod raster;
pub mod render;
pub mod roadmap;
pub mod robot;
pub mod scalar;
pub mod scene;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// 8-bit RGB color triple, as written in scene files.
pub type Rgb = [u8; 3];

/// Scalar used by the planning pipeline, datasets, and the CLI.
pub type Real = f64;

/// Crate-root aliases binding the core types to the pipeline scalar.
pub type Point2 = geom::Point2<Real>;
pub type Polygon = geom::Polygon<Real>;
pub type Configuration = robot::Configuration<Real>;
pub type RobotModel = robot::RobotModel<Real>;
pub type ObstacleSet = robot::ObstacleSet<Real>;
pub type Camera = camera::Camera<Real>;
pub type RobotImage = image::RobotImage<Real>;
pub type ForegroundImage = image::ForegroundImage<Real>;
pub type ObstacleImage = image::ObstacleImage<Real>;
pub type SparseSprite = render::SparseSprite<Real>;
