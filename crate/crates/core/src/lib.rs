//! Recovery of orthographic cameras and bilaterally symmetric 3D structure
//! from 2D keypoint annotations.
//!
//! Two reconstruction routes are provided:
//!
//! * [`single_image`]: one fully visible image with three declared Manhattan
//!   axes. The camera follows in closed form from the axis slopes and the
//!   structure from the mirror pairs.
//! * [`rsfm`]: several images of same-category instances, with occlusions.
//!   Missing keypoints are completed by rank-3 factorization, the camera and
//!   structure are initialized from two decoupled SVDs, and coordinate
//!   descent refines the full reprojection energy.
//!
//! [`synthetic`] generates groundtruth scenes, [`io`] reads and writes the
//! dataset and result files, and [`pipeline`] ties them together.

pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod rsfm;
pub mod single_image;
pub mod synthetic;

pub use error::{Error, Result};
