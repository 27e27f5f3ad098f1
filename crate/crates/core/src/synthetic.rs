//! Seeded groundtruth scenes: a random symmetric shape seen by random
//! orthographic cameras, with optional Gaussian noise and occlusion.

use std::f64::consts::TAU;

use nalgebra::{Matrix2x3, Matrix2xX, Matrix3xX, Quaternion, UnitQuaternion, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, GroundTruth, KeypointImage, Structure3D};
use crate::rsfm::MIN_VISIBLE_KEYPOINTS;
use crate::single_image::ManhattanSpec;

/// Cameras whose viewing direction has a component below this along any
/// object axis are redrawn when Manhattan axes are requested.
pub const MANHATTAN_VIEW_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneConfig {
    pub n_images: usize,
    pub n_pairs: usize,
    /// Standard deviation of the image noise, as a fraction of the shape
    /// diameter.
    pub noise_sigma: f64,
    /// Independent probability that a keypoint is occluded.
    pub occlusion_rate: f64,
    pub seed: u64,
    /// Build keypoints 1 and 2 so that with the mirror of keypoint 0 they
    /// span the three object axes.
    pub manhattan: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_images: 20,
            n_pairs: 8,
            noise_sigma: 0.0,
            occlusion_rate: 0.0,
            seed: 0,
            manhattan: false,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n_images == 0 {
            return bad("at least one image is required".into());
        }
        if 2 * self.n_pairs < MIN_VISIBLE_KEYPOINTS {
            return bad(format!(
                "{} pairs give fewer than {MIN_VISIBLE_KEYPOINTS} keypoints",
                self.n_pairs
            ));
        }
        if self.manhattan && self.n_pairs < 4 {
            return bad("Manhattan scenes need at least 4 pairs".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.occlusion_rate) {
            return bad(format!(
                "occlusion rate must lie in [0, 1), got {}",
                self.occlusion_rate
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub shape: Structure3D,
    pub poses: Vec<CameraPose>,
    /// Noisy, occluded observations. Occluded coordinates are zero.
    pub images: Vec<KeypointImage>,
    /// Exact projections of every keypoint.
    pub clean: Vec<KeypointImage>,
    pub manhattan: Option<ManhattanSpec>,
    pub diameter: f64,
}

impl Scene {
    pub fn groundtruth(&self) -> GroundTruth {
        GroundTruth {
            shape: self.shape.clone(),
            poses: self.poses.clone(),
        }
    }
}

/// Generates a scene. The same config always yields the same scene.
pub fn gen_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shape = random_shape(&mut rng, cfg.n_pairs, cfg.manhattan);
    let diameter = shape.diameter();
    let s = shape.points();
    let s_dag = shape.mirrored();

    let mut poses = Vec::with_capacity(cfg.n_images);
    let mut images = Vec::with_capacity(cfg.n_images);
    let mut clean = Vec::with_capacity(cfg.n_images);
    for _ in 0..cfg.n_images {
        let r = loop {
            let r = random_camera(&mut rng);
            let d = r.row(0).transpose().cross(&r.row(1).transpose());
            if !cfg.manhattan || d.amin() >= MANHATTAN_VIEW_MARGIN {
                break r;
            }
        };
        let t = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let pose = CameraPose { r, t };
        let y = pose.project(s);
        let y_dag = pose.project(&s_dag);

        // Noise is always drawn so that scenes differing only in sigma share
        // their random numbers.
        let scale = cfg.noise_sigma * diameter;
        let mut noisy = |m: &Matrix2xX<f64>| m.map(|v| v + scale * rng.sample::<f64, _>(StandardNormal));
        let (ny, ny_dag) = (noisy(&y), noisy(&y_dag));

        let (vis, vis_dag) = occlusion_mask(&mut rng, cfg.n_pairs, cfg.occlusion_rate);
        let blank = |m: Matrix2xX<f64>, mask: &[bool]| {
            let mut m = m;
            for (j, v) in mask.iter().enumerate() {
                if !v {
                    m.column_mut(j).fill(0.0);
                }
            }
            m
        };
        images.push(KeypointImage {
            y: blank(ny, &vis),
            y_dag: blank(ny_dag, &vis_dag),
            vis,
            vis_dag,
        });
        clean.push(KeypointImage::fully_visible(y, y_dag)?);
        poses.push(pose);
    }

    Ok(Scene {
        shape,
        poses,
        images,
        clean,
        manhattan: cfg
            .manhattan
            .then(|| ManhattanSpec::new((0, cfg.n_pairs), (1, 0), (2, 0))),
        diameter,
    })
}

fn random_shape(rng: &mut ChaCha8Rng, p: usize, manhattan: bool) -> Structure3D {
    let mut pts = Matrix3xX::from_fn(p, |r, _| {
        if r == 0 {
            rng.random_range(0.2..=1.0)
        } else {
            rng.random_range(-1.0..=1.0)
        }
    });
    if manhattan {
        let mut offset = || {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.random_range(0.3..=1.0)
        };
        let (dy, dz) = (offset(), offset());
        let base = pts.column(0).into_owned();
        pts.set_column(1, &base);
        pts[(1, 1)] += dy;
        pts.set_column(2, &base);
        pts[(2, 2)] += dz;
    }
    Structure3D::new(pts).centered()
}

/// Top two rows of a uniformly distributed rotation (Shoemake's
/// construction from three uniforms).
fn random_camera(rng: &mut ChaCha8Rng) -> Matrix2x3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    let rot = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
    rot.matrix().fixed_rows::<2>(0).into_owned()
}

fn occlusion_mask(rng: &mut ChaCha8Rng, p: usize, rate: f64) -> (Vec<bool>, Vec<bool>) {
    loop {
        let mut draw = || (0..p).map(|_| !rng.random_bool(rate)).collect::<Vec<_>>();
        let (vis, vis_dag) = (draw(), draw());
        let visible = vis.iter().chain(&vis_dag).filter(|v| **v).count();
        if visible >= MIN_VISIBLE_KEYPOINTS {
            return (vis, vis_dag);
        }
    }
}
