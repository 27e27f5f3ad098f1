//! Single-image reconstruction: the camera from three Manhattan axis slopes,
//! then the symmetric structure in closed form.
//!
//! Each Manhattan axis `k` is declared by two keypoints whose 3D positions
//! differ only along object axis `k`. Its image displacement is then
//! proportional to column `k` of the camera, so its slope gives
//! `μ_k = r_{2k} / r_{1k}`. Together with row orthonormality this is a
//! linear system in the squares `r_{1k}²`.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3xX, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{
    centralize, orthogonality_violation, orthonormalize_rows, CameraPose, KeypointImage,
    Structure3D, ORTHONORMAL_TOL,
};

/// Three keypoint-index pairs into the concatenated `[Y, Y†]` columns, one
/// per object axis (x = symmetry normal, then y, z).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ManhattanSpec {
    pub axes: [(usize, usize); 3],
}

impl ManhattanSpec {
    pub fn new(axis_x: (usize, usize), axis_y: (usize, usize), axis_z: (usize, usize)) -> Self {
        Self {
            axes: [axis_x, axis_y, axis_z],
        }
    }

    pub fn validate(&self, n_pairs: usize) -> Result<()> {
        for (k, &(a, b)) in self.axes.iter().enumerate() {
            if a >= 2 * n_pairs || b >= 2 * n_pairs {
                return Err(Error::InvalidInput(format!(
                    "Manhattan axis {k} endpoint out of range for {n_pairs} pairs"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!(
                    "Manhattan axis {k} uses the same keypoint twice"
                )));
            }
        }
        Ok(())
    }
}

/// Image slopes of the three projected axes, measured in a working frame
/// rotated by `frame_rotation` radians from the image frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeTriple {
    pub mu: [f64; 3],
    pub frame_rotation: f64,
}

impl SlopeTriple {
    /// Smallest pairwise slope gap.
    pub fn min_gap(&self) -> f64 {
        let [a, b, c] = self.mu;
        (a - b).abs().min((b - c).abs()).min((c - a).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleImageConfig {
    /// Relative size below which an axis displacement (or its horizontal
    /// component) counts as zero.
    pub axis_eps: f64,
    /// Minimum gap between any two slopes.
    pub slope_tol: f64,
    /// Largest accepted condition number of the camera's `yz` block.
    pub max_yz_condition: f64,
}

impl Default for SingleImageConfig {
    fn default() -> Self {
        Self {
            axis_eps: 1e-6,
            slope_tol: 1e-9,
            max_yz_condition: 1e8,
        }
    }
}

// Candidate working-frame rotations for near-vertical axes. Each axis can
// block at most one candidate, so four always suffice.
const FRAME_ROTATIONS_DEG: [f64; 4] = [45.0, 30.0, 60.0, 15.0];

fn frame(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Slopes of the three declared axes.
///
/// If any axis is (nearly) vertical the whole image is rotated into a working
/// frame where none is, and the rotation is recorded.
pub fn slopes_from_axes(
    img: &KeypointImage,
    spec: &ManhattanSpec,
    cfg: &SingleImageConfig,
) -> Result<SlopeTriple> {
    spec.validate(img.n_pairs())?;
    for &(a, b) in &spec.axes {
        if !img.is_visible(a) || !img.is_visible(b) {
            return Err(Error::InvalidInput(
                "Manhattan axis endpoints must be visible".into(),
            ));
        }
    }
    let deltas: Vec<Vector2<f64>> = spec
        .axes
        .iter()
        .map(|&(a, b)| img.keypoint(a) - img.keypoint(b))
        .collect();

    let scale = bounding_box_diagonal(img);
    for (k, d) in deltas.iter().enumerate() {
        if !(d.norm() > cfg.axis_eps * scale) {
            return Err(Error::AxisDegenerate { axis: k });
        }
    }

    let near_vertical =
        |ds: &[Vector2<f64>]| ds.iter().any(|d| d.x.abs() < cfg.axis_eps * d.x.abs().max(d.y.abs()));
    let mut frame_rotation = 0.0;
    let mut working = deltas.clone();
    if near_vertical(&deltas) {
        let found = FRAME_ROTATIONS_DEG.iter().find_map(|deg| {
            let g = frame(deg.to_radians());
            let rotated: Vec<_> = deltas.iter().map(|d| g * d).collect();
            (!near_vertical(&rotated)).then_some((deg.to_radians(), rotated))
        });
        let (angle, rotated) = found.expect("some candidate frame has no vertical axis");
        frame_rotation = angle;
        working = rotated;
    }

    let slopes = SlopeTriple {
        mu: [
            working[0].y / working[0].x,
            working[1].y / working[1].x,
            working[2].y / working[2].x,
        ],
        frame_rotation,
    };
    if !(slopes.min_gap() > cfg.slope_tol) {
        return Err(Error::SlopeCoincidence { mu: slopes.mu });
    }
    Ok(slopes)
}

fn bounding_box_diagonal(img: &KeypointImage) -> f64 {
    let mut lo = Vector2::repeat(f64::INFINITY);
    let mut hi = Vector2::repeat(f64::NEG_INFINITY);
    for i in 0..2 * img.n_pairs() {
        if img.is_visible(i) {
            let k = img.keypoint(i);
            lo = lo.inf(&k);
            hi = hi.sup(&k);
        }
    }
    if lo.x.is_finite() {
        (hi - lo).norm()
    } else {
        0.0
    }
}

/// The 3×3 coefficient matrix of the orthonormality system in `r_{1k}²`.
pub fn slope_system(mu: &[f64; 3]) -> Matrix3<f64> {
    let [a, b, c] = *mu;
    Matrix3::new(1.0, 1.0, 1.0, a * a, b * b, c * c, a, b, c)
}

/// Sign patterns for the camera columns, canonical (all positive) first.
const SIGN_FAMILY: [[f64; 3]; 8] = [
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

/// Solves for the camera from the slopes. Returns all eight column-sign
/// choices; the first has `r_{1k} ≥ 0` for every column in the working frame.
pub fn camera_from_slopes(slopes: &SlopeTriple, cfg: &SingleImageConfig) -> Result<Vec<CameraPose>> {
    if !(slopes.min_gap() > cfg.slope_tol) {
        return Err(Error::SlopeCoincidence { mu: slopes.mu });
    }
    let squares = slope_system(&slopes.mu)
        .lu()
        .solve(&Vector3::new(1.0, 1.0, 0.0))
        .ok_or(Error::SlopeCoincidence { mu: slopes.mu })?;
    let mut r_w = Matrix2x3::zeros();
    for k in 0..3 {
        let sq = squares[k];
        if sq < -1e-8 {
            return Err(Error::NegativeSquare { value: sq });
        }
        let r1 = sq.max(0.0).sqrt();
        r_w[(0, k)] = r1;
        r_w[(1, k)] = slopes.mu[k] * r1;
    }
    let base = frame(slopes.frame_rotation).transpose() * r_w;

    SIGN_FAMILY
        .iter()
        .map(|signs| {
            let mut r = base;
            for k in 0..3 {
                r.column_mut(k).scale_mut(signs[k]);
            }
            if orthogonality_violation(&r) > ORTHONORMAL_TOL {
                r = orthonormalize_rows(&r)?;
            }
            Ok(CameraPose {
                r,
                t: Vector2::zeros(),
            })
        })
        .collect()
}

/// Closed-form symmetric structure from one fully visible image and a known
/// camera.
///
/// With `L = (Y − Y†)/2` and `M = (Y + Y†)/2` (after removing `pose.t`), each
/// `L` column is `x_p` times the camera's first column, and each `M` column
/// is the `yz` block times `(y_p, z_p)`. The mirror offset `x_p` is therefore
/// over-determined and solved by least squares; `(y_p, z_p)` by inverting the
/// 2×2 block.
pub fn structure_from_symmetry(
    img: &KeypointImage,
    pose: &CameraPose,
    cfg: &SingleImageConfig,
) -> Result<Structure3D> {
    if !img.all_visible() {
        return Err(Error::InvalidInput(
            "single-image structure needs every keypoint visible".into(),
        ));
    }
    let r = &pose.r;
    let c1 = Vector2::new(r[(0, 0)], r[(1, 0)]);
    let c1_sq = c1.norm_squared();
    if c1_sq < 1e-12 {
        return Err(Error::SymmetryAxisAlongView);
    }
    let yz = Matrix2::new(r[(0, 1)], r[(0, 2)], r[(1, 1)], r[(1, 2)]);
    let sv = yz.singular_values();
    let cond = if sv[1] > 0.0 { sv[0] / sv[1] } else { f64::INFINITY };
    if !(cond < cfg.max_yz_condition) {
        return Err(Error::YZSingular { cond });
    }
    let yz_inv = yz.try_inverse().ok_or(Error::YZSingular { cond })?;

    let p = img.n_pairs();
    let mut pts = Matrix3xX::zeros(p);
    for i in 0..p {
        let y = img.y.column(i) - pose.t;
        let y_dag = img.y_dag.column(i) - pose.t;
        let l = (y - y_dag) * 0.5;
        let m = (y + y_dag) * 0.5;
        pts[(0, i)] = c1.dot(&l) / c1_sq;
        let depth = yz_inv * m;
        pts[(1, i)] = depth.x;
        pts[(2, i)] = depth.y;
    }
    Ok(Structure3D::new(pts))
}

/// Output of [`reconstruct_single`].
#[derive(Clone, Debug, PartialEq)]
pub struct SingleImageReconstruction {
    /// Canonical camera (first member of the sign family).
    pub pose: CameraPose,
    pub shape: Structure3D,
    pub slopes: SlopeTriple,
    /// Every sign choice with its structure, canonical first.
    pub family: Vec<(CameraPose, Structure3D)>,
}

/// Centralizes, reads the axis slopes, solves the camera and reconstructs the
/// structure for every sign choice.
pub fn reconstruct_single(
    img: &KeypointImage,
    spec: &ManhattanSpec,
    cfg: &SingleImageConfig,
) -> Result<SingleImageReconstruction> {
    if !img.all_visible() {
        return Err(Error::InvalidInput(
            "single-image reconstruction needs every keypoint visible".into(),
        ));
    }
    let (centered, t) = centralize(img)?;
    let slopes = slopes_from_axes(&centered, spec, cfg)?;
    let family = camera_from_slopes(&slopes, cfg)?
        .into_iter()
        .map(|mut pose| {
            pose.t = t;
            let shape = structure_from_symmetry(img, &pose, cfg)?;
            Ok((pose, shape))
        })
        .collect::<Result<Vec<_>>>()?;
    let (pose, shape) = family[0].clone();
    Ok(SingleImageReconstruction {
        pose,
        shape,
        slopes,
        family,
    })
}
