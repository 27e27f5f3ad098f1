//! Rotation and shape errors against groundtruth, with Procrustes gauge
//! alignment.

use log::warn;
use nalgebra::{Matrix2x3, Matrix3, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};

use super::{CameraPose, Structure3D};
use crate::error::{Error, Result};

/// Result of [`procrustes_align`].
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    /// Proper rotation `Q` (det = +1) minimizing `‖Q·A − B‖_F`.
    pub rotation: Matrix3<f64>,
    /// Set when `B·Aᵀ` has rank below 2 and the rotation is not unique.
    pub rank_deficient: bool,
}

/// Rotation `Q` with `det(Q) = +1` minimizing `‖Q·A − B‖_F`.
///
/// Reflections are excluded: when the unconstrained optimum is improper the
/// singular vector of the smallest singular value is flipped.
pub fn procrustes_align(a: &Matrix3xX<f64>, b: &Matrix3xX<f64>) -> Result<Alignment> {
    if a.ncols() != b.ncols() {
        return Err(Error::LengthMismatch {
            what: "procrustes point sets",
            left: a.ncols(),
            right: b.ncols(),
        });
    }
    if a.ncols() < 3 {
        return Err(Error::InvalidInput(format!(
            "procrustes alignment needs at least 3 points, got {}",
            a.ncols()
        )));
    }
    let cross = b * a.transpose();
    let svd = crate::linalg::svd(&cross)?;
    let u: Matrix3<f64> = svd.u.fixed_view::<3, 3>(0, 0).into_owned();
    let v_t: Matrix3<f64> = svd.v_t.fixed_view::<3, 3>(0, 0).into_owned();
    let s = svd.s;
    let rank_deficient = s[1] <= 1e-12 * s[0].max(f64::MIN_POSITIVE);
    if rank_deficient {
        warn!("procrustes: cross-covariance has rank < 2, alignment is not unique");
    }
    let d = (u * v_t).determinant().signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    Ok(Alignment {
        rotation,
        rank_deficient,
    })
}

/// Mean Frobenius distance between `R_est·Qᵀ` and the groundtruth cameras.
pub fn rotation_error(est: &[CameraPose], gt: &[CameraPose], q: &Matrix3<f64>) -> Result<f64> {
    let per = per_image_rotation_error(est.iter().map(|p| &p.r), gt.iter().map(|p| &p.r), q, est.len(), gt.len())?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

fn per_image_rotation_error<'a>(
    est: impl Iterator<Item = &'a Matrix2x3<f64>>,
    gt: impl Iterator<Item = &'a Matrix2x3<f64>>,
    q: &Matrix3<f64>,
    n_est: usize,
    n_gt: usize,
) -> Result<Vec<f64>> {
    if n_est != n_gt {
        return Err(Error::LengthMismatch {
            what: "camera lists",
            left: n_est,
            right: n_gt,
        });
    }
    if n_est == 0 {
        return Err(Error::InvalidInput("no cameras to compare".into()));
    }
    Ok(est
        .zip(gt)
        .map(|(r, r_gt)| (r * q.transpose() - r_gt).norm())
        .collect())
}

/// Mean per-point distance between the estimated shape, rotated by `Q`, and
/// the groundtruth, both centred and scale-normalized.
///
/// `Q` is applied before normalization: the per-axis spread used for
/// normalization depends on orientation, so both shapes must share a frame.
pub fn shape_error(est: &Structure3D, gt: &Structure3D, q: &Matrix3<f64>) -> Result<f64> {
    if est.n_pairs() != gt.n_pairs() {
        return Err(Error::LengthMismatch {
            what: "shape pair counts",
            left: est.n_pairs(),
            right: gt.n_pairs(),
        });
    }
    let aligned = normalize_full(&center_full(&(q * est.full())))?;
    let reference = normalize_full(&center_full(&gt.full()))?;
    let n = aligned.ncols() as f64;
    Ok((aligned - reference)
        .column_iter()
        .map(|c| c.norm())
        .sum::<f64>()
        / n)
}

pub(crate) fn center_full(full: &Matrix3xX<f64>) -> Matrix3xX<f64> {
    let mean = full.column_mean();
    let mut out = full.clone();
    for mut c in out.column_iter_mut() {
        c -= &mean;
    }
    out
}

pub(crate) fn normalize_full(full: &Matrix3xX<f64>) -> Result<Matrix3xX<f64>> {
    let n = full.ncols() as f64;
    let spread: f64 = full
        .row_iter()
        .map(|row| {
            let mean = row.sum() / n;
            (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum();
    if spread < 1e-12 {
        return Err(Error::DegenerateShape(spread));
    }
    Ok(full * (3.0 / spread))
}

/// Groundtruth for one reconstruction: the category shape plus one camera
/// per image, in image order.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub shape: Structure3D,
    pub poses: Vec<CameraPose>,
}

/// Rotation and shape errors of a reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "e_R")]
    pub e_r: f64,
    #[serde(rename = "e_S")]
    pub e_s: f64,
    pub per_image_rotation_error: Vec<f64>,
    pub aligned: bool,
    /// Per estimated shape: whether the mirror-image (depth-reversed)
    /// reconstruction was the one compared.
    pub reflected: Vec<bool>,
}

/// Evaluates cameras and shapes against groundtruth.
///
/// `shapes` holds either one shared shape (multi-image) or one shape per
/// image (single-image). Each shape gets its own gauge rotation, estimated
/// once from the structures and applied to the cameras that see it.
///
/// Orthographic projection cannot tell a reconstruction from its depth
/// reversal (`R·Z`, `Z·S` with `Z = diag(1, 1, −1)` reproduce the same
/// images). Both are scored with a proper Procrustes rotation and the better
/// one is kept; the choice is reported in [`EvalReport::reflected`].
pub fn evaluate(poses: &[CameraPose], shapes: &[Structure3D], gt: &GroundTruth) -> Result<EvalReport> {
    let n = poses.len();
    if gt.poses.len() != n {
        return Err(Error::LengthMismatch {
            what: "estimated vs groundtruth cameras",
            left: n,
            right: gt.poses.len(),
        });
    }
    if !(shapes.len() == 1 || shapes.len() == n) {
        return Err(Error::LengthMismatch {
            what: "shapes vs cameras",
            left: shapes.len(),
            right: n,
        });
    }
    let gt_centered = center_full(&gt.shape.full());
    let flip = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));

    let mut gauges = Vec::with_capacity(shapes.len());
    for s in shapes {
        let mut best: Option<(f64, Matrix3<f64>, bool)> = None;
        for reflected in [false, true] {
            let candidate = if reflected { s.transformed(&flip) } else { s.clone() };
            let q = procrustes_align(&center_full(&candidate.full()), &gt_centered)?.rotation;
            let e = shape_error(&candidate, &gt.shape, &q)?;
            if best.as_ref().is_none_or(|(b, _, _)| e < *b) {
                best = Some((e, q, reflected));
            }
        }
        gauges.push(best.expect("two candidates scored"));
    }

    let shape_of = |i: usize| if shapes.len() == 1 { 0 } else { i };
    let mut per_image = Vec::with_capacity(n);
    let mut shape_sum = 0.0;
    for (i, (pose, gt_pose)) in poses.iter().zip(&gt.poses).enumerate() {
        let (e_s, q, reflected) = &gauges[shape_of(i)];
        let r = if *reflected { pose.r * flip } else { pose.r };
        per_image.push((r * q.transpose() - gt_pose.r).norm());
        shape_sum += e_s;
    }
    Ok(EvalReport {
        e_r: per_image.iter().sum::<f64>() / n.max(1) as f64,
        e_s: if n == 0 { gauges[0].0 } else { shape_sum / n as f64 },
        per_image_rotation_error: per_image,
        aligned: true,
        reflected: gauges.iter().map(|g| g.2).collect(),
    })
}
