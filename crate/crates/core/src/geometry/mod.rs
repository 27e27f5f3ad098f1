//! Shared geometric primitives: the symmetric structure, orthographic camera
//! and keypoint image types, plus normalization, alignment and the
//! evaluation metrics.
//!
//! Conventions used throughout the crate:
//!
//! * The symmetry plane is `x = 0`. Pair `p` consists of the point `S[p]`
//!   and its mirror `A·S[p]` with `A = diag(-1, 1, 1)`.
//! * Keypoint columns are indexed over the concatenation `[Y, Y†]`, so index
//!   `p < P` is the left member of pair `p` and `P + p` its right member.

mod metrics;

pub use metrics::{
    evaluate, procrustes_align, rotation_error, shape_error, Alignment, EvalReport, GroundTruth,
};

use nalgebra::{Matrix2x3, Matrix2xX, Matrix3, Matrix3xX, Vector2, Vector3};

use crate::error::{Error, Result};

/// Row-orthonormality tolerance for [`CameraPose`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// The mirror operator `A = diag(-1, 1, 1)`.
pub fn mirror_operator() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0))
}

/// A bilaterally symmetric 3D shape made of `P` mirrored point pairs.
///
/// Only the left members are stored; the right members are derived, so the
/// mirror relation holds exactly by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Structure3D {
    points: Matrix3xX<f64>,
}

impl Structure3D {
    pub fn new(points: Matrix3xX<f64>) -> Self {
        Self { points }
    }

    /// Builds a structure from a full `3×2P` matrix `[S, S†]`, checking the
    /// mirror relation to within `tol`.
    pub fn from_full(full: &Matrix3xX<f64>, tol: f64) -> Result<Self> {
        if full.ncols() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "full shape must have an even column count, got {}",
                full.ncols()
            )));
        }
        let p = full.ncols() / 2;
        let left = full.columns(0, p).into_owned();
        let right = full.columns(p, p);
        let deviation = (mirror_operator() * &left - right).amax();
        if deviation > tol {
            return Err(Error::InvalidInput(format!(
                "full shape violates mirror symmetry by {deviation:e}"
            )));
        }
        Ok(Self::new(left))
    }

    pub fn n_pairs(&self) -> usize {
        self.points.ncols()
    }

    /// The left members `S` (3×P).
    pub fn points(&self) -> &Matrix3xX<f64> {
        &self.points
    }

    /// The right members `S† = A·S` (3×P).
    pub fn mirrored(&self) -> Matrix3xX<f64> {
        let mut m = self.points.clone();
        m.row_mut(0).neg_mut();
        m
    }

    /// The full `3×2P` matrix `[S, S†]`.
    pub fn full(&self) -> Matrix3xX<f64> {
        let p = self.n_pairs();
        let mut full = Matrix3xX::zeros(2 * p);
        full.columns_mut(0, p).copy_from(&self.points);
        full.columns_mut(p, p).copy_from(&self.mirrored());
        full
    }

    /// Applies a linear map to every point. The map must commute with the
    /// mirror operator (block diagonal in `x` / `yz`) for the result to stay
    /// meaningful; this is the caller's responsibility.
    pub fn transformed(&self, m: &Matrix3<f64>) -> Self {
        Self::new(m * &self.points)
    }

    /// Translates so the centroid of all `2P` points is at the origin. The
    /// `x` centroid is always zero, so the mirror relation is preserved.
    pub fn centered(&self) -> Self {
        let mut pts = self.points.clone();
        for r in 1..3 {
            let mean = pts.row(r).mean();
            pts.row_mut(r).add_scalar_mut(-mean);
        }
        Self::new(pts)
    }

    /// Largest distance between any two of the `2P` points.
    pub fn diameter(&self) -> f64 {
        let full = self.full();
        let mut best = 0.0_f64;
        for i in 0..full.ncols() {
            for j in (i + 1)..full.ncols() {
                best = best.max((full.column(i) - full.column(j)).norm());
            }
        }
        best
    }
}

/// Orthographic camera: `y = R·X + t` with `R` a 2×3 row-orthonormal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraPose {
    pub r: Matrix2x3<f64>,
    pub t: Vector2<f64>,
}

impl CameraPose {
    /// Validates row orthonormality (`‖RRᵀ − I‖_F ≤ 1e-8`).
    pub fn new(r: Matrix2x3<f64>, t: Vector2<f64>) -> Result<Self> {
        let pose = Self { r, t };
        let v = pose.orthogonality_violation();
        if !(v <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidInput(format!(
                "camera rows are not orthonormal (violation {v:e})"
            )));
        }
        Ok(pose)
    }

    pub fn orthogonality_violation(&self) -> f64 {
        orthogonality_violation(&self.r)
    }

    /// Viewing direction `r₁ × r₂`.
    pub fn principal_axis(&self) -> Vector3<f64> {
        let r1: Vector3<f64> = self.r.row(0).transpose();
        let r2: Vector3<f64> = self.r.row(1).transpose();
        r1.cross(&r2)
    }

    pub fn project(&self, points: &Matrix3xX<f64>) -> Matrix2xX<f64> {
        let mut y = self.r * points;
        for mut c in y.column_iter_mut() {
            c += self.t;
        }
        y
    }
}

/// `‖RRᵀ − I₂‖_F`.
pub fn orthogonality_violation(r: &Matrix2x3<f64>) -> f64 {
    (r * r.transpose() - nalgebra::Matrix2::identity()).norm()
}

/// One image's 2D observations of the `P` keypoint pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointImage {
    pub y: Matrix2xX<f64>,
    pub y_dag: Matrix2xX<f64>,
    pub vis: Vec<bool>,
    pub vis_dag: Vec<bool>,
}

impl KeypointImage {
    pub fn new(
        y: Matrix2xX<f64>,
        y_dag: Matrix2xX<f64>,
        vis: Vec<bool>,
        vis_dag: Vec<bool>,
    ) -> Result<Self> {
        let p = y.ncols();
        for (what, n) in [
            ("Y† columns", y_dag.ncols()),
            ("visibility flags", vis.len()),
            ("mirrored visibility flags", vis_dag.len()),
        ] {
            if n != p {
                return Err(Error::LengthMismatch {
                    what,
                    left: p,
                    right: n,
                });
            }
        }
        Ok(Self {
            y,
            y_dag,
            vis,
            vis_dag,
        })
    }

    /// Fully visible image from the two keypoint matrices.
    pub fn fully_visible(y: Matrix2xX<f64>, y_dag: Matrix2xX<f64>) -> Result<Self> {
        let p = y.ncols();
        Self::new(y, y_dag, vec![true; p], vec![true; p])
    }

    pub fn n_pairs(&self) -> usize {
        self.y.ncols()
    }

    pub fn visible_count(&self) -> usize {
        self.vis.iter().chain(&self.vis_dag).filter(|v| **v).count()
    }

    pub fn all_visible(&self) -> bool {
        self.vis.iter().chain(&self.vis_dag).all(|v| *v)
    }

    /// Keypoint `i` of the concatenation `[Y, Y†]`.
    pub fn keypoint(&self, i: usize) -> Vector2<f64> {
        let p = self.n_pairs();
        if i < p {
            self.y.column(i).into_owned()
        } else {
            self.y_dag.column(i - p).into_owned()
        }
    }

    pub fn is_visible(&self, i: usize) -> bool {
        let p = self.n_pairs();
        if i < p {
            self.vis[i]
        } else {
            self.vis_dag[i - p]
        }
    }

    /// Shifts every keypoint (visible or not) by `-t`.
    pub fn translated(&self, t: &Vector2<f64>) -> Self {
        let mut out = self.clone();
        for mut c in out.y.column_iter_mut().chain(out.y_dag.column_iter_mut()) {
            c -= t;
        }
        out
    }
}

/// Scales a shape to `3·S / (σx + σy + σz)` where `σ` are the population
/// standard deviations of the `2P` points along each axis.
pub fn normalize_shape(s: &Structure3D) -> Result<Structure3D> {
    let full = s.full();
    let spread: f64 = full.row_iter().map(|row| population_std(row.iter())).sum();
    if spread < 1e-12 {
        return Err(Error::DegenerateShape(spread));
    }
    Ok(Structure3D::new(s.points() * (3.0 / spread)))
}

fn population_std<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Subtracts the mean of the visible keypoints (over `Y` and `Y†` jointly)
/// from every keypoint. Returns the centred image and the subtracted mean.
pub fn centralize(img: &KeypointImage) -> Result<(KeypointImage, Vector2<f64>)> {
    let mut sum = Vector2::zeros();
    let mut count = 0usize;
    for i in 0..2 * img.n_pairs() {
        if img.is_visible(i) {
            sum += img.keypoint(i);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoVisiblePoints);
    }
    let t = sum / count as f64;
    Ok((img.translated(&t), t))
}

/// Nearest matrix with orthonormal rows (the polar factor `U·Vᵀ`).
pub fn orthonormalize_rows(m: &Matrix2x3<f64>) -> Result<Matrix2x3<f64>> {
    let svd = crate::linalg::svd(m)?;
    let smallest = svd.s[1];
    if !(smallest >= 1e-10) {
        return Err(Error::RankDeficient(format!(
            "2x3 matrix has second singular value {smallest:e}"
        )));
    }
    Ok((svd.u * svd.v_t).fixed_view::<2, 3>(0, 0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_shape(rng: &mut ChaCha8Rng, p: usize) -> Structure3D {
        Structure3D::new(Matrix3xX::from_fn(p, |_, _| rng.random_range(-1.0..1.0)))
    }

    fn spreads(s: &Structure3D) -> f64 {
        s.full()
            .row_iter()
            .map(|r| population_std(r.iter()))
            .sum()
    }

    #[test]
    fn mirror_relation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_shape(&mut rng, 6);
        let full = s.full();
        for p in 0..6 {
            assert_eq!(full[(0, p + 6)], -full[(0, p)]);
            assert_eq!(full[(1, p + 6)], full[(1, p)]);
            assert_eq!(full[(2, p + 6)], full[(2, p)]);
        }
        assert_eq!(Structure3D::from_full(&full, 0.0).unwrap(), s);
    }

    #[test]
    fn normalize_keeps_unit_spreads() {
        // Pairs (±1, ±1, ±1) give σ = 1 on every axis.
        let pts = Matrix3xX::from_column_slice(&[1.0, 1.0, 1.0, 1.0, -1.0, -1.0]);
        let s = Structure3D::new(pts);
        assert_relative_eq!(spreads(&s), 3.0, epsilon = 1e-15);
        assert_eq!(normalize_shape(&s).unwrap(), s);
    }

    #[test]
    fn normalize_matches_formula_and_is_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_shape(&mut rng, 8);
        let n = normalize_shape(&s).unwrap();

        // Oracle: per-axis spreads straight from the definition.
        let full = s.full();
        let mut sum = 0.0;
        for r in 0..3 {
            let row: Vec<f64> = full.row(r).iter().copied().collect();
            let mean = row.iter().sum::<f64>() / 16.0;
            sum += (row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0).sqrt();
        }
        let expected = s.points() * (3.0 / sum);
        assert_relative_eq!(n.points(), &expected, epsilon = 1e-14);
        assert_relative_eq!(spreads(&n), 3.0, epsilon = 1e-10);

        let scaled = Structure3D::new(s.points() * 5.0);
        assert_relative_eq!(normalize_shape(&scaled).unwrap().points(), n.points(), epsilon = 1e-14);
        assert_relative_eq!(normalize_shape(&n).unwrap().points(), n.points(), epsilon = 1e-12);
    }

    #[test]
    fn normalize_rejects_collapsed_shape() {
        let s = Structure3D::new(Matrix3xX::zeros(4));
        assert!(matches!(normalize_shape(&s), Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn centralize_constant_image() {
        let y = Matrix2xX::from_fn(3, |r, _| if r == 0 { 3.0 } else { 4.0 });
        let img = KeypointImage::fully_visible(y.clone(), y).unwrap();
        let (c, t) = centralize(&img).unwrap();
        assert_eq!(t, Vector2::new(3.0, 4.0));
        assert!(c.y.iter().chain(c.y_dag.iter()).all(|v| *v == 0.0));

        let (again, t0) = centralize(&c).unwrap();
        assert_eq!(t0, Vector2::zeros());
        assert_eq!(again, c);
    }

    #[test]
    fn centralize_uses_visible_points_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 5;
        let y = Matrix2xX::from_fn(p, |_, _| rng.random_range(-5.0..5.0));
        let yd = Matrix2xX::from_fn(p, |_, _| rng.random_range(-5.0..5.0));
        let vis = vec![true, false, true, true, false];
        let vis_dag = vec![false, true, true, false, false];
        let img = KeypointImage::new(y.clone(), yd.clone(), vis.clone(), vis_dag.clone()).unwrap();
        let (c, t) = centralize(&img).unwrap();

        let mut sum = Vector2::zeros();
        let mut n = 0.0;
        for i in 0..p {
            if vis[i] {
                sum += y.column(i);
                n += 1.0;
            }
            if vis_dag[i] {
                sum += yd.column(i);
                n += 1.0;
            }
        }
        assert_relative_eq!(t, sum / n, epsilon = 1e-14);
        let mut mean = Vector2::zeros();
        for i in 0..2 * p {
            if c.is_visible(i) {
                mean += c.keypoint(i);
            }
        }
        assert!((mean / n).norm() < 1e-12);
        // Invisible columns are shifted along with everything else.
        assert_relative_eq!(c.y.column(1).into_owned(), y.column(1) - t, epsilon = 1e-14);
    }

    #[test]
    fn centralize_needs_a_visible_point() {
        let img = KeypointImage::new(
            Matrix2xX::zeros(2),
            Matrix2xX::zeros(2),
            vec![false; 2],
            vec![false; 2],
        )
        .unwrap();
        assert!(matches!(centralize(&img), Err(Error::NoVisiblePoints)));
    }

    #[test]
    fn keypoint_image_checks_lengths() {
        let r = KeypointImage::new(Matrix2xX::zeros(3), Matrix2xX::zeros(2), vec![true; 3], vec![true; 3]);
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn orthonormalize_identity_cases() {
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.4);
        let r: Matrix2x3<f64> = rot.matrix().fixed_rows::<2>(0).into_owned();
        assert_relative_eq!(orthonormalize_rows(&r).unwrap(), r, epsilon = 1e-12);

        let mut scaled = r;
        scaled.row_mut(0).scale_mut(2.0);
        scaled.row_mut(1).scale_mut(3.0);
        assert_relative_eq!(orthonormalize_rows(&scaled).unwrap(), r, epsilon = 1e-12);
    }

    #[test]
    fn orthonormalize_is_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = Matrix2x3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let o = orthonormalize_rows(&m).unwrap();
            assert!(orthogonality_violation(&o) < 1e-12);
            let best = (m - o).norm();
            for _ in 0..1000 {
                let axis = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let q = Rotation3::new(axis.normalize() * rng.random_range(0.0..std::f64::consts::PI));
                let other: Matrix2x3<f64> = q.matrix().fixed_rows::<2>(0).into_owned();
                assert!(best <= (m - other).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_rejects_rank_one() {
        let m = Matrix2x3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0);
        assert!(matches!(orthonormalize_rows(&m), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn camera_pose_validates_rows() {
        let bad = Matrix2x3::new(1.0, 0.0, 0.0, 0.5, 0.5, 0.0);
        assert!(CameraPose::new(bad, Vector2::zeros()).is_err());
        let good = Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let pose = CameraPose::new(good, Vector2::zeros()).unwrap();
        assert_eq!(pose.principal_axis(), Vector3::z());
    }
}
