//! Symmetric rigid structure from motion over several images.
//!
//! The model is `Y_n = R_n·S` and `Y†_n = R_n·A·S` for every image `n`, with
//! occluded keypoints treated as latent values. Reconstruction runs in three
//! stages:
//!
//! 1. [`init_missing`]: occluded entries are completed by repeated rank-3
//!    truncation of the stacked `[Y, Y†]` matrix, ignoring symmetry.
//! 2. The half-difference `L = (Y − Y†)/2` and half-sum `M = (Y + Y†)/2`
//!    decouple the symmetric energy into a rank-1 problem in the `x` column
//!    of the cameras and a rank-2 problem in the `yz` columns. Each is
//!    factored by SVD ([`factor_rank`]) and the gauge between the factors
//!    and true cameras (a scale `λ` and a 2×2 matrix `B`) is fixed by the
//!    per-image orthonormality constraints ([`resolve_ambiguities`]).
//! 3. Coordinate descent on the full energy: structure, cameras, missing
//!    entries and per-image translation in turn. Every step is a minimizer
//!    or guarded not to increase the energy, so the trace is monotone.

use log::warn;
use serde::{Deserialize, Serialize};
use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x3, Matrix2xX, Matrix3, Matrix3xX, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{
    mirror_operator, orthogonality_violation, orthonormalize_rows, CameraPose, KeypointImage,
    Structure3D,
};

/// Images with fewer visible keypoints than this are not admitted.
pub const MIN_VISIBLE_KEYPOINTS: usize = 5;

/// Stacked observations of `N` images: rows `2n` and `2n+1` of `y` / `y_dag`
/// belong to image `n`. Coordinates are stored centred; `translations[n]` is
/// the total offset removed from image `n` so far.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedObservations {
    pub y: DMatrix<f64>,
    pub y_dag: DMatrix<f64>,
    pub vis: DMatrix<bool>,
    pub vis_dag: DMatrix<bool>,
    pub translations: Vec<Vector2<f64>>,
}

impl StackedObservations {
    /// Stacks images; occluded entries are set to zero.
    pub fn from_images(images: &[KeypointImage]) -> Result<Self> {
        let n = images.len();
        let p = images.first().map_or(0, KeypointImage::n_pairs);
        let mut y = DMatrix::zeros(2 * n, p);
        let mut y_dag = DMatrix::zeros(2 * n, p);
        let mut vis = DMatrix::from_element(n, p, false);
        let mut vis_dag = DMatrix::from_element(n, p, false);
        for (i, img) in images.iter().enumerate() {
            if img.n_pairs() != p {
                return Err(Error::LengthMismatch {
                    what: "keypoint pairs per image",
                    left: p,
                    right: img.n_pairs(),
                });
            }
            for j in 0..p {
                vis[(i, j)] = img.vis[j];
                vis_dag[(i, j)] = img.vis_dag[j];
                for r in 0..2 {
                    if img.vis[j] {
                        y[(2 * i + r, j)] = img.y[(r, j)];
                    }
                    if img.vis_dag[j] {
                        y_dag[(2 * i + r, j)] = img.y_dag[(r, j)];
                    }
                }
            }
        }
        Ok(Self {
            y,
            y_dag,
            vis,
            vis_dag,
            translations: vec![Vector2::zeros(); n],
        })
    }

    pub fn n_images(&self) -> usize {
        self.vis.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.vis.ncols()
    }

    /// Image `n`'s `(Y_n, Y†_n)` in the centred frame.
    pub fn block(&self, n: usize) -> (Matrix2xX<f64>, Matrix2xX<f64>) {
        let p = self.n_pairs();
        (
            Matrix2xX::from_fn(p, |r, c| self.y[(2 * n + r, c)]),
            Matrix2xX::from_fn(p, |r, c| self.y_dag[(2 * n + r, c)]),
        )
    }

    /// Unstacks into images in the original (uncentred) frame. Occluded
    /// entries carry their current imputed values.
    pub fn to_images(&self) -> Vec<KeypointImage> {
        (0..self.n_images())
            .map(|n| {
                let (y, y_dag) = self.block(n);
                let t = self.translations[n];
                let img = KeypointImage {
                    y,
                    y_dag,
                    vis: self.vis.row(n).iter().copied().collect(),
                    vis_dag: self.vis_dag.row(n).iter().copied().collect(),
                };
                img.translated(&-t)
            })
            .collect()
    }

    pub fn has_occlusions(&self) -> bool {
        self.vis.iter().chain(self.vis_dag.iter()).any(|v| !*v)
    }

    /// Keypoint columns (indexed over `[Y, Y†]`) occluded in more than
    /// `fraction` of the images.
    pub fn sparse_columns(&self, fraction: f64) -> Vec<usize> {
        let n = self.n_images() as f64;
        let p = self.n_pairs();
        let mut out = Vec::new();
        for (offset, mask) in [(0, &self.vis), (p, &self.vis_dag)] {
            for j in 0..p {
                let hidden = mask.column(j).iter().filter(|v| !**v).count() as f64;
                if hidden > fraction * n {
                    out.push(offset + j);
                }
            }
        }
        out
    }

    fn shift(&mut self, n: usize, t: &Vector2<f64>) {
        for r in 0..2 {
            self.y.row_mut(2 * n + r).add_scalar_mut(-t[r]);
            self.y_dag.row_mut(2 * n + r).add_scalar_mut(-t[r]);
        }
        self.translations[n] += t;
    }

    fn mean(&self, n: usize, visible_only: bool) -> Vector2<f64> {
        let mut sum = Vector2::zeros();
        let mut count = 0usize;
        for (m, mask) in [(&self.y, &self.vis), (&self.y_dag, &self.vis_dag)] {
            for j in 0..self.n_pairs() {
                if !visible_only || mask[(n, j)] {
                    sum += Vector2::new(m[(2 * n, j)], m[(2 * n + 1, j)]);
                    count += 1;
                }
            }
        }
        if count == 0 {
            Vector2::zeros()
        } else {
            sum / count as f64
        }
    }

    fn total_sq(&self) -> f64 {
        self.y.norm_squared() + self.y_dag.norm_squared()
    }
}

/// One coordinate-descent record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub max_orthogonality_violation: f64,
}

/// Cameras, shape and completed observations during descent.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveState {
    pub poses: Vec<CameraPose>,
    pub shape: Structure3D,
    pub obs: StackedObservations,
    pub energy_trace: Vec<IterationRecord>,
}

impl SolveState {
    pub fn energy(&self) -> f64 {
        full_energy(&self.poses, &self.shape, &self.obs)
    }

    fn record(&mut self, iteration: usize) -> f64 {
        let energy = self.energy();
        let max_orthogonality_violation = self
            .poses
            .iter()
            .map(CameraPose::orthogonality_violation)
            .fold(0.0, f64::max);
        self.energy_trace.push(IterationRecord {
            iteration,
            energy,
            max_orthogonality_violation,
        });
        energy
    }
}

/// Sum of squared reprojection residuals over all entries, visible and
/// imputed: `Σ‖Y_n − R_n·S‖² + ‖Y†_n − R_n·A·S‖²`. Camera translations are
/// ignored; the observations are already centred.
pub fn full_energy(poses: &[CameraPose], shape: &Structure3D, obs: &StackedObservations) -> f64 {
    let s = shape.points();
    let s_dag = shape.mirrored();
    poses
        .iter()
        .enumerate()
        .map(|(n, pose)| image_energy(&pose.r, s, &s_dag, obs, n))
        .sum()
}

fn image_energy(
    r: &Matrix2x3<f64>,
    s: &Matrix3xX<f64>,
    s_dag: &Matrix3xX<f64>,
    obs: &StackedObservations,
    n: usize,
) -> f64 {
    let (y, y_dag) = obs.block(n);
    (y - r * s).norm_squared() + (y_dag - r * s_dag).norm_squared()
}

/// Completes occluded entries by `iterations` rounds of: centre each image,
/// truncate `[Y, Y†]` to rank 3, overwrite the occluded entries.
///
/// The first round centres on the visible keypoints (occluded entries are
/// still zero placeholders); later rounds centre on all entries, so that the
/// rank-3 fixed point has zero per-image translation. Visible entries move
/// only by the centring shifts.
pub fn init_missing(obs: &StackedObservations, iterations: usize) -> StackedObservations {
    let mut out = obs.clone();
    let (n, p) = (out.n_images(), out.n_pairs());
    for i in 0..n {
        for j in 0..p {
            for r in 0..2 {
                if !out.vis[(i, j)] {
                    out.y[(2 * i + r, j)] = 0.0;
                }
                if !out.vis_dag[(i, j)] {
                    out.y_dag[(2 * i + r, j)] = 0.0;
                }
            }
        }
    }

    let sparse = out.sparse_columns(0.9);
    if !sparse.is_empty() {
        warn!(
            "keypoint columns {sparse:?} are occluded in more than 90% of images; completion may be unreliable"
        );
    }

    if !out.has_occlusions() {
        for i in 0..n {
            let t = out.mean(i, true);
            out.shift(i, &t);
        }
        return out;
    }

    for round in 0..iterations {
        for i in 0..n {
            let t = out.mean(i, round == 0);
            out.shift(i, &t);
        }
        let mut all = DMatrix::zeros(2 * n, 2 * p);
        all.columns_mut(0, p).copy_from(&out.y);
        all.columns_mut(p, p).copy_from(&out.y_dag);
        let low = match crate::linalg::svd(&all) {
            Ok(d) => d.truncated(3),
            Err(e) => {
                warn!("rank-3 completion stopped early: {e}");
                break;
            }
        };
        for i in 0..n {
            for j in 0..p {
                for r in 0..2 {
                    if !out.vis[(i, j)] {
                        out.y[(2 * i + r, j)] = low[(2 * i + r, j)];
                    }
                    if !out.vis_dag[(i, j)] {
                        out.y_dag[(2 * i + r, j)] = low[(2 * i + r, p + j)];
                    }
                }
            }
        }
    }
    out
}

/// Half-difference and half-sum `(L, M) = ((Y − Y†)/2, (Y + Y†)/2)`.
pub fn surrogate_decompose(obs: &StackedObservations) -> (DMatrix<f64>, DMatrix<f64>) {
    (
        (&obs.y - &obs.y_dag) * 0.5,
        (&obs.y + &obs.y_dag) * 0.5,
    )
}

/// Rank-`r` SVD factorization `m ≈ F·G` with the singular values split as
/// `√Σ` into both factors.
pub fn factor_rank(m: &DMatrix<f64>, rank: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if rank == 0 || rank > m.nrows().min(m.ncols()) {
        return Err(Error::InvalidInput(format!(
            "cannot take a rank-{rank} factorization of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = crate::linalg::svd(m)?;
    let sv = &svd.s;
    if !(sv[0] > 0.0 && sv[rank - 1] / sv[0] > 1e-10) {
        return Err(Error::RankDeficient(format!(
            "matrix has fewer than {rank} significant singular values ({sv:?})",
            sv = sv.as_slice()
        )));
    }
    let mut left = svd.u.columns(0, rank).into_owned();
    let mut right = svd.v_t.rows(0, rank).into_owned();
    for c in 0..rank {
        let w = sv[c].sqrt();
        left.column_mut(c).scale_mut(w);
        right.row_mut(c).scale_mut(w);
    }
    Ok((left, right))
}

/// The gauge between the SVD factors and the true cameras: the first camera
/// column is `λ` times the rank-1 factor, the other two are the rank-2 factor
/// times `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguityEstimate {
    pub lambda: f64,
    pub bbt: Matrix2<f64>,
    pub b: Matrix2<f64>,
}

/// Coefficient row of `[λ², bb₁, bb₂, bb₃]` in `u·diag(λ², BBᵀ)·vᵀ` for two
/// 3-vectors `u`, `v` (camera rows of the factor estimate).
fn orthogonality_row(u: &[f64; 3], v: &[f64; 3]) -> [f64; 4] {
    [
        u[0] * v[0],
        u[1] * v[1],
        u[1] * v[2] + u[2] * v[1],
        u[2] * v[2],
    ]
}

/// Solves the stacked orthonormality constraints for `λ²` and the symmetric
/// `BBᵀ` by linear least squares, then takes `λ = √λ²` and `B` as the
/// symmetric square root of the PSD projection of `BBᵀ`.
pub fn resolve_ambiguities(r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> Result<AmbiguityEstimate> {
    if r1.ncols() != 1 || r2.ncols() != 2 || r1.nrows() != r2.nrows() || r1.nrows() % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "factor shapes {}x{} and {}x{} are not 2Nx1 and 2Nx2",
            r1.nrows(),
            r1.ncols(),
            r2.nrows(),
            r2.ncols()
        )));
    }
    let n = r1.nrows() / 2;
    if n < 2 {
        return Err(Error::TooFewImages {
            found: n,
            required: 2,
            hint: "",
        });
    }
    let mut a = DMatrix::zeros(3 * n, 4);
    let mut b = DVector::zeros(3 * n);
    for i in 0..n {
        let top = [r1[(2 * i, 0)], r2[(2 * i, 0)], r2[(2 * i, 1)]];
        let bottom = [r1[(2 * i + 1, 0)], r2[(2 * i + 1, 0)], r2[(2 * i + 1, 1)]];
        for (k, row) in [
            orthogonality_row(&top, &top),
            orthogonality_row(&bottom, &bottom),
            orthogonality_row(&top, &bottom),
        ]
        .iter()
        .enumerate()
        {
            for c in 0..4 {
                a[(3 * i + k, c)] = row[c];
            }
        }
        b[3 * i] = 1.0;
        b[3 * i + 1] = 1.0;
    }

    let ata = a.transpose() * &a;
    let eig = ata.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= 1e12) {
        return Err(Error::IllConditioned { cond });
    }
    let x = ata
        .cholesky()
        .ok_or(Error::IllConditioned { cond })?
        .solve(&(a.transpose() * b));

    let mut lambda_sq = x[0];
    if (-1e-8..0.0).contains(&lambda_sq) {
        lambda_sq = 0.0;
    }
    if lambda_sq <= 0.0 {
        return Err(Error::DegenerateScale { lambda_sq });
    }

    let bbt = Matrix2::new(x[1], x[2], x[2], x[3]);
    let eig = bbt.symmetric_eigen();
    if eig.eigenvalues.min() < -1e-8 {
        warn!(
            "BBᵀ estimate is indefinite (eigenvalues {:?}); projecting to PSD",
            eig.eigenvalues.as_slice()
        );
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let b_root = eig.eigenvectors * Matrix2::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok(AmbiguityEstimate {
        lambda: lambda_sq.sqrt(),
        bbt,
        b: b_root,
    })
}

/// Applies the resolved gauge: cameras `R̂·blkdiag(λ, B)` projected to
/// orthonormal rows, structure `blkdiag(λ, B)⁻¹·Ŝ`.
pub fn compose_initialization(
    r1: &DMatrix<f64>,
    r2: &DMatrix<f64>,
    s_x: &DMatrix<f64>,
    s_yz: &DMatrix<f64>,
    amb: &AmbiguityEstimate,
) -> Result<(Vec<CameraPose>, Structure3D)> {
    let b_inv = amb.b.try_inverse().ok_or(Error::SingularAmbiguity)?;
    if amb.lambda == 0.0 || !amb.lambda.is_finite() || !b_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularAmbiguity);
    }
    let n = r1.nrows() / 2;
    let p = s_x.ncols();
    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = Matrix2x3::zeros();
        for row in 0..2 {
            r[(row, 0)] = r1[(2 * i + row, 0)] * amb.lambda;
            let yz = nalgebra::RowVector2::new(r2[(2 * i + row, 0)], r2[(2 * i + row, 1)]) * amb.b;
            r[(row, 1)] = yz[0];
            r[(row, 2)] = yz[1];
        }
        poses.push(CameraPose {
            r: orthonormalize_rows(&r)?,
            t: Vector2::zeros(),
        });
    }
    let mut s = Matrix3xX::zeros(p);
    for j in 0..p {
        s[(0, j)] = s_x[(0, j)] / amb.lambda;
        let yz = b_inv * Vector2::new(s_yz[(0, j)], s_yz[(1, j)]);
        s[(1, j)] = yz.x;
        s[(2, j)] = yz.y;
    }
    Ok((poses, Structure3D::new(s)))
}

/// Initial cameras and structure from the surrogate energy.
pub fn surrogate_initialization(obs: &StackedObservations) -> Result<(Vec<CameraPose>, Structure3D)> {
    let (l, m) = surrogate_decompose(obs);
    let (r1, s_x) = factor_rank(&l, 1)?;
    let (r2, s_yz) = factor_rank(&m, 2)?;
    let amb = resolve_ambiguities(&r1, &r2)?;
    compose_initialization(&r1, &r2, &s_x, &s_yz, &amb)
}

fn relative_min_eigenvalue(h: &Matrix3<f64>) -> f64 {
    let eig = h.symmetric_eigen().eigenvalues;
    let hi = eig.max();
    if hi > 0.0 {
        eig.min() / hi
    } else {
        0.0
    }
}

/// Least-squares structure for fixed cameras and completed observations.
///
/// The normal matrix `Σ_n R_nᵀR_n + A·R_nᵀR_n·A` is shared by every pair, so
/// the `3P×3P` system splits into one 3×3 solve with `P` right-hand sides.
pub fn update_structure(poses: &[CameraPose], obs: &StackedObservations) -> Result<Structure3D> {
    let a = mirror_operator();
    let p = obs.n_pairs();
    let mut h = Matrix3::zeros();
    let mut rhs = Matrix3xX::zeros(p);
    for (n, pose) in poses.iter().enumerate() {
        let rtr = pose.r.transpose() * pose.r;
        h += rtr + a * rtr * a;
        let (y, y_dag) = obs.block(n);
        rhs += pose.r.transpose() * y + a * pose.r.transpose() * y_dag;
    }
    if relative_min_eigenvalue(&h) < 1e-12 {
        return Err(Error::SingularNormalMatrix);
    }
    let chol = h.cholesky().ok_or(Error::SingularNormalMatrix)?;
    Ok(Structure3D::new(chol.solve(&rhs)))
}

/// Per-image camera update: unconstrained least squares on `[Y_n, Y†_n] ≈
/// R·[S, A·S]`, projected to orthonormal rows. The previous camera is kept
/// whenever the projected solution would raise that image's energy.
pub fn update_cameras(
    shape: &Structure3D,
    obs: &StackedObservations,
    previous: &[CameraPose],
) -> Result<Vec<CameraPose>> {
    let x = shape.full();
    let xxt = &x * x.transpose();
    if relative_min_eigenvalue(&xxt) < 1e-12 {
        return Err(Error::RankDeficient(
            "structure points do not span 3D; cameras are not determined".into(),
        ));
    }
    let xxt_inv = xxt.try_inverse().ok_or_else(|| {
        Error::RankDeficient("structure scatter matrix is singular".into())
    })?;
    let s = shape.points();
    let s_dag = shape.mirrored();
    let p = obs.n_pairs();

    Ok(previous
        .iter()
        .enumerate()
        .map(|(n, prev)| {
            let (y, y_dag) = obs.block(n);
            let mut w = Matrix2xX::zeros(2 * p);
            w.columns_mut(0, p).copy_from(&y);
            w.columns_mut(p, p).copy_from(&y_dag);
            let unconstrained: Matrix2x3<f64> = w * x.transpose() * xxt_inv;
            let before = image_energy(&prev.r, s, &s_dag, obs, n);
            match orthonormalize_rows(&unconstrained) {
                Ok(r) if image_energy(&r, s, &s_dag, obs, n) <= before => CameraPose { r, t: prev.t },
                _ => prev.clone(),
            }
        })
        .collect())
}

/// Sets every occluded entry to its current reprojection.
pub fn update_missing(mut state: SolveState) -> SolveState {
    let s = state.shape.points().clone();
    let s_dag = state.shape.mirrored();
    for (n, pose) in state.poses.iter().enumerate() {
        let proj = pose.r * &s;
        let proj_dag = pose.r * &s_dag;
        for j in 0..state.obs.n_pairs() {
            for r in 0..2 {
                if !state.obs.vis[(n, j)] {
                    state.obs.y[(2 * n + r, j)] = proj[(r, j)];
                }
                if !state.obs.vis_dag[(n, j)] {
                    state.obs.y_dag[(2 * n + r, j)] = proj_dag[(r, j)];
                }
            }
        }
    }
    state
}

/// Re-estimates each image's translation as the mean residual over its `2P`
/// entries and subtracts it.
pub fn recentralize(mut state: SolveState) -> SolveState {
    let s = state.shape.points().clone();
    let s_dag = state.shape.mirrored();
    let p = state.obs.n_pairs();
    for n in 0..state.poses.len() {
        let (y, y_dag) = state.obs.block(n);
        let r = &state.poses[n].r;
        let residual = (y - r * &s).column_sum() + (y_dag - r * &s_dag).column_sum();
        let t = residual / (2 * p) as f64;
        state.obs.shift(n, &t);
    }
    state
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiConfig {
    pub max_iters: usize,
    /// Stop when the relative energy decrease of one iteration falls below
    /// this.
    pub tol: f64,
    /// Rounds of rank-3 completion before the surrogate initialization.
    pub init_iters: usize,
}

impl Default for MultiConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-9,
            init_iters: 10,
        }
    }
}

impl MultiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::ConfigInvalid(format!("tolerance must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Output of [`reconstruct_multi`].
#[derive(Clone, Debug, PartialEq)]
pub struct MultiImageReconstruction {
    /// Cameras including the recovered image translations.
    pub poses: Vec<CameraPose>,
    pub shape: Structure3D,
    /// Input images with occluded entries replaced by their imputed values.
    pub filled: Vec<KeypointImage>,
    /// Energy after initialization (iteration 0) and after every descent
    /// iteration.
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
}

/// Full multi-image reconstruction.
pub fn reconstruct_multi(images: &[KeypointImage], cfg: &MultiConfig) -> Result<MultiImageReconstruction> {
    cfg.validate()?;
    if images.len() < 2 {
        return Err(Error::TooFewImages {
            found: images.len(),
            required: 2,
            hint: "; use single-image reconstruction with Manhattan axes instead",
        });
    }
    if let Some((i, img)) = images
        .iter()
        .enumerate()
        .find(|(_, img)| img.visible_count() < MIN_VISIBLE_KEYPOINTS)
    {
        return Err(Error::InvalidInput(format!(
            "image {i} has {} visible keypoints, at least {MIN_VISIBLE_KEYPOINTS} are required",
            img.visible_count()
        )));
    }

    let obs = init_missing(&StackedObservations::from_images(images)?, cfg.init_iters);
    let (poses, shape) = surrogate_initialization(&obs)?;
    let mut state = SolveState {
        poses,
        shape,
        obs,
        energy_trace: Vec::new(),
    };
    let mut energy = state.record(0);
    let floor = 1e-20 * state.obs.total_sq();
    let mut converged = energy <= floor;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        state.shape = update_structure(&state.poses, &state.obs)?;
        state.poses = update_cameras(&state.shape, &state.obs, &state.poses)?;
        state = recentralize(update_missing(state));
        let next = state.record(iterations);
        converged = energy - next <= cfg.tol * energy || next <= floor;
        energy = next;
    }
    if !converged {
        warn!(
            "coordinate descent stopped after {iterations} iterations without converging (energy {energy:e})"
        );
    }

    let filled = state.obs.to_images();
    let poses = state
        .poses
        .iter()
        .zip(&state.obs.translations)
        .map(|(pose, t)| CameraPose { r: pose.r, t: *t })
        .collect();
    Ok(MultiImageReconstruction {
        poses,
        shape: state.shape,
        filled,
        trace: state.energy_trace,
        converged,
        iterations,
    })
}

/// `max ‖R_nR_nᵀ − I‖_F` over a set of cameras.
pub fn max_orthogonality_violation(poses: &[CameraPose]) -> f64 {
    poses
        .iter()
        .map(|p| orthogonality_violation(&p.r))
        .fold(0.0, f64::max)
}
