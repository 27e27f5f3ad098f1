//! Dataset and result files.
//!
//! A dataset is one JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "pairs": [["left_wing_tip", "right_wing_tip"], ...],
//!   "images": [
//!     {"id": "img000", "keypoints": {"left_wing_tip": [u, v], "right_wing_tip": null, ...}}
//!   ],
//!   "manhattan": {"axis_x": [a, b], "axis_y": [a, b], "axis_z": [a, b]},
//!   "groundtruth": {
//!     "shape": {"left_wing_tip": [x, y, z], ...},
//!     "poses": {"img000": [[r11, r12, r13], [r21, r22, r23]]}
//!   }
//! }
//! ```
//!
//! `null` (or an absent name) marks an occluded keypoint. `manhattan` and
//! `groundtruth` are optional. Writers emit keypoints in pair order, so
//! loading and saving a file yields a byte-stable canonical form.

use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use log::warn;
use nalgebra::{Matrix2x3, Matrix2xX, Matrix3xX, Vector2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, EvalReport, GroundTruth, KeypointImage, Structure3D};
use crate::rsfm::{IterationRecord, MIN_VISIBLE_KEYPOINTS};
use crate::single_image::ManhattanSpec;
use crate::synthetic::Scene;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest accepted deviation of a groundtruth shape from exact mirror
/// symmetry.
pub const MIRROR_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub schema_version: u32,
    pub pairs: Vec<[String; 2]>,
    pub images: Vec<ImageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manhattan: Option<ManhattanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groundtruth: Option<GroundTruthRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    pub keypoints: IndexMap<String, Option<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManhattanRecord {
    pub axis_x: [String; 2],
    pub axis_y: [String; 2],
    pub axis_z: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthRecord {
    pub shape: IndexMap<String, [f64; 3]>,
    pub poses: IndexMap<String, [[f64; 3]; 2]>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

fn parse_json<T: DeserializeOwned>(text: &str, source_name: &str) -> Result<T> {
    let parse_error = |path: String, inner: serde_json::Error| {
        let full = inner.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        Error::Parse {
            source_name: source_name.to_string(),
            line: inner.line(),
            column: inner.column(),
            path,
            message,
        }
    };
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        parse_error(path, e.into_inner())
    })?;
    de.end().map_err(|e| parse_error(".".into(), e))?;
    Ok(value)
}

fn check_version(text: &str) -> Result<()> {
    if let Ok(VersionProbe {
        schema_version: Some(v),
    }) = serde_json::from_str::<VersionProbe>(text)
    {
        if v != SCHEMA_VERSION {
            return Err(Error::SchemaVersionUnsupported {
                found: v,
                supported: SCHEMA_VERSION,
            });
        }
    }
    Ok(())
}

fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = compact_leaf_arrays(&serde_json::to_string_pretty(value).expect("serializable value"));
    s.push('\n');
    s
}

/// Puts arrays that contain no arrays or objects on one line, so that a
/// coordinate reads `[0.5, -1.25]` instead of spanning four lines.
fn compact_leaf_arrays(pretty: &str) -> String {
    let bytes = pretty.as_bytes();
    let mut out = String::with_capacity(pretty.len());
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'"' {
            let end = string_end(bytes, i);
            out.push_str(&pretty[i..end]);
            i = end;
        } else if c == b'[' {
            match leaf_array_end(bytes, i) {
                Some(end) => {
                    out.push('[');
                    let items = split_top_level(&pretty[i + 1..end]);
                    out.push_str(&items.join(", "));
                    out.push(']');
                    i = end + 1;
                }
                None => {
                    out.push('[');
                    i += 1;
                }
            }
        } else {
            out.push(c as char);
            i += 1;
        }
    }
    out
}

/// Index one past the closing quote of the string starting at `start`.
fn string_end(bytes: &[u8], start: usize) -> usize {
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn leaf_array_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => i = string_end(bytes, i),
            b'[' | b'{' => return None,
            b']' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

fn split_top_level(inner: &str) -> Vec<&str> {
    let bytes = inner.as_bytes();
    let mut items = Vec::new();
    let (mut start, mut i) = (0, 0);
    while i < bytes.len() {
        match bytes[i] {
            b'"' => i = string_end(bytes, i),
            b',' => {
                items.push(inner[start..i].trim());
                i += 1;
                start = i;
            }
            _ => i += 1,
        }
    }
    let last = inner[start..].trim();
    if !last.is_empty() {
        items.push(last);
    }
    items
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

impl DatasetFile {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        check_version(text)?;
        parse_json(text, source_name)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Pretty JSON with every image listing all keypoints in pair order.
    pub fn to_canonical_json(&self) -> String {
        let mut out = self.clone();
        for img in &mut out.images {
            let mut ordered = IndexMap::new();
            for [l, r] in &self.pairs {
                for name in [l, r] {
                    ordered.insert(name.clone(), img.keypoints.get(name).copied().flatten());
                }
            }
            img.keypoints = ordered;
        }
        if let Some(gt) = &mut out.groundtruth {
            let mut ordered = IndexMap::new();
            for [l, r] in &self.pairs {
                for name in [l, r] {
                    if let Some(p) = gt.shape.get(name) {
                        ordered.insert(name.clone(), *p);
                    }
                }
            }
            gt.shape = ordered;
        }
        to_canonical_json(&out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_canonical_json())?;
        Ok(())
    }
}

/// Groundtruth as read from a dataset: the shape and the poses by image id.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetGroundTruth {
    pub shape: Structure3D,
    pub poses: IndexMap<String, CameraPose>,
}

/// A validated dataset ready for reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<(String, String)>,
    pub ids: Vec<String>,
    pub images: Vec<KeypointImage>,
    pub manhattan: Option<ManhattanSpec>,
    pub groundtruth: Option<DatasetGroundTruth>,
    /// Ids of images dropped for having fewer than
    /// [`MIN_VISIBLE_KEYPOINTS`] visible keypoints.
    pub dropped: Vec<String>,
}

struct NameIndex {
    index: IndexMap<String, usize>,
}

impl NameIndex {
    fn new(pairs: &[[String; 2]]) -> Result<Self> {
        let n_pairs = pairs.len();
        let mut index = IndexMap::new();
        for (p, [l, r]) in pairs.iter().enumerate() {
            if l == r {
                return Err(Error::InvalidInput(format!(
                    "pair {p} uses keypoint `{l}` for both sides"
                )));
            }
            for (name, i) in [(l, p), (r, n_pairs + p)] {
                if index.insert(name.clone(), i).is_some() {
                    return Err(Error::InvalidInput(format!(
                        "keypoint `{name}` appears in more than one pair"
                    )));
                }
            }
        }
        Ok(Self { index })
    }

    fn get(&self, name: &str, context: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| {
            Error::InvalidInput(format!("{context}: keypoint `{name}` is not in any pair"))
        })
    }
}

fn pose_from_record(m: &[[f64; 3]; 2], id: &str) -> Result<CameraPose> {
    let r = Matrix2x3::new(m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2]);
    CameraPose::new(r, Vector2::zeros()).map_err(|e| {
        Error::InvalidInput(format!("groundtruth pose for `{id}`: {e}"))
    })
}

fn pose_record(pose: &CameraPose) -> [[f64; 3]; 2] {
    let r = &pose.r;
    [
        [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
        [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
    ]
}

fn shape_record(pairs: &[(String, String)], shape: &Structure3D) -> IndexMap<String, [f64; 3]> {
    let s = shape.points();
    let m = shape.mirrored();
    let mut out = IndexMap::new();
    for (p, (l, r)) in pairs.iter().enumerate() {
        out.insert(l.clone(), [s[(0, p)], s[(1, p)], s[(2, p)]]);
        out.insert(r.clone(), [m[(0, p)], m[(1, p)], m[(2, p)]]);
    }
    out
}

fn shape_from_record(
    pairs: &[(String, String)],
    record: &IndexMap<String, [f64; 3]>,
    tol: f64,
) -> Result<Structure3D> {
    let get = |name: &String| {
        record
            .get(name)
            .map(|v| nalgebra::Vector3::from(*v))
            .ok_or_else(|| Error::InvalidInput(format!("shape is missing keypoint `{name}`")))
    };
    let mut left = Matrix3xX::zeros(pairs.len());
    let a = crate::geometry::mirror_operator();
    for (p, (l, r)) in pairs.iter().enumerate() {
        let (pl, pr) = (get(l)?, get(r)?);
        let deviation = (a * pl - pr).amax();
        if deviation > tol {
            return Err(Error::MirrorViolation {
                left: l.clone(),
                right: r.clone(),
                deviation,
            });
        }
        left.set_column(p, &pl);
    }
    Ok(Structure3D::new(left))
}

impl Dataset {
    /// Validates a parsed file and drops images with too few visible
    /// keypoints (logged).
    pub fn from_file(file: &DatasetFile) -> Result<Self> {
        let names = NameIndex::new(&file.pairs)?;
        let p = file.pairs.len();
        let pairs: Vec<(String, String)> = file
            .pairs
            .iter()
            .map(|[l, r]| (l.clone(), r.clone()))
            .collect();

        let mut ids = Vec::new();
        let mut images = Vec::new();
        let mut dropped = Vec::new();
        for rec in &file.images {
            let mut y = Matrix2xX::zeros(p);
            let mut y_dag = Matrix2xX::zeros(p);
            let mut vis = vec![false; p];
            let mut vis_dag = vec![false; p];
            for (name, value) in &rec.keypoints {
                let i = names.get(name, &format!("image `{}`", rec.id))?;
                let Some([u, v]) = value else { continue };
                if !(u.is_finite() && v.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "image `{}`: keypoint `{name}` is not finite",
                        rec.id
                    )));
                }
                let (m, flags, col) = if i < p {
                    (&mut y, &mut vis, i)
                } else {
                    (&mut y_dag, &mut vis_dag, i - p)
                };
                m[(0, col)] = *u;
                m[(1, col)] = *v;
                flags[col] = true;
            }
            let img = KeypointImage::new(y, y_dag, vis, vis_dag)?;
            if img.visible_count() < MIN_VISIBLE_KEYPOINTS {
                dropped.push(rec.id.clone());
                continue;
            }
            ids.push(rec.id.clone());
            images.push(img);
        }
        if !dropped.is_empty() {
            warn!(
                "dropped {} image(s) with fewer than {MIN_VISIBLE_KEYPOINTS} visible keypoints: {}",
                dropped.len(),
                dropped.join(", ")
            );
        }

        let manhattan = match &file.manhattan {
            None => None,
            Some(m) => {
                let idx = |axis: &[String; 2], label: &str| -> Result<(usize, usize)> {
                    Ok((
                        names.get(&axis[0], label)?,
                        names.get(&axis[1], label)?,
                    ))
                };
                let spec = ManhattanSpec::new(
                    idx(&m.axis_x, "manhattan axis_x")?,
                    idx(&m.axis_y, "manhattan axis_y")?,
                    idx(&m.axis_z, "manhattan axis_z")?,
                );
                spec.validate(p)?;
                Some(spec)
            }
        };

        let groundtruth = match &file.groundtruth {
            None => None,
            Some(gt) => {
                let shape = shape_from_record(&pairs, &gt.shape, MIRROR_TOL)?;
                let poses = gt
                    .poses
                    .iter()
                    .map(|(id, m)| Ok((id.clone(), pose_from_record(m, id)?)))
                    .collect::<Result<_>>()?;
                Some(DatasetGroundTruth { shape, poses })
            }
        };

        Ok(Self {
            pairs,
            ids,
            images,
            manhattan,
            groundtruth,
            dropped,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(&DatasetFile::read(path)?)
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Name of keypoint `i` of the concatenation `[Y, Y†]`.
    pub fn keypoint_name(&self, i: usize) -> &str {
        let p = self.n_pairs();
        if i < p {
            &self.pairs[i].0
        } else {
            &self.pairs[i - p].1
        }
    }

    /// Groundtruth restricted to (and ordered by) the given image ids.
    pub fn groundtruth_for(&self, ids: &[String]) -> Result<Option<GroundTruth>> {
        let Some(gt) = &self.groundtruth else {
            return Ok(None);
        };
        let poses = ids
            .iter()
            .map(|id| {
                gt.poses.get(id).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!("groundtruth has no pose for image `{id}`"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Some(GroundTruth {
            shape: gt.shape.clone(),
            poses,
        }))
    }

    /// Observation record of image `n` by keypoint name, occluded entries
    /// `None`.
    fn keypoint_record(&self, img: &KeypointImage) -> IndexMap<String, Option<[f64; 2]>> {
        (0..2 * self.n_pairs())
            .map(|i| {
                let k = img.keypoint(i);
                (
                    self.keypoint_name(i).to_string(),
                    img.is_visible(i).then_some([k.x, k.y]),
                )
            })
            .collect()
    }

    pub fn to_file(&self) -> DatasetFile {
        let name = |i: usize| self.keypoint_name(i).to_string();
        DatasetFile {
            schema_version: SCHEMA_VERSION,
            pairs: self.pairs.iter().map(|(l, r)| [l.clone(), r.clone()]).collect(),
            images: self
                .ids
                .iter()
                .zip(&self.images)
                .map(|(id, img)| ImageRecord {
                    id: id.clone(),
                    keypoints: self.keypoint_record(img),
                })
                .collect(),
            manhattan: self.manhattan.map(|m| {
                let axis = |(a, b): (usize, usize)| [name(a), name(b)];
                ManhattanRecord {
                    axis_x: axis(m.axes[0]),
                    axis_y: axis(m.axes[1]),
                    axis_z: axis(m.axes[2]),
                }
            }),
            groundtruth: self.groundtruth.as_ref().map(|gt| GroundTruthRecord {
                shape: shape_record(&self.pairs, &gt.shape),
                poses: gt
                    .poses
                    .iter()
                    .map(|(id, p)| (id.clone(), pose_record(p)))
                    .collect(),
            }),
        }
    }
}

/// Keypoint names used for generated scenes: `kJ_left` / `kJ_right`.
pub fn synthetic_pair_names(n_pairs: usize) -> Vec<(String, String)> {
    (0..n_pairs)
        .map(|j| (format!("k{j}_left"), format!("k{j}_right")))
        .collect()
}

/// Dataset for a generated scene, optionally with its groundtruth block.
pub fn dataset_from_scene(scene: &Scene, with_groundtruth: bool) -> Dataset {
    let ids: Vec<String> = (0..scene.images.len()).map(|n| format!("img{n:03}")).collect();
    // The file format stores rotations only.
    let groundtruth = with_groundtruth.then(|| DatasetGroundTruth {
        shape: scene.shape.clone(),
        poses: ids
            .iter()
            .cloned()
            .zip(scene.poses.iter().map(|p| CameraPose {
                r: p.r,
                t: Vector2::zeros(),
            }))
            .collect(),
    });
    Dataset {
        pairs: synthetic_pair_names(scene.shape.n_pairs()),
        ids,
        images: scene.images.clone(),
        manhattan: scene.manhattan,
        groundtruth,
        dropped: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SingleImage,
    MultiImage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub r: [[f64; 3]; 2],
    pub t: [f64; 2],
}

impl PoseRecord {
    pub fn from_pose(pose: &CameraPose) -> Self {
        Self {
            r: pose_record(pose),
            t: [pose.t.x, pose.t.y],
        }
    }

    pub fn to_pose(&self) -> CameraPose {
        let m = &self.r;
        CameraPose {
            r: Matrix2x3::new(m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2]),
            t: Vector2::new(self.t[0], self.t[1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternativeRecord {
    pub pose: PoseRecord,
    pub shape: IndexMap<String, [f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageResult {
    pub id: String,
    pub pose: PoseRecord,
    /// Observations with occluded entries replaced by imputed values.
    pub observations: IndexMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imputed: Vec<String>,
    /// Per-image shape (single-image reconstruction only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<IndexMap<String, [f64; 3]>>,
    /// The other members of the sign family (single-image, on request).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<AlternativeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkippedImage {
    pub id: String,
    pub reason: String,
}

/// Everything a reconstruction run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema_version: u32,
    pub method: Method,
    pub pairs: Vec<[String; 2]>,
    pub images: Vec<ImageResult>,
    /// Shared shape (multi-image reconstruction only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<IndexMap<String, [f64; 3]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_images: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_images: Vec<SkippedImage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalReport>,
}

impl ResultFile {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        check_version(text)?;
        parse_json(text, source_name)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    fn pair_list(&self) -> Vec<(String, String)> {
        self.pairs.iter().map(|[l, r]| (l.clone(), r.clone())).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.images.iter().map(|i| i.id.clone()).collect()
    }

    pub fn poses(&self) -> Vec<CameraPose> {
        self.images.iter().map(|i| i.pose.to_pose()).collect()
    }

    /// The shared shape, or one shape per image. Shapes are stored
    /// mirror-consistent, so they are read back without tolerance.
    pub fn shapes(&self) -> Result<Vec<Structure3D>> {
        let pairs = self.pair_list();
        let read = |rec: &IndexMap<String, [f64; 3]>| shape_from_record(&pairs, rec, f64::INFINITY);
        match &self.shape {
            Some(shape) => Ok(vec![read(shape)?]),
            None => self
                .images
                .iter()
                .map(|img| {
                    img.shape.as_ref().map(read).unwrap_or_else(|| {
                        Err(Error::InvalidInput(format!(
                            "result has no shape for image `{}`",
                            img.id
                        )))
                    })
                })
                .collect(),
        }
    }
}

/// Builds the result record of one image.
pub fn image_result(
    pairs: &[(String, String)],
    id: &str,
    pose: &CameraPose,
    filled: &KeypointImage,
    original: &KeypointImage,
) -> ImageResult {
    let p = pairs.len();
    let name = |i: usize| {
        if i < p {
            pairs[i].0.clone()
        } else {
            pairs[i - p].1.clone()
        }
    };
    let observations = (0..2 * p)
        .map(|i| {
            let k = filled.keypoint(i);
            (name(i), [k.x, k.y])
        })
        .collect();
    let imputed = (0..2 * p).filter(|&i| !original.is_visible(i)).map(name).collect();
    ImageResult {
        id: id.to_string(),
        pose: PoseRecord::from_pose(pose),
        observations,
        imputed,
        shape: None,
        alternatives: Vec::new(),
    }
}

pub fn shape_to_record(pairs: &[(String, String)], shape: &Structure3D) -> IndexMap<String, [f64; 3]> {
    shape_record(pairs, shape)
}

/// Iteration trace as CSV with a header row.
pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut out = String::from("iteration,energy,max_orthogonality_violation\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            r.iteration, r.energy, r.max_orthogonality_violation
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// ASCII PLY vertex list of the full shape, each left point followed by its
/// mirror.
pub fn export_points(shape: &Structure3D, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_ply(shape, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn write_ply<W: Write>(shape: &Structure3D, w: &mut W) -> Result<()> {
    let s = shape.points();
    let m = shape.mirrored();
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", 2 * shape.n_pairs())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    writeln!(w, "end_header")?;
    for p in 0..shape.n_pairs() {
        for pts in [s, &m] {
            writeln!(w, "{} {} {}", pts[(0, p)], pts[(1, p)], pts[(2, p)])?;
        }
    }
    Ok(())
}
