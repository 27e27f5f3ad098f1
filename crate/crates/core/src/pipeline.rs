//! Dataset-level drivers shared by the CLI and the tests.

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{evaluate, EvalReport};
use crate::io::{
    image_result, shape_to_record, AlternativeRecord, Dataset, Method, PoseRecord, ResultFile,
    SkippedImage, SCHEMA_VERSION,
};
use crate::rsfm::{reconstruct_multi, MultiConfig};
use crate::single_image::{reconstruct_single, SingleImageConfig};

fn pair_arrays(ds: &Dataset) -> Vec<[String; 2]> {
    ds.pairs.iter().map(|(l, r)| [l.clone(), r.clone()]).collect()
}

/// Reconstructs every fully visible image on its own from the declared
/// Manhattan axes. Images that are occluded or degenerate are skipped and
/// listed; if none succeeds, the first failure is returned.
pub fn run_single(ds: &Dataset, cfg: &SingleImageConfig, all_signs: bool) -> Result<ResultFile> {
    let spec = ds.manhattan.ok_or_else(|| {
        Error::InvalidInput("single-image reconstruction needs Manhattan axes in the dataset".into())
    })?;
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    let mut first_error = None;
    for (id, img) in ds.ids.iter().zip(&ds.images) {
        let outcome = if img.all_visible() {
            reconstruct_single(img, &spec, cfg)
        } else {
            Err(Error::InvalidInput(format!(
                "image `{id}` has occluded keypoints; single-image reconstruction needs all of them"
            )))
        };
        match outcome {
            Ok(rec) => {
                let mut out = image_result(&ds.pairs, id, &rec.pose, img, img);
                out.shape = Some(shape_to_record(&ds.pairs, &rec.shape));
                if all_signs {
                    out.alternatives = rec.family[1..]
                        .iter()
                        .map(|(pose, shape)| AlternativeRecord {
                            pose: PoseRecord::from_pose(pose),
                            shape: shape_to_record(&ds.pairs, shape),
                        })
                        .collect();
                }
                images.push(out);
            }
            Err(e) => {
                warn!("skipping image `{id}`: {e}");
                skipped.push(SkippedImage {
                    id: id.clone(),
                    reason: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if images.is_empty() {
        return Err(first_error.unwrap_or_else(|| Error::InvalidInput("dataset has no images".into())));
    }
    let mut result = ResultFile {
        schema_version: SCHEMA_VERSION,
        method: Method::SingleImage,
        pairs: pair_arrays(ds),
        images,
        shape: None,
        trace: Vec::new(),
        converged: true,
        iterations: 0,
        dropped_images: ds.dropped.clone(),
        skipped_images: skipped,
        metrics: None,
    };
    result.metrics = metrics_if_available(&result, ds)?;
    Ok(result)
}

/// Joint reconstruction of all admitted images.
pub fn run_multi(ds: &Dataset, cfg: &MultiConfig) -> Result<ResultFile> {
    let rec = reconstruct_multi(&ds.images, cfg)?;
    let images = ds
        .ids
        .iter()
        .zip(rec.poses.iter().zip(rec.filled.iter().zip(&ds.images)))
        .map(|(id, (pose, (filled, original)))| image_result(&ds.pairs, id, pose, filled, original))
        .collect();
    let mut result = ResultFile {
        schema_version: SCHEMA_VERSION,
        method: Method::MultiImage,
        pairs: pair_arrays(ds),
        images,
        shape: Some(shape_to_record(&ds.pairs, &rec.shape)),
        trace: rec.trace,
        converged: rec.converged,
        iterations: rec.iterations,
        dropped_images: ds.dropped.clone(),
        skipped_images: Vec::new(),
        metrics: None,
    };
    result.metrics = metrics_if_available(&result, ds)?;
    Ok(result)
}

fn metrics_if_available(result: &ResultFile, ds: &Dataset) -> Result<Option<EvalReport>> {
    match ds.groundtruth_for(&result.ids())? {
        None => Ok(None),
        Some(gt) => Ok(Some(evaluate(&result.poses(), &result.shapes()?, &gt)?)),
    }
}

/// Rotation and shape errors of a saved result against a groundtruth
/// dataset, matching images by id.
pub fn evaluate_result(result: &ResultFile, groundtruth: &Dataset) -> Result<EvalReport> {
    if result.pairs.len() != groundtruth.n_pairs() {
        return Err(Error::LengthMismatch {
            what: "keypoint pairs in result and groundtruth",
            left: result.pairs.len(),
            right: groundtruth.n_pairs(),
        });
    }
    let gt = groundtruth
        .groundtruth_for(&result.ids())?
        .ok_or_else(|| Error::InvalidInput("groundtruth file has no groundtruth block".into()))?;
    evaluate(&result.poses(), &result.shapes()?, &gt)
}
