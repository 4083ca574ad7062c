use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::format::{peek_mask_dims, peek_stack_header};
use super::{read_file, IngestError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneClass {
    pub label: u32,
    pub name: String,
}

/// One sampled image: ground-truth scene, the classifier's top-1 prediction,
/// its annotated concepts and its feature-map stack. Paths are relative to
/// the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub scene_label: u32,
    pub predicted_label: u32,
    pub concept_masks: BTreeMap<String, PathBuf>,
    pub feature_stack_path: PathBuf,
}

impl ImageRecord {
    pub fn is_correct(&self) -> bool {
        self.scene_label == self.predicted_label
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub scene_classes: Vec<SceneClass>,
    pub layer_feature_map_count: u32,
    pub images: Vec<ImageRecord>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn scene_count(&self) -> usize {
        self.scene_classes.len()
    }

    pub fn scene_name(&self, label: u32) -> Option<&str> {
        self.scene_classes
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.name.as_str())
    }

    /// Images ordered by `(scene_label, image_id)`.
    pub fn images_sorted(&self) -> Vec<&ImageRecord> {
        let mut images: Vec<_> = self.images.iter().collect();
        images.sort_by(|a, b| (a.scene_label, &a.image_id).cmp(&(b.scene_label, &b.image_id)));
        images
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Checks everything that does not touch the filesystem.
    pub fn validate_structure(&self) -> Result<(), IngestError> {
        let mut labels = BTreeSet::new();
        for class in &self.scene_classes {
            if !labels.insert(class.label) {
                return Err(IngestError::DuplicateLabel(class.label));
            }
        }
        if let Some(missing) = (0..self.scene_classes.len() as u32).find(|l| !labels.contains(l)) {
            return Err(IngestError::NonContiguousLabels(missing));
        }
        if self.layer_feature_map_count == 0 {
            return Err(IngestError::Parse(
                "layer_feature_map_count must be positive".into(),
            ));
        }
        let mut ids = BTreeSet::new();
        for image in &self.images {
            if !ids.insert(image.image_id.as_str()) {
                return Err(IngestError::DuplicateImage(image.image_id.clone()));
            }
            for label in [image.scene_label, image.predicted_label] {
                if !labels.contains(&label) {
                    return Err(IngestError::UnknownSceneLabel {
                        image_id: image.image_id.clone(),
                        label,
                    });
                }
            }
            if image
                .concept_masks
                .keys()
                .any(|name| name.trim().is_empty())
            {
                return Err(IngestError::EmptyConceptName(image.image_id.clone()));
            }
        }
        Ok(())
    }

    /// Checks referenced files exist and their headers agree with the manifest.
    pub fn validate_files(&self) -> Result<(), IngestError> {
        for image in &self.images {
            let stack_path = self.resolve(&image.feature_stack_path);
            if !stack_path.is_file() {
                return Err(IngestError::DanglingReference {
                    image_id: image.image_id.clone(),
                    path: stack_path,
                });
            }
            let header = peek_stack_header(&stack_path)?;
            if header.planes != self.layer_feature_map_count {
                return Err(IngestError::FeatureMapCount {
                    image_id: image.image_id.clone(),
                    expected: self.layer_feature_map_count,
                    actual: header.planes,
                });
            }
            for mask_path in image.concept_masks.values() {
                let path = self.resolve(mask_path);
                if !path.is_file() {
                    return Err(IngestError::DanglingReference {
                        image_id: image.image_id.clone(),
                        path,
                    });
                }
                let (w, h) = peek_mask_dims(&path)?;
                if (w, h) != (header.width, header.height) {
                    return Err(IngestError::DimensionMismatch {
                        image_id: image.image_id.clone(),
                        path,
                        width: header.width,
                        height: header.height,
                        found_width: w,
                        found_height: h,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parses manifest JSON and applies the structural checks only.
pub fn parse_manifest(
    json: &str,
    root: impl Into<PathBuf>,
) -> Result<DatasetManifest, IngestError> {
    let mut manifest: DatasetManifest =
        serde_json::from_str(json).map_err(|e| IngestError::Parse(e.to_string()))?;
    manifest.root = root.into();
    manifest.validate_structure()?;
    Ok(manifest)
}

/// Loads and fully validates a manifest, including the files it references.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, IngestError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let json = std::str::from_utf8(&bytes)
        .map_err(|e| IngestError::Parse(format!("manifest is not UTF-8: {e}")).in_file(path))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = parse_manifest(json, root).map_err(|e| e.in_file(path))?;
    manifest.validate_files()?;
    Ok(manifest)
}
