//! Concept popularity, uniqueness and the unique / misleading / excluded partition.

use serde::{Deserialize, Serialize};

use super::stats::StatsError;

/// Fraction of a scene's sampled images that contain the concept.
pub fn popularity(occurrences: usize, images_sampled: usize) -> Result<f64, StatsError> {
    if images_sampled == 0 {
        return Err(StatsError::InvalidArgument(
            "scene has no sampled images".into(),
        ));
    }
    if occurrences > images_sampled {
        return Err(StatsError::InvalidArgument(format!(
            "{occurrences} occurrences exceed {images_sampled} sampled images"
        )));
    }
    Ok(occurrences as f64 / images_sampled as f64)
}

/// One minus the fraction of scene classes the concept appears in.
pub fn uniqueness(scene_presence: usize, total_classes: usize) -> Result<f64, StatsError> {
    if scene_presence == 0 {
        return Err(StatsError::InvalidArgument(
            "concept appears in no scene class".into(),
        ));
    }
    if scene_presence > total_classes {
        return Err(StatsError::InvalidArgument(format!(
            "presence {scene_presence} exceeds {total_classes} scene classes"
        )));
    }
    Ok(1.0 - scene_presence as f64 / total_classes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptClass {
    Unique,
    Misleading,
    /// Too sparse in the scene to count (popularity at or below the threshold).
    Excluded,
}

/// Popular concepts (`popularity > beta`) are unique when `uniqueness > alpha`
/// and misleading otherwise; the rest are excluded.
pub fn classify_concept(uniqueness: f64, popularity: f64, alpha: f64, beta: f64) -> ConceptClass {
    if popularity <= beta {
        ConceptClass::Excluded
    } else if uniqueness > alpha {
        ConceptClass::Unique
    } else {
        ConceptClass::Misleading
    }
}

/// Per-(scene, concept) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSceneStats {
    pub concept_name: String,
    pub scene_label: u32,
    /// Sampled images of the scene containing the concept.
    pub occurrence_count: usize,
    /// Occurrences with a recognition score (failed records are not scored).
    pub scored_count: usize,
    pub score_sum: f64,
    /// Mean score over the scored occurrences.
    pub mean_score: Option<f64>,
    pub popularity: f64,
    pub uniqueness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptGlobalStats {
    pub concept_name: String,
    pub scene_presence_count: usize,
    pub uniqueness: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn popularity_examples() {
        assert_eq!(popularity(45, 50).unwrap(), 0.9);
        assert_eq!(popularity(0, 50).unwrap(), 0.0);
        assert_eq!(popularity(50, 50).unwrap(), 1.0);
        assert!(popularity(1, 0).is_err());
        assert!(popularity(51, 50).is_err());
    }

    #[test]
    fn uniqueness_examples() {
        assert_eq!(uniqueness(15, 16).unwrap(), 0.0625);
        assert_eq!(uniqueness(12, 16).unwrap(), 0.25);
        assert_eq!(uniqueness(16, 16).unwrap(), 0.0);
        assert_eq!(uniqueness(1, 16).unwrap(), 0.9375);
        assert!(uniqueness(0, 16).is_err());
        assert!(uniqueness(17, 16).is_err());
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(
            classify_concept(0.9375, 0.8, 0.55, 0.4),
            ConceptClass::Unique
        );
        assert_eq!(
            classify_concept(0.0625, 0.9, 0.55, 0.4),
            ConceptClass::Misleading
        );
        assert_eq!(
            classify_concept(0.9375, 0.02, 0.55, 0.4),
            ConceptClass::Excluded
        );
        // Boundaries: popularity must exceed beta; uniqueness equal to alpha is misleading.
        assert_eq!(classify_concept(0.9, 0.4, 0.5, 0.4), ConceptClass::Excluded);
        assert_eq!(
            classify_concept(0.55, 0.9, 0.55, 0.4),
            ConceptClass::Misleading
        );
    }
}
