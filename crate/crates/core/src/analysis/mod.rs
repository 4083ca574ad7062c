//! Scene-level statistics relating concept recognition to classifier accuracy.
//!
//! [`Analysis::new`] joins a manifest with recognition records into
//! per-(scene, concept) aggregates. Everything downstream (scene reports,
//! correlations, the threshold sweep) reads from those aggregates, iterating
//! in label and concept-name order so results are bit-reproducible.

mod concepts;
pub mod special;
pub mod stats;
mod sweep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DatasetManifest, SceneClass};
use crate::results::RecognitionRecord;

pub use concepts::{
    classify_concept, popularity, uniqueness, ConceptClass, ConceptGlobalStats, ConceptSceneStats,
};
pub use stats::{
    correlation_p_value, distribution_stats, linear_fit, pearson, pearson_rho, quantile_sorted,
    Correlation, Distribution, LinearFit, StatsError,
};
pub use sweep::{best_cell, sweep, threshold_grid, SweepCell, SweepStatistic};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("scene {0} has no images")]
    EmptyScene(u32),
    #[error("recognition results missing for {} instance(s): {}", .0.len(), format_gaps(.0))]
    Coverage(Vec<(String, String)>),
    #[error("no recognition scores to summarize")]
    NoScores,
}

fn format_gaps(gaps: &[(String, String)]) -> String {
    let shown: Vec<_> = gaps
        .iter()
        .take(20)
        .map(|(i, c)| format!("{i}/{c}"))
        .collect();
    let more = gaps.len().saturating_sub(shown.len());
    if more > 0 {
        format!("{} (+{more} more)", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

/// Fraction of correctly classified images per scene label.
pub fn scene_accuracy(manifest: &DatasetManifest) -> Result<BTreeMap<u32, f64>, AnalysisError> {
    let mut totals: BTreeMap<u32, (usize, usize)> = manifest
        .scene_classes
        .iter()
        .map(|c| (c.label, (0, 0)))
        .collect();
    for image in &manifest.images {
        let entry = totals.entry(image.scene_label).or_default();
        entry.0 += 1;
        entry.1 += image.is_correct() as usize;
    }
    totals
        .into_iter()
        .map(|(label, (total, correct))| {
            if total == 0 {
                Err(AnalysisError::EmptyScene(label))
            } else {
                Ok((label, correct as f64 / total as f64))
            }
        })
        .collect()
}

/// `(S_unique + 1 - S_mislead) / 2`.
///
/// Evaluated as `0.5 * ((u - m) + 1)`: equal inputs give exactly 0.5 and
/// swapping the arguments gives exactly `1 - s`.
pub fn synthesized_score(s_unique: f64, s_mislead: f64) -> f64 {
    0.5 * ((s_unique - s_mislead) + 1.0)
}

/// Correlation outcome that may be undefined, with the reason when it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub reason: Option<String>,
}

pub const REASON_INSUFFICIENT: &str = "insufficient scenes";
pub const REASON_ZERO_VARIANCE: &str = "zero variance";

/// Pearson over the defined pairs. `rho` needs two points, the p-value three.
pub fn correlate_defined(pairs: &[(Option<f64>, f64)]) -> CorrelationSummary {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        pairs.iter().filter_map(|&(x, y)| x.map(|x| (x, y))).unzip();
    let n = xs.len();
    let undefined = |reason: &str| CorrelationSummary {
        rho: None,
        p_value: None,
        n,
        reason: Some(reason.to_string()),
    };
    if n < 2 {
        return undefined(REASON_INSUFFICIENT);
    }
    match pearson_rho(&xs, &ys) {
        Ok(rho) => CorrelationSummary {
            rho: Some(rho),
            p_value: (n >= 3).then(|| correlation_p_value(rho, n)),
            n,
            reason: None,
        },
        Err(StatsError::ZeroVariance) => undefined(REASON_ZERO_VARIANCE),
        Err(e) => undefined(&e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene_label: u32,
    pub scene_name: String,
    pub images: usize,
    pub accuracy: f64,
    /// Mean score over every scored (image, concept) instance of the scene.
    pub mean_recognition: Option<f64>,
    /// Slope of occurrences (y) against mean concept score (x) across the scene's concepts.
    pub slope: Option<f64>,
    pub s_unique: Option<f64>,
    pub s_mislead: Option<f64>,
    pub s_syn: Option<f64>,
}

/// One scored (or failed) concept occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub scene_label: u32,
    pub image_id: String,
    pub concept: String,
    pub score: Option<f64>,
}

/// Per-scene instance means over unique and misleading concepts at one threshold pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMeans {
    pub s_unique: Option<f64>,
    pub s_mislead: Option<f64>,
}

impl ClassMeans {
    pub fn s_syn(&self) -> Option<f64> {
        Some(synthesized_score(self.s_unique?, self.s_mislead?))
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    scenes: Vec<SceneClass>,
    images_per_scene: Vec<usize>,
    accuracy: Vec<f64>,
    instances: Vec<Instance>,
    /// Sorted by (scene, concept).
    concept_scene: Vec<ConceptSceneStats>,
    /// Sorted by concept.
    concept_global: Vec<ConceptGlobalStats>,
    /// Range into `concept_scene` for each scene label.
    scene_ranges: Vec<std::ops::Range<usize>>,
}

impl Analysis {
    /// Joins manifest occurrences with recognition records. Every occurrence must
    /// have a record; error records are kept as unscored occurrences.
    pub fn new(
        manifest: &DatasetManifest,
        records: &[RecognitionRecord],
    ) -> Result<Self, AnalysisError> {
        let accuracy_map = scene_accuracy(manifest)?;
        let mut scenes = manifest.scene_classes.clone();
        scenes.sort_by_key(|c| c.label);
        let n_scenes = scenes.len();

        let lookup: BTreeMap<(&str, &str), &RecognitionRecord> = records
            .iter()
            .map(|r| ((r.image_id.as_str(), r.concept.as_str()), r))
            .collect();

        let mut images_per_scene = vec![0usize; n_scenes];
        let mut instances = Vec::new();
        let mut gaps = Vec::new();
        for image in manifest.images_sorted() {
            images_per_scene[image.scene_label as usize] += 1;
            for concept in image.concept_masks.keys() {
                match lookup.get(&(image.image_id.as_str(), concept.as_str())) {
                    Some(record) => instances.push(Instance {
                        scene_label: image.scene_label,
                        image_id: image.image_id.clone(),
                        concept: concept.clone(),
                        score: record.score(),
                    }),
                    None => gaps.push((image.image_id.clone(), concept.clone())),
                }
            }
        }
        if !gaps.is_empty() {
            return Err(AnalysisError::Coverage(gaps));
        }

        // Scene presence per concept.
        let mut presence: BTreeMap<&str, std::collections::BTreeSet<u32>> = BTreeMap::new();
        for inst in &instances {
            presence
                .entry(&inst.concept)
                .or_default()
                .insert(inst.scene_label);
        }
        let concept_global = presence
            .iter()
            .map(|(name, set)| {
                Ok(ConceptGlobalStats {
                    concept_name: name.to_string(),
                    scene_presence_count: set.len(),
                    uniqueness: uniqueness(set.len(), n_scenes)?,
                })
            })
            .collect::<Result<Vec<_>, StatsError>>()?;
        let uniq: BTreeMap<&str, f64> = concept_global
            .iter()
            .map(|g| (g.concept_name.as_str(), g.uniqueness))
            .collect();

        let mut per: BTreeMap<(u32, &str), (usize, usize, f64)> = BTreeMap::new();
        for inst in &instances {
            let e = per.entry((inst.scene_label, &inst.concept)).or_default();
            e.0 += 1;
            if let Some(s) = inst.score {
                e.1 += 1;
                e.2 += s;
            }
        }
        let mut concept_scene = Vec::with_capacity(per.len());
        for ((label, name), (occ, scored, sum)) in per {
            concept_scene.push(ConceptSceneStats {
                concept_name: name.to_string(),
                scene_label: label,
                occurrence_count: occ,
                scored_count: scored,
                score_sum: sum,
                mean_score: (scored > 0).then(|| sum / scored as f64),
                popularity: popularity(occ, images_per_scene[label as usize])?,
                uniqueness: uniq[name],
            });
        }
        let mut scene_ranges = vec![0..0; n_scenes];
        let mut start = 0;
        for (label, range) in scene_ranges.iter_mut().enumerate() {
            let end = start
                + concept_scene[start..]
                    .iter()
                    .take_while(|s| s.scene_label as usize == label)
                    .count();
            *range = start..end;
            start = end;
        }

        Ok(Self {
            accuracy: scenes.iter().map(|c| accuracy_map[&c.label]).collect(),
            scenes,
            images_per_scene,
            instances,
            concept_scene,
            concept_global,
            scene_ranges,
        })
    }

    pub fn scenes(&self) -> &[SceneClass] {
        &self.scenes
    }

    /// Accuracy indexed by scene label.
    pub fn accuracy(&self) -> &[f64] {
        &self.accuracy
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn concept_scene_stats(&self) -> &[ConceptSceneStats] {
        &self.concept_scene
    }

    pub fn concept_global_stats(&self) -> &[ConceptGlobalStats] {
        &self.concept_global
    }

    pub fn scene_concepts(&self, label: u32) -> &[ConceptSceneStats] {
        &self.concept_scene[self.scene_ranges[label as usize].clone()]
    }

    /// Every scored instance, in (scene, image, concept) order.
    pub fn scores(&self) -> Vec<f64> {
        self.instances.iter().filter_map(|i| i.score).collect()
    }

    pub fn score_distribution(&self) -> Result<Distribution, AnalysisError> {
        let scores = self.scores();
        if scores.is_empty() {
            return Err(AnalysisError::NoScores);
        }
        Ok(distribution_stats(&scores)?)
    }

    fn scene_mean(&self, label: u32) -> Option<f64> {
        let (n, sum) = self
            .scene_concepts(label)
            .iter()
            .fold((0usize, 0.0f64), |(n, s), c| {
                (n + c.scored_count, s + c.score_sum)
            });
        (n > 0).then(|| sum / n as f64)
    }

    fn scene_slope(&self, label: u32) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .scene_concepts(label)
            .iter()
            .filter_map(|c| c.mean_score.map(|m| (m, c.occurrence_count as f64)))
            .unzip();
        linear_fit(&xs, &ys).ok().map(|f| f.slope)
    }

    /// Instance-level means over the unique and misleading concepts of one scene.
    pub fn class_means(&self, label: u32, alpha: f64, beta: f64) -> ClassMeans {
        let (mut un, mut us, mut mn, mut ms) = (0usize, 0.0f64, 0usize, 0.0f64);
        for c in self.scene_concepts(label) {
            match classify_concept(c.uniqueness, c.popularity, alpha, beta) {
                ConceptClass::Unique => {
                    un += c.scored_count;
                    us += c.score_sum;
                }
                ConceptClass::Misleading => {
                    mn += c.scored_count;
                    ms += c.score_sum;
                }
                ConceptClass::Excluded => {}
            }
        }
        ClassMeans {
            s_unique: (un > 0).then(|| us / un as f64),
            s_mislead: (mn > 0).then(|| ms / mn as f64),
        }
    }

    /// Concept partition of one scene at `(alpha, beta)`.
    pub fn classify_scene(&self, label: u32, alpha: f64, beta: f64) -> Vec<(&str, ConceptClass)> {
        self.scene_concepts(label)
            .iter()
            .map(|c| {
                (
                    c.concept_name.as_str(),
                    classify_concept(c.uniqueness, c.popularity, alpha, beta),
                )
            })
            .collect()
    }

    pub fn scene_reports(&self, alpha: f64, beta: f64) -> Vec<SceneReport> {
        self.scenes
            .iter()
            .map(|class| {
                let label = class.label;
                let means = self.class_means(label, alpha, beta);
                SceneReport {
                    scene_label: label,
                    scene_name: class.name.clone(),
                    images: self.images_per_scene[label as usize],
                    accuracy: self.accuracy[label as usize],
                    mean_recognition: self.scene_mean(label),
                    slope: self.scene_slope(label),
                    s_unique: means.s_unique,
                    s_mislead: means.s_mislead,
                    s_syn: means.s_syn(),
                }
            })
            .collect()
    }
}
