//! Seeded synthetic datasets with planted recognition quality.
//!
//! Every image gets a grid of disjoint rectangular concept masks. A concept
//! with planted quality `q` receives up to four feature maps that split a
//! chosen subset of its mask between them, plus off-concept noise pixels on
//! the image background. Maps never touch another concept's mask, so the
//! greedy outcome for each concept depends only on its own fragments and can
//! be computed from pixel counts alone. [`SynthDataset::planted`] carries
//! those expected scores.
//!
//! Generation is single-threaded and driven by one ChaCha8 stream, so the
//! same spec always produces the same bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    save_bitmask, save_feature_stack, DatasetManifest, FeatureMapStack, ImageRecord, SceneClass,
};
use crate::mask::Bitmask;
use crate::recognition::DEFAULT_DELTA;

/// Largest allowed gap between a planted quality and the score greedy will reach.
pub const QUALITY_TOLERANCE: f64 = 0.05;
const MAX_FRAGMENTS: usize = 4;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Spec(String),
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error("spec json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptPlan {
    pub name: String,
    /// Fraction of each listed scene's images containing the concept.
    pub popularity: f64,
    /// Scene labels the concept appears in.
    pub scenes: Vec<u32>,
    pub quality: f64,
    /// Per-scene quality override, parallel to `scenes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_quality: Option<Vec<f64>>,
}

impl ConceptPlan {
    fn quality_in(&self, pos: usize) -> f64 {
        self.scene_quality.as_ref().map_or(self.quality, |q| q[pos])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub num_scenes: u32,
    pub images_per_scene: u32,
    pub feature_maps: u32,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_names: Option<Vec<String>>,
    pub concept_plan: Vec<ConceptPlan>,
    /// Target classifier accuracy per scene label.
    pub accuracy_plan: Vec<f64>,
}

fn spec_err(msg: impl Into<String>) -> SynthError {
    SynthError::Spec(msg.into())
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let spec: SynthSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (what, v) in [
            ("num_scenes", self.num_scenes),
            ("images_per_scene", self.images_per_scene),
            ("feature_maps", self.feature_maps),
            ("width", self.width),
            ("height", self.height),
        ] {
            if v == 0 {
                return Err(spec_err(format!("{what} must be positive")));
            }
        }
        if self.accuracy_plan.len() != self.num_scenes as usize {
            return Err(spec_err(format!(
                "accuracy_plan has {} entries for {} scenes",
                self.accuracy_plan.len(),
                self.num_scenes
            )));
        }
        if let Some(a) = self.accuracy_plan.iter().find(|a| !unit_interval(**a)) {
            return Err(spec_err(format!("accuracy {a} outside [0, 1]")));
        }
        if let Some(names) = &self.scene_names {
            if names.len() != self.num_scenes as usize {
                return Err(spec_err("scene_names length differs from num_scenes"));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.concept_plan {
            let valid_name = !c.name.is_empty()
                && c.name
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-');
            if !valid_name {
                return Err(spec_err(format!(
                    "concept name {:?} must be [A-Za-z0-9_-]+",
                    c.name
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(spec_err(format!("duplicate concept {:?}", c.name)));
            }
            if c.scenes.is_empty() {
                return Err(spec_err(format!("concept {:?} has no scenes", c.name)));
            }
            let distinct: BTreeSet<_> = c.scenes.iter().collect();
            if distinct.len() != c.scenes.len() {
                return Err(spec_err(format!("concept {:?} repeats a scene", c.name)));
            }
            if let Some(s) = c.scenes.iter().find(|s| **s >= self.num_scenes) {
                return Err(spec_err(format!(
                    "concept {:?} names unknown scene {s}",
                    c.name
                )));
            }
            let mut qualities =
                std::iter::once(c.quality).chain(c.scene_quality.iter().flatten().copied());
            if qualities.any(|q| !unit_interval(q)) {
                return Err(spec_err(format!(
                    "concept {:?} quality outside [0, 1]",
                    c.name
                )));
            }
            if c.scene_quality
                .as_ref()
                .is_some_and(|q| q.len() != c.scenes.len())
            {
                return Err(spec_err(format!(
                    "concept {:?} scene_quality length differs from scenes",
                    c.name
                )));
            }
            if !(c.popularity > 0.0 && c.popularity <= 1.0) {
                return Err(SynthError::Infeasible(format!(
                    "concept {:?} popularity {} outside (0, 1]",
                    c.name, c.popularity
                )));
            }
            let exact = c.popularity * self.images_per_scene as f64;
            if (exact - exact.round()).abs() > 1e-9 {
                return Err(SynthError::Infeasible(format!(
                    "concept {:?} popularity {} is not a multiple of 1/{}",
                    c.name, c.popularity, self.images_per_scene
                )));
            }
        }
        if self.num_scenes == 1 && self.accuracy_plan[0] < 1.0 {
            let n = self.images_per_scene as f64;
            if (self.accuracy_plan[0] * n).round() < n {
                return Err(SynthError::Infeasible(
                    "a single scene has no other label to mispredict".into(),
                ));
            }
        }
        Ok(())
    }

    fn scene_name(&self, label: u32) -> String {
        self.scene_names.as_ref().map_or_else(
            || format!("scene_{label:02}"),
            |n| n[label as usize].clone(),
        )
    }
}

/// Expected outcome for one generated (image, concept) instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub scene_label: u32,
    pub image_id: String,
    pub concept: String,
    pub quality: f64,
    pub mask_pixels: u64,
    /// Greedy score at the default delta, from pixel counts.
    pub expected_score: f64,
    pub fragments: usize,
}

#[derive(Debug, Clone)]
pub struct SynthImage {
    pub record: ImageRecord,
    pub concept_masks: BTreeMap<String, Bitmask>,
    pub stack: FeatureMapStack,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub spec: SynthSpec,
    /// Manifest with paths relative to the dataset directory.
    pub manifest: DatasetManifest,
    /// Same order as `manifest.images`.
    pub images: Vec<SynthImage>,
    /// Ordered by (scene, image, concept).
    pub planted: Vec<PlantedInstance>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl SynthDataset {
    /// Writes `manifest.json`, `masks/<image>/<concept>.cmask` and `stacks/<image>.cstk` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<DatasetManifest, SynthError> {
        let dir = dir.as_ref();
        let mkdir = |p: &Path| {
            std::fs::create_dir_all(p).map_err(|source| SynthError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        mkdir(&dir.join("stacks"))?;
        for image in &self.images {
            let rec = &image.record;
            mkdir(&dir.join("masks").join(&rec.image_id))?;
            for (concept, rel) in &rec.concept_masks {
                save_bitmask(dir.join(rel), &image.concept_masks[concept])?;
            }
            save_feature_stack(dir.join(&rec.feature_stack_path), &image.stack)?;
        }
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest.to_json())
            .map_err(|source| SynthError::Io { path, source })?;
        let mut manifest = self.manifest.clone();
        manifest.root = dir.to_path_buf();
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Fragment {
    hits: u64,
    noise: u64,
}

/// Greedy over disjoint fragments of one concept of `area` pixels, compared
/// exactly; returns the final score and how many fragments were taken.
fn simulate_greedy(area: u64, fragments: &[Fragment], delta: f64) -> (f64, usize) {
    let (mut inter, mut uni) = (0u64, area);
    let mut score = 0.0f64;
    let mut left: Vec<Fragment> = fragments.to_vec();
    let mut taken = 0;
    loop {
        let mut best: Option<(usize, u64, u64)> = None;
        for (i, f) in left.iter().enumerate() {
            let (n, d) = (inter + f.hits, uni + f.noise);
            let better = match best {
                None => n > 0,
                Some((_, bn, bd)) => n as u128 * bd as u128 > bn as u128 * d as u128,
            };
            if better {
                best = Some((i, n, d));
            }
        }
        let Some((i, n, d)) = best else { break };
        let candidate = n as f64 / d as f64;
        if candidate - score > delta {
            score = candidate;
            inter = n;
            uni = d;
            left.remove(i);
            taken += 1;
        } else {
            break;
        }
    }
    (score, taken)
}

/// Random composition of `total` into `k` positive parts.
fn split_positive(rng: &mut ChaCha8Rng, total: u64, k: usize) -> Vec<u64> {
    debug_assert!(k >= 1 && total >= k as u64);
    let mut cuts: Vec<u64> = index::sample(rng, total as usize - 1, k - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        parts.push(c - prev);
        prev = c;
    }
    parts
}

struct Rect {
    x: u32,
    y: u32,
    w: u32,
    h: u32,
}

/// Disjoint random rectangles, one per grid cell, in shuffled cell order.
fn layout(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    count: usize,
) -> Result<Vec<Rect>, SynthError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let cols = (count as f64).sqrt().ceil() as u32;
    let rows = (count as u32).div_ceil(cols);
    let (cw, ch) = (width / cols, height / rows);
    let (ix, iy) = ((cw / 8).max(1), (ch / 8).max(1));
    if cw <= 2 * ix || ch <= 2 * iy {
        return Err(SynthError::Infeasible(format!(
            "{width}x{height} image too small for {count} concepts"
        )));
    }
    let (max_w, max_h) = (cw - 2 * ix, ch - 2 * iy);
    let mut cells: Vec<u32> = (0..cols * rows).collect();
    cells.shuffle(rng);
    Ok(cells[..count]
        .iter()
        .map(|&cell| {
            let w = rng.random_range(max_w.div_ceil(2)..=max_w);
            let h = rng.random_range(max_h.div_ceil(2)..=max_h);
            let x = (cell % cols) * cw + ix + rng.random_range(0..=max_w - w);
            let y = (cell / cols) * ch + iy + rng.random_range(0..=max_h - h);
            Rect { x, y, w, h }
        })
        .collect())
}

/// Hit and noise counts for a concept of `area` pixels at quality `q`, with the
/// fragment count chosen so greedy takes every fragment.
fn plan_fragments(
    rng: &mut ChaCha8Rng,
    area: u64,
    q: f64,
    max_fragments: usize,
) -> (Vec<Fragment>, f64) {
    if q <= 0.0 {
        return (Vec::new(), 0.0);
    }
    let hits = ((1.25 * q).min(1.0) * area as f64).round().max(1.0) as u64;
    let noise = (hits as f64 / q - area as f64).round().max(0.0) as u64;
    let mut k = if q >= 1.0 {
        1
    } else {
        rng.random_range(1..=max_fragments.min(hits as usize))
    };
    loop {
        let hit_parts = split_positive(rng, hits, k);
        let mut noise_parts = vec![0u64; k];
        for _ in 0..noise {
            noise_parts[rng.random_range(0..k)] += 1;
        }
        let frags: Vec<Fragment> = hit_parts
            .into_iter()
            .zip(noise_parts)
            .map(|(hits, noise)| Fragment { hits, noise })
            .collect();
        let (score, taken) = simulate_greedy(area, &frags, DEFAULT_DELTA);
        if taken == k || k == 1 {
            return (frags, score);
        }
        k -= 1;
    }
}

fn sample_rows(rng: &mut ChaCha8Rng, n: usize, amount: usize) -> Vec<usize> {
    let mut rows = index::sample(rng, n, amount).into_vec();
    rows.sort_unstable();
    rows
}

pub fn generate(spec: &SynthSpec) -> Result<SynthDataset, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_img = spec.images_per_scene as usize;
    let (w, h) = (spec.width, spec.height);

    // Concept occurrences: (scene, image index) -> [(concept, quality)].
    let mut occurrences: BTreeMap<(u32, usize), Vec<(&str, f64)>> = BTreeMap::new();
    for c in &spec.concept_plan {
        let count = (c.popularity * n_img as f64).round() as usize;
        for (pos, &scene) in c.scenes.iter().enumerate() {
            for i in sample_rows(&mut rng, n_img, count) {
                occurrences
                    .entry((scene, i))
                    .or_default()
                    .push((c.name.as_str(), c.quality_in(pos)));
            }
        }
    }

    let mut images = Vec::new();
    let mut planted = Vec::new();
    for scene in 0..spec.num_scenes {
        let correct = (spec.accuracy_plan[scene as usize] * n_img as f64).round() as usize;
        let correct_rows: BTreeSet<usize> =
            sample_rows(&mut rng, n_img, correct).into_iter().collect();
        for i in 0..n_img {
            let image_id = format!("s{scene:02}_i{i:03}");
            let mut concepts = occurrences.remove(&(scene, i)).unwrap_or_default();
            concepts.sort_by(|a, b| a.0.cmp(b.0));
            let predicted_label = if correct_rows.contains(&i) {
                scene
            } else {
                (scene + 1) % spec.num_scenes
            };

            let rects = layout(&mut rng, w, h, concepts.len())?;
            let mut masks = Vec::with_capacity(concepts.len());
            for r in &rects {
                let coords = (r.y..r.y + r.h).flat_map(|y| (r.x..r.x + r.w).map(move |x| (x, y)));
                masks.push(Bitmask::from_coords(w, h, coords).expect("rect inside image"));
            }
            let mut occupied = Bitmask::empty(w, h).expect("positive dims");
            for m in &masks {
                occupied.union_with(m).expect("same shape");
            }
            let free: Vec<(u32, u32)> = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x, y)))
                .filter(|&(x, y)| !occupied.get(x, y))
                .collect();

            let max_frag = MAX_FRAGMENTS.min(spec.feature_maps as usize / concepts.len().max(1));
            let mut maps: Vec<Bitmask> = Vec::new();
            for ((name, q), mask) in concepts.iter().zip(&masks) {
                let area = mask.count_ones();
                let (frags, expected) = if *q > 0.0 && max_frag == 0 {
                    return Err(SynthError::Infeasible(format!(
                        "{} feature maps cannot hold {} concepts in image {image_id}",
                        spec.feature_maps,
                        concepts.len()
                    )));
                } else {
                    plan_fragments(&mut rng, area, *q, max_frag.max(1))
                };
                if (expected - q).abs() > QUALITY_TOLERANCE {
                    return Err(SynthError::Infeasible(format!(
                        "concept {name:?} in {image_id}: quality {q} not reachable on a {area}-pixel mask (best {expected:.4})"
                    )));
                }
                let noise_total: u64 = frags.iter().map(|f| f.noise).sum();
                if noise_total as usize > free.len() {
                    return Err(SynthError::Infeasible(format!(
                        "concept {name:?} in {image_id} needs {noise_total} noise pixels, {} free",
                        free.len()
                    )));
                }
                let mut mask_px: Vec<(u32, u32)> = mask.iter_ones().collect();
                mask_px.shuffle(&mut rng);
                let noise_px: Vec<(u32, u32)> =
                    index::sample(&mut rng, free.len(), noise_total as usize)
                        .into_iter()
                        .map(|j| free[j])
                        .collect();
                let (mut hp, mut np) = (0usize, 0usize);
                for f in &frags {
                    let px = mask_px[hp..hp + f.hits as usize]
                        .iter()
                        .chain(&noise_px[np..np + f.noise as usize])
                        .copied();
                    maps.push(Bitmask::from_coords(w, h, px).expect("inside image"));
                    hp += f.hits as usize;
                    np += f.noise as usize;
                }
                planted.push(PlantedInstance {
                    scene_label: scene,
                    image_id: image_id.clone(),
                    concept: name.to_string(),
                    quality: *q,
                    mask_pixels: area,
                    expected_score: expected,
                    fragments: frags.len(),
                });
            }
            if maps.len() > spec.feature_maps as usize {
                return Err(SynthError::Infeasible(format!(
                    "image {image_id} needs {} maps, stack has {}",
                    maps.len(),
                    spec.feature_maps
                )));
            }
            // Filler maps: scattered background pixels only.
            while maps.len() < spec.feature_maps as usize {
                let take = if free.is_empty() {
                    0
                } else {
                    rng.random_range(0..=free.len().min(16))
                };
                let px: Vec<_> = index::sample(&mut rng, free.len(), take)
                    .into_iter()
                    .map(|j| free[j])
                    .collect();
                maps.push(Bitmask::from_coords(w, h, px).expect("inside image"));
            }
            maps.shuffle(&mut rng);

            let concept_masks: BTreeMap<String, Bitmask> = concepts
                .iter()
                .zip(masks)
                .map(|((name, _), m)| (name.to_string(), m))
                .collect();
            let record = ImageRecord {
                image_id: image_id.clone(),
                scene_label: scene,
                predicted_label,
                concept_masks: concept_masks
                    .keys()
                    .map(|c| {
                        (
                            c.clone(),
                            PathBuf::from(format!("masks/{image_id}/{c}.cmask")),
                        )
                    })
                    .collect(),
                feature_stack_path: PathBuf::from(format!("stacks/{image_id}.cstk")),
            };
            images.push(SynthImage {
                record,
                concept_masks,
                stack: FeatureMapStack::new(maps)?,
            });
        }
    }

    let manifest = DatasetManifest {
        scene_classes: (0..spec.num_scenes)
            .map(|label| SceneClass {
                label,
                name: spec.scene_name(label),
            })
            .collect(),
        layer_feature_map_count: spec.feature_maps,
        images: images.iter().map(|i| i.record.clone()).collect(),
        root: PathBuf::new(),
    };
    manifest.validate_structure()?;
    planted.sort_by(|a, b| {
        (a.scene_label, &a.image_id, &a.concept).cmp(&(b.scene_label, &b.image_id, &b.concept))
    });
    Ok(SynthDataset {
        spec: spec.clone(),
        manifest,
        images,
        planted,
    })
}

/// Generates `spec` and writes it to `dir`.
pub fn generate_to_dir(
    spec: &SynthSpec,
    dir: impl AsRef<Path>,
) -> Result<SynthDataset, SynthError> {
    let ds = generate(spec)?;
    ds.write(dir)?;
    Ok(ds)
}

pub const PLANTED_SCENES: u32 = 16;
pub const PLANTED_IMAGES: u32 = 50;

/// Sixteen scenes of fifty 32x32 images over 64 maps. Each scene has one
/// concept of its own whose quality rises with the scene's accuracy, and two
/// widespread concepts (`wall` in all scenes, `floor` in twelve) whose quality
/// falls with it. Concepts shared by two or four scenes and rare per-scene
/// concepts carry random quality.
///
/// Threshold pairs with `alpha` in `[0.25, 0.9375)` and `beta` in `[0.5, 0.8)`
/// classify exactly the planted concepts as unique and misleading.
pub fn planted_preset(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fc0_ffee);
    let n = PLANTED_SCENES;
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(&mut rng);
    // Accuracies 0.30, 0.34, ..., 0.90 in shuffled scene order.
    let accuracy: Vec<f64> = (0..n)
        .map(|s| (15 + 2 * order[s as usize]) as f64 / PLANTED_IMAGES as f64)
        .collect();
    let coupled = |a: f64| ((0.15 + 0.7 * a) * 1e6).round() / 1e6;
    let anti = |a: f64| ((0.85 - 0.7 * a) * 1e6).round() / 1e6;
    let random_q = |rng: &mut ChaCha8Rng| (rng.random_range(20..=80) as f64) / 100.0;

    let mut plan = Vec::new();
    for s in 0..n {
        plan.push(ConceptPlan {
            name: format!("own_{s:02}"),
            popularity: 0.8,
            scenes: vec![s],
            quality: coupled(accuracy[s as usize]),
            scene_quality: None,
        });
    }
    let all: Vec<u32> = (0..n).collect();
    plan.push(ConceptPlan {
        name: "wall".into(),
        popularity: 0.9,
        scenes: all.clone(),
        quality: 0.5,
        scene_quality: Some(all.iter().map(|&s| anti(accuracy[s as usize])).collect()),
    });
    let mut floor_scenes = all.clone();
    floor_scenes.shuffle(&mut rng);
    floor_scenes.truncate(12);
    floor_scenes.sort_unstable();
    plan.push(ConceptPlan {
        name: "floor".into(),
        popularity: 0.9,
        scene_quality: Some(
            floor_scenes
                .iter()
                .map(|&s| anti(accuracy[s as usize]))
                .collect(),
        ),
        scenes: floor_scenes,
        quality: 0.5,
    });
    let mut perm = all.clone();
    perm.shuffle(&mut rng);
    for (g, group) in perm.chunks(4).enumerate() {
        let mut scenes = group.to_vec();
        scenes.sort_unstable();
        plan.push(ConceptPlan {
            name: format!("shared_{g}"),
            popularity: 0.3,
            scene_quality: Some(scenes.iter().map(|_| random_q(&mut rng)).collect()),
            scenes,
            quality: 0.5,
        });
    }
    perm.shuffle(&mut rng);
    for (g, pair) in perm.chunks(2).enumerate() {
        let mut scenes = pair.to_vec();
        scenes.sort_unstable();
        plan.push(ConceptPlan {
            name: format!("pair_{g}"),
            popularity: 0.5,
            scene_quality: Some(scenes.iter().map(|_| random_q(&mut rng)).collect()),
            scenes,
            quality: 0.5,
        });
    }
    for s in 0..n {
        for j in 0..3 {
            let q = random_q(&mut rng);
            plan.push(ConceptPlan {
                name: format!("rare_{s:02}_{j}"),
                popularity: 0.04,
                scenes: vec![s],
                quality: q,
                scene_quality: None,
            });
        }
    }

    SynthSpec {
        seed,
        num_scenes: n,
        images_per_scene: PLANTED_IMAGES,
        feature_maps: 64,
        width: 32,
        height: 32,
        scene_names: None,
        concept_plan: plan,
        accuracy_plan: accuracy,
    }
}
