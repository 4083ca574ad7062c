//! Fixtures shared by the benchmarks.

use concept_cover_core::results::{RecognitionRecord, RecordOutcome};
use concept_cover_core::synth::{generate, planted_preset};
use concept_cover_core::{
    greedy_selection, Bitmask, DatasetManifest, FeatureMapStack, GreedyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_mask(rng: &mut ChaCha8Rng, width: u32, height: u32, density: f64) -> Bitmask {
    let px: Vec<bool> = (0..width * height)
        .map(|_| rng.random_bool(density))
        .collect();
    Bitmask::from_pixels(width, height, &px).expect("nonzero dims")
}

/// Axis-aligned rectangle covering roughly `frac` of the raster.
pub fn rect_mask(rng: &mut ChaCha8Rng, width: u32, height: u32, frac: f64) -> Bitmask {
    let w = ((width as f64 * frac.sqrt()).round() as u32).clamp(1, width);
    let h = ((height as f64 * frac.sqrt()).round() as u32).clamp(1, height);
    let x0 = rng.random_range(0..=width - w);
    let y0 = rng.random_range(0..=height - h);
    let coords = (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| (x, y)));
    Bitmask::from_coords(width, height, coords).expect("in bounds")
}

/// A concept rectangle plus `maps` rectangles, a few of which overlap it.
pub fn recognition_fixture(
    seed: u64,
    maps: usize,
    width: u32,
    height: u32,
) -> (FeatureMapStack, Bitmask) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concept = rect_mask(&mut rng, width, height, 0.2);
    let planes = (0..maps)
        .map(|_| {
            let frac = rng.random_range(0.01..0.1);
            rect_mask(&mut rng, width, height, frac)
        })
        .collect();
    (FeatureMapStack::new(planes).expect("uniform dims"), concept)
}

/// The planted preset scored in memory.
pub fn planted_records(seed: u64) -> (DatasetManifest, Vec<RecognitionRecord>) {
    let ds = generate(&planted_preset(seed)).expect("preset is feasible");
    let cfg = GreedyConfig::default();
    let records = ds
        .images
        .iter()
        .flat_map(|img| {
            img.concept_masks.iter().map(move |(concept, mask)| {
                let sel =
                    greedy_selection(&img.stack, mask, &cfg).expect("planted masks are non-empty");
                RecognitionRecord {
                    scene_label: img.record.scene_label,
                    image_id: img.record.image_id.clone(),
                    concept: concept.clone(),
                    outcome: RecordOutcome::Ok {
                        score: sel.score,
                        selected_maps: sel.selected_maps,
                        score_trace: sel.score_trace,
                    },
                }
            })
        })
        .collect();
    (ds.manifest, records)
}
