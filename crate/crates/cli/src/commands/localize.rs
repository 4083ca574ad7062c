use concept_cover_core::ingest::{load_bitmask, load_feature_stack};
use concept_cover_core::results::{
    write_records, RecognitionRecord, RecordOutcome, ResultsIndex, RESULTS_CSV, RESULTS_FORMAT,
    RESULTS_INDEX,
};
use concept_cover_core::{
    greedy_selection, DatasetManifest, GreedyConfig, ImageRecord, IngestError,
};
use rayon::prelude::*;

use super::{open_dataset, thread_pool};
use crate::args::LocalizeArgs;
use crate::failure::{Classify, Failure, Status};
use crate::output::{ensure_dir, say, write_atomic, write_json};

fn error_record(image: &ImageRecord, concept: &str, message: String) -> RecognitionRecord {
    RecognitionRecord {
        scene_label: image.scene_label,
        image_id: image.image_id.clone(),
        concept: concept.to_string(),
        outcome: RecordOutcome::Error(message),
    }
}

/// All records of one image, in concept-name order. File problems abort the
/// run; a degenerate concept mask only fails its own record.
fn localize_image(
    manifest: &DatasetManifest,
    image: &ImageRecord,
    cfg: &GreedyConfig,
) -> Result<Vec<RecognitionRecord>, IngestError> {
    let stack = load_feature_stack(manifest.resolve(&image.feature_stack_path))?;
    let mut out = Vec::with_capacity(image.concept_masks.len());
    for (concept, path) in &image.concept_masks {
        let mask = load_bitmask(manifest.resolve(path))?;
        let record = match greedy_selection(&stack, &mask, cfg) {
            Ok(sel) => RecognitionRecord {
                scene_label: image.scene_label,
                image_id: image.image_id.clone(),
                concept: concept.clone(),
                outcome: RecordOutcome::Ok {
                    score: sel.score,
                    selected_maps: sel.selected_maps,
                    score_trace: sel.score_trace,
                },
            },
            Err(e) => {
                log::warn!("{}/{concept}: {e}", image.image_id);
                error_record(image, concept, e.to_string())
            }
        };
        out.push(record);
    }
    Ok(out)
}

pub fn localize_dataset(
    manifest: &DatasetManifest,
    cfg: &GreedyConfig,
) -> Result<Vec<RecognitionRecord>, IngestError> {
    let images = manifest.images_sorted();
    let per_image: Vec<Vec<RecognitionRecord>> = images
        .par_iter()
        .map(|image| localize_image(manifest, image, cfg))
        .collect::<Result<_, _>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

pub fn run(args: &LocalizeArgs) -> Result<Status, Failure> {
    let cfg = GreedyConfig::new(args.delta, args.max_maps).invalid("bad greedy settings")?;
    let manifest = open_dataset(&args.dataset)?;
    let pool = thread_pool(args.threads)?;
    let records = pool.install(|| localize_dataset(&manifest, &cfg))?;

    let mut csv = Vec::new();
    write_records(&mut csv, &records).runtime("serializing results")?;
    let errors = records.iter().filter(|r| r.is_error()).count();
    let index = ResultsIndex {
        format: RESULTS_FORMAT.into(),
        csv: RESULTS_CSV.into(),
        delta: cfg.delta,
        max_maps: cfg.max_maps,
        records: records.len(),
        errors,
    };
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join(RESULTS_CSV), &csv)?;
    write_json(&args.out.join(RESULTS_INDEX), &index)?;

    say!(
        "localized {} instances ({} failed) -> {}",
        records.len(),
        errors,
        args.out.display()
    );
    Ok(if errors > 0 {
        Status::Partial
    } else {
        Status::Complete
    })
}
