use concept_cover_core::synth::{generate, planted_preset, SynthError, SynthSpec};
use serde::Serialize;

use crate::args::{GenSynthArgs, Preset};
use crate::failure::{Classify, Failure, Status};
use crate::output::{csv_bytes, say, write_atomic, write_json};

#[derive(Serialize)]
struct PlantedRow<'a> {
    scene_label: u32,
    image_id: &'a str,
    concept: &'a str,
    quality: f64,
    mask_pixels: u64,
    expected_score: f64,
    fragments: usize,
}

fn synth_failure(e: SynthError) -> Failure {
    match e {
        SynthError::Io { .. } => Failure::runtime(e),
        SynthError::Ingest(ref inner) if !inner.is_validation() => Failure::runtime(e),
        _ => Failure::validation(e),
    }
}

pub fn run(args: &GenSynthArgs) -> Result<Status, Failure> {
    let mut spec = match (&args.spec, args.preset) {
        (Some(path), _) => {
            let text =
                std::fs::read_to_string(path).runtime(format!("reading {}", path.display()))?;
            SynthSpec::from_json(&text).map_err(synth_failure)?
        }
        (None, Some(Preset::Planted)) => planted_preset(args.seed.unwrap_or(0)),
        (None, None) => {
            return Err(Failure::validation(anyhow::anyhow!(
                "pass --spec or --preset"
            )))
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ds = generate(&spec).map_err(synth_failure)?;
    ds.write(&args.out).map_err(synth_failure)?;
    write_json(&args.out.join("synth_spec.json"), &spec)?;
    if args.write_expected {
        let rows: Vec<_> = ds
            .planted
            .iter()
            .map(|p| PlantedRow {
                scene_label: p.scene_label,
                image_id: &p.image_id,
                concept: &p.concept,
                quality: p.quality,
                mask_pixels: p.mask_pixels,
                expected_score: p.expected_score,
                fragments: p.fragments,
            })
            .collect();
        write_atomic(&args.out.join("planted.csv"), &csv_bytes(&rows)?)?;
    }
    say!(
        "generated {} images, {} concept instances -> {}",
        ds.images.len(),
        ds.planted.len(),
        args.out.display()
    );
    Ok(Status::Complete)
}
