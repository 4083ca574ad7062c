mod common;

use common::Grid;
use concept_cover_core::ingest::{
    decode_feature_stack, encode_bitmask, encode_feature_stack, load_bitmask, load_feature_stack,
    load_manifest, save_bitmask, save_feature_stack,
};
use concept_cover_core::results::{read_records, write_records, RecognitionRecord, RecordOutcome};
use concept_cover_core::synth::{generate, ConceptPlan, SynthSpec, MANIFEST_FILE};
use concept_cover_core::{Bitmask, FeatureMapStack};
use proptest::prelude::*;

fn stack_strategy() -> impl Strategy<Value = FeatureMapStack> {
    (1u32..30, 1u32..20, 1usize..6).prop_flat_map(|(w, h, n)| {
        proptest::collection::vec(
            proptest::collection::vec(any::<bool>(), (w * h) as usize),
            n,
        )
        .prop_map(move |planes| {
            FeatureMapStack::new(
                planes
                    .into_iter()
                    .map(|px| Grid { w, h, px }.to_mask())
                    .collect(),
            )
            .unwrap()
        })
    })
}

fn record_strategy() -> impl Strategy<Value = RecognitionRecord> {
    let ok = (
        0.0f64..=1.0,
        proptest::collection::vec(0usize..512, 0..8),
        proptest::collection::vec(0.0f64..=1.0, 0..8),
    )
        .prop_map(|(score, selected_maps, score_trace)| RecordOutcome::Ok {
            score,
            selected_maps,
            score_trace,
        });
    let err = "[a-z ,\"]{0,20}".prop_map(RecordOutcome::Error);
    (
        0u32..20,
        "[a-z0-9_,\" ]{1,12}",
        "[a-z_]{1,10}",
        prop_oneof![ok, err],
    )
        .prop_map(
            |(scene_label, image_id, concept, outcome)| RecognitionRecord {
                scene_label,
                image_id,
                concept,
                outcome,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stacks_round_trip_bit_exact(stack in stack_strategy()) {
        let bytes = encode_feature_stack(&stack);
        let back = decode_feature_stack(&bytes).unwrap();
        prop_assert_eq!(&back, &stack);
        prop_assert_eq!(encode_feature_stack(&back), bytes);
    }

    #[test]
    fn truncated_or_padded_stacks_rejected(stack in stack_strategy(), cut in 1usize..64) {
        let bytes = encode_feature_stack(&stack);
        let short = &bytes[..bytes.len().saturating_sub(cut)];
        let e = decode_feature_stack(short).unwrap_err();
        prop_assert_eq!(e.code(), "truncated");
        let mut long = bytes.clone();
        long.extend(std::iter::repeat_n(0u8, cut));
        prop_assert_eq!(decode_feature_stack(&long).unwrap_err().code(), "trailing-data");
    }

    #[test]
    fn results_round_trip_bit_exact(records in proptest::collection::vec(record_strategy(), 0..20)) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        prop_assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }
}

#[test]
fn files_round_trip_and_dispatch_on_content() {
    let dir = tempfile::tempdir().unwrap();
    let mask = Bitmask::from_coords(13, 7, [(0, 0), (12, 6), (5, 3)]).unwrap();
    let path = dir.path().join("m.cmask");
    save_bitmask(&path, &mask).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), encode_bitmask(&mask));
    assert_eq!(load_bitmask(&path).unwrap(), mask);

    let stack = FeatureMapStack::new(vec![mask.clone(), Bitmask::full(13, 7).unwrap()]).unwrap();
    let spath = dir.path().join("s.cstk");
    save_feature_stack(&spath, &stack).unwrap();
    assert_eq!(load_feature_stack(&spath).unwrap(), stack);

    let pgm = dir.path().join("m.pgm");
    let mut bytes = b"P5\n# made by hand\n3 2\n255\n".to_vec();
    bytes.extend([0, 7, 0, 255, 0, 1]);
    std::fs::write(&pgm, bytes).unwrap();
    let m = load_bitmask(&pgm).unwrap();
    let on: Vec<_> = m.iter_ones().collect();
    assert_eq!(on, vec![(1, 0), (0, 1), (2, 1)]);

    let missing = load_bitmask(dir.path().join("nope.cmask")).unwrap_err();
    assert_eq!(missing.code(), "io");
    assert!(!missing.is_validation());
}

fn small_spec() -> SynthSpec {
    SynthSpec {
        seed: 5,
        num_scenes: 2,
        images_per_scene: 4,
        feature_maps: 6,
        width: 12,
        height: 10,
        scene_names: Some(vec!["kitchen".into(), "street".into()]),
        concept_plan: vec![
            ConceptPlan {
                name: "sky".into(),
                popularity: 0.5,
                scenes: vec![1],
                quality: 0.6,
                scene_quality: None,
            },
            ConceptPlan {
                name: "wall".into(),
                popularity: 1.0,
                scenes: vec![0, 1],
                quality: 0.5,
                scene_quality: Some(vec![0.4, 0.7]),
            },
        ],
        accuracy_plan: vec![0.75, 0.5],
    }
}

#[test]
fn generated_dataset_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(&small_spec()).unwrap();
    ds.write(dir.path()).unwrap();
    let manifest = load_manifest(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.images, ds.manifest.images);
    assert_eq!(manifest.scene_name(1), Some("street"));
    for img in &ds.images {
        let rec = &img.record;
        let stack = load_feature_stack(manifest.resolve(&rec.feature_stack_path)).unwrap();
        assert_eq!(stack, img.stack);
        for (c, p) in &rec.concept_masks {
            assert_eq!(
                &load_bitmask(manifest.resolve(p)).unwrap(),
                &img.concept_masks[c]
            );
        }
    }
}

#[test]
fn manifest_validation_catches_broken_files() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(&small_spec()).unwrap();
    ds.write(dir.path()).unwrap();
    let manifest_path = dir.path().join(MANIFEST_FILE);

    let first = &ds.images[0].record;
    let stack_path = dir.path().join(&first.feature_stack_path);
    let good = std::fs::read(&stack_path).unwrap();

    std::fs::write(&stack_path, &good[..good.len() - 1]).unwrap();
    assert_eq!(
        load_manifest(&manifest_path).unwrap_err().code(),
        "truncated"
    );

    let fewer = FeatureMapStack::new(ds.images[0].stack.masks()[..3].to_vec()).unwrap();
    save_feature_stack(&stack_path, &fewer).unwrap();
    assert_eq!(
        load_manifest(&manifest_path).unwrap_err().code(),
        "feature-map-count"
    );

    std::fs::remove_file(&stack_path).unwrap();
    assert_eq!(
        load_manifest(&manifest_path).unwrap_err().code(),
        "dangling-reference"
    );
    std::fs::write(&stack_path, &good).unwrap();

    let (_, mask_rel) = first.concept_masks.iter().next().unwrap();
    save_bitmask(dir.path().join(mask_rel), &Bitmask::empty(5, 5).unwrap()).unwrap();
    assert_eq!(
        load_manifest(&manifest_path).unwrap_err().code(),
        "dimension-mismatch"
    );
}

#[test]
fn generation_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(&small_spec()).unwrap().write(a.path()).unwrap();
    generate(&small_spec()).unwrap().write(b.path()).unwrap();
    let files = |root: &std::path::Path| {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in std::fs::read_dir(d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((
                        p.strip_prefix(root).unwrap().to_path_buf(),
                        std::fs::read(&p).unwrap(),
                    ));
                }
            }
        }
        out.sort();
        out
    };
    let (fa, fb) = (files(a.path()), files(b.path()));
    let ds = generate(&small_spec()).unwrap();
    let masks: usize = ds.images.iter().map(|i| i.concept_masks.len()).sum();
    assert_eq!(fa.len(), 1 + ds.images.len() + masks);
    assert_eq!(fa, fb);
}
