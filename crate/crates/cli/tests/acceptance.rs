//! Acceptance checks for the whole toolchain. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use common::{
    fragmented_instance, naive_counts, random_instance, reference_greedy, stack_of, Grid,
};
use concept_cover_core::analysis::{
    correlation_p_value, distribution_stats, linear_fit, pearson, pearson_rho, synthesized_score,
    uniqueness,
};
use concept_cover_core::ingest::{
    decode_bitmask, decode_feature_stack, encode_bitmask, encode_feature_stack, load_bitmask,
    load_feature_stack, load_manifest, parse_manifest, save_bitmask, save_feature_stack,
};
use concept_cover_core::synth::{generate, ConceptPlan, SynthSpec};
use concept_cover_core::{
    exhaustive_best_subset, greedy_selection, jaccard, recognition_score, Bitmask, FeatureMapStack,
    GreedyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> Result<()> {
    ensure!(
        (a - b).abs() <= tol,
        "{a} differs from {b} by more than {tol}"
    );
    Ok(())
}

fn greedy_matches_reference() -> Result<String> {
    let start = Instant::now();
    let cfg = GreedyConfig::default();
    let mut instances = 0;
    let mut multi = 0;
    for seed in 0..2000u64 {
        let maps = 1 + (seed % 10) as usize;
        let (grids, concept) = if seed < 1000 {
            random_instance(seed, maps, 16, 16)
        } else {
            fragmented_instance(seed, maps)
        };
        let stack = stack_of(&grids);
        let mask = concept.to_mask();
        let got = greedy_selection(&stack, &mask, &cfg)?;
        let want = reference_greedy(&grids, &concept, cfg.delta);
        ensure!(
            got.selected_maps == want.selected,
            "seed {seed}: order {:?} vs {:?}",
            got.selected_maps,
            want.selected
        );
        ensure!(got.score_trace == want.trace, "seed {seed}: trace differs");
        ensure!(got.score == want.score, "seed {seed}: score differs");
        let (_, best) = exhaustive_best_subset(&stack, &mask, grids.len())?;
        ensure!(
            got.score <= best,
            "seed {seed}: greedy {} above exhaustive {best}",
            got.score
        );
        instances += 1;
        multi += (got.selected_maps.len() > 1) as usize;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{instances} instances, {multi} multi-map selections, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn jaccard_matches_pixels() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1acc);
    let mut pairs = 0;
    for _ in 0..2000 {
        let (w, h) = (rng.random_range(1..70), rng.random_range(1..40));
        let da = rng.random_range(0.0..1.0);
        let db = rng.random_range(0.0..1.0);
        let a = Grid::random(&mut rng, w, h, da);
        let b = Grid::random(&mut rng, w, h, db);
        let (i, u) = naive_counts(&a, &b);
        let c = a.to_mask().counts(&b.to_mask())?;
        ensure!(
            (c.intersection_count, c.union_count) == (i, u),
            "{w}x{h}: counts differ"
        );
        if u > 0 {
            close(
                jaccard(&a.to_mask(), &b.to_mask())?,
                i as f64 / u as f64,
                1e-12,
            )?;
        }
        if a.ones() > 0 {
            // Score against a union of several maps.
            let maps: Vec<Grid> = (0..3).map(|_| Grid::random(&mut rng, w, h, 0.2)).collect();
            let union = maps.iter().fold(b.clone(), |acc, m| acc.or(m));
            let (i, u) = naive_counts(&a, &union);
            let masks: Vec<Bitmask> = std::iter::once(&b)
                .chain(&maps)
                .map(Grid::to_mask)
                .collect();
            close(
                recognition_score(&a.to_mask(), &masks)?,
                i as f64 / u as f64,
                1e-12,
            )?;
        }
        pairs += 1;
    }
    let concept = Bitmask::from_coords(8, 8, (0..10).map(|i| (i % 8, i / 8)))?;
    let covering = Bitmask::from_coords(
        8,
        8,
        (0..7).map(|i| (i % 8, i / 8)).chain((0..5).map(|i| (i, 7))),
    )?;
    close(jaccard(&concept, &covering)?, 7.0 / 15.0, 1e-12)?;
    Ok(format!("{pairs} random pairs exact"))
}

fn statistics_match_closed_forms() -> Result<String> {
    let d = distribution_stats(&[0.5])?;
    ensure!((d.mean, d.median, d.q1, d.q3) == (0.5, 0.5, 0.5, 0.5));
    let d = distribution_stats(&[0.0, 1.0])?;
    close(d.mean, 0.5, 1e-9)?;
    close(d.median, 0.5, 1e-9)?;
    let d = distribution_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])?;
    close(d.q1, 2.75, 1e-9)?;
    close(d.median, 4.5, 1e-9)?;
    close(d.q3, 6.25, 1e-9)?;

    close(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0])?.rho, 1.0, 1e-9)?;
    close(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])?.rho, -1.0, 1e-9)?;
    let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0])?;
    close(c.rho, 0.6, 1e-9)?;
    close(c.p_value, 0.4, 0.02)?;
    ensure!(
        pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err(),
        "zero variance accepted"
    );

    let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0])?;
    close(f.slope, 2.0, 1e-9)?;
    close(f.intercept, 1.0, 1e-9)?;
    ensure!(linear_fit(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0])?.slope == 0.0);
    let f = linear_fit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0])?;
    close(f.slope, 0.5, 1e-9)?;
    close(f.intercept, 1.0 / 6.0, 1e-9)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x57a7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..50);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let r = pearson_rho(&x, &y)?;
        let (a, b) = (rng.random_range(0.1..10.0), rng.random_range(-100.0..100.0));
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (c, d) = (rng.random_range(0.1..10.0), rng.random_range(-100.0..100.0));
        let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        let diff = (pearson_rho(&xs, &ys)? - r).abs();
        worst = worst.max(diff);
    }
    ensure!(worst <= 1e-12, "scale/shift moved rho by {worst:e}");
    Ok(format!(
        "closed forms to 1e-9, p(0.6, 4) = {:.6}, invariance worst {worst:.1e}",
        correlation_p_value(0.6, 4)
    ))
}

fn formulas_exact() -> Result<String> {
    let wall = uniqueness(15, 16)?;
    ensure!(wall == 0.0625, "U(15/16) = {wall}");
    ensure!((wall * 1000.0).round() / 1000.0 == 0.063);
    ensure!(uniqueness(12, 16)? == 0.25);
    ensure!(synthesized_score(1.0, 0.0) == 1.0);
    ensure!(synthesized_score(0.0, 1.0) == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e);
    for _ in 0..100_000 {
        let (u, m): (f64, f64) = (rng.random(), rng.random());
        ensure!(synthesized_score(u, u) == 0.5, "S({u}, {u}) != 0.5");
        ensure!(
            synthesized_score(u, m) + synthesized_score(m, u) == 1.0,
            "S({u}, {m}) not mirror-symmetric"
        );
    }
    Ok("uniqueness 0.0625 / 0.25, synthesized identities exact".into())
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_concept-cover"))
}

fn run_bin(args: &[&str]) -> Result<()> {
    let out = bin()
        .args(args)
        .output()
        .context("spawning concept-cover")?;
    if !out.status.success() {
        bail!(
            "{:?} exited {:?}: {}",
            args,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    Ok(())
}

fn tree(root: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(root)? {
        let p = e?.path();
        out.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&p)?,
        );
    }
    Ok(out)
}

fn json(path: &Path) -> Result<serde_json::Value> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn planted_recovery() -> Result<String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir()?;
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mut outputs = Vec::new();
    for (run, threads) in [(0, "1"), (1, "4"), (2, "4")] {
        let base = tmp.path().join(format!("run{run}"));
        let (ds, loc, an, sw) = (
            base.join("ds"),
            base.join("loc"),
            base.join("an"),
            base.join("sw"),
        );
        run_bin(&[
            "gen-synth",
            "--preset",
            "planted",
            "--seed",
            "2024",
            "--out",
            &s(&ds),
            "--write-expected",
        ])?;
        run_bin(&[
            "localize",
            "--dataset",
            &s(&ds),
            "--out",
            &s(&loc),
            "--threads",
            threads,
        ])?;
        run_bin(&[
            "analyze",
            "--dataset",
            &s(&ds),
            "--results",
            &s(&loc),
            "--out",
            &s(&an),
        ])?;
        run_bin(&[
            "sweep",
            "--dataset",
            &s(&ds),
            "--results",
            &s(&loc),
            "--out",
            &s(&sw),
            "--threads",
            threads,
        ])?;
        outputs.push((
            tree(&loc)?,
            tree(&an)?,
            tree(&sw)?,
            std::fs::read(ds.join("manifest.json"))?,
        ));
    }
    ensure!(
        outputs.windows(2).all(|w| w[0] == w[1]),
        "outputs differ across runs or thread counts"
    );

    let base = tmp.path().join("run0");
    let manifest = json(&base.join("ds/manifest.json"))?;
    ensure!(manifest["scene_classes"].as_array().map(Vec::len) == Some(16));
    ensure!(manifest["images"].as_array().map(Vec::len) == Some(800));
    ensure!(manifest["layer_feature_map_count"] == 64);

    // Scene means against the generator's expected scores.
    let mut expected: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    let mut rdr = csv::Reader::from_path(base.join("ds/planted.csv"))?;
    for rec in rdr.records() {
        let rec = rec?;
        let e = expected.entry(rec[0].parse()?).or_default();
        e.0 += rec[5].parse::<f64>()?;
        e.1 += 1;
    }
    let report = json(&base.join("an/report.json"))?;
    for r in report["scene_reports"]
        .as_array()
        .context("scene_reports")?
    {
        let label = r["scene_label"].as_u64().context("label")?;
        let (sum, n) = expected[&label];
        close(
            r["mean_recognition"].as_f64().context("mean")?,
            sum / n as f64,
            1e-9,
        )?;
    }

    let best = &json(&base.join("sw/sweep.json"))?["best"]["unique_max"];
    let (alpha, beta) = (
        best["alpha"].as_f64().context("alpha")?,
        best["beta"].as_f64().context("beta")?,
    );
    let rho_u = best["rho_unique"].as_f64().context("rho_unique")?;
    let rho_m = best["rho_mislead"].as_f64().context("rho_mislead")?;
    ensure!(
        (0.25..0.9375).contains(&alpha) && (0.5..0.8).contains(&beta),
        "argmax at ({alpha}, {beta})"
    );
    ensure!(rho_u >= 0.9, "rho_unique {rho_u}");
    ensure!(rho_m <= -0.9, "rho_mislead {rho_m}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "argmax (alpha {alpha}, beta {beta}), rho_unique {rho_u:.4}, rho_mislead {rho_m:.4}, 3 identical runs in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn expect_code<T: std::fmt::Debug>(
    r: Result<T, concept_cover_core::IngestError>,
    code: &str,
) -> Result<()> {
    match r {
        Ok(v) => bail!("expected {code}, loaded {v:?}"),
        Err(e) => ensure!(e.code() == code, "expected {code}, got {} ({e})", e.code()),
    }
    Ok(())
}

fn formats_round_trip() -> Result<String> {
    let tmp = tempfile::tempdir()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xf0f0);
    for i in 0..300 {
        let (w, h) = (rng.random_range(1..50), rng.random_range(1..30));
        let planes: Vec<Bitmask> = (0..rng.random_range(1..8))
            .map(|_| {
                let d = rng.random_range(0.0..1.0);
                Grid::random(&mut rng, w, h, d).to_mask()
            })
            .collect();
        let mpath = tmp.path().join(format!("m{i}.cmask"));
        save_bitmask(&mpath, &planes[0])?;
        ensure!(load_bitmask(&mpath)? == planes[0], "mask {i} changed");
        let stack = FeatureMapStack::new(planes)?;
        let spath = tmp.path().join(format!("s{i}.cstk"));
        save_feature_stack(&spath, &stack)?;
        ensure!(load_feature_stack(&spath)? == stack, "stack {i} changed");
    }

    let spec = SynthSpec {
        seed: 8,
        num_scenes: 3,
        images_per_scene: 4,
        feature_maps: 8,
        width: 16,
        height: 12,
        scene_names: None,
        concept_plan: vec![
            ConceptPlan {
                name: "sky".into(),
                popularity: 0.75,
                scenes: vec![0, 2],
                quality: 0.5,
                scene_quality: None,
            },
            ConceptPlan {
                name: "car".into(),
                popularity: 0.5,
                scenes: vec![1],
                quality: 0.7,
                scene_quality: None,
            },
        ],
        accuracy_plan: vec![1.0, 0.5, 0.75],
    };
    let ds = generate(&spec)?;
    let dir = tmp.path().join("ds");
    ds.write(&dir)?;
    let loaded = load_manifest(dir.join("manifest.json"))?;
    ensure!(
        loaded.images == ds.manifest.images && loaded.scene_classes == ds.manifest.scene_classes
    );

    // Corrupted headers.
    let mask = Bitmask::from_coords(9, 3, [(0, 0), (8, 2)])?;
    let good = encode_bitmask(&mask);
    let mut bad = good.clone();
    bad[0] = b'X';
    expect_code(decode_bitmask(&bad), "bad-magic")?;
    expect_code(decode_bitmask(&good[..7]), "truncated")?;
    expect_code(decode_bitmask(&good[..good.len() - 1]), "truncated")?;
    let mut long = good.clone();
    long.push(0);
    expect_code(decode_bitmask(&long), "trailing-data")?;
    let mut zero = good.clone();
    zero[5..9].copy_from_slice(&0u32.to_le_bytes());
    expect_code(decode_bitmask(&zero), "zero-dimensions")?;
    let mut version = good.clone();
    version[4] = 9;
    expect_code(decode_bitmask(&version), "unsupported-version")?;

    let stack = encode_feature_stack(&FeatureMapStack::new(vec![mask.clone(), mask])?);
    let mut empty = stack[..17].to_vec();
    empty[5..9].copy_from_slice(&0u32.to_le_bytes());
    expect_code(decode_feature_stack(&empty), "empty-stack")?;
    expect_code(decode_feature_stack(&stack[..stack.len() - 2]), "truncated")?;
    let mut bad = stack.clone();
    bad[..4].copy_from_slice(b"CMSK");
    expect_code(decode_feature_stack(&bad), "bad-magic")?;

    let manifest = r#"{"scene_classes": [{"label": 0, "name": "a"}, {"label": 0, "name": "b"}],
        "layer_feature_map_count": 2, "images": []}"#;
    expect_code(parse_manifest(manifest, "."), "duplicate-label")?;
    expect_code(parse_manifest("{", "."), "parse")?;

    let first = &ds.images[0].record;
    let stack_path = dir.join(&first.feature_stack_path);
    save_feature_stack(
        &stack_path,
        &FeatureMapStack::new(ds.images[0].stack.masks()[..2].to_vec())?,
    )?;
    expect_code(
        load_manifest(dir.join("manifest.json")),
        "feature-map-count",
    )?;
    std::fs::remove_file(&stack_path)?;
    expect_code(
        load_manifest(dir.join("manifest.json")),
        "dangling-reference",
    )?;
    Ok("300 random masks/stacks, manifest identity, 13 corruption cases".into())
}

type Criterion = (&'static str, fn() -> Result<String>);

fn main() {
    let criteria: [Criterion; 6] = [
        (
            "greedy agrees with exhaustive-argmax reference",
            greedy_matches_reference,
        ),
        (
            "packed jaccard equals per-pixel counts",
            jaccard_matches_pixels,
        ),
        (
            "statistics match closed forms",
            statistics_match_closed_forms,
        ),
        ("uniqueness and synthesized-score formulas", formulas_exact),
        ("planted dataset recovered end to end", planted_recovery),
        (
            "file formats round-trip and reject corruption",
            formats_round_trip,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(anyhow::anyhow!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name}: {e:#}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
