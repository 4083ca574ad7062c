use std::collections::BTreeMap;

use concept_cover_core::analysis::{
    correlate_defined, Analysis, AnalysisError, ConceptClass, CorrelationSummary, Distribution,
    SceneReport,
};
use serde::Serialize;

use super::{open_dataset, open_results};
use crate::args::AnalyzeArgs;
use crate::failure::{Failure, Status};
use crate::output::{csv_bytes, ensure_dir, opt, say, write_atomic, write_json};

#[derive(Serialize)]
struct SceneRow<'a> {
    scene_label: u32,
    scene_name: &'a str,
    images: usize,
    accuracy: f64,
    mean_recognition: String,
    slope: String,
    s_unique: String,
    s_mislead: String,
    s_syn: String,
    unique_concepts: usize,
    misleading_concepts: usize,
}

#[derive(Serialize)]
struct ConceptSceneRow<'a> {
    scene_label: u32,
    concept: &'a str,
    occurrences: usize,
    scored: usize,
    mean_score: String,
    popularity: f64,
    uniqueness: f64,
    class: ConceptClass,
}

#[derive(Serialize)]
struct ConceptGlobalRow<'a> {
    concept: &'a str,
    scene_presence: usize,
    uniqueness: f64,
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    scene_label: u32,
    image_id: &'a str,
    concept: &'a str,
    score: String,
}

#[derive(Serialize)]
struct Correlations {
    recognition_vs_accuracy: CorrelationSummary,
    slope_vs_accuracy: CorrelationSummary,
    unique_vs_accuracy: CorrelationSummary,
    mislead_vs_accuracy: CorrelationSummary,
    syn_vs_accuracy: CorrelationSummary,
}

#[derive(Serialize)]
struct Report<'a> {
    alpha: f64,
    beta: f64,
    scenes: usize,
    instances: usize,
    scored_instances: usize,
    failed_instances: usize,
    distribution: Option<Distribution>,
    correlations: Correlations,
    scene_reports: &'a [SceneReport],
}

fn correlations(reports: &[SceneReport]) -> Correlations {
    let against = |f: fn(&SceneReport) -> Option<f64>| {
        let pairs: Vec<_> = reports.iter().map(|r| (f(r), r.accuracy)).collect();
        correlate_defined(&pairs)
    };
    Correlations {
        recognition_vs_accuracy: against(|r| r.mean_recognition),
        slope_vs_accuracy: against(|r| r.slope),
        unique_vs_accuracy: against(|r| r.s_unique),
        mislead_vs_accuracy: against(|r| r.s_mislead),
        syn_vs_accuracy: against(|r| r.s_syn),
    }
}

fn check_thresholds(alpha: f64, beta: f64) -> Result<(), Failure> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::validation(anyhow::anyhow!(
                "--{name} {v} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

pub fn open_analysis(
    dataset: &std::path::Path,
    results: &std::path::Path,
) -> Result<Analysis, Failure> {
    let manifest = open_dataset(dataset)?;
    let records = open_results(results)?;
    Analysis::new(&manifest, &records).map_err(Failure::validation)
}

pub fn run(args: &AnalyzeArgs) -> Result<Status, Failure> {
    check_thresholds(args.alpha, args.beta)?;
    let analysis = open_analysis(&args.dataset, &args.results)?;
    let (alpha, beta) = (args.alpha, args.beta);
    let reports = analysis.scene_reports(alpha, beta);

    let classes: BTreeMap<(u32, &str), ConceptClass> = analysis
        .scenes()
        .iter()
        .flat_map(|s| {
            analysis
                .classify_scene(s.label, alpha, beta)
                .into_iter()
                .map(move |(c, k)| ((s.label, c), k))
        })
        .collect();
    let count_class = |label: u32, class: ConceptClass| {
        classes
            .iter()
            .filter(|((l, _), k)| *l == label && **k == class)
            .count()
    };

    let scene_rows: Vec<_> = reports
        .iter()
        .map(|r| SceneRow {
            scene_label: r.scene_label,
            scene_name: &r.scene_name,
            images: r.images,
            accuracy: r.accuracy,
            mean_recognition: opt(r.mean_recognition),
            slope: opt(r.slope),
            s_unique: opt(r.s_unique),
            s_mislead: opt(r.s_mislead),
            s_syn: opt(r.s_syn),
            unique_concepts: count_class(r.scene_label, ConceptClass::Unique),
            misleading_concepts: count_class(r.scene_label, ConceptClass::Misleading),
        })
        .collect();
    let concept_rows: Vec<_> = analysis
        .concept_scene_stats()
        .iter()
        .map(|c| ConceptSceneRow {
            scene_label: c.scene_label,
            concept: &c.concept_name,
            occurrences: c.occurrence_count,
            scored: c.scored_count,
            mean_score: opt(c.mean_score),
            popularity: c.popularity,
            uniqueness: c.uniqueness,
            class: classes[&(c.scene_label, c.concept_name.as_str())],
        })
        .collect();
    let global_rows: Vec<_> = analysis
        .concept_global_stats()
        .iter()
        .map(|g| ConceptGlobalRow {
            concept: &g.concept_name,
            scene_presence: g.scene_presence_count,
            uniqueness: g.uniqueness,
        })
        .collect();
    let score_rows: Vec<_> = analysis
        .instances()
        .iter()
        .map(|i| ScoreRow {
            scene_label: i.scene_label,
            image_id: &i.image_id,
            concept: &i.concept,
            score: opt(i.score),
        })
        .collect();

    let distribution = match analysis.score_distribution() {
        Ok(d) => Some(d),
        Err(AnalysisError::NoScores) => None,
        Err(e) => return Err(Failure::validation(e)),
    };
    let scored = analysis
        .instances()
        .iter()
        .filter(|i| i.score.is_some())
        .count();
    let report = Report {
        alpha,
        beta,
        scenes: reports.len(),
        instances: analysis.instances().len(),
        scored_instances: scored,
        failed_instances: analysis.instances().len() - scored,
        distribution,
        correlations: correlations(&reports),
        scene_reports: &reports,
    };

    let out = &args.out;
    ensure_dir(out)?;
    write_atomic(&out.join("scene_reports.csv"), &csv_bytes(&scene_rows)?)?;
    write_atomic(
        &out.join("concept_scene_stats.csv"),
        &csv_bytes(&concept_rows)?,
    )?;
    write_atomic(
        &out.join("concept_global_stats.csv"),
        &csv_bytes(&global_rows)?,
    )?;
    write_atomic(&out.join("scores.csv"), &csv_bytes(&score_rows)?)?;
    write_json(&out.join("distribution.json"), &distribution)?;
    write_json(&out.join("report.json"), &report)?;

    match report.distribution {
        Some(d) => say!(
            "{} instances, mean {:.4}, median {:.4}, q1 {:.4}, q3 {:.4} -> {}",
            d.count,
            d.mean,
            d.median,
            d.q1,
            d.q3,
            out.display()
        ),
        None => say!("no scored instances -> {}", out.display()),
    }
    if report.failed_instances > 0 {
        log::warn!(
            "{} instances have no score and were left out of the means",
            report.failed_instances
        );
    }
    Ok(Status::Complete)
}
