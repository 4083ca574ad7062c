use concept_cover_core::analysis::distribution_stats;
use serde::Serialize;

use super::open_results;
use crate::args::StatsArgs;
use crate::failure::{Classify, Failure, Status};
use crate::output::print_line;

#[derive(Serialize)]
struct Summary {
    records: usize,
    failed: usize,
    count: usize,
    mean: f64,
    median: f64,
    q1: f64,
    q3: f64,
}

pub fn run(args: &StatsArgs) -> Result<Status, Failure> {
    let records = open_results(&args.results)?;
    let scores: Vec<f64> = records.iter().filter_map(|r| r.score()).collect();
    if scores.is_empty() {
        return Err(Failure::validation(anyhow::anyhow!(
            "{}: no recognition scores to summarize",
            args.results.display()
        )));
    }
    let d = distribution_stats(&scores).invalid("summarizing scores")?;
    let summary = Summary {
        records: records.len(),
        failed: records.len() - scores.len(),
        count: d.count,
        mean: d.mean,
        median: d.median,
        q1: d.q1,
        q3: d.q3,
    };
    print_line(&serde_json::to_string_pretty(&summary).runtime("serializing summary")?);
    Ok(Status::Complete)
}
