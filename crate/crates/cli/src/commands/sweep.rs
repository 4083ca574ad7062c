use concept_cover_core::analysis::{best_cell, sweep, threshold_grid, SweepCell, SweepStatistic};
use serde::Serialize;

use super::analyze::open_analysis;
use super::{parse_range, thread_pool};
use crate::args::SweepArgs;
use crate::failure::{Classify, Failure, Status};
use crate::output::{csv_bytes, ensure_dir, opt, say, write_atomic, write_json};

#[derive(Serialize)]
struct Row {
    alpha: f64,
    beta: f64,
    rho_unique: String,
    p_unique: String,
    rho_mislead: String,
    p_mislead: String,
    rho_syn: String,
    p_syn: String,
    scenes_unique: usize,
    scenes_mislead: usize,
    scenes_syn: usize,
}

impl From<&SweepCell> for Row {
    fn from(c: &SweepCell) -> Self {
        Row {
            alpha: c.alpha,
            beta: c.beta,
            rho_unique: opt(c.rho_unique),
            p_unique: opt(c.p_unique),
            rho_mislead: opt(c.rho_mislead),
            p_mislead: opt(c.p_mislead),
            rho_syn: opt(c.rho_syn),
            p_syn: opt(c.p_syn),
            scenes_unique: c.scenes_unique,
            scenes_mislead: c.scenes_mislead,
            scenes_syn: c.scenes_syn,
        }
    }
}

#[derive(Serialize)]
struct Extremes<'a> {
    /// Largest unique-concept correlation.
    unique_max: Option<&'a SweepCell>,
    /// Most negative misleading-concept correlation.
    mislead_min: Option<&'a SweepCell>,
    syn_max: Option<&'a SweepCell>,
}

#[derive(Serialize)]
struct Summary<'a> {
    alphas: &'a [f64],
    betas: &'a [f64],
    cells: usize,
    defined_unique: usize,
    defined_mislead: usize,
    defined_syn: usize,
    best: Extremes<'a>,
}

pub fn run(args: &SweepArgs) -> Result<Status, Failure> {
    let (alo, ahi) = parse_range(&args.alpha_range)?;
    let (blo, bhi) = parse_range(&args.beta_range)?;
    let alphas = threshold_grid(alo, ahi, args.step).invalid("alpha grid")?;
    let betas = threshold_grid(blo, bhi, args.step).invalid("beta grid")?;
    let analysis = open_analysis(&args.dataset, &args.results)?;
    let pool = thread_pool(args.threads)?;
    let cells = pool.install(|| sweep(&analysis, &alphas, &betas));

    let rows: Vec<Row> = cells.iter().map(Row::from).collect();
    let defined =
        |f: fn(&SweepCell) -> Option<f64>| cells.iter().filter(|c| f(c).is_some()).count();
    let summary = Summary {
        alphas: &alphas,
        betas: &betas,
        cells: cells.len(),
        defined_unique: defined(|c| c.rho_unique),
        defined_mislead: defined(|c| c.rho_mislead),
        defined_syn: defined(|c| c.rho_syn),
        best: Extremes {
            unique_max: best_cell(&cells, SweepStatistic::Unique, true),
            mislead_min: best_cell(&cells, SweepStatistic::Mislead, false),
            syn_max: best_cell(&cells, SweepStatistic::Syn, true),
        },
    };
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("sweep.csv"), &csv_bytes(&rows)?)?;
    write_json(&args.out.join("sweep.json"), &summary)?;

    match summary.best.unique_max {
        Some(c) => say!(
            "{} cells; highest unique correlation {:.3} at alpha {} beta {} -> {}",
            cells.len(),
            c.rho_unique.unwrap_or(f64::NAN),
            c.alpha,
            c.beta,
            args.out.display()
        ),
        None => say!(
            "{} cells; unique correlation undefined everywhere -> {}",
            cells.len(),
            args.out.display()
        ),
    }
    Ok(Status::Complete)
}
