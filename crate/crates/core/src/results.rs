//! Recognition results file: one CSV row per (image, concept) instance plus a JSON index.
//!
//! CSV columns, in order:
//!
//! | column          | content                                               |
//! |-----------------|-------------------------------------------------------|
//! | `scene_label`   | ground-truth scene label of the image                 |
//! | `image_id`      | image id from the manifest                            |
//! | `concept`       | concept name                                          |
//! | `status`        | `ok` or `error`                                       |
//! | `score`         | final recognition score (empty on error)              |
//! | `selected_maps` | space-separated feature-map ids in selection order    |
//! | `score_trace`   | space-separated score after each accepted map         |
//! | `error`         | error message (empty when `status` is `ok`)           |
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! yields bit-identical scores.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RESULTS_CSV: &str = "recognition.csv";
pub const RESULTS_INDEX: &str = "recognition.json";
pub const RESULTS_FORMAT: &str = "concept-cover.recognition.v1";

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("results csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("results index: {0}")]
    Index(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordOutcome {
    Ok {
        score: f64,
        selected_maps: Vec<usize>,
        score_trace: Vec<f64>,
    },
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionRecord {
    pub scene_label: u32,
    pub image_id: String,
    pub concept: String,
    pub outcome: RecordOutcome,
}

impl RecognitionRecord {
    pub fn score(&self) -> Option<f64> {
        match self.outcome {
            RecordOutcome::Ok { score, .. } => Some(score),
            RecordOutcome::Error(_) => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self.outcome, RecordOutcome::Error(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsIndex {
    pub format: String,
    pub csv: String,
    pub delta: f64,
    pub max_maps: Option<usize>,
    pub records: usize,
    pub errors: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    scene_label: u32,
    image_id: String,
    concept: String,
    status: String,
    score: String,
    selected_maps: String,
    score_trace: String,
    error: String,
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn split<T: std::str::FromStr>(
    field: &str,
    row: usize,
    what: &str,
) -> Result<Vec<T>, ResultsError> {
    field
        .split_whitespace()
        .map(|s| {
            s.parse().map_err(|_| ResultsError::Malformed {
                row,
                message: format!("bad {what} entry {s:?}"),
            })
        })
        .collect()
}

pub fn write_records<W: Write>(
    writer: W,
    records: &[RecognitionRecord],
) -> Result<(), ResultsError> {
    let mut csv = csv::Writer::from_writer(writer);
    for r in records {
        let row = match &r.outcome {
            RecordOutcome::Ok {
                score,
                selected_maps,
                score_trace,
            } => Row {
                scene_label: r.scene_label,
                image_id: r.image_id.clone(),
                concept: r.concept.clone(),
                status: "ok".into(),
                score: score.to_string(),
                selected_maps: join(selected_maps),
                score_trace: join(score_trace),
                error: String::new(),
            },
            RecordOutcome::Error(message) => Row {
                scene_label: r.scene_label,
                image_id: r.image_id.clone(),
                concept: r.concept.clone(),
                status: "error".into(),
                score: String::new(),
                selected_maps: String::new(),
                score_trace: String::new(),
                error: message.clone(),
            },
        };
        csv.serialize(row)?;
    }
    csv.flush().map_err(|source| ResultsError::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<RecognitionRecord>, ResultsError> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in csv.deserialize::<Row>().enumerate() {
        let row = row?;
        let line = i + 2;
        let outcome = match row.status.as_str() {
            "ok" => RecordOutcome::Ok {
                score: row.score.parse().map_err(|_| ResultsError::Malformed {
                    row: line,
                    message: format!("bad score {:?}", row.score),
                })?,
                selected_maps: split(&row.selected_maps, line, "selected_maps")?,
                score_trace: split(&row.score_trace, line, "score_trace")?,
            },
            "error" => RecordOutcome::Error(row.error),
            other => {
                return Err(ResultsError::Malformed {
                    row: line,
                    message: format!("unknown status {other:?}"),
                })
            }
        };
        out.push(RecognitionRecord {
            scene_label: row.scene_label,
            image_id: row.image_id,
            concept: row.concept,
            outcome,
        });
    }
    Ok(out)
}

/// Reads results from a CSV file, or from a directory holding the index and CSV.
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<RecognitionRecord>, ResultsError> {
    let path = path.as_ref();
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| ResultsError::Io { path: p, source }
    };
    let csv_path = if path.is_dir() {
        let index_path = path.join(RESULTS_INDEX);
        if index_path.is_file() {
            let index: ResultsIndex =
                serde_json::from_slice(&std::fs::read(&index_path).map_err(io_err(&index_path))?)?;
            path.join(index.csv)
        } else {
            path.join(RESULTS_CSV)
        }
    } else {
        path.to_path_buf()
    };
    let file = std::fs::File::open(&csv_path).map_err(io_err(&csv_path))?;
    read_records(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip_bit_exact() {
        let records = vec![
            RecognitionRecord {
                scene_label: 3,
                image_id: "img,with comma".into(),
                concept: "wall".into(),
                outcome: RecordOutcome::Ok {
                    score: 7.0 / 15.0,
                    selected_maps: vec![4, 0, 17],
                    score_trace: vec![0.1, 1.0 / 3.0, 7.0 / 15.0],
                },
            },
            RecognitionRecord {
                scene_label: 0,
                image_id: "b".into(),
                concept: "sky".into(),
                outcome: RecordOutcome::Ok {
                    score: 0.0,
                    selected_maps: vec![],
                    score_trace: vec![],
                },
            },
            RecognitionRecord {
                scene_label: 1,
                image_id: "c".into(),
                concept: "door".into(),
                outcome: RecordOutcome::Error("concept mask is empty".into()),
            },
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "scene_label,image_id,concept,status,score,selected_maps,score_trace,error\n"
        ));
        assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn malformed_rows_rejected() {
        let text = "scene_label,image_id,concept,status,score,selected_maps,score_trace,error\n0,a,b,maybe,,,,\n";
        assert!(matches!(
            read_records(text.as_bytes()),
            Err(ResultsError::Malformed { row: 2, .. })
        ));
        let text = "scene_label,image_id,concept,status,score,selected_maps,score_trace,error\n0,a,b,ok,x,,,\n";
        assert!(matches!(
            read_records(text.as_bytes()),
            Err(ResultsError::Malformed { .. })
        ));
    }
}
