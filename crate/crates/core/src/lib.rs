//! Distributed concept recognition over binarized convolutional feature maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`mask`]: packed binary rasters and their set operations.
//! * [`ingest`]: on-disk formats (CMSK, CSTK, PGM import, JSON manifest).
//! * [`recognition`]: the Jaccard recognition score and greedy map selection.
//! * [`results`]: the recognition results file written by localization.
//! * [`analysis`]: distribution summaries, correlations and threshold sweeps.
//! * [`synth`]: seeded synthetic datasets with planted structure.

pub mod analysis;
pub mod ingest;
pub mod mask;
pub mod recognition;
pub mod results;
pub mod synth;

pub use ingest::{DatasetManifest, FeatureMapStack, ImageRecord, IngestError, SceneClass};
pub use mask::{jaccard, Bitmask, MaskError, MaskSetOpsResult};
pub use recognition::{
    exhaustive_best_subset, greedy_selection, greedy_selection_parallel, recognition_score,
    GreedyConfig, RecognitionError, RecognitionResult, Selection,
};
