pub mod analyze;
pub mod gen_synth;
pub mod localize;
pub mod stats;
pub mod sweep;

use std::path::{Path, PathBuf};

use concept_cover_core::ingest::load_manifest;
use concept_cover_core::results::{load_results, RecognitionRecord, ResultsError};
use concept_cover_core::DatasetManifest;

use crate::failure::{Classify, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Accepts a dataset directory or a manifest path.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    if dataset.is_dir() {
        dataset.join(MANIFEST_FILE)
    } else {
        dataset.to_path_buf()
    }
}

pub fn open_dataset(dataset: &Path) -> Result<DatasetManifest, Failure> {
    let path = manifest_path(dataset);
    let manifest = load_manifest(&path)?;
    log::info!(
        "{}: {} scenes, {} images, {} maps per image",
        path.display(),
        manifest.scene_count(),
        manifest.images.len(),
        manifest.layer_feature_map_count
    );
    Ok(manifest)
}

pub fn open_results(path: &Path) -> Result<Vec<RecognitionRecord>, Failure> {
    let ctx = format!("reading results {}", path.display());
    match load_results(path) {
        Ok(r) => Ok(r),
        Err(e @ ResultsError::Io { .. }) => {
            Err(Failure::runtime(anyhow::Error::new(e).context(ctx)))
        }
        Err(e) => Err(Failure::validation(anyhow::Error::new(e).context(ctx))),
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    if threads == Some(0) {
        return Err(Failure::validation(anyhow::anyhow!(
            "--threads must be positive"
        )));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .runtime("building thread pool")
}

/// Parses `lo:hi`.
pub fn parse_range(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::validation(anyhow::anyhow!("range {text:?} is not lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1").unwrap(), (0.0, 1.0));
        assert_eq!(parse_range(" 0.25 : 0.5").unwrap(), (0.25, 0.5));
        assert!(parse_range("1:0").is_err());
        assert!(parse_range("0-1").is_err());
        assert!(parse_range("a:1").is_err());
    }
}
