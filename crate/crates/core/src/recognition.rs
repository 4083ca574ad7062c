//! Concept recognition scoring and greedy feature-map selection.
//!
//! A concept is recognized by a set of feature maps when the union of their
//! binarized activation masks overlaps the concept's segmentation mask. The
//! score is the Jaccard ratio between the two. [`greedy_selection`] grows the
//! set one map at a time, always taking the map that yields the highest new
//! score, and stops once the best improvement is no longer strictly greater
//! than `delta`.
//!
//! Candidate scores are compared as exact rationals (cross-multiplied counts),
//! so ties are real ties and resolve to the lowest feature-map id regardless
//! of evaluation order.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::FeatureMapStack;
use crate::mask::{Bitmask, MaskError, MaskSetOpsResult};

/// Largest stack [`exhaustive_best_subset`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20;

pub const DEFAULT_DELTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecognitionError {
    #[error("concept mask is empty")]
    EmptyConcept,
    #[error("feature-map stack is empty")]
    EmptyStack,
    #[error(transparent)]
    Shape(#[from] MaskError),
    #[error("stack of {size} maps exceeds the exhaustive search limit of {limit}")]
    StackTooLarge { size: usize, limit: usize },
    #[error("delta must be finite and non-negative, got {0}")]
    InvalidDelta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub delta: f64,
    pub max_maps: Option<usize>,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            max_maps: None,
        }
    }
}

impl GreedyConfig {
    pub fn new(delta: f64, max_maps: Option<usize>) -> Result<Self, RecognitionError> {
        let cfg = Self { delta, max_maps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RecognitionError> {
        if self.delta.is_finite() && self.delta >= 0.0 {
            Ok(())
        } else {
            Err(RecognitionError::InvalidDelta(self.delta))
        }
    }
}

/// Exact `intersection / union` ratio.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };

    fn from_counts(c: MaskSetOpsResult) -> Ratio {
        // Concept masks are nonempty, so the union never is.
        debug_assert!(c.union_count > 0);
        Ratio {
            num: c.intersection_count,
            den: c.union_count,
        }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn cmp(self, other: Ratio) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Outcome of greedy selection for one concept mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Feature-map ids in the order they were accepted.
    pub selected_maps: Vec<usize>,
    pub score: f64,
    /// Score after each accepted map.
    pub score_trace: Vec<f64>,
    pub combined_mask: Bitmask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    pub concept_name: String,
    pub image_id: String,
    pub selected_maps: Vec<usize>,
    pub score: f64,
    pub score_trace: Vec<f64>,
    pub combined_mask: Bitmask,
}

impl RecognitionResult {
    pub fn from_selection(
        image_id: impl Into<String>,
        concept_name: impl Into<String>,
        s: Selection,
    ) -> Self {
        Self {
            concept_name: concept_name.into(),
            image_id: image_id.into(),
            selected_maps: s.selected_maps,
            score: s.score,
            score_trace: s.score_trace,
            combined_mask: s.combined_mask,
        }
    }
}

fn check_inputs(stack: &FeatureMapStack, concept: &Bitmask) -> Result<(), RecognitionError> {
    if stack.is_empty() {
        return Err(RecognitionError::EmptyStack);
    }
    if let Some(first) = stack.masks().first() {
        concept.check_shape(first)?;
    }
    if concept.is_empty() {
        return Err(RecognitionError::EmptyConcept);
    }
    Ok(())
}

/// Jaccard score of `concept_mask` against the union of `selected`; 0 for an empty selection.
pub fn recognition_score<'a, I>(
    concept_mask: &Bitmask,
    selected: I,
) -> Result<f64, RecognitionError>
where
    I: IntoIterator<Item = &'a Bitmask>,
{
    if concept_mask.is_empty() {
        return Err(RecognitionError::EmptyConcept);
    }
    let (w, h) = concept_mask.dims();
    let mut combined = Bitmask::empty(w, h)?;
    for mask in selected {
        combined.union_with(mask)?;
    }
    Ok(Ratio::from_counts(concept_mask.counts(&combined)?).value())
}

/// Sequential scan in id order; the first strictly greater ratio wins, so ties go to the lowest id.
fn best_candidate_sequential(
    concept: &Bitmask,
    covered: &Bitmask,
    masks: &[Bitmask],
    remaining: &[usize],
) -> Option<(usize, Ratio)> {
    let mut best: Option<(usize, Ratio)> = None;
    let mut best_ratio = Ratio::ZERO;
    for (pos, &id) in remaining.iter().enumerate() {
        let r = Ratio::from_counts(concept.counts_against_union(covered, &masks[id]));
        if r.cmp(best_ratio) == Ordering::Greater {
            best_ratio = r;
            best = Some((pos, r));
        }
    }
    best
}

/// Parallel scan; the reduction keeps the higher ratio and, on ties, the lower id,
/// which is exactly what the sequential scan returns.
fn best_candidate_parallel(
    concept: &Bitmask,
    covered: &Bitmask,
    masks: &[Bitmask],
    remaining: &[usize],
) -> Option<(usize, Ratio)> {
    remaining
        .par_iter()
        .enumerate()
        .map(|(pos, &id)| {
            (
                pos,
                Ratio::from_counts(concept.counts_against_union(covered, &masks[id])),
            )
        })
        .filter(|(_, r)| r.num > 0)
        .reduce_with(|a, b| match a.1.cmp(b.1) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => {
                if a.0 <= b.0 {
                    a
                } else {
                    b
                }
            }
        })
}

fn run_greedy<F>(
    stack: &FeatureMapStack,
    concept: &Bitmask,
    cfg: &GreedyConfig,
    best_candidate: F,
) -> Result<Selection, RecognitionError>
where
    F: Fn(&Bitmask, &Bitmask, &[Bitmask], &[usize]) -> Option<(usize, Ratio)>,
{
    cfg.validate()?;
    check_inputs(stack, concept)?;
    let masks = stack.masks();
    let (w, h) = concept.dims();
    let mut remaining: Vec<usize> = (0..masks.len()).collect();
    let mut covered = Bitmask::empty(w, h)?;
    let mut score = 0.0f64;
    let mut selected = Vec::new();
    let mut trace = Vec::new();

    while cfg.max_maps.is_none_or(|cap| selected.len() < cap) {
        let Some((pos, ratio)) = best_candidate(concept, &covered, masks, &remaining) else {
            break;
        };
        let id = remaining.remove(pos);
        let candidate_score = ratio.value();
        if candidate_score - score > cfg.delta {
            score = candidate_score;
            covered.union_with(&masks[id])?;
            selected.push(id);
            trace.push(score);
        } else {
            break;
        }
    }

    Ok(Selection {
        selected_maps: selected,
        score,
        score_trace: trace,
        combined_mask: covered,
    })
}

/// Greedy feature-map selection for one concept mask.
pub fn greedy_selection(
    stack: &FeatureMapStack,
    concept_mask: &Bitmask,
    cfg: &GreedyConfig,
) -> Result<Selection, RecognitionError> {
    run_greedy(stack, concept_mask, cfg, best_candidate_sequential)
}

/// Same result as [`greedy_selection`], evaluating the candidates of each
/// iteration on the rayon pool. Worth it for large stacks and images.
pub fn greedy_selection_parallel(
    stack: &FeatureMapStack,
    concept_mask: &Bitmask,
    cfg: &GreedyConfig,
) -> Result<Selection, RecognitionError> {
    run_greedy(stack, concept_mask, cfg, best_candidate_parallel)
}

/// Best subset of at most `max_size` maps by exhaustive enumeration.
///
/// Ties resolve to the lexicographically smallest sorted id list, with the
/// empty set smallest of all. Validation only: refuses stacks larger than
/// [`EXHAUSTIVE_LIMIT`].
pub fn exhaustive_best_subset(
    stack: &FeatureMapStack,
    concept_mask: &Bitmask,
    max_size: usize,
) -> Result<(Vec<usize>, f64), RecognitionError> {
    if stack.len() > EXHAUSTIVE_LIMIT {
        return Err(RecognitionError::StackTooLarge {
            size: stack.len(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    check_inputs(stack, concept_mask)?;

    struct Search<'a> {
        concept: &'a Bitmask,
        masks: &'a [Bitmask],
        max_size: usize,
        current: Vec<usize>,
        best: Vec<usize>,
        best_ratio: Ratio,
    }

    impl Search<'_> {
        // Pre-order DFS over increasing ids visits subsets in lexicographic order.
        fn visit(&mut self, covered: &Bitmask, next: usize) {
            if self.current.len() == self.max_size {
                return;
            }
            for id in next..self.masks.len() {
                let counts = self.concept.counts_against_union(covered, &self.masks[id]);
                let ratio = Ratio::from_counts(counts);
                self.current.push(id);
                if ratio.cmp(self.best_ratio) == Ordering::Greater {
                    self.best_ratio = ratio;
                    self.best = self.current.clone();
                }
                let mut grown = covered.clone();
                grown.union_with(&self.masks[id]).expect("shapes checked");
                self.visit(&grown, id + 1);
                self.current.pop();
            }
        }
    }

    let (w, h) = concept_mask.dims();
    let mut search = Search {
        concept: concept_mask,
        masks: stack.masks(),
        max_size,
        current: Vec::new(),
        best: Vec::new(),
        best_ratio: Ratio::ZERO,
    };
    search.visit(&Bitmask::empty(w, h)?, 0);
    let score = search.best_ratio.value();
    Ok((search.best, score))
}
