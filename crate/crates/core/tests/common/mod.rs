//! Naive pixel-grid references shared by the integration tests.
#![allow(dead_code)]

use concept_cover_core::{Bitmask, FeatureMapStack};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major `Vec<bool>` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub w: u32,
    pub h: u32,
    pub px: Vec<bool>,
}

impl Grid {
    pub fn random(rng: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> Grid {
        let px = (0..w * h).map(|_| rng.random_bool(density)).collect();
        Grid { w, h, px }
    }

    pub fn to_mask(&self) -> Bitmask {
        Bitmask::from_pixels(self.w, self.h, &self.px).unwrap()
    }

    pub fn or(&self, other: &Grid) -> Grid {
        let px = self
            .px
            .iter()
            .zip(&other.px)
            .map(|(a, b)| *a || *b)
            .collect();
        Grid { px, ..*self }
    }

    pub fn ones(&self) -> u64 {
        self.px.iter().filter(|p| **p).count() as u64
    }
}

/// (|a ∩ b|, |a ∪ b|) pixel by pixel.
pub fn naive_counts(a: &Grid, b: &Grid) -> (u64, u64) {
    let mut inter = 0;
    let mut uni = 0;
    for (x, y) in a.px.iter().zip(&b.px) {
        inter += (*x && *y) as u64;
        uni += (*x || *y) as u64;
    }
    (inter, uni)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub selected: Vec<usize>,
    pub trace: Vec<f64>,
    pub score: f64,
}

/// Step-by-step greedy: every round scores every unused map against the
/// running union and takes the argmax (lowest id on ties, zero scores never
/// win), stopping once the gain is not above `delta`.
pub fn reference_greedy(maps: &[Grid], concept: &Grid, delta: f64) -> ReferenceRun {
    let mut used = vec![false; maps.len()];
    let mut covered = Grid {
        px: vec![false; concept.px.len()],
        ..*concept
    };
    let mut run = ReferenceRun {
        selected: vec![],
        trace: vec![],
        score: 0.0,
    };
    loop {
        // Best as an exact fraction: (num, den).
        let mut best: Option<(usize, u64, u64)> = None;
        for (id, m) in maps.iter().enumerate() {
            if used[id] {
                continue;
            }
            let (i, u) = naive_counts(concept, &covered.or(m));
            let wins = match best {
                None => i > 0,
                Some((_, bi, bu)) => (i as u128) * (bu as u128) > (bi as u128) * (u as u128),
            };
            if wins {
                best = Some((id, i, u));
            }
        }
        let Some((id, i, u)) = best else { break };
        let s = i as f64 / u as f64;
        if s - run.score > delta {
            used[id] = true;
            covered = covered.or(&maps[id]);
            run.selected.push(id);
            run.trace.push(s);
            run.score = s;
        } else {
            break;
        }
    }
    run
}

/// Random stack and nonempty concept; map densities vary per map.
pub fn random_instance(seed: u64, maps: usize, w: u32, h: u32) -> (Vec<Grid>, Grid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concept = loop {
        let d = rng.random_range(0.05..0.6);
        let g = Grid::random(&mut rng, w, h, d);
        if g.ones() > 0 {
            break g;
        }
    };
    let grids = (0..maps)
        .map(|_| {
            let d = rng.random_range(0.0..0.5);
            Grid::random(&mut rng, w, h, d)
        })
        .collect();
    (grids, concept)
}

/// Maps built from pieces of the concept plus a little outside noise, so
/// greedy usually takes several maps.
pub fn fragmented_instance(seed: u64, maps: usize) -> (Vec<Grid>, Grid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (16, 16);
    let concept = loop {
        let g = Grid::random(&mut rng, w, h, 0.4);
        if g.ones() > 0 {
            break g;
        }
    };
    let grids = (0..maps)
        .map(|_| {
            let keep = rng.random_range(0.1..0.7);
            let noise = rng.random_range(0.0..0.08);
            let px = concept
                .px
                .iter()
                .map(|&on| {
                    if on {
                        rng.random_bool(keep)
                    } else {
                        rng.random_bool(noise)
                    }
                })
                .collect();
            Grid { w, h, px }
        })
        .collect();
    (grids, concept)
}

pub fn stack_of(grids: &[Grid]) -> FeatureMapStack {
    FeatureMapStack::new(grids.iter().map(Grid::to_mask).collect()).unwrap()
}
