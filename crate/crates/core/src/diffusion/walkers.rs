use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::graph::WeightedGraph;

/// Walkers per substream. Fixed so results do not depend on the thread count.
const WALKERS_PER_STREAM: u64 = 1 << 15;

/// Empirical densities η̂(0..=steps) of `walkers` independent walkers that
/// start at `start` and move to neighbor j with probability `w[i][j] / St[i]`.
///
/// Walkers are split into fixed-size substreams, each driven by
/// `ChaCha8Rng::seed_from_u64(seed)` on its own stream index.
pub fn monte_carlo_walk(
    wg: &WeightedGraph,
    start: usize,
    walkers: u64,
    steps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = wg.len();
    if start >= n {
        return Err(Error::Lookup { id: start, len: n });
    }
    if walkers == 0 {
        return Err(Error::Precondition(
            "at least one walker is required".into(),
        ));
    }
    let streams = walkers.div_ceil(WALKERS_PER_STREAM);
    let counts = (0..streams)
        .into_par_iter()
        .map(|s| {
            let count = WALKERS_PER_STREAM.min(walkers - s * WALKERS_PER_STREAM) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            run_stream(wg, start, count, steps, &mut rng)
        })
        .reduce(
            || vec![0u64; (steps + 1) * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let scale = 1.0 / walkers as f64;
    Ok(counts
        .chunks(n)
        .map(|row| row.iter().map(|&c| c as f64 * scale).collect())
        .collect())
}

fn run_stream(
    wg: &WeightedGraph,
    start: usize,
    count: usize,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u64> {
    let n = wg.len();
    let mut hist = vec![0u64; (steps + 1) * n];
    let mut pos = vec![start; count];
    hist[start] = count as u64;
    for t in 1..=steps {
        for p in pos.iter_mut() {
            *p = next_node(wg, *p, rng);
            hist[t * n + *p] += 1;
        }
    }
    hist
}

fn next_node(wg: &WeightedGraph, i: usize, rng: &mut ChaCha8Rng) -> usize {
    let targets = wg.targets(i);
    let weights = wg.weights(i);
    let u = rng.random::<f64>() * wg.strength()[i];
    let mut acc = 0.0;
    for (&j, &w) in targets.iter().zip(weights) {
        acc += w;
        if u < acc {
            return j;
        }
    }
    // Rounding at the top of the range: fall back to the last reachable target.
    targets
        .iter()
        .zip(weights)
        .rev()
        .find(|(_, &w)| w > 0.0)
        .map(|(&j, _)| j)
        .expect("positive strength implies a positive weight")
}
