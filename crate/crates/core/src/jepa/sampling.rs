use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::PatchSet;

/// One context patch and `m` distinct target patches of one graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContextTargetBatch {
    pub graph_idx: usize,
    pub context_idx: usize,
    pub target_idxs: Vec<usize>,
}

/// Uniform context, then `m` distinct uniform targets among the rest.
pub fn sample_indices<R: Rng>(num_patches: usize, m: usize, graph_idx: usize, rng: &mut R) -> Result<ContextTargetBatch> {
    if m == 0 || num_patches <= m {
        return Err(Error::InvalidArgument(format!(
            "need more than {m} patches to draw a context and {m} targets, got {num_patches}"
        )));
    }
    let context_idx = rng.gen_range(0..num_patches);
    let target_idxs = index::sample(rng, num_patches - 1, m)
        .into_iter()
        .map(|i| if i >= context_idx { i + 1 } else { i })
        .collect();
    Ok(ContextTargetBatch {
        graph_idx,
        context_idx,
        target_idxs,
    })
}

pub fn sample_batch(ps: &PatchSet, m: usize, seed: u64) -> Result<ContextTargetBatch> {
    sample_indices(ps.num_patches(), m, 0, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_and_distinct_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let b = sample_indices(3, 2, 0, &mut rng).unwrap();
            let mut all = b.target_idxs.clone();
            all.push(b.context_idx);
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2]);

            let b = sample_indices(32, 4, 0, &mut rng).unwrap();
            let mut all = b.target_idxs.clone();
            all.push(b.context_idx);
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), 5);
            assert!(all.iter().all(|&i| i < 32));
        }
        assert!(sample_indices(2, 2, 0, &mut rng).is_err());
    }
}
