//! Seed derivation, apportionment and stratified splitting shared by the
//! generator, the trainer and the active-learning harness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beliefs::ClassId;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-item seed from a master seed, a stream tag and an index.
pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    let tag = stream
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
    splitmix64(splitmix64(master ^ tag).wrapping_add(index))
}

/// Largest-remainder apportionment of `total` over non-negative `weights`.
/// Remainder ties go to the lower index.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified split of `labels` into (kept, held-out) index lists.
///
/// The held-out size is `round(fraction * n)`, apportioned over classes in
/// proportion to their counts. Both lists are returned sorted.
pub fn stratified_holdout(labels: &[ClassId], n_classes: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, c) in labels.iter().enumerate() {
        by_class[c.0].push(i);
    }
    let holdout_total = (fraction * labels.len() as f64).round() as usize;
    let weights: Vec<f64> = by_class.iter().map(|v| v.len() as f64).collect();
    let quota = apportion(holdout_total, &weights);
    let mut rng = rng(seed);
    let (mut kept, mut held) = (Vec::new(), Vec::new());
    for (members, q) in by_class.iter_mut().zip(quota) {
        members.shuffle(&mut rng);
        held.extend_from_slice(&members[..q.min(members.len())]);
        kept.extend_from_slice(&members[q.min(members.len())..]);
    }
    kept.sort_unstable();
    held.sort_unstable();
    (kept, held)
}
