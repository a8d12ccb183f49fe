use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::question::QARecord;
use crate::{rng, Error, Result};

/// Episode-level partition into train, validation and test.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    /// Sports too small to split, assigned wholly to train.
    pub warnings: Vec<String>,
}

impl Split {
    /// Subset index (0 train, 1 val, 2 test) of an episode.
    pub fn subset_of(&self, episode: u64) -> Option<usize> {
        [&self.train, &self.val, &self.test]
            .iter()
            .position(|s| s.binary_search(&episode).is_ok())
    }

    /// Partitions records by the subset of their episode.
    pub fn assign(&self, records: &[QARecord]) -> [Vec<QARecord>; 3] {
        let mut out: [Vec<QARecord>; 3] = Default::default();
        for r in records {
            if let Some(s) = self.subset_of(r.episode_id) {
                out[s].push(r.clone());
            }
        }
        out
    }
}

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(*r >= 0.0)) || libm::fabs(sum - 1.0) > 1e-9 {
        return Err(Error::Config(alloc::format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` items; ties go to earlier subsets.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quota = ratios.map(|r| r * n as f64);
    let mut sizes = quota.map(|q| libm::floor(q + 1e-9) as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quota[a] - sizes[a] as f64;
        let rb = quota[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut left = n.saturating_sub(sizes.iter().sum());
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Randomly assigns the episodes of each sport to the three subsets in the
/// given ratios (within one episode per sport). Sports with fewer than three
/// episodes go to train with a warning.
pub fn split_episodes<'a>(episodes: impl IntoIterator<Item = (u64, &'a str)>, ratios: [f64; 3], seed: u64) -> Result<Split> {
    check_ratios(ratios)?;
    let mut by_sport: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    for (id, sport) in episodes {
        by_sport.entry(sport).or_default().insert(id);
    }
    let mut split = Split::default();
    for (sport, ids) in by_sport {
        let mut ids: Vec<u64> = ids.into_iter().collect();
        if ids.len() < 3 {
            split
                .warnings
                .push(alloc::format!("sport {sport} has {} episodes; all assigned to train", ids.len()));
            split.train.extend(ids);
            continue;
        }
        ids.shuffle(&mut rng::derive(seed, sport));
        let [a, b, _] = apportion(ids.len(), ratios);
        split.train.extend_from_slice(&ids[..a]);
        split.val.extend_from_slice(&ids[a..a + b]);
        split.test.extend_from_slice(&ids[a + b..]);
    }
    for s in [&mut split.train, &mut split.val, &mut split.test] {
        s.sort_unstable();
    }
    Ok(split)
}

/// Episode-level stratified split of a record set, stratified by sport.
pub fn stratified_split(records: &[QARecord], ratios: [f64; 3], seed: u64) -> Result<Split> {
    let mut sport_of: BTreeMap<u64, &str> = BTreeMap::new();
    for r in records {
        if let Some(prev) = sport_of.insert(r.episode_id, &r.sport) {
            if prev != r.sport {
                return Err(Error::Data(alloc::format!("episode {} tagged with two sports", r.episode_id)));
            }
        }
    }
    split_episodes(sport_of, ratios, seed)
}
