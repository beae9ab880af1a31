use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prioritization {
    /// `P(i) ∝ (1 / rank_i)^(1/β)`, rank 1 being the highest score.
    Rank { beta: f64 },
    /// Uniform over the `k` highest-scoring entries.
    TopK { k: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferEntry<L> {
    pub level: L,
    pub score: f64,
    pub last_sampled: u64,
    /// Best discounted return seen; `-inf` until an episode completes.
    pub max_return: f64,
    /// Success rate from the most recent scoring, when known.
    pub success: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    Updated,
    Inserted,
    /// Inserted after evicting the lowest-scoring entry.
    Replaced,
    Discarded,
}

/// Capacity-bounded store of scored levels with prioritized replay.
#[derive(Clone, Debug)]
pub struct ScoredLevelBuffer<L> {
    capacity: usize,
    prioritization: Prioritization,
    staleness_coef: f64,
    entries: Vec<BufferEntry<L>>,
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    level: &'a str,
    score: f64,
    p: Option<f64>,
    /// `None` until an episode on the level has completed.
    max_return: Option<f64>,
}

impl<L: Clone + PartialEq> ScoredLevelBuffer<L> {
    pub fn new(capacity: usize, prioritization: Prioritization, staleness_coef: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Argument("buffer capacity must be positive".into()));
        }
        match prioritization {
            Prioritization::Rank { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(Error::Argument(format!("rank temperature must be positive, got {beta}")));
            }
            Prioritization::TopK { k: 0 } => return Err(Error::Argument("top-k needs k >= 1".into())),
            _ => {}
        }
        if !(0.0..=1.0).contains(&staleness_coef) {
            return Err(Error::Argument(format!("staleness coefficient must lie in [0, 1], got {staleness_coef}")));
        }
        Ok(Self { capacity, prioritization, staleness_coef, entries: Vec::with_capacity(capacity) })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BufferEntry<L>] {
        &self.entries
    }

    pub fn get(&self, level: &L) -> Option<&BufferEntry<L>> {
        self.entries.iter().find(|e| e.level == *level)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Replaces the contents wholesale, keeping at most `capacity` entries.
    pub fn replace_all(&mut self, entries: Vec<BufferEntry<L>>) {
        self.entries = entries;
        self.entries.truncate(self.capacity);
    }

    /// Replay probabilities of every entry, in entry order.
    pub fn probabilities(&self, update_counter: u64) -> Vec<f64> {
        let n = self.entries.len();
        if n == 0 {
            return vec![];
        }
        let mut order: Vec<usize> = (0..n).collect();
        // stable: equal scores keep insertion order
        order.sort_by(|&a, &b| self.entries[b].score.total_cmp(&self.entries[a].score));
        let mut p_score = vec![0.0; n];
        match self.prioritization {
            Prioritization::Rank { beta } => {
                for (rank, &i) in order.iter().enumerate() {
                    p_score[i] = (1.0 / (rank + 1) as f64).powf(1.0 / beta);
                }
            }
            Prioritization::TopK { k } => {
                for &i in order.iter().take(k) {
                    p_score[i] = 1.0;
                }
            }
        }
        normalize(&mut p_score);

        let c = self.staleness_coef;
        if c == 0.0 {
            return p_score;
        }
        let mut p_stale: Vec<f64> =
            self.entries.iter().map(|e| update_counter.saturating_sub(e.last_sampled) as f64).collect();
        if p_stale.iter().sum::<f64>() == 0.0 {
            p_stale.iter_mut().for_each(|s| *s = 1.0);
        }
        normalize(&mut p_stale);
        p_score.iter().zip(&p_stale).map(|(s, t)| (1.0 - c) * s + c * t).collect()
    }

    /// Draws an entry by replay probability and marks it sampled at `update_counter`.
    pub fn sample(&mut self, rng: &mut SimRng, update_counter: u64) -> Result<L> {
        let i = self.sample_index(rng, update_counter)?;
        self.entries[i].last_sampled = update_counter;
        Ok(self.entries[i].level.clone())
    }

    fn sample_index(&self, rng: &mut SimRng, update_counter: u64) -> Result<usize> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let dist = WeightedIndex::new(self.probabilities(update_counter))
            .map_err(|e| Error::Contract(format!("replay distribution: {e}")))?;
        Ok(dist.sample(rng))
    }

    /// Uniform draw, ignoring scores and staleness.
    pub fn sample_uniform(&self, rng: &mut SimRng) -> Result<L> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok(self.entries[rng.random_range(0..self.entries.len())].level.clone())
    }

    pub fn update(&mut self, level: L, score: f64, observed_return: f64, update_counter: u64) -> Result<UpdateOutcome> {
        self.update_with(level, score, observed_return, None, update_counter)
    }

    /// Rescores a known level or offers a new one for insertion. A full buffer
    /// admits a new level only if it beats the current minimum score, which
    /// is then evicted (the oldest such entry on ties).
    pub fn update_with(
        &mut self,
        level: L,
        score: f64,
        observed_return: f64,
        success: Option<f64>,
        update_counter: u64,
    ) -> Result<UpdateOutcome> {
        if !score.is_finite() {
            return Err(Error::Numerical { stat: "level score".into(), value: score });
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.level == level) {
            e.score = score;
            e.max_return = e.max_return.max(observed_return);
            if success.is_some() {
                e.success = success;
            }
            return Ok(UpdateOutcome::Updated);
        }
        let entry = BufferEntry { level, score, last_sampled: update_counter, max_return: observed_return, success };
        if self.entries.len() < self.capacity {
            self.entries.push(entry);
            return Ok(UpdateOutcome::Inserted);
        }
        let (min_i, min_score) = self.entries.iter().enumerate().fold((0, f64::INFINITY), |best, (i, e)| {
            if e.score < best.1 {
                (i, e.score)
            } else {
                best
            }
        });
        if score > min_score {
            // entries stay in insertion order, so ties evict the oldest
            self.entries.remove(min_i);
            self.entries.push(entry);
            Ok(UpdateOutcome::Replaced)
        } else {
            Ok(UpdateOutcome::Discarded)
        }
    }

    pub fn summary(&self) -> BufferSummary {
        let scores: Vec<f64> = self.entries.iter().map(|e| e.score).collect();
        let rates: Vec<f64> = self.entries.iter().filter_map(|e| e.success).collect();
        BufferSummary {
            size: self.entries.len(),
            mean_score: mean(&scores),
            median_score: median(&scores),
            mean_success: mean(&rates),
            median_success: median(&rates),
        }
    }

    /// One JSON object per line: level text, score, success rate, best return.
    pub fn export_jsonl(&self, mut out: impl Write, text: impl Fn(&L) -> String) -> Result<()> {
        for e in &self.entries {
            let level = text(&e.level);
            let rec = ExportRecord {
                level: &level,
                score: e.score,
                p: e.success,
                max_return: e.max_return.is_finite().then_some(e.max_return),
            };
            serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BufferSummary {
    pub size: usize,
    pub mean_score: Option<f64>,
    pub median_score: Option<f64>,
    pub mean_success: Option<f64>,
    pub median_success: Option<f64>,
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub(crate) fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn buf(cap: usize, p: Prioritization, c: f64) -> ScoredLevelBuffer<u32> {
        ScoredLevelBuffer::new(cap, p, c).unwrap()
    }

    #[test]
    fn rank_two_entries() {
        let mut b = buf(4, Prioritization::Rank { beta: 1.0 }, 0.0);
        b.update(7, 0.1, 0.0, 0).unwrap();
        b.update(8, 0.9, 0.0, 0).unwrap();
        let p = b.probabilities(0);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn top1_always_max() {
        let mut b = buf(4, Prioritization::TopK { k: 1 }, 0.0);
        for (l, s) in [(1, 0.2), (2, 0.7), (3, 0.5)] {
            b.update(l, s, 0.0, 0).unwrap();
        }
        let mut rng = stream(0, &[]);
        assert!((0..100).all(|_| b.sample(&mut rng, 0).unwrap() == 2));
    }

    #[test]
    fn staleness_only() {
        let mut b = buf(4, Prioritization::Rank { beta: 0.3 }, 1.0);
        b.update(1, 5.0, 0.0, 0).unwrap();
        b.update(2, 1.0, 0.0, 3).unwrap();
        assert_eq!(b.probabilities(4), vec![0.8, 0.2]);
        let mut rng = stream(0, &[]);
        b.sample(&mut rng, 4).unwrap();
        assert_eq!(b.entries().iter().filter(|e| e.last_sampled == 4).count(), 1);
    }

    #[test]
    fn empty_buffer_errors() {
        let mut b = buf(2, Prioritization::TopK { k: 1 }, 0.3);
        assert!(matches!(b.sample(&mut stream(0, &[]), 0), Err(Error::EmptyBuffer)));
        assert_eq!(b.update(1, 0.5, 0.0, 0).unwrap(), UpdateOutcome::Inserted);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn eviction_and_monotone_return() {
        let mut b = buf(2, Prioritization::TopK { k: 2 }, 0.0);
        b.update(1, 0.5, 1.0, 0).unwrap();
        b.update(2, 0.3, 0.0, 0).unwrap();
        assert_eq!(b.update(3, 0.1, 0.0, 0).unwrap(), UpdateOutcome::Discarded);
        assert_eq!(b.update(3, 0.4, 0.0, 0).unwrap(), UpdateOutcome::Replaced);
        assert!(b.get(&2).is_none());
        b.update(1, 0.6, 0.2, 1).unwrap();
        let e = b.get(&1).unwrap();
        assert_eq!((e.score, e.max_return), (0.6, 1.0));
        assert!(b.update(4, f64::NAN, 0.0, 0).is_err());
    }

    #[test]
    fn bad_construction() {
        assert!(ScoredLevelBuffer::<u32>::new(0, Prioritization::TopK { k: 1 }, 0.0).is_err());
        assert!(ScoredLevelBuffer::<u32>::new(1, Prioritization::Rank { beta: 0.0 }, 0.0).is_err());
        assert!(ScoredLevelBuffer::<u32>::new(1, Prioritization::TopK { k: 1 }, 1.5).is_err());
    }

    #[test]
    fn export_lines() {
        let mut b = buf(2, Prioritization::TopK { k: 2 }, 0.0);
        b.update_with(1, 0.25, 0.5, Some(0.5), 0).unwrap();
        let mut out = Vec::new();
        b.export_jsonl(&mut out, |l| format!("L{l}")).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["level"], "L1");
        assert_eq!(v["p"], 0.5);
    }

    #[test]
    fn summary_stats() {
        let mut b = buf(4, Prioritization::TopK { k: 2 }, 0.0);
        for (l, s) in [(1, 0.1), (2, 0.3), (3, 0.2)] {
            b.update_with(l, s, 0.0, Some(s * 2.0), 0).unwrap();
        }
        let s = b.summary();
        assert_eq!(s.size, 3);
        assert!((s.mean_score.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(s.median_score, Some(0.2));
        assert_eq!(s.median_success, Some(0.4));
    }
}
