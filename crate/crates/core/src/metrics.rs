//! Rank-prediction metrics for one match.
//!
//! All six metrics compare the predicted and observed placement of every
//! team. AP and NDCG are position-weighted; by default position `i` is the
//! team that actually finished `i`-th, so errors near the top of the real
//! leaderboard weigh most.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::pair_count;

/// Which leaderboard AP and NDCG walk when assigning positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PositionOrder {
    #[default]
    Observed,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub ndcg_log_base: f64,
    pub positions: PositionOrder,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            ndcg_log_base: 2.0,
            positions: PositionOrder::Observed,
        }
    }
}

impl MetricOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.ndcg_log_base > 1.0 && self.ndcg_log_base.is_finite()) {
            return Err(Error::Domain(format!(
                "ndcg log base must be > 1, got {}",
                self.ndcg_log_base
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPair {
    pub predicted: u32,
    pub observed: u32,
}

impl RankPair {
    pub fn error(&self) -> u32 {
        self.predicted.abs_diff(self.observed)
    }

    fn relevance(&self) -> f64 {
        1.0 / (1.0 + f64::from(self.error()))
    }
}

/// Predicted and observed placement per team. Both columns are strict
/// permutations of `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPairs {
    pairs: Vec<RankPair>,
}

fn check_permutation(ranks: &[u32], what: &str) -> Result<()> {
    let n = ranks.len();
    let mut seen = vec![false; n];
    for &r in ranks {
        let idx = r as usize;
        if idx == 0 || idx > n || seen[idx - 1] {
            return Err(Error::Data(format!("{what} ranks are not a permutation of 1..={n}")));
        }
        seen[idx - 1] = true;
    }
    Ok(())
}

impl RankPairs {
    pub fn new(predicted: &[u32], observed: &[u32]) -> Result<Self> {
        if predicted.len() != observed.len() {
            return Err(Error::Data(format!(
                "{} predicted ranks for {} observed",
                predicted.len(),
                observed.len()
            )));
        }
        if predicted.len() < 2 {
            return Err(Error::Domain("metrics need at least 2 teams".into()));
        }
        check_permutation(predicted, "predicted")?;
        check_permutation(observed, "observed")?;
        Ok(RankPairs {
            pairs: predicted
                .iter()
                .zip(observed)
                .map(|(&predicted, &observed)| RankPair { predicted, observed })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[RankPair] {
        &self.pairs
    }

    pub fn errors(&self) -> Vec<u32> {
        self.pairs.iter().map(RankPair::error).collect()
    }

    /// Pairs listed by position `1..=N` under `order`.
    fn by_position(&self, order: PositionOrder) -> Vec<RankPair> {
        let mut out = vec![self.pairs[0]; self.pairs.len()];
        for p in &self.pairs {
            let pos = match order {
                PositionOrder::Observed => p.observed,
                PositionOrder::Predicted => p.predicted,
            };
            out[pos as usize - 1] = *p;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub mae: f64,
    pub kendall_tau: f64,
    pub mrr: f64,
    pub ap: f64,
    pub ndcg: f64,
    pub team_count: usize,
}

impl MetricReport {
    pub const NAMES: [&'static str; 6] = ["accuracy", "mae", "kendall_tau", "mrr", "ap", "ndcg"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.accuracy,
            self.mae,
            self.kendall_tau,
            self.mrr,
            self.ap,
            self.ndcg,
        ]
    }
}

pub fn accuracy(pairs: &RankPairs) -> f64 {
    let hits = pairs.pairs.iter().filter(|p| p.error() == 0).count();
    hits as f64 / pairs.len() as f64
}

pub fn mae(pairs: &RankPairs) -> f64 {
    let total: u64 = pairs.pairs.iter().map(|p| u64::from(p.error())).sum();
    total as f64 / pairs.len() as f64
}

/// Kendall's tau-a, `(concordant - discordant) / C(N, 2)`, in O(N log N) by
/// counting inversions of the observed column once sorted by prediction.
pub fn kendall_tau(pairs: &RankPairs) -> f64 {
    let mut observed = vec![0u32; pairs.len()];
    for p in &pairs.pairs {
        observed[p.predicted as usize - 1] = p.observed;
    }
    let discordant = count_inversions(&mut observed);
    let total = pair_count(pairs.len());
    (total - 2.0 * discordant as f64) / total
}

/// Quadratic pair enumeration; same value as [`kendall_tau`].
pub fn kendall_tau_quadratic(pairs: &RankPairs) -> f64 {
    let ps = &pairs.pairs;
    let mut score = 0i64;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let a = i64::from(ps[i].predicted) - i64::from(ps[j].predicted);
            let b = i64::from(ps[i].observed) - i64::from(ps[j].observed);
            score += (a * b).signum();
        }
    }
    score as f64 / pair_count(ps.len())
}

fn count_inversions(values: &mut [u32]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inversions = count_inversions(&mut values[..mid]) + count_inversions(&mut values[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if values[i] <= values[j] {
            merged.push(values[i]);
            i += 1;
        } else {
            merged.push(values[j]);
            inversions += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&values[i..mid]);
    merged.extend_from_slice(&values[j..]);
    values.copy_from_slice(&merged);
    inversions
}

/// Mean of `1 / (1 + error)` over teams.
pub fn mrr(pairs: &RankPairs) -> f64 {
    // Summed in standings order so the result does not depend on team order.
    let total: f64 = pairs
        .by_position(PositionOrder::Observed)
        .iter()
        .map(RankPair::relevance)
        .sum();
    total / pairs.len() as f64
}

/// `(1/N) * sum_i P(i) / (1 + error_i)` where `P(i)` is the fraction of
/// exact hits among positions `1..=i`.
pub fn average_precision(pairs: &RankPairs, order: PositionOrder) -> f64 {
    let mut hits = 0u32;
    let mut total = 0.0;
    for (i, p) in pairs.by_position(order).iter().enumerate() {
        if p.error() == 0 {
            hits += 1;
        }
        let precision = f64::from(hits) / (i + 1) as f64;
        total += precision * p.relevance();
    }
    total / pairs.len() as f64
}

/// DCG with relevance `1 / (1 + error)` and discount `1 / log_base(i + 1)`,
/// normalized by the all-correct DCG.
pub fn ndcg(pairs: &RankPairs, log_base: f64, order: PositionOrder) -> f64 {
    let mut dcg = 0.0;
    let mut ideal = 0.0;
    for (i, p) in pairs.by_position(order).iter().enumerate() {
        let weight = 1.0 / ((i + 2) as f64).log(log_base);
        dcg += weight * p.relevance();
        ideal += weight;
    }
    dcg / ideal
}

pub fn evaluate(pairs: &RankPairs, options: &MetricOptions) -> MetricReport {
    MetricReport {
        accuracy: accuracy(pairs),
        mae: mae(pairs),
        kendall_tau: kendall_tau(pairs),
        mrr: mrr(pairs),
        ap: average_precision(pairs, options.positions),
        ndcg: ndcg(pairs, options.ndcg_log_base, options.positions),
        team_count: pairs.len(),
    }
}

/// Kendall's tau-b between two real-valued score vectors, quadratic in the
/// length. Used to compare learned ratings with ground-truth skills.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Domain(format!(
            "tau-b needs two equal-length vectors of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = (a[i] - a[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let db = (b[i] - b[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            match (da, db) {
                (0, 0) => {}
                (0, _) => ties_a += 1,
                (_, 0) => ties_b += 1,
                _ if da == db => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let left = (concordant + discordant + ties_a) as f64;
    let right = (concordant + discordant + ties_b) as f64;
    if left == 0.0 || right == 0.0 {
        return Ok(0.0);
    }
    Ok((concordant - discordant) as f64 / (left * right).sqrt())
}
