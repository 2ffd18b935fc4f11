//! Domain types shared by every rating system, the metrics and the harness.
//!
//! Ranks are 1-based and rank 1 is the winner, both for observed placements
//! and for predictions.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable, opaque player identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Data("empty player id".into()));
        }
        Ok(PlayerId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Team identifier, unique within one match.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamId(String);

impl TeamId {
    pub fn new(id: impl Into<String>) -> Self {
        TeamId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Per-player skill state.
///
/// `sigma` is `None` for systems without a deviation (Elo, PreviousRank).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerRating {
    pub mu: f64,
    pub sigma: Option<f64>,
    pub games_played: u32,
    pub last_observed_rank: Option<u32>,
}

impl PlayerRating {
    pub fn new(mu: f64, sigma: Option<f64>) -> Self {
        PlayerRating {
            mu,
            sigma,
            games_played: 0,
            last_observed_rank: None,
        }
    }

    pub(crate) fn record_placement(&mut self, rank: u32) {
        self.games_played += 1;
        self.last_observed_rank = Some(rank);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamEntry {
    pub team_id: TeamId,
    pub members: Vec<PlayerId>,
    pub observed_rank: u32,
}

/// One battle-royale match: every competing team with its final placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub timestamp: DateTime<Utc>,
    pub teams: Vec<TeamEntry>,
}

impl MatchRecord {
    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn players(&self) -> impl Iterator<Item = &PlayerId> {
        self.teams.iter().flat_map(|t| t.members.iter())
    }

    pub fn observed_ranks(&self) -> Vec<u32> {
        self.teams.iter().map(|t| t.observed_rank).collect()
    }

    /// Checks the structural invariants: at least two teams, non-empty
    /// rosters, no player listed twice, placements a permutation of 1..N.
    pub fn validate(&self) -> Result<()> {
        let n = self.teams.len();
        if n < 2 {
            return Err(Error::Data(format!(
                "match {}: needs at least 2 teams, found {n}",
                self.match_id
            )));
        }
        let mut seen_rank = vec![false; n];
        for team in &self.teams {
            if team.members.is_empty() {
                return Err(Error::Data(format!(
                    "match {}: team {} has no members",
                    self.match_id, team.team_id
                )));
            }
            let r = team.observed_rank as usize;
            if r == 0 || r > n || seen_rank[r - 1] {
                return Err(Error::Data(format!(
                    "match {}: placements are not a permutation of 1..{n} (team {} has {})",
                    self.match_id, team.team_id, team.observed_rank
                )));
            }
            seen_rank[r - 1] = true;
        }
        let mut players: Vec<&PlayerId> = self.players().collect();
        players.sort();
        if let Some(w) = players.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Data(format!(
                "match {}: player {} appears more than once",
                self.match_id, w[0]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEntry {
    pub team_id: TeamId,
    pub rank: u32,
}

/// Predicted placements for one match, listed in the same order as the
/// scores they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedRanking {
    pub entries: Vec<PredictedEntry>,
    /// Teams whose scores were exactly equal before the random tie-break.
    pub tie_groups: Vec<Vec<TeamId>>,
    pub seed_used: u64,
}

impl PredictedRanking {
    pub fn ranks(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.rank).collect()
    }

    /// Number of teams that took part in some tie group.
    pub fn tied_team_count(&self) -> usize {
        self.tie_groups.iter().map(Vec::len).sum()
    }
}

/// Number of unordered team pairs, C(n, 2).
pub fn pair_count(n: usize) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Maps an observed placement to its share of the unit outcome mass:
/// `(N - rank) / C(N, 2)`. Summed over a full match this is exactly 1.
pub fn normalized_result(observed_rank: u32, team_count: usize) -> Result<f64> {
    if team_count < 2 {
        return Err(Error::Domain(format!(
            "normalized result needs at least 2 teams, got {team_count}"
        )));
    }
    if observed_rank == 0 || observed_rank as usize > team_count {
        return Err(Error::Domain(format!(
            "observed rank {observed_rank} outside 1..={team_count}"
        )));
    }
    Ok((team_count - observed_rank as usize) as f64 / pair_count(team_count))
}

/// Orders teams by descending score. Exactly equal scores form a tie group
/// whose internal order is a uniform shuffle drawn from `rng_seed`.
pub fn rank_teams_by_score(scores: &[(TeamId, f64)], rng_seed: u64) -> Result<PredictedRanking> {
    if scores.len() < 2 {
        return Err(Error::Domain(format!(
            "ranking needs at least 2 teams, got {}",
            scores.len()
        )));
    }
    if let Some((team, s)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::Data(format!("team {team} has non-finite score {s}")));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .1
            .partial_cmp(&scores[a].1)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut tie_groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]].1 == scores[order[start]].1 {
            end += 1;
        }
        if end - start > 1 {
            let group = &mut order[start..end];
            tie_groups.push(group.iter().map(|&i| scores[i].0.clone()).collect());
            group.shuffle(&mut rng);
        }
        start = end;
    }

    let mut ranks = vec![0u32; scores.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos as u32 + 1;
    }
    Ok(PredictedRanking {
        entries: scores
            .iter()
            .zip(ranks)
            .map(|((team_id, _), rank)| PredictedEntry {
                team_id: team_id.clone(),
                rank,
            })
            .collect(),
        tie_groups,
        seed_used: rng_seed,
    })
}
