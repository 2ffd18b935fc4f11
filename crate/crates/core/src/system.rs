//! The common face of the four predictors and the helpers they share.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elo::{self, EloParams};
use crate::error::{Error, Result};
use crate::glicko::{self, GlickoParams};
use crate::model::{rank_teams_by_score, MatchRecord, PlayerId, PlayerRating, PredictedRanking, TeamId};
use crate::prevrank;
use crate::trueskill::{self, TrueSkillParams};

/// Player state keyed by id. Ordered so that snapshots and cohort
/// selection are deterministic.
pub type RatingMap = BTreeMap<PlayerId, PlayerRating>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Elo,
    Glicko,
    TrueSkill,
    PrevRank,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::Elo,
        SystemKind::Glicko,
        SystemKind::TrueSkill,
        SystemKind::PrevRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Elo => "elo",
            SystemKind::Glicko => "glicko",
            SystemKind::TrueSkill => "trueskill",
            SystemKind::PrevRank => "prevrank",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown rating system '{s}'")))
    }
}

/// A configured predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum RatingSystem {
    Elo(EloParams),
    Glicko(GlickoParams),
    TrueSkill(TrueSkillParams),
    PrevRank,
}

impl RatingSystem {
    pub fn with_defaults(kind: SystemKind) -> Self {
        match kind {
            SystemKind::Elo => RatingSystem::Elo(EloParams::default()),
            SystemKind::Glicko => RatingSystem::Glicko(GlickoParams::default()),
            SystemKind::TrueSkill => RatingSystem::TrueSkill(TrueSkillParams::default()),
            SystemKind::PrevRank => RatingSystem::PrevRank,
        }
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            RatingSystem::Elo(_) => SystemKind::Elo,
            RatingSystem::Glicko(_) => SystemKind::Glicko,
            RatingSystem::TrueSkill(_) => SystemKind::TrueSkill,
            RatingSystem::PrevRank => SystemKind::PrevRank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RatingSystem::Elo(p) => p.validate(),
            RatingSystem::Glicko(p) => p.validate(),
            RatingSystem::TrueSkill(p) => p.validate(),
            RatingSystem::PrevRank => Ok(()),
        }
    }

    /// State assigned to a player the first time they are seen.
    pub fn new_player(&self) -> PlayerRating {
        match self {
            RatingSystem::Elo(p) => p.new_player(),
            RatingSystem::Glicko(p) => p.new_player(),
            RatingSystem::TrueSkill(p) => p.new_player(),
            RatingSystem::PrevRank => prevrank::new_player(),
        }
    }

    /// Predicts `record` from the current state, then folds its outcome in.
    pub fn update_match(
        &self,
        state: &mut RatingMap,
        record: &MatchRecord,
        seed: u64,
    ) -> Result<PredictedRanking> {
        match self {
            RatingSystem::Elo(p) => elo::update_match(state, record, p, seed),
            RatingSystem::Glicko(p) => glicko::update_match(state, record, p, seed),
            RatingSystem::TrueSkill(p) => trueskill::update_match(state, record, p, seed),
            RatingSystem::PrevRank => prevrank::update_match(state, record, seed),
        }
    }

    /// Higher is better. For PreviousRank a lower stored placement is
    /// stronger, and players without one sort last.
    pub fn strength(&self, rating: &PlayerRating, score: CohortScore) -> f64 {
        match self {
            RatingSystem::PrevRank => rating
                .last_observed_rank
                .map_or(f64::NEG_INFINITY, |r| -f64::from(r)),
            _ => match (score, rating.sigma) {
                (CohortScore::Conservative { k }, Some(sigma)) => rating.mu - k * sigma,
                _ => rating.mu,
            },
        }
    }
}

/// How players are ordered when picking the best-players cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CohortScore {
    #[default]
    Mean,
    /// `mu - k * sigma` where a deviation exists.
    Conservative { k: f64 },
}

/// Looks up every member's state, failing if any player is missing.
pub(crate) fn roster_ratings(state: &RatingMap, record: &MatchRecord) -> Result<Vec<Vec<PlayerRating>>> {
    record
        .teams
        .iter()
        .map(|team| {
            if team.members.is_empty() {
                return Err(Error::Data(format!(
                    "match {}: team {} has no members",
                    record.match_id, team.team_id
                )));
            }
            team.members
                .iter()
                .map(|p| {
                    state.get(p).copied().ok_or_else(|| {
                        Error::Contract(format!(
                            "match {}: no rating state for player {p}",
                            record.match_id
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

pub(crate) fn predict_by_score(record: &MatchRecord, scores: &[f64], seed: u64) -> Result<PredictedRanking> {
    let scored: Vec<(TeamId, f64)> = record
        .teams
        .iter()
        .zip(scores)
        .map(|(t, &s)| (t.team_id.clone(), s))
        .collect();
    rank_teams_by_score(&scored, seed)
}

pub(crate) fn record_placements(state: &mut RatingMap, record: &MatchRecord) {
    for team in &record.teams {
        for member in &team.members {
            if let Some(r) = state.get_mut(member) {
                r.record_placement(team.observed_rank);
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::model::TeamEntry;
    use chrono::{TimeZone, Utc};

    pub fn fixture_match(rosters: &[&[&str]], ranks: &[u32]) -> MatchRecord {
        MatchRecord {
            match_id: "m".into(),
            timestamp: Utc.timestamp_opt(0, 0).unwrap(),
            teams: rosters
                .iter()
                .zip(ranks)
                .enumerate()
                .map(|(i, (members, &rank))| TeamEntry {
                    team_id: TeamId::new(format!("t{i}")),
                    members: members.iter().map(|m| PlayerId::new(*m).unwrap()).collect(),
                    observed_rank: rank,
                })
                .collect(),
        }
    }

    pub fn seeded_state(record: &MatchRecord, rating: PlayerRating) -> RatingMap {
        record.players().map(|p| (p.clone(), rating)).collect()
    }

    pub fn team_sums(state: &RatingMap, record: &MatchRecord) -> Vec<f64> {
        record
            .teams
            .iter()
            .map(|t| t.members.iter().map(|m| state[m].mu).sum())
            .collect()
    }

    pub fn pid(s: &str) -> PlayerId {
        PlayerId::new(s).unwrap()
    }
}
