//! Team Elo for N-team matches.
//!
//! A team is rated by the sum of its members. Each team's win probability is
//! its pooled pairwise logistic win chance against every other team divided by
//! C(N, 2), so probabilities over a match sum to 1. The team moves by
//! `K * (normalized result - win probability)` and members take shares of that
//! move proportional to their own rating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalized_result, pair_count, MatchRecord, PlayerRating, PredictedRanking};
use crate::system::{self, RatingMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloParams {
    pub k_factor: f64,
    pub d_scale: f64,
    pub default_rating: f64,
}

impl Default for EloParams {
    fn default() -> Self {
        EloParams {
            k_factor: 10.0,
            d_scale: 400.0,
            default_rating: 1500.0,
        }
    }
}

impl EloParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_factor > 0.0 && self.k_factor.is_finite()) {
            return Err(Error::Domain(format!("k_factor must be > 0, got {}", self.k_factor)));
        }
        if !(self.d_scale > 0.0 && self.d_scale.is_finite()) {
            return Err(Error::Domain(format!("d_scale must be > 0, got {}", self.d_scale)));
        }
        if !self.default_rating.is_finite() {
            return Err(Error::Domain("default_rating must be finite".into()));
        }
        Ok(())
    }

    pub fn new_player(&self) -> PlayerRating {
        PlayerRating::new(self.default_rating, None)
    }
}

pub fn team_rating(member_ratings: &[f64]) -> Result<f64> {
    if member_ratings.is_empty() {
        return Err(Error::Domain("team rating of an empty roster".into()));
    }
    Ok(member_ratings.iter().sum())
}

/// Each member's share `mu_j / mu_team` of the team rating.
pub fn contribution_weights(member_ratings: &[f64]) -> Result<Vec<f64>> {
    let total = team_rating(member_ratings)?;
    if total == 0.0 {
        return Err(Error::Domain(
            "contribution weights undefined for a zero team rating".into(),
        ));
    }
    Ok(member_ratings.iter().map(|mu| mu / total).collect())
}

/// Weights used when distributing an update. Falls back to an even split when
/// the team rating is not positive, where `mu_j / mu_team` stops being a share.
pub(crate) fn distribution_weights(member_ratings: &[f64], what: &str) -> Vec<f64> {
    let total: f64 = member_ratings.iter().sum();
    if total > 0.0 {
        member_ratings.iter().map(|mu| mu / total).collect()
    } else {
        log::warn!("{what} total {total} is not positive; splitting the update evenly");
        vec![1.0 / member_ratings.len() as f64; member_ratings.len()]
    }
}

fn pairwise(mine: f64, theirs: f64, d_scale: f64) -> f64 {
    1.0 / (1.0 + ((theirs - mine) / d_scale).exp())
}

/// Pooled win probability of team `team_index` against the rest of the field.
pub fn win_probability(team_index: usize, team_ratings: &[f64], params: &EloParams) -> Result<f64> {
    let n = team_ratings.len();
    if n < 2 {
        return Err(Error::Domain(format!("win probability needs at least 2 teams, got {n}")));
    }
    if team_index >= n {
        return Err(Error::Domain(format!("team index {team_index} out of range for {n} teams")));
    }
    let mine = team_ratings[team_index];
    let total: f64 = team_ratings
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != team_index)
        .map(|(_, &theirs)| pairwise(mine, theirs, params.d_scale))
        .sum();
    Ok(total / pair_count(n))
}

pub fn win_probabilities(team_ratings: &[f64], params: &EloParams) -> Result<Vec<f64>> {
    (0..team_ratings.len())
        .map(|i| win_probability(i, team_ratings, params))
        .collect()
}

/// Predicts the match from pre-match ratings, then applies the team update.
/// Every roster member must already have an entry in `state`.
pub fn update_match(
    state: &mut RatingMap,
    record: &MatchRecord,
    params: &EloParams,
    seed: u64,
) -> Result<PredictedRanking> {
    let rosters = system::roster_ratings(state, record)?;
    let mus: Vec<Vec<f64>> = rosters
        .iter()
        .map(|r| r.iter().map(|p| p.mu).collect())
        .collect();
    let team_mus = mus
        .iter()
        .map(|m| team_rating(m))
        .collect::<Result<Vec<_>>>()?;

    let prediction = system::predict_by_score(record, &team_mus, seed)?;
    let probs = win_probabilities(&team_mus, params)?;
    let n = record.team_count();

    for (t, team) in record.teams.iter().enumerate() {
        let delta = params.k_factor * (normalized_result(team.observed_rank, n)? - probs[t]);
        let weights = distribution_weights(&mus[t], "elo team rating");
        for (member, w) in team.members.iter().zip(weights) {
            let rating = state.get_mut(member).expect("checked by roster_ratings");
            rating.mu += w * delta;
        }
    }
    system::record_placements(state, record);
    Ok(prediction)
}
