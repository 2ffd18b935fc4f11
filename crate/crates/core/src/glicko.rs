//! Team Glicko for N-team matches.
//!
//! Team mean and deviation are member sums. Win probability pools the
//! g-weighted pairwise kernel over every opponent and divides by C(N, 2).
//! The residual against the normalized result drives the mean; the deviation
//! shrinks through the usual `1/sigma^2 + 1/d^2` precision gain. Members take
//! mean changes in proportion to `mu_j / mu_team` and deviation changes in
//! proportion to `sigma_j / sigma_team`.
//!
//! For the opponent deviation entering `g` and `d^2`, the field is pooled as
//! the root-mean-square of the other teams' deviations, which is exactly the
//! single opponent's deviation when N = 2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elo::distribution_weights;
use crate::error::{Error, Result};
use crate::model::{normalized_result, pair_count, MatchRecord, PlayerRating, PredictedRanking};
use crate::system::{self, RatingMap};

/// `ln(10) / 400`, as printed to seven significant digits in the team update.
pub const GLICKO_Q: f64 = 0.0057565;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlickoParams {
    pub default_mu: f64,
    pub default_sigma: f64,
    pub q_constant: f64,
}

impl Default for GlickoParams {
    fn default() -> Self {
        GlickoParams {
            default_mu: 1500.0,
            default_sigma: 350.0,
            q_constant: GLICKO_Q,
        }
    }
}

impl GlickoParams {
    pub fn validate(&self) -> Result<()> {
        if !self.default_mu.is_finite() {
            return Err(Error::Domain("default_mu must be finite".into()));
        }
        if !(self.default_sigma > 0.0 && self.default_sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "default_sigma must be > 0, got {}",
                self.default_sigma
            )));
        }
        if !(self.q_constant > 0.0 && self.q_constant.is_finite()) {
            return Err(Error::Domain(format!(
                "q_constant must be > 0, got {}",
                self.q_constant
            )));
        }
        Ok(())
    }

    pub fn new_player(&self) -> PlayerRating {
        PlayerRating::new(self.default_mu, Some(self.default_sigma))
    }
}

/// Team `(mu, sigma)` as the component-wise member sums.
pub fn team_mu_sigma(members: &[PlayerRating]) -> Result<(f64, f64)> {
    if members.is_empty() {
        return Err(Error::Domain("team mu/sigma of an empty roster".into()));
    }
    let mut mu = 0.0;
    let mut sigma = 0.0;
    for m in members {
        match m.sigma {
            Some(s) if s > 0.0 => sigma += s,
            other => {
                return Err(Error::Domain(format!(
                    "glicko member needs a positive deviation, got {other:?}"
                )))
            }
        }
        mu += m.mu;
    }
    Ok((mu, sigma))
}

/// `1 / sqrt(1 + 3 q^2 sigma^2 / pi^2)`.
pub fn g_weight(sigma: f64, q: f64) -> Result<f64> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::Domain(format!("g weight of negative deviation {sigma}")));
    }
    Ok(1.0 / (1.0 + 3.0 * q * q * sigma * sigma / (PI * PI)).sqrt())
}

fn pairwise(mine: (f64, f64), theirs: (f64, f64), q: f64) -> f64 {
    let g = g_weight((mine.1 * mine.1 + theirs.1 * theirs.1).sqrt(), q).unwrap_or(1.0);
    1.0 / (1.0 + 10f64.powf(-g * (mine.0 - theirs.0) / 400.0))
}

/// Pooled win probability of `team_index`; `teams` holds team `(mu, sigma)`.
pub fn win_probability(team_index: usize, teams: &[(f64, f64)], params: &GlickoParams) -> Result<f64> {
    let n = teams.len();
    if n < 2 {
        return Err(Error::Domain(format!("win probability needs at least 2 teams, got {n}")));
    }
    if team_index >= n {
        return Err(Error::Domain(format!("team index {team_index} out of range for {n} teams")));
    }
    let mine = teams[team_index];
    let total: f64 = teams
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != team_index)
        .map(|(_, &theirs)| pairwise(mine, theirs, params.q_constant))
        .sum();
    Ok(total / pair_count(n))
}

pub fn win_probabilities(teams: &[(f64, f64)], params: &GlickoParams) -> Result<Vec<f64>> {
    (0..teams.len())
        .map(|i| win_probability(i, teams, params))
        .collect()
}

/// Root-mean-square deviation of every team except `team_index`.
pub fn pooled_opponent_sigma(team_index: usize, teams: &[(f64, f64)]) -> f64 {
    let n = teams.len();
    let sum_sq: f64 = teams
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != team_index)
        .map(|(_, t)| t.1 * t.1)
        .sum();
    (sum_sq / (n - 1) as f64).sqrt()
}

/// Team-level result of one match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeamUpdate {
    pub delta_mu: f64,
    pub new_sigma: f64,
    pub d_squared: f64,
}

/// Mean and deviation update for one team given its pooled probability and
/// normalized result.
pub fn team_update(
    team: (f64, f64),
    opponent_sigma: f64,
    win_prob: f64,
    result: f64,
    q: f64,
) -> Result<TeamUpdate> {
    let g_opp = g_weight(opponent_sigma, q)?;
    let info = q * q * g_opp * g_opp * win_prob * (1.0 - win_prob);
    if info.is_nan() || info <= 0.0 {
        return Err(Error::Domain(format!(
            "d^2 undefined: win probability {win_prob} leaves no information"
        )));
    }
    let d_squared = 1.0 / info;
    let precision = 1.0 / (team.1 * team.1) + 1.0 / d_squared;
    Ok(TeamUpdate {
        delta_mu: q / precision * g_opp * (result - win_prob),
        new_sigma: (1.0 / precision).sqrt(),
        d_squared,
    })
}

pub fn update_match(
    state: &mut RatingMap,
    record: &MatchRecord,
    params: &GlickoParams,
    seed: u64,
) -> Result<PredictedRanking> {
    let rosters = system::roster_ratings(state, record)?;
    let teams = rosters
        .iter()
        .map(|r| team_mu_sigma(r))
        .collect::<Result<Vec<_>>>()?;
    let team_mus: Vec<f64> = teams.iter().map(|t| t.0).collect();

    let prediction = system::predict_by_score(record, &team_mus, seed)?;
    let probs = win_probabilities(&teams, params)?;
    let n = record.team_count();

    let mut updates = Vec::with_capacity(n);
    for (t, team) in record.teams.iter().enumerate() {
        let result = normalized_result(team.observed_rank, n)?;
        let opp = pooled_opponent_sigma(t, &teams);
        let update = team_update(teams[t], opp, probs[t], result, params.q_constant)?;
        if update.new_sigma < 1.0 {
            log::warn!(
                "match {}: team {} deviation fell to {}",
                record.match_id,
                team.team_id,
                update.new_sigma
            );
        }
        updates.push(update);
    }

    for ((team, roster), (&(_, team_sigma), update)) in record
        .teams
        .iter()
        .zip(&rosters)
        .zip(teams.iter().zip(&updates))
    {
        let mus: Vec<f64> = roster.iter().map(|r| r.mu).collect();
        let mu_weights = distribution_weights(&mus, "glicko team rating");
        let delta_sigma = update.new_sigma - team_sigma;
        for ((member, prior), w_mu) in team.members.iter().zip(roster).zip(mu_weights) {
            let sigma = prior.sigma.expect("checked by team_mu_sigma");
            let w_sigma = sigma / team_sigma;
            let rating = state.get_mut(member).expect("checked by roster_ratings");
            rating.mu += w_mu * update.delta_mu;
            rating.sigma = Some(sigma + w_sigma * delta_sigma);
        }
    }
    system::record_placements(state, record);
    Ok(prediction)
}
