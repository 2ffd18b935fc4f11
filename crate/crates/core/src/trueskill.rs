//! TrueSkill without draws, extended to N teams by chaining head-to-head
//! updates down the observed standings.
//!
//! Each player carries a Gaussian belief `(mu, sigma)`. Before a match the
//! dynamics variance `tau^2` is added to every participant. Teams are then
//! walked from the winner down; each adjacent pair `(k, k + 1)` is treated as
//! a win of team `k` over team `k + 1`, with team performance the sum of its
//! members' performances, and both teams' beliefs are updated before moving
//! to the next pair. For two singleton teams this is exactly the classic
//! two-player update.
//!
//! This is an approximation: one forward sweep, no message passing back up
//! the chain.

use serde::{Deserialize, Serialize};

use crate::elo::distribution_weights;
use crate::error::{Error, Result};
use crate::model::{MatchRecord, PlayerRating, PredictedRanking};
use crate::system::{self, RatingMap};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// How a team's mean change is split across its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MemberShare {
    /// Proportional to each member's variance (the Gaussian message share).
    #[default]
    Variance,
    /// Proportional to `mu_j / mu_team`, like the Elo and Glicko teams.
    Rating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillParams {
    pub default_mu: f64,
    pub default_sigma: f64,
    pub beta: f64,
    /// Standard deviation of the per-match skill drift. Note the default of
    /// 0.833 is ten times the usual `25 / 300`.
    pub tau: f64,
    pub member_share: MemberShare,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        TrueSkillParams {
            default_mu: 25.0,
            default_sigma: 25.0 / 3.0,
            beta: 4.16,
            tau: 0.833,
            member_share: MemberShare::Variance,
        }
    }
}

impl TrueSkillParams {
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
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn new_player(&self) -> PlayerRating {
        PlayerRating::new(self.default_mu, Some(self.default_sigma))
    }
}

/// A Gaussian skill belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub mu: f64,
    pub sigma: f64,
}

impl Belief {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Belief { mu, sigma }
    }
}

fn std_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn std_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Mills ratio `(1 - Phi(z)) / phi(z)` for large positive `z`, by the
/// continued fraction `1 / (z + 1 / (z + 2 / (z + 3 / ...)))`.
fn mills_ratio(z: f64) -> f64 {
    let mut tail = z;
    for k in (1..=200).rev() {
        tail = z + k as f64 / tail;
    }
    1.0 / tail
}

/// `pdf(x) / cdf(x)` of the standard normal: the mean correction for a win
/// with normalized margin `x`.
pub fn v_exceeds(x: f64) -> f64 {
    if x < -5.0 {
        1.0 / mills_ratio(-x)
    } else {
        std_pdf(x) / std_cdf(x)
    }
}

/// `v(x) * (v(x) + x)`: the variance correction for a win, in (0, 1).
pub fn w_exceeds(x: f64) -> f64 {
    let v = v_exceeds(x);
    v * (v + x)
}

/// Classic two-player non-draw update where `winner` beat `loser`.
pub fn update_pair(winner: Belief, loser: Belief, beta: f64) -> (Belief, Belief) {
    let c = (2.0 * beta * beta + winner.sigma * winner.sigma + loser.sigma * loser.sigma).sqrt();
    let x = (winner.mu - loser.mu) / c;
    let v = v_exceeds(x);
    let w = w_exceeds(x);
    let shift = |b: Belief, sign: f64| {
        let var = b.sigma * b.sigma;
        Belief {
            mu: b.mu + sign * var / c * v,
            sigma: b.sigma - b.sigma * (var / (c * c) * w),
        }
    };
    (shift(winner, 1.0), shift(loser, -1.0))
}

/// Team-vs-team step: mutates both rosters in place.
fn update_team_pair(winner: &mut [Belief], loser: &mut [Belief], beta: f64, share: MemberShare) {
    let players = (winner.len() + loser.len()) as f64;
    let var = |t: &[Belief]| t.iter().map(|b| b.sigma * b.sigma).sum::<f64>();
    let mean = |t: &[Belief]| t.iter().map(|b| b.mu).sum::<f64>();
    let c = (players * beta * beta + var(winner) + var(loser)).sqrt();
    let x = (mean(winner) - mean(loser)) / c;
    let v = v_exceeds(x);
    let w = w_exceeds(x);

    for (team, sign) in [(winner, 1.0), (loser, -1.0)] {
        let team_var = var(team);
        let mean_weights = match share {
            MemberShare::Variance => team.iter().map(|b| b.sigma * b.sigma / team_var).collect(),
            MemberShare::Rating => {
                let mus: Vec<f64> = team.iter().map(|b| b.mu).collect();
                distribution_weights(&mus, "trueskill team rating")
            }
        };
        let team_shift = sign * team_var / c * v;
        for (b, weight) in team.iter_mut().zip(mean_weights) {
            let member_var = b.sigma * b.sigma;
            b.mu += weight * team_shift;
            b.sigma -= b.sigma * (member_var / (c * c) * w);
        }
    }
}

pub fn update_match(
    state: &mut RatingMap,
    record: &MatchRecord,
    params: &TrueSkillParams,
    seed: u64,
) -> Result<PredictedRanking> {
    let rosters = system::roster_ratings(state, record)?;
    let mut beliefs = rosters
        .iter()
        .map(|roster| {
            roster
                .iter()
                .map(|r| match r.sigma {
                    Some(s) if s > 0.0 => Ok(Belief::new(
                        r.mu,
                        (s * s + params.tau * params.tau).sqrt(),
                    )),
                    other => Err(Error::Domain(format!(
                        "trueskill member needs a positive deviation, got {other:?}"
                    ))),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let team_mus: Vec<f64> = rosters.iter().map(|r| r.iter().map(|p| p.mu).sum()).collect();
    let prediction = system::predict_by_score(record, &team_mus, seed)?;

    let mut standing: Vec<usize> = (0..record.team_count()).collect();
    standing.sort_by_key(|&i| record.teams[i].observed_rank);
    for pair in standing.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let (winner, loser) = if hi < lo {
            let (a, b) = beliefs.split_at_mut(lo);
            (&mut a[hi], &mut b[0])
        } else {
            let (a, b) = beliefs.split_at_mut(hi);
            (&mut b[0], &mut a[lo])
        };
        update_team_pair(winner, loser, params.beta, params.member_share);
    }

    for (team, roster) in record.teams.iter().zip(&beliefs) {
        for (member, b) in team.members.iter().zip(roster) {
            let rating = state.get_mut(member).expect("checked by roster_ratings");
            rating.mu = b.mu;
            rating.sigma = Some(b.sigma);
        }
    }
    system::record_placements(state, record);
    Ok(prediction)
}
