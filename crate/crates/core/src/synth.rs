//! Synthetic matches with known latent skills.
//!
//! Each player gets a latent skill drawn once from a Gaussian. Every match
//! samples `team_size * teams_per_match` distinct players, splits them into
//! teams, and places teams by descending total performance, where a member's
//! performance is their latent skill plus independent Gaussian noise.

use std::io::Write;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MatchRecord, PlayerId, TeamEntry, TeamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub player_count: usize,
    pub team_size: usize,
    pub teams_per_match: usize,
    pub match_count: usize,
    pub skill_mean: f64,
    pub skill_spread: f64,
    /// Standard deviation of per-match performance noise; 0 makes every
    /// placement follow the latent team sums exactly.
    pub noise_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            player_count: 200,
            team_size: 2,
            teams_per_match: 10,
            match_count: 1000,
            skill_mean: 0.0,
            skill_spread: 1.0,
            noise_spread: 0.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.team_size == 0 {
            return Err(Error::Domain("team size must be at least 1".into()));
        }
        if self.teams_per_match < 2 {
            return Err(Error::Domain("a match needs at least 2 teams".into()));
        }
        let seats = self.team_size * self.teams_per_match;
        if self.player_count < seats {
            return Err(Error::Domain(format!(
                "{} players cannot fill {seats} seats per match",
                self.player_count
            )));
        }
        if !(self.skill_spread > 0.0 && self.skill_spread.is_finite()) || !self.skill_mean.is_finite() {
            return Err(Error::Domain("skill distribution must be finite with spread > 0".into()));
        }
        if !(self.noise_spread >= 0.0 && self.noise_spread.is_finite()) {
            return Err(Error::Domain("noise spread must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub matches: Vec<MatchRecord>,
    /// Ground-truth skill per player, in id order.
    pub latent: Vec<(PlayerId, f64)>,
}

fn start_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap()
}

pub fn player_id(index: usize) -> PlayerId {
    PlayerId::new(format!("p{index:05}")).expect("non-empty")
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let skill = Normal::new(config.skill_mean, config.skill_spread)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let latent: Vec<f64> = (0..config.player_count).map(|_| skill.sample(&mut rng)).collect();
    let seats = config.team_size * config.teams_per_match;
    let mut matches = Vec::with_capacity(config.match_count);
    for m in 0..config.match_count {
        let chosen = sample(&mut rng, config.player_count, seats).into_vec();
        let rosters: Vec<&[usize]> = chosen.chunks(config.team_size).collect();
        let performance: Vec<f64> = rosters
            .iter()
            .map(|team| {
                team.iter()
                    .map(|&p| latent[p] + config.noise_spread * unit.sample(&mut rng))
                    .sum()
            })
            .collect();

        let mut order: Vec<usize> = (0..rosters.len()).collect();
        order.sort_by(|&a, &b| performance[b].total_cmp(&performance[a]).then(a.cmp(&b)));
        let mut placement = vec![0u32; rosters.len()];
        for (pos, &team) in order.iter().enumerate() {
            placement[team] = pos as u32 + 1;
        }

        matches.push(MatchRecord {
            match_id: format!("m{m:06}"),
            timestamp: start_time() + Duration::minutes(m as i64),
            teams: rosters
                .iter()
                .zip(placement)
                .enumerate()
                .map(|(t, (members, rank))| TeamEntry {
                    team_id: TeamId::new(format!("t{t:02}")),
                    members: members.iter().map(|&p| player_id(p)).collect(),
                    observed_rank: rank,
                })
                .collect(),
        });
    }
    Ok(SynthData {
        matches,
        latent: latent
            .into_iter()
            .enumerate()
            .map(|(i, s)| (player_id(i), s))
            .collect(),
    })
}

pub fn write_latent<W: Write>(writer: W, latent: &[(PlayerId, f64)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["player_id", "latent_skill"])?;
    for (id, skill) in latent {
        csv.write_record([id.as_str(), &skill.to_string()])?;
    }
    csv.flush().map_err(|e| Error::io("<latent>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small(noise: f64) -> SynthConfig {
        SynthConfig {
            player_count: 30,
            team_size: 2,
            teams_per_match: 5,
            match_count: 50,
            noise_spread: noise,
            seed: 9,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn noiseless_placements_follow_latent_sums() {
        let data = generate(&small(0.0)).unwrap();
        let skill: HashMap<_, _> = data.latent.iter().cloned().collect();
        for m in &data.matches {
            m.validate().unwrap();
            let mut teams: Vec<(u32, f64)> = m
                .teams
                .iter()
                .map(|t| (t.observed_rank, t.members.iter().map(|p| skill[p]).sum()))
                .collect();
            teams.sort_by_key(|t| t.0);
            assert!(teams.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }

    #[test]
    fn seeded_generation_repeats() {
        assert_eq!(generate(&small(0.7)).unwrap(), generate(&small(0.7)).unwrap());
        let other = SynthConfig { seed: 10, ..small(0.7) };
        assert_ne!(generate(&small(0.7)).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn exact_fill_uses_everyone() {
        let cfg = SynthConfig {
            player_count: 10,
            ..small(0.3)
        };
        let data = generate(&cfg).unwrap();
        for m in &data.matches {
            assert_eq!(m.players().count(), 10);
        }
    }

    #[test]
    fn rejects_infeasible_configs() {
        assert!(generate(&SynthConfig { player_count: 9, ..small(0.0) }).is_err());
        assert!(generate(&SynthConfig { teams_per_match: 1, ..small(0.0) }).is_err());
        assert!(generate(&SynthConfig { skill_spread: 0.0, ..small(0.0) }).is_err());
        assert!(generate(&small(-1.0)).is_err());
    }

    #[test]
    fn noisy_matches_are_strict_permutations() {
        let data = generate(&small(2.0)).unwrap();
        for m in &data.matches {
            m.validate().unwrap();
        }
        assert_eq!(data.matches.len(), 50);
        assert!(data.matches.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
    }
}
