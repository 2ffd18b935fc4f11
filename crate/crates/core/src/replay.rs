//! Chronological replay and the three evaluation set-ups.
//!
//! A replay walks matches in order, gives unseen players the system's
//! default state, predicts each match from pre-match state, scores the
//! prediction and then applies the update. The set-ups aggregate the
//! per-match reports either by match sequence (all players, moving average)
//! or by a cohort player's game index (best and frequent players).

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{self, MetricOptions, MetricReport, PositionOrder, RankPairs};
use crate::model::{MatchRecord, PlayerId};
use crate::store::RatingStore;
use crate::system::{CohortScore, RatingSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub system: RatingSystem,
    pub seed: u64,
    pub metrics: MetricOptions,
    /// Also score AP and NDCG under the other position convention.
    pub report_both_positions: bool,
}

impl ReplayConfig {
    pub fn new(system: RatingSystem, seed: u64) -> Self {
        ReplayConfig {
            system,
            seed,
            metrics: MetricOptions::default(),
            report_both_positions: false,
        }
    }
}

/// AP and NDCG computed with the position convention not selected in
/// [`MetricOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternatePositions {
    pub positions: PositionOrder,
    pub ap: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub match_id: String,
    pub timestamp: DateTime<Utc>,
    pub team_count: usize,
    pub new_player_fraction: f64,
    pub metrics: MetricReport,
    /// Teams that were part of a random tie-break.
    pub tied_teams: usize,
    /// `|predicted - observed|` per team, in the match's team order.
    pub team_errors: Vec<u32>,
    pub alternate: Option<AlternatePositions>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub store: RatingStore,
    pub reports: Vec<MatchReport>,
    /// For each player, `(match index, team index)` of every match played, in
    /// replay order.
    pub appearances: BTreeMap<PlayerId, Vec<(usize, usize)>>,
}

impl ReplayOutcome {
    pub fn new_player_fractions(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.new_player_fraction).collect()
    }
}

pub fn replay(matches: &[MatchRecord], config: &ReplayConfig) -> Result<ReplayOutcome> {
    config.system.validate()?;
    config.metrics.validate()?;
    let mut store = RatingStore::new(config.system.clone(), config.seed);
    let mut reports = Vec::with_capacity(matches.len());
    let mut appearances: BTreeMap<PlayerId, Vec<(usize, usize)>> = BTreeMap::new();
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let alternate_order = match config.metrics.positions {
        PositionOrder::Observed => PositionOrder::Predicted,
        PositionOrder::Predicted => PositionOrder::Observed,
    };

    for (index, record) in matches.iter().enumerate() {
        record.validate()?;
        let mut unseen = 0usize;
        let mut total = 0usize;
        for (team_idx, team) in record.teams.iter().enumerate() {
            for player in &team.members {
                total += 1;
                if !store.players.contains_key(player) {
                    unseen += 1;
                    store.players.insert(player.clone(), config.system.new_player());
                }
                appearances
                    .entry(player.clone())
                    .or_default()
                    .push((index, team_idx));
            }
        }

        let match_seed = seeds.next_u64();
        let prediction = config
            .system
            .update_match(&mut store.players, record, match_seed)?;
        let pairs = RankPairs::new(&prediction.ranks(), &record.observed_ranks())?;
        let alternate = config.report_both_positions.then(|| AlternatePositions {
            positions: alternate_order,
            ap: metrics::average_precision(&pairs, alternate_order),
            ndcg: metrics::ndcg(&pairs, config.metrics.ndcg_log_base, alternate_order),
        });
        reports.push(MatchReport {
            match_id: record.match_id.clone(),
            timestamp: record.timestamp,
            team_count: record.team_count(),
            new_player_fraction: unseen as f64 / total as f64,
            metrics: metrics::evaluate(&pairs, &config.metrics),
            tied_teams: prediction.tied_team_count(),
            team_errors: pairs.errors(),
            alternate,
        });
        store.matches_processed += 1;
    }
    Ok(ReplayOutcome {
        store,
        reports,
        appearances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    All,
    Best,
    Frequent,
}

impl Setup {
    pub fn name(self) -> &'static str {
        match self {
            Setup::All => "all",
            Setup::Best => "best",
            Setup::Frequent => "frequent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    /// Match sequence number (all players) or game index (cohorts), from 1.
    pub position: usize,
    /// Mean of each metric in [`MetricReport::NAMES`] order.
    pub means: [f64; 6],
    pub new_player_fraction: f64,
    /// Reports averaged into this point.
    pub match_count: usize,
    /// Mean error of the focal player's own team (cohort set-ups only).
    pub focal_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrend {
    pub setup: Setup,
    pub window: usize,
    pub cohort_size: usize,
    pub points: Vec<TrendPoint>,
    pub diagnostics: Vec<String>,
}

/// Trailing moving average over `window` matches; the first points average
/// whatever history exists.
pub fn moving_average_trend(reports: &[MatchReport], window: usize) -> ExperimentTrend {
    let window = window.max(1);
    let points = (0..reports.len())
        .map(|i| {
            let slice = &reports[(i + 1).saturating_sub(window)..=i];
            let k = slice.len() as f64;
            let mut means = [0.0; 6];
            let mut npf = 0.0;
            for r in slice {
                for (m, v) in means.iter_mut().zip(r.metrics.values()) {
                    *m += v;
                }
                npf += r.new_player_fraction;
            }
            means.iter_mut().for_each(|m| *m /= k);
            TrendPoint {
                position: i + 1,
                means,
                new_player_fraction: npf / k,
                match_count: slice.len(),
                focal_error: None,
            }
        })
        .collect();
    ExperimentTrend {
        setup: Setup::All,
        window,
        cohort_size: 0,
        points,
        diagnostics: Vec::new(),
    }
}

pub fn setup_all_players(
    matches: &[MatchRecord],
    config: &ReplayConfig,
    window: usize,
) -> Result<(ReplayOutcome, ExperimentTrend)> {
    let outcome = replay(matches, config)?;
    let trend = moving_average_trend(&outcome.reports, window);
    Ok((outcome, trend))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortRule {
    /// Cap on cohort size; `None` keeps every qualifier.
    pub top_k: Option<usize>,
    /// Players need strictly more games than this.
    pub min_games: u32,
    pub horizon: usize,
    pub score: CohortScore,
}

impl CohortRule {
    pub fn best_players() -> Self {
        CohortRule {
            top_k: Some(1000),
            min_games: 10,
            horizon: 10,
            score: CohortScore::Mean,
        }
    }

    pub fn frequent_players() -> Self {
        CohortRule {
            top_k: None,
            min_games: 100,
            horizon: 100,
            score: CohortScore::Mean,
        }
    }
}

/// Players with more than `min_games` games, strongest first (ties by id),
/// truncated to `top_k`.
pub fn select_cohort(outcome: &ReplayOutcome, rule: &CohortRule) -> Vec<PlayerId> {
    let system = &outcome.store.system;
    let mut qualifiers: Vec<(&PlayerId, f64)> = outcome
        .store
        .players
        .iter()
        .filter(|(_, r)| r.games_played > rule.min_games)
        .map(|(id, r)| (id, system.strength(r, rule.score)))
        .collect();
    qualifiers.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if let Some(k) = rule.top_k {
        qualifiers.truncate(k);
    }
    qualifiers.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Mean full-match metrics by the cohort players' game index `1..=horizon`.
pub fn cohort_trend(outcome: &ReplayOutcome, setup: Setup, rule: &CohortRule) -> ExperimentTrend {
    let cohort = select_cohort(outcome, rule);
    let mut diagnostics = Vec::new();
    if cohort.is_empty() {
        diagnostics.push(format!(
            "no player has more than {} games; {} trend is empty",
            rule.min_games,
            setup.name()
        ));
    } else if let Some(k) = rule.top_k.filter(|&k| cohort.len() < k) {
        diagnostics.push(format!(
            "only {} players have more than {} games (wanted {k})",
            cohort.len(),
            rule.min_games
        ));
    }
    for d in &diagnostics {
        log::warn!("{d}");
    }

    let mut sums = vec![([0.0f64; 6], 0.0f64, 0.0f64, 0usize); rule.horizon];
    for player in &cohort {
        let games = &outcome.appearances[player];
        for (g, &(match_idx, team_idx)) in games.iter().take(rule.horizon).enumerate() {
            let report = &outcome.reports[match_idx];
            let slot = &mut sums[g];
            for (m, v) in slot.0.iter_mut().zip(report.metrics.values()) {
                *m += v;
            }
            slot.1 += report.new_player_fraction;
            slot.2 += f64::from(report.team_errors[team_idx]);
            slot.3 += 1;
        }
    }
    let points = sums
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.3 > 0)
        .map(|(g, (mut means, npf, err, count))| {
            let k = count as f64;
            means.iter_mut().for_each(|m| *m /= k);
            TrendPoint {
                position: g + 1,
                means,
                new_player_fraction: npf / k,
                match_count: count,
                focal_error: Some(err / k),
            }
        })
        .collect();
    ExperimentTrend {
        setup,
        window: 1,
        cohort_size: cohort.len(),
        points,
        diagnostics,
    }
}

pub fn setup_best_players(
    matches: &[MatchRecord],
    config: &ReplayConfig,
    rule: &CohortRule,
) -> Result<(ReplayOutcome, ExperimentTrend)> {
    let outcome = replay(matches, config)?;
    let trend = cohort_trend(&outcome, Setup::Best, rule);
    Ok((outcome, trend))
}

pub fn setup_frequent_players(
    matches: &[MatchRecord],
    config: &ReplayConfig,
    rule: &CohortRule,
) -> Result<(ReplayOutcome, ExperimentTrend)> {
    let outcome = replay(matches, config)?;
    let trend = cohort_trend(&outcome, Setup::Frequent, rule);
    Ok((outcome, trend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TeamEntry, TeamId};
    use crate::system::SystemKind;
    use chrono::TimeZone;

    fn record(id: usize, rosters: &[&[&str]], ranks: &[u32]) -> MatchRecord {
        MatchRecord {
            match_id: format!("m{id}"),
            timestamp: Utc.timestamp_opt(id as i64 * 60, 0).unwrap(),
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

    fn stream() -> Vec<MatchRecord> {
        (0..12)
            .map(|i| {
                let ranks: &[u32] = if i % 3 == 0 { &[1, 2, 3] } else { &[2, 3, 1] };
                record(i, &[&["a", "b"], &["c", "d"], &["e", &*format!("x{}", i % 4)]], ranks)
            })
            .collect()
    }

    fn config(kind: SystemKind) -> ReplayConfig {
        ReplayConfig::new(RatingSystem::with_defaults(kind), 5)
    }

    #[test]
    fn first_match_is_all_new_players() {
        let out = replay(&stream(), &config(SystemKind::Elo)).unwrap();
        assert_eq!(out.reports.len(), 12);
        assert_eq!(out.reports[0].new_player_fraction, 1.0);
        assert_eq!(out.reports[1].new_player_fraction, 1.0 / 6.0);
        assert_eq!(out.reports[5].new_player_fraction, 0.0);
        assert_eq!(out.store.matches_processed, 12);
    }

    #[test]
    fn games_played_tracks_appearances() {
        for kind in SystemKind::ALL {
            let out = replay(&stream(), &config(kind)).unwrap();
            for (id, games) in &out.appearances {
                assert_eq!(out.store.players[id].games_played as usize, games.len());
            }
            assert_eq!(out.store.players[&PlayerId::new("a").unwrap()].games_played, 12);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        for kind in SystemKind::ALL {
            let a = replay(&stream(), &config(kind)).unwrap();
            let b = replay(&stream(), &config(kind)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_match_stops_the_replay() {
        let mut matches = stream();
        matches[3].teams[0].observed_rank = 2;
        assert!(replay(&matches, &config(SystemKind::Elo)).is_err());
    }

    #[test]
    fn window_of_one_is_the_raw_series() {
        let out = replay(&stream(), &config(SystemKind::Glicko)).unwrap();
        let trend = moving_average_trend(&out.reports, 1);
        for (p, r) in trend.points.iter().zip(&out.reports) {
            assert_eq!(p.means, r.metrics.values());
            assert_eq!(p.new_player_fraction, r.new_player_fraction);
        }
    }

    #[test]
    fn constant_stream_gives_constant_trend() {
        let out = replay(&stream(), &config(SystemKind::Elo)).unwrap();
        let mut reports = out.reports.clone();
        for r in &mut reports {
            r.metrics = out.reports[0].metrics;
            r.new_player_fraction = 0.25;
        }
        for window in [1, 3, 7, 100] {
            let trend = moving_average_trend(&reports, window);
            assert_eq!(trend.points.len(), reports.len());
            for p in &trend.points {
                for (a, b) in p.means.iter().zip(out.reports[0].metrics.values()) {
                    assert!((a - b).abs() < 1e-12);
                }
                assert!((p.new_player_fraction - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_new_players_every_match() {
        let matches: Vec<_> = (0..5)
            .map(|i| {
                let ids: Vec<String> = (0..4).map(|k| format!("p{i}_{k}")).collect();
                record(i, &[&[&ids[0], &ids[1]], &[&ids[2], &ids[3]]], &[1, 2])
            })
            .collect();
        let (_, trend) = setup_all_players(&matches, &config(SystemKind::TrueSkill), 3).unwrap();
        assert!(trend.points.iter().all(|p| p.new_player_fraction == 1.0));
    }

    #[test]
    fn cohort_requires_more_than_min_games() {
        let out = replay(&stream(), &config(SystemKind::Elo)).unwrap();
        // x0..x3 play 3 games each, everyone else 12.
        let rule = CohortRule {
            top_k: Some(100),
            min_games: 3,
            horizon: 3,
            score: CohortScore::Mean,
        };
        let cohort = select_cohort(&out, &rule);
        assert_eq!(cohort.len(), 5);
        assert!(cohort.iter().all(|p| !p.as_str().starts_with('x')));
        let rule = CohortRule { min_games: 2, ..rule };
        assert_eq!(select_cohort(&out, &rule).len(), 9);
    }

    #[test]
    fn cohort_is_top_k_by_rating_with_id_ties() {
        let out = replay(&stream(), &config(SystemKind::Elo)).unwrap();
        let rule = CohortRule {
            top_k: Some(2),
            min_games: 0,
            horizon: 3,
            score: CohortScore::Mean,
        };
        let cohort = select_cohort(&out, &rule);
        let mut all: Vec<_> = out.store.players.iter().collect();
        all.sort_by(|a, b| b.1.mu.total_cmp(&a.1.mu).then_with(|| a.0.cmp(b.0)));
        assert_eq!(cohort, vec![all[0].0.clone(), all[1].0.clone()]);
    }

    #[test]
    fn cohort_trend_indexes_by_game() {
        let out = replay(&stream(), &config(SystemKind::Elo)).unwrap();
        let rule = CohortRule {
            top_k: Some(1000),
            min_games: 10,
            horizon: 10,
            score: CohortScore::Mean,
        };
        let trend = cohort_trend(&out, Setup::Best, &rule);
        assert_eq!(trend.points.len(), 10);
        assert_eq!(trend.cohort_size, 5);
        // Every cohort player is in match g - 1 at game index g.
        for (g, p) in trend.points.iter().enumerate() {
            assert_eq!(p.match_count, 5);
            for (a, b) in p.means.iter().zip(out.reports[g].metrics.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(trend.diagnostics.len(), 1);
    }

    #[test]
    fn shared_match_counts_once_per_player() {
        let matches = vec![
            record(0, &[&["a"], &["z"]], &[1, 2]),
            record(1, &[&["b"], &["z"]], &[2, 1]),
            record(2, &[&["a"], &["b"]], &[1, 2]),
            record(3, &[&["b"], &["a"]], &[1, 2]),
        ];
        let out = replay(&matches, &config(SystemKind::Elo)).unwrap();
        let rule = CohortRule {
            top_k: None,
            min_games: 2,
            horizon: 3,
            score: CohortScore::Mean,
        };
        let trend = cohort_trend(&out, Setup::Frequent, &rule);
        assert_eq!(trend.cohort_size, 2);
        // Match 2 is a's second game and b's second game; match 3 is both
        // players' third.
        let expect = |idx: &[usize]| {
            idx.iter().map(|&i| out.reports[i].metrics.mae).sum::<f64>() / idx.len() as f64
        };
        assert_eq!(trend.points[0].match_count, 2);
        assert!((trend.points[0].means[1] - expect(&[0, 1])).abs() < 1e-12);
        assert!((trend.points[1].means[1] - expect(&[2, 2])).abs() < 1e-12);
        assert!((trend.points[2].means[1] - expect(&[3, 3])).abs() < 1e-12);
    }

    #[test]
    fn empty_cohort_is_not_an_error() {
        let out = replay(&stream(), &config(SystemKind::Glicko)).unwrap();
        let trend = cohort_trend(&out, Setup::Frequent, &CohortRule::frequent_players());
        assert!(trend.points.is_empty());
        assert_eq!(trend.cohort_size, 0);
        assert_eq!(trend.diagnostics.len(), 1);
    }

    #[test]
    fn both_position_conventions_on_request() {
        let mut cfg = config(SystemKind::Elo);
        cfg.report_both_positions = true;
        let out = replay(&stream(), &cfg).unwrap();
        let alt = out.reports[4].alternate.unwrap();
        assert_eq!(alt.positions, PositionOrder::Predicted);
        assert!((0.0..=1.0).contains(&alt.ap));
    }
}
