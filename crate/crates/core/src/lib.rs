//! Skill rating for team battle-royale matches.
//!
//! Three rating systems extended to N teams of any size ([`elo`], [`glicko`],
//! [`trueskill`]) and a naive [`prevrank`] baseline, six rank-prediction
//! [`metrics`], and a [`replay`] harness that walks a time-ordered match log
//! and aggregates the metrics under three evaluation set-ups.
//!
//! ```
//! use royale_core::{replay, synth, RatingSystem, SystemKind};
//!
//! let data = synth::generate(&synth::SynthConfig {
//!     match_count: 50,
//!     ..Default::default()
//! })
//! .unwrap();
//! let config = replay::ReplayConfig::new(RatingSystem::with_defaults(SystemKind::Elo), 7);
//! let outcome = replay::replay(&data.matches, &config).unwrap();
//! assert_eq!(outcome.reports.len(), 50);
//! ```

pub mod elo;
pub mod error;
pub mod glicko;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod prevrank;
pub mod replay;
pub mod report;
pub mod store;
pub mod synth;
pub mod system;
pub mod trueskill;

pub use error::{Error, Result};
pub use metrics::{MetricOptions, MetricReport, PositionOrder, RankPairs};
pub use model::{
    normalized_result, rank_teams_by_score, MatchRecord, PlayerId, PlayerRating, PredictedRanking,
    TeamEntry, TeamId,
};
pub use replay::{CohortRule, ExperimentTrend, MatchReport, ReplayConfig, ReplayOutcome, Setup};
pub use store::RatingStore;
pub use system::{CohortScore, RatingMap, RatingSystem, SystemKind};
