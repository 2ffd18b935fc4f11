use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use royale_core::elo::EloParams;
use royale_core::glicko::{GlickoParams, GLICKO_Q};
use royale_core::trueskill::{MemberShare, TrueSkillParams};
use royale_core::{CohortRule, CohortScore, MetricOptions, PositionOrder, RatingSystem, Setup, SystemKind};

#[derive(Debug, Parser)]
#[command(
    name = "royale",
    version,
    about = "Skill rating and rank-prediction evaluation for team battle-royale matches",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a match log and write per-match metrics and final ratings
    Replay(ReplayArgs),
    /// Replay a match log and build the trend for one evaluation set-up
    Experiment(ExperimentArgs),
    /// Generate a synthetic match log with known latent skills
    Synth(SynthArgs),
    /// Describe a match log or a ratings snapshot
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum SystemArg {
    Elo,
    Glicko,
    Trueskill,
    Prevrank,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Elo => SystemKind::Elo,
            SystemArg::Glicko => SystemKind::Glicko,
            SystemArg::Trueskill => SystemKind::TrueSkill,
            SystemArg::Prevrank => SystemKind::PrevRank,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SetupArg {
    All,
    Best,
    Frequent,
}

impl From<SetupArg> for Setup {
    fn from(s: SetupArg) -> Self {
        match s {
            SetupArg::All => Setup::All,
            SetupArg::Best => Setup::Best,
            SetupArg::Frequent => Setup::Frequent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShareArg {
    Variance,
    Rating,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PositionsArg {
    Observed,
    Predicted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScoreArg {
    Mean,
    Conservative,
}

/// Rating-system parameters. Defaults are the published configuration.
#[derive(Debug, Clone, Args)]
pub struct SystemParams {
    /// Rating system to run (repeatable); defaults to all four
    #[arg(long = "system", value_enum)]
    pub systems: Vec<SystemArg>,
    /// Elo K-factor
    #[arg(long, default_value_t = 10.0)]
    pub k: f64,
    /// Elo logistic scale D
    #[arg(long, default_value_t = 400.0)]
    pub d_scale: f64,
    /// Elo rating of a new player
    #[arg(long, default_value_t = 1500.0)]
    pub elo_rating: f64,
    /// Glicko mean of a new player
    #[arg(long, default_value_t = 1500.0)]
    pub glicko_mu: f64,
    /// Glicko deviation of a new player
    #[arg(long, default_value_t = 350.0)]
    pub glicko_sigma: f64,
    /// TrueSkill mean of a new player
    #[arg(long, default_value_t = 25.0)]
    pub ts_mu: f64,
    /// TrueSkill deviation of a new player [default: 25/3]
    #[arg(long)]
    pub ts_sigma: Option<f64>,
    /// TrueSkill performance deviation
    #[arg(long, default_value_t = 4.16)]
    pub beta: f64,
    /// TrueSkill dynamics added to each deviation before a match
    #[arg(long, default_value_t = 0.833)]
    pub tau: f64,
    /// How a TrueSkill team's mean change is split across members
    #[arg(long, value_enum, default_value_t = ShareArg::Variance)]
    pub ts_share: ShareArg,
}

impl SystemParams {
    pub fn kinds(&self) -> Vec<SystemKind> {
        if self.systems.is_empty() {
            return SystemKind::ALL.to_vec();
        }
        let mut picked = self.systems.clone();
        picked.sort();
        picked.dedup();
        picked.into_iter().map(SystemKind::from).collect()
    }

    pub fn build(&self, kind: SystemKind) -> RatingSystem {
        match kind {
            SystemKind::Elo => RatingSystem::Elo(EloParams {
                k_factor: self.k,
                d_scale: self.d_scale,
                default_rating: self.elo_rating,
            }),
            SystemKind::Glicko => RatingSystem::Glicko(GlickoParams {
                default_mu: self.glicko_mu,
                default_sigma: self.glicko_sigma,
                q_constant: GLICKO_Q,
            }),
            SystemKind::TrueSkill => RatingSystem::TrueSkill(TrueSkillParams {
                default_mu: self.ts_mu,
                default_sigma: self.ts_sigma.unwrap_or(25.0 / 3.0),
                beta: self.beta,
                tau: self.tau,
                member_share: match self.ts_share {
                    ShareArg::Variance => MemberShare::Variance,
                    ShareArg::Rating => MemberShare::Rating,
                },
            }),
            SystemKind::PrevRank => RatingSystem::PrevRank,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Match-log CSV (match_id, timestamp, team_id, player_id, team_placement)
    #[arg(long)]
    pub input: PathBuf,
    /// Keep only matches whose teams all have this many players
    #[arg(long, default_value_t = 2, conflicts_with = "any_team_size")]
    pub team_size: usize,
    /// Keep matches of every team size
    #[arg(long)]
    pub any_team_size: bool,
    /// Output directory; each system writes into its own subdirectory
    #[arg(long, default_value = "royale-out")]
    pub out: PathBuf,
    /// Seed for tie-breaking among equally rated teams
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataArgs {
    pub fn team_size_filter(&self) -> Option<usize> {
        (!self.any_team_size).then_some(self.team_size)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Logarithm base of the NDCG discount
    #[arg(long, default_value_t = 2.0)]
    pub ndcg_base: f64,
    /// Position index used by AP and NDCG
    #[arg(long, value_enum, default_value_t = PositionsArg::Observed)]
    pub positions: PositionsArg,
    /// Also report AP and NDCG under the other position convention, and log progress
    #[arg(long)]
    pub verbose: bool,
}

impl MetricArgs {
    pub fn options(&self) -> MetricOptions {
        MetricOptions {
            ndcg_log_base: self.ndcg_base,
            positions: match self.positions {
                PositionsArg::Observed => PositionOrder::Observed,
                PositionsArg::Predicted => PositionOrder::Predicted,
            },
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub system: SystemParams,
    #[command(flatten)]
    pub metrics: MetricArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExperimentArgs {
    /// Evaluation set-up
    #[arg(long, value_enum, default_value_t = SetupArg::All)]
    pub setup: SetupArg,
    /// Moving-average window for the all-players set-up
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    /// Cohort size for the best-players set-up
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// Players need strictly more games than this to join a cohort [default: 10 best, 100 frequent]
    #[arg(long)]
    pub min_games: Option<u32>,
    /// Number of game indices in a cohort trend [default: 10 best, 100 frequent]
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Player score used to rank the best-players cohort
    #[arg(long, value_enum, default_value_t = ScoreArg::Mean)]
    pub cohort_score: ScoreArg,
    /// Deviation multiplier for the conservative cohort score
    #[arg(long, default_value_t = 3.0)]
    pub conservative_k: f64,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub system: SystemParams,
    #[command(flatten)]
    pub metrics: MetricArgs,
}

impl ExperimentArgs {
    pub fn cohort_rule(&self) -> Option<CohortRule> {
        let base = match self.setup {
            SetupArg::All => return None,
            SetupArg::Best => CohortRule {
                top_k: Some(self.top_k),
                ..CohortRule::best_players()
            },
            SetupArg::Frequent => CohortRule::frequent_players(),
        };
        Some(CohortRule {
            min_games: self.min_games.unwrap_or(base.min_games),
            horizon: self.horizon.unwrap_or(base.horizon),
            score: match self.cohort_score {
                ScoreArg::Mean => CohortScore::Mean,
                ScoreArg::Conservative => CohortScore::Conservative { k: self.conservative_k },
            },
            ..base
        })
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub players: usize,
    /// Teams per match
    #[arg(long, default_value_t = 10)]
    pub teams: usize,
    #[arg(long, default_value_t = 2)]
    pub team_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub matches: usize,
    #[arg(long, default_value_t = 0.0)]
    pub skill_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub skill_spread: f64,
    /// Per-match performance noise; 0 gives placements that follow skill exactly
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for matches.csv and latent.csv
    #[arg(long, default_value = "royale-synth")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// A match-log CSV or a ratings snapshot
    pub path: PathBuf,
    /// Players to list from a snapshot
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Keep only matches whose teams all have this many players
    #[arg(long)]
    pub team_size: Option<usize>,
}
