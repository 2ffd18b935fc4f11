//! Fixtures shared by the benchmarks.

use royale_core::synth::{self, SynthConfig};
use royale_core::{MatchRecord, RatingMap, RatingSystem};

/// A noisy synthetic stream of duo matches with `teams` teams each.
pub fn stream(teams: usize, matches: usize) -> Vec<MatchRecord> {
    synth::generate(&SynthConfig {
        player_count: (teams * 2).max(200),
        teams_per_match: teams,
        match_count: matches,
        noise_spread: 1.0,
        seed: 17,
        ..SynthConfig::default()
    })
    .expect("valid synthetic config")
    .matches
}

/// Default states for everyone in `record`, as the replay would insert them.
pub fn fresh_state(system: &RatingSystem, record: &MatchRecord) -> RatingMap {
    record.players().map(|p| (p.clone(), system.new_player())).collect()
}

/// A reversed prediction against the identity observation, the worst case
/// for every error term.
pub fn reversed(n: u32) -> (Vec<u32>, Vec<u32>) {
    ((1..=n).rev().collect(), (1..=n).collect())
}
