//! PreviousRank: predict every player to repeat their last team placement.
//!
//! Players with no history count as `N / 2`. A team's score is the sum of its
//! members' previous ranks and the lowest sum is predicted to win.

use crate::error::{Error, Result};
use crate::model::{MatchRecord, PlayerId, PlayerRating, PredictedRanking};
use crate::system::{self, RatingMap};

pub fn new_player() -> PlayerRating {
    PlayerRating::new(0.0, None)
}

pub fn player_prev_rank(state: &RatingMap, player: &PlayerId, team_count: usize) -> Result<f64> {
    if team_count < 2 {
        return Err(Error::Domain(format!(
            "previous rank needs at least 2 teams, got {team_count}"
        )));
    }
    Ok(state
        .get(player)
        .and_then(|r| r.last_observed_rank)
        .map_or(team_count as f64 / 2.0, f64::from))
}

pub fn update_match(state: &mut RatingMap, record: &MatchRecord, seed: u64) -> Result<PredictedRanking> {
    let n = record.team_count();
    let mut scores = Vec::with_capacity(n);
    for team in &record.teams {
        let mut sum = 0.0;
        for member in &team.members {
            sum += player_prev_rank(state, member, n)?;
        }
        // Negated so that the lowest previous-rank sum sorts first.
        scores.push(-sum);
    }
    let prediction = system::predict_by_score(record, &scores, seed)?;

    for member in record.players() {
        state.entry(member.clone()).or_insert_with(new_player);
    }
    system::record_placements(state, record);
    Ok(prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::test_support::{fixture_match, pid};

    fn with_rank(rank: u32) -> PlayerRating {
        PlayerRating {
            last_observed_rank: Some(rank),
            ..new_player()
        }
    }

    #[test]
    fn new_players_sit_mid_table() {
        let state = RatingMap::new();
        assert_eq!(player_prev_rank(&state, &pid("x"), 50).unwrap(), 25.0);
        assert_eq!(player_prev_rank(&state, &pid("x"), 3).unwrap(), 1.5);
        assert!(player_prev_rank(&state, &pid("x"), 1).is_err());
    }

    #[test]
    fn stored_rank_is_returned() {
        let mut state = RatingMap::new();
        state.insert(pid("x"), with_rank(3));
        assert_eq!(player_prev_rank(&state, &pid("x"), 50).unwrap(), 3.0);
    }

    #[test]
    fn lowest_sum_is_predicted_winner() {
        let record = fixture_match(&[&["a", "b"], &["c", "d"]], &[2, 1]);
        let mut state = RatingMap::new();
        for (id, r) in [("a", 1), ("b", 2), ("c", 10), ("d", 12)] {
            state.insert(pid(id), with_rank(r));
        }
        let pred = update_match(&mut state, &record, 0).unwrap();
        assert_eq!(pred.ranks(), vec![1, 2]);
        assert!(pred.tie_groups.is_empty());
    }

    #[test]
    fn all_new_players_tie() {
        let record = fixture_match(&[&["a", "b"], &["c", "d"], &["e", "f"]], &[1, 2, 3]);
        let mut state = RatingMap::new();
        let pred = update_match(&mut state, &record, 5).unwrap();
        assert_eq!(pred.tie_groups.len(), 1);
        assert_eq!(pred.tie_groups[0].len(), 3);
    }

    #[test]
    fn members_store_team_placement() {
        let record = fixture_match(&[&["a", "b"], &["c", "d"]], &[2, 1]);
        let mut state = RatingMap::new();
        update_match(&mut state, &record, 0).unwrap();
        assert_eq!(state[&pid("a")].last_observed_rank, Some(2));
        assert_eq!(state[&pid("b")].last_observed_rank, Some(2));
        assert_eq!(state[&pid("c")].last_observed_rank, Some(1));
        assert_eq!(state[&pid("d")].games_played, 1);
    }

    #[test]
    fn only_the_last_match_matters() {
        let first = fixture_match(&[&["a"], &["b"]], &[1, 2]);
        let second = fixture_match(&[&["a"], &["b"]], &[2, 1]);
        let mut long = RatingMap::new();
        for _ in 0..5 {
            update_match(&mut long, &first, 0).unwrap();
        }
        update_match(&mut long, &second, 0).unwrap();
        let mut short = RatingMap::new();
        update_match(&mut short, &second, 0).unwrap();
        let probe = fixture_match(&[&["a"], &["b"]], &[1, 2]);
        assert_eq!(
            update_match(&mut long, &probe, 3).unwrap(),
            update_match(&mut short, &probe, 3).unwrap()
        );
    }
}
