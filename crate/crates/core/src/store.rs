//! Rating state plus the metadata needed to reproduce it, and its text
//! snapshot format.
//!
//! ```text
//! royale-ratings v1
//! system {"system":"elo","k_factor":10.0,"d_scale":400.0,"default_rating":1500.0}
//! seed 7
//! matches_processed 1000
//! players 2
//! player_id  mu       sigma  games_played  last_rank
//! p0001      1503.25  -      4             2
//! p0002      1496.75  -      4             1
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits.
//! Player rows are tab-separated. Absent values are written as `-`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{PlayerId, PlayerRating};
use crate::system::{RatingMap, RatingSystem};

const MAGIC: &str = "royale-ratings v1";
const COLUMNS: &str = "player_id\tmu\tsigma\tgames_played\tlast_rank";

#[derive(Debug, Clone, PartialEq)]
pub struct RatingStore {
    pub system: RatingSystem,
    pub seed: u64,
    pub matches_processed: u64,
    pub players: RatingMap,
}

impl RatingStore {
    pub fn new(system: RatingSystem, seed: u64) -> Self {
        RatingStore {
            system,
            seed,
            matches_processed: 0,
            players: RatingMap::new(),
        }
    }

    pub fn to_snapshot(&self) -> Result<String> {
        let system = serde_json::to_string(&self.system)
            .map_err(|e| Error::Snapshot(format!("cannot encode parameters: {e}")))?;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "system {system}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "matches_processed {}", self.matches_processed);
        let _ = writeln!(out, "players {}", self.players.len());
        let _ = writeln!(out, "{COLUMNS}");
        for (id, r) in &self.players {
            if id.as_str().contains(['\t', '\n', '\r']) {
                return Err(Error::Snapshot(format!(
                    "player id {:?} contains a tab or newline",
                    id.as_str()
                )));
            }
            let sigma = r.sigma.map_or_else(|| "-".to_string(), |s| s.to_string());
            let rank = r
                .last_observed_rank
                .map_or_else(|| "-".to_string(), |s| s.to_string());
            let _ = writeln!(out, "{id}\t{}\t{sigma}\t{}\t{rank}", r.mu, r.games_played);
        }
        Ok(out)
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Snapshot(format!("truncated before {what}")))
        };
        let bad = |line: usize, msg: String| Error::Snapshot(format!("line {}: {msg}", line + 1));

        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(bad(n, format!("expected '{MAGIC}', found '{magic}'")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next(key)?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(|v| (n, v.to_string()))
                .ok_or_else(|| bad(n, format!("expected '{key} ...'")))
        };
        let (n, system) = field("system")?;
        let system: RatingSystem =
            serde_json::from_str(&system).map_err(|e| bad(n, format!("bad parameters: {e}")))?;
        let (n, seed) = field("seed")?;
        let seed = seed.parse().map_err(|_| bad(n, "bad seed".into()))?;
        let (n, processed) = field("matches_processed")?;
        let matches_processed = processed
            .parse()
            .map_err(|_| bad(n, "bad match count".into()))?;
        let (n, count) = field("players")?;
        let count: usize = count.parse().map_err(|_| bad(n, "bad player count".into()))?;
        let (n, columns) = next("column header")?;
        if columns != COLUMNS {
            return Err(bad(n, "unexpected column header".into()));
        }

        let mut players = RatingMap::new();
        for (n, line) in lines {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != 5 {
                return Err(bad(n, format!("expected 5 fields, found {}", cells.len())));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad(n, format!("bad number '{s}'")));
            let id = PlayerId::new(cells[0]).map_err(|e| bad(n, e.to_string()))?;
            let rating = PlayerRating {
                mu: float(cells[1])?,
                sigma: match cells[2] {
                    "-" => None,
                    s => Some(float(s)?),
                },
                games_played: cells[3].parse().map_err(|_| bad(n, "bad games_played".into()))?,
                last_observed_rank: match cells[4] {
                    "-" => None,
                    s => Some(s.parse().map_err(|_| bad(n, "bad last_rank".into()))?),
                },
            };
            if players.insert(id, rating).is_some() {
                return Err(bad(n, format!("duplicate player {}", cells[0])));
            }
        }
        if players.len() != count {
            return Err(Error::Snapshot(format!(
                "header promises {count} players, body has {}",
                players.len()
            )));
        }
        Ok(RatingStore {
            system,
            seed,
            matches_processed,
            players,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_snapshot()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_snapshot(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemKind;
    use proptest::prelude::*;

    fn pid(s: &str) -> PlayerId {
        PlayerId::new(s).unwrap()
    }

    #[test]
    fn documented_layout() {
        let mut store = RatingStore::new(RatingSystem::with_defaults(SystemKind::Elo), 7);
        store.matches_processed = 1000;
        store.players.insert(
            pid("p0001"),
            PlayerRating {
                mu: 1503.25,
                sigma: None,
                games_played: 4,
                last_observed_rank: Some(2),
            },
        );
        let text = store.to_snapshot().unwrap();
        assert_eq!(
            text,
            "royale-ratings v1\n\
             system {\"system\":\"elo\",\"k_factor\":10.0,\"d_scale\":400.0,\"default_rating\":1500.0}\n\
             seed 7\n\
             matches_processed 1000\n\
             players 1\n\
             player_id\tmu\tsigma\tgames_played\tlast_rank\n\
             p0001\t1503.25\t-\t4\t2\n"
        );
    }

    #[test]
    fn rejects_corruption() {
        let mut store = RatingStore::new(RatingSystem::PrevRank, 0);
        store.players.insert(pid("a"), PlayerRating::new(0.0, None));
        let text = store.to_snapshot().unwrap();
        assert!(RatingStore::from_snapshot(&text.replace("v1", "v2")).is_err());
        assert!(RatingStore::from_snapshot(&text.replace("players 1", "players 2")).is_err());
        assert!(RatingStore::from_snapshot(&text.replace("a\t0", "a\tzero")).is_err());
        assert!(RatingStore::from_snapshot("royale-ratings v1\n").is_err());

        let mut tabbed = RatingStore::new(RatingSystem::PrevRank, 0);
        tabbed.players.insert(pid("a\tb"), PlayerRating::new(0.0, None));
        assert!(tabbed.to_snapshot().is_err());
    }

    proptest! {
        #[test]
        fn snapshot_round_trips(
            entries in prop::collection::btree_map(
                "[a-z0-9_-]{1,12}",
                (any::<f64>().prop_filter("finite", |f| f.is_finite()),
                 prop::option::of(1e-300f64..1e6),
                 0u32..10_000,
                 prop::option::of(1u32..100)),
                0..40),
            seed in any::<u64>(),
            kind in prop::sample::select(SystemKind::ALL.to_vec()),
        ) {
            let mut store = RatingStore::new(RatingSystem::with_defaults(kind), seed);
            store.matches_processed = entries.len() as u64;
            for (id, (mu, sigma, games, rank)) in entries {
                store.players.insert(pid(&id), PlayerRating { mu, sigma, games_played: games, last_observed_rank: rank });
            }
            let back = RatingStore::from_snapshot(&store.to_snapshot().unwrap()).unwrap();
            prop_assert_eq!(back, store);
        }
    }
}
