//! Match-log CSV reading and writing.
//!
//! One row per (match, player) with columns `match_id, timestamp, team_id,
//! player_id, team_placement`. Extra columns are ignored. Rows are grouped
//! into matches, matches whose placements are not a strict permutation of
//! `1..=N` are rejected with a diagnostic, and the survivors are returned in
//! timestamp order (file order among equal timestamps).

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MatchRecord, PlayerId, TeamEntry, TeamId};

pub const COLUMNS: [&str; 5] = ["match_id", "timestamp", "team_id", "player_id", "team_placement"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestFilter {
    /// Keep only matches in which every team has exactly this many members.
    pub team_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub match_id: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub matches: Vec<MatchRecord>,
    pub rejected: Vec<Rejection>,
    /// Valid matches dropped by the team-size filter.
    pub filtered_out: usize,
}

pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    // ISO-8601 offsets without a colon, e.g. `+0000`.
    if let Ok(t) = DateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f%z") {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

struct PendingTeam {
    team_id: String,
    placement: i64,
    members: Vec<PlayerId>,
}

struct PendingMatch {
    match_id: String,
    timestamp: DateTime<Utc>,
    line: u64,
    teams: Vec<PendingTeam>,
    team_index: HashMap<String, usize>,
    problem: Option<String>,
}

impl PendingMatch {
    fn flag(&mut self, problem: String) {
        self.problem.get_or_insert(problem);
    }

    fn finish(self) -> std::result::Result<MatchRecord, Rejection> {
        let reject = |reason: String| Rejection {
            match_id: self.match_id.clone(),
            line: self.line,
            reason,
        };
        if let Some(problem) = &self.problem {
            return Err(reject(problem.clone()));
        }
        let n = self.teams.len();
        if let Some(bad) = self.teams.iter().find(|t| t.placement < 1 || t.placement > n as i64) {
            return Err(reject(format!(
                "team {} has placement {} outside 1..={n}",
                bad.team_id, bad.placement
            )));
        }
        let record = MatchRecord {
            match_id: self.match_id.clone(),
            timestamp: self.timestamp,
            teams: self
                .teams
                .iter()
                .map(|t| TeamEntry {
                    team_id: TeamId::new(t.team_id.clone()),
                    members: t.members.clone(),
                    observed_rank: t.placement as u32,
                })
                .collect(),
        };
        record.validate().map_err(|e| reject(e.to_string()))?;
        Ok(record)
    }
}

fn column_positions(headers: &csv::StringRecord, source: &Path) -> Result<[usize; 5]> {
    let mut positions = [0usize; 5];
    for (slot, name) in positions.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse {
                path: source.to_path_buf(),
                line: 1,
                message: format!("missing required column '{name}'"),
            })?;
    }
    Ok(positions)
}

/// Reads a match log from any reader; `source` only labels error messages.
pub fn ingest_reader<R: Read>(reader: R, source: &Path, filter: IngestFilter) -> Result<Ingested> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let cols = column_positions(csv.headers()?, source)?;

    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut pending: Vec<PendingMatch> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(cols[i]).unwrap_or("");
        let (match_id, raw_time, team_id, player_id, raw_place) =
            (field(0), field(1), field(2), field(3), field(4));

        if match_id.is_empty() {
            return Err(parse_err(line, "empty match_id".into()));
        }
        if team_id.is_empty() {
            return Err(parse_err(line, "empty team_id".into()));
        }
        let player = PlayerId::new(player_id).map_err(|_| parse_err(line, "empty player_id".into()))?;
        let timestamp = parse_timestamp(raw_time)
            .ok_or_else(|| parse_err(line, format!("unparseable timestamp '{raw_time}'")))?;
        let placement: i64 = raw_place
            .parse()
            .map_err(|_| parse_err(line, format!("team_placement '{raw_place}' is not an integer")))?;

        let idx = *by_id.entry(match_id.to_string()).or_insert_with(|| {
            pending.push(PendingMatch {
                match_id: match_id.to_string(),
                timestamp,
                line,
                teams: Vec::new(),
                team_index: HashMap::new(),
                problem: None,
            });
            pending.len() - 1
        });
        let m = &mut pending[idx];
        if m.timestamp != timestamp {
            m.flag(format!("line {line}: timestamp differs from the match's first row"));
        }
        let team_idx = match m.team_index.get(team_id) {
            Some(&t) => t,
            None => {
                m.teams.push(PendingTeam {
                    team_id: team_id.to_string(),
                    placement,
                    members: Vec::new(),
                });
                m.team_index.insert(team_id.to_string(), m.teams.len() - 1);
                m.teams.len() - 1
            }
        };
        if m.teams[team_idx].placement != placement {
            m.flag(format!("line {line}: team {team_id} has conflicting placements"));
        }
        m.teams[team_idx].members.push(player);
    }

    let mut matches = Vec::with_capacity(pending.len());
    let mut rejected = Vec::new();
    let mut filtered_out = 0;
    for m in pending {
        match m.finish() {
            Ok(record) => {
                let keep = filter
                    .team_size
                    .is_none_or(|size| record.teams.iter().all(|t| t.members.len() == size));
                if keep {
                    matches.push(record);
                } else {
                    filtered_out += 1;
                }
            }
            Err(r) => {
                log::warn!("rejected match {} (line {}): {}", r.match_id, r.line, r.reason);
                rejected.push(r);
            }
        }
    }
    matches.sort_by_key(|m| m.timestamp);
    Ok(Ingested {
        matches,
        rejected,
        filtered_out,
    })
}

pub fn ingest(path: &Path, filter: IngestFilter) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), path, filter)
}

/// Writes matches in the match-log layout, one row per player.
pub fn write_matches<W: Write>(writer: W, matches: &[MatchRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(COLUMNS)?;
    for m in matches {
        let ts = format_timestamp(&m.timestamp);
        for team in &m.teams {
            let place = team.observed_rank.to_string();
            for player in &team.members {
                csv.write_record([
                    m.match_id.as_str(),
                    ts.as_str(),
                    team.team_id.as_str(),
                    player.as_str(),
                    place.as_str(),
                ])?;
            }
        }
    }
    csv.flush().map_err(|e| Error::io(PathBuf::from("<csv>"), e))?;
    Ok(())
}
