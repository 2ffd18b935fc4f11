//! CSV writers for per-match metrics and trends, and run-level aggregates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::format_timestamp;
use crate::metrics::{MetricReport, PositionOrder};
use crate::replay::{ExperimentTrend, MatchReport};

fn flush<W: Write>(csv: &mut csv::Writer<W>) -> Result<()> {
    csv.flush().map_err(|e| Error::io("<report>", e))
}

/// `match_id, timestamp, N, new_player_fraction` and the six metrics. When
/// the reports carry the alternate position convention, two more columns
/// hold its AP and NDCG.
pub fn write_metrics_csv<W: Write>(writer: W, reports: &[MatchReport]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let alternate = reports.first().and_then(|r| r.alternate).map(|a| match a.positions {
        PositionOrder::Observed => "observed",
        PositionOrder::Predicted => "predicted",
    });
    let mut header: Vec<String> = ["match_id", "timestamp", "N", "new_player_fraction"]
        .iter()
        .chain(MetricReport::NAMES.iter())
        .map(|s| s.to_string())
        .collect();
    if let Some(tag) = alternate {
        header.push(format!("ap_{tag}"));
        header.push(format!("ndcg_{tag}"));
    }
    csv.write_record(&header)?;
    for r in reports {
        let mut row = vec![
            r.match_id.clone(),
            format_timestamp(&r.timestamp),
            r.team_count.to_string(),
            r.new_player_fraction.to_string(),
        ];
        row.extend(r.metrics.values().iter().map(f64::to_string));
        if alternate.is_some() {
            let alt = r.alternate.ok_or_else(|| {
                Error::Data(format!("match {} lacks alternate-position metrics", r.match_id))
            })?;
            row.push(alt.ap.to_string());
            row.push(alt.ndcg.to_string());
        }
        csv.write_record(&row)?;
    }
    flush(&mut csv)
}

/// `position_index`, the six averaged metrics, `new_player_fraction`,
/// `match_count`, and `focal_error` (empty for the all-players set-up).
pub fn write_trend_csv<W: Write>(writer: W, trend: &ExperimentTrend) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["position_index"];
    header.extend(MetricReport::NAMES);
    header.extend(["new_player_fraction", "match_count", "focal_error"]);
    csv.write_record(&header)?;
    for p in &trend.points {
        let mut row = vec![p.position.to_string()];
        row.extend(p.means.iter().map(f64::to_string));
        row.push(p.new_player_fraction.to_string());
        row.push(p.match_count.to_string());
        row.push(p.focal_error.map_or_else(String::new, |e| e.to_string()));
        csv.write_record(&row)?;
    }
    flush(&mut csv)
}

/// Means over a whole replay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub matches: usize,
    pub accuracy: f64,
    pub mae: f64,
    pub kendall_tau: f64,
    pub mrr: f64,
    pub ap: f64,
    pub ndcg: f64,
    pub new_player_fraction: f64,
    /// Share of team predictions that came out of a random tie-break.
    pub tied_team_fraction: f64,
}

pub fn aggregate(reports: &[MatchReport]) -> Option<Aggregate> {
    if reports.is_empty() {
        return None;
    }
    let k = reports.len() as f64;
    let mut sums = [0.0; 6];
    let mut npf = 0.0;
    let (mut tied, mut teams) = (0usize, 0usize);
    for r in reports {
        for (s, v) in sums.iter_mut().zip(r.metrics.values()) {
            *s += v;
        }
        npf += r.new_player_fraction;
        tied += r.tied_teams;
        teams += r.team_count;
    }
    Some(Aggregate {
        matches: reports.len(),
        accuracy: sums[0] / k,
        mae: sums[1] / k,
        kendall_tau: sums[2] / k,
        mrr: sums[3] / k,
        ap: sums[4] / k,
        ndcg: sums[5] / k,
        new_player_fraction: npf / k,
        tied_team_fraction: tied as f64 / teams as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::{moving_average_trend, replay, ReplayConfig};
    use crate::synth::{generate, SynthConfig};
    use crate::system::{RatingSystem, SystemKind};

    fn outcome(both: bool) -> crate::replay::ReplayOutcome {
        let data = generate(&SynthConfig {
            player_count: 12,
            teams_per_match: 3,
            match_count: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let mut cfg = ReplayConfig::new(RatingSystem::with_defaults(SystemKind::Elo), 1);
        cfg.report_both_positions = both;
        replay(&data.matches, &cfg).unwrap()
    }

    #[test]
    fn metrics_csv_layout() {
        let out = outcome(false);
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &out.reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "match_id,timestamp,N,new_player_fraction,accuracy,mae,kendall_tau,mrr,ap,ndcg"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "m000000");
        assert_eq!(first[1], "2017-01-01T00:00:00Z");
        assert_eq!(first[2], "3");
        assert_eq!(first[3], "1");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn alternate_columns_when_requested() {
        let out = outcome(true);
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &out.reports).unwrap();
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert!(header.ends_with(",ap_predicted,ndcg_predicted"));
    }

    #[test]
    fn trend_csv_layout() {
        let out = outcome(false);
        let trend = moving_average_trend(&out.reports, 2);
        let mut buf = Vec::new();
        write_trend_csv(&mut buf, &trend).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "position_index,accuracy,mae,kendall_tau,mrr,ap,ndcg,new_player_fraction,match_count,focal_error\n1,"
        ));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn aggregate_means() {
        let out = outcome(false);
        let agg = aggregate(&out.reports).unwrap();
        let mean_mae = out.reports.iter().map(|r| r.metrics.mae).sum::<f64>() / 4.0;
        assert!((agg.mae - mean_mae).abs() < 1e-12);
        assert_eq!(agg.matches, 4);
        // First match is a full tie: all three teams are fresh.
        assert!(agg.tied_team_fraction >= 0.25);
        assert!(aggregate(&[]).is_none());
    }
}
