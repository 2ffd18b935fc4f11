use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn royale(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_royale"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = royale(dir, args);
    assert!(
        out.status.success(),
        "royale {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// A small synthetic match log, written once per test directory.
fn synth(dir: &Path) -> PathBuf {
    ok(
        dir,
        &["synth", "--players", "60", "--teams", "6", "--matches", "120", "--noise", "0.5", "--seed", "3", "--out", "data"],
    );
    dir.join("data/matches.csv")
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_writes_matches_and_latent_table() {
    let tmp = TempDir::new().unwrap();
    let summary = ok(
        tmp.path(),
        &["synth", "--players", "200", "--teams", "10", "--team-size", "2", "--matches", "1000", "--seed", "1", "--out", "s"],
    );
    assert_eq!(summary["config"]["player_count"], 200);
    let matches = fs::read_to_string(tmp.path().join("s/matches.csv")).unwrap();
    assert!(matches.starts_with("match_id,timestamp,team_id,player_id,team_placement\n"));
    assert_eq!(matches.lines().count(), 1 + 1000 * 20);
    let latent = fs::read_to_string(tmp.path().join("s/latent.csv")).unwrap();
    assert_eq!(latent.lines().count(), 201);
}

#[test]
fn replay_writes_artifacts_and_echoes_summary() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    let summary = ok(
        tmp.path(),
        &["replay", "--system", "elo", "--input", input.to_str().unwrap(), "--seed", "7", "--out", "r"],
    );
    assert_eq!(summary["command"], "replay");
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["system"]["k_factor"], 10.0);
    assert_eq!(summary["system"]["d_scale"], 400.0);
    assert_eq!(summary["system"]["default_rating"], 1500.0);
    assert_eq!(summary["metric_options"]["ndcg_log_base"], 2.0);
    assert_eq!(summary["data"]["matches"], 120);
    assert_eq!(summary["data"]["team_size"], 2);
    assert!(summary["aggregate"]["ndcg"].as_f64().unwrap() > 0.0);

    let dir = tmp.path().join("r/elo");
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 121);
    assert!(fs::read_to_string(dir.join("ratings.txt")).unwrap().starts_with("royale-ratings v1\n"));
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
    assert!(!dir.join("trend.csv").exists());
}

#[test]
fn bare_run_covers_all_systems_with_published_defaults() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    let summary = ok(tmp.path(), &["experiment", "--input", input.to_str().unwrap()]);
    let runs = summary.as_array().unwrap();
    let names: Vec<&str> = runs.iter().map(|r| r["system"]["system"].as_str().unwrap()).collect();
    assert_eq!(names, ["elo", "glicko", "trueskill", "prevrank"]);
    assert_eq!(runs[1]["system"]["default_sigma"], 350.0);
    assert_eq!(runs[2]["system"]["beta"], 4.16);
    assert_eq!(runs[2]["system"]["tau"], 0.833);
    assert_eq!(runs[0]["trend"]["window"], 500);
    for name in names {
        assert!(tmp.path().join("royale-out").join(name).join("trend.csv").exists());
    }
}

#[test]
fn best_players_trend_has_ten_game_indices() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    let summary = ok(
        tmp.path(),
        &["experiment", "--setup", "best", "--system", "trueskill", "--input", input.to_str().unwrap(), "--out", "e"],
    );
    assert_eq!(summary["trend"]["setup"], "best");
    assert_eq!(summary["trend"]["cohort_rule"]["min_games"], 10);
    assert_eq!(summary["trend"]["cohort_rule"]["top_k"], 1000);
    let trend = fs::read_to_string(tmp.path().join("e/trueskill/trend.csv")).unwrap();
    let rows: Vec<&str> = trend.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[0].starts_with("1,"));
    assert!(rows[9].starts_with("10,"));
    // Every cohort trend row carries the focal-team error.
    assert!(rows.iter().all(|r| !r.ends_with(',')));
}

#[test]
fn identical_flags_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    let input = input.to_str().unwrap();
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for setup in ["all", "best", "frequent"] {
        let args = [
            "experiment", "--setup", setup, "--input", input, "--seed", "11", "--window", "20", "--min-games", "5",
            "--verbose", "--out", "o",
        ];
        let (x, y) = (royale(a.path(), &args), royale(b.path(), &args));
        assert!(x.status.success() && y.status.success());
        assert_eq!(x.stdout, y.stdout, "{setup}: summaries differ");
        let (fx, fy) = (files(&a.path().join("o")), files(&b.path().join("o")));
        assert_eq!(fx.len(), 16);
        assert_eq!(fx, fy, "{setup}: artifacts differ");
    }
    let (sa, sb) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(sa.path());
    synth(sb.path());
    assert_eq!(files(&sa.path().join("data")), files(&sb.path().join("data")));
}

#[test]
fn verbose_reports_both_position_conventions() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    ok(
        tmp.path(),
        &["replay", "--system", "glicko", "--input", input.to_str().unwrap(), "--verbose", "--positions", "predicted"],
    );
    let metrics = fs::read_to_string(tmp.path().join("royale-out/glicko/metrics.csv")).unwrap();
    assert!(metrics.lines().next().unwrap().ends_with(",ap_observed,ndcg_observed"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    for args in [
        vec!["replay"],
        vec!["replay", "--input", "x.csv", "--no-such-flag"],
        vec!["replay", "--input", "x.csv", "--system", "chess"],
        vec!["experiment", "--input", "x.csv", "--setup", "sometimes"],
        vec!["frobnicate"],
    ] {
        assert_eq!(royale(tmp.path(), &args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn parameters_are_checked_before_reading_input() {
    let tmp = TempDir::new().unwrap();
    let out = royale(tmp.path(), &["replay", "--system", "elo", "--input", "missing.csv", "--k", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("elo"), "{err}");
    assert!(!err.contains("missing.csv"), "{err}");
    assert!(!tmp.path().join("royale-out").exists());

    let out = royale(tmp.path(), &["replay", "--input", "missing.csv", "--ndcg-base", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metric"));
}

#[test]
fn data_errors_exit_with_one_and_point_at_the_line() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.csv");
    fs::write(
        &path,
        "match_id,timestamp,team_id,player_id,team_placement\n\
         m1,2017-01-01T00:00:00Z,a,p1,1\n\
         m1,not-a-time,b,p2,2\n",
    )
    .unwrap();
    let out = royale(tmp.path(), &["replay", "--input", "bad.csv", "--any-team-size"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");

    let out = royale(tmp.path(), &["replay", "--input", "absent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn team_size_filter_can_empty_the_log() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    let out = royale(tmp.path(), &["replay", "--input", input.to_str().unwrap(), "--team-size", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no usable matches"));
}

#[test]
fn inspect_reads_snapshots_and_match_logs() {
    let tmp = TempDir::new().unwrap();
    let input = synth(tmp.path());
    ok(tmp.path(), &["replay", "--system", "trueskill", "--input", input.to_str().unwrap(), "--seed", "5"]);
    let snap = ok(tmp.path(), &["inspect", "royale-out/trueskill/ratings.txt", "--top", "3"]);
    assert_eq!(snap["kind"], "snapshot");
    assert_eq!(snap["system"], "trueskill");
    assert_eq!(snap["seed"], 5);
    assert_eq!(snap["matches_processed"], 120);
    let top = snap["top"].as_array().unwrap();
    assert_eq!(top.len(), 3);
    assert!(top[0]["mu"].as_f64() >= top[2]["mu"].as_f64());

    let log = ok(tmp.path(), &["inspect", input.to_str().unwrap()]);
    assert_eq!(log["kind"], "match_log");
    assert_eq!(log["matches"], 120);
    assert_eq!(log["players"], 60);
    assert_eq!(log["teams_per_match"]["6"], 120);
    assert_eq!(log["team_sizes"]["2"], 720);
}
