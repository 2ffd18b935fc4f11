use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use royale_core::ingest::{self, IngestFilter, Ingested, Rejection};
use royale_core::replay::{self, setup_all_players, setup_best_players, setup_frequent_players};
use royale_core::report::{self, Aggregate};
use royale_core::synth::{self, SynthConfig};
use royale_core::{
    CohortRule, CohortScore, MetricOptions, RatingStore, RatingSystem, ReplayConfig, ReplayOutcome, Setup,
    SystemKind,
};

use crate::args::{DataArgs, ExperimentArgs, InspectArgs, MetricArgs, ReplayArgs, SynthArgs, SystemParams};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TREND_FILE: &str = "trend.csv";
pub const SNAPSHOT_FILE: &str = "ratings.txt";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Serialize)]
struct DataSummary {
    input: String,
    team_size: Option<usize>,
    matches: usize,
    players: usize,
    filtered_out: usize,
    rejected: Vec<Rejection>,
}

#[derive(Debug, Serialize)]
struct TrendSummary {
    setup: Setup,
    window: Option<usize>,
    cohort_rule: Option<CohortRule>,
    cohort_size: usize,
    points: usize,
    diagnostics: Vec<String>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    command: &'static str,
    system: RatingSystem,
    seed: u64,
    metric_options: MetricOptions,
    report_both_positions: bool,
    data: DataSummary,
    aggregate: Option<Aggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trend: Option<TrendSummary>,
    outputs: BTreeMap<&'static str, String>,
}

/// Everything about a run that is fixed before the input is read.
struct Plan {
    command: &'static str,
    systems: Vec<RatingSystem>,
    data: DataArgs,
    metrics: MetricOptions,
    verbose: bool,
    trend: Option<TrendPlan>,
}

#[derive(Clone, Copy)]
struct TrendPlan {
    setup: Setup,
    window: usize,
    rule: Option<CohortRule>,
}

fn checked_systems(params: &SystemParams) -> Result<Vec<RatingSystem>> {
    params
        .kinds()
        .into_iter()
        .map(|kind| {
            let system = params.build(kind);
            system.validate().with_context(|| format!("invalid {kind} parameters"))?;
            Ok(system)
        })
        .collect()
}

fn checked_metrics(args: &MetricArgs) -> Result<MetricOptions> {
    let options = args.options();
    options.validate().context("invalid metric options")?;
    Ok(options)
}

fn check_team_size(data: &DataArgs) -> Result<()> {
    if data.team_size_filter() == Some(0) {
        bail!("--team-size must be at least 1");
    }
    Ok(())
}

pub fn replay_command(args: ReplayArgs) -> Result<Value> {
    check_team_size(&args.data)?;
    execute(Plan {
        command: "replay",
        systems: checked_systems(&args.system)?,
        metrics: checked_metrics(&args.metrics)?,
        verbose: args.metrics.verbose,
        data: args.data,
        trend: None,
    })
}

pub fn experiment_command(args: ExperimentArgs) -> Result<Value> {
    check_team_size(&args.data)?;
    let setup = Setup::from(args.setup);
    let rule = args.cohort_rule();
    match (setup, &rule) {
        (Setup::All, _) if args.window == 0 => bail!("--window must be at least 1"),
        (_, Some(r)) if r.horizon == 0 => bail!("--horizon must be at least 1"),
        (_, Some(CohortRule { top_k: Some(0), .. })) => bail!("--top-k must be at least 1"),
        (_, Some(CohortRule { score: CohortScore::Conservative { k }, .. })) if !(k.is_finite() && *k >= 0.0) => {
            bail!("--conservative-k must be finite and >= 0")
        }
        _ => {}
    }
    execute(Plan {
        command: "experiment",
        systems: checked_systems(&args.system)?,
        metrics: checked_metrics(&args.metrics)?,
        verbose: args.metrics.verbose,
        data: args.data,
        trend: Some(TrendPlan {
            setup,
            window: args.window,
            rule,
        }),
    })
}

fn load(data: &DataArgs) -> Result<Ingested> {
    let ingested = ingest::ingest(&data.input, IngestFilter { team_size: data.team_size_filter() })
        .with_context(|| format!("cannot load {}", data.input.display()))?;
    for r in &ingested.rejected {
        log::warn!("{}:{}: match {} rejected: {}", data.input.display(), r.line, r.match_id, r.reason);
    }
    if ingested.matches.is_empty() {
        bail!("{}: no usable matches", data.input.display());
    }
    log::info!(
        "{} matches loaded, {} rejected, {} filtered by team size",
        ingested.matches.len(),
        ingested.rejected.len(),
        ingested.filtered_out
    );
    Ok(ingested)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(mut writer: BufWriter<File>, path: &Path) -> Result<()> {
    writer.flush().with_context(|| format!("cannot write {}", path.display()))
}

fn execute(plan: Plan) -> Result<Value> {
    let ingested = load(&plan.data)?;
    let players = ingested
        .matches
        .iter()
        .flat_map(|m| m.players())
        .collect::<std::collections::BTreeSet<_>>()
        .len();

    let results: Vec<Result<Value>> = std::thread::scope(|scope| {
        let handles: Vec<_> = plan
            .systems
            .iter()
            .map(|system| {
                let (plan, ingested) = (&plan, &ingested);
                scope.spawn(move || run_one(plan, system, ingested, players))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("a system run panicked"))))
            .collect()
    });
    let mut summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(if summaries.len() == 1 {
        summaries.remove(0)
    } else {
        Value::Array(summaries)
    })
}

fn run_one(plan: &Plan, system: &RatingSystem, ingested: &Ingested, players: usize) -> Result<Value> {
    let kind = system.kind();
    let dir = plan.data.out.join(kind.name());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let config = ReplayConfig {
        system: system.clone(),
        seed: plan.data.seed,
        metrics: plan.metrics,
        report_both_positions: plan.verbose,
    };
    let matches = &ingested.matches;
    let (outcome, trend): (ReplayOutcome, _) = match plan.trend {
        None => (replay::replay(matches, &config)?, None),
        Some(t) => {
            let (outcome, trend) = match (t.setup, &t.rule) {
                (Setup::All, _) | (_, None) => setup_all_players(matches, &config, t.window)?,
                (Setup::Best, Some(rule)) => setup_best_players(matches, &config, rule)?,
                (Setup::Frequent, Some(rule)) => setup_frequent_players(matches, &config, rule)?,
            };
            (outcome, Some((t, trend)))
        }
    };
    log::info!("{kind}: replayed {} matches", outcome.reports.len());

    let mut outputs = BTreeMap::new();
    let path = dir.join(METRICS_FILE);
    let mut w = create(&path)?;
    report::write_metrics_csv(&mut w, &outcome.reports)?;
    finish(w, &path)?;
    outputs.insert("metrics", path.display().to_string());

    let path = dir.join(SNAPSHOT_FILE);
    outcome.store.write(&path)?;
    outputs.insert("snapshot", path.display().to_string());

    let trend_summary = match &trend {
        Some((t, trend)) => {
            let path = dir.join(TREND_FILE);
            let mut w = create(&path)?;
            report::write_trend_csv(&mut w, trend)?;
            finish(w, &path)?;
            outputs.insert("trend", path.display().to_string());
            Some(TrendSummary {
                setup: t.setup,
                window: (t.setup == Setup::All).then_some(t.window),
                cohort_rule: t.rule,
                cohort_size: trend.cohort_size,
                points: trend.points.len(),
                diagnostics: trend.diagnostics.clone(),
            })
        }
        None => None,
    };

    let summary_path = dir.join(SUMMARY_FILE);
    outputs.insert("summary", summary_path.display().to_string());
    let summary = RunSummary {
        command: plan.command,
        system: system.clone(),
        seed: plan.data.seed,
        metric_options: plan.metrics,
        report_both_positions: plan.verbose,
        data: DataSummary {
            input: plan.data.input.display().to_string(),
            team_size: plan.data.team_size_filter(),
            matches: ingested.matches.len(),
            players,
            filtered_out: ingested.filtered_out,
            rejected: ingested.rejected.clone(),
        },
        aggregate: report::aggregate(&outcome.reports),
        trend: trend_summary,
        outputs,
    };
    let value = serde_json::to_value(&summary)?;
    write_json(&summary_path, &value)?;
    Ok(value)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    finish(w, path)
}

pub fn synth_command(args: SynthArgs) -> Result<Value> {
    let config = SynthConfig {
        player_count: args.players,
        team_size: args.team_size,
        teams_per_match: args.teams,
        match_count: args.matches,
        skill_mean: args.skill_mean,
        skill_spread: args.skill_spread,
        noise_spread: args.noise,
        seed: args.seed,
    };
    config.validate().context("invalid synthetic configuration")?;
    let data = synth::generate(&config)?;

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let matches_path = args.out.join("matches.csv");
    let mut w = create(&matches_path)?;
    ingest::write_matches(&mut w, &data.matches)?;
    finish(w, &matches_path)?;
    let latent_path = args.out.join("latent.csv");
    let mut w = create(&latent_path)?;
    synth::write_latent(&mut w, &data.latent)?;
    finish(w, &latent_path)?;

    let value = serde_json::json!({
        "command": "synth",
        "config": config,
        "outputs": {
            "matches": matches_path.display().to_string(),
            "latent": latent_path.display().to_string(),
        },
    });
    write_json(&args.out.join(SUMMARY_FILE), &value)?;
    Ok(value)
}

fn is_snapshot(path: &PathBuf) -> Result<bool> {
    let text = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.starts_with(b"royale-ratings "))
}

pub fn inspect_command(args: InspectArgs) -> Result<Value> {
    if args.team_size == Some(0) {
        bail!("--team-size must be at least 1");
    }
    if is_snapshot(&args.path)? {
        return inspect_snapshot(&args);
    }
    let ingested = ingest::ingest(&args.path, IngestFilter { team_size: args.team_size })
        .with_context(|| format!("cannot load {}", args.path.display()))?;
    let mut team_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut team_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut games: BTreeMap<&str, u32> = BTreeMap::new();
    for m in &ingested.matches {
        *team_counts.entry(m.team_count()).or_default() += 1;
        for t in &m.teams {
            *team_sizes.entry(t.members.len()).or_default() += 1;
        }
        for p in m.players() {
            *games.entry(p.as_str()).or_default() += 1;
        }
    }
    let over = |n: u32| games.values().filter(|&&g| g > n).count();
    Ok(serde_json::json!({
        "command": "inspect",
        "kind": "match_log",
        "input": args.path.display().to_string(),
        "team_size": args.team_size,
        "matches": ingested.matches.len(),
        "rejected": ingested.rejected,
        "filtered_out": ingested.filtered_out,
        "players": games.len(),
        "players_over_10_games": over(10),
        "players_over_100_games": over(100),
        "first_timestamp": ingested.matches.first().map(|m| ingest::format_timestamp(&m.timestamp)),
        "last_timestamp": ingested.matches.last().map(|m| ingest::format_timestamp(&m.timestamp)),
        "teams_per_match": team_counts,
        "team_sizes": team_sizes,
    }))
}

fn inspect_snapshot(args: &InspectArgs) -> Result<Value> {
    let store = RatingStore::read(&args.path)?;
    let mut ranked: Vec<_> = store.players.iter().collect();
    let strength = |r| store.system.strength(r, CohortScore::Mean);
    ranked.sort_by(|a, b| strength(b.1).total_cmp(&strength(a.1)).then_with(|| a.0.cmp(b.0)));
    let top: Vec<Value> = ranked
        .iter()
        .take(args.top)
        .map(|(id, r)| {
            serde_json::json!({
                "player_id": id.as_str(),
                "mu": r.mu,
                "sigma": r.sigma,
                "games_played": r.games_played,
                "last_rank": r.last_observed_rank,
            })
        })
        .collect();
    let kind: SystemKind = store.system.kind();
    Ok(serde_json::json!({
        "command": "inspect",
        "kind": "snapshot",
        "input": args.path.display().to_string(),
        "system": kind.name(),
        "parameters": store.system,
        "seed": store.seed,
        "matches_processed": store.matches_processed,
        "players": store.players.len(),
        "top": top,
    }))
}
