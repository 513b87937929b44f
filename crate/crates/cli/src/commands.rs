//! Subcommand implementations. Each writes its artifacts into `cfg.out`,
//! records them in the manifest and returns a summary.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use socgcf::eval::{
    count_parameters, degree_group_eval, degree_groups, inject_social_noise, make_coldstart_split, MetricsReport,
    ParamReport,
};
use socgcf::graph::write_edge_list;
use socgcf::model::{load_checkpoint, save_checkpoint, Checkpoint};
use socgcf::training::TrainOutcome;

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::pipeline::{prepare, Dataset, Prepared, SplitName};
use crate::{io_error, CliError};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const HISTORY_FILE: &str = "history.jsonl";
pub const AFFILIATION_FILE: &str = "affiliation.txt";
pub const COMMUNITIES_FILE: &str = "communities.json";
pub const EXPANSION_LOG_FILE: &str = "expansion_log.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    for r in rows {
        let line = serde_json::to_string(r).expect("record serialises");
        writeln!(out, "{line}").map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("record serialises");
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

/// Wall-clock measurements go to their own file so that every other
/// artifact is a pure function of configuration and seeds.
fn append_timing(dir: &Path, command: &str, stage: &str, seconds: f64) -> Result<(), CliError> {
    let path = dir.join(TIMINGS_FILE);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| io_error(&path, e))?;
    let line = json!({ "command": command, "stage": stage, "seconds": seconds });
    writeln!(file, "{line}").map_err(|e| io_error(&path, e))
}

fn finish(cfg: &RunConfig, command: &str, started: u64, files: &[String]) -> Result<(), CliError> {
    RunManifest::record(&cfg.out, &cfg.hash_hex(), cfg.seed, cfg.split_seed, command, started, files)?;
    Ok(())
}

/// Flat machine-readable metrics record.
pub fn metrics_record(cfg: &RunConfig, split: &str, report: &MetricsReport) -> Value {
    let per_k: BTreeMap<usize, Value> = report
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, json!({ "recall": report.recall[i], "ndcg": report.ndcg[i] })))
        .collect();
    json!({
        "dataset": cfg.dataset,
        "split": split,
        "metrics": per_k,
        "users_evaluated": report.users,
        "seed": cfg.seed,
        "config_hash": cfg.hash_hex(),
    })
}

fn metrics_line(report: &MetricsReport) -> String {
    report
        .ks
        .iter()
        .enumerate()
        .map(|(i, k)| format!("R@{k} {:.4}  N@{k} {:.4}", report.recall[i], report.ndcg[i]))
        .collect::<Vec<_>>()
        .join("  ")
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectSummary {
    pub dataset: String,
    pub users: usize,
    pub communities: usize,
    pub memberships: usize,
    pub leiden_communities: usize,
    pub overlap_histogram: Vec<usize>,
    pub additions: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub modularity: f64,
    pub config_hash: String,
}

fn write_detection(cfg: &RunConfig, prepared: &Prepared, command: &str) -> Result<(DetectSummary, Vec<String>), CliError> {
    let dir = &cfg.out;
    let det = &prepared.detection;
    let aff = det.affiliation();
    aff.save(dir.join(AFFILIATION_FILE))?;
    prepared.dataset.users.save(dir.join("user_ids.txt"))?;
    prepared.dataset.items.save(dir.join("item_ids.txt"))?;
    write_jsonl(&dir.join(EXPANSION_LOG_FILE), &det.expansion.additions)?;
    let summary = DetectSummary {
        dataset: cfg.dataset.clone(),
        users: aff.user_count(),
        communities: aff.community_count(),
        memberships: aff.nnz(),
        leiden_communities: det.partition.community_count(),
        overlap_histogram: aff.overlap_histogram(),
        additions: det.expansion.additions.len(),
        sweeps: det.expansion.sweeps,
        converged: det.expansion.converged,
        modularity: det.partition.modularity(),
        config_hash: cfg.hash_hex(),
    };
    write_json(&dir.join(COMMUNITIES_FILE), &summary)?;
    append_timing(dir, command, "detect", prepared.detect_seconds)?;
    let files = [AFFILIATION_FILE, "user_ids.txt", "item_ids.txt", EXPANSION_LOG_FILE, COMMUNITIES_FILE]
        .map(String::from)
        .to_vec();
    Ok((summary, files))
}

pub fn detect(cfg: &RunConfig, dataset: Dataset) -> Result<DetectSummary, CliError> {
    let started = RunManifest::now();
    ensure_dir(&cfg.out)?;
    let prepared = prepare(dataset, cfg)?;
    let (summary, files) = write_detection(cfg, &prepared, "detect")?;
    println!(
        "communities {}  memberships {}  overlap histogram {:?}  modularity {:.4}  detection {:.2}s",
        summary.communities, summary.memberships, summary.overlap_histogram, summary.modularity, prepared.detect_seconds
    );
    finish(cfg, "detect", started, &files)?;
    Ok(summary)
}

pub fn train(cfg: &RunConfig, dataset: Dataset) -> Result<TrainOutcome, CliError> {
    let started = RunManifest::now();
    ensure_dir(&cfg.out)?;
    let prepared = prepare(dataset, cfg)?;
    let (_, mut files) = write_detection(cfg, &prepared, "train")?;
    let clock = Instant::now();
    let outcome = prepared.train(cfg)?;
    append_timing(&cfg.out, "train", "train", clock.elapsed().as_secs_f64())?;
    let ckpt = Checkpoint {
        layers: cfg.layers,
        config_hash: cfg.hash(),
        params: outcome.params.clone(),
    };
    save_checkpoint(cfg.out.join(CHECKPOINT_FILE), &ckpt)?;
    write_jsonl(&cfg.out.join(HISTORY_FILE), &outcome.history)?;
    println!("{:>5} {:>12} {:>10} {:>10} {:>12} {:>10}", "epoch", "total", "l_rec", "l_ssl", "val R@20", "val N@20");
    for r in &outcome.history {
        println!(
            "{:>5} {:>12.4} {:>10.4} {:>10.4} {:>12.4} {:>10.4}",
            r.epoch, r.total, r.l_rec, r.l_ssl, r.val_recall20, r.val_ndcg20
        );
    }
    println!("best epoch {} (val NDCG@20 {:.4})", outcome.best_epoch, outcome.best_ndcg20);
    files.extend([CHECKPOINT_FILE, HISTORY_FILE].map(String::from));
    finish(cfg, "train", started, &files)?;
    Ok(outcome)
}

pub fn report_file(split: SplitName) -> String {
    format!("report_{}.jsonl", split.as_str())
}

pub fn eval(cfg: &RunConfig, dataset: Dataset, checkpoint: Option<&Path>, split: SplitName) -> Result<MetricsReport, CliError> {
    let started = RunManifest::now();
    ensure_dir(&cfg.out)?;
    let path: PathBuf = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join(CHECKPOINT_FILE));
    let ckpt = load_checkpoint(&path)?;
    if ckpt.config_hash != cfg.hash() {
        return Err(CliError::Data(format!(
            "checkpoint {} was trained under config {}, current config is {}",
            path.display(),
            hex::encode(ckpt.config_hash),
            cfg.hash_hex()
        )));
    }
    if ckpt.layers != cfg.layers {
        return Err(CliError::Data(format!("checkpoint has {} layers, config {}", ckpt.layers, cfg.layers)));
    }
    let prepared = prepare(dataset, cfg)?;
    let report = prepared.evaluate(&ckpt.params, cfg, split, None)?;
    let file = report_file(split);
    write_jsonl(&cfg.out.join(&file), &[metrics_record(cfg, split.as_str(), &report)])?;
    println!("{} ({} users): {}", split.as_str(), report.users, metrics_line(&report));
    finish(cfg, "eval", started, &[file])?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    ColdStart,
    Noise,
    Degree,
    Params,
}

impl std::str::FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "coldstart" => Ok(ExperimentKind::ColdStart),
            "noise" => Ok(ExperimentKind::Noise),
            "degree" => Ok(ExperimentKind::Degree),
            "params" => Ok(ExperimentKind::Params),
            _ => Err(CliError::Usage(format!(
                "unknown experiment {s:?} (expected coldstart, noise, degree or params)"
            ))),
        }
    }
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ColdStart => "coldstart",
            ExperimentKind::Noise => "noise",
            ExperimentKind::Degree => "degree",
            ExperimentKind::Params => "params",
        }
    }
}

pub fn experiment_file(kind: ExperimentKind) -> String {
    format!("experiment_{}.jsonl", kind.as_str())
}

/// Runs one protocol end to end and returns its report rows.
pub fn experiment(cfg: &RunConfig, dataset: Dataset, kind: ExperimentKind) -> Result<Vec<Value>, CliError> {
    let started = RunManifest::now();
    ensure_dir(&cfg.out)?;
    let prepared = prepare(dataset, cfg)?;
    let rows = match kind {
        ExperimentKind::ColdStart => coldstart_rows(cfg, &prepared)?,
        ExperimentKind::Noise => noise_rows(cfg, &prepared)?,
        ExperimentKind::Degree => degree_rows(cfg, &prepared)?,
        ExperimentKind::Params => vec![serde_json::to_value(param_report(cfg, &prepared)).expect("serialises")],
    };
    let file = experiment_file(kind);
    write_jsonl(&cfg.out.join(&file), &rows)?;
    for r in &rows {
        println!("{r}");
    }
    finish(cfg, kind.as_str(), started, &[file])?;
    Ok(rows)
}

fn coldstart_rows(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<Value>, CliError> {
    let cs = make_coldstart_split(&prepared.split, cfg.coldstart_count, cfg.seed)?;
    log::info!("cold-start: {} users, {} train interactions removed", cs.users.len(), cs.removed);
    let reduced = prepared.with_split(cs.split.clone());
    let mut rows = Vec::new();
    for (name, run) in [("community", cfg.clone()), ("lightgcn", cfg.as_baseline())] {
        let outcome = reduced.train(&run)?;
        let report = reduced.evaluate(&outcome.params, &run, SplitName::Test, Some(&cs.users))?;
        println!("{name:>8} cold-start {}", metrics_line(&report));
        let mut rec = metrics_record(&run, "test", &report);
        rec["model"] = json!(name);
        rec["coldstart_users"] = json!(cs.users.len());
        rec["removed_interactions"] = json!(cs.removed);
        rows.push(rec);
    }
    Ok(rows)
}

fn noise_rows(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<Value>, CliError> {
    let clean = if cfg.noise_zero_shot {
        Some(prepared.train(cfg)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &ratio in &cfg.noise_ratios {
        let noisy = inject_social_noise(&prepared.dataset.social, ratio, cfg.seed)?;
        let report = match &clean {
            Some(outcome) => {
                // keep the clean communities so parameter rows stay aligned
                let mut swapped = prepared.clone();
                swapped.dataset = prepared.dataset.with_social(noisy);
                swapped.evaluate(&outcome.params, cfg, SplitName::Test, None)?
            }
            None => {
                let again = prepare(prepared.dataset.with_social(noisy), cfg)?;
                let outcome = again.train(cfg)?;
                again.evaluate(&outcome.params, cfg, SplitName::Test, None)?
            }
        };
        println!("noise {ratio:>5.2} {}", metrics_line(&report));
        let mut rec = metrics_record(cfg, "test", &report);
        rec["noise_ratio"] = json!(ratio);
        rec["retrained"] = json!(!cfg.noise_zero_shot);
        rows.push(rec);
    }
    Ok(rows)
}

fn degree_rows(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<Value>, CliError> {
    let outcome = prepared.train(cfg)?;
    let per_user = prepared.per_user(&outcome.params, cfg, SplitName::Test)?;
    let users: Vec<u32> = per_user.iter().map(|r| r.user).collect();
    let groups = degree_groups(&prepared.split.train, &users);
    let reports = degree_group_eval(&cfg.ks, &per_user, &groups);
    let labels = ["0-25", "25-50", "50-75", "75-100"];
    let mut rows = Vec::new();
    for (b, report) in reports.iter().enumerate() {
        let mut rec = match report {
            Some(r) => {
                println!("bucket {:>6} (deg <= {:>4}) {}", labels[b], groups.upper[b], metrics_line(r));
                metrics_record(cfg, "test", r)
            }
            None => {
                println!("bucket {:>6} empty", labels[b]);
                json!({ "dataset": cfg.dataset, "split": "test", "absent": true, "config_hash": cfg.hash_hex() })
            }
        };
        rec["bucket"] = json!(labels[b]);
        rec["upper_degree"] = json!(groups.upper[b]);
        rows.push(rec);
    }
    Ok(rows)
}

fn param_report(cfg: &RunConfig, prepared: &Prepared) -> ParamReport {
    let communities = prepared.detection.affiliation().community_count();
    count_parameters(prepared.dataset.users.len(), prepared.dataset.items.len(), cfg.dim, cfg.hidden, communities)
}

/// Parameter census for the configured dataset; needs detection only.
pub fn params(cfg: &RunConfig, dataset: Dataset) -> Result<ParamReport, CliError> {
    let started = RunManifest::now();
    ensure_dir(&cfg.out)?;
    let prepared = prepare(dataset, cfg)?;
    let report = param_report(cfg, &prepared);
    write_json(&cfg.out.join("params.json"), &report)?;
    println!("{:<10} {:>12} {:>12} {:>12}", "model", "user-side", "item-side", "total");
    println!(
        "{:<10} {:>12} {:>12} {:>12}",
        "community", report.model_user_side, report.model_item_side, report.model_total
    );
    println!(
        "{:<10} {:>12} {:>12} {:>12}",
        "lightgcn", report.lightgcn_user_side, report.lightgcn_item_side, report.lightgcn_total
    );
    println!(
        "user-side reduction {:.1}x, total reduction {:.1}%",
        report.user_side_ratio,
        100.0 * report.total_reduction
    );
    finish(cfg, "params", started, &["params.json".into()])?;
    Ok(report)
}

/// Writes a dataset's edge lists in the input file format.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(PathBuf, PathBuf), CliError> {
    ensure_dir(dir)?;
    let inter = dir.join("interactions.txt");
    let social = dir.join("social.txt");
    write_edge_list(&inter, &dataset.interactions)?;
    write_edge_list(&social, &dataset.social.to_edge_list())?;
    Ok((inter, social))
}
