//! Acceptance criteria, one test per criterion. Each prints a single
//! `acceptance <id> PASS|FAIL` line to stderr (bypassing output capture).
//!
//! Criteria that need the Douban-Book, Yelp and Epinions files are ignored by
//! default; run them with `SOCGCF_DATA_DIR=<dir> cargo test --release
//! -p socgcf-cli --test acceptance -- --ignored`, where `<dir>/<dataset>/`
//! holds `interactions.txt` and `social.txt`.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socgcf::community::{
    ensure_coverage, expand_affiliation, leiden_partition, leiden_with_trace, AffiliationMatrix, Partition,
};
use socgcf::eval::{count_parameters, evaluate_embeddings, ndcg_at_k, recall_at_k, uniform_random_ndcg};
use socgcf::graph::{build_interaction_graph, build_social_graph, EdgeKind, EdgeList, SocialGraph};
use socgcf::model::{sia_state, ModelConfig, ModelInputs, ModelParameters};
use socgcf::synthetic::{planted_dataset, toy_instance, PlantedConfig};
use socgcf::training::{
    backward, draw_views, sample_triplets, stream_rng, total_loss, LossConfig, StepContext, Stream,
};
use socgcf::Parallelism;
use socgcf_cli::commands::{self, ExperimentKind};
use socgcf_cli::config::RunConfig;
use socgcf_cli::pipeline::{prepare, Dataset, SplitName};

fn verdict(id: &str, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {id:<3} {} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{line}");
}

fn social(n: usize, pairs: &[(u32, u32)]) -> SocialGraph {
    build_social_graph(&EdgeList::new(EdgeKind::Social, pairs.iter().copied()), n).unwrap()
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SocialGraph {
    let mut pairs = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen::<f64>() < p {
                pairs.push((a, b));
            }
        }
    }
    social(n, &pairs)
}

// ---------------------------------------------------------------- 1

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gradient_instance(seed: u64, layers: usize, ssl_weight: f64) -> f64 {
    let toy = toy_instance(10, 15, 4, 1000 + seed).unwrap();
    let model = ModelConfig { dim: 4, hidden: 4, layers, ..ModelConfig::default() };
    let loss = LossConfig {
        ssl_weight,
        l2_weight: 1e-3,
        no_ssl: ssl_weight == 0.0,
        ..LossConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ModelParameters::xavier(4, 15, &model, &mut rng);
    let inputs = ModelInputs { train: &toy.train, norm: &toy.norm, social: &toy.social };
    let ctx = StepContext {
        inputs,
        affiliation: &toy.affiliation,
        model: &model,
        loss: &loss,
        par: Parallelism::Sequential,
    };
    let batch = sample_triplets(&toy.train, 40, &mut rng).unwrap();
    // fixed mask draws shared by every evaluation
    let views = draw_views(
        &toy.affiliation,
        0.2,
        &mut stream_rng(seed, Stream::FirstView),
        &mut stream_rng(seed, Stream::SecondView),
    );
    // frozen social-branch intermediates
    let frozen = Arc::new(sia_state(&params.items, inputs, &model, Parallelism::Sequential));
    let (_, grads) = backward(&params, &batch, ctx, Some(&views), Some(frozen.clone())).unwrap();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for t in 0..4 {
        let analytic = grads.tensors()[t];
        let mut numeric = Array2::zeros(analytic.dim());
        let cols = analytic.ncols();
        for idx in 0..analytic.len() {
            let (r, c) = (idx / cols, idx % cols);
            let at = |delta: f64| {
                let mut p = params.clone();
                p.tensors_mut()[t][[r, c]] += delta;
                total_loss(&p, &batch, ctx, Some(&views), Some(frozen.clone())).unwrap().total
            };
            numeric[[r, c]] = (at(h) - at(-h)) / (2.0 * h);
        }
        let scale = frob(analytic).max(frob(&numeric));
        let err = if scale < 1e-12 { 0.0 } else { frob(&(analytic - &numeric)) / scale };
        worst = worst.max(err);
    }
    worst
}

#[test]
fn criterion_01_gradient_oracle() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..24u64 {
        let layers = (seed % 3) as usize;
        let ssl = if (seed / 3) % 2 == 0 { 0.0 } else { 0.3 };
        worst = worst.max(gradient_instance(seed, layers, ssl));
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "1",
        "gradient oracle",
        worst < 1e-4 && secs < 10.0,
        &format!("{count} instances, L in 0..=2, ssl in {{0, 0.3}}, worst relative error {worst:.2e} (< 1e-4), {secs:.2}s"),
    );
}

// ---------------------------------------------------------------- 2

fn brute_recall(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> f64 {
    let top: HashSet<u32> = ranked.iter().take(k).copied().collect();
    top.intersection(relevant).count() as f64 / relevant.len() as f64
}

fn brute_ndcg(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for rank in 1..=k.min(ranked.len()) {
        if relevant.contains(&ranked[rank - 1]) {
            dcg += 1.0 / (rank as f64 + 1.0).log2();
        }
    }
    let mut idcg = 0.0;
    for rank in 1..=k.min(relevant.len()) {
        idcg += 1.0 / (rank as f64 + 1.0).log2();
    }
    dcg / idcg
}

#[test]
fn criterion_02_metric_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(5..60u32);
        let mut items: Vec<u32> = (0..n).collect();
        items.shuffle(&mut rng);
        let ranked_len = rng.gen_range(1..=n as usize);
        let ranked = &items[..ranked_len];
        let rel_count = rng.gen_range(1..=n as usize);
        let mut relevant: Vec<u32> = (0..n).collect::<Vec<_>>().choose_multiple(&mut rng, rel_count).copied().collect();
        relevant.sort_unstable();
        let set: HashSet<u32> = relevant.iter().copied().collect();
        let k = rng.gen_range(1..=n as usize);
        worst = worst
            .max((recall_at_k(ranked, &relevant, k) - brute_recall(ranked, &set, k)).abs())
            .max((ndcg_at_k(ranked, &relevant, k) - brute_ndcg(ranked, &set, k)).abs());
    }

    // uniform-zero scores rank by ascending id after excluding train items
    let train = build_interaction_graph(&EdgeList::new(EdgeKind::Interaction, [(0, 0), (0, 3), (1, 1)]), 2, 12).unwrap();
    let test = EdgeList::new(EdgeKind::Interaction, [(0, 2), (0, 9), (1, 0), (1, 11)]);
    let report = evaluate_embeddings(
        &Array2::zeros((2, 3)),
        &Array2::zeros((12, 3)),
        &train,
        &test,
        &[3, 10],
        None,
        Parallelism::Sequential,
    )
    .unwrap();
    let rank0: Vec<u32> = vec![1, 2, 4, 5, 6, 7, 8, 9, 10, 11];
    let rank1: Vec<u32> = vec![0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
    let rel0: HashSet<u32> = [2, 9].into();
    let rel1: HashSet<u32> = [0, 11].into();
    for (i, &k) in [3usize, 10].iter().enumerate() {
        let r = (brute_recall(&rank0, &rel0, k) + brute_recall(&rank1, &rel1, k)) / 2.0;
        let g = (brute_ndcg(&rank0, &rel0, k) + brute_ndcg(&rank1, &rel1, k)) / 2.0;
        worst = worst.max((report.recall[i] - r).abs()).max((report.ndcg[i] - g).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "2",
        "metric oracle",
        worst <= 1e-12 && secs < 1.0,
        &format!("1000 random rankings + zero-score ranking, max deviation {worst:.1e} (<= 1e-12), {secs:.3}s"),
    );
}

// ---------------------------------------------------------------- 3

/// Independent evaluation of the membership test for `u` joining `c`.
fn sides(g: &SocialGraph, rows: &[Vec<u32>], u: usize, c: u32, theta: f64) -> (f64, f64) {
    let linked = g.neighbors(u).iter().filter(|&&w| rows[w as usize].contains(&c)).count();
    let vol: usize = (0..rows.len()).filter(|&w| rows[w].contains(&c)).map(|w| g.degree(w)).sum();
    let total: usize = (0..rows.len()).map(|w| g.degree(w)).sum();
    (linked as f64 / g.degree(u) as f64, theta * vol as f64 / total as f64)
}

fn candidates(g: &SocialGraph, rows: &[Vec<u32>], u: usize) -> Vec<u32> {
    let mut out: Vec<u32> = g
        .neighbors(u)
        .iter()
        .flat_map(|&w| rows[w as usize].iter().copied())
        .filter(|c| !rows[u].contains(c))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[test]
fn criterion_03_overlap_expansion_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut additions = 0;
    for graph in 0..50 {
        let n = rng.gen_range(10..=100);
        let p = rng.gen_range(0.03..0.25);
        let g = random_graph(n, p, &mut rng);
        let part = ensure_coverage(&leiden_partition(&g, 1.0, graph), n);
        let start_aff = AffiliationMatrix::from_partition(&part);
        let theta = rng.gen_range(0.2..2.0);
        let exp = expand_affiliation(&start_aff, &g, theta);
        additions += exp.additions.len();

        // replay
        let mut rows: Vec<Vec<u32>> = start_aff.rows().to_vec();
        for a in &exp.additions {
            let u = a.user as usize;
            let (lhs, rhs) = sides(&g, &rows, u, a.community, theta);
            let is_candidate = candidates(&g, &rows, u).contains(&a.community);
            if !(lhs > rhs) || !is_candidate || (lhs - a.lhs).abs() > 1e-12 || (rhs - a.rhs).abs() > 1e-12 {
                failures.push(format!("graph {graph}: invalid addition {a:?}"));
            }
            rows[u].push(a.community);
        }
        let replayed: Vec<Vec<u32>> = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r
            })
            .collect();
        if replayed != exp.affiliation.rows() {
            failures.push(format!("graph {graph}: replay differs from output"));
        }
        // fixed point
        let out = exp.affiliation.rows();
        for u in (0..n).filter(|&u| g.degree(u) > 0) {
            for c in candidates(&g, out, u) {
                let (lhs, rhs) = sides(&g, out, u, c, theta);
                if lhs > rhs {
                    failures.push(format!("graph {graph}: user {u} could still join {c}"));
                }
            }
        }
        if !expand_affiliation(&exp.affiliation, &g, theta).additions.is_empty() {
            failures.push(format!("graph {graph}: rerun adds memberships"));
        }
        // unbounded threshold
        let inf = expand_affiliation(&start_aff, &g, f64::INFINITY);
        if inf.affiliation != start_aff || !inf.additions.is_empty() {
            failures.push(format!("graph {graph}: infinite threshold changed memberships"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "3",
        "overlap expansion oracle",
        failures.is_empty() && additions > 0 && secs < 10.0,
        &format!(
            "50 graphs, {additions} replayed additions, {} violations{}, {secs:.2}s",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

// ---------------------------------------------------------------- 4

fn brute_modularity(g: &SocialGraph, labels: &[usize]) -> f64 {
    let m = g.edge_count() as f64;
    let k = labels.iter().max().map_or(0, |x| x + 1);
    let mut inside = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for u in 0..labels.len() {
        vol[labels[u]] += g.degree(u) as f64;
        for &v in g.neighbors(u) {
            if labels[v as usize] == labels[u] {
                inside[labels[u]] += 0.5;
            }
        }
    }
    (0..k).map(|c| inside[c] / m - (vol[c] / (2.0 * m)).powi(2)).sum()
}

/// All set partitions of `0..n` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur[i] = l;
            rec(i + 1, max.max(l), cur, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut cur, &mut out);
    }
    out
}

fn same_partition(a: &Partition, b: &[usize]) -> bool {
    let la: Vec<u32> = a.assignment().iter().map(|x| x.unwrap()).collect();
    (0..b.len()).all(|i| (0..b.len()).all(|j| (la[i] == la[j]) == (b[i] == b[j])))
}

#[test]
fn criterion_04_leiden_sanity() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let toys = [
        ("two triangles", social(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])),
        ("K4", social(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])),
    ];
    for (name, g) in &toys {
        let all = set_partitions(g.user_count());
        let best = all
            .iter()
            .map(|p| brute_modularity(g, p))
            .fold(f64::NEG_INFINITY, f64::max);
        let maximisers: Vec<&Vec<usize>> = all
            .iter()
            .filter(|p| (brute_modularity(g, p) - best).abs() < 1e-12)
            .collect();
        let found = leiden_partition(g, 1.0, 7);
        let matches = maximisers.iter().any(|p| same_partition(&found, p));
        ok &= matches && (found.modularity() - best).abs() < 1e-12;
        notes.push(format!(
            "{name}: {} partitions, best Q {best:.4}, found Q {:.4} with {} communities",
            all.len(),
            found.modularity(),
            found.community_count()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut drops = 0;
    for seed in 0..20 {
        let g = random_graph(50, 0.1, &mut rng);
        let (part, trace) = leiden_with_trace(&g, 1.0, seed);
        let mut prev = f64::NEG_INFINITY;
        for rec in &trace {
            if rec.modularity < prev - 1e-12 {
                drops += 1;
            }
            prev = rec.modularity;
        }
        let labels: Vec<usize> = part.assignment().iter().map(|x| x.map_or(usize::MAX, |c| c as usize)).collect();
        let singles: Vec<usize> = (0..50).collect();
        let covered = labels.iter().all(|&l| l != usize::MAX) || (0..50).any(|u| g.degree(u) == 0);
        if !covered || part.modularity() + 1e-12 < brute_modularity(&g, &singles) || trace.is_empty() {
            drops += 1;
        }
    }
    ok &= drops == 0;
    let secs = start.elapsed().as_secs_f64();
    notes.push(format!("20 random 50-node traces, {drops} decreases"));
    verdict("4", "leiden sanity", ok && secs < 30.0, &format!("{}; {secs:.2}s", notes.join("; ")));
}

// ---------------------------------------------------------------- 5

const BENCHMARKS: [(&str, usize, usize); 3] =
    [("douban-book", 13_024, 22_347), ("yelp", 19_539, 22_228), ("epinions", 18_202, 47_449)];

#[test]
fn criterion_05_parameter_census() {
    let douban = count_parameters(13_024, 22_347, 64, 64, 1);
    let mut ok = douban.lightgcn_total == 2_263_744;
    let mut notes = vec![format!("Douban-Book LightGCN total {}", douban.lightgcn_total)];
    for (name, m, n) in BENCHMARKS {
        let r = count_parameters(m, n, 64, 64, 500);
        ok &= r.lightgcn_total == (m + n) * 64;
        ok &= r.model_user_side == 500 * 64 + 2 * 64 * 64 + 64;
        let doubled = count_parameters(2 * m, n, 64, 64, 500);
        ok &= doubled.model_user_side == r.model_user_side && doubled.lightgcn_user_side == 2 * r.lightgcn_user_side;
        notes.push(format!("{name} (m+n)d = {}", r.lightgcn_total));
    }
    notes.push("user-side count unchanged when m doubles".into());
    notes.push("per-dataset >= 10x reduction needs detected |C|: see 5b (ignored, dataset files)".into());
    verdict("5", "parameter census", ok, &notes.join("; "));
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("SOCGCF_DATA_DIR").map(PathBuf::from)
}

/// Config and dataset for one benchmark, or a failure message.
fn benchmark(name: &str) -> Result<(RunConfig, Dataset), String> {
    let dir = data_dir().ok_or("SOCGCF_DATA_DIR is not set; benchmark files are not available")?;
    let mut cfg = RunConfig::preset(name).map_err(|e| e.to_string())?;
    cfg.interactions = Some(dir.join(name).join("interactions.txt"));
    cfg.social = Some(dir.join(name).join("social.txt"));
    cfg.parallel = true;
    cfg.out = std::env::temp_dir().join(format!("socgcf-acceptance-{name}"));
    let dataset = Dataset::load(&cfg).map_err(|e| e.to_string())?;
    Ok((cfg, dataset))
}

#[test]
#[ignore = "needs the benchmark datasets under SOCGCF_DATA_DIR"]
fn criterion_05b_reduction_on_benchmarks() {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, _, _) in BENCHMARKS {
        match benchmark(name) {
            Ok((cfg, dataset)) => {
                let start = Instant::now();
                let prepared = prepare(dataset, &cfg).unwrap();
                let c = prepared.detection.affiliation().community_count();
                let r = count_parameters(prepared.dataset.users.len(), prepared.dataset.items.len(), 64, 64, c);
                let budget = prepared.detect_seconds <= 30.0;
                ok &= r.user_side_ratio >= 10.0 && budget;
                notes.push(format!(
                    "{name}: |C| {c}, user-side reduction {:.1}x, detection {:.1}s ({:.1}s total)",
                    r.user_side_ratio,
                    prepared.detect_seconds,
                    start.elapsed().as_secs_f64()
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    verdict("5b", "user-side reduction >= 10x per benchmark", ok, &notes.join("; "));
}

// ---------------------------------------------------------------- 6

fn smoke_config() -> RunConfig {
    RunConfig {
        dataset: "planted".into(),
        dim: 32,
        hidden: 32,
        batch_size: 256,
        max_epochs: 150,
        patience: 15,
        ..RunConfig::default()
    }
}

#[test]
fn criterion_06_synthetic_smoke() {
    let start = Instant::now();
    let planted = planted_dataset(&PlantedConfig::default());
    let dataset =
        Dataset::from_internal("planted", planted.users, planted.items, planted.interactions, &planted.social).unwrap();
    let cfg = smoke_config();
    let prepared = prepare(dataset, &cfg).unwrap();
    let model = prepared.train(&cfg).unwrap();
    let model_ndcg = prepared.evaluate(&model.params, &cfg, SplitName::Test, None).unwrap().ndcg_at(20).unwrap();
    let base_cfg = cfg.as_baseline();
    let base = prepared.train(&base_cfg).unwrap();
    let base_ndcg = prepared.evaluate(&base.params, &base_cfg, SplitName::Test, None).unwrap().ndcg_at(20).unwrap();
    let random = uniform_random_ndcg(&prepared.split.train, &prepared.split.test, 20);
    let secs = start.elapsed().as_secs_f64();
    let ok = model_ndcg >= 5.0 * random && model_ndcg > base_ndcg && secs < 60.0;
    verdict(
        "6",
        "synthetic end-to-end smoke",
        ok,
        &format!(
            "200 users, {} communities: NDCG@20 {model_ndcg:.4} vs random {random:.4} ({:.1}x, need 5x) vs LightGCN {base_ndcg:.4}; {secs:.1}s",
            prepared.detection.affiliation().community_count(),
            model_ndcg / random
        ),
    );
}

// ---------------------------------------------------------------- 7-9

fn train_and_test(prepared: &socgcf_cli::pipeline::Prepared, cfg: &RunConfig) -> f64 {
    let out = prepared.train(cfg).unwrap();
    prepared.evaluate(&out.params, cfg, SplitName::Test, None).unwrap().ndcg_at(20).unwrap()
}

#[test]
#[ignore = "needs Douban-Book under SOCGCF_DATA_DIR; about 30 minutes"]
fn criterion_07_benchmark_reproduction() {
    match benchmark("douban-book") {
        Ok((cfg, dataset)) => {
            let start = Instant::now();
            let prepared = prepare(dataset, &cfg).unwrap();
            let model = train_and_test(&prepared, &cfg);
            let base = train_and_test(&prepared, &cfg.as_baseline());
            let ok = model >= 0.125 && model >= 1.15 * base;
            verdict(
                "7",
                "Douban-Book reproduction",
                ok,
                &format!(
                    "test NDCG@20 {model:.4} (need >= 0.125), LightGCN {base:.4} (gain {:.1}%, need 15%); {:.0}s",
                    100.0 * (model / base - 1.0),
                    start.elapsed().as_secs_f64()
                ),
            );
        }
        Err(e) => verdict("7", "Douban-Book reproduction", false, &e),
    }
}

#[test]
#[ignore = "needs Douban-Book under SOCGCF_DATA_DIR"]
fn criterion_08_cold_start() {
    match benchmark("douban-book") {
        Ok((cfg, dataset)) => {
            let rows = commands::experiment(&cfg, dataset, ExperimentKind::ColdStart).unwrap();
            let ndcg = |model: &str| {
                rows.iter().find(|r| r["model"] == model).unwrap()["metrics"]["20"]["ndcg"].as_f64().unwrap()
            };
            let (model, base) = (ndcg("community"), ndcg("lightgcn"));
            verdict(
                "8",
                "cold-start advantage",
                model >= 1.5 * base,
                &format!("500 users: NDCG@20 {model:.4} vs LightGCN {base:.4} (need +50%)"),
            );
        }
        Err(e) => verdict("8", "cold-start advantage", false, &e),
    }
}

#[test]
#[ignore = "needs Douban-Book under SOCGCF_DATA_DIR"]
fn criterion_09_noise_robustness() {
    match benchmark("douban-book") {
        Ok((mut cfg, dataset)) => {
            cfg.noise_ratios = vec![0.0, 0.2];
            let rows = commands::experiment(&cfg, dataset, ExperimentKind::Noise).unwrap();
            let clean = rows[0]["metrics"]["20"]["ndcg"].as_f64().unwrap();
            let noisy = rows[1]["metrics"]["20"]["ndcg"].as_f64().unwrap();
            let drop = 1.0 - noisy / clean;
            verdict(
                "9",
                "noise robustness",
                drop <= 0.15,
                &format!("NDCG@20 {clean:.4} -> {noisy:.4} at 20% noise, relative drop {:.1}% (<= 15%)", 100.0 * drop),
            );
        }
        Err(e) => verdict("9", "noise robustness", false, &e),
    }
}

// ---------------------------------------------------------------- 10

fn run_cli(args: &[&str], config: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_socgcf"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "socgcf {args:?} failed with {status}");
}

fn history_without_time(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("seconds");
            v
        })
        .collect()
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let planted = planted_dataset(&PlantedConfig { users: 60, items: 60, groups: 3, ..PlantedConfig::default() });
    let dataset =
        Dataset::from_internal("planted", planted.users, planted.items, planted.interactions, &planted.social).unwrap();
    commands::write_dataset(tmp.path(), &dataset).unwrap();
    let config = tmp.path().join("run.cfg");
    std::fs::write(
        &config,
        "interactions = interactions.txt\nsocial = social.txt\ndim = 8\nhidden = 8\nbatch_size = 64\nmax_epochs = 4\ncoldstart_count = 10\nnoise_ratios = 0, 0.2\n",
    )
    .unwrap();
    let steps: [&[&str]; 7] = [
        &["detect"],
        &["train"],
        &["eval", "--split", "val"],
        &["eval", "--split", "test"],
        &["experiment", "degree"],
        &["experiment", "coldstart"],
        &["params"],
    ];
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        for s in &steps {
            run_cli(s, &config, dir);
        }
    }
    let compared = [
        "affiliation.txt",
        "user_ids.txt",
        "item_ids.txt",
        "communities.json",
        "expansion_log.jsonl",
        "checkpoint.bin",
        "report_val.jsonl",
        "report_test.jsonl",
        "experiment_degree.jsonl",
        "experiment_coldstart.jsonl",
        "params.json",
    ];
    let mut diffs: Vec<String> = compared
        .iter()
        .filter(|f| std::fs::read(dirs[0].join(f)).unwrap() != std::fs::read(dirs[1].join(f)).unwrap())
        .map(|f| f.to_string())
        .collect();
    if history_without_time(&dirs[0].join("history.jsonl")) != history_without_time(&dirs[1].join("history.jsonl")) {
        diffs.push("history.jsonl".into());
    }
    let report_a = std::fs::read(dirs[0].join("report_test.jsonl")).unwrap();
    run_cli(&["eval", "--split", "test"], &config, &dirs[0]);
    if std::fs::read(dirs[0].join("report_test.jsonl")).unwrap() != report_a {
        diffs.push("regenerated report_test.jsonl".into());
    }
    // the thread pool must not change results either
    let par = tmp.path().join("par");
    run_cli(&["train", "--parallel"], &config, &par);
    if std::fs::read(par.join("checkpoint.bin")).unwrap() != std::fs::read(dirs[0].join("checkpoint.bin")).unwrap() {
        diffs.push("parallel checkpoint.bin".into());
    }
    let verify = Command::new(env!("CARGO_BIN_EXE_socgcf"))
        .args(["detect", "--verify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&dirs[1])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    if !verify.success() {
        diffs.push("manifest verification".into());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "10",
        "determinism",
        diffs.is_empty(),
        &format!(
            "{} artifacts + history across two runs, report regeneration, parallel checkpoint, manifest verify; differing: {:?}; {secs:.1}s",
            compared.len(),
            diffs
        ),
    );
}
