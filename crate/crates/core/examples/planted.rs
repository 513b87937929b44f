//! Trains the community model and the per-user LightGCN baseline on a
//! planted-community dataset and prints test NDCG@20 for both.
//!
//! `cargo run --release -p socgcf --example planted [seed]`

use socgcf::community::{detect_communities, AffiliationMatrix};
use socgcf::eval::{evaluate, uniform_random_ndcg};
use socgcf::graph::{build_social_graph, split_interactions, sym_norm_weights, SplitMode};
use socgcf::model::{ModelConfig, ModelInputs};
use socgcf::synthetic::{planted_dataset, PlantedConfig};
use socgcf::training::{train, LossConfig, TrainConfig, TrainData};
use socgcf::Parallelism;

fn main() -> socgcf::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let planted = planted_dataset(&PlantedConfig { seed, ..PlantedConfig::default() });
    let split = split_interactions(&planted.interactions, planted.users, planted.items, (0.6, 0.2, 0.2), seed, SplitMode::Global)?;
    let social = build_social_graph(&planted.social, planted.users)?;
    let norm = sym_norm_weights(&split.train);
    let detection = detect_communities(&social, 1.0, 1.5, seed);
    let inputs = ModelInputs { train: &split.train, norm: &norm, social: &social };
    println!(
        "{} users, {} communities, random ranker NDCG@20 {:.4}",
        planted.users,
        detection.affiliation().community_count(),
        uniform_random_ndcg(&split.train, &split.test, 20)
    );
    let identity = AffiliationMatrix::identity(planted.users);
    for (name, affiliation, baseline) in [("community", detection.affiliation(), false), ("lightgcn", &identity, true)] {
        let model = ModelConfig { dim: 32, hidden: if baseline { 0 } else { 32 }, no_sia: baseline, ..ModelConfig::default() };
        let cfg = TrainConfig {
            model: model.clone(),
            loss: LossConfig { no_ssl: baseline, ..LossConfig::default() },
            batch_size: 256,
            max_epochs: 150,
            ..TrainConfig::default()
        };
        let outcome = train(TrainData { inputs, affiliation, val: &split.val }, &cfg)?;
        let report = evaluate(&outcome.params, inputs, affiliation, &model, &split.test, &[20], None, Parallelism::Sequential)?;
        println!("{name:>10}: best epoch {:>3}, test NDCG@20 {:.4}", outcome.best_epoch, report.ndcg[0]);
    }
    Ok(())
}
