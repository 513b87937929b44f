//! Full-ranking evaluation and the experiment protocols built on it.

mod metrics;
mod protocols;
mod ranking;

pub use metrics::{ndcg_at_k, recall_at_k, MetricsReport, UserMetrics, DEFAULT_KS};
pub use protocols::{
    count_parameters, degree_group_eval, degree_groups, inject_social_noise, make_coldstart_split, ColdStart,
    DegreeGroups, ParamReport,
};
pub use ranking::{evaluate, evaluate_embeddings, per_user_metrics, top_k, uniform_random_ndcg};
