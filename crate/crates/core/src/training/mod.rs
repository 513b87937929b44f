//! Losses, analytic gradients, Adam and the training loop.

mod adam;
mod backward;
mod init;
mod loss;
mod sampler;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward, draw_views, total_loss, Gradients, LossBreakdown, SslViews, StepContext};
pub use init::xavier_init;
pub use loss::{bpr_loss, infonce_loss, infonce_with_grad, l2_penalty, softplus, LossConfig};
pub use sampler::{sample_triplets, TripletBatch};
pub use trainer::{train, train_from, EpochRecord, TrainConfig, TrainData, TrainOutcome};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Sampling = 1,
    FirstView = 2,
    SecondView = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
