//! Contrastive fine-tuning: InfoNCE with in-batch or mined negatives, a
//! warmup/decay schedule, masked Adam and the four adaptation schedules.

mod loss;
mod mining;
mod optimizer;
mod schedule;
mod trainer;

pub use loss::{info_nce_loss, InfoNceOutput};
pub use mining::{
    mine_negatives, read_triplets_jsonl, write_triplets_jsonl, MiningStrategy, TripletRecord,
    DEFAULT_NEGATIVES,
};
pub use optimizer::{Adam, AdamConfig};
pub use schedule::{lr_at_step, lr_at_step_with, warmup_steps, DecayShape, DEFAULT_WARMUP_FRACTION};
pub use trainer::{
    batch_loss_and_gradients, run_training, run_training_with, EpochEval, EpochRecord, NegativeMode,
    TrainConfig, TrainData, TrainExample, TrainHooks, TrainReport, DEFAULT_PHASE1_FRACTION,
    DEFAULT_TAU,
};
