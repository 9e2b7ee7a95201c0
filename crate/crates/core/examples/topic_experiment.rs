//! Trains the desk-scale encoder on the synthetic topic corpus and prints the
//! per-epoch nDCG@10 curve.

use std::collections::BTreeSet;

use chembed_core::encoder::{init_encoder, AdaptationVariant, DEFAULT_DIM};
use chembed_core::topics::{generate_topic_corpus, TopicCorpusConfig};
use chembed_core::train::{run_training_with, TrainConfig, TrainData, TrainHooks};

fn main() -> chembed_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let peak_lr: f64 = args.get(1).map_or(Ok(1e-2), |s| s.parse()).expect("peak lr");
    let epochs: usize = args.get(2).map_or(Ok(30), |s| s.parse()).expect("epochs");
    let topics = generate_topic_corpus(&TopicCorpusConfig::default())?;
    let params = init_encoder(topics.vocab.len(), DEFAULT_DIM, 7, &BTreeSet::new())?;
    let data = TrainData::from_pairs(&topics.vocab, &topics.train_pairs);
    let config = TrainConfig { batch_size: 64, epochs, peak_lr, seed: 7, ..TrainConfig::default() };
    let mut print = |r: &chembed_core::train::EpochRecord| {
        println!("epoch {:3} loss {:.4} ndcg@10 {:.4}", r.epoch, r.loss_mean, r.eval.unwrap().ndcg_at_10);
    };
    let hooks = TrainHooks {
        eval: Some((&topics.vocab, &topics.eval)),
        on_epoch: Some(&mut print),
        ..TrainHooks::default()
    };
    let (_, report) = run_training_with(params, AdaptationVariant::Vanilla, &data, &config, hooks)?;
    println!("initial ndcg@10 {:.4}", report.initial_eval.unwrap().ndcg_at_10);
    Ok(())
}
