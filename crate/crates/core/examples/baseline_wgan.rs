//! The single-stage baseline: a WGAN whose generator maps noise straight to
//! a series. With `--clip` the critic is held Lipschitz by weight clipping
//! instead of the gradient penalty.
//!
//! `cargo run --release --example baseline_wgan -- [--clip]`

use tsgan::gan::{train_baseline_class, TsganConfig};
use tsgan::signal::{toy_sine_square, working_length};

fn main() {
    let clip = std::env::args().any(|a| a == "--clip");
    let mut cfg = TsganConfig {
        width: 8,
        steps: Some(300),
        ..TsganConfig::default()
    };
    cfg.adam.alpha = 1e-3;
    cfg.adam.beta1 = 0.5;
    if clip {
        cfg.lambda = 0.0;
        cfg.clip = Some(0.1);
    }

    let raw = toy_sine_square(30, 64, 0);
    let ds = raw.standardized(working_length(raw.signal_length, &cfg.stft));
    for class in 0..ds.class_count {
        let (model, outcome) = train_baseline_class(&ds, class, &cfg).unwrap();
        let last = outcome.log.records.last().and_then(|r| r.series.clone()).unwrap();
        println!(
            "{}: final critic loss {:.3}, W estimate {:.3}, generator loss {:.3}",
            ds.label_names[class], last.critic_loss, last.wasserstein, last.generator_loss
        );
        let sample = &model.sample(1, 7).unwrap()[0];
        let shown: Vec<String> = sample.iter().step_by(4).map(|v| format!("{v:+.2}")).collect();
        println!("  {}", shown.join(" "));
    }
}
