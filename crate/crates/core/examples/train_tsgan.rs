//! Trains the two-stage model on the sine class of the toy set and prints
//! the loss trajectory and a few generated series.
//!
//! `cargo run --release --example train_tsgan -- [steps]` (default 200).

use tsgan::gan::{train_tsgan_class, TsganConfig};
use tsgan::signal::{toy_sine_square, working_length};

fn main() {
    let steps: u64 = std::env::args().nth(1).map_or(200, |s| s.parse().expect("steps must be an integer"));
    let mut cfg = TsganConfig {
        width: 8,
        steps: Some(steps),
        ..TsganConfig::default()
    };
    cfg.adam.alpha = 1e-3;
    cfg.adam.beta1 = 0.5;

    let raw = toy_sine_square(30, 64, 0);
    let ds = raw.standardized(working_length(raw.signal_length, &cfg.stft));
    let (model, outcome) = train_tsgan_class(&ds, 0, &cfg).unwrap();
    if let Some(reason) = &outcome.aborted {
        println!("training stopped early: {reason}");
    }

    println!("{:>5}  {:>9} {:>9}  {:>9} {:>9}", "step", "W stage1", "|∇| st.1", "W stage2", "|∇| st.2");
    let every = (steps as usize / 10).max(1);
    for r in outcome.log.records.iter().step_by(every) {
        let (s1, s2) = (r.spectrogram.as_ref().unwrap(), r.series.as_ref().unwrap());
        println!(
            "{:>5}  {:>9.3} {:>9.3}  {:>9.3} {:>9.3}",
            r.step,
            s1.wasserstein,
            s1.grad_norm.unwrap_or(f32::NAN),
            s2.wasserstein,
            s2.grad_norm.unwrap_or(f32::NAN)
        );
    }

    for (i, s) in model.sample(3, 1).unwrap().iter().enumerate() {
        let shown: Vec<String> = s.iter().step_by(4).map(|v| format!("{v:+.2}")).collect();
        println!("sample {i}: {}", shown.join(" "));
    }
}
