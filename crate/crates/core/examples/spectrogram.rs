//! Turns a sine and a square wave into the three-channel spectrogram images
//! the first stage generates, and prints one channel of each as a heat map.

use tsgan::signal::{stft_spectrogram, toy_sine_square, StftConfig};

const SHADES: &[u8] = b" .:-=+*#%@";

fn main() {
    let cfg = StftConfig::default();
    let ds = toy_sine_square(2, 128, 5);
    for row in ds.signals.iter().take(2) {
        let image = stft_spectrogram(&row.values, &cfg).unwrap();
        println!("{} -> image {:?}", ds.label_names[row.label], image.shape());
        // Channels are identical copies; show the first, low frequencies at the bottom.
        for bin in (0..image.height).rev().step_by(2) {
            let line: String = (0..image.width)
                .map(|frame| {
                    let v = image.at(0, bin, frame);
                    SHADES[((v * (SHADES.len() - 1) as f32).round() as usize).min(SHADES.len() - 1)] as char
                })
                .collect();
            println!("  {bin:>2} |{line}|");
        }
    }
}
