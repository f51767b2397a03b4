//! Scratch: top v-axis spectral bins of the raw synth image vs its upscale.

use scalegate::detect::spectrum;
use scalegate::resize::{resize, ResizePolicy, ScaleSpec};
use scalegate::synth::synth_image;

fn top_axis_bins(label: &str, img: &scalegate::Image) {
    let spec = spectrum(img);
    let h = spec.height() as i32;
    let mut bins: Vec<(i32, f64)> = (4..h / 2 - 1)
        .map(|dv| (dv, spec.magnitude_at(0, dv).unwrap()))
        .collect();
    bins.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut med: Vec<f64> = bins.iter().map(|b| b.1).collect();
    let mid = med.len() / 2;
    med.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    println!("{label}: median axis mag {:.1}", med[mid]);
    for (dv, m) in bins.iter().take(10) {
        println!("   v-bin {dv:5} mag {m:14.1}  (rel {:8.1})", m / med[mid]);
    }
}

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(57);
    let raw = synth_image(seed, 420, 380, 3);
    top_axis_bins("raw 420x380", &raw);
    let up = resize(&raw, ScaleSpec::new(2000, 2000).unwrap(), ResizePolicy::VulnerableBilinear);
    top_axis_bins("upscaled 2000x2000", &up);

    let spec = spectrum(&up);
    println!("v-axis profile around the 317 bump:");
    for dv in (300..=360).step_by(2) {
        let on_axis = spec.magnitude_at(0, dv).unwrap();
        let off_axis = spec.magnitude_at(6, dv).unwrap();
        println!("   v {dv:4}: axis {on_axis:12.1}  off-axis(u=6) {off_axis:10.1}");
    }
}
