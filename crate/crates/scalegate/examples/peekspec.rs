//! Scratch: dump top spectral peaks for one clean/attacked pair.

use scalegate::attack::{generate_attack, EmbedPlan};
use scalegate::detect::{detect, spectrum, DEFAULT_THRESHOLD};
use scalegate::resize::{resize, ResizePolicy, ScaleSpec};
use scalegate::synth::synth_image;

fn dump(label: &str, img: &scalegate::Image) {
    let spec = spectrum(img);
    let report = detect(img, DEFAULT_THRESHOLD).unwrap();
    println!("== {label}: score {:.1}", report.score);
    let w = spec.width() as i32;
    let h = spec.height() as i32;
    // global median magnitude (off guard)
    let mut mags: Vec<f64> = spec.magnitudes().to_vec();
    let mid = mags.len() / 2;
    mags.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    println!("   median magnitude {:.1}, max {:.1}", mags[mid], spec
        .magnitudes().iter().copied().fold(0.0f64, f64::max));
    println!("   inferred: {:?}", report.inferred_scales.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for p in &report.peaks {
        // local median around the peak
        let mut window = Vec::new();
        for dv in -5i32..=5 {
            for du in -5i32..=5 {
                if let Some(m) = spec.magnitude_at(p.u + du, p.v + dv) {
                    window.push(m);
                }
            }
        }
        let mid = window.len() / 2;
        window.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        println!(
            "   peak ({:5},{:5}) mag {:14.1} localmed {:12.1} prominence {:10.1}",
            p.u, p.v, p.magnitude, window[mid], p.magnitude / (window[mid] + 1e-12)
        );
    }
    let _ = (w, h);
}

fn probe_bins(label: &str, img: &scalegate::Image) {
    let spec = spectrum(img);
    println!("-- {label}: known lattice bins");
    for (du, dv) in [(0i32, 299i32), (299, 0), (0, 392), (412, 0), (598, 206), (0, 598)] {
        let m = spec.magnitude_at(du, dv).unwrap_or(0.0);
        let mut window = Vec::new();
        for d in -15i32..=15 {
            if d.abs() <= 1 {
                continue;
            }
            if let Some(v) = spec.magnitude_at(du + d, dv) {
                window.push(v);
            }
        }
        window.sort_by(f64::total_cmp);
        let med = window[window.len() / 2];
        println!("   ({du:4},{dv:4}) mag {m:12.1} row-med {med:12.1} ratio {:8.2}", m / med);
    }
}

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let carrier_scale = ScaleSpec::new(2000, 2000).unwrap();
    let attack_scale = ScaleSpec::new(299, 299).unwrap();
    let carrier_raw = synth_image(seed, 420, 380, 3);
    let small_raw = synth_image(seed + 1000, 390, 440, 3);
    let carrier = resize(&carrier_raw, carrier_scale, ResizePolicy::VulnerableBilinear);
    let small = resize(&small_raw, attack_scale, ResizePolicy::VulnerableBilinear);
    let plan = EmbedPlan::new(carrier.clone(), vec![(small, attack_scale)]).unwrap();
    let (combined, _) = generate_attack(&plan);
    dump("clean", &carrier);
    dump("attacked", &combined);
    probe_bins("clean", &carrier);
    probe_bins("attacked", &combined);
}
