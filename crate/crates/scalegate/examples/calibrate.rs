//! Reproduces the detector threshold calibration: generates a seeded
//! synthetic corpus, runs the carrier-normalization + embedding protocol,
//! scores every clean and attacked image, and reports the Youden-J optimal
//! threshold alongside the rates achieved by the shipped default.
//!
//! Usage: cargo run --release -p scalegate --example calibrate -- [count] [seed]

use scalegate::attack::{generate_attack, EmbedPlan};
use scalegate::detect::{calibrate_threshold, detect, DEFAULT_THRESHOLD};
use scalegate::harness::{list_corpus, pair_corpus};
use scalegate::io::load_image;
use scalegate::resize::{resize, ResizePolicy, ScaleSpec};
use scalegate::synth::write_corpus;

fn main() {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let carrier_scale = ScaleSpec::new(2000, 2000).unwrap();
    let attack_scale = ScaleSpec::new(299, 299).unwrap();

    let dir = tempfile::tempdir().expect("tempdir");
    write_corpus(dir.path(), count, seed).expect("corpus");
    let paths = list_corpus(dir.path()).expect("listing");
    let pairs = pair_corpus(&paths, seed).expect("pairing");

    let mut clean_scores = Vec::with_capacity(pairs.len());
    let mut attacked_scores = Vec::with_capacity(pairs.len());
    for (idx, (carrier_path, small_path)) in pairs.iter().enumerate() {
        let carrier = resize(
            &load_image(carrier_path).expect("carrier"),
            carrier_scale,
            ResizePolicy::VulnerableBilinear,
        );
        let small = resize(
            &load_image(small_path).expect("small"),
            attack_scale,
            ResizePolicy::VulnerableBilinear,
        );
        let plan = EmbedPlan::new(carrier.clone(), vec![(small, attack_scale)]).expect("plan");
        let (combined, _) = generate_attack(&plan);

        let clean = detect(&carrier, DEFAULT_THRESHOLD).expect("detect clean").score;
        let attacked = detect(&combined, DEFAULT_THRESHOLD).expect("detect attacked").score;
        println!("pair {idx:3}  clean {clean:14.3}  attacked {attacked:14.3}");
        clean_scores.push(clean);
        attacked_scores.push(attacked);
    }

    let sorted = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v
    };
    let clean_sorted = sorted(clean_scores.clone());
    let attacked_sorted = sorted(attacked_scores.clone());
    let q = |v: &[f64], f: f64| v[((v.len() - 1) as f64 * f) as usize];
    println!();
    println!(
        "clean    scores: min {:.3} / median {:.3} / max {:.3}",
        clean_sorted[0],
        q(&clean_sorted, 0.5),
        clean_sorted[clean_sorted.len() - 1]
    );
    println!(
        "attacked scores: min {:.3} / median {:.3} / max {:.3}",
        attacked_sorted[0],
        q(&attacked_sorted, 0.5),
        attacked_sorted[attacked_sorted.len() - 1]
    );

    let cal = calibrate_threshold(&clean_scores, &attacked_scores);
    println!(
        "youden-optimal threshold {:.3} (TPR {:.3}, FPR {:.3}, J {:.3})",
        cal.threshold, cal.true_positive_rate, cal.false_positive_rate, cal.youden_j
    );
    let above = |v: &[f64]| v.iter().filter(|&&s| s > DEFAULT_THRESHOLD).count() as f64 / v.len() as f64;
    println!(
        "shipped default {DEFAULT_THRESHOLD}: TPR {:.3}, FPR {:.3}",
        above(&attacked_scores),
        above(&clean_scores)
    );
}
