//! Scratch: measure the criterion-2 statistics over a small corpus.

use scalegate::harness::{run_experiment, Condition, ExperimentConfig};
use scalegate::synth::write_corpus;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(16);
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), n, 2026).unwrap();
    let mut cfg = ExperimentConfig::new(dir.path());
    cfg.seed = 2026;
    let outcome = run_experiment(&cfg).unwrap();
    for c in &outcome.conditions {
        if c.scale.width() == 299 {
            println!(
                "{:<22} big psnr {:7.2} ncc {:6.3} | small psnr {:7.2} ncc {:6.3} exact {:.2}",
                c.condition.to_string(),
                c.big.psnr_median,
                c.big.ncc_median,
                c.small.psnr_median,
                c.small.ncc_median,
                c.small.exact_rate,
            );
        }
    }
    let att: Vec<f64> = outcome
        .records
        .iter()
        .filter(|r| r.condition == Condition::AttackedAntialiased && r.scale.width() == 299)
        .map(|r| r.big.psnr)
        .collect();
    let clean: Vec<f64> = outcome
        .records
        .iter()
        .filter(|r| r.condition == Condition::CleanAntialiased && r.scale.width() == 299)
        .map(|r| r.big.psnr)
        .collect();
    let med = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    println!("gap: {:.2} dB", (med(clean) - med(att)).abs());
}
