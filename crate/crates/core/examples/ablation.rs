//! The seven module combinations (Cls, W, R, W+R and their adversarial variants).
//!
//! cargo run --release --example ablation -- [key=value ...]
//! e.g. `seeds=0,1,2,3,4` for the full five-seed table.

use simtrans::experiment::{ablation, mean_std, ExperimentConfig, ABLATION_ROWS};

fn main() -> simtrans::Result<()> {
    let mut config = ExperimentConfig {
        seeds: vec![0],
        ..ExperimentConfig::default()
    };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').unwrap_or((&arg, ""));
        config.set(k, v)?;
    }
    let runs = ablation(&config)?;
    println!("{:<8} {:>8} {:>6}  {:>13}", "method", "acc", "std", "noisy < clean");
    for row in ABLATION_ROWS {
        let mine: Vec<_> = runs.iter().filter(|r| r.toggles == row).collect();
        let (m, s) = mean_std(&mine.iter().map(|r| r.accuracy).collect::<Vec<_>>());
        let down: usize = mine.iter().map(|r| r.weight_stats.iter().filter(|c| c.noisy_down_weighted()).count()).sum();
        let total: usize = mine.iter().map(|r| r.weight_stats.len()).sum();
        let dw = if total > 0 { format!("{down}/{total}") } else { "-".into() };
        println!("{:<8} {m:>8.2} {s:>6.2}  {dw:>13}", row.label());
    }
    Ok(())
}
