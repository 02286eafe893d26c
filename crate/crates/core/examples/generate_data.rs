//! Generates the default synthetic dataset, injects 30% web noise and saves it.
//!
//! cargo run --release --example generate_data -- [path]

use simtrans::synthdata::{generate_dataset, inject_web_noise, save_dataset, DatasetSpec, NoiseKind, NoiseSpec, Split};

fn main() -> simtrans::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "dataset.csv".into());
    let spec = DatasetSpec::default();
    let clean = generate_dataset(&spec)?;
    let noisy = inject_web_noise(&clean, &NoiseSpec::default())?;

    for split in Split::ALL {
        let n = noisy.records().iter().filter(|r| r.split == split).count();
        println!("{:<12} {:>5} records, {} categories", split.as_str(), n, noisy.categories(split).len());
    }
    for c in spec.novel_ids() {
        let rows: Vec<_> = noisy
            .records()
            .iter()
            .filter(|r| r.split == Split::NovelTrain && r.label == c)
            .collect();
        let flips = rows.iter().filter(|r| r.noise_kind == NoiseKind::Flip).count();
        let outliers = rows.iter().filter(|r| r.noise_kind == NoiseKind::Outlier).count();
        println!("novel category {c}: {} images, {flips} flipped, {outliers} outliers", rows.len());
    }
    save_dataset(&noisy, &path)?;
    println!("wrote {path}");
    Ok(())
}
