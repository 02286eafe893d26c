//! Varies the number of base categories and images per base category, and
//! writes the summary table and two SVG curves.
//!
//! cargo run --release --example scale_study -- [out_dir] [key=value ...]

use simtrans::experiment::{scale_charts, scale_study, summarize, ExperimentConfig};

fn main() -> simtrans::Result<()> {
    let mut config = ExperimentConfig {
        seeds: vec![0],
        use_adversarial: false,
        ..ExperimentConfig::default()
    };
    let mut out = std::path::PathBuf::from("scale_study");
    for arg in std::env::args().skip(1) {
        match arg.split_once('=') {
            Some((k, v)) => config.set(k, v)?,
            None => out = arg.into(),
        }
    }
    let table = scale_study(&config)?;
    let summary = summarize(&table, &["base_categories", "images_per_category"], &["novel_f1", "accuracy"])?;
    print!("{}", summary.to_csv());
    std::fs::create_dir_all(&out).map_err(|e| simtrans::Error::Config(e.to_string()))?;
    for (name, svg) in scale_charts(&summary)? {
        let path = out.join(name);
        std::fs::write(&path, svg).map_err(|e| simtrans::Error::Config(e.to_string()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
