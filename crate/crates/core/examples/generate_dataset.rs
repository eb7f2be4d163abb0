//! Generates a small synthetic test set from procedural assets and prints
//! its manifest.
//!
//! ```text
//! cargo run --release --example generate_dataset [out_dir]
//! ```

use std::path::PathBuf;

use vbokeh::dataset::{self, DatasetConfig, Manifest};

fn main() -> vbokeh::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vbokeh-dataset"));
    let catalog = dataset::write_synthetic_catalog(&out.join("assets"), 3, 4, 7)?;
    println!("{} backgrounds, {} foregrounds", catalog.backgrounds.len(), catalog.foregrounds.len());

    let config = DatasetConfig {
        width: 192,
        height: 108,
        frames: 8,
        samples_per_pixel: 32,
        ..DatasetConfig::default()
    };
    let recipe = dataset::sample_recipe(&catalog, &config, 1)?;
    println!(
        "recipe: {} foregrounds, focus disparity {:.3}, strength {:.1}",
        recipe.foregrounds.len(),
        recipe.params.focal.disparity(),
        recipe.params.strength
    );

    let manifest = dataset::generate_testset(3, &catalog, &config, 2024, &out.join("testset"))?;
    let reread = Manifest::read(&out.join("testset").join(dataset::MANIFEST_NAME))?;
    assert_eq!(manifest, reread);
    for e in &manifest.entries {
        println!("{}  focus {:.3}  K {:>5.2}  frames {}  seed {:#x}", e.id, e.focus_disparity, e.strength, e.frames, e.seed);
    }
    println!("{}", out.join("testset").display());
    Ok(())
}
