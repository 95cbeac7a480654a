//! Library backing the `vrm` command line tool: dataset generation, planning
//! runs with path artifacts, the metric x planner x density benchmark, and
//! scree output. The binary in `main.rs` is a thin argument parser over
//! these functions, so tests drive the exact same code paths.

pub mod bench;
pub mod plan;

use anyhow::{Context, Result};
use std::path::Path;

use vrm_core::dataset::Dataset;
use vrm_core::roadmap::intrinsic_dimension_with;
use vrm_core::scene::Scene;
use vrm_core::Real;

/// Generate a dataset directory: `n` rendered poses with foregrounds, the
/// manifest, background and obstacle images, and the feature/marker caches.
pub fn cmd_generate(scene_path: &Path, n: usize, seed: Option<u64>, out_dir: &Path) -> Result<()> {
    let scene_text = std::fs::read_to_string(scene_path)
        .with_context(|| format!("reading scene {}", scene_path.display()))?;
    let scene: Scene<Real> = Scene::from_toml_str(&scene_text)?;
    let seed = seed.unwrap_or(scene.seed);
    let mut data = Dataset::generate(scene, n, seed)?;
    data.ensure_features();
    data.ensure_markers()?;
    data.save(out_dir, &scene_text)?;
    Ok(())
}

/// Write the residual-variance scree of a dataset as CSV rows
/// `dimension,residual_variance`.
pub fn cmd_scree(
    dataset_dir: &Path,
    k: usize,
    d_max: usize,
    blur_radius: usize,
    out_csv: &Path,
) -> Result<()> {
    let data = Dataset::<Real>::load(dataset_dir)?;
    let scree = intrinsic_dimension_with(&data, k, d_max, blur_radius)?;
    let mut w = csv::Writer::from_path(out_csv)?;
    w.write_record(["dimension", "residual_variance"])?;
    for (i, r) in scree.residuals.iter().enumerate() {
        w.write_record([format!("{}", i + 1), format!("{r}")])?;
    }
    w.flush()?;
    if !scree.degenerate_nodes.is_empty() {
        eprintln!(
            "warning: {} neighborhoods were degenerate and skipped",
            scree.degenerate_nodes.len()
        );
    }
    Ok(())
}
