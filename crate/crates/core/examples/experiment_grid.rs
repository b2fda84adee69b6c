//! A small simulation grid, exported as CSV tables and SVG figures.

use lfpp::harness::{export_results, run_grid, ExperimentGrid};

fn main() -> lfpp::Result<()> {
    let grid = ExperimentGrid {
        d: 20,
        n: vec![60],
        t: vec![50.0, 100.0],
        delta: vec![0.0, 0.4, 0.8],
        replications: 3,
        ..Default::default()
    };
    let table = run_grid(&grid)?;
    print!("{}", table.to_text());
    let dir = std::env::temp_dir().join("lfpp_grid");
    for p in export_results(&table, &dir, true)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
