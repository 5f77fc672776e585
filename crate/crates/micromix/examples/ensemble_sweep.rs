//! A small error sweep over interaction strength and total rate,
//! scoring the pair-closure basin probabilities against seeded
//! ensembles. Writes `surface.csv` into `out/sweep_example/`.
//!
//! Strengths inside a boundary interval are skipped with a reason
//! rather than scored.
//!
//! ```bash
//! cargo run --example ensemble_sweep
//! ```

use micromix::integrator::IntegratorConfig;
use micromix::network::InteractionNetwork;
use micromix::sweep::{sweep, Comparator, SweepInit, SweepSpec};

fn main() -> micromix::Result<()> {
    let spec = SweepSpec {
        network: InteractionNetwork::build(2, &[(0, 1, 1.0)])?,
        dynamics: micromix::dynamics::builtin_illustrative(),
        comparator: Comparator::LfaPair,
        gamma_values: vec![0.05, 0.1, 0.25, 0.4, 0.45],
        lambda_tot_values: vec![0.025, 2.5],
        runs: 100,
        base_seed: 2024,
        samples: 21,
        horizon: 2.0, // frequency-scaled for basin comparators
        init: SweepInit::BasinProbs(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]),
        integrator: IntegratorConfig::default(),
        hfcsa_window_start: 0.05,
        boundary_resolution: 0.01,
    };
    let surface = sweep(&spec)?;

    println!("  gamma  rate     error / skip reason");
    for cell in &surface.cells {
        match (&cell.error, &cell.skip_reason) {
            (Some(error), _) => {
                println!("  {:<6} {:<8} {error:.4}", cell.gamma, cell.lambda_tot)
            }
            (None, Some(reason)) => {
                println!("  {:<6} {:<8} skipped: {reason}", cell.gamma, cell.lambda_tot)
            }
            _ => unreachable!(),
        }
    }

    let dir = std::path::Path::new("out/sweep_example");
    micromix::io::write_output(dir, "surface.csv", &micromix::io::surface_csv(&surface))?;
    println!("\nwrote {}", dir.join("surface.csv").display());
    Ok(())
}
