//! Attractor search and basin classification for multistable local
//! dynamics.
//!
//! ```bash
//! cargo run --example attractors_and_basins
//! ```

use micromix::basins::{classify_basin, find_attractors, Classification};
use micromix::dynamics::{builtin_glv, LocalDynamics};
use micromix::integrator::IntegratorConfig;

fn main() -> micromix::Result<()> {
    let integrator = IntegratorConfig::default();

    // the two-species quartic, deliberately without declared attractors,
    // so the grid search has to find all four wells itself
    let quartic = LocalDynamics::new(2, 13.0, |x, out| {
        out[0] = -(x[0] / 10.0) * (x[0] - 2.0) * (x[0] - 8.0) * (x[0] - 12.0);
        out[1] = -(x[1] / 10.0) * (x[1] - 2.0) * (x[1] - 11.0) * (x[1] - 12.0);
    });
    let attractors = find_attractors(&quartic, 9, &integrator)?;
    println!("attractors found on a 9 x 9 grid (label order):");
    for (label, attractor) in attractors.iter().enumerate() {
        println!("  basin {}: ({:.6}, {:.6})", label + 1, attractor[0], attractor[1]);
    }

    println!("\nclassification of a few probe points:");
    for probe in [[4.5, 4.5], [9.5, 9.5], [4.5, 12.0], [9.5, 12.0], [5.0, 11.0]] {
        let outcome = classify_basin(&quartic, &probe, &attractors, &integrator)?;
        let text = match outcome {
            Classification::Basin(b) => format!("basin {b}"),
            Classification::Unresolved => "unresolved (sits on a separatrix)".into(),
        };
        println!("  ({:>4}, {:>4}) -> {text}", probe[0], probe[1]);
    }

    // a one-species logistic community has a single attractor
    let logistic = builtin_glv(&[1.0], &[vec![-1.0]], 2.0)?;
    let single = find_attractors(&logistic, 9, &integrator)?;
    println!("\nlogistic growth: attractors = {single:?}");
    Ok(())
}
