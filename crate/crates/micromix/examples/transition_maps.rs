//! Boundary-set detection and basin-pair transition maps.
//!
//! Scans the interaction strength for values at which a post-exchange
//! mix of two attractors lands on a basin separatrix, then prints the
//! deterministic basin-pair maps at a weak and a strong strength.
//!
//! ```bash
//! cargo run --example transition_maps
//! ```

use micromix::basins::find_attractors;
use micromix::dynamics::builtin_illustrative;
use micromix::integrator::IntegratorConfig;
use micromix::lfa::{boundary_set, transition_map};

fn main() -> micromix::Result<()> {
    let dynamics = builtin_illustrative();
    let integrator = IntegratorConfig::default();
    let attractors = find_attractors(&dynamics, 3, &integrator)?;

    let intervals = boundary_set(
        &dynamics,
        &dynamics,
        &attractors,
        &attractors,
        0.01,
        &integrator,
    )?;
    println!("boundary intervals for a pair of identical hosts:");
    for interval in &intervals {
        println!(
            "  [{:.7}, {:.7}]  (width {:.1e})",
            interval.lo,
            interval.hi,
            interval.width()
        );
    }

    for gamma in [0.05, 0.25] {
        let map = transition_map(
            gamma,
            &dynamics,
            &dynamics,
            &attractors,
            &attractors,
            &integrator,
        )?;
        println!(
            "\ntransition map at strength {gamma}{}:",
            if map.is_identity() { " (identity)" } else { "" }
        );
        println!("  (a, b) -> (a', b')");
        for (a, b, a2, b2) in map.rows() {
            println!("  ({a}, {b}) -> ({a2}, {b2})");
        }
    }

    // strengths inside a boundary interval are rejected
    let refused = transition_map(
        0.1,
        &dynamics,
        &dynamics,
        &attractors,
        &attractors,
        &integrator,
    );
    println!("\nat strength 0.1: {}", refused.unwrap_err());
    Ok(())
}
