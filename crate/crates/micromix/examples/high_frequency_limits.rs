//! The two deterministic high-frequency limits against a Monte Carlo
//! ensemble: the dispersal ODE (frequent weak interactions) and the
//! synchronized mean field (frequent constant-strength interactions).
//!
//! ```bash
//! cargo run --example high_frequency_limits
//! ```

use micromix::ensemble::{percentile_band, run_ensemble_with, EnsembleOptions, Retention};
use micromix::hfa::{evolve_hfcsa, evolve_hflsa, HfcsaSystem, HflsaSystem};
use micromix::integrator::IntegratorConfig;
use micromix::network::{ExchangeParams, InteractionNetwork};
use micromix::simulate::{HostDynamics, SimConfig};

fn main() -> micromix::Result<()> {
    let dynamics = micromix::dynamics::builtin_illustrative();
    let integrator = IntegratorConfig::default();
    let lambda_tot = 25.0;
    let samples = 11;
    let horizon = 1.0;
    let grid: Vec<f64> = (0..samples)
        .map(|k| horizon * k as f64 / (samples - 1) as f64)
        .collect();
    let initial_states = vec![vec![2.0, 2.0], vec![12.0, 12.0]];

    // rate * strength = 8: the dispersal coefficient of the weak limit
    let gamma = 8.0 / lambda_tot;
    let network = InteractionNetwork::build(2, &[(0, 1, lambda_tot)])?;
    let dispersal = evolve_hflsa(
        &HflsaSystem {
            network: network.clone(),
            dynamics: HostDynamics::Shared(dynamics.clone()),
            gamma,
            initial_states: initial_states.clone(),
        },
        &grid,
        &integrator,
    )?;

    let mean_field = evolve_hfcsa(
        &HfcsaSystem {
            dynamics: HostDynamics::Shared(dynamics.clone()),
            host_count: 2,
            mean_initial_state: vec![7.0, 7.0],
        },
        &grid,
        &integrator,
    )?;

    let sim = SimConfig {
        network,
        dynamics: HostDynamics::Shared(dynamics),
        exchange: ExchangeParams::new(gamma)?,
        horizon,
        samples,
        integrator,
        seed: 0,
        initial_states,
        record_events: false,
        record_energy: false,
    };
    let ens = run_ensemble_with(
        &sim,
        200,
        42,
        &EnsembleOptions {
            retention: Retention::Keep,
            ..Default::default()
        },
    )?;
    let band = percentile_band(&ens, 5.0, 95.0)?;

    println!("host 0, species 1: 5th-95th percentile band vs both limits");
    println!("  t      band lo   band hi   dispersal  mean field");
    for (k, &t) in grid.iter().enumerate() {
        println!(
            "  {t:<5.2} {:<9.4} {:<9.4} {:<10.4} {:.4}",
            band.lower[k][0][0], band.upper[k][0][0], dispersal[k][0][0], mean_field[k][0]
        );
    }
    println!(
        "\nerror vs dispersal ODE: {:.4}",
        micromix::ensemble::hfa_error_of(&ens, &dispersal, &grid)?
    );
    Ok(())
}
