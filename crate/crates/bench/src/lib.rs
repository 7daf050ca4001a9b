//! Fixtures shared by the benchmarks in `benches/`.

use rtmix_core::fields::{ScalarField, VelocityField};
use rtmix_core::riemann::FluidParams;
use rtmix_core::solver::{init_state, RunConfig, SimState, Solver};
use rtmix_core::Result;

/// Solver and state of the default configuration resized to `ny x nz`,
/// advanced `warm_steps` steps so the velocity is no longer zero.
pub fn developed_state(ny: usize, nz: usize, warm_steps: usize) -> Result<(Solver, SimState)> {
    let config = RunConfig { ny, nz, ..RunConfig::default() };
    config.validate()?;
    let grid = config.grid()?;
    let fluid = config.fluid()?;
    let mut solver = Solver::new(grid, fluid, config.solver_params())?;
    let mut state = init_state(grid, &fluid, &config.perturbation)?;
    for _ in 0..warm_steps {
        let dt = solver.stable_dt(&state);
        state = solver.step(&state, dt)?;
    }
    Ok((solver, state))
}

/// Density and a divergent velocity for projection benchmarks.
pub fn projection_input(state: &SimState) -> (ScalarField, VelocityField) {
    let g = state.rho.grid;
    let u = VelocityField::from_fn(
        g,
        |y, z| (y * 0.7).sin() * (z * 0.3).cos(),
        |y, z| (y * 0.2).cos() * (z * 0.9).sin(),
    );
    (state.rho.clone(), u)
}

pub fn fluid(config: &RunConfig) -> FluidParams {
    config.fluid().expect("default fluid parameters are valid")
}
