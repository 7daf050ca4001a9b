pub mod interp_check;
pub mod replay;
pub mod riemann_table;
pub mod simulate;
pub mod verify_bounds;

use std::path::Path;

use rtmix_core::riemann::{FluidParams, TimeScaling};
use rtmix_core::solver::RunConfig;

use crate::error::{CliError, CliResult};
use crate::output::sha256_hex;

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let config = RunConfig::from_file(path)?;
    config.validate()?;
    Ok(config)
}

/// SHA-256 of the canonical configuration echo. The output directory is
/// left out so that the same run written to two places hashes equally.
pub fn config_hash(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.out = None;
    sha256_hex(c.echo().as_bytes())
}

pub fn parse_scaling(s: &str) -> Result<TimeScaling, String> {
    match s {
        "conservation-law" => Ok(TimeScaling::ConservationLaw),
        "energy-saturating" => Ok(TimeScaling::EnergySaturating),
        other => Err(format!("unknown scaling `{other}` (conservation-law, energy-saturating)")),
    }
}

/// Densities from either an Atwood number (`rho = 1 ± A`) or an explicit pair.
pub fn fluid_from(atwood: Option<f64>, rho_plus: Option<f64>, rho_minus: Option<f64>, g: f64) -> CliResult<FluidParams> {
    let p = match (atwood, rho_plus, rho_minus) {
        (Some(a), None, None) => FluidParams::from_atwood(a, g),
        (None, Some(rp), Some(rm)) => FluidParams::new(rp, rm, g),
        _ => return Err(CliError::Config("give either --atwood or both --rho-plus and --rho-minus".into())),
    };
    p.map_err(|e| CliError::Config(format!("fluid parameters: {e}")))
}
