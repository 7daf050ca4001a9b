use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtmix_core::interp::{
    monotonize, random_profile, rearrange, Flux, Interpolation, LogEntropy, QuadraticEntropy, RandomShape, RATIO_TOLERANCE,
};
use rtmix_core::riemann::{FluidParams, ImmiscibleFlux};

use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::plots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FluxChoice {
    Immiscible,
    Quadratic,
    Log,
}

#[derive(Debug, Args)]
pub struct InterpCheckArgs {
    #[arg(long, value_enum)]
    pub flux: FluxChoice,
    /// Heavy density, for the immiscible flux.
    #[arg(long)]
    pub rho_plus: Option<f64>,
    /// Light density, for the immiscible flux.
    #[arg(long)]
    pub rho_minus: Option<f64>,
    /// Number of random profiles, alternating monotone and rough shapes.
    #[arg(long, default_value_t = 1000)]
    pub n_random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write `interp.csv`, a plot script and a manifest here instead of printing the CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const INTERP_HEADER: &str = "index,shape,lhs,rhs,ratio,ratio_rearranged,ratio_monotonized";

fn flux_of(args: &InterpCheckArgs) -> CliResult<Arc<dyn Flux>> {
    Ok(match args.flux {
        FluxChoice::Quadratic => Arc::new(QuadraticEntropy),
        FluxChoice::Log => Arc::new(LogEntropy),
        FluxChoice::Immiscible => {
            let (Some(rp), Some(rm)) = (args.rho_plus, args.rho_minus) else {
                return Err(CliError::Config("--flux immiscible needs --rho-plus and --rho-minus".into()));
            };
            let params = FluidParams::new(rp, rm, 1.0).map_err(|e| CliError::Config(format!("fluid parameters: {e}")))?;
            Arc::new(ImmiscibleFlux { params })
        }
    })
}

pub fn run(args: InterpCheckArgs) -> CliResult<()> {
    let flux = flux_of(&args)?;
    let interp = Interpolation::new(flux.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let mut csv = format!("{INTERP_HEADER}\n");
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    let mut chain_breaks = 0usize;
    for k in 0..args.n_random {
        let shape = if k % 2 == 0 { RandomShape::Monotone } else { RandomShape::Rough };
        let profile = random_profile(&mut rng, shape);
        let c0 = interp.measure(&profile);
        let rearranged = rearrange(&profile);
        let r1 = interp.measure(&rearranged).ratio;
        let r2 = interp.measure(&monotonize(&rearranged, flux.as_ref())).ratio;
        worst = worst.max(c0.ratio).max(r1).max(r2);
        if [c0.ratio, r1, r2].iter().any(|r| r.is_nan() || *r > 1.0 + RATIO_TOLERANCE) {
            violations += 1;
        }
        // rearranging and then monotonising can only raise the ratio
        if !(c0.ratio <= r1 * (1.0 + 1e-12) + 1e-15 && r1 <= r2 * (1.0 + 1e-12) + 1e-15) {
            chain_breaks += 1;
        }
        let shape_name = if shape == RandomShape::Monotone { "monotone" } else { "rough" };
        let _ = writeln!(csv, "{k},{shape_name},{},{},{},{r1},{r2}", c0.lhs, c0.rhs, c0.ratio);
    }

    eprintln!(
        "{} flux, sharp constant {:.12}: max ratio {worst:.9} over {} profiles, {violations} violations, {chain_breaks} chain breaks",
        flux.name(),
        interp.constant(),
        args.n_random
    );

    match &args.out {
        Some(dir) => {
            let mut od = OutputDir::create(dir)?;
            od.write("interp.csv", csv.as_bytes())?;
            od.write("interp.gp", plots::interp_script("interp.csv").as_bytes())?;
            od.finish(&[
                ("command", "interp-check".into()),
                ("flux", flux.name().into()),
                ("seed", args.seed.to_string()),
                ("n_random", args.n_random.to_string()),
                ("sharp_constant", format!("{:?}", interp.constant())),
                ("max_ratio", format!("{worst:?}")),
            ])?;
        }
        None => print!("{csv}"),
    }

    if violations > 0 || chain_breaks > 0 {
        return Err(CliError::Check(format!(
            "{violations} profile(s) exceed ratio 1 + {RATIO_TOLERANCE:e}, {chain_breaks} break the rearrangement chain"
        )));
    }
    Ok(())
}
