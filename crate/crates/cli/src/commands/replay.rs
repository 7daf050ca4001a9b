use std::path::PathBuf;

use clap::Args;
use rtmix_core::diagnostics::{write_checks, write_series, DEFAULT_EDGE_THRESHOLD};
use rtmix_core::harness::{check_theorem_main, compare_with_riemann};
use rtmix_core::replay::{replay_profile, ReplayKind, ReplayOptions};
use rtmix_core::riemann::{rarefaction_energy_ratio, TimeScaling};

use super::{fluid_from, parse_scaling};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::plots;

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// rarefaction, two_shock or g0_entropy.
    #[arg(long)]
    pub kind: ReplayKind,
    #[arg(long, conflicts_with_all = ["rho_plus", "rho_minus"])]
    pub atwood: Option<f64>,
    #[arg(long)]
    pub rho_plus: Option<f64>,
    #[arg(long)]
    pub rho_minus: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Comma-separated sample times.
    #[arg(long, value_delimiter = ',', conflicts_with = "t_end")]
    pub times: Vec<f64>,
    /// Sample uniformly on [0, t_end] instead of listing times.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of intervals when sampling up to --t-end.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 4096)]
    pub nz: usize,
    /// conservation-law (tau = g t^2 / 2) or energy-saturating (tau = g t^2 / 4).
    #[arg(long, default_value = "conservation-law", value_parser = parse_scaling)]
    pub scaling: TimeScaling,
    /// Mixing-edge threshold.
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    pub theta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn sample_times(args: &ReplayArgs) -> CliResult<Vec<f64>> {
    match (args.times.is_empty(), args.t_end) {
        (false, _) => Ok(args.times.clone()),
        (true, Some(t_end)) if args.samples > 0 => {
            Ok((0..=args.samples).map(|k| t_end * k as f64 / args.samples as f64).collect())
        }
        _ => Err(CliError::Config("give --times or --t-end with --samples > 0".into())),
    }
}

pub fn run(args: ReplayArgs) -> CliResult<()> {
    let fluid = fluid_from(args.atwood, args.rho_plus, args.rho_minus, args.g)?;
    let times = sample_times(&args)?;
    if !(args.theta > 0.0 && args.theta < 0.5) {
        return Err(CliError::Config(format!("--theta must lie in (0, 1/2), got {}", args.theta)));
    }
    let opts = ReplayOptions { nz: args.nz, scaling: args.scaling, theta: args.theta };
    let replay = replay_profile(args.kind, &fluid, &times, &opts)?;
    let report = check_theorem_main(&replay.series, None, &fluid)?;
    let riemann = compare_with_riemann(&replay.series, &fluid);

    let mut od = OutputDir::create(&args.out)?;
    od.write_with("series.csv", |buf| write_series(buf, &replay.series))?;
    od.write_with("checks.csv", |buf| write_checks(buf, &replay.checks))?;
    od.write_with("bounds.csv", |buf| report.write_csv(buf))?;
    od.write_with("riemann.csv", |buf| riemann.write_csv(buf))?;
    od.write("summary.txt", report.summary().as_bytes())?;
    let l = report.limits;
    od.write("bounds.gp", plots::bounds_script("bounds.csv", (l.energy, l.entropy, l.perimeter)).as_bytes())?;
    od.write("riemann.gp", plots::riemann_script("riemann.csv").as_bytes())?;
    let a = fluid.atwood();
    od.finish(&[
        ("command", "replay-profile".into()),
        ("kind", args.kind.name().into()),
        ("rho_plus", format!("{:?}", fluid.rho_plus)),
        ("rho_minus", format!("{:?}", fluid.rho_minus)),
        ("g", format!("{:?}", fluid.g)),
        ("nz", args.nz.to_string()),
        ("scaling", args.scaling.name().into()),
        ("theta", format!("{:?}", args.theta)),
    ])?;

    let last = report.samples.last().expect("at least one time");
    println!("{} replay, A = {a}, scaling {}", args.kind.name(), args.scaling.name());
    println!("final t = {}: r_E = {:.6e}", last.t, last.r_e);
    if args.kind == ReplayKind::Rarefaction {
        println!("rarefaction prediction r_E = {:.6e}", rarefaction_energy_ratio(a, args.scaling));
    }
    println!("energy limsup constant 1/(24(1-A^2)) = {:.6e}", report.limits.energy);
    // The perimeter bounds rest on the flow's entropy production, which a
    // replayed profile does not have, so only the envelope is enforced.
    if report.envelope_ok && report.h_interpolation_ok {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "envelope {}, entropy interpolation {}",
            if report.envelope_ok { "ok" } else { "violated" },
            if report.h_interpolation_ok { "ok" } else { "violated" }
        )))
    }
}
