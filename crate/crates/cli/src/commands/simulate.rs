use std::path::PathBuf;

use clap::Args;
use rtmix_core::diagnostics::{write_checks, write_series, DiagnosticsRecord, SampleChecks};
use rtmix_core::fields::write_snapshot;
use rtmix_core::harness::{check_theorem_main, compare_with_riemann, BoundReport};
use rtmix_core::solver::{energy_drift, run_with, RunConfig, Verification};

use super::{config_hash, load_config};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::plots;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Hard checks the configuration asked for that did not pass.
fn failed_checks(report: &BoundReport, verify: Verification) -> Vec<&'static str> {
    let mut failed = Vec::new();
    if verify.envelope {
        if !report.envelope_ok {
            failed.push("energy envelope");
        }
        if !report.h_interpolation_ok {
            failed.push("entropy interpolation");
        }
    }
    if verify.monotonicity {
        if !report.h_monotone {
            failed.push("H monotonicity");
        }
        if !report.s_monotone {
            failed.push("S monotonicity");
        }
    }
    if verify.perimeter {
        if !report.perimeter_ok {
            failed.push("integrated perimeter");
        }
        if report.perimeter_pointwise_ok == Some(false) {
            failed.push("pointwise perimeter");
        }
    }
    failed
}

fn write_series_files(od: &mut OutputDir, series: &[DiagnosticsRecord], checks: &[SampleChecks]) -> CliResult<()> {
    od.write_with("series.csv", |buf| write_series(buf, series))?;
    od.write_with("checks.csv", |buf| write_checks(buf, checks))?;
    od.write("series.gp", plots::series_script("series.csv").as_bytes())?;
    Ok(())
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let config: RunConfig = load_config(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out` in the config".into()))?;
    let hash = config_hash(&config);
    let fluid = config.fluid()?;

    let mut od = OutputDir::create(&out)?;
    od.write("config.cfg", config.echo().as_bytes())?;

    let mut series = Vec::new();
    let mut checks = Vec::new();
    let every = config.snapshot_every;
    let mut snapshot_failure = None;
    let result = run_with(&config, |state, sample| {
        let index = series.len();
        series.push(sample.record);
        checks.push(sample.checks);
        if every > 0 && index % every == 0 {
            let (uy, uz) = state.u.cell_centred();
            let mut buf = Vec::new();
            write_snapshot(&mut buf, state.t, &[&state.rho, &uy, &uz])?;
            if let Err(e) = od.write(&format!("snapshots/snapshot_{index:05}.bin"), &buf) {
                let msg = e.to_string();
                snapshot_failure = Some(e);
                return Err(rtmix_core::Error::Snapshot(msg));
            }
        }
        Ok(())
    });

    let output = match result {
        Ok(output) => output,
        Err(e) => {
            // keep what was sampled before the failure
            energy_drift(&mut series, fluid.g, config.orientation);
            write_series_files(&mut od, &series, &checks)?;
            od.finish(&[
                ("command", "simulate".into()),
                ("config_hash", format!("sha256:{hash}")),
                ("status", "error".into()),
                ("error", e.to_string()),
            ])?;
            return Err(snapshot_failure.unwrap_or(CliError::Core(e)));
        }
    };

    let series = output.series();
    let checks = output.checks();
    write_series_files(&mut od, &series, &checks)?;

    let report = check_theorem_main(&series, Some(&checks), &fluid)?.with_config_hash(format!("sha256:{hash}"));
    let verify = config.verify;
    let verifying = verify.envelope || verify.monotonicity || verify.perimeter;
    let failed = if verifying { failed_checks(&report, verify) } else { Vec::new() };
    if verifying {
        od.write_with("bounds.csv", |buf| report.write_csv(buf))?;
        od.write("summary.txt", report.summary().as_bytes())?;
        let l = report.limits;
        od.write("bounds.gp", plots::bounds_script("bounds.csv", (l.energy, l.entropy, l.perimeter)).as_bytes())?;
    }
    let riemann = compare_with_riemann(&series, &fluid);
    od.write_with("riemann.csv", |buf| riemann.write_csv(buf))?;
    od.write("riemann.gp", plots::riemann_script("riemann.csv").as_bytes())?;

    let last = series.last().expect("a run has at least one sample");
    let status = if failed.is_empty() { "ok" } else { "check_failed" };
    od.finish(&[
        ("command", "simulate".into()),
        ("config_hash", format!("sha256:{hash}")),
        ("status", status.into()),
        ("stop", output.stop.name().into()),
        ("t_final", format!("{:?}", last.t)),
        ("steps", output.steps.to_string()),
        ("samples", series.len().to_string()),
        ("max_divergence", format!("{:e}", output.max_divergence)),
        ("max_poisson_iterations", output.max_poisson_iterations.to_string()),
    ])?;

    println!(
        "simulated to t = {} in {} steps ({}), {} samples, max |drift| {:.3e}",
        last.t,
        output.steps,
        output.stop.name(),
        series.len(),
        series.iter().fold(0.0f64, |m, r| m.max(r.drift.abs()))
    );
    if verifying {
        print!("{}", report.summary());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}
