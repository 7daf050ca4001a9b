use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use rtmix_core::diagnostics::{read_checks, read_series};
use rtmix_core::harness::{check_crossover, check_theorem_main, compare_with_riemann};

use super::{config_hash, load_config};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::plots;

#[derive(Debug, Args)]
pub struct VerifyBoundsArgs {
    /// Diagnostics series written by `simulate`.
    #[arg(long)]
    pub series: PathBuf,
    /// Configuration of the run that produced the series.
    #[arg(long)]
    pub config: PathBuf,
    /// Per-sample checks; defaults to `checks.csv` next to the series if present.
    #[arg(long)]
    pub checks: Option<PathBuf>,
    /// Report directory; defaults to `verify/` next to the series.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn run(args: VerifyBoundsArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let fluid = config.fluid()?;
    let hash = config_hash(&config);
    let series = read_series(open(&args.series)?)?;
    if series.is_empty() {
        return Err(CliError::Config(format!("{} holds no samples", args.series.display())));
    }
    let parent = args.series.parent().unwrap_or(Path::new("."));
    let checks_path = args.checks.clone().or_else(|| {
        let p = parent.join("checks.csv");
        p.exists().then_some(p)
    });
    let checks = match &checks_path {
        Some(p) => {
            let c = read_checks(open(p)?)?;
            if c.len() != series.len() {
                return Err(CliError::Config(format!(
                    "{} has {} rows but the series has {}",
                    p.display(),
                    c.len(),
                    series.len()
                )));
            }
            Some(c)
        }
        None => None,
    };

    let report = check_theorem_main(&series, checks.as_deref(), &fluid)?.with_config_hash(format!("sha256:{hash}"));
    let riemann = compare_with_riemann(&series, &fluid);
    let crossover = checks.as_deref().map(|c| check_crossover(&series, c, &fluid, config.l)).transpose()?;

    let mut summary = report.summary();
    if let Some(c) = &crossover {
        summary.push('\n');
        summary.push_str(&c.summary());
    }

    let out = args.out.clone().unwrap_or_else(|| parent.join("verify"));
    let mut od = OutputDir::create(&out)?;
    od.write_with("bounds.csv", |buf| report.write_csv(buf))?;
    od.write_with("riemann.csv", |buf| riemann.write_csv(buf))?;
    if let Some(c) = &crossover {
        od.write_with("crossover.csv", |buf| c.write_csv(buf))?;
    }
    od.write("summary.txt", summary.as_bytes())?;
    let l = report.limits;
    od.write("bounds.gp", plots::bounds_script("bounds.csv", (l.energy, l.entropy, l.perimeter)).as_bytes())?;
    od.write("riemann.gp", plots::riemann_script("riemann.csv").as_bytes())?;
    od.finish(&[
        ("command", "verify-bounds".into()),
        ("config_hash", format!("sha256:{hash}")),
        ("samples", series.len().to_string()),
        ("pointwise_rates", checks.is_some().to_string()),
        ("status", if report.passed() { "ok" } else { "check_failed" }.into()),
    ])?;

    print!("{summary}");
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.hard_checks().into_iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
        Err(CliError::Check(failed.join(", ")))
    }
}
