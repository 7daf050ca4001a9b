use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rtmix_core::riemann::{alpha_table, golden_mismatches, AlphaRow, ALPHA_TABLE_HEADER, GOLDEN_TABLE};

use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

#[derive(Debug, Args)]
pub struct RiemannTableArgs {
    /// Atwood numbers, comma-separated or repeated. Defaults to the reference table.
    #[arg(long = "atwood", value_delimiter = ',')]
    pub atwoods: Vec<f64>,
    /// Print full precision instead of two decimals.
    #[arg(long)]
    pub raw: bool,
    /// Compare the rounded rows with the reference table and fail on a mismatch.
    #[arg(long)]
    pub check: bool,
    /// Also write `alpha_table.csv` and a manifest into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn render(rows: &[AlphaRow]) -> String {
    let mut s = format!("{ALPHA_TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.a, r.alpha_plus, r.alpha_tilde_plus, r.alpha_minus_abs, r.alpha_tilde_minus_abs
        );
    }
    s
}

pub fn run(args: RiemannTableArgs) -> CliResult<()> {
    let atwoods: Vec<f64> =
        if args.atwoods.is_empty() { GOLDEN_TABLE.iter().map(|g| g.predicted.a).collect() } else { args.atwoods.clone() };
    let rows = alpha_table(&atwoods).map_err(|e| CliError::Config(e.to_string()))?;
    let shown: Vec<AlphaRow> = if args.raw { rows } else { rows.iter().map(AlphaRow::rounded).collect() };
    let text = render(&shown);
    print!("{text}");

    let mut mismatches = Vec::new();
    if args.check {
        for a in &atwoods {
            let Some(golden) = GOLDEN_TABLE.iter().find(|g| g.predicted.a == *a) else {
                eprintln!("A = {a}: no reference row, not checked");
                continue;
            };
            for (col, got, want) in golden_mismatches(golden)? {
                eprintln!("A = {a}: {col} = {got} but the reference table has {want}");
                mismatches.push(format!("A = {a} {col}"));
            }
        }
    }

    if let Some(dir) = &args.out {
        let mut od = OutputDir::create(dir)?;
        od.write("alpha_table.csv", text.as_bytes())?;
        od.finish(&[
            ("command", "riemann-table".into()),
            ("rounding", if args.raw { "none" } else { "two decimals, ties to even" }.into()),
            ("mismatches", mismatches.len().to_string()),
        ])?;
    }

    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("{} column(s) differ from the reference table: {}", mismatches.len(), mismatches.join(", "))))
    }
}
