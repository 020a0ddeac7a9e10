//! CSV writing. Every file has a header row; floats carry 17 significant
//! digits so they round-trip exactly.

use crate::error::CliError;
use spsim_core::verify::{BudgetItem, VerificationReport};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn items(items: &[BudgetItem]) -> String {
    items.iter().map(|b| format!("{}={}", b.name, float(b.value))).collect::<Vec<_>>().join(";")
}

pub const REPORT_HEADER: &str = "identity,label,lhs_mean,lhs_se,lhs_n,rhs_mean,rhs_se,rhs_n,difference,combined_se,z,budget_total,tolerance,pass,budget,diagnostics,flags";

pub fn reports_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.identity,
            r.label.replace(',', ";"),
            float(r.lhs.mean),
            float(r.lhs.std_error),
            r.lhs.n,
            float(r.rhs.mean),
            float(r.rhs.std_error),
            r.rhs.n,
            float(r.difference),
            float(r.combined_se),
            float(r.z),
            float(r.budget_total()),
            float(r.tolerance()),
            r.pass,
            items(&r.budget),
            items(&r.diagnostics),
            r.flags.join(";"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }
}
