use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};

use satlab::format::{self, ReportFormat};

use crate::failure::{self, Failure};
use crate::output::{self, RunReport, REPORT_FILE};
use crate::ReportArgs;

/// Every `report.json` below `dir`, in path order.
fn find_reports(dir: &Path, found: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))
        .map_err(failure::data)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(failure::data)?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            find_reports(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == REPORT_FILE) {
            found.push(path);
        }
    }
    Ok(())
}

pub fn run(args: ReportArgs) -> Result<(), Failure> {
    let format: ReportFormat = args.format.parse().map_err(failure::usage)?;
    if !args.input.is_dir() {
        return Err(failure::data(anyhow!("{} is not a directory", args.input.display())));
    }
    let mut paths = Vec::new();
    find_reports(&args.input, &mut paths)?;

    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut rows = Vec::new();
    for path in paths {
        let bytes = output::read_input(&path)?;
        let report: RunReport = serde_json::from_slice(&bytes)
            .with_context(|| format!("{} is not a run report", path.display()))
            .map_err(failure::data)?;
        if let Some(first) = seen.get(&report.run_id) {
            return Err(failure::data(anyhow!(
                "run_id {:?} appears in both {} and {}",
                report.run_id,
                first.display(),
                path.display()
            )));
        }
        seen.insert(report.run_id.clone(), path);
        rows.extend(report.rows);
    }
    let bytes = format::emit_report(&rows, format)?;
    match &args.out {
        Some(path) => fs::write(path, &bytes)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(failure::data)?,
        None => output::print_bytes(&bytes),
    }
    Ok(())
}
