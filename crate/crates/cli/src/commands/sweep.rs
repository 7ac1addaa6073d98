use anyhow::anyhow;
use serde::Serialize;

use satlab::format::{Metric, ReportRow};
use satlab::lab::config::ConfigError;
use satlab::lab::sweep::{self, SweepRow};
use satlab::lab::Dataset;

use super::analyze::MEAN_LAYER;
use super::train::load_config;
use crate::failure::{self, Failure};
use crate::output::{self, Outputs, Reproducibility, RunReport};
use crate::SweepArgs;

#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    run_id: &'a str,
    reproducibility: &'a Reproducibility,
    capacity: Vec<SweepRow>,
    difficulty: Vec<SweepRow>,
}

fn rows_for(run_id: &str, kind: &str, rows: &[SweepRow]) -> Vec<ReportRow> {
    let mut out = Vec::new();
    for r in rows {
        let id = format!("{run_id}/{kind}/{}", r.label);
        for (layer, s) in &r.saturation {
            out.push(ReportRow::new(&id, layer, Metric::Saturation, None, *s));
        }
        out.push(ReportRow::new(&id, MEAN_LAYER, Metric::Saturation, None, r.average_saturation));
        out.push(ReportRow::new(&id, "val", Metric::Accuracy, None, r.val_accuracy));
        out.push(ReportRow::new(&id, "val", Metric::Loss, None, r.val_loss));
    }
    out
}

fn print_table(title: &str, rows: &[SweepRow]) {
    if rows.is_empty() {
        return;
    }
    println!("{:<12} {:>8} {:>10} {:>10}", title, "s_mu", "val_acc", "val_loss");
    for r in rows {
        println!("{:<12} {:>8.4} {:>10.4} {:>10.4}", r.label, r.average_saturation, r.val_accuracy, r.val_loss);
    }
}

pub fn run(args: SweepArgs) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(failure::usage(anyhow!("--jobs must be at least 1")));
    }
    let (cfg, config_bytes) = load_config(&args.config)?;
    if cfg.scales.is_empty() && cfg.difficulty.is_empty() {
        return Err(ConfigError::InvalidValue {
            field: "scales".into(),
            message: "a sweep needs `scales` or `difficulty`".into(),
        }
        .into());
    }
    let seed = output::resolve_seed(args.seed, cfg.seed)?;
    let tc = cfg.train_config(seed);

    let mut capacity = Vec::new();
    if !cfg.scales.is_empty() {
        let source = cfg.dataset.clone().ok_or_else(|| {
            Failure::from(ConfigError::Malformed("a capacity sweep needs the key \"dataset\"".into()))
        })?;
        let (tr, va) = cfg.load(&source, seed)?;
        let base = cfg.network_spec(&tr);
        capacity = sweep::capacity_sweep(&base, &cfg.scales, &tr, &va, &tc, args.jobs)?
            .into_iter()
            .map(|(row, _)| row)
            .collect();
    }
    let mut difficulty = Vec::new();
    if !cfg.difficulty.is_empty() {
        let datasets: Vec<(Dataset, Dataset)> = cfg
            .difficulty
            .iter()
            .map(|s| cfg.load(s, seed))
            .collect::<Result<_, _>>()?;
        difficulty = sweep::difficulty_sweep(&cfg.layers, cfg.width_scale, &datasets, &tc, args.jobs)?
            .into_iter()
            .map(|(row, _)| row)
            .collect();
    }

    let repro = Reproducibility::new(Some(seed), &config_bytes);
    let mut rows = rows_for(&cfg.name, "capacity", &capacity);
    rows.extend(rows_for(&cfg.name, "difficulty", &difficulty));
    let report = RunReport::new(&cfg.name, repro.clone(), rows)?;
    let out = SweepOutput {
        run_id: &cfg.name,
        reproducibility: &repro,
        capacity,
        difficulty,
    };
    if let Some(dir) = &args.out {
        let mut files = Outputs::default();
        files.add_json(output::REPORT_FILE, &report);
        files.add_json("sweep.json", &out);
        files.write(dir)?;
    }
    if args.json {
        output::print_bytes(&output::to_json(&out));
    } else {
        print_table("scale", &out.capacity);
        print_table("dataset", &out.difficulty);
    }
    Ok(())
}
