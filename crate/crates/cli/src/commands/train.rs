use anyhow::anyhow;
use serde::Serialize;

use satlab::format::{Metric, ReportRow};
use satlab::lab::capture::{self, MANIFEST_FILE};
use satlab::lab::config::{ConfigError, ExperimentConfig};
use satlab::lab::{self, EpochRecord, LabError, TrainRun};

use super::analyze::MEAN_LAYER;
use crate::failure::{self, Failure};
use crate::output::{self, Outputs, Reproducibility, RunReport};
use crate::TrainArgs;

pub const EPOCHS_FILE: &str = "epochs.csv";
pub const DUMPS_DIR: &str = "dumps";

/// Loads and validates a config; the raw bytes feed the reproducibility hash.
pub fn load_config(path: &std::path::Path) -> Result<(ExperimentConfig, Vec<u8>), Failure> {
    let bytes = output::read_input(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::from(ConfigError::Malformed("config is not UTF-8".into())))?;
    let base = path.parent().unwrap_or(std::path::Path::new("."));
    Ok((ExperimentConfig::parse(&text, base)?, bytes))
}

/// Per-epoch rows: layer saturation, `s_μ`, losses and validation accuracy.
pub fn epoch_rows(run_id: &str, records: &[EpochRecord]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for r in records {
        let e = Some(r.epoch as u32);
        for s in &r.saturation {
            rows.push(ReportRow::new(run_id, &s.layer, Metric::Saturation, e, s.saturation));
        }
        if let Some(avg) = r.average_saturation() {
            rows.push(ReportRow::new(run_id, MEAN_LAYER, Metric::Saturation, e, avg));
        }
        rows.push(ReportRow::new(run_id, "train", Metric::Loss, e, r.train_loss));
        rows.push(ReportRow::new(run_id, "val", Metric::Loss, e, r.val_loss));
        rows.push(ReportRow::new(run_id, "val", Metric::Accuracy, e, r.val_accuracy));
    }
    rows
}

/// Wide table, one row per epoch, one saturation column per captured layer.
pub fn epochs_csv(layers: &[String], records: &[EpochRecord]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let mut header: Vec<String> = ["epoch", "learning_rate", "train_loss", "val_loss", "val_accuracy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(layers.iter().map(|l| format!("saturation_{l}")));
    header.push("average_saturation".into());
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut rec = vec![
            r.epoch.to_string(),
            r.learning_rate.to_string(),
            r.train_loss.to_string(),
            r.val_loss.to_string(),
            r.val_accuracy.to_string(),
        ];
        rec.extend(layers.iter().map(|l| r.layer_saturation(l).map(|s| s.to_string()).unwrap_or_default()));
        rec.push(r.average_saturation().map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[derive(Debug, Serialize)]
struct EpochSummary {
    epoch: usize,
    learning_rate: f64,
    train_loss: f64,
    val_loss: f64,
    val_accuracy: f64,
    saturation: Vec<(String, f64)>,
    average_saturation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    run_id: &'a str,
    reproducibility: &'a Reproducibility,
    config: &'a ExperimentConfig,
    network: String,
    parameters: usize,
    train_samples: usize,
    val_samples: usize,
    epochs: Vec<EpochSummary>,
    dumps: String,
}

fn summarize(records: &[EpochRecord]) -> Vec<EpochSummary> {
    records
        .iter()
        .map(|r| EpochSummary {
            epoch: r.epoch,
            learning_rate: r.learning_rate,
            train_loss: r.train_loss,
            val_loss: r.val_loss,
            val_accuracy: r.val_accuracy,
            saturation: r.saturation.iter().map(|s| (s.layer.clone(), s.saturation)).collect(),
            average_saturation: r.average_saturation(),
        })
        .collect()
}

pub fn run(args: TrainArgs) -> Result<(), Failure> {
    let (cfg, config_bytes) = load_config(&args.config)?;
    let seed = output::resolve_seed(args.seed, cfg.seed)?;
    let source = cfg
        .dataset
        .clone()
        .ok_or_else(|| Failure::from(ConfigError::Malformed("missing required key \"dataset\"".into())))?;
    let (train_data, val_data) = cfg.load(&source, seed)?;
    let spec = cfg.network_spec(&train_data);
    let tc = cfg.train_config(seed);
    let run: TrainRun = match lab::train(&spec, &train_data, &val_data, &tc) {
        Ok(run) => run,
        Err(LabError::Diverged { epoch, .. }) => {
            return Err(failure::numeric(anyhow!("training loss diverged in epoch {epoch}")));
        }
        Err(e) => return Err(e.into()),
    };

    let repro = Reproducibility::new(Some(seed), &config_bytes);
    let layers = run.network.capture_names();
    let report = RunReport::new(&cfg.name, repro.clone(), epoch_rows(&cfg.name, &run.records))?;
    let summary = RunSummary {
        run_id: &cfg.name,
        reproducibility: &repro,
        config: &cfg,
        network: spec.scaled_layers().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
        parameters: run.network.param_count(),
        train_samples: train_data.len(),
        val_samples: val_data.len(),
        epochs: summarize(&run.records),
        dumps: format!("{DUMPS_DIR}/{MANIFEST_FILE}"),
    };

    let mut files = Outputs::default();
    files.add(EPOCHS_FILE, epochs_csv(&layers, &run.records));
    files.add_json(output::REPORT_FILE, &report);
    files.add_json("run.json", &summary);
    files.write(&args.out)?;
    let val = run.prepare(&val_data);
    capture::write_capture(&run.network, &val, cfg.dump_samples.min(val.len()), &args.out.join(DUMPS_DIR))?;

    if args.json {
        output::print_bytes(&output::to_json(&summary));
    } else {
        println!("{:>5} {:>10} {:>10} {:>8} {:>8}", "epoch", "train_loss", "val_loss", "val_acc", "s_mu");
        for r in &run.records {
            let s = r.average_saturation().map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
            println!("{:>5} {:>10.4} {:>10.4} {:>8.4} {:>8}", r.epoch, r.train_loss, r.val_loss, r.val_accuracy, s);
        }
    }
    Ok(())
}
