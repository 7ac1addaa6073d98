use anyhow::anyhow;
use serde::Serialize;

use satlab::format::{self, Metric, ReportRow};
use satlab::probes::{self, LayerActivations, ProbeConfig, ProbeResult, Split};

use crate::failure::{self, Failure};
use crate::output::{self, Outputs, Reproducibility, RunReport};
use crate::ProbeArgs;

#[derive(Debug, Serialize)]
struct ProbeOutput<'a> {
    run_id: &'a str,
    reproducibility: &'a Reproducibility,
    config: &'a ProbeConfig,
    test_fraction: f64,
    layers: &'a [ProbeResult],
}

pub fn run(args: ProbeArgs) -> Result<(), Failure> {
    let seed = output::resolve_seed(args.seed, None)?;
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(failure::usage(anyhow!("--test-fraction must be in (0, 1), got {}", args.test_fraction)));
    }
    let cfg = ProbeConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        l2: args.l2,
        pool_cap: args.pool_cap,
        seed,
    };
    cfg.validate()?;

    let dumps = super::load_dumps(&args.dumps)?;
    let labels_path = match (&args.labels, dumps.manifest.labels_path()) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p,
        (None, None) => return Err(failure::usage(anyhow!("the manifest names no labels file; pass --labels"))),
    };
    let label_bytes = output::read_input(&labels_path)?;
    let text = String::from_utf8(label_bytes.clone()).map_err(|_| failure::data(anyhow!("labels file is not UTF-8")))?;
    let labels = format::parse_labels(&text)?;

    let layers: Vec<LayerActivations<f32>> = dumps
        .layers
        .into_iter()
        .map(|(name, batch)| LayerActivations { name, batch })
        .collect();
    let split = Split::holdout(labels.len(), args.test_fraction, seed);
    let results = probes::probe_sweep(&layers, &labels, &split, &cfg)?;

    let mut hashed = format!(
        "probe\nseed={seed}\ntest_fraction={}\nlr={}\nepochs={}\nbatch={}\nl2={}\npool_cap={}\n",
        args.test_fraction, cfg.learning_rate, cfg.epochs, cfg.batch_size, cfg.l2, cfg.pool_cap
    )
    .into_bytes();
    hashed.extend_from_slice(&dumps.digest_input);
    hashed.extend_from_slice(output::sha256_hex(&label_bytes).as_bytes());
    let repro = Reproducibility::new(Some(seed), &hashed);

    let rows = results
        .iter()
        .map(|r| ReportRow::new(&args.run_id, &r.layer, Metric::ProbeAccuracy, None, r.test_accuracy))
        .collect();
    let report = RunReport::new(&args.run_id, repro.clone(), rows)?;
    let out = ProbeOutput {
        run_id: &args.run_id,
        reproducibility: &repro,
        config: &cfg,
        test_fraction: args.test_fraction,
        layers: &results,
    };
    if let Some(dir) = &args.out {
        let mut files = Outputs::default();
        files.add_json(output::REPORT_FILE, &report);
        files.add_json("probe.json", &out);
        files.write(dir)?;
    }
    if args.json {
        output::print_bytes(&output::to_json(&out));
    } else {
        println!("{:<16} {:>10} {:>10} {:>8}", "layer", "train_acc", "test_acc", "features");
        for r in &results {
            println!("{:<16} {:>10.4} {:>10.4} {:>8}", r.layer, r.train_accuracy, r.test_accuracy, r.feature_dim);
        }
    }
    Ok(())
}
