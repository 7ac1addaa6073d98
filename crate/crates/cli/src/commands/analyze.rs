use serde::Serialize;

use satlab::format::{Metric, ReportRow};
use satlab::spectral::{self, CovarianceAccumulator, SaturationResult, TailReport};

use crate::failure::Failure;
use crate::output::{self, Outputs, Reproducibility, RunReport};
use crate::AnalyzeArgs;

/// Layer name used for the `s_μ` row.
pub const MEAN_LAYER: &str = "mean";

#[derive(Debug, Serialize)]
struct AnalyzeOutput<'a> {
    run_id: &'a str,
    reproducibility: &'a Reproducibility,
    delta: f64,
    layers: &'a [SaturationResult],
    average_saturation: f64,
    /// `null` with fewer than three layers.
    tail: Option<TailReport>,
}

pub fn run(args: AnalyzeArgs) -> Result<(), Failure> {
    let delta = spectral::check_delta(args.delta)?;
    let dumps = super::load_dumps(&args.dumps)?;

    let mut results = Vec::with_capacity(dumps.layers.len());
    for (name, batch) in &dumps.layers {
        let mut acc = CovarianceAccumulator::new(batch.layout().extrinsic_dim());
        acc.accumulate(batch)?;
        results.push(spectral::saturation_of(name.clone(), &acc, delta)?);
    }
    let average = spectral::average_saturation(&results)?;
    let tail = if results.len() >= 3 { Some(spectral::detect_tail(&results)?) } else { None };

    let mut hashed = format!("analyze\ndelta={delta}\n").into_bytes();
    hashed.extend_from_slice(&dumps.digest_input);
    let repro = Reproducibility::new(None, &hashed);

    let mut rows: Vec<ReportRow> = results
        .iter()
        .map(|r| ReportRow::new(&args.run_id, &r.layer, Metric::Saturation, None, r.saturation))
        .collect();
    rows.push(ReportRow::new(&args.run_id, MEAN_LAYER, Metric::Saturation, None, average));
    let report = RunReport::new(&args.run_id, repro.clone(), rows)?;

    let out = AnalyzeOutput {
        run_id: &args.run_id,
        reproducibility: &repro,
        delta,
        layers: &results,
        average_saturation: average,
        tail,
    };
    if let Some(dir) = &args.out {
        let mut files = Outputs::default();
        files.add_json(output::REPORT_FILE, &report);
        files.add_json("analyze.json", &out);
        files.write(dir)?;
    }
    if args.json {
        output::print_bytes(&output::to_json(&out));
    } else {
        println!("{:<16} {:>8} {:>8} {:>10}", "layer", "k", "d", "saturation");
        for r in &results {
            println!("{:<16} {:>8} {:>8} {:>10.4}", r.layer, r.relevant_dim, r.extrinsic_dim, r.saturation);
        }
        println!("average saturation {average:.4}");
        match &out.tail {
            Some(t) if t.start_index.is_some() => println!("tail: {}", t.member_layers.join(" ")),
            Some(_) => println!("tail: none"),
            None => println!("tail: not assessed (fewer than 3 layers)"),
        }
    }
    Ok(())
}
