use anyhow::anyhow;
use serde::Serialize;

use satlab::format::{self, Metric, ReportRow};
use satlab::rf::{self, ReceptiveFieldInfo};

use crate::failure::{self, Failure};
use crate::output::{self, Outputs, Reproducibility, RunReport};
use crate::RfArgs;

#[derive(Debug, Serialize)]
struct RfOutput<'a> {
    run_id: &'a str,
    reproducibility: &'a Reproducibility,
    resolution: u64,
    layers: &'a [ReceptiveFieldInfo],
    border_index: Option<usize>,
    border_layer: Option<&'a str>,
    unproductive: &'a [String],
}

pub fn run(args: RfArgs) -> Result<(), Failure> {
    if args.resolution == 0 {
        return Err(failure::usage(anyhow!("--resolution must be at least 1")));
    }
    let bytes = output::read_input(&args.arch)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| failure::data(anyhow!("architecture file is not UTF-8")))?;
    let arch = format::parse_architecture(&text)?;
    let layers = rf::analyze(&arch, args.resolution)?;
    let unproductive = rf::predict_unproductive(&arch, args.resolution)?;
    let border_index = layers.iter().position(|l| l.is_border);

    let mut hashed = format!("rf\nresolution={}\n", args.resolution).into_bytes();
    hashed.extend_from_slice(&bytes);
    let repro = Reproducibility::new(None, &hashed);
    // Dense layers see the whole input and have no pixel extent; they get no row.
    let rows = layers
        .iter()
        .filter_map(|l| l.rf.pixels().map(|p| ReportRow::new(&args.run_id, &l.layer, Metric::Rf, None, p as f64)))
        .collect();
    let report = RunReport::new(&args.run_id, repro.clone(), rows)?;
    let out = RfOutput {
        run_id: &args.run_id,
        reproducibility: &repro,
        resolution: args.resolution,
        layers: &layers,
        border_index,
        border_layer: border_index.map(|i| layers[i].layer.as_str()),
        unproductive: &unproductive,
    };
    if let Some(dir) = &args.out {
        let mut files = Outputs::default();
        files.add_json(output::REPORT_FILE, &report);
        files.add_json("rf.json", &out);
        files.write(dir)?;
    }
    if args.json {
        output::print_bytes(&output::to_json(&out));
    } else {
        println!("{:<16} {:<10} {:>8} {:>6}", "layer", "kind", "rf", "jump");
        for l in &layers {
            let mark = if l.is_border { "  <- border" } else { "" };
            println!("{:<16} {:<10} {:>8} {:>6}{mark}", l.layer, l.kind.as_str(), l.rf.to_string(), l.jump);
        }
        match out.border_layer {
            Some(b) => println!("border layer: {b} (index {})", border_index.unwrap_or_default()),
            None => println!("border layer: none"),
        }
        println!(
            "predicted unproductive: {}",
            if unproductive.is_empty() { "none".to_string() } else { unproductive.join(" ") }
        );
    }
    Ok(())
}
