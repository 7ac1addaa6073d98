use proptest::prelude::*;
use satlab::activation::{ActivationBatch, Layout};
use satlab::format::{
    emit_report, parse_report, read_dump_from, write_dump_to, DumpReader, FormatError, Metric, ReportFormat, ReportRow,
};

fn encode(name: &str, batch: &ActivationBatch<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    write_dump_to(&mut out, name, batch).unwrap();
    out
}

#[test]
fn single_value_dump_size() {
    let batch = ActivationBatch::flat(1, 1, vec![0.5f32]).unwrap();
    let name = "layer";
    // magic, version, name_len, name, ndim, two u32 dims, dtype, one f32
    assert_eq!(encode(name, &batch).len(), 4 + 2 + 2 + name.len() + 1 + 2 * 4 + 1 + 4);
}

#[test]
fn every_truncation_is_detected() {
    let batch = ActivationBatch::spatial(2, 2, 2, 2, (0..16).map(|i| i as f32).collect()).unwrap();
    let bytes = encode("conv", &batch);
    for cut in 0..bytes.len() {
        let err = read_dump_from(&bytes[..cut]).unwrap_err();
        assert!(
            matches!(err, FormatError::TruncatedHeader | FormatError::TruncatedPayload { .. } | FormatError::BadMagic(_)),
            "cut at {cut}: {err:?}"
        );
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(read_dump_from(extra.as_slice()), Err(FormatError::TrailingBytes)));
}

#[test]
fn oversized_and_wrong_headers() {
    let batch = ActivationBatch::flat(1, 1, vec![1.0f32]).unwrap();
    let mut out = Vec::new();
    assert!(matches!(write_dump_to(&mut out, &"x".repeat(257), &batch), Err(FormatError::OversizedName(257))));
    let mut bytes = encode("x", &batch);
    bytes[4] = 2;
    assert!(matches!(read_dump_from(bytes.as_slice()), Err(FormatError::UnsupportedVersion(2))));
    let mut bytes = encode("x", &batch);
    bytes[0] = b'X';
    assert!(matches!(read_dump_from(bytes.as_slice()), Err(FormatError::BadMagic(_))));
}

fn arb_batch() -> impl Strategy<Value = ActivationBatch<f32>> {
    prop_oneof![
        (0usize..6, 1usize..6).prop_map(|(n, f)| Layout::Flat { samples: n, features: f }),
        (0usize..4, 1usize..4, 1usize..4, 1usize..4)
            .prop_map(|(n, c, h, w)| Layout::Spatial { samples: n, channels: c, height: h, width: w }),
    ]
    .prop_flat_map(|layout| {
        prop::collection::vec(any::<u32>().prop_map(f32::from_bits), layout.len())
            .prop_map(move |data| ActivationBatch::new(layout, data).unwrap())
    })
}

proptest! {
    #[test]
    fn streamed_chunks_concatenate_to_the_whole(batch in arb_batch(), chunk in 1usize..4) {
        let bytes = encode("streamed", &batch);
        let mut reader = DumpReader::new(bytes.as_slice()).unwrap();
        let mut bits = Vec::new();
        let mut samples = 0;
        while let Some(part) = reader.next_batch(chunk).unwrap() {
            prop_assert!(part.samples() <= chunk);
            samples += part.samples();
            bits.extend(part.data().iter().map(|v| v.to_bits()));
        }
        prop_assert_eq!(samples, batch.samples());
        prop_assert_eq!(bits, batch.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn three_run_sweep_is_sorted_like_the_oracle() {
    let mut rows = Vec::new();
    for run in ["scale-1/4", "scale-1", "scale-1/2"] {
        for epoch in [Some(2), None, Some(1)] {
            for layer in ["l02.conv", "l01.conv", "mean"] {
                rows.push(ReportRow::new(run, layer, Metric::Saturation, epoch, 0.5));
            }
        }
    }
    let mut want = rows.clone();
    want.sort_by(|a, b| (&a.run_id, a.epoch, &a.layer).cmp(&(&b.run_id, b.epoch, &b.layer)));
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        let back = parse_report(&emit_report(&rows, format).unwrap(), format).unwrap();
        assert_eq!(back, want);
    }
}

#[test]
fn csv_is_readable_by_a_generic_rfc4180_reader() {
    let rows = [
        ReportRow::new("run \"q\"", "a,b", Metric::ProbeAccuracy, Some(1), 0.75),
        ReportRow::new("run", "line\nbreak", Metric::Rf, None, 40.0),
    ];
    let bytes = emit_report(&rows, ReportFormat::Csv).unwrap();
    assert!(bytes.windows(2).filter(|w| w == b"\r\n").count() >= 3);
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let records: Vec<Vec<String>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    assert_eq!(records[0], ["run", "line\nbreak", "rf", "", "40"]);
    assert_eq!(records[1], ["run \"q\"", "a,b", "probe_accuracy", "1", "0.75"]);
}
