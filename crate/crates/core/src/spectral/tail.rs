use serde::{Deserialize, Serialize};

use super::{SaturationResult, SpectralError};

/// A layer is low-saturated when below this fraction of the mean of all
/// other layers.
pub const TAIL_FRACTION: f64 = 0.5;

/// Outcome of tail-pattern detection over an ordered layer sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// First layer of the tail, if a tail of at least two layers exists.
    pub start_index: Option<usize>,
    pub member_layers: Vec<String>,
    /// `TAIL_FRACTION × mean(s_j, j ≠ l)` for every layer `l`.
    pub threshold_per_layer: Vec<f64>,
    pub low_saturated: Vec<bool>,
}

pub fn detect_tail(results: &[SaturationResult]) -> Result<TailReport, SpectralError> {
    let values: Vec<f64> = results.iter().map(|r| r.saturation).collect();
    let names: Vec<String> = results.iter().map(|r| r.layer.clone()).collect();
    detect_tail_values(&values, &names)
}

/// Tail detection on raw saturation values with matching layer names.
pub fn detect_tail_values<S: AsRef<str>>(values: &[f64], names: &[S]) -> Result<TailReport, SpectralError> {
    let n = values.len();
    if n < 3 {
        return Err(SpectralError::TooFewLayers(n));
    }
    if names.len() != n {
        return Err(SpectralError::DimMismatch {
            expected: n,
            found: names.len(),
        });
    }
    let total: f64 = values.iter().sum();
    let threshold_per_layer: Vec<f64> = values
        .iter()
        .map(|s| TAIL_FRACTION * (total - s) / (n - 1) as f64)
        .collect();
    let low_saturated: Vec<bool> = values
        .iter()
        .zip(&threshold_per_layer)
        .map(|(s, t)| s < t)
        .collect();
    let suffix = low_saturated.iter().rev().take_while(|&&low| low).count();
    let start_index = (suffix >= 2).then(|| n - suffix);
    let member_layers = start_index
        .map(|start| names[start..].iter().map(|s| s.as_ref().to_string()).collect())
        .unwrap_or_default();
    Ok(TailReport {
        start_index,
        member_layers,
        threshold_per_layer,
        low_saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: [&str; 4] = ["a", "b", "c", "d"];

    #[test]
    fn two_layer_tail() {
        let report = detect_tail_values(&[0.5, 0.6, 0.1, 0.08], &NAMES).unwrap();
        assert_eq!(report.start_index, Some(2));
        assert_eq!(report.member_layers, vec!["c", "d"]);
        // others' means: 1.18/3 and 1.2/3
        assert!((report.threshold_per_layer[2] - 0.5 * 1.18 / 3.0).abs() < 1e-15);
        assert!((report.threshold_per_layer[3] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn uniform_saturation_has_no_tail() {
        let report = detect_tail_values(&[0.3; 4], &NAMES).unwrap();
        assert_eq!(report.start_index, None);
        assert!(report.member_layers.is_empty());
    }

    #[test]
    fn low_first_layer_is_not_a_tail() {
        let report = detect_tail_values(&[0.05, 0.5, 0.5, 0.5], &NAMES).unwrap();
        assert_eq!(report.start_index, None);
        assert!(report.low_saturated[0]);
    }

    #[test]
    fn single_low_last_layer_is_an_outlier() {
        let report = detect_tail_values(&[0.5, 0.5, 0.5, 0.01], &NAMES).unwrap();
        assert_eq!(report.start_index, None);
        assert!(report.low_saturated[3]);
    }

    #[test]
    fn needs_three_layers() {
        assert!(matches!(
            detect_tail_values(&[0.1, 0.2], &["a", "b"]),
            Err(SpectralError::TooFewLayers(2))
        ));
    }
}
