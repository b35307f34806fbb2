//! Categorical verification of a predicted cloud mask against a reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CloudMask;

/// Pixel counts of the 2x2 prediction/reference table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
    pub correct_negatives: u64,
}

impl ContingencyTable {
    pub fn new(hits: u64, misses: u64, false_alarms: u64, correct_negatives: u64) -> Self {
        Self { hits, misses, false_alarms, correct_negatives }
    }

    pub fn total(&self) -> u64 {
        self.hits + self.misses + self.false_alarms + self.correct_negatives
    }

    /// Reference-positive count (hits + misses).
    pub fn observed(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn not_observed(&self) -> u64 {
        self.false_alarms + self.correct_negatives
    }

    /// Hits expected by chance: `observed * predicted / total`.
    pub fn hits_random(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.observed() as f64 * (self.hits + self.false_alarms) as f64 / total as f64)
    }

    /// Table with prediction and reference swapped.
    pub fn transposed(&self) -> Self {
        Self { misses: self.false_alarms, false_alarms: self.misses, ..*self }
    }
}

pub fn contingency(pred: &CloudMask, truth: &CloudMask) -> Result<ContingencyTable> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut t = ContingencyTable::default();
    for (&p, &o) in pred.flags().iter().zip(truth.flags()) {
        match (p, o) {
            (true, true) => t.hits += 1,
            (false, true) => t.misses += 1,
            (true, false) => t.false_alarms += 1,
            (false, false) => t.correct_negatives += 1,
        }
    }
    Ok(t)
}

/// Verification scores; `None` marks a score whose denominator is zero and
/// serializes as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// hits / observed
    pub pod: Option<f64>,
    /// false alarms / not observed
    pub far: Option<f64>,
    /// false alarms / (hits + false alarms), the usual false alarm ratio
    pub far_conventional: Option<f64>,
    /// misses / observed
    pub undetected_error_rate: Option<f64>,
    /// (hits + false alarms) / observed
    pub bias: Option<f64>,
    /// equitable threat score
    pub ets: Option<f64>,
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
    pub correct_negatives: u64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

pub fn verify(t: &ContingencyTable) -> Result<VerificationReport> {
    let total = t.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let hits = t.hits as f64;
    let misses = t.misses as f64;
    let false_alarms = t.false_alarms as f64;
    let observed = t.observed() as f64;
    let hits_random = observed * (hits + false_alarms) / total as f64;
    Ok(VerificationReport {
        pod: ratio(hits, observed),
        far: ratio(false_alarms, t.not_observed() as f64),
        far_conventional: ratio(false_alarms, hits + false_alarms),
        undetected_error_rate: ratio(misses, observed),
        bias: ratio(hits + false_alarms, observed),
        ets: ratio(hits - hits_random, hits + misses + false_alarms - hits_random),
        hits: t.hits,
        misses: t.misses,
        false_alarms: t.false_alarms,
        correct_negatives: t.correct_negatives,
    })
}

impl VerificationReport {
    pub fn table(&self) -> ContingencyTable {
        ContingencyTable::new(self.hits, self.misses, self.false_alarms, self.correct_negatives)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(flags: &[u8]) -> CloudMask {
        CloudMask::new(flags.len(), 1, flags.iter().map(|&f| f == 1).collect()).unwrap()
    }

    #[test]
    fn worked_table() {
        let r = verify(&ContingencyTable::new(40, 10, 5, 45)).unwrap();
        assert_eq!(r.pod, Some(0.8));
        assert_eq!(r.undetected_error_rate, Some(0.2));
        assert_eq!(r.far, Some(0.1));
        assert_eq!(r.bias, Some(0.9));
        assert!((r.ets.unwrap() - 17.5 / 32.5).abs() < 1e-12);
        assert_eq!(ContingencyTable::new(40, 10, 5, 45).hits_random(), Some(22.5));
        assert_eq!(r.far_conventional, Some(5.0 / 45.0));
    }

    #[test]
    fn perfect_table() {
        let r = verify(&ContingencyTable::new(7, 0, 0, 13)).unwrap();
        assert_eq!(
            (r.pod, r.undetected_error_rate, r.far, r.bias, r.ets),
            (Some(1.0), Some(0.0), Some(0.0), Some(1.0), Some(1.0))
        );
    }

    #[test]
    fn no_detections() {
        let t = ContingencyTable::new(0, 7, 0, 13);
        let r = verify(&t).unwrap();
        assert_eq!(r.pod, Some(0.0));
        assert_eq!(r.undetected_error_rate, Some(1.0));
        assert_eq!(r.far, Some(0.0));
        let hr = t.hits_random().unwrap();
        assert_eq!(hr, 0.0);
        assert_eq!(r.ets, Some(-hr / (7.0 - hr)));
        assert_eq!(r.far_conventional, None);
    }

    #[test]
    fn undefined_scores_are_null() {
        let r = verify(&ContingencyTable::new(0, 0, 0, 5)).unwrap();
        assert_eq!(r.pod, None);
        assert_eq!(r.bias, None);
        assert_eq!(r.ets, None);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(json["pod"].is_null());
        assert_eq!(json["far"], 0.0);
        assert_eq!(json["correct_negatives"], 5);
        // all-cloud perfect table: chance hits equal hits, ets undefined
        assert_eq!(verify(&ContingencyTable::new(4, 0, 0, 0)).unwrap().ets, None);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(matches!(verify(&ContingencyTable::default()), Err(Error::EmptyTable)));
    }

    #[test]
    fn counts_from_masks() {
        let truth = mask(&[1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(contingency(&truth, &truth).unwrap(), ContingencyTable::new(7, 0, 0, 13));
        let none = mask(&[0; 20]);
        assert_eq!(contingency(&none, &truth).unwrap(), ContingencyTable::new(0, 7, 0, 13));
        assert!(matches!(contingency(&mask(&[0; 3]), &truth), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn json_keys() {
        let r = verify(&ContingencyTable::new(1, 1, 1, 1)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "bias",
                "correct_negatives",
                "ets",
                "false_alarms",
                "far",
                "far_conventional",
                "hits",
                "misses",
                "pod",
                "undetected_error_rate"
            ]
        );
    }
}
