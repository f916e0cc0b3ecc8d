//! Token-level evaluation on a 1-vs-all basis.
//!
//! The reported score is the mean F1 over the B and I labels; O is tallied
//! but does not enter the mean.

use serde::{Deserialize, Serialize};

use super::BioTag;
use crate::params::NUM_CLASSES;

/// Raw confusion counts for one label treated 1-vs-all.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// Number of gold tokens with this label.
    pub gold: u64,
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Streaming accumulator of (gold, predicted) token pairs.
#[derive(Debug, Clone, Default)]
pub struct MetricTally {
    counts: [ClassCounts; NUM_CLASSES],
}

impl MetricTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, gold: BioTag, predicted: BioTag) {
        self.counts[gold.class_index()].gold += 1;
        if gold == predicted {
            self.counts[gold.class_index()].true_positives += 1;
        } else {
            self.counts[predicted.class_index()].false_positives += 1;
            self.counts[gold.class_index()].false_negatives += 1;
        }
    }

    pub fn report(&self) -> MetricReport {
        MetricReport::from_counts(self.counts)
    }
}

/// Precision, recall and F1 per label plus the mean F1 over B and I.
///
/// All scores live in [0, 1]; scenario tables rescale to 0..100 for display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision_b: f64,
    pub recall_b: f64,
    pub f1_b: f64,
    pub precision_i: f64,
    pub recall_i: f64,
    pub f1_i: f64,
    pub mean_f1: f64,
    /// Confusion counts indexed by [`BioTag::class_index`] (B, I, O).
    pub counts: [ClassCounts; NUM_CLASSES],
}

impl MetricReport {
    pub fn from_counts(counts: [ClassCounts; NUM_CLASSES]) -> Self {
        let b = counts[BioTag::B.class_index()];
        let i = counts[BioTag::I.class_index()];
        let (f1_b, f1_i) = (b.f1(), i.f1());
        MetricReport {
            precision_b: b.precision(),
            recall_b: b.recall(),
            f1_b,
            precision_i: i.precision(),
            recall_i: i.recall(),
            f1_i,
            mean_f1: (f1_b + f1_i) / 2.0,
            counts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one() {
        let mut tally = MetricTally::new();
        for tag in [BioTag::B, BioTag::I, BioTag::O, BioTag::B] {
            tally.record(tag, tag);
        }
        let report = tally.report();
        assert_eq!(report.f1_b, 1.0);
        assert_eq!(report.f1_i, 1.0);
        assert_eq!(report.mean_f1, 1.0);
    }

    #[test]
    fn all_outside_on_entity_data_scores_zero() {
        let mut tally = MetricTally::new();
        for gold in [BioTag::B, BioTag::I, BioTag::O, BioTag::O] {
            tally.record(gold, BioTag::O);
        }
        let report = tally.report();
        assert_eq!(report.f1_b, 0.0);
        assert_eq!(report.f1_i, 0.0);
        assert_eq!(report.mean_f1, 0.0);
        // No B was ever predicted: precision and recall are both defined as 0.
        assert_eq!(report.precision_b, 0.0);
        assert_eq!(report.recall_b, 0.0);
    }

    #[test]
    fn hand_tallied_half_precision_half_recall() {
        // 10 tokens, 2 gold B; one B predicted correctly, one spurious B.
        let gold = [
            BioTag::B,
            BioTag::O,
            BioTag::O,
            BioTag::B,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::O,
        ];
        let pred = [
            BioTag::B,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::B,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::O,
            BioTag::O,
        ];
        let mut tally = MetricTally::new();
        for (g, p) in gold.iter().zip(pred.iter()) {
            tally.record(*g, *p);
        }
        let report = tally.report();
        assert_eq!(report.precision_b, 0.5);
        assert_eq!(report.recall_b, 0.5);
        assert_eq!(report.f1_b, 0.5);
    }

    #[test]
    fn mean_is_average_of_b_and_i() {
        let mut tally = MetricTally::new();
        tally.record(BioTag::B, BioTag::B);
        tally.record(BioTag::I, BioTag::O);
        let report = tally.report();
        assert_eq!(report.mean_f1, (report.f1_b + report.f1_i) / 2.0);
    }
}
