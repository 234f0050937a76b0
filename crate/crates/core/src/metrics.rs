//! Evaluation measures: error rate for single-label prediction, micro-
//! and macro-averaged F for multi-label prediction.
//!
//! The zero-denominator convention throughout is that a precision,
//! recall, or F1 of 0/0 counts as 0; a class with no gold and no
//! predicted positives therefore contributes 0 to the macro average.

use crate::error::{Error, Result};

/// Fraction of positions where the predicted class differs from gold.
pub fn error_rate(preds: &[usize], golds: &[usize]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::config(format!(
            "{} predictions against {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::data("error rate over an empty prediction set"));
    }
    let wrong = preds.iter().zip(golds).filter(|(p, g)| p != g).count();
    Ok(wrong as f64 / preds.len() as f64)
}

/// Predicted and gold class-id sets per document, over a fixed class
/// count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    classes: usize,
    docs: Vec<(Vec<usize>, Vec<usize>)>,
}

impl PredictionSet {
    pub fn new(classes: usize) -> Self {
        PredictionSet {
            classes,
            docs: Vec::new(),
        }
    }

    /// Adds one document's predicted and gold sets. Ids are deduplicated;
    /// out-of-range ids are rejected.
    pub fn push(&mut self, predicted: &[usize], gold: &[usize]) -> Result<()> {
        let normalize = |ids: &[usize], what: &str| -> Result<Vec<usize>> {
            if let Some(&bad) = ids.iter().find(|&&c| c >= self.classes) {
                return Err(Error::data(format!(
                    "{what} class id {bad} out of range for {} classes",
                    self.classes
                )));
            }
            let mut v = ids.to_vec();
            v.sort_unstable();
            v.dedup();
            Ok(v)
        };
        let p = normalize(predicted, "predicted")?;
        let g = normalize(gold, "gold")?;
        self.docs.push((p, g));
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

fn f1(tp: u64, fp: u64, fon: u64) -> f64 {
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fon == 0 {
        0.0
    } else {
        tp as f64 / (tp + fon) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Micro- and macro-averaged F1. Micro pools true/false positives and
/// false negatives over all classes before computing one F1; macro
/// averages the per-class F1 values with equal class weight.
pub fn f_measures(p: &PredictionSet) -> (f64, f64) {
    let k = p.classes;
    let mut tp = vec![0u64; k];
    let mut fp = vec![0u64; k];
    let mut fon = vec![0u64; k];
    for (pred, gold) in &p.docs {
        for &c in pred {
            if gold.binary_search(&c).is_ok() {
                tp[c] += 1;
            } else {
                fp[c] += 1;
            }
        }
        for &c in gold {
            if pred.binary_search(&c).is_err() {
                fon[c] += 1;
            }
        }
    }
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fon.iter().sum());
    let macro_f = if k == 0 {
        0.0
    } else {
        (0..k).map(|c| f1(tp[c], fp[c], fon[c])).sum::<f64>() / k as f64
    };
    (micro, macro_f)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_docs(classes: usize) -> impl Strategy<Value = Vec<(Vec<usize>, Vec<usize>)>> {
        let ids = prop::collection::vec(0..classes, 0..4);
        prop::collection::vec((ids.clone(), ids), 1..20)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn single_class_micro_equals_macro(docs in arb_docs(1)) {
            let mut p = PredictionSet::new(1);
            for (pred, gold) in &docs {
                p.push(pred, gold).unwrap();
            }
            let (micro, macro_f) = f_measures(&p);
            prop_assert_eq!(micro, macro_f);
        }

        #[test]
        fn document_order_does_not_matter(docs in arb_docs(3)) {
            let mut forward = PredictionSet::new(3);
            let mut backward = PredictionSet::new(3);
            for (pred, gold) in &docs {
                forward.push(pred, gold).unwrap();
            }
            for (pred, gold) in docs.iter().rev() {
                backward.push(pred, gold).unwrap();
            }
            prop_assert_eq!(f_measures(&forward), f_measures(&backward));
        }

        #[test]
        fn consistent_class_relabeling_does_not_matter(docs in arb_docs(3)) {
            // Rotate every id by one; both measures must be unchanged.
            let relabel = |ids: &[usize]| ids.iter().map(|c| (c + 1) % 3).collect::<Vec<_>>();
            let mut plain = PredictionSet::new(3);
            let mut rotated = PredictionSet::new(3);
            for (pred, gold) in &docs {
                plain.push(pred, gold).unwrap();
                rotated.push(&relabel(pred), &relabel(gold)).unwrap();
            }
            let (am, aa) = f_measures(&plain);
            let (bm, ba) = f_measures(&rotated);
            prop_assert!((am - bm).abs() < 1e-12);
            prop_assert!((aa - ba).abs() < 1e-12);
        }
    }
}
