//! Classification metrics.

use alloc::collections::BTreeMap;

use crate::{Error, Result};

/// Fraction of predictions equal to the gold class.
pub fn accuracy(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    check(predicted, gold)?;
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Unweighted mean of per-class F1 over the classes present in `gold`.
/// Classes that are only predicted contribute nothing.
pub fn macro_f1(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    check(predicted, gold)?;
    // class -> (tp, fp, fn)
    let mut counts: BTreeMap<usize, (u64, u64, u64)> = BTreeMap::new();
    for &g in gold {
        counts.entry(g).or_default();
    }
    for (&p, &g) in predicted.iter().zip(gold) {
        if p == g {
            counts.get_mut(&g).expect("gold class").0 += 1;
        } else {
            counts.get_mut(&g).expect("gold class").2 += 1;
            if let Some(c) = counts.get_mut(&p) {
                c.1 += 1;
            }
        }
    }
    let total: f64 = counts
        .values()
        .map(|&(tp, fp, fneg)| {
            if tp == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
            }
        })
        .sum();
    Ok(total / counts.len() as f64)
}

fn check(predicted: &[usize], gold: &[usize]) -> Result<()> {
    if gold.is_empty() {
        return Err(Error::Data("no samples to evaluate".into()));
    }
    if predicted.len() != gold.len() {
        return Err(Error::Data(alloc::format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    Ok(())
}
