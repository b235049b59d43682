use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::shape("labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores contain NaN".into()));
    }
    Ok(())
}

fn sorted_pairs<T: Scalar>(scores: &[T], labels: &[bool], descending: bool) -> Vec<(T, bool)> {
    let mut pairs: Vec<(T, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| {
        let ord = a.0.partial_cmp(&b.0).expect("NaN filtered");
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    pairs
}

/// Calls `f(positives, negatives)` for each block of equal scores.
fn for_each_tie_block<T: Scalar>(pairs: &[(T, bool)], mut f: impl FnMut(usize, usize)) {
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        let (mut pos, mut neg) = (0, 0);
        while i < pairs.len() && pairs[i].0 == v {
            if pairs[i].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        f(pos, neg);
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(s+ > s-) + P(s+ == s-) / 2`, using mid-ranks for ties.
pub fn auroc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    check(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let pairs = sorted_pairs(scores, labels, false);
    // twice the rank sum of positives, kept integral
    let mut rank2 = 0u128;
    let mut seen = 0u128;
    for_each_tie_block(&pairs, |p, n| {
        let size = (p + n) as u128;
        let mid2 = 2 * seen + size + 1;
        rank2 += mid2 * p as u128;
        seen += size;
    });
    let numer = rank2 - pos * (pos + 1);
    Ok(numer as f64 / (2 * pos * neg) as f64)
}

/// Step-wise average precision: tie blocks are taken whole, and each block's
/// recall gain is weighted by the precision at that cutoff.
pub fn auprc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    check(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(Error::NoPositives);
    }
    let pairs = sorted_pairs(scores, labels, true);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut weighted = 0.0;
    for_each_tie_block(&pairs, |p, n| {
        tp += p;
        fp += n;
        if p > 0 {
            weighted += tp as f64 / (tp + fp) as f64 * p as f64;
        }
    });
    Ok(weighted / total_pos as f64)
}
