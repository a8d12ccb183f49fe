use super::focal::FocalSet;

/// Number of query-key scores banded attention evaluates:
/// `Σ_f Σ_j (min(n-1, j+f) - max(0, j-f) + 1)`.
pub fn banded_score_count(n: usize, focal: &FocalSet) -> u64 {
    let mut total = 0u64;
    for &f in focal.lengths() {
        for j in 0..n {
            let lo = j.saturating_sub(f);
            let hi = (j + f).min(n - 1);
            total += (hi - lo + 1) as u64;
        }
    }
    total
}

pub fn dense_score_count(n: usize) -> u64 {
    (n as u64) * (n as u64)
}
