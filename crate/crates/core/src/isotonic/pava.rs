use std::ops::Range;

use super::{IsotonicError, IsotonicFit, WeightedSequence};

/// Pool-adjacent-violators on a weighted sequence.
pub fn pava(seq: &WeightedSequence) -> Result<IsotonicFit, IsotonicError> {
    let chain: Vec<usize> = (0..seq.values.len()).collect();
    let (fitted, blocks) = pava_on_chain(&seq.values, &seq.weights, &chain);
    Ok(IsotonicFit { fitted, blocks })
}

/// PAVA along `chain` (element indices, lowest first). Returns fitted values
/// indexed by element and the blocks as ranges of chain positions.
pub(crate) fn pava_on_chain(values: &[f64], weights: &[f64], chain: &[usize]) -> (Vec<f64>, Vec<Range<usize>>) {
    // Each block: (weighted sum, weight, start position).
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(chain.len());
    for (pos, &i) in chain.iter().enumerate() {
        let mut cur = (weights[i] * values[i], weights[i], pos);
        while let Some(&(s, w, start)) = stack.last() {
            if s / w >= cur.0 / cur.1 {
                stack.pop();
                cur = (s + cur.0, w + cur.1, start);
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    let mut fitted = vec![0.0; values.len()];
    let mut blocks = Vec::with_capacity(stack.len());
    for (k, &(s, w, start)) in stack.iter().enumerate() {
        let end = stack.get(k + 1).map_or(chain.len(), |b| b.2);
        let m = s / w;
        for &i in &chain[start..end] {
            fitted[i] = m;
        }
        blocks.push(start..end);
    }
    (fitted, blocks)
}
