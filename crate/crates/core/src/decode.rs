//! Turning per-class scores into predictions.

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// All classes scoring strictly above `threshold`; when none does, the
/// single argmax class.
pub fn threshold_decode(values: &[f64], threshold: f64) -> Vec<usize> {
    let picked: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > threshold)
        .collect();
    if picked.is_empty() && !values.is_empty() {
        vec![argmax(values)]
    } else {
        picked
    }
}
