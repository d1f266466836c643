use super::NnError;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>, NnError> {
    let mut out = scores.to_vec();
    softmax_in_place(&mut out)?;
    Ok(out)
}

pub fn softmax_in_place(v: &mut [f64]) -> Result<(), NnError> {
    if v.is_empty() {
        return Err(NnError::EmptyInput);
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(NnError::NonFinite {
            index,
            value: v[index],
        });
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    Ok(())
}

/// `-Σ gold_i · ln(predicted_i)`; terms with `gold_i == 0` contribute nothing.
///
/// Composed with a softmax producing `predicted`, the gradient with respect to
/// the pre-softmax scores is `predicted - gold` (for `Σ gold = 1`).
pub fn cross_entropy(gold: &[f64], predicted: &[f64]) -> Result<f64, NnError> {
    if gold.len() != predicted.len() {
        return Err(NnError::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    if let Some(index) = predicted.iter().position(|&p| !(p > 0.0)) {
        return Err(NnError::NonPositivePrediction {
            index,
            value: predicted[index],
        });
    }
    Ok(-gold
        .iter()
        .zip(predicted)
        .filter(|(&g, _)| g != 0.0)
        .map(|(g, p)| g * p.ln())
        .sum::<f64>())
}

/// Shannon entropy in nats; the minimum of `cross_entropy(p, ·)`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}
