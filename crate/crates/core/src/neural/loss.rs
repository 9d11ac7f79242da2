use crate::error::{invalid, shape, Result};

/// Floor added before taking logarithms, relative to unit-normalized targets.
pub const SMSLE_EPS: f64 = 1e-3;

/// Signed mean-squared logarithmic error and its gradient with respect to
/// `pred`:
/// `0.5 mean[(lg(x+ + e) - lg(y+ + e))^2] + 0.5 mean[(lg(x- + e) - lg(y- + e))^2]`
/// with `x+ = max(x, 0)`, `x- = max(-x, 0)`. At `x = 0` the gradient is the
/// one-sided derivative from the positive side.
pub fn smsle_loss(pred: &[f64], target: &[f64], eps: f64) -> Result<(f64, Vec<f64>)> {
    if !(eps > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {eps}")));
    }
    if pred.len() != target.len() {
        return Err(shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = pred.len() as f64;
    let ln10 = std::f64::consts::LN_10;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&x, &y)| {
            let dp = (x.max(0.0) + eps).log10() - (y.max(0.0) + eps).log10();
            let dn = ((-x).max(0.0) + eps).log10() - ((-y).max(0.0) + eps).log10();
            loss += dp * dp + dn * dn;
            if x >= 0.0 {
                dp / ((x + eps) * ln10 * n)
            } else {
                -dn / ((eps - x) * ln10 * n)
            }
        })
        .collect();
    Ok((0.5 * loss / n, grad))
}
