use super::{GradTape, Gradients, NnError, QNet};
use crate::kg::Statement;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub n_params: usize,
    pub max_rel_err: f64,
    /// Flat index and tensor name of the worst parameter.
    pub worst: Option<(usize, String)>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Analytic gradient of `Σ_a w_a Q(a)` with respect to every parameter.
pub fn analytic_gradient(net: &QNet, stores: &[&[Statement]], weights: &[f64]) -> Result<Vec<f64>, NnError> {
    let mut tape = GradTape::new();
    net.forward_taped(stores, &mut tape)?;
    let mut grads = Gradients::zeros(net);
    tape.backward(net, weights, &mut grads)?;
    Ok(grads.finalize(net).to_vec())
}

/// Compares the analytic gradient of `Σ_a w_a Q(a)` against central
/// differences with step `eps` on every parameter.
pub fn gradcheck(net: &QNet, stores: &[&[Statement]], weights: &[f64], eps: f64, floor: f64) -> Result<GradCheckReport, NnError> {
    let analytic = analytic_gradient(net, stores, weights)?;
    let loss = |n: &QNet| -> Result<f64, NnError> {
        Ok(n.forward(stores)?.q.iter().zip(weights).map(|(q, w)| q * w).sum())
    };
    let mut probe = net.clone();
    let mut report = GradCheckReport {
        n_params: analytic.len(),
        max_rel_err: 0.0,
        worst: None,
    };
    for (i, &a) in analytic.iter().enumerate() {
        let orig = net.params()[i];
        probe.update(|p| p[i] = orig + eps);
        let up = loss(&probe)?;
        probe.update(|p| p[i] = orig - eps);
        let down = loss(&probe)?;
        probe.update(|p| p[i] = orig);
        let err = relative_error(a, (up - down) / (2.0 * eps), floor);
        if report.worst.is_none() || err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = Some((i, net.param_name(i).unwrap_or("?").to_owned()));
        }
    }
    Ok(report)
}
