//! Central finite differences against reverse-mode gradients.

use alloc::string::{String, ToString};

use super::tape::{Gradients, ParamId, ParamStore, Tape, Var};

/// Smallest denominator used when forming relative errors, so that
/// gradients that are zero up to rounding are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub n_checked: usize,
}

impl GradcheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Checks every entry of `params` (all parameters when `None`) with step `eps`.
pub fn gradcheck<F>(
    store: &mut ParamStore,
    params: Option<&[ParamId]>,
    eps: f64,
    loss_fn: F,
) -> GradcheckReport
where
    F: Fn(&mut Tape) -> Var,
{
    let mut grads = Gradients::zeros_like(store);
    {
        let mut t = Tape::new(store);
        let loss = loss_fn(&mut t);
        t.backward(loss, &mut grads);
    }
    let eval = |store: &ParamStore| {
        let mut t = Tape::new(store);
        let loss = loss_fn(&mut t);
        t.scalar(loss)
    };

    let all: alloc::vec::Vec<ParamId> = store.ids().collect();
    let ids = params.unwrap_or(&all);
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst: None,
        n_checked: 0,
    };
    for &id in ids {
        for i in 0..store.get(id).len() {
            let orig = store.get(id).data[i];
            store.get_mut(id).data[i] = orig + eps;
            let plus = eval(store);
            store.get_mut(id).data[i] = orig - eps;
            let minus = eval(store);
            store.get_mut(id).data[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(grads.get(id).data[i], numeric);
            report.n_checked += 1;
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
                report.worst = Some((store.name(id).to_string(), i));
            }
        }
    }
    report
}
