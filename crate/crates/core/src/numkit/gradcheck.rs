use super::NumError;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares the analytic gradient returned by `f` with central differences
/// at `point`, coordinate by coordinate.
///
/// The relative error of a coordinate is
/// `|analytic - numeric| / (|analytic| + |numeric| + 1e-12)`.
pub fn grad_check<F>(f: F, point: &[f64], h: f64) -> Result<GradCheckReport, NumError>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (value, grad) = f(point);
    if !value.is_finite() {
        return Err(NumError::NonFinite("function value"));
    }
    if grad.len() != point.len() {
        return Err(NumError::ShapeMismatch {
            expected: point.len(),
            got: grad.len(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(NumError::NonFinite("analytic gradient"));
    }

    let mut x = point.to_vec();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_index: 0,
        analytic: grad.first().copied().unwrap_or(0.0),
        numeric: grad.first().copied().unwrap_or(0.0),
    };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let (fp, _) = f(&x);
        x[i] = orig - h;
        let (fm, _) = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(NumError::NonFinite("function value"));
        }
        let numeric = (fp - fm) / (2.0 * h);
        let rel = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs() + 1e-12);
        if rel > report.max_rel_err {
            report = GradCheckReport {
                max_rel_err: rel,
                worst_index: i,
                analytic: grad[i],
                numeric,
            };
        }
    }
    Ok(report)
}
