//! Small order-statistics helpers shared by repair, onset detection and
//! slope fitting.

/// Median of the finite entries. Returns None when nothing is finite.
pub(crate) fn median_finite(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Median absolute deviation about the median, over finite entries.
pub(crate) fn mad_finite(values: &[f64], median: f64) -> Option<f64> {
    let devs: Vec<f64> = values
        .iter()
        .filter(|x| x.is_finite())
        .map(|x| (x - median).abs())
        .collect();
    median_finite(&devs)
}

/// Ordinary least squares `y = slope * x + intercept` plus R^2.
///
/// R^2 is defined as 1 when the total sum of squares vanishes (constant y),
/// since the fit is then exact.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let pred = slope * xi + intercept;
        ss_res += (yi - pred) * (yi - pred);
        ss_tot += (yi - my) * (yi - my);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, intercept, r2)
}
