//! Activity error rate and channel-estimation NMSE.

use std::collections::BTreeMap;

use crate::channel::DdCir;
use crate::error::{Error, Result};

/// `(|true \ est| + |est \ true|) / K`, with the two counts.
pub fn compute_aer(true_ats: &[usize], est_ats: &[usize], k: usize) -> (f64, usize, usize) {
    let misses = true_ats.iter().filter(|t| !est_ats.contains(t)).count();
    let false_alarms = est_ats.iter().filter(|e| !true_ats.contains(e)).count();
    ((misses + false_alarms) as f64 / k.max(1) as f64, misses, false_alarms)
}

/// Mean over terminals in `common` of `||h_hat - h||^2 / ||h||^2`;
/// terminals with `||h|| = 0` are skipped. `None` when nothing remains.
pub fn compute_nmse(
    truth: &BTreeMap<usize, DdCir>,
    estimate: &BTreeMap<usize, DdCir>,
    common: &[usize],
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0;
    for id in common {
        let (Some(h), Some(e)) = (truth.get(id), estimate.get(id)) else {
            continue;
        };
        if h.coeffs.shape() != e.coeffs.shape() {
            return Err(Error::dim(
                format!("{:?}", h.coeffs.shape()),
                format!("{:?}", e.coeffs.shape()),
            ));
        }
        let norm = h.energy();
        if norm == 0.0 {
            continue;
        }
        let err: f64 = h
            .coeffs
            .as_slice()
            .iter()
            .zip(e.coeffs.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        sum += err / norm;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}
