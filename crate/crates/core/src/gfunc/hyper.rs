use super::params::{near_integer, EvalPolicy};
use super::{GfuncError, Result};

/// Generalized hypergeometric series `pFq(a_num; b_den; z)` in real arithmetic.
///
/// Summation stops once three consecutive terms fall below
/// `series_tol·|partial sum|` while the term ratio is below one. Slowly
/// converging alternating `p = q + 1` series that exhaust `max_terms` are
/// finished with Wynn's epsilon algorithm. A sum whose largest term exceeds
/// it by more than eight orders of magnitude is rejected as
/// [`GfuncError::PrecisionLoss`].
pub fn pfq(a_num: &[f64], b_den: &[f64], z: f64, policy: &EvalPolicy) -> Result<f64> {
    for &b in b_den {
        if b <= 0.0 && near_integer(b, 0.0).is_some() {
            return Err(GfuncError::Pole(b));
        }
    }
    if !z.is_finite() {
        return Err(GfuncError::InvalidParams(format!("pFq argument {z}")));
    }
    let terminating = a_num
        .iter()
        .any(|&a| a <= 0.0 && near_integer(a, 0.0).is_some());
    if !terminating && z != 0.0 {
        if a_num.len() > b_den.len() + 1 {
            return Err(GfuncError::Divergence(format!(
                "{}F{} has zero radius of convergence",
                a_num.len(),
                b_den.len()
            )));
        }
        // z = -1 is left to the series and its accelerated tail (Abel sum)
        if a_num.len() == b_den.len() + 1 && (z.abs() > 1.0 || z == 1.0) {
            return Err(GfuncError::Divergence(format!(
                "{}F{} needs |z| < 1 or z = -1, got {z}",
                a_num.len(),
                b_den.len()
            )));
        }
    }
    series(a_num, b_den, z, policy)
}

/// Largest tolerated ratio between the biggest term and the final sum.
const CANCELLATION_LIMIT: f64 = 1e8;

fn cancellation_check(peak: f64, sum: f64) -> Result<f64> {
    let scale = sum.abs().max(1.0);
    if peak > CANCELLATION_LIMIT * scale {
        return Err(GfuncError::PrecisionLoss((peak / scale).log10()));
    }
    Ok(sum)
}

fn series(a_num: &[f64], b_den: &[f64], z: f64, policy: &EvalPolicy) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut peak = 1.0_f64;
    let mut small_run = 0;
    for k in 0..policy.max_terms {
        let kf = k as f64;
        let mut ratio = z / (kf + 1.0);
        for &a in a_num {
            ratio *= a + kf;
        }
        for &b in b_den {
            ratio /= b + kf;
        }
        term *= ratio;
        sum += term;
        peak = peak.max(term.abs());
        if term == 0.0 {
            return cancellation_check(peak, sum);
        }
        if !sum.is_finite() {
            return Err(GfuncError::NonConvergence { terms: k + 1 });
        }
        if term.abs() < policy.series_tol * sum.abs() && ratio.abs() < 1.0 {
            small_run += 1;
            if small_run >= 3 {
                return cancellation_check(peak, sum);
            }
        } else {
            small_run = 0;
        }
    }
    if a_num.len() == b_den.len() + 1 && z < 0.0 {
        let partials = partial_sums(a_num, b_den, z, policy.max_terms);
        if let Some((est, err)) = wynn_epsilon(&partials) {
            if err <= 10.0 * policy.series_tol * est.abs() {
                return Ok(est);
            }
        }
    }
    Err(GfuncError::NonConvergence {
        terms: policy.max_terms,
    })
}

fn partial_sums(a_num: &[f64], b_den: &[f64], z: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    out.push(sum);
    for k in 0..n {
        let kf = k as f64;
        let mut ratio = z / (kf + 1.0);
        for &a in a_num {
            ratio *= a + kf;
        }
        for &b in b_den {
            ratio /= b + kf;
        }
        term *= ratio;
        sum += term;
        out.push(sum);
    }
    out
}

/// Wynn's epsilon algorithm over a sequence of partial sums. Returns the
/// even-column estimate with the smallest difference to its predecessor,
/// together with that difference.
fn wynn_epsilon(sums: &[f64]) -> Option<(f64, f64)> {
    if sums.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, f64)> = None;
    let mut prev = vec![0.0; sums.len() + 1];
    let mut cur = sums.to_vec();
    let mut col = 0usize;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff == 0.0 {
                return best.or(Some((cur[j + 1], 0.0)));
            }
            next.push(prev[j + 1] + 1.0 / diff);
        }
        col += 1;
        if col.is_multiple_of(2) && next.len() >= 2 {
            let last = next[next.len() - 1];
            let err = (last - next[next.len() - 2]).abs();
            if last.is_finite() && err.is_finite() && best.is_none_or(|(_, e)| err < e) {
                best = Some((last, err));
            }
        }
        prev = cur;
        cur = next;
    }
    best
}
