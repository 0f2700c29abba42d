use super::params::{EvalPolicy, MeijerGParams};
use super::slater::PreparedG;
use super::{GfuncError, Result};

/// Central-difference gradient with respect to `a…, b…, exponent, scale`.
/// Coordinates whose perturbed evaluation failed hold `NaN` and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub values: Vec<f64>,
    pub failed: Vec<bool>,
}

impl ParamGradient {
    pub fn any_failed(&self) -> bool {
        self.failed.iter().any(|&f| f)
    }
}

/// Values and parameter sensitivities of one G-function over a batch of
/// arguments. `rows[i][k]` is `∂G(z_k)/∂θ_i` in [`MeijerGParams::to_vec`]
/// order.
#[derive(Debug, Clone)]
pub struct ParamJacobian {
    pub values: Vec<f64>,
    /// `dG/dz` at each clamped argument.
    pub dz: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub failed: Vec<bool>,
}

fn step(theta: f64, eps: f64) -> f64 {
    eps * theta.abs().max(1.0)
}

/// Batched form of [`grad_params`]. Gamma prefactors are prepared once per
/// perturbed parameter vector; the inner exponent and scale go through the
/// chain rule on a central difference in the inner argument.
pub fn param_jacobian(
    g: &MeijerGParams,
    zs: &[f64],
    eps: f64,
    policy: &EvalPolicy,
) -> Result<ParamJacobian> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(GfuncError::InvalidParams(format!("eps must lie in (0, 0.1), got {eps}")));
    }
    let base = PreparedG::new(g, policy)?;
    let zc: Vec<f64> = zs.iter().map(|&z| policy.clamp(z)).collect();
    let xs: Vec<f64> = zc.iter().map(|&z| g.inner(z)).collect();
    let values = xs
        .iter()
        .map(|&x| base.eval_inner(x))
        .collect::<Result<Vec<f64>>>()?;

    let pq = g.config.p + g.config.q;
    let mut rows = Vec::with_capacity(pq + 2);
    let mut failed = vec![false; pq + 2];
    let theta = g.to_vec();
    for i in 0..pq {
        let h = step(theta[i], eps);
        let row = (|| -> Result<Vec<f64>> {
            let mut plus = g.clone();
            let mut minus = g.clone();
            let mut t = theta.clone();
            t[i] = theta[i] + h;
            plus.set_from_slice(&t);
            t[i] = theta[i] - h;
            minus.set_from_slice(&t);
            let gp = PreparedG::new(&plus, policy)?;
            let gm = PreparedG::new(&minus, policy)?;
            xs.iter()
                .map(|&x| Ok((gp.eval_inner(x)? - gm.eval_inner(x)?) / (2.0 * h)))
                .collect()
        })();
        match row {
            Ok(r) => rows.push(r),
            Err(_) => {
                failed[i] = true;
                rows.push(vec![f64::NAN; xs.len()]);
            }
        }
    }

    // dG/dx by central difference in the inner argument x = s·z^r
    let dgdx: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let h = eps * x;
            match (base.eval_inner(x + h), base.eval_inner(x - h)) {
                (Ok(p), Ok(m)) => (p - m) / (2.0 * h),
                _ => f64::NAN,
            }
        })
        .collect();
    let (r, s) = (g.exponent, g.scale);
    let row_r: Vec<f64> = dgdx
        .iter()
        .zip(&xs)
        .zip(&zc)
        .map(|((d, x), z)| d * x * z.ln())
        .collect();
    let row_s: Vec<f64> = dgdx.iter().zip(&xs).map(|(d, x)| d * x / s).collect();
    let dz: Vec<f64> = dgdx
        .iter()
        .zip(&xs)
        .zip(&zc)
        .map(|((d, x), z)| d * x * r / z)
        .collect();
    if dgdx.iter().any(|v| v.is_nan()) {
        failed[pq] = true;
        failed[pq + 1] = true;
    }
    rows.push(row_r);
    rows.push(row_s);
    Ok(ParamJacobian {
        values,
        dz,
        rows,
        failed,
    })
}

/// Gradient of `G(z)` with respect to all `p+q+2` real parameters at one
/// argument. `eps` is relative to `max(1, |θ_i|)`.
pub fn grad_params(
    g: &MeijerGParams,
    z: f64,
    eps: f64,
    policy: &EvalPolicy,
) -> Result<ParamGradient> {
    let jac = param_jacobian(g, &[z], eps, policy)?;
    Ok(ParamGradient {
        values: jac.rows.iter().map(|r| r[0]).collect(),
        failed: jac.failed,
    })
}

fn check_interval(z: f64, eps: f64) -> Result<()> {
    if !(eps > 0.0) || z - eps <= 0.0 || z + eps >= 1.0 {
        return Err(GfuncError::InvalidParams(format!(
            "z ± eps must stay inside (0, 1), got z = {z}, eps = {eps}"
        )));
    }
    Ok(())
}

/// `dG(s·z^r)/dz` by a central difference of step `eps` in `z`.
pub fn grad_z(g: &MeijerGParams, z: f64, eps: f64, policy: &EvalPolicy) -> Result<f64> {
    check_interval(z, eps)?;
    let pg = PreparedG::new(g, policy)?;
    let plus = pg.eval_inner(g.inner(z + eps))?;
    let minus = pg.eval_inner(g.inner(z - eps))?;
    Ok((plus - minus) / (2.0 * eps))
}

/// `d²G(s·z^r)/dz²` by a three-point difference of step `eps` in `z`.
pub fn grad_z2(g: &MeijerGParams, z: f64, eps: f64, policy: &EvalPolicy) -> Result<f64> {
    check_interval(z, eps)?;
    let pg = PreparedG::new(g, policy)?;
    let plus = pg.eval_inner(g.inner(z + eps))?;
    let mid = pg.eval_inner(g.inner(z))?;
    let minus = pg.eval_inner(g.inner(z - eps))?;
    Ok((plus - 2.0 * mid + minus) / (eps * eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::{meijer_g_contour, Config, ContourConfig};

    fn ext(c: (usize, usize, usize, usize), a: &[f64], b: &[f64]) -> MeijerGParams {
        MeijerGParams::new(Config::new(c.0, c.1, c.2, c.3), a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn derivative_in_z() {
        let p = EvalPolicy::default();
        let e = ext((1, 0, 0, 1), &[], &[0.0]);
        assert!((grad_z(&e, 0.5, 1e-5, &p).unwrap() + (-0.5f64).exp()).abs() < 1e-8);
        let r = ext((1, 1, 1, 1), &[1.0], &[1.0]);
        let d = grad_z(&r, 0.5, 1e-5, &p).unwrap();
        assert!((d - 4.0 / 9.0).abs() < 1e-8);
        // one-sided differences bracket the central one on a convex function
        let h = 1e-3;
        let f = |z: f64| crate::gfunc::meijer_g(&e, z, &p).unwrap();
        let fwd = (f(0.5 + h) - f(0.5)) / h;
        let bwd = (f(0.5) - f(0.5 - h)) / h;
        let c = grad_z(&e, 0.5, h, &p).unwrap();
        assert!(bwd < c && c < fwd);
        assert!((grad_z2(&e, 0.5, 1e-4, &p).unwrap() - (-0.5f64).exp()).abs() < 1e-6);
        assert!(grad_z(&e, 0.5, 0.6, &p).is_err());
    }

    #[test]
    fn b_gradient_matches_contour_difference() {
        let p = EvalPolicy::default();
        let g = ext((1, 0, 0, 1), &[], &[0.0]);
        let grad = grad_params(&g, 0.5, 1e-6, &p).unwrap();
        assert_eq!(grad.values.len(), 3);
        assert!(!grad.any_failed());
        let cfg = ContourConfig::default();
        let h = 1e-4;
        let plus = meijer_g_contour(&ext((1, 0, 0, 1), &[], &[h]), 0.5, &cfg).unwrap();
        let minus = meijer_g_contour(&ext((1, 0, 0, 1), &[], &[-h]), 0.5, &cfg).unwrap();
        let oracle = (plus - minus) / (2.0 * h);
        assert!((grad.values[0] - oracle).abs() < 1e-4, "{} vs {oracle}", grad.values[0]);
    }

    #[test]
    fn scale_gradient_is_chain_rule() {
        let p = EvalPolicy::default();
        for g in [
            ext((1, 0, 0, 1), &[], &[0.0]),
            ext((2, 1, 2, 3), &[0.3, 1.4], &[0.2, -0.35, 0.9]),
        ] {
            let z = 0.4;
            let grad = grad_params(&g, z, 1e-6, &p).unwrap();
            let dz = grad_z(&g, z, 1e-6, &p).unwrap();
            let s_idx = g.config.n_params() - 1;
            assert!((grad.values[s_idx] - z * dz).abs() < 1e-5);
        }
    }

    #[test]
    fn central_differences_are_second_order() {
        let p = EvalPolicy::default();
        let g = ext((2, 0, 1, 3), &[1.3], &[0.4, -0.2, 0.75]);
        let fine = grad_params(&g, 0.45, 1e-5, &p).unwrap().values;
        let coarse = grad_params(&g, 0.45, 4e-2, &p).unwrap().values;
        let half = grad_params(&g, 0.45, 2e-2, &p).unwrap().values;
        for i in 0..g.config.p + g.config.q {
            let e1 = (coarse[i] - fine[i]).abs();
            let e2 = (half[i] - fine[i]).abs();
            // error ratio near 4 when halving the step
            assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "i={i}: {e1} {e2}");
        }
    }

    #[test]
    fn batched_matches_single() {
        let p = EvalPolicy::default();
        let g = ext((2, 2, 3, 3), &[0.3, -0.7, 1.1], &[0.2, -0.45, 0.8])
            .with_transform(1.3, 0.8)
            .unwrap();
        let zs = [0.2, 0.5, 0.8];
        let jac = param_jacobian(&g, &zs, 1e-6, &p).unwrap();
        for (k, &z) in zs.iter().enumerate() {
            let single = grad_params(&g, z, 1e-6, &p).unwrap();
            for i in 0..single.values.len() {
                assert_eq!(single.values[i].to_bits(), jac.rows[i][k].to_bits());
            }
        }
    }
}
