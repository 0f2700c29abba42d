use super::gamma::ln_gamma;
use super::hyper::pfq;
use super::contour::{contour_at, ContourConfig};
use super::params::{EvalPolicy, MeijerGParams};
use super::{GfuncError, Result};

/// Residue contribution of one `b`-pole family member:
/// `sign·exp(ln_scale)·w^power·pFq(num; den; arg_sign·w)`.
#[derive(Debug, Clone)]
struct ResidueTerm {
    ln_scale: f64,
    sign: f64,
    power: f64,
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Expansion {
    terms: Vec<ResidueTerm>,
    arg_sign: f64,
}

impl Expansion {
    /// Slater-type sum over the poles of `Γ(b_h - s)`, `h < m`.
    fn build(m: usize, n: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        let p = a.len();
        let mut terms = Vec::with_capacity(m);
        'family: for h in 0..m {
            let bh = b[h];
            let mut ln_scale = 0.0;
            let mut sign = 1.0;
            for (j, &bj) in b.iter().enumerate().take(m) {
                if j != h {
                    let g = ln_gamma(bj - bh).map_err(|_| GfuncError::Pole(bj - bh))?;
                    ln_scale += g.ln_abs;
                    sign *= g.sign;
                }
            }
            for &aj in &a[..n] {
                // a pole here means an a-pole sits on a b-pole
                let g = ln_gamma(1.0 + bh - aj).map_err(|_| GfuncError::Pole(1.0 + bh - aj))?;
                ln_scale += g.ln_abs;
                sign *= g.sign;
            }
            for &bj in &b[m..] {
                match ln_gamma(1.0 + bh - bj) {
                    Ok(g) => {
                        ln_scale -= g.ln_abs;
                        sign *= g.sign;
                    }
                    // 1/Γ vanishes: the whole residue series is zero
                    Err(GfuncError::Pole(_)) => continue 'family,
                    Err(e) => return Err(e),
                }
            }
            for &aj in &a[n..] {
                match ln_gamma(aj - bh) {
                    Ok(g) => {
                        ln_scale -= g.ln_abs;
                        sign *= g.sign;
                    }
                    Err(GfuncError::Pole(_)) => continue 'family,
                    Err(e) => return Err(e),
                }
            }
            let num = a.iter().map(|&aj| 1.0 + bh - aj).collect();
            let den = b
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != h)
                .map(|(_, &bj)| 1.0 + bh - bj)
                .collect();
            terms.push(ResidueTerm {
                ln_scale,
                sign,
                power: bh,
                num,
                den,
            });
        }
        let parity = (p as i64 - m as i64 - n as i64).rem_euclid(2);
        Ok(Expansion {
            terms,
            arg_sign: if parity == 0 { 1.0 } else { -1.0 },
        })
    }

    fn eval(&self, w: f64, policy: &EvalPolicy) -> Result<f64> {
        let ln_w = w.ln();
        let mut total = 0.0;
        for t in &self.terms {
            let series = pfq(&t.num, &t.den, self.arg_sign * w, policy)?;
            total += t.sign * series * (t.ln_scale + t.power * ln_w).exp();
        }
        Ok(total)
    }
}

/// A G-function with its Gamma prefactors precomputed, ready for repeated
/// evaluation at many arguments.
#[derive(Debug, Clone)]
pub struct PreparedG {
    params: MeijerGParams,
    policy: EvalPolicy,
    /// Expansion in `s·z^r`; used when `p < q`, or `p == q` and `s·z^r < 1`.
    direct: Option<Expansion>,
    /// Expansion in `1/(s·z^r)` through
    /// `G^{m,n}_{p,q}(x | a; b) = G^{n,m}_{q,p}(1/x | 1-b; 1-a)`.
    inverted: Option<Expansion>,
}

impl PreparedG {
    pub fn new(params: &MeijerGParams, policy: &EvalPolicy) -> Result<Self> {
        params.validate()?;
        policy.validate()?;
        let c = params.config;
        let direct = if c.p <= c.q {
            let g = params.jittered_for(policy, false);
            Some(Expansion::build(c.m, c.n, &g.a, &g.b)?)
        } else {
            None
        };
        let inverted = if c.p >= c.q {
            let g = params.jittered_for(policy, true);
            let a: Vec<f64> = g.b.iter().map(|v| 1.0 - v).collect();
            let b: Vec<f64> = g.a.iter().map(|v| 1.0 - v).collect();
            Some(Expansion::build(c.n, c.m, &a, &b)?)
        } else {
            None
        };
        Ok(PreparedG {
            params: params.clone(),
            policy: *policy,
            direct,
            inverted,
        })
    }

    pub fn params(&self) -> &MeijerGParams {
        &self.params
    }

    /// `G(s·z^r)` with `z` clamped into `[ε, 1-ε]`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        let zc = self.policy.clamp(z);
        self.eval_inner(self.params.inner(zc))
    }

    /// Checks that both ends of the clamped unit interval evaluate.
    pub fn check_range(&self) -> Result<()> {
        self.eval(0.0)?;
        self.eval(1.0)?;
        Ok(())
    }

    /// Evaluates at an already-transformed argument `x = s·z^r > 0`.
    pub fn eval_inner(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(GfuncError::InvalidParams(format!(
                "G-function argument must be positive and finite, got {x}"
            )));
        }
        let use_direct = match (&self.direct, &self.inverted) {
            (Some(_), None) => true,
            (None, Some(_)) => false,
            _ => x < 1.0,
        };
        let value = if use_direct {
            self.direct.as_ref().unwrap().eval(x, &self.policy)
        } else {
            self.inverted.as_ref().unwrap().eval(1.0 / x, &self.policy)
        };
        match value {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(GfuncError::NonConvergence { terms: 0 }),
            // near |x| = 1 with p == q both series converge too slowly
            Err(e @ GfuncError::NonConvergence { .. }) => {
                contour_at(&self.params, x, &ContourConfig::default()).map_err(|_| e)
            }
            Err(e) => Err(e),
        }
    }
}

/// `G^{m,n}_{p,q}(a; b | s·z^r)` for `z` in the open unit interval.
pub fn meijer_g(g: &MeijerGParams, z: f64, policy: &EvalPolicy) -> Result<f64> {
    PreparedG::new(g, policy)?.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::Config;
    use std::f64::consts::PI;

    fn ext(c: (usize, usize, usize, usize), a: &[f64], b: &[f64]) -> MeijerGParams {
        MeijerGParams::new(Config::new(c.0, c.1, c.2, c.3), a.to_vec(), b.to_vec()).unwrap()
    }

    /// Taylor series of exp(-z), summed independently.
    fn exp_neg_oracle(z: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= -z / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn negative_exponential() {
        let p = EvalPolicy::default();
        let g = ext((1, 0, 0, 1), &[], &[0.0]);
        let v = meijer_g(&g, 0.5, &p).unwrap();
        assert!((v - 0.606_530_659_7).abs() < 1e-10);
        assert!((v - exp_neg_oracle(0.5)).abs() < 1e-12);
    }

    #[test]
    fn rational_and_log() {
        let p = EvalPolicy::default();
        let g = ext((1, 1, 1, 1), &[1.0], &[1.0]);
        assert!((meijer_g(&g, 0.5, &p).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        let g = ext((1, 2, 2, 2), &[1.0, 1.0], &[1.0, 0.0]);
        assert!((meijer_g(&g, 0.5, &p).unwrap() - 0.405_465_108_1).abs() < 1e-10);
    }

    #[test]
    fn sine_and_cosine_from_the_bessel_family() {
        let p = EvalPolicy::default();
        let s = ext((1, 0, 0, 2), &[], &[0.5, 0.0]);
        let c = ext((1, 0, 0, 2), &[], &[0.0, 0.5]);
        for z in [0.1, 0.5, 0.9] {
            let x = 2.0 * f64::sqrt(z);
            assert!((meijer_g(&s, z, &p).unwrap() - x.sin() / PI.sqrt()).abs() < 1e-12);
            assert!((meijer_g(&c, z, &p).unwrap() - x.cos() / PI.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_transform_and_clamp() {
        let p = EvalPolicy::default();
        let g = ext((1, 0, 0, 1), &[], &[0.0]).with_transform(2.0, 3.0).unwrap();
        let v = meijer_g(&g, 0.5, &p).unwrap();
        assert!((v - (-0.75f64).exp()).abs() < 1e-12);
        let e = ext((1, 0, 0, 1), &[], &[0.0]);
        assert_eq!(meijer_g(&e, 0.0, &p).unwrap(), meijer_g(&e, 1e-6, &p).unwrap());
        assert_eq!(meijer_g(&e, 1.0, &p).unwrap(), meijer_g(&e, 1.0 - 1e-6, &p).unwrap());
    }

    #[test]
    fn p_equals_q_crosses_the_unit_circle() {
        let p = EvalPolicy::default();
        // x/(1+x) on both sides of |x| = 1 via the scale
        let g = ext((1, 1, 1, 1), &[1.0], &[1.0]);
        for s in [0.5, 1.0 / 0.9, 1.5, 4.0, 1e4] {
            let gs = g.clone().with_transform(1.0, s).unwrap();
            let v = meijer_g(&gs, 0.9, &p).unwrap();
            let x = 0.9 * s;
            assert!((v - x / (1.0 + x)).abs() < 1e-10, "s={s}: {v}");
        }
        // ln(1+x) right below the circle needs the accelerated tail
        let g = ext((1, 2, 2, 2), &[1.0, 1.0], &[1.0, 0.0]);
        let gs = g.with_transform(1.0, 1.0 / 0.9 - 1e-5).unwrap();
        let v = meijer_g(&gs, 0.9, &p).unwrap();
        assert!((v - (1.0 + 0.9 * gs.scale).ln()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn slow_series_near_the_circle_fall_back_to_the_contour() {
        let p = EvalPolicy::default();
        let g = ext(
            (2, 2, 3, 3),
            &[-1.1954431070499332, -0.6538630969889772, -0.940873109295885],
            &[0.20019837312727376, 0.6607379795841879, 0.018872787010565644],
        )
        .with_transform(1.4220609925914376, 1.6168307765319543)
        .unwrap();
        let z = 0.7167679093440443;
        let x = g.inner(z);
        let pg = PreparedG::new(&g, &p).unwrap();
        assert!(pg.inverted.as_ref().unwrap().eval(1.0 / x, &p).is_err());
        let v = pg.eval(z).unwrap();
        let fine = ContourConfig {
            n_nodes: 16384,
            half_height: 60.0,
            ..Default::default()
        };
        assert!((v - contour_at(&g, x, &fine).unwrap()).abs() < 1e-8);
        // continuous with the series on either side
        let lo = pg.eval_inner(0.97).unwrap();
        let hi = pg.eval_inner(1.03).unwrap();
        assert!(v > lo.min(hi) - 0.1 * (hi - lo).abs() && v < lo.max(hi) + 0.1 * (hi - lo).abs(), "{lo} {v} {hi}");
    }

    #[test]
    fn coinciding_pole_families_error() {
        let p = EvalPolicy::default();
        // a-pole at a - 1 = 0 coincides with the b-pole at 0
        let g = ext((1, 1, 1, 1), &[1.0], &[0.0]);
        assert!(matches!(meijer_g(&g, 0.5, &p), Err(GfuncError::Pole(_))));
    }

    #[test]
    fn deterministic() {
        let p = EvalPolicy::default();
        let g = ext((2, 2, 3, 3), &[0.3, -0.7, 1.1], &[0.2, -0.45, 0.8]);
        let a = meijer_g(&g, 0.37, &p).unwrap();
        let b = meijer_g(&g, 0.37, &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
