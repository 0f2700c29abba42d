//! Local surrogates and renderings of a fitted symbolic model.

mod expression;

pub use expression::{fmt_sig, parse_expression, to_expression, ExpressionDoc};

use serde::Serialize;

use crate::gfunc::{grad_z, grad_z2};
use crate::pursuit::{dot, norm, project, PreparedModel, PursuitError, Result, SymbolicModel};

/// Distance the base point moves along `v_k` when it sits on a ReLU kink.
const KINK_SHIFT: f64 = 1e-4;
/// `|c_{2,k}|` below this marks a term's curvature as negligible.
const NEGLIGIBLE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Taylor1Report {
    pub base_point: Vec<f64>,
    /// Set when the requested point sat on a kink and was moved.
    pub shifted: bool,
    pub notes: Vec<String>,
    /// `f̂(x₀)`.
    pub c0: f64,
    /// Projections `z_k(x₀)`.
    pub z: Vec<f64>,
    pub active: Vec<bool>,
    /// `c_{1,k} = w_k·g_k'(z_k)`; zero for inactive terms.
    pub c1: Vec<f64>,
    /// Folded linear coefficients, the gradient of `f̂` at `x₀`.
    pub v_tilde: Vec<f64>,
    /// `c̃ = c₀ − ṽ·x₀`, so that `f̂₁(x) = c̃ + ṽ·x`.
    pub offset: f64,
}

impl Taylor1Report {
    /// `f̂₁(x) = c₀ + ṽ·(x − x₀)`; equals `c₀` bit-for-bit at the base point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c0 + dx_dot(&self.v_tilde, x, &self.base_point)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Taylor2Report {
    pub first: Taylor1Report,
    /// `c_{2,k} = w_k·g_k''(z_k)/2`.
    pub c2: Vec<f64>,
    pub negligible: Vec<bool>,
    /// `Σ_k c_{2,k} v_k v_kᵀ / (‖v_k‖² d)`; half the Hessian of `f̂`.
    pub interaction: Vec<Vec<f64>>,
}

impl Taylor2Report {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let b = &self.first.base_point;
        let dx: Vec<f64> = x.iter().zip(b).map(|(x, b)| x - b).collect();
        let mut quad = 0.0;
        for (i, row) in self.interaction.iter().enumerate() {
            quad += dx[i] * dot(row, &dx);
        }
        self.first.eval(x) + quad
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        self.interaction
            .iter()
            .map(|row| row.iter().map(|v| 2.0 * v).collect())
            .collect()
    }
}

fn dx_dot(v: &[f64], x: &[f64], base: &[f64]) -> f64 {
    v.iter().zip(x.iter().zip(base)).map(|(v, (x, b))| v * (x - b)).sum()
}

/// `v_k / (‖v_k‖√d)`, the gradient of an active projection.
fn unit_projection(v: &[f64]) -> Vec<f64> {
    let s = norm(v) * (v.len() as f64).sqrt();
    v.iter().map(|x| x / s).collect()
}

fn fd_step(z: f64, cap: f64) -> f64 {
    cap.min(0.5 * z.min(1.0 - z))
}

pub fn taylor1(model: &SymbolicModel, x0: &[f64]) -> Result<Taylor1Report> {
    if x0.len() != model.dim {
        return Err(PursuitError::DimensionMismatch {
            expected: model.dim,
            got: x0.len(),
        });
    }
    let pm = PreparedModel::new(model)?;
    let policy = model.policy;
    let mut base = x0.to_vec();
    let mut notes = Vec::new();
    for (k, t) in model.terms.iter().enumerate() {
        if dot(&t.direction, &base).abs() < 1e-12 {
            let n = norm(&t.direction);
            for (b, v) in base.iter_mut().zip(&t.direction) {
                *b += KINK_SHIFT * v / n;
            }
            notes.push(format!(
                "base point on the kink of term {}; moved by {KINK_SHIFT:e} along its direction",
                k + 1
            ));
        }
    }
    let c0 = pm.eval(&base)?;
    let eps = policy.z_clamp;
    let mut z = Vec::with_capacity(model.terms.len());
    let mut active = Vec::with_capacity(model.terms.len());
    let mut c1 = Vec::with_capacity(model.terms.len());
    let mut v_tilde = vec![0.0; model.dim];
    for t in &model.terms {
        let zk = project(&t.direction, &base)?;
        let on = zk > eps && zk < 1.0 - eps;
        let ck = if on {
            t.weight * grad_z(&t.g, zk, fd_step(zk, 1e-5), &policy)?
        } else {
            0.0
        };
        if on {
            for (acc, u) in v_tilde.iter_mut().zip(unit_projection(&t.direction)) {
                *acc += ck * u;
            }
        }
        z.push(zk);
        active.push(on);
        c1.push(ck);
    }
    let offset = c0 - dot(&v_tilde, &base);
    Ok(Taylor1Report {
        shifted: !notes.is_empty(),
        base_point: base,
        notes,
        c0,
        z,
        active,
        c1,
        v_tilde,
        offset,
    })
}

pub fn taylor2(model: &SymbolicModel, x0: &[f64]) -> Result<Taylor2Report> {
    let first = taylor1(model, x0)?;
    let d = model.dim;
    let mut c2 = Vec::with_capacity(model.terms.len());
    let mut interaction = vec![vec![0.0; d]; d];
    for (k, t) in model.terms.iter().enumerate() {
        let ck = if first.active[k] {
            let zk = first.z[k];
            0.5 * t.weight * grad_z2(&t.g, zk, fd_step(zk, 1e-3), &model.policy)?
        } else {
            0.0
        };
        let u = unit_projection(&t.direction);
        for i in 0..d {
            for j in i..d {
                interaction[i][j] += ck * u[i] * u[j];
            }
        }
        c2.push(ck);
    }
    for i in 0..d {
        for j in 0..i {
            interaction[i][j] = interaction[j][i];
        }
    }
    Ok(Taylor2Report {
        negligible: c2.iter().map(|c| c.abs() < NEGLIGIBLE).collect(),
        first,
        c2,
        interaction,
    })
}

/// Gradient-based importance `ṽ` at `x0`, optionally scaled to unit norm.
pub fn feature_importance(model: &SymbolicModel, x0: &[f64], normalize: bool) -> Result<Vec<f64>> {
    let mut v = taylor1(model, x0)?.v_tilde;
    if normalize {
        let n = norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
    Ok(v)
}

/// Mean of `|ṽ(x)|` over a set of points, for a global ranking.
pub fn mean_abs_importance(model: &SymbolicModel, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; model.dim];
    for x in points {
        for (a, v) in acc.iter_mut().zip(taylor1(model, x)?.v_tilde) {
            *a += v.abs();
        }
    }
    let n = points.len().max(1) as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::{Config, MeijerGParams};
    use crate::pursuit::{evaluate_model, RidgeTerm};

    fn term(c: (usize, usize, usize, usize), a: &[f64], b: &[f64], w: f64, v: &[f64]) -> RidgeTerm {
        RidgeTerm {
            weight: w,
            direction: v.to_vec(),
            g: MeijerGParams::new(Config::new(c.0, c.1, c.2, c.3), a.to_vec(), b.to_vec()).unwrap(),
        }
    }

    fn two_terms() -> SymbolicModel {
        let mut m = SymbolicModel::empty(3);
        m.terms.push(term((1, 0, 0, 1), &[], &[0.0], 1.3, &[0.9, 0.3, 0.4]));
        m.terms.push(term((2, 1, 2, 3), &[0.3, 1.4], &[0.2, -0.35, 0.9], -0.4, &[0.1, 1.0, 0.5]));
        m
    }

    fn fd_grad(m: &SymbolicModel, x: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|j| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[j] += h;
                b[j] -= h;
                (evaluate_model(m, &a).unwrap() - evaluate_model(m, &b).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn first_order_matches_the_gradient() {
        let m = two_terms();
        let x0 = [0.4, 0.55, 0.3];
        let r = taylor1(&m, &x0).unwrap();
        assert_eq!(r.eval(&x0), evaluate_model(&m, &x0).unwrap());
        assert!(!r.shifted);
        for (a, b) in r.v_tilde.iter().zip(fd_grad(&m, &x0)) {
            assert!((a - b).abs() < 1e-4, "{a} {b}");
        }
    }

    #[test]
    fn exp_term_interaction_is_positive_rank_one() {
        let mut m = SymbolicModel::empty(2);
        m.terms.push(term((1, 0, 0, 1), &[], &[0.0], 2.0, &[1.0, 2.0]));
        let r = taylor2(&m, &[0.5, 0.5]).unwrap();
        // w·exp''/2 > 0 and the matrix is c2 · u uᵀ
        assert!(r.c2[0] > 0.0);
        let z = r.first.z[0];
        assert!((r.c2[0] - (-z).exp()).abs() < 1e-6);
        let u = unit_projection(&[1.0, 2.0]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.interaction[i][j] - r.c2[0] * u[i] * u[j]).abs() < 1e-15);
                assert_eq!(r.interaction[i][j], r.interaction[j][i]);
            }
        }
        assert_eq!(r.eval(&[0.5, 0.5]), evaluate_model(&m, &[0.5, 0.5]).unwrap());
    }

    #[test]
    fn kink_moves_the_base_point() {
        let mut m = SymbolicModel::empty(2);
        m.terms.push(term((1, 0, 0, 1), &[], &[0.0], 1.0, &[1.0, -1.0]));
        let r = taylor1(&m, &[0.3, 0.3]).unwrap();
        assert!(r.shifted);
        assert_eq!(r.notes.len(), 1);
        assert!(r.z[0] > 0.0);
    }

    #[test]
    fn importance_properties() {
        let zero = SymbolicModel::empty(3);
        assert_eq!(feature_importance(&zero, &[0.1, 0.2, 0.3], true).unwrap(), vec![0.0; 3]);
        let m = two_terms();
        let x = [0.2, 0.7, 0.45];
        let imp = feature_importance(&m, &x, true).unwrap();
        assert!((norm(&imp) - 1.0).abs() < 1e-12);
        // permuting features permutes the importance
        let perm = [2, 0, 1];
        let mut pm = m.clone();
        for t in &mut pm.terms {
            t.direction = perm.iter().map(|&i| t.direction[i]).collect();
        }
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let pimp = feature_importance(&pm, &px, true).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((pimp[k] - imp[i]).abs() < 1e-9);
        }
        let avg = mean_abs_importance(&m, &[x.to_vec(), vec![0.5; 3]]).unwrap();
        assert!(avg.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn inactive_terms_drop_out() {
        let mut m = SymbolicModel::empty(2);
        m.terms.push(term((1, 0, 0, 1), &[], &[0.0], 1.0, &[-1.0, -1.0]));
        let r = taylor2(&m, &[0.5, 0.5]).unwrap();
        assert!(!r.first.active[0]);
        assert_eq!(r.first.v_tilde, vec![0.0, 0.0]);
        assert!(r.negligible[0]);
    }
}
