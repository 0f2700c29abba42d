//! Reference evaluation of G-functions straight from the Mellin–Barnes
//! integral
//!
//! ```text
//! G(x) = 1/(2πi) ∫_L x^s Π_{j≤m} Γ(b_j - s) Π_{j≤n} Γ(1 - a_j + s)
//!                 / (Π_{j>m} Γ(1 - b_j + s) Π_{j>n} Γ(a_j - s)) ds
//! ```
//!
//! The path crosses the real axis once at `sigma`. When the Gamma ratio
//! decays exponentially along vertical lines the path is the line
//! `Re(s) = sigma`; otherwise it is bent into a hyperbola that opens towards
//! the side where `x^s` and the Gamma ratio decay, turning it into the loop
//! around one pole family. Poles that end up on the wrong side of the
//! crossing point are accounted for with small circular contours, so the
//! result equals the integral over a path that separates the two families.
//!
//! Every piece is plain quadrature of the integrand. Nothing here shares code
//! with the residue-series evaluator beyond the complex log-gamma.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::gamma::ln_gamma_complex;
use super::params::{near_integer, MeijerGParams};
use super::{GfuncError, Result};

const CIRCLE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    /// Real-axis crossing of the path; chosen from the pole layout when `None`.
    pub sigma: Option<f64>,
    /// The path is truncated at `|Im s| <= half_height`.
    pub half_height: f64,
    /// Trapezoid nodes along the path.
    pub n_nodes: usize,
    /// Slope of the hyperbolic bend used when vertical lines do not converge.
    pub bend: f64,
    pub z_clamp: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            sigma: None,
            half_height: 40.0,
            n_nodes: 4096,
            bend: 1.0,
            z_clamp: 1e-6,
        }
    }
}

impl ContourConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 64 {
            return Err(GfuncError::Contour(format!(
                "n_nodes must be >= 64, got {}",
                self.n_nodes
            )));
        }
        if !(self.half_height > 0.0) {
            return Err(GfuncError::Contour("half_height must be > 0".into()));
        }
        if !(self.bend > 0.0) {
            return Err(GfuncError::Contour("bend must be > 0".into()));
        }
        Ok(())
    }
}

struct Integrand<'a> {
    g: &'a MeijerGParams,
    ln_x: f64,
}

impl Integrand<'_> {
    fn at(&self, s: Complex64) -> Complex64 {
        let c = self.g.config;
        let one = Complex64::new(1.0, 0.0);
        let mut ln = s * self.ln_x;
        for &b in &self.g.b[..c.m] {
            ln += ln_gamma_complex(b - s);
        }
        for &a in &self.g.a[..c.n] {
            ln += ln_gamma_complex(one - a + s);
        }
        for &b in &self.g.b[c.m..] {
            ln -= ln_gamma_complex(one - b + s);
        }
        for &a in &self.g.a[c.n..] {
            ln -= ln_gamma_complex(a - s);
        }
        if ln.re == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        ln.exp()
    }

    /// Counter-clockwise integral around a circle.
    fn circle(&self, center: f64, radius: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..CIRCLE_NODES {
            let theta = 2.0 * PI * k as f64 / CIRCLE_NODES as f64;
            let e = Complex64::from_polar(radius, theta);
            acc += self.at(center + e) * Complex64::i() * e;
        }
        acc * (2.0 * PI / CIRCLE_NODES as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    B,
    A,
}

/// Poles of the numerator Gammas inside `[lo, hi]`.
fn poles_in(g: &MeijerGParams, lo: f64, hi: f64) -> Vec<(f64, Family)> {
    let c = g.config;
    let mut out = Vec::new();
    for &b in &g.b[..c.m] {
        let mut k = 0.0;
        while b + k <= hi {
            if b + k >= lo {
                out.push((b + k, Family::B));
            }
            k += 1.0;
        }
    }
    for &a in &g.a[..c.n] {
        let mut k = 0.0;
        while a - 1.0 - k >= lo {
            if a - 1.0 - k <= hi {
                out.push((a - 1.0 - k, Family::A));
            }
            k += 1.0;
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

fn auto_sigma(g: &MeijerGParams) -> f64 {
    let c = g.config;
    let min_b = g.b[..c.m].iter().cloned().fold(f64::INFINITY, f64::min);
    let max_a = g.a[..c.n]
        .iter()
        .map(|a| a - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    match (min_b.is_finite(), max_a.is_finite()) {
        (false, false) => 0.5,
        (true, false) => min_b - 0.5,
        (false, true) => max_a + 0.5,
        (true, true) => {
            if max_a < min_b && min_b - max_a >= 0.4 {
                return 0.5 * (min_b + max_a);
            }
            // Families overlap or nearly touch: take the widest gap among
            // the poles around the overlap and fix the misplaced ones with
            // circles.
            let lo = min_b.min(max_a) - 1.5;
            let hi = min_b.max(max_a) + 1.5;
            let mut pts: Vec<f64> = poles_in(g, lo, hi).into_iter().map(|p| p.0).collect();
            pts.push(lo);
            pts.push(hi);
            pts.sort_by(f64::total_cmp);
            let mut best = (0.0, 0.5 * (lo + hi));
            for w in pts.windows(2) {
                let gap = w[1] - w[0];
                if gap > best.0 {
                    best = (gap, 0.5 * (w[0] + w[1]));
                }
            }
            best.1
        }
    }
}

/// Mellin–Barnes quadrature of `G^{m,n}_{p,q}(a; b | s·z^r)`. Reference
/// quality and slow; meant as an oracle for [`super::meijer_g`].
pub fn meijer_g_contour(g: &MeijerGParams, z: f64, cfg: &ContourConfig) -> Result<f64> {
    g.validate()?;
    cfg.validate()?;
    let zc = z.clamp(cfg.z_clamp, 1.0 - cfg.z_clamp);
    contour_at(g, g.inner(zc), cfg)
}

/// The contour integral at an already-transformed argument `x > 0`.
pub(crate) fn contour_at(g: &MeijerGParams, x: f64, cfg: &ContourConfig) -> Result<f64> {
    let c = g.config;

    // An a-pole a_j - 1 - k' on top of a b-pole b_h + k leaves no separating path.
    for &a in &g.a[..c.n] {
        for &b in &g.b[..c.m] {
            if let Some(k) = near_integer(a - 1.0 - b, 1e-12) {
                if k >= 0 {
                    return Err(GfuncError::Contour(format!(
                        "pole families collide (a = {a}, b = {b})"
                    )));
                }
            }
        }
    }

    let sigma = cfg.sigma.unwrap_or_else(|| auto_sigma(g));
    let near = poles_in(g, sigma - 1.0, sigma + 1.0);
    if near.iter().any(|p| (p.0 - sigma).abs() < 1e-9) {
        return Err(GfuncError::Contour(format!("sigma = {sigma} sits on a pole")));
    }

    let balance = (c.m + c.n) as f64 - 0.5 * (c.p + c.q) as f64;
    let bend = if balance > 0.0 {
        0.0
    } else if c.p < c.q || (c.p == c.q && x < 1.0) {
        cfg.bend
    } else {
        -cfg.bend
    };

    let f = Integrand { g, ln_x: x.ln() };
    let path = |t: f64| -> (Complex64, Complex64) {
        let root = (1.0 + t * t).sqrt();
        let s = Complex64::new(sigma + bend * (root - 1.0), t);
        let ds = Complex64::new(bend * t / root, 1.0);
        (s, ds)
    };

    // Symmetric trapezoid on [-H, H]; the integrand is conjugate-symmetric in
    // t, so (f(t) + f(-t)) / i = 2·Im f(t).
    let half = cfg.n_nodes / 2;
    let h = cfg.half_height / half as f64;
    let phi0 = f.at(Complex64::new(sigma, 0.0)).re;
    let mut acc = phi0;
    let mut tail = 0.0_f64;
    for k in 1..=half {
        let t = k as f64 * h;
        let (s, ds) = path(t);
        let v = f.at(s) * ds;
        let w = if k == half { 1.0 } else { 2.0 };
        acc += w * v.im;
        if k == half {
            tail = v.norm();
        }
    }
    let mut total = acc * h / (2.0 * PI);
    if !total.is_finite() {
        return Err(GfuncError::Contour("integrand overflow".into()));
    }
    if tail > 1e-10 * total.abs().max(1e-300) && tail > 1e-14 {
        return Err(GfuncError::Contour(format!(
            "integrand has not decayed at |Im s| = {} (|f| = {tail:e})",
            cfg.half_height
        )));
    }

    // Poles on the wrong side of the crossing point.
    let span_lo = sigma - 200.0;
    let span_hi = sigma + 200.0;
    let all = poles_in(g, span_lo, span_hi);
    let misplaced: Vec<(f64, Family)> = all
        .iter()
        .cloned()
        .filter(|&(pos, fam)| match fam {
            Family::B => pos < sigma,
            Family::A => pos > sigma,
        })
        .collect();
    let mut i = 0;
    while i < misplaced.len() {
        // cluster nearly coincident poles of the same family
        let mut j = i + 1;
        while j < misplaced.len()
            && misplaced[j].1 == misplaced[i].1
            && misplaced[j].0 - misplaced[j - 1].0 < 1e-3
        {
            j += 1;
        }
        let lo = misplaced[i].0;
        let hi = misplaced[j - 1].0;
        let center = 0.5 * (lo + hi);
        let spread = 0.5 * (hi - lo);
        let gap = all
            .iter()
            .filter(|p| p.0 < lo - 1e-12 || p.0 > hi + 1e-12)
            .map(|p| (p.0 - center).abs())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * (gap + spread)).min(0.5);
        if radius <= 2.0 * spread || radius < 1e-6 {
            return Err(GfuncError::Contour(format!(
                "cannot isolate pole cluster near {center}"
            )));
        }
        let loop_integral = f.circle(center, radius);
        let sign = match misplaced[i].1 {
            // path must pass left of it: subtract the counter-clockwise loop
            Family::B => -1.0,
            Family::A => 1.0,
        };
        total += sign * (loop_integral / Complex64::new(0.0, 2.0 * PI)).re;
        i = j;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::{meijer_g, Config, EvalPolicy};

    fn ext(c: (usize, usize, usize, usize), a: &[f64], b: &[f64]) -> MeijerGParams {
        MeijerGParams::new(Config::new(c.0, c.1, c.2, c.3), a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn elementary_reductions() {
        let cfg = ContourConfig::default();
        let g = ext((1, 0, 0, 1), &[], &[0.0]);
        assert!((meijer_g_contour(&g, 0.5, &cfg).unwrap() - (-0.5f64).exp()).abs() < 1e-10);
        assert!((meijer_g_contour(&g, 0.9, &cfg).unwrap() - 0.406_569_659_7).abs() < 1e-9);
        let g = ext((1, 1, 1, 1), &[1.0], &[1.0]);
        assert!((meijer_g_contour(&g, 0.5, &cfg).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        let g = ext((1, 2, 2, 2), &[1.0, 1.0], &[1.0, 0.0]);
        assert!((meijer_g_contour(&g, 0.5, &cfg).unwrap() - 1.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_series_on_worked_examples() {
        let cfg = ContourConfig::default();
        let p = EvalPolicy::default();
        for (c, a, b) in [
            ((1, 0, 0, 1), vec![], vec![0.0]),
            ((1, 1, 1, 1), vec![1.0], vec![1.0]),
            ((1, 2, 2, 2), vec![1.0, 1.0], vec![1.0, 0.0]),
        ] {
            let g = ext(c, &a, &b);
            let s = meijer_g(&g, 0.5, &p).unwrap();
            let o = meijer_g_contour(&g, 0.5, &cfg).unwrap();
            assert!((s - o).abs() < 1e-6);
        }
    }

    #[test]
    fn bent_paths_for_slowly_decaying_integrands() {
        let cfg = ContourConfig::default();
        // (1,0,0,2): sin(2√z)/√π
        let g = ext((1, 0, 0, 2), &[], &[0.5, 0.0]);
        let v = meijer_g_contour(&g, 0.3, &cfg).unwrap();
        assert!((v - (2.0 * 0.3f64.sqrt()).sin() / PI.sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn overlapping_families_use_circles() {
        // a-poles at 0.7, -0.3, ... and b-poles at -0.4, 0.6, ...: no vertical
        // line separates them.
        let cfg = ContourConfig::default();
        let p = EvalPolicy::default();
        let g = ext((1, 1, 1, 2), &[1.7], &[-0.4, 0.25]);
        let s = meijer_g(&g, 0.4, &p).unwrap();
        let o = meijer_g_contour(&g, 0.4, &cfg).unwrap();
        assert!((s - o).abs() < 1e-8, "{s} vs {o}");
    }

    #[test]
    fn refinement_converges() {
        let g = ext((1, 0, 0, 1), &[], &[0.0]);
        let want = (-0.7f64).exp();
        let mut last = f64::INFINITY;
        for n in [64, 128, 256, 512, 1024, 4096] {
            let cfg = ContourConfig { n_nodes: n, ..Default::default() };
            let err = (meijer_g_contour(&g, 0.7, &cfg).unwrap() - want).abs();
            assert!(err <= last.max(1e-13), "n={n}: {err} > {last}");
            last = err;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn config_errors() {
        let g = ext((1, 0, 0, 1), &[], &[0.0]);
        let bad = ContourConfig { n_nodes: 32, ..Default::default() };
        assert!(matches!(meijer_g_contour(&g, 0.5, &bad), Err(GfuncError::Contour(_))));
        let on_pole = ContourConfig { sigma: Some(0.0), ..Default::default() };
        assert!(matches!(meijer_g_contour(&g, 0.5, &on_pole), Err(GfuncError::Contour(_))));
        let collide = ext((1, 1, 1, 1), &[1.0], &[0.0]);
        assert!(matches!(
            meijer_g_contour(&collide, 0.5, &ContourConfig::default()),
            Err(GfuncError::Contour(_))
        ));
    }
}
