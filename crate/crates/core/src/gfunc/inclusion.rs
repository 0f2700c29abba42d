//! Nesting of G-function classes: adding a parameter `c` to both `b` (among
//! the first `m`) and `a` (past `n`) cancels `Γ(c - s)` top and bottom, so
//! `G^{m-1,n}_{p-1,q-1} ⊂ G^{m,n}_{p,q}`; likewise on the `n` side with
//! `Γ(1 - c + s)`.

use super::params::{Config, EvalPolicy, MeijerGParams};
use super::slater::PreparedG;
use super::Result;

fn build(config: Config, a: Vec<f64>, b: Vec<f64>, like: &MeijerGParams) -> Result<MeijerGParams> {
    let g = MeijerGParams {
        config,
        a,
        b,
        exponent: like.exponent,
        scale: like.scale,
        extended: !config.in_config_set(),
    };
    g.validate()?;
    Ok(g)
}

/// Embeds `g` into orders `(m+1, n, p+1, q+1)` with the pair `b_{m+1} = a_{p+1} = c`.
pub fn embed_m_branch(g: &MeijerGParams, c: f64) -> Result<MeijerGParams> {
    let k = g.config;
    let mut b = g.b.clone();
    b.insert(k.m, c);
    let mut a = g.a.clone();
    a.push(c);
    build(Config::new(k.m + 1, k.n, k.p + 1, k.q + 1), a, b, g)
}

/// Embeds `g` into orders `(m, n+1, p+1, q+1)` with the pair `a_{n+1} = b_{q+1} = c`.
pub fn embed_n_branch(g: &MeijerGParams, c: f64) -> Result<MeijerGParams> {
    let k = g.config;
    let mut a = g.a.clone();
    a.insert(k.n, c);
    let mut b = g.b.clone();
    b.push(c);
    build(Config::new(k.m, k.n + 1, k.p + 1, k.q + 1), a, b, g)
}

/// Largest `|G_big(z) - G_small(z)|` over `zs`, under the default policy.
pub fn reduce_check(g_big: &MeijerGParams, g_small: &MeijerGParams, zs: &[f64]) -> Result<f64> {
    let policy = EvalPolicy::default();
    let big = PreparedG::new(g_big, &policy)?;
    let small = PreparedG::new(g_small, &policy)?;
    let mut worst = 0.0_f64;
    for &z in zs {
        worst = worst.max((big.eval(z)? - small.eval(z)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ext(c: (usize, usize, usize, usize), a: &[f64], b: &[f64]) -> MeijerGParams {
        MeijerGParams::new(Config::new(c.0, c.1, c.2, c.3), a.to_vec(), b.to_vec()).unwrap()
    }

    fn grid() -> Vec<f64> {
        (1..10).map(|i| i as f64 / 10.0).collect()
    }

    #[test]
    fn worked_pairs() {
        let small = ext((1, 0, 0, 1), &[], &[0.0]);
        let big = ext((1, 1, 1, 2), &[PI], &[0.0, PI]);
        assert_eq!(embed_n_branch(&small, PI).unwrap(), big);
        assert!(reduce_check(&big, &small, &grid()).unwrap() < 1e-8);

        let small = ext((0, 1, 1, 1), &[1.0], &[2.0]);
        let big = ext((1, 1, 2, 2), &[1.0, PI], &[PI, 2.0]);
        assert_eq!(embed_m_branch(&small, PI).unwrap(), big);
        assert!(reduce_check(&big, &small, &grid()).unwrap() < 1e-8);
    }

    #[test]
    fn identical_arguments_give_zero() {
        let g = ext((2, 1, 2, 3), &[0.3, 1.4], &[0.2, -0.35, 0.9]);
        assert_eq!(reduce_check(&g, &g, &grid()).unwrap(), 0.0);
    }

    #[test]
    fn embedding_lands_in_the_config_set() {
        // (1,0,0,2) grows into (2,0,1,3) on the m side
        let g = ext((1, 0, 0, 2), &[], &[0.5, 0.0]);
        let big = embed_m_branch(&g, 1.7).unwrap();
        assert!(!big.extended);
        assert!(reduce_check(&big, &g, &grid()).unwrap() < 1e-8);
    }
}
