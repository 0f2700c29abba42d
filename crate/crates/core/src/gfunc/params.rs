use serde::{Deserialize, Serialize};
use std::fmt;

use super::{GfuncError, Result};

/// Orders `(m, n, p, q)` of a Meijer G-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Config {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl Config {
    pub const fn new(m: usize, n: usize, p: usize, q: usize) -> Self {
        Config { m, n, p, q }
    }

    pub fn is_valid(&self) -> bool {
        self.m <= self.q && self.n <= self.p
    }

    pub fn in_config_set(&self) -> bool {
        CONFIG_SET.contains(self)
    }

    /// Number of real parameters: `a`, `b`, plus the inner exponent and scale.
    pub fn n_params(&self) -> usize {
        self.p + self.q + 2
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.m, self.n, self.p, self.q)
    }
}

impl std::str::FromStr for Config {
    type Err = GfuncError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| GfuncError::InvalidParams(format!("config {s:?}: {e}")))?;
        match parts[..] {
            [m, n, p, q] => Ok(Config::new(m, n, p, q)),
            _ => Err(GfuncError::InvalidParams(format!(
                "config {s:?} must have four comma-separated orders"
            ))),
        }
    }
}

/// The five order tuples searched by the pursuit. Between them they cover
/// polynomial, exponential, logarithmic, trigonometric, rational and Bessel
/// ridge shapes of the form `Φ(w·z^q)·z^t`.
pub const CONFIG_SET: [Config; 5] = [
    Config::new(1, 0, 0, 2),
    Config::new(0, 1, 3, 1),
    Config::new(2, 1, 2, 3),
    Config::new(2, 2, 3, 3),
    Config::new(2, 0, 1, 3),
];

/// One G-function `G^{m,n}_{p,q}(a; b | scale · z^exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeijerGParams {
    pub config: Config,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Inner exponent `r` of the argument transform `s·z^r`.
    pub exponent: f64,
    /// Inner scale `s` of the argument transform `s·z^r`.
    pub scale: f64,
    /// Allows orders outside [`CONFIG_SET`]; used for identities and tests.
    #[serde(default)]
    pub extended: bool,
}

impl MeijerGParams {
    /// Builds a member of the searched family with the plain argument `z`.
    pub fn new(config: Config, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let g = MeijerGParams {
            config,
            a,
            b,
            exponent: 1.0,
            scale: 1.0,
            extended: !config.in_config_set(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_transform(mut self, exponent: f64, scale: f64) -> Result<Self> {
        self.exponent = exponent;
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.config;
        if !c.is_valid() {
            return Err(GfuncError::InvalidParams(format!(
                "orders ({c}) violate m <= q, n <= p"
            )));
        }
        if self.a.len() != c.p || self.b.len() != c.q {
            return Err(GfuncError::InvalidParams(format!(
                "expected {} a and {} b parameters, got {} and {}",
                c.p,
                c.q,
                self.a.len(),
                self.b.len()
            )));
        }
        if !c.in_config_set() && !self.extended {
            return Err(GfuncError::InvalidParams(format!(
                "orders ({c}) outside the configuration set"
            )));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite())
            || !self.exponent.is_finite()
            || !self.scale.is_finite()
        {
            return Err(GfuncError::InvalidParams("non-finite parameter".into()));
        }
        if self.scale <= 0.0 {
            return Err(GfuncError::InvalidParams(format!(
                "inner scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Flattened real parameters in the order `a…, b…, exponent, scale`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.n_params());
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out.push(self.exponent);
        out.push(self.scale);
        out
    }

    /// Inverse of [`MeijerGParams::to_vec`]; no validation.
    pub fn set_from_slice(&mut self, theta: &[f64]) {
        let p = self.config.p;
        let q = self.config.q;
        self.a.copy_from_slice(&theta[..p]);
        self.b.copy_from_slice(&theta[p..p + q]);
        self.exponent = theta[p + q];
        self.scale = theta[p + q + 1];
    }

    /// Inner argument `s·z^r`.
    pub fn inner(&self, z: f64) -> f64 {
        if self.exponent == 1.0 {
            self.scale * z
        } else {
            self.scale * z.powf(self.exponent)
        }
    }

    /// Copy with integral pole-family differences nudged apart, for the
    /// orientation expanded on `|s·z^r| < 1` (direct when `p <= q`, inverted
    /// when `p > q`).
    pub fn jittered(&self, policy: &EvalPolicy) -> MeijerGParams {
        self.jittered_for(policy, self.config.p > self.config.q)
    }

    /// Whenever two poles of the expanded family would coincide, or a
    /// hypergeometric denominator parameter would hit a non-positive integer,
    /// the later parameter is shifted by `pole_jitter·(1+|x|)`. The inverted
    /// orientation expands over `1 - a` with the first `n` entries as the pole
    /// family.
    pub fn jittered_for(&self, policy: &EvalPolicy, inverted: bool) -> MeijerGParams {
        let mut g = self.clone();
        let c = g.config;
        if inverted {
            jitter_family(&mut g.a, c.n, policy.pole_jitter, -1.0);
        } else {
            jitter_family(&mut g.b, c.m, policy.pole_jitter, 1.0);
        }
        g
    }
}

/// Nudges `vals` so that for every pole-family index `h < family` and any
/// other index `j`, `orient·(vals[h] - vals[j])` is not an integer that would
/// create a double pole or a hypergeometric denominator pole.
fn jitter_family(vals: &mut [f64], family: usize, jitter: f64, orient: f64) {
    if jitter <= 0.0 {
        return;
    }
    for h in 0..family.min(vals.len()) {
        for j in 0..vals.len() {
            if j == h {
                continue;
            }
            let d = orient * (vals[h] - vals[j]);
            let shift = jitter * (1.0 + vals[j].abs().max(vals[h].abs()));
            let hit = match near_integer(d, 0.5 * shift) {
                // Two members of the pole family: any integer difference.
                Some(_) if j < family => true,
                // 1 + d is a hypergeometric denominator parameter.
                Some(k) => k <= -1,
                None => false,
            };
            if hit {
                let idx = if j < family { h.max(j) } else { j };
                vals[idx] += shift;
            }
        }
    }
}

pub(crate) fn near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= tol {
        Some(r as i64)
    } else {
        None
    }
}

/// Numerical knobs of the series evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    pub series_tol: f64,
    pub max_terms: usize,
    pub pole_jitter: f64,
    pub z_clamp: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            series_tol: 1e-10,
            max_terms: 200,
            pole_jitter: 1e-5,
            z_clamp: 1e-6,
        }
    }
}

impl EvalPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0) {
            return Err(GfuncError::InvalidParams("series_tol must be > 0".into()));
        }
        if self.max_terms < 1 {
            return Err(GfuncError::InvalidParams("max_terms must be >= 1".into()));
        }
        if !(self.z_clamp > 0.0 && self.z_clamp < 0.5) {
            return Err(GfuncError::InvalidParams(
                "z_clamp must lie in (0, 0.5)".into(),
            ));
        }
        if !(self.pole_jitter >= 0.0) {
            return Err(GfuncError::InvalidParams("pole_jitter must be >= 0".into()));
        }
        Ok(())
    }

    pub fn clamp(&self, z: f64) -> f64 {
        z.clamp(self.z_clamp, 1.0 - self.z_clamp)
    }
}
