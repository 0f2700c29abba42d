//! Symbolic pursuit: greedy construction of
//! `f̂(x) = Σ_k w_k · G_k([v_k·x / (‖v_k‖√d)]^+)` with back-fitting.

mod driver;
mod fit;

pub use driver::{backfit, symbolic_pursuit, BlackBox};
pub use fit::{fit_term, refit_weight};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::gfunc::{Config, EvalPolicy, GfuncError, MeijerGParams, PreparedG, CONFIG_SET};
use crate::par;

#[derive(Debug, Error)]
pub enum PursuitError {
    #[error("direction vector has zero norm")]
    ZeroDirection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("term values are identically zero")]
    DegenerateTerm,
    #[error("every candidate failed to evaluate")]
    AllCandidatesFailed,
    #[error("sample set: {0}")]
    InvalidSamples(String),
    #[error("fit config: {0}")]
    InvalidConfig(String),
    #[error("black box: {0}")]
    BlackBox(String),
    #[error("expression line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Eval(#[from] GfuncError),
}

pub type Result<T> = std::result::Result<T, PursuitError>;

/// One weighted ridge term `w · G(project(v, x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeTerm {
    pub weight: f64,
    pub direction: Vec<f64>,
    pub g: MeijerGParams,
}

impl RidgeTerm {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.direction.len() != dim {
            return Err(PursuitError::DimensionMismatch {
                expected: dim,
                got: self.direction.len(),
            });
        }
        if norm(&self.direction) == 0.0 || self.direction.iter().any(|v| !v.is_finite()) {
            return Err(PursuitError::ZeroDirection);
        }
        if !self.weight.is_finite() {
            return Err(PursuitError::InvalidConfig("non-finite weight".into()));
        }
        self.g.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicModel {
    pub dim: usize,
    pub terms: Vec<RidgeTerm>,
    /// `(min, range)` of each input feature in original units.
    pub feature_scaling: Vec<(f64, f64)>,
    #[serde(default)]
    pub policy: EvalPolicy,
}

impl SymbolicModel {
    pub fn empty(dim: usize) -> Self {
        SymbolicModel {
            dim,
            terms: Vec::new(),
            feature_scaling: vec![(0.0, 1.0); dim],
            policy: EvalPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_scaling.len() != self.dim {
            return Err(PursuitError::DimensionMismatch {
                expected: self.dim,
                got: self.feature_scaling.len(),
            });
        }
        if self.feature_scaling.iter().any(|&(_, r)| !(r > 0.0)) {
            return Err(PursuitError::InvalidConfig("feature ranges must be > 0".into()));
        }
        for t in &self.terms {
            t.validate(self.dim)?;
        }
        Ok(())
    }

    pub fn without_term(&self, l: usize) -> Self {
        let mut m = self.clone();
        m.terms.remove(l);
        m
    }
}

/// Query points in the unit cube with their target values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let s = SampleSet { points, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(PursuitError::InvalidSamples("no samples".into()));
        }
        if self.points.len() != self.values.len() {
            return Err(PursuitError::InvalidSamples(format!(
                "{} points but {} values",
                self.points.len(),
                self.values.len()
            )));
        }
        let d = self.points[0].len();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(PursuitError::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
                return Err(PursuitError::InvalidSamples(format!(
                    "point {i} leaves the unit cube"
                )));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(PursuitError::InvalidSamples("non-finite value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_terms: usize,
    /// Stop once the RMS residual falls below this.
    pub loss_tol: f64,
    pub config_set: Vec<Config>,
    pub restarts: usize,
    pub lr: f64,
    pub max_iters: usize,
    /// Relative finite-difference step for parameter gradients.
    pub fd_eps: f64,
    pub backfit_passes: usize,
    /// Extra black-box queries at convex combinations; `None` means `10·n`.
    pub mixup_count: Option<usize>,
    /// Shape of the symmetric Beta law of the mixing coefficient; 1 is uniform.
    pub mixup_alpha: f64,
    pub seed: u64,
    /// Box bound on `a`, `b`, and the inner scale.
    pub param_bound: f64,
    /// Fan candidate fits out over threads (needs the `parallel` feature).
    pub parallel: bool,
    pub policy: EvalPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_terms: 5,
            loss_tol: 1e-4,
            config_set: CONFIG_SET.to_vec(),
            restarts: 3,
            lr: 0.1,
            max_iters: 300,
            fd_eps: 1e-6,
            backfit_passes: 1,
            mixup_count: None,
            mixup_alpha: 1.0,
            seed: 0,
            param_bound: 10.0,
            parallel: true,
            policy: EvalPolicy::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PursuitError::InvalidConfig(m.into()));
        if self.max_terms < 1 {
            return bad("max_terms must be >= 1");
        }
        if !(self.loss_tol >= 0.0) {
            return bad("loss_tol must be >= 0");
        }
        if self.restarts < 1 {
            return bad("restarts must be >= 1");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be > 0");
        }
        if self.config_set.is_empty() {
            return bad("config_set is empty");
        }
        if self.config_set.iter().any(|c| !c.is_valid()) {
            return bad("config_set holds invalid orders");
        }
        if !(self.fd_eps > 0.0 && self.fd_eps < 0.1) {
            return bad("fd_eps must lie in (0, 0.1)");
        }
        if !(self.mixup_alpha > 0.0) {
            return bad("mixup_alpha must be > 0");
        }
        if !(self.param_bound >= 1.0) {
            return bad("param_bound must be >= 1");
        }
        self.policy.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub config: Config,
    pub loss: f64,
    pub iterations: usize,
    pub restart: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Residual already below tolerance before the first term.
    LossTolAtZero,
    LossTol,
    MaxTerms,
    /// The best new term did not lower the loss.
    NoImprovement,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::LossTolAtZero => "loss_tol at k=0",
            StopReason::LossTol => "loss_tol",
            StopReason::MaxTerms => "max_terms",
            StopReason::NoImprovement => "no improvement",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub terms: Vec<TermReport>,
    /// Mean squared residual after every accepted model change, starting
    /// with the empty model.
    pub trajectory: Vec<f64>,
    pub stop_reason: StopReason,
    pub n_samples: usize,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max(0, v·x / (‖v‖√d))`, in `[0, 1]` for `x` in the unit cube.
pub fn project(direction: &[f64], x: &[f64]) -> Result<f64> {
    if direction.len() != x.len() {
        return Err(PursuitError::DimensionMismatch {
            expected: direction.len(),
            got: x.len(),
        });
    }
    let n = norm(direction);
    if n == 0.0 {
        return Err(PursuitError::ZeroDirection);
    }
    let d = direction.len() as f64;
    Ok((dot(direction, x) / (n * d.sqrt())).max(0.0))
}

/// A model with every term's Gamma prefactors prepared.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    terms: Vec<(f64, Vec<f64>, PreparedG)>,
    dim: usize,
}

impl PreparedModel {
    pub fn new(model: &SymbolicModel) -> Result<Self> {
        let mut terms = Vec::with_capacity(model.terms.len());
        for t in &model.terms {
            t.validate(model.dim)?;
            terms.push((t.weight, t.direction.clone(), PreparedG::new(&t.g, &model.policy)?));
        }
        Ok(PreparedModel {
            terms,
            dim: model.dim,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_excluding(x, None)
    }

    pub fn eval_excluding(&self, x: &[f64], exclude: Option<usize>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(PursuitError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut total = 0.0;
        for (k, (w, v, g)) in self.terms.iter().enumerate() {
            if Some(k) == exclude {
                continue;
            }
            total += w * g.eval(project(v, x)?)?;
        }
        Ok(total)
    }

    pub fn term_value(&self, k: usize, x: &[f64]) -> Result<f64> {
        let (w, v, g) = &self.terms[k];
        Ok(w * g.eval(project(v, x)?)?)
    }
}

/// `f̂(x)` for `x` in scaled feature space; the empty model is identically 0.
pub fn evaluate_model(model: &SymbolicModel, x: &[f64]) -> Result<f64> {
    PreparedModel::new(model)?.eval(x)
}

/// [`evaluate_model`] over many points.
pub fn predict(model: &SymbolicModel, points: &[Vec<f64>], parallel: bool) -> Result<Vec<f64>> {
    let pm = PreparedModel::new(model)?;
    par::map(points, parallel, |x| pm.eval(x)).into_iter().collect()
}

/// Mean squared residual of the model, optionally leaving out one term.
pub fn loss(model: &SymbolicModel, samples: &SampleSet, exclude: Option<usize>) -> Result<f64> {
    let pm = PreparedModel::new(model)?;
    let mut acc = 0.0;
    for (x, y) in samples.points.iter().zip(&samples.values) {
        let r = y - pm.eval_excluding(x, exclude)?;
        acc += r * r;
    }
    Ok(acc / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_term(w: f64, v: Vec<f64>) -> RidgeTerm {
        RidgeTerm {
            weight: w,
            direction: v,
            g: MeijerGParams::new(Config::new(1, 0, 0, 1), vec![], vec![0.0]).unwrap(),
        }
    }

    #[test]
    fn projection_examples() {
        assert!((project(&[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(project(&[-1.0, 0.0, 0.0], &[0.7, 0.0, 0.0]).unwrap(), 0.0);
        let top = project(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((top - 1.0).abs() < 1e-15);
        assert_eq!(EvalPolicy::default().clamp(top), 1.0 - 1e-6);
        assert!(matches!(project(&[0.0, 0.0], &[1.0, 1.0]), Err(PursuitError::ZeroDirection)));
    }

    #[test]
    fn model_evaluation() {
        let mut m = SymbolicModel::empty(3);
        assert_eq!(evaluate_model(&m, &[0.2, 0.4, 0.9]).unwrap(), 0.0);
        m.terms.push(exp_term(2.0, vec![1.0, 1.0, 1.0]));
        let x = [0.5, 0.5, 0.5];
        let v = evaluate_model(&m, &x).unwrap();
        assert!((v - 1.213_061_319_4).abs() < 1e-9);
        m.terms[0].weight = 4.0;
        assert_eq!(evaluate_model(&m, &x).unwrap(), 2.0 * v);
    }

    #[test]
    fn loss_with_exclusion() {
        let mut m = SymbolicModel::empty(2);
        m.terms.push(exp_term(1.5, vec![1.0, 0.2]));
        m.terms.push(exp_term(-0.5, vec![0.3, 1.0]));
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.3], vec![0.9, 0.95]];
        let exact: Vec<f64> = pts.iter().map(|x| evaluate_model(&m, x).unwrap()).collect();
        let s = SampleSet::new(pts.clone(), exact).unwrap();
        assert_eq!(loss(&m, &s, None).unwrap(), 0.0);
        for l in 0..2 {
            let a = loss(&m, &s, Some(l)).unwrap();
            let b = loss(&m.without_term(l), &s, None).unwrap();
            assert_eq!(a, b);
        }
        let zeros = SampleSet::new(pts, vec![0.0; 3]).unwrap();
        assert_eq!(loss(&SymbolicModel::empty(2), &zeros, None).unwrap(), 0.0);
    }

    #[test]
    fn sample_set_checks() {
        assert!(SampleSet::new(vec![], vec![]).is_err());
        assert!(SampleSet::new(vec![vec![0.5, 1.5]], vec![1.0]).is_err());
        assert!(SampleSet::new(vec![vec![0.5], vec![0.1, 0.2]], vec![1.0, 2.0]).is_err());
        assert!(SampleSet::new(vec![vec![0.5]], vec![f64::NAN]).is_err());
    }

    #[test]
    fn stop_reason_text() {
        assert_eq!(StopReason::LossTolAtZero.to_string(), "loss_tol at k=0");
    }
}
