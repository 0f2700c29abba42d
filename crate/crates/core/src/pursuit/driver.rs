use rand::Rng;
use rand_distr::Beta;

use super::fit::{fit_term, refine_term, rng_for};
use super::{
    loss, FitConfig, FitReport, PreparedModel, PursuitError, Result, SampleSet, StopReason,
    SymbolicModel,
};

const MIXUP_STREAM: u64 = u64::MAX;
const BACKFIT_STREAM: u64 = 1 << 62;
/// Smallest loss decrease that counts as an improvement when adding a term.
const MIN_GAIN: f64 = 1e-12;

/// Live access to the model being explained. Points are in the unit cube;
/// values come back in the units of the sample values.
pub trait BlackBox {
    fn query(&mut self, points: &[Vec<f64>]) -> std::result::Result<Vec<f64>, String>;
}

impl<F> BlackBox for F
where
    F: FnMut(&[f64]) -> f64,
{
    fn query(&mut self, points: &[Vec<f64>]) -> std::result::Result<Vec<f64>, String> {
        Ok(points.iter().map(|x| self(x)).collect())
    }
}

fn residual_samples(
    model: &SymbolicModel,
    samples: &SampleSet,
    exclude: Option<usize>,
) -> Result<SampleSet> {
    let pm = PreparedModel::new(model)?;
    let values = samples
        .points
        .iter()
        .zip(&samples.values)
        .map(|(x, y)| Ok(y - pm.eval_excluding(x, exclude)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SampleSet {
        points: samples.points.clone(),
        values,
    })
}

fn backfit_tracked(
    model: &SymbolicModel,
    samples: &SampleSet,
    cfg: &FitConfig,
    round: usize,
    trajectory: &mut Vec<f64>,
) -> Result<SymbolicModel> {
    let mut model = model.clone();
    let mut current = loss(&model, samples, None)?;
    for pass in 0..cfg.backfit_passes {
        for l in 0..model.terms.len() {
            let residual = residual_samples(&model, samples, Some(l))?;
            let stream = BACKFIT_STREAM | (round as u64) << 40 | (pass as u64) << 20 | l as u64;
            let Some((term, _, _)) = refine_term(&model.terms[l], &residual, cfg, stream) else {
                continue;
            };
            let mut trial = model.clone();
            trial.terms[l] = term;
            let trial_loss = loss(&trial, samples, None)?;
            if trial_loss <= current {
                if trial_loss < current {
                    trajectory.push(trial_loss);
                }
                model = trial;
                current = trial_loss;
            }
        }
    }
    Ok(model)
}

/// Cyclic warm-started re-optimization of every term against the residual
/// that leaves it out. Updates that would raise the total loss are dropped.
pub fn backfit(model: &SymbolicModel, samples: &SampleSet, cfg: &FitConfig) -> Result<SymbolicModel> {
    samples.validate()?;
    cfg.validate()?;
    let mut scratch = Vec::new();
    backfit_tracked(model, samples, cfg, 0, &mut scratch)
}

fn mixup(
    samples: &SampleSet,
    blackbox: &mut dyn BlackBox,
    cfg: &FitConfig,
) -> Result<SampleSet> {
    let n = samples.len();
    let count = cfg.mixup_count.unwrap_or(10 * n);
    if count == 0 {
        return Ok(samples.clone());
    }
    let mut rng = rng_for(cfg.seed, MIXUP_STREAM);
    let beta = Beta::new(cfg.mixup_alpha, cfg.mixup_alpha)
        .map_err(|e| PursuitError::InvalidConfig(format!("mixup_alpha: {e}")))?;
    let extra: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let lambda: f64 = if cfg.mixup_alpha == 1.0 {
                rng.gen_range(0.0..1.0)
            } else {
                rng.sample(beta)
            };
            samples.points[i]
                .iter()
                .zip(&samples.points[j])
                .map(|(a, b)| (lambda * a + (1.0 - lambda) * b).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let values = blackbox.query(&extra).map_err(PursuitError::BlackBox)?;
    if values.len() != extra.len() {
        return Err(PursuitError::BlackBox(format!(
            "asked for {} values, got {}",
            extra.len(),
            values.len()
        )));
    }
    let mut out = samples.clone();
    out.points.extend(extra);
    out.values.extend(values);
    out.validate()?;
    Ok(out)
}

/// Builds a symbolic model of the samples term by term. With a live black
/// box the sample set is first enlarged by mixup queries.
pub fn symbolic_pursuit(
    samples: &SampleSet,
    blackbox: Option<&mut dyn BlackBox>,
    cfg: &FitConfig,
) -> Result<(SymbolicModel, FitReport)> {
    samples.validate()?;
    cfg.validate()?;
    let samples = match blackbox {
        Some(bb) => mixup(samples, bb, cfg)?,
        None => samples.clone(),
    };
    let mut model = SymbolicModel::empty(samples.dim());
    model.policy = cfg.policy;
    let mut current = loss(&model, &samples, None)?;
    let mut report = FitReport {
        terms: Vec::new(),
        trajectory: vec![current],
        stop_reason: StopReason::MaxTerms,
        n_samples: samples.len(),
    };
    if current.sqrt() < cfg.loss_tol {
        report.stop_reason = StopReason::LossTolAtZero;
        return Ok((model, report));
    }
    for k in 0..cfg.max_terms {
        let residual = residual_samples(&model, &samples, None)?;
        let (term, _, term_report) = fit_term(&residual, cfg, k)?;
        let mut grown = model.clone();
        grown.terms.push(term);
        let grown_loss = loss(&grown, &samples, None)?;
        if !(grown_loss <= current - MIN_GAIN) {
            report.stop_reason = StopReason::NoImprovement;
            break;
        }
        log::info!(
            "term {}: config ({}) loss {:.6e}",
            k + 1,
            term_report.config,
            grown_loss
        );
        model = grown;
        report.trajectory.push(grown_loss);
        report.terms.push(term_report);
        model = backfit_tracked(&model, &samples, cfg, k, &mut report.trajectory)?;
        current = *report.trajectory.last().unwrap();
        if current.sqrt() < cfg.loss_tol {
            report.stop_reason = StopReason::LossTol;
            break;
        }
    }
    Ok((model, report))
}
