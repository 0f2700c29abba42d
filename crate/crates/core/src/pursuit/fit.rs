use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{dot, norm, project, FitConfig, PursuitError, Result, RidgeTerm, SampleSet, TermReport};
use crate::gfunc::{param_jacobian, Config, EvalPolicy, MeijerGParams, PreparedG};
use crate::par;

const EXPONENT_MIN: f64 = 0.1;
const EXPONENT_MAX: f64 = 4.0;
const SCALE_MIN: f64 = 1e-3;
const MAX_HALVINGS: usize = 5;
/// Longest accepted step in the joint `(θ, v)` space.
const MAX_STEP: f64 = 1.0;
const TIE: f64 = 1e-12;

/// Least-squares weight `⟨r, g⟩ / ⟨g, g⟩`.
pub fn refit_weight(g_values: &[f64], residual: &[f64]) -> Result<f64> {
    let gg = dot(g_values, g_values);
    if gg == 0.0 || !gg.is_finite() {
        return Err(PursuitError::DegenerateTerm);
    }
    Ok(dot(residual, g_values) / gg)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn candidate_stream(term: usize, config: usize, restart: usize) -> u64 {
    ((term as u64) << 40) | ((config as u64) << 20) | restart as u64
}

#[derive(Debug, Clone)]
struct State {
    g: MeijerGParams,
    v: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Scored {
    weight: f64,
    loss: f64,
}

/// Raw projections of every sample.
fn projections(v: &[f64], samples: &SampleSet) -> Vec<f64> {
    samples
        .points
        .iter()
        .map(|x| project(v, x).unwrap_or(0.0))
        .collect()
}

fn weighted_loss(values: &[f64], residual: &[f64]) -> Scored {
    let weight = refit_weight(values, residual).unwrap_or(0.0);
    let loss = residual
        .iter()
        .zip(values)
        .map(|(r, g)| (r - weight * g).powi(2))
        .sum::<f64>()
        / residual.len() as f64;
    Scored { weight, loss }
}

fn score(state: &State, samples: &SampleSet, residual: &[f64], policy: &EvalPolicy) -> Option<Scored> {
    let pg = PreparedG::new(&state.g, policy).ok()?;
    pg.check_range().ok()?;
    let mut values = Vec::with_capacity(samples.len());
    for z in projections(&state.v, samples) {
        values.push(pg.eval(z).ok()?);
    }
    let s = weighted_loss(&values, residual);
    s.loss.is_finite().then_some(s)
}

fn clamp_params(g: &mut MeijerGParams, bound: f64) {
    for v in g.a.iter_mut().chain(g.b.iter_mut()) {
        *v = v.clamp(-bound, bound);
    }
    g.exponent = g.exponent.clamp(EXPONENT_MIN, EXPONENT_MAX);
    g.scale = g.scale.clamp(SCALE_MIN, bound);
}

fn random_direction(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if norm(&v) > 1e-12 {
            return v;
        }
    }
}

fn random_state(config: Config, d: usize, policy: &EvalPolicy, rng: &mut ChaCha8Rng) -> State {
    let v = random_direction(d, rng);
    let a: Vec<f64> = (0..config.p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..config.q).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = MeijerGParams {
        config,
        a,
        b,
        exponent: 1.0,
        scale: 1.0,
        extended: !config.in_config_set(),
    };
    State {
        g: g.jittered(policy),
        v,
    }
}

/// Projected gradient descent on one candidate. Returns the final state, its
/// score, and the number of accepted steps.
fn descend(
    mut state: State,
    mut current: Scored,
    samples: &SampleSet,
    residual: &[f64],
    cfg: &FitConfig,
    rng: &mut ChaCha8Rng,
) -> (State, Scored, usize) {
    let n = samples.len() as f64;
    let d = samples.dim();
    let sqrt_d = (d as f64).sqrt();
    let eps = cfg.policy.z_clamp;
    // descend on the loss relative to the residual power so that lr means
    // the same thing for the first term and for late, small residuals
    let power = residual.iter().map(|r| r * r).sum::<f64>() / n;
    let rel = if power > 0.0 { 1.0 / power } else { 1.0 };
    let mut iters = 0;
    for _ in 0..cfg.max_iters {
        let zs = projections(&state.v, samples);
        let jac = match param_jacobian(&state.g, &zs, cfg.fd_eps, &cfg.policy) {
            Ok(j) => j,
            Err(_) => break,
        };
        let w = current.weight;
        // ∂L/∂G_i at the optimal weight
        let coef: Vec<f64> = residual
            .iter()
            .zip(&jac.values)
            .map(|(r, g)| -2.0 * rel / n * (r - w * g) * w)
            .collect();
        let grad_theta: Vec<f64> = jac
            .rows
            .iter()
            .zip(&jac.failed)
            .map(|(row, &failed)| if failed { 0.0 } else { dot(&coef, row) })
            .collect();
        let vn = norm(&state.v);
        let mut grad_v = vec![0.0; d];
        for (i, x) in samples.points.iter().enumerate() {
            let z = zs[i];
            if z <= eps || z >= 1.0 - eps || !jac.dz[i].is_finite() {
                continue;
            }
            let c = coef[i] * jac.dz[i];
            let vx = dot(&state.v, x);
            for j in 0..d {
                grad_v[j] += c * (x[j] / vn - vx * state.v[j] / (vn * vn * vn)) / sqrt_d;
            }
        }
        let gnorm = (dot(&grad_theta, &grad_theta) + dot(&grad_v, &grad_v)).sqrt();
        if !(gnorm > 0.0) || !gnorm.is_finite() {
            break;
        }
        let cap = (MAX_STEP / (cfg.lr * gnorm)).min(1.0);
        let theta = state.g.to_vec();
        let mut lr = cfg.lr * cap;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut g = state.g.clone();
            let t: Vec<f64> = theta.iter().zip(&grad_theta).map(|(t, gr)| t - lr * gr).collect();
            g.set_from_slice(&t);
            clamp_params(&mut g, cfg.param_bound);
            let mut v: Vec<f64> = state.v.iter().zip(&grad_v).map(|(v, gr)| v - lr * gr).collect();
            if norm(&v) < 1e-12 {
                v = random_direction(d, rng);
            }
            let trial = State { g, v };
            if let Some(s) = score(&trial, samples, residual, &cfg.policy) {
                if s.loss < current.loss {
                    accepted = Some((trial, s));
                    break;
                }
            }
            lr *= 0.5;
        }
        match accepted {
            Some((s, sc)) => {
                state = s;
                current = sc;
                iters += 1;
            }
            None => break,
        }
    }
    (state, current, iters)
}

struct Outcome {
    term: RidgeTerm,
    loss: f64,
    iters: usize,
}

fn run_candidate(
    config: Config,
    samples: &SampleSet,
    residual: &[f64],
    cfg: &FitConfig,
    stream: u64,
) -> Option<Outcome> {
    let mut rng = rng_for(cfg.seed, stream);
    for _ in 0..10 {
        let state = random_state(config, samples.dim(), &cfg.policy, &mut rng);
        if let Some(sc) = score(&state, samples, residual, &cfg.policy) {
            let (state, sc, iters) = descend(state, sc, samples, residual, cfg, &mut rng);
            return Some(Outcome {
                term: RidgeTerm {
                    weight: sc.weight,
                    direction: state.v,
                    g: state.g,
                },
                loss: sc.loss,
                iters,
            });
        }
    }
    None
}

/// Candidates are visited in configuration-then-restart order, so a later
/// one only wins on a clearly lower loss or, on a tie, a smaller `p+q`.
fn beats(loss: f64, size: usize, best_loss: f64, best_size: usize) -> bool {
    loss < best_loss - TIE || ((loss - best_loss).abs() <= TIE && size < best_size)
}

/// Fits one ridge term to `residual.values` by trying every configuration
/// and restart; keeps the lowest loss, ties going to the smaller `p+q`, then
/// configuration order, then restart index.
pub fn fit_term(
    residual: &SampleSet,
    cfg: &FitConfig,
    term_index: usize,
) -> Result<(RidgeTerm, f64, TermReport)> {
    residual.validate()?;
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.config_set.len())
        .flat_map(|c| (0..cfg.restarts).map(move |r| (c, r)))
        .collect();
    let results = par::map(&jobs, cfg.parallel, |&(c, r)| {
        run_candidate(
            cfg.config_set[c],
            residual,
            &residual.values,
            cfg,
            candidate_stream(term_index, c, r),
        )
    });
    let mut best: Option<(Outcome, usize, usize)> = None;
    for ((c, r), out) in jobs.into_iter().zip(results) {
        let Some(out) = out else { continue };
        let size = |k: usize| cfg.config_set[k].p + cfg.config_set[k].q;
        let replace = match &best {
            None => true,
            Some((b, bc, _)) => beats(out.loss, size(c), b.loss, size(*bc)),
        };
        if replace {
            best = Some((out, c, r));
        }
    }
    let (out, c, r) = best.ok_or(PursuitError::AllCandidatesFailed)?;
    let report = TermReport {
        config: cfg.config_set[c],
        loss: out.loss,
        iterations: out.iters,
        restart: r,
    };
    Ok((out.term, out.loss, report))
}

/// Warm-started descent from an existing term; used by back-fitting.
pub(crate) fn refine_term(
    term: &RidgeTerm,
    residual: &SampleSet,
    cfg: &FitConfig,
    stream: u64,
) -> Option<(RidgeTerm, f64, usize)> {
    let mut rng = rng_for(cfg.seed, stream);
    let state = State {
        g: term.g.clone(),
        v: term.direction.clone(),
    };
    let sc = score(&state, residual, &residual.values, &cfg.policy)?;
    let (state, sc, iters) = descend(state, sc, residual, &residual.values, cfg, &mut rng);
    Some((
        RidgeTerm {
            weight: sc.weight,
            direction: state.v,
            g: state.g,
        },
        sc.loss,
        iters,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pursuit::{evaluate_model, SymbolicModel};

    #[test]
    fn weight_refit() {
        let g = [1.0, -2.0, 0.5];
        let r: Vec<f64> = g.iter().map(|v| 3.0 * v).collect();
        assert!((refit_weight(&g, &r).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(refit_weight(&[1.0, 1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert!(matches!(refit_weight(&[0.0, 0.0], &[1.0, 2.0]), Err(PursuitError::DegenerateTerm)));
    }

    #[test]
    fn weight_refit_beats_grid_and_perturbations() {
        let g = [0.3, 0.9, -0.4, 1.2, 0.05];
        let r = [0.7, 1.6, -0.9, 2.6, 0.3];
        let w = refit_weight(&g, &r).unwrap();
        let q = |w: f64| g.iter().zip(&r).map(|(g, r)| (r - w * g).powi(2)).sum::<f64>();
        for delta in [1e-3, 1e-2, 1e-1] {
            assert!(q(w) < q(w + delta) && q(w) < q(w - delta));
        }
        let grid_best = (0..10001)
            .map(|i| -5.0 + i as f64 * 1e-3)
            .min_by(|a, b| q(*a).total_cmp(&q(*b)))
            .unwrap();
        assert!((grid_best - w).abs() <= 1e-3);
    }

    fn exp_samples(v: &[f64], n: usize) -> SampleSet {
        let mut rng = rng_for(11, 0);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..v.len()).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let values = points
            .iter()
            .map(|x| (-project(v, x).unwrap()).exp())
            .collect();
        SampleSet::new(points, values).unwrap()
    }

    #[test]
    fn recovers_an_exponential_ridge() {
        let v = [0.8, 0.5, 0.33];
        let samples = exp_samples(&v, 80);
        let cfg = FitConfig {
            restarts: 2,
            max_iters: 200,
            ..Default::default()
        };
        let (term, loss, _) = fit_term(&samples, &cfg, 0).unwrap();
        assert!(loss < 1e-3, "loss {loss}");
        let cos = dot(&term.direction, &v) / (norm(&term.direction) * norm(&v));
        assert!(cos.abs() > 0.99, "cos {cos}");
    }

    #[test]
    fn constant_residual_is_bounded_by_its_variance() {
        let samples = SampleSet::new(
            (0..20).map(|i| vec![i as f64 / 19.0, 1.0 - i as f64 / 19.0]).collect(),
            vec![0.7; 20],
        )
        .unwrap();
        let cfg = FitConfig {
            restarts: 1,
            max_iters: 30,
            ..Default::default()
        };
        let (term, loss, _) = fit_term(&samples, &cfg, 0).unwrap();
        let mean_sq = 0.49;
        assert!(loss <= mean_sq);
        let mut m = SymbolicModel::empty(2);
        m.terms.push(term);
        assert!(evaluate_model(&m, &[0.5, 0.5]).unwrap().is_finite());
    }

    #[test]
    fn ties_go_to_the_smaller_configuration() {
        assert!(beats(1.0, 4, 1.0 + 1e-13, 5));
        assert!(!beats(1.0 + 1e-13, 5, 1.0, 4));
        // equal size and tied loss: the earlier candidate stays
        assert!(!beats(1.0, 4, 1.0, 4));
        assert!(beats(0.5, 8, 1.0, 2));
    }

    #[test]
    fn deterministic_across_scheduling() {
        let samples = exp_samples(&[0.2, 0.9], 40);
        let base = FitConfig {
            restarts: 2,
            max_iters: 20,
            ..Default::default()
        };
        let seq = FitConfig {
            parallel: false,
            ..base.clone()
        };
        let a = fit_term(&samples, &base, 0).unwrap();
        let b = fit_term(&samples, &seq, 0).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
}
