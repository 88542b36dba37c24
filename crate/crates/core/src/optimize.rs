//! Finite-difference gradients, Adam and Nelder-Mead.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};

/// One accepted iterate of an optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: f64,
    pub wall_ms: u64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn push(&mut self, iteration: usize, loss: f64, started: Instant, params: &[f64]) {
        self.rows.push(TraceRow {
            iteration,
            loss,
            wall_ms: started.elapsed().as_millis() as u64,
            params: params.to_vec(),
        });
    }

    /// CSV with columns `iteration,loss,wall_ms,p0,p1,…`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.rows.first().map_or(0, |r| r.params.len());
        let mut header = vec!["iteration".to_string(), "loss".into(), "wall_ms".into()];
        header.extend((0..dim).map(|i| format!("p{i}")));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut line = format!("{},{},{}", r.iteration, r.loss, r.wall_ms);
            for p in &r.params {
                line.push(',');
                line.push_str(&p.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Same rows with the wall-clock column zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Trace {
        Trace {
            rows: self
                .rows
                .iter()
                .map(|r| TraceRow {
                    wall_ms: 0,
                    ..r.clone()
                })
                .collect(),
        }
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }
}

fn finite_or_err(value: f64, at: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(QgnnError::NonFiniteObjective(at.to_vec()))
    }
}

/// Central differences `(f(θ + ε e_i) − f(θ − ε e_i)) / 2ε`; the `2·dim`
/// evaluations run in parallel.
pub fn finite_diff_gradient<F>(f: &F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(QgnnError::InvalidArgument(format!("step {eps} must be positive")));
    }
    (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut x = params.to_vec();
            x[i] = params[i] + eps;
            let up = finite_or_err(f(&x), &x)?;
            x[i] = params[i] - eps;
            let down = finite_or_err(f(&x), &x)?;
            Ok((up - down) / (2.0 * eps))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        Self {
            t: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            config,
        }
    }

    /// Advances the moments with `grad` and updates `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(QgnnError::DimensionMismatch {
                expected: self.m.len(),
                got: if params.len() != self.m.len() { params.len() } else { grad.len() },
            });
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    let mut next = state.clone();
    let mut p = params.to_vec();
    next.step(&mut p, grad)?;
    Ok((next, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub params: Vec<f64>,
    pub loss: f64,
    pub evaluations: usize,
    /// `false` when the budget ran out before the stopping rule fired.
    pub converged: bool,
    pub trace: Trace,
}

/// Finite-difference Adam on a fixed objective for `steps` iterations.
///
/// Returns the best iterate seen. Stops early once the loss falls to
/// `target` (if given).
pub fn adam_minimize<F>(
    f: &F,
    init: &[f64],
    steps: usize,
    fd_eps: f64,
    config: AdamConfig,
    target: Option<f64>,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let started = Instant::now();
    let mut params = init.to_vec();
    let mut state = AdamState::new(params.len(), config);
    let mut trace = Trace::default();
    let mut best = (finite_or_err(f(&params), &params)?, params.clone());
    let mut evaluations = 1;
    trace.push(0, best.0, started, &params);
    let mut converged = false;
    for it in 1..=steps {
        let grad = finite_diff_gradient(f, &params, fd_eps)?;
        state.step(&mut params, &grad)?;
        let loss = finite_or_err(f(&params), &params)?;
        evaluations += 2 * params.len() + 1;
        trace.push(it, loss, started, &params);
        if loss < best.0 {
            best = (loss, params.clone());
        }
        if target.is_some_and(|t| loss <= t) {
            converged = true;
            break;
        }
    }
    Ok(OptimizeResult {
        params: best.1,
        loss: best.0,
        evaluations,
        converged: converged || target.is_none(),
        trace,
    })
}

/// Initial simplex construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexInit {
    /// Vertex `i` scales coordinate `i` by `1 + nonzero`, or sets it to
    /// `zero` when that coordinate is 0.
    Relative { nonzero: f64, zero: f64 },
    /// Vertex `i` adds `step` to coordinate `i`.
    Absolute { step: f64 },
}

impl Default for SimplexInit {
    fn default() -> Self {
        SimplexInit::Relative {
            nonzero: 0.1,
            zero: 0.00025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    pub diameter_tol: f64,
    pub init: SimplexInit,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 1000,
            diameter_tol: 1e-6,
            init: SimplexInit::default(),
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

/// Nelder-Mead simplex minimization.
///
/// Stops when the largest distance from the best vertex to any other falls
/// below `diameter_tol`, or when `max_evals` evaluations are spent (then
/// `converged` is false). The trace holds the best vertex after every
/// iteration.
pub fn nelder_mead<F>(f: &F, init: &[f64], config: &NelderMeadConfig) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = init.len();
    if dim == 0 {
        return Err(QgnnError::InvalidArgument("Nelder-Mead needs dim >= 1".into()));
    }
    let started = Instant::now();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| -> Result<f64> {
        evals.set(evals.get() + 1);
        finite_or_err(f(x), x)
    };

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    simplex.push((eval(init)?, init.to_vec()));
    for i in 0..dim {
        let mut x = init.to_vec();
        match config.init {
            SimplexInit::Relative { nonzero, zero } => {
                x[i] = if x[i] != 0.0 { x[i] * (1.0 + nonzero) } else { zero };
            }
            SimplexInit::Absolute { step } => x[i] += step,
        }
        simplex.push((eval(&x)?, x));
    }

    let mut trace = Trace::default();
    let mut converged = false;
    let mut iteration = 0;
    loop {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        trace.push(iteration, simplex[0].0, started, &simplex[0].1);
        let diameter = simplex[1..]
            .iter()
            .map(|(_, x)| distance(x, &simplex[0].1))
            .fold(0.0, f64::max);
        if diameter < config.diameter_tol {
            converged = true;
            break;
        }
        if evals.get() >= config.max_evals {
            break;
        }
        iteration += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(_, x)| x[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let along = |t: f64, to: &[f64]| -> Vec<f64> {
            centroid.iter().zip(to).map(|(c, x)| c + t * (x - c)).collect()
        };

        let xr = along(-config.reflection, &worst.1);
        let fr = eval(&xr)?;
        if fr < simplex[0].0 {
            let xe = along(-config.reflection * config.expansion, &worst.1);
            let fe = eval(&xe)?;
            simplex[dim] = if fe < fr { (fe, xe) } else { (fr, xr) };
            continue;
        }
        if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, xr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.0 {
            let xc = along(config.contraction, &xr);
            let fc = eval(&xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(config.contraction, &worst.1);
            let fc = eval(&xc)?;
            let ok = fc < worst.0;
            (xc, fc, ok)
        };
        if accept {
            simplex[dim] = (fc, xc);
            continue;
        }
        let best = simplex[0].1.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.1)
                .map(|(b, v)| b + config.shrink * (v - b))
                .collect();
            *vertex = (eval(&x)?, x);
        }
    }
    let (loss, params) = simplex.swap_remove(0);
    Ok(OptimizeResult {
        params,
        loss,
        evaluations: evals.get(),
        converged,
        trace,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
