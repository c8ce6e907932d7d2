//! Loss, gradients, ADAM and the training loop.
//!
//! Gradients are reverse-mode through the whole pipeline: the loss
//! derivative flows into the final edge pass, then back through each node
//! pass (block Jacobian, then the score-weighted aggregation) and edge pass,
//! and finally into the input network. Block Jacobians come from the
//! parameter-shift rule for quantum blocks and are exact for perceptrons.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::ReadoutMode;
use crate::error::{Error, Result};
use crate::graphbuild::SubGraph;
use crate::metrics;
use crate::qgnn::{Model, ModelConfig, ModelParams, NodeState, Tape, SPATIAL};
use crate::rng;

/// Scores are clamped to `[CLAMP, 1 − CLAMP]` before taking logarithms.
pub const CLAMP: f64 = 1e-7;

/// Per-class weights of the loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub pos: f64,
    pub neg: f64,
}

impl LossWeights {
    /// `E / (2·N₊)` and `E / (2·N₋)`; an absent class gets weight 0.
    pub fn balanced(labels: &[u8]) -> Self {
        let e = labels.len() as f64;
        let n_pos = labels.iter().filter(|&&l| l != 0).count() as f64;
        let n_neg = e - n_pos;
        let w = |n: f64| if n > 0.0 { e / (2.0 * n) } else { 0.0 };
        Self {
            pos: w(n_pos),
            neg: w(n_neg),
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self {
            pos: self.pos * k,
            neg: self.neg * k,
        }
    }
}

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Arity("loss needs at least one edge".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::Arity(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn weighted_bce_with(scores: &[f64], labels: &[u8], w: LossWeights) -> Result<f64> {
    check_scores(scores, labels)?;
    let sum: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let p = s.clamp(CLAMP, 1.0 - CLAMP);
            if y != 0 {
                w.pos * p.ln()
            } else {
                w.neg * (1.0 - p).ln()
            }
        })
        .sum();
    Ok(-sum / scores.len() as f64)
}

/// Class-balanced binary cross-entropy.
pub fn weighted_bce(scores: &[f64], labels: &[u8]) -> Result<f64> {
    weighted_bce_with(scores, labels, LossWeights::balanced(labels))
}

/// `∂loss/∂s`; zero where the clamp is active.
fn bce_grad(scores: &[f64], labels: &[u8], w: LossWeights) -> Vec<f64> {
    let e = scores.len() as f64;
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            if !(CLAMP..=1.0 - CLAMP).contains(&s) {
                0.0
            } else if y != 0 {
                -w.pos / (s * e)
            } else {
                w.neg / ((1.0 - s) * e)
            }
        })
        .collect()
}

fn add_scaled(acc: &mut [f64], k: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += k * x;
    }
}

/// Reverse pass over a recorded forward pass.
fn backprop(model: &Model, graph: &SubGraph, params: &ModelParams, tape: &Tape, d_scores: Vec<f64>) -> ModelParams {
    let cfg = model.config();
    let dim = cfg.node_dim();
    let h = cfg.n_hidden;
    let n = graph.n_nodes();
    let n_edge_params = params.edge_params.len();
    let mut grads = params.zeros_like();

    // edge pass: scores gradient into edge params and node-state gradient
    let edge_back = |pass: usize, g_s: &[f64], g_state: &mut [f64], g_edge: &mut [f64]| {
        for (e, (&(j, k), jac)) in graph.edges.iter().zip(&tape.edge_jacs[pass]).enumerate() {
            let g = g_s[e];
            if g == 0.0 {
                continue;
            }
            add_scaled(g_edge, g, &jac.d_params[..n_edge_params]);
            add_scaled(&mut g_state[j * dim..(j + 1) * dim], g, &jac.d_features[..dim]);
            add_scaled(&mut g_state[k * dim..(k + 1) * dim], g, &jac.d_features[dim..2 * dim]);
        }
    };

    let last = cfg.n_iterations;
    let mut g_state = vec![0.0; n * dim];
    edge_back(last, &d_scores, &mut g_state, &mut grads.edge_params);

    for l in (0..last).rev() {
        let state: &NodeState = &tape.states[l];
        let scores = tape.scores(l);
        let mut g_prev = vec![0.0; n * dim];
        let mut g_s = vec![0.0; graph.n_edges()];
        for i in 0..n {
            let go = &g_state[i * dim + SPATIAL..(i + 1) * dim];
            // spatial columns pass straight through
            add_scaled(
                &mut g_prev[i * dim..i * dim + SPATIAL],
                1.0,
                &g_state[i * dim..i * dim + SPATIAL],
            );
            let jac = &tape.node_jacs[l][i];
            let mut gx = vec![0.0; 3 * dim];
            for (o, &g) in go.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                add_scaled(
                    &mut grads.node_params,
                    g,
                    &jac.d_params[o * jac.n_params..(o + 1) * jac.n_params],
                );
                add_scaled(
                    &mut gx,
                    g,
                    &jac.d_features[o * jac.n_features..(o + 1) * jac.n_features],
                );
            }
            add_scaled(&mut g_prev[i * dim..(i + 1) * dim], 1.0, &gx[dim..2 * dim]);
            let (h_in, s_in, h_out, s_out) = &tape.aggregates[l][i];
            for (g_agg, agg, total, neighbours) in [
                (&gx[..dim], h_in, *s_in, &tape.adjacency.inbound[i]),
                (&gx[2 * dim..], h_out, *s_out, &tape.adjacency.outbound[i]),
            ] {
                let denom = total.max(1.0);
                for &(e, j) in neighbours {
                    let hj = state.row(j);
                    add_scaled(&mut g_prev[j * dim..(j + 1) * dim], scores[e] / denom, g_agg);
                    // d(mean)/d(s_e) = (H_j − mean)/S when S > 1, else H_j
                    let shift = if total > 1.0 { 1.0 } else { 0.0 };
                    g_s[e] += g_agg
                        .iter()
                        .zip(hj.iter().zip(agg))
                        .map(|(g, (x, m))| g * (x - shift * m))
                        .sum::<f64>()
                        / denom;
                }
            }
        }
        edge_back(l, &g_s, &mut g_prev, &mut grads.edge_params);
        g_state = g_prev;
    }

    // input network
    let h0 = &tape.states[0];
    for i in 0..n {
        let x = &graph.node_features[i];
        for c in 0..h {
            let a = h0.row(i)[SPATIAL + c];
            let dz = g_state[i * dim + SPATIAL + c] * a * (1.0 - a);
            grads.input_bias[c] += dz;
            for (f, xf) in x.iter().enumerate() {
                grads.input_weights[f * h + c] += dz * xf;
            }
        }
    }
    debug_assert!(grads.input_bias.iter().all(|v| v.is_finite()));
    grads
}

/// Loss and parameter gradients for one graph, with explicit class weights.
pub fn loss_and_gradients_with(
    model: &Model,
    graph: &SubGraph,
    params: &ModelParams,
    weights: LossWeights,
) -> Result<(f64, ModelParams)> {
    if let ReadoutMode::Shots { .. } = model.config().mode {
        return Err(Error::UnsupportedMode(
            "gradients need analytic expectations, not shot estimates".into(),
        ));
    }
    check_scores(&vec![0.0; graph.n_edges()], &graph.labels)?;
    model.check_params(params)?;
    let tape = model.forward_tape(graph, params)?;
    let scores = tape.scores(model.config().n_iterations);
    let loss = weighted_bce_with(&scores, &graph.labels, weights)?;
    let d_scores = bce_grad(&scores, &graph.labels, weights);
    Ok((loss, backprop(model, graph, params, &tape, d_scores)))
}

/// Loss and parameter gradients for one graph under class-balanced weights.
pub fn loss_and_gradients(model: &Model, graph: &SubGraph, params: &ModelParams) -> Result<(f64, ModelParams)> {
    loss_and_gradients_with(model, graph, params, LossWeights::balanced(&graph.labels))
}

/// Flat gradient vector in [`ModelParams::to_flat`] order.
pub fn model_gradients(graph: &SubGraph, params: &ModelParams, config: &ModelConfig) -> Result<Vec<f64>> {
    let model = Model::new(config.clone())?;
    Ok(loss_and_gradients(&model, graph, params)?.1.to_flat())
}

/// Analytic gradient and central difference of the loss, per parameter.
pub fn finite_diff_pairs(
    graph: &SubGraph,
    params: &ModelParams,
    config: &ModelConfig,
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    let model = Model::new(config.clone())?;
    let analytic = loss_and_gradients(&model, graph, params)?.1.to_flat();
    let flat = params.to_flat();
    let mut probe = params.clone();
    let mut loss_at = |v: &[f64]| -> Result<f64> {
        probe.set_flat(v)?;
        weighted_bce(&model.forward(graph, &probe)?, &graph.labels)
    };
    let mut shifted = flat.clone();
    let mut pairs = Vec::with_capacity(flat.len());
    for (k, &a) in analytic.iter().enumerate() {
        shifted[k] = flat[k] + eps;
        let up = loss_at(&shifted)?;
        shifted[k] = flat[k] - eps;
        let down = loss_at(&shifted)?;
        shifted[k] = flat[k];
        pairs.push((a, (up - down) / (2.0 * eps)));
    }
    Ok(pairs)
}

/// Largest `|analytic − central difference| / (|analytic| + 1e-12)` over
/// all parameters.
pub fn finite_diff_check(graph: &SubGraph, params: &ModelParams, config: &ModelConfig, eps: f64) -> Result<f64> {
    let pairs = finite_diff_pairs(graph, params, config, eps)?;
    Ok(pairs
        .iter()
        .map(|(a, fd)| (a - fd).abs() / (a.abs() + 1e-12))
        .fold(0.0, f64::max))
}

/// Bias-corrected ADAM moments.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub fn adam_step(params: &[f64], grads: &[f64], state: &AdamState) -> Result<(Vec<f64>, AdamState)> {
    if params.len() != grads.len() || params.len() != state.m.len() || state.m.len() != state.v.len() {
        return Err(Error::Arity(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let mut next = state.clone();
    next.t += 1;
    let c1 = 1.0 - state.beta1.powf(next.t as f64);
    let c2 = 1.0 - state.beta2.powf(next.t as f64);
    let mut out = params.to_vec();
    for i in 0..params.len() {
        let g = grads[i];
        next.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        next.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = next.m[i] / c1;
        let v_hat = next.v[i] / c2;
        out[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok((out, next))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Number of graphs held out for validation.
    pub validation_size: usize,
    /// Seed of the training-order shuffle.
    pub shuffle_seed: u64,
    /// Seed of the validation draw, shared across repeated runs.
    pub split_seed: u64,
    /// Seed of parameter initialisation.
    pub init_seed: u64,
    pub repeat_runs: usize,
    /// Validation cadence in optimizer steps.
    pub eval_every: usize,
    /// Record wall-clock seconds per step. Off by default so that
    /// histories are reproducible byte for byte.
    pub record_time: bool,
}

pub const QUANTUM_LR: f64 = 0.03;
pub const CLASSICAL_LR: f64 = 0.001;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            lr: QUANTUM_LR,
            validation_size: 200,
            shuffle_seed: 0,
            split_seed: 0,
            init_seed: 0,
            repeat_runs: 3,
            eval_every: 10,
            record_time: false,
        }
    }
}

impl TrainConfig {
    pub fn default_lr(classical: bool) -> f64 {
        if classical {
            CLASSICAL_LR
        } else {
            QUANTUM_LR
        }
    }

    /// Config of repeated run `run`: seeds offset by the run index.
    pub fn for_run(&self, run: usize) -> Self {
        Self {
            shuffle_seed: self.shuffle_seed.wrapping_add(run as u64),
            init_seed: self.init_seed.wrapping_add(run as u64),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.eval_every == 0 || self.repeat_runs == 0 {
            return Err(Error::Construction(
                "epochs, eval_every and repeat_runs must be at least 1".into(),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Construction(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validation {
    pub loss: f64,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Loss of the step's graph before the update.
    pub train_loss: f64,
    pub validation: Option<Validation>,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    /// Validation before the first step.
    pub initial: Validation,
    pub records: Vec<StepRecord>,
}

impl TrainHistory {
    pub fn validations(&self) -> impl Iterator<Item = (usize, Validation)> + '_ {
        self.records.iter().filter_map(|r| r.validation.map(|v| (r.step, v)))
    }

    pub fn final_validation(&self) -> Validation {
        self.validations().last().map_or(self.initial, |(_, v)| v)
    }
}

/// Held-out and training indices. The validation draw depends only on
/// `split_seed`.
pub fn split_indices(n: usize, validation_size: usize, split_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if validation_size >= n {
        return Err(Error::Arity(format!(
            "validation size {validation_size} leaves no training graphs out of {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(split_seed));
    let (val, train) = idx.split_at(validation_size);
    let mut val = val.to_vec();
    let mut train = train.to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((val, train))
}

/// Mean per-graph loss and pooled AUC over a set of graphs.
pub fn evaluate(model: &Model, params: &ModelParams, graphs: &[&SubGraph]) -> Result<Validation> {
    let outputs: Vec<Vec<f64>> = graphs
        .par_iter()
        .map(|g| model.forward(g, params))
        .collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (g, s) in graphs.iter().zip(&outputs) {
        loss += weighted_bce(s, &g.labels)?;
        scores.extend_from_slice(s);
        labels.extend_from_slice(&g.labels);
    }
    Ok(Validation {
        loss: loss / graphs.len().max(1) as f64,
        auc: metrics::auc(&scores, &labels)?,
    })
}

/// One training run: single-graph ADAM steps over shuffled training graphs,
/// validating every `eval_every` steps and after the last step.
///
/// Graphs without edges carry no loss and are dropped before the split.
pub fn train(
    dataset: &[SubGraph],
    config: &TrainConfig,
    model_config: &ModelConfig,
) -> Result<(ModelParams, TrainHistory)> {
    config.validate()?;
    let model = Model::new(model_config.clone())?;
    let usable: Vec<&SubGraph> = dataset.iter().filter(|g| g.n_edges() > 0).collect();
    let (val_idx, train_idx) = split_indices(usable.len(), config.validation_size, config.split_seed)?;
    let val: Vec<&SubGraph> = val_idx.iter().map(|&i| usable[i]).collect();

    let mut params = model.init_params(config.init_seed);
    let mut adam = AdamState::new(params.len(), config.lr);
    let started = config.record_time.then(Instant::now);
    let initial = evaluate(&model, &params, &val)?;
    let total = config.epochs * train_idx.len();
    let mut records = Vec::with_capacity(total);
    let mut step = 0;
    for epoch in 0..config.epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut rng::seeded(rng::derive(config.shuffle_seed, epoch as u64)));
        for i in order {
            let (loss, grads) = loss_and_gradients(&model, usable[i], &params)?;
            if !loss.is_finite() {
                return Err(Error::Range(format!("non-finite training loss at step {}", step + 1)));
            }
            let (next, state) = adam_step(&params.to_flat(), &grads.to_flat(), &adam)?;
            params.set_flat(&next)?;
            adam = state;
            step += 1;
            let validation = if step % config.eval_every == 0 || step == total {
                Some(evaluate(&model, &params, &val)?)
            } else {
                None
            };
            records.push(StepRecord {
                step,
                train_loss: loss,
                validation,
                seconds: started.map(|t| t.elapsed().as_secs_f64()),
            });
        }
    }
    Ok((params, TrainHistory { initial, records }))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const HISTORY_HEADER: &str = "run,step,train_loss,val_loss,val_auc,seconds";

/// History CSV of several runs; step 0 carries the initial validation.
/// Unrecorded values are left empty.
pub fn history_to_csv(histories: &[TrainHistory]) -> String {
    let mut out = Vec::new();
    let _ = writeln!(out, "{HISTORY_HEADER}");
    for (run, h) in histories.iter().enumerate() {
        let _ = writeln!(out, "{run},0,,{},{},", h.initial.loss, h.initial.auc);
        for r in &h.records {
            let _ = writeln!(
                out,
                "{run},{},{},{},{},{}",
                r.step,
                r.train_loss,
                opt(r.validation.map(|v| v.loss)),
                opt(r.validation.map(|v| v.auc)),
                opt(r.seconds)
            );
        }
    }
    String::from_utf8(out).expect("ascii output")
}

pub fn write_history(path: &Path, histories: &[TrainHistory]) -> Result<()> {
    std::fs::write(path, history_to_csv(histories)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::AnsatzKind;
    use crate::graphbuild::{GraphMeta, ScaleBounds};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn fixture() -> SubGraph {
        SubGraph {
            node_features: vec![
                [0.1, 0.2, 0.5],
                [0.2, 0.25, 0.55],
                [0.3, 0.3, 0.6],
                [0.2, 0.8, 0.4],
                [0.3, 0.75, 0.45],
            ],
            hit_ids: vec![1, 2, 3, 4, 5],
            layers: vec![0, 1, 2, 1, 2],
            edges: vec![(0, 1), (1, 2), (0, 3), (3, 4)],
            labels: vec![1, 1, 0, 0],
            meta: GraphMeta {
                event_id: 0,
                phi_index: 0,
                z_index: 0,
                bounds: ScaleBounds {
                    r: (0.0, 1.0),
                    phi: (0.0, 1.0),
                    z: (0.0, 1.0),
                },
                scaled: true,
            },
        }
    }

    #[test]
    fn bce_examples() {
        let perfect = weighted_bce(&[1.0, 0.0, 1.0], &[1, 0, 1]).unwrap();
        assert!(perfect < 1e-5);
        assert_abs_diff_eq!(weighted_bce(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), LN_2, epsilon = 1e-12);
        let w = LossWeights::balanced(&[1, 0, 0, 0]);
        assert_abs_diff_eq!(w.pos, 2.0);
        assert_abs_diff_eq!(w.neg, 2.0 / 3.0);
        assert_abs_diff_eq!(weighted_bce(&[0.5; 4], &[1, 0, 0, 0]).unwrap(), LN_2, epsilon = 1e-12);
        assert_eq!(LossWeights::balanced(&[0, 0]).pos, 0.0);
        assert!(matches!(weighted_bce(&[], &[]), Err(Error::Arity(_))));
    }

    #[test]
    fn adam_examples() {
        let s = AdamState::new(3, 0.03);
        let (p, s1) = adam_step(&[1.0, 2.0, 3.0], &[0.0; 3], &s).unwrap();
        assert_eq!(p, vec![1.0, 2.0, 3.0]);
        assert_eq!(s1.t, 1);
        let (p, _) = adam_step(&[0.0, 0.0, 0.0], &[0.5, -2.0, 1e3], &s).unwrap();
        for (x, sign) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert_abs_diff_eq!(*x, 0.03 * sign, epsilon = 1e-6);
        }
        let a = adam_step(&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6], &s1).unwrap();
        let b = adam_step(&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6], &s1).unwrap();
        assert_eq!(a, b);
        assert!(matches!(adam_step(&[0.0], &[0.0; 2], &s), Err(Error::Arity(_))));
    }

    #[test]
    fn gradients_match_differences() {
        for kind in AnsatzKind::ALL {
            let cfg = ModelConfig {
                ansatz: kind,
                ..Default::default()
            };
            let model = Model::new(cfg.clone()).unwrap();
            let params = model.init_params(3);
            // components below ~1e-6 sit at the rounding floor of the loss
            let pairs = finite_diff_pairs(&fixture(), &params, &cfg, 1e-5).unwrap();
            for (k, (a, fd)) in pairs.into_iter().enumerate() {
                assert!((a - fd).abs() <= 1e-5 * a.abs() + 1e-9, "{kind} param {k}: {a} vs {fd}");
            }
        }
        let cfg = ModelConfig {
            n_hidden: 2,
            n_iterations: 2,
            classical_baseline: true,
            ..Default::default()
        };
        let model = Model::new(cfg.clone()).unwrap();
        let pairs = finite_diff_pairs(&fixture(), &model.init_params(1), &cfg, 1e-5).unwrap();
        for (k, (a, fd)) in pairs.into_iter().enumerate() {
            assert!(
                (a - fd).abs() <= 1e-5 * a.abs() + 1e-9,
                "classical param {k}: {a} vs {fd}"
            );
        }
    }

    #[test]
    fn large_step_degrades_difference() {
        let cfg = ModelConfig::default();
        let p = Model::new(cfg.clone()).unwrap().init_params(3);
        let fine = finite_diff_check(&fixture(), &p, &cfg, 1e-5).unwrap();
        let coarse = finite_diff_check(&fixture(), &p, &cfg, 0.1).unwrap();
        assert!(coarse > fine);
    }

    #[test]
    fn gradient_edge_cases() {
        let cfg = ModelConfig::default();
        let model = Model::new(cfg.clone()).unwrap();
        let p = model.init_params(0);
        let mut empty = fixture();
        empty.edges.clear();
        empty.labels.clear();
        assert!(matches!(
            finite_diff_check(&empty, &p, &cfg, 1e-5),
            Err(Error::Arity(_))
        ));

        let shots = ModelConfig {
            mode: ReadoutMode::Shots { shots: 100, seed: 0 },
            ..cfg.clone()
        };
        assert!(matches!(
            model_gradients(&fixture(), &p, &shots),
            Err(Error::UnsupportedMode(_))
        ));

        let g = fixture();
        let w = LossWeights::balanced(&g.labels);
        let (_, a) = loss_and_gradients_with(&model, &g, &p, w).unwrap();
        let (_, b) = loss_and_gradients_with(&model, &g, &p, w.scaled(2.0)).unwrap();
        for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
            assert_eq!(2.0 * x, y);
        }
    }

    #[test]
    fn split_is_seeded() {
        let (v, t) = split_indices(10, 3, 4).unwrap();
        assert_eq!((v.len(), t.len()), (3, 7));
        assert_eq!(split_indices(10, 3, 4).unwrap(), (v, t));
        assert!(split_indices(3, 3, 0).is_err());
    }

    #[test]
    fn history_shape_and_determinism() {
        let mut data = Vec::new();
        for k in 0..8 {
            let mut g = fixture();
            g.node_features[0][0] = 0.05 * k as f64;
            data.push(g);
        }
        let tc = TrainConfig {
            validation_size: 2,
            eval_every: 4,
            ..Default::default()
        };
        let cfg = ModelConfig::default();
        let (p1, h1) = train(&data, &tc, &cfg).unwrap();
        let (p2, h2) = train(&data, &tc, &cfg).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
        assert_eq!(h1.records.len(), 6);
        assert_eq!(h1.validations().count(), 2);
        assert!(h1.records.windows(2).all(|w| w[0].step < w[1].step));
        let csv = history_to_csv(&[h1]);
        assert!(csv.starts_with("run,step,train_loss,val_loss,val_auc,seconds\n0,0,,"));
        assert_eq!(csv.lines().count(), 1 + 1 + 6);
    }
}
