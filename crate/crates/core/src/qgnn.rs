//! The recurrent edge/node graph network.
//!
//! A forward pass runs the input network once, then `n_iterations` rounds of
//! edge network followed by node network, then a final edge network whose
//! scores are the model output. The edge and node blocks are either quantum
//! neural networks ([`PqcTemplate`]) or, for the classical baseline,
//! single-hidden-layer logistic perceptrons with the same arities.
//!
//! Node features have width `D = 3 + n_hidden`: the three scaled spatial
//! coordinates (never modified) followed by the hidden features. The edge
//! block sees `[H_j, H_k]` (width `2D`) for every edge `j → k`. The node
//! block sees `[h_in, H_i, h_out]` (width `3D`), where `h_in` is the
//! score-weighted mean of the inner neighbours,
//! `Σ s_e H_j / max(1, Σ s_e)`, and `h_out` likewise over outer neighbours.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{AnsatzKind, Jacobian, PqcTemplate, ReadoutMode};
use crate::error::{Error, Result};
use crate::graphbuild::SubGraph;
use crate::rng;

pub const SPATIAL: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_hidden: usize,
    pub n_iterations: usize,
    pub ansatz: AnsatzKind,
    pub mode: ReadoutMode,
    pub classical_baseline: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_hidden: 1,
            n_iterations: 1,
            ansatz: AnsatzKind::Ttn,
            mode: ReadoutMode::Analytic,
            classical_baseline: false,
        }
    }
}

impl ModelConfig {
    pub fn node_dim(&self) -> usize {
        SPATIAL + self.n_hidden
    }

    /// Input width of the edge block, `2·(3 + n_hidden)`.
    pub fn edge_width(&self) -> usize {
        2 * self.node_dim()
    }

    /// Input width of the node block, `3·(3 + n_hidden)`.
    pub fn node_width(&self) -> usize {
        3 * self.node_dim()
    }

    pub fn model_name(&self) -> &'static str {
        if self.classical_baseline {
            "classical"
        } else {
            "qgnn"
        }
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `n_in → n_hidden → n_out` perceptron with logistic activations.
///
/// Parameter layout: `W1` (`n_hidden × n_in`, row-major), `b1`, `W2`
/// (`n_out × n_hidden`), `b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Perceptron {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
}

impl Perceptron {
    pub fn n_params(&self) -> usize {
        self.n_hidden * self.n_in + self.n_hidden + self.n_out * self.n_hidden + self.n_out
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (w1, rest) = p.split_at(self.n_hidden * self.n_in);
        let (b1, rest) = rest.split_at(self.n_hidden);
        let (w2, b2) = rest.split_at(self.n_out * self.n_hidden);
        (w1, b1, w2, b2)
    }

    fn hidden(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split(p);
        (0..self.n_hidden)
            .map(|h| {
                let row = &w1[h * self.n_in..(h + 1) * self.n_in];
                logistic(b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            })
            .collect()
    }

    fn output(&self, a: &[f64], p: &[f64]) -> Vec<f64> {
        let (_, _, w2, b2) = self.split(p);
        (0..self.n_out)
            .map(|o| {
                let row = &w2[o * self.n_hidden..(o + 1) * self.n_hidden];
                logistic(b2[o] + row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>())
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        self.output(&self.hidden(x, p), p)
    }

    pub fn jacobian(&self, x: &[f64], p: &[f64]) -> Jacobian {
        let a = self.hidden(x, p);
        let y = self.output(&a, p);
        let (w1, _, w2, _) = self.split(p);
        let np = self.n_params();
        let mut jac = Jacobian {
            values: y.clone(),
            d_params: vec![0.0; self.n_out * np],
            d_features: vec![0.0; self.n_out * self.n_in],
            n_params: np,
            n_features: self.n_in,
        };
        let off_b1 = self.n_hidden * self.n_in;
        let off_w2 = off_b1 + self.n_hidden;
        let off_b2 = off_w2 + self.n_out * self.n_hidden;
        for o in 0..self.n_out {
            let dz2 = y[o] * (1.0 - y[o]);
            let row = &mut jac.d_params[o * np..(o + 1) * np];
            row[off_b2 + o] = dz2;
            for h in 0..self.n_hidden {
                row[off_w2 + o * self.n_hidden + h] = dz2 * a[h];
                let dz1 = dz2 * w2[o * self.n_hidden + h] * a[h] * (1.0 - a[h]);
                row[off_b1 + h] = dz1;
                for i in 0..self.n_in {
                    row[h * self.n_in + i] = dz1 * x[i];
                    jac.d_features[o * self.n_in + i] += dz1 * w1[h * self.n_in + i];
                }
            }
        }
        jac
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut gen = rng::seeded(seed);
        let mut p = vec![0.0; self.n_params()];
        let a1 = (6.0 / (self.n_in + self.n_hidden) as f64).sqrt();
        let a2 = (6.0 / (self.n_hidden + self.n_out) as f64).sqrt();
        let off_w2 = self.n_hidden * self.n_in + self.n_hidden;
        for w in &mut p[..self.n_hidden * self.n_in] {
            *w = gen.random_range(-a1..a1);
        }
        for w in &mut p[off_w2..off_w2 + self.n_out * self.n_hidden] {
            *w = gen.random_range(-a2..a2);
        }
        p
    }
}

/// An edge or node block.
#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    Quantum(PqcTemplate),
    Classical(Perceptron),
}

impl Block {
    pub fn n_inputs(&self) -> usize {
        match self {
            Block::Quantum(t) => t.n_qubits(),
            Block::Classical(p) => p.n_in,
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            Block::Quantum(t) => t.n_outputs(),
            Block::Classical(p) => p.n_out,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Block::Quantum(t) => t.n_params(),
            Block::Classical(p) => p.n_params(),
        }
    }

    pub fn forward(&self, x: &[f64], params: &[f64], mode: ReadoutMode) -> Result<Vec<f64>> {
        match self {
            Block::Quantum(t) => Ok(t.forward(x, params, mode)?.values),
            Block::Classical(p) => {
                check_len("perceptron input", x.len(), p.n_in)?;
                check_len("perceptron params", params.len(), p.n_params())?;
                Ok(p.forward(x, params))
            }
        }
    }

    pub fn jacobian(&self, x: &[f64], params: &[f64]) -> Result<Jacobian> {
        match self {
            Block::Quantum(t) => t.jacobian(x, params),
            Block::Classical(p) => {
                check_len("perceptron input", x.len(), p.n_in)?;
                check_len("perceptron params", params.len(), p.n_params())?;
                Ok(p.jacobian(x, params))
            }
        }
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        match self {
            Block::Quantum(t) => t.init_params(seed),
            Block::Classical(p) => p.init_params(seed),
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Arity(format!("{what}: expected {want}, got {got}")));
    }
    Ok(())
}

/// Trainable state of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// `3 × n_hidden`, row-major by spatial feature.
    pub input_weights: Vec<f64>,
    pub input_bias: Vec<f64>,
    pub edge_params: Vec<f64>,
    pub node_params: Vec<f64>,
}

impl ModelParams {
    pub fn len(&self) -> usize {
        self.input_weights.len() + self.input_bias.len() + self.edge_params.len() + self.node_params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenation in the order input weights, input bias, edge, node.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.input_weights);
        v.extend_from_slice(&self.input_bias);
        v.extend_from_slice(&self.edge_params);
        v.extend_from_slice(&self.node_params);
        v
    }

    /// Overwrite from a flat vector laid out as [`ModelParams::to_flat`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        check_len("flat parameter vector", flat.len(), self.len())?;
        let mut rest = flat;
        for part in [
            &mut self.input_weights,
            &mut self.input_bias,
            &mut self.edge_params,
            &mut self.node_params,
        ] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            input_weights: vec![0.0; self.input_weights.len()],
            input_bias: vec![0.0; self.input_bias.len()],
            edge_params: vec![0.0; self.edge_params.len()],
            node_params: vec![0.0; self.node_params.len()],
        }
    }
}

/// Row-major `N × (3 + n_hidden)` node features.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeState {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl NodeState {
    pub fn n_nodes(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Inner/outer neighbour lists as `(edge index, neighbour)`.
pub(crate) struct Adjacency {
    pub inbound: Vec<Vec<(usize, usize)>>,
    pub outbound: Vec<Vec<(usize, usize)>>,
}

impl Adjacency {
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut inbound = vec![Vec::new(); n_nodes];
        let mut outbound = vec![Vec::new(); n_nodes];
        for (e, &(j, k)) in edges.iter().enumerate() {
            if j >= n_nodes || k >= n_nodes {
                return Err(Error::Index(format!("edge {e} ({j},{k}) references missing node")));
            }
            outbound[j].push((e, k));
            inbound[k].push((e, j));
        }
        Ok(Self { inbound, outbound })
    }
}

/// Score-weighted neighbour mean and the raw score sum.
pub(crate) fn aggregate(state: &NodeState, neighbours: &[(usize, usize)], scores: &[f64]) -> (Vec<f64>, f64) {
    let mut acc = vec![0.0; state.dim];
    let mut total = 0.0;
    for &(e, j) in neighbours {
        let s = scores[e];
        total += s;
        for (a, h) in acc.iter_mut().zip(state.row(j)) {
            *a += s * h;
        }
    }
    let denom = total.max(1.0);
    for a in &mut acc {
        *a /= denom;
    }
    (acc, total)
}

/// Pass labels for shot-seed streams.
fn stream(pass: usize, element: usize) -> u64 {
    ((pass as u64) << 32) | element as u64
}

/// `(h_in, S_in, h_out, S_out)` of one node.
pub(crate) type Aggregate = (Vec<f64>, f64, Vec<f64>, f64);

/// Intermediate values of one forward pass needed for reverse-mode gradients.
pub(crate) struct Tape {
    /// `H^0 … H^L`.
    pub states: Vec<NodeState>,
    /// Edge block Jacobians of passes `0 … L` (the last is the output pass).
    pub edge_jacs: Vec<Vec<Jacobian>>,
    /// Node block Jacobians and `(h_in, S_in, h_out, S_out)` per iteration.
    pub node_jacs: Vec<Vec<Jacobian>>,
    pub aggregates: Vec<Vec<Aggregate>>,
    pub adjacency: Adjacency,
}

impl Tape {
    pub fn scores(&self, pass: usize) -> Vec<f64> {
        self.edge_jacs[pass].iter().map(|j| j.values[0]).collect()
    }
}

/// A model architecture: input network plus edge and node blocks.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    edge: Block,
    node: Block,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        if config.n_hidden == 0 || config.n_iterations == 0 {
            return Err(Error::Construction(
                "n_hidden and n_iterations must be at least 1".into(),
            ));
        }
        let (ew, nw, h) = (config.edge_width(), config.node_width(), config.n_hidden);
        let (edge, node) = if config.classical_baseline {
            (
                Block::Classical(Perceptron {
                    n_in: ew,
                    n_hidden: h,
                    n_out: 1,
                }),
                Block::Classical(Perceptron {
                    n_in: nw,
                    n_hidden: h,
                    n_out: h,
                }),
            )
        } else {
            (
                Block::Quantum(PqcTemplate::build(config.ansatz, ew, 1)?),
                Block::Quantum(PqcTemplate::build(config.ansatz, nw, h)?),
            )
        };
        debug_assert_eq!(edge.n_inputs(), ew);
        debug_assert_eq!(node.n_inputs(), nw);
        Ok(Self { config, edge, node })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn edge_block(&self) -> &Block {
        &self.edge
    }

    pub fn node_block(&self) -> &Block {
        &self.node
    }

    /// Total trainable parameters including the input network.
    pub fn param_count(&self) -> usize {
        let h = self.config.n_hidden;
        SPATIAL * h + h + self.edge.n_params() + self.node.n_params()
    }

    pub fn init_params(&self, seed: u64) -> ModelParams {
        let h = self.config.n_hidden;
        let mut gen = rng::seeded(rng::derive(seed, 0));
        let a = (6.0 / (SPATIAL + h) as f64).sqrt();
        ModelParams {
            input_weights: (0..SPATIAL * h).map(|_| gen.random_range(-a..a)).collect(),
            input_bias: vec![0.0; h],
            edge_params: self.edge.init_params(rng::derive(seed, 1)),
            node_params: self.node.init_params(rng::derive(seed, 2)),
        }
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<()> {
        let h = self.config.n_hidden;
        let expected = [SPATIAL * h, h, self.edge.n_params(), self.node.n_params()];
        let got = [
            params.input_weights.len(),
            params.input_bias.len(),
            params.edge_params.len(),
            params.node_params.len(),
        ];
        if expected != got {
            return Err(Error::Arity(format!(
                "parameter shapes {got:?} do not match model {expected:?}"
            )));
        }
        Ok(())
    }

    /// Spatial features followed by `logistic(x·W + b)`.
    pub fn input_network(&self, spatial: &[[f64; 3]], params: &ModelParams) -> Result<NodeState> {
        self.check_params(params)?;
        let h = self.config.n_hidden;
        let dim = SPATIAL + h;
        let mut data = Vec::with_capacity(spatial.len() * dim);
        for x in spatial {
            if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Range(format!("spatial features {x:?} not scaled to [0,1]")));
            }
            data.extend_from_slice(x);
            for c in 0..h {
                let z = params.input_bias[c]
                    + (0..SPATIAL)
                        .map(|f| x[f] * params.input_weights[f * h + c])
                        .sum::<f64>();
                data.push(logistic(z));
            }
        }
        Ok(NodeState { dim, data })
    }

    fn edge_input(state: &NodeState, (j, k): (usize, usize)) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * state.dim);
        x.extend_from_slice(state.row(j));
        x.extend_from_slice(state.row(k));
        x
    }

    fn triplet_input(state: &NodeState, i: usize, h_in: &[f64], h_out: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * state.dim);
        x.extend_from_slice(h_in);
        x.extend_from_slice(state.row(i));
        x.extend_from_slice(h_out);
        x
    }

    /// Score every edge `(j, k)` from `[H_j, H_k]`.
    pub fn edge_network(
        &self,
        state: &NodeState,
        edges: &[(usize, usize)],
        params: &ModelParams,
        pass: usize,
    ) -> Result<Vec<f64>> {
        let n = state.n_nodes();
        if let Some(&(j, k)) = edges.iter().find(|&&(j, k)| j >= n || k >= n) {
            return Err(Error::Index(format!("edge ({j},{k}) references missing node")));
        }
        edges
            .par_iter()
            .enumerate()
            .map(|(e, &edge)| {
                let mode = self.config.mode.for_stream(stream(pass, e));
                Ok(self
                    .edge
                    .forward(&Self::edge_input(state, edge), &params.edge_params, mode)?[0])
            })
            .collect()
    }

    /// New hidden features from `[h_in, H_i, h_out]`; spatial columns copied.
    pub fn node_network(
        &self,
        state: &NodeState,
        edges: &[(usize, usize)],
        scores: &[f64],
        params: &ModelParams,
        pass: usize,
    ) -> Result<NodeState> {
        check_len("edge scores", scores.len(), edges.len())?;
        let adj = Adjacency::new(state.n_nodes(), edges)?;
        let rows: Vec<Vec<f64>> = (0..state.n_nodes())
            .into_par_iter()
            .map(|i| {
                let (h_in, _) = aggregate(state, &adj.inbound[i], scores);
                let (h_out, _) = aggregate(state, &adj.outbound[i], scores);
                let mode = self.config.mode.for_stream(stream(pass, i));
                self.node
                    .forward(&Self::triplet_input(state, i, &h_in, &h_out), &params.node_params, mode)
            })
            .collect::<Result<_>>()?;
        Ok(self.assemble(state, rows))
    }

    fn assemble(&self, state: &NodeState, hidden: Vec<Vec<f64>>) -> NodeState {
        let mut data = Vec::with_capacity(state.data.len());
        for (i, h) in hidden.into_iter().enumerate() {
            data.extend_from_slice(&state.row(i)[..SPATIAL]);
            data.extend(h);
        }
        NodeState { dim: state.dim, data }
    }

    fn check_graph(&self, graph: &SubGraph) -> Result<()> {
        graph.validate()?;
        if !graph.meta.scaled {
            return Err(Error::Range("graph features must be scaled before inference".into()));
        }
        Ok(())
    }

    /// Final edge scores of the full pipeline.
    pub fn forward(&self, graph: &SubGraph, params: &ModelParams) -> Result<Vec<f64>> {
        self.check_graph(graph)?;
        let mut state = self.input_network(&graph.node_features, params)?;
        for it in 0..self.config.n_iterations {
            let scores = self.edge_network(&state, &graph.edges, params, 2 * it)?;
            state = self.node_network(&state, &graph.edges, &scores, params, 2 * it + 1)?;
        }
        self.edge_network(&state, &graph.edges, params, 2 * self.config.n_iterations)
    }

    /// Analytic forward pass recording every block Jacobian.
    pub(crate) fn forward_tape(&self, graph: &SubGraph, params: &ModelParams) -> Result<Tape> {
        self.check_graph(graph)?;
        let adjacency = Adjacency::new(graph.n_nodes(), &graph.edges)?;
        let mut state = self.input_network(&graph.node_features, params)?;
        let mut tape = Tape {
            states: Vec::new(),
            edge_jacs: Vec::new(),
            node_jacs: Vec::new(),
            aggregates: Vec::new(),
            adjacency,
        };
        for it in 0..=self.config.n_iterations {
            let jacs: Vec<Jacobian> = graph
                .edges
                .par_iter()
                .map(|&edge| self.edge.jacobian(&Self::edge_input(&state, edge), &params.edge_params))
                .collect::<Result<_>>()?;
            let scores: Vec<f64> = jacs.iter().map(|j| j.values[0]).collect();
            tape.edge_jacs.push(jacs);
            if it == self.config.n_iterations {
                tape.states.push(state);
                break;
            }
            let adj = &tape.adjacency;
            let (aggs, jacs): (Vec<_>, Vec<_>) = (0..state.n_nodes())
                .into_par_iter()
                .map(|i| {
                    let (h_in, s_in) = aggregate(&state, &adj.inbound[i], &scores);
                    let (h_out, s_out) = aggregate(&state, &adj.outbound[i], &scores);
                    let jac = self
                        .node
                        .jacobian(&Self::triplet_input(&state, i, &h_in, &h_out), &params.node_params)?;
                    Ok(((h_in, s_in, h_out, s_out), jac))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            let hidden = jacs.iter().map(|j: &Jacobian| j.values.clone()).collect();
            let next = self.assemble(&state, hidden);
            tape.states.push(state);
            tape.node_jacs.push(jacs);
            tape.aggregates.push(aggs);
            state = next;
        }
        Ok(tape)
    }
}

/// Quantum-model forward pass; see [`Model::forward`].
pub fn forward(graph: &SubGraph, params: &ModelParams, config: &ModelConfig) -> Result<Vec<f64>> {
    Model::new(config.clone())?.forward(graph, params)
}

/// Classical-baseline forward pass: the same pipeline with perceptron blocks.
pub fn forward_classical(graph: &SubGraph, params: &ModelParams, config: &ModelConfig) -> Result<Vec<f64>> {
    let config = ModelConfig {
        classical_baseline: true,
        ..config.clone()
    };
    Model::new(config)?.forward(graph, params)
}

const CHECKPOINT_MAGIC: &str = "qgnn-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Text checkpoint: header, JSON config line, then four labelled vectors of
/// 17-significant-digit decimals.
pub fn checkpoint_to_text(config: &ModelConfig, params: &ModelParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(
        s,
        "config {}",
        serde_json::to_string(config).expect("config serialises")
    );
    for (name, v) in [
        ("input_weights", &params.input_weights),
        ("input_bias", &params.input_bias),
        ("edge_params", &params.edge_params),
        ("node_params", &params.node_params),
    ] {
        let _ = writeln!(s, "{name} {}", v.len());
        let line: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn checkpoint_from_text(text: &str) -> Result<(ModelConfig, ModelParams)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("checkpoint truncated before {what}"),
        })
    };
    let (line, header) = next("header")?;
    if header.trim() != format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}") {
        return Err(Error::Parse {
            line,
            msg: "not a version 1 checkpoint".into(),
        });
    }
    let (line, cfg) = next("config")?;
    let config: ModelConfig = cfg
        .strip_prefix("config ")
        .and_then(|j| serde_json::from_str(j).ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: "malformed config line".into(),
        })?;
    let mut vectors = Vec::with_capacity(4);
    for name in ["input_weights", "input_bias", "edge_params", "node_params"] {
        let (line, head) = next(name)?;
        let n: usize = head
            .strip_prefix(name)
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `{name} <count>`"),
            })?;
        let (line, body) = next(name)?;
        let v: Vec<f64> = body
            .split_ascii_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line,
                msg: format!("bad number in {name}"),
            })?;
        if v.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("{name}: expected {n} values, found {}", v.len()),
            });
        }
        vectors.push(v);
    }
    let node_params = vectors.pop().unwrap();
    let edge_params = vectors.pop().unwrap();
    let input_bias = vectors.pop().unwrap();
    let input_weights = vectors.pop().unwrap();
    Ok((
        config,
        ModelParams {
            input_weights,
            input_bias,
            edge_params,
            node_params,
        },
    ))
}

pub fn write_checkpoint(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    fs::write(path, checkpoint_to_text(config, params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_text(&text)
}
