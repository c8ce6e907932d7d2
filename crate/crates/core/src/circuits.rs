//! Encoding circuit, tensor-network shaped ansätze, and the quantum neural
//! network (QNN) built from them.
//!
//! A QNN evaluation is: one `RY(π·x)` per qubit loading features `x ∈ [0,1]`,
//! followed by the trainable ansatz, followed by `⟨Z⟩` on the readout qubits
//! mapped affinely to `(1 + ⟨Z⟩)/2 ∈ [0,1]`.
//!
//! All three ansätze are built from the same two-qubit block:
//! `RY(p)` on both qubits followed by a `CNOT` from the left qubit onto the
//! right one.
//!
//! - **MPS**: a ladder of blocks over `(0,1), (1,2), …, (n-2,n-1)`, then a
//!   final `RY(p)` on qubit `n-1`. Readouts are the last qubits, `n-1` first.
//! - **TTN**: a binary tree. Each level pairs adjacent active qubits left to
//!   right, the right qubit of each pair survives and an odd leftover passes
//!   through. Levels repeat until `n_readout` qubits remain, each of which
//!   then receives a final `RY(p)`.
//! - **MERA**: the TTN with an extra disentangler block across every boundary
//!   between neighbouring pairs, inserted before that level's pair blocks.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{AngleSource, Circuit, GateOp, Statevector};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Mps,
    Ttn,
    Mera,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [AnsatzKind::Mps, AnsatzKind::Ttn, AnsatzKind::Mera];

    pub fn as_str(self) -> &'static str {
        match self {
            AnsatzKind::Mps => "mps",
            AnsatzKind::Ttn => "ttn",
            AnsatzKind::Mera => "mera",
        }
    }

    /// Published total parameter counts for the one-hidden-feature pipeline,
    /// kept for side-by-side comparison in `describe` output.
    pub fn reference_total_params(self) -> usize {
        match self {
            AnsatzKind::Mps => 40,
            AnsatzKind::Ttn => 42,
            AnsatzKind::Mera => 58,
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(AnsatzKind::Mps),
            "ttn" => Ok(AnsatzKind::Ttn),
            "mera" => Ok(AnsatzKind::Mera),
            other => Err(Error::Construction(format!("unknown ansatz '{other}'"))),
        }
    }
}

/// How readout expectations are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ReadoutMode {
    #[default]
    Analytic,
    Shots {
        shots: u32,
        seed: u64,
    },
}

impl ReadoutMode {
    /// Same mode with the shot seed replaced by a child seed for `stream`.
    pub fn for_stream(self, stream: u64) -> Self {
        match self {
            ReadoutMode::Analytic => ReadoutMode::Analytic,
            ReadoutMode::Shots { shots, seed } => ReadoutMode::Shots {
                shots,
                seed: rng::derive(seed, stream),
            },
        }
    }
}

/// `RY(π·x)` on qubit `i` for each feature `x_i ∈ [0,1]`.
pub fn encode_features(features: &[f64]) -> Result<Vec<GateOp>> {
    check_features(features)?;
    Ok(features
        .iter()
        .enumerate()
        .map(|(qubit, &x)| GateOp::Ry {
            qubit,
            angle: AngleSource::Constant(PI * x),
        })
        .collect())
}

fn check_features(features: &[f64]) -> Result<()> {
    if let Some((i, x)) = features.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Range(format!("feature {i} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// An encoder + ansatz circuit with designated readout qubits.
///
/// Input slot `i` is the encoder angle of qubit `i`; parameter slots are
/// numbered in gate order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqcTemplate {
    kind: AnsatzKind,
    n_qubits: usize,
    circuit: Circuit,
    readout_qubits: Vec<usize>,
}

struct Builder {
    gates: Vec<GateOp>,
    n_params: usize,
}

impl Builder {
    fn new(n_qubits: usize) -> Self {
        Self {
            gates: (0..n_qubits).map(|q| GateOp::ry_input(q, q)).collect(),
            n_params: 0,
        }
    }

    fn ry(&mut self, qubit: usize) {
        self.gates.push(GateOp::ry_param(qubit, self.n_params));
        self.n_params += 1;
    }

    fn block(&mut self, left: usize, right: usize) {
        self.ry(left);
        self.ry(right);
        self.gates.push(GateOp::cnot(left, right));
    }
}

fn tree(builder: &mut Builder, n_qubits: usize, n_readout: usize, disentangle: bool) -> Vec<usize> {
    let mut active: Vec<usize> = (0..n_qubits).collect();
    while active.len() > n_readout {
        let n_pairs = (active.len() / 2).min(active.len() - n_readout);
        if disentangle {
            for p in 0..n_pairs.saturating_sub(1) {
                builder.block(active[2 * p + 1], active[2 * p + 2]);
            }
        }
        let mut survivors = Vec::with_capacity(active.len() - n_pairs);
        for p in 0..n_pairs {
            builder.block(active[2 * p], active[2 * p + 1]);
            survivors.push(active[2 * p + 1]);
        }
        survivors.extend_from_slice(&active[2 * n_pairs..]);
        active = survivors;
    }
    for &q in &active {
        builder.ry(q);
    }
    active
}

/// A subset of a circuit's gates acting on a compacted qubit register.
struct Section {
    n_qubits: usize,
    gates: Vec<GateOp>,
    /// Index of each gate in the full circuit.
    origin: Vec<usize>,
    /// `(output row, local qubit)` pairs read from this section.
    outputs: Vec<(usize, usize)>,
}

impl Section {
    /// Backward light cone of `qubit`: the gates that can influence its
    /// final `⟨Z⟩`, relabelled onto the qubits they touch.
    fn cone(gates: &[GateOp], row: usize, qubit: usize) -> Self {
        let mut inside = vec![false; gates.len()];
        let mut live = BTreeSet::from([qubit]);
        for (g, gate) in gates.iter().enumerate().rev() {
            match *gate {
                GateOp::Ry { qubit, .. } => inside[g] = live.contains(&qubit),
                GateOp::Cnot { control, target } => {
                    if live.contains(&control) || live.contains(&target) {
                        inside[g] = true;
                        live.insert(control);
                        live.insert(target);
                    }
                }
            }
        }
        let local = |q: usize| live.iter().position(|&l| l == q).expect("qubit in cone");
        let origin: Vec<usize> = (0..gates.len()).filter(|&g| inside[g]).collect();
        let gates = origin
            .iter()
            .map(|&g| match gates[g] {
                GateOp::Ry { qubit, angle } => GateOp::Ry {
                    qubit: local(qubit),
                    angle,
                },
                GateOp::Cnot { control, target } => GateOp::Cnot {
                    control: local(control),
                    target: local(target),
                },
            })
            .collect();
        Self {
            n_qubits: live.len(),
            gates,
            origin,
            outputs: vec![(row, local(qubit))],
        }
    }

    fn apply_from(&self, state: &mut Statevector, angles: &[f64], from: usize) -> Result<()> {
        for (gate, &g) in self.gates[from..].iter().zip(&self.origin[from..]) {
            gate.apply(state, angles[g])?;
        }
        Ok(())
    }

    fn readout(&self, state: &Statevector, out: &mut [f64]) -> Result<()> {
        for &(row, q) in &self.outputs {
            out[row] = (1.0 + state.expectation_z(q)?) / 2.0;
        }
        Ok(())
    }
}

impl PqcTemplate {
    pub fn build(kind: AnsatzKind, n_qubits: usize, n_readout: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Construction(format!(
                "{kind} needs at least 2 qubits, got {n_qubits}"
            )));
        }
        if n_readout == 0 || n_readout > n_qubits {
            return Err(Error::Construction(format!(
                "n_readout must be in 1..={n_qubits}, got {n_readout}"
            )));
        }
        let mut b = Builder::new(n_qubits);
        let readout_qubits = match kind {
            AnsatzKind::Mps => {
                for q in 0..n_qubits - 1 {
                    b.block(q, q + 1);
                }
                b.ry(n_qubits - 1);
                (0..n_qubits).rev().take(n_readout).collect()
            }
            AnsatzKind::Ttn => tree(&mut b, n_qubits, n_readout, false),
            AnsatzKind::Mera => tree(&mut b, n_qubits, n_readout, true),
        };
        let circuit = Circuit::new(n_qubits, b.gates, n_qubits, b.n_params)?;
        Ok(Self {
            kind,
            n_qubits,
            circuit,
            readout_qubits,
        })
    }

    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn readout_qubits(&self) -> &[usize] {
        &self.readout_qubits
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_param_slots()
    }

    pub fn n_outputs(&self) -> usize {
        self.readout_qubits.len()
    }

    /// Uniform initialisation in `[0, 4π]`.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut gen = rng::seeded(seed);
        (0..self.n_params()).map(|_| gen.random_range(0.0..=4.0 * PI)).collect()
    }

    fn check_inputs(&self, features: &[f64], params: &[f64]) -> Result<()> {
        if features.len() != self.n_qubits {
            return Err(Error::Arity(format!(
                "expected {} features, got {}",
                self.n_qubits,
                features.len()
            )));
        }
        if params.len() != self.n_params() {
            return Err(Error::Arity(format!(
                "expected {} params, got {}",
                self.n_params(),
                params.len()
            )));
        }
        check_features(features)
    }

    /// Sections to simulate: one per readout light cone when that is cheaper
    /// than the whole register, otherwise the full circuit.
    fn sections(&self) -> Vec<Section> {
        let gates = self.circuit.gates();
        let cones: Vec<Section> = self
            .readout_qubits
            .iter()
            .enumerate()
            .map(|(row, &q)| Section::cone(gates, row, q))
            .collect();
        let cost = |s: &Section| s.gates.len() << s.n_qubits;
        let full = Section {
            n_qubits: self.n_qubits,
            gates: gates.to_vec(),
            origin: (0..gates.len()).collect(),
            outputs: self.readout_qubits.iter().copied().enumerate().collect(),
        };
        if cones.iter().map(cost).sum::<usize>() < cost(&full) {
            cones
        } else {
            vec![full]
        }
    }

    /// Evaluate the QNN: encoder, ansatz, then `(1 + ⟨Z⟩)/2` per readout.
    pub fn forward(&self, features: &[f64], params: &[f64], mode: ReadoutMode) -> Result<QnnOutput> {
        self.check_inputs(features, params)?;
        let inputs: Vec<f64> = features.iter().map(|x| PI * x).collect();
        let angles = self.circuit.resolve_angles(&inputs, params)?;
        let mut values = vec![0.0; self.n_outputs()];
        for sec in self.sections() {
            let mut state = Statevector::new(sec.n_qubits)?;
            sec.apply_from(&mut state, &angles, 0)?;
            match mode {
                ReadoutMode::Analytic => sec.readout(&state, &mut values)?,
                ReadoutMode::Shots { shots, seed } => {
                    for &(row, q) in &sec.outputs {
                        let z = state.estimate_expectation_z(q, shots, rng::derive(seed, row as u64))?;
                        values[row] = (1.0 + z) / 2.0;
                    }
                }
            }
        }
        Ok(QnnOutput { values })
    }

    /// Analytic outputs together with their parameter-shift Jacobians.
    ///
    /// Every differentiable `RY` gate is re-evaluated at `θ ± π/2`; the state
    /// before the shifted gate is reused across both shifts. Feature columns
    /// include the factor `π` of the `[0,1] → [0,π]` encoding.
    pub fn jacobian(&self, features: &[f64], params: &[f64]) -> Result<Jacobian> {
        self.check_inputs(features, params)?;
        let n_out = self.n_outputs();
        let inputs: Vec<f64> = features.iter().map(|x| PI * x).collect();
        let angles = self.circuit.resolve_angles(&inputs, params)?;
        let mut jac = Jacobian {
            values: vec![0.0; n_out],
            d_params: vec![0.0; n_out * self.n_params()],
            d_features: vec![0.0; n_out * self.n_qubits],
            n_params: self.n_params(),
            n_features: self.n_qubits,
        };
        let mut plus = vec![0.0; n_out];
        let mut minus = vec![0.0; n_out];
        for sec in self.sections() {
            let mut prefix = Statevector::new(sec.n_qubits)?;
            for (g, gate) in sec.gates.iter().enumerate() {
                let angle = angles[sec.origin[g]];
                if let GateOp::Ry { angle: source, .. } = *gate {
                    let (column, scale) = match source {
                        AngleSource::Constant(_) => (None, 0.0),
                        AngleSource::InputSlot(i) => (Some((false, i)), PI),
                        AngleSource::ParamSlot(i) => (Some((true, i)), 1.0),
                    };
                    if let Some((is_param, slot)) = column {
                        for (shift, out) in [(FRAC_PI_2, &mut plus), (-FRAC_PI_2, &mut minus)] {
                            let mut state = prefix.clone();
                            gate.apply(&mut state, angle + shift)?;
                            sec.apply_from(&mut state, &angles, g + 1)?;
                            sec.readout(&state, out)?;
                        }
                        for &(o, _) in &sec.outputs {
                            let d = scale * (plus[o] - minus[o]) / 2.0;
                            if is_param {
                                jac.d_params[o * jac.n_params + slot] += d;
                            } else {
                                jac.d_features[o * jac.n_features + slot] += d;
                            }
                        }
                    }
                }
                gate.apply(&mut prefix, angle)?;
            }
            sec.readout(&prefix, &mut jac.values)?;
        }
        Ok(jac)
    }

    /// Plain-text listing: gates with slot numbers, readouts and counts.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "ansatz {} qubits {} params {} readout {:?}",
            self.kind,
            self.n_qubits,
            self.n_params(),
            self.readout_qubits
        );
        for (g, gate) in self.circuit.gates().iter().enumerate() {
            let line = match *gate {
                GateOp::Ry { qubit, angle } => match angle {
                    AngleSource::InputSlot(i) => format!("RY q{qubit} input[{i}]"),
                    AngleSource::ParamSlot(i) => format!("RY q{qubit} param[{i}]"),
                    AngleSource::Constant(v) => format!("RY q{qubit} const({v})"),
                },
                GateOp::Cnot { control, target } => format!("CNOT q{control} -> q{target}"),
            };
            let _ = writeln!(s, "{g:4} {line}");
        }
        s
    }
}

/// Number of trainable angles of the `(kind, n_qubits)` single-readout ansatz.
pub fn param_count(kind: AnsatzKind, n_qubits: usize) -> Result<usize> {
    Ok(PqcTemplate::build(kind, n_qubits, 1)?.n_params())
}

#[derive(Clone, Debug, PartialEq)]
pub struct QnnOutput {
    pub values: Vec<f64>,
}

/// Outputs and row-major Jacobians (`n_out × n_params`, `n_out × n_features`).
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub values: Vec<f64>,
    pub d_params: Vec<f64>,
    pub d_features: Vec<f64>,
    pub n_params: usize,
    pub n_features: usize,
}

impl Jacobian {
    pub fn d_param(&self, out: usize, param: usize) -> f64 {
        self.d_params[out * self.n_params + param]
    }

    pub fn d_feature(&self, out: usize, feature: usize) -> f64 {
        self.d_features[out * self.n_features + feature]
    }
}
