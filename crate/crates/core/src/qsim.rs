//! Dense statevector simulation of few-qubit `{RY, CNOT}` circuits.
//!
//! Amplitudes are stored little-endian: qubit 0 is the least significant bit
//! of the basis-state index.

use num_complex::Complex64;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const MAX_QUBITS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// The all-zero basis state `|0…0⟩`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Apply `RY(angle) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]` to `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        if !angle.is_finite() {
            return Err(Error::Range(format!("RY angle must be finite, got {angle}")));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c - x1 * s;
                *a1 = x0 * s + x1 * c;
            }
        }
        Ok(())
    }

    /// Flip `target` on every basis state whose `control` bit is set.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!(
                "CNOT control and target must differ, both are {control}"
            )));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        let (lo, hi) = (control.min(target), control.max(target));
        let (lo_mask, hi_mask) = ((1usize << lo) - 1, (1usize << hi) - 1);
        for k in 0..self.amplitudes.len() >> 2 {
            // insert zeros at bits `lo` and `hi`, then set the control bit
            let i = k & lo_mask | (k & !lo_mask) << 1;
            let i = (i & hi_mask | (i & !hi_mask) << 1) | cbit;
            self.amplitudes.swap(i, i | tbit);
        }
        Ok(())
    }

    /// Probability that measuring `qubit` yields 1.
    fn prob_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Exact `⟨Z⟩` on `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let stride = 1usize << qubit;
        let mut z = 0.0;
        for block in self.amplitudes.chunks_exact(stride << 1) {
            let (lo, hi) = block.split_at(stride);
            z += lo.iter().map(|a| a.norm_sqr()).sum::<f64>() - hi.iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        Ok(z.clamp(-1.0, 1.0))
    }

    /// Shot-based `⟨Z⟩`: the mean of `shots` sampled ±1 outcomes.
    ///
    /// Outcomes are drawn from [`rng::Pcg32`] seeded with `seed`, one uniform
    /// draw per shot, so the estimate is reproducible bit-for-bit.
    pub fn estimate_expectation_z(&self, qubit: usize, shots: u32, seed: u64) -> Result<f64> {
        self.check_qubit(qubit)?;
        if shots == 0 {
            return Err(Error::Arity("shots must be at least 1".into()));
        }
        let p1 = self.prob_one(qubit);
        let mut gen = rng::seeded(seed);
        let ones = (0..shots).filter(|_| gen.random::<f64>() < p1).count() as f64;
        let n = shots as f64;
        Ok((n - 2.0 * ones) / n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AngleSource {
    Constant(f64),
    InputSlot(usize),
    ParamSlot(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    Ry { qubit: usize, angle: AngleSource },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn ry_param(qubit: usize, slot: usize) -> Self {
        GateOp::Ry {
            qubit,
            angle: AngleSource::ParamSlot(slot),
        }
    }

    pub fn ry_input(qubit: usize, slot: usize) -> Self {
        GateOp::Ry {
            qubit,
            angle: AngleSource::InputSlot(slot),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    /// Apply with an already resolved angle (ignored for CNOT).
    pub(crate) fn apply(&self, state: &mut Statevector, angle: f64) -> Result<()> {
        match *self {
            GateOp::Ry { qubit, .. } => state.apply_ry(qubit, angle),
            GateOp::Cnot { control, target } => state.apply_cnot(control, target),
        }
    }
}

/// An ordered `{RY, CNOT}` gate list whose RY angles may be bound late.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateOp>,
    n_input_slots: usize,
    n_param_slots: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<GateOp>, n_input_slots: usize, n_param_slots: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut input_used = vec![false; n_input_slots];
        let mut param_used = vec![false; n_param_slots];
        for (g, gate) in gates.iter().enumerate() {
            match *gate {
                GateOp::Ry { qubit, angle } => {
                    if qubit >= n_qubits {
                        return Err(Error::Index(format!("gate {g}: qubit {qubit} >= {n_qubits}")));
                    }
                    match angle {
                        AngleSource::Constant(v) if !v.is_finite() => {
                            return Err(Error::Range(format!("gate {g}: non-finite angle")));
                        }
                        AngleSource::Constant(_) => {}
                        AngleSource::InputSlot(i) => {
                            *input_used
                                .get_mut(i)
                                .ok_or_else(|| Error::Index(format!("gate {g}: input slot {i} >= {n_input_slots}")))? =
                                true
                        }
                        AngleSource::ParamSlot(i) => {
                            *param_used
                                .get_mut(i)
                                .ok_or_else(|| Error::Index(format!("gate {g}: param slot {i} >= {n_param_slots}")))? =
                                true
                        }
                    }
                }
                GateOp::Cnot { control, target } => {
                    if control >= n_qubits || target >= n_qubits || control == target {
                        return Err(Error::Index(format!(
                            "gate {g}: invalid CNOT {control}->{target} on {n_qubits} qubits"
                        )));
                    }
                }
            }
        }
        if let Some(i) = input_used.iter().position(|u| !u) {
            return Err(Error::Construction(format!("input slot {i} is never used")));
        }
        if let Some(i) = param_used.iter().position(|u| !u) {
            return Err(Error::Construction(format!("param slot {i} is never used")));
        }
        Ok(Self {
            n_qubits,
            gates,
            n_input_slots,
            n_param_slots,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn n_input_slots(&self) -> usize {
        self.n_input_slots
    }

    pub fn n_param_slots(&self) -> usize {
        self.n_param_slots
    }

    fn check_arity(&self, inputs: &[f64], params: &[f64]) -> Result<()> {
        if inputs.len() != self.n_input_slots {
            return Err(Error::Arity(format!(
                "expected {} inputs, got {}",
                self.n_input_slots,
                inputs.len()
            )));
        }
        if params.len() != self.n_param_slots {
            return Err(Error::Arity(format!(
                "expected {} params, got {}",
                self.n_param_slots,
                params.len()
            )));
        }
        Ok(())
    }

    /// Resolved angle of every gate (0 for CNOT).
    pub(crate) fn resolve_angles(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        self.check_arity(inputs, params)?;
        Ok(self
            .gates
            .iter()
            .map(|g| match *g {
                GateOp::Ry { angle, .. } => match angle {
                    AngleSource::Constant(v) => v,
                    AngleSource::InputSlot(i) => inputs[i],
                    AngleSource::ParamSlot(i) => params[i],
                },
                GateOp::Cnot { .. } => 0.0,
            })
            .collect())
    }

    /// Apply `gates[from..]` to `state` using pre-resolved angles.
    pub(crate) fn apply_from(&self, state: &mut Statevector, angles: &[f64], from: usize) -> Result<()> {
        for (gate, &angle) in self.gates[from..].iter().zip(&angles[from..]) {
            gate.apply(state, angle)?;
        }
        Ok(())
    }

    /// Run the circuit on `|0…0⟩`, binding input and parameter slots.
    pub fn run(&self, inputs: &[f64], params: &[f64]) -> Result<Statevector> {
        let angles = self.resolve_angles(inputs, params)?;
        let mut state = Statevector::new(self.n_qubits)?;
        self.apply_from(&mut state, &angles, 0)?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, PI};

    fn re(state: &Statevector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn new_state_is_all_zero() {
        assert_eq!(re(&Statevector::new(1).unwrap()), vec![1.0, 0.0]);
        assert_eq!(re(&Statevector::new(2).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(Statevector::new(0), Err(Error::Size(_))));
        assert!(matches!(Statevector::new(17), Err(Error::Size(_))));
    }

    #[test]
    fn ry_examples() {
        let mut s = Statevector::new(1).unwrap();
        s.apply_ry(0, 0.0).unwrap();
        assert_eq!(re(&s), vec![1.0, 0.0]);

        let mut s = Statevector::new(1).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-12);

        let mut s = Statevector::new(1).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-12);

        assert!(matches!(s.apply_ry(1, 0.1), Err(Error::Index(_))));
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ with qubit 1 as control: index 0b10
        let mut s = Statevector::new(2).unwrap();
        s.apply_ry(1, PI).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b11].re, 1.0, epsilon = 1e-12);

        let mut s = Statevector::new(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(re(&s), vec![1.0, 0.0, 0.0, 0.0]);

        let mut s = Statevector::new(3).unwrap();
        s.apply_ry(0, 1.1).unwrap();
        s.apply_ry(2, 0.4).unwrap();
        let before = s.clone();
        s.apply_cnot(0, 2).unwrap();
        s.apply_cnot(0, 2).unwrap();
        assert_eq!(s, before);

        // basis permutation on every ordered pair of 5 qubits
        for control in 0..5 {
            for target in (0..5).filter(|&t| t != control) {
                for basis in 0..32usize {
                    let mut s = Statevector::new(5).unwrap();
                    for q in (0..5).filter(|q| basis >> q & 1 == 1) {
                        s.apply_ry(q, PI).unwrap();
                    }
                    s.apply_cnot(control, target).unwrap();
                    let flipped = if basis >> control & 1 == 1 {
                        basis ^ 1 << target
                    } else {
                        basis
                    };
                    assert_abs_diff_eq!(s.amplitudes()[flipped].norm_sqr(), 1.0, epsilon = 1e-12);
                }
            }
        }

        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Index(_))));
        assert!(matches!(s.apply_cnot(0, 3), Err(Error::Index(_))));
    }

    #[test]
    fn expectation_examples() {
        for (theta, want) in [(0.0, 1.0), (FRAC_PI_2, 0.0), (FRAC_PI_3, 0.5)] {
            let mut s = Statevector::new(1).unwrap();
            s.apply_ry(0, theta).unwrap();
            assert_abs_diff_eq!(s.expectation_z(0).unwrap(), want, epsilon = 1e-12);
        }
        let s = Statevector::new(2).unwrap();
        assert!(matches!(s.expectation_z(2), Err(Error::Index(_))));
    }

    #[test]
    fn shot_estimates() {
        let zero = Statevector::new(1).unwrap();
        assert_eq!(zero.estimate_expectation_z(0, 1000, 99).unwrap(), 1.0);

        let mut s = Statevector::new(1).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        let a = s.estimate_expectation_z(0, 1000, 7).unwrap();
        let b = s.estimate_expectation_z(0, 1000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.abs() < 0.16);
        assert!(matches!(s.estimate_expectation_z(0, 0, 7), Err(Error::Arity(_))));
    }

    #[test]
    fn run_circuit_examples() {
        let c = Circuit::new(1, vec![GateOp::ry_input(0, 0)], 1, 0).unwrap();
        let s = c.run(&[FRAC_PI_2], &[]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(matches!(c.run(&[], &[]), Err(Error::Arity(_))));

        let empty = Circuit::new(2, vec![], 0, 0).unwrap();
        assert_eq!(re(&empty.run(&[], &[]).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn circuit_validation() {
        assert!(matches!(
            Circuit::new(2, vec![GateOp::ry_param(0, 1)], 0, 2),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            Circuit::new(2, vec![GateOp::ry_param(0, 2)], 0, 2),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            Circuit::new(2, vec![GateOp::cnot(0, 0)], 0, 0),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            Circuit::new(2, vec![GateOp::ry_input(2, 0)], 1, 0),
            Err(Error::Index(_))
        ));
    }
}
