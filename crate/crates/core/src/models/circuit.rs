use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::{gates, Mat2, State};

/// Source of an `Rx` angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    /// Input feature `j` (angle embedding).
    Feature(usize),
    /// Trainable parameter `i`.
    Param(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Rx { wire: usize, angle: Angle },
    /// `Rot(p[first], p[first + 1], p[first + 2])`
    Rot { wire: usize, first: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// Matrix of a single-qubit gate; `None` for CNOT.
    pub(crate) fn matrix(&self, params: &[f64], x: &[f64]) -> Option<Mat2> {
        match *self {
            Gate::Rx { angle, .. } => Some(gates::rx(resolve(angle, params, x))),
            Gate::Rot { first, .. } => Some(gates::rot(params[first], params[first + 1], params[first + 2])),
            Gate::Cnot { .. } => None,
        }
    }
}

pub(crate) fn resolve(angle: Angle, params: &[f64], x: &[f64]) -> f64 {
    match angle {
        Angle::Feature(j) => x[j],
        Angle::Param(i) => params[i],
    }
}

/// An ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    n_features: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut n_params = 0;
        let mut n_features = 0;
        for g in &gates {
            let wires_ok = match *g {
                Gate::Rx { wire, angle } => {
                    match angle {
                        Angle::Feature(j) => n_features = n_features.max(j + 1),
                        Angle::Param(i) => n_params = n_params.max(i + 1),
                    }
                    wire < n_qubits
                }
                Gate::Rot { wire, first } => {
                    n_params = n_params.max(first + 3);
                    wire < n_qubits
                }
                Gate::Cnot { control, target } => control < n_qubits && target < n_qubits && control != target,
            };
            if !wires_ok {
                return Err(Error::Index(format!("{g:?} on a {n_qubits}-qubit register")));
            }
        }
        Ok(Self {
            n_qubits,
            n_params,
            n_features,
            gates,
        })
    }

    /// Angle embedding followed by `n_layers` blocks of per-wire `Rot` and a
    /// CNOT ring `i -> (i + 1) mod n`. With re-uploading the embedding is
    /// repeated in front of every block.
    pub fn layered(n_qubits: usize, n_layers: usize, reupload: bool) -> Self {
        let embed = (0..n_qubits).map(|q| Gate::Rx {
            wire: q,
            angle: Angle::Feature(q),
        });
        let mut gates: Vec<Gate> = embed.clone().collect();
        for layer in 0..n_layers {
            if reupload && layer > 0 {
                gates.extend(embed.clone());
            }
            gates.extend((0..n_qubits).map(|q| Gate::Rot {
                wire: q,
                first: 3 * (layer * n_qubits + q),
            }));
            if n_qubits > 1 {
                gates.extend((0..n_qubits).map(|q| Gate::Cnot {
                    control: q,
                    target: (q + 1) % n_qubits,
                }));
            }
        }
        Self::new(n_qubits, gates).expect("layered circuit wires are in range")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of parameter slots the gates reference.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check_inputs(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() < self.n_params || x.len() < self.n_features {
            return Err(Error::Contract(format!(
                "circuit reads {} parameters and {} features, got {} and {}",
                self.n_params,
                self.n_features,
                params.len(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Final state from `|0...0>`.
    pub fn run(&self, params: &[f64], x: &[f64]) -> Result<State> {
        self.check_inputs(params, x)?;
        // Single-qubit gates ahead of the first CNOT act on a product state,
        // so they are folded into per-wire vectors.
        let split = self
            .gates
            .iter()
            .position(|g| matches!(g, Gate::Cnot { .. }))
            .unwrap_or(self.gates.len());
        let zero = Complex64::new(0.0, 0.0);
        let mut wires = vec![[Complex64::new(1.0, 0.0), zero]; self.n_qubits];
        for g in &self.gates[..split] {
            let (wire, m) = match g {
                Gate::Rx { wire, .. } | Gate::Rot { wire, .. } => (*wire, g.matrix(params, x).unwrap()),
                Gate::Cnot { .. } => unreachable!(),
            };
            let [v0, v1] = wires[wire];
            wires[wire] = [m[0][0] * v0 + m[0][1] * v1, m[1][0] * v0 + m[1][1] * v1];
        }
        let mut state = State::product(&wires)?;
        for g in &self.gates[split..] {
            apply_gate(&mut state, g, params, x)?;
        }
        Ok(state)
    }
}

pub(crate) fn apply_gate(state: &mut State, gate: &Gate, params: &[f64], x: &[f64]) -> Result<()> {
    match *gate {
        Gate::Cnot { control, target } => state.apply_cnot(control, target),
        Gate::Rx { wire, .. } | Gate::Rot { wire, .. } => state.apply_single(wire, &gate.matrix(params, x).unwrap()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layered_structure() {
        let c = Circuit::layered(4, 2, false);
        // 4 embeddings + 2 * (4 Rot + 4 CNOT)
        assert_eq!(c.gates().len(), 20);
        assert_eq!(c.n_params(), 24);
        assert_eq!(
            c.gates()[8..12],
            [
                Gate::Cnot { control: 0, target: 1 },
                Gate::Cnot { control: 1, target: 2 },
                Gate::Cnot { control: 2, target: 3 },
                Gate::Cnot { control: 3, target: 0 },
            ]
        );
        let r = Circuit::layered(4, 2, true);
        assert_eq!(r.gates().len(), 24);
        let one = Circuit::layered(1, 3, false);
        assert!(one.gates().iter().all(|g| !matches!(g, Gate::Cnot { .. })));
    }

    #[test]
    fn folded_prefix_matches_gatewise_run() {
        let c = Circuit::layered(3, 2, true);
        let params: Vec<f64> = (0..18).map(|i| 0.37 * i as f64 - 2.0).collect();
        let x = [0.2, 1.9, 2.8];
        let fast = c.run(&params, &x).unwrap();
        let mut slow = State::new(3).unwrap();
        for g in c.gates() {
            apply_gate(&mut slow, g, &params, &x).unwrap();
        }
        for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_wires_and_short_inputs() {
        assert!(Circuit::new(2, vec![Gate::Cnot { control: 1, target: 1 }]).is_err());
        assert!(Circuit::new(2, vec![Gate::Rot { wire: 2, first: 0 }]).is_err());
        let c = Circuit::layered(2, 1, false);
        assert!(matches!(c.run(&[0.0; 5], &[0.0; 2]), Err(Error::Contract(_))));
    }
}
