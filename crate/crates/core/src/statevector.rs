//! Dense statevector simulation.
//!
//! Amplitudes are stored in a flat array indexed by the computational basis
//! integer with qubit 0 as the most significant bit, so on three qubits the
//! index of `|q0 q1 q2>` is `4*q0 + 2*q1 + q2`.
//!
//! The general rotation follows the Euler convention
//! `Rot(a, b, c) = RZ(c) · RY(b) · RZ(a)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator will allocate (16 MiB of amplitudes).
pub const MAX_QUBITS: usize = 20;

/// A 2×2 complex matrix in row-major order.
pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Single-qubit gate matrices used by the circuits.
pub mod gates {
    use super::{Mat2, ONE, ZERO};
    use num_complex::Complex64;

    pub fn identity() -> Mat2 {
        [[ONE, ZERO], [ZERO, ONE]]
    }

    /// `exp(-i θ X / 2)`
    pub fn rx(theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        [[Complex64::new(c, 0.0), mis], [mis, Complex64::new(c, 0.0)]]
    }

    /// `exp(-i θ Y / 2)`
    pub fn ry(theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ]
    }

    /// `exp(-i θ Z / 2)`
    pub fn rz(theta: f64) -> Mat2 {
        let half = theta / 2.0;
        [
            [Complex64::from_polar(1.0, -half), ZERO],
            [ZERO, Complex64::from_polar(1.0, half)],
        ]
    }

    /// `RZ(c) · RY(b) · RZ(a)`
    pub fn rot(a: f64, b: f64, c: f64) -> Mat2 {
        matmul(&matmul(&rz(c), &ry(b)), &rz(a))
    }

    /// Pauli generators scaled by `-i/2`, i.e. `d/dθ exp(-iθP/2) = gen(P) · exp(-iθP/2)`.
    pub fn half_generator_x() -> Mat2 {
        let m = Complex64::new(0.0, -0.5);
        [[ZERO, m], [m, ZERO]]
    }

    pub fn half_generator_y() -> Mat2 {
        [[ZERO, Complex64::new(-0.5, 0.0)], [Complex64::new(0.5, 0.0), ZERO]]
    }

    pub fn half_generator_z() -> Mat2 {
        [[Complex64::new(0.0, -0.5), ZERO], [ZERO, Complex64::new(0.0, 0.5)]]
    }

    pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    pub fn dagger(m: &Mat2) -> Mat2 {
        [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
    }
}

/// Pure state of an `n`-qubit register. Real and imaginary parts are kept
/// in separate planes.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    n_qubits: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl State {
    /// The all-zeros basis state `|0...0>`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut re = vec![0.0; 1 << n_qubits];
        re[0] = 1.0;
        Ok(Self {
            n_qubits,
            re,
            im: vec![0.0; 1 << n_qubits],
        })
    }

    /// Wraps an explicit amplitude vector. The caller is responsible for normalization.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Contract(format!(
                "{} amplitudes for {} qubits, expected {}",
                amplitudes.len(),
                n_qubits,
                1usize << n_qubits
            )));
        }
        Ok(Self {
            n_qubits,
            re: amplitudes.iter().map(|a| a.re).collect(),
            im: amplitudes.iter().map(|a| a.im).collect(),
        })
    }

    /// Tensor product of single-qubit states, wire 0 first.
    pub fn product(wires: &[[Complex64; 2]]) -> Result<Self> {
        check_register(wires.len())?;
        let mut amplitudes = Vec::with_capacity(1 << wires.len());
        amplitudes.push(ONE);
        for wire in wires {
            let prev = std::mem::take(&mut amplitudes);
            amplitudes.reserve(prev.len() * 2);
            for amp in prev {
                amplitudes.push(amp * wire[0]);
                amplitudes.push(amp * wire[1]);
            }
        }
        Self::from_amplitudes(wires.len(), amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Copy of the amplitudes in basis order.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        Complex64::new(self.re[index], self.im[index])
    }

    pub(crate) fn planes(&self) -> (&[f64], &[f64]) {
        (&self.re, &self.im)
    }

    pub(crate) fn planes_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    /// Squared norm, `sum |a_b|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }

    pub fn apply_rx(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.apply_single(qubit, &gates::rx(angle))
    }

    pub fn apply_rot(&mut self, qubit: usize, a: f64, b: f64, c: f64) -> Result<()> {
        self.apply_single(qubit, &gates::rot(a, b, c))
    }

    /// Applies an arbitrary 2×2 matrix to one wire.
    pub fn apply_single(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        apply_mat2(&mut self.re, &mut self.im, stride, m);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!(
                "CNOT control and target are both wire {control}"
            )));
        }
        let (c_mask, t_mask) = (self.stride(control), self.stride(target));
        apply_cnot_masks(&mut self.re, c_mask, t_mask);
        apply_cnot_masks(&mut self.im, c_mask, t_mask);
        Ok(())
    }

    /// Exact `<Z>` on one wire.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let stride = self.stride(qubit);
        let mut plus = 0.0;
        let mut minus = 0.0;
        for plane in [&self.re, &self.im] {
            for block in plane.chunks_exact(2 * stride) {
                let (lo, hi) = block.split_at(stride);
                plus += lo.iter().map(|v| v * v).sum::<f64>();
                minus += hi.iter().map(|v| v * v).sum::<f64>();
            }
        }
        Ok(plus - minus)
    }

    /// Distance between the blocks holding a wire's 0 and 1 amplitudes.
    pub(crate) fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "wire {qubit} on a {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Resource(format!(
            "{n_qubits} qubits requested, supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Swaps the target-bit pairs whose control bit is set. Both masks are
/// single distinct bits.
pub(crate) fn apply_cnot_masks(plane: &mut [f64], c_mask: usize, t_mask: usize) {
    let (low, high) = (c_mask.min(t_mask), c_mask.max(t_mask));
    let insert_zero = |k: usize, bit: usize| ((k & !(bit - 1)) << 1) | (k & (bit - 1));
    // runs of `low` consecutive indices share their control and target bits
    for run in 0..plane.len() / (4 * low) {
        let start = insert_zero(insert_zero(run * low, low), high) | c_mask;
        let (head, tail) = plane.split_at_mut(start + t_mask);
        head[start..start + low].swap_with_slice(&mut tail[..low]);
    }
}

pub(crate) fn apply_mat2(re: &mut [f64], im: &mut [f64], stride: usize, m: &Mat2) {
    let [[a, b], [c, d]] = *m;
    for (rb, ib) in re.chunks_exact_mut(2 * stride).zip(im.chunks_exact_mut(2 * stride)) {
        let (r0, r1) = rb.split_at_mut(stride);
        let (i0, i1) = ib.split_at_mut(stride);
        for k in 0..stride {
            let (x0r, x0i, x1r, x1i) = (r0[k], i0[k], r1[k], i1[k]);
            r0[k] = a.re * x0r - a.im * x0i + b.re * x1r - b.im * x1i;
            i0[k] = a.re * x0i + a.im * x0r + b.re * x1i + b.im * x1r;
            r1[k] = c.re * x0r - c.im * x0i + d.re * x1r - d.im * x1i;
            i1[k] = c.re * x0i + c.im * x0r + d.re * x1i + d.im * x1r;
        }
    }
}
