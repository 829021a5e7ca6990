//! Gated recurrent unit.
//!
//! Convention (recorded in checkpoints as `reset-inside-candidate`):
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::sigmoid;
use super::{Matrix, NeuralError};

pub const GRU_CONVENTION: &str = "reset-inside-candidate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_h: Matrix,
    pub b_z: Vec<f64>,
    pub b_r: Vec<f64>,
    pub b_h: Vec<f64>,
}

/// Intermediates of one step, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GruStep {
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub candidate: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruCell {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_z: Matrix::zeros(hidden, input),
            w_r: Matrix::zeros(hidden, input),
            w_h: Matrix::zeros(hidden, input),
            u_z: Matrix::zeros(hidden, hidden),
            u_r: Matrix::zeros(hidden, hidden),
            u_h: Matrix::zeros(hidden, hidden),
            b_z: vec![0.0; hidden],
            b_r: vec![0.0; hidden],
            b_h: vec![0.0; hidden],
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            w_z: Matrix::glorot(hidden, input, rng),
            w_r: Matrix::glorot(hidden, input, rng),
            w_h: Matrix::glorot(hidden, input, rng),
            u_z: Matrix::glorot(hidden, hidden, rng),
            u_r: Matrix::glorot(hidden, hidden, rng),
            u_h: Matrix::glorot(hidden, hidden, rng),
            b_z: vec![0.0; hidden],
            b_r: vec![0.0; hidden],
            b_h: vec![0.0; hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_z.len()
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub(crate) fn shape_ok(&self) -> bool {
        let (h, i) = (self.hidden(), self.input_dim());
        [&self.w_z, &self.w_r, &self.w_h]
            .iter()
            .all(|m| m.rows() == h && m.cols() == i)
            && [&self.u_z, &self.u_r, &self.u_h]
                .iter()
                .all(|m| m.rows() == h && m.cols() == h)
            && self.b_r.len() == h
            && self.b_h.len() == h
    }

    pub fn step(&self, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if x.len() != self.input_dim() {
            return Err(NeuralError::Shape {
                what: "gru input".into(),
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        if h_prev.len() != self.hidden() {
            return Err(NeuralError::Shape {
                what: "gru state".into(),
                expected: self.hidden(),
                found: h_prev.len(),
            });
        }
        Ok(self.step_full(h_prev, x).h)
    }

    pub(crate) fn step_full(&self, h_prev: &[f64], x: &[f64]) -> GruStep {
        let mut z = self.b_z.clone();
        self.w_z.add_mul_vec(x, &mut z);
        self.u_z.add_mul_vec(h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = self.b_r.clone();
        self.w_r.add_mul_vec(x, &mut r);
        self.u_r.add_mul_vec(h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let gated: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut candidate = self.b_h.clone();
        self.w_h.add_mul_vec(x, &mut candidate);
        self.u_h.add_mul_vec(&gated, &mut candidate);
        candidate.iter_mut().for_each(|v| *v = v.tanh());

        let h = z
            .iter()
            .zip(h_prev)
            .zip(&candidate)
            .map(|((zi, hp), c)| (1.0 - zi) * hp + zi * c)
            .collect();
        GruStep { z, r, candidate, h }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cell_halves_state() {
        let cell = GruCell::zeros(3, 4);
        let h = [0.8, -0.4, 0.2, 1.0];
        let full = cell.step_full(&h, &[1.0, 2.0, 3.0]);
        assert_eq!(full.z, vec![0.5; 4]);
        assert_eq!(full.r, vec![0.5; 4]);
        assert_eq!(full.candidate, vec![0.0; 4]);
        assert_eq!(full.h, vec![0.4, -0.2, 0.1, 0.5]);
    }

    #[test]
    fn zero_state_is_fixed_point_of_zero_cell() {
        let cell = GruCell::zeros(2, 3);
        assert_eq!(cell.step(&[0.0; 3], &[5.0, -5.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cell = GruCell::init(3, 4, &mut rng);
        for b in [&mut cell.b_z, &mut cell.b_r, &mut cell.b_h] {
            b.iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
        }
        let x = [0.3, -0.7, 0.9];
        let h = [0.1, -0.5, 0.25, 0.8];

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut z = [0.0; 4];
        let mut r = [0.0; 4];
        for i in 0..4 {
            let mut az = cell.b_z[i];
            let mut ar = cell.b_r[i];
            for j in 0..3 {
                az += cell.w_z.get(i, j) * x[j];
                ar += cell.w_r.get(i, j) * x[j];
            }
            for j in 0..4 {
                az += cell.u_z.get(i, j) * h[j];
                ar += cell.u_r.get(i, j) * h[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let mut expected = [0.0; 4];
        for i in 0..4 {
            let mut ah = cell.b_h[i];
            for j in 0..3 {
                ah += cell.w_h.get(i, j) * x[j];
            }
            for j in 0..4 {
                ah += cell.u_h.get(i, j) * r[j] * h[j];
            }
            expected[i] = (1.0 - z[i]) * h[i] + z[i] * ah.tanh();
        }
        let got = cell.step(&h, &x).unwrap();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-14, "{g} vs {e}");
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let cell = GruCell::zeros(2, 3);
        assert!(cell.step(&[0.0; 2], &[0.0; 2]).is_err());
        assert!(cell.step(&[0.0; 3], &[0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn state_stays_bounded(seed in any::<u64>(), h in prop::collection::vec(-1.0f64..=1.0, 6),
                               x in prop::collection::vec(-3.0f64..3.0, 4)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cell = GruCell::init(4, 6, &mut rng);
            for v in cell.step(&h, &x).unwrap() {
                prop_assert!(v > -1.0 && v < 1.0, "{v}");
            }
        }
    }
}
