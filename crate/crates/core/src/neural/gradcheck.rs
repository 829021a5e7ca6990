//! Central finite-difference verification of the analytic BPTT gradient.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bce_loss, Gradients, Network, NetworkShape, NeuralError};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Relative errors use `max(|analytic|, |numeric|, REL_FLOOR)` as the
/// denominator so vanishing gradients are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    /// `tensor[index]`
    pub name: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.worst().map_or(0.0, |e| e.rel_error)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    /// Plain-text table of the `limit` worst entries.
    pub fn render(&self, limit: usize) -> String {
        let mut sorted: Vec<&GradCheckEntry> = self.entries.iter().collect();
        sorted.sort_by(|a, b| b.rel_error.total_cmp(&a.rel_error));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>16} {:>16} {:>12}",
            "parameter", "analytic", "numeric", "rel_error"
        );
        for e in sorted.into_iter().take(limit) {
            let _ = writeln!(
                out,
                "{:<24} {:>16.9e} {:>16.9e} {:>12.3e}",
                e.name, e.analytic, e.numeric, e.rel_error
            );
        }
        let _ = writeln!(
            out,
            "checked {} parameters, max rel_error {:.3e} (tolerance {:.1e}): {}",
            self.entries.len(),
            self.max_rel_error(),
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `analytic` against central differences of the sequence loss,
/// perturbing every parameter of `net` in turn.
pub fn compare_with_finite_differences(
    net: &Network,
    inputs: &[Vec<f64>],
    labels: &[f64],
    analytic: &Gradients,
    tolerance: f64,
) -> Result<GradCheckReport, NeuralError> {
    let loss_of = |n: &Network| -> Result<f64, NeuralError> {
        let (y, _) = n.forward_sequence(inputs)?;
        bce_loss(&y, labels)
    };
    let names: Vec<(String, usize)> = net
        .tensors()
        .iter()
        .map(|(name, t)| (name.clone(), t.len()))
        .collect();
    let analytic_tensors = analytic.tensors();
    let mut probe = net.clone();
    let mut entries = Vec::new();
    for (k, (name, len)) in names.iter().enumerate() {
        for i in 0..*len {
            let original = probe.tensors()[k].1[i];
            probe.tensors_mut()[k][i] = original + FD_STEP;
            let plus = loss_of(&probe)?;
            probe.tensors_mut()[k][i] = original - FD_STEP;
            let minus = loss_of(&probe)?;
            probe.tensors_mut()[k][i] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic_tensors[k].1[i];
            entries.push(GradCheckEntry {
                name: format!("{name}[{i}]"),
                analytic: a,
                numeric,
                rel_error: relative_error(a, numeric),
            });
        }
    }
    Ok(GradCheckReport { entries, tolerance })
}

/// Random inputs in `[0, 1)` and progress labels `t / seq_len`.
pub fn random_sequence(raw_width: usize, seq_len: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed1a_be15);
    let inputs = (0..seq_len)
        .map(|_| (0..raw_width).map(|_| rng.random::<f64>()).collect())
        .collect();
    let labels = (1..=seq_len).map(|t| t as f64 / seq_len as f64).collect();
    (inputs, labels)
}

/// Builds a random network of `shape`, runs one forward/backward pass on a
/// random sequence, and checks every parameter against finite differences.
pub fn grad_check(
    shape: &NetworkShape,
    seed: u64,
    seq_len: usize,
    tolerance: f64,
) -> Result<GradCheckReport, NeuralError> {
    if seq_len == 0 {
        return Err(NeuralError::EmptySequence);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::init(shape, &mut rng);
    // Non-zero biases so every bias path carries a gradient.
    let is_bias: Vec<bool> = net
        .tensors()
        .iter()
        .map(|(name, _)| name.ends_with("bias") || name.starts_with("gru.b_"))
        .collect();
    for (t, bias) in net.tensors_mut().into_iter().zip(is_bias) {
        if bias {
            t.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        }
    }
    let (inputs, labels) = random_sequence(shape.raw_width(), seq_len, seed);
    let (_, cache) = net.forward_sequence(&inputs)?;
    let analytic = net.backward_sequence(&cache, &labels)?;
    compare_with_finite_differences(&net, &inputs, &labels, &analytic, tolerance)
}
