//! Input-gated recurrent regressor: per-modality encoders, a GRU and a
//! single sigmoid output, with exact backpropagation through time.
//!
//! The raw input of one time step is the concatenation of every encoder's
//! input slice followed by a passthrough block (fed to the GRU unchanged).

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::sigmoid;
use super::{Activation, DenseLayer, GruCell, NeuralError};

/// Layer widths of a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkShape {
    /// `(input width, output width)` per encoder, in input order.
    pub encoders: Vec<(usize, usize)>,
    pub encoder_activation: Activation,
    pub passthrough: usize,
    pub hidden: usize,
}

impl NetworkShape {
    pub fn raw_width(&self) -> usize {
        self.encoders.iter().map(|e| e.0).sum::<usize>() + self.passthrough
    }

    pub fn recurrent_width(&self) -> usize {
        self.encoders.iter().map(|e| e.1).sum::<usize>() + self.passthrough
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub encoders: Vec<DenseLayer>,
    pub passthrough: usize,
    pub cell: GruCell,
    pub head: DenseLayer,
}

/// Everything the backward pass needs from one time step.
#[derive(Debug, Clone)]
struct StepCache {
    raw: Vec<f64>,
    encoded: Vec<Vec<f64>>,
    recurrent_input: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    candidate: Vec<f64>,
    h: Vec<f64>,
}

/// Forward-pass intermediates for one sequence.
#[derive(Debug, Clone)]
pub struct SequenceCache {
    fingerprint: u64,
    steps: Vec<StepCache>,
    outputs: Vec<f64>,
}

impl SequenceCache {
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    inner: Network,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        let mut inner = net.clone();
        for t in inner.tensors_mut() {
            t.fill(0.0);
        }
        Self { inner }
    }

    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        self.inner.tensors()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.inner.tensors_mut()
    }

    pub fn as_network(&self) -> &Network {
        &self.inner
    }

    pub fn global_norm(&self) -> f64 {
        self.inner
            .tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`. Returns the norm
    /// before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for t in self.tensors_mut() {
                t.iter_mut().for_each(|g| *g *= scale);
            }
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.inner
            .tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|g| g.is_finite()))
    }
}

impl Network {
    pub fn init<R: Rng + ?Sized>(shape: &NetworkShape, rng: &mut R) -> Self {
        let encoders = shape
            .encoders
            .iter()
            .map(|&(i, o)| DenseLayer::init(i, o, shape.encoder_activation, rng))
            .collect();
        let cell = GruCell::init(shape.recurrent_width(), shape.hidden, rng);
        let head = DenseLayer::init(shape.hidden, 1, Activation::Sigmoid, rng);
        Self {
            encoders,
            passthrough: shape.passthrough,
            cell,
            head,
        }
    }

    pub fn zeros(shape: &NetworkShape) -> Self {
        Self {
            encoders: shape
                .encoders
                .iter()
                .map(|&(i, o)| DenseLayer::zeros(i, o, shape.encoder_activation))
                .collect(),
            passthrough: shape.passthrough,
            cell: GruCell::zeros(shape.recurrent_width(), shape.hidden),
            head: DenseLayer::zeros(shape.hidden, 1, Activation::Sigmoid),
        }
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            encoders: self
                .encoders
                .iter()
                .map(|e| (e.input_dim(), e.output_dim()))
                .collect(),
            encoder_activation: self
                .encoders
                .first()
                .map_or(Activation::Tanh, |e| e.activation),
            passthrough: self.passthrough,
            hidden: self.cell.hidden(),
        }
    }

    pub fn raw_width(&self) -> usize {
        self.encoders.iter().map(|e| e.input_dim()).sum::<usize>() + self.passthrough
    }

    pub fn recurrent_width(&self) -> usize {
        self.encoders.iter().map(|e| e.output_dim()).sum::<usize>() + self.passthrough
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden()
    }

    /// Checks internal dimensional consistency and parameter finiteness.
    pub fn validate(&self) -> Result<(), NeuralError> {
        let consistent = self.encoders.iter().all(|e| e.shape_ok())
            && self.cell.shape_ok()
            && self.cell.input_dim() == self.recurrent_width()
            && self.head.shape_ok()
            && self.head.input_dim() == self.hidden()
            && self.head.output_dim() == 1;
        if !consistent {
            return Err(NeuralError::Inconsistent);
        }
        for (name, t) in self.tensors() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFiniteParameter(name));
            }
        }
        Ok(())
    }

    /// Named views of every parameter tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        for (k, e) in self.encoders.iter().enumerate() {
            out.push((format!("encoder{k}.weight"), e.weights.data()));
            out.push((format!("encoder{k}.bias"), &e.bias));
        }
        let c = &self.cell;
        out.push(("gru.w_z".into(), c.w_z.data()));
        out.push(("gru.w_r".into(), c.w_r.data()));
        out.push(("gru.w_h".into(), c.w_h.data()));
        out.push(("gru.u_z".into(), c.u_z.data()));
        out.push(("gru.u_r".into(), c.u_r.data()));
        out.push(("gru.u_h".into(), c.u_h.data()));
        out.push(("gru.b_z".into(), &c.b_z));
        out.push(("gru.b_r".into(), &c.b_r));
        out.push(("gru.b_h".into(), &c.b_h));
        out.push(("head.weight".into(), self.head.weights.data()));
        out.push(("head.bias".into(), &self.head.bias));
        out
    }

    /// Mutable views in the same order as [`Network::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for e in &mut self.encoders {
            out.push(e.weights.data_mut());
            out.push(&mut e.bias);
        }
        let c = &mut self.cell;
        out.push(c.w_z.data_mut());
        out.push(c.w_r.data_mut());
        out.push(c.w_h.data_mut());
        out.push(c.u_z.data_mut());
        out.push(c.u_r.data_mut());
        out.push(c.u_h.data_mut());
        out.push(&mut c.b_z);
        out.push(&mut c.b_r);
        out.push(&mut c.b_h);
        out.push(self.head.weights.data_mut());
        out.push(&mut self.head.bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Hash of every parameter bit pattern; ties a cache to the parameters
    /// that produced it.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        for (_, t) in self.tensors() {
            hasher.write_usize(t.len());
            for v in t {
                hasher.write_u64(v.to_bits());
            }
        }
        hasher.finish()
    }

    fn check_raw(&self, raw: &[f64]) -> Result<(), NeuralError> {
        if raw.len() != self.raw_width() {
            return Err(NeuralError::Shape {
                what: "raw input".into(),
                expected: self.raw_width(),
                found: raw.len(),
            });
        }
        Ok(())
    }

    fn encode_parts(&self, raw: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut offset = 0;
        let mut encoded = Vec::with_capacity(self.encoders.len());
        let mut recurrent_input = Vec::with_capacity(self.recurrent_width());
        for e in &self.encoders {
            let out = e.forward_unchecked(&raw[offset..offset + e.input_dim()]);
            offset += e.input_dim();
            recurrent_input.extend_from_slice(&out);
            encoded.push(out);
        }
        recurrent_input.extend_from_slice(&raw[offset..]);
        (encoded, recurrent_input)
    }

    /// Recurrent-cell input for one raw input vector.
    pub fn encode(&self, raw: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_raw(raw)?;
        Ok(self.encode_parts(raw).1)
    }

    fn output(&self, h: &[f64]) -> f64 {
        let mut pre = self.head.bias[0];
        self.head
            .weights
            .add_mul_vec(h, std::slice::from_mut(&mut pre));
        sigmoid(pre)
    }

    /// Advances the recurrent state by one raw input. Returns the new state
    /// and the progress output. This is the single code path used by both
    /// batch and streaming evaluation.
    pub fn step(&self, h_prev: &[f64], raw: &[f64]) -> Result<(Vec<f64>, f64), NeuralError> {
        self.check_raw(raw)?;
        if h_prev.len() != self.hidden() {
            return Err(NeuralError::Shape {
                what: "recurrent state".into(),
                expected: self.hidden(),
                found: h_prev.len(),
            });
        }
        let (cache, y) = self.step_cached(h_prev, raw);
        Ok((cache.h, y))
    }

    fn step_cached(&self, h_prev: &[f64], raw: &[f64]) -> (StepCache, f64) {
        let (encoded, recurrent_input) = self.encode_parts(raw);
        let gru = self.cell.step_full(h_prev, &recurrent_input);
        let y = self.output(&gru.h);
        (
            StepCache {
                raw: raw.to_vec(),
                encoded,
                recurrent_input,
                h_prev: h_prev.to_vec(),
                z: gru.z,
                r: gru.r,
                candidate: gru.candidate,
                h: gru.h,
            },
            y,
        )
    }

    /// Runs the whole sequence from a zero state.
    pub fn forward_sequence(
        &self,
        inputs: &[Vec<f64>],
    ) -> Result<(Vec<f64>, SequenceCache), NeuralError> {
        if inputs.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        let mut h = vec![0.0; self.hidden()];
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for (t, raw) in inputs.iter().enumerate() {
            self.check_raw(raw)?;
            let (cache, y) = self.step_cached(&h, raw);
            if !y.is_finite() || cache.h.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFinite { step: t + 1 });
            }
            h.clone_from(&cache.h);
            steps.push(cache);
            outputs.push(y);
        }
        Ok((
            outputs.clone(),
            SequenceCache {
                fingerprint: self.fingerprint(),
                steps,
                outputs,
            },
        ))
    }

    /// Exact gradient of the time-averaged sigmoid cross-entropy against
    /// `labels`, given the cache of a matching forward pass.
    pub fn backward_sequence(
        &self,
        cache: &SequenceCache,
        labels: &[f64],
    ) -> Result<Gradients, NeuralError> {
        if cache.fingerprint != self.fingerprint() {
            return Err(NeuralError::StaleCache);
        }
        if labels.len() != cache.steps.len() {
            return Err(NeuralError::Shape {
                what: "labels".into(),
                expected: cache.steps.len(),
                found: labels.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let g = &mut grads.inner;
        let hidden = self.hidden();
        let scale = 1.0 / labels.len() as f64;
        let mut dh_next = vec![0.0; hidden];
        let mut d_candidate_pre = vec![0.0; hidden];
        let mut dz_pre = vec![0.0; hidden];
        let mut dr_pre = vec![0.0; hidden];
        let mut gated = vec![0.0; hidden];

        for (t, step) in cache.steps.iter().enumerate().rev() {
            // Sigmoid + cross-entropy: d loss / d pre-activation = y - l.
            let d_out = (cache.outputs[t] - labels[t]) * scale;
            g.head.bias[0] += d_out;
            g.head.weights.add_outer(&[d_out], &step.h);

            let mut dh = dh_next.clone();
            self.head.weights.add_tmul_vec(&[d_out], &mut dh);

            let mut dh_prev = vec![0.0; hidden];
            for i in 0..hidden {
                let z = step.z[i];
                let c = step.candidate[i];
                d_candidate_pre[i] = dh[i] * z * (1.0 - c * c);
                dz_pre[i] = dh[i] * (c - step.h_prev[i]) * z * (1.0 - z);
                dh_prev[i] = dh[i] * (1.0 - z);
                gated[i] = step.r[i] * step.h_prev[i];
            }

            let cell = &self.cell;
            let gc = &mut g.cell;
            let mut d_gated = vec![0.0; hidden];
            cell.u_h.add_tmul_vec(&d_candidate_pre, &mut d_gated);
            for i in 0..hidden {
                let r = step.r[i];
                dr_pre[i] = d_gated[i] * step.h_prev[i] * r * (1.0 - r);
                dh_prev[i] += d_gated[i] * r;
            }

            gc.w_h.add_outer(&d_candidate_pre, &step.recurrent_input);
            gc.u_h.add_outer(&d_candidate_pre, &gated);
            gc.w_z.add_outer(&dz_pre, &step.recurrent_input);
            gc.u_z.add_outer(&dz_pre, &step.h_prev);
            gc.w_r.add_outer(&dr_pre, &step.recurrent_input);
            gc.u_r.add_outer(&dr_pre, &step.h_prev);
            for i in 0..hidden {
                gc.b_h[i] += d_candidate_pre[i];
                gc.b_z[i] += dz_pre[i];
                gc.b_r[i] += dr_pre[i];
            }
            cell.u_z.add_tmul_vec(&dz_pre, &mut dh_prev);
            cell.u_r.add_tmul_vec(&dr_pre, &mut dh_prev);

            if !self.encoders.is_empty() {
                let mut d_input = vec![0.0; self.recurrent_width()];
                cell.w_z.add_tmul_vec(&dz_pre, &mut d_input);
                cell.w_r.add_tmul_vec(&dr_pre, &mut d_input);
                cell.w_h.add_tmul_vec(&d_candidate_pre, &mut d_input);

                let mut out_offset = 0;
                let mut raw_offset = 0;
                for (k, enc) in self.encoders.iter().enumerate() {
                    let width = enc.output_dim();
                    let d_pre: Vec<f64> = d_input[out_offset..out_offset + width]
                        .iter()
                        .zip(&step.encoded[k])
                        .map(|(d, y)| d * enc.activation.derivative_from_output(*y))
                        .collect();
                    let raw = &step.raw[raw_offset..raw_offset + enc.input_dim()];
                    g.encoders[k].weights.add_outer(&d_pre, raw);
                    for (b, d) in g.encoders[k].bias.iter_mut().zip(&d_pre) {
                        *b += d;
                    }
                    out_offset += width;
                    raw_offset += enc.input_dim();
                }
            }
            dh_next = dh_prev;
        }
        Ok(grads)
    }
}
