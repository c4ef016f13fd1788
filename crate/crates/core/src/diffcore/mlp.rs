//! Dense feed-forward network with a flat parameter vector.
//!
//! Weights of each layer are stored column by column: the `out_dim` weights
//! leaving input unit `j` are contiguous. The forward pass is then a sequence
//! of AXPYs, which the compiler vectorizes without reassociation.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::Rng;

use crate::error::check_dim;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => libm::tanh(z),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub(crate) weight_offset: usize,
    pub(crate) bias_offset: usize,
}

impl LayerShape {
    pub fn num_params(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// Output layer parameters are drawn from `U[-OUTPUT_INIT, OUTPUT_INIT]`.
pub const OUTPUT_INIT: f64 = 0.003;

/// Feed-forward network: hidden layers share one activation, the output layer
/// is linear. An optional fixed affine map `(x - center) * scale` is applied
/// to the input before the first layer; derivatives are taken with respect to
/// the raw input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
    input_center: Vec<f64>,
    input_scale: Vec<f64>,
}

impl MlpNet {
    /// Xavier-uniform hidden weights, zero hidden biases, and output weights and
    /// biases uniform in `[-0.003, 0.003]`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden)?;
        let last = net.layers.len() - 1;
        for (l, shape) in net.layers.clone().iter().enumerate() {
            let w = &mut net.params[shape.weight_offset..shape.weight_offset + shape.inputs * shape.outputs];
            if l == last {
                let dist = Uniform::new_inclusive(-OUTPUT_INIT, OUTPUT_INIT).expect("finite bounds");
                w.iter_mut().for_each(|p| *p = dist.sample(rng));
                let b = &mut net.params[shape.bias_offset..shape.bias_offset + shape.outputs];
                b.iter_mut().for_each(|p| *p = dist.sample(rng));
            } else {
                let limit = libm::sqrt(6.0 / (shape.inputs + shape.outputs) as f64);
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
                w.iter_mut().for_each(|p| *p = dist.sample(rng));
            }
        }
        Ok(net)
    }

    /// All parameters zero.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::invalid("a network needs at least input and output sizes"));
        }
        if sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for (l, pair) in sizes.windows(2).enumerate() {
            let activation = if l + 2 == sizes.len() { Activation::Identity } else { hidden };
            let shape = LayerShape {
                inputs: pair[0],
                outputs: pair[1],
                activation,
                weight_offset: offset,
                bias_offset: offset + pair[0] * pair[1],
            };
            offset += shape.num_params();
            layers.push(shape);
        }
        Ok(Self {
            layers,
            params: vec![0.0; offset],
            input_center: vec![0.0; sizes[0]],
            input_scale: vec![1.0; sizes[0]],
        })
    }

    /// Rebuilds a network from per-layer `(inputs, outputs, activation)` and a
    /// flat parameter vector in this crate's layout.
    pub fn from_parts(shapes: &[(usize, usize, Activation)], params: Vec<f64>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::invalid("no layers"));
        }
        let mut layers = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (l, &(inputs, outputs, activation)) in shapes.iter().enumerate() {
            if l > 0 && shapes[l - 1].1 != inputs {
                return Err(Error::invalid("consecutive layer sizes disagree"));
            }
            if inputs == 0 || outputs == 0 {
                return Err(Error::invalid("layer sizes must be positive"));
            }
            let shape = LayerShape {
                inputs,
                outputs,
                activation,
                weight_offset: offset,
                bias_offset: offset + inputs * outputs,
            };
            offset += shape.num_params();
            layers.push(shape);
        }
        check_dim(offset, params.len())?;
        let n = shapes[0].0;
        Ok(Self {
            layers,
            params,
            input_center: vec![0.0; n],
            input_scale: vec![1.0; n],
        })
    }

    /// Fixed input normalization `(x - center) * scale`.
    pub fn with_input_normalization(mut self, center: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        check_dim(self.input_dim(), center.len())?;
        check_dim(self.input_dim(), scale.len())?;
        self.input_center = center;
        self.input_scale = scale;
        Ok(self)
    }

    /// Normalization mapping the box `[lo, hi]` onto `[-1, 1]` per coordinate.
    pub fn with_box_normalization(self, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let center = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let scale = lo.iter().zip(hi).map(|(l, h)| 2.0 / (h - l)).collect();
        self.with_input_normalization(center, scale)
    }

    pub fn input_center(&self) -> &[f64] {
        &self.input_center
    }

    pub fn input_scale(&self) -> &[f64] {
        &self.input_scale
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Column `j` of layer `l`'s weight matrix (weights from input unit `j`).
    #[inline]
    pub(crate) fn weight_column(&self, l: usize, j: usize) -> &[f64] {
        let s = &self.layers[l];
        let start = s.weight_offset + j * s.outputs;
        &self.params[start..start + s.outputs]
    }

    /// Biases of layer `l`.
    #[inline]
    pub fn bias(&self, l: usize) -> &[f64] {
        let s = &self.layers[l];
        &self.params[s.bias_offset..s.bias_offset + s.outputs]
    }

    /// Weight `W[i][j]` of layer `l` (output `i`, input `j`).
    pub fn weight(&self, l: usize, i: usize, j: usize) -> f64 {
        self.weight_column(l, j)[i]
    }

    pub fn set_weight(&mut self, l: usize, i: usize, j: usize, v: f64) {
        let s = self.layers[l];
        self.params[s.weight_offset + j * s.outputs + i] = v;
    }

    pub fn set_bias(&mut self, l: usize, i: usize, v: f64) {
        let s = self.layers[l];
        self.params[s.bias_offset + i] = v;
    }

    pub fn workspace(&self) -> Workspace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(vec![0.0; self.input_dim()]);
        for l in &self.layers {
            acts.push(vec![0.0; l.outputs]);
        }
        let widest = self.layers.iter().map(|l| l.outputs.max(l.inputs)).max().unwrap_or(0);
        Workspace {
            acts,
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let mut ws = self.workspace();
        Ok(self.forward_with(x, &mut ws).to_vec())
    }

    /// Forward pass reusing `ws`; returns the output slice. Panics on a
    /// dimension mismatch (use [`MlpNet::forward`] for a checked call).
    pub fn forward_with<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> &'w [f64] {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        for (k, dst) in ws.acts[0].iter_mut().enumerate() {
            *dst = (x[k] - self.input_center[k]) * self.input_scale[k];
        }
        for (l, shape) in self.layers.iter().enumerate() {
            let (before, after) = ws.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            out.copy_from_slice(self.bias(l));
            for (j, &aj) in input.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                axpy(aj, self.weight_column(l, j), out);
            }
            if shape.activation != Activation::Identity {
                for v in out.iter_mut() {
                    *v = shape.activation.apply(*v);
                }
            }
        }
        &ws.acts[self.layers.len()]
    }

    /// Adds the parameter gradient of `sum_i dout[i] * output[i]` to `grads`,
    /// using the activations left in `ws` by the last `forward_with` call.
    pub fn accumulate_gradient(&self, ws: &mut Workspace, dout: &[f64], grads: &mut [f64]) {
        assert_eq!(dout.len(), self.output_dim());
        assert_eq!(grads.len(), self.params.len());
        let nl = self.layers.len();
        let Workspace { acts, delta, delta_prev } = ws;
        let top = &self.layers[nl - 1];
        for i in 0..top.outputs {
            delta[i] = dout[i] * top.activation.derivative_from_output(acts[nl][i]);
        }
        for l in (0..nl).rev() {
            let shape = self.layers[l];
            let d = &delta[..shape.outputs];
            let input = &acts[l];
            for (g, &di) in grads[shape.bias_offset..shape.bias_offset + shape.outputs]
                .iter_mut()
                .zip(d)
            {
                *g += di;
            }
            for (j, &aj) in input.iter().enumerate() {
                let start = shape.weight_offset + j * shape.outputs;
                if aj != 0.0 {
                    axpy(aj, d, &mut grads[start..start + shape.outputs]);
                }
                if l > 0 {
                    let back = dot(&self.params[start..start + shape.outputs], d);
                    let below = self.layers[l - 1].activation;
                    delta_prev[j] = back * below.derivative_from_output(aj);
                }
            }
            if l > 0 {
                core::mem::swap(delta, delta_prev);
            }
        }
    }
}

/// Scratch buffers for allocation-free forward/backward passes.
#[derive(Debug, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    pub fn output(&self) -> &[f64] {
        &self.acts[self.acts.len() - 1]
    }
}

#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn linear_layer_forward() {
        let mut net = MlpNet::zeros(&[2, 2], Activation::Tanh).unwrap();
        net.set_weight(0, 0, 0, 2.0);
        net.set_weight(0, 1, 1, 3.0);
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = stream(3, Stream::Init);
        let net = MlpNet::new(&[3, 16, 16, 2], Activation::Tanh, &mut rng).unwrap();
        let x = [0.3, -0.7, 1.1];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = MlpNet::zeros(&[2, 4, 1], Activation::Tanh).unwrap();
        assert_eq!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn initialization_ranges() {
        let mut rng = stream(11, Stream::Init);
        let net = MlpNet::new(&[2, 32, 32, 3], Activation::Tanh, &mut rng).unwrap();
        let out = net.layers()[2];
        let out_params = &net.params()[out.weight_offset..];
        assert!(out_params.iter().all(|p| p.abs() <= OUTPUT_INIT));
        let hidden = net.layers()[1];
        let limit = libm::sqrt(6.0 / 64.0);
        let w = &net.params()[hidden.weight_offset..hidden.bias_offset];
        assert!(w.iter().all(|p| p.abs() <= limit));
        assert!(w.iter().any(|p| p.abs() > OUTPUT_INIT));
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = stream(5, Stream::Init);
        let mut net = MlpNet::new(&[2, 5, 4, 2], Activation::Tanh, &mut rng).unwrap();
        // Push the output layer out of its tiny init so every path matters.
        for p in net.params_mut().iter_mut() {
            *p *= 1.5;
            *p += 0.05;
        }
        let x = [0.4, -0.3];
        let dout = [0.7, -1.3];
        let mut ws = net.workspace();
        net.forward_with(&x, &mut ws);
        let mut grads = vec![0.0; net.num_params()];
        net.accumulate_gradient(&mut ws, &dout, &mut grads);
        let loss = |n: &MlpNet| {
            let y = n.forward(&x).unwrap();
            dout[0] * y[0] + dout[1] * y[1]
        };
        for k in 0..net.num_params() {
            let h = 1e-6;
            let mut plus = net.clone();
            plus.params_mut()[k] += h;
            let mut minus = net.clone();
            minus.params_mut()[k] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - grads[k]).abs() < 1e-7 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grads[k]);
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }
}
