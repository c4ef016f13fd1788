//! Exact derivatives of a network output with respect to its input.
//!
//! A forward-mode Taylor jet is pushed through the layers: for every unit we
//! carry the value, the gradient, the unique Hessian entries (`i <= j`) and,
//! when needed, the unique third-derivative entries (`i <= j <= k`). Linear
//! layers map each component independently; activations apply Faà di Bruno:
//!
//! ```text
//! a_i   = σ' z_i
//! a_ij  = σ'' z_i z_j + σ' z_ij
//! a_ijk = σ''' z_i z_j z_k + σ'' (z_ij z_k + z_ik z_j + z_jk z_i) + σ' z_ijk
//! ```
//!
//! Only unique index tuples are stored, so the assembled Hessian and third
//! tensor are symmetric bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use super::mlp::{argmax, axpy, Activation, MlpNet};
use crate::error::check_dim;
use crate::linalg::SquareMatrix;
use crate::{Error, Result};

/// Reduces the network outputs to the scalar being differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSelector {
    Output(usize),
    /// `V(x) = max_a Q(x, a)`, differentiated on the argmax branch. Ties go to
    /// the lowest action index.
    MaxOutput,
}

impl ValueSelector {
    pub fn resolve(self, net: &MlpNet, x: &[f64]) -> Result<usize> {
        match self {
            ValueSelector::Output(i) => {
                if i < net.output_dim() {
                    Ok(i)
                } else {
                    Err(Error::OutputIndex { index: i, len: net.output_dim() })
                }
            }
            ValueSelector::MaxOutput => Ok(argmax(&net.forward(x)?)),
        }
    }
}

/// Which squared-norm terms make up the climbing criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// `‖∇V‖² + ‖H_V‖²_F`
    Full,
    /// `‖∇V‖²` only
    GradNorm,
    /// `‖H_V‖²_F` only
    HessNorm,
}

/// Value and derivatives of a scalar function at a point.
///
/// `hess` is `n × n` row-major; `third[(i*n + j)*n + k]` holds `∂³f/∂x_i∂x_j∂x_k`
/// and is empty when third derivatives were not requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Vec<f64>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hessian(&self) -> SquareMatrix {
        SquareMatrix::from_row_major(self.dim(), self.hess.clone())
    }

    /// The local-frequency criterion value.
    pub fn criterion(&self, kind: Criterion) -> f64 {
        let g2: f64 = self.grad.iter().map(|g| g * g).sum();
        let h2: f64 = self.hess.iter().map(|h| h * h).sum();
        match kind {
            Criterion::Full => g2 + h2,
            Criterion::GradNorm => g2,
            Criterion::HessNorm => h2,
        }
    }

    /// Gradient of [`Jet::criterion`]:
    /// `∂_k ‖∇f‖² = 2 Σ_i f_i f_ik`, `∂_k ‖H‖²_F = 2 Σ_ij f_ij f_ijk`.
    /// Requires third derivatives for `Full` and `HessNorm`.
    pub fn criterion_gradient(&self, kind: Criterion) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        if matches!(kind, Criterion::Full | Criterion::GradNorm) {
            for (k, o) in out.iter_mut().enumerate() {
                *o += 2.0 * (0..n).map(|i| self.grad[i] * self.hess[i * n + k]).sum::<f64>();
            }
        }
        if matches!(kind, Criterion::Full | Criterion::HessNorm) {
            assert_eq!(self.third.len(), n * n * n, "third derivatives were not computed");
            for (k, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for ij in 0..n * n {
                    s += self.hess[ij] * self.third[ij * n + k];
                }
                *o += 2.0 * s;
            }
        }
        out
    }
}

/// Value, input gradient and input Hessian of one network output.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDerivatives {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SquareMatrix,
}

/// Index tables for the unique second and third order components.
struct Tuples {
    n: usize,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<usize>,
    triples: Vec<(usize, usize, usize)>,
}

impl Tuples {
    fn new(n: usize, order: usize) -> Self {
        let mut pairs = Vec::new();
        let mut pair_index = vec![0; n * n];
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    pair_index[i * n + j] = pairs.len();
                    pair_index[j * n + i] = pairs.len();
                    pairs.push((i, j));
                }
            }
        }
        let mut triples = Vec::new();
        if order >= 3 {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        triples.push((i, j, k));
                    }
                }
            }
        }
        Self { n, pairs, pair_index, triples }
    }

    fn components(&self) -> usize {
        1 + self.n + self.pairs.len() + self.triples.len()
    }

    #[inline]
    fn pair(&self, i: usize, j: usize) -> usize {
        1 + self.n + self.pair_index[i * self.n + j]
    }
}

/// Per-activation derivatives `(σ, σ', σ'', σ''')` at pre-activation `z`.
#[inline]
fn activation_derivs(act: Activation, z: f64) -> (f64, f64, f64, f64) {
    match act {
        Activation::Identity => (z, 1.0, 0.0, 0.0),
        Activation::Tanh => {
            let t = libm::tanh(z);
            let t1 = 1.0 - t * t;
            let t2 = -2.0 * t * t1;
            let t3 = -2.0 * (t1 * t1 + t * t2);
            (t, t1, t2, t3)
        }
        Activation::Relu => {
            if z > 0.0 {
                (z, 1.0, 0.0, 0.0)
            } else {
                (0.0, 0.0, 0.0, 0.0)
            }
        }
    }
}

/// Applies the activation to a component-major jet block in place.
fn activate(act: Activation, tuples: &Tuples, units: usize, z: &mut [f64]) {
    let n = tuples.n;
    let npairs = tuples.pairs.len();
    let mut zi = vec![0.0; n];
    let mut zij = vec![0.0; npairs];
    for u in 0..units {
        let (s0, s1, s2, s3) = activation_derivs(act, z[u]);
        for i in 0..n {
            zi[i] = z[(1 + i) * units + u];
        }
        for p in 0..npairs {
            zij[p] = z[(1 + n + p) * units + u];
        }
        z[u] = s0;
        for i in 0..n {
            z[(1 + i) * units + u] = s1 * zi[i];
        }
        for (p, &(i, j)) in tuples.pairs.iter().enumerate() {
            z[(1 + n + p) * units + u] = s2 * (zi[i] * zi[j]) + s1 * zij[p];
        }
        let base = 1 + n + npairs;
        for (t, &(i, j, k)) in tuples.triples.iter().enumerate() {
            let slot = (base + t) * units + u;
            let zijk = z[slot];
            let pij = tuples.pair_index[i * n + j];
            let pik = tuples.pair_index[i * n + k];
            let pjk = tuples.pair_index[j * n + k];
            z[slot] = s3 * (zi[i] * zi[j] * zi[k])
                + s2 * (zij[pij] * zi[k] + zij[pik] * zi[j] + zij[pjk] * zi[i])
                + s1 * zijk;
        }
    }
}

/// Exact jet of output `output` at `x` up to `order` (1, 2 or 3).
pub fn input_jet(net: &MlpNet, x: &[f64], output: usize, order: usize) -> Result<Jet> {
    check_dim(net.input_dim(), x.len())?;
    if output >= net.output_dim() {
        return Err(Error::OutputIndex { index: output, len: net.output_dim() });
    }
    if !(1..=3).contains(&order) {
        return Err(Error::invalid("derivative order must be 1, 2 or 3"));
    }
    let n = x.len();
    let tuples = Tuples::new(n, order);
    let comps = tuples.components();
    let layers = net.layers();
    let last = layers.len() - 1;

    // First layer: affine in x, so only value and gradient are non-zero.
    let first = layers[0];
    let mut units = first.outputs;
    let mut block = vec![0.0; comps * units];
    block[..units].copy_from_slice(net.bias(0));
    for j in 0..n {
        let u = (x[j] - net.input_center()[j]) * net.input_scale()[j];
        let col = net.weight_column(0, j);
        axpy(u, col, &mut block[..units]);
        axpy(net.input_scale()[j], col, &mut block[(1 + j) * units..(2 + j) * units]);
    }
    if last == 0 {
        return Ok(assemble(&tuples, &block, units, output));
    }
    activate(first.activation, &tuples, units, &mut block);

    for l in 1..last {
        let shape = layers[l];
        let out_units = shape.outputs;
        let mut next = vec![0.0; comps * out_units];
        next[..out_units].copy_from_slice(net.bias(l));
        for j in 0..units {
            let col = net.weight_column(l, j);
            for c in 0..comps {
                let a = block[c * units + j];
                if a != 0.0 {
                    axpy(a, col, &mut next[c * out_units..(c + 1) * out_units]);
                }
            }
        }
        activate(shape.activation, &tuples, out_units, &mut next);
        block = next;
        units = out_units;
    }

    // Output layer: linear, and only the selected row is needed.
    let mut row = vec![0.0; comps];
    row[0] = net.bias(last)[output];
    for j in 0..units {
        let w = net.weight_column(last, j)[output];
        for (c, r) in row.iter_mut().enumerate() {
            *r += w * block[c * units + j];
        }
    }
    if layers[last].activation != Activation::Identity {
        // Not produced by `MlpNet::new`, but `from_parts` allows it.
        activate(layers[last].activation, &tuples, 1, &mut row);
    }
    let out = assemble(&tuples, &row, 1, 0);
    Ok(out)
}

/// Expands unique components of unit `u` into a full jet.
fn assemble(tuples: &Tuples, block: &[f64], units: usize, u: usize) -> Jet {
    let n = tuples.n;
    let get = |c: usize| block[c * units + u];
    let grad = (0..n).map(|i| get(1 + i)).collect();
    let mut hess = Vec::new();
    if !tuples.pairs.is_empty() {
        hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = get(tuples.pair(i, j));
            }
        }
    }
    let mut third = Vec::new();
    if !tuples.triples.is_empty() {
        third = vec![0.0; n * n * n];
        let base = 1 + n + tuples.pairs.len();
        for (t, &(i, j, k)) in tuples.triples.iter().enumerate() {
            let v = get(base + t);
            for &(a, b, c) in &[(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                third[(a * n + b) * n + c] = v;
            }
        }
    }
    Jet { value: get(0), grad, hess, third }
}

pub fn input_derivatives(net: &MlpNet, x: &[f64], output_index: usize) -> Result<InputDerivatives> {
    let jet = input_jet(net, x, output_index, 2)?;
    Ok(InputDerivatives {
        value: jet.value,
        hessian: jet.hessian(),
        gradient: jet.grad,
    })
}

/// `g(x) = ‖∇V(x)‖² + ‖H_V(x)‖²_F`.
pub fn criterion_g(net: &MlpNet, x: &[f64], selector: ValueSelector) -> Result<f64> {
    criterion_value(net, x, selector, Criterion::Full)
}

pub fn criterion_value(net: &MlpNet, x: &[f64], selector: ValueSelector, kind: Criterion) -> Result<f64> {
    let out = selector.resolve(net, x)?;
    Ok(input_jet(net, x, out, 2)?.criterion(kind))
}

/// `∇_x g(x)`, the frequency-rule ascent direction.
pub fn grad_criterion(net: &MlpNet, x: &[f64], selector: ValueSelector) -> Result<Vec<f64>> {
    criterion_direction(net, x, selector, Criterion::Full)
}

pub fn criterion_direction(
    net: &MlpNet,
    x: &[f64],
    selector: ValueSelector,
    kind: Criterion,
) -> Result<Vec<f64>> {
    let out = selector.resolve(net, x)?;
    let order = if kind == Criterion::GradNorm { 2 } else { 3 };
    Ok(input_jet(net, x, out, order)?.criterion_gradient(kind))
}

/// `∇_x V(x)`, the value-rule ascent direction.
pub fn grad_value(net: &MlpNet, x: &[f64], selector: ValueSelector) -> Result<Vec<f64>> {
    let out = selector.resolve(net, x)?;
    Ok(input_jet(net, x, out, 1)?.grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn random_net(sizes: &[usize], seed: u64) -> MlpNet {
        let mut rng = stream(seed, Stream::Init);
        let mut net = MlpNet::new(sizes, Activation::Tanh, &mut rng).unwrap();
        // Bring biases and the output layer to O(1) so curvature is visible.
        for p in net.params_mut().iter_mut() {
            *p = rng.random_range(-1.0..1.0);
        }
        net
    }

    #[test]
    fn linear_net_has_constant_gradient_and_zero_curvature() {
        let mut net = MlpNet::zeros(&[3, 1], Activation::Tanh).unwrap();
        net.set_weight(0, 0, 0, 1.5);
        net.set_weight(0, 0, 1, -2.0);
        net.set_weight(0, 0, 2, 0.25);
        let d = input_derivatives(&net, &[0.1, 0.2, 0.3], 0).unwrap();
        assert_eq!(d.gradient, vec![1.5, -2.0, 0.25]);
        assert!(d.hessian.as_slice().iter().all(|&h| h == 0.0));
        let g = grad_criterion(&net, &[0.1, 0.2, 0.3], ValueSelector::Output(0)).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_output_has_zero_criterion() {
        let mut net = MlpNet::zeros(&[2, 4, 1], Activation::Tanh).unwrap();
        net.set_bias(1, 0, 3.0);
        assert_eq!(criterion_g(&net, &[0.5, -0.5], ValueSelector::MaxOutput).unwrap(), 0.0);
    }

    #[test]
    fn input_normalization_is_chained() {
        let net = random_net(&[2, 6, 1], 9);
        let scaled = net
            .clone()
            .with_input_normalization(vec![1.0, -2.0], vec![0.5, 4.0])
            .unwrap();
        let x = [1.3, -1.9];
        let u = [(x[0] - 1.0) * 0.5, (x[1] + 2.0) * 4.0];
        let a = input_jet(&net, &u, 0, 3).unwrap();
        let b = input_jet(&scaled, &x, 0, 3).unwrap();
        let s = [0.5, 4.0];
        assert!((a.value - b.value).abs() < 1e-14);
        for i in 0..2 {
            assert!((a.grad[i] * s[i] - b.grad[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((a.hess[i * 2 + j] * s[i] * s[j] - b.hess[i * 2 + j]).abs() < 1e-10);
                for k in 0..2 {
                    let lhs = a.third[(i * 2 + j) * 2 + k] * s[i] * s[j] * s[k];
                    assert!((lhs - b.third[(i * 2 + j) * 2 + k]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn third_derivatives_match_finite_differences_of_hessian() {
        let net = random_net(&[3, 7, 5, 2], 21);
        let x = [0.2, -0.4, 0.7];
        let jet = input_jet(&net, &x, 1, 3).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let hp = input_jet(&net, &xp, 1, 2).unwrap().hess;
            let hm = input_jet(&net, &xm, 1, 2).unwrap().hess;
            for ij in 0..9 {
                let fd = (hp[ij] - hm[ij]) / (2.0 * h);
                let an = jet.third[ij * 3 + k];
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{ij},{k}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn max_selector_matches_fixed_output_on_its_branch() {
        let net = random_net(&[2, 8, 3], 4);
        let x = [0.1, 0.3];
        let a = ValueSelector::MaxOutput.resolve(&net, &x).unwrap();
        let via_max = grad_criterion(&net, &x, ValueSelector::MaxOutput).unwrap();
        let fixed = grad_criterion(&net, &x, ValueSelector::Output(a)).unwrap();
        assert_eq!(via_max, fixed);
    }

    #[test]
    fn bad_output_index() {
        let net = random_net(&[2, 4, 2], 1);
        assert!(matches!(
            input_derivatives(&net, &[0.0, 0.0], 2),
            Err(Error::OutputIndex { index: 2, len: 2 })
        ));
    }
}
