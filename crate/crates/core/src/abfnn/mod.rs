//! Adaptive basis function network.
//!
//! Each non-input node `j` computes `O_j = (a_j + tanh I_j) / (1 + a_j)` where
//! `I_j = b_j + Σ_i w_ji O_i`. The shape parameter `a_j` starts at 1 (giving
//! the logistic sigmoid of `2 I_j`) and is trained by gradient descent along
//! with the weights and biases.
//!
//! Derivatives used by [`Network::backward`]:
//!
//! ```text
//! ∂O/∂I = [(1 - a) + (1 + a) O] (1 - O)
//! ∂O/∂a = (1 - O) / (1 + a)
//! ```
//!
//! Hidden-layer `a` gradients follow the ordinary chain rule through these two
//! expressions and are checked against central finite differences in tests.

pub mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Minimum allowed `|1 + a|`.
pub const EPSILON_A: f64 = 1e-3;

/// Half-width of the uniform weight/bias initialization interval.
pub const INIT_RANGE: f64 = 0.5;

/// Variable sigmoid `(a + tanh x) / (1 + a)`.
#[inline]
pub fn activate(x: f64, a: f64) -> f64 {
    (a + x.tanh()) / (1.0 + a)
}

/// Slope of [`activate`] with respect to its input, expressed through its output.
#[inline]
pub fn activate_deriv(o: f64, a: f64) -> f64 {
    ((1.0 - a) + (1.0 + a) * o) * (1.0 - o)
}

/// `∂O/∂a` expressed through the node output.
#[inline]
pub fn basis_param_deriv(o: f64, a: f64) -> f64 {
    (1.0 - o) / (1.0 + a)
}

/// Half the sum of squared differences.
pub fn loss(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: output.len(),
            got: target.len(),
        });
    }
    Ok(output
        .iter()
        .zip(target)
        .map(|(o, t)| (o - t) * (o - t))
        .sum::<f64>()
        / 2.0)
}

/// Basis-function control parameter of one node, kept away from `a = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeParam(f64);

impl NodeParam {
    /// Clamps so that `|1 + a| >= EPSILON_A`, keeping the sign of `1 + a`
    /// (zero counts as positive).
    pub fn new(a: f64) -> Self {
        let shifted = 1.0 + a;
        if shifted.abs() >= EPSILON_A {
            return Self(a);
        }
        let mut a = if shifted >= 0.0 {
            EPSILON_A - 1.0
        } else {
            -EPSILON_A - 1.0
        };
        // rounding in `EPSILON_A - 1.0` can land one ulp inside the band
        while (1.0 + a).abs() < EPSILON_A {
            a = if shifted >= 0.0 { a.next_up() } else { a.next_down() };
        }
        Self(a)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_valid(self) -> bool {
        self.0.is_finite() && (1.0 + self.0).abs() >= EPSILON_A
    }
}

impl Default for NodeParam {
    fn default() -> Self {
        Self(1.0)
    }
}

/// One fully connected layer. `weights[j][i]` connects input `i` to node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: Vec<NodeParam>,
}

impl Layer {
    pub fn n_in(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn n_out(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self) -> Result<()> {
        let n_in = self.n_in();
        if self.n_out() == 0 || n_in == 0 {
            return Err(Error::InvalidTopology(vec![n_in, self.n_out()]));
        }
        if let Some(row) = self.weights.iter().find(|r| r.len() != n_in) {
            return Err(Error::DimensionMismatch {
                expected: n_in,
                got: row.len(),
            });
        }
        for len in [self.biases.len(), self.params.len()] {
            if len != self.n_out() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_out(),
                    got: len,
                });
            }
        }
        let finite = self.weights.iter().flatten().chain(&self.biases).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("layer weights"));
        }
        if !self.params.iter().all(|p| p.is_valid()) {
            return Err(Error::InvalidConfig(format!(
                "basis parameters must satisfy |1 + a| >= {EPSILON_A}"
            )));
        }
        Ok(())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Net input `I_j` of every node, per layer.
    pub pre_activations: Vec<Vec<f64>>,
    /// Output `O_j` of every node, per layer.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map_or(&[], Vec::as_slice)
    }

    fn layer_input(&self, layer: usize) -> &[f64] {
        if layer == 0 {
            &self.input
        } else {
            &self.activations[layer - 1]
        }
    }
}

/// Loss gradients with the same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Vec<Vec<Vec<f64>>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_params: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            d_weights: net
                .layers
                .iter()
                .map(|l| vec![vec![0.0; l.n_in()]; l.n_out()])
                .collect(),
            d_biases: net.layers.iter().map(|l| vec![0.0; l.n_out()]).collect(),
            d_params: net.layers.iter().map(|l| vec![0.0; l.n_out()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.d_weights
            .iter_mut()
            .flatten()
            .flatten()
            .chain(self.d_biases.iter_mut().flatten())
            .chain(self.d_params.iter_mut().flatten())
            .for_each(|g| *g *= factor);
    }

    pub fn fill_zero(&mut self) {
        self.scale(0.0);
    }

    fn matches(&self, net: &Network) -> bool {
        self.d_weights.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(l, layer)| {
                self.d_weights[l].len() == layer.n_out()
                    && self.d_weights[l].iter().all(|r| r.len() == layer.n_in())
                    && self.d_biases[l].len() == layer.n_out()
                    && self.d_params[l].len() == layer.n_out()
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// Builds a network from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidTopology(vec![]));
        }
        for layer in &layers {
            layer.validate()?;
        }
        for pair in layers.windows(2) {
            if pair[1].n_in() != pair[0].n_out() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].n_out(),
                    got: pair[1].n_in(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Random network: weights and biases uniform in `[-0.5, 0.5]`, every `a = 1`.
    ///
    /// Values are drawn layer by layer, node by node: the node's incoming
    /// weights first, then its bias.
    pub fn init(topology: &[usize], seed: u64) -> Result<Self> {
        if topology.len() < 2 || topology.contains(&0) {
            return Err(Error::InvalidTopology(topology.to_vec()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = topology
            .windows(2)
            .map(|pair| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let mut weights = Vec::with_capacity(n_out);
                let mut biases = Vec::with_capacity(n_out);
                for _ in 0..n_out {
                    weights.push(
                        (0..n_in)
                            .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
                            .collect(),
                    );
                    biases.push(rng.random_range(-INIT_RANGE..=INIT_RANGE));
                }
                Layer {
                    weights,
                    biases,
                    params: vec![NodeParam::default(); n_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for callers that edit weights directly; shapes must be
    /// preserved, and basis parameters are only settable through [`NodeParam`].
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn topology(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].n_in())
            .chain(self.layers.iter().map(Layer::n_out))
            .collect()
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, Layer::n_out)
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: input.len(),
            });
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = activations.last().map_or(input, Vec::as_slice);
            let pre: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, b)| b + row.iter().zip(x).map(|(w, o)| w * o).sum::<f64>())
                .collect();
            let out = pre
                .iter()
                .zip(&layer.params)
                .map(|(&i, p)| activate(i, p.get()))
                .collect();
            pre_activations.push(pre);
            activations.push(out);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            pre_activations,
            activations,
        })
    }

    /// Output vector only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward(input)?;
        Ok(trace.activations.pop().unwrap_or_default())
    }

    pub fn backward(&self, trace: &ForwardTrace, target: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(trace, target, &mut grads)?;
        Ok(grads)
    }

    /// Adds the gradients of the pattern behind `trace` into `grads`.
    ///
    /// Output nodes get `∂E/∂a_k = (O_k - O*_k)(1 - O_k)/(1 + a_k)`. For every
    /// node `∂E/∂I_j = ∂E/∂O_j · ∂O_j/∂I_j` drives the weight and bias terms,
    /// and `∂E/∂O` is propagated downward through the incoming weights.
    pub fn accumulate_gradients(
        &self,
        trace: &ForwardTrace,
        target: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        if target.len() != self.n_outputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_outputs(),
                got: target.len(),
            });
        }
        if trace.activations.len() != self.layers.len()
            || trace.input.len() != self.n_inputs()
            || trace
                .activations
                .iter()
                .zip(&self.layers)
                .any(|(o, l)| o.len() != l.n_out())
        {
            return Err(Error::InvalidConfig(
                "forward trace does not belong to this network".into(),
            ));
        }
        if !grads.matches(self) {
            return Err(Error::InvalidConfig(
                "gradient buffer does not match network shape".into(),
            ));
        }

        // ∂E/∂O for the current layer
        let mut d_out: Vec<f64> = trace
            .output()
            .iter()
            .zip(target)
            .map(|(o, t)| o - t)
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let outputs = &trace.activations[l];
            let x = trace.layer_input(l);
            let mut d_below = vec![0.0; layer.n_in()];
            for j in 0..layer.n_out() {
                let o = outputs[j];
                let a = layer.params[j].get();
                let err = d_out[j];
                grads.d_params[l][j] += err * (1.0 - o) / (1.0 + a);
                let d_pre = err * activate_deriv(o, a);
                grads.d_biases[l][j] += d_pre;
                for (i, (&xi, &w)) in x.iter().zip(&layer.weights[j]).enumerate() {
                    grads.d_weights[l][j][i] += d_pre * xi;
                    d_below[i] += w * d_pre;
                }
            }
            if !d_below.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("backpropagated error"));
            }
            d_out = d_below;
        }
        Ok(())
    }

    /// Steepest-descent step of size `beta`, returning the updated network.
    pub fn apply_updates(&self, grads: &Gradients, beta: f64) -> Result<Network> {
        let mut next = self.clone();
        next.update_in_place(grads, beta)?;
        Ok(next)
    }

    /// In-place form of [`Network::apply_updates`]; `a` is re-clamped afterwards.
    pub fn update_in_place(&mut self, grads: &Gradients, beta: f64) -> Result<()> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning parameter must be positive, got {beta}"
            )));
        }
        if !grads.matches(self) {
            return Err(Error::InvalidConfig(
                "gradients do not match network shape".into(),
            ));
        }
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for j in 0..layer.n_out() {
                for (w, g) in layer.weights[j].iter_mut().zip(&grads.d_weights[l][j]) {
                    *w -= beta * g;
                }
                layer.biases[j] -= beta * grads.d_biases[l][j];
                let a = layer.params[j].get() - beta * grads.d_params[l][j];
                layer.params[j] = NodeParam::new(a);
            }
        }
        Ok(())
    }

    /// Sets a node's basis parameter, clamped.
    pub fn set_param(&mut self, layer: usize, node: usize, a: f64) {
        self.layers[layer].params[node] = NodeParam::new(a);
    }

    pub fn zero_biases(&mut self) {
        for layer in &mut self.layers {
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }
}
