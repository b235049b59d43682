//! Fully connected autoencoder over flattened windows.
//!
//! Architecture is `[w*F -> h -> d -> h -> w*F]` with ReLU after every layer
//! but the last. Gradients are computed by hand-written reverse-mode
//! differentiation; the ReLU subgradient at zero is taken to be zero.

mod train;

pub use train::{train_offline, TrainConfig, TrainOutcome};

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{Decoder, Encoder, Kind};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub window: usize,
    pub features: usize,
    pub hidden: usize,
    pub latent: usize,
}

impl ModelDims {
    pub fn new(window: usize, features: usize, hidden: usize, latent: usize) -> Result<Self> {
        if window == 0 || features == 0 || hidden == 0 || latent == 0 {
            return Err(Error::invalid("all model dimensions must be at least 1"));
        }
        Ok(Self {
            window,
            features,
            hidden,
            latent,
        })
    }

    pub fn input_len(&self) -> usize {
        self.window * self.features
    }

    /// `(fan_in, fan_out)` of each layer, input to output.
    pub fn layer_shapes(&self) -> [(usize, usize); 4] {
        let io = self.input_len();
        [
            (io, self.hidden),
            (self.hidden, self.latent),
            (self.latent, self.hidden),
            (self.hidden, io),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// Dense affine layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    fn affine(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
            .collect()
    }
}

/// Parameter-shaped collection of layers. Used both for model parameters
/// and for their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub layers: Vec<Layer<T>>,
}

pub type Gradients<T> = Params<T>;

impl<T: Scalar> Params<T> {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            layers: dims
                .layer_shapes()
                .iter()
                .map(|&(i, o)| Layer::zeros(i, o))
                .collect(),
        }
    }

    /// Every parameter in canonical order: per layer, weights then bias.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn scale(&mut self, k: T) {
        self.iter_mut().for_each(|v| *v *= k);
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.iter_mut().zip(other.iter()) {
            *a += b;
        }
    }
}

/// Per-timestep anomaly scores of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector<T>(pub Vec<T>);

impl<T> Deref for ScoreVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpAutoencoder<T> {
    dims: ModelDims,
    seed: u64,
    params: Params<T>,
}

/// Activations recorded during a forward pass: `inputs[k]` feeds layer `k`,
/// `pre[k]` is its pre-activation.
struct Trace<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

impl<T: Scalar> MlpAutoencoder<T> {
    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn new(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::zeros(&dims);
        for layer in &mut params.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                let u: f64 = rng.random();
                *w = T::lit((2.0 * u - 1.0) * limit);
            }
        }
        Self { dims, seed, params }
    }

    pub fn from_params(dims: ModelDims, seed: u64, params: Params<T>) -> Result<Self> {
        let expected = Params::<T>::zeros(&dims);
        let shapes_match = expected.layers.len() == params.layers.len()
            && expected.layers.iter().zip(&params.layers).all(|(a, b)| {
                a.inputs == b.inputs
                    && a.outputs == b.outputs
                    && a.weights.len() == b.weights.len()
                    && a.bias.len() == b.bias.len()
            });
        if !shapes_match {
            return Err(Error::invalid(
                "parameter shapes do not match model dimensions",
            ));
        }
        Ok(Self { dims, seed, params })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    fn check_window(&self, x: &Window<T>) -> Result<()> {
        if x.len() != self.dims.window {
            return Err(Error::shape("window rows", self.dims.window, x.len()));
        }
        if x.features() != self.dims.features {
            return Err(Error::shape(
                "window features",
                self.dims.features,
                x.features(),
            ));
        }
        Ok(())
    }

    fn trace(&self, x: &[T]) -> (Vec<T>, Trace<T>) {
        let last = self.params.layers.len() - 1;
        let mut trace = Trace {
            inputs: Vec::with_capacity(last + 1),
            pre: Vec::with_capacity(last + 1),
        };
        let mut a = x.to_vec();
        for (k, layer) in self.params.layers.iter().enumerate() {
            let z = layer.affine(&a);
            let next = if k == last {
                z.clone()
            } else {
                z.iter().map(|&v| relu(v)).collect()
            };
            trace.inputs.push(a);
            trace.pre.push(z);
            a = next;
        }
        (a, trace)
    }

    /// Reconstruction of `x`, same shape and end index.
    pub fn forward(&self, x: &Window<T>) -> Result<Window<T>> {
        self.check_window(x)?;
        let (out, _) = self.trace(x.data.as_slice());
        Ok(Window::new(
            Matrix::from_vec(self.dims.window, self.dims.features, out)?,
            x.end_index,
        ))
    }

    /// Reconstructs `x` and scores each row.
    pub fn score_window(&self, x: &Window<T>) -> Result<ScoreVector<T>> {
        let recon = self.forward(x)?;
        score(x, &recon)
    }

    /// Masked reconstruction loss of `x` and its exact gradient.
    ///
    /// `mask[i] == true` excludes row `i` (predicted anomalous). With every
    /// row masked the loss is zero and the gradient is identically zero.
    pub fn gradients(&self, x: &Window<T>, mask: &[bool]) -> Result<(T, Gradients<T>)> {
        self.gradients_against(x, x, mask)
    }

    /// Like [`gradients`](Self::gradients) but with a reconstruction target
    /// distinct from the network input.
    pub fn gradients_against(
        &self,
        input: &Window<T>,
        target: &Window<T>,
        mask: &[bool],
    ) -> Result<(T, Gradients<T>)> {
        self.check_window(input)?;
        self.check_window(target)?;
        if mask.len() != self.dims.window {
            return Err(Error::shape("mask length", self.dims.window, mask.len()));
        }
        let mut grads = Params::zeros(&self.dims);
        let active = mask.iter().filter(|&&m| !m).count();
        if active == 0 {
            return Ok((T::zero(), grads));
        }

        let (out, trace) = self.trace(input.data.as_slice());
        let f = self.dims.features;
        let norm = T::lit((active * f) as f64);
        let two = T::lit(2.0);
        let mut loss = T::zero();
        let mut delta: Vec<T> = vec![T::zero(); out.len()];
        for (i, &masked) in mask.iter().enumerate() {
            if masked {
                continue;
            }
            for j in 0..f {
                let k = i * f + j;
                let r = out[k] - target.data.get(i, j);
                loss += r * r;
                delta[k] = two * r / norm;
            }
        }
        loss /= norm;

        for k in (0..self.params.layers.len()).rev() {
            let layer = &self.params.layers[k];
            let a_prev = &trace.inputs[k];
            let g = &mut grads.layers[k];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] = d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, &a) in row.iter_mut().zip(a_prev) {
                    *gw = d * a;
                }
            }
            if k == 0 {
                break;
            }
            let below = &trace.pre[k - 1];
            let mut next = vec![T::zero(); layer.inputs];
            for (i, n) in next.iter_mut().enumerate() {
                if below[i] > T::zero() {
                    *n = delta.iter().enumerate().fold(T::zero(), |acc, (o, &d)| {
                        acc + layer.weights[o * layer.inputs + i] * d
                    });
                }
            }
            delta = next;
        }
        Ok((loss, grads))
    }

    /// Plain gradient step `theta <- theta - eta * grad`.
    ///
    /// Leaves the model untouched when `eta == 0` or when `grads` contains a
    /// non-finite entry (the latter is reported as an error).
    pub fn sgd_step(&mut self, grads: &Gradients<T>, eta: T) -> Result<()> {
        if !eta.is_finite() || eta < T::zero() {
            return Err(Error::invalid(format!(
                "learning rate must be finite and >= 0, got {eta}"
            )));
        }
        if grads.len() != self.params.len() {
            return Err(Error::shape(
                "gradient length",
                self.params.len(),
                grads.len(),
            ));
        }
        if !grads.all_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        if eta == T::zero() {
            return Ok(());
        }
        for (p, &g) in self.params.iter_mut().zip(grads.iter()) {
            *p -= eta * g;
        }
        Ok(())
    }

    /// Serializes dims, seed and every parameter bit-exactly.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new::<T>(Kind::Model);
        self.encode(&mut enc);
        enc.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::open::<T>(bytes, Kind::Model)?;
        let model = Self::decode(&mut dec)?;
        dec.finish()?;
        Ok(model)
    }

    pub(crate) fn encode(&self, enc: &mut Encoder) {
        let d = &self.dims;
        for v in [d.window, d.features, d.hidden, d.latent] {
            enc.usize(v);
        }
        enc.u64(self.seed);
        for layer in &self.params.layers {
            enc.scalars(&layer.weights);
            enc.scalars(&layer.bias);
        }
    }

    pub(crate) fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let dims = ModelDims::new(dec.usize()?, dec.usize()?, dec.usize()?, dec.usize()?)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
        let seed = dec.u64()?;
        let mut params = Params::zeros(&dims);
        for layer in &mut params.layers {
            layer.weights = dec.scalars(layer.weights.len())?;
            layer.bias = dec.scalars(layer.bias.len())?;
        }
        Ok(Self { dims, seed, params })
    }
}

/// Mean over features of the squared reconstruction error, per row.
pub fn score<T: Scalar>(x: &Window<T>, recon: &Window<T>) -> Result<ScoreVector<T>> {
    if x.data.rows() != recon.data.rows() || x.data.cols() != recon.data.cols() {
        return Err(Error::shape(
            "reconstruction size",
            x.data.rows() * x.data.cols(),
            recon.data.rows() * recon.data.cols(),
        ));
    }
    let f = T::lit(x.features() as f64);
    Ok(ScoreVector(
        x.data
            .row_iter()
            .zip(recon.data.row_iter())
            .map(|(a, b)| {
                let sq: T = a.iter().zip(b).map(|(&u, &v)| (v - u) * (v - u)).sum();
                sq / f
            })
            .collect(),
    ))
}

/// Reconstruction loss over unmasked rows, normalized by
/// `(unmasked rows) * F`. Also returns each row's unnormalized squared error
/// (zero for masked rows).
pub fn masked_loss<T: Scalar>(
    x: &Window<T>,
    recon: &Window<T>,
    mask: &[bool],
) -> Result<(T, Vec<T>)> {
    if x.data.rows() != recon.data.rows() || x.data.cols() != recon.data.cols() {
        return Err(Error::shape("reconstruction rows", x.len(), recon.len()));
    }
    if mask.len() != x.len() {
        return Err(Error::shape("mask length", x.len(), mask.len()));
    }
    let rows: Vec<T> = x
        .data
        .row_iter()
        .zip(recon.data.row_iter())
        .zip(mask)
        .map(|((a, b), &m)| {
            if m {
                T::zero()
            } else {
                a.iter().zip(b).map(|(&u, &v)| (v - u) * (v - u)).sum()
            }
        })
        .collect();
    let active = mask.iter().filter(|&&m| !m).count();
    if active == 0 {
        return Ok((T::zero(), rows));
    }
    let total: T = rows.iter().copied().sum();
    Ok((total / T::lit((active * x.features()) as f64), rows))
}
