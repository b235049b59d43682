use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, MlpAutoencoder, Params, ScoreVector};
use crate::data::Window;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            lr: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: MlpAutoencoder<T>,
    /// Scores of every training window under the final model.
    pub window_scores: Vec<ScoreVector<T>>,
    /// Mean loss seen during each epoch.
    pub epoch_losses: Vec<T>,
}

impl<T: Scalar> TrainOutcome<T> {
    /// All per-timestep training scores, window by window.
    pub fn flat_scores(&self) -> Vec<T> {
        self.window_scores
            .iter()
            .flat_map(|s| s.iter().copied())
            .collect()
    }
}

struct Adam<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    step: i32,
    m: Params<T>,
    v: Params<T>,
}

impl<T: Scalar> Adam<T> {
    fn new(like: &Params<T>, lr: f64) -> Self {
        let mut zero = like.clone();
        zero.iter_mut().for_each(|p| *p = T::zero());
        Self {
            lr: T::lit(lr),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            m: zero.clone(),
            v: zero,
        }
    }

    fn apply(&mut self, params: &mut Params<T>, grads: &Gradients<T>) {
        self.step += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.step);
        let c2 = one - self.beta2.powi(self.step);
        let moments = self.m.iter_mut().zip(self.v.iter_mut());
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads.iter()).zip(moments) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Fits `model` to reconstruct `windows` (all rows treated as normal) with
/// Adam on shuffled mini-batches. Deterministic in `cfg.seed`.
pub fn train_offline<T: Scalar>(
    model: MlpAutoencoder<T>,
    windows: &[Window<T>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    if windows.is_empty() {
        return Err(Error::invalid("training needs at least one window"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if cfg.lr.is_nan() || cfg.lr <= 0.0 {
        return Err(Error::invalid("offline learning rate must be positive"));
    }
    let mut model = model;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.params(), cfg.lr);
    let unmasked = vec![false; model.dims().window];
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = T::zero();
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut acc = Params::zeros(model.dims());
            let mut batch_loss = T::zero();
            for &k in batch {
                let (loss, g) = model.gradients(&windows[k], &unmasked)?;
                batch_loss += loss;
                acc.add_assign(&g);
            }
            if !batch_loss.is_finite() || !acc.all_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {b}"
                )));
            }
            acc.scale(T::one() / T::lit(batch.len() as f64));
            adam.apply(model.params_mut(), &acc);
            epoch_total += batch_loss;
        }
        epoch_losses.push(epoch_total / T::lit(windows.len() as f64));
    }

    let window_scores = windows
        .iter()
        .map(|w| model.score_window(w))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainOutcome {
        model,
        window_scores,
        epoch_losses,
    })
}
