//! Backpropagation, mini-batch SGD and finite-difference verification.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{forward_padded, pad_replicate, Activation, Architecture, ConvNet, FeatureMap};
use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::regions::Category;

/// How a fresh network is initialised before training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// All weights from N(0, sigma²).
    Gaussian { sigma: f64 },
    /// Gaussian weights plus a unit delta path through channel 0, so the
    /// untrained net starts out as the identity map.
    IdentityGaussian { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub sample_patch_size: usize,
    pub seed: u64,
    pub init: Init,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 8,
            sample_patch_size: 33,
            seed: 0,
            init: Init::IdentityGaussian { sigma: 1e-3 },
            architecture: Architecture::REFERENCE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.sample_patch_size == 0 {
            return Err(Error::invalid(
                "epochs, batch size and sample patch size must be positive",
            ));
        }
        Ok(())
    }
}

/// Parameter gradients laid out like the net: per layer `(weights, biases)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    fn zeros_like(net: &ConvNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            w.iter_mut().zip(ow).for_each(|(a, b)| *a += b);
            b.iter_mut().zip(ob).for_each(|(a, b)| *a += b);
        }
    }

    fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= s);
        }
    }

    /// Flattened view in the same order as [`param_mut`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

fn param_mut(net: &mut ConvNet, mut idx: usize) -> &mut f64 {
    for layer in &mut net.layers {
        if idx < layer.weights.len() {
            return &mut layer.weights[idx];
        }
        idx -= layer.weights.len();
        if idx < layer.biases.len() {
            return &mut layer.biases[idx];
        }
        idx -= layer.biases.len();
    }
    panic!("parameter index out of range");
}

struct Trace {
    /// Padded input of every layer.
    padded: Vec<Vec<f64>>,
    /// Activated output of every layer.
    outputs: Vec<FeatureMap>,
}

fn forward_trace(input: &ImagePlane, net: &ConvNet) -> Trace {
    let (w, h) = input.dims();
    let mut fm = FeatureMap::from_plane(input);
    let mut padded = Vec::with_capacity(3);
    let mut outputs = Vec::with_capacity(3);
    for layer in &net.layers {
        let p = pad_replicate(&fm, layer.radius());
        fm = forward_padded(&p, w, h, layer);
        padded.push(p);
        outputs.push(fm.clone());
    }
    Trace { padded, outputs }
}

/// Border excluded from the loss; falls back to zero for planes too small
/// to have an interior.
fn loss_margin(net: &ConvNet, w: usize, h: usize) -> usize {
    let m = net.architecture().margin();
    if w > 2 * m && h > 2 * m {
        m
    } else {
        0
    }
}

fn interior_mse(pred: &[f64], target: &[f64], w: usize, h: usize, m: usize) -> f64 {
    let mut sum = 0.0;
    for y in m..h - m {
        for x in m..w - m {
            let d = pred[y * w + x] - target[y * w + x];
            sum += d * d;
        }
    }
    sum / ((w - 2 * m) * (h - 2 * m)) as f64
}

/// Mean squared error of the net output over the interior (the border lost
/// to padding is excluded).
pub fn interior_loss(net: &ConvNet, input: &ImagePlane, target: &ImagePlane) -> Result<f64> {
    input.ensure_same_dims(target)?;
    let out = super::net_forward(input, net)?;
    let (w, h) = input.dims();
    let m = loss_margin(net, w, h);
    Ok(interior_mse(out.samples(), target.samples(), w, h, m))
}

/// Loss and exact gradients for one `(input, target)` sample.
pub fn net_gradients(net: &ConvNet, input: &ImagePlane, target: &ImagePlane) -> Result<(f64, Gradients)> {
    input.ensure_same_dims(target)?;
    if input.is_empty() {
        return Err(Error::invalid("empty training sample"));
    }
    let (w, h) = input.dims();
    let n = w * h;
    let trace = forward_trace(input, net);
    let pred = &trace.outputs[2].data;
    let m = loss_margin(net, w, h);
    let loss = interior_mse(pred, target.samples(), w, h, m);

    let count = ((w - 2 * m) * (h - 2 * m)) as f64;
    let mut grad_out = vec![0.0; n];
    for y in m..h - m {
        for x in m..w - m {
            let i = y * w + x;
            grad_out[i] = 2.0 * (pred[i] - target.samples()[i]) / count;
        }
    }

    let mut grads = Gradients::zeros_like(net);
    for li in (0..3).rev() {
        let layer = &net.layers[li];
        let k = layer.kernel_size;
        let r = layer.radius();
        let (pw, ph) = (w + k - 1, h + k - 1);
        let out = &trace.outputs[li];
        let padded = &trace.padded[li];

        if layer.activation == Activation::Relu {
            for (g, &o) in grad_out.iter_mut().zip(&out.data) {
                if o <= 0.0 {
                    *g = 0.0;
                }
            }
        }

        let (gw, gb) = &mut grads.layers[li];
        let need_input_grad = li > 0;
        let mut grad_padded = if need_input_grad {
            vec![0.0; layer.in_channels * pw * ph]
        } else {
            Vec::new()
        };
        for o in 0..layer.out_channels {
            let go = &grad_out[o * n..(o + 1) * n];
            gb[o] = go.iter().sum();
            for i in 0..layer.in_channels {
                let src = &padded[i * pw * ph..(i + 1) * pw * ph];
                for ky in 0..k {
                    for kx in 0..k {
                        let wi = layer.weight_index(o, i, ky, kx);
                        let mut acc = 0.0;
                        for y in 0..h {
                            let s = &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                            let g = &go[y * w..(y + 1) * w];
                            acc += g.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
                        }
                        gw[wi] = acc;
                        if need_input_grad {
                            let wgt = layer.weights[wi];
                            if wgt == 0.0 {
                                continue;
                            }
                            let dst = &mut grad_padded[i * pw * ph..(i + 1) * pw * ph];
                            for y in 0..h {
                                let d = &mut dst[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                                let g = &go[y * w..(y + 1) * w];
                                for (dv, gv) in d.iter_mut().zip(g) {
                                    *dv += wgt * gv;
                                }
                            }
                        }
                    }
                }
            }
        }

        if need_input_grad {
            // fold the padded gradient back onto the replicated source pixels
            let mut grad_in = vec![0.0; layer.in_channels * n];
            for i in 0..layer.in_channels {
                let src = &grad_padded[i * pw * ph..(i + 1) * pw * ph];
                let dst = &mut grad_in[i * n..(i + 1) * n];
                for py in 0..ph {
                    let y = (py as isize - r as isize).clamp(0, h as isize - 1) as usize;
                    for px in 0..pw {
                        let x = (px as isize - r as isize).clamp(0, w as isize - 1) as usize;
                        dst[y * w + x] += src[py * pw + px];
                    }
                }
            }
            grad_out = grad_in;
        }
    }
    Ok((loss, grads))
}

/// A trained net and the mean training loss of each epoch.
#[derive(Clone, Debug)]
pub struct Trained {
    pub net: ConvNet,
    pub loss_trace: Vec<f64>,
}

/// Initialise a net for `category` according to `cfg.init` and train it.
pub fn train(
    category: Category,
    pairs: &[(ImagePlane, ImagePlane)],
    cfg: &TrainConfig,
) -> Result<Trained> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let net = match cfg.init {
        Init::Gaussian { sigma } => ConvNet::gaussian(category, cfg.architecture, sigma, &mut rng),
        Init::IdentityGaussian { sigma } => {
            let mut net = ConvNet::gaussian(category, cfg.architecture, sigma, &mut rng);
            for layer in &mut net.layers {
                let c = layer.radius();
                let idx = layer.weight_index(0, 0, c, c);
                layer.weights[idx] = 1.0;
            }
            net
        }
    };
    train_from(net, pairs, cfg)
}

/// Plain mini-batch SGD on the interior MSE of random sub-patches.
///
/// Each epoch visits every pair once in a shuffled order; each visit draws
/// one sub-patch of `sample_patch_size` (clipped to the pair's size).
/// Per-sample gradients may be computed in parallel but are summed in batch
/// order, so the result depends only on the seed.
pub fn train_from(
    mut net: ConvNet,
    pairs: &[(ImagePlane, ImagePlane)],
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    net.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        if a.dims() != b.dims() || a.is_empty() {
            return Err(Error::invalid(format!("training pair {i} has mismatched dims")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let samples: Vec<(usize, usize, usize, usize, usize)> = batch
                .iter()
                .map(|&pi| {
                    let (w, h) = pairs[pi].0.dims();
                    let sw = cfg.sample_patch_size.min(w);
                    let sh = cfg.sample_patch_size.min(h);
                    let x0 = rng.random_range(0..=w - sw);
                    let y0 = rng.random_range(0..=h - sh);
                    (pi, x0, y0, sw, sh)
                })
                .collect();
            let results: Vec<Result<(f64, Gradients)>> = samples
                .par_iter()
                .map(|&(pi, x0, y0, sw, sh)| {
                    let input = pairs[pi].0.sub_image(x0, y0, sw, sh)?;
                    let target = pairs[pi].1.sub_image(x0, y0, sw, sh)?;
                    net_gradients(&net, &input, &target)
                })
                .collect();
            let mut total = Gradients::zeros_like(&net);
            for r in results {
                let (loss, g) = r?;
                epoch_loss += loss;
                total.add_assign(&g);
            }
            total.scale(1.0 / batch.len() as f64);
            for (layer, (gw, gb)) in net.layers.iter_mut().zip(&total.layers) {
                for (w, g) in layer.weights.iter_mut().zip(gw) {
                    *w -= cfg.learning_rate * g;
                }
                for (b, g) in layer.biases.iter_mut().zip(gb) {
                    *b -= cfg.learning_rate * g;
                }
            }
        }
        loss_trace.push(epoch_loss / pairs.len() as f64);
    }
    Ok(Trained { net, loss_trace })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Flat index of the worst parameter (layer weights then biases, layer
    /// by layer).
    pub worst_param: usize,
    pub params_checked: usize,
}

/// Compare backprop gradients of every parameter against central finite
/// differences with step `h`. Relative error is
/// `|g - fd| / max(|g|, |fd|, 1e-8)`.
pub fn gradient_check(
    net: &ConvNet,
    input: &ImagePlane,
    target: &ImagePlane,
    h: f64,
) -> Result<GradientCheck> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (_, grads) = net_gradients(net, input, target)?;
    let analytic = grads.flat();
    let mut probe = net.clone();
    let mut worst = (0.0, 0);
    for (idx, &g) in analytic.iter().enumerate() {
        let orig = *param_mut(&mut probe, idx);
        *param_mut(&mut probe, idx) = orig + h;
        let up = interior_loss(&probe, input, target)?;
        *param_mut(&mut probe, idx) = orig - h;
        let down = interior_loss(&probe, input, target)?;
        *param_mut(&mut probe, idx) = orig;
        let fd = (up - down) / (2.0 * h);
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
        if rel > worst.0 {
            worst = (rel, idx);
        }
    }
    Ok(GradientCheck {
        max_relative_error: worst.0,
        worst_param: worst.1,
        params_checked: analytic.len(),
    })
}
