//! Three-layer convolutional networks mapping a bicubic-upsampled component
//! crop to its deep facial component.
//!
//! Layers use cross-correlation with replicate padding, so every layer keeps
//! the spatial size of its input. The reference layout is 1→64→32→1 with
//! kernel sizes 9, 1 and 5; smaller layouts are allowed for testing.

mod io;
mod train;

pub use io::{load_net, load_net_for, read_net, save_net, write_net};
pub use train::{
    gradient_check, interior_loss, net_gradients, train, train_from, GradientCheck, Gradients,
    Init, TrainConfig, Trained,
};
pub use crate::metrics::mse as mse_loss;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::regions::Category;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

impl Activation {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Activation::Relu => 1,
            Activation::None => 0,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Activation::None),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Channel-major stack of equally sized planes.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, width: usize, height: usize) -> Self {
        Self {
            channels,
            width,
            height,
            data: vec![0.0; channels * width * height],
        }
    }

    pub fn from_plane(plane: &ImagePlane) -> Self {
        Self {
            channels: 1,
            width: plane.width(),
            height: plane.height(),
            data: plane.samples().to_vec(),
        }
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn into_plane(self) -> Result<ImagePlane> {
        if self.channels != 1 {
            return Err(Error::invalid(format!(
                "expected a single channel, got {}",
                self.channels
            )));
        }
        ImagePlane::new(self.width, self.height, self.data)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Indexed `[out][in][ky][kx]`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl ConvLayer {
    pub fn zeros(kernel_size: usize, in_channels: usize, out_channels: usize, activation: Activation) -> Self {
        Self {
            kernel_size,
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * in_channels * kernel_size * kernel_size],
            biases: vec![0.0; out_channels],
            activation,
        }
    }

    #[inline]
    pub fn weight_index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        let k = self.kernel_size;
        ((o * self.in_channels + i) * k + ky) * k + kx
    }

    pub fn radius(&self) -> usize {
        self.kernel_size / 2
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.kernel_size;
        if k == 0 || k.is_multiple_of(2) {
            return Err(Error::invalid(format!("kernel size {k} must be odd")));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::invalid("layer needs at least one channel"));
        }
        if self.weights.len() != self.out_channels * self.in_channels * k * k
            || self.biases.len() != self.out_channels
        {
            return Err(Error::invalid("layer parameter count does not match its shape"));
        }
        if !self.weights.iter().chain(&self.biases).all(|v| v.is_finite()) {
            return Err(Error::invalid("layer has non-finite parameters"));
        }
        Ok(())
    }
}

/// Kernel sizes and hidden widths of a three-layer net.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub kernels: [usize; 3],
    pub hidden: [usize; 2],
}

impl Architecture {
    /// 9-1-5 kernels with 64 and 32 hidden channels.
    pub const REFERENCE: Architecture = Architecture {
        kernels: [9, 1, 5],
        hidden: [64, 32],
    };

    /// Pixels lost to padding effects on each side; the training loss skips
    /// this border.
    pub fn margin(&self) -> usize {
        self.kernels.iter().map(|k| (k - 1) / 2).sum()
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::REFERENCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvNet {
    pub category: Category,
    pub layers: [ConvLayer; 3],
}

impl ConvNet {
    pub fn new(category: Category, layers: [ConvLayer; 3]) -> Result<Self> {
        let net = Self { category, layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        for l in &self.layers {
            l.validate()?;
        }
        let [a, b, c] = &self.layers;
        if a.in_channels != 1 || c.out_channels != 1 {
            return Err(Error::invalid("network must map one channel to one channel"));
        }
        if a.out_channels != b.in_channels || b.out_channels != c.in_channels {
            return Err(Error::invalid("layer channel chain is inconsistent"));
        }
        let acts = [a.activation, b.activation, c.activation];
        if acts != [Activation::Relu, Activation::Relu, Activation::None] {
            return Err(Error::invalid("activations must be relu, relu, none"));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        let [a, b, c] = &self.layers;
        Architecture {
            kernels: [a.kernel_size, b.kernel_size, c.kernel_size],
            hidden: [a.out_channels, b.out_channels],
        }
    }

    pub fn zeros(category: Category, arch: Architecture) -> Self {
        let [k1, k2, k3] = arch.kernels;
        let [h1, h2] = arch.hidden;
        Self {
            category,
            layers: [
                ConvLayer::zeros(k1, 1, h1, Activation::Relu),
                ConvLayer::zeros(k2, h1, h2, Activation::Relu),
                ConvLayer::zeros(k3, h2, 1, Activation::None),
            ],
        }
    }

    /// A net whose output equals its (non-negative) input: a centred delta
    /// routed through channel 0 of every layer.
    pub fn identity(category: Category, arch: Architecture) -> Self {
        let mut net = Self::zeros(category, arch);
        for layer in &mut net.layers {
            let c = layer.radius();
            let idx = layer.weight_index(0, 0, c, c);
            layer.weights[idx] = 1.0;
        }
        net
    }

    /// Weights drawn from N(0, sigma²), biases zero.
    pub fn gaussian(category: Category, arch: Architecture, sigma: f64, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(category, arch);
        let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
        for layer in &mut net.layers {
            for w in &mut layer.weights {
                *w = normal.sample(rng);
            }
        }
        net
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::param_count).sum()
    }
}

/// Copy each channel into a buffer padded by `r` on every side with
/// replicated borders.
pub(crate) fn pad_replicate(input: &FeatureMap, r: usize) -> Vec<f64> {
    let (w, h) = (input.width, input.height);
    if r == 0 {
        return input.data.clone();
    }
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let mut out = Vec::with_capacity(input.channels * pw * ph);
    for c in 0..input.channels {
        let src = input.channel(c);
        for py in 0..ph {
            let y = (py as isize - r as isize).clamp(0, h as isize - 1) as usize;
            let row = &src[y * w..(y + 1) * w];
            out.extend(std::iter::repeat_n(row[0], r));
            out.extend_from_slice(row);
            out.extend(std::iter::repeat_n(row[w - 1], r));
        }
    }
    out
}

/// Convolve an already padded input. Returns the activated output.
pub(crate) fn forward_padded(padded: &[f64], w: usize, h: usize, layer: &ConvLayer) -> FeatureMap {
    let k = layer.kernel_size;
    let pw = w + k - 1;
    let ph = h + k - 1;
    let n = w * h;
    let mut out = FeatureMap::zeros(layer.out_channels, w, h);
    for (o, dst) in out.data.chunks_exact_mut(n).enumerate() {
        dst.fill(layer.biases[o]);
        for i in 0..layer.in_channels {
            let src = &padded[i * pw * ph..(i + 1) * pw * ph];
            for ky in 0..k {
                for kx in 0..k {
                    let wgt = layer.weights[layer.weight_index(o, i, ky, kx)];
                    if wgt == 0.0 {
                        continue;
                    }
                    for y in 0..h {
                        let s = &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                        let d = &mut dst[y * w..(y + 1) * w];
                        for (dv, sv) in d.iter_mut().zip(s) {
                            *dv += wgt * sv;
                        }
                    }
                }
            }
        }
        if layer.activation == Activation::Relu {
            for v in dst.iter_mut() {
                *v = v.max(0.0);
            }
        }
    }
    out
}

/// One convolution layer: replicate padding, cross-correlation, bias and
/// activation. Output has the input's spatial size.
pub fn conv_forward(input: &FeatureMap, layer: &ConvLayer) -> Result<FeatureMap> {
    if input.channels != layer.in_channels {
        return Err(Error::invalid(format!(
            "layer expects {} channels, input has {}",
            layer.in_channels, input.channels
        )));
    }
    layer.validate()?;
    if input.width == 0 || input.height == 0 {
        return Err(Error::invalid("empty feature map"));
    }
    let padded = pad_replicate(input, layer.radius());
    Ok(forward_padded(&padded, input.width, input.height, layer))
}

/// Run the whole net. The output is not clamped.
pub fn net_forward(input: &ImagePlane, net: &ConvNet) -> Result<ImagePlane> {
    let mut fm = FeatureMap::from_plane(input);
    for layer in &net.layers {
        fm = conv_forward(&fm, layer)?;
    }
    fm.into_plane()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn counting5() -> FeatureMap {
        FeatureMap {
            channels: 1,
            width: 5,
            height: 5,
            data: (0..25).map(|v| v as f64).collect(),
        }
    }

    #[test]
    fn unit_kernel_is_identity() {
        let mut layer = ConvLayer::zeros(1, 1, 1, Activation::None);
        layer.weights[0] = 1.0;
        let input = counting5();
        assert_eq!(conv_forward(&input, &layer).unwrap(), input);
    }

    #[test]
    fn zero_weights_give_relu_bias() {
        let mut layer = ConvLayer::zeros(3, 1, 2, Activation::Relu);
        layer.biases = vec![0.25, -0.5];
        let out = conv_forward(&counting5(), &layer).unwrap();
        assert!(out.channel(0).iter().all(|&v| v == 0.25));
        assert!(out.channel(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_by_three_matches_hand_enumeration() {
        let mut layer = ConvLayer::zeros(3, 1, 1, Activation::None);
        layer.weights = (1..=9).map(|v| v as f64).collect();
        layer.biases = vec![0.5];
        let out = conv_forward(&counting5(), &layer).unwrap();
        // centre (2,2): window rows [6 7 8; 11 12 13; 16 17 18]
        let centre = 6.0 + 2.0 * 7.0 + 3.0 * 8.0 + 4.0 * 11.0 + 5.0 * 12.0 + 6.0 * 13.0
            + 7.0 * 16.0
            + 8.0 * 17.0
            + 9.0 * 18.0
            + 0.5;
        assert_eq!(out.data[12], centre);
        // corner (0,0) with replicated border: [0 0 1; 0 0 1; 5 5 6]
        let corner = 1.0 * 0.0 + 2.0 * 0.0 + 3.0 * 1.0 + 4.0 * 0.0 + 5.0 * 0.0 + 6.0 * 1.0
            + 7.0 * 5.0
            + 8.0 * 5.0
            + 9.0 * 6.0
            + 0.5;
        assert_eq!(out.data[0], corner);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let layer = ConvLayer::zeros(3, 2, 1, Activation::None);
        assert!(conv_forward(&counting5(), &layer).is_err());
    }

    #[test]
    fn identity_and_zero_nets() {
        let input = ImagePlane::from_fn(12, 10, |x, y| ((x * 3 + y * 5) % 11) as f64 / 11.0);
        let id = ConvNet::identity(Category::Nose, Architecture::REFERENCE);
        assert_eq!(net_forward(&input, &id).unwrap(), input);
        let zero = ConvNet::zeros(Category::Nose, Architecture::REFERENCE);
        assert!(net_forward(&input, &zero)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn interior_is_translation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let arch = Architecture {
            kernels: [5, 1, 3],
            hidden: [4, 3],
        };
        let mut net = ConvNet::gaussian(Category::Mouth, arch, 0.3, &mut rng);
        net.layers[0].biases = vec![0.05; 4];
        let base = ImagePlane::from_fn(40, 40, |x, y| {
            (0.5 + 0.4 * ((x as f64 * 0.37).sin() + (y as f64 * 0.21).cos()) / 2.0).clamp(0.0, 1.0)
        });
        let (dx, dy) = (3usize, 2usize);
        let shifted = ImagePlane::from_fn(40, 40, |x, y| {
            base.get_clamped(x as isize - dx as isize, y as isize - dy as isize)
        });
        let a = net_forward(&base, &net).unwrap();
        let b = net_forward(&shifted, &net).unwrap();
        let m = arch.margin() + 2;
        for y in m..40 - m - dy {
            for x in m..40 - m - dx {
                assert!((a.get(x, y) - b.get(x + dx, y + dy)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation_catches_bad_chain() {
        let mut net = ConvNet::zeros(Category::Eyes, Architecture::REFERENCE);
        net.layers[1].in_channels = 10;
        assert!(net.validate().is_err());
    }
}
