//! Appearance decoder: a global hyper-network that emits the parameters of a
//! tiny per-pixel spatial network, which in turn produces softmax weights for
//! blending radiance bases.
//!
//! Global input is `[θ features (flattened 3×3 rotations of the appearance
//! joints), ψ]`. Spatial input is `[f_p, v, n]` with `v` and `n` in camera
//! space. The global output is unpacked into spatial layers in order; each
//! layer takes its row-major `outputs × inputs` weight matrix followed by its
//! bias vector.

use alloc::format;
use alloc::vec::Vec;

use crate::math::expf;
use crate::{Error, Result};

/// Widest layer the stack-allocated spatial evaluator supports.
pub const MAX_SPATIAL_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Linear,
    Relu,
    /// Parametric ReLU with a single slope for negative inputs.
    PRelu(f32),
}

impl Activation {
    #[inline]
    pub fn apply_f64(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::PRelu(a) => {
                if x >= 0.0 {
                    x
                } else {
                    a as f64 * x
                }
            }
        }
    }

    #[inline]
    pub fn apply_f32(self, x: f32) -> f32 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::PRelu(a) => {
                if x >= 0.0 {
                    x
                } else {
                    a * x
                }
            }
        }
    }

    /// Stable numeric tag used by serialized assets.
    pub fn tag(self) -> u32 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::PRelu(_) => 2,
        }
    }

    pub fn slope(self) -> f32 {
        match self {
            Activation::PRelu(a) => a,
            _ => 0.0,
        }
    }

    pub fn from_tag(tag: u32, slope: f32) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::PRelu(slope)),
            _ => Err(Error::invalid("activation", format!("unknown tag {tag}"))),
        }
    }
}

/// Dense layer `y = act(W·x + b)` with row-major `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: alloc::vec![0.0; inputs * outputs],
            bias: alloc::vec![0.0; outputs],
            activation,
        }
    }

    fn validate(&self) -> Result<()> {
        Error::check_len("layer weights", self.inputs * self.outputs, self.weights.len())?;
        Error::check_len("layer bias", self.outputs, self.bias.len())
    }

    fn forward_f64(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                let s: f64 = row
                    .iter()
                    .zip(x)
                    .map(|(w, v)| *w as f64 * v)
                    .sum::<f64>()
                    + self.bias[o] as f64;
                self.activation.apply_f64(s)
            })
            .collect()
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            l.validate()?;
            if i > 0 {
                Error::check_len("layer chaining", self.layers[i - 1].outputs, l.inputs)?;
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("network input", self.input_dim(), input.len())?;
        let mut x = input.to_vec();
        for l in &self.layers {
            x = l.forward_f64(&x);
        }
        Ok(x)
    }
}

/// Declared shape of the spatial network.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialArch {
    /// `[input, hidden…, n_bases]`.
    pub sizes: Vec<usize>,
    /// One activation per layer (`sizes.len() − 1`).
    pub activations: Vec<Activation>,
}

impl SpatialArch {
    pub fn layer_count(&self) -> usize {
        self.sizes.len().saturating_sub(1)
    }

    /// Number of floats in Θ_spatial.
    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::invalid("spatial architecture", "needs at least one layer"));
        }
        Error::check_len("spatial activations", self.layer_count(), self.activations.len())?;
        if let Some(&w) = self.sizes.iter().find(|&&w| w == 0 || w > MAX_SPATIAL_WIDTH) {
            return Err(Error::invalid(
                "spatial architecture",
                format!("layer width {w} outside 1..={MAX_SPATIAL_WIDTH}"),
            ));
        }
        Ok(())
    }
}

/// Shapes of a default-initialized decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub n_bases: usize,
    pub feature_dim: usize,
    pub expr_dim: usize,
    pub rotation_dim: usize,
    pub global_hidden: usize,
    pub global_layers: usize,
    pub spatial_hidden: usize,
    pub spatial_layers: usize,
    pub prelu_slope: f32,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            n_bases: crate::DEFAULT_BASES,
            feature_dim: crate::DEFAULT_FEATURE_DIM,
            expr_dim: crate::DEFAULT_EXPRESSIONS,
            rotation_dim: 27,
            global_hidden: 64,
            global_layers: 3,
            spatial_hidden: 16,
            spatial_layers: 2,
            prelu_slope: 0.25,
        }
    }
}

/// Complete decoder parameters as stored in a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    pub global: Mlp,
    pub spatial: SpatialArch,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub expr_dim: usize,
    pub rotation_dim: usize,
}

impl DecoderWeights {
    pub fn global_input_dim(&self) -> usize {
        self.rotation_dim + self.expr_dim
    }

    pub fn spatial_input_dim(&self) -> usize {
        self.feature_dim + 6
    }

    pub fn validate(&self) -> Result<()> {
        self.global.validate()?;
        self.spatial.validate()?;
        Error::check_len("global input", self.global_input_dim(), self.global.input_dim())?;
        Error::check_len("global output", self.spatial.param_count(), self.global.output_dim())?;
        Error::check_len("spatial input", self.spatial_input_dim(), self.spatial.sizes[0])?;
        Error::check_len(
            "spatial output",
            self.n_bases,
            *self.spatial.sizes.last().unwrap_or(&0),
        )
    }

    /// Zero-parameter decoder with the configured shapes.
    pub fn zeros(cfg: &DecoderConfig) -> Self {
        let spatial = spatial_arch(cfg);
        let mut layers = Vec::new();
        let mut width = cfg.rotation_dim + cfg.expr_dim;
        for i in 0..cfg.global_layers {
            let last = i + 1 == cfg.global_layers;
            let out = if last {
                spatial.param_count()
            } else {
                cfg.global_hidden
            };
            let act = if last {
                Activation::Linear
            } else {
                Activation::PRelu(cfg.prelu_slope)
            };
            layers.push(DenseLayer::zeros(width, out, act));
            width = out;
        }
        Self {
            global: Mlp { layers },
            spatial,
            n_bases: cfg.n_bases,
            feature_dim: cfg.feature_dim,
            expr_dim: cfg.expr_dim,
            rotation_dim: cfg.rotation_dim,
        }
    }

    /// Deterministic pseudo-random decoder (He-style scaling) standing in for
    /// trained weights.
    pub fn random(cfg: &DecoderConfig, seed: u64) -> Self {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
        let mut uniform = move || ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        let mut dec = DecoderWeights::zeros(cfg);
        let n = dec.global.layers.len();
        for (i, layer) in dec.global.layers.iter_mut().enumerate() {
            let scale = if i + 1 == n {
                // Keep generated spatial weights O(1).
                0.6 / crate::math::sqrt(layer.inputs as f64)
            } else {
                crate::math::sqrt(6.0 / layer.inputs as f64)
            };
            for w in layer.weights.iter_mut() {
                *w = (uniform() * scale) as f32;
            }
            for b in layer.bias.iter_mut() {
                *b = (uniform() * if i + 1 == n { 0.5 } else { 0.1 }) as f32;
            }
        }
        dec
    }
}

fn spatial_arch(cfg: &DecoderConfig) -> SpatialArch {
    let mut sizes = alloc::vec![cfg.feature_dim + 6];
    let mut activations = Vec::new();
    for _ in 1..cfg.spatial_layers {
        sizes.push(cfg.spatial_hidden);
        activations.push(Activation::PRelu(cfg.prelu_slope));
    }
    sizes.push(cfg.n_bases);
    activations.push(Activation::Linear);
    SpatialArch { sizes, activations }
}

/// One materialized spatial layer; `weights_t` is the input-major transpose
/// used by the hot loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f32>,
    pub weights_t: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

/// Θ_spatial for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    pub layers: Vec<SpatialLayer>,
}

impl SpatialWeights {
    /// Unpacks a flat parameter vector (per layer: row-major weights, then
    /// bias).
    pub fn from_params(arch: &SpatialArch, params: &[f64]) -> Result<Self> {
        arch.validate()?;
        Error::check_len("spatial parameters", arch.param_count(), params.len())?;
        let mut layers = Vec::with_capacity(arch.layer_count());
        let mut off = 0;
        for (l, w) in arch.sizes.windows(2).enumerate() {
            let (inputs, outputs) = (w[0], w[1]);
            let weights: Vec<f32> = params[off..off + inputs * outputs]
                .iter()
                .map(|&x| x as f32)
                .collect();
            off += inputs * outputs;
            let bias: Vec<f32> = params[off..off + outputs].iter().map(|&x| x as f32).collect();
            off += outputs;
            let mut weights_t = alloc::vec![0.0f32; inputs * outputs];
            for o in 0..outputs {
                for i in 0..inputs {
                    weights_t[i * outputs + o] = weights[o * inputs + i];
                }
            }
            if weights.iter().chain(&bias).any(|x| !x.is_finite()) {
                return Err(Error::invalid("spatial parameters", "non-finite value"));
            }
            layers.push(SpatialLayer {
                inputs,
                outputs,
                weights,
                weights_t,
                bias,
                activation: arch.activations[l],
            });
        }
        Ok(Self { layers })
    }

    /// Flat parameter vector in packing order.
    pub fn to_params(&self) -> Vec<f32> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Raw logits of the spatial network for a packed input `[f_p, v, n]`.
    #[inline(always)]
    pub fn logits_into(&self, input: &[f32], out: &mut [f32]) {
        if let [a, b] = &self.layers[..] {
            if a.outputs == 16 && b.outputs == 16 {
                let mut hidden = [0.0f32; 16];
                dense_fixed::<16>(a, input, &mut hidden);
                dense_fixed::<16>(b, &hidden, &mut out[..16]);
                return;
            }
        }
        let mut buf_a = [0.0f32; MAX_SPATIAL_WIDTH];
        let mut buf_b = [0.0f32; MAX_SPATIAL_WIDTH];
        let n_in = input.len();
        buf_a[..n_in].copy_from_slice(input);
        let mut cur_len = n_in;
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let outputs = layer.outputs;
            let acc = &mut buf_b[..outputs];
            if outputs == 16 {
                dense_fixed::<16>(layer, &buf_a[..cur_len], acc);
            } else {
                dense(layer, &buf_a[..cur_len], acc);
            }
            if li == last {
                out[..outputs].copy_from_slice(acc);
            } else {
                buf_a[..outputs].copy_from_slice(acc);
                cur_len = outputs;
            }
        }
    }

    /// Softmax blend weights for a packed input `[f_p, v, n]`.
    #[inline]
    pub fn weights_into(&self, input: &[f32], out: &mut [f32]) {
        self.logits_into(input, out);
        softmax_in_place(&mut out[..self.output_dim()]);
    }

    /// [`Self::weights_into`] with a polynomial exponential, for the raster
    /// hot loop.
    #[inline(always)]
    pub fn weights_into_fast(&self, input: &[f32], out: &mut [f32]) {
        self.logits_into(input, out);
        softmax_fast(&mut out[..self.output_dim()]);
    }
}

#[inline(always)]
fn dense(layer: &SpatialLayer, x: &[f32], acc: &mut [f32]) {
    let outputs = layer.outputs;
    acc.copy_from_slice(&layer.bias);
    for (i, &xi) in x.iter().enumerate() {
        let col = &layer.weights_t[i * outputs..(i + 1) * outputs];
        for (a, w) in acc.iter_mut().zip(col) {
            *a += xi * w;
        }
    }
    for a in acc.iter_mut() {
        *a = layer.activation.apply_f32(*a);
    }
}

/// Same arithmetic as [`dense`] with a width known at compile time.
#[inline(always)]
fn dense_fixed<const N: usize>(layer: &SpatialLayer, x: &[f32], out: &mut [f32]) {
    let mut acc = [0.0f32; N];
    acc.copy_from_slice(&layer.bias);
    for (xi, col) in x.iter().zip(layer.weights_t.chunks_exact(N)) {
        let col: &[f32; N] = col.try_into().unwrap();
        for o in 0..N {
            acc[o] += xi * col[o];
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o = layer.activation.apply_f32(a);
    }
}

/// `exp(x)` for `x <= 0` with relative error below `5e-7`.
#[inline(always)]
pub fn exp_nonpositive(x: f32) -> f32 {
    const ROUND: f32 = 12_582_912.0;
    const LN2_HI: f32 = 0.693_145_75;
    const LN2_LO: f32 = 1.428_606_8e-6;
    let x = x.max(-87.0);
    let k = (x * core::f32::consts::LOG2_E + ROUND) - ROUND;
    let f = (x - k * LN2_HI) - k * LN2_LO;
    let p = 1.0 + f * (1.0 + f * (0.5 + f * (1.0 / 6.0 + f * (1.0 / 24.0 + f * (1.0 / 120.0 + f * (1.0 / 720.0))))));
    p * f32::from_bits(((k as i32 + 127) as u32) << 23)
}

#[inline(always)]
pub fn softmax_fast(x: &mut [f32]) {
    if let Ok(x) = <&mut [f32; 16]>::try_from(&mut *x) {
        softmax_fast_fixed(x);
        return;
    }
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for v in x.iter_mut() {
        *v = exp_nonpositive(*v - max);
        sum += *v;
    }
    let inv = 1.0 / sum;
    for v in x.iter_mut() {
        *v *= inv;
    }
}

#[inline(always)]
fn softmax_fast_fixed<const N: usize>(x: &mut [f32; N]) {
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut e = [0.0f32; N];
    for (e, v) in e.iter_mut().zip(x.iter()) {
        *e = exp_nonpositive(*v - max);
    }
    let mut sum = 0.0f32;
    for v in e {
        sum += v;
    }
    let inv = 1.0 / sum;
    for (v, e) in x.iter_mut().zip(e) {
        *v = e * inv;
    }
}

/// Numerically stable softmax.
#[inline]
pub fn softmax_in_place(x: &mut [f32]) {
    let max = x.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for v in x.iter_mut() {
        *v = expf(*v - max);
        sum += *v;
    }
    let inv = 1.0 / sum;
    for v in x.iter_mut() {
        *v *= inv;
    }
}

/// Raw hyper-network output Θ_spatial in `f64`.
pub fn global_forward(dec: &DecoderWeights, theta: &[f64], psi: &[f64]) -> Result<Vec<f64>> {
    Error::check_len("rotation features", dec.rotation_dim, theta.len())?;
    Error::check_len("expression coefficients", dec.expr_dim, psi.len())?;
    let mut input = Vec::with_capacity(dec.global_input_dim());
    input.extend_from_slice(theta);
    input.extend_from_slice(psi);
    let out = dec.global.forward(&input)?;
    Error::check_len("global output", dec.spatial.param_count(), out.len())?;
    Ok(out)
}

/// Runs the global network once and materializes the spatial network.
pub fn global_eval(dec: &DecoderWeights, theta: &[f64], psi: &[f64]) -> Result<SpatialWeights> {
    let params = global_forward(dec, theta, psi)?;
    SpatialWeights::from_params(&dec.spatial, &params)
}

/// Blend weights for one surface sample.
pub fn spatial_eval(sw: &SpatialWeights, feature: &[f32], view: [f32; 3], normal: [f32; 3]) -> Result<Vec<f32>> {
    Error::check_len("spatial input", sw.input_dim(), feature.len() + 6)?;
    let mut input = [0.0f32; MAX_SPATIAL_WIDTH];
    let n = feature.len();
    input[..n].copy_from_slice(feature);
    input[n..n + 3].copy_from_slice(&view);
    input[n + 3..n + 6].copy_from_slice(&normal);
    let mut out = alloc::vec![0.0f32; sw.output_dim()];
    sw.weights_into(&input[..n + 6], &mut out);
    Ok(out)
}

/// Convex combination of basis colors and occupancies.
#[inline]
pub fn blend_radiance(w: &[f32], colors: &[[f32; 3]], occupancies: &[f32]) -> ([f32; 3], f32) {
    let mut c = [0.0f32; 3];
    let mut a = 0.0f32;
    for ((wi, ci), ai) in w.iter().zip(colors).zip(occupancies) {
        c[0] += wi * ci[0];
        c[1] += wi * ci[1];
        c[2] += wi * ci[2];
        a += wi * ai;
    }
    (c, a)
}
