//! Weight-shared Siamese similarity network.
//!
//! Both branches embed a min-max-normalized magnitude vector with the same
//! parameters; the head maps the Euclidean distance `d` between the two
//! embeddings to `s = sigmoid(w·d + b)`.
//!
//! Parameters live in one flat buffer in layer order. Per convolution:
//! weights `[out][in][k]` then bias `[out]`. Per dense layer: weights
//! `[out][in]` then bias `[out]`. The head `(w, b)` comes last.

mod io;
mod train;

pub use io::{
    decode_weights, encode_weights, read_weights, weights_digest, write_weights, WeightsFile,
    WEIGHTS_MAGIC,
};
pub use train::{train, EpochLoss, RmsProp, TrainConfig, TrainOutput};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::dataset::Label;
use crate::rng::rng_from_seed;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchKind {
    Cnn,
    Fcn,
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchKind::Cnn => "cnn",
            ArchKind::Fcn => "fcn",
        })
    }
}

impl FromStr for ArchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(ArchKind::Cnn),
            "fcn" => Ok(ArchKind::Fcn),
            _ => Err(Error::Usage(format!(
                "unknown architecture {s:?} (expected cnn or fcn)"
            ))),
        }
    }
}

/// Embedding network description.
///
/// CNN: one same-padded stride-1 1-D convolution plus ReLU per entry of
/// `conv_filters`, then a linear dense layer from the flattened
/// (channel-major) feature map to `embedding_dim`.
///
/// FCN: one dense layer plus ReLU per entry of `fcn_widths`; the last width
/// must equal `embedding_dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchSpec {
    pub kind: ArchKind,
    pub input_len: usize,
    pub conv_filters: Vec<usize>,
    pub kernel_len: usize,
    pub fcn_widths: Vec<usize>,
    pub embedding_dim: usize,
}

impl ArchSpec {
    pub fn cnn() -> Self {
        Self {
            kind: ArchKind::Cnn,
            input_len: crate::ofdm::OCCUPIED,
            conv_filters: vec![16, 32],
            kernel_len: 7,
            fcn_widths: vec![256, 512, 256, 16],
            embedding_dim: 16,
        }
    }

    pub fn fcn() -> Self {
        Self {
            kind: ArchKind::Fcn,
            ..Self::cnn()
        }
    }

    pub fn of_kind(kind: ArchKind) -> Self {
        match kind {
            ArchKind::Cnn => Self::cnn(),
            ArchKind::Fcn => Self::fcn(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len < 2 || self.embedding_dim == 0 {
            return Err(Error::domain(
                "input_len must be >= 2 and embedding_dim >= 1",
            ));
        }
        match self.kind {
            ArchKind::Cnn => {
                if self.kernel_len == 0 || self.kernel_len % 2 == 0 {
                    return Err(Error::domain("kernel_len must be odd for same padding"));
                }
                if self.conv_filters.is_empty() || self.conv_filters.contains(&0) {
                    return Err(Error::domain("conv_filters must be non-empty and positive"));
                }
            }
            ArchKind::Fcn => {
                if self.fcn_widths.is_empty() || self.fcn_widths.contains(&0) {
                    return Err(Error::domain("fcn_widths must be non-empty and positive"));
                }
                if self.fcn_widths.last() != Some(&self.embedding_dim) {
                    return Err(Error::domain("last fcn width must equal embedding_dim"));
                }
            }
        }
        Ok(())
    }

    /// Layer plan with parameter offsets.
    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut offset = 0;
        let m = self.input_len;
        match self.kind {
            ArchKind::Cnn => {
                let mut cin = 1;
                for &cout in &self.conv_filters {
                    layers.push(Layer::Conv {
                        cin,
                        cout,
                        k: self.kernel_len,
                        len: m,
                        offset,
                    });
                    offset += cout * cin * self.kernel_len + cout;
                    layers.push(Layer::Relu);
                    cin = cout;
                }
                layers.push(Layer::Dense {
                    nin: cin * m,
                    nout: self.embedding_dim,
                    offset,
                });
            }
            ArchKind::Fcn => {
                let mut nin = m;
                for &nout in &self.fcn_widths {
                    layers.push(Layer::Dense { nin, nout, offset });
                    offset += nin * nout + nout;
                    layers.push(Layer::Relu);
                    nin = nout;
                }
            }
        }
        layers
    }

    fn embedding_params(&self) -> usize {
        self.layers().iter().map(Layer::param_count).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Conv {
        cin: usize,
        cout: usize,
        k: usize,
        len: usize,
        offset: usize,
    },
    Dense {
        nin: usize,
        nout: usize,
        offset: usize,
    },
    Relu,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        match *self {
            Layer::Conv { cin, cout, k, .. } => cout * cin * k + cout,
            Layer::Dense { nin, nout, .. } => nin * nout + nout,
            Layer::Relu => 0,
        }
    }
}

/// Trainable parameters of both branches plus the two head scalars.
pub fn count_parameters(arch: &ArchSpec) -> usize {
    arch.embedding_params() + 2
}

/// Counting convention used by [`count_flops`].
pub const FLOP_CONVENTION: &str = "one multiply-accumulate = 2 FLOPs; convolutions counted at full kernel \
width (zero padding included); +1 per bias add, ReLU, and per element for min-max normalization (4: min, \
max, subtract, divide); distance 3 per dimension + 1 sqrt; head 2 + 4 for the sigmoid; both branches counted";

/// Forward-pass FLOPs for scoring one pair, see [`FLOP_CONVENTION`].
pub fn count_flops(arch: &ArchSpec) -> u64 {
    let mut branch = 4 * arch.input_len as u64;
    for layer in arch.layers() {
        branch += match layer {
            Layer::Conv {
                cin, cout, k, len, ..
            } => (2 * cin * k * cout * len + cout * len) as u64,
            Layer::Dense { nin, nout, .. } => (2 * nin * nout + nout) as u64,
            Layer::Relu => 0,
        };
    }
    branch += relu_elements(arch);
    2 * branch + 3 * arch.embedding_dim as u64 + 1 + 6
}

fn relu_elements(arch: &ArchSpec) -> u64 {
    let layers = arch.layers();
    let mut n = 0;
    for w in layers.windows(2) {
        if w[1] == Layer::Relu {
            n += match w[0] {
                Layer::Conv { cout, len, .. } => cout * len,
                Layer::Dense { nout, .. } => nout,
                Layer::Relu => 0,
            };
        }
    }
    n as u64
}

/// `(x − min)/(max − min)`; a constant vector maps to zeros.
pub fn min_max_normalize<T: Scalar>(x: &[T]) -> Vec<T> {
    let (lo, hi) = min_max(x);
    let range = hi - lo;
    if x.is_empty() || range <= T::zero() {
        return vec![T::zero(); x.len()];
    }
    x.iter().map(|&v| (v - lo) / range).collect()
}

fn min_max<T: Scalar>(x: &[T]) -> (T, T) {
    x.iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn argmin_argmax<T: Scalar>(x: &[T]) -> (usize, usize) {
    let (mut lo, mut hi) = (0, 0);
    for (i, &v) in x.iter().enumerate() {
        if v < x[lo] {
            lo = i;
        }
        if v > x[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Gradient of a loss through [`min_max_normalize`], given the output
/// gradient. The constant-input branch has zero derivative.
fn min_max_backward<T: Scalar>(x: &[T], y: &[T], gy: &[T]) -> Vec<T> {
    let (lo, hi) = min_max(x);
    let range = hi - lo;
    if x.is_empty() || range <= T::zero() {
        return vec![T::zero(); x.len()];
    }
    let (imin, imax) = argmin_argmax(x);
    let mut gx: Vec<T> = gy.iter().map(|&g| g / range).collect();
    // y_i = (x_i - lo)/r: dy_i/dlo = (y_i - 1)/r, dy_i/dhi = -y_i/r
    let (mut glo, mut ghi) = (T::zero(), T::zero());
    for (&g, &yi) in gy.iter().zip(y) {
        glo += g * (yi - T::one());
        ghi -= g * yi;
    }
    gx[imin] += glo / range;
    gx[imax] += ghi / range;
    gx
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `V·max(0, η − s)² + (1 − V)·s²`.
pub fn contrastive_loss<T: Scalar>(label: Label, s: T, eta: T) -> T {
    match label {
        Label::Different => {
            let m = (eta - s).max(T::zero());
            m * m
        }
        Label::Same => s * s,
    }
}

/// `∂L/∂s` of [`contrastive_loss`].
pub fn contrastive_loss_grad<T: Scalar>(label: Label, s: T, eta: T) -> T {
    match label {
        Label::Different => -(T::one() + T::one()) * (eta - s).max(T::zero()),
        Label::Same => (T::one() + T::one()) * s,
    }
}

/// Backpropagation result for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    /// Same layout as [`SiameseWeights::params`].
    pub params: Vec<T>,
    pub loss: T,
    pub score: T,
    /// Loss gradient with respect to the raw (unnormalized) magnitudes.
    pub input_a: Vec<T>,
    pub input_b: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiameseWeights<T> {
    arch: ArchSpec,
    layers: Vec<Layer>,
    params: Vec<T>,
}

impl<T: Scalar> SiameseWeights<T> {
    pub fn zeros(arch: &ArchSpec) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch: arch.clone(),
            layers: arch.layers(),
            params: vec![T::zero(); count_parameters(arch)],
        })
    }

    /// Uniform in `±√(6/(fan_in + fan_out))` per layer (convolution fans
    /// scale with the kernel length), zero biases. The head weight is one
    /// more 1-in, 1-out layer.
    pub fn init(arch: &ArchSpec, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(arch)?;
        let mut rng = rng_from_seed(seed);
        for layer in w.layers.clone() {
            let (offset, n, fan_in, fan_out) = match layer {
                Layer::Conv {
                    cin,
                    cout,
                    k,
                    offset,
                    ..
                } => (offset, cout * cin * k, cin * k, cout * k),
                Layer::Dense { nin, nout, offset } => (offset, nin * nout, nin, nout),
                Layer::Relu => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut w.params[offset..offset + n] {
                *p = T::lit(rng.gen_range(-limit..limit));
            }
        }
        let h = w.head_offset();
        let limit = 3f64.sqrt();
        w.params[h] = T::lit(rng.gen_range(-limit..limit));
        Ok(w)
    }

    /// Rebuilds weights from a flat buffer.
    pub fn from_params(arch: &ArchSpec, params: Vec<T>) -> Result<Self> {
        arch.validate()?;
        let expected = count_parameters(arch);
        if params.len() != expected {
            return Err(Error::Format(format!(
                "parameter count {} does not match architecture ({expected})",
                params.len()
            )));
        }
        Ok(Self {
            arch: arch.clone(),
            layers: arch.layers(),
            params,
        })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    fn head_offset(&self) -> usize {
        self.params.len() - 2
    }

    /// `(w, b)` of the scoring head.
    pub fn head(&self) -> (T, T) {
        let h = self.head_offset();
        (self.params[h], self.params[h + 1])
    }

    pub fn cast<U: Scalar>(&self) -> SiameseWeights<U> {
        SiameseWeights {
            arch: self.arch.clone(),
            layers: self.layers.clone(),
            params: self.params.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.arch.input_len {
            return Err(Error::domain(format!(
                "input length {} does not match architecture ({})",
                x.len(),
                self.arch.input_len
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite input magnitude".into()));
        }
        Ok(())
    }

    /// Activations: entry 0 is the input, entry `i + 1` the output of layer `i`.
    fn forward_cached(&self, x: Vec<T>) -> Result<Vec<Vec<T>>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        for layer in &self.layers {
            let x = acts.last().expect("non-empty");
            let y = match *layer {
                Layer::Conv {
                    cin,
                    cout,
                    k,
                    len,
                    offset,
                } => conv_forward(&self.params[offset..], x, cin, cout, k, len),
                Layer::Dense { nin, nout, offset } => {
                    dense_forward(&self.params[offset..], x, nin, nout)
                }
                Layer::Relu => x.iter().map(|&v| v.max(T::zero())).collect(),
            };
            acts.push(y);
        }
        if acts
            .last()
            .expect("non-empty")
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(Error::Numeric("non-finite embedding".into()));
        }
        Ok(acts)
    }

    /// Embedding of an already normalized vector.
    pub fn embed(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.forward_cached(x.to_vec())?.pop().expect("non-empty"))
    }

    /// Which piece of the piecewise-smooth branch a raw magnitude vector
    /// falls on: the argmin and argmax picked by the normalization, then the
    /// sign of every ReLU input. The branch is smooth in the parameters and
    /// the input wherever this pattern does not change.
    pub fn activation_pattern(&self, mag: &[T]) -> Result<(usize, usize, Vec<bool>)> {
        self.check_input(mag)?;
        let (imin, imax) = argmin_argmax(mag);
        let acts = self.forward_cached(min_max_normalize(mag))?;
        let mut signs = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if *layer == Layer::Relu {
                signs.extend(acts[i].iter().map(|&v| v > T::zero()));
            }
        }
        Ok((imin, imax, signs))
    }

    /// Score of two raw magnitude vectors; normalization happens here.
    pub fn score(&self, mag_a: &[T], mag_b: &[T]) -> Result<T> {
        self.check_input(mag_a)?;
        self.check_input(mag_b)?;
        let ea = self.embed(&min_max_normalize(mag_a))?;
        let eb = self.embed(&min_max_normalize(mag_b))?;
        let (w, b) = self.head();
        Ok(sigmoid(w * distance(&ea, &eb) + b))
    }

    /// Exact gradient of the contrastive loss for one labeled pair.
    pub fn gradients(
        &self,
        mag_a: &[T],
        mag_b: &[T],
        label: Label,
        eta: T,
    ) -> Result<Gradients<T>> {
        self.check_input(mag_a)?;
        self.check_input(mag_b)?;
        let xa = min_max_normalize(mag_a);
        let xb = min_max_normalize(mag_b);
        let acts_a = self.forward_cached(xa.clone())?;
        let acts_b = self.forward_cached(xb.clone())?;
        let ea = acts_a.last().expect("non-empty");
        let eb = acts_b.last().expect("non-empty");
        let d = distance(ea, eb);
        let (w, b) = self.head();
        let s = sigmoid(w * d + b);
        let loss = contrastive_loss(label, s, eta);
        let gz = contrastive_loss_grad(label, s, eta) * s * (T::one() - s);

        let mut grad = vec![T::zero(); self.params.len()];
        let h = self.head_offset();
        grad[h] = gz * d;
        grad[h + 1] = gz;
        let gd = gz * w;
        let ge_a: Vec<T> = if d > T::zero() {
            ea.iter().zip(eb).map(|(&p, &q)| gd * (p - q) / d).collect()
        } else {
            vec![T::zero(); ea.len()]
        };
        let ge_b: Vec<T> = ge_a.iter().map(|&g| -g).collect();
        let gxa = self.backward(&acts_a, ge_a, &mut grad);
        let gxb = self.backward(&acts_b, ge_b, &mut grad);
        let input_a = min_max_backward(mag_a, &xa, &gxa);
        let input_b = min_max_backward(mag_b, &xb, &gxb);

        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(Gradients {
            params: grad,
            loss,
            score: s,
            input_a,
            input_b,
        })
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the branch input.
    fn backward(&self, acts: &[Vec<T>], mut g: Vec<T>, grad: &mut [T]) -> Vec<T> {
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &acts[i];
            g = match *layer {
                Layer::Conv {
                    cin,
                    cout,
                    k,
                    len,
                    offset,
                } => conv_backward(
                    &self.params[offset..],
                    &mut grad[offset..],
                    x,
                    &g,
                    cin,
                    cout,
                    k,
                    len,
                ),
                Layer::Dense { nin, nout, offset } => dense_backward(
                    &self.params[offset..],
                    &mut grad[offset..],
                    x,
                    &g,
                    nin,
                    nout,
                ),
                Layer::Relu => {
                    let y = &acts[i + 1];
                    g.iter()
                        .zip(y)
                        .map(|(&gi, &yi)| if yi > T::zero() { gi } else { T::zero() })
                        .collect()
                }
            };
        }
        g
    }
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| (p - q) * (p - q))
        .sum::<T>()
        .sqrt()
}

/// Index range of `t` such that `t + shift` stays inside `0..len`.
#[inline]
fn valid_range(shift: isize, len: usize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift).clamp(0, len as isize) as usize;
    (lo, hi.max(lo))
}

fn conv_forward<T: Scalar>(
    p: &[T],
    x: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    len: usize,
) -> Vec<T> {
    let pad = (k / 2) as isize;
    let bias = &p[cout * cin * k..];
    let mut y = vec![T::zero(); cout * len];
    for o in 0..cout {
        let yo = &mut y[o * len..(o + 1) * len];
        yo.iter_mut().for_each(|v| *v = bias[o]);
        for i in 0..cin {
            let xi = &x[i * len..(i + 1) * len];
            let wrow = &p[(o * cin + i) * k..(o * cin + i + 1) * k];
            for (j, &w) in wrow.iter().enumerate() {
                let shift = j as isize - pad;
                let (lo, hi) = valid_range(shift, len);
                let src = &xi[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                for (yv, &xv) in yo[lo..hi].iter_mut().zip(src) {
                    *yv += w * xv;
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    p: &[T],
    grad: &mut [T],
    x: &[T],
    gy: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    len: usize,
) -> Vec<T> {
    let pad = (k / 2) as isize;
    let nw = cout * cin * k;
    let mut gx = vec![T::zero(); cin * len];
    for o in 0..cout {
        let go = &gy[o * len..(o + 1) * len];
        grad[nw + o] += go.iter().copied().sum::<T>();
        for i in 0..cin {
            let xi = &x[i * len..(i + 1) * len];
            let base = (o * cin + i) * k;
            for j in 0..k {
                let shift = j as isize - pad;
                let (lo, hi) = valid_range(shift, len);
                let (a, b) = (
                    (lo as isize + shift) as usize,
                    (hi as isize + shift) as usize,
                );
                let w = p[base + j];
                let mut acc = T::zero();
                for (&g, &xv) in go[lo..hi].iter().zip(&xi[a..b]) {
                    acc += g * xv;
                }
                grad[base + j] += acc;
                for (gxv, &g) in gx[i * len + a..i * len + b].iter_mut().zip(&go[lo..hi]) {
                    *gxv += g * w;
                }
            }
        }
    }
    gx
}

fn dense_forward<T: Scalar>(p: &[T], x: &[T], nin: usize, nout: usize) -> Vec<T> {
    let bias = &p[nin * nout..];
    (0..nout)
        .map(|o| {
            let row = &p[o * nin..(o + 1) * nin];
            let mut acc = bias[o];
            for (&w, &v) in row.iter().zip(x) {
                acc += w * v;
            }
            acc
        })
        .collect()
}

fn dense_backward<T: Scalar>(
    p: &[T],
    grad: &mut [T],
    x: &[T],
    gy: &[T],
    nin: usize,
    nout: usize,
) -> Vec<T> {
    let mut gx = vec![T::zero(); nin];
    for (o, &g) in gy.iter().enumerate().take(nout) {
        grad[nin * nout + o] += g;
        if g == T::zero() {
            continue;
        }
        let row = &p[o * nin..(o + 1) * nin];
        for ((gw, &v), (gxv, &w)) in grad[o * nin..(o + 1) * nin]
            .iter_mut()
            .zip(x)
            .zip(gx.iter_mut().zip(row))
        {
            *gw += g * v;
            *gxv += g * w;
        }
    }
    gx
}
