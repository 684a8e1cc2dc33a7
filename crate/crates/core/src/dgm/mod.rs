//! Sequence VAE with a property-prediction head.
//!
//! The encoder embeds each token, flattens the padded sequence and maps it
//! through one tanh layer to the posterior mean and log-variance. The
//! decoder maps a latent vector through one tanh layer to a logit row per
//! sequence position. The property head is a two-hidden-layer tanh MLP on
//! the latent vector. Loss per batch is
//!
//! ```text
//! total = recon + beta * kl + alpha * prop_mse
//! ```
//!
//! with every term averaged over the batch. Reconstruction covers the body
//! tokens and the end-of-sequence marker; padding positions are masked out.
//!
//! All parameters live in one flat `Vec<f64>` whose layout is given by
//! [`Layout`]; gradients, the optimizer state and checkpoints share it.

mod checkpoint;
mod train;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::toy::{Token, TokenSeq};

pub use checkpoint::MAGIC;
pub use train::{train, OptimizerKind, TrainConfig};

/// Width of every hidden layer (encoder, decoder and property head).
pub const HIDDEN: usize = 64;

/// Clamped exponential KL-weight schedule over `total` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub amplitude: f64,
    pub speed: f64,
    pub lower: f64,
    pub upper: f64,
    pub total: usize,
}

impl BetaSchedule {
    pub fn new(amplitude: f64, speed: f64, lower: f64, upper: f64, total: usize) -> Result<Self> {
        let s = Self {
            amplitude,
            speed,
            lower,
            upper,
            total,
        };
        s.validate()?;
        Ok(s)
    }

    /// A schedule pinned at `beta` for every epoch.
    pub fn constant(beta: f64, total: usize) -> Self {
        Self {
            amplitude: beta.max(f64::MIN_POSITIVE),
            speed: 1.0,
            lower: beta,
            upper: beta,
            total: total.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.speed > 0.0) {
            return Err(invalid!("beta amplitude and speed must be positive"));
        }
        if !(0.0 <= self.lower && self.lower <= self.upper) {
            return Err(invalid!("beta bounds must satisfy 0 <= lower <= upper"));
        }
        if self.total == 0 {
            return Err(invalid!("beta schedule needs at least one epoch"));
        }
        Ok(())
    }

    /// `min(max(a * exp(k * (1 - T/t)), l), u)` for epoch `t` in `1..=T`.
    pub fn at(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.total {
            return Err(invalid!("epoch {t} outside 1..={}", self.total));
        }
        let ratio = self.total as f64 / t as f64;
        let raw = self.amplitude * libm::exp(self.speed * (1.0 - ratio));
        Ok(raw.max(self.lower).min(self.upper))
    }
}

/// Model shape. Hidden widths are fixed at [`HIDDEN`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Token vocabulary including the trailing EOS and PAD symbols.
    pub vocab: usize,
    pub embed: usize,
    pub latent: usize,
    pub max_len: usize,
    pub props: usize,
}

impl ModelDims {
    /// Toy-domain defaults: 16 fragments + EOS + PAD, E = 8, L = 16,
    /// N_max = 10, three properties.
    pub fn desk() -> Self {
        Self {
            vocab: crate::toy::VOCAB,
            embed: 8,
            latent: 16,
            max_len: crate::toy::MAX_LEN,
            props: 3,
        }
    }

    pub fn eos(&self) -> Token {
        (self.vocab - 2) as Token
    }

    pub fn pad(&self) -> Token {
        (self.vocab - 1) as Token
    }

    fn validate(&self) -> Result<()> {
        if self.vocab < 3 || self.vocab > Token::MAX as usize + 1 {
            return Err(invalid!("vocabulary size {} outside 3..=256", self.vocab));
        }
        if self.embed == 0 || self.latent == 0 || self.max_len == 0 || self.props == 0 {
            return Err(invalid!("model dimensions must be positive"));
        }
        Ok(())
    }
}

/// Offsets of every parameter block inside the flat parameter vector, in
/// checkpoint order. Matrices are row-major `out x in`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub embedding: Range<usize>,
    pub enc_w: Range<usize>,
    pub enc_b: Range<usize>,
    pub mean_w: Range<usize>,
    pub mean_b: Range<usize>,
    pub logvar_w: Range<usize>,
    pub logvar_b: Range<usize>,
    pub dec_w1: Range<usize>,
    pub dec_b1: Range<usize>,
    pub dec_w2: Range<usize>,
    pub dec_b2: Range<usize>,
    pub head_w1: Range<usize>,
    pub head_b1: Range<usize>,
    pub head_w2: Range<usize>,
    pub head_b2: Range<usize>,
    pub head_w3: Range<usize>,
    pub head_b3: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(d: &ModelDims) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let flat = d.max_len * d.embed;
        let logits = d.max_len * d.vocab;
        let embedding = take(d.vocab * d.embed);
        let enc_w = take(HIDDEN * flat);
        let enc_b = take(HIDDEN);
        let mean_w = take(d.latent * HIDDEN);
        let mean_b = take(d.latent);
        let logvar_w = take(d.latent * HIDDEN);
        let logvar_b = take(d.latent);
        let dec_w1 = take(HIDDEN * d.latent);
        let dec_b1 = take(HIDDEN);
        let dec_w2 = take(logits * HIDDEN);
        let dec_b2 = take(logits);
        let head_w1 = take(HIDDEN * d.latent);
        let head_b1 = take(HIDDEN);
        let head_w2 = take(HIDDEN * HIDDEN);
        let head_b2 = take(HIDDEN);
        let head_w3 = take(d.props * HIDDEN);
        let head_b3 = take(d.props);
        Self {
            embedding,
            enc_w,
            enc_b,
            mean_w,
            mean_b,
            logvar_w,
            logvar_b,
            dec_w1,
            dec_b1,
            dec_w2,
            dec_b2,
            head_w1,
            head_b1,
            head_w2,
            head_b2,
            head_w3,
            head_b3,
            total: at,
        }
    }

    /// Ranges of the property head, handy for ablations and tests.
    pub fn head(&self) -> [Range<usize>; 6] {
        [
            self.head_w1.clone(),
            self.head_b1.clone(),
            self.head_w2.clone(),
            self.head_b2.clone(),
            self.head_w3.clone(),
            self.head_b3.clone(),
        ]
    }
}

/// Posterior parameters for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub logvar: Vec<f64>,
}

/// Batch-mean loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub prop_mse: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn combine(recon: f64, kl: f64, prop_mse: f64, alpha: f64, beta: f64) -> Self {
        Self {
            recon,
            kl,
            prop_mse,
            total: recon + beta * kl + alpha * prop_mse,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceVae {
    dims: ModelDims,
    layout: Layout,
    params: Vec<f64>,
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// Accumulate `dW += dout x^T`, `db += dout` and, when asked, `dx = W^T dout`.
fn affine_back(w: &[f64], x: &[f64], dout: &[f64], dw: &mut [f64], db: &mut [f64], dx: Option<&mut [f64]>) {
    let n_in = x.len();
    for ((g, dw_row), db_i) in dout.iter().zip(dw.chunks_exact_mut(n_in)).zip(db.iter_mut()) {
        if *g == 0.0 {
            continue;
        }
        *db_i += g;
        for (d, v) in dw_row.iter_mut().zip(x) {
            *d += g * v;
        }
    }
    if let Some(dx) = dx {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for (g, row) in dout.iter().zip(w.chunks_exact(n_in)) {
            if *g == 0.0 {
                continue;
            }
            for (d, a) in dx.iter_mut().zip(row) {
                *d += g * a;
            }
        }
    }
}

fn tanh_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = libm::tanh(*x));
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(row.iter().map(|v| libm::exp(v - max)).sum::<f64>())
}

/// Everything the backward pass needs from one sample's forward pass.
struct Trace {
    tokens: Vec<usize>,
    scored: usize,
    input: Vec<f64>,
    enc_h: Vec<f64>,
    mean: Vec<f64>,
    logvar: Vec<f64>,
    noise: Vec<f64>,
    z: Vec<f64>,
    dec_h: Vec<f64>,
    logits: Vec<f64>,
    head_h1: Vec<f64>,
    head_h2: Vec<f64>,
    pred: Vec<f64>,
    recon: f64,
    kl: f64,
    mse: f64,
}

impl SequenceVae {
    /// Fresh model: embeddings ~ N(0, 1), affine weights and biases
    /// ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn new<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(&dims);
        let mut params = vec![0.0; layout.total];
        for p in &mut params[layout.embedding.clone()] {
            *p = StandardNormal.sample(rng);
        }
        let flat = dims.max_len * dims.embed;
        let blocks = [
            (&layout.enc_w, &layout.enc_b, flat),
            (&layout.mean_w, &layout.mean_b, HIDDEN),
            (&layout.logvar_w, &layout.logvar_b, HIDDEN),
            (&layout.dec_w1, &layout.dec_b1, dims.latent),
            (&layout.dec_w2, &layout.dec_b2, HIDDEN),
            (&layout.head_w1, &layout.head_b1, dims.latent),
            (&layout.head_w2, &layout.head_b2, HIDDEN),
            (&layout.head_w3, &layout.head_b3, HIDDEN),
        ];
        for (w, b, fan_in) in blocks {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            // bias block directly follows its weight block
            for p in &mut params[w.start..b.end] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { dims, layout, params })
    }

    pub fn from_params(dims: ModelDims, params: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        let layout = Layout::new(&dims);
        if params.len() != layout.total {
            return Err(Error::DimensionMismatch {
                expected: layout.total,
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid!("non-finite model parameter"));
        }
        Ok(Self { dims, layout, params })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn block(&self, r: &Range<usize>) -> &[f64] {
        &self.params[r.clone()]
    }

    /// Position-wise token ids for the encoder (body, EOS, then PAD) and
    /// the number of positions scored by the reconstruction loss.
    pub fn frame(&self, seq: &[Token]) -> Result<(Vec<usize>, usize)> {
        let n = self.dims.max_len;
        let eos = self.dims.eos();
        if let Some(bad) = seq.iter().find(|&&t| t >= eos) {
            return Err(invalid!("unknown token id {bad}"));
        }
        let body = seq.len().min(n);
        let mut tokens: Vec<usize> = seq[..body].iter().map(|&t| t as usize).collect();
        if body < n {
            tokens.push(eos as usize);
        }
        tokens.resize(n, self.dims.pad() as usize);
        Ok((tokens, (body + 1).min(n)))
    }

    fn embed(&self, tokens: &[usize]) -> Vec<f64> {
        let e = self.dims.embed;
        let table = self.block(&self.layout.embedding);
        tokens
            .iter()
            .flat_map(|&t| table[t * e..(t + 1) * e].iter().copied())
            .collect()
    }

    fn encode_framed(&self, input: &[f64]) -> (Vec<f64>, Posterior) {
        let l = &self.layout;
        let mut h = vec![0.0; HIDDEN];
        affine(self.block(&l.enc_w), self.block(&l.enc_b), input, &mut h);
        tanh_in_place(&mut h);
        let mut mean = vec![0.0; self.dims.latent];
        let mut logvar = vec![0.0; self.dims.latent];
        affine(self.block(&l.mean_w), self.block(&l.mean_b), &h, &mut mean);
        affine(self.block(&l.logvar_w), self.block(&l.logvar_b), &h, &mut logvar);
        (h, Posterior { mean, logvar })
    }

    /// Posterior mean and log-variance per sequence. Each row depends only
    /// on its own sequence.
    pub fn encode(&self, batch: &[TokenSeq]) -> Result<Vec<Posterior>> {
        batch
            .iter()
            .map(|seq| {
                let (tokens, _) = self.frame(seq)?;
                Ok(self.encode_framed(&self.embed(&tokens)).1)
            })
            .collect()
    }

    fn check_latent(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dims.latent {
            return Err(Error::DimensionMismatch {
                expected: self.dims.latent,
                actual: z.len(),
            });
        }
        Ok(())
    }

    fn decoder_forward(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let l = &self.layout;
        let mut h = vec![0.0; HIDDEN];
        affine(self.block(&l.dec_w1), self.block(&l.dec_b1), z, &mut h);
        tanh_in_place(&mut h);
        let mut logits = vec![0.0; self.dims.max_len * self.dims.vocab];
        affine(self.block(&l.dec_w2), self.block(&l.dec_b2), &h, &mut logits);
        (h, logits)
    }

    /// Logits, one row of `vocab` entries per position.
    pub fn decode_logits(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_latent(z)?;
        Ok(self.decoder_forward(z).1)
    }

    /// Greedy (argmax) or sampled decoding, stopping at the first EOS.
    pub fn decode<R: Rng + ?Sized>(&self, z: &[f64], rng: &mut R, greedy: bool) -> Result<TokenSeq> {
        let logits = self.decode_logits(z)?;
        let eos = self.dims.eos() as usize;
        let mut out = Vec::new();
        for row in logits.chunks_exact(self.dims.vocab) {
            let token = if greedy {
                argmax(row)
            } else {
                sample_softmax(row, rng.random())
            };
            if token == eos {
                break;
            }
            out.push(token as Token);
        }
        Ok(out)
    }

    fn head_forward(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let l = &self.layout;
        let mut h1 = vec![0.0; HIDDEN];
        affine(self.block(&l.head_w1), self.block(&l.head_b1), z, &mut h1);
        tanh_in_place(&mut h1);
        let mut h2 = vec![0.0; HIDDEN];
        affine(self.block(&l.head_w2), self.block(&l.head_b2), &h1, &mut h2);
        tanh_in_place(&mut h2);
        let mut out = vec![0.0; self.dims.props];
        affine(self.block(&l.head_w3), self.block(&l.head_b3), &h2, &mut out);
        (h1, h2, out)
    }

    pub fn predict_properties(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_latent(z)?;
        Ok(self.head_forward(z).2)
    }

    fn check_batch(&self, batch: &[TokenSeq], props: &[Vec<f64>], noise: &[Vec<f64>]) -> Result<()> {
        if batch.is_empty() {
            return Err(invalid!("empty batch"));
        }
        if props.len() != batch.len() || noise.len() != batch.len() {
            return Err(invalid!(
                "batch of {} sequences with {} property rows and {} noise rows",
                batch.len(),
                props.len(),
                noise.len()
            ));
        }
        if let Some(row) = props.iter().find(|r| r.len() != self.dims.props) {
            return Err(Error::DimensionMismatch {
                expected: self.dims.props,
                actual: row.len(),
            });
        }
        if let Some(row) = noise.iter().find(|r| r.len() != self.dims.latent) {
            return Err(Error::DimensionMismatch {
                expected: self.dims.latent,
                actual: row.len(),
            });
        }
        Ok(())
    }

    fn forward(&self, seq: &[Token], target: &[f64], noise: &[f64]) -> Result<Trace> {
        let (tokens, scored) = self.frame(seq)?;
        let input = self.embed(&tokens);
        let (enc_h, post) = self.encode_framed(&input);
        let z = reparameterize_with(&post.mean, &post.logvar, noise);
        let (dec_h, logits) = self.decoder_forward(&z);
        let (head_h1, head_h2, pred) = self.head_forward(&z);

        let v = self.dims.vocab;
        let recon = tokens[..scored]
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let row = &logits[i * v..(i + 1) * v];
                log_sum_exp(row) - row[t]
            })
            .sum();
        let kl = kl_divergence(&post.mean, &post.logvar);
        let mse = pred
            .iter()
            .zip(target)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / self.dims.props as f64;

        Ok(Trace {
            tokens,
            scored,
            input,
            enc_h,
            mean: post.mean,
            logvar: post.logvar,
            noise: noise.to_vec(),
            z,
            dec_h,
            logits,
            head_h1,
            head_h2,
            pred,
            recon,
            kl,
            mse,
        })
    }

    /// Loss with an explicit reparameterization noise draw per sample.
    pub fn loss_with_noise(
        &self,
        batch: &[TokenSeq],
        props: &[Vec<f64>],
        alpha: f64,
        beta: f64,
        noise: &[Vec<f64>],
    ) -> Result<LossBreakdown> {
        self.check_batch(batch, props, noise)?;
        let (mut recon, mut kl, mut mse) = (0.0, 0.0, 0.0);
        for ((seq, y), eps) in batch.iter().zip(props).zip(noise) {
            let t = self.forward(seq, y, eps)?;
            recon += t.recon;
            kl += t.kl;
            mse += t.mse;
        }
        let b = batch.len() as f64;
        Ok(LossBreakdown::combine(recon / b, kl / b, mse / b, alpha, beta))
    }

    /// Loss with fresh N(0, I) noise.
    pub fn loss<R: Rng + ?Sized>(
        &self,
        batch: &[TokenSeq],
        props: &[Vec<f64>],
        alpha: f64,
        beta: f64,
        rng: &mut R,
    ) -> Result<LossBreakdown> {
        let noise = self.draw_noise(batch.len(), rng);
        self.loss_with_noise(batch, props, alpha, beta, &noise)
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..self.dims.latent).map(|_| StandardNormal.sample(rng)).collect())
            .collect()
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(
        &self,
        batch: &[TokenSeq],
        props: &[Vec<f64>],
        alpha: f64,
        beta: f64,
        noise: &[Vec<f64>],
    ) -> Result<(LossBreakdown, Vec<f64>)> {
        self.check_batch(batch, props, noise)?;
        let mut grad = vec![0.0; self.layout.total];
        let (mut recon, mut kl, mut mse) = (0.0, 0.0, 0.0);
        let scale = 1.0 / batch.len() as f64;
        for ((seq, y), eps) in batch.iter().zip(props).zip(noise) {
            let t = self.forward(seq, y, eps)?;
            recon += t.recon;
            kl += t.kl;
            mse += t.mse;
            self.backward(&t, y, alpha * scale, beta * scale, scale, &mut grad);
        }
        let b = batch.len() as f64;
        Ok((LossBreakdown::combine(recon / b, kl / b, mse / b, alpha, beta), grad))
    }

    fn backward(&self, t: &Trace, target: &[f64], alpha: f64, beta: f64, recon_w: f64, grad: &mut [f64]) {
        let l = &self.layout;
        let d = &self.dims;
        let v = d.vocab;
        let p = &self.params;

        // reconstruction: softmax minus one-hot on scored positions
        let mut dlogits = vec![0.0; t.logits.len()];
        for (i, &tok) in t.tokens[..t.scored].iter().enumerate() {
            let row = &t.logits[i * v..(i + 1) * v];
            let lse = log_sum_exp(row);
            for (g, &x) in dlogits[i * v..(i + 1) * v].iter_mut().zip(row) {
                *g = recon_w * libm::exp(x - lse);
            }
            dlogits[i * v + tok] -= recon_w;
        }
        let mut dh = vec![0.0; HIDDEN];
        {
            let (dw, db) = split_pair(grad, &l.dec_w2, &l.dec_b2);
            affine_back(&p[l.dec_w2.clone()], &t.dec_h, &dlogits, dw, db, Some(&mut dh));
        }
        let da: Vec<f64> = dh.iter().zip(&t.dec_h).map(|(g, h)| g * (1.0 - h * h)).collect();
        let mut dz = vec![0.0; d.latent];
        {
            let (dw, db) = split_pair(grad, &l.dec_w1, &l.dec_b1);
            affine_back(&p[l.dec_w1.clone()], &t.z, &da, dw, db, Some(&mut dz));
        }

        // property head
        if alpha != 0.0 {
            let k = d.props as f64;
            let dpred: Vec<f64> = t
                .pred
                .iter()
                .zip(target)
                .map(|(q, y)| alpha * 2.0 * (q - y) / k)
                .collect();
            let mut dh2 = vec![0.0; HIDDEN];
            {
                let (dw, db) = split_pair(grad, &l.head_w3, &l.head_b3);
                affine_back(&p[l.head_w3.clone()], &t.head_h2, &dpred, dw, db, Some(&mut dh2));
            }
            let da2: Vec<f64> = dh2.iter().zip(&t.head_h2).map(|(g, h)| g * (1.0 - h * h)).collect();
            let mut dh1 = vec![0.0; HIDDEN];
            {
                let (dw, db) = split_pair(grad, &l.head_w2, &l.head_b2);
                affine_back(&p[l.head_w2.clone()], &t.head_h1, &da2, dw, db, Some(&mut dh1));
            }
            let da1: Vec<f64> = dh1.iter().zip(&t.head_h1).map(|(g, h)| g * (1.0 - h * h)).collect();
            let mut dz_head = vec![0.0; d.latent];
            {
                let (dw, db) = split_pair(grad, &l.head_w1, &l.head_b1);
                affine_back(&p[l.head_w1.clone()], &t.z, &da1, dw, db, Some(&mut dz_head));
            }
            dz.iter_mut().zip(&dz_head).for_each(|(a, b)| *a += b);
        }

        // reparameterization and KL
        let mut dmean = vec![0.0; d.latent];
        let mut dlogvar = vec![0.0; d.latent];
        for j in 0..d.latent {
            let sigma = libm::exp(0.5 * t.logvar[j]);
            dmean[j] = dz[j] + beta * t.mean[j];
            dlogvar[j] = dz[j] * t.noise[j] * 0.5 * sigma + beta * 0.5 * (libm::exp(t.logvar[j]) - 1.0);
        }

        // encoder
        let mut dh_enc = vec![0.0; HIDDEN];
        let mut tmp = vec![0.0; HIDDEN];
        {
            let (dw, db) = split_pair(grad, &l.mean_w, &l.mean_b);
            affine_back(&p[l.mean_w.clone()], &t.enc_h, &dmean, dw, db, Some(&mut tmp));
        }
        dh_enc.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        {
            let (dw, db) = split_pair(grad, &l.logvar_w, &l.logvar_b);
            affine_back(&p[l.logvar_w.clone()], &t.enc_h, &dlogvar, dw, db, Some(&mut tmp));
        }
        dh_enc.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        let da_enc: Vec<f64> = dh_enc.iter().zip(&t.enc_h).map(|(g, h)| g * (1.0 - h * h)).collect();
        let mut dinput = vec![0.0; t.input.len()];
        {
            let (dw, db) = split_pair(grad, &l.enc_w, &l.enc_b);
            affine_back(&p[l.enc_w.clone()], &t.input, &da_enc, dw, db, Some(&mut dinput));
        }
        let e = d.embed;
        let table = &mut grad[l.embedding.clone()];
        for (pos, &tok) in t.tokens.iter().enumerate() {
            for (g, dv) in table[tok * e..(tok + 1) * e].iter_mut().zip(&dinput[pos * e..(pos + 1) * e]) {
                *g += dv;
            }
        }
    }
}

/// Disjoint mutable views of a weight block and the bias block that
/// immediately follows it.
fn split_pair<'a>(grad: &'a mut [f64], w: &Range<usize>, b: &Range<usize>) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert_eq!(w.end, b.start);
    let (dw, rest) = grad[w.start..b.end].split_at_mut(w.len());
    (dw, rest)
}

/// Closed-form `KL(N(mean, exp(logvar)) || N(0, I))`.
pub fn kl_divergence(mean: &[f64], logvar: &[f64]) -> f64 {
    -0.5 * mean
        .iter()
        .zip(logvar)
        .map(|(m, lv)| 1.0 + lv - m * m - libm::exp(*lv))
        .sum::<f64>()
}

/// `z = mean + exp(logvar / 2) * noise`.
pub fn reparameterize_with(mean: &[f64], logvar: &[f64], noise: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(logvar)
        .zip(noise)
        .map(|((m, lv), e)| m + libm::exp(0.5 * lv) * e)
        .collect()
}

/// Sample `z` and return it with the noise that produced it.
pub fn reparameterize<R: Rng + ?Sized>(mean: &[f64], logvar: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let noise: Vec<f64> = mean.iter().map(|_| StandardNormal.sample(rng)).collect();
    (reparameterize_with(mean, logvar, &noise), noise)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from `softmax(row)` with uniform `u` in `[0, 1)`.
fn sample_softmax(row: &[f64], u: f64) -> usize {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = row.iter().map(|v| libm::exp(v - max)).collect();
    let target = u * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    row.len() - 1
}
