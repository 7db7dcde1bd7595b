//! Gaussian variational autoencoder for feature re-representation.
//!
//! One hidden tanh layer on each side. The encoder maps an input vector to
//! a diagonal Gaussian (mu_z, logvar_z) over the latent space; the decoder
//! maps a latent draw back to a diagonal Gaussian (mu_x, logvar_x) over the
//! input space. Training ascends the variational lower bound
//!
//! ```text
//! L(x) = -KL(q(z|x) || N(0, I)) + log p(x | z~),   z~ = mu_z + sigma_z * eps
//! ```
//!
//! with Adam on minibatches, one standard-normal draw per data point per
//! epoch, and all noise derived from counter-based streams of (seed, epoch,
//! index) so training is bit-reproducible. Latent features for
//! classification are the encoder means, with no sampling.

use crate::error::{Error, Result};
use crate::jsonio;
use crate::linalg::Matrix;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

const LOGVAR_CLAMP: f64 = 10.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// stream tags for noise derivation
const STREAM_INIT: u64 = 0x494e4954; // "INIT"
const STREAM_PERM: u64 = 0x5045524d; // "PERM"
const STREAM_NOISE: u64 = 0x4e4f4953; // "NOIS"

/// Architecture and training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    /// Weights start from N(0, init_std^2); biases start at zero.
    pub init_std: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl VaeConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, latent_dim: usize, seed: u64) -> Self {
        VaeConfig {
            input_dim,
            hidden_dim,
            latent_dim,
            init_std: 0.01,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 200,
            batch_size: 128,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.latent_dim >= self.input_dim {
            return Err(Error::InvalidConfig(format!(
                "need 0 < latent_dim ({}) < input_dim ({})",
                self.latent_dim, self.input_dim
            )));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden_dim must be at least 1".into()));
        }
        if !(self.init_std > 0.0 && self.learning_rate > 0.0 && self.adam_eps > 0.0) {
            return Err(Error::InvalidConfig(
                "init_std, learning_rate and adam_eps must be positive".into(),
            ));
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0)
            || !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0)
        {
            return Err(Error::InvalidConfig("adam betas must lie in (0, 1)".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Offsets of each named parameter block in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    enc_w1: (usize, usize),
    enc_b1: (usize, usize),
    enc_w_mu: (usize, usize),
    enc_b_mu: (usize, usize),
    enc_w_logvar: (usize, usize),
    enc_b_logvar: (usize, usize),
    dec_w1: (usize, usize),
    dec_b1: (usize, usize),
    dec_w_mu: (usize, usize),
    dec_b_mu: (usize, usize),
    dec_w_logvar: (usize, usize),
    dec_b_logvar: (usize, usize),
    total: usize,
}

impl Layout {
    fn new(cfg: &VaeConfig) -> Layout {
        let (d_in, d_h, d_z) = (cfg.input_dim, cfg.hidden_dim, cfg.latent_dim);
        let mut at = 0usize;
        let mut block = |len: usize| {
            let span = (at, at + len);
            at += len;
            span
        };
        Layout {
            enc_w1: block(d_h * d_in),
            enc_b1: block(d_h),
            enc_w_mu: block(d_z * d_h),
            enc_b_mu: block(d_z),
            enc_w_logvar: block(d_z * d_h),
            enc_b_logvar: block(d_z),
            dec_w1: block(d_h * d_z),
            dec_b1: block(d_h),
            dec_w_mu: block(d_in * d_h),
            dec_b_mu: block(d_in),
            dec_w_logvar: block(d_in * d_h),
            dec_b_logvar: block(d_in),
            total: at,
        }
    }

    fn weight_blocks(&self) -> [(usize, usize); 6] {
        [
            self.enc_w1,
            self.enc_w_mu,
            self.enc_w_logvar,
            self.dec_w1,
            self.dec_w_mu,
            self.dec_w_logvar,
        ]
    }
}

/// Trained model: configuration, flat parameters, and the per-epoch mean
/// ELBO trace recorded during training.
#[derive(Debug, Clone)]
pub struct VaeModel {
    pub config: VaeConfig,
    params: Vec<f64>,
    pub training_elbo_trace: Vec<f64>,
}

// y = W x + b with W stored row-major (rows x cols)
fn affine(w: &[f64], b: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    (0..rows)
        .map(|r| {
            let mut s = b[r];
            for c in 0..cols {
                s += w[r * cols + c] * x[c];
            }
            s
        })
        .collect()
}

// accumulates one affine layer's weight/bias gradients into the flat
// buffer at the given block offsets and returns dL/dx
#[allow(clippy::too_many_arguments)]
fn affine_backward(
    w: &[f64],
    x: &[f64],
    d_out: &[f64],
    rows: usize,
    cols: usize,
    grad: &mut [f64],
    w_off: usize,
    b_off: usize,
) -> Vec<f64> {
    for r in 0..rows {
        grad[b_off + r] += d_out[r];
        for c in 0..cols {
            grad[w_off + r * cols + c] += d_out[r] * x[c];
        }
    }
    let mut dx = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            dx[c] += w[r * cols + c] * d_out[r];
        }
    }
    dx
}

struct Forward {
    h1: Vec<f64>,
    mu_z: Vec<f64>,
    logvar_z: Vec<f64>,
    sigma_z: Vec<f64>,
    z: Vec<f64>,
    h2: Vec<f64>,
    mu_x: Vec<f64>,
    logvar_x_raw: Vec<f64>,
    logvar_x: Vec<f64>,
    kl: f64,
    recon: f64,
    elbo: f64,
}

impl VaeModel {
    /// Fresh model with N(0, init_std^2) weights and zero biases.
    pub fn init(cfg: &VaeConfig) -> Result<VaeModel> {
        cfg.validate()?;
        let layout = Layout::new(cfg);
        let mut params = vec![0.0; layout.total];
        let mut rng = Rng::from_words(&[cfg.seed, STREAM_INIT]);
        for (lo, hi) in layout.weight_blocks() {
            for p in &mut params[lo..hi] {
                *p = cfg.init_std * rng.normal();
            }
        }
        Ok(VaeModel {
            config: cfg.clone(),
            params,
            training_elbo_trace: Vec::new(),
        })
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.config)
    }

    fn block(&self, span: (usize, usize)) -> &[f64] {
        &self.params[span.0..span.1]
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    /// Flat view of all parameters (layer blocks in declaration order).
    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Encoder forward pass: one tanh hidden layer, then the two affine
    /// heads (mu_z, logvar_z).
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cfg = &self.config;
        if x.len() != cfg.input_dim {
            return Err(Error::DimensionMismatch {
                context: "vae encode",
                expected: cfg.input_dim,
                actual: x.len(),
            });
        }
        let l = self.layout();
        let mut h1 = affine(
            self.block(l.enc_w1),
            self.block(l.enc_b1),
            x,
            cfg.hidden_dim,
            cfg.input_dim,
        );
        for v in h1.iter_mut() {
            *v = v.tanh();
        }
        let mu = affine(
            self.block(l.enc_w_mu),
            self.block(l.enc_b_mu),
            &h1,
            cfg.latent_dim,
            cfg.hidden_dim,
        );
        let logvar = affine(
            self.block(l.enc_w_logvar),
            self.block(l.enc_b_logvar),
            &h1,
            cfg.latent_dim,
            cfg.hidden_dim,
        );
        Ok((mu, logvar))
    }

    /// Decoder forward pass to the reconstruction Gaussian (mu_x,
    /// logvar_x); logvar_x is clamped to [-10, 10].
    pub fn decode(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cfg = &self.config;
        if z.len() != cfg.latent_dim {
            return Err(Error::DimensionMismatch {
                context: "vae decode",
                expected: cfg.latent_dim,
                actual: z.len(),
            });
        }
        let l = self.layout();
        let mut h2 = affine(
            self.block(l.dec_w1),
            self.block(l.dec_b1),
            z,
            cfg.hidden_dim,
            cfg.latent_dim,
        );
        for v in h2.iter_mut() {
            *v = v.tanh();
        }
        let mu = affine(
            self.block(l.dec_w_mu),
            self.block(l.dec_b_mu),
            &h2,
            cfg.input_dim,
            cfg.hidden_dim,
        );
        let logvar = affine(
            self.block(l.dec_w_logvar),
            self.block(l.dec_b_logvar),
            &h2,
            cfg.input_dim,
            cfg.hidden_dim,
        )
        .into_iter()
        .map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP))
        .collect();
        Ok((mu, logvar))
    }

    fn forward(&self, x: &[f64], noise: &[f64]) -> Result<Forward> {
        let cfg = &self.config;
        if noise.len() != cfg.latent_dim {
            return Err(Error::DimensionMismatch {
                context: "vae noise",
                expected: cfg.latent_dim,
                actual: noise.len(),
            });
        }
        let l = self.layout();
        let mut h1 = affine(
            self.block(l.enc_w1),
            self.block(l.enc_b1),
            x,
            cfg.hidden_dim,
            cfg.input_dim,
        );
        for v in h1.iter_mut() {
            *v = v.tanh();
        }
        let mu_z = affine(
            self.block(l.enc_w_mu),
            self.block(l.enc_b_mu),
            &h1,
            cfg.latent_dim,
            cfg.hidden_dim,
        );
        let logvar_z = affine(
            self.block(l.enc_w_logvar),
            self.block(l.enc_b_logvar),
            &h1,
            cfg.latent_dim,
            cfg.hidden_dim,
        );
        let sigma_z: Vec<f64> = logvar_z.iter().map(|v| (0.5 * v).exp()).collect();
        // reparametrization: z = mu + sigma * eps
        let z: Vec<f64> = mu_z
            .iter()
            .zip(&sigma_z)
            .zip(noise)
            .map(|((m, s), e)| m + s * e)
            .collect();
        let mut h2 = affine(
            self.block(l.dec_w1),
            self.block(l.dec_b1),
            &z,
            cfg.hidden_dim,
            cfg.latent_dim,
        );
        for v in h2.iter_mut() {
            *v = v.tanh();
        }
        let mu_x = affine(
            self.block(l.dec_w_mu),
            self.block(l.dec_b_mu),
            &h2,
            cfg.input_dim,
            cfg.hidden_dim,
        );
        let logvar_x_raw = affine(
            self.block(l.dec_w_logvar),
            self.block(l.dec_b_logvar),
            &h2,
            cfg.input_dim,
            cfg.hidden_dim,
        );
        let logvar_x: Vec<f64> = logvar_x_raw
            .iter()
            .map(|v| v.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP))
            .collect();

        // KL(q || N(0, I)) in closed form for diagonal Gaussians
        let kl = 0.5
            * mu_z
                .iter()
                .zip(&logvar_z)
                .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
                .sum::<f64>();
        // diagonal-Gaussian log density of x under the decoder
        let recon = x
            .iter()
            .zip(mu_x.iter().zip(&logvar_x))
            .map(|(xv, (m, lv))| {
                let d = xv - m;
                -HALF_LN_2PI - 0.5 * lv - 0.5 * d * d * (-lv).exp()
            })
            .sum::<f64>();
        let elbo = recon - kl;
        Ok(Forward {
            h1,
            mu_z,
            logvar_z,
            sigma_z,
            z,
            h2,
            mu_x,
            logvar_x_raw,
            logvar_x,
            kl,
            recon,
            elbo,
        })
    }

    /// The per-example variational lower bound with an explicit noise draw.
    pub fn elbo(&self, x: &[f64], noise: &[f64]) -> Result<f64> {
        if x.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                context: "vae elbo",
                expected: self.config.input_dim,
                actual: x.len(),
            });
        }
        let f = self.forward(x, noise)?;
        for (name, value) in [
            ("mu_z", f.mu_z.iter().sum::<f64>()),
            ("logvar_z", f.logvar_z.iter().sum::<f64>()),
            ("mu_x", f.mu_x.iter().sum::<f64>()),
            ("logvar_x", f.logvar_x.iter().sum::<f64>()),
            ("kl", f.kl),
            ("reconstruction", f.recon),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("elbo term {name}"),
                });
            }
        }
        Ok(f.elbo)
    }

    /// ELBO plus its gradient with respect to every parameter, accumulated
    /// into `grad` (same flat layout as [`VaeModel::parameters`]).
    pub fn elbo_with_grads(&self, x: &[f64], noise: &[f64], grad: &mut [f64]) -> Result<f64> {
        let cfg = &self.config;
        if x.len() != cfg.input_dim {
            return Err(Error::DimensionMismatch {
                context: "vae elbo",
                expected: cfg.input_dim,
                actual: x.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                context: "vae gradient buffer",
                expected: self.params.len(),
                actual: grad.len(),
            });
        }
        let f = self.forward(x, noise)?;
        let l = self.layout();
        let (d_in, d_h, d_z) = (cfg.input_dim, cfg.hidden_dim, cfg.latent_dim);

        // reconstruction head gradients
        let d_mu_x: Vec<f64> = x
            .iter()
            .zip(f.mu_x.iter().zip(&f.logvar_x))
            .map(|(xv, (m, lv))| (xv - m) * (-lv).exp())
            .collect();
        let d_logvar_x: Vec<f64> = x
            .iter()
            .zip(f.mu_x.iter().zip(f.logvar_x.iter().zip(&f.logvar_x_raw)))
            .map(|(xv, (m, (lv, raw)))| {
                if raw.abs() >= LOGVAR_CLAMP {
                    0.0 // clamped: no gradient flows
                } else {
                    let d = xv - m;
                    -0.5 + 0.5 * d * d * (-lv).exp()
                }
            })
            .collect();

        let dh2_a = affine_backward(
            self.block(l.dec_w_mu),
            &f.h2,
            &d_mu_x,
            d_in,
            d_h,
            grad,
            l.dec_w_mu.0,
            l.dec_b_mu.0,
        );
        let dh2_b = affine_backward(
            self.block(l.dec_w_logvar),
            &f.h2,
            &d_logvar_x,
            d_in,
            d_h,
            grad,
            l.dec_w_logvar.0,
            l.dec_b_logvar.0,
        );
        let d_a2: Vec<f64> = (0..d_h)
            .map(|i| (dh2_a[i] + dh2_b[i]) * (1.0 - f.h2[i] * f.h2[i]))
            .collect();
        let dz = affine_backward(
            self.block(l.dec_w1),
            &f.z,
            &d_a2,
            d_h,
            d_z,
            grad,
            l.dec_w1.0,
            l.dec_b1.0,
        );

        // through the reparametrization plus the KL term
        let d_mu_z: Vec<f64> = (0..cfg.latent_dim).map(|j| dz[j] - f.mu_z[j]).collect();
        let d_logvar_z: Vec<f64> = (0..cfg.latent_dim)
            .map(|j| 0.5 * dz[j] * noise[j] * f.sigma_z[j] - 0.5 * (f.logvar_z[j].exp() - 1.0))
            .collect();

        let dh1_a = affine_backward(
            self.block(l.enc_w_mu),
            &f.h1,
            &d_mu_z,
            d_z,
            d_h,
            grad,
            l.enc_w_mu.0,
            l.enc_b_mu.0,
        );
        let dh1_b = affine_backward(
            self.block(l.enc_w_logvar),
            &f.h1,
            &d_logvar_z,
            d_z,
            d_h,
            grad,
            l.enc_w_logvar.0,
            l.enc_b_logvar.0,
        );
        let d_a1: Vec<f64> = (0..d_h)
            .map(|i| (dh1_a[i] + dh1_b[i]) * (1.0 - f.h1[i] * f.h1[i]))
            .collect();
        affine_backward(
            self.block(l.enc_w1),
            x,
            &d_a1,
            d_h,
            d_in,
            grad,
            l.enc_w1.0,
            l.enc_b1.0,
        );

        Ok(f.elbo)
    }

    /// Encoder means for every row; no sampling is involved.
    pub fn latent_features(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                context: "latent_features",
                expected: self.config.input_dim,
                actual: features.cols(),
            });
        }
        let mut out = Matrix::zeros(features.rows(), self.config.latent_dim);
        for i in 0..features.rows() {
            let (mu, _) = self.encode(features.row(i))?;
            out.row_mut(i).copy_from_slice(&mu);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let l = self.layout();
        let doc = VaeModelJson {
            config: self.config.clone(),
            enc_w1: self.block(l.enc_w1).to_vec(),
            enc_b1: self.block(l.enc_b1).to_vec(),
            enc_w_mu: self.block(l.enc_w_mu).to_vec(),
            enc_b_mu: self.block(l.enc_b_mu).to_vec(),
            enc_w_logvar: self.block(l.enc_w_logvar).to_vec(),
            enc_b_logvar: self.block(l.enc_b_logvar).to_vec(),
            dec_w1: self.block(l.dec_w1).to_vec(),
            dec_b1: self.block(l.dec_b1).to_vec(),
            dec_w_mu: self.block(l.dec_w_mu).to_vec(),
            dec_b_mu: self.block(l.dec_b_mu).to_vec(),
            dec_w_logvar: self.block(l.dec_w_logvar).to_vec(),
            dec_b_logvar: self.block(l.dec_b_logvar).to_vec(),
            training_elbo_trace: self.training_elbo_trace.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<VaeModel> {
        let doc: VaeModelJson = serde_json::from_str(text)?;
        doc.config.validate()?;
        let layout = Layout::new(&doc.config);
        let mut params = vec![0.0; layout.total];
        for (span, values) in [
            (layout.enc_w1, &doc.enc_w1),
            (layout.enc_b1, &doc.enc_b1),
            (layout.enc_w_mu, &doc.enc_w_mu),
            (layout.enc_b_mu, &doc.enc_b_mu),
            (layout.enc_w_logvar, &doc.enc_w_logvar),
            (layout.enc_b_logvar, &doc.enc_b_logvar),
            (layout.dec_w1, &doc.dec_w1),
            (layout.dec_b1, &doc.dec_b1),
            (layout.dec_w_mu, &doc.dec_w_mu),
            (layout.dec_b_mu, &doc.dec_b_mu),
            (layout.dec_w_logvar, &doc.dec_w_logvar),
            (layout.dec_b_logvar, &doc.dec_b_logvar),
        ] {
            if values.len() != span.1 - span.0 {
                return Err(Error::LengthMismatch {
                    context: "vae parameter block",
                    left: span.1 - span.0,
                    right: values.len(),
                });
            }
            params[span.0..span.1].copy_from_slice(values);
        }
        Ok(VaeModel {
            config: doc.config,
            params,
            training_elbo_trace: doc.training_elbo_trace,
        })
    }
}

/// Per-point training noise: the stream is keyed by (seed, epoch, index),
/// so draws do not depend on batch layout or execution order.
pub fn training_noise(seed: u64, epoch: usize, index: usize, latent_dim: usize) -> Vec<f64> {
    let mut rng = Rng::from_words(&[seed, STREAM_NOISE, epoch as u64, index as u64]);
    let mut out = vec![0.0; latent_dim];
    rng.fill_normal(&mut out);
    out
}

/// Trains a VAE by minibatch Adam ascent on the ELBO.
///
/// Inputs are expected standardized. Returns the model with its per-epoch
/// mean ELBO trace; training is deterministic given the config seed.
pub fn train(features: &Matrix, cfg: &VaeConfig) -> Result<VaeModel> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyInput { context: "vae train" });
    }
    if features.cols() != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            context: "vae train",
            expected: cfg.input_dim,
            actual: features.cols(),
        });
    }
    if !features.all_finite() {
        return Err(Error::NonFinite {
            context: "vae training features".into(),
        });
    }
    let n = features.rows();
    let mut model = VaeModel::init(cfg)?;
    let p = model.params.len();
    let mut grad = vec![0.0; p];
    let mut adam_m = vec![0.0; p];
    let mut adam_v = vec![0.0; p];
    let mut step = 0usize;
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::from_words(&[cfg.seed, STREAM_PERM, epoch as u64]).shuffle(&mut order);
        let mut epoch_elbo = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_elbo = 0.0;
            for &i in batch {
                let noise = training_noise(cfg.seed, epoch, i, cfg.latent_dim);
                let value = model.elbo_with_grads(features.row(i), &noise, &mut grad)?;
                if !value.is_finite() {
                    return Err(Error::VaeDiverged {
                        epoch,
                        batch: batch_no,
                        term: "elbo".into(),
                    });
                }
                batch_elbo += value;
            }
            epoch_elbo += batch_elbo;
            let inv = 1.0 / batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - cfg.adam_beta1.powi(step as i32);
            let bc2 = 1.0 - cfg.adam_beta2.powi(step as i32);
            for k in 0..p {
                let g = grad[k] * inv;
                adam_m[k] = cfg.adam_beta1 * adam_m[k] + (1.0 - cfg.adam_beta1) * g;
                adam_v[k] = cfg.adam_beta2 * adam_v[k] + (1.0 - cfg.adam_beta2) * g * g;
                let m_hat = adam_m[k] / bc1;
                let v_hat = adam_v[k] / bc2;
                // ascent on the ELBO
                model.params[k] += cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
            if model.params.iter().any(|v| !v.is_finite()) {
                return Err(Error::VaeDiverged {
                    epoch,
                    batch: batch_no,
                    term: "parameters".into(),
                });
            }
        }
        trace.push(epoch_elbo / n as f64);
    }
    model.training_elbo_trace = trace;
    Ok(model)
}

/// Closed-form KL(q || N(0, I)) for a diagonal Gaussian q.
pub fn gaussian_kl(mu: &[f64], logvar: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(logvar)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

#[derive(Serialize, Deserialize)]
struct VaeModelJson {
    config: VaeConfig,
    #[serde(with = "jsonio::f64_vec")]
    enc_w1: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    enc_b1: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    enc_w_mu: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    enc_b_mu: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    enc_w_logvar: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    enc_b_logvar: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_w1: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_b1: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_w_mu: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_b_mu: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_w_logvar: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    dec_b_logvar: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    training_elbo_trace: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn tiny_config(seed: u64) -> VaeConfig {
        let mut cfg = VaeConfig::new(4, 3, 2, seed);
        cfg.init_std = 0.1;
        cfg
    }

    #[test]
    fn zero_model_encodes_to_the_prior() {
        let cfg = tiny_config(0);
        let mut model = VaeModel::init(&cfg).unwrap();
        model.parameters_mut().iter_mut().for_each(|p| *p = 0.0);
        let (mu, logvar) = model.encode(&[0.3, -0.1, 2.0, 0.7]).unwrap();
        assert_eq!(mu, vec![0.0, 0.0]);
        assert_eq!(logvar, vec![0.0, 0.0]);
    }

    #[test]
    fn encode_dims_match_latent_dim() {
        for latent in [3usize, 5] {
            let cfg = VaeConfig::new(13, 10, latent, 7);
            let model = VaeModel::init(&cfg).unwrap();
            let x = vec![0.1; 13];
            let (mu, logvar) = model.encode(&x).unwrap();
            assert_eq!(mu.len(), latent);
            assert_eq!(logvar.len(), latent);
        }
    }

    #[test]
    fn encode_is_deterministic() {
        let cfg = VaeConfig::new(13, 10, 3, 21);
        let model = VaeModel::init(&cfg).unwrap();
        let x: Vec<f64> = (0..13).map(|i| (i as f64).sin()).collect();
        let (a, _) = model.encode(&x).unwrap();
        let (b, _) = model.encode(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn kl_closed_form_known_values() {
        assert_eq!(gaussian_kl(&[0.0], &[0.0]), 0.0);
        assert_eq!(gaussian_kl(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]), 0.0);
        // mu = 1, logvar = 0: KL = 1/2 (1 + 1 - 1 - 0) = 0.5
        assert!((gaussian_kl(&[1.0], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_is_nonnegative() {
        let mut rng = Rng::new(3);
        for _ in 0..500 {
            let mu: Vec<f64> = (0..4).map(|_| 3.0 * rng.normal()).collect();
            let lv: Vec<f64> = (0..4).map(|_| 2.0 * rng.normal()).collect();
            assert!(gaussian_kl(&mu, &lv) >= 0.0);
        }
    }

    #[test]
    fn kl_matches_monte_carlo_estimate() {
        // E_q[log q(z) - log p(z)] estimated by sampling
        let mut rng = Rng::new(44);
        let mu = vec![0.7, -0.4];
        let lv = vec![0.3, -0.8];
        let closed = gaussian_kl(&mu, &lv);
        let draws = 100_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..draws {
            let mut term = 0.0;
            for j in 0..2 {
                let sigma = (0.5 * lv[j]).exp();
                let z = mu[j] + sigma * rng.normal();
                let log_q = -HALF_LN_2PI - 0.5 * lv[j] - 0.5 * (z - mu[j]).powi(2) / lv[j].exp();
                let log_p = -HALF_LN_2PI - 0.5 * z * z;
                term += log_q - log_p;
            }
            sum += term;
            sumsq += term * term;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!(
            (closed - mean).abs() <= 3.0 * se,
            "closed {closed} vs mc {mean} (se {se})"
        );
    }

    #[test]
    fn elbo_kl_term_vanishes_at_the_prior() {
        let cfg = tiny_config(1);
        let mut model = VaeModel::init(&cfg).unwrap();
        model.parameters_mut().iter_mut().for_each(|p| *p = 0.0);
        // zero network: mu_z = logvar_z = 0, so elbo = recon only; with
        // mu_x = logvar_x = 0 the density of x = 0 is d * (-1/2 ln 2pi)
        let x = vec![0.0; 4];
        let noise = vec![0.0; 2];
        let elbo = model.elbo(&x, &noise).unwrap();
        assert!((elbo - (-4.0 * HALF_LN_2PI)).abs() < 1e-12);
    }

    #[test]
    fn reparametrization_with_zero_noise_yields_the_mean() {
        let cfg = tiny_config(5);
        let model = VaeModel::init(&cfg).unwrap();
        let x = vec![0.4, -0.2, 0.9, 0.0];
        let f = model.forward(&x, &[0.0, 0.0]).unwrap();
        for (z, m) in f.z.iter().zip(&f.mu_z) {
            assert_eq!(z.to_bits(), m.to_bits());
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        // 4 -> 3 -> 2 network, central differences with step 1e-5
        let cfg = tiny_config(9);
        let mut model = VaeModel::init(&cfg).unwrap();
        let mut rng = Rng::new(123);
        for trial in 0..3 {
            let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let noise: Vec<f64> = (0..2).map(|_| rng.normal()).collect();
            let mut grad = vec![0.0; model.parameter_count()];
            model.elbo_with_grads(&x, &noise, &mut grad).unwrap();
            let h = 1e-5;
            for k in 0..model.parameter_count() {
                let orig = model.parameters()[k];
                model.parameters_mut()[k] = orig + h;
                let up = model.elbo(&x, &noise).unwrap();
                model.parameters_mut()[k] = orig - h;
                let down = model.elbo(&x, &noise).unwrap();
                model.parameters_mut()[k] = orig;
                let fd = (up - down) / (2.0 * h);
                let denom = grad[k].abs().max(fd.abs()).max(1e-4);
                assert!(
                    (grad[k] - fd).abs() / denom <= 1e-4,
                    "trial {trial} param {k}: analytic {} vs fd {fd}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn initial_weight_std_is_near_configured_value() {
        let cfg = VaeConfig::new(40, 100, 10, 31); // 15_000 weights
        let model = VaeModel::init(&cfg).unwrap();
        let layout = model.layout();
        let mut weights = Vec::new();
        for (lo, hi) in layout.weight_blocks() {
            weights.extend_from_slice(&model.parameters()[lo..hi]);
        }
        assert!(weights.len() >= 10_000, "{} weights", weights.len());
        let mean: f64 = weights.iter().sum::<f64>() / weights.len() as f64;
        let std = (weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>()
            / weights.len() as f64)
            .sqrt();
        assert!(
            (std - 0.01).abs() <= 0.002,
            "initial weight std {std} is not within 20% of 0.01"
        );
        // biases start at zero
        assert!(model.block(layout.enc_b1).iter().all(|&b| b == 0.0));
    }

    fn cluster_features(seed: u64, n: usize, dim: usize) -> Matrix {
        let mut rng = Rng::new(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let center = if i % 2 == 0 { 1.5 } else { -1.5 };
                (0..dim).map(|_| center + 0.5 * rng.normal()).collect()
            })
            .collect();
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn training_improves_the_elbo_trace() {
        let features = cluster_features(17, 120, 6);
        let mut cfg = VaeConfig::new(6, 12, 2, 99);
        cfg.epochs = 80;
        cfg.batch_size = 32;
        cfg.learning_rate = 5e-3;
        let model = train(&features, &cfg).unwrap();
        let trace = &model.training_elbo_trace;
        assert_eq!(trace.len(), 80);
        let tail_start = trace.len() - trace.len() / 10;
        let tail_mean: f64 =
            trace[tail_start..].iter().sum::<f64>() / (trace.len() - tail_start) as f64;
        assert!(
            tail_mean > trace[0],
            "tail mean {tail_mean} vs first epoch {}",
            trace[0]
        );
    }

    #[test]
    fn training_is_bit_reproducible() {
        let features = cluster_features(23, 40, 5);
        let mut cfg = VaeConfig::new(5, 8, 2, 7);
        cfg.epochs = 10;
        cfg.batch_size = 16;
        let a = train(&features, &cfg).unwrap();
        let b = train(&features, &cfg).unwrap();
        for (x, y) in a.parameters().iter().zip(b.parameters()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.training_elbo_trace.iter().zip(&b.training_elbo_trace) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn latent_features_are_encoder_means() {
        let features = cluster_features(31, 20, 6);
        let mut cfg = VaeConfig::new(6, 10, 3, 3);
        cfg.epochs = 5;
        let model = train(&features, &cfg).unwrap();
        let latent = model.latent_features(&features).unwrap();
        assert_eq!((latent.rows(), latent.cols()), (20, 3));
        for i in 0..20 {
            let (mu, _) = model.encode(features.row(i)).unwrap();
            for (a, b) in latent.row(i).iter().zip(&mu) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn latent_features_of_duplicated_rows_are_duplicated() {
        let row: Vec<f64> = vec![0.5, -0.25, 0.75, 0.1, 0.0, -0.6];
        let features = Matrix::from_rows(vec![row.clone(), row]).unwrap();
        let cfg = VaeConfig::new(6, 10, 3, 3);
        let model = VaeModel::init(&cfg).unwrap();
        let latent = model.latent_features(&features).unwrap();
        assert_eq!(latent.row(0), latent.row(1));
    }

    #[test]
    fn zero_weight_model_maps_everything_to_zero() {
        let cfg = VaeConfig::new(6, 10, 3, 3);
        let mut model = VaeModel::init(&cfg).unwrap();
        model.parameters_mut().iter_mut().for_each(|p| *p = 0.0);
        let features = cluster_features(1, 4, 6);
        let latent = model.latent_features(&features).unwrap();
        assert!(latent.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let cfg = tiny_config(2);
        let model = VaeModel::init(&cfg).unwrap();
        assert!(model.encode(&[0.0; 3]).is_err());
        assert!(model.decode(&[0.0; 3]).is_err());
        assert!(model.elbo(&[0.0; 4], &[0.0; 3]).is_err());
        assert!(model
            .latent_features(&Matrix::zeros(2, 5))
            .is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let features = cluster_features(5, 30, 5);
        let mut cfg = VaeConfig::new(5, 7, 2, 11);
        cfg.epochs = 6;
        let model = train(&features, &cfg).unwrap();
        let text = model.to_json().unwrap();
        let back = VaeModel::from_json(&text).unwrap();
        assert_eq!(model.parameter_count(), back.parameter_count());
        for (a, b) in model.parameters().iter().zip(back.parameters()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // encoded features agree exactly
        let x = features.row(3);
        let (mu_a, _) = model.encode(x).unwrap();
        let (mu_b, _) = back.encode(x).unwrap();
        for (a, b) in mu_a.iter().zip(&mu_b) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
