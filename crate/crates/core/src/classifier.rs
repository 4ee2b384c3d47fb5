//! Linear softmax classifier used for both the teacher and the student.
//!
//! Parameters are f64 end to end; feature storage stays f32 and is widened
//! on use. The model is immutable during scoring, so it can be shared
//! across threads; training mutates one instance on one thread.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MODEL_MAGIC: [u8; 4] = *b"SSLM";
const MODEL_VERSION: u8 = 0x01;

/// Weight matrix (num_classes x dim, row-major) plus a bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    num_classes: usize,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Parameter-shaped gradient, as produced by [`SoftmaxClassifier::loss_and_grad`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxClassifier {
    /// Seeded initialization: weights uniform in (-1/sqrt(dim), 1/sqrt(dim)),
    /// bias zero.
    pub fn init(num_classes: usize, dim: usize, seed: u64) -> Result<Self> {
        Self::check_shape(num_classes, dim)?;
        let bound = 1.0 / (dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..num_classes * dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Ok(Self {
            num_classes,
            dim,
            weights,
            bias: vec![0.0; num_classes],
        })
    }

    /// All-zero model.
    pub fn zeros(num_classes: usize, dim: usize) -> Result<Self> {
        Self::check_shape(num_classes, dim)?;
        Ok(Self {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        })
    }

    pub fn from_parts(
        num_classes: usize,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        Self::check_shape(num_classes, dim)?;
        if weights.len() != num_classes * dim || bias.len() != num_classes {
            return Err(Error::data("classifier: parameter shape mismatch"));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("classifier: non-finite parameter"));
        }
        Ok(Self {
            num_classes,
            dim,
            weights,
            bias,
        })
    }

    fn check_shape(num_classes: usize, dim: usize) -> Result<()> {
        if num_classes == 0 || dim == 0 {
            return Err(Error::config(
                "classifier: num_classes and dim must be positive",
            ));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Affine map weights * x + bias.
    pub fn logits(&self, x: &[f32]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::data(format!(
                "classifier: input length {} != dim {}",
                x.len(),
                self.dim
            )));
        }
        let mut out = Vec::with_capacity(self.num_classes);
        for l in 0..self.num_classes {
            let row = &self.weights[l * self.dim..(l + 1) * self.dim];
            let mut acc = self.bias[l];
            for (w, &v) in row.iter().zip(x) {
                acc += w * v as f64;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Softmax probabilities for one input.
    pub fn probabilities(&self, x: &[f32]) -> Result<Vec<f64>> {
        softmax(&self.logits(x)?)
    }

    /// Mean cross-entropy loss over the batch and the gradient of that mean
    /// with respect to all parameters. The per-example gradient with
    /// respect to the logits is softmax(z) - onehot(label).
    pub fn loss_and_grad(&self, batch: &[(&[f32], u32)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::data("loss_and_grad: empty batch"));
        }
        let mut grad_w = vec![0.0; self.num_classes * self.dim];
        let mut grad_b = vec![0.0; self.num_classes];
        let mut loss = 0.0;
        for &(x, label) in batch {
            if label as usize >= self.num_classes {
                return Err(Error::data(format!(
                    "loss_and_grad: label {label} >= num_classes {}",
                    self.num_classes
                )));
            }
            let z = self.logits(x)?;
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = z.iter().map(|v| (v - max).exp()).sum();
            let log_sum_exp = max + sum_exp.ln();
            loss += log_sum_exp - z[label as usize];
            for l in 0..self.num_classes {
                let p = (z[l] - max).exp() / sum_exp;
                let delta = p - if l == label as usize { 1.0 } else { 0.0 };
                grad_b[l] += delta;
                let row = &mut grad_w[l * self.dim..(l + 1) * self.dim];
                for (g, &v) in row.iter_mut().zip(x) {
                    *g += delta * v as f64;
                }
            }
        }
        let n = batch.len() as f64;
        loss /= n;
        for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
            *g /= n;
        }
        Ok((
            loss,
            Gradients {
                weights: grad_w,
                bias: grad_b,
            },
        ))
    }

    /// The k highest-probability classes, descending, ties broken by lower
    /// class index.
    pub fn predict_topk(&self, x: &[f32], k: usize) -> Result<Vec<(u32, f64)>> {
        if k == 0 || k > self.num_classes {
            return Err(Error::config(format!(
                "predict_topk: k={k} outside [1, {}]",
                self.num_classes
            )));
        }
        let probs = self.probabilities(x)?;
        let mut order: Vec<usize> = (0..self.num_classes).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        Ok(order[..k]
            .iter()
            .map(|&l| (l as u32, probs[l]))
            .collect())
    }

    /// Apply one SGD update: param <- param - lr * (grad + weight_decay * param).
    pub fn apply_update(&mut self, grad: &Gradients, lr: f64, weight_decay: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= lr * (g + weight_decay * *w);
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * (g + weight_decay * *b);
        }
    }

    /// Binary model file: magic, version, u32 num_classes, u32 dim,
    /// weights row-major as f64, then biases as f64. Little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        w.write_all(&MODEL_MAGIC)?;
        w.write_all(&[MODEL_VERSION])?;
        w.write_all(&(self.num_classes as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in self.weights.iter().chain(self.bias.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| Error::data(format!("model file {}: {e}", path.display())))?;
        if magic != MODEL_MAGIC {
            return Err(Error::data(format!(
                "model file {}: bad magic {magic:02x?}",
                path.display()
            )));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)
            .map_err(|e| Error::data(format!("model file {}: {e}", path.display())))?;
        if version[0] != MODEL_VERSION {
            return Err(Error::data(format!(
                "model file {}: unsupported version {}",
                path.display(),
                version[0]
            )));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)
            .map_err(|e| Error::data(format!("model file {}: {e}", path.display())))?;
        let num_classes = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)
            .map_err(|e| Error::data(format!("model file {}: {e}", path.display())))?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        let read_f64 = |r: &mut BufReader<File>| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)
                .map_err(|e| Error::data(format!("model file {}: truncated: {e}", path.display())))?;
            Ok(f64::from_le_bytes(b))
        };
        let mut weights = Vec::with_capacity(num_classes * dim);
        for _ in 0..num_classes * dim {
            weights.push(read_f64(&mut r)?);
        }
        let mut bias = Vec::with_capacity(num_classes);
        for _ in 0..num_classes {
            bias.push(read_f64(&mut r)?);
        }
        Self::from_parts(num_classes, dim, weights, bias)
    }
}

/// Numerically safe softmax: max-shifted so large logits cannot overflow.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::data("softmax: empty input"));
    }
    if z.iter().any(|v| v.is_nan()) {
        return Err(Error::numeric("softmax: NaN input"));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / sum).collect())
}
