//! Dense and recurrent layers with hand-written backpropagation, plus the
//! two optimisers the trainable models use.
//!
//! Weights are row-major `Vec<f64>`; a layer's gradient is a value of the same
//! type, so gradient accumulation, clipping and optimiser steps all work on
//! anything implementing [`Parameters`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform access to every trainable tensor of a model, in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_parameters();
        if flat.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// `self += other`, tensor by tensor.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

pub fn global_norm(p: &impl Parameters) -> f64 {
    p.tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grad` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grad: &mut impl Parameters, max_norm: f64) -> f64 {
    let norm = global_norm(grad);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for t in grad.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

pub fn sgd_step<P: Parameters>(params: &mut P, grad: &P, learning_rate: f64) {
    for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
        p.iter_mut().zip(g).for_each(|(x, d)| *x -= learning_rate * d);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(learning_rate: f64, n_params: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grad: &P) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
            for (x, &d) in p.iter_mut().zip(g) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * d;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * d * d;
                let m_hat = self.m[k] / bc1;
                let v_hat = self.v[k] / bc2;
                *x -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
    }
}

fn uniform(rng: &mut impl Rng, n: usize, limit: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-limit..limit)).collect()
}

/// `y = W x + b` with `W` of shape `n_out x n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        Self {
            n_in,
            n_out,
            w: uniform(rng, n_in * n_out, limit),
            b: vec![0.0; n_out],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            n_in: self.n_in,
            n_out: self.n_out,
            w: vec![0.0; self.w.len()],
            b: vec![0.0; self.b.len()],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| self.b[o] + dot(&self.w[o * self.n_in..(o + 1) * self.n_in], x))
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        let mut dx = vec![0.0; self.n_in];
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.b[o] += d;
            let row = o * self.n_in;
            for i in 0..self.n_in {
                grad.w[row + i] += d * x[i];
                dx[i] += d * self.w[row + i];
            }
        }
        dx
    }
}

impl Parameters for Linear {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Single-layer Elman recurrence `h_t = tanh(W_x x_t + W_h h_{t-1} + b)`, `h_{-1} = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elman {
    pub n_in: usize,
    pub n_hidden: usize,
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
}

impl Elman {
    /// Glorot-uniform input weights and a small recurrent matrix so the
    /// untrained recurrence is contractive.
    pub fn new(n_in: usize, n_hidden: usize, rng: &mut impl Rng) -> Self {
        let lx = (6.0 / (n_in + n_hidden) as f64).sqrt();
        let lh = 0.5 / (n_hidden as f64).sqrt();
        Self {
            n_in,
            n_hidden,
            w_x: uniform(rng, n_hidden * n_in, lx),
            w_h: uniform(rng, n_hidden * n_hidden, lh),
            b: vec![0.0; n_hidden],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            n_in: self.n_in,
            n_hidden: self.n_hidden,
            w_x: vec![0.0; self.w_x.len()],
            w_h: vec![0.0; self.w_h.len()],
            b: vec![0.0; self.b.len()],
        }
    }

    /// Hidden state after every step.
    pub fn forward(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (ni, nh) = (self.n_in, self.n_hidden);
        let mut hs: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
        let zero = vec![0.0; nh];
        for x in xs {
            let prev = hs.last().unwrap_or(&zero);
            let h = (0..nh)
                .map(|j| {
                    let a = self.b[j]
                        + dot(&self.w_x[j * ni..(j + 1) * ni], x)
                        + dot(&self.w_h[j * nh..(j + 1) * nh], prev);
                    a.tanh()
                })
                .collect();
            hs.push(h);
        }
        hs
    }

    /// Backpropagation through time. `dhs[t]` is the loss gradient arriving
    /// directly at `h_t`; returns `dL/dx_t` for every step.
    pub fn backward(&self, xs: &[Vec<f64>], hs: &[Vec<f64>], dhs: &[Vec<f64>], grad: &mut Elman) -> Vec<Vec<f64>> {
        let (ni, nh) = (self.n_in, self.n_hidden);
        let mut dxs = vec![vec![0.0; ni]; xs.len()];
        let mut carry = vec![0.0; nh];
        let mut da = vec![0.0; nh];
        for t in (0..xs.len()).rev() {
            for j in 0..nh {
                let dh = dhs[t][j] + carry[j];
                da[j] = dh * (1.0 - hs[t][j] * hs[t][j]);
            }
            carry.fill(0.0);
            for j in 0..nh {
                let d = da[j];
                if d == 0.0 {
                    continue;
                }
                grad.b[j] += d;
                let rx = j * ni;
                for i in 0..ni {
                    grad.w_x[rx + i] += d * xs[t][i];
                    dxs[t][i] += d * self.w_x[rx + i];
                }
                let rh = j * nh;
                if t > 0 {
                    for i in 0..nh {
                        grad.w_h[rh + i] += d * hs[t - 1][i];
                        carry[i] += d * self.w_h[rh + i];
                    }
                }
            }
        }
        dxs
    }
}

impl Parameters for Elman {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.w_x, &self.w_h, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-dimension mean and standard deviation used to standardise inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Statistics over every row; near-constant dimensions get unit scale.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Vec<f64>>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for row in rows {
            if sum.is_empty() {
                sum = vec![0.0; row.len()];
                sq = vec![0.0; row.len()];
            } else if row.len() != sum.len() {
                return Err(Error::DimensionMismatch {
                    expected: sum.len(),
                    got: row.len(),
                });
            }
            for (k, v) in row.iter().enumerate() {
                sum[k] += v;
                sq[k] += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Empty("standardizer rows"));
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / nf - m * m).max(0.0);
                if var.sqrt() < 1e-8 {
                    1.0
                } else {
                    var.sqrt()
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Clone)]
    struct Net {
        rnn: Elman,
        out: Linear,
    }

    impl Parameters for Net {
        fn tensors(&self) -> Vec<&[f64]> {
            let mut v = self.rnn.tensors();
            v.extend(self.out.tensors());
            v
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            let mut v = self.rnn.tensors_mut();
            v.extend(self.out.tensors_mut());
            v
        }
    }

    // loss = sum_t sum_o 0.5 * y_{t,o}^2 with y_t = out(h_t)
    fn loss(net: &Net, xs: &[Vec<f64>]) -> f64 {
        net.rnn
            .forward(xs)
            .iter()
            .map(|h| net.out.forward(h).iter().map(|y| 0.5 * y * y).sum::<f64>())
            .sum()
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Net {
            rnn: Elman::new(3, 5, &mut rng),
            out: Linear::new(5, 2, &mut rng),
        };
        let xs: Vec<Vec<f64>> = (0..6).map(|_| uniform(&mut rng, 3, 1.0)).collect();

        let hs = net.rnn.forward(&xs);
        let mut grad = Net {
            rnn: net.rnn.zeros_like(),
            out: net.out.zeros_like(),
        };
        let dhs: Vec<Vec<f64>> = hs
            .iter()
            .map(|h| {
                let y = net.out.forward(h);
                net.out.backward(h, &y, &mut grad.out)
            })
            .collect();
        net.rnn.backward(&xs, &hs, &dhs, &mut grad.rnn);

        let flat = net.to_flat();
        let analytic = grad.to_flat();
        let eps = 1e-6;
        for k in 0..flat.len() {
            let mut p = net.clone();
            let mut f = flat.clone();
            f[k] += eps;
            p.set_flat(&f).unwrap();
            let up = loss(&p, &xs);
            f[k] -= 2.0 * eps;
            p.set_flat(&f).unwrap();
            let down = loss(&p, &xs);
            let numeric = (up - down) / (2.0 * eps);
            let err = (numeric - analytic[k]).abs() / (numeric.abs() + analytic[k].abs()).max(1e-8);
            assert!(err < 1e-5, "param {k}: numeric {numeric} analytic {}", analytic[k]);
        }
    }

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = Linear {
            n_in: 2,
            n_out: 1,
            w: vec![3.0, 4.0],
            b: vec![0.0],
        };
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((global_norm(&g) - 1.0).abs() < 1e-12);
        assert_eq!(clip_global_norm(&mut g, 10.0), global_norm(&g));
    }

    #[test]
    fn adam_minimises_a_quadratic() {
        let mut p = Linear {
            n_in: 1,
            n_out: 1,
            w: vec![5.0],
            b: vec![-3.0],
        };
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..500 {
            let g = Linear {
                w: vec![2.0 * p.w[0]],
                b: vec![2.0 * p.b[0]],
                ..p.clone()
            };
            opt.step(&mut p, &g);
        }
        assert!(p.w[0].abs() < 1e-2 && p.b[0].abs() < 1e-2);
    }

    #[test]
    fn set_flat_rejects_wrong_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = Linear::new(2, 2, &mut rng);
        assert!(l.set_flat(&[0.0; 3]).is_err());
        l.set_flat(&[1.0; 6]).unwrap();
        assert_eq!(l.w, vec![1.0; 4]);
    }

    #[test]
    fn standardizer_centres_and_scales() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
        assert!(Standardizer::fit(&Vec::<Vec<f64>>::new()).is_err());
    }
}
