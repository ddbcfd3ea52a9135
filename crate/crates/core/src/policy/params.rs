//! Named parameter tensors, initialization and the Adam optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::Tensor;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.tensors[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn push(&mut self, name: &str, t: Tensor) -> usize {
        assert!(self.index_of(name).is_none(), "duplicate parameter {name}");
        self.names.push(name.to_string());
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    /// Uniform in `[-1/sqrt(rows), 1/sqrt(rows)]`; `rows` is the fan-in.
    pub fn push_random<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) -> usize {
        let bound = 1.0 / (rows.max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
        self.push(name, Tensor::from_vec(rows, cols, data))
    }

    pub fn push_zeros(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.push(name, Tensor::zeros(rows, cols))
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

/// Sum of gradient sets, in order.
pub fn add_grads(acc: &mut [Tensor], g: &[Tensor]) {
    for (a, b) in acc.iter_mut().zip(g) {
        for (x, y) in a.data.iter_mut().zip(&b.data) {
            *x += y;
        }
    }
}

pub fn global_norm(grads: &[Tensor]) -> f64 {
    grads.iter().flat_map(|t| &t.data).map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `grads` to global norm at most `max_norm`; returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().flat_map(|t| t.data.iter_mut()).for_each(|x| *x *= s);
    }
    norm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ParamSet) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }

    /// One update; `lr(i)` is the learning rate of parameter `i`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor], lr: impl Fn(usize) -> f64) {
        self.step += 1;
        let b1t = 1.0 - self.beta1.powi(self.step as i32);
        let b2t = 1.0 - self.beta2.powi(self.step as i32);
        for (i, g) in grads.iter().enumerate() {
            let rate = lr(i);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let p = params.tensor_mut(i);
            for k in 0..g.len() {
                let gk = g.data[k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                p.data[k] -= rate * (m[k] / b1t) / ((v[k] / b2t).sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_scales_to_bound() {
        let mut g = vec![Tensor::row(vec![3.0, 4.0])];
        assert_eq!(clip_global_norm(&mut g, 2.0), 5.0);
        assert!((global_norm(&g) - 2.0).abs() < 1e-12);
        let mut small = vec![Tensor::row(vec![0.3, 0.4])];
        clip_global_norm(&mut small, 2.0);
        assert_eq!(small[0].data, vec![0.3, 0.4]);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut p = ParamSet::default();
        p.push("x", Tensor::row(vec![3.0, -2.0]));
        let mut opt = Adam::new(&p);
        for _ in 0..2000 {
            let g = vec![Tensor::row(p.tensor(0).data.iter().map(|x| 2.0 * x).collect())];
            opt.step(&mut p, &g, |_| 0.01);
        }
        assert!(p.tensor(0).data.iter().all(|x| x.abs() < 1e-2));
    }
}
