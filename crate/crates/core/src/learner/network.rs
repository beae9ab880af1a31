use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    /// Logits over `n` actions.
    Discrete(usize),
    /// Gaussian means for `n` dimensions plus a state-independent log-std.
    Continuous(usize),
}

impl HeadKind {
    pub fn outputs(self) -> usize {
        match self {
            HeadKind::Discrete(n) | HeadKind::Continuous(n) => n,
        }
    }
}

/// Layer sizes of the shared-trunk actor-critic MLP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetShape {
    pub obs_dim: usize,
    pub hidden: usize,
    pub head: HeadKind,
}

/// Offsets of each tensor inside the flat parameter vector. Weight matrices
/// are stored `fan_in x fan_out`, row-major.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub wp: usize,
    pub bp: usize,
    pub wv: usize,
    pub bv: usize,
    pub log_std: usize,
    pub total: usize,
}

impl NetShape {
    pub(crate) fn layout(&self) -> Layout {
        let (i, h, a) = (self.obs_dim, self.hidden, self.head.outputs());
        let w1 = 0;
        let b1 = w1 + i * h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let wp = b2 + h;
        let bp = wp + h * a;
        let wv = bp + a;
        let bv = wv + h;
        let log_std = bv + 1;
        let total = log_std + self.log_std_len();
        Layout { w1, b1, w2, b2, wp, bp, wv, bv, log_std, total }
    }

    pub fn log_std_len(&self) -> usize {
        match self.head {
            HeadKind::Discrete(_) => 0,
            HeadKind::Continuous(n) => n,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// `(fan_in, fan_out)` of the four dense layers in storage order.
    pub fn layer_shapes(&self) -> [(usize, usize); 4] {
        let (i, h, a) = (self.obs_dim, self.hidden, self.head.outputs());
        [(i, h), (h, h), (h, a), (h, 1)]
    }
}

/// Adam moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(n: usize) -> Self {
        Self { step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }
}

/// Network weights plus optimiser state.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub shape: NetShape,
    pub theta: Vec<f64>,
    pub adam: AdamState,
}

/// Raw outputs of a batched forward pass.
#[derive(Clone, Debug)]
pub struct ForwardOut {
    /// `rows x outputs`: logits or Gaussian means.
    pub head: Array2<f64>,
    pub values: Array1<f64>,
}

/// Activations kept for the backward pass.
pub(crate) struct Cache {
    pub x: Array2<f64>,
    pub h1: Array2<f64>,
    pub h2: Array2<f64>,
}

impl PolicyParams {
    /// Gaussian weights scaled by `1/sqrt(fan_in)`: unit gain in the trunk
    /// and value head, 0.01 in the policy head so the initial policy is
    /// near uniform. Biases and log-std start at zero.
    pub fn init(shape: NetShape, rng: &mut SimRng) -> Self {
        let l = shape.layout();
        let mut theta = vec![0.0; l.total];
        let gains = [1.0, 1.0, 0.01, 1.0];
        let offsets = [l.w1, l.w2, l.wp, l.wv];
        for ((&(fan_in, fan_out), gain), off) in shape.layer_shapes().iter().zip(gains).zip(offsets) {
            let scale = gain / (fan_in as f64).sqrt();
            for w in &mut theta[off..off + fan_in * fan_out] {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Self::from_theta(shape, theta).expect("layout length")
    }

    pub fn zeros(shape: NetShape) -> Self {
        Self::from_theta(shape, vec![0.0; shape.param_count()]).expect("layout length")
    }

    pub fn from_theta(shape: NetShape, theta: Vec<f64>) -> Result<Self> {
        let n = shape.param_count();
        if theta.len() != n {
            return Err(Error::Arity { what: "parameters", expected: n, got: theta.len() });
        }
        Ok(Self { shape, adam: AdamState::zeros(n), theta })
    }

    fn mat(&self, off: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), &self.theta[off..off + rows * cols]).expect("shape")
    }

    fn vec(&self, off: usize, len: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.theta[off..off + len])
    }

    pub fn log_std(&self) -> &[f64] {
        let l = self.shape.layout();
        &self.theta[l.log_std..l.total]
    }

    pub(crate) fn clamp_log_std(&mut self) {
        let l = self.shape.layout();
        for s in &mut self.theta[l.log_std..l.total] {
            *s = s.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    /// Batched forward pass over `rows` observations laid out row-major.
    pub fn forward(&self, obs: &[f64], rows: usize) -> Result<ForwardOut> {
        self.forward_cached(obs, rows).map(|(out, _)| out)
    }

    pub(crate) fn forward_cached(&self, obs: &[f64], rows: usize) -> Result<(ForwardOut, Cache)> {
        let s = self.shape;
        if obs.len() != rows * s.obs_dim {
            return Err(Error::Arity { what: "observation values", expected: rows * s.obs_dim, got: obs.len() });
        }
        let (h, a) = (s.hidden, s.head.outputs());
        let l = s.layout();
        let x = ArrayView2::from_shape((rows, s.obs_dim), obs).expect("shape").to_owned();
        let mut h1 = x.dot(&self.mat(l.w1, s.obs_dim, h)) + self.vec(l.b1, h);
        h1.mapv_inplace(f64::tanh);
        let mut h2 = h1.dot(&self.mat(l.w2, h, h)) + self.vec(l.b2, h);
        h2.mapv_inplace(f64::tanh);
        let head = h2.dot(&self.mat(l.wp, h, a)) + self.vec(l.bp, a);
        let values = h2.dot(&self.vec(l.wv, h)) + self.theta[l.bv];
        Ok((ForwardOut { head, values }, Cache { x, h1, h2 }))
    }

    /// Gradient of a scalar loss given its derivatives with respect to the
    /// head outputs, the values and the log-std vector.
    pub(crate) fn backward(
        &self,
        cache: &Cache,
        d_head: &Array2<f64>,
        d_values: &Array1<f64>,
        d_log_std: &[f64],
    ) -> Vec<f64> {
        let s = self.shape;
        let (h, a) = (s.hidden, s.head.outputs());
        let l = s.layout();
        let mut grad = vec![0.0; l.total];
        let mut put = |off: usize, src: &[f64]| grad[off..off + src.len()].copy_from_slice(src);

        let d_wp = cache.h2.t().dot(d_head);
        put(l.wp, d_wp.as_slice().expect("contiguous"));
        put(l.bp, d_head.sum_axis(Axis(0)).as_slice().expect("contiguous"));
        let d_wv = cache.h2.t().dot(d_values);
        put(l.wv, d_wv.as_slice().expect("contiguous"));
        put(l.bv, &[d_values.sum()]);

        let dv_col = d_values.view().insert_axis(Axis(1));
        let wv_row = self.vec(l.wv, h).insert_axis(Axis(0));
        let mut dz2 = d_head.dot(&self.mat(l.wp, h, a).t()) + dv_col.dot(&wv_row);
        dz2.zip_mut_with(&cache.h2, |g, &y| *g *= 1.0 - y * y);
        put(l.w2, cache.h1.t().dot(&dz2).as_standard_layout().as_slice().expect("contiguous"));
        put(l.b2, dz2.sum_axis(Axis(0)).as_slice().expect("contiguous"));

        let mut dz1 = dz2.dot(&self.mat(l.w2, h, h).t());
        dz1.zip_mut_with(&cache.h1, |g, &y| *g *= 1.0 - y * y);
        put(l.w1, cache.x.t().dot(&dz1).as_standard_layout().as_slice().expect("contiguous"));
        put(l.b1, dz1.sum_axis(Axis(0)).as_slice().expect("contiguous"));

        put(l.log_std, d_log_std);
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn shape() -> NetShape {
        NetShape { obs_dim: 6, hidden: 8, head: HeadKind::Discrete(4) }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = PolicyParams::zeros(shape());
        let out = p.forward(&[0.3; 12], 2).unwrap();
        assert!(out.head.iter().all(|&v| v == 0.0));
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batched_equals_single_rows() {
        let p = PolicyParams::init(shape(), &mut stream(1, &[]));
        let mut rng = stream(2, &[]);
        let obs: Vec<f64> = (0..5 * 6).map(|_| rng.random::<f64>() - 0.5).collect();
        let batch = p.forward(&obs, 5).unwrap();
        for r in 0..5 {
            let one = p.forward(&obs[r * 6..(r + 1) * 6], 1).unwrap();
            assert_eq!(one.head.row(0), batch.head.row(r));
            assert_eq!(one.values[0], batch.values[r]);
        }
    }

    #[test]
    fn wrong_obs_length() {
        let p = PolicyParams::zeros(shape());
        assert!(matches!(p.forward(&[0.0; 5], 1), Err(Error::Arity { .. })));
    }

    #[test]
    fn layout_is_contiguous() {
        let s = NetShape { obs_dim: 3, hidden: 4, head: HeadKind::Continuous(2) };
        let l = s.layout();
        assert_eq!(l.total, 3 * 4 + 4 + 4 * 4 + 4 + 4 * 2 + 2 + 4 + 1 + 2);
        assert_eq!(l.log_std, l.total - 2);
    }
}
