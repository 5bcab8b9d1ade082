use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Output nonlinearity of an MLP.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputKind {
    Linear,
    /// Per-component `scale_j * tanh(x_j)`; keeps outputs strictly inside
    /// the box spanned by the scales.
    TanhScaled(DVector<f64>),
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Fully connected network with tanh hidden activations.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub output: OutputKind,
}

/// Per-sample forward cache: post-activation values of every layer,
/// starting with the input itself.
pub struct ForwardCache {
    activations: Vec<DVector<f64>>,
    preact_last: DVector<f64>,
}

/// Gradient (or Adam-moment) buffers shaped like an [`Mlp`].
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub layers: Vec<Layer>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    w: DMatrix::zeros(l.w.nrows(), l.w.ncols()),
                    b: DVector::zeros(l.b.len()),
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.w *= k;
            l.b *= k;
        }
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for l in &self.layers {
            s += l.w.norm_squared() + l.b.norm_squared();
        }
        s.sqrt()
    }
}

impl Mlp {
    /// Deterministic scaled-uniform initialization; the output layer
    /// starts at zero so the network is exactly zero at birth.
    pub fn new(dims: &[usize], output: OutputKind, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for k in 0..dims.len() - 1 {
            let (n_in, n_out) = (dims[k], dims[k + 1]);
            let last = k == dims.len() - 2;
            let bound = if last { 0.0 } else { (1.0 / n_in as f64).sqrt() };
            let w = DMatrix::from_fn(n_out, n_in, |_, _| {
                if bound == 0.0 {
                    0.0
                } else {
                    rng.random_range(-bound..bound)
                }
            });
            layers.push(Layer {
                w,
                b: DVector::zeros(n_out),
            });
        }
        Self { layers, output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn forward(&self, x: &DVector<f64>) -> (DVector<f64>, ForwardCache) {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        let mut z = x.clone();
        let mut preact_last = DVector::zeros(0);
        for (k, layer) in self.layers.iter().enumerate() {
            let a = &layer.w * &z + &layer.b;
            if k + 1 == self.layers.len() {
                preact_last = a.clone();
                z = match &self.output {
                    OutputKind::Linear => a,
                    OutputKind::TanhScaled(s) => {
                        DVector::from_iterator(a.len(), a.iter().zip(s.iter()).map(|(x, s)| s * x.tanh()))
                    }
                };
            } else {
                z = a.map(f64::tanh);
            }
            activations.push(z.clone());
        }
        (z, ForwardCache {
            activations,
            preact_last,
        })
    }

    /// Accumulates parameter gradients for one sample into `grads` and
    /// returns the gradient with respect to the input.
    ///
    /// `grad_out` is dL/d(output). Hidden tanh derivatives are taken from
    /// the cached activations.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &DVector<f64>,
        grads: &mut MlpGrads,
    ) -> DVector<f64> {
        let n_layers = self.layers.len();
        // dL/da of the last layer.
        let mut delta = match &self.output {
            OutputKind::Linear => grad_out.clone(),
            OutputKind::TanhScaled(s) => DVector::from_iterator(
                grad_out.len(),
                grad_out
                    .iter()
                    .zip(s.iter())
                    .zip(cache.preact_last.iter())
                    .map(|((g, s), a)| {
                        let t = a.tanh();
                        g * s * (1.0 - t * t)
                    }),
            ),
        };
        for k in (0..n_layers).rev() {
            let input = &cache.activations[k];
            grads.layers[k].w += &delta * input.transpose();
            grads.layers[k].b += &delta;
            if k == 0 {
                return self.layers[k].w.transpose() * &delta;
            }
            let upstream = self.layers[k].w.transpose() * &delta;
            // Hidden activation is tanh; its value is the cached output.
            delta = DVector::from_iterator(
                upstream.len(),
                upstream
                    .iter()
                    .zip(cache.activations[k].iter())
                    .map(|(u, z)| u * (1.0 - z * z)),
            );
        }
        unreachable!("loop returns at layer zero");
    }

    pub fn soft_update_from(&mut self, src: &Mlp, rho: f64) {
        for (dst, s) in self.layers.iter_mut().zip(&src.layers) {
            dst.w = &dst.w * (1.0 - rho) + &s.w * rho;
            dst.b = &dst.b * (1.0 - rho) + &s.b * rho;
        }
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|x| x.is_finite()) && l.b.iter().all(|x| x.is_finite()))
    }
}

/// Adam optimizer over MLP-shaped parameters.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: MlpGrads,
    pub v: MlpGrads,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: MlpGrads::zeros_like(net),
            v: MlpGrads::zeros_like(net),
        }
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) {
        self.t += 1;
        let b1c = 1.0 - self.beta1.powi(self.t as i32);
        let b2c = 1.0 - self.beta2.powi(self.t as i32);
        for (k, g) in grads.layers.iter().enumerate() {
            let (m, v) = (&mut self.m.layers[k], &mut self.v.layers[k]);
            m.w = &m.w * self.beta1 + &g.w * (1.0 - self.beta1);
            m.b = &m.b * self.beta1 + &g.b * (1.0 - self.beta1);
            v.w = &v.w * self.beta2 + g.w.component_mul(&g.w) * (1.0 - self.beta2);
            v.b = &v.b * self.beta2 + g.b.component_mul(&g.b) * (1.0 - self.beta2);
            let layer = &mut net.layers[k];
            for i in 0..layer.w.nrows() {
                for j in 0..layer.w.ncols() {
                    let mh = m.w[(i, j)] / b1c;
                    let vh = v.w[(i, j)] / b2c;
                    layer.w[(i, j)] -= self.lr * mh / (vh.sqrt() + self.eps);
                }
            }
            for i in 0..layer.b.len() {
                let mh = m.b[i] / b1c;
                let vh = v.b[i] / b2c;
                layer.b[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn zero_output_layer_gives_zero_at_birth() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[4, 8, 3], OutputKind::Linear, &mut rng);
        let (y, _) = net.forward(&DVector::from_vec(vec![0.3, -0.2, 1.0, 0.5]));
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tanh_scaled_output_saturates_at_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(
            &[2, 4, 2],
            OutputKind::TanhScaled(DVector::from_vec(vec![3.0, 5.0])),
            &mut rng,
        );
        // Force a huge preactivation.
        let last = net.layers.last_mut().unwrap();
        last.b[0] = 1e6;
        last.b[1] = -1e6;
        let (y, _) = net.forward(&DVector::from_vec(vec![0.0, 0.0]));
        assert_relative_eq!(y[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(y[1], -5.0, epsilon = 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[3, 5, 2], OutputKind::Linear, &mut rng);
        // Give the zero output layer some random weights for the check.
        for l in &mut net.layers {
            for x in l.w.iter_mut() {
                *x += rng.random_range(-0.5..0.5);
            }
        }
        let x = DVector::from_vec(vec![0.2, -0.4, 0.7]);
        // Scalar loss: sum of outputs squared.
        let loss = |n: &Mlp| {
            let (y, _) = n.forward(&x);
            y.norm_squared()
        };
        let (y, cache) = net.forward(&x);
        let mut grads = MlpGrads::zeros_like(&net);
        net.backward(&cache, &(y * 2.0), &mut grads);

        let delta = 1e-6;
        for k in 0..net.layers.len() {
            for i in 0..net.layers[k].w.nrows() {
                for j in 0..net.layers[k].w.ncols() {
                    let orig = net.layers[k].w[(i, j)];
                    net.layers[k].w[(i, j)] = orig + delta;
                    let up = loss(&net);
                    net.layers[k].w[(i, j)] = orig - delta;
                    let dn = loss(&net);
                    net.layers[k].w[(i, j)] = orig;
                    let fd = (up - dn) / (2.0 * delta);
                    assert_relative_eq!(grads.layers[k].w[(i, j)], fd, epsilon = 1e-6, max_relative = 1e-5);
                }
            }
        }
    }
}
