use rand::Rng;

/// Fully connected network with rectifier hidden layers and a linear output
/// layer. Parameters live in one flat vector, layer by layer, each layer's
/// weights row-major (`out x in`) followed by its biases when enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    bias: bool,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize], bias: bool) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "invalid layer sizes");
        let n = sizes
            .windows(2)
            .map(|w| w[0] * w[1] + if bias { w[1] } else { 0 })
            .sum();
        Self {
            sizes: sizes.to_vec(),
            bias,
            params: vec![0.0; n],
        }
    }

    /// He-uniform weights, zero biases.
    pub fn new(sizes: &[usize], bias: bool, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(sizes, bias);
        let mut off = 0;
        for w in sizes.windows(2) {
            let limit = (6.0 / w[0] as f64).sqrt();
            for p in &mut net.params[off..off + w[0] * w[1]] {
                *p = rng.gen_range(-limit..limit);
            }
            off += w[0] * w[1] + if bias { w[1] } else { 0 };
        }
        net
    }

    pub fn from_parts(sizes: Vec<usize>, bias: bool, params: Vec<f64>) -> Option<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return None;
        }
        let net = Self::zeros(&sizes, bias);
        (net.params.len() == params.len() && params.iter().all(|p| p.is_finite())).then_some(Self {
            sizes,
            bias,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().unwrap()
    }

    /// Activations of every layer, input included.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.input_len(), "input length");
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let input = acts.last().unwrap();
            let weights = &self.params[off..off + n_in * n_out];
            let mut out = vec![0.0; n_out];
            for (j, o) in out.iter_mut().enumerate() {
                let row = &weights[j * n_in..(j + 1) * n_in];
                *o = row.iter().zip(input).map(|(a, b)| a * b).sum();
            }
            off += n_in * n_out;
            if self.bias {
                for (o, b) in out.iter_mut().zip(&self.params[off..off + n_out]) {
                    *o += b;
                }
                off += n_out;
            }
            if l < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    /// Adds d(grad_out · output)/dθ at input `x` into `grad`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64], grad: &mut [f64]) {
        let acts = self.forward_all(x);
        let mut delta = grad_out.to_vec();
        let mut offsets = Vec::new();
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + if self.bias { w[1] } else { 0 };
        }
        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let off = offsets[l];
            for j in 0..n_out {
                if delta[j] == 0.0 {
                    continue;
                }
                for i in 0..n_in {
                    grad[off + j * n_in + i] += delta[j] * input[i];
                }
            }
            if self.bias {
                for j in 0..n_out {
                    grad[off + n_in * n_out + j] += delta[j];
                }
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for j in 0..n_out {
                if delta[j] == 0.0 {
                    continue;
                }
                let row = &weights[j * n_in..(j + 1) * n_in];
                for i in 0..n_in {
                    prev[i] += delta[j] * row[i];
                }
            }
            // rectifier derivative at the hidden layer's output
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        let net = Mlp::zeros(&[4, 64, 64, 3], true);
        assert_eq!(net.params().len(), 4 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
        let net = Mlp::zeros(&[4, 3], false);
        assert_eq!(net.params().len(), 12);
    }

    #[test]
    fn linear_layer_is_matrix_product() {
        let net = Mlp::from_parts(vec![2, 2], true, vec![1.0, 2.0, 3.0, 4.0, 0.5, -0.5]).unwrap();
        assert_eq!(net.forward(&[1.0, 1.0]), vec![3.5, 6.5]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::new(&[3, 5, 4, 2], true, &mut rng);
        for p in net.params_mut() {
            *p += rng.gen_range(-0.1..0.1);
        }
        let x = [0.3, -0.7, 0.9];
        let go = [0.4, -1.3];
        let mut g = vec![0.0; net.params().len()];
        net.backward(&x, &go, &mut g);
        let f = |n: &Mlp| n.forward(&x).iter().zip(&go).map(|(a, b)| a * b).sum::<f64>();
        let h = 1e-6;
        for k in 0..g.len() {
            let v = net.params()[k];
            net.params_mut()[k] = v + h;
            let up = f(&net);
            net.params_mut()[k] = v - h;
            let down = f(&net);
            net.params_mut()[k] = v;
            assert!(((up - down) / (2.0 * h) - g[k]).abs() < 1e-6);
        }
    }
}
