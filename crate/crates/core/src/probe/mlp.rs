//! Dense ReLU network with inverted dropout on hidden activations.
//!
//! All parameters live in one flat vector so an optimizer can treat them as a
//! single slice. Layer `l` stores its `out × in` weight matrix row-major,
//! followed by its `out` biases.

use rand::Rng;

use super::ProbeError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Value(f64),
    Class(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Squared error on a single output.
    Mse,
    /// Softmax cross-entropy over the outputs.
    CrossEntropy,
}

/// One multiplier vector per hidden layer: 0 for dropped units, `1/(1-p)` otherwise.
pub type Masks = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    dropout: Vec<f64>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Activations of one forward pass over a batch.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `acts[0][b]` is input `b`; `acts[l][b]` the (masked) output of layer `l`.
    pub acts: Vec<Vec<Vec<f64>>>,
    /// Hidden-layer pre-activations, `pre[l][b]`.
    pub pre: Vec<Vec<Vec<f64>>>,
}

impl Trace {
    pub fn outputs(&self) -> &[Vec<f64>] {
        self.acts.last().expect("non-empty trace")
    }
}

impl Mlp {
    /// `dims` lists layer widths from input to output; `dropout` gives one rate
    /// per hidden layer. Parameters start at zero.
    pub fn new(dims: &[usize], dropout: &[f64]) -> Result<Self, ProbeError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(ProbeError::InvalidConfig(format!("bad layer widths {dims:?}")));
        }
        if dropout.len() != dims.len() - 2 {
            return Err(ProbeError::InvalidConfig(format!(
                "{} dropout rates for {} hidden layers",
                dropout.len(),
                dims.len() - 2
            )));
        }
        if let Some(p) = dropout.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(ProbeError::InvalidConfig(format!("dropout {p} outside [0, 1)")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for w in dims.windows(2) {
            offsets.push(total);
            total += w[0] * w[1] + w[1];
        }
        offsets.push(total);
        Ok(Self {
            dims: dims.to_vec(),
            dropout: dropout.to_vec(),
            params: vec![0.0; total],
            offsets,
        })
    }

    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        for l in 0..self.n_layers() {
            let bound = 1.0 / (self.dims[l] as f64).sqrt();
            let (start, end) = (self.offsets[l], self.offsets[l + 1]);
            for p in &mut self.params[start..end] {
                *p = rng.random_range(-bound..bound);
            }
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two widths")
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self, l: usize) -> (usize, usize) {
        let w = self.offsets[l];
        (w, w + self.dims[l] * self.dims[l + 1])
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        let (w, b) = self.split(l);
        &self.params[w..b]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let (_, b) = self.split(l);
        &self.params[b..self.offsets[l + 1]]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let (w, b) = self.split(l);
        &mut self.params[w..b]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let (_, b) = self.split(l);
        let end = self.offsets[l + 1];
        &mut self.params[b..end]
    }

    pub fn sample_masks<R: Rng>(&self, rng: &mut R) -> Masks {
        self.dropout
            .iter()
            .zip(&self.dims[1..])
            .map(|(&p, &width)| {
                if p == 0.0 {
                    return vec![1.0; width];
                }
                let keep = 1.0 / (1.0 - p);
                (0..width)
                    .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                    .collect()
            })
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ProbeError> {
        if x.len() != self.input_dim() {
            return Err(ProbeError::DimMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass over a batch. Without masks this is the deterministic
    /// eval mode; with masks, `masks[b]` applies to sample `b`.
    pub fn trace(&self, xs: &[&[f64]], masks: Option<&[Masks]>) -> Result<Trace, ProbeError> {
        for x in xs {
            self.check_input(x)?;
        }
        let mut acts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.dims.len());
        let mut pre = Vec::with_capacity(self.n_layers() - 1);
        acts.push(xs.iter().map(|x| x.to_vec()).collect());
        for l in 0..self.n_layers() {
            let n_in = self.dims[l];
            let w = self.weights(l);
            let bias = self.bias(l);
            let input = acts.last().expect("input pushed");
            let mut z = vec![vec![0.0; bias.len()]; xs.len()];
            for (o, &b) in bias.iter().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                for (zb, x) in z.iter_mut().zip(input) {
                    zb[o] = b + dot(row, x);
                }
            }
            if l + 1 == self.n_layers() {
                acts.push(z);
                break;
            }
            let a = z
                .iter()
                .enumerate()
                .map(|(b, zb)| {
                    let mask = masks.map(|m| m[b][l].as_slice());
                    zb.iter()
                        .enumerate()
                        .map(|(i, &v)| v.max(0.0) * mask.map_or(1.0, |m| m[i]))
                        .collect()
                })
                .collect();
            pre.push(z);
            acts.push(a);
        }
        Ok(Trace { acts, pre })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ProbeError> {
        Ok(self.trace(&[x], None)?.acts.pop().expect("output").pop().expect("one sample"))
    }

    pub fn forward_batch(&self, xs: &[&[f64]]) -> Result<Vec<Vec<f64>>, ProbeError> {
        Ok(self.trace(xs, None)?.acts.pop().expect("output"))
    }

    /// Accumulates parameter gradients given `d_out[b]`, the loss gradient at
    /// output `b`. Returns gradients with respect to the inputs when
    /// `want_input` is set.
    pub fn backward(
        &self,
        trace: &Trace,
        masks: Option<&[Masks]>,
        d_out: Vec<Vec<f64>>,
        grad: &mut [f64],
        want_input: bool,
    ) -> Option<Vec<Vec<f64>>> {
        let mut delta = d_out;
        for l in (0..self.n_layers()).rev() {
            let n_in = self.dims[l];
            let input = &trace.acts[l];
            let (w_off, b_off) = self.split(l);
            for o in 0..self.dims[l + 1] {
                let row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                let mut bias_grad = 0.0;
                for (db, x) in delta.iter().zip(input) {
                    let d = db[o];
                    if d != 0.0 {
                        axpy(d, x, row);
                        bias_grad += d;
                    }
                }
                grad[b_off + o] += bias_grad;
            }
            if l == 0 && !want_input {
                return None;
            }
            let w = self.weights(l);
            let mut prev = vec![vec![0.0; n_in]; delta.len()];
            for (pb, db) in prev.iter_mut().zip(&delta) {
                for (o, &d) in db.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[o * n_in..(o + 1) * n_in], pb);
                    }
                }
            }
            if l > 0 {
                for (b, pb) in prev.iter_mut().enumerate() {
                    let z = &trace.pre[l - 1][b];
                    let mask = masks.map(|m| m[b][l - 1].as_slice());
                    for (i, p) in pb.iter_mut().enumerate() {
                        if z[i] <= 0.0 {
                            *p = 0.0;
                        } else if let Some(m) = mask {
                            *p *= m[i];
                        }
                    }
                }
            }
            delta = prev;
        }
        Some(delta)
    }

    /// Mean loss over a batch and its gradient with respect to the parameters.
    pub fn loss_and_grad(
        &self,
        xs: &[&[f64]],
        targets: &[Target],
        objective: Objective,
        masks: Option<&[Masks]>,
    ) -> Result<(f64, Vec<f64>), ProbeError> {
        let (loss, grad, _) = self.loss_and_grads(xs, targets, objective, masks, false)?;
        Ok((loss, grad))
    }

    /// Like [`Mlp::loss_and_grad`], optionally also returning per-sample
    /// input gradients.
    pub fn loss_and_grads(
        &self,
        xs: &[&[f64]],
        targets: &[Target],
        objective: Objective,
        masks: Option<&[Masks]>,
        want_input: bool,
    ) -> Result<(f64, Vec<f64>, Option<Vec<Vec<f64>>>), ProbeError> {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / xs.len() as f64;
        let trace = self.trace(xs, masks)?;
        let mut total = 0.0;
        let mut d_out = Vec::with_capacity(xs.len());
        for (out, &t) in trace.outputs().iter().zip(targets) {
            let (loss, mut d) = sample_loss(out, t, objective)?;
            total += loss;
            d.iter_mut().for_each(|v| *v *= scale);
            d_out.push(d);
        }
        let d_in = self.backward(&trace, masks, d_out, &mut grad, want_input);
        Ok((total * scale, grad, d_in))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4 * 4;
    for (ca, cb) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let tail: f64 = a[chunks..].iter().zip(&b[chunks..]).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Loss of one sample and its gradient with respect to the output.
pub fn sample_loss(output: &[f64], target: Target, objective: Objective) -> Result<(f64, Vec<f64>), ProbeError> {
    match (objective, target) {
        (Objective::Mse, Target::Value(y)) => {
            if output.len() != 1 {
                return Err(ProbeError::DimMismatch {
                    expected: 1,
                    found: output.len(),
                });
            }
            let e = output[0] - y;
            Ok((e * e, vec![2.0 * e]))
        }
        (Objective::CrossEntropy, Target::Class(c)) => {
            if c >= output.len() {
                return Err(ProbeError::DimMismatch {
                    expected: output.len(),
                    found: c + 1,
                });
            }
            let ls = log_softmax(output);
            let mut d: Vec<f64> = ls.iter().map(|v| v.exp()).collect();
            d[c] -= 1.0;
            Ok((-ls[c], d))
        }
        _ => Err(ProbeError::InvalidConfig("target kind does not match objective".into())),
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_bias() {
        let mut m = Mlp::new(&[3, 4, 1], &[0.2]).unwrap();
        m.bias_mut(1)[0] = 0.75;
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.75]);
    }

    #[test]
    fn one_by_one_pass_through() {
        let mut m = Mlp::new(&[1, 1, 1], &[0.0]).unwrap();
        m.weights_mut(0)[0] = 1.0;
        m.weights_mut(1)[0] = 1.0;
        assert_eq!(m.forward(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(m.forward(&[-2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = Mlp::new(&[5, 7, 2], &[0.5]).unwrap();
        m.init(&mut rng);
        let x: Vec<f64> = (0..5).map(|i| i as f64 * 0.3 - 0.7).collect();
        // Independent oracle: explicit nested loops over the stored matrices.
        let (w1, b1, w2, b2) = (m.weights(0), m.bias(0), m.weights(1), m.bias(1));
        let mut h = [0.0; 7];
        for o in 0..7 {
            let mut s = b1[o];
            for i in 0..5 {
                s += w1[o * 5 + i] * x[i];
            }
            h[o] = if s > 0.0 { s } else { 0.0 };
        }
        let y = m.forward(&x).unwrap();
        for o in 0..2 {
            let mut s = b2[o];
            for i in 0..7 {
                s += w2[o * 7 + i] * h[i];
            }
            assert!((y[o] - s).abs() < 1e-12);
        }
        assert_eq!(y, m.forward(&x).unwrap());
    }

    #[test]
    fn dim_mismatch() {
        let m = Mlp::new(&[3, 2, 1], &[0.0]).unwrap();
        assert_eq!(
            m.forward(&[1.0]),
            Err(ProbeError::DimMismatch { expected: 3, found: 1 })
        );
        assert!(Mlp::new(&[3, 2, 1], &[]).is_err());
        assert!(Mlp::new(&[3, 2, 1], &[1.0]).is_err());
    }

    #[test]
    fn masks_are_inverted_dropout() {
        let m = Mlp::new(&[2, 1000, 1], &[0.2]).unwrap();
        let masks = m.sample_masks(&mut ChaCha8Rng::seed_from_u64(0));
        let kept = masks[0].iter().filter(|&&v| v > 0.0).count();
        assert!((750..850).contains(&kept));
        assert!(masks[0].iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
    }

    fn finite_difference_check(dims: &[usize], objective: Objective, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mlp::new(dims, &vec![0.3; dims.len() - 2]).unwrap();
        m.init(&mut rng);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Target> = (0..4)
            .map(|i| match objective {
                Objective::Mse => Target::Value(i as f64 * 0.25),
                Objective::CrossEntropy => Target::Class(i % dims[dims.len() - 1]),
            })
            .collect();
        let masks: Vec<Masks> = (0..4).map(|_| m.sample_masks(&mut rng)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, grad) = m.loss_and_grad(&refs, &targets, objective, Some(&masks)).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..m.params().len() {
            let orig = m.params()[k];
            m.params_mut()[k] = orig + h;
            let up = m.loss_and_grad(&refs, &targets, objective, Some(&masks)).unwrap().0;
            m.params_mut()[k] = orig - h;
            let down = m.loss_and_grad(&refs, &targets, objective, Some(&masks)).unwrap().0;
            m.params_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = grad[k].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((grad[k] - numeric).abs() / denom);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            assert!(finite_difference_check(&[8, 4, 1], Objective::Mse, seed) < 1e-4);
            assert!(finite_difference_check(&[6, 5, 3], Objective::CrossEntropy, seed) < 1e-4);
            assert!(finite_difference_check(&[5, 4, 3, 2], Objective::CrossEntropy, seed) < 1e-4);
        }
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let (loss, d) = sample_loss(&[0.0; 4], Target::Class(2), Objective::CrossEntropy).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((d[2] + 0.75).abs() < 1e-12);
    }
}
