//! Feedforward network engine: dense layers with optional batch
//! normalization, inverted dropout, ReLU/tanh activations, softmax
//! cross-entropy loss, and SGD / momentum / Adam optimizers. Double precision
//! throughout; seed-deterministic.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::logistic::argmax_lowest_tie;
use super::TrainingHistory;
use crate::seed;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(&self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Momentum,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkArchitecture {
    /// Neuron counts input -> hidden... -> output.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// Probability of dropping a hidden activation during training.
    pub dropout_rate: f64,
    pub batch_norm: bool,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for NetworkArchitecture {
    fn default() -> Self {
        NetworkArchitecture {
            layer_sizes: vec![1, 100, 2],
            activation: Activation::Relu,
            dropout_rate: 0.0,
            batch_norm: false,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            epochs: 60,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BatchNorm {
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DenseLayer {
    /// fan_in x fan_out.
    w: Array2<f64>,
    b: Array1<f64>,
    /// Hidden layers only; never on the output layer.
    bn: Option<BatchNorm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub arch: NetworkArchitecture,
    layers: Vec<DenseLayer>,
}

/// Per-layer forward state kept for backpropagation.
struct LayerCache {
    input: Array2<f64>,
    /// Batch-norm internals (train mode): normalized input, batch mean,
    /// 1/sqrt(var + eps).
    bn_xhat: Option<Array2<f64>>,
    bn_invstd: Option<Array1<f64>>,
    /// Activation output (hidden layers), before dropout.
    activated: Option<Array2<f64>>,
    dropout_mask: Option<Array2<f64>>,
}

struct LayerGrads {
    dw: Array2<f64>,
    db: Array1<f64>,
    dgamma: Option<Array1<f64>>,
    dbeta: Option<Array1<f64>>,
}

/// Running-statistics updates produced by a training-mode forward pass;
/// applied by the training loop, ignored by the pure passes.
struct BnBatchStats {
    mean: Array1<f64>,
    var: Array1<f64>,
}

impl Network {
    /// He initialization for hidden layers feeding the rectifier; the output
    /// layer uses a deliberately small scale so the initial softmax stays
    /// near-uniform.
    pub fn new(arch: NetworkArchitecture, seed_base: u64) -> Self {
        assert!(
            arch.layer_sizes.len() >= 2,
            "network needs input and output sizes"
        );
        let mut layers = Vec::new();
        let last = arch.layer_sizes.len() - 2;
        for (l, pair) in arch.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let std = if l == last {
                0.3 / (fan_in as f64).sqrt()
            } else {
                (2.0 / fan_in as f64).sqrt()
            };
            let normal = Normal::new(0.0, std).unwrap();
            let mut rng = seed::rng(seed_base, "mlp-init", l as u64);
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| normal.sample(&mut rng));
            let bn = (arch.batch_norm && l != last).then(|| BatchNorm::new(fan_out));
            layers.push(DenseLayer {
                w,
                b: Array1::zeros(fan_out),
                bn,
            });
        }
        Network { arch, layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.arch.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.arch.layer_sizes.last().unwrap()
    }

    fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Training-mode forward pass: batch statistics for batch norm, inverted
    /// dropout when a generator is supplied. Pure; running-stat updates are
    /// returned, not applied.
    fn forward_train(
        &self,
        x: &ArrayView2<'_, f64>,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> (Array2<f64>, Vec<LayerCache>, Vec<Option<BnBatchStats>>) {
        let mut caches = Vec::with_capacity(self.n_layers());
        let mut stats = Vec::with_capacity(self.n_layers());
        let mut a = x.to_owned();
        let last = self.n_layers() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let input = a.clone();
            let mut z = a.dot(&layer.w) + &layer.b;

            let mut bn_xhat = None;
            let mut bn_invstd = None;
            let mut bn_stats = None;
            if let Some(bn) = &layer.bn {
                let m = z.nrows() as f64;
                let mean = z.mean_axis(Axis(0)).unwrap();
                let var = z
                    .map_axis(Axis(0), |col| {
                        let mu = col.sum() / m;
                        col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m
                    });
                let invstd = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let mut xhat = z.clone();
                for mut row in xhat.rows_mut() {
                    for j in 0..row.len() {
                        row[j] = (row[j] - mean[j]) * invstd[j];
                    }
                }
                for r in 0..z.nrows() {
                    for j in 0..z.ncols() {
                        z[[r, j]] = bn.gamma[j] * xhat[[r, j]] + bn.beta[j];
                    }
                }
                bn_stats = Some(BnBatchStats {
                    mean,
                    var,
                });
                bn_xhat = Some(xhat);
                bn_invstd = Some(invstd);
            }

            let mut activated = None;
            let mut dropout_mask = None;
            if l != last {
                self.arch.activation.apply(&mut z);
                activated = Some(z.clone());
                if self.arch.dropout_rate > 0.0 {
                    if let Some(rng) = dropout_rng.as_deref_mut() {
                        let keep = 1.0 - self.arch.dropout_rate;
                        let mask = Array2::from_shape_fn(z.dim(), |_| {
                            if rng.gen::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        });
                        z = &z * &mask;
                        dropout_mask = Some(mask);
                    }
                }
            }

            caches.push(LayerCache {
                input,
                bn_xhat,
                bn_invstd,
                activated,
                dropout_mask,
            });
            stats.push(bn_stats);
            a = z;
        }
        (a, caches, stats)
    }

    /// Inference-mode forward pass: running statistics, no dropout.
    pub fn forward_eval(&self, x: &ArrayView2<'_, f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        let last = self.n_layers() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.w) + &layer.b;
            if let Some(bn) = &layer.bn {
                for r in 0..z.nrows() {
                    for j in 0..z.ncols() {
                        let xhat = (z[[r, j]] - bn.running_mean[j])
                            / (bn.running_var[j] + BN_EPS).sqrt();
                        z[[r, j]] = bn.gamma[j] * xhat + bn.beta[j];
                    }
                }
            }
            if l != last {
                self.arch.activation.apply(&mut z);
            }
            a = z;
        }
        a
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let logits = self.forward_eval(&x);
        logits
            .rows()
            .into_iter()
            .map(|row| argmax_lowest_tie(row.iter().cloned()))
            .collect()
    }

    /// Mean softmax cross-entropy of a forward pass.
    fn loss_from_logits(logits: &Array2<f64>, y: &[usize]) -> f64 {
        let mut loss = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            let row = logits.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let logsum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            loss += logsum - row[yi];
        }
        loss / y.len() as f64
    }

    /// Training-mode loss (batch statistics, no dropout). Used by the
    /// gradient checker.
    pub fn loss_train_mode(&self, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
        let (logits, _, _) = self.forward_train(&x, None);
        Self::loss_from_logits(&logits, y)
    }

    pub fn loss_eval_mode(&self, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
        Self::loss_from_logits(&self.forward_eval(&x), y)
    }

    fn backward(
        &self,
        caches: &[LayerCache],
        logits: &Array2<f64>,
        y: &[usize],
    ) -> Vec<LayerGrads> {
        let batch = y.len() as f64;
        // d(mean CE)/dlogits = (softmax - onehot) / batch
        let mut delta = logits.clone();
        for mut row in delta.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        for (i, &yi) in y.iter().enumerate() {
            delta[[i, yi]] -= 1.0;
        }
        delta.mapv_inplace(|v| v / batch);

        let mut grads: Vec<LayerGrads> = Vec::with_capacity(self.n_layers());
        for l in (0..self.n_layers()).rev() {
            let cache = &caches[l];
            let layer = &self.layers[l];
            let last = l == self.n_layers() - 1;

            let mut d_z = delta;
            if !last {
                if let Some(mask) = &cache.dropout_mask {
                    d_z = &d_z * mask;
                }
                let activated = cache.activated.as_ref().expect("hidden layer cache");
                for r in 0..d_z.nrows() {
                    for j in 0..d_z.ncols() {
                        d_z[[r, j]] *=
                            self.arch.activation.derivative_from_output(activated[[r, j]]);
                    }
                }
            }

            let mut dgamma = None;
            let mut dbeta = None;
            if let Some(bn) = &layer.bn {
                let xhat = cache.bn_xhat.as_ref().unwrap();
                let invstd = cache.bn_invstd.as_ref().unwrap();
                let m = d_z.nrows() as f64;
                let f = d_z.ncols();
                let mut dg = Array1::zeros(f);
                let mut db = Array1::zeros(f);
                for j in 0..f {
                    for r in 0..d_z.nrows() {
                        dg[j] += d_z[[r, j]] * xhat[[r, j]];
                        db[j] += d_z[[r, j]];
                    }
                }
                // dx = gamma*invstd/m * (m*dxhat_r - sum(dxhat) - xhat * sum(dxhat*xhat))
                // where dxhat = d_z * gamma; folded below.
                let mut d_input = d_z.clone();
                for j in 0..f {
                    let sum_d: f64 = (0..d_z.nrows()).map(|r| d_z[[r, j]]).sum();
                    let sum_dx: f64 = (0..d_z.nrows())
                        .map(|r| d_z[[r, j]] * xhat[[r, j]])
                        .sum();
                    for r in 0..d_z.nrows() {
                        d_input[[r, j]] = bn.gamma[j] * invstd[j] / m
                            * (m * d_z[[r, j]] - sum_d - xhat[[r, j]] * sum_dx);
                    }
                }
                d_z = d_input;
                dgamma = Some(dg);
                dbeta = Some(db);
            }

            let dw = cache.input.t().dot(&d_z);
            let db = d_z.sum_axis(Axis(0));
            delta = d_z.dot(&layer.w.t());
            grads.push(LayerGrads {
                dw,
                db,
                dgamma,
                dbeta,
            });
        }
        grads.reverse();
        grads
    }

    /// Flatten all parameters (weights, biases, batch-norm gamma/beta) in a
    /// fixed order.
    pub fn params_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.w.iter());
            out.extend(layer.b.iter());
            if let Some(bn) = &layer.bn {
                out.extend(bn.gamma.iter());
                out.extend(bn.beta.iter());
            }
        }
        out
    }

    pub fn set_params_vec(&mut self, params: &[f64]) {
        let mut at = 0;
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = params[at];
                at += 1;
            }
            for v in layer.b.iter_mut() {
                *v = params[at];
                at += 1;
            }
            if let Some(bn) = &mut layer.bn {
                for v in bn.gamma.iter_mut() {
                    *v = params[at];
                    at += 1;
                }
                for v in bn.beta.iter_mut() {
                    *v = params[at];
                    at += 1;
                }
            }
        }
        assert_eq!(at, params.len());
    }

    fn grads_vec(&self, grads: &[LayerGrads]) -> Vec<f64> {
        let mut out = Vec::new();
        for g in grads {
            out.extend(g.dw.iter());
            out.extend(g.db.iter());
            if let Some(dg) = &g.dgamma {
                out.extend(dg.iter());
            }
            if let Some(db) = &g.dbeta {
                out.extend(db.iter());
            }
        }
        out
    }
}

struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    t: usize,
    // first/second moment buffers flattened per layer piece
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

const MOMENTUM_BETA: f64 = 0.9;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    fn new(kind: OptimizerKind, lr: f64, shapes: &[usize]) -> Self {
        Optimizer {
            kind,
            lr,
            t: 0,
            m: shapes.iter().map(|&s| vec![0.0; s]).collect(),
            v: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn step(&mut self, slot: usize, params: &mut [f64], grads: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Momentum => {
                let m = &mut self.m[slot];
                for ((p, g), mi) in params.iter_mut().zip(grads).zip(m.iter_mut()) {
                    *mi = MOMENTUM_BETA * *mi + g;
                    *p -= self.lr * *mi;
                }
            }
            OptimizerKind::Adam => {
                let t = self.t as f64;
                let bias1 = 1.0 - ADAM_BETA1.powf(t);
                let bias2 = 1.0 - ADAM_BETA2.powf(t);
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                for (((p, g), mi), vi) in
                    params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut())
                {
                    *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * g;
                    *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * g * g;
                    let mhat = *mi / bias1;
                    let vhat = *vi / bias2;
                    *p -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

fn accuracy(preds: &[usize], y: &[usize]) -> f64 {
    preds.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len().max(1) as f64
}

/// Train a network on class indices; records per-epoch train (and, when an
/// eval pair is given, test) accuracy.
pub fn train(
    arch: &NetworkArchitecture,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    eval: Option<(ArrayView2<'_, f64>, &[usize])>,
    seed_base: u64,
) -> (Network, TrainingHistory) {
    let mut network = Network::new(arch.clone(), seed_base);
    let n = y.len();
    let mut history = TrainingHistory::default();
    let mut rng = seed::rng(seed_base, "mlp-train", 0);

    // one optimizer slot per layer parameter piece, in params_vec order
    let mut shapes = Vec::new();
    for layer in &network.layers {
        shapes.push(layer.w.len());
        shapes.push(layer.b.len());
        if let Some(bn) = &layer.bn {
            shapes.push(bn.gamma.len());
            shapes.push(bn.beta.len());
        }
    }
    let mut optimizer = Optimizer::new(arch.optimizer, arch.learning_rate, &shapes);

    let mut order: Vec<usize> = (0..n).collect();
    for _epoch in 0..arch.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(arch.batch_size.max(1)) {
            let mut xb = Array2::zeros((chunk.len(), x.ncols()));
            let mut yb = Vec::with_capacity(chunk.len());
            for (out, &i) in chunk.iter().enumerate() {
                xb.row_mut(out).assign(&x.row(i));
                yb.push(y[i]);
            }
            let (logits, caches, stats) = network.forward_train(&xb.view(), Some(&mut rng));
            // apply running-statistic updates
            for (layer, stat) in network.layers.iter_mut().zip(&stats) {
                if let (Some(bn), Some(s)) = (&mut layer.bn, stat) {
                    for j in 0..bn.running_mean.len() {
                        bn.running_mean[j] =
                            (1.0 - BN_MOMENTUM) * bn.running_mean[j] + BN_MOMENTUM * s.mean[j];
                        bn.running_var[j] =
                            (1.0 - BN_MOMENTUM) * bn.running_var[j] + BN_MOMENTUM * s.var[j];
                    }
                }
            }
            let grads = network.backward(&caches, &logits, &yb);

            optimizer.t += 1;
            let mut slot = 0;
            for (layer, g) in network.layers.iter_mut().zip(&grads) {
                optimizer.step(slot, layer.w.as_slice_mut().unwrap(), g.dw.as_slice().unwrap());
                slot += 1;
                optimizer.step(slot, layer.b.as_slice_mut().unwrap(), g.db.as_slice().unwrap());
                slot += 1;
                if let Some(bn) = &mut layer.bn {
                    optimizer.step(
                        slot,
                        bn.gamma.as_slice_mut().unwrap(),
                        g.dgamma.as_ref().unwrap().as_slice().unwrap(),
                    );
                    slot += 1;
                    optimizer.step(
                        slot,
                        bn.beta.as_slice_mut().unwrap(),
                        g.dbeta.as_ref().unwrap().as_slice().unwrap(),
                    );
                    slot += 1;
                }
            }
        }

        history
            .train_accuracy
            .push(accuracy(&network.predict(x), y));
        if let Some((ex, ey)) = &eval {
            history.test_accuracy.push(accuracy(&network.predict(*ex), ey));
        }
    }

    (network, history)
}

/// Compare analytic gradients against central finite differences on a small
/// network; returns the max relative error over all parameters. Dropout must
/// be disabled; batch norm (when enabled) runs in train mode on the fixed
/// batch.
pub fn mlp_gradient_check(
    arch: &NetworkArchitecture,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    seed_base: u64,
) -> f64 {
    assert_eq!(
        arch.dropout_rate, 0.0,
        "gradient check requires dropout disabled"
    );
    let mut network = Network::new(arch.clone(), seed_base);
    let (logits, caches, _) = network.forward_train(&x.view(), None);
    let grads = network.backward(&caches, &logits, y);
    let analytic = network.grads_vec(&grads);

    let params = network.params_vec();
    let h = 1e-5;
    let mut max_rel = 0.0f64;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += h;
        network.set_params_vec(&plus);
        let lp = network.loss_train_mode(x, y);
        let mut minus = params.clone();
        minus[i] -= h;
        network.set_params_vec(&minus);
        let lm = network.loss_train_mode(x, y);
        let numeric = (lp - lm) / (2.0 * h);
        // floored relative error so dead-path parameters measure absolutely
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-3);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    network.set_params_vec(&params);
    max_rel
}
