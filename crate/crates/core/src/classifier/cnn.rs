use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

/// Architecture: `stages` x [conv same-padding -> ReLU -> dropout -> max-pool],
/// then flatten -> dense(hidden, ReLU) -> dense(classes) with softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnSpec {
    pub input_side: usize,
    pub stages: usize,
    pub filters_per_stage: usize,
    pub kernel: usize,
    pub dropout_rate: f32,
    pub pool: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            input_side: 32,
            stages: 2,
            filters_per_stage: 32,
            kernel: 3,
            dropout_rate: 0.2,
            pool: 2,
            hidden: 64,
            classes: 2,
        }
    }
}

impl CnnSpec {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidSpec(m.to_string()));
        if self.stages == 0 || self.filters_per_stage == 0 || self.hidden == 0 {
            return bad("stages, filters and hidden width must be positive");
        }
        if self.kernel.is_multiple_of(2) {
            return bad("kernel must be odd for same padding");
        }
        if self.pool < 2 {
            return bad("pool must be at least 2");
        }
        if self.classes < 2 {
            return bad("need at least 2 classes");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must be in [0, 1)");
        }
        let shrink = self.pool.checked_pow(self.stages as u32).unwrap_or(usize::MAX);
        if self.input_side == 0 || !self.input_side.is_multiple_of(shrink) {
            return Err(ClassifierError::InvalidSpec(format!(
                "input side {} is not divisible by {}",
                self.input_side, shrink
            )));
        }
        Ok(())
    }

    /// Spatial side at the input of each stage, then after the last pool.
    pub fn sides(&self) -> Vec<usize> {
        (0..=self.stages).map(|s| self.input_side / self.pool.pow(s as u32)).collect()
    }

    pub fn flatten_len(&self) -> usize {
        let side = self.input_side / self.pool.pow(self.stages as u32);
        side * side * self.filters_per_stage
    }

    pub fn param_count(&self) -> usize {
        let k2 = self.kernel * self.kernel;
        let mut n = 0;
        let mut cin = 1;
        for _ in 0..self.stages {
            n += k2 * cin * self.filters_per_stage + self.filters_per_stage;
            cin = self.filters_per_stage;
        }
        n + self.flatten_len() * self.hidden + self.hidden + self.hidden * self.classes + self.classes
    }

    /// Shapes of the parameter tensors in storage order. Biases are 1 x n.
    pub(crate) fn param_shapes(&self) -> Vec<(usize, usize)> {
        let k2 = self.kernel * self.kernel;
        let mut shapes = Vec::new();
        let mut cin = 1;
        for _ in 0..self.stages {
            shapes.push((k2 * cin, self.filters_per_stage));
            shapes.push((1, self.filters_per_stage));
            cin = self.filters_per_stage;
        }
        shapes.extend([
            (self.flatten_len(), self.hidden),
            (1, self.hidden),
            (self.hidden, self.classes),
            (1, self.classes),
        ]);
        shapes
    }
}

/// Activations are kept as `(batch * h * w, channels)`, rows in
/// batch-major, then row-major pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub spec: CnnSpec,
    pub(crate) params: Vec<Array2<f32>>,
}

struct StageCache {
    cols: Array2<f32>,
    relu_mask: Array2<bool>,
    drop_mask: Option<Array2<f32>>,
    pool_src: Vec<u32>,
    side: usize,
    pre_pool_rows: usize,
}

pub(crate) struct ForwardCache {
    stages: Vec<StageCache>,
    flat: Array2<f32>,
    hidden: Array2<f32>,
    probs: Array2<f32>,
}

impl ForwardCache {
    pub(crate) fn probs(&self) -> &Array2<f32> {
        &self.probs
    }
}

fn im2col(x: &Array2<f32>, batch: usize, side: usize, k: usize) -> Array2<f32> {
    let c = x.ncols();
    let half = (k / 2) as isize;
    let mut cols = Array2::<f32>::zeros((batch * side * side, k * k * c));
    for b in 0..batch {
        for y in 0..side {
            for xx in 0..side {
                let row = b * side * side + y * side + xx;
                let mut out = cols.row_mut(row);
                for ky in 0..k {
                    let sy = y as isize + ky as isize - half;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let sx = xx as isize + kx as isize - half;
                        if sx < 0 || sx >= side as isize {
                            continue;
                        }
                        let src = b * side * side + sy as usize * side + sx as usize;
                        let off = (ky * k + kx) * c;
                        out.slice_mut(s![off..off + c]).assign(&x.row(src));
                    }
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &Array2<f32>, batch: usize, side: usize, k: usize, c: usize) -> Array2<f32> {
    let half = (k / 2) as isize;
    let mut dx = Array2::<f32>::zeros((batch * side * side, c));
    for b in 0..batch {
        for y in 0..side {
            for xx in 0..side {
                let row = dcols.row(b * side * side + y * side + xx);
                for ky in 0..k {
                    let sy = y as isize + ky as isize - half;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let sx = xx as isize + kx as isize - half;
                        if sx < 0 || sx >= side as isize {
                            continue;
                        }
                        let dst = b * side * side + sy as usize * side + sx as usize;
                        let off = (ky * k + kx) * c;
                        let mut target = dx.row_mut(dst);
                        target += &row.slice(s![off..off + c]);
                    }
                }
            }
        }
    }
    dx
}

/// Max-pool; returns the output and, per output element, the source row.
fn max_pool(x: &Array2<f32>, batch: usize, side: usize, p: usize) -> (Array2<f32>, Vec<u32>) {
    let c = x.ncols();
    let out_side = side / p;
    let mut out = Array2::<f32>::from_elem((batch * out_side * out_side, c), f32::NEG_INFINITY);
    let mut src = vec![0u32; out.len()];
    for b in 0..batch {
        for oy in 0..out_side {
            for ox in 0..out_side {
                let orow = b * out_side * out_side + oy * out_side + ox;
                for dy in 0..p {
                    for dx in 0..p {
                        let irow = b * side * side + (oy * p + dy) * side + ox * p + dx;
                        for ch in 0..c {
                            let v = x[[irow, ch]];
                            if v > out[[orow, ch]] {
                                out[[orow, ch]] = v;
                                src[orow * c + ch] = irow as u32;
                            }
                        }
                    }
                }
            }
        }
    }
    (out, src)
}

fn add_bias(m: &mut Array2<f32>, bias: &Array2<f32>) {
    *m += &bias.row(0);
}

impl Cnn {
    /// Glorot-uniform weights and zero biases from `seed`.
    pub fn new(spec: CnnSpec, seed: u64) -> Result<Self, ClassifierError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k2 = spec.kernel * spec.kernel;
        let params = spec
            .param_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (rows, cols))| {
                if rows == 1 {
                    return Array2::zeros((rows, cols));
                }
                let is_conv = i < 2 * spec.stages;
                let (fan_in, fan_out) = if is_conv { (rows, k2 * cols) } else { (rows, cols) };
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
                Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
            })
            .collect();
        Ok(Cnn { spec, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Stacks images into the activation layout, scaled to [0, 1].
    pub(crate) fn input(&self, images: &[&Array2<u8>]) -> Result<Array2<f32>, ClassifierError> {
        let side = self.spec.input_side;
        let mut x = Array2::<f32>::zeros((images.len() * side * side, 1));
        for (b, img) in images.iter().enumerate() {
            if img.dim() != (side, side) {
                return Err(ClassifierError::ShapeMismatch {
                    expected: side,
                    rows: img.nrows(),
                    cols: img.ncols(),
                });
            }
            for (i, &v) in img.iter().enumerate() {
                x[[b * side * side + i, 0]] = v as f32 / 255.0;
            }
        }
        Ok(x)
    }

    /// Forward pass. With `rng`, dropout is active.
    pub(crate) fn forward(&self, x: Array2<f32>, batch: usize, mut rng: Option<&mut ChaCha8Rng>) -> ForwardCache {
        let spec = &self.spec;
        let mut act = x;
        let mut side = spec.input_side;
        let mut stages = Vec::with_capacity(spec.stages);
        for s in 0..spec.stages {
            let cols = im2col(&act, batch, side, spec.kernel);
            let mut z = cols.dot(&self.params[2 * s]);
            add_bias(&mut z, &self.params[2 * s + 1]);
            let relu_mask = z.mapv(|v| v > 0.0);
            z.mapv_inplace(|v| v.max(0.0));
            let drop_mask = rng.as_deref_mut().filter(|_| spec.dropout_rate > 0.0).map(|r| {
                let keep = 1.0 - spec.dropout_rate;
                let mask = Array2::from_shape_simple_fn(z.dim(), || if r.random::<f32>() < keep { 1.0 / keep } else { 0.0 });
                z *= &mask;
                mask
            });
            let pre_pool_rows = z.nrows();
            let (pooled, pool_src) = max_pool(&z, batch, side, spec.pool);
            stages.push(StageCache {
                cols,
                relu_mask,
                drop_mask,
                pool_src,
                side,
                pre_pool_rows,
            });
            act = pooled;
            side /= spec.pool;
        }
        let flat = act
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((batch, spec.flatten_len()))
            .expect("flatten matches spec");
        let n = self.params.len();
        let mut hidden = flat.dot(&self.params[n - 4]);
        add_bias(&mut hidden, &self.params[n - 3]);
        hidden.mapv_inplace(|v| v.max(0.0));
        let mut logits = hidden.dot(&self.params[n - 2]);
        add_bias(&mut logits, &self.params[n - 1]);
        for mut row in logits.rows_mut() {
            let m = row.fold(f32::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - m).exp());
            let sum = row.sum();
            row /= sum;
        }
        ForwardCache {
            stages,
            flat,
            hidden,
            probs: logits,
        }
    }

    /// Mean cross-entropy of cached probabilities against `labels`.
    pub(crate) fn loss(probs: &Array2<f32>, labels: &[u8]) -> f64 {
        let total: f64 = labels
            .iter()
            .enumerate()
            .map(|(b, &l)| -(probs[[b, l as usize]].max(1e-7) as f64).ln())
            .sum();
        total / labels.len() as f64
    }

    /// Gradients of the mean cross-entropy, in parameter order.
    pub(crate) fn backward(&self, cache: &ForwardCache, labels: &[u8]) -> Vec<Array2<f32>> {
        let spec = &self.spec;
        let batch = labels.len();
        let n = self.params.len();
        let mut grads: Vec<Array2<f32>> = self.params.iter().map(|p| Array2::zeros(p.dim())).collect();

        let mut d = cache.probs.clone();
        for (b, &l) in labels.iter().enumerate() {
            d[[b, l as usize]] -= 1.0;
        }
        d /= batch as f32;
        grads[n - 2] = cache.hidden.t().dot(&d);
        grads[n - 1] = d.sum_axis(Axis(0)).insert_axis(Axis(0));
        let mut dh = d.dot(&self.params[n - 2].t());
        dh.zip_mut_with(&cache.hidden, |g, &h| {
            if h <= 0.0 {
                *g = 0.0
            }
        });
        grads[n - 4] = cache.flat.t().dot(&dh);
        grads[n - 3] = dh.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dflat = dh.dot(&self.params[n - 4].t());
        let mut dact = dflat
            .into_shape_with_order((cache.flat.len() / spec.filters_per_stage, spec.filters_per_stage))
            .expect("unflatten matches spec");

        for s in (0..spec.stages).rev() {
            let st = &cache.stages[s];
            let c = dact.ncols();
            let mut dz = Array2::<f32>::zeros((st.pre_pool_rows, c));
            for (i, g) in dact.iter().enumerate() {
                dz[[st.pool_src[i] as usize, i % c]] += g;
            }
            if let Some(mask) = &st.drop_mask {
                dz *= mask;
            }
            dz.zip_mut_with(&st.relu_mask, |g, &on| {
                if !on {
                    *g = 0.0
                }
            });
            grads[2 * s] = st.cols.t().dot(&dz);
            grads[2 * s + 1] = dz.sum_axis(Axis(0)).insert_axis(Axis(0));
            if s > 0 {
                let dcols = dz.dot(&self.params[2 * s].t());
                let cin = self.params[2 * s].nrows() / (spec.kernel * spec.kernel);
                dact = col2im(&dcols, batch, st.side, spec.kernel, cin);
            }
        }
        grads
    }

    /// Positive-class probabilities for a batch, without dropout.
    pub fn positive_scores(&self, images: &[&Array2<u8>]) -> Result<Array1<f32>, ClassifierError> {
        let x = self.input(images)?;
        let cache = self.forward(x, images.len(), None);
        Ok(cache.probs.column(1).to_owned())
    }
}
