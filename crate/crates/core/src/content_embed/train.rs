use super::{ContentGraph, ContentId, EmbedError};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingParams {
    pub dimension: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Number of walk steps after the start that count as context.
    pub window: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Graphs larger than this train with negative sampling instead of the
    /// exact softmax.
    pub full_softmax_max_nodes: usize,
    pub negative_samples: usize,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        Self {
            dimension: 32,
            walk_length: 20,
            walks_per_node: 10,
            window: 5,
            learning_rate: 0.025,
            epochs: 5,
            rng_seed: 1,
            full_softmax_max_nodes: 5000,
            negative_samples: 5,
        }
    }
}

impl EmbeddingParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.dimension == 0 {
            errs.push("dimension must be >= 1".to_string());
        }
        if self.walk_length < 2 {
            errs.push("walk_length must be >= 2".to_string());
        }
        if self.walks_per_node == 0 {
            errs.push("walks_per_node must be >= 1".to_string());
        }
        if self.window == 0 {
            errs.push("window must be >= 1".to_string());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            errs.push("learning_rate must be finite and > 0".to_string());
        }
        if self.epochs == 0 {
            errs.push("epochs must be >= 1".to_string());
        }
        errs
    }
}

/// Context multiset of `c`: the first `window` steps of each of the
/// `walks_per_node` weighted random walks started at `c`.
///
/// Every node draws from its own stream of the seeded generator, so the
/// result does not depend on which other nodes were queried.
pub fn neighborhood(
    graph: &ContentGraph,
    c: ContentId,
    params: &EmbeddingParams,
) -> Result<Vec<ContentId>, EmbedError> {
    let start = graph.index_of(c)?;
    Ok(walk_contexts(graph, start, params)
        .into_iter()
        .map(|i| graph.nodes()[i])
        .collect())
}

fn walk_contexts(graph: &ContentGraph, start: usize, params: &EmbeddingParams) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    rng.set_stream(start as u64);
    let mut out = Vec::new();
    if graph.adjacency(start).is_empty() {
        return out;
    }
    for _ in 0..params.walks_per_node {
        let mut cur = start;
        for step in 1..params.walk_length {
            let adj = graph.adjacency(cur);
            if adj.is_empty() {
                break;
            }
            let pick = WeightedIndex::new(adj.iter().map(|e| e.1)).expect("positive weights");
            cur = adj[pick.sample(&mut rng)].0;
            if step <= params.window {
                out.push(cur);
            } else {
                break;
            }
        }
    }
    out
}

/// One vector per content item; a single matrix serves as both the center and
/// the context representation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub params: EmbeddingParams,
    ids: Vec<ContentId>,
    index: HashMap<ContentId, usize>,
    vectors: Vec<f64>,
    /// Mean per-pair negative log-likelihood of each training epoch.
    pub epoch_nll: Vec<f64>,
    /// Σ_c Σ_{n ∈ N(c)} log Pr(n | c) after training.
    pub objective: f64,
}

impl EmbeddingModel {
    pub fn from_vectors(ids: Vec<ContentId>, vectors: Vec<Vec<f64>>) -> Result<Self, EmbedError> {
        if ids.len() != vectors.len() || ids.is_empty() {
            return Err(EmbedError::Config("one vector per id required".into()));
        }
        let d = vectors[0].len();
        if d == 0 {
            return Err(EmbedError::Config("dimension must be >= 1".into()));
        }
        let mut flat = Vec::with_capacity(ids.len() * d);
        for v in &vectors {
            if v.len() != d {
                return Err(EmbedError::LengthMismatch(d, v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::Config("non-finite vector component".into()));
            }
            flat.extend_from_slice(v);
        }
        let index: HashMap<ContentId, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        if index.len() != ids.len() {
            return Err(EmbedError::Config("duplicate content id".into()));
        }
        Ok(Self {
            params: EmbeddingParams {
                dimension: d,
                ..Default::default()
            },
            ids,
            index,
            vectors: flat,
            epoch_nll: Vec::new(),
            objective: f64::NAN,
        })
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension
    }

    pub fn ids(&self) -> &[ContentId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, c: ContentId) -> bool {
        self.index.contains_key(&c)
    }

    pub fn index_of(&self, c: ContentId) -> Result<usize, EmbedError> {
        self.index.get(&c).copied().ok_or(EmbedError::UnknownContent(c))
    }

    pub fn vector(&self, c: ContentId) -> Result<&[f64], EmbedError> {
        let i = self.index_of(c)?;
        Ok(self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.dimension();
        &self.vectors[i * d..(i + 1) * d]
    }

    /// All parameters, row-major (`len() * dimension()`).
    pub fn parameters(&self) -> &[f64] {
        &self.vectors
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.vectors
    }

    /// CSV with header `content_id,v1..vd`; values use the shortest
    /// representation that parses back to the same f64.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), EmbedError> {
        let io = |e: csv::Error| EmbedError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["content_id".to_string()];
        header.extend((1..=self.dimension()).map(|k| format!("v{k}")));
        w.write_record(&header).map_err(io)?;
        for (i, c) in self.ids.iter().enumerate() {
            let mut rec = vec![c.0.to_string()];
            rec.extend(self.row(i).iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| EmbedError::Io(e.to_string()))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, EmbedError> {
        let mut rd = csv::Reader::from_reader(input);
        let mut ids = Vec::new();
        let mut vecs = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let line = i + 2;
            let perr = |message: String| EmbedError::Parse { line, message };
            let rec = rec.map_err(|e| perr(e.to_string()))?;
            let mut it = rec.iter();
            let id = it
                .next()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| perr("invalid content_id".into()))?;
            let v = it
                .map(|s| s.parse::<f64>().map_err(|_| perr(format!("invalid value `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            ids.push(ContentId(id));
            vecs.push(v);
        }
        Self::from_vectors(ids, vecs)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pr(n | c) for every n, in model id order.
pub fn softmax_row(model: &EmbeddingModel, c: ContentId) -> Result<Vec<f64>, EmbedError> {
    let ci = model.index_of(c)?;
    let mut p = vec![0.0; model.len()];
    softmax_into(&model.vectors, model.dimension(), ci, &mut p);
    Ok(p)
}

pub fn softmax_prob(model: &EmbeddingModel, n: ContentId, c: ContentId) -> Result<f64, EmbedError> {
    let ni = model.index_of(n)?;
    Ok(softmax_row(model, c)?[ni])
}

/// Fills `p` with the softmax over all items of f(m)·f(c); returns
/// log Σ exp(f(m)·f(c)).
fn softmax_into(vectors: &[f64], d: usize, ci: usize, p: &mut [f64]) -> f64 {
    let fc = &vectors[ci * d..(ci + 1) * d];
    for (m, pm) in p.iter_mut().enumerate() {
        *pm = dot(&vectors[m * d..(m + 1) * d], fc);
    }
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for pm in p.iter_mut() {
        *pm = (*pm - max).exp();
        z += *pm;
    }
    for pm in p.iter_mut() {
        *pm /= z;
    }
    max + z.ln()
}

/// −log Pr(n | c).
pub fn pair_loss(model: &EmbeddingModel, c: ContentId, n: ContentId) -> Result<f64, EmbedError> {
    let ci = model.index_of(c)?;
    let ni = model.index_of(n)?;
    let d = model.dimension();
    let mut p = vec![0.0; model.len()];
    let log_z = softmax_into(&model.vectors, d, ci, &mut p);
    Ok(log_z - dot(model.row(ni), model.row(ci)))
}

/// Gradient of [`pair_loss`] with respect to every parameter, row-major.
pub fn pair_gradient(model: &EmbeddingModel, c: ContentId, n: ContentId) -> Result<Vec<f64>, EmbedError> {
    let ci = model.index_of(c)?;
    let ni = model.index_of(n)?;
    let d = model.dimension();
    let mut p = vec![0.0; model.len()];
    softmax_into(&model.vectors, d, ci, &mut p);
    let mut g = vec![0.0; model.vectors.len()];
    let fc = model.row(ci).to_vec();
    for (m, &pm) in p.iter().enumerate() {
        let coeff = pm - if m == ni { 1.0 } else { 0.0 };
        let fm = model.row(m);
        for k in 0..d {
            // through the context side f(m)
            g[m * d + k] += coeff * fc[k];
            // through the center side f(c)
            g[ci * d + k] += coeff * fm[k];
        }
    }
    Ok(g)
}

/// Stochastic gradient descent over (center, context) pairs drawn from the
/// walk neighborhoods, learning rate decaying linearly to zero.
pub fn train_embeddings(graph: &ContentGraph, params: &EmbeddingParams) -> Result<EmbeddingModel, EmbedError> {
    let errs = params.validate();
    if !errs.is_empty() {
        return Err(EmbedError::Config(errs.join("; ")));
    }
    let n = graph.node_count();
    if n < 2 {
        return Err(EmbedError::Config(format!("need at least 2 items, got {n}")));
    }
    let d = params.dimension;
    if d >= n {
        return Err(EmbedError::Config(format!("dimension {d} must be below item count {n}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    rng.set_stream(u64::MAX);
    let mut vectors: Vec<f64> = (0..n * d).map(|_| (rng.gen::<f64>() - 0.5) / d as f64).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for c in 0..n {
        pairs.extend(walk_contexts(graph, c, params).into_iter().map(|m| (c, m)));
    }

    let full = n <= params.full_softmax_max_nodes;
    let total = (pairs.len() * params.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut p = vec![0.0; n];
    let mut fc = vec![0.0; d];
    let mut grad_c = vec![0.0; d];
    let mut epoch_nll = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        pairs.shuffle(&mut rng);
        let mut sum = 0.0;
        for &(ci, ni) in &pairs {
            let lr = params.learning_rate * (1.0 - step as f64 / total).max(1e-4);
            step += 1;
            fc.copy_from_slice(&vectors[ci * d..(ci + 1) * d]);
            grad_c.iter_mut().for_each(|g| *g = 0.0);
            if full {
                let log_z = softmax_into(&vectors, d, ci, &mut p);
                sum += log_z - dot(&vectors[ni * d..(ni + 1) * d], &fc);
                for (m, &pm) in p.iter().enumerate() {
                    let coeff = pm - if m == ni { 1.0 } else { 0.0 };
                    let row = &mut vectors[m * d..(m + 1) * d];
                    for k in 0..d {
                        grad_c[k] += coeff * row[k];
                        row[k] -= lr * coeff * fc[k];
                    }
                }
            } else {
                sum += negative_sampling_step(&mut vectors, d, ci, ni, &fc, &mut grad_c, lr, params, &mut rng, n);
            }
            // f(c) also moved as a context row above; apply the center-side part.
            let row = &mut vectors[ci * d..(ci + 1) * d];
            for k in 0..d {
                row[k] -= lr * grad_c[k];
            }
        }
        epoch_nll.push(sum / pairs.len().max(1) as f64);
    }

    let mut model = EmbeddingModel {
        params: params.clone(),
        index: graph.nodes().iter().enumerate().map(|(i, &c)| (c, i)).collect(),
        ids: graph.nodes().to_vec(),
        vectors,
        epoch_nll,
        objective: 0.0,
    };
    model.objective = if full {
        pairs
            .iter()
            .map(|&(ci, ni)| {
                let log_z = softmax_into(&model.vectors, d, ci, &mut p);
                dot(model.row(ni), model.row(ci)) - log_z
            })
            .sum()
    } else {
        -model.epoch_nll.last().copied().unwrap_or(0.0) * pairs.len() as f64
    };
    Ok(model)
}

#[allow(clippy::too_many_arguments)]
fn negative_sampling_step(
    vectors: &mut [f64],
    d: usize,
    ci: usize,
    ni: usize,
    fc: &[f64],
    grad_c: &mut [f64],
    lr: f64,
    params: &EmbeddingParams,
    rng: &mut ChaCha8Rng,
    n: usize,
) -> f64 {
    let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut loss = 0.0;
    let mut targets = vec![(ni, 1.0)];
    for _ in 0..params.negative_samples {
        let mut m = rng.gen_range(0..n);
        while m == ni || m == ci {
            m = rng.gen_range(0..n);
        }
        targets.push((m, 0.0));
    }
    for (m, label) in targets {
        let row = &mut vectors[m * d..(m + 1) * d];
        let s = sigmoid(dot(row, fc));
        loss -= if label > 0.0 { s.ln() } else { (1.0 - s).ln() };
        let g = s - label;
        for k in 0..d {
            grad_c[k] += g * row[k];
            row[k] -= lr * g * fc[k];
        }
    }
    loss
}
