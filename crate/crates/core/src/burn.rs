//! Belief-update recurrent network.
//!
//! Local and pairwise scores come from two-layer scorers with a residual
//! linear path, `s(x) = W2ᵀ σ(W1ᵀ x) + W3ᵀ x`, σ = leaky ReLU. Beliefs start
//! as the softmax of the local scores and are then refined for up to `T`
//! steps:
//!
//! ```text
//! s^t(e_ij) = s_l(e_ij) + Σ_{k ∈ ctx(i)} g(d_ik) Σ_w s_e(e_ij, e_kw) p^{t-1}(e_kw)
//! p^t(·|m_i) = softmax_j s^t(e_ij)
//! ```
//!
//! where `g` is a learned lookup over binned token distances and `ctx(i)`
//! holds the nearest other mentions. Training minimizes the negative
//! log-likelihood of gold entities under the last beliefs, backpropagating
//! through every unrolled step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{token_distance, DocFeatures};
use crate::model::{argmax, log_sum_exp, softmax, DocObjective, Dropout, Model};

pub const GATE_CLAMP: usize = 50;
pub const GATE_BIN_SIZE: usize = 4;
pub const GATE_BINS: usize = GATE_CLAMP / GATE_BIN_SIZE + 1;
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const DEFAULT_MAX_ITERATIONS: usize = 20;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;
pub const DEFAULT_CONTEXT_WINDOW: usize = 30;

/// One learned scalar per distance bin.
#[derive(Debug, Clone, PartialEq)]
pub struct GatingTable {
    pub values: Vec<f64>,
}

impl GatingTable {
    pub fn uniform(value: f64) -> Self {
        GatingTable {
            values: vec![value; GATE_BINS],
        }
    }

    pub fn bin(distance: usize) -> usize {
        distance.min(GATE_CLAMP) / GATE_BIN_SIZE
    }
}

impl Default for GatingTable {
    fn default() -> Self {
        GatingTable::uniform(1.0 / DEFAULT_CONTEXT_WINDOW as f64)
    }
}

/// Gate value for two mentions `distance_tokens` apart.
pub fn gate(distance_tokens: usize, table: &GatingTable) -> f64 {
    table.values[GatingTable::bin(distance_tokens)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    pub max_iterations: usize,
    /// Stop once no belief moves by this much or more.
    pub convergence_tol: f64,
    pub context_window: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            context_window: DEFAULT_CONTEXT_WINDOW,
        }
    }
}

impl InferenceConfig {
    pub fn new(max_iterations: usize, convergence_tol: f64, context_window: usize) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        if !(convergence_tol > 0.0) {
            return Err(Error::InvalidArgument("convergence tolerance must be > 0".into()));
        }
        if context_window == 0 {
            return Err(Error::InvalidArgument("context window must be at least 1".into()));
        }
        Ok(InferenceConfig {
            max_iterations,
            convergence_tol,
            context_window,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurnParams {
    pub d_l: usize,
    pub d_g: usize,
    pub hidden: usize,
    pub leaky_slope: f64,
    /// `d_l × h`, row-major.
    pub w_l1: Vec<f64>,
    pub w_l2: Vec<f64>,
    pub w_l3: Vec<f64>,
    /// `d_g × h`, row-major.
    pub w_g1: Vec<f64>,
    pub w_g2: Vec<f64>,
    pub w_g3: Vec<f64>,
    pub gating: GatingTable,
}

impl BurnParams {
    pub fn zeros(d_l: usize, d_g: usize, hidden: usize) -> Self {
        BurnParams {
            d_l,
            d_g,
            hidden,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            w_l1: vec![0.0; d_l * hidden],
            w_l2: vec![0.0; hidden],
            w_l3: vec![0.0; d_l],
            w_g1: vec![0.0; d_g * hidden],
            w_g2: vec![0.0; hidden],
            w_g3: vec![0.0; d_g],
            gating: GatingTable::uniform(0.0),
        }
    }

    /// Glorot-uniform weights per matrix; gating set to `1 / window`.
    pub fn init(d_l: usize, d_g: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect()
        };
        let w_l1 = glorot(d_l, hidden);
        let w_l2 = glorot(hidden, 1);
        let w_l3 = glorot(d_l, 1);
        let w_g1 = glorot(d_g, hidden);
        let w_g2 = glorot(hidden, 1);
        let w_g3 = glorot(d_g, 1);
        BurnParams {
            d_l,
            d_g,
            hidden,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            w_l1,
            w_l2,
            w_l3,
            w_g1,
            w_g2,
            w_g3,
            gating: GatingTable::default(),
        }
    }

    fn check(&self, doc: &DocFeatures) -> Result<()> {
        if self.d_l != doc.d_l {
            return Err(Error::DimensionMismatch {
                expected: doc.d_l,
                actual: self.d_l,
            });
        }
        if self.d_g != doc.d_g {
            return Err(Error::DimensionMismatch {
                expected: doc.d_g,
                actual: self.d_g,
            });
        }
        Ok(())
    }

    fn local_mlp(&self) -> Mlp<'_> {
        Mlp {
            w1: &self.w_l1,
            w2: &self.w_l2,
            w3: &self.w_l3,
            h: self.hidden,
            slope: self.leaky_slope,
        }
    }

    fn pair_mlp(&self) -> Mlp<'_> {
        Mlp {
            w1: &self.w_g1,
            w2: &self.w_g2,
            w3: &self.w_g3,
            h: self.hidden,
            slope: self.leaky_slope,
        }
    }
}

/// Keep-mask bits and the scale applied to kept units.
type MaskRef<'a> = Option<(&'a [u64], f64)>;

struct Mlp<'a> {
    w1: &'a [f64],
    w2: &'a [f64],
    w3: &'a [f64],
    h: usize,
    slope: f64,
}

#[inline]
fn mask_factor(mask: MaskRef<'_>, unit: usize) -> f64 {
    match mask {
        None => 1.0,
        Some((bits, scale)) => {
            if bits[unit / 64] >> (unit % 64) & 1 == 1 {
                scale
            } else {
                0.0
            }
        }
    }
}

impl Mlp<'_> {
    fn pre_activation(&self, x: &[f64], z: &mut [f64]) {
        z.fill(0.0);
        for (dd, &xd) in x.iter().enumerate() {
            if xd == 0.0 {
                continue;
            }
            let row = &self.w1[dd * self.h..(dd + 1) * self.h];
            for (zh, w) in z.iter_mut().zip(row) {
                *zh += xd * w;
            }
        }
    }

    fn forward(&self, x: &[f64], mask: MaskRef<'_>, z: &mut [f64]) -> f64 {
        self.pre_activation(x, z);
        let mut out = 0.0;
        for (hh, &zh) in z.iter().enumerate() {
            let a = if zh > 0.0 { zh } else { self.slope * zh };
            out += self.w2[hh] * a * mask_factor(mask, hh);
        }
        out + self.w3.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Accumulates `g · ∂out/∂θ` into the three gradient buffers.
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        x: &[f64],
        mask: MaskRef<'_>,
        g: f64,
        z: &mut [f64],
        dz: &mut [f64],
        gw1: &mut [f64],
        gw2: &mut [f64],
        gw3: &mut [f64],
    ) {
        self.pre_activation(x, z);
        for hh in 0..self.h {
            let zh = z[hh];
            let (a, da) = if zh > 0.0 { (zh, 1.0) } else { (self.slope * zh, self.slope) };
            let m = mask_factor(mask, hh);
            gw2[hh] += g * a * m;
            dz[hh] = g * self.w2[hh] * m * da;
        }
        for (dd, &xd) in x.iter().enumerate() {
            if xd == 0.0 {
                continue;
            }
            let row = &mut gw1[dd * self.h..(dd + 1) * self.h];
            for (gw, d) in row.iter_mut().zip(dz.iter()) {
                *gw += xd * d;
            }
        }
        for (gw, &xd) in gw3.iter_mut().zip(x) {
            *gw += g * xd;
        }
    }
}

/// Two-layer scorer with residual path:
/// `W2ᵀ LeakyReLU(W1ᵀ x) + W3ᵀ x`, with `W1` stored `len(x) × h` row-major.
pub fn mlp_score(x: &[f64], w1: &[f64], w2: &[f64], w3: &[f64], slope: f64) -> Result<f64> {
    let d = x.len();
    let h = w2.len();
    if w3.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: w3.len(),
        });
    }
    if w1.len() != d * h {
        return Err(Error::DimensionMismatch {
            expected: d * h,
            actual: w1.len(),
        });
    }
    let mlp = Mlp { w1, w2, w3, h, slope };
    let mut z = vec![0.0; h];
    Ok(mlp.forward(x, None, &mut z))
}

/// Per-mention beliefs after inference. A mention without candidates holds
/// the single placeholder belief `[1.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub beliefs: Vec<Vec<f64>>,
    /// Beliefs at every step, `history[0]` being the local-only start.
    pub history: Vec<Vec<Vec<f64>>>,
    /// Update steps performed.
    pub iterations: usize,
    pub converged: bool,
}

impl BeliefState {
    pub fn predictions(&self, doc: &DocFeatures) -> Vec<Option<usize>> {
        doc.mentions
            .iter()
            .zip(&self.beliefs)
            .map(|(m, p)| if m.n_candidates() == 0 { None } else { argmax(p) })
            .collect()
    }
}

const NO_SLOT: usize = usize::MAX;

/// Everything the backward pass needs from a forward pass.
struct Trace {
    local: Vec<Vec<f64>>,
    local_masks: Vec<u64>,
    ctx: Vec<Vec<(usize, usize)>>,
    slot_of: Vec<usize>,
    slots: Vec<(usize, usize)>,
    se: Vec<f64>,
    pair_masks: Vec<u64>,
    probs: Vec<Vec<Vec<f64>>>,
    final_scores: Vec<Vec<f64>>,
    converged: bool,
}

impl Trace {
    fn slot(&self, doc: &DocFeatures, i: usize, j: usize, k: usize, w: usize) -> usize {
        let n = doc.n_entities();
        self.slot_of[doc.mentions[i].entities[j] * n + doc.mentions[k].entities[w]]
    }
}

/// Up to `window` nearest other mentions with candidates, as `(k, gate bin)`.
/// Ties in distance go to the earlier mention.
fn context(doc: &DocFeatures, window: usize) -> Vec<Vec<(usize, usize)>> {
    doc.mentions
        .iter()
        .enumerate()
        .map(|(i, mi)| {
            if mi.n_candidates() == 0 {
                return Vec::new();
            }
            let mut others: Vec<(usize, usize)> = doc
                .mentions
                .iter()
                .enumerate()
                .filter(|(k, mk)| *k != i && mk.n_candidates() > 0)
                .map(|(k, mk)| (token_distance((mi.start, mi.end), (mk.start, mk.end)), k))
                .collect();
            others.sort_unstable();
            others.truncate(window);
            others
                .into_iter()
                .map(|(d, k)| (k, GatingTable::bin(d)))
                .collect()
        })
        .collect()
}

fn words_for(h: usize) -> usize {
    h.div_ceil(64)
}

fn mask_at(masks: &[u64], idx: usize, words: usize, scale: f64, active: bool) -> MaskRef<'_> {
    if active {
        Some((&masks[idx * words..(idx + 1) * words], scale))
    } else {
        None
    }
}

fn forward(
    doc: &DocFeatures,
    params: &BurnParams,
    cfg: &InferenceConfig,
    mut dropout: Option<&mut Dropout>,
) -> Trace {
    let h = params.hidden;
    let words = words_for(h);
    let scale = dropout.as_ref().map_or(1.0, |d| d.keep_scale());
    let use_mask = dropout.is_some();
    let mut z = vec![0.0; h];

    let lmlp = params.local_mlp();
    let mut local_masks = Vec::new();
    let mut local = Vec::with_capacity(doc.mentions.len());
    let mut eval_idx = 0;
    for (i, m) in doc.mentions.iter().enumerate() {
        let mut row = Vec::with_capacity(m.n_candidates());
        for j in 0..m.n_candidates() {
            if let Some(d) = dropout.as_deref_mut() {
                d.sample_into(h, &mut local_masks);
            }
            let mask = mask_at(&local_masks, eval_idx, words, scale, use_mask);
            row.push(lmlp.forward(doc.unary(i, j), mask, &mut z));
            eval_idx += 1;
        }
        local.push(row);
    }

    let ctx = context(doc, cfg.context_window);
    let n = doc.n_entities();
    let mut slot_of = vec![NO_SLOT; n * n];
    let mut slots = Vec::new();
    let mut se = Vec::new();
    let mut pair_masks = Vec::new();
    let gmlp = params.pair_mlp();
    for (i, edges) in ctx.iter().enumerate() {
        for &(k, _) in edges {
            for &u in &doc.mentions[i].entities {
                for &v in &doc.mentions[k].entities {
                    let key = u * n + v;
                    if slot_of[key] != NO_SLOT {
                        continue;
                    }
                    if let Some(d) = dropout.as_deref_mut() {
                        d.sample_into(h, &mut pair_masks);
                    }
                    let mask = mask_at(&pair_masks, slots.len(), words, scale, use_mask);
                    se.push(gmlp.forward(doc.pair_by_entity(u, v), mask, &mut z));
                    slot_of[key] = slots.len();
                    slots.push((u, v));
                }
            }
        }
    }

    let mut trace = Trace {
        probs: vec![local.iter().map(|s| softmax(s)).collect()],
        final_scores: local.clone(),
        local,
        local_masks,
        ctx,
        slot_of,
        slots,
        se,
        pair_masks,
        converged: false,
    };

    for _ in 0..cfg.max_iterations {
        let prev = trace.probs.last().expect("p^0 exists");
        let mut scores = trace.local.clone();
        for (i, edges) in trace.ctx.iter().enumerate() {
            for &(k, bin) in edges {
                let g = params.gating.values[bin];
                let pk = &prev[k];
                for (j, s) in scores[i].iter_mut().enumerate() {
                    let mut evidence = 0.0;
                    for (w, &p) in pk.iter().enumerate() {
                        evidence += trace.se[trace.slot(doc, i, j, k, w)] * p;
                    }
                    *s += g * evidence;
                }
            }
        }
        let next: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let delta = next
            .iter()
            .zip(prev)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        trace.probs.push(next);
        trace.final_scores = scores;
        if delta < cfg.convergence_tol {
            trace.converged = true;
            break;
        }
    }
    trace
}

/// Gradient of `Σ_i -ln p^T_i[gold_i]` with respect to every parameter.
fn backward(doc: &DocFeatures, params: &BurnParams, trace: &Trace, dropout_scale: Option<f64>, grad: &mut BurnParams) {
    let tf = trace.probs.len() - 1;
    let mut g_scores: Vec<Vec<f64>> = doc
        .mentions
        .iter()
        .zip(&trace.probs[tf])
        .map(|(m, p)| match m.gold {
            Some(gold) => {
                let mut d = p.clone();
                d[gold] -= 1.0;
                d
            }
            None => vec![0.0; p.len()],
        })
        .collect();
    let mut d_local: Vec<Vec<f64>> = trace.local.iter().map(|l| vec![0.0; l.len()]).collect();
    let mut d_se = vec![0.0; trace.se.len()];

    for t in (1..=tf).rev() {
        let prev = &trace.probs[t - 1];
        let mut d_prev: Vec<Vec<f64>> = prev.iter().map(|p| vec![0.0; p.len()]).collect();
        for (i, edges) in trace.ctx.iter().enumerate() {
            let gi = &g_scores[i];
            for (dl, g) in d_local[i].iter_mut().zip(gi) {
                *dl += g;
            }
            for &(k, bin) in edges {
                let gate_value = params.gating.values[bin];
                let pk = &prev[k];
                let mut d_gate = 0.0;
                for (j, &gij) in gi.iter().enumerate() {
                    if gij == 0.0 {
                        continue;
                    }
                    let mut evidence = 0.0;
                    for (w, &p) in pk.iter().enumerate() {
                        let slot = trace.slot(doc, i, j, k, w);
                        let s = trace.se[slot];
                        evidence += s * p;
                        d_se[slot] += gij * gate_value * p;
                        d_prev[k][w] += gij * gate_value * s;
                    }
                    d_gate += gij * evidence;
                }
                grad.gating.values[bin] += d_gate;
            }
        }
        g_scores = prev
            .iter()
            .zip(&d_prev)
            .map(|(p, dp)| {
                let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
                p.iter().zip(dp).map(|(a, b)| a * (b - inner)).collect()
            })
            .collect();
    }
    for (dl, gs) in d_local.iter_mut().zip(&g_scores) {
        for (d, g) in dl.iter_mut().zip(gs) {
            *d += g;
        }
    }

    let h = params.hidden;
    let words = words_for(h);
    let scale = dropout_scale.unwrap_or(1.0);
    let use_mask = dropout_scale.is_some();
    let mut z = vec![0.0; h];
    let mut dz = vec![0.0; h];

    let lmlp = params.local_mlp();
    let mut eval_idx = 0;
    for (i, dl) in d_local.iter().enumerate() {
        for (j, &g) in dl.iter().enumerate() {
            if g != 0.0 {
                let mask = mask_at(&trace.local_masks, eval_idx, words, scale, use_mask);
                lmlp.backward(
                    doc.unary(i, j),
                    mask,
                    g,
                    &mut z,
                    &mut dz,
                    &mut grad.w_l1,
                    &mut grad.w_l2,
                    &mut grad.w_l3,
                );
            }
            eval_idx += 1;
        }
    }
    let gmlp = params.pair_mlp();
    for (slot, &(u, v)) in trace.slots.iter().enumerate() {
        let g = d_se[slot];
        if g == 0.0 {
            continue;
        }
        let mask = mask_at(&trace.pair_masks, slot, words, scale, use_mask);
        gmlp.backward(
            doc.pair_by_entity(u, v),
            mask,
            g,
            &mut z,
            &mut dz,
            &mut grad.w_g1,
            &mut grad.w_g2,
            &mut grad.w_g3,
        );
    }
}

fn with_placeholders(doc: &DocFeatures, probs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    doc.mentions
        .iter()
        .zip(probs)
        .map(|(m, p)| if m.n_candidates() == 0 { vec![1.0] } else { p.clone() })
        .collect()
}

/// Runs belief updates on one document.
pub fn infer(doc: &DocFeatures, params: &BurnParams, cfg: &InferenceConfig) -> Result<BeliefState> {
    params.check(doc)?;
    let trace = forward(doc, params, cfg, None);
    let history: Vec<Vec<Vec<f64>>> = trace.probs.iter().map(|p| with_placeholders(doc, p)).collect();
    Ok(BeliefState {
        beliefs: history.last().cloned().unwrap_or_default(),
        iterations: trace.probs.len() - 1,
        converged: trace.converged,
        history,
    })
}

/// A trained or trainable network together with its inference settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BurnModel {
    pub params: BurnParams,
    pub inference: InferenceConfig,
}

impl BurnModel {
    pub fn new(params: BurnParams, inference: InferenceConfig) -> Self {
        BurnModel { params, inference }
    }
}

fn objective_from_trace(doc: &DocFeatures, trace: &Trace) -> DocObjective {
    let mut obj = DocObjective::default();
    let tf = trace.probs.len() - 1;
    for (i, m) in doc.mentions.iter().enumerate() {
        match m.gold {
            Some(gold) => {
                let s = &trace.final_scores[i];
                obj.loss += log_sum_exp(s) - s[gold];
                obj.counted += 1;
                if argmax(&trace.probs[tf][i]) == Some(gold) {
                    obj.correct += 1;
                }
            }
            None if m.labeled => obj.excluded += 1,
            None => {}
        }
    }
    obj
}

impl Model for BurnModel {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let p = &self.params;
        vec![
            ("W_l1", &p.w_l1),
            ("W_l2", &p.w_l2),
            ("W_l3", &p.w_l3),
            ("W_g1", &p.w_g1),
            ("W_g2", &p.w_g2),
            ("W_g3", &p.w_g3),
            ("gating", &p.gating.values),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let p = &mut self.params;
        vec![
            &mut p.w_l1,
            &mut p.w_l2,
            &mut p.w_l3,
            &mut p.w_g1,
            &mut p.w_g2,
            &mut p.w_g3,
            &mut p.gating.values,
        ]
    }

    fn zeroed(&self) -> Self {
        let mut params = BurnParams::zeros(self.params.d_l, self.params.d_g, self.params.hidden);
        params.leaky_slope = self.params.leaky_slope;
        BurnModel {
            params,
            inference: self.inference,
        }
    }

    fn objective(&self, doc: &DocFeatures, dropout: Option<&mut Dropout>, grad: Option<&mut Self>) -> DocObjective {
        let scale = dropout.as_ref().map(|d| d.keep_scale());
        let trace = forward(doc, &self.params, &self.inference, dropout);
        let obj = objective_from_trace(doc, &trace);
        if let Some(g) = grad {
            if obj.counted > 0 {
                backward(doc, &self.params, &trace, scale, &mut g.params);
            }
        }
        obj
    }

    fn predict(&self, doc: &DocFeatures) -> Vec<Option<usize>> {
        let trace = forward(doc, &self.params, &self.inference, None);
        let last = trace.probs.last().expect("p^0 exists");
        doc.mentions
            .iter()
            .zip(last)
            .map(|(m, p)| if m.n_candidates() == 0 { None } else { argmax(p) })
            .collect()
    }
}

/// Negative log-likelihood of gold entities over a corpus, no dropout.
pub fn loss(docs: &[DocFeatures], model: &BurnModel) -> Result<f64> {
    let mut total = 0.0;
    for doc in docs {
        model.params.check(doc)?;
        total += model.objective(doc, None, None).loss;
    }
    Ok(total)
}

/// Loss and its exact gradient over a corpus, no dropout. The gradient is
/// returned as a model whose parameters hold partial derivatives.
pub fn grad(docs: &[DocFeatures], model: &BurnModel) -> Result<(f64, BurnModel)> {
    let mut g = model.zeroed();
    let mut total = 0.0;
    for doc in docs {
        model.params.check(doc)?;
        total += model.objective(doc, None, Some(&mut g)).loss;
    }
    Ok((total, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(local: [[f64; 2]; 2], pair: impl Fn(usize, usize, usize, usize) -> f64) -> DocFeatures {
        DocFeatures::from_raw(
            "d",
            &[(0, 1), (2, 3)],
            &[
                vec![vec![local[0][0]], vec![local[0][1]]],
                vec![vec![local[1][0]], vec![local[1][1]]],
            ],
            &[Some(0), Some(1)],
            (1, 1),
            |i, j, k, w| vec![pair(i, j, k, w)],
        )
        .unwrap()
    }

    /// Parameters whose scorers reduce to the identity on 1-d features.
    fn identity_params() -> BurnParams {
        let mut p = BurnParams::zeros(1, 1, 2);
        p.w_l3 = vec![1.0];
        p.w_g3 = vec![1.0];
        p.gating = GatingTable::uniform(1.0);
        p
    }

    #[test]
    fn gate_bins() {
        let table = GatingTable {
            values: (0..GATE_BINS).map(|b| b as f64).collect(),
        };
        assert_eq!(GATE_BINS, 13);
        assert_eq!(gate(0, &table), 0.0);
        assert_eq!(gate(7, &table), 1.0);
        assert_eq!(gate(50, &table), 12.0);
        assert_eq!(gate(53, &table), 12.0);
        assert_eq!(gate(10_000, &table), 12.0);
    }

    #[test]
    fn mlp_examples() {
        let x = [0.5, -2.0, 3.0];
        let h = 4;
        assert_eq!(mlp_score(&x, &[0.0; 12], &[0.0; 4], &[0.0; 3], 0.01).unwrap(), 0.0);
        assert_eq!(mlp_score(&x, &[0.0; 12], &[1.0; 4], &[1.0; 3], 0.01).unwrap(), 1.5);
        assert!(mlp_score(&x, &[0.0; 11], &[0.0; 4], &[0.0; 3], 0.01).is_err());
        assert!(mlp_score(&x, &[0.0; 12], &[0.0; 4], &[0.0; 2], 0.01).is_err());

        // scalar-loop reference
        let w1: Vec<f64> = (0..12).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let w2 = [0.3, -1.2, 0.8, 2.0];
        let w3 = [0.1, 0.2, -0.3];
        let mut expected = 0.0;
        for hh in 0..h {
            let mut zh = 0.0;
            for d in 0..3 {
                zh += x[d] * w1[d * h + hh];
            }
            let a = if zh > 0.0 { zh } else { 0.01 * zh };
            expected += w2[hh] * a;
        }
        for d in 0..3 {
            expected += w3[d] * x[d];
        }
        let got = mlp_score(&x, &w1, &w2, &w3, 0.01).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_params_give_uniform_beliefs() {
        let doc = two_by_two([[1.0, 2.0], [3.0, -1.0]], |i, j, k, w| (i + j + k + w) as f64);
        let state = infer(&doc, &BurnParams::zeros(1, 1, 3), &InferenceConfig::default()).unwrap();
        assert!(state.converged);
        assert_eq!(state.iterations, 1);
        for step in &state.history {
            for p in step {
                assert_eq!(p, &vec![0.5, 0.5]);
            }
        }
    }

    #[test]
    fn single_mention_stays_local() {
        let doc = DocFeatures::from_raw("d", &[(0, 1)], &[vec![vec![0.2], vec![1.1], vec![-0.4]]], &[None], (1, 1), |_, _, _, _| vec![9.0])
            .unwrap();
        let p = identity_params();
        let state = infer(&doc, &p, &InferenceConfig::default()).unwrap();
        let expected = softmax(&[0.2, 1.1, -0.4]);
        for step in &state.history {
            assert_eq!(step[0], expected);
        }
    }

    #[test]
    fn one_step_matches_hand_computation() {
        let local = [[0.3, -0.2], [0.1, 0.6]];
        let se = |i: usize, j: usize, k: usize, w: usize| 0.5 * (1 + i + 2 * j) as f64 - 0.25 * (k + 3 * w) as f64;
        let doc = two_by_two(local, se);
        let cfg = InferenceConfig::new(1, 1e-6, 30).unwrap();
        let state = infer(&doc, &identity_params(), &cfg).unwrap();

        let p0: Vec<Vec<f64>> = local.iter().map(|l| softmax(l)).collect();
        for i in 0..2 {
            let k = 1 - i;
            let s1: Vec<f64> = (0..2)
                .map(|j| local[i][j] + (0..2).map(|w| se(i, j, k, w) * p0[k][w]).sum::<f64>())
                .collect();
            let expected = softmax(&s1);
            for j in 0..2 {
                assert!((state.history[1][i][j] - expected[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gating_disables_global_path() {
        let doc = two_by_two([[0.3, -0.2], [0.1, 0.6]], |_, j, _, w| (j * 2 + w) as f64);
        let mut p = identity_params();
        p.gating = GatingTable::uniform(0.0);
        let state = infer(&doc, &p, &InferenceConfig::default()).unwrap();
        for step in &state.history {
            assert_eq!(step, &state.history[0]);
        }
    }

    #[test]
    fn empty_candidate_list_gets_placeholder() {
        let doc = DocFeatures::from_raw(
            "d",
            &[(0, 1), (3, 4)],
            &[vec![], vec![vec![0.5], vec![0.1]]],
            &[None, Some(0)],
            (1, 1),
            |_, _, _, _| vec![1.0],
        )
        .unwrap();
        let state = infer(&doc, &identity_params(), &InferenceConfig::default()).unwrap();
        assert_eq!(state.beliefs[0], vec![1.0]);
        assert_eq!(state.predictions(&doc), vec![None, Some(0)]);
    }

    #[test]
    fn loss_examples() {
        // uniform beliefs over k candidates → ln k
        let doc = DocFeatures::from_raw("d", &[(0, 1)], &[vec![vec![0.0]; 3]], &[Some(2)], (1, 1), |_, _, _, _| vec![0.0]).unwrap();
        let model = BurnModel::new(BurnParams::zeros(1, 1, 2), InferenceConfig::default());
        assert!((loss(std::slice::from_ref(&doc), &model).unwrap() - 3f64.ln()).abs() < 1e-15);

        // near-certain beliefs → loss near 0
        let doc = DocFeatures::from_raw("d", &[(0, 1)], &[vec![vec![50.0], vec![0.0]]], &[Some(0)], (1, 1), |_, _, _, _| vec![0.0]).unwrap();
        let model = BurnModel::new(identity_params(), InferenceConfig::default());
        let l = loss(&[doc], &model).unwrap();
        assert!((0.0..1e-20).contains(&l));
    }

    #[test]
    fn pair_weights_unreachable_without_gating() {
        let doc = two_by_two([[0.3, -0.2], [0.1, 0.6]], |i, j, k, w| (i + 2 * j) as f64 - (k + w) as f64);
        let mut params = BurnParams::init(1, 1, 4, 3);
        params.gating = GatingTable::uniform(0.0);
        let model = BurnModel::new(params, InferenceConfig::new(1, 1e-300, 30).unwrap());
        let (_, g) = grad(&[doc], &model).unwrap();
        assert!(g.params.w_g1.iter().chain(&g.params.w_g2).chain(&g.params.w_g3).all(|&x| x == 0.0));
        assert!(g.params.w_l3.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn symmetric_instance_has_zero_gradient() {
        let doc = DocFeatures::from_raw(
            "d",
            &[(0, 1), (2, 3)],
            &[vec![vec![0.0; 2]; 2], vec![vec![0.0; 2]; 2]],
            &[Some(0), Some(1)],
            (2, 2),
            |_, _, _, _| vec![0.0, 0.0],
        )
        .unwrap();
        let model = BurnModel::new(BurnParams::init(2, 2, 4, 9), InferenceConfig::default());
        let (l, g) = grad(&[doc], &model).unwrap();
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-12);
        for (_, t) in g.tensors() {
            assert!(t.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn context_window_prefers_nearest_then_earliest() {
        let doc = DocFeatures::from_raw(
            "d",
            &[(0, 1), (3, 4), (6, 7), (40, 41)],
            &[vec![vec![0.0]], vec![vec![0.0]], vec![vec![0.0]], vec![vec![0.0]]],
            &[None; 4],
            (1, 1),
            |_, _, _, _| vec![0.0],
        )
        .unwrap();
        let ctx = context(&doc, 2);
        // mention 1 is 2 tokens from both 0 and 2
        assert_eq!(ctx[1], vec![(0, 0), (2, 0)]);
        assert_eq!(ctx[3], vec![(2, GatingTable::bin(33)), (1, GatingTable::bin(36))]);
    }

    #[test]
    fn config_validation() {
        assert!(InferenceConfig::new(0, 1e-6, 30).is_err());
        assert!(InferenceConfig::new(20, 0.0, 30).is_err());
        assert!(InferenceConfig::new(20, 1e-6, 0).is_err());
    }
}
