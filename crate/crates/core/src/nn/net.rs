use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::lstm::{self, LstmTrace};
use super::ops::{self, AttnGrads, AttnTrace, LinearRef};
use super::{NnError, Tensor};
use crate::kg::{Statement, Symbol};

/// Names of the three memory-type encoders, in attention row order.
pub const MEMORY_STORES: [&str; 3] = ["short", "episodic", "semantic"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    /// Three store encoders, attention over them, then the dueling head.
    Memory,
    /// One encoder over a flat sequence feeding the dueling head directly.
    History,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub kind: NetKind,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Widths of the ReLU trunk shared by the value and advantage branches.
    pub mlp_hidden: Vec<usize>,
    pub n_actions: usize,
    pub max_val: f64,
    /// Qualifier keys (symbol ids) that get a learnable scale. Only used by
    /// [`NetKind::Memory`]; the history network uses a unit scale.
    #[serde(default)]
    pub qualifier_keys: Vec<u32>,
}

impl NetConfig {
    /// Default memory network, about 86.7K parameters on the 27-symbol
    /// default layout.
    pub fn humemai(vocab_size: usize, qualifier_keys: &[Symbol], n_actions: usize, max_val: f64) -> Self {
        Self {
            kind: NetKind::Memory,
            vocab_size,
            embed_dim: 64,
            hidden_dim: 52,
            mlp_hidden: vec![64],
            n_actions,
            max_val,
            qualifier_keys: qualifier_keys.iter().map(|s| s.0).collect(),
        }
    }

    /// Default history network, about 160K parameters on the default layout.
    pub fn baseline(vocab_size: usize, n_actions: usize, max_val: f64) -> Self {
        Self {
            kind: NetKind::History,
            vocab_size,
            embed_dim: 64,
            hidden_dim: 64,
            mlp_hidden: vec![320, 320],
            n_actions,
            max_val,
            qualifier_keys: Vec::new(),
        }
    }

    pub fn n_stores(&self) -> usize {
        match self.kind {
            NetKind::Memory => 3,
            NetKind::History => 1,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |msg: &str| Err(NnError::InvalidArgument(msg.to_owned()));
        if self.vocab_size == 0 || self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("vocab_size, embed_dim and hidden_dim must be positive");
        }
        if self.n_actions == 0 {
            return bad("n_actions must be positive");
        }
        if self.mlp_hidden.contains(&0) {
            return bad("mlp_hidden widths must be positive");
        }
        if !(self.max_val > 0.0 && self.max_val.is_finite()) {
            return bad("max_val must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Seg {
    pub off: usize,
    pub len: usize,
}

impl Seg {
    fn range(self) -> std::ops::Range<usize> {
        self.off..self.off + self.len
    }
}

#[derive(Debug, Clone, Copy)]
struct LinearIdx {
    w: Seg,
    b: Seg,
}

#[derive(Debug, Clone, Copy)]
struct LstmIdx {
    w_ih: Seg,
    w_hh: Seg,
    bias: Seg,
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    pub seg: Seg,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub entries: Vec<Entry>,
    embedding: Seg,
    scale: Option<Seg>,
    lstm: Vec<LstmIdx>,
    attn: Option<[LinearIdx; 3]>,
    trunk: Vec<LinearIdx>,
    value: LinearIdx,
    adv: LinearIdx,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &NetConfig) -> Self {
        let mut entries: Vec<Entry> = Vec::new();
        let mut total = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let len = shape.iter().product();
            let seg = Seg { off: total, len };
            total += len;
            entries.push(Entry { name, shape, seg });
            seg
        };
        let (d, h) = (cfg.embed_dim, cfg.hidden_dim);
        let embedding = push("embedding".into(), vec![cfg.vocab_size, d]);
        let scale = match cfg.kind {
            NetKind::Memory if !cfg.qualifier_keys.is_empty() => Some(push("scale".into(), vec![cfg.qualifier_keys.len()])),
            _ => None,
        };
        let names: &[&str] = match cfg.kind {
            NetKind::Memory => &MEMORY_STORES,
            NetKind::History => &["history"],
        };
        let lstm = names
            .iter()
            .map(|n| LstmIdx {
                w_ih: push(format!("lstm.{n}.w_ih"), vec![4 * h, d]),
                w_hh: push(format!("lstm.{n}.w_hh"), vec![4 * h, h]),
                bias: push(format!("lstm.{n}.bias"), vec![4 * h]),
            })
            .collect();
        let mut linear = |name: &str, rows: usize, cols: usize| LinearIdx {
            w: push(format!("{name}.w"), vec![rows, cols]),
            b: push(format!("{name}.b"), vec![rows]),
        };
        let attn = match cfg.kind {
            NetKind::Memory => Some([linear("attn.query", h, h), linear("attn.key", h, h), linear("attn.value", h, h)]),
            NetKind::History => None,
        };
        let mut width = h;
        let mut trunk = Vec::new();
        for (i, &m) in cfg.mlp_hidden.iter().enumerate() {
            trunk.push(linear(&format!("mlp.trunk.{i}"), m, width));
            width = m;
        }
        let value = linear("mlp.value", 1, width);
        let adv = linear("mlp.advantage", cfg.n_actions, width);
        Self {
            entries,
            embedding,
            scale,
            lstm,
            attn,
            trunk,
            value,
            adv,
            total,
        }
    }
}

/// One statement resolved to embedding rows.
#[derive(Debug, Clone, Copy)]
struct Token {
    syms: [usize; 3],
    /// (key symbol, scale index, normalized value)
    key: Option<(usize, Option<usize>, f64)>,
}

/// Q-values and, for memory networks, the 3×3 attention matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub q: Vec<f64>,
    pub attention: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone)]
struct Record {
    tokens: Vec<Vec<Token>>,
    lstm: Vec<LstmTrace>,
    attn: Option<AttnTrace>,
    trunk_in: Vec<Vec<f64>>,
    trunk_pre: Vec<Vec<f64>>,
    feat: Vec<f64>,
}

/// Holds the intermediate values of one recorded forward pass.
#[derive(Debug, Clone, Default)]
pub struct GradTape {
    record: Option<Box<Record>>,
}

/// Accumulated parameter gradients, laid out like [`QNet::params`].
#[derive(Debug, Clone)]
pub struct Gradients {
    flat: Vec<f64>,
    dproj: Vec<Vec<f64>>,
    pending: bool,
}

impl Gradients {
    pub fn zeros(net: &QNet) -> Self {
        Self {
            flat: vec![0.0; net.layout.total],
            dproj: net.proj.iter().map(|p| vec![0.0; p.len()]).collect(),
            pending: false,
        }
    }

    pub fn clear(&mut self) {
        self.flat.iter_mut().for_each(|v| *v = 0.0);
        for d in &mut self.dproj {
            d.iter_mut().for_each(|v| *v = 0.0);
        }
        self.pending = false;
    }

    /// Folds the per-symbol projection gradients into the embedding and
    /// input weights, then returns the full gradient vector.
    pub fn finalize(&mut self, net: &QNet) -> &[f64] {
        if self.pending {
            let (d, g4) = (net.config.embed_dim, 4 * net.config.hidden_dim);
            let emb = net.layout.embedding;
            for (l, idx) in net.layout.lstm.iter().enumerate() {
                let w_ih = &net.params[idx.w_ih.range()];
                for sym in 0..net.config.vocab_size {
                    let dp = &self.dproj[l][sym * g4..(sym + 1) * g4];
                    if dp.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let e = &net.params[emb.off + sym * d..emb.off + (sym + 1) * d];
                    lstm::outer_add(&mut self.flat[idx.w_ih.range()], dp, e);
                    lstm::matvec_t_add(w_ih, dp, &mut self.flat[emb.off + sym * d..emb.off + (sym + 1) * d]);
                }
                self.dproj[l].iter_mut().for_each(|v| *v = 0.0);
            }
            self.pending = false;
        }
        &self.flat
    }

    pub fn scale(&mut self, factor: f64) {
        self.flat.iter_mut().for_each(|v| *v *= factor);
        for d in &mut self.dproj {
            d.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Q-network over knowledge-graph statements.
///
/// Input projections `E · W_ihᵀ` are cached per symbol and refreshed after
/// every parameter change, so a token costs a few row additions.
#[derive(Debug, Clone)]
pub struct QNet {
    config: NetConfig,
    layout: Layout,
    params: Vec<f64>,
    proj: Vec<Vec<f64>>,
}

impl PartialEq for QNet {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.params == other.params
    }
}

/// Splits `buf` into the listed disjoint, ascending segments.
fn carve<'a>(mut buf: &'a mut [f64], segs: &[Seg]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(segs.len());
    let mut base = 0;
    for s in segs {
        let (_, rest) = buf.split_at_mut(s.off - base);
        let (mine, rest) = rest.split_at_mut(s.len);
        out.push(mine);
        buf = rest;
        base = s.off + s.len;
    }
    out
}

impl QNet {
    pub fn new<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self, NnError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut fan_in = 1;
        for e in &layout.entries {
            let slot = &mut params[e.seg.range()];
            if e.name == "embedding" {
                slot.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
                continue;
            }
            if e.name == "scale" {
                slot.iter_mut().for_each(|v| *v = 1.0);
                continue;
            }
            // biases follow their weight matrix and share its fan-in
            if e.name.starts_with("lstm.") {
                fan_in = config.hidden_dim;
            } else if e.shape.len() == 2 {
                fan_in = e.shape[1];
            }
            let k = 1.0 / (fan_in as f64).sqrt();
            let u = Uniform::new_inclusive(-k, k).expect("finite bound");
            slot.iter_mut().for_each(|v| *v = u.sample(rng));
        }
        Self::from_params(config, params)
    }

    pub fn from_params(config: NetConfig, params: Vec<f64>) -> Result<Self, NnError> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(NnError::ShapeMismatch(format!(
                "config needs {} parameters, got {}",
                layout.total,
                params.len()
            )));
        }
        let mut net = Self {
            proj: vec![Vec::new(); layout.lstm.len()],
            config,
            layout,
            params,
        };
        net.refresh();
        Ok(net)
    }

    fn refresh(&mut self) {
        let (v, d, g4) = (self.config.vocab_size, self.config.embed_dim, 4 * self.config.hidden_dim);
        let emb = &self.params[self.layout.embedding.range()];
        for (l, idx) in self.layout.lstm.iter().enumerate() {
            let w_ih = &self.params[idx.w_ih.range()];
            let p = &mut self.proj[l];
            p.clear();
            p.resize(v * g4, 0.0);
            for sym in 0..v {
                lstm::matvec_add(w_ih, &emb[sym * d..(sym + 1) * d], &mut p[sym * g4..(sym + 1) * g4]);
            }
        }
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutates the parameter vector and refreshes cached projections.
    pub fn update<T>(&mut self, f: impl FnOnce(&mut [f64]) -> T) -> T {
        let out = f(&mut self.params);
        self.refresh();
        out
    }

    /// Name of the tensor holding flat parameter `i`.
    pub fn param_name(&self, i: usize) -> Option<&str> {
        self.layout.entries.iter().find(|e| e.seg.range().contains(&i)).map(|e| e.name.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<Tensor> {
        let e = self.layout.entries.iter().find(|e| e.name == name)?;
        Tensor::new(e.shape.clone(), self.params[e.seg.range()].to_vec()).ok()
    }

    /// Overwrites tensor `name` with `data` (row-major).
    pub fn set_tensor(&mut self, name: &str, data: &[f64]) -> Result<(), NnError> {
        let e = self
            .layout
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| NnError::InvalidArgument(format!("no tensor named {name}")))?;
        if data.len() != e.seg.len {
            return Err(NnError::ShapeMismatch(format!("{name} holds {} values, got {}", e.seg.len, data.len())));
        }
        let range = e.seg.range();
        self.update(|p| p[range].copy_from_slice(data));
        Ok(())
    }

    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        self.layout
            .entries
            .iter()
            .map(|e| {
                let t = Tensor::new(e.shape.clone(), self.params[e.seg.range()].to_vec()).expect("layout is consistent");
                (e.name.clone(), t)
            })
            .collect()
    }

    pub(crate) fn entries(&self) -> &[Entry] {
        &self.layout.entries
    }

    /// Copies every `lstm.*` tensor from `other`.
    pub fn copy_lstms_from(&mut self, other: &QNet) -> Result<(), NnError> {
        for e in self.layout.entries.iter().filter(|e| e.name.starts_with("lstm.")) {
            let src = other
                .layout
                .entries
                .iter()
                .find(|o| o.name == e.name && o.shape == e.shape)
                .ok_or_else(|| NnError::ShapeMismatch(format!("source network lacks a matching {}", e.name)))?;
            self.params[e.seg.range()].copy_from_slice(&other.params[src.seg.range()]);
        }
        self.refresh();
        Ok(())
    }

    fn token(&self, st: &Statement) -> Result<Token, NnError> {
        let v = self.config.vocab_size;
        let check = |s: Symbol| if s.index() < v { Ok(s.index()) } else { Err(NnError::UnknownSymbol(s.0)) };
        let syms = [check(st.head)?, check(st.relation)?, check(st.tail)?];
        let key = match st.qualifiers.len() {
            0 => None,
            1 => {
                let (k, value) = st.qualifiers.only().expect("one qualifier");
                let scale = match self.config.kind {
                    NetKind::Memory => Some(
                        self.config
                            .qualifier_keys
                            .iter()
                            .position(|&q| q == k.0)
                            .ok_or(NnError::UnknownQualifier(k.0))?,
                    ),
                    NetKind::History => None,
                };
                Some((check(k)?, scale, value / self.config.max_val))
            }
            n => {
                return Err(NnError::InvalidArgument(format!("statement has {n} qualifiers, expected at most one")));
            }
        };
        Ok(Token { syms, key })
    }

    fn coef(&self, key: (usize, Option<usize>, f64)) -> f64 {
        match (key.1, self.layout.scale) {
            (Some(i), Some(seg)) => key.2 * self.params[seg.off + i],
            _ => key.2,
        }
    }

    /// Resolves and orders a store by qualifier value, then symbol indices.
    fn tokens(&self, store: &[Statement]) -> Result<Vec<Token>, NnError> {
        let mut items: Vec<(f64, Token)> = store
            .iter()
            .map(|st| Ok((st.qualifiers.iter().next().map_or(0.0, |(_, v)| v), self.token(st)?)))
            .collect::<Result<_, NnError>>()?;
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.syms.cmp(&b.1.syms)));
        Ok(items.into_iter().map(|(_, t)| t).collect())
    }

    fn project(&self, l: usize, tokens: &[Token]) -> Vec<f64> {
        let g4 = 4 * self.config.hidden_dim;
        let p = &self.proj[l];
        let mut out = vec![0.0; tokens.len() * g4];
        for (t, tok) in tokens.iter().enumerate() {
            let row = &mut out[t * g4..(t + 1) * g4];
            for &s in &tok.syms {
                row.iter_mut().zip(&p[s * g4..(s + 1) * g4]).for_each(|(o, x)| *o += x);
            }
            if let Some(key) = tok.key {
                let c = self.coef(key);
                let k = key.0;
                row.iter_mut().zip(&p[k * g4..(k + 1) * g4]).for_each(|(o, x)| *o += c * x);
            }
        }
        out
    }

    /// `E[h] + E[r] + E[t] + E[key] · (value / max_val) · s[key]`.
    pub fn embed_statement(&self, st: &Statement) -> Result<Vec<f64>, NnError> {
        let tok = self.token(st)?;
        let d = self.config.embed_dim;
        let emb = &self.params[self.layout.embedding.range()];
        let mut out = vec![0.0; d];
        for &s in &tok.syms {
            out.iter_mut().zip(&emb[s * d..(s + 1) * d]).for_each(|(o, x)| *o += x);
        }
        if let Some(key) = tok.key {
            let c = self.coef(key);
            out.iter_mut().zip(&emb[key.0 * d..(key.0 + 1) * d]).for_each(|(o, x)| *o += c * x);
        }
        Ok(out)
    }

    fn lstm_weights(&self, l: usize) -> (&[f64], &[f64]) {
        let idx = self.layout.lstm[l];
        (&self.params[idx.w_hh.range()], &self.params[idx.bias.range()])
    }

    /// Final hidden state of encoder `store` over the sorted statements;
    /// zero for an empty store.
    pub fn encode_store(&self, store: usize, statements: &[Statement]) -> Result<Vec<f64>, NnError> {
        if store >= self.layout.lstm.len() {
            return Err(NnError::InvalidArgument(format!("network has no store {store}")));
        }
        let tokens = self.tokens(statements)?;
        let (w_hh, b) = self.lstm_weights(store);
        Ok(lstm::forward(w_hh, b, self.config.hidden_dim, &self.project(store, &tokens), None))
    }

    fn linear(&self, idx: LinearIdx) -> LinearRef<'_> {
        LinearRef {
            w: &self.params[idx.w.range()],
            b: &self.params[idx.b.range()],
        }
    }

    /// Attention over the stacked store encodings `h` (3 rows).
    pub fn attend(&self, h: &[Vec<f64>]) -> Result<(Vec<f64>, [[f64; 3]; 3]), NnError> {
        let attn = self
            .layout
            .attn
            .ok_or_else(|| NnError::InvalidArgument("history networks have no attention".into()))?;
        if h.len() != 3 || h.iter().any(|r| r.len() != self.config.hidden_dim) {
            return Err(NnError::ShapeMismatch(format!("attention expects 3 rows of {}", self.config.hidden_dim)));
        }
        let (v, tr) = ops::attention_forward(h, self.linear(attn[0]), self.linear(attn[1]), self.linear(attn[2]));
        Ok((v, to_3x3(&tr.a)))
    }

    /// Dueling head applied to a feature vector.
    pub fn q_values(&self, v: &[f64]) -> Vec<f64> {
        let mut x = v.to_vec();
        for &layer in &self.layout.trunk {
            x = self.linear(layer).apply(&x);
            x.iter_mut().for_each(|a| *a = a.max(0.0));
        }
        let value = self.linear(self.layout.value).apply(&x)[0];
        ops::dueling(value, &self.linear(self.layout.adv).apply(&x))
    }

    pub fn forward(&self, stores: &[&[Statement]]) -> Result<Forward, NnError> {
        self.run(stores, None)
    }

    /// Like [`QNet::forward`], keeping what [`GradTape::backward`] needs.
    pub fn forward_taped(&self, stores: &[&[Statement]], tape: &mut GradTape) -> Result<Forward, NnError> {
        let mut rec = Record {
            tokens: Vec::new(),
            lstm: Vec::new(),
            attn: None,
            trunk_in: Vec::new(),
            trunk_pre: Vec::new(),
            feat: Vec::new(),
        };
        let out = self.run(stores, Some(&mut rec))?;
        tape.record = Some(Box::new(rec));
        Ok(out)
    }

    fn run(&self, stores: &[&[Statement]], mut rec: Option<&mut Record>) -> Result<Forward, NnError> {
        if stores.len() != self.layout.lstm.len() {
            return Err(NnError::InvalidArgument(format!(
                "network encodes {} stores, got {}",
                self.layout.lstm.len(),
                stores.len()
            )));
        }
        let mut hs = Vec::with_capacity(stores.len());
        for (l, store) in stores.iter().enumerate() {
            let tokens = self.tokens(store)?;
            let (w_hh, b) = self.lstm_weights(l);
            let xproj = self.project(l, &tokens);
            match rec.as_deref_mut() {
                Some(r) => {
                    let mut tr = LstmTrace::default();
                    hs.push(lstm::forward(w_hh, b, self.config.hidden_dim, &xproj, Some(&mut tr)));
                    r.lstm.push(tr);
                    r.tokens.push(tokens);
                }
                None => hs.push(lstm::forward(w_hh, b, self.config.hidden_dim, &xproj, None)),
            }
        }
        let (mut x, attention) = match self.layout.attn {
            Some(attn) => {
                let (v, tr) = ops::attention_forward(&hs, self.linear(attn[0]), self.linear(attn[1]), self.linear(attn[2]));
                let a = to_3x3(&tr.a);
                if let Some(r) = rec.as_deref_mut() {
                    r.attn = Some(tr);
                }
                (v, Some(a))
            }
            None => (hs.pop().expect("one store"), None),
        };
        for &layer in &self.layout.trunk {
            let pre = self.linear(layer).apply(&x);
            let post: Vec<f64> = pre.iter().map(|a| a.max(0.0)).collect();
            if let Some(r) = rec.as_deref_mut() {
                r.trunk_in.push(std::mem::take(&mut x));
                r.trunk_pre.push(pre);
            }
            x = post;
        }
        let value = self.linear(self.layout.value).apply(&x)[0];
        let q = ops::dueling(value, &self.linear(self.layout.adv).apply(&x));
        if let Some(r) = rec {
            r.feat = x;
        }
        Ok(Forward { q, attention })
    }
}

fn to_3x3(a: &[Vec<f64>]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (o, row) in out.iter_mut().zip(a) {
        o.copy_from_slice(&row[..3]);
    }
    out
}

impl GradTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_recorded(&self) -> bool {
        self.record.is_some()
    }

    /// Accumulates `∂(dqᵀ q)/∂θ` for the recorded pass into `grads` and
    /// clears the tape.
    pub fn backward(&mut self, net: &QNet, dq: &[f64], grads: &mut Gradients) -> Result<(), NnError> {
        let rec = self
            .record
            .take()
            .ok_or_else(|| NnError::State("backward called before a recorded forward pass".into()))?;
        if dq.len() != net.config.n_actions {
            return Err(NnError::ShapeMismatch(format!(
                "expected {} output gradients, got {}",
                net.config.n_actions,
                dq.len()
            )));
        }
        if grads.flat.len() != net.layout.total {
            return Err(NnError::ShapeMismatch("gradient buffer belongs to another network".into()));
        }
        let lay = &net.layout;
        let p = &net.params;
        let g = &mut grads.flat;

        let (dval, dadv) = ops::dueling_backward(dq);
        let mut dx = ops::linear_backward(&p[lay.value.w.range()], &rec.feat, &[dval], &mut g[lay.value.w.range()], &mut [0.0]);
        g[lay.value.b.off] += dval;
        let [gw, gb] = <[_; 2]>::try_from(carve(g, &[lay.adv.w, lay.adv.b])).expect("two segments");
        let dx_adv = ops::linear_backward(&p[lay.adv.w.range()], &rec.feat, &dadv, gw, gb);
        dx.iter_mut().zip(dx_adv).for_each(|(a, b)| *a += b);

        for (i, layer) in lay.trunk.iter().enumerate().rev() {
            let dpre: Vec<f64> = dx.iter().zip(&rec.trunk_pre[i]).map(|(d, z)| if *z > 0.0 { *d } else { 0.0 }).collect();
            let [gw, gb] = <[_; 2]>::try_from(carve(g, &[layer.w, layer.b])).expect("two segments");
            dx = ops::linear_backward(&p[layer.w.range()], &rec.trunk_in[i], &dpre, gw, gb);
        }

        let dh: Vec<Vec<f64>> = match (lay.attn, &rec.attn) {
            (Some(attn), Some(tr)) => {
                let segs = [attn[0].w, attn[0].b, attn[1].w, attn[1].b, attn[2].w, attn[2].b];
                let [qw, qb, kw, kb, vw, vb] = <[_; 6]>::try_from(carve(g, &segs)).expect("six segments");
                ops::attention_backward(
                    tr,
                    &dx,
                    AttnGrads {
                        q: (&p[attn[0].w.range()], qw, qb),
                        k: (&p[attn[1].w.range()], kw, kb),
                        v: (&p[attn[2].w.range()], vw, vb),
                    },
                )
            }
            _ => vec![dx],
        };

        let g4 = 4 * net.config.hidden_dim;
        for (l, idx) in lay.lstm.iter().enumerate() {
            let tr = &rec.lstm[l];
            if tr.steps == 0 {
                continue;
            }
            let [gw_hh, gbias] = <[_; 2]>::try_from(carve(g, &[idx.w_hh, idx.bias])).expect("two segments");
            let dxproj = lstm::backward(&p[idx.w_hh.range()], net.config.hidden_dim, tr, &dh[l], gw_hh, gbias);
            let proj = &net.proj[l];
            let dp = &mut grads.dproj[l];
            for (t, tok) in rec.tokens[l].iter().enumerate() {
                let dz = &dxproj[t * g4..(t + 1) * g4];
                for &s in &tok.syms {
                    dp[s * g4..(s + 1) * g4].iter_mut().zip(dz).for_each(|(a, b)| *a += b);
                }
                if let Some(key) = tok.key {
                    let k = key.0;
                    let c = net.coef(key);
                    dp[k * g4..(k + 1) * g4].iter_mut().zip(dz).for_each(|(a, b)| *a += c * b);
                    if let (Some(si), Some(seg)) = (key.1, lay.scale) {
                        let dot: f64 = dz.iter().zip(&proj[k * g4..(k + 1) * g4]).map(|(a, b)| a * b).sum();
                        g[seg.off + si] += key.2 * dot;
                    }
                }
            }
            grads.pending = true;
        }
        Ok(())
    }
}
