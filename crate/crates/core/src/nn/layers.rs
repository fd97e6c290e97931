//! Transformer building blocks on top of the tape.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::matrix::Matrix;
use super::tape::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

#[cfg(test)]
fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Matrix {
    let dist = rand_distr::Normal::new(0.0, std).unwrap();
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| dist.sample(rng)).collect())
}

/// Affine map `x W + b` with `W: in x out`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / libm::sqrt(d_in.max(1) as f64);
        let dist = Uniform::new_inclusive(-bound, bound).unwrap();
        let w = Matrix::from_vec(d_in, d_out, (0..d_in * d_out).map(|_| dist.sample(rng)).collect());
        Self {
            weight: store.add(format!("{name}.weight"), w),
            bias: store.add(format!("{name}.bias"), Matrix::zeros(1, d_out)),
        }
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let w = t.param(self.weight);
        let b = t.param(self.bias);
        let y = t.matmul(x, w);
        t.add_row(y, b)
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, d: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), Matrix::from_vec(1, d, alloc::vec![1.0; d])),
            bias: store.add(format!("{name}.bias"), Matrix::zeros(1, d)),
        }
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let g = t.param(self.gain);
        let b = t.param(self.bias);
        t.layer_norm(x, g, b)
    }
}

/// Multi-head attention with separate query and key/value projections so it
/// serves both self- and cross-attention.
#[derive(Debug, Clone)]
pub struct Attention {
    query: Linear,
    key_value: Linear,
    out: Linear,
    n_heads: usize,
    d: usize,
}

impl Attention {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, d: usize, n_heads: usize, rng: &mut R) -> Self {
        Self {
            query: Linear::new(store, &format!("{name}.q"), d, d, rng),
            key_value: Linear::new(store, &format!("{name}.kv"), d, 2 * d, rng),
            out: Linear::new(store, &format!("{name}.out"), d, d, rng),
            n_heads,
            d,
        }
    }

    pub fn forward(&self, t: &mut Tape, x: Var, memory: Var, causal: bool) -> Var {
        let q = self.query.forward(t, x);
        let kv = self.key_value.forward(t, memory);
        let dh = self.d / self.n_heads;
        let scale = 1.0 / libm::sqrt(dh as f64);
        let heads: Vec<Var> = (0..self.n_heads)
            .map(|h| {
                let qh = t.slice_cols(q, h * dh, dh);
                let kh = t.slice_cols(kv, h * dh, dh);
                let vh = t.slice_cols(kv, self.d + h * dh, dh);
                let p = t.masked_scores(qh, kh, scale, causal);
                t.matmul(p, vh)
            })
            .collect();
        let joined = if heads.len() == 1 { heads[0] } else { t.hstack(&heads) };
        self.out.forward(t, joined)
    }
}

#[derive(Debug, Clone)]
pub struct FeedForward {
    up: Linear,
    down: Linear,
}

impl FeedForward {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, d: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            up: Linear::new(store, &format!("{name}.up"), d, hidden, rng),
            down: Linear::new(store, &format!("{name}.down"), hidden, d, rng),
        }
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let h = self.up.forward(t, x);
        let h = t.gelu(h);
        self.down.forward(t, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackConfig {
    pub d: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub ffn_hidden: usize,
    pub max_len: usize,
}

/// Fixed sinusoidal position table, `len x d`.
pub fn sinusoidal_positions(len: usize, d: usize) -> Matrix {
    let mut m = Matrix::zeros(len, d);
    for pos in 0..len {
        for i in 0..d {
            let freq = libm::pow(10_000.0, (2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 / freq;
            m.set(pos, i, if i % 2 == 0 { libm::sin(angle) } else { libm::cos(angle) });
        }
    }
    m
}

fn add_positions(t: &mut Tape, x: Var, table: Option<&Matrix>) -> Var {
    let Some(table) = table else { return x };
    let (rows, cols) = t.shape(x);
    if rows == 0 {
        return x;
    }
    let pe = Matrix::from_vec(rows, cols, table.data[..rows * cols].to_vec());
    let pe = t.leaf(pe);
    let x = t.add(x, pe);
    t.dropout(x)
}

fn check_input(t: &Tape, x: Var, cfg: &StackConfig) -> Result<()> {
    let (rows, cols) = t.shape(x);
    if cols != cfg.d {
        return Err(Error::Dimension { expected: cfg.d, got: cols });
    }
    if rows > cfg.max_len {
        return Err(Error::Capacity { len: rows, max: cfg.max_len });
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    ln_attn: LayerNorm,
    attn: Attention,
    ln_ff: LayerNorm,
    ff: FeedForward,
}

/// Pre-norm self-attention stack with a final layer norm.
#[derive(Debug, Clone)]
pub struct EncoderStack {
    pub config: StackConfig,
    layers: Vec<EncoderLayer>,
    final_ln: LayerNorm,
}

impl EncoderStack {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: StackConfig, rng: &mut R) -> Self {
        let layers = (0..config.n_layers)
            .map(|l| {
                let p = format!("{name}.layer{l}");
                EncoderLayer {
                    ln_attn: LayerNorm::new(store, &format!("{p}.ln_attn"), config.d),
                    attn: Attention::new(store, &format!("{p}.attn"), config.d, config.n_heads, rng),
                    ln_ff: LayerNorm::new(store, &format!("{p}.ln_ff"), config.d),
                    ff: FeedForward::new(store, &format!("{p}.ff"), config.d, config.ffn_hidden, rng),
                }
            })
            .collect();
        Self {
            config,
            layers,
            final_ln: LayerNorm::new(store, &format!("{name}.ln_final"), config.d),
        }
    }

    /// `len x d -> len x d`. `positions` is added to the input when given.
    pub fn forward(&self, t: &mut Tape, input: Var, positions: Option<&Matrix>) -> Result<Var> {
        check_input(t, input, &self.config)?;
        let mut x = add_positions(t, input, positions);
        if t.shape(x).0 == 0 {
            return Ok(x);
        }
        for layer in &self.layers {
            let h = layer.ln_attn.forward(t, x);
            let a = layer.attn.forward(t, h, h, false);
            let a = t.dropout(a);
            x = t.add(x, a);
            let h = layer.ln_ff.forward(t, x);
            let f = layer.ff.forward(t, h);
            let f = t.dropout(f);
            x = t.add(x, f);
        }
        Ok(self.final_ln.forward(t, x))
    }
}

#[derive(Debug, Clone)]
struct DecoderLayer {
    ln_self: LayerNorm,
    self_attn: Attention,
    ln_cross: LayerNorm,
    cross_attn: Attention,
    ln_ff: LayerNorm,
    ff: FeedForward,
}

/// Pre-norm decoder: causal self-attention, cross-attention over a memory,
/// feed-forward, final layer norm.
#[derive(Debug, Clone)]
pub struct DecoderStack {
    pub config: StackConfig,
    layers: Vec<DecoderLayer>,
    final_ln: LayerNorm,
}

impl DecoderStack {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: StackConfig, rng: &mut R) -> Self {
        let (d, h) = (config.d, config.n_heads);
        let layers = (0..config.n_layers)
            .map(|l| {
                let p = format!("{name}.layer{l}");
                DecoderLayer {
                    ln_self: LayerNorm::new(store, &format!("{p}.ln_self"), d),
                    self_attn: Attention::new(store, &format!("{p}.self_attn"), d, h, rng),
                    ln_cross: LayerNorm::new(store, &format!("{p}.ln_cross"), d),
                    cross_attn: Attention::new(store, &format!("{p}.cross_attn"), d, h, rng),
                    ln_ff: LayerNorm::new(store, &format!("{p}.ln_ff"), d),
                    ff: FeedForward::new(store, &format!("{p}.ff"), d, config.ffn_hidden, rng),
                }
            })
            .collect();
        Self {
            config,
            layers,
            final_ln: LayerNorm::new(store, &format!("{name}.ln_final"), d),
        }
    }

    /// Row `t` of the output depends only on prefix rows `0..=t`. An empty
    /// memory contributes nothing through cross-attention.
    pub fn forward(
        &self,
        t: &mut Tape,
        memory: Var,
        prefix: Var,
        positions: Option<&Matrix>,
    ) -> Result<Var> {
        check_input(t, prefix, &self.config)?;
        let (mem_len, mem_d) = t.shape(memory);
        if mem_d != self.config.d {
            return Err(Error::Dimension { expected: self.config.d, got: mem_d });
        }
        let mut x = add_positions(t, prefix, positions);
        if t.shape(x).0 == 0 {
            return Ok(x);
        }
        for layer in &self.layers {
            let h = layer.ln_self.forward(t, x);
            let a = layer.self_attn.forward(t, h, h, true);
            let a = t.dropout(a);
            x = t.add(x, a);
            if mem_len > 0 {
                let h = layer.ln_cross.forward(t, x);
                let c = layer.cross_attn.forward(t, h, memory, false);
                let c = t.dropout(c);
                x = t.add(x, c);
            }
            let h = layer.ln_ff.forward(t, x);
            let f = layer.ff.forward(t, h);
            let f = t.dropout(f);
            x = t.add(x, f);
        }
        Ok(self.final_ln.forward(t, x))
    }
}

/// Stack of affine layers with GELU between them.
#[derive(Debug, Clone)]
pub struct MlpHead {
    pub layers: Vec<Linear>,
    pub d_in: usize,
    pub d_out: usize,
}

impl MlpHead {
    /// `dims = [in, hidden.., out]`.
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Self {
            layers,
            d_in: dims[0],
            d_out: *dims.last().unwrap(),
        }
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Result<Var> {
        let (_, cols) = t.shape(x);
        if cols != self.d_in {
            return Err(Error::Dimension { expected: self.d_in, got: cols });
        }
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                h = t.gelu(h);
            }
            h = layer.forward(t, h);
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n_layers: usize) -> StackConfig {
        StackConfig { d: 8, n_heads: 2, n_layers, ffn_hidden: 16, max_len: 32 }
    }

    fn random_rows(rows: usize, d: usize, seed: u64) -> Matrix {
        normal_matrix(&mut ChaCha8Rng::seed_from_u64(seed), rows, d, 1.0)
    }

    #[test]
    fn encoder_shape_and_capacity() {
        let mut store = ParamStore::new();
        let enc = EncoderStack::new(&mut store, "enc", cfg(2), &mut ChaCha8Rng::seed_from_u64(1));
        let pos = sinusoidal_positions(32, 8);
        let mut t = Tape::new(&store);
        let x = t.leaf(random_rows(5, 8, 2));
        let y = enc.forward(&mut t, x, Some(&pos)).unwrap();
        assert_eq!(t.shape(y), (5, 8));
        let big = t.leaf(random_rows(33, 8, 2));
        assert_eq!(enc.forward(&mut t, big, Some(&pos)), Err(Error::Capacity { len: 33, max: 32 }));
        let narrow = t.leaf(random_rows(3, 4, 2));
        assert!(matches!(enc.forward(&mut t, narrow, None), Err(Error::Dimension { .. })));
    }

    #[test]
    fn encoder_is_permutation_equivariant_without_positions() {
        let mut store = ParamStore::new();
        let enc = EncoderStack::new(&mut store, "enc", cfg(2), &mut ChaCha8Rng::seed_from_u64(3));
        let x = random_rows(4, 8, 4);
        let perm = [2usize, 0, 3, 1];
        let mut px = Matrix::zeros(4, 8);
        for (i, &p) in perm.iter().enumerate() {
            px.row_mut(i).copy_from_slice(x.row(p));
        }
        let mut t = Tape::new(&store);
        let a = t.leaf(x);
        let b = t.leaf(px);
        let ya = enc.forward(&mut t, a, None).unwrap();
        let yb = enc.forward(&mut t, b, None).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for c in 0..8 {
                assert!((t.value(yb).get(i, c) - t.value(ya).get(p, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_layer_encoder_is_final_norm() {
        let mut store = ParamStore::new();
        let enc = EncoderStack::new(&mut store, "enc", cfg(0), &mut ChaCha8Rng::seed_from_u64(5));
        let mut t = Tape::new(&store);
        let x = t.leaf(random_rows(3, 8, 6));
        let y = enc.forward(&mut t, x, None).unwrap();
        for r in 0..3 {
            let row = t.value(y).row(r);
            let mean = row.iter().sum::<f64>() / 8.0;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn decoder_is_causal_bit_exact() {
        let mut store = ParamStore::new();
        let dec = DecoderStack::new(&mut store, "dec", cfg(2), &mut ChaCha8Rng::seed_from_u64(7));
        let pos = sinusoidal_positions(32, 8);
        let memory = random_rows(6, 8, 8);
        let full = random_rows(5, 8, 9);
        let mut t = Tape::new(&store);
        let m = t.leaf(memory);
        let mut prev: Option<Matrix> = None;
        for len in 1..=5 {
            let p = t.leaf(Matrix::from_vec(len, 8, full.data[..len * 8].to_vec()));
            let y = dec.forward(&mut t, m, p, Some(&pos)).unwrap();
            let y = t.value(y).clone();
            if let Some(prev) = prev {
                assert_eq!(&y.data[..prev.len()], &prev.data[..], "prefix rows changed at len {len}");
            }
            prev = Some(y);
        }
    }

    #[test]
    fn decoder_accepts_empty_memory() {
        let mut store = ParamStore::new();
        let dec = DecoderStack::new(&mut store, "dec", cfg(1), &mut ChaCha8Rng::seed_from_u64(7));
        let mut t = Tape::new(&store);
        let m = t.leaf(Matrix::zeros(0, 8));
        let p = t.leaf(random_rows(1, 8, 1));
        let y = dec.forward(&mut t, m, p, None).unwrap();
        assert_eq!(t.shape(y), (1, 8));
        assert!(t.value(y).data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn mlp_head_degenerate_configs() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let head = MlpHead::new(&mut store, "h", &[4, 6, 3], &mut rng);
        for l in &head.layers {
            store.get_mut(l.weight).data.fill(0.0);
        }
        let ident = MlpHead::new(&mut store, "id", &[4, 2], &mut rng);
        let w = store.get_mut(ident.weight());
        w.data.fill(0.0);
        w.set(0, 0, 1.0);
        w.set(1, 1, 1.0);
        let mut t = Tape::new(&store);
        let x = t.leaf(Matrix::row_vector(alloc::vec![0.5, -2.0, 3.0, 1.0]));
        let y = head.forward(&mut t, x).unwrap();
        assert_eq!(t.value(y).data, alloc::vec![0.0; 3]);
        let y = ident.forward(&mut t, x).unwrap();
        assert_eq!(t.value(y).data, alloc::vec![0.5, -2.0]);
        let bad = t.leaf(Matrix::row_vector(alloc::vec![1.0; 3]));
        assert!(head.forward(&mut t, bad).is_err());
    }

    impl MlpHead {
        fn weight(&self) -> ParamId {
            self.layers[0].weight
        }
    }
}
