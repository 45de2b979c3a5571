//! Destination-side network decoders.
//!
//! All LLRs are `ln P(bit = 0) / P(bit = 1)`; a negative LLR decides 1 and
//! an LLR of exactly zero decides 0.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::RoundObservation;
use crate::gf2::BitMatrix;

/// Magnitude limit applied to messages entering a check-node update.
pub const LLR_CLAMP: f64 = 40.0;

/// Largest `k + n` the exact decoder accepts.
pub const MAP_SIZE_LIMIT: usize = 26;

/// Default sum-product iteration count (no early termination).
pub const DEFAULT_SP_ITERATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("exact decoding needs k + n <= {MAP_SIZE_LIMIT}, got {0}")]
    TooLarge(usize),
    #[error("observation in slot {0} is not finite")]
    NonFinite(usize),
    #[error("genie decoding needs an error-free relay realization")]
    GenieRequiresErrorFree,
    #[error("reliability vector has {found} entries, expected {expected}")]
    ReliabilityLength { expected: usize, found: usize },
}

/// Channel LLR of the modulated bit: `4 Re{h* y} / N0`.
pub fn llr_chat(y: Complex64, h: Complex64, noise: f64) -> f64 {
    4.0 * (h.conj() * y).re / noise
}

/// Channel LLR of the network-coded bit once the relay error probability
/// `p_e` is folded in:
/// `ln[(e^{L_e} e^{L_ĉ} + 1) / (e^{L_e} + e^{L_ĉ})]`, `L_e = ln((1-p_e)/p_e)`.
pub fn channel_llr(llr_chat: f64, p_e: f64) -> f64 {
    if p_e <= 0.0 {
        return llr_chat;
    }
    if p_e >= 0.5 {
        return 0.0;
    }
    boxplus(((1.0 - p_e) / p_e).ln(), llr_chat)
}

/// LLR of the XOR of two independent bits:
/// `sign(a) sign(b) min(|a|, |b|) + ln(1 + e^-|a+b|) - ln(1 + e^-|a-b|)`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let core = a.signum() * b.signum() * a.abs().min(b.abs());
    let core = if a == 0.0 || b == 0.0 { 0.0 } else { core };
    core + ((1.0 + (-(a + b).abs()).exp()) / (1.0 + (-(a - b).abs()).exp())).ln()
}

#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

fn check_observation(obs: &RoundObservation, reliability: &[f64]) -> Result<(), DecodeError> {
    if reliability.len() != obs.n {
        return Err(DecodeError::ReliabilityLength {
            expected: obs.n,
            found: reliability.len(),
        });
    }
    for j in 0..obs.n {
        let (y, h) = (obs.received[j], obs.gains[j]);
        if !(y.re.is_finite() && y.im.is_finite() && h.re.is_finite() && h.im.is_finite()) {
            return Err(DecodeError::NonFinite(j));
        }
    }
    Ok(())
}

/// Tanner graph of the parity-check matrix `[Gᵀ | Iₙ]`: check `j` ties the
/// coded bit `c_j` to the sources in column `j` of the effective generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    k: usize,
    // Bit i set when source i participates in check j.
    check_sources: Vec<u64>,
}

impl TannerGraph {
    pub fn from_columns(k: usize, columns: &[u64]) -> Self {
        Self {
            k,
            check_sources: columns.to_vec(),
        }
    }

    pub fn from_generator(g: &BitMatrix) -> Self {
        assert!(g.rows() <= 64, "at most 64 sources");
        let columns: Vec<u64> = (0..g.cols())
            .map(|j| (0..g.rows()).filter(|&i| g.get(i, j)).fold(0, |acc, i| acc | 1 << i))
            .collect();
        Self::from_columns(g.rows(), &columns)
    }

    pub fn num_sources(&self) -> usize {
        self.k
    }

    pub fn num_checks(&self) -> usize {
        self.check_sources.len()
    }

    /// Source variables attached to check `j`.
    pub fn check_sources(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.check_sources[j];
        (0..self.k).filter(move |&i| (mask >> i) & 1 == 1)
    }

    /// Checks attached to source `i`.
    pub fn source_checks(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_checks()).filter(move |&j| (self.check_sources[j] >> i) & 1 == 1)
    }

    /// `[Gᵀ | Iₙ]` with columns `u_1 … u_k, c_1 … c_n`.
    pub fn parity_check_matrix(&self) -> BitMatrix {
        let n = self.num_checks();
        let mut h = BitMatrix::zeros(n, self.k + n);
        for j in 0..n {
            for i in self.check_sources(j).collect::<Vec<_>>() {
                h.set(j, i, true);
            }
            h.set(j, self.k + j, true);
        }
        h
    }

    /// True when the graph has no cycles (a forest).
    pub fn is_cycle_free(&self) -> bool {
        // Coded variables are leaves, so only source-check edges matter.
        let nodes = self.k + self.num_checks();
        let edges: usize = self.check_sources.iter().map(|c| c.count_ones() as usize).sum();
        let mut parent: Vec<usize> = (0..nodes).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut merges = 0;
        for j in 0..self.num_checks() {
            for i in self.check_sources(j).collect::<Vec<_>>() {
                let (a, b) = (find(&mut parent, i), find(&mut parent, self.k + j));
                if a == b {
                    return false;
                }
                parent[a] = b;
                merges += 1;
            }
        }
        merges == edges
    }
}

/// Exact per-bit MAP decoder.
///
/// For a fixed data vector the sum over relay error patterns factorizes per
/// slot, so each slot contributes
/// `ln[(1-p_j) f(y_j | c_j) + p_j f(y_j | 1 - c_j)]` and the posterior of
/// every source bit is a log-sum over the `2^k` data vectors.
#[derive(Debug, Clone, Default)]
pub struct MapDecoder {
    scores: Vec<f64>,
    weights: Vec<f64>,
    slot_terms: Vec<[f64; 2]>,
}

impl MapDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes posterior LLRs of the `k` sources into `out`.
    pub fn decode_into(
        &mut self,
        obs: &RoundObservation,
        reliability: &[f64],
        noise: f64,
        out: &mut [f64],
    ) -> Result<(), DecodeError> {
        let (k, n) = (obs.k, obs.n);
        if k + n > MAP_SIZE_LIMIT {
            return Err(DecodeError::TooLarge(k + n));
        }
        check_observation(obs, reliability)?;
        self.slot_terms.clear();
        for j in 0..n {
            let (y, h) = (obs.received[j], obs.gains[j]);
            // Complex Gaussian log-likelihoods of s = +1 and s = -1.
            let ll0 = -(y - h).norm_sqr() / noise;
            let ll1 = -(y + h).norm_sqr() / noise;
            let p = reliability[j];
            let (keep, flip) = (
                (1.0 - p).ln(),
                if p > 0.0 { p.ln() } else { f64::NEG_INFINITY },
            );
            self.slot_terms.push([
                log_add_exp(keep + ll0, flip + ll1),
                log_add_exp(keep + ll1, flip + ll0),
            ]);
        }

        let size = 1usize << k;
        self.scores.clear();
        self.scores.reserve(size);
        for u in 0..size as u64 {
            let mut s = 0.0;
            for (j, term) in self.slot_terms.iter().enumerate() {
                let bit = (u & obs.effective_columns[j]).count_ones() & 1;
                s += term[bit as usize];
            }
            self.scores.push(s);
        }

        // Scores relative to the best one; each bucket sum then lies in
        // [tiny, 2^k] and only underflowing buckets need the slow path.
        let top = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.weights.clear();
        self.weights.extend(self.scores.iter().map(|&s| (s - top).exp()));
        for (i, llr) in out.iter_mut().enumerate().take(k) {
            let mut mass = [0.0f64; 2];
            for (u, &w) in self.weights.iter().enumerate() {
                mass[(u >> i) & 1] += w;
            }
            *llr = if mass[0].min(mass[1]) > 1e-280 {
                (mass[0] / mass[1]).ln()
            } else {
                let mut acc = [f64::NEG_INFINITY; 2];
                for (u, &s) in self.scores.iter().enumerate() {
                    let b = (u >> i) & 1;
                    acc[b] = log_add_exp(acc[b], s);
                }
                acc[0] - acc[1]
            };
        }
        Ok(())
    }
}

/// Posterior LLRs of the source bits from the exact MAP rule.
pub fn map_decode(obs: &RoundObservation, noise: f64) -> Result<Vec<f64>, DecodeError> {
    let mut out = vec![0.0; obs.k];
    MapDecoder::new().decode_into(obs, &obs.reliability, noise, &mut out)?;
    Ok(out)
}

/// `P(u_i = 1 | y)` from a posterior LLR.
pub fn llr_to_probability(llr: f64) -> f64 {
    1.0 / (1.0 + llr.exp())
}

/// Flooding sum-product decoder over the Tanner graph of the effective
/// generator. Source variables have zero channel LLR; coded variables are
/// leaves carrying [`channel_llr`].
#[derive(Debug, Clone)]
pub struct SumProductDecoder {
    iterations: usize,
    channel: Vec<f64>,
    // Indexed by check * k + source.
    to_check: Vec<f64>,
    to_source: Vec<f64>,
    members: Vec<usize>,
    forward: Vec<f64>,
}

impl SumProductDecoder {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            channel: Vec::new(),
            to_check: Vec::new(),
            to_source: Vec::new(),
            members: Vec::new(),
            forward: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn decode_into(
        &mut self,
        obs: &RoundObservation,
        reliability: &[f64],
        noise: f64,
        out: &mut [f64],
    ) -> Result<(), DecodeError> {
        check_observation(obs, reliability)?;
        let graph = TannerGraph::from_columns(obs.k, &obs.effective_columns);
        self.decode_graph(&graph, obs, reliability, noise, out);
        Ok(())
    }

    fn decode_graph(
        &mut self,
        graph: &TannerGraph,
        obs: &RoundObservation,
        reliability: &[f64],
        noise: f64,
        out: &mut [f64],
    ) {
        let (k, n) = (graph.num_sources(), graph.num_checks());
        self.channel.clear();
        self.channel.extend((0..n).map(|j| {
            channel_llr(llr_chat(obs.received[j], obs.gains[j], noise), reliability[j])
        }));
        self.to_check.clear();
        self.to_check.resize(n * k, 0.0);
        self.to_source.clear();
        self.to_source.resize(n * k, 0.0);

        for _ in 0..self.iterations {
            // Check update: extrinsic boxplus of the coded leaf and all other
            // attached sources, via forward/backward partial sums.
            for j in 0..n {
                self.members.clear();
                self.members.extend(graph.check_sources(j));
                let deg = self.members.len();
                self.forward.clear();
                let mut acc = self.channel[j].clamp(-LLR_CLAMP, LLR_CLAMP);
                for &i in &self.members {
                    self.forward.push(acc);
                    acc = boxplus(acc, self.to_check[j * k + i].clamp(-LLR_CLAMP, LLR_CLAMP));
                }
                let mut backward = f64::INFINITY;
                for t in (0..deg).rev() {
                    let i = self.members[t];
                    let msg = if backward.is_infinite() {
                        self.forward[t]
                    } else {
                        boxplus(self.forward[t], backward)
                    };
                    self.to_source[j * k + i] = msg;
                    let incoming = self.to_check[j * k + i].clamp(-LLR_CLAMP, LLR_CLAMP);
                    backward = if backward.is_infinite() {
                        incoming
                    } else {
                        boxplus(backward, incoming)
                    };
                }
            }
            // Variable update for the sources (channel LLR 0).
            for i in 0..k {
                let total: f64 = graph.source_checks(i).map(|j| self.to_source[j * k + i]).sum();
                for j in graph.source_checks(i) {
                    self.to_check[j * k + i] = total - self.to_source[j * k + i];
                }
            }
        }

        for (i, llr) in out.iter_mut().enumerate().take(k) {
            *llr = graph.source_checks(i).map(|j| self.to_source[j * k + i]).sum();
        }
    }
}

/// Posterior source LLRs after `iterations` flooding rounds.
pub fn sp_decode(obs: &RoundObservation, noise: f64, iterations: usize) -> Result<Vec<f64>, DecodeError> {
    let mut out = vec![0.0; obs.k];
    SumProductDecoder::new(iterations).decode_into(obs, &obs.reliability, noise, &mut out)?;
    Ok(out)
}

/// What the destination assumes about relay errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Uses the forwarded reliabilities.
    #[default]
    Optimal,
    /// Decodes an error-free relay realization.
    Genie,
    /// Ignores relay errors (`p_e = 0`) although they occur.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    #[default]
    Map,
    Sp,
}

/// Decoder with scratch space, dispatching on kind and mode.
#[derive(Debug, Clone)]
pub struct NetworkDecoder {
    kind: DecoderKind,
    mode: DecodeMode,
    noise: f64,
    map: MapDecoder,
    sp: SumProductDecoder,
    zeros: Vec<f64>,
    llrs: Vec<f64>,
}

impl NetworkDecoder {
    pub fn new(kind: DecoderKind, mode: DecodeMode, noise: f64, sp_iterations: usize) -> Self {
        Self {
            kind,
            mode,
            noise,
            map: MapDecoder::new(),
            sp: SumProductDecoder::new(sp_iterations),
            zeros: Vec::new(),
            llrs: Vec::new(),
        }
    }

    /// Posterior LLRs for the sources of `obs`.
    pub fn posteriors(&mut self, obs: &RoundObservation) -> Result<&[f64], DecodeError> {
        let reliability: &[f64] = match self.mode {
            DecodeMode::Optimal => &obs.reliability,
            DecodeMode::Genie => {
                if !obs.genie || obs.errors != 0 {
                    return Err(DecodeError::GenieRequiresErrorFree);
                }
                &obs.reliability
            }
            DecodeMode::Naive => {
                self.zeros.clear();
                self.zeros.resize(obs.n, 0.0);
                &self.zeros
            }
        };
        self.llrs.clear();
        self.llrs.resize(obs.k, 0.0);
        match self.kind {
            DecoderKind::Map => self.map.decode_into(obs, reliability, self.noise, &mut self.llrs)?,
            DecoderKind::Sp => self.sp.decode_into(obs, reliability, self.noise, &mut self.llrs)?,
        }
        Ok(&self.llrs)
    }

    /// Hard decisions, packed (bit `i` = source `i`).
    pub fn decide(&mut self, obs: &RoundObservation) -> Result<u64, DecodeError> {
        let llrs = self.posteriors(obs)?;
        Ok(decisions(llrs))
    }
}

/// Packs LLR signs into decisions; zero decides 0.
pub fn decisions(llrs: &[f64]) -> u64 {
    llrs.iter()
        .enumerate()
        .fold(0, |acc, (i, &l)| acc | (u64::from(l < 0.0) << i))
}

/// One-shot decoding of `obs` in the given mode.
pub fn decode_with_mode(
    obs: &RoundObservation,
    noise: f64,
    mode: DecodeMode,
    kind: DecoderKind,
    sp_iterations: usize,
) -> Result<u64, DecodeError> {
    NetworkDecoder::new(kind, mode, noise, sp_iterations).decide(obs)
}
