//! One round of cooperative detect-and-forward transmission.
//!
//! Relays detect overheard symbols with hard decisions, XOR them into
//! their own symbol as the generator column prescribes, and tag the packet
//! with the probability that the combination is wrong. The destination
//! sees every slot through its own Rayleigh-faded link.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{NetworkCode, ScheduleReport};
use crate::gf2::{BitMatrix, BitVector};

/// Noise power spectral density; SNR is swept by scaling the gain variance.
pub const NOISE_POWER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("mean SNR must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("probability {0} outside [0, 1/2]")]
    ProbabilityOutOfRange(f64),
    #[error("schedule violates the network-code invariants: {0:?}")]
    InvalidSchedule(ScheduleReport),
    #[error("slot {slot} relays source {source_index}, which is never sent alone by its owner beforehand")]
    RelayedCodedSymbol { slot: usize, source_index: usize },
    #[error("message has {found} bits, code has {expected} sources")]
    MessageLength { expected: usize, found: usize },
    #[error("codes with more than 64 sources or slots are not supported by the simulator")]
    TooLarge,
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Error probability of coherent BPSK detection at instantaneous SNR `gamma`.
pub fn link_error_prob(gamma: f64) -> f64 {
    q_function((2.0 * gamma.max(0.0)).sqrt())
}

/// Rayleigh-averaged BPSK error probability, used as the selective
/// network coding threshold.
pub fn snc_threshold(mean_snr: f64) -> f64 {
    if mean_snr.is_infinite() {
        return 0.0;
    }
    0.5 * (1.0 - (mean_snr / (1.0 + mean_snr)).sqrt())
}

/// Probability that the XOR of independent bits with the given error
/// probabilities is wrong.
pub fn combine_reliability(probs: &[f64]) -> Result<f64, ChannelError> {
    let mut prod = 1.0;
    for &p in probs {
        if !(0.0..=0.5).contains(&p) {
            return Err(ChannelError::ProbabilityOutOfRange(p));
        }
        prod *= 1.0 - 2.0 * p;
    }
    Ok(0.5 * (1.0 - prod))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Independent gain per slot.
    #[default]
    BlockIid,
    /// One gain per transmitting node, shared by all of its slots.
    PerSourceStatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    mode: FadingMode,
    mean_snr: f64,
}

impl FadingModel {
    pub fn new(mode: FadingMode, mean_snr: f64) -> Result<Self, ChannelError> {
        if !(mean_snr > 0.0 && mean_snr.is_finite()) {
            return Err(ChannelError::InvalidSnr(mean_snr));
        }
        Ok(Self { mode, mean_snr })
    }

    pub fn from_db(mode: FadingMode, snr_db: f64) -> Result<Self, ChannelError> {
        Self::new(mode, 10f64.powf(snr_db / 10.0))
    }

    pub fn mode(&self) -> FadingMode {
        self.mode
    }

    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SncPolicy {
    pub enabled: bool,
}

impl SncPolicy {
    pub const STATIC: Self = Self { enabled: false };
    pub const SELECTIVE: Self = Self { enabled: true };
}

/// How relays detect overheard symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelayModel {
    /// Hard decisions over faded inter-node links.
    #[default]
    Noisy,
    /// Error-free relaying (genie bound). Random draws are still consumed
    /// so that paired runs share destination gains and noise.
    Genie,
}

/// Everything the destination (and a debugger) can see about one round.
///
/// Bit `j` of the packed fields is slot `j`; bit `i` of `message` and of
/// each `effective_columns[j]` is source `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundObservation {
    pub k: usize,
    pub n: usize,
    pub message: u64,
    /// `u · G_eff` without relay errors.
    pub codeword: u64,
    pub errors: u64,
    /// `codeword ⊕ errors`: what was modulated.
    pub transmitted: u64,
    pub reliability: Vec<f64>,
    pub gains: Vec<Complex64>,
    pub received: Vec<Complex64>,
    pub effective_columns: Vec<u64>,
    pub genie: bool,
}

impl RoundObservation {
    fn empty(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            message: 0,
            codeword: 0,
            errors: 0,
            transmitted: 0,
            reliability: vec![0.0; n],
            gains: vec![Complex64::default(); n],
            received: vec![Complex64::default(); n],
            effective_columns: vec![0; n],
            genie: false,
        }
    }

    pub fn message_bits(&self) -> BitVector {
        BitVector::from_u64(self.message, self.k)
    }

    pub fn codeword_bits(&self) -> BitVector {
        BitVector::from_u64(self.codeword, self.n)
    }

    pub fn error_bits(&self) -> BitVector {
        BitVector::from_u64(self.errors, self.n)
    }

    pub fn transmitted_bits(&self) -> BitVector {
        BitVector::from_u64(self.transmitted, self.n)
    }

    /// The instantaneous generator matrix after selective encoding.
    pub fn effective_generator(&self) -> BitMatrix {
        let mut g = BitMatrix::zeros(self.k, self.n);
        for (j, &col) in self.effective_columns.iter().enumerate() {
            for i in 0..self.k {
                if (col >> i) & 1 == 1 {
                    g.set(i, j, true);
                }
            }
        }
        g
    }

    pub fn trace(&self, seed: u64) -> RoundTrace {
        RoundTrace {
            seed,
            c: self.codeword_bits().to_bits(),
            e: self.error_bits().to_bits(),
            p_e: self.reliability.clone(),
            g_eff: self.effective_generator().to_rows(),
            y: self.received.iter().map(|y| [y.re, y.im]).collect(),
        }
    }
}

/// Debug dump of a round, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub seed: u64,
    pub c: Vec<u8>,
    pub e: Vec<u8>,
    pub p_e: Vec<f64>,
    #[serde(rename = "G_eff")]
    pub g_eff: Vec<Vec<u8>>,
    pub y: Vec<[f64; 2]>,
}

/// A detection link: `relay` hears `source` once per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RelayPair {
    relay: usize,
    source: usize,
}

/// Per-code precomputation for repeated rounds.
#[derive(Debug, Clone)]
pub struct RoundSimulator {
    k: usize,
    n: usize,
    fading: FadingModel,
    snc: SncPolicy,
    relay_model: RelayModel,
    threshold: f64,
    // For each slot: (source, index into `pairs`) of every relayed source.
    relayed: Vec<Vec<(usize, usize)>>,
    own: Vec<u64>,
    gain_index: Vec<usize>,
    // Scratch, reused across rounds.
    pair_prob: Vec<f64>,
    pair_error: Vec<bool>,
    gain_draws: Vec<Complex64>,
}

impl RoundSimulator {
    pub fn new(
        code: &NetworkCode,
        fading: FadingModel,
        snc: SncPolicy,
        relay_model: RelayModel,
    ) -> Result<Self, ChannelError> {
        let (k, n) = (code.k(), code.n());
        if k > 64 || n > 64 {
            return Err(ChannelError::TooLarge);
        }
        let report = code.validate_schedule();
        if !report.is_valid() {
            return Err(ChannelError::InvalidSchedule(report));
        }
        let g = code.generator();
        let schedule = code.schedule();
        let columns: Vec<u64> = (0..n)
            .map(|j| (0..k).filter(|&i| g.get(i, j)).fold(0u64, |acc, i| acc | (1 << i)))
            .collect();

        let mut pairs: Vec<RelayPair> = Vec::new();
        let mut relayed = Vec::with_capacity(n);
        for (j, &v) in schedule.iter().enumerate() {
            let mut slot = Vec::new();
            for i in (0..k).filter(|&i| i != v && (columns[j] >> i) & 1 == 1) {
                let heard_alone = (0..j).any(|m| schedule[m] == i && columns[m] == 1 << i);
                if !heard_alone {
                    return Err(ChannelError::RelayedCodedSymbol {
                        slot: j,
                        source_index: i,
                    });
                }
                let pair = RelayPair { relay: v, source: i };
                let idx = match pairs.iter().position(|p| *p == pair) {
                    Some(idx) => idx,
                    None => {
                        pairs.push(pair);
                        pairs.len() - 1
                    }
                };
                slot.push((i, idx));
            }
            relayed.push(slot);
        }

        let (gain_index, num_gains) = match fading.mode() {
            FadingMode::BlockIid => ((0..n).collect(), n),
            FadingMode::PerSourceStatic => (schedule.to_vec(), k),
        };

        Ok(Self {
            k,
            n,
            fading,
            snc,
            relay_model,
            threshold: snc_threshold(fading.mean_snr()),
            pair_prob: vec![0.0; pairs.len()],
            pair_error: vec![false; pairs.len()],
            gain_draws: vec![Complex64::default(); num_gains],
            relayed,
            own: schedule.iter().map(|&v| 1u64 << v).collect(),
            gain_index,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fading(&self) -> FadingModel {
        self.fading
    }

    pub fn new_observation(&self) -> RoundObservation {
        RoundObservation::empty(self.k, self.n)
    }

    /// Simulates one round for the packed `message`, overwriting `obs`.
    ///
    /// Random draws are consumed in a fixed order (per relay pair: link SNR
    /// then detection; then destination gains; then noise), independent of
    /// the SNC policy and relay model.
    pub fn run_into<R: Rng + ?Sized>(&mut self, message: u64, rng: &mut R, obs: &mut RoundObservation) {
        let mean_snr = self.fading.mean_snr();
        let genie = self.relay_model == RelayModel::Genie;
        for (p, pair_err) in self.pair_prob.iter_mut().zip(self.pair_error.iter_mut()) {
            let gamma: f64 = rng.sample::<f64, _>(Exp1) * mean_snr;
            let draw: f64 = rng.random();
            if genie {
                *p = 0.0;
                *pair_err = false;
            } else {
                *p = link_error_prob(gamma);
                *pair_err = draw < *p;
            }
        }

        obs.message = message;
        obs.genie = genie;
        let mut codeword = 0u64;
        let mut errors = 0u64;
        for j in 0..self.n {
            let mut column = self.own[j];
            let mut keep_prod = 1.0;
            let mut err = false;
            for &(i, idx) in &self.relayed[j] {
                let p = self.pair_prob[idx];
                if self.snc.enabled && p >= self.threshold {
                    continue;
                }
                column |= 1 << i;
                keep_prod *= 1.0 - 2.0 * p;
                err ^= self.pair_error[idx];
            }
            obs.effective_columns[j] = column;
            obs.reliability[j] = 0.5 * (1.0 - keep_prod);
            codeword |= u64::from((message & column).count_ones() & 1) << j;
            errors |= u64::from(err) << j;
        }
        obs.codeword = codeword;
        obs.errors = errors;
        obs.transmitted = codeword ^ errors;

        let gain_scale = (mean_snr * NOISE_POWER / 2.0).sqrt();
        for h in self.gain_draws.iter_mut() {
            *h = complex_normal(rng, gain_scale);
        }
        let noise_scale = (NOISE_POWER / 2.0).sqrt();
        for j in 0..self.n {
            let h = self.gain_draws[self.gain_index[j]];
            let s = if (obs.transmitted >> j) & 1 == 1 { -1.0 } else { 1.0 };
            obs.gains[j] = h;
            obs.received[j] = h * s + complex_normal(rng, noise_scale);
        }
    }

    pub fn run<R: Rng + ?Sized>(&mut self, message: &BitVector, rng: &mut R) -> Result<RoundObservation, ChannelError> {
        if message.len() != self.k {
            return Err(ChannelError::MessageLength {
                expected: self.k,
                found: message.len(),
            });
        }
        let mut obs = self.new_observation();
        self.run_into(message.as_u64().unwrap_or(0), rng, &mut obs);
        Ok(obs)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Simulates one round of `code` for message `u`.
pub fn simulate_round<R: Rng + ?Sized>(
    code: &NetworkCode,
    u: &BitVector,
    fading: FadingModel,
    snc: SncPolicy,
    relay_model: RelayModel,
    rng: &mut R,
) -> Result<RoundObservation, ChannelError> {
    RoundSimulator::new(code, fading, snc, relay_model)?.run(u, rng)
}
