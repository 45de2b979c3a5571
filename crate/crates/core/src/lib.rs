//! Network codes for cooperative relaying over fading channels: GF(2)
//! arithmetic, code design, a round-level channel simulator, MAP and
//! sum-product decoders, and a Monte Carlo harness.

pub mod channel;
pub mod decode;
pub mod design;
pub mod gf2;
pub mod harness;

pub use channel::{
    combine_reliability, link_error_prob, q_function, simulate_round, snc_threshold, ChannelError, FadingMode,
    FadingModel, RelayModel, RoundObservation, RoundSimulator, RoundTrace, SncPolicy, NOISE_POWER,
};
pub use decode::{
    channel_llr, decode_with_mode, llr_chat, map_decode, sp_decode, DecodeError, DecodeMode, DecoderKind,
    MapDecoder, NetworkDecoder, SumProductDecoder, TannerGraph,
};
pub use design::{
    check_schedule, code_for_requirements, default_schedule, greedy_code, rate_advantage, repetition_baseline,
    repetition_generator, required_length, separation_vector, systematic_form, CodeFile, DesignError, NetworkCode,
    ScheduleReport, ScheduleViolation, SeparationVector, TradeoffPoint,
};
pub use gf2::{BitMatrix, BitVector, Gf2Error};
pub use harness::{
    compare_sweeps, estimate_diversity_slope, run_sweep, run_sweep_with_threads, BerRecord, CodeSource,
    HarnessError, SimConfig,
};
