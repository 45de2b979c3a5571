//! Network code construction and analysis.
//!
//! A network code is a `k × n` generator matrix `G` over GF(2) together with
//! a transmit schedule: slot `j` carries `u · g_j`, formed by node `v_j`.
//! Each source's protection is described by its separation vector entry,
//! the least codeword weight over all data patterns that flip that source.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, Gf2Error};

/// Largest `k` accepted by [`separation_vector`]; the search visits
/// `k · 2^(k-1)` codewords.
pub const MAX_SEPARATION_SOURCES: usize = 28;

/// Largest block length supported by the lexicode builder (packed in a word).
pub const MAX_LEXICODE_LENGTH: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("source {0} has an all-zero generator row")]
    ZeroRow(usize),
    #[error("source {0} cannot be recovered: its row is a combination of other rows")]
    Undecodable(usize),
    #[error("{k} sources exceed the exhaustive search limit of {limit}")]
    TooManySources { k: usize, limit: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("generator matrix is not systematic in its first k columns")]
    NotSystematic,
    #[error("slot {0} has an all-zero column")]
    ZeroColumn(usize),
    #[error("schedule has length {found}, expected {expected}")]
    ScheduleLength { expected: usize, found: usize },
    #[error("slot {slot} is assigned to source {source_index}, but only {k} sources exist")]
    ScheduleSource {
        slot: usize,
        source_index: usize,
        k: usize,
    },
    #[error("stored separation vector {stored:?} differs from computed {computed:?}")]
    SeparationMismatch {
        stored: Vec<usize>,
        computed: Vec<usize>,
    },
    #[error("malformed code file: {0}")]
    Json(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Per-source minimum distances of a generator matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeparationVector(pub Vec<usize>);

impl SeparationVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().sum::<usize>() as f64 / self.0.len() as f64
    }
}

/// Separation vector of `g`: entry `i` is the least weight of `û·G` over all
/// `û` with `û[i] = 1`.
///
/// Each entry enumerates the `2^(k-1)` patterns of the remaining sources in
/// Gray-code order, so every step costs one row XOR and one popcount.
pub fn separation_vector(g: &BitMatrix) -> Result<SeparationVector, DesignError> {
    let k = g.rows();
    if k > MAX_SEPARATION_SOURCES {
        return Err(DesignError::TooManySources {
            k,
            limit: MAX_SEPARATION_SOURCES,
        });
    }
    if let Some(i) = (0..k).find(|&i| g.is_zero_row(i)) {
        return Err(DesignError::ZeroRow(i));
    }
    let rows: Vec<&[u64]> = (0..k).map(|i| g.row_words(i)).collect();
    let d: Vec<usize> = (0..k)
        .into_par_iter()
        .map(|i| min_weight_fixing(&rows, i))
        .collect();
    if let Some(i) = d.iter().position(|&w| w == 0) {
        return Err(DesignError::Undecodable(i));
    }
    Ok(SeparationVector(d))
}

fn min_weight_fixing(rows: &[&[u64]], fixed: usize) -> usize {
    let others: Vec<&[u64]> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != fixed)
        .map(|(_, r)| *r)
        .collect();
    if rows[fixed].len() == 1 {
        let others: Vec<u64> = others.iter().map(|r| r[0]).collect();
        let mut word = rows[fixed][0];
        let mut best = word.count_ones();
        for step in 1u64..(1u64 << others.len()) {
            word ^= others[step.trailing_zeros() as usize];
            best = best.min(word.count_ones());
        }
        return best as usize;
    }
    let mut word = rows[fixed].to_vec();
    let weight = |w: &[u64]| w.iter().map(|x| x.count_ones() as usize).sum::<usize>();
    let mut best = weight(&word);
    for step in 1u64..(1u64 << others.len()) {
        let flip = others[step.trailing_zeros() as usize];
        for (a, b) in word.iter_mut().zip(flip) {
            *a ^= b;
        }
        best = best.min(weight(&word));
    }
    best
}

/// Greedy (lexicographic) code state: the basis admitted so far, as
/// integers whose bit `p` is coordinate `length - 1 - p`.
///
/// The admitted set is linear, so each time the length grows by one at
/// most one basis vector joins: the smallest `2^p + r` at distance `>= d`
/// from the current code. That distance is `1 + dist(r, C)`, and
/// `dist(r, C) >= d - 1` holds iff the coset leader of `r` avoids every
/// coset reached by an error of weight `<= d - 2`.
#[derive(Debug, Clone)]
struct Lexicode {
    distance: usize,
    length: usize,
    // (top bit, vector), in admission order.
    basis: Vec<(u32, u64)>,
}

impl Lexicode {
    fn new(distance: usize) -> Self {
        Self {
            distance,
            length: 0,
            basis: Vec::new(),
        }
    }

    fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Canonical coset representative: clears every pivot bit.
    fn reduce(&self, mut x: u64) -> u64 {
        for &(top, b) in self.basis.iter().rev() {
            if (x >> top) & 1 == 1 {
                x ^= b;
            }
        }
        x
    }

    /// Extends the code by one coordinate.
    fn grow(&mut self) {
        let p = self.length as u32;
        self.length += 1;
        let d = self.distance;
        if d <= 1 {
            self.basis.push((p, 1u64 << p));
            return;
        }
        // Cosets within distance d-2 of the code.
        let mut near = HashSet::new();
        for_each_low_weight(p as usize, d - 2, |e| {
            near.insert(self.reduce(e));
        });
        let space = 1u64 << p;
        if near.len() as u64 >= 1u64 << (p as usize - self.dimension()) {
            return;
        }
        let r = (0..space)
            .find(|&r| !near.contains(&self.reduce(r)))
            .expect("an uncovered coset exists");
        self.basis.push((p, space | r));
    }

    /// Generator matrix at the current length, rows in admission order.
    fn generator(&self) -> BitMatrix {
        let n = self.length;
        let mut g = BitMatrix::zeros(self.basis.len(), n);
        for (row, &(_, b)) in self.basis.iter().enumerate() {
            for p in 0..n {
                if (b >> p) & 1 == 1 {
                    g.set(row, n - 1 - p, true);
                }
            }
        }
        g
    }
}

/// Calls `f` on every vector of length `len` with weight at most `max_weight`.
fn for_each_low_weight(len: usize, max_weight: usize, mut f: impl FnMut(u64)) {
    fn rec(start: usize, len: usize, left: usize, acc: u64, f: &mut dyn FnMut(u64)) {
        f(acc);
        if left == 0 {
            return;
        }
        for j in start..len {
            rec(j + 1, len, left - 1, acc | (1u64 << j), f);
        }
    }
    rec(0, len, max_weight, 0, &mut f);
}

/// Binary lexicode of length `n` and minimum distance `d`.
///
/// Rows are the basis vectors in the order they were admitted; coordinate
/// 0 is the most significant position of the lexicographic order.
pub fn greedy_code(n: usize, d: usize) -> Result<BitMatrix, DesignError> {
    if d == 0 || n < d {
        return Err(DesignError::InvalidParameters(format!(
            "greedy code needs n >= d >= 1, got n = {n}, d = {d}"
        )));
    }
    if n > MAX_LEXICODE_LENGTH {
        return Err(DesignError::InvalidParameters(format!(
            "block length {n} exceeds {MAX_LEXICODE_LENGTH}"
        )));
    }
    let mut lex = Lexicode::new(d);
    for _ in 0..n {
        lex.grow();
    }
    Ok(lex.generator())
}

/// Reduced row echelon form with pivot columns moved to the front.
///
/// The result generates a column-permuted copy of the same code and is
/// systematic in its first `rows` columns. Rows must be independent.
pub fn systematic_form(g: &BitMatrix) -> Result<BitMatrix, DesignError> {
    let (k, n) = (g.rows(), g.cols());
    let mut rows: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..n).map(|j| g.get(i, j)).collect())
        .collect();
    let mut pivots = Vec::with_capacity(k);
    let mut next = 0;
    for col in 0..n {
        if next == k {
            break;
        }
        let Some(src) = (next..k).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(next, src);
        for r in 0..k {
            if r != next && rows[r][col] {
                let pivot_row = rows[next].clone();
                for (a, b) in rows[r].iter_mut().zip(pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        next += 1;
    }
    if pivots.len() < k {
        return Err(DesignError::Undecodable(pivots.len()));
    }
    let order: Vec<usize> = pivots
        .iter()
        .copied()
        .chain((0..n).filter(|j| !pivots.contains(j)))
        .collect();
    let mut out = BitMatrix::zeros(k, n);
    for (i, row) in rows.iter().enumerate() {
        for (dst, &src) in order.iter().enumerate() {
            out.set(i, dst, row[src]);
        }
    }
    Ok(out)
}

/// How [`default_schedule_with`] breaks ties between equally loaded sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    Seeded(u64),
}

/// Balanced causal schedule for a systematic generator (0-based sources).
pub fn default_schedule(g: &BitMatrix) -> Result<Vec<usize>, DesignError> {
    default_schedule_with(g, TieBreak::LowestIndex)
}

pub fn default_schedule_with(g: &BitMatrix, tie: TieBreak) -> Result<Vec<usize>, DesignError> {
    let (k, n) = (g.rows(), g.cols());
    if !g.is_systematic_prefix() {
        return Err(DesignError::NotSystematic);
    }
    let mut rng = match tie {
        TieBreak::LowestIndex => None,
        TieBreak::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut load = vec![1usize; k];
    let mut schedule: Vec<usize> = (0..k).collect();
    for j in k..n {
        let members: Vec<usize> = (0..k).filter(|&i| g.get(i, j)).collect();
        let least = members
            .iter()
            .map(|&i| load[i])
            .min()
            .ok_or(DesignError::ZeroColumn(j))?;
        let candidates: Vec<usize> = members.into_iter().filter(|&i| load[i] == least).collect();
        let pick = match rng.as_mut() {
            Some(rng) => *candidates.choose(rng).expect("non-empty"),
            None => candidates[0],
        };
        load[pick] += 1;
        schedule.push(pick);
    }
    Ok(schedule)
}

/// A reason a schedule fails the network-code invariants. Slots and sources
/// are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    Length { expected: usize, found: usize },
    SourceOutOfRange { slot: usize, source: usize },
    ZeroRow { source: usize },
    /// `g_j(v_j) = 0`: the transmitter does not own a symbol in its slot.
    TransmitterAbsent { slot: usize, transmitter: usize },
    /// The transmitter combines `source` before ever hearing it.
    Causality { slot: usize, source: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleReport {
    pub violations: Vec<ScheduleViolation>,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every network-code invariant of `(g, schedule)`.
pub fn check_schedule(g: &BitMatrix, schedule: &[usize]) -> ScheduleReport {
    let (k, n) = (g.rows(), g.cols());
    let mut violations = Vec::new();
    for i in (0..k).filter(|&i| g.is_zero_row(i)) {
        violations.push(ScheduleViolation::ZeroRow { source: i });
    }
    if schedule.len() != n {
        violations.push(ScheduleViolation::Length {
            expected: n,
            found: schedule.len(),
        });
        return ScheduleReport { violations };
    }
    for (j, &v) in schedule.iter().enumerate() {
        if v >= k {
            violations.push(ScheduleViolation::SourceOutOfRange { slot: j, source: v });
            continue;
        }
        if !g.get(v, j) {
            violations.push(ScheduleViolation::TransmitterAbsent {
                slot: j,
                transmitter: v,
            });
        }
        for i in (0..k).filter(|&i| i != v && g.get(i, j)) {
            let heard = (0..j).any(|m| schedule[m] == i && g.get(i, m));
            if !heard {
                violations.push(ScheduleViolation::Causality { slot: j, source: i });
            }
        }
    }
    ScheduleReport { violations }
}

/// Generator matrix, schedule and cached separation vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkCode {
    generator: BitMatrix,
    schedule: Vec<usize>,
    separation: SeparationVector,
}

impl NetworkCode {
    /// Bundles a generator with a 0-based schedule.
    ///
    /// Structural problems (zero rows, wrong schedule length, unknown
    /// transmitters) are errors; causality and ownership are reported by
    /// [`NetworkCode::validate_schedule`].
    pub fn new(generator: BitMatrix, schedule: Vec<usize>) -> Result<Self, DesignError> {
        let (k, n) = (generator.rows(), generator.cols());
        if schedule.len() != n {
            return Err(DesignError::ScheduleLength {
                expected: n,
                found: schedule.len(),
            });
        }
        if let Some((slot, &v)) = schedule.iter().enumerate().find(|&(_, &v)| v >= k) {
            return Err(DesignError::ScheduleSource {
                slot,
                source_index: v,
                k,
            });
        }
        let separation = separation_vector(&generator)?;
        Ok(Self {
            generator,
            schedule,
            separation,
        })
    }

    /// Systematic generator with the balanced default schedule.
    pub fn with_default_schedule(generator: BitMatrix) -> Result<Self, DesignError> {
        let schedule = default_schedule(&generator)?;
        Self::new(generator, schedule)
    }

    /// Builds a code from a 1-based schedule, as written in code files.
    pub fn from_one_based(generator: BitMatrix, schedule: &[usize]) -> Result<Self, DesignError> {
        let zero_based = schedule
            .iter()
            .enumerate()
            .map(|(slot, &v)| {
                v.checked_sub(1).ok_or(DesignError::ScheduleSource {
                    slot,
                    source_index: 0,
                    k: generator.rows(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(generator, zero_based)
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    /// Transmitting source of each slot, 0-based.
    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn schedule_one_based(&self) -> Vec<usize> {
        self.schedule.iter().map(|v| v + 1).collect()
    }

    pub fn separation(&self) -> &SeparationVector {
        &self.separation
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn validate_schedule(&self) -> ScheduleReport {
        check_schedule(&self.generator, &self.schedule)
    }

    /// Removes the `drop` slots and recomputes the separation vector.
    pub fn puncture(&self, drop: &[usize]) -> Result<Self, DesignError> {
        let n = self.n();
        let mut dropped = vec![false; n];
        for &j in drop {
            if j >= n {
                return Err(Gf2Error::IndexOutOfRange { index: j, bound: n }.into());
            }
            if std::mem::replace(&mut dropped[j], true) {
                return Err(Gf2Error::DuplicateIndex(j).into());
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&j| !dropped[j]).collect();
        let generator = self.generator.column_select(&keep)?;
        let schedule = keep.iter().map(|&j| self.schedule[j]).collect();
        Self::new(generator, schedule)
    }

    /// True when no node relays the same source in two different slots.
    pub fn relay_pairs_distinct(&self) -> bool {
        let mut seen = HashSet::new();
        for (j, &v) in self.schedule.iter().enumerate() {
            for i in (0..self.k()).filter(|&i| i != v && self.generator.get(i, j)) {
                if !seen.insert((v, i)) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_file(&self) -> CodeFile {
        CodeFile {
            k: self.k(),
            n: self.n(),
            generator: self.generator.to_rows(),
            schedule: self.schedule_one_based(),
            separation: Some(self.separation.0.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("code file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DesignError> {
        let file: CodeFile =
            serde_json::from_str(text).map_err(|e| DesignError::Json(e.to_string()))?;
        Self::try_from(file)
    }
}

/// On-disk code description: `{k, n, G, v, sep}` with a 1-based schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub k: usize,
    pub n: usize,
    #[serde(rename = "G")]
    pub generator: Vec<Vec<u8>>,
    #[serde(rename = "v")]
    pub schedule: Vec<usize>,
    #[serde(rename = "sep", default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<Vec<usize>>,
}

impl TryFrom<CodeFile> for NetworkCode {
    type Error = DesignError;

    fn try_from(file: CodeFile) -> Result<Self, DesignError> {
        if file.generator.len() != file.k {
            return Err(DesignError::Json(format!(
                "G has {} rows but k = {}",
                file.generator.len(),
                file.k
            )));
        }
        let generator = if file.k == 0 {
            BitMatrix::zeros(0, file.n)
        } else {
            BitMatrix::from_rows(&file.generator)?
        };
        if generator.cols() != file.n {
            return Err(DesignError::Json(format!(
                "G has {} columns but n = {}",
                generator.cols(),
                file.n
            )));
        }
        let code = NetworkCode::from_one_based(generator, &file.schedule)?;
        if let Some(stored) = file.separation {
            if stored != code.separation.0 {
                return Err(DesignError::SeparationMismatch {
                    stored,
                    computed: code.separation.0,
                });
            }
        }
        Ok(code)
    }
}

/// Shortest greedy network code giving every one of `k` sources a
/// separation of at least `d`.
///
/// Lengths are tried upward from `max(k, d)`; surplus basis rows (the ones
/// admitted last) are dropped, and the remaining rows are brought to
/// systematic form so the default schedule is causal.
pub fn code_for_requirements(k: usize, d: usize) -> Result<NetworkCode, DesignError> {
    let n = required_length(k, d)?;
    let mut lex = Lexicode::new(d);
    for _ in 0..n {
        lex.grow();
    }
    let full = lex.generator();
    let rows: Vec<usize> = (0..k).collect();
    let trimmed = full.transpose().column_select(&rows)?.transpose();
    let generator = systematic_form(&trimmed)?;
    let code = NetworkCode::with_default_schedule(generator)?;
    if let Some(i) = code.separation.0.iter().position(|&di| di < d) {
        return Err(DesignError::InvalidParameters(format!(
            "trimmed code gives source {i} separation {} < {d}",
            code.separation.0[i]
        )));
    }
    Ok(code)
}

/// Smallest `n` whose greedy code of distance `d` has dimension `>= k`.
pub fn required_length(k: usize, d: usize) -> Result<usize, DesignError> {
    if k == 0 || d == 0 {
        return Err(DesignError::InvalidParameters(format!(
            "need k >= 1 and d >= 1, got k = {k}, d = {d}"
        )));
    }
    let start = k.max(d);
    let bound = k * d;
    let mut lex = Lexicode::new(d);
    for n in 1..=bound.min(MAX_LEXICODE_LENGTH) {
        lex.grow();
        if n >= start && lex.dimension() >= k {
            return Ok(n);
        }
    }
    Err(DesignError::InvalidParameters(format!(
        "no greedy code with k = {k}, d = {d} fits in {MAX_LEXICODE_LENGTH} slots"
    )))
}

/// Rate and diversity statistics of one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub k: usize,
    pub n: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub d_avg: f64,
}

impl TradeoffPoint {
    pub fn from_separation(k: usize, n: usize, sep: &SeparationVector) -> Self {
        Self {
            k,
            n,
            d_min: sep.min(),
            d_max: sep.max(),
            d_avg: sep.mean(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// Generator of the repetition scheme: slot `j` repeats source `j mod k`.
pub fn repetition_generator(k: usize, n: usize) -> Result<BitMatrix, DesignError> {
    if k == 0 || n < k {
        return Err(DesignError::InvalidParameters(format!(
            "repetition needs n >= k >= 1, got k = {k}, n = {n}"
        )));
    }
    let mut g = BitMatrix::zeros(k, n);
    for j in 0..n {
        g.set(j % k, j, true);
    }
    Ok(g)
}

/// Diversity of round-robin repetition without cooperation.
pub fn repetition_baseline(k: usize, n: usize) -> Result<TradeoffPoint, DesignError> {
    if k == 0 || n < k {
        return Err(DesignError::InvalidParameters(format!(
            "repetition needs n >= k >= 1, got k = {k}, n = {n}"
        )));
    }
    let d: Vec<usize> = (0..k).map(|i| n / k + usize::from(i < n % k)).collect();
    Ok(TradeoffPoint::from_separation(k, n, &SeparationVector(d)))
}

/// Rate of the greedy network code for `(k, d)` relative to repetition at
/// the same diversity (rate `1/d`).
pub fn rate_advantage(k: usize, d: usize) -> Result<f64, DesignError> {
    let n = required_length(k, d)?;
    Ok(k as f64 / n as f64 * d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[u8]]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    fn rate34() -> BitMatrix {
        m(&[&[1, 0, 1, 1], &[0, 1, 0, 1], &[0, 0, 1, 0]])
    }

    fn repetition() -> BitMatrix {
        m(&[&[1, 0, 0, 1, 0, 0], &[0, 1, 0, 0, 1, 0], &[0, 0, 1, 0, 0, 1]])
    }

    fn six_slot() -> BitMatrix {
        m(&[&[1, 0, 0, 1, 1, 0], &[0, 1, 0, 0, 1, 1], &[0, 0, 1, 1, 0, 1]])
    }

    fn punctured() -> BitMatrix {
        m(&[&[1, 0, 0, 1, 1], &[0, 1, 0, 0, 1], &[0, 0, 1, 1, 0]])
    }

    fn simplex() -> BitMatrix {
        m(&[
            &[1, 0, 0, 1, 1, 0, 1],
            &[0, 1, 0, 0, 1, 1, 1],
            &[0, 0, 1, 1, 0, 1, 1],
        ])
    }

    /// Exhaustive over all 2^k data vectors.
    fn brute_separation(g: &BitMatrix) -> Vec<usize> {
        let (k, n) = (g.rows(), g.cols());
        let mut best = vec![usize::MAX; k];
        for u in 1u64..(1 << k) {
            let mut w = 0;
            for j in 0..n {
                let bit = (0..k).fold(false, |acc, i| acc ^ ((u >> i) & 1 == 1 && g.get(i, j)));
                w += usize::from(bit);
            }
            for (i, b) in best.iter_mut().enumerate() {
                if (u >> i) & 1 == 1 {
                    *b = (*b).min(w);
                }
            }
        }
        best
    }

    fn brute_min_distance(g: &BitMatrix) -> usize {
        (1u64..(1 << g.rows()))
            .map(|u| g.encode_u64(u).count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn separation_vectors_of_reference_codes() {
        for (g, expected) in [
            (rate34(), vec![2, 2, 1]),
            (repetition(), vec![2, 2, 2]),
            (six_slot(), vec![3, 3, 3]),
            (punctured(), vec![3, 2, 2]),
            (simplex(), vec![4, 4, 4]),
            (BitMatrix::identity(5), vec![1; 5]),
        ] {
            assert_eq!(separation_vector(&g).unwrap().0, expected);
            assert_eq!(brute_separation(&g), expected);
        }
    }

    #[test]
    fn separation_vector_errors() {
        let g = m(&[&[1, 0, 1], &[0, 0, 0]]);
        assert_eq!(separation_vector(&g).unwrap_err(), DesignError::ZeroRow(1));
        let g = m(&[&[1, 1, 0], &[1, 1, 0]]);
        assert!(matches!(
            separation_vector(&g).unwrap_err(),
            DesignError::Undecodable(_)
        ));
    }

    #[test]
    fn separation_vector_wide_code() {
        // Two-word rows exercise the generic path.
        let mut g = BitMatrix::zeros(4, 70);
        for i in 0..4 {
            for j in (i..70).step_by(i + 2) {
                g.set(i, j, true);
            }
        }
        assert_eq!(separation_vector(&g).unwrap().0, brute_separation(&g));
    }

    #[test]
    fn greedy_code_examples() {
        let g = greedy_code(6, 3).unwrap();
        assert_eq!(g.rows(), 3);
        assert_eq!(separation_vector(&g).unwrap().0, vec![3, 3, 3]);

        let g = greedy_code(7, 3).unwrap();
        assert_eq!(g.rows(), 4);
        assert_eq!(brute_min_distance(&g), 3);

        let g = greedy_code(5, 1).unwrap();
        assert_eq!(systematic_form(&g).unwrap(), BitMatrix::identity(5));
        assert_eq!(g.rows(), 5);

        assert!(greedy_code(2, 3).is_err());
        assert!(greedy_code(4, 0).is_err());
    }

    /// Literal lexicode: scan all vectors in order, keep those far from
    /// every kept vector.
    fn brute_lexicode(n: usize, d: usize) -> Vec<u64> {
        let mut kept: Vec<u64> = Vec::new();
        for x in 0u64..(1 << n) {
            if kept.iter().all(|&c| (c ^ x).count_ones() as usize >= d) {
                kept.push(x);
            }
        }
        kept
    }

    fn span(g: &BitMatrix) -> Vec<u64> {
        // Packs coordinate j at bit n-1-j to compare with the integer order.
        let n = g.cols();
        let mut words: Vec<u64> = (0u64..(1 << g.rows()))
            .map(|u| {
                let c = g.encode_u64(u);
                (0..n).fold(0, |acc, j| acc | (((c >> j) & 1) << (n - 1 - j)))
            })
            .collect();
        words.sort_unstable();
        words
    }

    #[test]
    fn greedy_code_matches_literal_lexicode() {
        for n in 1..=13 {
            for d in 1..=n.min(6) {
                let g = greedy_code(n, d).unwrap();
                assert_eq!(span(&g), brute_lexicode(n, d), "n = {n}, d = {d}");
            }
        }
    }

    #[test]
    fn greedy_code_pairwise_distances() {
        for (n, d) in [(12, 4), (15, 5), (16, 3)] {
            let g = greedy_code(n, d).unwrap();
            assert!(g.rows() <= 16);
            assert!(brute_min_distance(&g) >= d, "n = {n}, d = {d}");
        }
    }

    #[test]
    fn code_for_requirements_examples() {
        assert_eq!(code_for_requirements(3, 3).unwrap().n(), 6);
        let c = code_for_requirements(3, 4).unwrap();
        assert_eq!(c.n(), 7);
        assert_eq!(c.separation().0, vec![4, 4, 4]);
        let c = code_for_requirements(1, 5).unwrap();
        assert_eq!(c.n(), 5);
        assert_eq!(c.generator().to_rows(), vec![vec![1; 5]]);
        assert_eq!(required_length(25, 3).unwrap(), 30);
    }

    #[test]
    fn designed_codes_are_systematic_and_causal() {
        for k in 1..=6 {
            for d in 1..=5 {
                let c = code_for_requirements(k, d).unwrap();
                assert!(c.generator().is_systematic_prefix());
                assert!(c.validate_schedule().is_valid(), "k = {k}, d = {d}");
                assert!(c.separation().min() >= d);
            }
        }
    }

    #[test]
    fn puncture_examples() {
        let c1 = NetworkCode::with_default_schedule(six_slot()).unwrap();
        let c2 = c1.puncture(&[5]).unwrap();
        assert_eq!(c2.generator(), &punctured());
        assert_eq!(c2.separation().0, vec![3, 2, 2]);
        assert_eq!(c2.schedule_one_based(), vec![1, 2, 3, 1, 2]);
        assert_eq!(c1.puncture(&[]).unwrap(), c1);
        let c3 = c1.puncture(&[3, 4, 5]).unwrap();
        assert_eq!(c3.generator(), &BitMatrix::identity(3));
        assert_eq!(c3.separation().0, vec![1, 1, 1]);
    }

    #[test]
    fn puncture_rejects_zero_rows() {
        let c = NetworkCode::with_default_schedule(repetition()).unwrap();
        assert_eq!(c.puncture(&[0, 3]).unwrap_err(), DesignError::ZeroRow(0));
    }

    #[test]
    fn puncturing_never_raises_separation() {
        let c = NetworkCode::with_default_schedule(simplex()).unwrap();
        for mask in 0u32..(1 << 7) {
            let drop: Vec<usize> = (0..7).filter(|j| (mask >> j) & 1 == 1).collect();
            let Ok(p) = c.puncture(&drop) else { continue };
            for (after, before) in p.separation().0.iter().zip(&c.separation().0) {
                assert!(after <= before);
                assert!(before - after <= drop.len());
            }
        }
    }

    #[test]
    fn default_schedule_examples() {
        let one_based = |g: &BitMatrix| -> Vec<usize> {
            default_schedule(g).unwrap().iter().map(|v| v + 1).collect()
        };
        assert_eq!(one_based(&six_slot()), vec![1, 2, 3, 1, 2, 3]);
        assert_eq!(one_based(&simplex()), vec![1, 2, 3, 1, 2, 3, 1]);
        assert_eq!(one_based(&BitMatrix::identity(4)), vec![1, 2, 3, 4]);
        let swapped = rate34().column_select(&[3, 1, 2, 0]).unwrap();
        assert_eq!(default_schedule(&swapped).unwrap_err(), DesignError::NotSystematic);
        let with_zero_col = m(&[&[1, 0, 0], &[0, 1, 0]]);
        assert_eq!(
            default_schedule(&with_zero_col).unwrap_err(),
            DesignError::ZeroColumn(2)
        );
    }

    #[test]
    fn seeded_schedules_are_valid_and_reproducible() {
        let g = systematic_form(&greedy_code(12, 4).unwrap()).unwrap();
        let a = default_schedule_with(&g, TieBreak::Seeded(7)).unwrap();
        let b = default_schedule_with(&g, TieBreak::Seeded(7)).unwrap();
        assert_eq!(a, b);
        assert!(check_schedule(&g, &a).is_valid());
    }

    #[test]
    fn validate_schedule_examples() {
        let ok = NetworkCode::from_one_based(rate34(), &[1, 2, 3, 2]).unwrap();
        assert!(ok.validate_schedule().is_valid());

        let bad = NetworkCode::from_one_based(rate34(), &[2, 2, 3, 2]).unwrap();
        let report = bad.validate_schedule();
        assert!(report.violations.contains(&ScheduleViolation::TransmitterAbsent {
            slot: 0,
            transmitter: 1
        }));

        // Slot 2 (u1 + u3 by node 3) moved ahead of node 1's own slot.
        let reordered = rate34().column_select(&[2, 1, 0, 3]).unwrap();
        let code = NetworkCode::from_one_based(reordered, &[3, 2, 1, 2]).unwrap();
        let report = code.validate_schedule();
        assert_eq!(
            report.violations,
            vec![ScheduleViolation::Causality { slot: 0, source: 0 }]
        );
    }

    #[test]
    fn repetition_baseline_examples() {
        let p = repetition_baseline(3, 7).unwrap();
        assert_eq!((p.d_min, p.d_max), (2, 3));
        assert!((p.d_avg - 7.0 / 3.0).abs() < 1e-12);
        let p = repetition_baseline(3, 6).unwrap();
        assert_eq!((p.d_min, p.d_max, p.d_avg), (2, 2, 2.0));
        let p = repetition_baseline(3, 3).unwrap();
        assert_eq!((p.d_min, p.d_max, p.d_avg), (1, 1, 1.0));
        assert!(repetition_baseline(3, 2).is_err());
        // The repetition generator realizes the same separation vector.
        let g = repetition_generator(3, 7).unwrap();
        assert_eq!(separation_vector(&g).unwrap().0, vec![3, 2, 2]);
    }

    #[test]
    fn rate_advantage_examples() {
        assert!((rate_advantage(25, 3).unwrap() - 2.5).abs() < 1e-12);
        for d in 1..6 {
            assert!((rate_advantage(1, d).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((rate_advantage(3, 3).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_byte_exact() {
        let code = NetworkCode::from_one_based(punctured(), &[1, 2, 3, 1, 2]).unwrap();
        let text = code.to_json();
        assert_eq!(
            text,
            r#"{"k":3,"n":5,"G":[[1,0,0,1,1],[0,1,0,0,1],[0,0,1,1,0]],"v":[1,2,3,1,2],"sep":[3,2,2]}"#
        );
        assert_eq!(NetworkCode::from_json(&text).unwrap().to_json(), text);
    }

    #[test]
    fn json_rejects_inconsistent_files() {
        let wrong_sep = r#"{"k":3,"n":5,"G":[[1,0,0,1,1],[0,1,0,0,1],[0,0,1,1,0]],"v":[1,2,3,1,2],"sep":[3,3,3]}"#;
        assert!(matches!(
            NetworkCode::from_json(wrong_sep).unwrap_err(),
            DesignError::SeparationMismatch { .. }
        ));
        let zero_slot = r#"{"k":1,"n":1,"G":[[1]],"v":[0]}"#;
        assert!(NetworkCode::from_json(zero_slot).is_err());
        assert!(NetworkCode::from_json("{").is_err());
    }

    #[test]
    fn relay_pair_distinctness() {
        let c14 = NetworkCode::with_default_schedule(six_slot()).unwrap();
        assert!(c14.relay_pairs_distinct());
        let c16 = NetworkCode::with_default_schedule(simplex()).unwrap();
        assert!(!c16.relay_pairs_distinct());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn generator() -> impl Strategy<Value = BitMatrix> {
            (1usize..=8, 1usize..=14).prop_flat_map(|(k, extra)| {
                proptest::collection::vec(0u8..2, k * extra).prop_map(move |parity| {
                    let n = k + extra;
                    let mut g = BitMatrix::zeros(k, n);
                    for i in 0..k {
                        g.set(i, i, true);
                        for j in 0..extra {
                            g.set(i, k + j, parity[i * extra + j] == 1);
                        }
                    }
                    for j in 0..extra {
                        if (0..k).all(|i| !g.get(i, k + j)) {
                            g.set(j % k, k + j, true);
                        }
                    }
                    g
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn separation_matches_exhaustive_oracle(g in generator()) {
                let sep = separation_vector(&g).unwrap();
                prop_assert_eq!(&sep.0, &brute_separation(&g));
                prop_assert_eq!(sep.min(), brute_min_distance(&g));
                prop_assert!(sep.0.iter().all(|&d| d >= 1 && d <= g.cols()));
            }

            #[test]
            fn default_schedule_is_valid(g in generator()) {
                let v = default_schedule(&g).unwrap();
                prop_assert!(check_schedule(&g, &v).is_valid());
            }
        }
    }
}
