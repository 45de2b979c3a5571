//! Dense, bit-packed vectors and matrices over GF(2).
//!
//! Bits are packed little-endian into `u64` words: column `j` lives in word
//! `j / 64` at bit position `j % 64` (LSB = column 0). Unused high bits of
//! the last word are always zero, so word-wise popcounts and comparisons are
//! exact.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("duplicate column index {0}")]
    DuplicateIndex(usize),
    #[error("entry {0} is not a GF(2) element")]
    InvalidBit(u8),
    #[error("rows have differing lengths")]
    RaggedRows,
}

/// A vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(j, true),
                other => return Err(Gf2Error::InvalidBit(other)),
            }
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            v.set(j, b);
        }
        v
    }

    /// Vector of length `len` whose entry `j` is bit `j` of `value`.
    ///
    /// Panics if `len > 64`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD_BITS, "from_u64 supports at most 64 entries");
        let mask = low_mask(len);
        Self {
            words: if len == 0 { vec![] } else { vec![value & mask] },
            len,
        }
    }

    /// Packed value of a vector of at most 64 entries.
    pub fn as_u64(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range {}", self.len);
        (self.words[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.len, "bit index {j} out of range {}", self.len);
        let bit = 1u64 << (j % WORD_BITS);
        if value {
            self.words[j / WORD_BITS] |= bit;
        } else {
            self.words[j / WORD_BITS] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        assert!(j < self.len, "bit index {j} out of range {}", self.len);
        self.words[j / WORD_BITS] ^= 1u64 << (j % WORD_BITS);
    }

    /// Number of nonzero entries.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &Self) -> Result<Self, Gf2Error> {
        self.zip_words(other, |a, b| a ^ b)
    }

    pub fn and(&self, other: &Self) -> Result<Self, Gf2Error> {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn xor_assign(&mut self, other: &Self) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    fn zip_words(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            len: self.len,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    /// Indices of the nonzero entries, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&j| self.get(j))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[")?;
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, "]")
    }
}

/// Dense `rows × cols` matrix over GF(2), stored row-major with each row
/// packed into `ceil(cols / 64)` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from a list of 0/1 rows.
    ///
    /// An empty row list gives a `0 × 0` matrix.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Gf2Error::RaggedRows);
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(i, j, true),
                    other => return Err(Gf2Error::InvalidBit(other)),
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from row vectors, which must share a length.
    pub fn from_row_vectors(rows: &[BitVector], cols: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            m.data[i * m.stride..(i + 1) * m.stride].copy_from_slice(r.words());
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "entry ({i}, {j}) out of range");
        (self.data[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "entry ({i}, {j}) out of range");
        let word = &mut self.data[i * self.stride + j / WORD_BITS];
        let bit = 1u64 << (j % WORD_BITS);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// Row `i` packed into a single word; only valid for `cols <= 64`.
    #[inline]
    pub fn row_u64(&self, i: usize) -> u64 {
        debug_assert!(self.cols <= WORD_BITS);
        if self.stride == 0 {
            0
        } else {
            self.data[i * self.stride]
        }
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector {
            words: self.row_words(i).to_vec(),
            len: self.cols,
        }
    }

    pub fn column(&self, j: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.row_words(i).iter().all(|&w| w == 0)
    }

    /// `u · self` with arithmetic mod 2.
    pub fn vec_mul(&self, u: &BitVector) -> Result<BitVector, Gf2Error> {
        if u.len() != self.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                found: u.len(),
            });
        }
        let mut out = BitVector::zeros(self.cols);
        for i in u.ones() {
            for (o, r) in out.words.iter_mut().zip(self.row_words(i)) {
                *o ^= r;
            }
        }
        Ok(out)
    }

    /// Codeword for a packed message (bit `i` of `message` selects row `i`).
    /// Only valid when `rows <= 64` and `cols <= 64`.
    #[inline]
    pub fn encode_u64(&self, message: u64) -> u64 {
        debug_assert!(self.rows <= WORD_BITS && self.cols <= WORD_BITS);
        let mut out = 0;
        let mut m = message;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            out ^= self.row_u64(i);
            m &= m - 1;
        }
        out
    }

    /// New matrix containing only the `keep` columns, in the given order.
    pub fn column_select(&self, keep: &[usize]) -> Result<Self, Gf2Error> {
        let mut seen = vec![false; self.cols];
        for &j in keep {
            if j >= self.cols {
                return Err(Gf2Error::IndexOutOfRange {
                    index: j,
                    bound: self.cols,
                });
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Gf2Error::DuplicateIndex(j));
            }
        }
        let mut out = Self::zeros(self.rows, keep.len());
        for i in 0..self.rows {
            for (dst, &src) in keep.iter().enumerate() {
                if self.get(i, src) {
                    out.set(i, dst, true);
                }
            }
        }
        Ok(out)
    }

    /// True iff the leading `rows` columns form the identity.
    pub fn is_systematic_prefix(&self) -> bool {
        if self.cols < self.rows {
            return false;
        }
        (0..self.rows).all(|i| (0..self.rows).all(|j| self.get(i, j) == (i == j)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self, Gf2Error> {
        if self.rows != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j));
            }
        }
        Ok(out)
    }

    /// Rows as 0/1 lists.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn low_mask(len: usize) -> u64 {
    if len >= WORD_BITS {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rate34() -> BitMatrix {
        BitMatrix::from_rows(&[[1, 0, 1, 1], [0, 1, 0, 1], [0, 0, 1, 0]]).unwrap()
    }

    fn six_slot() -> BitMatrix {
        BitMatrix::from_rows(&[
            [1, 0, 0, 1, 1, 0],
            [0, 1, 0, 0, 1, 1],
            [0, 0, 1, 1, 0, 1],
        ])
        .unwrap()
    }

    // Per-entry dot products, no packing.
    fn naive_mul(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
        let cols = g.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| u.iter().zip(g).fold(0, |acc, (&ui, row)| acc ^ (ui & row[j])))
            .collect()
    }

    #[test]
    fn vec_mul_examples() {
        let g = rate34();
        let zero = BitVector::zeros(3);
        assert_eq!(g.vec_mul(&zero).unwrap().to_bits(), vec![0, 0, 0, 0]);
        let u = BitVector::from_bits(&[1, 0, 0]).unwrap();
        assert_eq!(g.vec_mul(&u).unwrap().to_bits(), vec![1, 0, 1, 1]);

        let g1 = six_slot();
        let u = [1, 0, 1];
        let expected = naive_mul(&u, &g1.to_rows());
        let got = g1.vec_mul(&BitVector::from_bits(&u).unwrap()).unwrap();
        assert_eq!(got.to_bits(), expected);
        assert_eq!(expected, vec![1, 0, 1, 0, 1, 1]);
    }

    #[test]
    fn vec_mul_dimension_mismatch() {
        let err = rate34().vec_mul(&BitVector::zeros(4)).unwrap_err();
        assert_eq!(
            err,
            Gf2Error::DimensionMismatch {
                expected: 3,
                found: 4
            }
        );
    }

    #[test]
    fn encode_u64_agrees_with_vec_mul() {
        let g = six_slot();
        for m in 0..8u64 {
            let u = BitVector::from_u64(m, 3);
            assert_eq!(g.vec_mul(&u).unwrap().as_u64().unwrap(), g.encode_u64(m));
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(BitVector::zeros(4).weight(), 0);
        assert_eq!(BitVector::from_bits(&[1, 0, 1, 1]).unwrap().weight(), 3);
        let bits: Vec<u8> = (0..64u32).map(|j| ((j * 7 + 3) % 5 < 2) as u8).collect();
        let naive = bits.iter().filter(|&&b| b == 1).count();
        assert_eq!(BitVector::from_bits(&bits).unwrap().weight(), naive);
    }

    #[test]
    fn column_select_examples() {
        let g1 = six_slot();
        let g2 = g1.column_select(&[0, 1, 2, 3, 4]).unwrap();
        let expected =
            BitMatrix::from_rows(&[[1, 0, 0, 1, 1], [0, 1, 0, 0, 1], [0, 0, 1, 1, 0]]).unwrap();
        assert_eq!(g2, expected);
        assert_eq!(g1.column_select(&[0, 1, 2, 3, 4, 5]).unwrap(), g1);
        let empty = g1.column_select(&[]).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (3, 0));
    }

    #[test]
    fn column_select_errors() {
        let g = rate34();
        assert_eq!(
            g.column_select(&[0, 4]).unwrap_err(),
            Gf2Error::IndexOutOfRange { index: 4, bound: 4 }
        );
        assert_eq!(
            g.column_select(&[1, 2, 1]).unwrap_err(),
            Gf2Error::DuplicateIndex(1)
        );
    }

    #[test]
    fn systematic_prefix() {
        // The leading block of the sample network is upper triangular
        // (slot 2 already combines u1 and u3), not the identity.
        assert!(!rate34().is_systematic_prefix());
        assert!(six_slot().is_systematic_prefix());
        let g3 = BitMatrix::from_rows(&[
            [1, 0, 0, 1, 1, 0, 1],
            [0, 1, 0, 0, 1, 1, 1],
            [0, 0, 1, 1, 0, 1, 1],
        ])
        .unwrap();
        assert!(g3.is_systematic_prefix());
        let swapped = rate34().column_select(&[3, 1, 2, 0]).unwrap();
        assert!(!swapped.is_systematic_prefix());
    }

    #[test]
    fn from_rows_rejects_bad_input() {
        assert_eq!(
            BitMatrix::from_rows(&[vec![1, 0], vec![1]]).unwrap_err(),
            Gf2Error::RaggedRows
        );
        assert_eq!(
            BitMatrix::from_rows(&[[1, 2]]).unwrap_err(),
            Gf2Error::InvalidBit(2)
        );
    }

    #[test]
    fn wide_matrices_cross_word_boundaries() {
        let cols = 130;
        let mut g = BitMatrix::zeros(2, cols);
        for j in (0..cols).step_by(3) {
            g.set(0, j, true);
        }
        for j in (1..cols).step_by(5) {
            g.set(1, j, true);
        }
        let u = BitVector::from_bits(&[1, 1]).unwrap();
        let expected = naive_mul(&[1, 1], &g.to_rows());
        assert_eq!(g.vec_mul(&u).unwrap().to_bits(), expected);
        assert_eq!(g.transpose().transpose(), g);
    }

    fn matrix_strategy() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
        (1usize..8, 1usize..80).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), proptest::collection::vec(0u8..2, r * c))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn vec_mul_is_linear((r, c, entries) in matrix_strategy(), a in any::<u64>(), b in any::<u64>()) {
            let rows: Vec<Vec<u8>> = entries.chunks(c).map(<[u8]>::to_vec).collect();
            let g = BitMatrix::from_rows(&rows).unwrap();
            let ua = BitVector::from_u64(a, r);
            let ub = BitVector::from_u64(b, r);
            let lhs = g.vec_mul(&ua.xor(&ub).unwrap()).unwrap();
            let rhs = g.vec_mul(&ua).unwrap().xor(&g.vec_mul(&ub).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn weight_inclusion_exclusion(a in proptest::collection::vec(0u8..2, 0..200), seed in any::<u64>()) {
            let b: Vec<u8> = a.iter().enumerate().map(|(j, _)| ((seed >> (j % 64)) & 1) as u8).collect();
            let va = BitVector::from_bits(&a).unwrap();
            let vb = BitVector::from_bits(&b).unwrap();
            let x = va.xor(&vb).unwrap().weight();
            let both = va.and(&vb).unwrap().weight();
            prop_assert_eq!(x, va.weight() + vb.weight() - 2 * both);
        }

        #[test]
        fn column_select_then_reinsert_reconstructs((r, c, entries) in matrix_strategy(), mask in any::<u128>()) {
            let rows: Vec<Vec<u8>> = entries.chunks(c).map(<[u8]>::to_vec).collect();
            let g = BitMatrix::from_rows(&rows).unwrap();
            let keep: Vec<usize> = (0..c).filter(|j| (mask >> j) & 1 == 1).collect();
            let dropped: Vec<usize> = (0..c).filter(|j| (mask >> j) & 1 == 0).collect();
            let kept = g.column_select(&keep).unwrap();
            let gone = g.column_select(&dropped).unwrap();
            let mut rebuilt = BitMatrix::zeros(r, c);
            for i in 0..r {
                for (src, &dst) in keep.iter().enumerate() {
                    rebuilt.set(i, dst, kept.get(i, src));
                }
                for (src, &dst) in dropped.iter().enumerate() {
                    rebuilt.set(i, dst, gone.get(i, src));
                }
            }
            prop_assert_eq!(rebuilt, g);
        }
    }
}
