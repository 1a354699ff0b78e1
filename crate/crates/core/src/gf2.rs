//! Packed GF(2) vectors and square parity matrices.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("qubit index {index} out of range for {n} qubits")]
    OutOfRange { index: usize, n: usize },
    #[error("CNOT control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("matrix is not invertible over GF(2)")]
    NotInvertible,
    #[error("expected dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("entry {0} is not a bit (0 or 1)")]
    NotABit(u8),
}

/// A vector over GF(2) stored as packed 64-bit words.
///
/// Bit `j` is the coefficient of input variable `x_j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Parity {
    len: usize,
    words: Vec<u64>,
}

impl Parity {
    pub fn zeros(len: usize) -> Self {
        Parity {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// The unit vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut p = Parity::zeros(len);
        p.set(i, true);
        p
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        let mut p = Parity::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => p.set(j, true),
                other => return Err(Gf2Error::NotABit(other)),
            }
        }
        Ok(p)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut p = Parity::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            p.set(j, b);
        }
        p
    }

    /// Builds a vector from the low `len` bits of `mask`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD_BITS);
        let mut p = Parity::zeros(len);
        if len > 0 {
            let keep = if len == WORD_BITS {
                u64::MAX
            } else {
                (1u64 << len) - 1
            };
            p.words[0] = mask & keep;
        }
        p
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
        debug_assert!(j < self.len);
        (self.words[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        debug_assert!(j < self.len);
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            self.words[j / WORD_BITS] |= mask;
        } else {
            self.words[j / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &Parity) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Parity) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|j| self.get(j) as u8).collect()
    }

    /// Low word of the vector; only meaningful for `len <= 64`.
    pub fn as_mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Parity({self})")
    }
}

/// Square matrix over GF(2); row `i` is the parity currently held on qubit `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityMatrix {
    rows: Vec<Parity>,
}

impl ParityMatrix {
    pub fn identity(n: usize) -> Self {
        ParityMatrix {
            rows: (0..n).map(|i| Parity::unit(n, i)).collect(),
        }
    }

    /// Builds an invertible matrix; fails on shape errors or rank deficiency.
    pub fn from_rows(rows: Vec<Parity>) -> Result<Self, Gf2Error> {
        let m = Self::from_rows_unchecked(rows)?;
        if !m.is_invertible() {
            return Err(Gf2Error::NotInvertible);
        }
        Ok(m)
    }

    /// Builds a square matrix without the rank check.
    pub fn from_rows_unchecked(rows: Vec<Parity>) -> Result<Self, Gf2Error> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Gf2Error::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(ParityMatrix { rows })
    }

    pub fn from_bits(bits: &[Vec<u8>]) -> Result<Self, Gf2Error> {
        let rows = bits
            .iter()
            .map(|r| Parity::from_bits(r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &Parity {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Parity] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn to_bits(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(Parity::to_bits).collect()
    }

    /// In-place CNOT: the target row absorbs the control row.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), Gf2Error> {
        let n = self.n();
        for index in [control, target] {
            if index >= n {
                return Err(Gf2Error::OutOfRange { index, n });
            }
        }
        if control == target {
            return Err(Gf2Error::SameQubit(control));
        }
        self.cnot_unchecked(control, target);
        Ok(())
    }

    /// Functional form of [`ParityMatrix::apply_cnot`].
    pub fn with_cnot(&self, control: usize, target: usize) -> Result<Self, Gf2Error> {
        let mut next = self.clone();
        next.apply_cnot(control, target)?;
        Ok(next)
    }

    #[inline]
    pub(crate) fn cnot_unchecked(&mut self, control: usize, target: usize) {
        let (c, t) = if control < target {
            let (lo, hi) = self.rows.split_at_mut(target);
            (&lo[control], &mut hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(control);
            (&hi[0], &mut lo[target])
        };
        t.xor_assign(c);
    }

    pub fn rank(&self) -> usize {
        let n = self.n();
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot) = (rank..n).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.n()
    }

    /// Matrix product `self * other` over GF(2).
    pub fn mul(&self, other: &ParityMatrix) -> Result<ParityMatrix, Gf2Error> {
        if self.n() != other.n() {
            return Err(Gf2Error::Dimension {
                expected: self.n(),
                found: other.n(),
            });
        }
        let n = self.n();
        let rows = self
            .rows
            .iter()
            .map(|a| {
                let mut out = Parity::zeros(n);
                for k in 0..n {
                    if a.get(k) {
                        out.xor_assign(&other.rows[k]);
                    }
                }
                out
            })
            .collect();
        Ok(ParityMatrix { rows })
    }
}

impl fmt::Debug for ParityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}
