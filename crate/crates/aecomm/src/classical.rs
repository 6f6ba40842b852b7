//! Classical baseline: BPSK modulation, Hamming(7,4) encoding, and
//! soft-decision maximum-likelihood decoding.
//!
//! The modulated codewords live in the same 2n = 14 real-dimensional space
//! as the autoencoder signals (7 BPSK symbols in the even "real" slots,
//! odd "imaginary" slots zero), so perturbation and jamming vectors apply
//! to both systems unmodified. The BPSK amplitude is 1, which puts the
//! block under the same transmit power constraint the autoencoder's
//! Normalize layer enforces (mean square 0.5 over the 2n components, block
//! energy n), so both schemes spend identical energy per bit at the same
//! (n, k) and the robustness comparison is power-fair.

use crate::util::argmax_lowest;
use crate::{Error, Result};

/// Data bits per message.
pub const DATA_BITS: usize = 4;
/// Coded bits per block.
pub const CODE_BITS: usize = 7;
/// Number of distinct messages, 2^4.
pub const MESSAGE_COUNT: usize = 16;
/// Real dimensions of a modulated block (7 complex channel uses).
pub const BLOCK_LEN: usize = 2 * CODE_BITS;

/// BPSK amplitude per occupied real slot; gives mean square 0.5 over the
/// whole 2n-dimensional block.
pub const BPSK_AMPLITUDE: f64 = 1.0;

/// Systematic Hamming(7,4) code: generator matrix and full codebook.
#[derive(Debug, Clone)]
pub struct HammingCode74 {
    /// Systematic generator, rows are the codewords of the unit messages.
    pub generator: [[u8; CODE_BITS]; DATA_BITS],
    /// All 16 codewords indexed by message.
    pub codebook: Vec<[u8; CODE_BITS]>,
}

impl HammingCode74 {
    pub fn new() -> Self {
        let mut generator = [[0u8; CODE_BITS]; DATA_BITS];
        for (row, g) in generator.iter_mut().enumerate() {
            let mut bits = [0u8; DATA_BITS];
            bits[row] = 1;
            *g = hamming_encode(bits);
        }
        let codebook = (0..MESSAGE_COUNT)
            .map(|s| hamming_encode(message_bits(s).expect("in range")))
            .collect();
        HammingCode74 {
            generator,
            codebook,
        }
    }

    /// Minimum pairwise Hamming distance over the codebook.
    pub fn min_hamming_distance(&self) -> usize {
        let mut min = CODE_BITS;
        for i in 0..self.codebook.len() {
            for j in i + 1..self.codebook.len() {
                let d = self.codebook[i]
                    .iter()
                    .zip(&self.codebook[j])
                    .filter(|(a, b)| a != b)
                    .count();
                min = min.min(d);
            }
        }
        min
    }
}

impl Default for HammingCode74 {
    fn default() -> Self {
        Self::new()
    }
}

/// Data bits of a message index, most significant bit first.
pub fn message_bits(s: usize) -> Result<[u8; DATA_BITS]> {
    if s >= MESSAGE_COUNT {
        return Err(Error::Argument(format!(
            "message {s} out of range for {MESSAGE_COUNT} messages"
        )));
    }
    let mut bits = [0u8; DATA_BITS];
    for (i, b) in bits.iter_mut().enumerate() {
        *b = ((s >> (DATA_BITS - 1 - i)) & 1) as u8;
    }
    Ok(bits)
}

/// Systematic Hamming(7,4) encoding: `[d1 d2 d3 d4 p1 p2 p3]` with
/// `p1 = d1^d2^d4`, `p2 = d1^d3^d4`, `p3 = d2^d3^d4`.
pub fn hamming_encode(d: [u8; DATA_BITS]) -> [u8; CODE_BITS] {
    [
        d[0],
        d[1],
        d[2],
        d[3],
        d[0] ^ d[1] ^ d[3],
        d[0] ^ d[2] ^ d[3],
        d[1] ^ d[2] ^ d[3],
    ]
}

/// BPSK mapping into the shared 2n-dimensional signal space: bit 0 maps to
/// `+sqrt(0.5)` and bit 1 to `-sqrt(0.5)` in the even (real) slots; odd
/// (imaginary) slots are zero.
pub fn bpsk_modulate(code: [u8; CODE_BITS]) -> Vec<f64> {
    let mut x = vec![0.0; BLOCK_LEN];
    for (i, bit) in code.iter().enumerate() {
        x[2 * i] = if *bit == 0 {
            BPSK_AMPLITUDE
        } else {
            -BPSK_AMPLITUDE
        };
    }
    x
}

/// The 16 modulated codewords, the exhaustive-search MLD codebook.
#[derive(Debug, Clone)]
pub struct ModulatedCodebook {
    vectors: Vec<Vec<f64>>,
}

impl ModulatedCodebook {
    pub fn new() -> Self {
        let code = HammingCode74::new();
        let vectors = code.codebook.iter().map(|c| bpsk_modulate(*c)).collect();
        ModulatedCodebook { vectors }
    }

    pub fn vector(&self, s: usize) -> &[f64] {
        &self.vectors[s]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exhaustive minimum-Euclidean-distance decoding, lowest index on ties.
    pub fn mld_decode(&self, y: &[f64]) -> usize {
        let mut scores = Vec::with_capacity(self.vectors.len());
        for c in &self.vectors {
            let d2: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            scores.push(-d2);
        }
        argmax_lowest(&scores)
    }

    /// Minimum Euclidean distance between distinct modulated codewords.
    pub fn min_euclidean_distance(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.vectors.len() {
            for j in i + 1..self.vectors.len() {
                let d2: f64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                min = min.min(d2.sqrt());
            }
        }
        min
    }
}

impl Default for ModulatedCodebook {
    fn default() -> Self {
        Self::new()
    }
}
