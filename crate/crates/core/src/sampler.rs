//! Seed expansion for the public matrix and centered binomial noise.
//!
//! Both samplers read SHAKE-128 output as a little-endian bit stream: bit `i`
//! of the stream is bit `i % 8` of byte `i / 8`. XOF inputs are
//!
//! * matrix entry `(i, j)`: `0x00 ‖ seed ‖ i ‖ j`
//! * noise polynomial: `0x01 ‖ seed ‖ domain ‖ counter`
//!
//! These encodings are normative: the frozen known-answer tests depend on them.

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;

use crate::params::{Params, N};
use crate::ring::{Poly, PolyMat, PolyVec};

pub const SEED_BYTES: usize = 32;

const MATRIX_DOMAIN: u8 = 0x00;
const NOISE_DOMAIN: u8 = 0x01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub [u8; SEED_BYTES]);

impl Seed {
    pub fn as_bytes(&self) -> &[u8; SEED_BYTES] {
        &self.0
    }
}

impl From<[u8; SEED_BYTES]> for Seed {
    fn from(bytes: [u8; SEED_BYTES]) -> Self {
        Self(bytes)
    }
}

/// Identifies one noise polynomial within a protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseNonce {
    pub domain: u8,
    pub counter: u8,
}

impl NoiseNonce {
    pub const fn new(domain: u8, counter: u8) -> Self {
        Self { domain, counter }
    }

    pub fn offset(self, by: u8) -> Self {
        Self {
            domain: self.domain,
            counter: self.counter.wrapping_add(by),
        }
    }
}

/// Little-endian bit reader over an XOF stream.
struct BitStream<R> {
    reader: R,
    buf: [u8; 168],
    pos: usize,
    acc: u64,
    bits: u32,
}

impl<R: XofReader> BitStream<R> {
    fn new(reader: R) -> Self {
        Self {
            reader,
            buf: [0; 168],
            pos: 168,
            acc: 0,
            bits: 0,
        }
    }

    fn next_byte(&mut self) -> u8 {
        if self.pos == self.buf.len() {
            self.reader.read(&mut self.buf);
            self.pos = 0;
        }
        let b = self.buf[self.pos];
        self.pos += 1;
        b
    }

    /// Reads `width` bits (at most 32) as a little-endian integer.
    fn take(&mut self, width: u32) -> u32 {
        debug_assert!(width <= 32);
        while self.bits < width {
            self.acc |= u64::from(self.next_byte()) << self.bits;
            self.bits += 8;
        }
        let out = (self.acc & ((1u64 << width) - 1)) as u32;
        self.acc >>= width;
        self.bits -= width;
        out
    }
}

fn xof(parts: &[&[u8]]) -> impl XofReader {
    let mut hasher = Shake128::default();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize_xof()
}

/// Uniform entry `(i, j)` of the public matrix.
pub fn expand_entry(seed: &Seed, i: u8, j: u8, params: &Params) -> Poly {
    let mut stream = BitStream::new(xof(&[&[MATRIX_DOMAIN], &seed.0, &[i, j]]));
    let coeffs: Vec<u32> = (0..N).map(|_| stream.take(params.log_q())).collect();
    Poly::from_coeffs(&coeffs, params).expect("log2(q)-bit chunks are below q")
}

/// The `d × d` public matrix derived from `seed`.
pub fn expand_matrix(seed: &Seed, params: &Params) -> PolyMat {
    PolyMat::from_fn(params.d(), |i, j| {
        expand_entry(seed, i as u8, j as u8, params)
    })
}

/// Maps `2k` stream bits to a binomial sample: first `k` bits minus the next `k`.
pub fn cbd_from_bits(bits: u32, k: u32) -> i64 {
    let low_mask = (1u32 << k) - 1;
    let plus = (bits & low_mask).count_ones();
    let minus = ((bits >> k) & low_mask).count_ones();
    i64::from(plus) - i64::from(minus)
}

/// Signed noise coefficients in `[-k, k]`.
pub fn sample_cbd_signed(seed: &Seed, nonce: NoiseNonce, params: &Params) -> [i64; N] {
    let mut stream = BitStream::new(xof(&[
        &[NOISE_DOMAIN],
        &seed.0,
        &[nonce.domain, nonce.counter],
    ]));
    let k = params.k();
    let mut out = [0i64; N];
    for c in out.iter_mut() {
        // Read the two halves separately so k up to 16 never exceeds 32 bits.
        let plus = stream.take(k).count_ones();
        let minus = stream.take(k).count_ones();
        *c = i64::from(plus) - i64::from(minus);
    }
    out
}

/// A polynomial with i.i.d. `ψ_k` coefficients, reduced into `[0, q)`.
pub fn sample_cbd_poly(seed: &Seed, nonce: NoiseNonce, params: &Params) -> Poly {
    Poly::from_signed(&sample_cbd_signed(seed, nonce, params), params)
}

/// `d` polynomials with consecutive nonces starting at `base`.
pub fn sample_cbd_vec(seed: &Seed, base: NoiseNonce, params: &Params) -> PolyVec {
    PolyVec(
        (0..params.d())
            .map(|i| sample_cbd_poly(seed, base.offset(i as u8), params))
            .collect(),
    )
}

/// Exact probabilities of `ψ_k` on `-k..=k`, as `C(2k, k + j) / 4^k`.
pub fn cbd_pmf(k: u32) -> Vec<f64> {
    binomial_row(2 * k)
        .into_iter()
        .map(|c| c as f64 / 4f64.powi(k as i32))
        .collect()
}

/// `C(n, 0..=n)`.
pub(crate) fn binomial_row(n: u32) -> Vec<u64> {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}
