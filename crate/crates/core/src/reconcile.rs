//! Blockwise reconciliation over the product lattices `Λ1 ⊇ Λ2 ⊇ Λ3`.
//!
//! A polynomial is split into 32 blocks of 8 coordinates. Per block,
//! `HelpRec(v) = Q_Λ1(v) mod Λ2` and `Rec(v, r) = Q_Λ2(v - r) mod Λ3`, where the
//! hint `r` is represented by its canonical lift [`hint_lift`]. Both parties
//! must lift with the same function; changing it breaks the wire format.

use std::fmt;

use crate::e8::{self, hint_label, hint_lift, key_label, key_lift};
use crate::error::{Error, Result};
use crate::params::{Params, BLOCKS, BLOCK_DIM};
use crate::ring::{interleave, split, BlockCoeffs, Poly};

pub const KEY_BYTES: usize = BLOCKS;

/// Coset labels of `Λ1/Λ2`, one per coordinate of every block.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HelpHint {
    pub blocks: [[u16; BLOCK_DIM]; BLOCKS],
}

impl fmt::Debug for HelpHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HelpHint({:?}..)", self.blocks[0])
    }
}

impl Default for HelpHint {
    fn default() -> Self {
        Self {
            blocks: [[0; BLOCK_DIM]; BLOCKS],
        }
    }
}

impl HelpHint {
    /// Checks every coordinate against `2^(p-1)`.
    pub fn validate(&self, params: &Params) -> Result<()> {
        for (block, coords) in self.blocks.iter().enumerate() {
            for (index, &value) in coords.iter().enumerate() {
                if u32::from(value) >= params.hint_modulus() {
                    return Err(Error::HintOutOfRange {
                        block,
                        index,
                        value: u32::from(value),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One key-label byte per block, in block order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SharedKey(pub [u8; KEY_BYTES]);

impl SharedKey {
    pub fn as_bytes(&self) -> &[u8; KEY_BYTES] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for SharedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SharedKey({})", self.to_hex())
    }
}

fn quantize(block: &BlockCoeffs, scale: i64) -> BlockCoeffs {
    // Params guarantee an even scale.
    e8::nearest_scaled(block, scale)
}

pub fn help_rec(v: &Poly, params: &Params) -> HelpHint {
    let mut hint = HelpHint::default();
    for (dst, block) in hint.blocks.iter_mut().zip(split(v).iter()) {
        let point = quantize(block, params.s1());
        *dst = hint_label(&point, params).expect("quantizer output lies in Λ1");
    }
    hint
}

pub fn rec(v: &Poly, hint: &HelpHint, params: &Params) -> Result<SharedKey> {
    hint.validate(params)?;
    let mut key = SharedKey::default();
    for (kappa, block) in split(v).iter().enumerate() {
        let lift = hint_lift(&hint.blocks[kappa], params)?;
        let shifted = e8::sub(block, &lift);
        let point = quantize(&shifted, params.s2());
        key.0[kappa] = key_label(&point, params).expect("quantizer output lies in Λ2");
    }
    Ok(key)
}

/// `(v - k + k') mod Λ3`, blockwise, with coordinates back in `[0, q)`.
pub fn permute_pi(v: &Poly, from: &SharedKey, to: &SharedKey, params: &Params) -> Poly {
    let mut blocks = split(v);
    for (kappa, block) in blocks.iter_mut().enumerate() {
        let minus = key_lift(from.0[kappa], params);
        let plus = key_lift(to.0[kappa], params);
        for i in 0..BLOCK_DIM {
            block[i] += plus[i] - minus[i];
        }
    }
    interleave(&blocks, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::N;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut impl Rng, params: &Params) -> Poly {
        let coeffs: Vec<u32> = (0..N).map(|_| rng.gen_range(0..params.q())).collect();
        Poly::from_coeffs(&coeffs, params).unwrap()
    }

    fn random_key(rng: &mut impl Rng) -> SharedKey {
        SharedKey(std::array::from_fn(|_| rng.gen()))
    }

    /// A polynomial whose every block is the given Λ2 point.
    fn lattice_blocks(points: &[[i64; 8]; BLOCKS], params: &Params) -> Poly {
        interleave(points, params)
    }

    #[test]
    fn zero_inputs() {
        let params = Params::default();
        assert_eq!(help_rec(&Poly::zero(), &params), HelpHint::default());
        let key = rec(&Poly::zero(), &HelpHint::default(), &params).unwrap();
        assert_eq!(key, SharedKey([0; 32]));
    }

    #[test]
    fn lattice_points_reconcile_to_their_labels() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let labels: [u8; 32] = std::array::from_fn(|_| rng.gen());
        let points: [[i64; 8]; BLOCKS] = std::array::from_fn(|i| key_lift(labels[i], &params));
        let v = lattice_blocks(&points, &params);
        let hint = help_rec(&v, &params);
        assert_eq!(hint, HelpHint::default());
        assert_eq!(rec(&v, &hint, &params).unwrap(), SharedKey(labels));
    }

    #[test]
    fn hint_is_invariant_under_coding_lattice_shifts() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let v = random_poly(&mut rng, &params);
            let hint = help_rec(&v, &params);
            let mut blocks = split(&v);
            let kappa = rng.gen_range(0..BLOCKS);
            let shift = key_lift(rng.gen(), &params);
            for i in 0..8 {
                blocks[kappa][i] += shift[i];
            }
            assert_eq!(help_rec(&interleave(&blocks, &params), &params), hint);
        }
    }

    #[test]
    fn small_perturbations_keep_the_key() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        // Any δ with ‖δ‖ + covering radius of Λ1 below the packing
        // radius of Λ2 is safe; ‖δ‖_∞ ≤ 100 gives ‖δ‖ ≤ 283 < 1024/√2 - 64.
        for _ in 0..200 {
            let v = random_poly(&mut rng, &params);
            let hint = help_rec(&v, &params);
            let key = rec(&v, &hint, &params).unwrap();
            let delta: Vec<i64> = (0..N).map(|_| rng.gen_range(-100..=100)).collect();
            let moved = v.add(&Poly::from_signed(&delta, &params), &params);
            assert_eq!(rec(&moved, &hint, &params).unwrap(), key);
        }
    }

    #[test]
    fn rec_rejects_malformed_hint() {
        let params = Params::default();
        let mut hint = HelpHint::default();
        hint.blocks[3][2] = 16;
        let err = rec(&Poly::zero(), &hint, &params).unwrap_err();
        assert_eq!(
            err,
            Error::HintOutOfRange {
                block: 3,
                index: 2,
                value: 16
            }
        );
    }

    #[test]
    fn permutation_identity_and_inverse() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let v = random_poly(&mut rng, &params);
            let k = random_key(&mut rng);
            let k2 = random_key(&mut rng);
            assert_eq!(permute_pi(&v, &k, &k, &params), v);
            let there = permute_pi(&v, &k, &k2, &params);
            assert_eq!(permute_pi(&there, &k2, &k, &params), v);
        }
    }

    #[test]
    fn permutation_is_injective_on_a_sample() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let k = random_key(&mut rng);
        let k2 = random_key(&mut rng);
        let inputs: Vec<Poly> = (0..500).map(|_| random_poly(&mut rng, &params)).collect();
        let outputs: std::collections::HashSet<Poly> = inputs
            .iter()
            .map(|v| permute_pi(v, &k, &k2, &params))
            .collect();
        let distinct: std::collections::HashSet<&Poly> = inputs.iter().collect();
        assert_eq!(outputs.len(), distinct.len());
    }

    #[test]
    fn reconciliation_properties_on_random_inputs() {
        for params in [Params::default(), Params::new(4096, 4, 3).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(25);
            for _ in 0..500 {
                let v = random_poly(&mut rng, &params);
                let r = help_rec(&v, &params);
                let k = rec(&v, &r, &params).unwrap();
                let k2 = random_key(&mut rng);
                let moved = permute_pi(&v, &k, &k2, &params);
                assert_eq!(help_rec(&moved, &params), r);
                assert_eq!(rec(&moved, &r, &params).unwrap(), k2);
            }
        }
    }

    #[test]
    fn rate_checks() {
        let params = Params::default();
        assert_eq!(KEY_BYTES * 8, params.key_bits());
        assert_eq!(
            BLOCKS * BLOCK_DIM * params.rec_rate() as usize,
            params.hint_bits()
        );
    }
}
