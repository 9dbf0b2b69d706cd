//! Arithmetic in `R_q = Z_q[X]/(X^256 + 1)` and in modules over it.
//!
//! Coefficients are kept in the canonical range `[0, q)`. Since `q` is a power
//! of two dividing `2^32`, all intermediate arithmetic is done with wrapping
//! `u32` operations and reduced by masking at the end.

use std::fmt;

use crate::params::{Params, BLOCKS, BLOCK_DIM, N};

/// Coefficients of one block after [`split`].
pub type BlockCoeffs = [i64; BLOCK_DIM];

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: [u16; N],
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nonzero = self.coeffs.iter().filter(|&&c| c != 0).count();
        write!(f, "Poly({nonzero} nonzero; {:?}..)", &self.coeffs[..8])
    }
}

impl Default for Poly {
    fn default() -> Self {
        Self::zero()
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self { coeffs: [0; N] }
    }

    /// The constant polynomial `c mod q`.
    pub fn constant(c: i64, params: &Params) -> Self {
        Self::monomial(0, c, params)
    }

    /// `c · X^degree`, reduced mod `X^n + 1` and `q`.
    pub fn monomial(degree: usize, c: i64, params: &Params) -> Self {
        let mut out = Self::zero();
        let (index, negate) = ((degree % N), (degree / N) % 2 == 1);
        let c = if negate { -c } else { c };
        out.coeffs[index] = reduce_signed(c, params);
        out
    }

    /// Builds a polynomial from arbitrary integers, reducing each into `[0, q)`.
    pub fn from_signed(coeffs: &[i64], params: &Params) -> Self {
        assert_eq!(coeffs.len(), N, "polynomial must have {N} coefficients");
        let mut out = Self::zero();
        for (dst, &c) in out.coeffs.iter_mut().zip(coeffs) {
            *dst = reduce_signed(c, params);
        }
        out
    }

    /// Builds a polynomial from already reduced coefficients.
    ///
    /// Returns `None` if the length is wrong or a coefficient is not below `q`.
    pub fn from_coeffs(coeffs: &[u32], params: &Params) -> Option<Self> {
        if coeffs.len() != N || coeffs.iter().any(|&c| c >= params.q()) {
            return None;
        }
        let mut out = Self::zero();
        for (dst, &c) in out.coeffs.iter_mut().zip(coeffs) {
            *dst = c as u16;
        }
        Some(out)
    }

    pub fn coeffs(&self) -> &[u16; N] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u32 {
        u32::from(self.coeffs[i])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Coefficients lifted to the centered range `[-q/2, q/2)`.
    pub fn centered(&self, params: &Params) -> [i64; N] {
        let q = i64::from(params.q());
        let mut out = [0i64; N];
        for (dst, &c) in out.iter_mut().zip(&self.coeffs) {
            let c = i64::from(c);
            *dst = if c >= q / 2 { c - q } else { c };
        }
        out
    }

    pub fn add(&self, other: &Poly, params: &Params) -> Poly {
        self.zip_with(other, params, u32::wrapping_add)
    }

    pub fn sub(&self, other: &Poly, params: &Params) -> Poly {
        self.zip_with(other, params, u32::wrapping_sub)
    }

    pub fn neg(&self, params: &Params) -> Poly {
        Poly::zero().sub(self, params)
    }

    fn zip_with(&self, other: &Poly, params: &Params, op: impl Fn(u32, u32) -> u32) -> Poly {
        let mask = params.mask();
        let mut out = Poly::zero();
        for ((dst, &a), &b) in out.coeffs.iter_mut().zip(&self.coeffs).zip(&other.coeffs) {
            *dst = (op(u32::from(a), u32::from(b)) & mask) as u16;
        }
        out
    }

    /// Negacyclic product by schoolbook multiplication.
    pub fn mul(&self, other: &Poly, params: &Params) -> Poly {
        let mut acc = [0u32; N];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let a = u32::from(a);
            for (j, &b) in other.coeffs.iter().enumerate() {
                let t = a.wrapping_mul(u32::from(b));
                let idx = i + j;
                if idx < N {
                    acc[idx] = acc[idx].wrapping_add(t);
                } else {
                    acc[idx - N] = acc[idx - N].wrapping_sub(t);
                }
            }
        }
        Self::from_wrapped(&acc, params)
    }

    /// Negacyclic product via Karatsuba on the full product, then folding.
    ///
    /// Bit-identical to [`Poly::mul`].
    pub fn mul_karatsuba(&self, other: &Poly, params: &Params) -> Poly {
        let a: Vec<u32> = self.coeffs.iter().map(|&c| u32::from(c)).collect();
        let b: Vec<u32> = other.coeffs.iter().map(|&c| u32::from(c)).collect();
        let full = karatsuba(&a, &b);
        let mut acc = [0u32; N];
        for (t, dst) in acc.iter_mut().enumerate() {
            let high = full.get(t + N).copied().unwrap_or(0);
            *dst = full[t].wrapping_sub(high);
        }
        Self::from_wrapped(&acc, params)
    }

    fn from_wrapped(acc: &[u32; N], params: &Params) -> Poly {
        let mask = params.mask();
        let mut out = Poly::zero();
        for (dst, &c) in out.coeffs.iter_mut().zip(acc) {
            *dst = (c & mask) as u16;
        }
        out
    }
}

fn reduce_signed(c: i64, params: &Params) -> u16 {
    c.rem_euclid(i64::from(params.q())) as u16
}

const KARATSUBA_CUTOFF: usize = 16;

/// Full (non-reduced) product of two equal-length coefficient slices, mod 2^32.
fn karatsuba(a: &[u32], b: &[u32]) -> Vec<u32> {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_CUTOFF || n % 2 == 1 {
        let mut out = vec![0u32; 2 * n - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = out[i + j].wrapping_add(x.wrapping_mul(y));
            }
        }
        return out;
    }
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);
    let low = karatsuba(a0, b0);
    let high = karatsuba(a1, b1);
    let sa: Vec<u32> = a0.iter().zip(a1).map(|(x, y)| x.wrapping_add(*y)).collect();
    let sb: Vec<u32> = b0.iter().zip(b1).map(|(x, y)| x.wrapping_add(*y)).collect();
    let mut mid = karatsuba(&sa, &sb);
    for (m, (l, hh)) in mid.iter_mut().zip(low.iter().zip(&high)) {
        *m = m.wrapping_sub(*l).wrapping_sub(*hh);
    }
    let mut out = vec![0u32; 2 * n - 1];
    for (i, &v) in low.iter().enumerate() {
        out[i] = out[i].wrapping_add(v);
    }
    for (i, &v) in mid.iter().enumerate() {
        out[i + h] = out[i + h].wrapping_add(v);
    }
    for (i, &v) in high.iter().enumerate() {
        out[i + 2 * h] = out[i + 2 * h].wrapping_add(v);
    }
    out
}

/// Element of `R_q^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyVec(pub Vec<Poly>);

impl PolyVec {
    pub fn zero(len: usize) -> Self {
        Self(vec![Poly::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &PolyVec, params: &Params) -> PolyVec {
        assert_eq!(self.len(), other.len(), "vector lengths differ");
        PolyVec(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.add(b, params))
                .collect(),
        )
    }

    /// `Σ x_i · y_i`.
    pub fn dot(&self, other: &PolyVec, params: &Params) -> Poly {
        assert_eq!(self.len(), other.len(), "vector lengths differ");
        self.0
            .iter()
            .zip(&other.0)
            .fold(Poly::zero(), |acc, (x, y)| {
                acc.add(&y.mul(x, params), params)
            })
    }
}

/// Square matrix over `R_q`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMat {
    side: usize,
    entries: Vec<Poly>,
}

impl PolyMat {
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut entries = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                entries.push(f(i, j));
            }
        }
        Self { side, entries }
    }

    pub fn identity(side: usize, params: &Params) -> Self {
        Self::from_fn(side, |i, j| Poly::constant(i64::from(i == j), params))
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> &Poly {
        &self.entries[row * self.side + col]
    }

    pub fn transpose(&self) -> PolyMat {
        PolyMat::from_fn(self.side, |i, j| self.get(j, i).clone())
    }

    /// `A · x`, or `A^T · x` when `transpose` is set.
    pub fn mul_vec(&self, x: &PolyVec, transpose: bool, params: &Params) -> PolyVec {
        assert_eq!(self.side, x.len(), "matrix and vector dimensions differ");
        let out = (0..self.side)
            .map(|i| {
                (0..self.side).fold(Poly::zero(), |acc, j| {
                    let entry = if transpose {
                        self.get(j, i)
                    } else {
                        self.get(i, j)
                    };
                    acc.add(&x.0[j].mul(entry, params), params)
                })
            })
            .collect();
        PolyVec(out)
    }
}

/// Splits `a` into the vectors `a^(κ) = (a_κ, a_{κ+32}, …, a_{κ+224})`.
pub fn split(a: &Poly) -> [BlockCoeffs; BLOCKS] {
    let mut out = [[0i64; BLOCK_DIM]; BLOCKS];
    for (idx, &c) in a.coeffs.iter().enumerate() {
        out[idx % BLOCKS][idx / BLOCKS] = i64::from(c);
    }
    out
}

/// Inverse of [`split`]; coordinates are reduced mod `q`.
pub fn interleave(blocks: &[BlockCoeffs; BLOCKS], params: &Params) -> Poly {
    let mut coeffs = [0i64; N];
    for (kappa, block) in blocks.iter().enumerate() {
        for (j, &c) in block.iter().enumerate() {
            coeffs[kappa + j * BLOCKS] = c;
        }
    }
    Poly::from_signed(&coeffs, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut impl Rng, params: &Params) -> Poly {
        let coeffs: Vec<u32> = (0..N).map(|_| rng.gen_range(0..params.q())).collect();
        Poly::from_coeffs(&coeffs, params).unwrap()
    }

    /// Reference product over the integers, reduced at the very end.
    fn schoolbook_oracle(a: &Poly, b: &Poly, params: &Params) -> Poly {
        let mut acc = vec![0i128; N];
        for i in 0..N {
            for j in 0..N {
                let t = i128::from(a.coeffs[i]) * i128::from(b.coeffs[j]);
                if i + j < N {
                    acc[i + j] += t;
                } else {
                    acc[i + j - N] -= t;
                }
            }
        }
        let q = i128::from(params.q());
        let reduced: Vec<i64> = acc.iter().map(|&c| c.rem_euclid(q) as i64).collect();
        Poly::from_signed(&reduced, params)
    }

    #[test]
    fn add_identity_and_wraparound() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_poly(&mut rng, &params);
        assert_eq!(a.add(&Poly::zero(), &params), a);
        let top = Poly::constant(i64::from(params.q()) - 1, &params);
        let one = Poly::constant(1, &params);
        assert!(top.add(&one, &params).is_zero());
    }

    #[test]
    fn add_matches_wide_integer_reference() {
        let params = Params::new(8192, 4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_poly(&mut rng, &params);
            let b = random_poly(&mut rng, &params);
            let sum = a.add(&b, &params);
            for i in 0..N {
                let want = (u64::from(a.coeff(i)) + u64::from(b.coeff(i))) % 8192;
                assert_eq!(u64::from(sum.coeff(i)), want);
            }
        }
    }

    #[test]
    fn x_times_x255_is_minus_one() {
        let params = Params::default();
        let x = Poly::monomial(1, 1, &params);
        let x255 = Poly::monomial(255, 1, &params);
        let prod = x.mul(&x255, &params);
        assert_eq!(prod.coeff(0), params.q() - 1);
        assert!((1..N).all(|i| prod.coeff(i) == 0));
    }

    #[test]
    fn one_is_multiplicative_identity() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_poly(&mut rng, &params);
        assert_eq!(Poly::constant(1, &params).mul(&b, &params), b);
    }

    #[test]
    fn mul_matches_oracle_and_karatsuba() {
        for params in [Params::default(), Params::new(8192, 4, 2).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            for _ in 0..20 {
                let a = random_poly(&mut rng, &params);
                let b = random_poly(&mut rng, &params);
                let want = schoolbook_oracle(&a, &b, &params);
                assert_eq!(a.mul(&b, &params), want);
                assert_eq!(a.mul_karatsuba(&b, &params), want);
            }
        }
    }

    #[test]
    fn ring_axioms() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a = random_poly(&mut rng, &params);
            let b = random_poly(&mut rng, &params);
            let c = random_poly(&mut rng, &params);
            assert_eq!(a.add(&b, &params), b.add(&a, &params));
            assert_eq!(
                a.add(&b, &params).add(&c, &params),
                a.add(&b.add(&c, &params), &params)
            );
            let ab = a.mul_karatsuba(&b, &params);
            assert_eq!(ab, b.mul_karatsuba(&a, &params));
            assert_eq!(
                ab.mul_karatsuba(&c, &params),
                a.mul_karatsuba(&b.mul_karatsuba(&c, &params), &params)
            );
            assert_eq!(
                a.mul_karatsuba(&b.add(&c, &params), &params),
                ab.add(&a.mul_karatsuba(&c, &params), &params)
            );
        }
    }

    #[test]
    fn multiplying_by_x_is_a_negated_shift() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_poly(&mut rng, &params);
        let b = random_poly(&mut rng, &params);
        let x = Poly::monomial(1, 1, &params);
        let ab = a.mul(&b, &params);
        let shifted = a.mul(&x.mul(&b, &params), &params);
        let q = params.q();
        assert_eq!(shifted.coeff(0), (q - ab.coeff(N - 1)) % q);
        for i in 1..N {
            assert_eq!(shifted.coeff(i), ab.coeff(i - 1));
        }
    }

    #[test]
    fn mat_vec_identity_zero_and_transpose() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = PolyVec((0..3).map(|_| random_poly(&mut rng, &params)).collect());
        let id = PolyMat::identity(3, &params);
        assert_eq!(id.mul_vec(&x, false, &params), x);
        assert_eq!(id.mul_vec(&x, true, &params), x);

        let a = PolyMat::from_fn(3, |_, _| random_poly(&mut rng, &params));
        assert_eq!(
            a.mul_vec(&PolyVec::zero(3), false, &params),
            PolyVec::zero(3)
        );
        assert_eq!(
            a.mul_vec(&x, true, &params),
            a.transpose().mul_vec(&x, false, &params)
        );
    }

    #[test]
    fn dot_products() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = PolyVec((0..3).map(|_| random_poly(&mut rng, &params)).collect());
        let y = PolyVec((0..3).map(|_| random_poly(&mut rng, &params)).collect());
        assert!(x.dot(&PolyVec::zero(3), &params).is_zero());

        let selector = PolyVec(vec![Poly::constant(1, &params), Poly::zero(), Poly::zero()]);
        assert_eq!(selector.dot(&y, &params), y.0[0]);

        let mut want = Poly::zero();
        for i in 0..3 {
            want = want.add(&schoolbook_oracle(&x.0[i], &y.0[i], &params), &params);
        }
        assert_eq!(x.dot(&y, &params), want);
    }

    #[test]
    fn split_examples() {
        let params = Params::default();
        let blocks = split(&Poly::constant(1, &params));
        assert_eq!(blocks[0], [1, 0, 0, 0, 0, 0, 0, 0]);
        assert!(blocks[1..].iter().all(|b| b.iter().all(|&c| c == 0)));

        let blocks = split(&Poly::monomial(33, 5, &params));
        assert_eq!(blocks[1], [0, 5, 0, 0, 0, 0, 0, 0]);
        assert_eq!(blocks.iter().flatten().filter(|&&c| c != 0).count(), 1);
    }

    #[test]
    fn split_interleave_round_trip() {
        let params = Params::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = random_poly(&mut rng, &params);
            assert_eq!(interleave(&split(&a), &params), a);
        }
    }
}
