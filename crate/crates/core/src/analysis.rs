//! Upper bound on the per-exchange failure probability.
//!
//! For a relevant vector `v` of `E8` (kept as `u = 4v`), a block of the
//! error polynomial reconciles unless `⟨ω, u⟩ > 4C`. Each block inner product
//! is modelled as a sum of [`BLOCK_TERMS`] independent terms
//! `Z = ⟨σ, e·u⟩`, with `σ`, `e` drawn from `ψ_k^8` and `e·u` the negacyclic
//! product modulo `Y^8 + 1`, plus a term from `e''` that is bounded by
//! `k·‖u‖₁`. So a block fails for `v` at most with probability
//! `P(Σ Z > 4C - k·‖u‖₁)`, and the union bound over 112 vectors of type 1,
//! 128 of type 2 and 32 blocks gives
//!
//! `P_e ≤ 32 · (112 · P₁ + 128 · P₂)`.
//!
//! Distributions live on an integer grid `offset + step·i` in units of
//! `C/4`, so the thresholds are `4C - 8k` and `4C - 16k`. Float mode keeps `f64` probabilities and drops tails below
//! `2^-1000`; exact mode keeps numerators over a common power-of-two
//! denominator and never rounds.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};

use crate::error::{Error, Result};
use crate::params::{Params, BLOCKS, BLOCK_DIM, D};
use crate::sampler::binomial_row;

/// Independent block terms in the sum: two products per module entry.
pub const BLOCK_TERMS: usize = 2 * D * BLOCKS;
/// Largest `(2k+1)^8` the conditioning enumeration accepts by default.
pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Float-mode tail mass dropped after each convolution.
pub const TRIM: f64 = 9.332636185032189e-302; // 2^-1000
const FLOAT_SUPPORT_CAP: usize = 1 << 24;
const EXACT_BITS_CAP: u64 = 1 << 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Float,
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(Mode::Float),
            "exact" => Ok(Mode::Exact),
            other => Err(Error::InvalidParams(format!("unknown mode `{other}`"))),
        }
    }
}

/// The two orbits of relevant vectors under the symmetries that preserve the
/// error distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoronoiType {
    /// `(±1, ±1, 0, …)` and permutations.
    Type1,
    /// `(±½)^8` with an even number of minus signs.
    Type2,
}

impl VoronoiType {
    pub const ALL: [VoronoiType; 2] = [VoronoiType::Type1, VoronoiType::Type2];

    /// Orbit representative, times four.
    pub fn representative(self) -> [i64; BLOCK_DIM] {
        match self {
            VoronoiType::Type1 => [4, 4, 0, 0, 0, 0, 0, 0],
            VoronoiType::Type2 => [2; BLOCK_DIM],
        }
    }

    pub fn count(self) -> u64 {
        match self {
            VoronoiType::Type1 => 112,
            VoronoiType::Type2 => 128,
        }
    }

    pub fn l1(self) -> i64 {
        self.representative().iter().map(|x| x.abs()).sum()
    }

    /// The sum of block terms must exceed this for a failure.
    pub fn threshold(self, params: &Params) -> i64 {
        4 * params.c() - i64::from(params.k()) * self.l1()
    }
}

/// Coefficients `c_i` with `Z = Σ_i e_i c_i` for a fixed `σ`.
fn coupling(sigma: &[i64; BLOCK_DIM], u: &[i64; BLOCK_DIM]) -> [i64; BLOCK_DIM] {
    std::array::from_fn(|i| {
        let mut acc = 0;
        for (t, &s) in sigma.iter().enumerate() {
            acc += if t >= i {
                s * u[t - i]
            } else {
                -s * u[t + BLOCK_DIM - i]
            };
        }
        acc
    })
}

/// Integer weights of a distribution on `offset + step·i`, over `2^log2_den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTerm {
    pub offset: i64,
    pub step: i64,
    pub log2_den: u64,
    pub weights: Vec<u128>,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// The exact distribution of one block term for the orbit representative.
pub fn block_term(k: u32, ty: VoronoiType, budget: u64) -> Result<BlockTerm> {
    block_term_for(k, &ty.representative(), budget)
}

/// The exact distribution of `⟨σ, e·u⟩`, by conditioning on `σ`.
pub fn block_term_for(k: u32, u: &[i64; BLOCK_DIM], budget: u64) -> Result<BlockTerm> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    let size = u64::from(2 * k + 1).saturating_pow(BLOCK_DIM as u32);
    if size > budget || k > 4 {
        return Err(Error::EnumerationBudget { size, budget });
    }
    let ki = i64::from(k);
    let width = (2 * k + 1) as usize;
    let psi: Vec<u128> = binomial_row(2 * k).into_iter().map(u128::from).collect();

    // Group σ by the sorted magnitudes of its coupling coefficients.
    let mut groups: HashMap<[u8; BLOCK_DIM], u128> = HashMap::new();
    let mut digits = [0usize; BLOCK_DIM];
    loop {
        let sigma: [i64; BLOCK_DIM] = std::array::from_fn(|t| digits[t] as i64 - ki);
        let weight: u128 = digits.iter().map(|&d| psi[d]).product();
        let mut key = coupling(&sigma, u).map(|c| c.unsigned_abs() as u8);
        key.sort_unstable();
        *groups.entry(key).or_insert(0) += weight;

        let mut pos = 0;
        while pos < BLOCK_DIM {
            digits[pos] += 1;
            if digits[pos] < width {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == BLOCK_DIM {
            break;
        }
    }

    let mut keys: Vec<([u8; BLOCK_DIM], u128)> = groups.into_iter().collect();
    keys.sort_unstable();
    let max_abs = ki
        * keys
            .iter()
            .map(|(c, _)| c.iter().map(|&x| i64::from(x)).sum::<i64>())
            .max()
            .unwrap_or(0);
    let mut mix = vec![0u128; (2 * max_abs + 1) as usize];

    // Per-key convolution of the scaled ψ_k, sharing work over common prefixes.
    let full = 1u128 << (2 * k);
    let mut stack: Vec<(Vec<u128>, i64)> = vec![(vec![1], 0)];
    let mut prev: Option<[u8; BLOCK_DIM]> = None;
    for (key, weight) in &keys {
        let shared = prev.map_or(0, |p| p.iter().zip(key).take_while(|(a, b)| a == b).count());
        stack.truncate(shared + 1);
        for &c in &key[shared..] {
            let (dist, half) = stack.last().expect("non-empty stack");
            let c = i64::from(c);
            let next = if c == 0 {
                (dist.iter().map(|x| x * full).collect(), *half)
            } else {
                let nhalf = half + ki * c;
                let mut out = vec![0u128; (2 * nhalf + 1) as usize];
                for (i, &x) in dist.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &w) in psi.iter().enumerate() {
                        out[i + j * c as usize] += x * w;
                    }
                }
                (out, nhalf)
            };
            stack.push(next);
        }
        let (dist, half) = stack.last().expect("full key");
        let base = (max_abs - half) as usize;
        for (i, &x) in dist.iter().enumerate() {
            let add = x.checked_mul(*weight).ok_or(Error::SupportOverflow {
                size: mix.len(),
                cap: mix.len(),
            })?;
            mix[base + i] = mix[base + i]
                .checked_add(add)
                .ok_or(Error::SupportOverflow {
                    size: mix.len(),
                    cap: mix.len(),
                })?;
        }
        prev = Some(*key);
    }

    let first = mix
        .iter()
        .position(|&x| x != 0)
        .expect("non-empty distribution");
    let last = mix
        .iter()
        .rposition(|&x| x != 0)
        .expect("non-empty distribution");
    let step = (first..=last)
        .filter(|&i| mix[i] != 0)
        .fold(0i64, |g, i| gcd(g, (i - first) as i64))
        .max(1);
    let weights = (first..=last)
        .step_by(step as usize)
        .map(|i| mix[i])
        .collect();
    Ok(BlockTerm {
        offset: first as i64 - max_abs,
        step,
        log2_den: 32 * u64::from(k),
        weights,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Float(Vec<f64>),
    /// Numerators over `2^log2_den`.
    Exact {
        log2_den: u64,
        nums: Vec<BigUint>,
    },
}

/// A finitely supported distribution on the grid `offset + step·i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicDist {
    pub offset: i64,
    pub step: i64,
    pub values: Values,
}

/// Sums positive terms from smallest to largest with Neumaier compensation.
fn ascending_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).iter_u64_digits().next().unwrap_or(0);
    (top as f64).log2() + shift as f64
}

/// Writes `width`-bit little-endian slots into a single integer.
fn kronecker_pack(coeffs: &[BigUint], width: u64) -> BigUint {
    let total = coeffs.len() as u64 * width;
    let mut limbs = vec![0u32; total.div_ceil(32) as usize + 1];
    for (i, c) in coeffs.iter().enumerate() {
        let start = i as u64 * width;
        let (word, bit) = ((start / 32) as usize, (start % 32) as u32);
        for (j, d) in c.iter_u32_digits().enumerate() {
            let wide = u64::from(d) << bit;
            limbs[word + j] |= wide as u32;
            limbs[word + j + 1] |= (wide >> 32) as u32;
        }
    }
    BigUint::new(limbs)
}

fn kronecker_unpack(x: &BigUint, width: u64, len: usize) -> Vec<BigUint> {
    let limbs = x.to_u32_digits();
    let slot_words = width.div_ceil(32) as usize;
    (0..len)
        .map(|i| {
            let start = i as u64 * width;
            let (word, bit) = ((start / 32) as usize, (start % 32) as u32);
            let mut out = vec![0u32; slot_words];
            for (j, o) in out.iter_mut().enumerate() {
                let lo = limbs.get(word + j).copied().unwrap_or(0);
                let hi = limbs.get(word + j + 1).copied().unwrap_or(0);
                *o = ((u64::from(hi) << 32 | u64::from(lo)) >> bit) as u32;
            }
            let rem = (width % 32) as u32;
            if rem != 0 {
                *out.last_mut().expect("width > 0") &= (1u32 << rem) - 1;
            }
            BigUint::new(out)
        })
        .collect()
}

impl DyadicDist {
    pub fn from_block(term: &BlockTerm, mode: Mode) -> Self {
        let values = match mode {
            Mode::Float => {
                let den = (term.log2_den as f64).exp2();
                Values::Float(term.weights.iter().map(|&w| w as f64 / den).collect())
            }
            Mode::Exact => Values::Exact {
                log2_den: term.log2_den,
                nums: term.weights.iter().map(|&w| BigUint::from(w)).collect(),
            },
        };
        Self {
            offset: term.offset,
            step: term.step,
            values,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            Values::Float(p) => p.len(),
            Values::Exact { nums, .. } => nums.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self.values {
            Values::Float(_) => Mode::Float,
            Values::Exact { .. } => Mode::Exact,
        }
    }

    pub fn max_value(&self) -> i64 {
        self.offset + self.step * (self.len() as i64 - 1)
    }

    /// Probability of the point `offset + step·i`, as `f64`.
    pub fn prob(&self, i: usize) -> f64 {
        match &self.values {
            Values::Float(p) => p[i],
            Values::Exact { log2_den, nums } => (log2_big(&nums[i]) - *log2_den as f64).exp2(),
        }
    }

    pub fn total(&self) -> f64 {
        match &self.values {
            Values::Float(p) => ascending_sum(p.iter().copied()),
            Values::Exact { log2_den, nums } => {
                let sum: BigUint = nums.iter().sum();
                (log2_big(&sum) - *log2_den as f64).exp2()
            }
        }
    }

    /// Whether the exact numerators add up to exactly one.
    pub fn is_normalized_exactly(&self) -> bool {
        match &self.values {
            Values::Float(_) => false,
            Values::Exact { log2_den, nums } => {
                nums.iter().sum::<BigUint>() == BigUint::from(1u8) << *log2_den
            }
        }
    }

    /// Variance as `numerator / denominator` in exact mode.
    pub fn variance_exact(&self) -> Option<(BigInt, BigUint)> {
        let Values::Exact { log2_den, nums } = &self.values else {
            return None;
        };
        let mut s1 = BigInt::from(0);
        let mut s2 = BigInt::from(0);
        for (i, n) in nums.iter().enumerate() {
            let z = BigInt::from(self.offset + self.step * i as i64);
            let n = BigInt::from(n.clone());
            s1 += &z * &n;
            s2 += &z * &z * &n;
        }
        let den = BigInt::from(1u8) << *log2_den;
        let num = &den * &s2 - &s1 * &s1;
        let den2 = (BigUint::from(1u8) << *log2_den) << *log2_den;
        Some((num, den2))
    }

    pub fn variance(&self) -> f64 {
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..self.len() {
            let z = (self.offset + self.step * i as i64) as f64;
            let p = self.prob(i);
            m1 += p * z;
            m2 += p * z * z;
        }
        m2 - m1 * m1
    }

    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.step != other.step {
            return Err(Error::InvalidParams(
                "convolving distributions on different grids".into(),
            ));
        }
        let len = self.len() + other.len() - 1;
        let values = match (&self.values, &other.values) {
            (Values::Float(a), Values::Float(b)) => {
                if len > FLOAT_SUPPORT_CAP {
                    return Err(Error::SupportOverflow {
                        size: len,
                        cap: FLOAT_SUPPORT_CAP,
                    });
                }
                let mut out = vec![0.0f64; len];
                for (i, &x) in a.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    for (o, &y) in out[i..].iter_mut().zip(b) {
                        *o += x * y;
                    }
                }
                Values::Float(out)
            }
            (
                Values::Exact {
                    log2_den: da,
                    nums: a,
                },
                Values::Exact {
                    log2_den: db,
                    nums: b,
                },
            ) => {
                let width = da + db + 1;
                if width.saturating_mul(len as u64) > EXACT_BITS_CAP {
                    return Err(Error::SupportOverflow {
                        size: len,
                        cap: (EXACT_BITS_CAP / width) as usize,
                    });
                }
                let pa = kronecker_pack(a, width);
                let product = if std::ptr::eq(a, b) {
                    &pa * &pa
                } else {
                    &pa * &kronecker_pack(b, width)
                };
                Values::Exact {
                    log2_den: da + db,
                    nums: kronecker_unpack(&product, width, len),
                }
            }
            _ => {
                return Err(Error::InvalidParams(
                    "mixing float and exact distributions".into(),
                ))
            }
        };
        let mut out = Self {
            offset: self.offset + other.offset,
            step: self.step,
            values,
        };
        out.trim();
        Ok(out)
    }

    /// Drops float-mode tails whose cumulative mass is below [`TRIM`].
    fn trim(&mut self) {
        let Values::Float(p) = &mut self.values else {
            return;
        };
        let mut lo = 0;
        let mut acc = 0.0;
        while lo + 1 < p.len() && acc + p[lo] < TRIM {
            acc += p[lo];
            lo += 1;
        }
        let mut hi = p.len();
        acc = 0.0;
        while hi > lo + 1 && acc + p[hi - 1] < TRIM {
            acc += p[hi - 1];
            hi -= 1;
        }
        p.truncate(hi);
        p.drain(..lo);
        self.offset += self.step * lo as i64;
    }

    /// The `m`-fold self-convolution, by repeated squaring.
    pub fn power(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParams(
                "convolution power must be at least 1".into(),
            ));
        }
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut e = m;
        loop {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.convolve(&base)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.convolve(&base)?;
        }
        Ok(result.expect("m ≥ 1"))
    }

    /// `P(X > threshold)`, strictly.
    pub fn tail(&self, threshold: i64) -> Prob {
        let start = if threshold < self.offset {
            0
        } else {
            ((threshold - self.offset) / self.step + 1) as usize
        };
        match &self.values {
            Values::Float(p) => Prob::Float(ascending_sum(p.iter().skip(start).copied())),
            Values::Exact { log2_den, nums } => Prob::Exact {
                num: nums.iter().skip(start).sum(),
                log2_den: *log2_den,
            },
        }
    }
}

/// A probability, either rounded or as an exact dyadic rational.
#[derive(Clone, Debug, PartialEq)]
pub enum Prob {
    Float(f64),
    Exact { num: BigUint, log2_den: u64 },
}

impl Prob {
    pub fn log2(&self) -> f64 {
        match self {
            Prob::Float(p) => p.log2(),
            Prob::Exact { num, log2_den } => log2_big(num) - *log2_den as f64,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.log2().exp2()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Prob::Float(p) => *p == 0.0,
            Prob::Exact { num, .. } => num.bits() == 0,
        }
    }

    /// `Σ weight_i · p_i`; exact only if every term is exact with one denominator.
    pub fn weighted_sum(terms: &[(u64, Prob)]) -> Prob {
        let exact: Option<(BigUint, u64)> = terms
            .iter()
            .try_fold(
                (BigUint::from(0u8), None::<u64>),
                |(acc, den), (w, p)| match p {
                    Prob::Exact { num, log2_den } if den.is_none_or(|d| d == *log2_den) => {
                        Some((acc + num * BigUint::from(*w), Some(*log2_den)))
                    }
                    _ => None,
                },
            )
            .and_then(|(acc, den)| den.map(|d| (acc, d)));
        match exact {
            Some((num, log2_den)) => Prob::Exact { num, log2_den },
            None => Prob::Float(ascending_sum(
                terms.iter().map(|(w, p)| *w as f64 * p.to_f64()),
            )),
        }
    }
}

/// A class of relevant vectors whose block terms share one distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Orbit {
    pub ty: VoronoiType,
    /// Representative, times four.
    pub representative: [i64; BLOCK_DIM],
    pub count: u64,
}

/// The relevant vectors split into orbits under `x ↦ ±Y^a·x` and the ring
/// automorphisms `Y ↦ Y^j`, `j` odd, all of which preserve `ψ_k^8`.
pub const ORBITS: [Orbit; 6] = [
    Orbit {
        ty: VoronoiType::Type1,
        representative: [4, 4, 0, 0, 0, 0, 0, 0],
        count: 64,
    },
    Orbit {
        ty: VoronoiType::Type1,
        representative: [4, 0, 4, 0, 0, 0, 0, 0],
        count: 32,
    },
    Orbit {
        ty: VoronoiType::Type1,
        representative: [4, 0, 0, 0, 4, 0, 0, 0],
        count: 16,
    },
    Orbit {
        ty: VoronoiType::Type2,
        representative: [2, 2, 2, 2, 2, 2, 2, 2],
        count: 32,
    },
    Orbit {
        ty: VoronoiType::Type2,
        representative: [2, 2, 2, 2, 2, -2, 2, -2],
        count: 32,
    },
    Orbit {
        ty: VoronoiType::Type2,
        representative: [2, 2, 2, 2, 2, -2, -2, 2],
        count: 64,
    },
];

/// How relevant vectors are grouped in the union bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Grouping {
    /// Every vector of a type takes the distribution of its type
    /// representative: `32 · (112 · P₁ + 128 · P₂)`. The representatives are
    /// the heaviest-tailed orbit of each type, so this stays an upper bound.
    #[default]
    Types,
    /// One distribution per orbit in [`ORBITS`].
    Orbits,
}

impl Grouping {
    pub fn classes(self) -> Vec<Orbit> {
        match self {
            Grouping::Orbits => ORBITS.to_vec(),
            Grouping::Types => VoronoiType::ALL
                .iter()
                .map(|&ty| Orbit {
                    ty,
                    representative: ty.representative(),
                    count: ty.count(),
                })
                .collect(),
        }
    }
}

/// Result of one bound evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PeReport {
    pub params: Params,
    pub terms: usize,
    pub mode: Mode,
    pub grouping: Grouping,
    /// `(class, log2 P(Σ Z > threshold))` per class.
    pub tails: Vec<(Orbit, f64)>,
    pub log2_pe: f64,
}

impl fmt::Display for PeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} log2pe={:.2}", self.params, self.log2_pe)
    }
}

/// Evaluates the bound, caching block-term powers across parameter sets.
#[derive(Debug, Default)]
pub struct Analyzer {
    mode: Mode,
    grouping: Grouping,
    budget: u64,
    powers: HashMap<(u32, [i64; BLOCK_DIM], usize), DyadicDist>,
}

impl Analyzer {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            grouping: Grouping::default(),
            budget: DEFAULT_BUDGET,
            powers: HashMap::new(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_grouping(mut self, grouping: Grouping) -> Self {
        self.grouping = grouping;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Distribution of the sum of `terms` block terms for the vector `u`.
    pub fn sum_dist(&mut self, k: u32, u: &[i64; BLOCK_DIM], terms: usize) -> Result<&DyadicDist> {
        let key = (k, *u, terms);
        if !self.powers.contains_key(&key) {
            let term = block_term_for(k, u, self.budget)?;
            let dist = DyadicDist::from_block(&term, self.mode).power(terms)?;
            self.powers.insert(key, dist);
        }
        Ok(&self.powers[&key])
    }

    pub fn pe_bound_terms(&mut self, params: &Params, terms: usize) -> Result<PeReport> {
        let classes = self.grouping.classes();
        let mut weighted = Vec::with_capacity(classes.len());
        for class in &classes {
            let dist = self.sum_dist(params.k(), &class.representative, terms)?;
            weighted.push((
                BLOCKS as u64 * class.count,
                dist.tail(class.ty.threshold(params)),
            ));
        }
        let total = Prob::weighted_sum(&weighted);
        Ok(PeReport {
            params: *params,
            terms,
            mode: self.mode,
            grouping: self.grouping,
            tails: classes
                .into_iter()
                .zip(weighted.iter().map(|(_, p)| p.log2()))
                .collect(),
            log2_pe: total.log2(),
        })
    }

    pub fn pe_bound(&mut self, params: &Params) -> Result<PeReport> {
        self.pe_bound_terms(params, BLOCK_TERMS)
    }
}

/// The failure bound for one parameter set, in float mode.
pub fn pe_bound(params: &Params) -> Result<PeReport> {
    Analyzer::new(Mode::Float).pe_bound(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::cbd_pmf;

    /// Brute force over all `(σ, e) ∈ [-k,k]^16`, straight from the definition.
    fn brute_force(k: u32, ty: VoronoiType) -> HashMap<i64, f64> {
        brute_force_vector(k, &ty.representative())
    }

    fn brute_force_vector(k: u32, u: &[i64; 8]) -> HashMap<i64, f64> {
        let ki = k as i64;
        let pmf = cbd_pmf(k);
        let width = (2 * k + 1) as i64;
        let vectors: Vec<([i64; 8], f64)> = (0..width.pow(8))
            .map(|idx| {
                let mut x = idx;
                let v: [i64; 8] = std::array::from_fn(|_| {
                    let c = x % width - ki;
                    x /= width;
                    c
                });
                (v, v.iter().map(|&c| pmf[(c + ki) as usize]).product())
            })
            .collect();
        // Negacyclic products e·u for every e.
        let products: Vec<([i64; 8], f64)> = vectors
            .iter()
            .map(|(e, p)| {
                let mut prod = [0i64; 8];
                for (i, &ei) in e.iter().enumerate() {
                    for (j, &uj) in u.iter().enumerate() {
                        if i + j < 8 {
                            prod[i + j] += ei * uj;
                        } else {
                            prod[i + j - 8] -= ei * uj;
                        }
                    }
                }
                (prod, *p)
            })
            .collect();
        let bound = 64 * ki * ki * 8;
        let mut dense = vec![0.0f64; (2 * bound + 1) as usize];
        for (sigma, ps) in &vectors {
            for (prod, pe) in &products {
                let z: i64 = sigma.iter().zip(prod).map(|(a, b)| a * b).sum();
                dense[(z + bound) as usize] += ps * pe;
            }
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| (i as i64 - bound, p))
            .collect()
    }

    #[test]
    fn block_term_matches_brute_force_for_k1() {
        for ty in VoronoiType::ALL {
            let term = block_term(1, ty, DEFAULT_BUDGET).unwrap();
            let dist = DyadicDist::from_block(&term, Mode::Float);
            let oracle = brute_force(1, ty);
            let mut covered = 0;
            for i in 0..dist.len() {
                let z = dist.offset + dist.step * i as i64;
                let want = oracle.get(&z).copied().unwrap_or(0.0);
                assert!((dist.prob(i) - want).abs() < 1e-15, "{ty:?} z={z}");
                if want > 0.0 {
                    covered += 1;
                }
            }
            assert_eq!(covered, oracle.values().filter(|&&p| p > 0.0).count());
        }
    }

    #[test]
    fn block_term_is_symmetric_and_normalized() {
        for ty in VoronoiType::ALL {
            let term = block_term(2, ty, DEFAULT_BUDGET).unwrap();
            assert_eq!(term.weights.iter().sum::<u128>(), 1u128 << 64);
            let rev: Vec<u128> = term.weights.iter().rev().copied().collect();
            assert_eq!(rev, term.weights);
            assert_eq!(
                term.offset,
                -(term.step * (term.weights.len() as i64 - 1)) / 2
            );
        }
    }

    #[test]
    fn block_term_variance() {
        // E[Z²] = Σ_i Var(e)·E[c_i²] = 8 · (k/2) · (k/2)·‖u‖².
        for k in 1..=3u32 {
            for ty in VoronoiType::ALL {
                let term = block_term(k, ty, DEFAULT_BUDGET).unwrap();
                let dist = DyadicDist::from_block(&term, Mode::Exact);
                let (num, den) = dist.variance_exact().unwrap();
                let norm2: i64 = ty.representative().iter().map(|x| x * x).sum();
                let want = BigInt::from(2 * i64::from(k * k) * norm2) * BigInt::from(den);
                assert_eq!(num, want, "k={k} {ty:?}");
            }
        }
    }

    #[test]
    fn default_thresholds_in_grid_units() {
        let params = Params::default();
        assert_eq!(VoronoiType::Type1.threshold(&params), 3824);
        assert_eq!(VoronoiType::Type2.threshold(&params), 3808);
    }

    #[test]
    fn type1_grid_is_even() {
        let term = block_term(2, VoronoiType::Type1, DEFAULT_BUDGET).unwrap();
        assert_eq!(term.step, 4);
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            block_term(2, VoronoiType::Type1, 1000).unwrap_err(),
            Error::EnumerationBudget {
                size: 390_625,
                budget: 1000
            }
        );
        assert!(block_term(5, VoronoiType::Type1, DEFAULT_BUDGET).is_err());
    }

    fn orbit_of(u: &[i64; 8]) -> &'static Orbit {
        let key = |v: &[i64; 8]| block_term_for(1, v, DEFAULT_BUDGET).unwrap();
        let target = key(u);
        ORBITS
            .iter()
            .find(|o| key(&o.representative) == target)
            .expect("some orbit")
    }

    #[test]
    fn sampled_relevant_vectors_follow_their_orbit_law() {
        // Ten vectors from different orbits, each checked against brute force.
        let sample: [[i64; 8]; 10] = [
            [4, -4, 0, 0, 0, 0, 0, 0],
            [0, 0, 4, 0, 0, 0, 0, 4],
            [0, 0, 4, 0, -4, 0, 0, 0],
            [0, -4, 0, 0, 0, -4, 0, 0],
            [0, 0, 0, 4, 0, 0, 0, -4],
            [-2, -2, 2, 2, 2, 2, 2, 2],
            [2, -2, 2, -2, 2, -2, 2, -2],
            [-2, -2, -2, -2, -2, -2, -2, -2],
            [2, 2, 2, 2, 2, 2, -2, -2],
            [-2, 2, 2, 2, 2, 2, 2, -2],
        ];
        for u in sample {
            let want = brute_force_vector(1, &u);
            let term = block_term_for(1, &orbit_of(&u).representative, DEFAULT_BUDGET).unwrap();
            for (i, &w) in term.weights.iter().enumerate() {
                let z = term.offset + term.step * i as i64;
                let p = w as f64 / (term.log2_den as f64).exp2();
                assert!(
                    (want.get(&z).copied().unwrap_or(0.0) - p).abs() < 1e-15,
                    "{u:?}"
                );
            }
        }
    }

    /// Closure of `u` under `x ↦ Y·x`, `x ↦ -x` and `Y ↦ Y^j` for odd `j`.
    fn symmetry_orbit(u: [i64; 8]) -> std::collections::HashSet<[i64; 8]> {
        let shift = |v: &[i64; 8]| -> [i64; 8] {
            std::array::from_fn(|i| if i == 0 { -v[7] } else { v[i - 1] })
        };
        let galois = |v: &[i64; 8], j: usize| -> [i64; 8] {
            let mut out = [0; 8];
            for (i, &c) in v.iter().enumerate() {
                let e = (i * j) % 16;
                if e < 8 {
                    out[e] += c
                } else {
                    out[e - 8] -= c
                }
            }
            out
        };
        let mut seen = std::collections::HashSet::from([u]);
        let mut todo = vec![u];
        while let Some(x) = todo.pop() {
            let mut next = vec![shift(&x), x.map(|c| -c)];
            next.extend([3, 5, 7].map(|j| galois(&x, j)));
            for y in next {
                if seen.insert(y) {
                    todo.push(y);
                }
            }
        }
        seen
    }

    #[test]
    fn orbits_partition_the_relevant_vectors() {
        let relevant: std::collections::HashSet<[i64; 8]> = crate::e8::RelevantVectors::get()
            .iter()
            .map(|v| v.map(|c| 2 * c))
            .collect();
        assert_eq!(relevant.len(), 240);
        let mut covered = 0;
        for orbit in &ORBITS {
            let members: Vec<_> = symmetry_orbit(orbit.representative)
                .into_iter()
                .filter(|v| relevant.contains(v))
                .collect();
            assert_eq!(members.len() as u64, orbit.count, "{orbit:?}");
            let l1: i64 = orbit.representative.iter().map(|x| x.abs()).sum();
            assert_eq!(l1, orbit.ty.l1());
            covered += members.len();
        }
        assert_eq!(covered, 240);
        let per_type: u64 = ORBITS
            .iter()
            .filter(|o| o.ty == VoronoiType::Type1)
            .map(|o| o.count)
            .sum();
        assert_eq!(per_type, VoronoiType::Type1.count());
    }

    #[test]
    fn type_representatives_dominate_their_orbits() {
        let mut analyzer = Analyzer::new(Mode::Float).with_grouping(Grouping::Orbits);
        for p in 2..=5 {
            let report = analyzer
                .pe_bound(&Params::new(2048, 2, p).unwrap())
                .unwrap();
            for ty in VoronoiType::ALL {
                let rep = report
                    .tails
                    .iter()
                    .find(|(o, _)| o.representative == ty.representative())
                    .unwrap()
                    .1;
                for (orbit, tail) in report.tails.iter().filter(|(o, _)| o.ty == ty) {
                    assert!(*tail <= rep, "p={p} {orbit:?}");
                }
            }
        }
    }

    #[test]
    fn two_fold_power_matches_direct_convolution() {
        let term = block_term(1, VoronoiType::Type2, DEFAULT_BUDGET).unwrap();
        let dist = DyadicDist::from_block(&term, Mode::Float);
        let sq = dist.power(2).unwrap();
        for t in [-20, -3, 0, 5, 17] {
            let mut want = 0.0;
            for i in 0..dist.len() {
                for j in 0..dist.len() {
                    if dist.offset * 2 + dist.step * (i + j) as i64 > t {
                        want += dist.prob(i) * dist.prob(j);
                    }
                }
            }
            let got = sq.tail(t).to_f64();
            assert!((got - want).abs() <= 1e-15 * want.max(1e-300), "t={t}");
        }
    }

    #[test]
    fn exact_power_preserves_mass_and_scales_variance() {
        let term = block_term(1, VoronoiType::Type1, DEFAULT_BUDGET).unwrap();
        let dist = DyadicDist::from_block(&term, Mode::Exact);
        let (v1, d1) = dist.variance_exact().unwrap();
        for m in [2usize, 3, 7] {
            let pow = dist.power(m).unwrap();
            assert!(pow.is_normalized_exactly());
            let (vm, dm) = pow.variance_exact().unwrap();
            assert_eq!(
                vm * BigInt::from(d1.clone()),
                BigInt::from(m) * &v1 * BigInt::from(dm)
            );
        }
    }

    #[test]
    fn float_mass_stays_normalized() {
        let term = block_term(2, VoronoiType::Type2, DEFAULT_BUDGET).unwrap();
        let pow = DyadicDist::from_block(&term, Mode::Float)
            .power(64)
            .unwrap();
        assert!((pow.total() - 1.0).abs() < (-40f64).exp2());
    }

    #[test]
    fn float_matches_exact_mid_grid() {
        let term = block_term(2, VoronoiType::Type1, DEFAULT_BUDGET).unwrap();
        let f = DyadicDist::from_block(&term, Mode::Float).power(6).unwrap();
        let e = DyadicDist::from_block(&term, Mode::Exact).power(6).unwrap();
        for t in [0, 40, 101, 250] {
            let (pf, pe) = (f.tail(t).to_f64(), e.tail(t).to_f64());
            assert!(((pf - pe) / pe).abs() < (-30f64).exp2(), "t={t}");
        }
    }

    #[test]
    fn tail_is_strict_and_monotone() {
        let term = block_term(1, VoronoiType::Type1, DEFAULT_BUDGET).unwrap();
        let dist = DyadicDist::from_block(&term, Mode::Exact);
        assert_eq!(dist.tail(dist.max_value()).log2(), f64::NEG_INFINITY);
        assert!(dist.tail(dist.max_value() - 1).to_f64() > 0.0);
        assert!((dist.tail(dist.offset - 1).to_f64() - 1.0).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for t in dist.offset..=dist.max_value() {
            let p = dist.tail(t).to_f64();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn bound_decreases_with_reconciliation_bits() {
        let mut analyzer = Analyzer::new(Mode::Float);
        let mut prev = 0.0;
        for p in 2..=5 {
            let report = analyzer
                .pe_bound(&Params::new(2048, 2, p).unwrap())
                .unwrap();
            assert!(report.log2_pe < prev);
            prev = report.log2_pe;
        }
    }

    #[test]
    fn kronecker_round_trip() {
        let coeffs: Vec<BigUint> = [0u64, 1, 12345, u64::MAX, 7]
            .iter()
            .map(|&x| BigUint::from(x))
            .collect();
        for width in [64u64, 65, 77, 130] {
            let packed = kronecker_pack(&coeffs, width);
            assert_eq!(kronecker_unpack(&packed, width, coeffs.len()), coeffs);
        }
    }
}
