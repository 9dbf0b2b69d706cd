//! Parameter sets and the constants derived from them.
//!
//! A parameter set fixes the modulus `q`, the binomial noise parameter `k` and
//! the reconciliation depth `p`. The ring degree (256), the module rank (3) and
//! the block structure (32 blocks of dimension 8) are fixed for every set.
//!
//! The nested lattices used by reconciliation are, per block of 8 coordinates:
//!
//! * quantization lattice `Λ1 = (q / 2^p) E8`
//! * coding lattice `Λ2 = (q / 2) E8`
//! * shaping lattice `Λ3 = q Z^8`
//!
//! Every set accepted by [`Params::new`] satisfies `2^(p+1) | q`, which keeps
//! all lattice points and hint lifts on the integer grid.

use std::fmt;

use crate::error::{Error, Result};

/// Ring degree `n`.
pub const N: usize = 256;
/// Module rank `d`.
pub const D: usize = 3;
/// Block dimension.
pub const BLOCK_DIM: usize = 8;
/// Number of blocks a polynomial splits into.
pub const BLOCKS: usize = N / BLOCK_DIM;
/// Largest supported modulus. Coefficients are stored as `u16`.
pub const MAX_Q: u32 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    q: u32,
    log_q: u32,
    k: u32,
    p: u32,
}

impl Params {
    /// Validated constructor.
    pub fn new(q: u32, k: u32, p: u32) -> Result<Self> {
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "q = {q} must be a power of two"
            )));
        }
        if q > MAX_Q {
            return Err(Error::InvalidParams(format!(
                "q = {q} exceeds the supported maximum {MAX_Q}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if p < 2 {
            return Err(Error::InvalidParams(format!("p = {p} must be at least 2")));
        }
        let log_q = q.trailing_zeros();
        if p + 1 > log_q {
            return Err(Error::InvalidParams(format!(
                "2^(p+1) = 2^{} must divide q = {q}",
                p + 1
            )));
        }
        Ok(Self { q, log_q, k, p })
    }

    /// Looks up a named preset such as `e8kem-2048-p5`.
    pub fn preset(name: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .find(|preset| preset.name() == name)
            .map(|preset| preset.params())
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn log_q(&self) -> u32 {
        self.log_q
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> usize {
        N
    }

    pub fn d(&self) -> usize {
        D
    }

    /// Coefficient mask, `q - 1`.
    pub fn mask(&self) -> u32 {
        self.q - 1
    }

    /// Scale of the quantization lattice, `q / 2^p`.
    pub fn s1(&self) -> i64 {
        i64::from(self.q >> self.p)
    }

    /// Scale of the coding lattice, `q / 2`.
    pub fn s2(&self) -> i64 {
        i64::from(self.q >> 1)
    }

    /// Radius factor of the reliability condition, `(q/2)(1 - 2^-(p-1))`.
    pub fn c(&self) -> i64 {
        self.s2() - (self.s2() >> (self.p - 1))
    }

    /// Index of `Λ2` in `Λ1` per coordinate, `2^(p-1)`.
    pub fn hint_modulus(&self) -> u32 {
        1 << (self.p - 1)
    }

    /// Key bits per dimension.
    pub fn key_rate(&self) -> u32 {
        1
    }

    /// Reconciliation bits per dimension.
    pub fn rec_rate(&self) -> u32 {
        self.p - 1
    }

    pub fn key_bits(&self) -> usize {
        N * self.key_rate() as usize
    }

    pub fn hint_bits(&self) -> usize {
        N * self.rec_rate() as usize
    }

    /// Standard deviation of the centered binomial distribution, `sqrt(k/2)`.
    pub fn sigma(&self) -> f64 {
        (f64::from(self.k) / 2.0).sqrt()
    }

    /// Name of the matching preset, if there is one.
    pub fn preset_name(&self) -> Option<String> {
        Preset::ALL
            .iter()
            .find(|preset| preset.params() == *self)
            .map(|preset| preset.name())
    }
}

impl Default for Params {
    fn default() -> Self {
        Preset::DEFAULT.params()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={} k={} p={}", self.q, self.k, self.p)
    }
}

/// Every supported (q, k) row crossed with `p` in 2..=5.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Preset {
    pub q: u32,
    pub k: u32,
    pub p: u32,
}

impl Preset {
    pub const DEFAULT: Preset = Preset {
        q: 2048,
        k: 2,
        p: 5,
    };

    /// Supported (q, k) rows.
    pub const ROWS: [(u32, u32); 3] = [(2048, 2), (4096, 4), (8192, 4)];

    pub const ALL: [Preset; 12] = {
        let mut all = [Preset::DEFAULT; 12];
        let mut i = 0;
        while i < 12 {
            let (q, k) = Self::ROWS[i / 4];
            all[i] = Preset {
                q,
                k,
                p: 2 + (i % 4) as u32,
            };
            i += 1;
        }
        all
    };

    pub fn name(&self) -> String {
        format!("e8kem-{}-p{}", self.q, self.p)
    }

    pub fn params(&self) -> Params {
        Params::new(self.q, self.k, self.p).expect("presets satisfy the divisibility rule")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_preset_constants() {
        let params = Params::new(2048, 2, 5).unwrap();
        assert_eq!(params.c(), 960);
        assert_eq!(params.s1(), 64);
        assert_eq!(params.s2(), 1024);
        assert_eq!(params.rec_rate(), 4);
        assert_eq!(params, Params::default());
        assert_eq!(params.preset_name().as_deref(), Some("e8kem-2048-p5"));
    }

    #[test]
    fn smallest_depth() {
        let params = Params::new(2048, 2, 2).unwrap();
        assert_eq!(params.c(), 512);
        assert_eq!(params.rec_rate(), 1);
        assert_eq!(params.hint_bits(), 256);
    }

    #[test]
    fn divisibility_is_enforced() {
        let err = Params::new(2048, 2, 12).unwrap_err();
        assert!(err.to_string().contains("must divide"), "{err}");
        assert!(Params::new(2048, 2, 10).is_ok());
        assert!(Params::new(2048, 2, 11).is_err());
    }

    #[test]
    fn rejects_bad_modulus() {
        let err = Params::new(3329, 2, 3).unwrap_err();
        assert!(err.to_string().contains("power of two"), "{err}");
        assert!(Params::new(1 << 17, 2, 3).is_err());
        assert!(Params::new(2048, 0, 3).is_err());
        assert!(Params::new(2048, 2, 1).is_err());
    }

    #[test]
    fn c_matches_formula_for_every_preset() {
        for preset in Preset::ALL {
            let params = preset.params();
            let q = f64::from(params.q());
            let exact = q / 2.0 * (1.0 - 1.0 / f64::from(1u32 << (params.p() - 1)));
            assert_eq!(params.c() as f64, exact);
            assert_eq!(params.key_bits(), 256);
            assert_eq!(Params::preset(&preset.name()).unwrap(), params);
        }
        assert!(Params::preset("e8kem-1024-p5").is_err());
    }
}
