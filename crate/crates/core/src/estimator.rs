//! Core-SVP cost of the primal and dual BKZ attacks on an LWE instance.
//!
//! BKZ with block size `b` reaches root Hermite factor
//! `δ₀(b) = ((πb)^{1/b} · b/(2πe))^{1/(2(b-1))}` and costs `c·b` bits for one
//! SVP call, with `c = log2 √(3/2)` (classical sieve), `log2 √(13/9)`
//! (quantum) or `log2 √(4/3)` (best plausible).
//!
//! With `m` samples of an instance of dimension `n`, let `d = n + m`.
//!
//! * Primal: the attack succeeds when `σ√b < δ₀^{2b-d-1} · q^{m/d}`; its cost
//!   is `c·b` for the smallest such `b`.
//! * Dual: a BKZ-reduced dual vector has length `ℓ = δ₀^d · q^{n/d}`, giving
//!   distinguishing advantage `ε = exp(-2π²τ²)` with `τ = ℓσ/q`. The cost is
//!   `c·b + max(0, -2·log2 ε - 0.2075·b)`, where the last term pays for the
//!   repetitions not already covered by the short vectors a sieve returns.
//!
//! The search walks `b` upward from 50 and `m` over `max(1, b-n) ..= n`,
//! keeping a candidate only if it is strictly cheaper, and stops once `c·b`
//! alone exceeds the best cost.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::params::{Params, D, N};

pub const MIN_BLOCK: u32 = 50;

/// SVP cost exponent per unit of block size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Classical,
    Quantum,
    Plausible,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Classical, Regime::Quantum, Regime::Plausible];

    pub fn exponent(self) -> f64 {
        match self {
            Regime::Classical => (1.5f64).sqrt().log2(),
            Regime::Quantum => (13.0f64 / 9.0).sqrt().log2(),
            Regime::Plausible => (4.0f64 / 3.0).sqrt().log2(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attack {
    Primal,
    Dual,
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attack::Primal => "primal",
            Attack::Dual => "dual",
        })
    }
}

/// An LWE instance with dimension `n`, modulus `q` and noise deviation `σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LweInstance {
    pub q: u32,
    pub n: u32,
    pub sigma: f64,
}

impl LweInstance {
    /// Module-LWE of rank `d` over a degree-`n` ring with `ψ_k` noise.
    pub fn module(q: u32, k: u32) -> Self {
        Self {
            q,
            n: (N * D) as u32,
            sigma: (f64::from(k) / 2.0).sqrt(),
        }
    }

    pub fn from_params(params: &Params) -> Self {
        Self::module(params.q(), params.k())
    }
}

/// The cheapest attack found, with costs in bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackCost {
    pub attack: Attack,
    pub m: u32,
    pub b: u32,
    pub classical: f64,
    pub quantum: f64,
    pub plausible: f64,
}

impl AttackCost {
    /// The three costs rounded to whole bits.
    pub fn rounded(&self) -> [u32; 3] {
        [self.classical, self.quantum, self.plausible].map(|c| c.round() as u32)
    }
}

impl fmt::Display for AttackCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c, q, p] = self.rounded();
        write!(
            f,
            "{} m={} b={} classical={c} quantum={q} plausible={p}",
            self.attack, self.m, self.b
        )
    }
}

pub fn delta0(b: u32) -> Result<f64> {
    if b < MIN_BLOCK {
        return Err(Error::BlockSizeTooSmall(b));
    }
    let b = f64::from(b);
    Ok(((PI * b).powf(1.0 / b) * b / (2.0 * PI * E)).powf(1.0 / (2.0 * (b - 1.0))))
}

pub fn primal_succeeds(inst: &LweInstance, m: u32, b: u32) -> Result<bool> {
    let d = f64::from(inst.n + m);
    let delta = delta0(b)?;
    let bf = f64::from(b);
    let lhs = inst.sigma * bf.sqrt();
    let rhs = delta.powf(2.0 * bf - d - 1.0) * f64::from(inst.q).powf(f64::from(m) / d);
    Ok(lhs < rhs)
}

/// Dual attack cost in bits at one `(m, b)` for an SVP exponent.
pub fn dual_cost_at(inst: &LweInstance, m: u32, b: u32, exponent: f64) -> Result<f64> {
    let d = f64::from(inst.n + m);
    let delta = delta0(b)?;
    let q = f64::from(inst.q);
    let len = delta.powf(d) * q.powf(f64::from(inst.n) / d);
    let tau = len * inst.sigma / q;
    let log2_eps = -2.0 * PI * PI * tau * tau / std::f64::consts::LN_2;
    let bf = f64::from(b);
    let repeat = (-2.0 * log2_eps - Regime::Plausible.exponent() * bf).max(0.0);
    Ok(exponent * bf + repeat)
}

fn block_range(inst: &LweInstance) -> std::ops::RangeInclusive<u32> {
    MIN_BLOCK..=2 * inst.n + 1
}

fn sample_range(inst: &LweInstance, b: u32) -> std::ops::RangeInclusive<u32> {
    b.saturating_sub(inst.n).max(1)..=inst.n
}

pub fn primal_cost(inst: &LweInstance) -> Result<AttackCost> {
    for b in block_range(inst) {
        for m in sample_range(inst, b) {
            if primal_succeeds(inst, m, b)? {
                let bf = f64::from(b);
                return Ok(AttackCost {
                    attack: Attack::Primal,
                    m,
                    b,
                    classical: Regime::Classical.exponent() * bf,
                    quantum: Regime::Quantum.exponent() * bf,
                    plausible: Regime::Plausible.exponent() * bf,
                });
            }
        }
    }
    Err(Error::NoFeasibleAttack)
}

/// Cheapest dual attack for one exponent: `(cost, m, b)`.
pub fn optimize_dual(inst: &LweInstance, exponent: f64) -> Result<(f64, u32, u32)> {
    let mut best: Option<(f64, u32, u32)> = None;
    for b in block_range(inst) {
        if best.is_some_and(|(cost, _, _)| exponent * f64::from(b) > cost) {
            break;
        }
        for m in sample_range(inst, b) {
            let cost = dual_cost_at(inst, m, b, exponent)?;
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, m, b));
            }
        }
    }
    best.ok_or(Error::NoFeasibleAttack)
}

/// Each cost is minimized separately; `m` and `b` come from the quantum search.
pub fn dual_cost(inst: &LweInstance) -> Result<AttackCost> {
    let (classical, _, _) = optimize_dual(inst, Regime::Classical.exponent())?;
    let (quantum, m, b) = optimize_dual(inst, Regime::Quantum.exponent())?;
    let (plausible, _, _) = optimize_dual(inst, Regime::Plausible.exponent())?;
    Ok(AttackCost {
        attack: Attack::Dual,
        m,
        b,
        classical,
        quantum,
        plausible,
    })
}

/// A named scheme to compare against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheme {
    pub name: &'static str,
    pub q: u32,
    pub k: u32,
}

impl Scheme {
    pub fn instance(&self) -> LweInstance {
        LweInstance::module(self.q, self.k)
    }
}

/// Rank-3 module schemes over degree-256 rings.
pub const COMPARISON: [Scheme; 5] = [
    Scheme {
        name: "Saber",
        q: 8192,
        k: 8,
    },
    Scheme {
        name: "Kyber768 round 1",
        q: 7681,
        k: 4,
    },
    Scheme {
        name: "e8kem q=4096",
        q: 4096,
        k: 4,
    },
    Scheme {
        name: "Kyber768 round 3",
        q: 3329,
        k: 2,
    },
    Scheme {
        name: "e8kem q=2048",
        q: 2048,
        k: 2,
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta0_matches_high_precision_value() {
        // ((250π)^(1/250) · 250/(2πe))^(1/498), evaluated to 30 digits with mpmath.
        let want = 1.005_457_102_327_393_8;
        assert!((delta0(250).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn delta0_decreases_towards_one() {
        let mut prev = delta0(100).unwrap();
        for b in (110..=1000).step_by(10) {
            let d = delta0(b).unwrap();
            assert!(d < prev && d > 1.0);
            prev = d;
        }
        assert!(delta0(2000).unwrap() < delta0(500).unwrap());
    }

    #[test]
    fn small_blocks_are_rejected() {
        assert_eq!(delta0(49).unwrap_err(), Error::BlockSizeTooSmall(49));
    }

    #[test]
    fn exponents() {
        assert!((Regime::Classical.exponent() - 0.292_481_250_360_578_1).abs() < 1e-15);
        assert!((Regime::Quantum.exponent() - 0.265_257_358_349_389_9).abs() < 1e-15);
        assert!((Regime::Plausible.exponent() - 0.207_518_749_639_421_9).abs() < 1e-15);
    }

    #[test]
    fn primal_threshold_is_sharp() {
        let inst = LweInstance::module(2048, 2);
        let cost = primal_cost(&inst).unwrap();
        assert!(primal_succeeds(&inst, cost.m, cost.b).unwrap());
        for m in sample_range(&inst, cost.b - 1) {
            assert!(!primal_succeeds(&inst, m, cost.b - 1).unwrap());
        }
        for m in sample_range(&inst, cost.b).take_while(|&m| m < cost.m) {
            assert!(!primal_succeeds(&inst, m, cost.b).unwrap());
        }
    }

    #[test]
    fn dual_optimum_beats_a_coarse_grid() {
        let inst = LweInstance::module(3329, 2);
        let exponent = Regime::Quantum.exponent();
        let (best, _, _) = optimize_dual(&inst, exponent).unwrap();
        for b in (100..=1200).step_by(25) {
            for m in (50..=inst.n).step_by(25) {
                assert!(dual_cost_at(&inst, m, b, exponent).unwrap() >= best);
            }
        }
    }

    #[test]
    fn larger_noise_costs_more() {
        let low = primal_cost(&LweInstance::module(4096, 2)).unwrap();
        let high = primal_cost(&LweInstance::module(4096, 4)).unwrap();
        assert!(high.b > low.b);
    }
}
